use std::f64::consts::PI;

use metro::jaynescummings::{self, JCConfig};
use metro::lab::{self, ModelKind, Quantity, SweepSpec};
use metro::oscillator::{self, OscillatorConfig};
use metro::qbounds;

fn unit(g: f64, t: f64) -> OscillatorConfig {
    OscillatorConfig::new(1.0, 1.0, g, 1.0, t).unwrap()
}

#[test]
fn oscillator_qfi_matches_closed_form() {
    for &g in &[0.0, 0.5] {
        for &t in &[0.1, 1.0, PI, 5.0] {
            let c = unit(g, t);
            let j = oscillator::closed_form_qfi(&c);
            let fock = oscillator::numeric_qfi(&c).unwrap();
            let grid = qbounds::qfi_pure(&oscillator::grid_state_family(&c), g).unwrap();
            assert!((fock - j).abs() < 1e-5 * j, "g = {g}, t = {t}: {fock} vs {j}");
            assert!((grid - j).abs() < 1e-5 * j, "g = {g}, t = {t}: grid {grid} vs {j}");
        }
    }
}

#[test]
fn energy_measurement_information_is_time_independent() {
    let values: Vec<f64> = (0..25)
        .map(|i| oscillator::numeric_energy_fi(&unit(0.0, 0.5 * i as f64)).unwrap().total)
        .collect();
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    assert!(hi - lo < 1e-8, "spread {}", hi - lo);
}

#[test]
fn energy_measurement_beats_qfi_periodically() {
    for &t in &[0.1, 0.2, 0.5, 2.0 * PI + 0.3] {
        let c = unit(0.0, t);
        assert!(8.0 * (t / 2.0).sin().powi(2) < 2.0);
        let f = oscillator::numeric_energy_fi(&c).unwrap().total;
        assert!(f > oscillator::numeric_qfi(&c).unwrap());
    }
}

#[test]
fn corrected_bound_holds_along_the_sweep() {
    for i in 0..60 {
        let t = 4.0 * PI * i as f64 / 59.0;
        for &g in &[0.0, 0.3] {
            let c = unit(g, t);
            let f = oscillator::numeric_energy_fi(&c).unwrap().total;
            let j = oscillator::numeric_qfi(&c).unwrap();
            let k = oscillator::numeric_kx(&c).unwrap();
            assert!(f <= qbounds::projective_bound(j, k).unwrap() + 1e-6, "t = {t}");
            // the published 𝒦_X gives the same ordering
            let closed = qbounds::projective_bound(oscillator::closed_form_qfi(&c), oscillator::closed_form_kx(&c)).unwrap();
            assert!(oscillator::closed_form_energy_fi(&c) <= closed);
        }
    }
}

#[test]
fn jc_povm_fi_over_a_grid() {
    for i in 1..=5 {
        for k in 1..=5 {
            let c1 = 0.16 * i as f64;
            let theta = 0.28 * k as f64;
            let c = JCConfig::with_real_c1(1.0, theta, 0.5, 1.0, c1).unwrap();
            let r = jaynescummings::numeric_fi(&c).unwrap();
            let f = jaynescummings::closed_form_fi(&c);
            assert!((r.total - f).abs() < 1e-7 * f, "c1 = {c1}, ΩT = {theta}");
        }
    }
}

#[test]
fn jc_information_without_photon_superposition_comes_from_the_povm() {
    let c = JCConfig::with_real_c1(1.4, 0.8, 2.0, 1.1, 1.0).unwrap();
    let r = jaynescummings::numeric_fi(&c).unwrap();
    assert!(r.term_state.abs() < 1e-15);
    assert!((r.term_povm + r.term_cross - r.total).abs() < 1e-15);
    assert!(r.total > jaynescummings::numeric_qfi(&c).unwrap() + 1e-12);
}

#[test]
fn jc_sweep_over_interaction_time() {
    let spec = SweepSpec {
        model: ModelKind::JaynesCummings,
        variable: "T".into(),
        lo: 0.1,
        hi: 1.4,
        steps: 14,
        fixed: [("c1".to_string(), 0.6), ("t".to_string(), 1.0)].into_iter().collect(),
        outputs: vec![Quantity::F, Quantity::J, Quantity::BoundJIm],
        evaluation: lab::Evaluation::Numeric,
    };
    let table = lab::sweep(&spec).unwrap();
    let j = table.column("J").unwrap();
    let b = table.column("boundJ+Im").unwrap();
    assert!(j.iter().zip(&b).all(|(a, b)| a == b));
    assert!(j.iter().all(|v| (v - 4.0 * 0.36 * 0.64).abs() < 1e-8));
}

#[test]
fn pure_and_mixed_routes_agree() {
    for &(c1, t) in &[(0.6, 0.5), (0.3, 2.0), (0.9, 1.3)] {
        let c = JCConfig::with_real_c1(1.1, 0.7, t, 1.0, c1).unwrap();
        let pure = qbounds::qfi_pure(&jaynescummings::state_family(&c), c.omega).unwrap();
        let mixed = qbounds::qfi(&jaynescummings::density_family(&c), c.omega).unwrap();
        assert!((pure - mixed).abs() < 1e-7 * pure.max(1.0), "{pure} vs {mixed}");
    }
    let c = unit(0.2, 1.7);
    let pure = oscillator::numeric_qfi(&c).unwrap();
    let mixed = qbounds::qfi(&oscillator::density_family(&c), 0.2).unwrap();
    assert!((pure - mixed).abs() < 1e-7 * pure);
}
