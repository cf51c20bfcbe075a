//! Acceptance criteria, one line of output per criterion.
//!
//! Criterion 3 is known not to hold: the tangent-vector sum for the evolved
//! coherent state is m/ω³[2 + 4(ξ_δ − ξ_g)² sin²(ωt)], which meets the
//! t-independent target only when ξ_δ = ξ_g. It is evaluated as stated and
//! reported as FAIL; the run fails if it ever starts passing, or if any other
//! criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use metro::fisher::{classical_fi, generalized_fi, ClassicalModel};
use metro::jaynescummings::{self, JCConfig};
use metro::lab::{self, EstimatorGrid, LabModel, ModelKind, MonteCarloConfig, Quantity, SweepSpec, Table};
use metro::numcore::{
    DensityOperator, HermitianOperator, OutcomeSpace, ParametricFamily, QuadratureRule, SampleMeasure,
};
use metro::oscillator::{self, OscillatorConfig};
use metro::qbounds::{self, measure_bound, DensityFamily, PovmFamily};
use metro::C64;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KNOWN_DEVIATIONS: [u32; 1] = [3];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn energy_fi() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (m, w, dx, g) in [(1.0, 1.0, 1.0, 0.0), (2.0, 1.0, 0.5, 0.3)] {
        let c = OscillatorConfig::new(m, w, g, dx, 0.0).unwrap();
        let mut model = oscillator::energy_outcome_model(&c).unwrap();
        model.p = model.p.without_derivative();
        let f = classical_fi(&model, g).unwrap();
        worst = worst.max(rel(f, 2.0 * m / w.powi(3)));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst < 1e-6 && secs < 1.0, format!("max rel err {worst:.2e}, {secs:.3} s"))
}

fn oscillator_qfi() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let t = 4.0 * PI * i as f64 / 49.0;
        let c = OscillatorConfig::new(1.0, 1.0, 0.0, 1.0, t).unwrap();
        let j = oscillator::numeric_qfi(&c).unwrap();
        let exact = 8.0 * (t / 2.0).sin().powi(2);
        // points where J vanishes are compared absolutely
        let err = if exact > 1e-12 { rel(j, exact) } else { j.abs() };
        worst = worst.max(err);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst < 1e-5 && secs < 5.0, format!("max rel err {worst:.2e} over 50 t-points, {secs:.3} s"))
}

fn geometric_information() -> Outcome {
    let settings = [(0.0, 1.0, "g=0, dx=1"), (0.5, 1.0, "g=0.5, dx=1"), (0.5, 0.5, "xi_delta = xi_g")];
    let times = [0.0, 1.0, PI / 2.0, PI, 2.0];
    let mut parts = Vec::new();
    let mut all = true;
    for (g, dx, label) in settings {
        let mut worst: f64 = 0.0;
        for &t in &times {
            let c = OscillatorConfig::new(1.0, 1.0, g, dx, t).unwrap();
            let k = oscillator::numeric_kx(&c).unwrap();
            worst = worst.max(rel(k, oscillator::closed_form_kx(&c)));
        }
        all &= worst < 1e-5;
        parts.push(format!("{label}: max rel err {worst:.2e}"));
    }
    outcome(all, parts.join("; "))
}

fn two_periods() -> Outcome {
    let spec = SweepSpec {
        model: ModelKind::Oscillator,
        variable: "t".into(),
        lo: 0.0,
        hi: 4.0 * PI,
        steps: 401,
        fixed: BTreeMap::new(),
        outputs: vec![Quantity::J, Quantity::FH, Quantity::Bound13],
        evaluation: Default::default(),
    };
    let csv = lab::sweep(&spec).unwrap().to_csv();
    let table = Table::from_csv(&csv).unwrap();
    let (t, j, fh, b) = (
        table.column("t").unwrap(),
        table.column("J").unwrap(),
        table.column("F_H").unwrap(),
        table.column("bound13").unwrap(),
    );
    // the sweep reaches into the k = 2 window near 4π as well
    let inside = |x: f64| (0..=2).any(|k| (x - 2.0 * PI * k as f64).abs() < PI / 3.0);
    let mut mismatches = 0;
    let mut above = 0;
    for i in 0..t.len() {
        if (fh[i] > j[i]) != inside(t[i]) {
            mismatches += 1;
        }
        if fh[i] > b[i] {
            above += 1;
        }
    }
    let mut period: f64 = 0.0;
    for i in 0..=200 {
        period = period.max((j[i] - j[i + 200]).abs());
    }
    outcome(
        mismatches == 0 && above == 0 && period <= 1e-12,
        format!("(a) {mismatches} window mismatches; (b) {above} points above bound; (c) max |J(t) - J(t+2pi)| = {period:.1e}"),
    )
}

fn jaynes_cummings() -> Outcome {
    let mut worst: f64 = 0.0;
    for a in [0.1, 0.3, 0.5, 0.7, 0.9] {
        for th in [0.3, 0.6, 0.9, 1.2, 1.5] {
            let c = JCConfig::with_real_c1(1.0, th, 0.7, 1.0, a).unwrap();
            let f = jaynescummings::numeric_fi(&c).unwrap().total;
            worst = worst.max(rel(f, jaynescummings::closed_form_fi(&c)));
        }
    }
    let c = JCConfig::with_real_c1(1.0, 1.0, 0.7, 1.0, 1.0).unwrap();
    let f = jaynescummings::numeric_fi(&c).unwrap().total;
    let j = jaynescummings::numeric_qfi(&c).unwrap();
    let exhibit = (f - 1.0).abs() < 1e-7 && j.abs() < 1e-12 && f > j;
    outcome(worst < 1e-7 && exhibit, format!("max rel err {worst:.2e} on 5x5 grid; c0=0: F = {f:.10}, J = {j:.1e}"))
}

fn circle_povm() -> (OutcomeSpace, Vec<HermitianOperator>, SampleMeasure) {
    let space = OutcomeSpace::continuous(0.0, 2.0 * PI, 2001, QuadratureRule::Trapezoid).unwrap();
    let elems = space
        .nodes()
        .iter()
        .map(|_| HermitianOperator::new("qubit", DMatrix::<C64>::identity(2, 2).map(|z| z / (2.0 * PI))).unwrap())
        .collect();
    (space, elems, SampleMeasure::parametric(|l, x| 1.0 + l * x.sin()))
}

fn bloch(x: f64, z: f64) -> DMatrix<C64> {
    let c = |v: f64| C64::new(v, 0.0);
    DMatrix::from_row_slice(2, 2, &[c(0.5 + 0.5 * z), c(0.5 * x), c(0.5 * x), c(0.5 - 0.5 * z)])
}

fn gauss(x: f64, mu: f64) -> f64 {
    (-(x - mu).powi(2) / 2.0).exp() / (2.0 * PI).sqrt()
}

fn measure_information() -> Outcome {
    let (space, elems, m) = circle_povm();
    let rho = DensityFamily::new(|l: f64| bloch(0.3 * l.sin(), 0.5));
    let mut min_im = f64::INFINITY;
    let mut max_cross: f64 = 0.0;
    let mut bound_ok = true;
    for l in [-0.5, 0.0, 0.3, 0.5] {
        let r = qbounds::measure_fi_quantum(&rho, &space, &elems, &m, l).unwrap();
        min_im = min_im.min(r.term_measure);
        max_cross = max_cross.max(r.term_cross.abs());
        let j = qbounds::qfi(&rho, l).unwrap();
        bound_ok &= r.total <= measure_bound(j, r.term_measure).unwrap() + 1e-9;
    }
    let at0 = qbounds::measure_fi_quantum(&rho, &space, &elems, &m, 0.0).unwrap();
    let half = (at0.term_measure - 0.5).abs();

    // classical model with m_λ(x) = m1(λ) m2(x)
    let line = OutcomeSpace::continuous(-12.0, 12.0, 4001, QuadratureRule::Trapezoid).unwrap();
    let nodes = line.nodes().to_vec();
    let m2 = |x: f64| 1.0 + x * x / 10.0;
    let p = ParametricFamily::new(move |l: f64| nodes.iter().map(|&x| (-l).exp() * gauss(x, l) / m2(x)).collect::<Vec<_>>());
    let cm = SampleMeasure::parametric(move |l, x| l.exp() * m2(x));
    let r = generalized_fi(&ClassicalModel::new(line, p, cm), 0.25).unwrap();
    min_im = min_im.min(r.term_measure);
    let factorized = (r.total - (r.term_state - 1.0)).abs();

    let pass = min_im >= 0.0 && half < 1e-8 && max_cross < 1e-8 && factorized < 1e-8 && bound_ok;
    outcome(
        pass,
        format!(
            "(a) min Im {min_im:.3e}; (b) |Im - 1/2| {half:.1e}, max |cross| {max_cross:.1e}; (c) identity err {factorized:.1e}; (d) F <= J + Im: {bound_ok}"
        ),
    )
}

fn hermite_poly(n: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, 2.0 * x);
    if n == 0 {
        return a;
    }
    for k in 1..n {
        let next = 2.0 * x * b - 2.0 * k as f64 * a;
        a = b;
        b = next;
    }
    b
}

fn hermite_recurrence() -> Outcome {
    let grid = OutcomeSpace::continuous(-12.0, 12.0, 4001, QuadratureRule::Trapezoid).unwrap();
    let norm = |n: usize| oscillator::hermite_integral(0, n, n).unwrap();
    let mut worst: f64 = 0.0;
    for p in 0..=4 {
        for n in 0..=8 {
            for m in 0..=8 {
                let direct = grid
                    .integrate(|x| x.powi(p as i32) * hermite_poly(n, x) * hermite_poly(m, x) * (-x * x).exp())
                    .unwrap()
                    .value;
                let rec = oscillator::hermite_integral(p, n, m).unwrap();
                // entries that vanish by parity or degree are measured against the natural scale
                let scale = direct.abs().max((norm(n) * norm(m)).sqrt());
                worst = worst.max((rec - direct).abs() / scale);
            }
        }
    }
    let mut pattern_ok = true;
    let mut closed: f64 = 0.0;
    for p in 0..=2 {
        for n in 0..=20 {
            for m in 0..=20 {
                let cf = oscillator::hermite_integral_closed_form(p, n, m).unwrap();
                let rec = oscillator::hermite_integral(p, n, m).unwrap();
                pattern_ok &= (cf == 0.0) == (rec == 0.0);
                if cf != 0.0 {
                    closed = closed.max(rel(rec, cf));
                }
            }
        }
    }
    outcome(
        worst < 1e-8 && pattern_ok && closed < 1e-12,
        format!("quadrature max rel err {worst:.2e}; Kronecker pattern matches: {pattern_ok}; closed forms max rel err {closed:.1e}"),
    )
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let cfg = MonteCarloConfig {
        model: LabModel::JaynesCummings(JCConfig::with_real_c1(1.0, 1.0, 0.0, 1.0, 1.0).unwrap()),
        true_lambda: 1.0,
        shots: 10_000,
        trials: 500,
        seed: 20_240_601,
        grid: EstimatorGrid::new(0.9, 1.1, 2001).unwrap(),
    };
    let r = lab::crb_experiment(&cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = (0.85..=1.2).contains(&r.ratio) && r.ratio >= 1.0 - 3.0 * r.bootstrap_sigma && secs < 60.0;
    outcome(
        pass,
        format!(
            "Var*nF = {:.4} (95% CI {:.4}..{:.4}, bootstrap sigma {:.4}), {secs:.2} s",
            r.ratio, r.ci95[0], r.ci95[1], r.bootstrap_sigma
        ),
    )
}

// Π_k = S^{−1/2} A_k S^{−1/2} with S = Σ A_k and A_k = B_k B_k†
fn random_povm(rng: &mut ChaCha8Rng, dim: usize, outcomes: usize) -> Vec<DMatrix<C64>> {
    let mut gen = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let raw: Vec<DMatrix<C64>> = (0..outcomes)
        .map(|_| {
            let b = DMatrix::from_fn(dim, dim, |_, _| gen());
            &b * b.adjoint()
        })
        .collect();
    let mut s = DMatrix::<C64>::zeros(dim, dim);
    for a in &raw {
        s += a;
    }
    let (vals, vecs) = metro::numcore::hermitian_eigen(&s);
    let inv_sqrt = &vecs
        * DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(dim, vals.iter().map(|v| C64::new(v.powf(-0.5), 0.0))))
        * vecs.adjoint();
    raw.iter()
        .map(|a| {
            let p = &inv_sqrt * a * &inv_sqrt;
            (&p + p.adjoint()).map(|z| z * 0.5)
        })
        .collect()
}

fn sld_suite() -> Outcome {
    let tanh = DensityFamily::new(|l: f64| bloch(0.0, l.tanh()));
    let rotating = DensityFamily::new(|l: f64| bloch(0.6 * l.sin(), 0.6 * l.cos()));
    let jc = jaynescummings::density_family(&JCConfig::with_real_c1(1.0, 1.0, 1.3, 1.0, 0.6).unwrap());
    let osc = oscillator::density_family(&OscillatorConfig::new(1.0, 1.0, 0.0, 1.0, 1.0).unwrap());
    let qutrit = DensityFamily::new(|l: f64| {
        let c = |v: f64| C64::new(v, 0.0);
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.5), c(0.3), c(0.2)]));
        m[(0, 1)] = C64::new(0.1 * l.cos(), 0.1 * l.sin());
        m[(1, 0)] = m[(0, 1)].conj();
        m[(1, 2)] = c(0.05 * l);
        m[(2, 1)] = c(0.05 * l);
        m
    });
    let mut residual: f64 = 0.0;
    for (fam, l) in [(&tanh, 0.4), (&rotating, 0.9), (&jc, 1.0), (&osc, 0.0), (&qutrit, 0.3)] {
        let sld = qbounds::sld(fam, l).unwrap();
        residual = residual.max(qbounds::sld_residual(fam, &sld, l).unwrap());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0;
    let mut cases = 0;
    for (fam, l, dim) in [(&tanh, 0.4, 2), (&rotating, 0.9, 2), (&qutrit, 0.3, 3)] {
        let j = qbounds::qfi(fam, l).unwrap();
        for outcomes in [2, 3, 4, 6] {
            for _ in 0..5 {
                let elems: Vec<HermitianOperator> = random_povm(&mut rng, dim, outcomes)
                    .into_iter()
                    .map(|m| HermitianOperator::new("battery", m).unwrap())
                    .collect();
                let povm = PovmFamily::fixed(OutcomeSpace::counting(outcomes).unwrap(), elems, SampleMeasure::uniform());
                let f = qbounds::povm_fi(fam, &povm, l).unwrap().total;
                cases += 1;
                if f > j + 1e-7 {
                    violations += 1;
                }
            }
        }
    }
    // a pure-state check keeps the density operator constructor honest
    assert!(DensityOperator::new("q", tanh.value(0.4)).is_ok());
    outcome(
        residual < 1e-9 && violations == 0,
        format!("max SLD residual {residual:.1e}; {violations} of {cases} fixed POVMs exceed J"),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "oscillator energy-measurement FI", energy_fi),
        (2, "oscillator QFI", oscillator_qfi),
        (3, "eigenbasis information K_X", geometric_information),
        (4, "J, F_H and bound over two periods", two_periods),
        (5, "Jaynes-Cummings FI", jaynes_cummings),
        (6, "measure-generalized FI", measure_information),
        (7, "Hermite recurrence", hermite_recurrence),
        (8, "Monte Carlo CRB saturation", monte_carlo),
        (9, "SLD/QFI suite", sld_suite),
    ];
    let mut ok = true;
    for (id, name, run) in criteria {
        let r = run();
        let known = KNOWN_DEVIATIONS.contains(&id);
        let tag = if r.pass { "PASS" } else { "FAIL" };
        let note = match (r.pass, known) {
            (false, true) => " [known deviation]",
            (true, true) => " [listed as a known deviation but passed]",
            _ => "",
        };
        println!("criterion {id} {tag}: {name}: {}{note}", r.detail);
        ok &= r.pass != known;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
