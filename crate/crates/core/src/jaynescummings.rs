//! Frequency estimation with a resonant Jaynes–Cummings probe.
//!
//! A field mode of frequency ω starts in c₀|0⟩ + c₁|1⟩, evolves freely for a
//! time t and then interacts for a time T with a two-level atom prepared in
//! |g⟩. The atom is read out in {|g⟩, |e⟩}. The coupling Ω = κ√ω depends on
//! the unknown ω, so the induced field POVM
//!
//! ```text
//! Π_g = cos²(ΩT√N)    Π_e = sin²(ΩT√N)
//! ```
//!
//! depends on ω even though the field state carries no information when
//! c₀ = 0.
//!
//! Joint field⊗atom matrices use the index 2n + a with a = 0 for |g⟩ and
//! a = 1 for |e⟩, over field levels 0..=n_max.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::fisher::ClassicalModel;
use crate::numcore::{outer, trace_product, HermitianOperator, OutcomeSpace, ParametricFamily, SampleMeasure};
use crate::qbounds::{self, DensityFamily, PovmFamily, QuantumFisherReport, StateFamily};
use crate::{Error, Result, C64};

/// Default Fock truncation of the field.
pub const DEFAULT_N_MAX: usize = 8;

const UNITARITY_TOL: f64 = 1e-9;
const BLOCK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct JCConfig {
    pub omega: f64,
    /// Ω = κ√ω
    pub kappa: f64,
    /// Free evolution before the interaction.
    pub t: f64,
    /// Interaction time.
    pub big_t: f64,
    pub c0: C64,
    pub c1: C64,
    pub n_max: usize,
}

impl JCConfig {
    pub fn new(omega: f64, kappa: f64, t: f64, big_t: f64, c0: C64, c1: C64) -> Result<Self> {
        let cfg = Self { omega, kappa, t, big_t, c0, c1, n_max: DEFAULT_N_MAX };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Real amplitudes with c₁ given and c₀ = √(1 − c₁²).
    pub fn with_real_c1(omega: f64, kappa: f64, t: f64, big_t: f64, c1: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&c1) {
            return Err(Error::InvalidInput(format!("|c₁| must not exceed 1, got {c1}")));
        }
        Self::new(omega, kappa, t, big_t, C64::new((1.0 - c1 * c1).sqrt(), 0.0), C64::new(c1, 0.0))
    }

    pub fn with_n_max(mut self, n_max: usize) -> Result<Self> {
        self.n_max = n_max;
        self.validate()?;
        Ok(self)
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        Self { omega, ..self.clone() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) || !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidInput(format!("ω and κ must be positive, got {} and {}", self.omega, self.kappa)));
        }
        if !(self.t >= 0.0 && self.t.is_finite()) || !(self.big_t >= 0.0 && self.big_t.is_finite()) {
            return Err(Error::InvalidInput("times must be non-negative".into()));
        }
        let norm = self.c0.norm_sqr() + self.c1.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalizedState(norm));
        }
        if self.n_max < 2 {
            return Err(Error::TruncationTooSmall(format!("n_max = {} < 2", self.n_max)));
        }
        Ok(())
    }

    /// Ω = κ√ω
    pub fn rabi(&self) -> f64 {
        self.kappa * self.omega.sqrt()
    }

    /// ∂Ω/∂ω = Ω/2ω
    pub fn drabi(&self) -> f64 {
        self.rabi() / (2.0 * self.omega)
    }

    fn angle(&self, n: usize) -> f64 {
        self.rabi() * self.big_t * (n as f64).sqrt()
    }

    fn dim(&self) -> usize {
        self.n_max + 1
    }
}

fn idx(n: usize, excited: bool) -> usize {
    2 * n + usize::from(excited)
}

/// U_T on field⊗atom, truncated at n_max. Unitarity is checked on the field
/// levels below n_max − 1, where the truncation cannot reach.
pub fn evolution_operator(config: &JCConfig) -> Result<DMatrix<C64>> {
    config.validate()?;
    let d = 2 * config.dim();
    let mut u = DMatrix::<C64>::zeros(d, d);
    let mi = C64::new(0.0, -1.0);
    for n in 0..config.dim() {
        u[(idx(n, false), idx(n, false))] = C64::new(config.angle(n).cos(), 0.0);
        u[(idx(n, true), idx(n, true))] = C64::new(config.angle(n + 1).cos(), 0.0);
        // −i sin(ΩT√N)/√N a† |g⟩⟨e| takes |n, e⟩ to |n+1, g⟩
        if n < config.n_max {
            u[(idx(n + 1, false), idx(n, true))] = mi * config.angle(n + 1).sin();
        }
        // −i sin(ΩT√(1+N))/√(1+N) a |e⟩⟨g| takes |n, g⟩ to |n−1, e⟩
        if n >= 1 {
            u[(idx(n - 1, true), idx(n, false))] = mi * config.angle(n).sin();
        }
    }
    let safe = 2 * (config.n_max - 1);
    let gram = u.adjoint() * &u;
    let mut dev: f64 = 0.0;
    for i in 0..safe {
        for j in 0..safe {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((gram[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    if dev > UNITARITY_TOL {
        return Err(Error::TruncationTooSmall(format!("U†U deviates from 𝕀 by {dev:e} on the safe subspace")));
    }
    Ok(u)
}

/// Field operators M_g = ⟨g|U_T|g⟩ = cos(ΩT√N) and
/// M_e = ⟨e|U_T|g⟩ = −i sin(ΩT√(1+N))/√(1+N) a.
pub fn detection_operators(config: &JCConfig) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let u = evolution_operator(config)?;
    let dim = config.dim();
    let mut mg = DMatrix::<C64>::zeros(dim, dim);
    let mut me = DMatrix::<C64>::zeros(dim, dim);
    for n in 0..dim {
        mg[(n, n)] = C64::new(config.angle(n).cos(), 0.0);
        if n >= 1 {
            me[(n - 1, n)] = C64::new(0.0, -config.angle(n).sin());
        }
    }
    let mut dev: f64 = 0.0;
    for r in 0..dim {
        for c in 0..dim {
            dev = dev.max((u[(idx(r, false), idx(c, false))] - mg[(r, c)]).norm());
            dev = dev.max((u[(idx(r, true), idx(c, false))] - me[(r, c)]).norm());
        }
    }
    if dev > BLOCK_TOL {
        return Err(Error::Inconsistent(format!("detection operators differ from U_T blocks by {dev:e}")));
    }
    Ok((mg, me))
}

fn povm_diagonals(config: &JCConfig) -> (Vec<f64>, Vec<f64>) {
    (0..config.dim()).map(|n| (config.angle(n).cos().powi(2), config.angle(n).sin().powi(2))).unzip()
}

fn diag(v: &[f64]) -> DMatrix<C64> {
    DMatrix::from_diagonal(&DVector::from_iterator(v.len(), v.iter().map(|x| C64::new(*x, 0.0))))
}

/// Π_g = cos²(ΩT√N), Π_e = sin²(ΩT√N).
pub fn povm(config: &JCConfig) -> Result<(HermitianOperator, HermitianOperator)> {
    config.validate()?;
    let (g, e) = povm_diagonals(config);
    Ok((HermitianOperator::new("fock", diag(&g))?, HermitianOperator::new("fock", diag(&e))?))
}

/// Atom readout statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JCOutcomeDistribution {
    pub p_g: f64,
    pub p_e: f64,
}

impl JCOutcomeDistribution {
    pub fn as_vec(&self) -> Vec<f64> {
        vec![self.p_g, self.p_e]
    }
}

fn closed_probabilities(config: &JCConfig) -> JCOutcomeDistribution {
    let (a, b) = (config.c0.norm_sqr(), config.c1.norm_sqr());
    let th = config.angle(1);
    JCOutcomeDistribution { p_g: a + b * th.cos().powi(2), p_e: b * th.sin().powi(2) }
}

/// p_g = |c₀|² + |c₁|²cos²(ΩT), p_e = |c₁|²sin²(ΩT). The result is checked
/// against tr(Π ψ_tψ_t†) with the free-evolution phases in place.
pub fn outcome_probabilities(config: &JCConfig) -> Result<JCOutcomeDistribution> {
    let out = closed_probabilities(config);
    let (pg, pe) = povm(config)?;
    let psi = field_state(config, config.omega);
    let rho = outer(&psi, &psi);
    let (tg, te) = (trace_product(pg.matrix(), &rho).re, trace_product(pe.matrix(), &rho).re);
    if (tg - out.p_g).abs() > 1e-12 || (te - out.p_e).abs() > 1e-12 {
        return Err(Error::Inconsistent(format!("outcome probabilities ({tg}, {te}) vs ({}, {})", out.p_g, out.p_e)));
    }
    Ok(out)
}

/// (ΩT/ω)² |c₁|² cos²(ΩT) / (1 − |c₁|² sin²(ΩT)).
///
/// At |c₁| = 1 with sin²(ΩT) = 1 both probabilities are stationary in ω and
/// the expression is 0/0; zero is returned with a warning.
pub fn closed_form_fi(config: &JCConfig) -> f64 {
    let b = config.c1.norm_sqr();
    let th = config.angle(1);
    let den = 1.0 - b * th.sin().powi(2);
    let num = (th / config.omega).powi(2) * b * th.cos().powi(2);
    if den <= 1e-15 {
        log::warn!("degenerate point: |c₁| = 1 and sin²(ΩT) = 1, outcome probabilities are stationary");
        return 0.0;
    }
    num / den
}

/// J = 4t² |c₀c₁|²
pub fn closed_form_qfi(config: &JCConfig) -> f64 {
    4.0 * config.t * config.t * (config.c0 * config.c1).norm_sqr()
}

fn field_state(config: &JCConfig, omega: f64) -> DVector<C64> {
    let mut v = DVector::<C64>::zeros(config.dim());
    v[0] = config.c0 * C64::from_polar(1.0, -0.5 * omega * config.t);
    v[1] = config.c1 * C64::from_polar(1.0, -1.5 * omega * config.t);
    v
}

/// ω ↦ c₀e^{−iωt/2}|0⟩ + c₁e^{−3iωt/2}|1⟩ in the truncated Fock space.
pub fn state_family(config: &JCConfig) -> StateFamily {
    let c = config.clone();
    let value = move |w: f64| field_state(&c, w);
    let c = config.clone();
    let derivative = move |w: f64| {
        let mut v = field_state(&c, w);
        v[0] *= C64::new(0.0, -0.5 * c.t);
        v[1] *= C64::new(0.0, -1.5 * c.t);
        v
    };
    StateFamily::new(value).with_derivative(derivative).with_domain(0.0, f64::INFINITY)
}

pub fn density_family(config: &JCConfig) -> DensityFamily {
    let psi = state_family(config);
    let p2 = psi.clone();
    DensityFamily::new(move |w| {
        let v = psi.value(w);
        outer(&v, &v)
    })
    .with_derivative(move |w| {
        let v = p2.value(w);
        let d = p2.derivative(w).expect("ω inside the domain");
        outer(&d, &v) + outer(&v, &d)
    })
    .with_domain(0.0, f64::INFINITY)
}

/// ω ↦ (Π_g, Π_e) on outcome labels {0: g, 1: e}, with the analytic
/// derivative through ∂Ω/∂ω = Ω/2ω.
pub fn povm_family(config: &JCConfig) -> Result<PovmFamily> {
    config.validate()?;
    let c = config.clone();
    let value = move |w: f64| {
        let (g, e) = povm_diagonals(&c.with_omega(w));
        vec![diag(&g), diag(&e)]
    };
    let c = config.clone();
    let derivative = move |w: f64| {
        let cw = c.with_omega(w);
        // ∂cos²θ_n = −sin(2θ_n) θ_n/(2ω)
        let dg: Vec<f64> = (0..cw.dim()).map(|n| -(2.0 * cw.angle(n)).sin() * cw.angle(n) / (2.0 * w)).collect();
        let de: Vec<f64> = dg.iter().map(|v| -v).collect();
        vec![diag(&dg), diag(&de)]
    };
    let elements = ParametricFamily::new(value).with_derivative(derivative).with_domain(0.0, f64::INFINITY);
    Ok(PovmFamily::new(OutcomeSpace::discrete(vec![0.0, 1.0])?, elements, SampleMeasure::uniform()))
}

/// The readout as a classical model over ω with analytic derivative.
pub fn outcome_model(config: &JCConfig) -> Result<ClassicalModel> {
    config.validate()?;
    let c = config.clone();
    let value = move |w: f64| closed_probabilities(&c.with_omega(w)).as_vec();
    let c = config.clone();
    let derivative = move |w: f64| {
        let cw = c.with_omega(w);
        let th = cw.angle(1);
        let dpe = cw.c1.norm_sqr() * (2.0 * th).sin() * th / (2.0 * w);
        vec![-dpe, dpe]
    };
    let p = ParametricFamily::new(value).with_derivative(derivative).with_domain(0.0, f64::INFINITY);
    Ok(ClassicalModel::new(OutcomeSpace::discrete(vec![0.0, 1.0])?, p, SampleMeasure::uniform()))
}

/// Fisher information of the atom readout from the ω-dependent POVM.
pub fn numeric_fi(config: &JCConfig) -> Result<QuantumFisherReport> {
    qbounds::povm_fi(&density_family(config), &povm_family(config)?, config.omega)
}

/// QFI of the free-evolved field state.
pub fn numeric_qfi(config: &JCConfig) -> Result<f64> {
    qbounds::qfi_pure(&state_family(config), config.omega)
}
