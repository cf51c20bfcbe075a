//! Gravimetry with a mechanical oscillator.
//!
//! A mass m on a spring of stiffness k is prepared in the ground state of the
//! unperturbed trap displaced by δx, then evolves for a time t under
//! H = p²/2m + kx²/2 + mgx. The unknown is g. Positions are written in units
//! of ℓ = 1/√(mω) as ξ = x/ℓ, with
//!
//! ```text
//! ξ_g = mg/(kℓ)        ξ_δ = δx/ℓ        d = ξ_δ − ξ_g
//! ```
//!
//! In the eigenbasis at g the prepared state is coherent with amplitude
//! α = −d/√2, so the energy distribution is Poissonian with mean d²/2.
//!
//! State families are expressed in one fixed Fock basis, that of the
//! eigenstates at the configured working point g₀. A vector of coefficients
//! in the g-dependent eigenbasis would not be a family of states in one
//! Hilbert space, and its overlap-based QFI would miss the motion of the
//! basis itself.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::fisher::ClassicalModel;
use crate::numcore::{
    hermitian_eigen, outer, DensityOperator, OutcomeSpace, ParametricFamily, QuadratureRule, SampleMeasure,
};
use crate::qbounds::{self, DensityFamily, PovmFamily, ProjectiveFamily, QuantumFisherReport, StateFamily};
use crate::{Error, Result, C64};

/// Maximum Poisson tail mass allowed beyond the Fock cutoff.
pub const TAIL_TOL: f64 = 1e-12;

/// Smallest Fock cutoff chosen by the tail rule.
pub const MIN_N_MAX: usize = 20;

/// Largest eigenstate index evaluated.
pub const MAX_EIGEN_INDEX: usize = 150;

const GRID_POINTS: usize = 2001;
const GRID_MARGIN: f64 = 10.0;

/// Physical parameters, truncation and position grid (in ξ units).
#[derive(Debug, Clone)]
pub struct OscillatorConfig {
    pub m: f64,
    pub k: f64,
    pub g: f64,
    pub dx: f64,
    pub t: f64,
    n_max: usize,
    grid: OutcomeSpace,
}

impl OscillatorConfig {
    /// Builds a configuration from mass and angular frequency, choosing the
    /// Fock cutoff by the tail rule and the default grid.
    pub fn new(m: f64, omega: f64, g: f64, dx: f64, t: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidInput(format!("ω must be positive, got {omega}")));
        }
        Self::from_stiffness(m, m * omega * omega, g, dx, t)
    }

    pub fn from_stiffness(m: f64, k: f64, g: f64, dx: f64, t: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) || !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidInput(format!("mass and stiffness must be positive, got m = {m}, k = {k}")));
        }
        if !g.is_finite() || !dx.is_finite() {
            return Err(Error::InvalidInput("g and δx must be finite".into()));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("t must be non-negative, got {t}")));
        }
        let mut cfg = Self { m, k, g, dx, t, n_max: 0, grid: OutcomeSpace::counting(1)? };
        if !cfg.xi_g().is_finite() || !cfg.xi_delta().is_finite() {
            return Err(Error::InvalidInput("ξ_g or ξ_δ is not finite".into()));
        }
        cfg.n_max = default_n_max(cfg.mu());
        cfg.grid = cfg.default_grid()?;
        Ok(cfg)
    }

    /// Overrides the Fock cutoff; rejects cutoffs that leave more than
    /// [`TAIL_TOL`] of the energy distribution outside.
    pub fn with_n_max(mut self, n_max: usize) -> Result<Self> {
        let tail = poisson_tail(self.mu(), n_max);
        if tail > TAIL_TOL {
            return Err(Error::IncreaseTruncation(format!("tail mass {tail:e} beyond n_max = {n_max}")));
        }
        self.n_max = n_max;
        Ok(self)
    }

    pub fn with_grid(mut self, grid: OutcomeSpace) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_t(mut self, t: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("t must be non-negative, got {t}")));
        }
        self.t = t;
        Ok(self)
    }

    /// The same system at another value of g. The cutoff is re-chosen if the
    /// current one no longer satisfies the tail rule.
    pub fn with_g(&self, g: f64) -> Result<Self> {
        let fresh = Self::from_stiffness(self.m, self.k, g, self.dx, self.t)?;
        let n_max = self.n_max.max(fresh.n_max);
        Ok(Self { n_max, grid: fresh.grid, ..fresh })
    }

    pub fn omega(&self) -> f64 {
        (self.k / self.m).sqrt()
    }

    /// ℓ = 1/√(mω)
    pub fn ell(&self) -> f64 {
        1.0 / (self.m * self.omega()).sqrt()
    }

    pub fn xi_g(&self) -> f64 {
        self.xi_g_at(self.g)
    }

    fn xi_g_at(&self, g: f64) -> f64 {
        self.m * g / (self.k * self.ell())
    }

    /// ∂ξ_g/∂g = m/(kℓ)
    pub fn dxi_g(&self) -> f64 {
        self.m / (self.k * self.ell())
    }

    pub fn xi_delta(&self) -> f64 {
        self.dx / self.ell()
    }

    /// Mean of the Poisson energy distribution, (ξ_δ − ξ_g)²/2.
    pub fn mu(&self) -> f64 {
        let d = self.xi_delta() - self.xi_g();
        0.5 * d * d
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn grid(&self) -> &OutcomeSpace {
        &self.grid
    }

    /// m/ω³, the scale of every information quantity of this model.
    pub fn scale(&self) -> f64 {
        self.m / self.omega().powi(3)
    }

    fn default_grid(&self) -> Result<OutcomeSpace> {
        let half = self.xi_delta().abs() + self.xi_g().abs() + GRID_MARGIN;
        OutcomeSpace::continuous(-half, half, GRID_POINTS, QuadratureRule::Trapezoid)
    }
}

/// Σ_{k > n} e^{−μ} μᵏ/k!, summed upward from n + 1 to avoid cancellation.
pub fn poisson_tail(mu: f64, n: usize) -> f64 {
    if mu == 0.0 {
        return 0.0;
    }
    let k0 = (n + 1) as f64;
    let mut term = (-mu + k0 * mu.ln() - ln_factorial(n + 1)).exp();
    let mut acc = 0.0;
    let mut k = k0;
    loop {
        acc += term;
        k += 1.0;
        term *= mu / k;
        if term <= 1e-18 * acc && k > mu {
            break;
        }
    }
    acc
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Smallest cutoff with tail below [`TAIL_TOL`], at least [`MIN_N_MAX`].
pub fn default_n_max(mu: f64) -> usize {
    let mut n = MIN_N_MAX;
    while poisson_tail(mu, n) >= TAIL_TOL {
        n += 1;
    }
    n
}

/// Normalized Hermite functions φ_0..=φ_n at u, by the stable recurrence
/// φ_{j+1} = √(2/(j+1)) u φ_j − √(j/(j+1)) φ_{j−1}.
fn hermite_functions(n: usize, u: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(PI.powf(-0.25) * (-0.5 * u * u).exp());
    if n >= 1 {
        out.push(2f64.sqrt() * u * out[0]);
    }
    for j in 1..n {
        let jf = j as f64;
        let next = (2.0 / (jf + 1.0)).sqrt() * u * out[j] - (jf / (jf + 1.0)).sqrt() * out[j - 1];
        out.push(next);
    }
    out
}

/// ψ_n at position ξ: (mω/π)^{1/4} (2ⁿn!)^{−1/2} H_n(ξ+ξ_g) e^{−(ξ+ξ_g)²/2}.
pub fn eigenstate(n: usize, config: &OscillatorConfig, xi: f64) -> Result<f64> {
    if n > MAX_EIGEN_INDEX {
        return Err(Error::Overflow(format!("eigenstate index {n} exceeds {MAX_EIGEN_INDEX}")));
    }
    if n > config.n_max {
        return Err(Error::InvalidInput(format!("eigenstate index {n} exceeds n_max = {}", config.n_max)));
    }
    Ok(hermite_functions(n, xi + config.xi_g())[n] / config.ell().sqrt())
}

/// E_n = ω(n + ½) − mg²/(2ω²)
pub fn energy(n: usize, config: &OscillatorConfig) -> f64 {
    energy_at(n, config, config.g)
}

fn energy_at(n: usize, config: &OscillatorConfig, g: f64) -> f64 {
    let w = config.omega();
    w * (n as f64 + 0.5) - config.m * g * g / (2.0 * w * w)
}

/// Coefficients of the prepared state in the eigenbasis at g, with the
/// matching energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockExpansion {
    pub coefficients: Vec<f64>,
    pub energies: Vec<f64>,
}

impl FockExpansion {
    /// c_n e^{−iE_n t}
    pub fn amplitudes(&self, t: f64) -> DVector<C64> {
        DVector::from_iterator(
            self.coefficients.len(),
            self.coefficients.iter().zip(&self.energies).map(|(c, e)| C64::from_polar(*c, -e * t)),
        )
    }
}

// c_n(d) = (−1)ⁿ (2ⁿn!)^{−1/2} dⁿ e^{−d²/4} and ∂_d c_n, built by the
// ratio c_n/c_{n−1} = −d/√(2n) so nothing overflows.
fn coefficients(d: f64, n_max: usize) -> (Vec<f64>, Vec<f64>) {
    let mut c = Vec::with_capacity(n_max + 1);
    c.push((-0.25 * d * d).exp());
    for n in 1..=n_max {
        let prev = c[n - 1];
        c.push(-d / (2.0 * n as f64).sqrt() * prev);
    }
    // ∂_d c_n = (−1)ⁿ(2ⁿn!)^{−1/2} [n d^{n−1} − d^{n+1}/2] e^{−d²/4}
    //         = −√(n/2) c_{n−1}·(−1)… written through neighbours:
    //         ∂_d c_n = −√(n/2) c_{n−1} − (d/2) c_n
    let dc = (0..=n_max)
        .map(|n| {
            let lower = if n == 0 { 0.0 } else { -(n as f64 / 2.0).sqrt() * c[n - 1] };
            lower - 0.5 * d * c[n]
        })
        .collect();
    (c, dc)
}

/// c_n of the prepared state, n = 0..=n_max.
pub fn fock_coefficients(config: &OscillatorConfig) -> Result<FockExpansion> {
    let tail = poisson_tail(config.mu(), config.n_max);
    if tail > TAIL_TOL {
        return Err(Error::IncreaseTruncation(format!("tail mass {tail:e} beyond n_max = {}", config.n_max)));
    }
    let (c, _) = coefficients(config.xi_delta() - config.xi_g(), config.n_max);
    let norm: f64 = c.iter().map(|v| v * v).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::IncreaseTruncation(format!("Σ|c_n|² = {norm}")));
    }
    let energies = (0..=config.n_max).map(|n| energy(n, config)).collect();
    Ok(FockExpansion { coefficients: c, energies })
}

/// g ↦ (c_0, …, c_{n_max}) with the analytic derivative through ξ_g.
pub fn coefficient_family(config: &OscillatorConfig) -> ParametricFamily<Vec<f64>> {
    let (xd, n, dxi) = (config.xi_delta(), config.n_max, config.dxi_g());
    let c = config.clone();
    let value = move |g: f64| coefficients(xd - c.xi_g_at(g), n).0;
    let c = config.clone();
    ParametricFamily::new(value).with_derivative(move |g: f64| {
        coefficients(xd - c.xi_g_at(g), n).1.into_iter().map(|v| -dxi * v).collect()
    })
}

/// Energy measurement as a classical model: p_n(g) = |c_n(g)|² on the
/// counting space {0, …, n_max}.
pub fn energy_outcome_model(config: &OscillatorConfig) -> Result<ClassicalModel> {
    let coeffs = coefficient_family(config);
    let value = {
        let f = coeffs.clone();
        move |g: f64| f.value(g).into_iter().map(|v| v * v).collect::<Vec<_>>()
    };
    let derivative = {
        let f = coeffs;
        move |g: f64| {
            let v = f.value(g);
            let d = f.derivative(g).expect("unbounded domain");
            v.iter().zip(&d).map(|(a, b)| 2.0 * a * b).collect::<Vec<_>>()
        }
    };
    let p = ParametricFamily::new(value).with_derivative(derivative);
    Ok(ClassicalModel::new(OutcomeSpace::counting(config.n_max + 1)?, p, SampleMeasure::uniform()))
}

/// ψ(x, t) in closed form, x in physical units.
pub fn wavefunction(config: &OscillatorConfig, x: f64, t: f64) -> C64 {
    wavefunction_at(config, config.g, x / config.ell(), t)
}

fn wavefunction_at(config: &OscillatorConfig, g: f64, xi: f64, t: f64) -> C64 {
    let w = config.omega();
    let xg = config.xi_g_at(g);
    let d = config.xi_delta() - xg;
    let u = xi + xg;
    let rot = C64::from_polar(1.0, -w * t);
    let norm = (config.m * w / PI).powf(0.25);
    let global = C64::from_polar(1.0, -w * t * (1.0 - xg * xg) / 2.0);
    let inner = rot * (0.5 * d * d * (w * t).cos() + d * u);
    global * norm * (-0.5 * u * u - inner).exp()
}

/// Amplitude vector ψ(ξ_i, t)·√(w_i ℓ) on the configured grid; normalized up
/// to quadrature error. g is the family parameter.
pub fn grid_state_family(config: &OscillatorConfig) -> StateFamily {
    let c = config.clone();
    let nodes: Arc<Vec<f64>> = Arc::new(config.grid.nodes().to_vec());
    let scale: Arc<Vec<f64>> = Arc::new(config.grid.weights().iter().map(|w| (w * config.ell()).sqrt()).collect());
    let t = config.t;
    StateFamily::new(move |g: f64| {
        DVector::from_iterator(nodes.len(), nodes.iter().zip(scale.iter()).map(|(x, s)| wavefunction_at(&c, g, *x, t) * *s))
    })
}

// Coherent-state amplitudes e^{−|γ|²/2} γᵏ/√k!, k = 0..=n.
fn coherent(gamma: C64, n: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(C64::new((-0.5 * gamma.norm_sqr()).exp(), 0.0));
    for k in 1..=n {
        let prev = out[k - 1];
        out.push(prev * gamma / (k as f64).sqrt());
    }
    out
}

// Pieces of the state at g in the reference frame of g₀:
// |ψ_g(t)⟩ = e^{iφ} |γ⟩, γ = β − s, β = −d e^{−iωt}/√2, s = (ξ_g − ξ_g₀)/√2,
// φ = −E_0(g) t + Im(β) s.
struct FramedState {
    gamma: C64,
    phi: f64,
    dgamma: C64,
    dphi: f64,
}

fn framed_state(config: &OscillatorConfig, g: f64) -> FramedState {
    let w = config.omega();
    let t = config.t;
    let xg = config.xi_g_at(g);
    let dxi = config.dxi_g();
    let rot = C64::from_polar(1.0, -w * t);
    let r2 = 2f64.sqrt();
    let beta = rot * (-(config.xi_delta() - xg) / r2);
    let dbeta = rot * (dxi / r2);
    let s = (xg - config.xi_g()) / r2;
    let ds = dxi / r2;
    let e0 = energy_at(0, config, g);
    let de0 = -config.m * g / (w * w);
    FramedState {
        gamma: beta - s,
        phi: -e0 * t + beta.im * s,
        dgamma: dbeta - ds,
        dphi: -de0 * t + dbeta.im * s + beta.im * ds,
    }
}

/// g ↦ |ψ_g(t)⟩ in the Fock basis of the eigenstates at the configured g₀,
/// truncated at n_max, with analytic derivative. At g = g₀ the amplitudes are
/// c_n e^{−iE_n t}.
pub fn state_family(config: &OscillatorConfig) -> StateFamily {
    let n = config.n_max;
    let c = config.clone();
    let value = move |g: f64| {
        let f = framed_state(&c, g);
        let phase = C64::from_polar(1.0, f.phi);
        DVector::from_iterator(n + 1, coherent(f.gamma, n).into_iter().map(|a| a * phase))
    };
    let c = config.clone();
    let derivative = move |g: f64| {
        let f = framed_state(&c, g);
        let phase = C64::from_polar(1.0, f.phi);
        let amps = coherent(f.gamma, n);
        // ∂[e^{iφ} e^{−|γ|²/2} γᵏ/√k!] = e^{iφ}[(iφ' − Re(γ̄γ')) a_k + √k γ' a_{k−1}]
        let lead = C64::new(-(f.gamma.conj() * f.dgamma).re, f.dphi);
        DVector::from_iterator(
            n + 1,
            (0..=n).map(|k| {
                let lower = if k == 0 { C64::new(0.0, 0.0) } else { amps[k - 1] * f.dgamma * (k as f64).sqrt() };
                phase * (lead * amps[k] + lower)
            }),
        )
    };
    StateFamily::new(value).with_derivative(derivative)
}

/// ρ_g = |ψ_g⟩⟨ψ_g| in the reference Fock basis.
pub fn density_family(config: &OscillatorConfig) -> DensityFamily {
    let psi = state_family(config);
    let p2 = psi.clone();
    DensityFamily::new(move |g| {
        let v = psi.value(g);
        outer(&v, &v)
    })
    .with_derivative(move |g| {
        let v = p2.value(g);
        let d = p2.derivative(g).expect("unbounded domain");
        outer(&d, &v) + outer(&v, &d)
    })
}

/// Eigenstates at g in the reference Fock basis: |n_g⟩ = exp(−s(a† − a))|n⟩
/// with s = (ξ_g − ξ_g₀)/√2, the exponential taken of the generator truncated
/// to n_max + 1 levels so the basis stays exactly orthonormal. Tangents are
/// −s'(a† − a)|n_g⟩.
pub fn energy_basis(config: &OscillatorConfig) -> Result<ProjectiveFamily> {
    let dim = config.n_max + 1;
    // i(a† − a) is Hermitian; exp(−s(a† − a)) = V e^{isΛ} V†
    let mut gen = DMatrix::<C64>::zeros(dim, dim);
    for j in 0..dim - 1 {
        let r = ((j + 1) as f64).sqrt();
        gen[(j + 1, j)] = C64::new(r, 0.0);
        gen[(j, j + 1)] = C64::new(-r, 0.0);
    }
    let herm = gen.map(|z| z * C64::new(0.0, 1.0));
    let (lam, v) = hermitian_eigen(&herm);
    let shared = Arc::new((gen, lam, v));
    let (xg0, dxi) = (config.xi_g(), config.dxi_g());
    let c = config.clone();
    let unitary = {
        let shared = shared.clone();
        move |g: f64| {
            let (_, lam, v) = &*shared;
            let s = (c.xi_g_at(g) - xg0) / 2f64.sqrt();
            let phases = DVector::from_iterator(lam.len(), lam.iter().map(|l| C64::from_polar(1.0, s * l)));
            v * DMatrix::from_diagonal(&phases) * v.adjoint()
        }
    };
    let columns = |u: DMatrix<C64>| (0..u.ncols()).map(|j| u.column(j).into_owned()).collect::<Vec<_>>();
    let value = {
        let u = unitary.clone();
        move |g: f64| columns(u(g))
    };
    let derivative = move |g: f64| {
        let ds = dxi / 2f64.sqrt();
        columns((&shared.0 * unitary(g)).map(|z| z * -ds))
    };
    let basis = ParametricFamily::new(value).with_derivative(derivative);
    let labels = (0..dim).map(|n| n as f64).collect();
    let c = config.clone();
    let eigenvalues = ParametricFamily::new(move |g| (0..dim).map(|n| energy_at(n, &c, g)).collect());
    Ok(ProjectiveFamily::new(labels, basis)?.with_eigenvalues(eigenvalues).truncated())
}

/// Energy measurement {|n_g⟩⟨n_g|} as a g-dependent POVM.
pub fn energy_povm(config: &OscillatorConfig) -> Result<PovmFamily> {
    energy_basis(config)?.projector_povm(false)
}

/// J = 8m/ω³ sin²(ωt/2)
pub fn closed_form_qfi(config: &OscillatorConfig) -> f64 {
    8.0 * config.scale() * (0.5 * config.omega() * config.t).sin().powi(2)
}

/// F_H = 2m/ω³, independent of t.
pub fn closed_form_energy_fi(config: &OscillatorConfig) -> f64 {
    2.0 * config.scale()
}

/// 𝒦_X = m/ω³ [2 + (ξ_δ − ξ_g)²] for the energy eigenbasis, as published.
///
/// The tangent-vector sum for the evolved coherent state depends on t; see
/// [`coherent_kx`]. The two agree when ξ_δ = ξ_g or sin²(ωt) = 1/4.
pub fn closed_form_kx(config: &OscillatorConfig) -> f64 {
    let d = config.xi_delta() - config.xi_g();
    config.scale() * (2.0 + d * d)
}

/// 4 Σ_n ⟨∂n_g|ρ|∂n_g⟩ evaluated on the coherent state:
/// m/ω³ [2 + 4(ξ_δ − ξ_g)² sin²(ωt)].
///
/// Since ∂_g|n_g⟩ = −(ξ_g'/√2)(a† − a)|n_g⟩, the sum is
/// 2ξ_g'² ⟨(a − a†)(a† − a)⟩ = 2ξ_g'² (1 + 4 Im(β)²) with β the amplitude in
/// the g-eigenbasis.
pub fn coherent_kx(config: &OscillatorConfig) -> f64 {
    let d = config.xi_delta() - config.xi_g();
    config.scale() * (2.0 + 4.0 * d * d * (config.omega() * config.t).sin().powi(2))
}

/// QFI of the Fock-basis state family at the configured g.
pub fn numeric_qfi(config: &OscillatorConfig) -> Result<f64> {
    qbounds::qfi_pure(&state_family(config), config.g)
}

/// Fisher information of the g-dependent energy measurement.
pub fn numeric_energy_fi(config: &OscillatorConfig) -> Result<QuantumFisherReport> {
    qbounds::povm_fi(&density_family(config), &energy_povm(config)?, config.g)
}

/// Tangent-vector sum over the truncated energy eigenbasis.
pub fn numeric_kx(config: &OscillatorConfig) -> Result<f64> {
    let rho = DensityOperator::new("fock", density_family(config).value(config.g))?;
    qbounds::kx(&energy_basis(config)?, &rho, config.g)
}

const HERMITE_MAX_P: usize = 12;
const HERMITE_MAX_N: usize = 60;

fn hermite_table() -> &'static Vec<f64> {
    use std::sync::OnceLock;
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let (np, nn) = (HERMITE_MAX_P + 1, HERMITE_MAX_N + 1);
        let idx = |p: usize, n: usize, m: usize| (p * nn + n) * nn + m;
        let mut t = vec![0.0; np * nn * nn];
        // I_0^{n,n} = √π 2ⁿ n!
        let mut diag = PI.sqrt();
        for n in 0..nn {
            if n > 0 {
                diag *= 2.0 * n as f64;
            }
            t[idx(0, n, n)] = diag;
        }
        for p in 1..np {
            for n in 0..nn {
                for m in 0..nn {
                    let mut v = 0.0;
                    if p >= 2 {
                        v += (p as f64 - 1.0) / 2.0 * t[idx(p - 2, n, m)];
                    }
                    if n >= 1 {
                        v += n as f64 * t[idx(p - 1, n - 1, m)];
                    }
                    if m >= 1 {
                        v += m as f64 * t[idx(p - 1, n, m - 1)];
                    }
                    t[idx(p, n, m)] = v;
                }
            }
        }
        t
    })
}

/// I_p^{n,m} = ∫ ξᵖ H_n H_m e^{−ξ²} dξ from the integration-by-parts
/// recurrence I_p = (p−1)/2 I_{p−2} + n I_{p−1}^{n−1,m} + m I_{p−1}^{n,m−1}.
pub fn hermite_integral(p: usize, n: usize, m: usize) -> Result<f64> {
    if p > HERMITE_MAX_P || n > HERMITE_MAX_N || m > HERMITE_MAX_N {
        return Err(Error::Overflow(format!(
            "I_{p}^({n},{m}) outside p ≤ {HERMITE_MAX_P}, n, m ≤ {HERMITE_MAX_N}"
        )));
    }
    let nn = HERMITE_MAX_N + 1;
    Ok(hermite_table()[(p * nn + n) * nn + m])
}

/// Closed forms of I_p^{n,m} for p ≤ 2; `None` for larger p.
pub fn hermite_integral_closed_form(p: usize, n: usize, m: usize) -> Option<f64> {
    let sp = PI.sqrt();
    let fact = |k: usize| (1..=k).map(|j| j as f64).product::<f64>();
    let pow2 = |e: i64| 2f64.powi(e as i32);
    let (ni, mi) = (n as i64, m as i64);
    let v = match p {
        0 => {
            if n == m {
                sp * pow2(ni) * fact(n)
            } else {
                0.0
            }
        }
        1 => {
            if mi == ni - 1 {
                sp * pow2(ni - 1) * fact(n)
            } else if m == n + 1 {
                sp * pow2(ni) * fact(n + 1)
            } else {
                0.0
            }
        }
        2 => {
            if n == m {
                sp * pow2(ni - 1) * fact(n) * (1.0 + 2.0 * n as f64)
            } else if mi == ni - 2 {
                sp * pow2(ni - 2) * fact(n)
            } else if m == n + 2 {
                sp * pow2(ni) * fact(n + 2)
            } else {
                0.0
            }
        }
        _ => return None,
    };
    Some(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::classical_fi;
    use crate::numcore::inner;

    fn unit(g: f64, dx: f64, t: f64) -> OscillatorConfig {
        OscillatorConfig::new(1.0, 1.0, g, dx, t).unwrap()
    }

    #[test]
    fn ground_state_at_origin() {
        let c = unit(0.0, 1.0, 0.0);
        assert!((eigenstate(0, &c, 0.0).unwrap() - PI.powf(-0.25)).abs() < 1e-15);
        assert!(eigenstate(c.n_max() + 1, &c, 0.0).is_err());
        assert!(matches!(eigenstate(151, &c.clone().with_n_max(200).unwrap(), 0.0), Err(Error::Overflow(_))));
    }

    #[test]
    fn eigenstates_are_orthonormal_on_the_grid() {
        let c = unit(0.3, 1.0, 0.0);
        let grid = c.grid();
        let ell = c.ell();
        let table: Vec<Vec<f64>> = (0..=10)
            .map(|n| grid.nodes().iter().map(|&x| eigenstate(n, &c, x).unwrap()).collect())
            .collect();
        for n in 0..=10 {
            for m in 0..=10 {
                let prod: Vec<f64> = table[n].iter().zip(&table[m]).map(|(a, b)| a * b * ell).collect();
                let v = grid.integrate_samples(&prod).unwrap().value;
                let target = if n == m { 1.0 } else { 0.0 };
                assert!((v - target).abs() < 1e-8, "⟨{n}|{m}⟩ = {v}");
            }
        }
    }

    #[test]
    fn parity_at_zero_gravity() {
        let c = unit(0.0, 1.0, 0.0);
        for n in 0..8 {
            for &x in &[0.3, 1.7, 2.9] {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert!((eigenstate(n, &c, -x).unwrap() - sign * eigenstate(n, &c, x).unwrap()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn spectrum() {
        assert_eq!(energy(0, &unit(0.0, 1.0, 0.0)), 0.5);
        assert_eq!(energy(1, &OscillatorConfig::new(1.0, 2.0, 0.0, 1.0, 0.0).unwrap()), 3.0);
        let (a, b) = (OscillatorConfig::new(1.3, 0.7, 0.4, 1.0, 0.0).unwrap(), OscillatorConfig::new(1.3, 0.7, 0.0, 1.0, 0.0).unwrap());
        for n in 0..5 {
            let shift = energy(n, &a) - energy(n, &b);
            assert!((shift + 1.3 * 0.16 / (2.0 * 0.49)).abs() < 1e-14);
        }
    }

    #[test]
    fn tail_rule() {
        assert_eq!(default_n_max(0.5), MIN_N_MAX);
        let n = default_n_max(30.0);
        assert!(poisson_tail(30.0, n) < TAIL_TOL && poisson_tail(30.0, n - 1) >= TAIL_TOL);
        assert!(unit(0.0, 1.0, 0.0).with_n_max(3).is_err());
    }

    #[test]
    fn coefficients_match_formula_and_overlaps() {
        let c = unit(0.0, 1.0, 0.0);
        let f = fock_coefficients(&c).unwrap();
        assert!((f.coefficients[0].powi(2) - (-0.5f64).exp()).abs() < 1e-15);
        let ground = fock_coefficients(&unit(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(ground.coefficients[0], 1.0);
        assert!(ground.coefficients[1..].iter().all(|v| *v == 0.0));
        let wide = unit(0.0, 1.0, 0.0).with_n_max(40).unwrap();
        let norm: f64 = fock_coefficients(&wide).unwrap().coefficients.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-10);

        // overlap ∫ψ_n ψ(x, 0) dx
        let c = OscillatorConfig::new(1.5, 0.8, 0.4, -0.7, 0.0).unwrap();
        let f = fock_coefficients(&c).unwrap();
        let grid = c.grid();
        for n in 0..8 {
            let xs: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|&x| eigenstate(n, &c, x).unwrap() * wavefunction(&c, x * c.ell(), 0.0).re * c.ell())
                .collect();
            let ov = grid.integrate_samples(&xs).unwrap().value;
            assert!((ov - f.coefficients[n]).abs() < 1e-7, "n = {n}: {ov} vs {}", f.coefficients[n]);
        }
    }

    #[test]
    fn coefficient_derivative() {
        let c = OscillatorConfig::new(1.0, 1.0, 0.0, 1.0, 0.0).unwrap();
        let fam = coefficient_family(&c);
        let exact = fam.derivative(0.0).unwrap();
        let fd = fam.central_difference(0.0).unwrap();
        for (a, b) in exact.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-8), "{a} vs {b}");
        }
        // ∂_d c_n from the monomial form
        let d: f64 = 1.0;
        for n in 0..6usize {
            let pref = (-1f64).powi(n as i32) / (2f64.powi(n as i32) * (1..=n).map(|k| k as f64).product::<f64>()).sqrt();
            let nd = if n == 0 { 0.0 } else { n as f64 * d.powi(n as i32 - 1) };
            let dd = pref * (nd - d.powi(n as i32 + 1) / 2.0) * (-d * d / 4.0).exp();
            assert!((exact[n] + c.dxi_g() * dd).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_form_wavefunction() {
        let c = unit(0.0, 1.0, 0.0);
        for &x in &[-1.0, 0.0, 0.8] {
            let expect = PI.powf(-0.25) * (-(x + 1.0f64).powi(2) / 2.0).exp();
            assert!((wavefunction(&c, x, 0.0) - C64::new(expect, 0.0)).norm() < 1e-15);
        }
        let still = unit(0.0, 0.0, 0.0);
        for &x in &[-0.5, 1.2] {
            let expect = C64::from_polar(eigenstate(0, &still, x).unwrap(), -0.5 * 2.3);
            assert!((wavefunction(&still, x, 2.3) - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn wavefunction_matches_eigen_expansion_and_is_normalized() {
        let c = OscillatorConfig::new(1.2, 0.9, 0.35, 0.8, 0.0).unwrap();
        let f = fock_coefficients(&c).unwrap();
        for &t in &[0.0, 1.0, PI] {
            let amps = f.amplitudes(t);
            let grid = c.grid();
            let mut dens = Vec::new();
            for &xi in grid.nodes().iter().step_by(25) {
                let phis = hermite_functions(c.n_max(), xi + c.xi_g());
                let sum: C64 = amps.iter().zip(&phis).map(|(a, p)| a * *p).sum::<C64>() / c.ell().sqrt();
                assert!((sum - wavefunction(&c, xi * c.ell(), t)).norm() < 1e-7);
            }
            for &xi in grid.nodes() {
                dens.push(wavefunction(&c, xi * c.ell(), t).norm_sqr() * c.ell());
            }
            assert!((grid.integrate_samples(&dens).unwrap().value - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn energy_fi_from_poisson_model() {
        for (m, w, dx, g) in [(1.0, 1.0, 1.0, 0.0), (2.0, 1.0, 0.5, 0.3)] {
            let c = OscillatorConfig::new(m, w, g, dx, 0.0).unwrap();
            let model = energy_outcome_model(&c).unwrap();
            let fi = classical_fi(&model, g).unwrap();
            assert!((fi - closed_form_energy_fi(&c)).abs() < 1e-6 * closed_form_energy_fi(&c));
        }
    }

    #[test]
    fn framed_state_agrees_with_literal_coefficients_at_working_point() {
        let c = OscillatorConfig::new(1.0, 1.3, 0.2, 0.9, 0.7).unwrap();
        let psi = state_family(&c).value(c.g);
        let lit = fock_coefficients(&c).unwrap().amplitudes(c.t);
        assert!((psi - lit).norm() < 1e-13);
    }

    #[test]
    fn framed_state_matches_grid_overlaps_off_the_working_point() {
        let c = OscillatorConfig::new(1.0, 1.0, 0.1, 1.0, 0.9).unwrap();
        let g = 0.45;
        let psi = state_family(&c).value(g);
        let grid = c.grid();
        let there = c.with_g(g).unwrap();
        for k in 0..6 {
            let re: Vec<C64> = grid
                .nodes()
                .iter()
                .map(|&x| eigenstate(k, &c, x).unwrap() * wavefunction(&there, x * c.ell(), c.t) * c.ell())
                .collect();
            let ov = C64::new(
                grid.integrate_samples(&re.iter().map(|z| z.re).collect::<Vec<_>>()).unwrap().value,
                grid.integrate_samples(&re.iter().map(|z| z.im).collect::<Vec<_>>()).unwrap().value,
            );
            assert!((ov - psi[k]).norm() < 1e-8, "k = {k}: {ov} vs {}", psi[k]);
        }
    }

    #[test]
    fn state_derivative_matches_differences() {
        let c = OscillatorConfig::new(1.4, 0.8, 0.3, 0.6, 2.1).unwrap();
        let fam = state_family(&c);
        let exact = fam.derivative(0.37).unwrap();
        let fd = fam.richardson_derivative(0.37).unwrap();
        assert!((exact - fd).norm() < 1e-7);
    }

    #[test]
    fn qfi_routes_agree() {
        for &(g, t) in &[(0.0, PI), (0.5, 1.0), (0.0, 0.1)] {
            let c = unit(g, 1.0, t);
            let j = closed_form_qfi(&c);
            let fock = numeric_qfi(&c).unwrap();
            let grid = qbounds::qfi_pure(&grid_state_family(&c), g).unwrap();
            let mixed = qbounds::qfi(&density_family(&c), g).unwrap();
            for v in [fock, grid, mixed] {
                assert!((v - j).abs() <= 1e-5 * j.max(1e-3), "t = {t}: {v} vs {j}");
            }
        }
        assert!((closed_form_qfi(&unit(0.0, 1.0, PI)) - 8.0).abs() < 1e-12);
        assert_eq!(closed_form_qfi(&unit(0.0, 1.0, 0.0)), 0.0);
        assert!((closed_form_qfi(&unit(0.0, 1.0, PI / 2.0)) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn literal_coefficient_family_misses_the_basis_motion() {
        // a_n(g) = c_n(g) e^{−iE_n(g)t} read as one vector: its QFI is the
        // constant 2m/ω³ rather than 8m/ω³ sin²(ωt/2)
        let c = unit(0.0, 1.0, PI);
        let cc = c.clone();
        let lit = StateFamily::new(move |g| fock_coefficients(&cc.with_g(g).unwrap()).unwrap().amplitudes(cc.t));
        let j = qbounds::qfi_pure(&lit, 0.0).unwrap();
        assert!((j - 2.0).abs() < 1e-6);
    }

    #[test]
    fn energy_basis_is_the_displaced_eigenbasis() {
        let c = unit(0.0, 1.0, 0.0);
        let basis = energy_basis(&c).unwrap();
        let g = 0.2;
        let vs = basis.basis(g).unwrap();
        let there = c.with_g(g).unwrap();
        let grid = c.grid();
        for n in 0..4 {
            for k in 0..6 {
                let xs: Vec<f64> = grid
                    .nodes()
                    .iter()
                    .map(|&x| eigenstate(k, &c, x).unwrap() * eigenstate(n, &there, x).unwrap() * c.ell())
                    .collect();
                let ov = grid.integrate_samples(&xs).unwrap().value;
                assert!((ov - vs[n][k].re).abs() < 1e-9 && vs[n][k].im.abs() < 1e-12, "⟨{k}|{n}_g⟩");
            }
        }
        let exact = basis.tangents(0.1).unwrap();
        let fd = basis.clone();
        let plus = fd.basis(0.1 + 1e-6).unwrap();
        let minus = fd.basis(0.1 - 1e-6).unwrap();
        for n in 0..5 {
            let d = (&plus[n] - &minus[n]).map(|z| z / 2e-6);
            assert!((d - &exact[n]).norm() < 1e-7);
        }
        assert!(inner(&vs[0], &vs[1]).norm() < 1e-13);
    }

    #[test]
    fn energy_measurement_information() {
        for &t in &[0.2, 1.0, 2.5] {
            let c = unit(0.0, 1.0, t);
            let r = numeric_energy_fi(&c).unwrap();
            assert!((r.total - 2.0).abs() < 1e-5, "{r:?}");
        }
        let c = unit(0.0, 1.0, 0.2);
        assert!(numeric_energy_fi(&c).unwrap().total > numeric_qfi(&c).unwrap());
    }

    #[test]
    fn tangent_sum_is_time_dependent() {
        for &(g, dx, t) in &[(0.0, 1.0, 0.0), (0.0, 1.0, 1.0), (0.5, 1.0, PI / 2.0), (0.4, 0.4, 2.0)] {
            let c = unit(g, dx, t);
            let k = numeric_kx(&c).unwrap();
            assert!((k - coherent_kx(&c)).abs() < 1e-8 * coherent_kx(&c), "{k} vs {}", coherent_kx(&c));
        }
        // the two forms meet when ξ_δ = ξ_g
        let c = unit(0.4, 0.4, 2.0);
        assert!((closed_form_kx(&c) - 2.0).abs() < 1e-12);
        assert!((numeric_kx(&c).unwrap() - 2.0).abs() < 1e-8);
        assert!((closed_form_kx(&unit(0.0, 1.0, 0.0)) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn closed_forms() {
        assert_eq!(closed_form_energy_fi(&unit(0.0, 1.0, 3.0)), 2.0);
        assert_eq!(closed_form_energy_fi(&OscillatorConfig::new(2.0, 1.0, 0.0, 1.0, 0.0).unwrap()), 4.0);
    }

    #[test]
    fn hermite_integrals() {
        assert!((hermite_integral(0, 1, 1).unwrap() - 2.0 * PI.sqrt()).abs() < 1e-14);
        assert!((hermite_integral(1, 0, 1).unwrap() - PI.sqrt()).abs() < 1e-14);
        assert!((hermite_integral(2, 0, 0).unwrap() - PI.sqrt() / 2.0).abs() < 1e-14);
        assert!(hermite_integral(13, 0, 0).is_err());
        assert!(hermite_integral(0, 61, 0).is_err());
        for p in 0..=2 {
            for n in 0..12 {
                for m in 0..12 {
                    let r = hermite_integral(p, n, m).unwrap();
                    let cf = hermite_integral_closed_form(p, n, m).unwrap();
                    assert!((r - cf).abs() <= 1e-12 * cf.abs().max(1.0), "I_{p}^({n},{m})");
                }
            }
        }
        assert!(hermite_integral_closed_form(3, 0, 0).is_none());
    }
}
