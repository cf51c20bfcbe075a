//! Quantum Fisher information and the Fisher information of measurements
//! that depend on the parameter.
//!
//! For a POVM Π_λ the Fisher information expands into three pieces,
//!
//! ```text
//! F = ∫dν [tr(Π ∂ρ)]²/tr(Πρ) + ∫dν [tr(∂Π ρ)]²/tr(Πρ) + 2∫dν tr(Π ∂ρ) tr(∂Π ρ)/tr(Πρ)
//! ```
//!
//! Only the first is bounded by the quantum Fisher information J. For
//! projective measurements the remaining two are controlled by 𝒦_X, giving
//! F ≤ (√J + √𝒦_X)². For a λ-dependent sample-space measure with a fixed
//! POVM, the cross term vanishes and F ≤ J + ℐ_m.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::fisher::{generalized_fi, ClassicalModel, PROBABILITY_FLOOR, SINGULAR_DERIVATIVE};
use crate::numcore::{
    frobenius, hermitian_eigen, inner, outer, trace_product, DensityOperator, HermitianOperator, OutcomeSpace,
    ParametricFamily, SampleMeasure,
};
use crate::{Error, Result, C64};

/// λ ↦ ρ_λ as a raw matrix; validated as a density operator on use.
pub type DensityFamily = ParametricFamily<DMatrix<C64>>;

/// λ ↦ |ψ_λ⟩ as a raw amplitude vector.
pub type StateFamily = ParametricFamily<DVector<C64>>;

/// Completeness tolerance for ∫ m Π = 𝕀.
pub const COMPLETENESS_TOL: f64 = 1e-8;

/// Orthonormality tolerance for projective families.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

/// Minimum eigenvalue gap along the difference stencil.
pub const MIN_GAP: f64 = 1e-8;

/// Relative agreement between the quantum expansion and the classical
/// Fisher information of the induced outcome distribution.
pub const CROSS_CHECK_TOL: f64 = 1e-7;

/// Quantum Fisher information report.
///
/// `term_measure` is ℐ_m for λ-dependent sample-space measures and zero
/// otherwise; `term_povm` is the ∂Π contribution and zero for fixed POVMs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumFisherReport {
    pub total: f64,
    pub term_state: f64,
    pub term_measure: f64,
    pub term_povm: f64,
    pub term_cross: f64,
    pub error_estimate: f64,
}

fn density_at(rho: &DensityFamily, lambda: f64) -> Result<DensityOperator> {
    DensityOperator::new("rho", rho.value(lambda))
}

fn rank_tolerance(d_rho: &DMatrix<C64>) -> f64 {
    1e-7 * frobenius(d_rho).max(1.0)
}

/// Symmetric logarithmic derivative L with ∂ρ = (ρL + Lρ)/2, built in the
/// eigenbasis of ρ as L_ij = 2⟨i|∂ρ|j⟩/(p_i + p_j).
pub fn sld(rho: &DensityFamily, lambda: f64) -> Result<HermitianOperator> {
    let r = density_at(rho, lambda)?;
    let d = rho.derivative(lambda)?;
    if d.shape() != r.matrix().shape() {
        return Err(Error::Dimension("∂ρ and ρ differ in shape".into()));
    }
    let (p, v) = r.eigen();
    let dd = v.adjoint() * &d * &v;
    let n = p.len();
    let tol = rank_tolerance(&d);
    let mut l = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let s = p[i] + p[j];
            if s > 1e-12 {
                l[(i, j)] = dd[(i, j)] * (2.0 / s);
            } else if dd[(i, j)].norm() > tol {
                return Err(Error::RankChanging(dd[(i, j)].norm()));
            }
        }
    }
    let l = &v * l * v.adjoint();
    let l = (&l + l.adjoint()).map(|z| z * 0.5);
    HermitianOperator::new("sld", l)
}

/// ‖∂ρ − (ρL + Lρ)/2‖_F for a candidate SLD.
pub fn sld_residual(rho: &DensityFamily, l: &HermitianOperator, lambda: f64) -> Result<f64> {
    let r = rho.value(lambda);
    let d = rho.derivative(lambda)?;
    let sym = (&r * l.matrix() + l.matrix() * &r).map(|z| z * 0.5);
    Ok(frobenius(&(d - sym)))
}

/// J(λ) = tr(ρ L²).
pub fn qfi(rho: &DensityFamily, lambda: f64) -> Result<f64> {
    let l = sld(rho, lambda)?;
    let r = rho.value(lambda);
    let l2 = l.matrix() * l.matrix();
    Ok(trace_product(&r, &l2).re.max(0.0))
}

/// J = 4(⟨∂ψ|∂ψ⟩ − |⟨ψ|∂ψ⟩|²) for a pure-state family.
pub fn qfi_pure(psi: &StateFamily, lambda: f64) -> Result<f64> {
    let [lo, _, hi] = psi.stencil(lambda)?;
    let v = psi.value(lambda);
    let n0 = v.norm_squared();
    if (n0 - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalizedState(n0));
    }
    let drift = [lo, hi].iter().map(|&l| (psi.value(l).norm_squared() - n0).abs()).fold(0.0, f64::max);
    if drift > 1e-8 {
        return Err(Error::NormDrift(drift));
    }
    let d = psi.derivative(lambda)?;
    let j = 4.0 * (d.norm_squared() - inner(&v, &d).norm_sqr());
    Ok(j.max(0.0))
}

/// A measurement whose elements may depend on λ, on an outcome space with
/// sample-space measure m.
#[derive(Debug, Clone)]
pub struct PovmFamily {
    pub space: OutcomeSpace,
    pub elements: ParametricFamily<Vec<DMatrix<C64>>>,
    pub measure: SampleMeasure,
}

impl PovmFamily {
    pub fn new(space: OutcomeSpace, elements: ParametricFamily<Vec<DMatrix<C64>>>, measure: SampleMeasure) -> Self {
        Self { space, elements, measure }
    }

    /// A λ-independent POVM.
    pub fn fixed(space: OutcomeSpace, elements: Vec<HermitianOperator>, measure: SampleMeasure) -> Self {
        let mats: Vec<DMatrix<C64>> = elements.into_iter().map(HermitianOperator::into_matrix).collect();
        let elements = ParametricFamily::new(move |_| mats.clone()).with_derivative({
            let zero: Vec<DMatrix<C64>> = Vec::new();
            move |_| zero.clone()
        });
        Self { space, elements, measure }
    }

    fn elements_at(&self, lambda: f64) -> Result<Vec<DMatrix<C64>>> {
        let e = self.elements.value(lambda);
        if e.len() != self.space.len() {
            return Err(Error::InvalidPovm(format!("{} elements for {} outcomes", e.len(), self.space.len())));
        }
        Ok(e)
    }

    fn derivative_at(&self, lambda: f64, dim: usize) -> Result<Vec<DMatrix<C64>>> {
        let d = self.elements.derivative(lambda)?;
        if d.is_empty() {
            return Ok(vec![DMatrix::zeros(dim, dim); self.space.len()]);
        }
        Ok(d)
    }

    /// Checks positivity of every element and ∫ m_λ Π_λ = 𝕀 at `lambda`.
    pub fn check_completeness(&self, lambda: f64) -> Result<()> {
        let elems = self.elements_at(lambda)?;
        let m = self.measure.values(&self.space, lambda)?;
        check_complete(&self.space, &elems, &m)
    }
}

fn check_complete(space: &OutcomeSpace, elems: &[DMatrix<C64>], m: &[f64]) -> Result<()> {
    let dim = elems.first().map(|e| e.nrows()).unwrap_or(0);
    let mut sum = DMatrix::<C64>::zeros(dim, dim);
    for ((e, &w), &mi) in elems.iter().zip(space.weights()).zip(m) {
        if e.shape() != (dim, dim) {
            return Err(Error::InvalidPovm("elements differ in shape".into()));
        }
        let scale = frobenius(e).max(1.0);
        let herm = HermitianOperator::new("povm", e.clone()).map_err(|err| Error::InvalidPovm(err.to_string()))?;
        let min = herm.min_eigenvalue();
        if min < -1e-10 * scale {
            return Err(Error::InvalidPovm(format!("element not positive (min eigenvalue {min:e})")));
        }
        sum += e.map(|z| z * (w * mi));
    }
    let dev = (sum - DMatrix::<C64>::identity(dim, dim)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > COMPLETENESS_TOL {
        return Err(Error::InvalidPovm(format!("completeness violated by {dev:e}")));
    }
    Ok(())
}

// Outcome distribution p(x|λ) = tr(Π_λ(x) ρ_λ) as a classical family with no
// analytic derivative: the independent route for cross-checks.
fn induced_family(
    rho: &DensityFamily,
    elements: &ParametricFamily<Vec<DMatrix<C64>>>,
) -> ParametricFamily<Vec<f64>> {
    let rho = rho.clone();
    let elements = elements.clone();
    let step = rho.fd_step();
    let (lo, hi) = rho.domain();
    ParametricFamily::new(move |l| {
        let r = rho.value(l);
        elements.value(l).iter().map(|e| trace_product(e, &r).re.max(0.0)).collect::<Vec<_>>()
    })
    .with_fd_step(step)
    .with_domain(lo, hi)
}

fn cross_check(reference: f64, total: f64, scale: f64) -> Result<f64> {
    let mismatch = (reference - total).abs();
    let s = scale.max(reference.abs());
    if mismatch > CROSS_CHECK_TOL * (s + s.sqrt()) + 1e-12 {
        return Err(Error::Inconsistent(format!(
            "quantum expansion gives {total}, induced distribution gives {reference}"
        )));
    }
    Ok(mismatch)
}

/// Fisher information of a (possibly λ-dependent) POVM, split into the
/// state, POVM and cross terms.
///
/// The measure must not depend on λ; use [`measure_fi_quantum`] for that case.
pub fn povm_fi(rho: &DensityFamily, povm: &PovmFamily, lambda: f64) -> Result<QuantumFisherReport> {
    let space = &povm.space;
    if !povm.measure.is_lambda_independent(space, lambda) {
        return Err(Error::InvalidInput(
            "sample-space measure depends on the parameter; use measure_fi_quantum".into(),
        ));
    }
    let [lo, _, hi] = povm.elements.stencil(lambda)?;
    for l in [lo, lambda, hi] {
        povm.check_completeness(l)?;
    }
    let r = density_at(rho, lambda)?;
    let dr = rho.derivative(lambda)?;
    let elems = povm.elements_at(lambda)?;
    if elems[0].shape() != r.matrix().shape() {
        return Err(Error::Dimension("POVM and state live in different spaces".into()));
    }
    let delems = povm.derivative_at(lambda, r.dim())?;
    let m = povm.measure.values(space, lambda)?;
    let nodes = space.nodes();

    let n = space.len();
    let (mut state, mut pterm, mut cross) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let p = trace_product(&elems[i], r.matrix()).re;
        let a = trace_product(&elems[i], &dr).re;
        let b = trace_product(&delems[i], r.matrix()).re;
        if m[i] * p < PROBABILITY_FLOOR {
            if (m[i] * (a + b)).abs() > SINGULAR_DERIVATIVE {
                return Err(Error::SingularSupport { x: nodes[i], derivative: a + b });
            }
            continue;
        }
        state[i] = m[i] * a * a / p;
        pterm[i] = m[i] * b * b / p;
        cross[i] = 2.0 * m[i] * a * b / p;
    }
    let state = space.integrate_samples(&state)?;
    let pterm = space.integrate_samples(&pterm)?;
    let cross = space.integrate_samples(&cross)?;
    let total = state.value + pterm.value + cross.value;

    let model = ClassicalModel::new(space.clone(), induced_family(rho, &povm.elements), povm.measure.clone());
    let reference = generalized_fi(&model, lambda)?;
    let scale = state.value.abs() + pterm.value.abs() + cross.value.abs();
    let mismatch = cross_check(reference.total, total, scale)?;

    Ok(QuantumFisherReport {
        total,
        term_state: state.value,
        term_measure: 0.0,
        term_povm: pterm.value,
        term_cross: cross.value,
        error_estimate: mismatch + state.error_estimate + pterm.error_estimate + cross.error_estimate,
    })
}

/// Fisher information of a fixed POVM read out against a λ-dependent
/// sample-space measure m_λ with ∫ m_λ Π = 𝕀.
///
/// `term_measure` is ℐ_m = ∫ m tr(Πρ) (∂ ln m)². The cross term must vanish
/// and an error is raised if it does not.
pub fn measure_fi_quantum(
    rho: &DensityFamily,
    space: &OutcomeSpace,
    elements: &[HermitianOperator],
    measure: &SampleMeasure,
    lambda: f64,
) -> Result<QuantumFisherReport> {
    if elements.len() != space.len() {
        return Err(Error::InvalidPovm(format!("{} elements for {} outcomes", elements.len(), space.len())));
    }
    let mats: Vec<DMatrix<C64>> = elements.iter().map(|e| e.matrix().clone()).collect();
    let h = measure.step(lambda);
    for l in [lambda - h, lambda, lambda + h] {
        let m = measure.values(space, l)?;
        check_complete(space, &mats, &m)?;
    }
    let r = density_at(rho, lambda)?;
    if mats[0].shape() != r.matrix().shape() {
        return Err(Error::Dimension("POVM and state live in different spaces".into()));
    }
    let dr = rho.derivative(lambda)?;
    let m = measure.values(space, lambda)?;
    let dm = measure.derivative_values(space, lambda);
    let nodes = space.nodes();

    let n = space.len();
    let (mut state, mut meas, mut cross) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let p = trace_product(&mats[i], r.matrix()).re;
        let a = trace_product(&mats[i], &dr).re;
        if m[i] == 0.0 && p > PROBABILITY_FLOOR && dm[i] != 0.0 {
            return Err(Error::MeasureSupportMismatch { x: nodes[i], p });
        }
        if m[i] * p < PROBABILITY_FLOOR {
            let d = dm[i] * p + m[i] * a;
            if d.abs() > SINGULAR_DERIVATIVE {
                return Err(Error::SingularSupport { x: nodes[i], derivative: d });
            }
            continue;
        }
        state[i] = m[i] * a * a / p;
        meas[i] = dm[i] * dm[i] * p / m[i];
        cross[i] = 2.0 * dm[i] * a;
    }
    let state = space.integrate_samples(&state)?;
    let meas = space.integrate_samples(&meas)?;
    let cross = space.integrate_samples(&cross)?;
    let total = state.value + meas.value + cross.value;
    if cross.value.abs() > 1e-8 * total.abs().max(1.0) {
        return Err(Error::InvalidPovm(format!(
            "cross term {:e} does not vanish: λ-dependent completeness violated",
            cross.value
        )));
    }

    let fixed = ParametricFamily::new(move |_| mats.clone());
    let model = ClassicalModel::new(space.clone(), induced_family(rho, &fixed), measure.clone());
    let reference = generalized_fi(&model, lambda)?;
    let scale = state.value.abs() + meas.value.abs() + cross.value.abs();
    let mismatch = cross_check(reference.total, total, scale)?;

    Ok(QuantumFisherReport {
        total,
        term_state: state.value,
        term_measure: meas.value,
        term_povm: 0.0,
        term_cross: cross.value,
        error_estimate: mismatch + state.error_estimate + meas.error_estimate + cross.error_estimate,
    })
}

/// Eigenbasis of a λ-dependent observable, one vector per outcome label.
#[derive(Debug, Clone)]
pub struct ProjectiveFamily {
    labels: Vec<f64>,
    eigenbasis: ParametricFamily<Vec<DVector<C64>>>,
    eigenvalues: Option<ParametricFamily<Vec<f64>>>,
    truncated: bool,
}

impl ProjectiveFamily {
    pub fn new(labels: Vec<f64>, eigenbasis: ParametricFamily<Vec<DVector<C64>>>) -> Result<Self> {
        OutcomeSpace::discrete(labels.clone())?;
        Ok(Self { labels, eigenbasis, eigenvalues: None, truncated: false })
    }

    /// Marks the basis as a finite section of an infinite one, so that 𝒦_X
    /// checks the convergence of its truncated sum.
    pub fn truncated(mut self) -> Self {
        self.truncated = true;
        self
    }

    /// Attaches the spectrum so near-degeneracies can be rejected.
    pub fn with_eigenvalues(mut self, eigenvalues: ParametricFamily<Vec<f64>>) -> Self {
        self.eigenvalues = Some(eigenvalues);
        self
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn basis(&self, lambda: f64) -> Result<Vec<DVector<C64>>> {
        let b = self.eigenbasis.value(lambda);
        if b.len() != self.labels.len() {
            return Err(Error::Dimension(format!("{} eigenvectors for {} labels", b.len(), self.labels.len())));
        }
        let dev = orthonormality_deviation(&b);
        if dev > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal(dev));
        }
        Ok(b)
    }

    fn check_gaps(&self, lambda: f64) -> Result<()> {
        let Some(ev) = &self.eigenvalues else { return Ok(()) };
        let [lo, _, hi] = self.eigenbasis.stencil(lambda)?;
        for l in [lo, lambda, hi] {
            let mut vals = ev.value(l);
            vals.sort_by(f64::total_cmp);
            let gap = vals.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            if gap < MIN_GAP {
                return Err(Error::Degenerate(gap));
            }
        }
        Ok(())
    }

    /// Tangent vectors |∂_λ x⟩: analytic when available, otherwise central
    /// differences with each vector at λ ± h re-phased so that ⟨x(λ)|x(λ ± h)⟩
    /// is real and positive.
    pub fn tangents(&self, lambda: f64) -> Result<Vec<DVector<C64>>> {
        self.check_gaps(lambda)?;
        let base = self.basis(lambda)?;
        if self.eigenbasis.has_analytic_derivative() {
            return self.eigenbasis.derivative(lambda);
        }
        let [lo, _, hi] = self.eigenbasis.stencil(lambda)?;
        let h = hi - lambda;
        let align = |mut vs: Vec<DVector<C64>>| {
            for (v, b) in vs.iter_mut().zip(&base) {
                let ov = inner(b, v);
                if ov.norm() > 0.0 {
                    let phase = ov.conj() / ov.norm();
                    *v = v.map(|z| z * phase);
                }
            }
            vs
        };
        let plus = align(self.basis(hi)?);
        let minus = align(self.basis(lo)?);
        Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m).map(|z| z / (2.0 * h))).collect())
    }

    /// Projectors |x⟩⟨x| as a POVM on the counting measure. With
    /// `with_remainder`, 𝕀 − Σ|x⟩⟨x| is appended as one extra outcome so a
    /// truncated eigenbasis still resolves the identity.
    pub fn projector_povm(&self, with_remainder: bool) -> Result<PovmFamily> {
        let mut labels = self.labels.clone();
        if with_remainder {
            let next = labels.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
            labels.push(next);
        }
        let space = OutcomeSpace::discrete(labels)?;
        let basis = self.eigenbasis.clone();
        let elements = ParametricFamily::new(move |l| {
            let vs = basis.value(l);
            let mut out: Vec<DMatrix<C64>> = vs.iter().map(|v| outer(v, v)).collect();
            if with_remainder {
                let dim = vs.first().map(|v| v.len()).unwrap_or(0);
                let mut rest = DMatrix::<C64>::identity(dim, dim);
                for p in &out {
                    rest -= p;
                }
                out.push(rest);
            }
            out
        })
        .with_fd_step(self.eigenbasis.fd_step());
        let elements = if self.eigenbasis.has_analytic_derivative() {
            let basis = self.eigenbasis.clone();
            elements.with_derivative(move |l| {
                let vs = basis.value(l);
                let ts = basis.derivative(l).expect("analytic tangents");
                let mut out: Vec<DMatrix<C64>> = vs.iter().zip(&ts).map(|(v, t)| outer(t, v) + outer(v, t)).collect();
                if with_remainder {
                    let dim = vs.first().map(|v| v.len()).unwrap_or(0);
                    let mut rest = DMatrix::<C64>::zeros(dim, dim);
                    for p in &out {
                        rest -= p;
                    }
                    out.push(rest);
                }
                out
            })
        } else {
            elements
        };
        let (lo, hi) = self.eigenbasis.domain();
        let elements = if lo.is_finite() || hi.is_finite() { elements.with_domain(lo, hi) } else { elements };
        Ok(PovmFamily::new(space, elements, SampleMeasure::uniform()))
    }
}

fn orthonormality_deviation(vs: &[DVector<C64>]) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..vs.len() {
        for j in i..vs.len() {
            let g = inner(&vs[i], &vs[j]);
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g - C64::new(target, 0.0)).norm());
        }
    }
    dev
}

/// Relative size of the last term below which a truncated 𝒦_X sum counts as converged.
pub const KX_CONVERGENCE: f64 = 1e-10;

/// 𝒦_X = 4 Σ_x ⟨∂_λ x|ρ|∂_λ x⟩ over a discrete eigenbasis.
pub fn kx(proj: &ProjectiveFamily, rho: &DensityOperator, lambda: f64) -> Result<f64> {
    let tangents = proj.tangents(lambda)?;
    if tangents.first().map(|t| t.len()) != Some(rho.dim()) {
        return Err(Error::Dimension("eigenbasis and state live in different spaces".into()));
    }
    let terms: Vec<f64> = tangents.iter().map(|t| inner(t, &(rho.matrix() * t)).re).collect();
    let total: f64 = 4.0 * terms.iter().sum::<f64>();
    let last = 4.0 * terms.last().copied().unwrap_or(0.0);
    // a complete finite basis has no truncation to converge
    let truncated = proj.truncated || tangents.len() < rho.dim();
    if truncated && total > 0.0 && last > KX_CONVERGENCE * total {
        return Err(Error::IncreaseTruncation(format!(
            "last eigenvector contributes {last:e} of 𝒦_X = {total}"
        )));
    }
    Ok(total)
}

/// 4 Σ_x |⟨x|ρ|∂x⟩|² / ⟨x|ρ|x⟩, the intermediate bound on the POVM term that
/// sits below 𝒦_X.
pub fn povm_term_bound(proj: &ProjectiveFamily, rho: &DensityOperator, lambda: f64) -> Result<f64> {
    let base = proj.basis(lambda)?;
    let tangents = proj.tangents(lambda)?;
    let mut acc = 0.0;
    for (x, t) in base.iter().zip(&tangents) {
        let rx = rho.matrix() * x;
        let pop = inner(x, &rx).re;
        if pop < PROBABILITY_FLOOR {
            continue;
        }
        acc += inner(&rx, t).norm_sqr() / pop;
    }
    Ok(4.0 * acc)
}

/// (√J + √K)², the bound on the Fisher information of a λ-dependent
/// projective measurement.
pub fn projective_bound(j: f64, k: f64) -> Result<f64> {
    if !(j >= 0.0 && k >= 0.0) {
        return Err(Error::InvalidInput(format!("bound inputs must be non-negative, got J = {j}, K = {k}")));
    }
    Ok(j + k + 2.0 * (j * k).sqrt())
}

/// J + ℐ_m, the bound for a fixed POVM with a λ-dependent measure.
pub fn measure_bound(j: f64, im: f64) -> Result<f64> {
    if !(j >= 0.0 && im >= 0.0) {
        return Err(Error::InvalidInput(format!("bound inputs must be non-negative, got J = {j}, ℐ_m = {im}")));
    }
    Ok(j + im)
}

/// Eigenvalues and eigenvectors of a Hermitian matrix, ascending.
pub fn spectral_basis(h: &HermitianOperator) -> (Vec<f64>, Vec<DVector<C64>>) {
    let (vals, vecs) = hermitian_eigen(h.matrix());
    let cols = (0..vecs.ncols()).map(|c| vecs.column(c).into_owned()).collect();
    (vals, cols)
}
