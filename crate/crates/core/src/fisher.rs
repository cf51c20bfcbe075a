//! Classical Fisher information and its generalization to outcome measures
//! that depend on the parameter.
//!
//! With a λ-dependent measure m_λ the score is ∂_λ ln(m_λ p_λ), and the
//! information splits as
//!
//! ```text
//! F = E[(∂ ln p)²] + E[(∂ ln m)²] + 2 E[∂ ln p · ∂ ln m]
//! ```
//!
//! [`generalized_fi`] reports each term and cross-checks the total against the
//! squared score of the product m_λ p_λ differentiated directly.

use serde::{Deserialize, Serialize};

use crate::numcore::{check_normalized, OutcomeSpace, ParametricFamily, SampleMeasure};
use crate::{Error, Result};

/// Nodes where m·p falls below this contribute nothing.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

/// A derivative larger than this at a floored node is a support shift.
pub const SINGULAR_DERIVATIVE: f64 = 1e-12;

/// Agreement required between the split and direct totals, relative to the
/// larger of the total and its square root.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// A statistical model: densities p_λ on an outcome space, normalized with
/// respect to the measure m_λ.
#[derive(Debug, Clone)]
pub struct ClassicalModel {
    pub space: OutcomeSpace,
    pub p: ParametricFamily<Vec<f64>>,
    pub measure: SampleMeasure,
}

impl ClassicalModel {
    pub fn new(space: OutcomeSpace, p: ParametricFamily<Vec<f64>>, measure: SampleMeasure) -> Self {
        Self { space, p, measure }
    }

    /// Model with the counting/Lebesgue measure (m ≡ 1).
    pub fn with_uniform_measure(space: OutcomeSpace, p: ParametricFamily<Vec<f64>>) -> Self {
        Self::new(space, p, SampleMeasure::uniform())
    }

    fn density(&self, lambda: f64) -> Result<Vec<f64>> {
        let p = self.p.value(lambda);
        if p.len() != self.space.len() {
            return Err(Error::Dimension(format!("density has {} values for {} nodes", p.len(), self.space.len())));
        }
        if let Some(i) = p.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(format!("density value {} at x = {} is not a probability", p[i], self.space.nodes()[i])));
        }
        Ok(p)
    }

    fn check_normalized_at(&self, lambda: f64) -> Result<()> {
        let p = self.density(lambda)?;
        let m = self.measure.values(&self.space, lambda)?;
        check_normalized(&self.space, &p, &m)
    }

    /// E_λ[f] under the joint density m_λ p_λ.
    pub fn expectation(&self, lambda: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
        let p = self.density(lambda)?;
        let m = self.measure.values(&self.space, lambda)?;
        crate::numcore::expectation(&self.space, &p, &m, f)
    }

    /// E_λ[∂_λ ln(m_λ p_λ)], which vanishes for a normalized model.
    pub fn mean_score(&self, lambda: f64) -> Result<f64> {
        let p = self.density(lambda)?;
        let dp = self.p.derivative(lambda)?;
        let m = self.measure.values(&self.space, lambda)?;
        let dm = self.measure.derivative_values(&self.space, lambda);
        check_normalized(&self.space, &p, &m)?;
        let vals: Vec<f64> = (0..p.len()).map(|i| dm[i] * p[i] + m[i] * dp[i]).collect();
        Ok(self.space.integrate_samples(&vals)?.value)
    }
}

/// Total Fisher information with its decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherReport {
    pub total: f64,
    pub term_state: f64,
    pub term_measure: f64,
    pub term_cross: f64,
    pub error_estimate: f64,
}

/// F(λ) = ∫ dν (∂_λ p_λ)² / p_λ for a model whose measure does not depend on λ.
pub fn classical_fi(model: &ClassicalModel, lambda: f64) -> Result<f64> {
    if !model.measure.is_lambda_independent(&model.space, lambda) {
        return Err(Error::InvalidInput(
            "measure depends on the parameter; use generalized_fi".into(),
        ));
    }
    let p = model.density(lambda)?;
    let dp = model.p.derivative(lambda)?;
    let m = model.measure.values(&model.space, lambda)?;
    let nodes = model.space.nodes();
    let mut integrand = vec![0.0; p.len()];
    for i in 0..p.len() {
        if m[i] * p[i] < PROBABILITY_FLOOR {
            if (m[i] * dp[i]).abs() > SINGULAR_DERIVATIVE {
                return Err(Error::SingularSupport { x: nodes[i], derivative: dp[i] });
            }
            continue;
        }
        integrand[i] = m[i] * dp[i] * dp[i] / p[i];
    }
    Ok(model.space.integrate_samples(&integrand)?.value)
}

/// ‖∂_λ ln m_λ p_λ‖² with the state, measure and cross contributions.
pub fn generalized_fi(model: &ClassicalModel, lambda: f64) -> Result<FisherReport> {
    let space = &model.space;
    let nodes = space.nodes();
    let [lo, _, hi] = model.p.stencil(lambda)?;
    for l in [lambda, lo, hi] {
        model.check_normalized_at(l)?;
    }

    let p = model.density(lambda)?;
    let dp = model.p.derivative(lambda)?;
    let m = model.measure.values(space, lambda)?;
    let dm = model.measure.derivative_values(space, lambda);
    let dq = joint_derivative(model, lambda)?;

    let n = p.len();
    let mut state = vec![0.0; n];
    let mut measure = vec![0.0; n];
    let mut cross = vec![0.0; n];
    let mut direct = vec![0.0; n];
    for i in 0..n {
        if m[i] == 0.0 && p[i] > PROBABILITY_FLOOR {
            return Err(Error::MeasureSupportMismatch { x: nodes[i], p: p[i] });
        }
        let q = m[i] * p[i];
        if q < PROBABILITY_FLOOR {
            let d = dm[i] * p[i] + m[i] * dp[i];
            if d.abs() > SINGULAR_DERIVATIVE {
                return Err(Error::SingularSupport { x: nodes[i], derivative: d });
            }
            continue;
        }
        let score_p = dp[i] / p[i];
        let score_m = dm[i] / m[i];
        state[i] = q * score_p * score_p;
        measure[i] = q * score_m * score_m;
        cross[i] = 2.0 * q * score_p * score_m;
        direct[i] = dq[i] * dq[i] / q;
    }

    let state = space.integrate_samples(&state)?;
    let measure = space.integrate_samples(&measure)?;
    let cross = space.integrate_samples(&cross)?;
    let direct = space.integrate_samples(&direct)?;

    let total = state.value + measure.value + cross.value;
    let mismatch = (direct.value - total).abs();
    let scale = state.value.abs() + measure.value.abs() + cross.value.abs();
    // difference noise in the scores is absolute, so it enters through √scale
    if mismatch > CONSISTENCY_TOL * (scale + scale.sqrt()) + 1e-14 {
        return Err(Error::Inconsistent(format!(
            "split Fisher information {total} disagrees with direct ‖∂ ln mp‖² = {}",
            direct.value
        )));
    }
    Ok(FisherReport {
        total,
        term_state: state.value,
        term_measure: measure.value,
        term_cross: cross.value,
        error_estimate: mismatch + state.error_estimate + measure.error_estimate + cross.error_estimate,
    })
}

// ∂_λ(m_λ p_λ) by differencing the product as a single function, independent
// of how ∂p and ∂m were obtained.
fn joint_derivative(model: &ClassicalModel, lambda: f64) -> Result<Vec<f64>> {
    let [lo, _, hi] = model.p.stencil(lambda)?;
    let h = hi - lambda;
    let p_hi = model.density(hi)?;
    let p_lo = model.density(lo)?;
    let m_hi = model.measure.values(&model.space, hi)?;
    let m_lo = model.measure.values(&model.space, lo)?;
    Ok((0..p_hi.len()).map(|i| (m_hi[i] * p_hi[i] - m_lo[i] * p_lo[i]) / (2.0 * h)).collect())
}

/// Cramér–Rao variance bound 1 / (n F) for `n` independent repetitions.
pub fn crb_variance_bound(report: &FisherReport, n: u64) -> Result<f64> {
    crb_from_information(report.total, n)
}

/// 1 / (n F) from a bare information value.
pub fn crb_from_information(information: f64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("repetitions must be positive".into()));
    }
    if information.is_nan() || information <= 0.0 {
        return Err(Error::NoInformation(information));
    }
    Ok(1.0 / (n as f64 * information))
}
