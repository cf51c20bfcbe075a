//! Outcome spaces, quadrature and sample-space measures.

use std::fmt;
use std::sync::Arc;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use super::family::DEFAULT_FD_STEP;
use crate::{Error, Result};

/// Normalization tolerance for ∫ m p.
pub const NORMALIZATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureRule {
    Trapezoid,
    GaussLegendre,
}

/// Result of a quadrature: the value and an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Discrete,
    Continuous { lo: f64, hi: f64, rule: QuadratureRule },
}

/// The sample space: a finite label set (counting measure) or a gridded
/// interval (Lebesgue measure with a quadrature rule).
///
/// Discrete labels double as the node coordinates handed to integrands, so
/// they are numeric (quantum numbers, outcome codes).
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeSpace {
    kind: Kind,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    // nested rule used for error estimates over already-sampled integrands
    coarse: Vec<(usize, f64)>,
}

impl OutcomeSpace {
    pub fn discrete(labels: Vec<f64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidInput("discrete outcome space needs at least one label".into()));
        }
        let mut sorted = labels.clone();
        if sorted.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidInput("outcome labels must be finite".into()));
        }
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("duplicate outcome labels".into()));
        }
        let n = labels.len();
        Ok(Self { kind: Kind::Discrete, nodes: labels, weights: vec![1.0; n], coarse: Vec::new() })
    }

    /// Outcomes labelled `0, 1, …, n − 1`.
    pub fn counting(n: usize) -> Result<Self> {
        Self::discrete((0..n).map(|k| k as f64).collect())
    }

    pub fn continuous(lo: f64, hi: f64, points: usize, rule: QuadratureRule) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInput(format!("continuous space needs lo < hi, got [{lo}, {hi}]")));
        }
        if points < 3 {
            return Err(Error::InvalidInput(format!("grid_points must be ≥ 3, got {points}")));
        }
        let (nodes, weights) = match rule {
            QuadratureRule::Trapezoid => {
                let h = (hi - lo) / (points - 1) as f64;
                let nodes: Vec<f64> = (0..points).map(|i| lo + h * i as f64).collect();
                let mut weights = vec![h; points];
                weights[0] = 0.5 * h;
                weights[points - 1] = 0.5 * h;
                (nodes, weights)
            }
            QuadratureRule::GaussLegendre => {
                let gl = GaussLegendre::new(points).map_err(|e| Error::InvalidInput(e.to_string()))?;
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                let mut pairs: Vec<(f64, f64)> = gl.iter().map(|(x, w)| (mid + half * x, half * w)).collect();
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                pairs.into_iter().unzip()
            }
        };
        let coarse = match rule {
            // every other node, keeping the right endpoint
            QuadratureRule::Trapezoid => {
                let mut idx: Vec<usize> = (0..points).step_by(2).collect();
                if *idx.last().unwrap() != points - 1 {
                    idx.push(points - 1);
                }
                trapezoid_weights(&nodes, &idx)
            }
            // trapezoid on the Gauss nodes themselves: a deliberately pessimistic comparison
            QuadratureRule::GaussLegendre => trapezoid_weights(&nodes, &(0..points).collect::<Vec<_>>()),
        };
        Ok(Self { kind: Kind::Continuous { lo, hi, rule }, nodes, weights, coarse })
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.kind, Kind::Discrete)
    }

    /// Interval and rule of a continuous space.
    pub fn interval(&self) -> Option<(f64, f64, QuadratureRule)> {
        match self.kind {
            Kind::Continuous { lo, hi, rule } => Some((lo, hi, rule)),
            Kind::Discrete => None,
        }
    }

    /// Node coordinates (labels for discrete spaces).
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights (all ones for discrete spaces).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates an integrand already sampled at the nodes.
    pub fn integrate_samples(&self, values: &[f64]) -> Result<Integral> {
        if values.len() != self.nodes.len() {
            return Err(Error::Dimension(format!("{} samples for {} nodes", values.len(), self.nodes.len())));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteIntegrand { index, x: self.nodes[index] });
        }
        let value: f64 = values.iter().zip(&self.weights).map(|(v, w)| v * w).sum();
        let error_estimate = if self.coarse.is_empty() {
            0.0
        } else {
            let coarse: f64 = self.coarse.iter().map(|&(i, w)| values[i] * w).sum();
            (value - coarse).abs()
        };
        Ok(Integral { value, error_estimate })
    }

    /// Sums (discrete) or integrates (continuous) `f` over the space.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> Result<Integral> {
        let values: Vec<f64> = self.nodes.iter().map(|&x| f(x)).collect();
        self.integrate_samples(&values)
    }
}

fn trapezoid_weights(nodes: &[f64], idx: &[usize]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = idx.iter().map(|&i| (i, 0.0)).collect();
    for k in 0..idx.len() - 1 {
        let h = nodes[idx[k + 1]] - nodes[idx[k]];
        out[k].1 += 0.5 * h;
        out[k + 1].1 += 0.5 * h;
    }
    out
}

/// Sums or integrates `f` over `space`.
pub fn integrate(space: &OutcomeSpace, f: impl Fn(f64) -> f64) -> Result<Integral> {
    space.integrate(f)
}

/// E[f] = ∫ dx m(x) p(x) f(x) for a density `p` and measure `m` sampled at
/// the nodes of `space`.
pub fn expectation(space: &OutcomeSpace, p: &[f64], m: &[f64], f: impl Fn(f64) -> f64) -> Result<f64> {
    if p.len() != space.len() || m.len() != space.len() {
        return Err(Error::Dimension("density or measure does not match the outcome space".into()));
    }
    check_normalized(space, p, m)?;
    let values: Vec<f64> = space
        .nodes()
        .iter()
        .zip(p.iter().zip(m))
        .map(|(&x, (&pi, &mi))| if pi * mi == 0.0 { 0.0 } else { mi * pi * f(x) })
        .collect();
    Ok(space.integrate_samples(&values)?.value)
}

pub(crate) fn check_normalized(space: &OutcomeSpace, p: &[f64], m: &[f64]) -> Result<()> {
    let joint: Vec<f64> = p.iter().zip(m).map(|(a, b)| a * b).collect();
    let total = space.integrate_samples(&joint)?.value;
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { integral: total });
    }
    Ok(())
}

type MeasureFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// The density m_λ(x) of the outcome measure with respect to the counting or
/// Lebesgue measure.
///
/// A measure is λ-independent when it was built with [`SampleMeasure::constant`]
/// or when its derivative vanishes on every node.
#[derive(Clone)]
pub struct SampleMeasure {
    density: MeasureFn,
    derivative: Option<MeasureFn>,
    constant: bool,
    fd_step: f64,
}

impl fmt::Debug for SampleMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampleMeasure")
            .field("constant", &self.constant)
            .field("analytic_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl SampleMeasure {
    /// m ≡ 1.
    pub fn uniform() -> Self {
        Self::constant(|_| 1.0)
    }

    /// A λ-independent density m(x).
    pub fn constant(density: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { density: Arc::new(move |_, x| density(x)), derivative: None, constant: true, fd_step: DEFAULT_FD_STEP }
    }

    /// A λ-dependent density m_λ(x); ∂_λ m is taken by central differences
    /// unless [`with_derivative`](Self::with_derivative) supplies it.
    pub fn parametric(density: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { density: Arc::new(density), derivative: None, constant: false, fd_step: DEFAULT_FD_STEP }
    }

    pub fn with_derivative(mut self, derivative: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(derivative));
        self.constant = false;
        self
    }

    pub fn with_fd_step(mut self, step: f64) -> Self {
        assert!(step > 0.0 && step.is_finite(), "fd_step must be positive");
        self.fd_step = step;
        self
    }

    pub fn density(&self, lambda: f64, x: f64) -> f64 {
        (self.density)(lambda, x)
    }

    pub fn step(&self, lambda: f64) -> f64 {
        self.fd_step * lambda.abs().max(1.0)
    }

    /// m_λ at every node; errors if any value is negative or non-finite.
    pub fn values(&self, space: &OutcomeSpace, lambda: f64) -> Result<Vec<f64>> {
        space
            .nodes()
            .iter()
            .map(|&x| {
                let m = self.density(lambda, x);
                if !m.is_finite() || m < 0.0 {
                    Err(Error::InvalidInput(format!("measure density {m} at x = {x} is not a non-negative number")))
                } else {
                    Ok(m)
                }
            })
            .collect()
    }

    /// ∂_λ m_λ at every node.
    pub fn derivative_values(&self, space: &OutcomeSpace, lambda: f64) -> Vec<f64> {
        if self.constant {
            return vec![0.0; space.len()];
        }
        match &self.derivative {
            Some(d) => space.nodes().iter().map(|&x| d(lambda, x)).collect(),
            None => {
                let h = self.step(lambda);
                space
                    .nodes()
                    .iter()
                    .map(|&x| (self.density(lambda + h, x) - self.density(lambda - h, x)) / (2.0 * h))
                    .collect()
            }
        }
    }

    pub fn is_lambda_independent(&self, space: &OutcomeSpace, lambda: f64) -> bool {
        self.constant || self.derivative_values(space, lambda).iter().all(|d| *d == 0.0)
    }
}
