//! Parametric families λ ↦ value with analytic or finite-difference derivatives.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, C64};

/// Default relative step for central differences.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Values that can be linearly combined, which is all a finite-difference
/// stencil needs.
pub trait Differentiable: Clone + Send + Sync {
    /// Returns `a * x + b * y`.
    fn combine(a: f64, x: &Self, b: f64, y: &Self) -> Self;
}

impl Differentiable for f64 {
    fn combine(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        a * x + b * y
    }
}

impl Differentiable for C64 {
    fn combine(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        x * a + y * b
    }
}

impl Differentiable for DVector<C64> {
    fn combine(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        x.map(|z| z * a) + y.map(|z| z * b)
    }
}

impl Differentiable for DMatrix<C64> {
    fn combine(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        x.map(|z| z * a) + y.map(|z| z * b)
    }
}

impl<T: Differentiable> Differentiable for Vec<T> {
    fn combine(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        assert_eq!(x.len(), y.len(), "family values changed length along the stencil");
        x.iter().zip(y).map(|(u, v)| T::combine(a, u, b, v)).collect()
    }
}

type Evaluator<T> = Arc<dyn Fn(f64) -> T + Send + Sync>;

/// A one-parameter family λ ↦ T.
///
/// The derivative is the analytic closure when one is attached, otherwise a
/// central difference with step `h = fd_step · max(1, |λ|)`.
#[derive(Clone)]
pub struct ParametricFamily<T> {
    eval: Evaluator<T>,
    derivative: Option<Evaluator<T>>,
    fd_step: f64,
    domain: (f64, f64),
}

impl<T> fmt::Debug for ParametricFamily<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricFamily")
            .field("analytic_derivative", &self.derivative.is_some())
            .field("fd_step", &self.fd_step)
            .field("domain", &self.domain)
            .finish()
    }
}

impl<T: Differentiable> ParametricFamily<T> {
    pub fn new(eval: impl Fn(f64) -> T + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(eval),
            derivative: None,
            fd_step: DEFAULT_FD_STEP,
            domain: (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn with_derivative(mut self, derivative: impl Fn(f64) -> T + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    /// Drops any analytic derivative so that differences are always used.
    pub fn without_derivative(mut self) -> Self {
        self.derivative = None;
        self
    }

    pub fn with_fd_step(mut self, step: f64) -> Self {
        assert!(step > 0.0 && step.is_finite(), "fd_step must be positive");
        self.fd_step = step;
        self
    }

    /// Restricts the admissible parameter range to the closed interval `[lo, hi]`.
    pub fn with_domain(mut self, lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "empty parameter domain");
        self.domain = (lo, hi);
        self
    }

    pub fn value(&self, lambda: f64) -> T {
        (self.eval)(lambda)
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// Absolute difference step used at `lambda`.
    pub fn step(&self, lambda: f64) -> f64 {
        self.fd_step * lambda.abs().max(1.0)
    }

    fn check_stencil(&self, lambda: f64, h: f64) -> Result<()> {
        let (lo, hi) = self.domain;
        if !lambda.is_finite() || lambda - h < lo || lambda + h > hi {
            return Err(Error::BoundaryDifference { lambda, step: h, lo, hi });
        }
        Ok(())
    }

    /// The three stencil points `[λ − h, λ, λ + h]`.
    pub fn stencil(&self, lambda: f64) -> Result<[f64; 3]> {
        let h = self.step(lambda);
        self.check_stencil(lambda, h)?;
        Ok([lambda - h, lambda, lambda + h])
    }

    /// Analytic derivative when available, central difference otherwise.
    pub fn derivative(&self, lambda: f64) -> Result<T> {
        match &self.derivative {
            Some(d) => {
                self.check_stencil(lambda, 0.0)?;
                Ok(d(lambda))
            }
            None => self.central_difference(lambda),
        }
    }

    /// Central difference, ignoring any analytic derivative.
    pub fn central_difference(&self, lambda: f64) -> Result<T> {
        self.central_difference_with(lambda, self.step(lambda))
    }

    fn central_difference_with(&self, lambda: f64, h: f64) -> Result<T> {
        self.check_stencil(lambda, h)?;
        let plus = self.value(lambda + h);
        let minus = self.value(lambda - h);
        let inv = 0.5 / h;
        Ok(T::combine(inv, &plus, -inv, &minus))
    }

    /// One Richardson step on the central difference: `(4 D(h/2) − D(h)) / 3`.
    pub fn richardson_derivative(&self, lambda: f64) -> Result<T> {
        let h = self.step(lambda);
        let coarse = self.central_difference_with(lambda, h)?;
        let fine = self.central_difference_with(lambda, 0.5 * h)?;
        Ok(T::combine(4.0 / 3.0, &fine, -1.0 / 3.0, &coarse))
    }

    /// Composes the family with a map on values. The result has no analytic
    /// derivative.
    pub fn map<U, F>(&self, f: F) -> ParametricFamily<U>
    where
        U: Differentiable,
        F: Fn(T) -> U + Send + Sync + 'static,
        T: 'static,
    {
        let eval = self.eval.clone();
        ParametricFamily {
            eval: Arc::new(move |l| f(eval(l))),
            derivative: None,
            fd_step: self.fd_step,
            domain: self.domain,
        }
    }
}

/// Derivative of a family at `lambda`: the analytic closure if one is
/// attached, otherwise a central difference.
pub fn fd_derivative<T: Differentiable>(family: &ParametricFamily<T>, lambda: f64) -> Result<T> {
    family.derivative(lambda)
}
