//! Finite-dimensional states and operators.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, C64};

/// Tolerance for normalization, Hermiticity, positivity and trace checks.
pub const STATE_TOL: f64 = 1e-10;

/// Eigenvalues within this distance of zero are clamped to zero.
pub const EIGEN_CLAMP: f64 = 1e-10;

/// A normalized amplitude vector in a named basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    basis_label: String,
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(basis_label: impl Into<String>, amplitudes: DVector<C64>) -> Result<Self> {
        let norm2 = amplitudes.norm_squared();
        if !norm2.is_finite() || (norm2 - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalizedState(norm2));
        }
        Ok(Self { basis_label: basis_label.into(), amplitudes })
    }

    pub fn basis_label(&self) -> &str {
        &self.basis_label
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// |ψ⟩⟨ψ|
    pub fn projector(&self) -> DensityOperator {
        DensityOperator {
            basis_label: self.basis_label.clone(),
            matrix: outer(&self.amplitudes, &self.amplitudes),
        }
    }
}

/// A Hermitian, positive semi-definite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    basis_label: String,
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    pub fn new(basis_label: impl Into<String>, matrix: DMatrix<C64>) -> Result<Self> {
        check_square(&matrix)?;
        let dev = hermiticity_deviation(&matrix);
        if dev > STATE_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let (vals, _) = hermitian_eigen(&matrix);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -STATE_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { basis_label: basis_label.into(), matrix })
    }

    pub fn basis_label(&self) -> &str {
        &self.basis_label
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Spectral decomposition with eigenvalues in ascending order and
    /// near-zero eigenvalues clamped to zero.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<C64>) {
        let (mut vals, vecs) = hermitian_eigen(&self.matrix);
        for v in &mut vals {
            if v.abs() < EIGEN_CLAMP {
                *v = 0.0;
            }
        }
        (vals, vecs)
    }

    /// tr(ρ A)
    pub fn expectation(&self, op: &DMatrix<C64>) -> C64 {
        trace_product(&self.matrix, op)
    }
}

/// A Hermitian matrix: POVM elements, SLDs, Hamiltonians, ladder-built observables.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    basis_label: String,
    matrix: DMatrix<C64>,
}

impl HermitianOperator {
    pub fn new(basis_label: impl Into<String>, matrix: DMatrix<C64>) -> Result<Self> {
        check_square(&matrix)?;
        let scale = matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let dev = hermiticity_deviation(&matrix);
        if dev > STATE_TOL * scale {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { basis_label: basis_label.into(), matrix })
    }

    pub fn basis_label(&self) -> &str {
        &self.basis_label
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.matrix).0.into_iter().fold(f64::INFINITY, f64::min)
    }
}

fn check_square(m: &DMatrix<C64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Dimension(format!("expected a non-empty square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(())
}

/// max |A_ij − conj(A_ji)|
pub fn hermiticity_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending, columns
/// of the returned matrix the matching eigenvectors.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    // symmetrize first so round-off asymmetry does not leak into the solver
    let sym = (m + m.adjoint()).map(|z| z * 0.5);
    let eig = sym.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// tr(A B) without forming the product.
pub fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// |u⟩⟨v|
pub fn outer(u: &DVector<C64>, v: &DVector<C64>) -> DMatrix<C64> {
    u * v.adjoint()
}

/// ⟨u|v⟩
pub fn inner(u: &DVector<C64>, v: &DVector<C64>) -> C64 {
    u.dotc(v)
}

/// Frobenius norm.
pub fn frobenius(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rejects_invalid_density_operators() {
        let not_herm = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(0.5, 0.0)]);
        assert!(matches!(DensityOperator::new("q", not_herm), Err(Error::NotHermitian(_))));
        let bad_trace = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.5, 0.0), c(0.6, 0.0)]));
        assert!(matches!(DensityOperator::new("q", bad_trace), Err(Error::InvalidTrace(_))));
        let not_psd = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.2, 0.0), c(-0.2, 0.0)]));
        assert!(matches!(DensityOperator::new("q", not_psd), Err(Error::NotPsd(_))));
        let ok = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.3), c(0.0, -0.3), c(0.5, 0.0)]);
        assert!(DensityOperator::new("q", ok).is_ok());
    }

    #[test]
    fn state_vector_normalization() {
        let v = DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(StateVector::new("q", v.clone()).is_err());
        let s = StateVector::new("q", v.map(|z| z / 2f64.sqrt())).unwrap();
        let rho = s.projector();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigen_of_complex_hermitian() {
        // σ_y has eigenvalues ±1
        let sy = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let (vals, vecs) = hermitian_eigen(&sy);
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let recon = &vecs * DMatrix::from_diagonal(&DVector::from_vec(vals.iter().map(|v| c(*v, 0.0)).collect())) * vecs.adjoint();
        assert!(frobenius(&(recon - sy)) < 1e-13);
    }
}
