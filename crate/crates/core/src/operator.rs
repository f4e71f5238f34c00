//! Dense complex operators on the cluster Hilbert space.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type State = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A square complex matrix acting on a tensor-product Hilbert space.
///
/// Products skip zero entries of the right operand, so the spin operators
/// and Lax entries (which are very sparse) multiply in roughly `nnz * dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix(DMatrix<Complex64>);

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// Wraps a square matrix.
    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        Ok(Self(m))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.0[(row, col)] = value;
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: Complex64, other: &OperatorMatrix) {
        self.0.zip_apply(&other.0, |a, b| *a += s * b);
    }

    /// Matrix product, skipping structural zeros of `rhs`.
    pub fn matmul(&self, rhs: &OperatorMatrix) -> OperatorMatrix {
        let n = self.dim();
        assert_eq!(n, rhs.dim(), "operator dimensions differ");
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                let b = rhs.0[(k, j)];
                if b == ZERO {
                    continue;
                }
                let lhs_col = self.0.column(k);
                let mut out_col = out.column_mut(j);
                for i in 0..n {
                    let a = lhs_col[i];
                    if a != ZERO {
                        out_col[i] += a * b;
                    }
                }
            }
        }
        OperatorMatrix(out)
    }

    pub fn apply(&self, v: &State) -> State {
        let n = self.dim();
        assert_eq!(n, v.len(), "state dimension differs from operator");
        let mut out = State::zeros(n);
        for k in 0..n {
            let x = v[k];
            if x == ZERO {
                continue;
            }
            let col = self.0.column(k);
            for i in 0..n {
                let a = col[i];
                if a != ZERO {
                    out[i] += a * x;
                }
            }
        }
        out
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &OperatorMatrix) -> OperatorMatrix {
        let mut ab = self.matmul(other);
        ab -= &other.matmul(self);
        ab
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        self.0.diagonal().iter().copied().collect()
    }

    /// Largest entry of `self - self^†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn kron(&self, other: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(self.0.kronecker(&other.0))
    }

    pub fn nnz(&self) -> usize {
        self.0.iter().filter(|z| **z != ZERO).count()
    }

    /// `<v| self |v>` for a (not necessarily normalised) state.
    pub fn expectation(&self, v: &State) -> Complex64 {
        let hv = self.apply(v);
        v.dotc(&hv) / v.norm_squared()
    }
}

impl Add<&OperatorMatrix> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 + &rhs.0)
    }
}

impl Sub<&OperatorMatrix> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<&OperatorMatrix> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.matmul(rhs)
    }
}

impl Mul<Complex64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Complex64) -> OperatorMatrix {
        self.scale(rhs)
    }
}

impl Mul<f64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: f64) -> OperatorMatrix {
        self.scale_real(rhs)
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        OperatorMatrix(-&self.0)
    }
}

impl AddAssign<&OperatorMatrix> for OperatorMatrix {
    fn add_assign(&mut self, rhs: &OperatorMatrix) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&OperatorMatrix> for OperatorMatrix {
    fn sub_assign(&mut self, rhs: &OperatorMatrix) {
        self.0 -= &rhs.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn sparse_product_matches_dense() {
        let a = OperatorMatrix::from_fn(5, |i, j| {
            if (i + 2 * j) % 3 == 0 {
                Complex64::new(i as f64 - 1.0, j as f64 * 0.5)
            } else {
                ZERO
            }
        });
        let b = OperatorMatrix::from_fn(5, |i, j| Complex64::new((i * j) as f64, 1.0 - i as f64));
        let dense = a.matrix() * b.matrix();
        let sparse = a.matmul(&b);
        assert!((sparse.matrix() - dense).iter().all(|z| z.norm() < 1e-14));
        let v = State::from_fn(5, |i, _| Complex64::new(1.0 + i as f64, -0.5));
        let mv = b.matrix() * &v;
        assert!((b.apply(&v) - mv).norm() < 1e-13);
    }

    #[test]
    fn commutator_of_diagonals_vanishes() {
        let a = OperatorMatrix::from_real_diagonal(&[1.0, 2.0, 3.0]);
        let b = OperatorMatrix::from_real_diagonal(&[-1.0, 0.5, 7.0]);
        assert_eq!(a.commutator(&b).max_abs(), 0.0);
        assert_eq!(a.trace(), c(6.0));
        assert_eq!(a.hermiticity_defect(), 0.0);
    }
}
