//! Linear operator abstraction shared by matrices, preconditioners and inverse approximations.

use crate::sparse::{CsrMatrix, SparseLu};

/// A square linear map y = A x. Preconditioners implement this as the action of an
/// approximate inverse.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        assert_eq!(self.nrows(), self.ncols(), "operator must be square");
        self.nrows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec(x, y);
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for std::sync::Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

/// The identity map.
#[derive(Clone, Debug)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

/// y = d .* x
#[derive(Clone, Debug)]
pub struct DiagonalScaling(pub Vec<f64>);

impl DiagonalScaling {
    /// Inverse of the diagonal of `a`.
    pub fn inverse_diagonal(a: &CsrMatrix) -> Self {
        Self(a.diag().iter().map(|d| 1.0 / d).collect())
    }
    /// Inverse of the absolute row sums of `a`.
    pub fn inverse_abs_row_sum(a: &CsrMatrix) -> Self {
        Self(a.abs_row_sums().iter().map(|d| 1.0 / d).collect())
    }
}

impl LinearOperator for DiagonalScaling {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.0) {
            *yi = xi * di;
        }
    }
}

/// Exact inverse through a sparse LU factorization.
#[derive(Clone, Debug)]
pub struct ExactInverse(pub SparseLu);

impl ExactInverse {
    pub fn new(a: &CsrMatrix) -> crate::Result<Self> {
        Ok(Self(SparseLu::factor(a)?))
    }
}

impl LinearOperator for ExactInverse {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.solve_into(x, y);
    }
}

/// Product A_1 A_2 ... A_k applied right to left.
pub struct Product(pub Vec<Box<dyn LinearOperator>>);

impl LinearOperator for Product {
    fn dim(&self) -> usize {
        self.0[0].dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut cur = x.to_vec();
        for op in self.0.iter().rev() {
            cur = op.apply_vec(&cur);
        }
        y.copy_from_slice(&cur);
    }
}
