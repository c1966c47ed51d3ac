//! Block saddle-point operator [F B^T; B -C].

use crate::linop::LinearOperator;
use crate::sparse::CsrMatrix;
use std::sync::OnceLock;

/// Saddle-point matrix with velocity block `f`, divergence block `b` (pressure rows),
/// gradient block `bt` (velocity rows) and stabilization block `c`.
///
/// `bt` is stored separately because Dirichlet velocity rows are zeroed in `bt` while
/// the corresponding columns of `b` are kept.
#[derive(Debug)]
pub struct SaddleMatrix {
    pub f: CsrMatrix,
    pub bt: CsrMatrix,
    pub b: CsrMatrix,
    pub c: CsrMatrix,
    monolithic: OnceLock<CsrMatrix>,
}

impl Clone for SaddleMatrix {
    fn clone(&self) -> Self {
        Self::new(self.f.clone(), self.bt.clone(), self.b.clone(), self.c.clone())
    }
}

impl SaddleMatrix {
    pub fn new(f: CsrMatrix, bt: CsrMatrix, b: CsrMatrix, c: CsrMatrix) -> Self {
        assert_eq!(f.nrows(), f.ncols());
        assert_eq!(bt.nrows(), f.nrows());
        assert_eq!(b.ncols(), f.ncols());
        assert_eq!(bt.ncols(), b.nrows());
        assert_eq!(c.nrows(), b.nrows());
        assert_eq!(c.ncols(), b.nrows());
        Self { f, bt, b, c, monolithic: OnceLock::new() }
    }

    pub fn n_velocity(&self) -> usize {
        self.f.nrows()
    }
    pub fn n_pressure(&self) -> usize {
        self.b.nrows()
    }

    /// The assembled monolithic matrix, built once on first use.
    pub fn monolithic(&self) -> &CsrMatrix {
        self.monolithic.get_or_init(|| {
            let mc = self.c.scaled(-1.0);
            CsrMatrix::from_blocks(&[
                vec![Some(&self.f), Some(&self.bt)],
                vec![Some(&self.b), Some(&mc)],
            ])
            .expect("saddle blocks are consistent")
        })
    }

    pub fn has_stabilization(&self) -> bool {
        self.c.values().iter().any(|v| *v != 0.0)
    }
}

impl LinearOperator for SaddleMatrix {
    fn dim(&self) -> usize {
        self.n_velocity() + self.n_pressure()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nu = self.n_velocity();
        let (xu, xp) = x.split_at(nu);
        let (yu, yp) = y.split_at_mut(nu);
        self.f.mul_vec(xu, yu);
        self.bt.mul_vec_add(1.0, xp, yu);
        self.b.mul_vec(xu, yp);
        self.c.mul_vec_add(-1.0, xp, yp);
    }
}
