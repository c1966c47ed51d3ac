//! Right-preconditioned GMRES with modified Gram-Schmidt and conditional reorthogonalization.

use crate::error::{Error, Result};
use crate::linop::LinearOperator;
use crate::sparse::{axpy, dot, norm2};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct GmresOptions {
    /// Relative tolerance on ||b - A x|| / ||b - A x0||.
    pub tol: f64,
    pub max_iterations: usize,
    /// Krylov dimension before restart; `None` keeps the full basis.
    pub restart: Option<usize>,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iterations: 1000, restart: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GmresResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Estimated relative residual after every iteration.
    pub residual_history: Vec<f64>,
    /// ||b - A x0||
    pub initial_residual: f64,
    /// Explicitly recomputed ||b - A x|| of the returned iterate.
    pub final_residual: f64,
}

impl GmresResult {
    pub fn relative_residual(&self) -> f64 {
        if self.initial_residual == 0.0 {
            0.0
        } else {
            self.final_residual / self.initial_residual
        }
    }
}

/// Solves A x = b with GMRES, preconditioned from the right by `m` (an approximate inverse).
pub fn gmres(
    a: &dyn LinearOperator,
    m: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &GmresOptions,
) -> Result<GmresResult> {
    let n = a.dim();
    if b.len() != n || m.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "gmres: operator {n}, preconditioner {}, rhs {}",
            m.dim(),
            b.len()
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidConfig("gmres tolerance must be positive".into()));
    }
    let mut x = match x0 {
        Some(v) => {
            if v.len() != n {
                return Err(Error::DimensionMismatch("gmres: initial guess".into()));
            }
            v.to_vec()
        }
        None => vec![0.0; n],
    };
    let residual = |x: &[f64]| {
        let mut r = a.apply_vec(x);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        r
    };
    let mut r = residual(&x);
    let r0 = norm2(&r);
    let mut history = Vec::new();
    if r0 == 0.0 {
        return Ok(GmresResult {
            x,
            iterations: 0,
            converged: true,
            residual_history: history,
            initial_residual: 0.0,
            final_residual: 0.0,
        });
    }
    let target = opts.tol * r0;
    let mdim = opts.restart.unwrap_or(opts.max_iterations).max(1);
    let mut iterations = 0usize;
    let mut beta = r0;
    loop {
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(mdim.min(opts.max_iterations) + 1);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut h: Vec<Vec<f64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<f64> = Vec::new();
        let mut g = vec![beta];
        let mut k = 0usize;
        let mut z = vec![0.0; n];
        let mut w = vec![0.0; n];
        while k < mdim && iterations < opts.max_iterations {
            m.apply(&v[k], &mut z);
            a.apply(&z, &mut w);
            let wnorm0 = norm2(&w);
            let mut col = vec![0.0; k + 2];
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(&w, vi);
                col[i] = hij;
                axpy(-hij, vi, &mut w);
            }
            let mut wnorm = norm2(&w);
            if wnorm < 0.7 * wnorm0 {
                for (i, vi) in v.iter().enumerate() {
                    let c = dot(&w, vi);
                    col[i] += c;
                    axpy(-c, vi, &mut w);
                }
                wnorm = norm2(&w);
            }
            col[k + 1] = wnorm;
            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let (c, s) = givens(col[k], col[k + 1]);
            col[k] = c * col[k] + s * col[k + 1];
            col[k + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g.push(-s * g[k]);
            g[k] *= c;
            h.push(col);
            k += 1;
            iterations += 1;
            let est = g[k].abs();
            history.push(est / r0);
            let breakdown = wnorm <= 1e-14 * wnorm0.max(f64::MIN_POSITIVE);
            if est <= target || breakdown {
                break;
            }
            v.push(w.iter().map(|wi| wi / wnorm).collect());
        }
        // Back substitution on the triangular factor.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut u = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &v[j], &mut u);
        }
        m.apply(&u, &mut z);
        axpy(1.0, &z, &mut x);
        r = residual(&x);
        beta = norm2(&r);
        if beta <= target || iterations >= opts.max_iterations || k == 0 {
            break;
        }
    }
    Ok(GmresResult {
        converged: beta <= target,
        x,
        iterations,
        residual_history: history,
        initial_residual: r0,
        final_residual: beta,
    })
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{DiagonalScaling, Identity};
    use crate::sparse::CsrMatrix;

    #[test]
    fn diagonal_two_by_two_converges_in_two_iterations() {
        let a = CsrMatrix::diagonal(&[1.0, 2.0]);
        let r = gmres(&a, &Identity(2), &[1.0, 1.0], None, &GmresOptions { tol: 1e-12, ..Default::default() })
            .unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 2);
        assert!((r.x[0] - 1.0).abs() < 1e-14 && (r.x[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn exact_preconditioner_converges_in_one_iteration() {
        let d = [1.0, 3.0, 7.0, -2.0];
        let a = CsrMatrix::diagonal(&d);
        let m = DiagonalScaling(d.iter().map(|v| 1.0 / v).collect());
        let r = gmres(&a, &m, &[1.0, 2.0, 3.0, 4.0], None, &GmresOptions::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
    }

    #[test]
    fn zero_rhs_returns_immediately() {
        let a = CsrMatrix::identity(3);
        let r = gmres(&a, &Identity(3), &[0.0; 3], None, &GmresOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.x, vec![0.0; 3]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = CsrMatrix::identity(3);
        assert!(gmres(&a, &Identity(2), &[1.0; 3], None, &GmresOptions::default()).is_err());
    }

    #[test]
    fn restarted_gmres_converges_on_nonsymmetric_system() {
        let n = 40;
        let mut t = vec![];
        for i in 0..n {
            t.push((i, i, 4.0));
            if i > 0 {
                t.push((i, i - 1, -1.5));
            }
            if i + 1 < n {
                t.push((i, i + 1, -0.5));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let opts = GmresOptions { tol: 1e-10, max_iterations: 400, restart: Some(5) };
        let r = gmres(&a, &Identity(n), &b, None, &opts).unwrap();
        assert!(r.converged);
        assert!(r.final_residual <= 1e-10 * r.initial_residual);
    }
}
