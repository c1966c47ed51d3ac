//! Spectral radius estimation by single-vector Arnoldi.

use crate::linop::LinearOperator;
use crate::sparse::{axpy, dot, norm2};
use nalgebra::{Complex, DMatrix, DVector};

#[derive(Clone, Copy, Debug)]
pub struct EigOptions {
    /// Stop when ||A x - lambda x|| / |lambda| falls below this for the dominant Ritz pair.
    pub tol: f64,
    pub max_matvecs: usize,
    /// Ritz values are extracted every `check_every` Arnoldi steps.
    pub check_every: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self { tol: 0.05, max_matvecs: 200, check_every: 5 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SpectralEstimate {
    pub radius: f64,
    pub matvecs: usize,
    pub converged: bool,
    pub relative_residual: f64,
}

/// Estimates max |lambda(A)| from the Ritz values of an Arnoldi factorization.
pub fn spectral_radius(a: &dyn LinearOperator, opts: &EigOptions) -> SpectralEstimate {
    let n = a.dim();
    if n == 0 {
        return SpectralEstimate { radius: 0.0, matvecs: 0, converged: true, relative_residual: 0.0 };
    }
    // Fixed pseudo-random start vector so estimates are reproducible.
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut v0: Vec<f64> = (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect();
    let nv = norm2(&v0);
    v0.iter_mut().for_each(|x| *x /= nv);
    let mmax = opts.max_matvecs.min(n).max(1);
    let mut v = vec![v0];
    let mut h = DMatrix::<f64>::zeros(mmax + 1, mmax);
    let mut best = SpectralEstimate { radius: 0.0, matvecs: 0, converged: false, relative_residual: f64::INFINITY };
    for j in 0..mmax {
        let mut w = a.apply_vec(&v[j]);
        let w0 = norm2(&w);
        for _pass in 0..2 {
            for (i, vi) in v.iter().enumerate() {
                let c = dot(&w, vi);
                h[(i, j)] += c;
                axpy(-c, vi, &mut w);
            }
        }
        let hn = norm2(&w);
        h[(j + 1, j)] = hn;
        let m = j + 1;
        let breakdown = hn <= 1e-12 * w0.max(f64::MIN_POSITIVE);
        if breakdown || m % opts.check_every == 0 || m == mmax {
            let (lambda, res) = dominant_ritz(&h, m, if breakdown { 0.0 } else { hn });
            best = SpectralEstimate { radius: lambda, matvecs: m, converged: res <= opts.tol, relative_residual: res };
            if best.converged || breakdown {
                break;
            }
        }
        v.push(w.iter().map(|x| x / hn).collect());
    }
    best
}

/// Largest-modulus eigenvalue of the leading m x m Hessenberg block and its Ritz residual.
fn dominant_ritz(h: &DMatrix<f64>, m: usize, h_next: f64) -> (f64, f64) {
    let hm = h.view((0, 0), (m, m)).into_owned();
    let eigs = hm.clone().complex_eigenvalues();
    let lambda = eigs
        .iter()
        .copied()
        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
        .unwrap_or(Complex::new(0.0, 0.0));
    let radius = lambda.norm();
    if radius == 0.0 {
        return (0.0, if h_next == 0.0 { 0.0 } else { f64::INFINITY });
    }
    if h_next == 0.0 {
        return (radius, 0.0);
    }
    // Ritz vector by inverse iteration on the shifted Hessenberg matrix.
    let hc: DMatrix<Complex<f64>> = hm.map(|x| Complex::new(x, 0.0));
    let shift = lambda + Complex::new(radius * 1e-10, 0.0);
    let shifted = &hc - DMatrix::<Complex<f64>>::identity(m, m) * shift;
    let lu = shifted.lu();
    let mut y = DVector::<Complex<f64>>::from_element(m, Complex::new(1.0, 0.0));
    for _ in 0..3 {
        match lu.solve(&y) {
            Some(z) => {
                let nz = z.norm();
                if !nz.is_finite() || nz == 0.0 {
                    break;
                }
                y = z / Complex::new(nz, 0.0);
            }
            None => break,
        }
    }
    let res = h_next * y[m - 1].norm() / (radius * y.norm());
    (radius, res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CsrMatrix;

    #[test]
    fn diagonal_matrix_radius_is_exact() {
        let a = CsrMatrix::diagonal(&[3.0, 1.0, 0.5]);
        let e = spectral_radius(&a, &EigOptions::default());
        assert!((e.radius - 3.0).abs() < 1e-10);
        assert!(e.converged);
    }

    #[test]
    fn rotation_has_complex_dominant_pair() {
        // Eigenvalues 1 +- 2i and 0.5: radius sqrt(5).
        let a = CsrMatrix::from_dense(&[vec![1.0, -2.0, 0.0], vec![2.0, 1.0, 0.0], vec![0.0, 0.0, 0.5]]);
        let e = spectral_radius(&a, &EigOptions::default());
        assert!((e.radius - 5f64.sqrt()).abs() < 1e-8);
    }
}
