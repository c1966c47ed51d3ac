//! Quadrature rules on reference cells: [0,1]^d for tensor cells, the unit simplex
//! {x, y >= 0, x + y <= 1} for triangles.

use crate::mesh::CellType;

#[derive(Clone, Debug)]
pub struct Quadrature {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre rule with `n` points on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (z * p - p0) / (z * z - 1.0);
    (p, dp)
}

/// Tensor Gauss rule with `n` points per direction.
pub fn tensor_gauss(dim: usize, n: usize) -> Quadrature {
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let nz = if dim == 3 { n } else { 1 };
    for k in 0..nz {
        for j in 0..n {
            for i in 0..n {
                let z = if dim == 3 { x[k] } else { 0.0 };
                let wz = if dim == 3 { w[k] } else { 1.0 };
                points.push([x[i], x[j], z]);
                weights.push(w[i] * w[j] * wz);
            }
        }
    }
    Quadrature { points, weights }
}

/// Seven-point rule on the unit triangle, exact for polynomials of degree 5.
pub fn triangle_degree5() -> Quadrature {
    let a1 = 0.059_715_871_789_770;
    let b1 = 0.470_142_064_105_115;
    let a2 = 0.797_426_985_353_087;
    let b2 = 0.101_286_507_323_456;
    let w0 = 0.225 / 2.0;
    let w1 = 0.132_394_152_788_506 / 2.0;
    let w2 = 0.125_939_180_544_827 / 2.0;
    let bary = [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], w0),
        ([a1, b1, b1], w1),
        ([b1, a1, b1], w1),
        ([b1, b1, a1], w1),
        ([a2, b2, b2], w2),
        ([b2, a2, b2], w2),
        ([b2, b2, a2], w2),
    ];
    Quadrature {
        points: bary.iter().map(|(l, _)| [l[1], l[2], 0.0]).collect(),
        weights: bary.iter().map(|(_, w)| *w).collect(),
    }
}

/// Collapsed tensor rule on the unit triangle with `n` points per direction; exact for
/// degree 2n - 2. Used as an independent high-order reference.
pub fn triangle_collapsed(n: usize) -> Quadrature {
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let u = x[i];
            let v = x[j];
            points.push([u, v * (1.0 - u), 0.0]);
            weights.push(w[i] * w[j] * (1.0 - u));
        }
    }
    Quadrature { points, weights }
}

/// Default element rule, exact for degree 2 * order + 1.
pub fn element_rule(cell: CellType, order: usize) -> Quadrature {
    match cell {
        CellType::Triangle => triangle_degree5(),
        CellType::Quadrilateral => tensor_gauss(2, order + 1),
        CellType::Hexahedron => tensor_gauss(3, order + 1),
    }
}
