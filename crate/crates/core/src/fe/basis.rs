//! Lagrange shape functions on reference cells.

use crate::mesh::CellType;

/// Values and reference gradients of all shape functions at a point.
pub fn eval(cell: CellType, order: usize, x: [f64; 3]) -> (Vec<f64>, Vec<[f64; 3]>) {
    match cell {
        CellType::Triangle => triangle(order, x[0], x[1]),
        CellType::Quadrilateral => tensor(2, order, x),
        CellType::Hexahedron => tensor(3, order, x),
    }
}

pub fn n_basis(cell: CellType, order: usize) -> usize {
    match cell {
        CellType::Triangle => (order + 1) * (order + 2) / 2,
        CellType::Quadrilateral => (order + 1).pow(2),
        CellType::Hexahedron => (order + 1).pow(3),
    }
}

fn triangle(order: usize, x: f64, y: f64) -> (Vec<f64>, Vec<[f64; 3]>) {
    let l = [1.0 - x - y, x, y];
    let dl = [[-1.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    if order == 1 {
        return (l.to_vec(), dl.to_vec());
    }
    let mut v = Vec::with_capacity(6);
    let mut g = Vec::with_capacity(6);
    for i in 0..3 {
        v.push(l[i] * (2.0 * l[i] - 1.0));
        let f = 4.0 * l[i] - 1.0;
        g.push([f * dl[i][0], f * dl[i][1], 0.0]);
    }
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        v.push(4.0 * l[i] * l[j]);
        g.push([
            4.0 * (dl[i][0] * l[j] + l[i] * dl[j][0]),
            4.0 * (dl[i][1] * l[j] + l[i] * dl[j][1]),
            0.0,
        ]);
    }
    (v, g)
}

/// 1D Lagrange polynomials on equispaced nodes of [0, 1] and their derivatives.
pub fn lagrange_1d(order: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    match order {
        1 => (vec![1.0 - t, t], vec![-1.0, 1.0]),
        2 => (
            vec![2.0 * (t - 0.5) * (t - 1.0), -4.0 * t * (t - 1.0), 2.0 * t * (t - 0.5)],
            vec![4.0 * t - 3.0, -8.0 * t + 4.0, 4.0 * t - 1.0],
        ),
        _ => panic!("unsupported order {order}"),
    }
}

fn tensor(dim: usize, order: usize, x: [f64; 3]) -> (Vec<f64>, Vec<[f64; 3]>) {
    let (lx, dx) = lagrange_1d(order, x[0]);
    let (ly, dy) = lagrange_1d(order, x[1]);
    let (lz, dz) = if dim == 3 { lagrange_1d(order, x[2]) } else { (vec![1.0], vec![0.0]) };
    let s = order + 1;
    let mut v = Vec::with_capacity(lz.len() * s * s);
    let mut g = Vec::with_capacity(v.capacity());
    for c in 0..lz.len() {
        for b in 0..s {
            for a in 0..s {
                v.push(lx[a] * ly[b] * lz[c]);
                g.push([dx[a] * ly[b] * lz[c], lx[a] * dy[b] * lz[c], lx[a] * ly[b] * dz[c]]);
            }
        }
    }
    (v, g)
}

/// Reference coordinates of the shape-function nodes, in element-local order.
pub fn nodes(cell: CellType, order: usize) -> Vec<[f64; 3]> {
    let k = order as f64;
    match cell {
        CellType::Triangle => {
            let mut v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
            if order == 2 {
                v.extend([[0.5, 0.0, 0.0], [0.5, 0.5, 0.0], [0.0, 0.5, 0.0]]);
            }
            v
        }
        CellType::Quadrilateral | CellType::Hexahedron => {
            let nz = if cell == CellType::Hexahedron { order + 1 } else { 1 };
            let mut v = Vec::new();
            for c in 0..nz {
                for b in 0..=order {
                    for a in 0..=order {
                        let z = if cell == CellType::Hexahedron { c as f64 / k } else { 0.0 };
                        v.push([a as f64 / k, b as f64 / k, z]);
                    }
                }
            }
            v
        }
    }
}
