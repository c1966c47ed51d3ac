//! Per-element quadrature data: mapped weights, points and physical gradients of the
//! velocity (mesh order) and pressure (order one on the vertices) bases.

use super::basis;
use super::quadrature::{element_rule, Quadrature};
use crate::mesh::{CellType, Mesh};

#[derive(Clone, Debug)]
pub struct ElementTables {
    pub cell: CellType,
    pub order: usize,
    pub quad: Quadrature,
    nv: usize,
    np: usize,
    v_val: Vec<Vec<f64>>,
    v_grad: Vec<Vec<[f64; 3]>>,
    p_val: Vec<Vec<f64>>,
    p_grad: Vec<Vec<[f64; 3]>>,
}

/// Values on one element. Gradients are physical.
#[derive(Clone, Debug, Default)]
pub struct ElementValues {
    pub jxw: Vec<f64>,
    pub x: Vec<[f64; 3]>,
    pub phi: Vec<Vec<f64>>,
    pub dphi: Vec<Vec<[f64; 3]>>,
    pub psi: Vec<Vec<f64>>,
    pub dpsi: Vec<Vec<[f64; 3]>>,
}

impl ElementTables {
    pub fn new(mesh: &Mesh) -> Self {
        Self::with_rule(mesh, element_rule(mesh.cell, mesh.order))
    }

    pub fn with_rule(mesh: &Mesh, quad: Quadrature) -> Self {
        let (cell, order) = (mesh.cell, mesh.order);
        let mut t = Self {
            cell,
            order,
            nv: basis::n_basis(cell, order),
            np: basis::n_basis(cell, 1),
            v_val: vec![],
            v_grad: vec![],
            p_val: vec![],
            p_grad: vec![],
            quad,
        };
        for p in &t.quad.points {
            let (v, g) = basis::eval(cell, order, *p);
            t.v_val.push(v);
            t.v_grad.push(g);
            let (v, g) = basis::eval(cell, 1, *p);
            t.p_val.push(v);
            t.p_grad.push(g);
        }
        t
    }

    pub fn n_velocity_basis(&self) -> usize {
        self.nv
    }
    pub fn n_pressure_basis(&self) -> usize {
        self.np
    }

    pub fn reinit(&self, mesh: &Mesh, e: usize, out: &mut ElementValues) {
        let dim = mesh.dim();
        let verts = mesh.element_vertices(e);
        let nq = self.quad.points.len();
        out.jxw.resize(nq, 0.0);
        out.x.resize(nq, [0.0; 3]);
        out.phi.resize(nq, vec![]);
        out.dphi.resize(nq, vec![]);
        out.psi.resize(nq, vec![]);
        out.dpsi.resize(nq, vec![]);
        for q in 0..nq {
            let mut jac = [[0.0; 3]; 3];
            let mut xq = [0.0; 3];
            for (a, &v) in verts.iter().enumerate() {
                let c = mesh.coords[v];
                for i in 0..dim {
                    xq[i] += c[i] * self.p_val[q][a];
                    for j in 0..dim {
                        jac[i][j] += c[i] * self.p_grad[q][a][j];
                    }
                }
            }
            let (det, inv) = invert(dim, &jac);
            out.jxw[q] = det.abs() * self.quad.weights[q];
            out.x[q] = xq;
            let map = |g: &[f64; 3]| {
                // grad_x = J^{-T} grad_xi
                let mut r = [0.0; 3];
                for i in 0..dim {
                    for j in 0..dim {
                        r[i] += inv[j][i] * g[j];
                    }
                }
                r
            };
            out.phi[q].clone_from(&self.v_val[q]);
            out.psi[q].clone_from(&self.p_val[q]);
            out.dphi[q] = self.v_grad[q].iter().map(map).collect();
            out.dpsi[q] = self.p_grad[q].iter().map(map).collect();
        }
    }
}

fn invert(dim: usize, j: &[[f64; 3]; 3]) -> (f64, [[f64; 3]; 3]) {
    let mut inv = [[0.0; 3]; 3];
    if dim == 2 {
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        inv[0][0] = j[1][1] / det;
        inv[0][1] = -j[0][1] / det;
        inv[1][0] = -j[1][0] / det;
        inv[1][1] = j[0][0] / det;
        (det, inv)
    } else {
        let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
            - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
            + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
        for r in 0..3 {
            for c in 0..3 {
                let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
                let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
                inv[r][c] = (j[r1][c1] * j[r2][c2] - j[r1][c2] * j[r2][c1]) / det;
            }
        }
        (det, inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_cube, unit_square};

    #[test]
    fn weights_sum_to_domain_measure() {
        let m = unit_square(3, CellType::Triangle, 2).unwrap();
        let t = ElementTables::new(&m);
        let mut ev = ElementValues::default();
        let mut area = 0.0;
        for e in 0..m.n_elements() {
            t.reinit(&m, e, &mut ev);
            area += ev.jxw.iter().sum::<f64>();
        }
        assert!((area - 1.0).abs() < 1e-13);
        let c = unit_cube(2, 1).unwrap();
        let t = ElementTables::new(&c);
        let mut vol = 0.0;
        for e in 0..c.n_elements() {
            t.reinit(&c, e, &mut ev);
            vol += ev.jxw.iter().sum::<f64>();
        }
        assert!((vol - 1.0).abs() < 1e-13);
    }

    #[test]
    fn gradients_reproduce_linear_field() {
        let m = unit_cube(2, 2).unwrap();
        let t = ElementTables::new(&m);
        let mut ev = ElementValues::default();
        t.reinit(&m, 3, &mut ev);
        let el = m.element(3);
        let f = |x: [f64; 3]| 2.0 * x[0] - 3.0 * x[1] + 0.5 * x[2];
        for q in 0..ev.jxw.len() {
            let mut g = [0.0; 3];
            for (a, &n) in el.iter().enumerate() {
                for d in 0..3 {
                    g[d] += f(m.coords[n]) * ev.dphi[q][a][d];
                }
            }
            assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] + 3.0).abs() < 1e-12 && (g[2] - 0.5).abs() < 1e-12);
        }
    }
}
