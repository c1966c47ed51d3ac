//! Element-by-element assembly of the bilinear forms of the Navier-Stokes discretization
//! and of the auxiliary pressure operators used by the block preconditioners.
//!
//! All matrices keep the full element coupling pattern (zeros included) so that matrices
//! assembled for different states share one sparsity pattern.

use super::basis;
use super::dofmap::DofMap;
use super::element::{ElementTables, ElementValues};
use super::quadrature::gauss_legendre;
use crate::mesh::{BoundaryTag, Mesh};
use crate::sparse::CsrMatrix;

/// Generic assembly driver: `kernel` fills the local matrix (row-major, rows x cols).
fn assemble<R, C, K>(
    mesh: &Mesh,
    tables: &ElementTables,
    nrows: usize,
    ncols: usize,
    row_dofs: R,
    col_dofs: C,
    mut kernel: K,
) -> CsrMatrix
where
    R: Fn(usize) -> Vec<usize>,
    C: Fn(usize) -> Vec<usize>,
    K: FnMut(usize, &ElementValues, &mut [f64], usize),
{
    let mut trip = Vec::new();
    let mut ev = ElementValues::default();
    let mut local = Vec::new();
    for e in 0..mesh.n_elements() {
        tables.reinit(mesh, e, &mut ev);
        let rd = row_dofs(e);
        let cd = col_dofs(e);
        local.clear();
        local.resize(rd.len() * cd.len(), 0.0);
        kernel(e, &ev, &mut local, cd.len());
        for (i, &r) in rd.iter().enumerate() {
            for (j, &c) in cd.iter().enumerate() {
                trip.push((r, c, local[i * cd.len() + j]));
            }
        }
    }
    CsrMatrix::from_triplets(nrows, ncols, &trip).expect("assembled indices are in range")
}

/// Velocity field values and gradients at the quadrature points of an element.
/// `grad[q][d][c]` = d w_d / d x_c.
fn field_at_quadrature(
    mesh: &Mesh,
    dofs: &DofMap,
    e: usize,
    ev: &ElementValues,
    w: &[f64],
) -> (Vec<[f64; 3]>, Vec<[[f64; 3]; 3]>) {
    let dim = dofs.dim;
    let el = mesh.element(e);
    let nq = ev.jxw.len();
    let mut val = vec![[0.0; 3]; nq];
    let mut grad = vec![[[0.0; 3]; 3]; nq];
    for q in 0..nq {
        for (a, &n) in el.iter().enumerate() {
            for d in 0..dim {
                let wn = w[dim * n + d];
                val[q][d] += wn * ev.phi[q][a];
                for c in 0..dim {
                    grad[q][d][c] += wn * ev.dphi[q][a][c];
                }
            }
        }
    }
    (val, grad)
}

pub struct Assembler<'a> {
    pub mesh: &'a Mesh,
    pub dofs: &'a DofMap,
    pub tables: ElementTables,
}

impl<'a> Assembler<'a> {
    pub fn new(mesh: &'a Mesh, dofs: &'a DofMap) -> Self {
        Self { mesh, dofs, tables: ElementTables::new(mesh) }
    }

    fn vdofs(&self) -> impl Fn(usize) -> Vec<usize> + '_ {
        move |e| self.dofs.element_velocity_dofs(self.mesh, e)
    }
    fn pdofs(&self) -> impl Fn(usize) -> Vec<usize> + '_ {
        move |e| self.dofs.element_pressure_dofs(self.mesh, e)
    }

    /// Block-diagonal velocity operator from a scalar kernel k(q, test a, trial b).
    fn velocity_scalar<K>(&self, k: K) -> CsrMatrix
    where
        K: Fn(&ElementValues, usize, usize, usize, &[[f64; 3]]) -> f64,
    {
        self.velocity_scalar_with_field(None, k)
    }

    fn velocity_scalar_with_field<K>(&self, w: Option<&[f64]>, k: K) -> CsrMatrix
    where
        K: Fn(&ElementValues, usize, usize, usize, &[[f64; 3]]) -> f64,
    {
        let dim = self.dofs.dim;
        let n = self.dofs.n_velocity();
        assemble(self.mesh, &self.tables, n, n, self.vdofs(), self.vdofs(), |e, ev, local, nc| {
            let wq = match w {
                Some(w) => field_at_quadrature(self.mesh, self.dofs, e, ev, w).0,
                None => vec![[0.0; 3]; ev.jxw.len()],
            };
            let nb = ev.phi[0].len();
            for q in 0..ev.jxw.len() {
                for a in 0..nb {
                    for b in 0..nb {
                        let v = k(ev, q, a, b, &wq) * ev.jxw[q];
                        for c in 0..dim {
                            local[(a * dim + c) * nc + b * dim + c] += v;
                        }
                    }
                }
            }
        })
    }

    /// Velocity mass matrix M_u.
    pub fn velocity_mass(&self) -> CsrMatrix {
        self.velocity_scalar(|ev, q, a, b, _| ev.phi[q][a] * ev.phi[q][b])
    }

    /// Vector Laplacian A (without the viscosity factor).
    pub fn viscous(&self) -> CsrMatrix {
        self.velocity_scalar(|ev, q, a, b, _| dot3(&ev.dphi[q][a], &ev.dphi[q][b]))
    }

    /// Convection N(w): integral of (w . grad phi_j) . phi_i.
    pub fn convection(&self, w: &[f64]) -> CsrMatrix {
        self.velocity_scalar_with_field(Some(w), |ev, q, a, b, wq| dot3(&wq[q], &ev.dphi[q][b]) * ev.phi[q][a])
    }

    /// Newton linearization W(w): integral of (phi_j . grad) w . phi_i.
    pub fn newton(&self, w: &[f64]) -> CsrMatrix {
        let dim = self.dofs.dim;
        let n = self.dofs.n_velocity();
        assemble(self.mesh, &self.tables, n, n, self.vdofs(), self.vdofs(), |e, ev, local, nc| {
            let (_, g) = field_at_quadrature(self.mesh, self.dofs, e, ev, w);
            let nb = ev.phi[0].len();
            for q in 0..ev.jxw.len() {
                for a in 0..nb {
                    for b in 0..nb {
                        let s = ev.phi[q][a] * ev.phi[q][b] * ev.jxw[q];
                        for d in 0..dim {
                            for c in 0..dim {
                                local[(a * dim + d) * nc + b * dim + c] += s * g[q][d][c];
                            }
                        }
                    }
                }
            }
        })
    }

    /// Divergence block B (pressure rows): b_ij = -integral of psi_i div phi_j.
    pub fn divergence(&self) -> CsrMatrix {
        let dim = self.dofs.dim;
        let (np, nu) = (self.dofs.n_pressure(), self.dofs.n_velocity());
        assemble(self.mesh, &self.tables, np, nu, self.pdofs(), self.vdofs(), |_, ev, local, nc| {
            for q in 0..ev.jxw.len() {
                for i in 0..ev.psi[q].len() {
                    for b in 0..ev.phi[q].len() {
                        for c in 0..dim {
                            local[i * nc + b * dim + c] -= ev.psi[q][i] * ev.dphi[q][b][c] * ev.jxw[q];
                        }
                    }
                }
            }
        })
    }

    fn pressure_scalar<K>(&self, w: Option<&[f64]>, k: K) -> CsrMatrix
    where
        K: Fn(&ElementValues, usize, usize, usize, &[[f64; 3]]) -> f64,
    {
        let np = self.dofs.n_pressure();
        assemble(self.mesh, &self.tables, np, np, self.pdofs(), self.pdofs(), |e, ev, local, nc| {
            let wq = match w {
                Some(w) => field_at_quadrature(self.mesh, self.dofs, e, ev, w).0,
                None => vec![[0.0; 3]; ev.jxw.len()],
            };
            let nb = ev.psi[0].len();
            for q in 0..ev.jxw.len() {
                for i in 0..nb {
                    for j in 0..nb {
                        local[i * nc + j] += k(ev, q, i, j, &wq) * ev.jxw[q];
                    }
                }
            }
        })
    }

    /// Pressure mass matrix M_p.
    pub fn pressure_mass(&self) -> CsrMatrix {
        self.pressure_scalar(None, |ev, q, i, j, _| ev.psi[q][i] * ev.psi[q][j])
    }

    /// Pressure Laplacian A_p (natural boundary conditions).
    pub fn pressure_laplacian(&self) -> CsrMatrix {
        self.pressure_scalar(None, |ev, q, i, j, _| dot3(&ev.dpsi[q][i], &ev.dpsi[q][j]))
    }

    /// Pressure convection N_p(w): integral of (w . grad psi_j) psi_i.
    pub fn pressure_convection(&self, w: &[f64]) -> CsrMatrix {
        self.pressure_scalar(Some(w), |ev, q, i, j, wq| dot3(&wq[q], &ev.dpsi[q][j]) * ev.psi[q][i])
    }

    /// Pressure stabilization C = (1/nu) integral of (p - mean p)(q - mean q), element means.
    pub fn stabilization(&self, nu: f64) -> CsrMatrix {
        let np = self.dofs.n_pressure();
        assemble(self.mesh, &self.tables, np, np, self.pdofs(), self.pdofs(), |_, ev, local, nc| {
            let nb = ev.psi[0].len();
            let vol: f64 = ev.jxw.iter().sum();
            let mean: Vec<f64> =
                (0..nb).map(|i| (0..ev.jxw.len()).map(|q| ev.psi[q][i] * ev.jxw[q]).sum::<f64>() / vol).collect();
            for q in 0..ev.jxw.len() {
                for i in 0..nb {
                    for j in 0..nb {
                        local[i * nc + j] += (ev.psi[q][i] - mean[i]) * (ev.psi[q][j] - mean[j]) * ev.jxw[q] / nu;
                    }
                }
            }
        })
    }

    /// Integral of each pressure basis function (row sums of M_p).
    pub fn pressure_integrals(&self) -> Vec<f64> {
        self.pressure_mass().row_sums()
    }

    /// Velocity load vector for a body force f(x).
    pub fn velocity_load(&self, f: &dyn Fn([f64; 3]) -> [f64; 3]) -> Vec<f64> {
        let dim = self.dofs.dim;
        let mut out = vec![0.0; self.dofs.n_velocity()];
        let mut ev = ElementValues::default();
        for e in 0..self.mesh.n_elements() {
            self.tables.reinit(self.mesh, e, &mut ev);
            let el = self.mesh.element(e);
            for q in 0..ev.jxw.len() {
                let fq = f(ev.x[q]);
                for (a, &n) in el.iter().enumerate() {
                    for c in 0..dim {
                        out[dim * n + c] += fq[c] * ev.phi[q][a] * ev.jxw[q];
                    }
                }
            }
        }
        out
    }

    /// Boundary mass weighted by w . n over facets tagged `tag`: integral of (w.n) psi_i psi_j.
    pub fn robin_boundary_mass(&self, w: &[f64], tag: BoundaryTag) -> CsrMatrix {
        let mesh = self.mesh;
        let dim = self.dofs.dim;
        let k = mesh.order;
        let (gx, gw) = gauss_legendre(k + 2);
        let mut trip = Vec::new();
        for f in mesh.facets.iter().filter(|f| f.tag == tag) {
            let corner_local: Vec<usize> = if dim == 2 { vec![0, k] } else { vec![0, k, (k + 1) * k, (k + 1) * (k + 1) - 1] };
            let corners: Vec<usize> = corner_local.iter().map(|&l| f.nodes[l]).collect();
            let pd: Vec<usize> = corners.iter().map(|&n| self.dofs.pressure_index[n].unwrap()).collect();
            let pts: Vec<(f64, f64, f64)> = if dim == 2 {
                gx.iter().zip(&gw).map(|(&x, &w)| (x, 0.0, w)).collect()
            } else {
                let mut v = Vec::new();
                for (j, &y) in gx.iter().enumerate() {
                    for (i, &x) in gx.iter().enumerate() {
                        v.push((x, y, gw[i] * gw[j]));
                    }
                }
                v
            };
            for (s, t, wq) in pts {
                // Order-one facet basis for the pressure and geometry, order-k for w.
                let (l1s, _) = basis::lagrange_1d(1, s);
                let (lks, _) = basis::lagrange_1d(k, s);
                let (p_val, jac, wv) = if dim == 2 {
                    let a = mesh.coords[corners[0]];
                    let b = mesh.coords[corners[1]];
                    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                    let mut wv = [0.0; 3];
                    for (l, &n) in f.nodes.iter().enumerate() {
                        for c in 0..dim {
                            wv[c] += lks[l] * w[dim * n + c];
                        }
                    }
                    (l1s.clone(), len, wv)
                } else {
                    let (l1t, _) = basis::lagrange_1d(1, t);
                    let (lkt, _) = basis::lagrange_1d(k, t);
                    let pv = vec![l1s[0] * l1t[0], l1s[1] * l1t[0], l1s[0] * l1t[1], l1s[1] * l1t[1]];
                    let x: Vec<[f64; 3]> = corners.iter().map(|&n| mesh.coords[n]).collect();
                    let mut ds = [0.0; 3];
                    let mut dt = [0.0; 3];
                    for d in 0..3 {
                        ds[d] = (x[1][d] - x[0][d]) * (1.0 - t) + (x[3][d] - x[2][d]) * t;
                        dt[d] = (x[2][d] - x[0][d]) * (1.0 - s) + (x[3][d] - x[1][d]) * s;
                    }
                    let cr = [ds[1] * dt[2] - ds[2] * dt[1], ds[2] * dt[0] - ds[0] * dt[2], ds[0] * dt[1] - ds[1] * dt[0]];
                    let area = dot3(&cr, &cr).sqrt();
                    let mut wv = [0.0; 3];
                    for j in 0..=k {
                        for i in 0..=k {
                            let n = f.nodes[i + (k + 1) * j];
                            for c in 0..dim {
                                wv[c] += lks[i] * lkt[j] * w[dim * n + c];
                            }
                        }
                    }
                    (pv, area, wv)
                };
                let wn = dot3(&wv, &f.normal);
                for (i, &pi) in pd.iter().enumerate() {
                    for (j, &pj) in pd.iter().enumerate() {
                        trip.push((pi, pj, wn * p_val[i] * p_val[j] * jac * wq));
                    }
                }
            }
        }
        let np = self.dofs.n_pressure();
        CsrMatrix::from_triplets(np, np, &trip).expect("facet indices are in range")
    }

    /// Scalar Laplacian on all mesh nodes with the mesh-order basis (natural boundary).
    pub fn scalar_laplacian(&self) -> CsrMatrix {
        let n = self.mesh.n_nodes();
        let nodes = |e: usize| self.mesh.element(e).to_vec();
        assemble(self.mesh, &self.tables, n, n, nodes, nodes, |_, ev, local, nc| {
            let nb = ev.phi[0].len();
            for q in 0..ev.jxw.len() {
                for a in 0..nb {
                    for b in 0..nb {
                        local[a * nc + b] += dot3(&ev.dphi[q][a], &ev.dphi[q][b]) * ev.jxw[q];
                    }
                }
            }
        })
    }

    /// L2 norm of u_h - u over the domain, evaluated with `tables`' quadrature.
    pub fn velocity_l2_error(&self, uh: &[f64], exact: &dyn Fn([f64; 3]) -> [f64; 3], tables: &ElementTables) -> f64 {
        let dim = self.dofs.dim;
        let mut ev = ElementValues::default();
        let mut s = 0.0;
        for e in 0..self.mesh.n_elements() {
            tables.reinit(self.mesh, e, &mut ev);
            let (v, _) = field_at_quadrature(self.mesh, self.dofs, e, &ev, uh);
            for q in 0..ev.jxw.len() {
                let u = exact(ev.x[q]);
                for c in 0..dim {
                    s += (v[q][c] - u[c]).powi(2) * ev.jxw[q];
                }
            }
        }
        s.sqrt()
    }
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
