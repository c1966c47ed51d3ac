//! Lid-driven cavity and backward-facing step problems: geometry, boundary data, and the
//! discrete Navier-Stokes residual and Jacobian.

use crate::error::{Error, Result};
use crate::fe::{Assembler, DofMap};
use crate::mesh::{self, BoundaryTag, CellType, Mesh};
use crate::saddle::SaddleMatrix;
use crate::sparse::CsrMatrix;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Cavity2d,
    Cavity3d,
    Bfs2d,
    Bfs3d,
}

impl ProblemKind {
    pub fn dim(self) -> usize {
        match self {
            Self::Cavity2d | Self::Bfs2d => 2,
            Self::Cavity3d | Self::Bfs3d => 3,
        }
    }

    pub fn is_bfs(self) -> bool {
        matches!(self, Self::Bfs2d | Self::Bfs3d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Discretization {
    P1p1,
    P2p1,
    Q1q1,
    Q2q1,
}

impl Discretization {
    pub fn cell(self, dim: usize) -> Result<CellType> {
        match (self, dim) {
            (Self::P1p1 | Self::P2p1, 2) => Ok(CellType::Triangle),
            (Self::Q1q1 | Self::Q2q1, 2) => Ok(CellType::Quadrilateral),
            (Self::Q1q1 | Self::Q2q1, 3) => Ok(CellType::Hexahedron),
            _ => Err(Error::InvalidConfig(format!("{self:?} is not available in {dim}D"))),
        }
    }

    pub fn velocity_order(self) -> usize {
        match self {
            Self::P1p1 | Self::Q1q1 => 1,
            Self::P2p1 | Self::Q2q1 => 2,
        }
    }

    /// Equal-order pairs need pressure stabilization.
    pub fn stabilized(self) -> bool {
        self.velocity_order() == 1
    }
}

/// Parabolic inflow profile on the unit inlet (x = 0, y and z in [0, 1]).
pub fn inflow_profile_bfs(x: [f64; 3], dim: usize, v_max: f64) -> [f64; 3] {
    let l = 1.0;
    let u = if dim == 2 {
        4.0 * v_max * x[1] * (l - x[1]) / (l * l)
    } else {
        16.0 * v_max * x[1] * x[2] * (l - x[1]) * (l - x[2]) / l.powi(4)
    };
    [u, 0.0, 0.0]
}

pub fn reynolds_bfs(v_max: f64, nu: f64) -> f64 {
    2.0 * v_max / nu
}

/// Cavity Reynolds number with unit lid speed and unit length.
pub fn reynolds_cavity(nu: f64) -> f64 {
    1.0 / nu
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub discretization: Discretization,
    /// Cells per unit length.
    pub cells_per_unit: usize,
    pub nu: f64,
    /// Maximum inflow velocity (BFS only).
    pub v_max: f64,
}

impl ProblemSpec {
    pub fn cavity(dim: usize, re: f64, discretization: Discretization, cells_per_unit: usize) -> Self {
        let kind = if dim == 2 { ProblemKind::Cavity2d } else { ProblemKind::Cavity3d };
        Self { kind, discretization, cells_per_unit, nu: 1.0 / re, v_max: 1.0 }
    }

    pub fn bfs(dim: usize, v_max: f64, nu: f64, discretization: Discretization, cells_per_unit: usize) -> Self {
        let kind = if dim == 2 { ProblemKind::Bfs2d } else { ProblemKind::Bfs3d };
        Self { kind, discretization, cells_per_unit, nu, v_max }
    }

    pub fn reynolds(&self) -> f64 {
        if self.kind.is_bfs() {
            reynolds_bfs(self.v_max, self.nu)
        } else {
            reynolds_cavity(self.nu)
        }
    }
}

/// Boundary treatment of A_p and F_p in the PCD preconditioner (D: Dirichlet, N: Neumann,
/// R: Robin), given as (A_p outflow, F_p outflow, F_p inflow):
/// BC1 = (D, D, N), BC2 = (D, D, R), BC3 = (D, N, R). Walls are Neumann throughout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcStrategy {
    Bc1,
    Bc2,
    Bc3,
}

impl BcStrategy {
    fn fp_outflow_dirichlet(self) -> bool {
        matches!(self, Self::Bc1 | Self::Bc2)
    }

    fn fp_inflow_robin(self) -> bool {
        matches!(self, Self::Bc2 | Self::Bc3)
    }
}

/// Pressure operators for PCD and LSC_Ap.
#[derive(Clone, Debug)]
pub struct PressureOperators {
    pub a_p: CsrMatrix,
    pub f_p: CsrMatrix,
    pub m_p: CsrMatrix,
}

/// Time-derivative data of an implicit step: the velocity residual gains
/// M_u (coeff * u - history), and the Jacobian coeff * M_u.
#[derive(Clone, Copy, Debug)]
pub struct TimeTerm<'a> {
    pub coeff: f64,
    pub history: &'a [f64],
}

pub struct Problem {
    pub spec: ProblemSpec,
    pub mesh: Mesh,
    pub dofs: DofMap,
    /// Velocity Dirichlet nodes.
    pub dirichlet_nodes: Vec<bool>,
    /// Velocity Dirichlet dofs.
    pub dirichlet_rows: Vec<bool>,
    /// Dirichlet values on velocity dofs (zero elsewhere).
    pub dirichlet_values: Vec<f64>,
    pub viscous: CsrMatrix,
    pub divergence: CsrMatrix,
    pub divergence_t: CsrMatrix,
    pub velocity_mass: CsrMatrix,
    pub stabilization: Option<CsrMatrix>,
    pub pressure_mass: CsrMatrix,
    /// Pure-Neumann pressure Laplacian.
    pub pressure_laplacian: CsrMatrix,
    pub pressure_integrals: Vec<f64>,
    /// Pressure dofs on outflow facets.
    pub outflow_pressure: Vec<bool>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("spec", &self.spec)
            .field("n_velocity", &self.dofs.n_velocity())
            .field("n_pressure", &self.dofs.n_pressure())
            .finish()
    }
}

impl Problem {
    pub fn new(spec: ProblemSpec) -> Result<Self> {
        if !(spec.nu > 0.0) {
            return Err(Error::InvalidConfig(format!("viscosity must be positive, got {}", spec.nu)));
        }
        let dim = spec.kind.dim();
        let cell = spec.discretization.cell(dim)?;
        let order = spec.discretization.velocity_order();
        let n = spec.cells_per_unit;
        let mesh = match spec.kind {
            ProblemKind::Cavity2d => mesh::unit_square(n, cell, order)?,
            ProblemKind::Cavity3d => mesh::unit_cube(n, order)?,
            ProblemKind::Bfs2d => mesh::backward_facing_step_2d(n, cell, order)?,
            ProblemKind::Bfs3d => mesh::backward_facing_step_3d(n, order)?,
        };
        Self::from_mesh(spec, mesh)
    }

    /// Builds operators on a given mesh; boundary data follow `spec.kind`.
    pub fn from_mesh(spec: ProblemSpec, mesh: Mesh) -> Result<Self> {
        let dim = mesh.dim();
        let dofs = DofMap::new(&mesh);
        let mut dirichlet_nodes = vec![false; mesh.n_nodes()];
        let mut dirichlet_values = vec![0.0; dofs.n_velocity()];
        for (nd, tag) in mesh.node_tags.iter().enumerate() {
            let x = mesh.coords[nd];
            let value = match (spec.kind.is_bfs(), tag) {
                (_, None) => continue,
                (true, Some(BoundaryTag::Outflow)) => continue,
                (true, Some(BoundaryTag::Inflow)) => inflow_profile_bfs(x, dim, spec.v_max),
                (true, Some(BoundaryTag::Wall)) => [0.0; 3],
                (false, Some(_)) => {
                    if (x[dim - 1] - 1.0).abs() < 1e-12 {
                        [1.0, 0.0, 0.0]
                    } else {
                        [0.0; 3]
                    }
                }
            };
            dirichlet_nodes[nd] = true;
            for c in 0..dim {
                dirichlet_values[dofs.velocity_dof(nd, c)] = value[c];
            }
        }
        let dirichlet_rows = dofs.velocity_dofs_of_nodes(&dirichlet_nodes);
        let asm = Assembler::new(&mesh, &dofs);
        let viscous = asm.viscous();
        let divergence = asm.divergence();
        let mut divergence_t = divergence.transpose();
        divergence_t.clear_rows(&dirichlet_rows);
        let velocity_mass = asm.velocity_mass();
        let stabilization = spec.discretization.stabilized().then(|| asm.stabilization(spec.nu));
        let pressure_mass = asm.pressure_mass();
        let pressure_laplacian = asm.pressure_laplacian();
        let pressure_integrals = asm.pressure_integrals();
        let outflow_pressure = dofs.pressure_dofs_of_nodes(&mesh.facet_nodes_with_tag(BoundaryTag::Outflow));
        drop(asm);
        Ok(Self {
            spec,
            mesh,
            dofs,
            dirichlet_nodes,
            dirichlet_rows,
            dirichlet_values,
            viscous,
            divergence,
            divergence_t,
            velocity_mass,
            stabilization,
            pressure_mass,
            pressure_laplacian,
            pressure_integrals,
            outflow_pressure,
        })
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn n_velocity(&self) -> usize {
        self.dofs.n_velocity()
    }

    pub fn n_pressure(&self) -> usize {
        self.dofs.n_pressure()
    }

    pub fn n_total(&self) -> usize {
        self.dofs.n_total()
    }

    pub fn nu(&self) -> f64 {
        self.spec.nu
    }

    fn assembler(&self) -> Assembler<'_> {
        Assembler::new(&self.mesh, &self.dofs)
    }

    /// Nonlinear residual R(X) of the (possibly time-discrete) Navier-Stokes system with
    /// body force `f` (velocity dofs). `convection` false gives the Stokes residual.
    pub fn residual(&self, x: &[f64], f: Option<&[f64]>, time: Option<TimeTerm>, convection: bool) -> Vec<f64> {
        let nv = self.n_velocity();
        let (u, p) = x.split_at(nv);
        let mut r = vec![0.0; x.len()];
        let (ru, rp) = r.split_at_mut(nv);
        self.viscous.mul_vec_add(self.nu(), u, ru);
        if convection {
            self.assembler().convection(u).mul_vec_add(1.0, u, ru);
        }
        self.divergence.transpose().mul_vec_add(1.0, p, ru);
        if let Some(t) = time {
            let d: Vec<f64> = u.iter().zip(t.history).map(|(a, h)| t.coeff * a - h).collect();
            self.velocity_mass.mul_vec_add(1.0, &d, ru);
        }
        if let Some(f) = f {
            for (r, f) in ru.iter_mut().zip(f) {
                *r -= f;
            }
        }
        for i in 0..nv {
            if self.dirichlet_rows[i] {
                ru[i] = u[i] - self.dirichlet_values[i];
            }
        }
        self.divergence.mul_vec_add(1.0, u, rp);
        if let Some(c) = &self.stabilization {
            c.mul_vec_add(-1.0, p, rp);
        }
        r
    }

    /// Velocity block nu A + N(w) + W(w) + coeff M_u without Dirichlet rows applied.
    pub fn velocity_operator(&self, w: &[f64], mass_coeff: f64, newton: bool) -> CsrMatrix {
        let asm = self.assembler();
        let mut f = self.viscous.scaled(self.nu()).add(1.0, &asm.convection(w), 1.0);
        if newton {
            f = f.add(1.0, &asm.newton(w), 1.0);
        }
        if mass_coeff != 0.0 {
            f = f.add(1.0, &self.velocity_mass, mass_coeff);
        }
        f
    }

    /// Jacobian of `residual` at `x` (Newton), or the Oseen/Picard matrix when `newton` is false.
    pub fn jacobian(&self, x: &[f64], mass_coeff: f64, convection: bool, newton: bool) -> SaddleMatrix {
        let nv = self.n_velocity();
        let u = &x[..nv];
        let mut f = if convection {
            self.velocity_operator(u, mass_coeff, newton)
        } else {
            let mut f = self.viscous.scaled(self.nu());
            if mass_coeff != 0.0 {
                f = f.add(1.0, &self.velocity_mass, mass_coeff);
            }
            f
        };
        f.set_identity_rows(&self.dirichlet_rows);
        let np = self.n_pressure();
        let c = self.stabilization.clone().unwrap_or_else(|| CsrMatrix::zeros(np, np));
        SaddleMatrix::new(f, self.divergence_t.clone(), self.divergence.clone(), c)
    }

    /// A_p with the outflow Dirichlet rows of the chosen strategy (all strategies agree).
    pub fn pressure_laplacian_bc(&self) -> CsrMatrix {
        let mut a = self.pressure_laplacian.clone();
        a.set_identity_rows(&self.outflow_pressure);
        a
    }

    /// A_p, F_p = coeff M_p + N_p(w) + nu A_p - Robin(w), and M_p for wind `w`.
    pub fn pressure_operators(&self, w: &[f64], mass_coeff: f64, bc: BcStrategy) -> PressureOperators {
        let asm = self.assembler();
        let mut f_p = self
            .pressure_laplacian
            .scaled(self.nu())
            .add(1.0, &asm.pressure_convection(w), 1.0);
        if mass_coeff != 0.0 {
            f_p = f_p.add(1.0, &self.pressure_mass, mass_coeff);
        }
        if bc.fp_inflow_robin() && self.spec.kind.is_bfs() {
            f_p = f_p.add(1.0, &asm.robin_boundary_mass(w, BoundaryTag::Inflow), -1.0);
        }
        if bc.fp_outflow_dirichlet() {
            f_p.set_identity_rows(&self.outflow_pressure);
        }
        PressureOperators { a_p: self.pressure_laplacian_bc(), f_p, m_p: self.pressure_mass.clone() }
    }

    /// Velocity with Dirichlet values imposed and zero pressure.
    pub fn lifted_zero(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n_total()];
        x[..self.n_velocity()].copy_from_slice(&self.dirichlet_values);
        x
    }

    /// Largest nodal velocity magnitude.
    pub fn max_speed(&self, u: &[f64]) -> f64 {
        let dim = self.dim();
        (0..self.mesh.n_nodes())
            .map(|n| (0..dim).map(|c| u[dim * n + c].powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Elementwise CFL numbers u_T dt / d_T: (max, average).
    pub fn cfl(&self, u: &[f64], dt: f64) -> (f64, f64) {
        cfl_unstructured(&self.mesh, u, dt)
    }
}

/// CFL number of a structured mesh: u_inf dt / h.
pub fn cfl_structured(u_inf: f64, dt: f64, h: f64) -> f64 {
    u_inf * dt / h
}

/// Elementwise CFL with the element's largest nodal speed and inner diameter: (max, average).
pub fn cfl_unstructured(mesh: &Mesh, u: &[f64], dt: f64) -> (f64, f64) {
    let dim = mesh.dim();
    let ne = mesh.n_elements();
    if ne == 0 {
        return (0.0, 0.0);
    }
    let mut max: f64 = 0.0;
    let mut sum = 0.0;
    for e in 0..ne {
        let speed = mesh
            .element(e)
            .iter()
            .map(|&n| (0..dim).map(|c| u[dim * n + c].powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let c = speed * dt / mesh.inner_diameter(e);
        max = max.max(c);
        sum += c;
    }
    (max, sum / ne as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::LinearOperator;
    use crate::sparse::{norm2, SparseLu};

    #[test]
    fn reynolds_numbers() {
        assert_eq!(reynolds_bfs(1.0, 0.01), 200.0);
        assert!((reynolds_bfs(1.0, 0.000625) - 3200.0).abs() < 1e-9);
        assert_eq!(reynolds_bfs(0.0, 0.3), 0.0);
        assert_eq!(ProblemSpec::cavity(2, 200.0, Discretization::P2p1, 2).nu, 0.005);
        assert!((ProblemSpec::bfs(2, 16.0, 0.01, Discretization::P2p1, 2).reynolds() - 3200.0).abs() < 1e-9);
    }

    #[test]
    fn inflow_profile_values() {
        assert!((inflow_profile_bfs([0.0, 0.5, 0.5], 3, 1.0)[0] - 1.0).abs() < 1e-15);
        assert_eq!(inflow_profile_bfs([0.0, 0.0, 0.3], 3, 1.0)[0], 0.0);
        assert!((inflow_profile_bfs([0.0, 0.25, 0.5], 3, 1.0)[0] - 0.75).abs() < 1e-15);
        assert!((inflow_profile_bfs([0.0, 0.5, 0.0], 2, 2.0)[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cavity_boundary_values() {
        let p = Problem::new(ProblemSpec::cavity(2, 100.0, Discretization::P2p1, 4)).unwrap();
        for (n, x) in p.mesh.coords.iter().enumerate() {
            if (x[1] - 1.0).abs() < 1e-12 {
                assert!(p.dirichlet_nodes[n]);
                assert_eq!(p.dirichlet_values[2 * n], 1.0, "lid including rim");
            }
            if x[0] == 0.0 && x[1] == 0.0 {
                assert_eq!(p.dirichlet_values[2 * n], 0.0);
            }
        }
        assert!(p.outflow_pressure.iter().all(|o| !o));
    }

    #[test]
    fn cavity_constant_pressure_is_in_kernel_of_gradient() {
        for disc in [Discretization::P2p1, Discretization::P1p1, Discretization::Q2q1] {
            let p = Problem::new(ProblemSpec::cavity(2, 1.0, disc, 3)).unwrap();
            let g = p.divergence_t.mul(&vec![1.0; p.n_pressure()]);
            assert!(g.iter().all(|v| v.abs() <= 1e-12));
        }
    }

    #[test]
    fn bfs_inflow_is_continuous_at_rim() {
        let p = Problem::new(ProblemSpec::bfs(2, 1.0, 0.01, Discretization::P2p1, 2)).unwrap();
        for (n, x) in p.mesh.coords.iter().enumerate() {
            if x[0] == 0.0 && (x[1] == 0.0 || x[1] == 1.0) {
                assert_eq!(p.dirichlet_values[2 * n], 0.0);
            }
            if p.mesh.node_tags[n] == Some(BoundaryTag::Outflow) {
                assert!(!p.dirichlet_nodes[n]);
            }
        }
        assert!(p.outflow_pressure.iter().any(|o| *o));
    }

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        (0..n)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    #[test]
    fn jacobian_matches_central_differences() {
        for disc in [Discretization::P2p1, Discretization::P1p1] {
            let p = Problem::new(ProblemSpec::bfs(2, 1.0, 0.05, disc, 1)).unwrap();
            let n = p.n_total();
            let x = random(n, 1);
            let mut d = random(n, 2);
            let nd = norm2(&d);
            d.iter_mut().for_each(|v| *v /= nd);
            let hist = random(p.n_velocity(), 3);
            let time = Some(TimeTerm { coeff: 3.0, history: &hist });
            let jd = p.jacobian(&x, 3.0, true, true).apply_vec(&d);
            let mut errs = Vec::new();
            for eps in [1e-3, 1e-4] {
                let xp: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + eps * b).collect();
                let xm: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a - eps * b).collect();
                let (rp, rm) = (p.residual(&xp, None, time, true), p.residual(&xm, None, time, true));
                let e: f64 = (0..n).map(|i| ((rp[i] - rm[i]) / (2.0 * eps) - jd[i]).powi(2)).sum::<f64>().sqrt();
                assert!(e <= 1e-7 + 10.0 * eps * eps, "{disc:?} eps {eps}: {e}");
                errs.push(e);
            }
            // Second-order decay between the two step sizes, down to round-off.
            assert!(errs[1] <= 0.05 * errs[0] + 1e-8, "{disc:?}: {errs:?}");
        }
    }

    #[test]
    fn stokes_residual_is_affine() {
        let p = Problem::new(ProblemSpec::cavity(2, 1.0, Discretization::P2p1, 3)).unwrap();
        let x = random(p.n_total(), 5);
        let r0 = p.residual(&vec![0.0; p.n_total()], None, None, false);
        let r = p.residual(&x, None, None, false);
        let jx = p.jacobian(&x, 0.0, false, false).apply_vec(&x);
        for i in 0..x.len() {
            assert!((r[i] - r0[i] - jx[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn pressure_operators_follow_bc_table() {
        let p = Problem::new(ProblemSpec::bfs(2, 1.0, 0.1, Discretization::P2p1, 2)).unwrap();
        let zero = vec![0.0; p.n_velocity()];
        let ops = p.pressure_operators(&zero, 0.0, BcStrategy::Bc3);
        // w = 0, no outflow rows in F_p for BC3: F_p = nu A_p.
        let nap = p.pressure_laplacian.scaled(0.1);
        assert!(ops.f_p.add(1.0, &nap, -1.0).max_abs() < 1e-14);
        let ones = vec![1.0; p.n_pressure()];
        let ap1 = ops.a_p.mul(&ones);
        for i in 0..p.n_pressure() {
            let expect = if p.outflow_pressure[i] { 1.0 } else { 0.0 };
            assert!((ap1[i] - expect).abs() < 1e-12);
        }
        let ops = p.pressure_operators(&zero, 3.0, BcStrategy::Bc3);
        let expect = p.pressure_mass.scaled(3.0).add(1.0, &nap, 1.0);
        assert!(ops.f_p.add(1.0, &expect, -1.0).max_abs() < 1e-13);
        // The Robin term only enters with inflow wind.
        let w = p.dirichlet_values.clone();
        let bc2 = p.pressure_operators(&w, 0.0, BcStrategy::Bc2).f_p;
        let bc1 = p.pressure_operators(&w, 0.0, BcStrategy::Bc1).f_p;
        assert!(bc2.add(1.0, &bc1, -1.0).max_abs() > 1e-3);
        let _ = SparseLu::factor(&ops.a_p).unwrap();
    }

    #[test]
    fn cfl_values() {
        assert!((cfl_structured(1.0, 0.05, 1.0 / 27.0) - 1.35).abs() < 1e-12);
        let m = mesh::unit_square(1, CellType::Triangle, 1).unwrap();
        let u = vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let (mx, avg) = cfl_unstructured(&m, &u, 0.1);
        // Right triangle with legs 1: incircle diameter 2 - sqrt(2).
        let d = 2.0 - 2f64.sqrt();
        assert!((mx - 0.1 / d).abs() < 1e-12 && (avg - 0.1 / d).abs() < 1e-12);
        assert_eq!(cfl_unstructured(&m, &vec![0.0; 8], 0.1), (0.0, 0.0));
    }
}
