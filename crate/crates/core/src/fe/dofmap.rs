//! Degree-of-freedom numbering for the saddle-point system.
//!
//! Velocity dofs come first, node-major: dof(node, c) = dim * node + c. Pressure dofs
//! follow, one per mesh vertex, numbered in vertex order. Pressure indices returned by
//! this map are local to the pressure block (0..n_pressure).

use crate::mesh::Mesh;

#[derive(Clone, Debug)]
pub struct DofMap {
    pub dim: usize,
    pub n_nodes: usize,
    /// Pressure index of each mesh node, `None` for non-vertex nodes.
    pub pressure_index: Vec<Option<usize>>,
    /// Mesh node of each pressure dof.
    pub pressure_nodes: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let mut pressure_index = vec![None; mesh.n_nodes()];
        let mut pressure_nodes = Vec::new();
        for (n, &v) in mesh.is_vertex.iter().enumerate() {
            if v {
                pressure_index[n] = Some(pressure_nodes.len());
                pressure_nodes.push(n);
            }
        }
        Self { dim: mesh.dim(), n_nodes: mesh.n_nodes(), pressure_index, pressure_nodes }
    }

    pub fn n_velocity(&self) -> usize {
        self.dim * self.n_nodes
    }
    pub fn n_pressure(&self) -> usize {
        self.pressure_nodes.len()
    }
    pub fn n_total(&self) -> usize {
        self.n_velocity() + self.n_pressure()
    }
    pub fn velocity_dof(&self, node: usize, c: usize) -> usize {
        self.dim * node + c
    }

    /// Velocity dofs of an element in (local node, component) order.
    pub fn element_velocity_dofs(&self, mesh: &Mesh, e: usize) -> Vec<usize> {
        mesh.element(e).iter().flat_map(|&n| (0..self.dim).map(move |c| self.dim * n + c)).collect()
    }

    /// Pressure dofs of an element in vertex order.
    pub fn element_pressure_dofs(&self, mesh: &Mesh, e: usize) -> Vec<usize> {
        mesh.element_vertices(e).iter().map(|&n| self.pressure_index[n].expect("vertex has pressure dof")).collect()
    }

    /// Flags velocity dofs at nodes flagged in `nodes`.
    pub fn velocity_dofs_of_nodes(&self, nodes: &[bool]) -> Vec<bool> {
        let mut out = vec![false; self.n_velocity()];
        for (n, &on) in nodes.iter().enumerate() {
            if on {
                for c in 0..self.dim {
                    out[self.dim * n + c] = true;
                }
            }
        }
        out
    }

    /// Restricts a node flag vector to pressure dofs.
    pub fn pressure_dofs_of_nodes(&self, nodes: &[bool]) -> Vec<bool> {
        self.pressure_nodes.iter().map(|&n| nodes[n]).collect()
    }
}
