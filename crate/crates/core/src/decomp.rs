//! Nonoverlapping partitions, algebraic overlap, partition-of-unity restriction weights
//! and classification of the domain decomposition interface into vertices, edges and faces.

use crate::error::{Error, Result};
use crate::fe::DofMap;
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Element-to-subdomain assignment.
#[derive(Clone, Debug)]
pub struct Partition {
    pub element_subdomain: Vec<usize>,
    pub n_subdomains: usize,
}

impl Partition {
    /// Cuts space into boxes of side 1/`per_unit` and groups elements by the box holding
    /// their centroid. Nonempty boxes are numbered lexicographically by (z, y, x).
    pub fn boxes(mesh: &Mesh, per_unit: usize) -> Result<Self> {
        if per_unit == 0 {
            return Err(Error::InvalidConfig("need at least one subdomain per unit length".into()));
        }
        let s = per_unit as f64;
        let keys: Vec<[i64; 3]> = (0..mesh.n_elements())
            .map(|e| {
                let c = mesh.centroid(e);
                [(c[2] * s).floor() as i64, (c[1] * s).floor() as i64, (c[0] * s).floor() as i64]
            })
            .collect();
        let mut uniq = keys.clone();
        uniq.sort_unstable();
        uniq.dedup();
        let id: BTreeMap<[i64; 3], usize> = uniq.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        Ok(Self { element_subdomain: keys.iter().map(|k| id[k]).collect(), n_subdomains: uniq.len() })
    }

    pub fn from_assignment(element_subdomain: Vec<usize>) -> Result<Self> {
        let n = element_subdomain.iter().copied().max().map_or(0, |m| m + 1);
        let mut used = vec![false; n];
        for &s in &element_subdomain {
            used[s] = true;
        }
        if used.iter().any(|u| !u) {
            return Err(Error::InvalidConfig("partition has empty subdomains".into()));
        }
        Ok(Self { element_subdomain, n_subdomains: n })
    }

    /// Sorted list of subdomains whose elements contain each node.
    pub fn node_sharing(&self, mesh: &Mesh) -> Vec<Vec<usize>> {
        let mut sets: Vec<Vec<usize>> = vec![Vec::new(); mesh.n_nodes()];
        for e in 0..mesh.n_elements() {
            let s = self.element_subdomain[e];
            for &n in mesh.element(e) {
                if !sets[n].contains(&s) {
                    sets[n].push(s);
                }
            }
        }
        for s in &mut sets {
            s.sort_unstable();
        }
        sets
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Velocity,
    Pressure,
    Scalar,
}

/// Dofs of one field on the mesh nodes: node n carries `components` consecutive dofs
/// starting at `first_dof[n]`.
#[derive(Clone, Debug)]
pub struct FieldDofs {
    pub kind: FieldKind,
    pub components: usize,
    pub first_dof: Vec<Option<usize>>,
    /// Nodes excluded from the interface (Dirichlet nodes of this field).
    pub excluded: Vec<bool>,
}

impl FieldDofs {
    pub fn dofs_of_node(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        let f = self.first_dof[n];
        (0..self.components).filter_map(move |c| f.map(|f| f + c))
    }
    pub fn has_dofs(&self) -> Vec<bool> {
        self.first_dof.iter().map(|f| f.is_some()).collect()
    }
}

/// Layout of all fields of an operator on one mesh.
#[derive(Clone, Debug)]
pub struct DofLayout {
    pub n_dofs: usize,
    pub fields: Vec<FieldDofs>,
}

impl DofLayout {
    pub fn velocity(dofs: &DofMap, dirichlet_nodes: &[bool]) -> Self {
        Self { n_dofs: dofs.n_velocity(), fields: vec![velocity_field(dofs, dirichlet_nodes)] }
    }

    pub fn pressure(dofs: &DofMap) -> Self {
        Self { n_dofs: dofs.n_pressure(), fields: vec![pressure_field(dofs, 0)] }
    }

    pub fn saddle(dofs: &DofMap, dirichlet_nodes: &[bool]) -> Self {
        Self {
            n_dofs: dofs.n_total(),
            fields: vec![velocity_field(dofs, dirichlet_nodes), pressure_field(dofs, dofs.n_velocity())],
        }
    }

    /// One scalar dof per mesh node, numbered like the nodes.
    pub fn scalar(n_nodes: usize, excluded: &[bool]) -> Self {
        Self {
            n_dofs: n_nodes,
            fields: vec![FieldDofs {
                kind: FieldKind::Scalar,
                components: 1,
                first_dof: (0..n_nodes).map(Some).collect(),
                excluded: excluded.to_vec(),
            }],
        }
    }

    /// Node of every dof.
    pub fn dof_nodes(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.n_dofs];
        for f in &self.fields {
            for n in 0..f.first_dof.len() {
                for d in f.dofs_of_node(n) {
                    out[d] = n;
                }
            }
        }
        out
    }
}

fn velocity_field(dofs: &DofMap, dirichlet_nodes: &[bool]) -> FieldDofs {
    FieldDofs {
        kind: FieldKind::Velocity,
        components: dofs.dim,
        first_dof: (0..dofs.n_nodes).map(|n| Some(dofs.dim * n)).collect(),
        excluded: dirichlet_nodes.to_vec(),
    }
}

fn pressure_field(dofs: &DofMap, offset: usize) -> FieldDofs {
    FieldDofs {
        kind: FieldKind::Pressure,
        components: 1,
        first_dof: dofs.pressure_index.iter().map(|p| p.map(|p| p + offset)).collect(),
        excluded: vec![false; dofs.n_nodes],
    }
}

/// Nonoverlapping dof sets: each dof belongs to the lowest-numbered subdomain sharing its node.
pub fn core_dofs(layout: &DofLayout, sharing: &[Vec<usize>], n_subdomains: usize) -> Vec<Vec<usize>> {
    let mut cores = vec![Vec::new(); n_subdomains];
    for f in &layout.fields {
        for (n, s) in sharing.iter().enumerate() {
            if let Some(&owner) = s.first() {
                cores[owner].extend(f.dofs_of_node(n));
            }
        }
    }
    for c in &mut cores {
        c.sort_unstable();
    }
    cores
}

/// Closed subdomains: every dof of every node touched by an element of the subdomain.
pub fn closure_dofs(layout: &DofLayout, sharing: &[Vec<usize>], n_subdomains: usize) -> Vec<Vec<usize>> {
    let mut sets = vec![Vec::new(); n_subdomains];
    for f in &layout.fields {
        for (n, s) in sharing.iter().enumerate() {
            for &i in s {
                sets[i].extend(f.dofs_of_node(n));
            }
        }
    }
    for c in &mut sets {
        c.sort_unstable();
    }
    sets
}

fn check_cores(n: usize, cores: &[Vec<usize>]) -> Result<Vec<usize>> {
    let mut owner = vec![usize::MAX; n];
    for (i, c) in cores.iter().enumerate() {
        for &d in c {
            if d >= n {
                return Err(Error::DimensionMismatch(format!("core dof {d} outside {n} dofs")));
            }
            if owner[d] != usize::MAX {
                return Err(Error::InvalidConfig(format!("dof {d} is in more than one core")));
            }
            owner[d] = i;
        }
    }
    if let Some(d) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(Error::InvalidConfig(format!("dof {d} is in no core")));
    }
    Ok(owner)
}

fn grow(graph: &CsrMatrix, starts: &[Vec<usize>], delta: usize) -> Vec<Vec<usize>> {
    let mut mark = vec![usize::MAX; graph.nrows()];
    let mut out = Vec::with_capacity(starts.len());
    for (i, start) in starts.iter().enumerate() {
        let mut set = Vec::with_capacity(start.len());
        for &d in start {
            if mark[d] != i {
                mark[d] = i;
                set.push(d);
            }
        }
        let mut frontier = set.clone();
        for _ in 0..delta {
            let mut next = Vec::new();
            for &r in &frontier {
                for &c in graph.neighbors(r) {
                    if mark[c] != i {
                        mark[c] = i;
                        next.push(c);
                    }
                }
            }
            set.extend_from_slice(&next);
            frontier = next;
        }
        set.sort_unstable();
        out.push(set);
    }
    out
}

/// Extends each core by `delta` rounds of sparsity-pattern neighbors: after each round,
/// every column index of every row in the set is added.
pub fn build_overlap(graph: &CsrMatrix, cores: &[Vec<usize>], delta: usize) -> Result<Vec<Vec<usize>>> {
    check_cores(graph.nrows(), cores)?;
    Ok(grow(graph, cores, delta))
}

/// Overlapping subdomains with restriction weights.
#[derive(Clone, Debug)]
pub struct OverlapDecomposition {
    pub n_dofs: usize,
    pub subdomains: Vec<Vec<usize>>,
    /// Weight of each local dof in the scaled prolongation; sum over subdomains of
    /// weight * indicator is one at every dof.
    pub weights: Vec<Vec<f64>>,
}

impl OverlapDecomposition {
    pub fn new(graph: &CsrMatrix, cores: &[Vec<usize>], delta: usize) -> Result<Self> {
        let owner = check_cores(graph.nrows(), cores)?;
        Self::with_sets(graph, owner, grow(graph, cores, delta))
    }

    /// Grows `closures` (each a superset of the matching core) instead of the cores, so
    /// `delta` layers reach `delta + 1` element layers past the nonoverlapping subdomain.
    pub fn from_closures(graph: &CsrMatrix, cores: &[Vec<usize>], closures: &[Vec<usize>], delta: usize) -> Result<Self> {
        let n = graph.nrows();
        let owner = check_cores(n, cores)?;
        if closures.len() != cores.len() {
            return Err(Error::DimensionMismatch(format!("{} closures for {} cores", closures.len(), cores.len())));
        }
        for (i, c) in closures.iter().enumerate() {
            if let Some(&d) = c.iter().find(|&&d| d >= n) {
                return Err(Error::DimensionMismatch(format!("closure dof {d} outside {n} dofs")));
            }
            let mut hit = vec![false; n];
            c.iter().for_each(|&d| hit[d] = true);
            if cores[i].iter().any(|&d| !hit[d]) {
                return Err(Error::InvalidConfig(format!("closure {i} does not contain its core")));
            }
        }
        Self::with_sets(graph, owner, grow(graph, closures, delta))
    }

    fn with_sets(graph: &CsrMatrix, owner: Vec<usize>, subdomains: Vec<Vec<usize>>) -> Result<Self> {
        let n = graph.nrows();
        // A dof is interior to a subdomain when all its graph neighbors are in it.
        let mut inside = vec![usize::MAX; n];
        let mut interior: Vec<Vec<bool>> = Vec::with_capacity(subdomains.len());
        let mut mult = vec![0usize; n];
        for (i, s) in subdomains.iter().enumerate() {
            for &d in s {
                inside[d] = i;
            }
            let flags: Vec<bool> = s.iter().map(|&d| graph.neighbors(d).iter().all(|&c| inside[c] == i)).collect();
            for (&d, &f) in s.iter().zip(&flags) {
                if f {
                    mult[d] += 1;
                }
            }
            interior.push(flags);
        }
        let weights = subdomains
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.iter()
                    .zip(&interior[i])
                    .map(|(&d, &f)| {
                        if mult[d] == 0 {
                            if owner[d] == i {
                                1.0
                            } else {
                                0.0
                            }
                        } else if f {
                            1.0 / mult[d] as f64
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self { n_dofs: n, subdomains, weights })
    }

    pub fn n_subdomains(&self) -> usize {
        self.subdomains.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Vertex,
    Edge,
    Face,
}

#[derive(Clone, Debug, Serialize)]
pub struct InterfaceComponent {
    pub kind: ComponentKind,
    /// Subdomains sharing the component, sorted.
    pub sharing: Vec<usize>,
    /// Nodes of the component, sorted.
    pub nodes: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InterfaceClassification {
    pub dim: usize,
    /// Components ordered by kind (vertex, edge, face), then sharing set.
    pub components: Vec<InterfaceComponent>,
    pub node_component: Vec<Option<usize>>,
}

/// Groups interface nodes (nodes of the field shared by two or more subdomains and not
/// excluded) by their exact sharing set. Two sharing subdomains make a face; more than
/// two make an edge if the group has several nodes and a vertex otherwise.
pub fn classify_interface(dim: usize, sharing: &[Vec<usize>], has_dof: &[bool], excluded: &[bool]) -> InterfaceClassification {
    let mut groups: BTreeMap<&[usize], Vec<usize>> = BTreeMap::new();
    for (n, s) in sharing.iter().enumerate() {
        if s.len() >= 2 && has_dof[n] && !excluded[n] {
            groups.entry(s.as_slice()).or_default().push(n);
        }
    }
    let mut components: Vec<InterfaceComponent> = groups
        .into_iter()
        .map(|(s, nodes)| {
            let kind = if s.len() == 2 {
                ComponentKind::Face
            } else if nodes.len() >= 2 {
                ComponentKind::Edge
            } else {
                ComponentKind::Vertex
            };
            InterfaceComponent { kind, sharing: s.to_vec(), nodes }
        })
        .collect();
    components.sort_by(|a, b| (a.kind, &a.sharing).cmp(&(b.kind, &b.sharing)));
    let mut node_component = vec![None; sharing.len()];
    for (i, c) in components.iter().enumerate() {
        for &n in &c.nodes {
            node_component[n] = Some(i);
        }
    }
    InterfaceClassification { dim, components, node_component }
}

impl InterfaceClassification {
    pub fn count(&self, kind: ComponentKind) -> usize {
        self.components.iter().filter(|c| c.kind == kind).count()
    }

    pub fn is_interface(&self, n: usize) -> bool {
        self.node_component[n].is_some()
    }

    /// Text dump: one line per component with kind, sharing set and node list.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "interface dim {} vertices {} edges {} faces {}",
            self.dim,
            self.count(ComponentKind::Vertex),
            self.count(ComponentKind::Edge),
            self.count(ComponentKind::Face)
        );
        for (i, c) in self.components.iter().enumerate() {
            let _ = writeln!(s, "{} {:?} sharing {:?} nodes {:?}", i, c.kind, c.sharing, c.nodes);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_cube, unit_square, CellType};

    fn chain(n: usize) -> CsrMatrix {
        let mut t = vec![];
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn chain_overlap_by_one() {
        let s = build_overlap(&chain(5), &[vec![0, 1, 2], vec![3, 4]], 1).unwrap();
        assert_eq!(s, vec![vec![0, 1, 2, 3], vec![2, 3, 4]]);
    }

    #[test]
    fn zero_overlap_returns_cores() {
        let cores = vec![vec![0, 1], vec![2, 3, 4]];
        assert_eq!(build_overlap(&chain(5), &cores, 0).unwrap(), cores);
    }

    #[test]
    fn cores_must_partition() {
        assert!(build_overlap(&chain(3), &[vec![0, 1], vec![1, 2]], 1).is_err());
        assert!(build_overlap(&chain(3), &[vec![0], vec![2]], 1).is_err());
    }

    #[test]
    fn weights_sum_to_one() {
        for delta in 0..3 {
            let d = OverlapDecomposition::new(&chain(9), &[vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]], delta).unwrap();
            let mut sum = vec![0.0; 9];
            for (s, w) in d.subdomains.iter().zip(&d.weights) {
                for (&i, &wi) in s.iter().zip(w) {
                    sum[i] += wi;
                }
            }
            assert!(sum.iter().all(|v| (v - 1.0).abs() < 1e-15), "delta {delta}: {sum:?}");
        }
    }

    fn element_graph(m: &Mesh) -> CsrMatrix {
        let mut t = vec![];
        for e in 0..m.n_elements() {
            for &a in m.element(e) {
                for &b in m.element(e) {
                    t.push((a, b, 1.0));
                }
            }
        }
        CsrMatrix::from_triplets(m.n_nodes(), m.n_nodes(), &t).unwrap()
    }

    #[test]
    fn closure_overlap_is_one_element_layer() {
        for cell in [CellType::Quadrilateral, CellType::Triangle] {
            let m = unit_square(4, cell, 1).unwrap();
            let p = Partition::boxes(&m, 2).unwrap();
            let sh = p.node_sharing(&m);
            let layout = DofLayout::scalar(m.n_nodes(), &vec![false; m.n_nodes()]);
            let cores = core_dofs(&layout, &sh, 4);
            let closures = closure_dofs(&layout, &sh, 4);
            let d = OverlapDecomposition::from_closures(&element_graph(&m), &cores, &closures, 1).unwrap();
            for i in 0..4 {
                // Elements touching subdomain i, then all of their nodes.
                let mut want: Vec<usize> = (0..m.n_elements())
                    .filter(|&e| m.element(e).iter().any(|&n| sh[n].contains(&i)))
                    .flat_map(|e| m.element(e).to_vec())
                    .collect();
                want.sort_unstable();
                want.dedup();
                assert_eq!(d.subdomains[i], want, "{cell:?} subdomain {i}");
            }
            let mut sum = vec![0.0; m.n_nodes()];
            for (s, w) in d.subdomains.iter().zip(&d.weights) {
                s.iter().zip(w).for_each(|(&k, &wk)| sum[k] += wk);
            }
            assert!(sum.iter().all(|v| (v - 1.0).abs() < 1e-15));
        }
    }

    #[test]
    fn closures_must_contain_cores() {
        let g = chain(4);
        assert!(OverlapDecomposition::from_closures(&g, &[vec![0, 1], vec![2, 3]], &[vec![0, 1, 2], vec![1, 2, 3]], 0).is_ok());
        assert!(OverlapDecomposition::from_closures(&g, &[vec![0, 1], vec![2, 3]], &[vec![0], vec![2, 3]], 0).is_err());
    }

    #[test]
    fn two_by_two_square_has_one_vertex_and_four_faces() {
        let m = unit_square(4, CellType::Quadrilateral, 1).unwrap();
        let p = Partition::boxes(&m, 2).unwrap();
        let sh = p.node_sharing(&m);
        let c = classify_interface(2, &sh, &vec![true; m.n_nodes()], &vec![false; m.n_nodes()]);
        assert_eq!((c.count(ComponentKind::Vertex), c.count(ComponentKind::Edge), c.count(ComponentKind::Face)), (1, 0, 4));
    }

    #[test]
    fn two_by_one_square_has_one_face() {
        let m = unit_square(4, CellType::Triangle, 1).unwrap();
        let mut assign = vec![];
        for e in 0..m.n_elements() {
            assign.push(if m.centroid(e)[0] < 0.5 { 0 } else { 1 });
        }
        let p = Partition::from_assignment(assign).unwrap();
        let c = classify_interface(2, &p.node_sharing(&m), &vec![true; m.n_nodes()], &vec![false; m.n_nodes()]);
        assert_eq!((c.count(ComponentKind::Vertex), c.count(ComponentKind::Edge), c.count(ComponentKind::Face)), (0, 0, 1));
    }

    #[test]
    fn cube_two_cubed_counts() {
        let m = unit_cube(6, 1).unwrap();
        let p = Partition::boxes(&m, 2).unwrap();
        let boundary: Vec<bool> = m.node_tags.iter().map(|t| t.is_some()).collect();
        let c = classify_interface(3, &p.node_sharing(&m), &vec![true; m.n_nodes()], &boundary);
        assert_eq!((c.count(ComponentKind::Vertex), c.count(ComponentKind::Edge), c.count(ComponentKind::Face)), (1, 6, 12));
    }

    #[test]
    fn box_partition_numbers_lexicographically() {
        let m = unit_square(4, CellType::Quadrilateral, 1).unwrap();
        let p = Partition::boxes(&m, 2).unwrap();
        assert_eq!(p.n_subdomains, 4);
        assert_eq!(p.element_subdomain[0], 0);
        assert_eq!(p.element_subdomain[3], 1);
        assert_eq!(p.element_subdomain[15], 3);
    }
}
