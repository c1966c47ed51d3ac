//! Structured meshes of unions of unit blocks: unit square and cube, and the 2D and 3D
//! backward-facing step. Triangles come from splitting each square cell along its
//! lower-left to upper-right diagonal.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellType {
    Triangle,
    Quadrilateral,
    Hexahedron,
}

impl CellType {
    pub fn dim(self) -> usize {
        match self {
            CellType::Triangle | CellType::Quadrilateral => 2,
            CellType::Hexahedron => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryTag {
    Inflow,
    Wall,
    Outflow,
}

impl BoundaryTag {
    fn priority(self) -> u8 {
        match self {
            BoundaryTag::Inflow => 0,
            BoundaryTag::Wall => 1,
            BoundaryTag::Outflow => 2,
        }
    }
}

/// A boundary facet (edge in 2D, face in 3D). Nodes are in tensor order of the facet, so
/// the corners are entries 0 and k (2D) or 0, k, k(k+1), (k+1)^2-1 (3D) for order k.
#[derive(Clone, Debug)]
pub struct BoundaryFacet {
    pub nodes: Vec<usize>,
    pub tag: BoundaryTag,
    pub element: usize,
    /// Outward unit normal.
    pub normal: [f64; 3],
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub cell: CellType,
    pub order: usize,
    pub coords: Vec<[f64; 3]>,
    nodes_per_element: usize,
    element_nodes: Vec<usize>,
    /// Element-local indices of the geometric vertices.
    pub vertex_local: Vec<usize>,
    pub is_vertex: Vec<bool>,
    /// Tag of each boundary node; inflow beats wall beats outflow at shared corners.
    pub node_tags: Vec<Option<BoundaryTag>>,
    pub facets: Vec<BoundaryFacet>,
    /// Cell edge length.
    pub h: f64,
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.cell.dim()
    }
    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }
    pub fn n_elements(&self) -> usize {
        self.element_nodes.len() / self.nodes_per_element
    }
    pub fn nodes_per_element(&self) -> usize {
        self.nodes_per_element
    }
    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.nodes_per_element;
        &self.element_nodes[e * k..(e + 1) * k]
    }
    pub fn element_vertices(&self, e: usize) -> Vec<usize> {
        let el = self.element(e);
        self.vertex_local.iter().map(|&l| el[l]).collect()
    }
    pub fn n_vertices(&self) -> usize {
        self.is_vertex.iter().filter(|&&v| v).count()
    }

    pub fn centroid(&self, e: usize) -> [f64; 3] {
        let vs = self.element_vertices(e);
        let mut c = [0.0; 3];
        for &v in &vs {
            for d in 0..3 {
                c[d] += self.coords[v][d];
            }
        }
        c.map(|x| x / vs.len() as f64)
    }

    /// Inscribed-circle diameter for triangles, shortest edge for quadrilaterals and hexahedra.
    pub fn inner_diameter(&self, e: usize) -> f64 {
        let v = self.element_vertices(e);
        let dist = |a: usize, b: usize| {
            let (p, q) = (self.coords[a], self.coords[b]);
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
        };
        match self.cell {
            CellType::Triangle => {
                let (a, b, c) = (dist(v[0], v[1]), dist(v[1], v[2]), dist(v[2], v[0]));
                let p = self.coords[v[0]];
                let q = self.coords[v[1]];
                let r = self.coords[v[2]];
                let area = 0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1])).abs();
                4.0 * area / (a + b + c)
            }
            CellType::Quadrilateral => {
                // Tensor vertex order 00, 10, 01, 11.
                [(0, 1), (1, 3), (3, 2), (2, 0)].iter().map(|&(i, j)| dist(v[i], v[j])).fold(f64::INFINITY, f64::min)
            }
            CellType::Hexahedron => {
                let mut m = f64::INFINITY;
                for i in 0..8usize {
                    for bit in [1usize, 2, 4] {
                        if i & bit == 0 {
                            m = m.min(dist(v[i], v[i | bit]));
                        }
                    }
                }
                m
            }
        }
    }

    /// Nodes of boundary facets carrying `tag`.
    pub fn facet_nodes_with_tag(&self, tag: BoundaryTag) -> Vec<bool> {
        let mut on = vec![false; self.n_nodes()];
        for f in self.facets.iter().filter(|f| f.tag == tag) {
            for &n in &f.nodes {
                on[n] = true;
            }
        }
        on
    }

    /// Plain-text export: header, node coordinates with tags, element connectivity.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "mesh {:?} order {} dim {} nodes {} elements {}",
            self.cell,
            self.order,
            self.dim(),
            self.n_nodes(),
            self.n_elements()
        );
        for (i, c) in self.coords.iter().enumerate() {
            let tag = match self.node_tags[i] {
                None => "interior",
                Some(BoundaryTag::Inflow) => "inflow",
                Some(BoundaryTag::Wall) => "wall",
                Some(BoundaryTag::Outflow) => "outflow",
            };
            let _ = writeln!(s, "n {} {:.12} {:.12} {:.12} {}", i, c[0], c[1], c[2], tag);
        }
        for e in 0..self.n_elements() {
            let _ = write!(s, "e {}", e);
            for n in self.element(e) {
                let _ = write!(s, " {}", n);
            }
            s.push('\n');
        }
        s
    }
}

/// Unit square with `n` cells per side.
pub fn unit_square(n: usize, cell: CellType, order: usize) -> Result<Mesh> {
    if cell == CellType::Hexahedron {
        return Err(Error::InvalidMesh("unit square needs triangles or quadrilaterals".into()));
    }
    build(&[[0, 0, 0]], 2, n, cell, order, |_| BoundaryTag::Wall)
}

/// Unit cube with `n` hexahedra per side.
pub fn unit_cube(n: usize, order: usize) -> Result<Mesh> {
    build(&[[0, 0, 0]], 3, n, CellType::Hexahedron, order, |_| BoundaryTag::Wall)
}

/// Length of the inlet channel before the step.
pub const BFS_INLET_LENGTH: f64 = 1.0;
/// Length of the channel after the step.
pub const BFS_OUTLET_LENGTH: f64 = 4.0;

fn bfs_blocks() -> Vec<[i64; 3]> {
    // Inlet channel [0,1] x [0,1]; main channel [1,5] x [0,2]; unit depth in 3D.
    let mut b = vec![[0, 0, 0]];
    for x in 1..5 {
        for y in 0..2 {
            b.push([x, y, 0]);
        }
    }
    b
}

fn bfs_tag(c: [f64; 3]) -> BoundaryTag {
    let tol = 1e-9;
    if c[0].abs() < tol {
        BoundaryTag::Inflow
    } else if (c[0] - (BFS_INLET_LENGTH + BFS_OUTLET_LENGTH)).abs() < tol {
        BoundaryTag::Outflow
    } else {
        BoundaryTag::Wall
    }
}

/// Backward-facing step in 2D built from 9 unit squares, `n` cells per unit length.
pub fn backward_facing_step_2d(n: usize, cell: CellType, order: usize) -> Result<Mesh> {
    if cell == CellType::Hexahedron {
        return Err(Error::InvalidMesh("2D step needs triangles or quadrilaterals".into()));
    }
    build(&bfs_blocks(), 2, n, cell, order, bfs_tag)
}

/// Backward-facing step in 3D built from 9 unit cubes, `n` hexahedra per unit length.
pub fn backward_facing_step_3d(n: usize, order: usize) -> Result<Mesh> {
    build(&bfs_blocks(), 3, n, CellType::Hexahedron, order, bfs_tag)
}

fn build(
    blocks: &[[i64; 3]],
    dim: usize,
    n: usize,
    cell: CellType,
    order: usize,
    tagger: impl Fn([f64; 3]) -> BoundaryTag,
) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidMesh("need at least one cell per unit length".into()));
    }
    if order != 1 && order != 2 {
        return Err(Error::InvalidMesh(format!("order {order} is not supported")));
    }
    let k = order as i64;
    let ni = n as i64;
    // Cells as lattice origins (in units of h / order).
    let mut cells: Vec<[i64; 3]> = Vec::new();
    for b in blocks {
        let zr = if dim == 3 { 0..ni } else { 0..1 };
        for cz in zr {
            for cy in 0..ni {
                for cx in 0..ni {
                    cells.push([(b[0] * ni + cx) * k, (b[1] * ni + cy) * k, (b[2] * ni + cz) * k]);
                }
            }
        }
    }
    cells.sort_by_key(|c| (c[2], c[1], c[0]));
    // Local lattice offsets of each element kind, in element-local node order.
    let tensor = |d: usize| -> Vec<[i64; 3]> {
        let mut v = Vec::new();
        let zr = if d == 3 { 0..=k } else { 0..=0 };
        for c in zr {
            for b in 0..=k {
                for a in 0..=k {
                    v.push([a, b, c]);
                }
            }
        }
        v
    };
    let elements_of_cell: Vec<Vec<[i64; 3]>> = match cell {
        CellType::Triangle => {
            let tri = |v: [[i64; 3]; 3]| -> Vec<[i64; 3]> {
                let mut out = v.to_vec();
                if k == 2 {
                    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                        out.push([(v[i][0] + v[j][0]) / 2, (v[i][1] + v[j][1]) / 2, 0]);
                    }
                }
                out
            };
            vec![tri([[0, 0, 0], [k, 0, 0], [k, k, 0]]), tri([[0, 0, 0], [k, k, 0], [0, k, 0]])]
        }
        CellType::Quadrilateral => vec![tensor(2)],
        CellType::Hexahedron => vec![tensor(3)],
    };
    let nodes_per_element = elements_of_cell[0].len();
    let vertex_local: Vec<usize> = match cell {
        CellType::Triangle => vec![0, 1, 2],
        CellType::Quadrilateral => {
            let s = (k + 1) as usize;
            vec![0, k as usize, s * k as usize, s * s - 1]
        }
        CellType::Hexahedron => {
            let s = (k + 1) as usize;
            let mut v = Vec::new();
            for c in [0, k as usize] {
                for b in [0, k as usize] {
                    for a in [0, k as usize] {
                        v.push(a + s * b + s * s * c);
                    }
                }
            }
            v
        }
    };
    // Gather and number lattice points lexicographically by (z, y, x).
    let mut pts: Vec<[i64; 3]> = Vec::new();
    for c in &cells {
        for el in &elements_of_cell {
            for o in el {
                pts.push([c[0] + o[0], c[1] + o[1], c[2] + o[2]]);
            }
        }
    }
    pts.sort_by_key(|p| (p[2], p[1], p[0]));
    pts.dedup();
    let index: HashMap<[i64; 3], usize> = pts.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let scale = 1.0 / (n as f64 * order as f64);
    let coords: Vec<[f64; 3]> =
        pts.iter().map(|p| [p[0] as f64 * scale, p[1] as f64 * scale, p[2] as f64 * scale]).collect();
    let is_vertex: Vec<bool> = pts.iter().map(|p| p.iter().all(|x| x % k == 0)).collect();
    let mut element_nodes = Vec::with_capacity(cells.len() * elements_of_cell.len() * nodes_per_element);
    for c in &cells {
        for el in &elements_of_cell {
            for o in el {
                element_nodes.push(index[&[c[0] + o[0], c[1] + o[1], c[2] + o[2]]]);
            }
        }
    }
    let mut mesh = Mesh {
        cell,
        order,
        node_tags: vec![None; coords.len()],
        coords,
        nodes_per_element,
        element_nodes,
        vertex_local,
        is_vertex,
        facets: Vec::new(),
        h: 1.0 / n as f64,
    };
    mesh.facets = boundary_facets(&mesh, &tagger);
    let mut tags: Vec<Option<BoundaryTag>> = vec![None; mesh.n_nodes()];
    for f in &mesh.facets {
        for &nd in &f.nodes {
            tags[nd] = Some(match tags[nd] {
                Some(t) if t.priority() <= f.tag.priority() => t,
                _ => f.tag,
            });
        }
    }
    mesh.node_tags = tags;
    Ok(mesh)
}

/// Element-local facet node lists in facet tensor order.
fn local_facets(cell: CellType, order: usize) -> Vec<Vec<usize>> {
    let k = order;
    let s = k + 1;
    match cell {
        CellType::Triangle => {
            if k == 1 {
                vec![vec![0, 1], vec![1, 2], vec![2, 0]]
            } else {
                vec![vec![0, 3, 1], vec![1, 4, 2], vec![2, 5, 0]]
            }
        }
        CellType::Quadrilateral => vec![
            (0..s).collect(),
            (0..s).map(|a| a + s * k).collect(),
            (0..s).map(|b| s * b).collect(),
            (0..s).map(|b| k + s * b).collect(),
        ],
        CellType::Hexahedron => {
            let id = |a: usize, b: usize, c: usize| a + s * b + s * s * c;
            let mut f = Vec::new();
            for fixed in [0, k] {
                f.push((0..s).flat_map(|b| (0..s).map(move |a| (a, b))).map(|(a, b)| id(a, b, fixed)).collect());
                f.push((0..s).flat_map(|c| (0..s).map(move |a| (a, c))).map(|(a, c)| id(a, fixed, c)).collect());
                f.push((0..s).flat_map(|c| (0..s).map(move |b| (b, c))).map(|(b, c)| id(fixed, b, c)).collect());
            }
            f
        }
    }
}

fn boundary_facets(mesh: &Mesh, tagger: &impl Fn([f64; 3]) -> BoundaryTag) -> Vec<BoundaryFacet> {
    let lf = local_facets(mesh.cell, mesh.order);
    let mut count: HashMap<Vec<usize>, (usize, usize, usize)> = HashMap::new();
    for e in 0..mesh.n_elements() {
        let el = mesh.element(e);
        for (fi, f) in lf.iter().enumerate() {
            let mut key: Vec<usize> = f.iter().map(|&l| el[l]).filter(|&n| mesh.is_vertex[n]).collect();
            key.sort_unstable();
            let entry = count.entry(key).or_insert((0, e, fi));
            entry.0 += 1;
        }
    }
    let mut out: Vec<(usize, usize)> =
        count.values().filter(|(c, _, _)| *c == 1).map(|&(_, e, fi)| (e, fi)).collect();
    out.sort_unstable();
    out.into_iter()
        .map(|(e, fi)| {
            let el = mesh.element(e);
            let nodes: Vec<usize> = lf[fi].iter().map(|&l| el[l]).collect();
            let corners: Vec<[f64; 3]> =
                nodes.iter().filter(|&&n| mesh.is_vertex[n]).map(|&n| mesh.coords[n]).collect();
            let mut fc = [0.0; 3];
            for c in &corners {
                for d in 0..3 {
                    fc[d] += c[d] / corners.len() as f64;
                }
            }
            let normal = facet_normal(mesh.dim(), &corners, fc, mesh.centroid(e));
            BoundaryFacet { nodes, tag: tagger(fc), element: e, normal }
        })
        .collect()
}

fn facet_normal(dim: usize, corners: &[[f64; 3]], fc: [f64; 3], ec: [f64; 3]) -> [f64; 3] {
    let sub = |a: [f64; 3], b: [f64; 3]| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let mut n = if dim == 2 {
        let t = sub(corners[1], corners[0]);
        [t[1], -t[0], 0.0]
    } else {
        let t1 = sub(corners[1], corners[0]);
        let t2 = sub(corners[2], corners[0]);
        [t1[1] * t2[2] - t1[2] * t2[1], t1[2] * t2[0] - t1[0] * t2[2], t1[0] * t2[1] - t1[1] * t2[0]]
    };
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    n = n.map(|x| x / len);
    let out = sub(fc, ec);
    if n[0] * out[0] + n[1] * out[1] + n[2] * out[2] < 0.0 {
        n = n.map(|x| -x);
    }
    n
}
