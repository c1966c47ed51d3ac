//! Energy-minimizing coarse spaces (GDSW, GDSW*, RGDSW).
//!
//! Interface values are built from a partition of unity on the interface times the null
//! space of the field (translations for velocity, constants for pressure and scalar
//! fields); interior values come from the discrete harmonic extension with the operator
//! itself, solved independently per subdomain.

use crate::decomp::{classify_interface, ComponentKind, DofLayout, FieldKind, InterfaceClassification};
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, SparseLu};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoarseKind {
    Gdsw,
    #[serde(rename = "gdsw*", alias = "gdsw_star")]
    GdswStar,
    Rgdsw,
}

impl std::str::FromStr for CoarseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gdsw" => Ok(Self::Gdsw),
            "gdsw*" | "gdsw_star" | "gdswstar" => Ok(Self::GdswStar),
            "rgdsw" => Ok(Self::Rgdsw),
            _ => Err(Error::InvalidConfig(format!("unknown coarse space {s}"))),
        }
    }
}

/// One interface partition-of-unity function, identified by its root component.
#[derive(Clone, Debug, Serialize)]
pub struct PouFunction {
    pub kind: ComponentKind,
    pub sharing: Vec<usize>,
    /// (node, value) pairs, sorted by node.
    pub values: Vec<(usize, f64)>,
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

/// Interface partition of unity for the chosen variant. Functions are ordered like
/// their root components (vertex, edge, face, then sharing set).
pub fn partition_of_unity(cls: &InterfaceClassification, kind: CoarseKind) -> Vec<PouFunction> {
    let comps = &cls.components;
    let indicator = |i: usize| PouFunction {
        kind: comps[i].kind,
        sharing: comps[i].sharing.clone(),
        values: comps[i].nodes.iter().map(|&n| (n, 1.0)).collect(),
    };
    // Components eligible to be grouped under a root; faces stay separate in 3D GDSW*.
    let grouped: Vec<bool> = comps
        .iter()
        .map(|c| match kind {
            CoarseKind::Gdsw => false,
            CoarseKind::Rgdsw => true,
            CoarseKind::GdswStar => cls.dim == 2 || c.kind != ComponentKind::Face,
        })
        .collect();
    if kind == CoarseKind::Gdsw {
        return (0..comps.len()).map(indicator).collect();
    }
    let idx: Vec<usize> = (0..comps.len()).filter(|&i| grouped[i]).collect();
    let is_root = |i: usize| {
        !idx.iter().any(|&j| j != i && comps[j].sharing.len() > comps[i].sharing.len() && is_subset(&comps[i].sharing, &comps[j].sharing))
    };
    let roots: Vec<usize> = idx.iter().copied().filter(|&i| is_root(i)).collect();
    let mut funcs: Vec<(usize, Vec<(usize, f64)>)> = roots.iter().map(|&r| (r, Vec::new())).collect();
    for &i in &idx {
        let anc: Vec<usize> = (0..roots.len()).filter(|&k| is_subset(&comps[i].sharing, &comps[roots[k]].sharing)).collect();
        let w = 1.0 / anc.len() as f64;
        for k in anc {
            funcs[k].1.extend(comps[i].nodes.iter().map(|&n| (n, w)));
        }
    }
    let mut out: Vec<(usize, PouFunction)> = funcs
        .into_iter()
        .map(|(r, mut v)| {
            v.sort_by_key(|e| e.0);
            (r, PouFunction { kind: comps[r].kind, sharing: comps[r].sharing.clone(), values: v })
        })
        .collect();
    for i in (0..comps.len()).filter(|&i| !grouped[i]) {
        out.push((i, indicator(i)));
    }
    out.sort_by_key(|e| e.0);
    out.into_iter().map(|e| e.1).collect()
}

/// Describes one coarse basis column.
#[derive(Clone, Debug, Serialize)]
pub struct CoarseColumn {
    pub field: FieldKind,
    pub kind: ComponentKind,
    pub sharing: Vec<usize>,
    /// Null-space vector index (velocity component for translations).
    pub mode: usize,
}

#[derive(Clone, Debug)]
pub struct CoarseSpace {
    /// n_dofs x n_coarse basis.
    pub phi: CsrMatrix,
    pub columns: Vec<CoarseColumn>,
    /// Interface flag of every dof.
    pub gamma: Vec<bool>,
}

impl CoarseSpace {
    pub fn dim(&self) -> usize {
        self.phi.ncols()
    }

    pub fn dim_of_field(&self, f: FieldKind) -> usize {
        self.columns.iter().filter(|c| c.field == f).count()
    }

    /// JSON metadata of the columns, for export next to the Matrix Market file of `phi`.
    pub fn columns_json(&self) -> String {
        serde_json::to_string_pretty(&self.columns).expect("columns serialize")
    }
}

/// Interface values Phi_Gamma (zero on interior dofs) and column descriptions.
pub fn interface_basis(
    layout: &DofLayout,
    classifications: &[InterfaceClassification],
    kinds: &[CoarseKind],
) -> Result<(CsrMatrix, Vec<CoarseColumn>, Vec<bool>)> {
    if classifications.len() != layout.fields.len() || kinds.len() != layout.fields.len() {
        return Err(Error::InvalidConfig("one classification and coarse kind per field is required".into()));
    }
    let mut trip = Vec::new();
    let mut columns = Vec::new();
    let mut gamma = vec![false; layout.n_dofs];
    for ((field, cls), &kind) in layout.fields.iter().zip(classifications).zip(kinds) {
        for n in 0..field.first_dof.len() {
            if cls.is_interface(n) {
                for d in field.dofs_of_node(n) {
                    gamma[d] = true;
                }
            }
        }
        let pou = partition_of_unity(cls, kind);
        let modes = if field.kind == FieldKind::Velocity { field.components } else { 1 };
        for f in &pou {
            for m in 0..modes {
                let col = columns.len();
                for &(n, v) in &f.values {
                    if let Some(first) = field.first_dof[n] {
                        let dof = if field.kind == FieldKind::Velocity { first + m } else { first };
                        trip.push((dof, col, v));
                    }
                }
                columns.push(CoarseColumn { field: field.kind, kind: f.kind, sharing: f.sharing.clone(), mode: m });
            }
        }
    }
    let phi = CsrMatrix::from_triplets(layout.n_dofs, columns.len(), &trip)?;
    Ok((phi, columns, gamma))
}

/// Discrete harmonic extension Phi_I = -K_II^{-1} K_IGamma Phi_Gamma.
///
/// `block[d]` names the subdomain whose interior holds dof `d`. Rows of K with only a
/// diagonal entry (Dirichlet rows) are solved directly; the remaining interior dofs
/// must not couple across blocks, otherwise all blocks are merged into one solve.
pub fn harmonic_extension(k: &CsrMatrix, phi_gamma: &CsrMatrix, gamma: &[bool], block: &[usize]) -> Result<CsrMatrix> {
    let n = k.nrows();
    let nc = phi_gamma.ncols();
    if nc == 0 {
        return CsrMatrix::from_triplets(n, 0, &[]);
    }
    let trivial: Vec<bool> = (0..n).map(|r| !gamma[r] && k.neighbors(r) == [r]).collect();
    let nblocks = block.iter().filter(|&&b| b != usize::MAX).max().map_or(0, |m| m + 1);
    let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); nblocks];
    for r in 0..n {
        if !gamma[r] && !trivial[r] {
            rows_of[block[r]].push(r);
        }
    }
    let coupled = (0..n).any(|r| {
        !gamma[r] && !trivial[r] && k.neighbors(r).iter().any(|&c| !gamma[c] && !trivial[c] && block[c] != block[r])
    });
    if coupled {
        log::debug!("interior blocks are coupled; using one global interior solve");
        let all: Vec<usize> = rows_of.concat();
        let mut all = all;
        all.sort_unstable();
        rows_of = vec![all];
    }
    // Known part: interface values, and trivial rows solved directly (their K_IGamma rows vanish).
    let mut known_trip: Vec<(usize, usize, f64)> = Vec::new();
    for r in 0..n {
        let (cs, vs) = phi_gamma.row(r);
        if gamma[r] {
            for (&c, &v) in cs.iter().zip(vs) {
                known_trip.push((r, c, v));
            }
        }
    }
    let known = CsrMatrix::from_triplets(n, nc, &known_trip)?;
    let rhs_all = k.matmul(&known);
    let solve_block = |rows: &Vec<usize>| -> Result<Vec<(usize, usize, f64)>> {
        if rows.is_empty() {
            return Ok(vec![]);
        }
        let kbb = k.submatrix(rows, rows);
        let lu = SparseLu::factor(&kbb)?;
        let sub = rhs_all.submatrix(rows, &(0..nc).collect::<Vec<_>>());
        let subt = sub.transpose();
        let mut out = Vec::new();
        let mut b = vec![0.0; rows.len()];
        for c in 0..nc {
            let (ls, vs) = subt.row(c);
            if ls.is_empty() || vs.iter().all(|v| *v == 0.0) {
                continue;
            }
            b.iter_mut().for_each(|x| *x = 0.0);
            for (&l, &v) in ls.iter().zip(vs) {
                b[l] = -v;
            }
            let x = lu.solve(&b);
            for (l, &xv) in x.iter().enumerate() {
                if xv != 0.0 {
                    out.push((rows[l], c, xv));
                }
            }
        }
        Ok(out)
    };
    let results: Vec<Result<Vec<(usize, usize, f64)>>> = crate::par::map(&rows_of, solve_block);
    let mut trip = known_trip;
    for (i, r) in results.into_iter().enumerate() {
        trip.extend(r.map_err(|e| Error::Subdomain { subdomain: i, source: Box::new(e) })?);
    }
    // Trivial rows: K_rr x_r = -(K Phi_known)_r, which is zero for unit Dirichlet rows.
    for r in 0..n {
        if trivial[r] {
            let d = k.get(r, r);
            let (cs, vs) = rhs_all.row(r);
            for (&c, &v) in cs.iter().zip(vs) {
                if v != 0.0 {
                    trip.push((r, c, -v / d));
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, nc, &trip)
}

/// Interface classification of every field of a layout.
pub fn classify_layout(dim: usize, layout: &DofLayout, sharing: &[Vec<usize>]) -> Vec<InterfaceClassification> {
    layout.fields.iter().map(|f| classify_interface(dim, sharing, &f.has_dofs(), &f.excluded)).collect()
}

/// Interior block of every dof: the single subdomain sharing its node, or the lowest one.
pub fn interior_blocks(layout: &DofLayout, sharing: &[Vec<usize>]) -> Vec<usize> {
    let nodes = layout.dof_nodes();
    nodes.iter().map(|&n| sharing[n].first().copied().unwrap_or(0)).collect()
}

/// Builds the full coarse basis for operator `k` on `layout`.
pub fn build_coarse_space(
    k: &CsrMatrix,
    layout: &DofLayout,
    sharing: &[Vec<usize>],
    classifications: &[InterfaceClassification],
    kinds: &[CoarseKind],
    decoupled: bool,
) -> Result<CoarseSpace> {
    if k.nrows() != layout.n_dofs {
        return Err(Error::DimensionMismatch(format!("operator {} vs layout {}", k.nrows(), layout.n_dofs)));
    }
    let (phi_gamma, columns, gamma) = interface_basis(layout, classifications, kinds)?;
    let block = interior_blocks(layout, sharing);
    let mut phi = harmonic_extension(k, &phi_gamma, &gamma, &block)?;
    if decoupled && layout.fields.len() > 1 {
        let mut field_of_dof = vec![FieldKind::Scalar; layout.n_dofs];
        for f in &layout.fields {
            for n in 0..f.first_dof.len() {
                for d in f.dofs_of_node(n) {
                    field_of_dof[d] = f.kind;
                }
            }
        }
        let mut trip = Vec::new();
        for r in 0..phi.nrows() {
            let (cs, vs) = phi.row(r);
            for (&c, &v) in cs.iter().zip(vs) {
                if columns[c].field == field_of_dof[r] {
                    trip.push((r, c, v));
                }
            }
        }
        phi = CsrMatrix::from_triplets(phi.nrows(), phi.ncols(), &trip)?;
    }
    Ok(CoarseSpace { phi, columns, gamma })
}

/// Galerkin product Phi^T K Phi.
pub fn galerkin(k: &CsrMatrix, phi: &CsrMatrix) -> CsrMatrix {
    phi.transpose().matmul(&k.matmul(phi))
}
