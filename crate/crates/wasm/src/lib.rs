//! Browser bindings: a driven cavity speed field, coarse basis functions and GMRES
//! residual histories for one- and two-level Schwarz on a Laplace model problem.

use nsprec::bench::{solve, RunConfig};
use nsprec::coarse::CoarseKind;
use nsprec::decomp::{DofLayout, Partition};
use nsprec::fe::{Assembler, DofMap};
use nsprec::krylov::{gmres, GmresOptions};
use nsprec::mesh::{unit_square, CellType};
use nsprec::schwarz::{SchwarzConfig, SchwarzDomain, SchwarzPreconditioner};
use nsprec::sparse::CsrMatrix;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn coarse_kind(name: &str) -> Result<CoarseKind, JsError> {
    match name {
        "gdsw" => Ok(CoarseKind::Gdsw),
        "gdsw*" => Ok(CoarseKind::GdswStar),
        "rgdsw" => Ok(CoarseKind::Rgdsw),
        _ => Err(JsError::new(&format!("unknown coarse space '{name}'"))),
    }
}

/// Nodal values on a Q1 or Q2 unit square mesh, resampled row-major on its node lattice.
fn lattice(coords: &[[f64; 3]], values: impl Fn(usize) -> f64, side: usize) -> Vec<f64> {
    let mut grid = vec![0.0; side * side];
    let s = (side - 1) as f64;
    for (i, x) in coords.iter().enumerate() {
        let (c, r) = ((x[0] * s).round() as usize, (x[1] * s).round() as usize);
        grid[r * side + c] = values(i);
    }
    grid
}

struct Laplace {
    k: CsrMatrix,
    domain: SchwarzDomain,
    coords: Vec<[f64; 3]>,
    side: usize,
}

/// Q1 Laplacian on the unit square with `per_unit` x `per_unit` box subdomains and
/// homogeneous Dirichlet rows on the boundary.
fn laplace(cells: usize, per_unit: usize, overlap: usize) -> Result<Laplace, JsError> {
    let m = unit_square(cells, CellType::Quadrilateral, 1).map_err(js_err)?;
    let dofs = DofMap::new(&m);
    let mut k = Assembler::new(&m, &dofs).scalar_laplacian();
    let boundary: Vec<bool> = m.node_tags.iter().map(|t| t.is_some()).collect();
    k.set_identity_rows(&boundary);
    let p = Partition::boxes(&m, per_unit).map_err(js_err)?;
    let sharing = p.node_sharing(&m);
    let layout = DofLayout::scalar(m.n_nodes(), &boundary);
    let domain = SchwarzDomain::new(2, &k, layout, sharing, p.n_subdomains, overlap).map_err(js_err)?;
    Ok(Laplace { k, domain, coords: m.coords, side: cells + 1 })
}

/// Solves the stationary 2D driven cavity with P2-P1 elements and the two-level monolithic
/// preconditioner. Returns the speed on the (2n+1)^2 node lattice, n = h_ratio * subdomains,
/// followed by the average GMRES iteration count.
#[wasm_bindgen]
pub fn cavity_speed(h_ratio: usize, subdomains: usize, nu: f64) -> Result<Vec<f64>, JsError> {
    let json = format!(
        r#"{{"schema":"nsprec-run/1","name":"demo","problem":"cavity2d","discretization":"p2p1",
        "h_ratio":{h_ratio},"subdomains":{subdomains},"mode":"stationary","nu":{nu},
        "preconditioner":{{"type":"monolithic","schwarz":{{"coarse":["rgdsw","rgdsw"]}}}}}}"#
    );
    let cfg = RunConfig::from_json(&json).map_err(js_err)?;
    let sol = solve(&cfg).map_err(js_err)?;
    if !sol.report.converged() {
        return Err(JsError::new("cavity solve diverged"));
    }
    let side = 2 * h_ratio * subdomains + 1;
    let u = &sol.state;
    let mut out = lattice(&sol.problem.mesh.coords, |i| u[2 * i].hypot(u[2 * i + 1]), side);
    out.push(sol.report.avg_iterations);
    Ok(out)
}

/// Number of coarse basis functions of the Laplace model problem.
#[wasm_bindgen]
pub fn coarse_dimension(cells: usize, per_unit: usize, kind: &str) -> Result<usize, JsError> {
    let lp = laplace(cells, per_unit, 1)?;
    let pc = SchwarzPreconditioner::setup(&lp.k, &lp.domain, &SchwarzConfig::two_level(coarse_kind(kind)?, 1), None)
        .map_err(js_err)?;
    Ok(pc.coarse().map_or(0, |c| c.space.dim()))
}

/// One coarse basis function of the Laplace model problem on the (cells+1)^2 node lattice.
#[wasm_bindgen]
pub fn coarse_basis(cells: usize, per_unit: usize, kind: &str, column: usize) -> Result<Vec<f64>, JsError> {
    let lp = laplace(cells, per_unit, 1)?;
    let pc = SchwarzPreconditioner::setup(&lp.k, &lp.domain, &SchwarzConfig::two_level(coarse_kind(kind)?, 1), None)
        .map_err(js_err)?;
    let phi = &pc.coarse().ok_or_else(|| JsError::new("no coarse level"))?.space.phi;
    if column >= phi.ncols() {
        return Err(JsError::new(&format!("column {column} out of range, dimension {}", phi.ncols())));
    }
    let mut values = vec![0.0; phi.nrows()];
    for (r, v) in values.iter_mut().enumerate() {
        let (cs, vs) = phi.row(r);
        *v = cs.iter().zip(vs).filter(|(&c, _)| c == column).map(|(_, &x)| x).sum();
    }
    Ok(lattice(&lp.coords, |i| values[i], lp.side))
}

/// Relative GMRES residual after every iteration for a unit right-hand side. `kind` is
/// "none" for one-level Schwarz or a coarse space name.
#[wasm_bindgen]
pub fn gmres_history(cells: usize, per_unit: usize, overlap: usize, kind: &str) -> Result<Vec<f64>, JsError> {
    let lp = laplace(cells, per_unit, overlap)?;
    let cfg = match kind {
        "none" => SchwarzConfig::one_level(overlap),
        _ => SchwarzConfig::two_level(coarse_kind(kind)?, overlap),
    };
    let pc = SchwarzPreconditioner::setup(&lp.k, &lp.domain, &cfg, None).map_err(js_err)?;
    let b: Vec<f64> = lp.coords.iter().map(|x| if x[0] > 0.0 && x[0] < 1.0 && x[1] > 0.0 && x[1] < 1.0 { 1.0 } else { 0.0 }).collect();
    let opts = GmresOptions { tol: 1e-8, max_iterations: 500, restart: None };
    let res = gmres(&lp.k, &pc, &b, None, &opts).map_err(js_err)?;
    Ok(res.residual_history)
}
