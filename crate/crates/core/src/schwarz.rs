//! One- and two-level additive overlapping Schwarz preconditioners.
//!
//! The same code serves scalar/vector blocks (one field) and the monolithic saddle point
//! system (velocity and pressure fields); only the dof layout differs.

use crate::coarse::{build_coarse_space, classify_layout, galerkin, CoarseKind, CoarseSpace};
use crate::decomp::{closure_dofs, core_dofs, DofLayout, InterfaceClassification, OverlapDecomposition};
use crate::error::{Error, Result};
use crate::linop::LinearOperator;
use crate::sparse::{CsrMatrix, LuOptions, NullPivotPolicy, SparseLu};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use web_time::Instant;

/// Which parts of a previous setup are kept when the matrix changes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReusePolicy {
    /// Symbolic factorization of the coarse matrix.
    pub symbolic: bool,
    /// Coarse basis functions.
    pub basis: bool,
    /// Coarse matrix and its factorization.
    pub coarse_matrix: bool,
    /// Rebuild the preconditioner only in the first k Newton steps; interpreted by the caller.
    pub rebuild_first_k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchwarzConfig {
    pub levels: u8,
    /// Coarse space per field of the layout; a single entry applies to every field.
    pub coarse: Vec<CoarseKind>,
    pub overlap: usize,
    pub decoupled: bool,
    pub pressure_projection: bool,
    pub reuse: ReusePolicy,
    #[serde(skip)]
    pub local_lu: LuOptions,
    #[serde(skip)]
    pub coarse_lu: LuOptions,
}

impl Default for SchwarzConfig {
    fn default() -> Self {
        Self {
            levels: 2,
            coarse: vec![CoarseKind::Rgdsw],
            overlap: 1,
            decoupled: false,
            pressure_projection: false,
            reuse: ReusePolicy::default(),
            local_lu: LuOptions::default(),
            coarse_lu: LuOptions { null_pivot: NullPivotPolicy::FixToZero, null_tol: 1e-10, ..LuOptions::default() },
        }
    }
}

impl SchwarzConfig {
    pub fn one_level(overlap: usize) -> Self {
        Self { levels: 1, coarse: vec![], overlap, ..Self::default() }
    }

    pub fn two_level(kind: CoarseKind, overlap: usize) -> Self {
        Self { levels: 2, coarse: vec![kind], overlap, ..Self::default() }
    }

    pub fn validate(&self, n_fields: usize) -> Result<()> {
        match self.levels {
            1 => {}
            2 if self.coarse.len() == 1 || self.coarse.len() == n_fields => {}
            2 => {
                return Err(Error::InvalidConfig(format!(
                    "two-level Schwarz needs 1 or {n_fields} coarse kinds, got {}",
                    self.coarse.len()
                )))
            }
            l => return Err(Error::InvalidConfig(format!("levels must be 1 or 2, got {l}"))),
        }
        if self.reuse.rebuild_first_k == Some(0) {
            return Err(Error::InvalidConfig("rebuild_first_k must be at least 1".into()));
        }
        Ok(())
    }

    fn kinds(&self, n_fields: usize) -> Vec<CoarseKind> {
        if self.coarse.len() == 1 {
            vec![self.coarse[0]; n_fields]
        } else {
            self.coarse.clone()
        }
    }
}

/// Geometric decomposition data that does not depend on matrix values.
#[derive(Clone, Debug)]
pub struct SchwarzDomain {
    pub dim: usize,
    pub layout: DofLayout,
    pub sharing: Vec<Vec<usize>>,
    pub overlap: OverlapDecomposition,
    pub classifications: Vec<InterfaceClassification>,
    /// Global pressure projection vector (zero velocity part), if available.
    pub projection: Option<Vec<f64>>,
}

impl SchwarzDomain {
    /// `graph` provides the sparsity used for the algebraic overlap.
    pub fn new(
        dim: usize,
        graph: &CsrMatrix,
        layout: DofLayout,
        sharing: Vec<Vec<usize>>,
        n_subdomains: usize,
        delta: usize,
    ) -> Result<Self> {
        if graph.nrows() != layout.n_dofs {
            return Err(Error::DimensionMismatch(format!("graph {} vs layout {}", graph.nrows(), layout.n_dofs)));
        }
        let cores = core_dofs(&layout, &sharing, n_subdomains);
        let closures = closure_dofs(&layout, &sharing, n_subdomains);
        let overlap = OverlapDecomposition::from_closures(graph, &cores, &closures, delta)?;
        let classifications = classify_layout(dim, &layout, &sharing);
        Ok(Self { dim, layout, sharing, overlap, classifications, projection: None })
    }

    pub fn with_projection(mut self, a: Vec<f64>) -> Result<Self> {
        if a.len() != self.layout.n_dofs {
            return Err(Error::DimensionMismatch("projection vector length".into()));
        }
        self.projection = Some(a);
        Ok(self)
    }

    pub fn n_dofs(&self) -> usize {
        self.layout.n_dofs
    }
}

/// Pressure projection vector: zero on velocity dofs, the integral of each pressure basis
/// function on pressure dofs (placed at `offset`).
pub fn pressure_projection_vector(n_dofs: usize, offset: usize, pressure_integrals: &[f64]) -> Vec<f64> {
    let mut a = vec![0.0; n_dofs];
    a[offset..offset + pressure_integrals.len()].copy_from_slice(pressure_integrals);
    a
}

#[derive(Debug)]
pub struct CoarseLevel {
    pub space: Arc<CoarseSpace>,
    pub matrix: Arc<CsrMatrix>,
    pub lu: Arc<SparseLu>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SchwarzStats {
    pub subdomain_sizes: Vec<usize>,
    pub coarse_dim: usize,
    pub coarse_null_pivots: usize,
    pub local_factor_seconds: f64,
    pub coarse_basis_seconds: f64,
    pub coarse_factor_seconds: f64,
    pub reused_basis: bool,
    pub reused_coarse_matrix: bool,
    pub reused_symbolic: bool,
}

#[derive(Debug)]
struct Local {
    dofs: Vec<usize>,
    weights: Vec<f64>,
    lu: SparseLu,
    /// Restricted projection vector and its squared norm.
    projection: Option<(Vec<f64>, f64)>,
}

#[derive(Debug)]
pub struct SchwarzPreconditioner {
    n: usize,
    locals: Vec<Local>,
    coarse: Option<CoarseLevel>,
    pub stats: SchwarzStats,
}

impl SchwarzPreconditioner {
    pub fn setup(
        k: &CsrMatrix,
        domain: &SchwarzDomain,
        cfg: &SchwarzConfig,
        previous: Option<&SchwarzPreconditioner>,
    ) -> Result<Self> {
        cfg.validate(domain.layout.fields.len())?;
        let n = k.nrows();
        if n != domain.n_dofs() || k.ncols() != n {
            return Err(Error::DimensionMismatch(format!("matrix {}x{} vs {} dofs", k.nrows(), k.ncols(), domain.n_dofs())));
        }
        let projection = if cfg.pressure_projection {
            Some(domain.projection.as_ref().ok_or_else(|| Error::InvalidConfig("pressure projection requested without projection vector".into()))?)
        } else {
            None
        };
        let mut stats = SchwarzStats::default();
        let t = Instant::now();
        let ov = &domain.overlap;
        let idx: Vec<usize> = (0..ov.n_subdomains()).collect();
        let locals: Vec<Result<Local>> = crate::par::map(&idx, |&i| {
            let dofs = ov.subdomains[i].clone();
            let ki = k.submatrix(&dofs, &dofs);
            let lu = SparseLu::factor_with(&ki, cfg.local_lu).map_err(|e| Error::Subdomain { subdomain: i, source: Box::new(e) })?;
            let projection = projection.and_then(|a| {
                let ai: Vec<f64> = dofs.iter().map(|&d| a[d]).collect();
                let nn: f64 = ai.iter().map(|x| x * x).sum();
                (nn > 0.0).then_some((ai, nn))
            });
            Ok(Local { dofs, weights: ov.weights[i].clone(), lu, projection })
        });
        let locals = locals.into_iter().collect::<Result<Vec<_>>>()?;
        stats.local_factor_seconds = t.elapsed().as_secs_f64();
        stats.subdomain_sizes = locals.iter().map(|l| l.dofs.len()).collect();

        let coarse = if cfg.levels == 2 {
            let prev = previous.and_then(|p| p.coarse.as_ref()).filter(|c| c.space.phi.nrows() == n);
            Some(Self::setup_coarse(k, domain, cfg, prev, &mut stats)?)
        } else {
            None
        };
        Ok(Self { n, locals, coarse, stats })
    }

    fn setup_coarse(
        k: &CsrMatrix,
        domain: &SchwarzDomain,
        cfg: &SchwarzConfig,
        prev: Option<&CoarseLevel>,
        stats: &mut SchwarzStats,
    ) -> Result<CoarseLevel> {
        if let (true, Some(p)) = (cfg.reuse.coarse_matrix, prev) {
            stats.reused_coarse_matrix = true;
            stats.reused_basis = true;
            stats.coarse_dim = p.space.dim();
            stats.coarse_null_pivots = p.lu.null_pivots();
            return Ok(CoarseLevel { space: p.space.clone(), matrix: p.matrix.clone(), lu: p.lu.clone() });
        }
        let t = Instant::now();
        let space = match (cfg.reuse.basis, prev) {
            (true, Some(p)) => {
                stats.reused_basis = true;
                p.space.clone()
            }
            _ => {
                let kinds = cfg.kinds(domain.layout.fields.len());
                Arc::new(
                    build_coarse_space(k, &domain.layout, &domain.sharing, &domain.classifications, &kinds, cfg.decoupled)
                        .map_err(|e| Error::Coarse(Box::new(e)))?,
                )
            }
        };
        stats.coarse_basis_seconds = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let k0 = galerkin(k, &space.phi);
        let lu = match (cfg.reuse.symbolic, prev) {
            (true, Some(p)) if p.lu.symbolic().matches(&k0) => {
                stats.reused_symbolic = true;
                SparseLu::refactor_with(p.lu.symbolic(), &k0, cfg.coarse_lu)
            }
            _ => SparseLu::factor_with(&k0, cfg.coarse_lu),
        }
        .map_err(|e| Error::Coarse(Box::new(e)))?;
        stats.coarse_factor_seconds = t.elapsed().as_secs_f64();
        stats.coarse_dim = space.dim();
        stats.coarse_null_pivots = lu.null_pivots();
        if lu.null_pivots() > 0 {
            log::info!("coarse matrix has {} null pivots, fixed to zero", lu.null_pivots());
        }
        Ok(CoarseLevel { space, matrix: Arc::new(k0), lu: Arc::new(lu) })
    }

    pub fn coarse(&self) -> Option<&CoarseLevel> {
        self.coarse.as_ref()
    }

    pub fn n_subdomains(&self) -> usize {
        self.locals.len()
    }

    fn local_solve(l: &Local, r: &[f64]) -> Vec<f64> {
        let ri: Vec<f64> = l.dofs.iter().map(|&d| r[d]).collect();
        let mut x = l.lu.solve(&ri);
        if let Some((a, nn)) = &l.projection {
            let c = crate::sparse::dot(a, &x) / nn;
            crate::sparse::axpy(-c, a, &mut x);
        }
        x
    }
}

impl LinearOperator for SchwarzPreconditioner {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let parts = crate::par::map(&self.locals, |l| Self::local_solve(l, r));
        z.iter_mut().for_each(|v| *v = 0.0);
        for (l, x) in self.locals.iter().zip(&parts) {
            for ((&d, &w), &xv) in l.dofs.iter().zip(&l.weights).zip(x) {
                z[d] += w * xv;
            }
        }
        if let Some(c) = &self.coarse {
            let r0 = c.space.phi.mul_transpose(r);
            let x0 = c.lu.solve(&r0);
            c.space.phi.mul_vec_add(1.0, &x0, z);
        }
    }
}
