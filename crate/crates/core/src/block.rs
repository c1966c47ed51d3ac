//! Block preconditioners for the saddle point system: PCD, the LSC family, SIMPLE/SIMPLEC
//! and a block-diagonal reference with the scaled pressure mass matrix.
//!
//! Every approximate inverse sits in a counted slot so tests can check which inverses a
//! strategy uses.

use crate::decomp::DofLayout;
use crate::error::{Error, Result};
use crate::krylov::{spectral_radius, EigOptions};
use crate::linop::{DiagonalScaling, LinearOperator};
use crate::saddle::SaddleMatrix;
use crate::schwarz::{SchwarzConfig, SchwarzDomain, SchwarzPreconditioner};
use crate::sparse::{CsrMatrix, LuOptions, NullPivotPolicy, SparseLu};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

pub use crate::problems::BcStrategy;

/// How one inverse is approximated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InverseKind {
    Exact,
    Schwarz,
    Diagonal,
    AbsRowSum,
}

/// Diagonal approximation of the velocity mass matrix used as H in LSC.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassScaling {
    Diagonal,
    AbsRowSum,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LscVariant {
    Lsc,
    Bfbt,
    LscAp,
    LscStabAp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimpleVariant {
    Simple,
    Simplec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BlockStrategy {
    /// `bc` and `mp_inverse` default by mode, see [`BlockStrategy::with_mode_defaults`].
    Pcd {
        #[serde(default)]
        bc: Option<BcStrategy>,
        #[serde(default = "default_true")]
        flipped: bool,
        #[serde(default)]
        mp_inverse: Option<InverseKind>,
        #[serde(default)]
        ldu: bool,
    },
    Lsc {
        variant: LscVariant,
        #[serde(default = "default_scaling")]
        scaling: MassScaling,
    },
    Simple {
        #[serde(default = "default_simple")]
        variant: SimpleVariant,
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    Diagonal {
        #[serde(default = "default_mp_inverse")]
        mp_inverse: InverseKind,
    },
}

fn default_true() -> bool {
    true
}
fn default_mp_inverse() -> InverseKind {
    InverseKind::AbsRowSum
}
fn default_scaling() -> MassScaling {
    MassScaling::AbsRowSum
}
fn default_simple() -> SimpleVariant {
    SimpleVariant::Simplec
}
pub fn default_alpha() -> f64 {
    0.9
}

impl BlockStrategy {
    pub fn pcd(bc: BcStrategy) -> Self {
        Self::Pcd { bc: Some(bc), flipped: true, mp_inverse: Some(InverseKind::AbsRowSum), ldu: false }
    }

    /// Fills PCD defaults: BC2 with an abs-row-sum M_p inverse for stationary runs, BC3
    /// with a Schwarz M_p inverse for transient runs.
    pub fn with_mode_defaults(self, transient: bool) -> Self {
        match self {
            Self::Pcd { bc, flipped, mp_inverse, ldu } => Self::Pcd {
                bc: Some(bc.unwrap_or(if transient { BcStrategy::Bc3 } else { BcStrategy::Bc2 })),
                flipped,
                mp_inverse: Some(mp_inverse.unwrap_or(if transient { InverseKind::Schwarz } else { InverseKind::AbsRowSum })),
                ldu,
            },
            s => s,
        }
    }

    /// Boundary strategy of the PCD operators, if this is PCD.
    pub fn pcd_bc(&self) -> Option<BcStrategy> {
        match self {
            Self::Pcd { bc, .. } => Some(bc.unwrap_or(BcStrategy::Bc2)),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Pcd { .. } => "pcd",
            Self::Lsc { variant: LscVariant::Lsc, .. } => "lsc",
            Self::Lsc { variant: LscVariant::Bfbt, .. } => "bfbt",
            Self::Lsc { variant: LscVariant::LscAp, .. } => "lsc_ap",
            Self::Lsc { variant: LscVariant::LscStabAp, .. } => "lsc_stab_ap",
            Self::Simple { variant: SimpleVariant::Simple, .. } => "simple",
            Self::Simple { variant: SimpleVariant::Simplec, .. } => "simplec",
            Self::Diagonal { .. } => "diagonal",
        }
    }

    pub fn lsc(variant: LscVariant) -> Self {
        let scaling = if variant == LscVariant::Bfbt { MassScaling::Identity } else { MassScaling::AbsRowSum };
        Self::Lsc { variant, scaling }
    }

    pub fn simple(variant: SimpleVariant) -> Self {
        Self::Simple { variant, alpha: default_alpha() }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Simple { alpha, .. } if !(alpha > 0.0 && alpha <= 1.0) => {
                Err(Error::InvalidConfig(format!("under-relaxation must lie in (0, 1], got {alpha}")))
            }
            _ => Ok(()),
        }
    }
}

/// Inverse slots of the block preconditioners.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    F,
    Ap,
    Mp,
    Mu,
    ScaledD,
    BMuBt,
    SSimple,
}

pub const SLOTS: [Slot; 7] = [Slot::F, Slot::Ap, Slot::Mp, Slot::Mu, Slot::ScaledD, Slot::BMuBt, Slot::SSimple];

/// Approximate inverse with a call counter.
pub struct Counted {
    op: Box<dyn LinearOperator>,
    calls: AtomicUsize,
    pub schwarz: Option<Arc<SchwarzPreconditioner>>,
}

impl Counted {
    fn new(op: Box<dyn LinearOperator>) -> Self {
        Self { op, calls: AtomicUsize::new(0), schwarz: None }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.op.apply_vec(x)
    }
}

/// Per-field partition data used to set up Schwarz inverses on demand.
#[derive(Clone, Debug)]
pub struct FieldPartition {
    pub dim: usize,
    pub layout: DofLayout,
    pub sharing: Vec<Vec<usize>>,
    pub n_subdomains: usize,
}

impl FieldPartition {
    fn domain(&self, graph: &CsrMatrix, delta: usize) -> Result<SchwarzDomain> {
        SchwarzDomain::new(self.dim, graph, self.layout.clone(), self.sharing.clone(), self.n_subdomains, delta)
    }
}

/// How the inverses of velocity and pressure operators are approximated.
#[derive(Clone, Debug)]
pub struct InverseSettings {
    pub velocity_kind: InverseKind,
    pub velocity_schwarz: SchwarzConfig,
    pub pressure_kind: InverseKind,
    pub pressure_schwarz: SchwarzConfig,
    pub velocity_partition: Option<FieldPartition>,
    pub pressure_partition: Option<FieldPartition>,
}

impl InverseSettings {
    pub fn exact() -> Self {
        Self {
            velocity_kind: InverseKind::Exact,
            velocity_schwarz: SchwarzConfig::default(),
            pressure_kind: InverseKind::Exact,
            pressure_schwarz: SchwarzConfig::default(),
            velocity_partition: None,
            pressure_partition: None,
        }
    }
}

/// Operators beyond the saddle matrix that a strategy may need.
#[derive(Clone, Copy, Debug, Default)]
pub struct BlockOperators<'a> {
    pub m_u: Option<&'a CsrMatrix>,
    pub m_p: Option<&'a CsrMatrix>,
    pub a_p: Option<&'a CsrMatrix>,
    pub f_p: Option<&'a CsrMatrix>,
    pub nu: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BlockStats {
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub eig_converged: Option<bool>,
    pub velocity_coarse_dim: usize,
    pub pressure_coarse_dim: usize,
}

/// Pressure-space operators are often singular (enclosed flow), so exact inverses drop
/// null pivots.
fn pressure_lu() -> LuOptions {
    LuOptions { null_pivot: NullPivotPolicy::FixToZero, null_tol: 1e-10, ..LuOptions::default() }
}

struct ExactOp(SparseLu);

impl LinearOperator for ExactOp {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.solve_into(x, y)
    }
}

fn inverse(
    a: &CsrMatrix,
    kind: InverseKind,
    schwarz: &SchwarzConfig,
    partition: Option<&FieldPartition>,
    lu: LuOptions,
    previous: Option<&SchwarzPreconditioner>,
) -> Result<Counted> {
    Ok(match kind {
        InverseKind::Exact => Counted::new(Box::new(ExactOp(SparseLu::factor_with(a, lu)?))),
        InverseKind::Diagonal => Counted::new(Box::new(checked_scaling(a.diag())?)),
        InverseKind::AbsRowSum => Counted::new(Box::new(checked_scaling(a.abs_row_sums())?)),
        InverseKind::Schwarz => {
            let part = partition.ok_or_else(|| Error::InvalidConfig("Schwarz inverse needs a partition".into()))?;
            let domain = part.domain(a, schwarz.overlap)?;
            let pc = Arc::new(SchwarzPreconditioner::setup(a, &domain, schwarz, previous)?);
            let mut c = Counted::new(Box::new(pc.clone()));
            c.schwarz = Some(pc);
            c
        }
    })
}

fn checked_scaling(d: Vec<f64>) -> Result<DiagonalScaling> {
    if let Some(i) = d.iter().position(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::InvalidStructure(format!("zero divisor at row {i} in diagonal scaling")));
    }
    Ok(DiagonalScaling(d.iter().map(|v| 1.0 / v).collect()))
}

fn scaling_vector(a: &CsrMatrix, kind: InverseKind) -> Result<Vec<f64>> {
    match kind {
        InverseKind::Diagonal => Ok(checked_scaling(a.diag())?.0),
        InverseKind::AbsRowSum => Ok(checked_scaling(a.abs_row_sums())?.0),
        _ => Err(Error::InvalidConfig("scaling must be diagonal or absrowsum".into())),
    }
}

/// x -> A (d .* x), a matrix followed by a diagonal scaling on the right.
struct ScaledOp<'a> {
    a: &'a CsrMatrix,
    d: Vec<f64>,
}

impl LinearOperator for ScaledOp<'_> {
    fn dim(&self) -> usize {
        self.a.nrows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let s: Vec<f64> = x.iter().zip(&self.d).map(|(a, b)| a * b).collect();
        self.a.mul_vec(&s, y);
    }
}

enum Schur {
    Pcd { flipped: bool, f_p: CsrMatrix },
    Lsc { stab: Option<f64> },
    Simple { alpha: f64, h: Vec<f64> },
    Diagonal { nu: f64 },
}

pub struct BlockPreconditioner {
    saddle: SaddleMatrix,
    slots: Vec<(Slot, Counted)>,
    schur: Schur,
    ldu: bool,
    pub stats: BlockStats,
}

impl BlockPreconditioner {
    pub fn setup(
        saddle: &SaddleMatrix,
        strategy: &BlockStrategy,
        ops: &BlockOperators,
        inv: &InverseSettings,
        previous: Option<&BlockPreconditioner>,
    ) -> Result<Self> {
        strategy.validate()?;
        let f = &saddle.f;
        let prev_f = previous.and_then(|p| p.slot(Slot::F)).and_then(|c| c.schwarz.as_deref());
        let vel = |a: &CsrMatrix| {
            inverse(a, inv.velocity_kind, &inv.velocity_schwarz, inv.velocity_partition.as_ref(), LuOptions::default(), prev_f)
        };
        let pres = |a: &CsrMatrix, kind: InverseKind| {
            inverse(a, kind, &inv.pressure_schwarz, inv.pressure_partition.as_ref(), pressure_lu(), None)
        };
        let need = |o: Option<&CsrMatrix>, what: &str| {
            o.cloned().ok_or_else(|| Error::InvalidConfig(format!("block preconditioner needs {what}")))
        };
        let mut slots = vec![(Slot::F, vel(f)?)];
        let mut stats = BlockStats::default();
        let mut ldu = false;
        let schur = match *strategy {
            BlockStrategy::Pcd { flipped, mp_inverse, ldu: l, .. } => {
                ldu = l;
                let a_p = need(ops.a_p, "A_p")?;
                let m_p = need(ops.m_p, "M_p")?;
                slots.push((Slot::Ap, pres(&a_p, inv.pressure_kind)?));
                slots.push((Slot::Mp, pres(&m_p, mp_inverse.unwrap_or(InverseKind::AbsRowSum))?));
                Schur::Pcd { flipped, f_p: need(ops.f_p, "F_p")? }
            }
            BlockStrategy::Lsc { variant, scaling } => {
                let h = match (variant, scaling) {
                    (LscVariant::Bfbt, _) | (_, MassScaling::Identity) => vec![1.0; f.nrows()],
                    (_, MassScaling::Diagonal) => scaling_vector(&need(ops.m_u, "M_u")?, InverseKind::Diagonal)?,
                    (_, MassScaling::AbsRowSum) => scaling_vector(&need(ops.m_u, "M_u")?, InverseKind::AbsRowSum)?,
                };
                slots.push((Slot::Mu, Counted::new(Box::new(DiagonalScaling(h.clone())))));
                let mut stab = None;
                match variant {
                    LscVariant::Lsc | LscVariant::Bfbt => {
                        let bhbt = saddle.b.matmul(&saddle.bt.scale_rows(&h));
                        slots.push((Slot::BMuBt, pres(&bhbt, inv.pressure_kind)?));
                    }
                    LscVariant::LscAp | LscVariant::LscStabAp => {
                        let a_p = need(ops.a_p, "A_p")?;
                        slots.push((Slot::Ap, pres(&a_p, inv.pressure_kind)?));
                    }
                }
                if variant == LscVariant::LscStabAp {
                    let (gamma, alpha, d, converged) = lsc_stabilization(saddle, &h)?;
                    stats.gamma = Some(gamma);
                    stats.alpha = Some(alpha);
                    stats.eig_converged = Some(converged);
                    if !converged {
                        log::warn!("spectral radius estimate did not reach its tolerance");
                    }
                    slots.push((Slot::ScaledD, Counted::new(Box::new(DiagonalScaling(d.iter().map(|v| 1.0 / v).collect())))));
                    stab = Some(alpha);
                }
                Schur::Lsc { stab }
            }
            BlockStrategy::Simple { variant, alpha } => {
                let h = match variant {
                    SimpleVariant::Simple => scaling_vector(f, InverseKind::Diagonal)?,
                    SimpleVariant::Simplec => scaling_vector(f, InverseKind::AbsRowSum)?,
                };
                let s = simple_schur(saddle, &h);
                slots.push((Slot::SSimple, pres(&s, inv.pressure_kind)?));
                Schur::Simple { alpha, h }
            }
            BlockStrategy::Diagonal { mp_inverse } => {
                let m_p = need(ops.m_p, "M_p")?;
                let kind = if mp_inverse == InverseKind::Schwarz { inv.pressure_kind } else { mp_inverse };
                slots.push((Slot::Mp, pres(&m_p, kind)?));
                Schur::Diagonal { nu: ops.nu }
            }
        };
        for (s, c) in &slots {
            if let Some(pc) = &c.schwarz {
                let dim = pc.stats.coarse_dim;
                if *s == Slot::F {
                    stats.velocity_coarse_dim = dim;
                } else {
                    stats.pressure_coarse_dim = stats.pressure_coarse_dim.max(dim);
                }
            }
        }
        Ok(Self { saddle: saddle.clone(), slots, schur, ldu, stats })
    }

    pub fn slot(&self, s: Slot) -> Option<&Counted> {
        self.slots.iter().find(|e| e.0 == s).map(|e| &e.1)
    }

    /// Calls made to each slot so far (zero for absent slots).
    pub fn call_counts(&self) -> Vec<(Slot, usize)> {
        SLOTS.iter().map(|&s| (s, self.slot(s).map_or(0, |c| c.calls()))).collect()
    }

    fn inv(&self, s: Slot, x: &[f64]) -> Vec<f64> {
        self.slot(s).expect("slot configured at setup").apply(x)
    }

    /// Approximate Schur complement inverse applied to a pressure vector.
    pub fn apply_schur(&self, fp: &[f64]) -> Vec<f64> {
        match &self.schur {
            Schur::Pcd { flipped, f_p } => {
                let (first, last) = if *flipped { (Slot::Mp, Slot::Ap) } else { (Slot::Ap, Slot::Mp) };
                let x = self.inv(first, fp);
                let y = f_p.mul(&x);
                neg(self.inv(last, &y))
            }
            Schur::Lsc { stab } => {
                let q = if self.slot(Slot::BMuBt).is_some() { Slot::BMuBt } else { Slot::Ap };
                let x = self.inv(q, fp);
                let y = self.b_h_f_h_bt(&x);
                let mut p = neg(self.inv(q, &y));
                if let Some(alpha) = stab {
                    let d = self.inv(Slot::ScaledD, fp);
                    crate::sparse::axpy(-alpha, &d, &mut p);
                }
                p
            }
            Schur::Simple { .. } => self.inv(Slot::SSimple, fp),
            Schur::Diagonal { nu } => self.inv(Slot::Mp, fp).iter().map(|v| -nu * v).collect(),
        }
    }

    fn b_h_f_h_bt(&self, x: &[f64]) -> Vec<f64> {
        let s = &self.saddle;
        let v = self.inv(Slot::Mu, &s.bt.mul(x));
        let v = self.inv(Slot::Mu, &s.f.mul(&v));
        s.b.mul(&v)
    }
}

fn neg(mut v: Vec<f64>) -> Vec<f64> {
    v.iter_mut().for_each(|x| *x = -*x);
    v
}

/// S_SIMPLE = -C - B H_F B^T.
pub fn simple_schur(saddle: &SaddleMatrix, h: &[f64]) -> CsrMatrix {
    saddle.b.matmul(&saddle.bt.scale_rows(h)).add(-1.0, &saddle.c, -1.0)
}

/// D = diag(-B diag(F)^{-1} B^T - C).
pub fn lsc_d(saddle: &SaddleMatrix) -> Result<Vec<f64>> {
    let hd = scaling_vector(&saddle.f, InverseKind::Diagonal)?;
    let s = simple_schur(saddle, &hd);
    let d = s.diag();
    if let Some(i) = d.iter().position(|v| *v == 0.0) {
        return Err(Error::InvalidStructure(format!("zero diagonal at pressure row {i} in D")));
    }
    Ok(d)
}

/// gamma = rho(H F) / 3, alpha = -1 / rho(S_diag,C=0 D^{-1}), and D.
fn lsc_stabilization(saddle: &SaddleMatrix, h: &[f64]) -> Result<(f64, f64, Vec<f64>, bool)> {
    let opts = EigOptions::default();
    let hf = ScaledOp { a: &saddle.f.scale_rows(h), d: vec![1.0; h.len()] };
    let e1 = spectral_radius(&hf, &opts);
    let d = lsc_d(saddle)?;
    let hd = scaling_vector(&saddle.f, InverseKind::Diagonal)?;
    let s0 = saddle.b.matmul(&saddle.bt.scale_rows(&hd)).scaled(-1.0);
    let dinv: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
    let e2 = spectral_radius(&ScaledOp { a: &s0, d: dinv }, &opts);
    if e2.radius == 0.0 {
        return Err(Error::InvalidStructure("zero spectral radius in LSC stabilization".into()));
    }
    Ok((e1.radius / 3.0, -1.0 / e2.radius, d, e1.converged && e2.converged))
}

impl LinearOperator for BlockPreconditioner {
    fn dim(&self) -> usize {
        self.saddle.n_velocity() + self.saddle.n_pressure()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nv = self.saddle.n_velocity();
        let (fu, fp) = x.split_at(nv);
        let s = &self.saddle;
        let (u, p) = match &self.schur {
            Schur::Simple { alpha, h } => {
                let us = self.inv(Slot::F, fu);
                let mut r = fp.to_vec();
                s.b.mul_vec_add(-1.0, &us, &mut r);
                let p: Vec<f64> = self.apply_schur(&r).iter().map(|v| alpha * v).collect();
                let btp = s.bt.mul(&p);
                let u: Vec<f64> = us.iter().zip(h).zip(&btp).map(|((a, hi), b)| a - hi * b / alpha).collect();
                (u, p)
            }
            Schur::Diagonal { .. } => (self.inv(Slot::F, fu), self.apply_schur(fp)),
            _ => {
                let p = if self.ldu {
                    let us = self.inv(Slot::F, fu);
                    let mut r = fp.to_vec();
                    s.b.mul_vec_add(-1.0, &us, &mut r);
                    self.apply_schur(&r)
                } else {
                    self.apply_schur(fp)
                };
                let mut r = fu.to_vec();
                s.bt.mul_vec_add(-1.0, &p, &mut r);
                (self.inv(Slot::F, &r), p)
            }
        };
        y[..nv].copy_from_slice(&u);
        y[nv..].copy_from_slice(&p);
    }
}
