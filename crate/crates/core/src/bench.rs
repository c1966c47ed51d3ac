//! Configuration-driven benchmark runs: one solve per config, sweeps over one axis, JSON and
//! CSV reports.

use crate::block::{BlockOperators, BlockPreconditioner, BlockStrategy, FieldPartition, InverseKind, InverseSettings};
use crate::decomp::{DofLayout, FieldKind, Partition};
use crate::error::{Error, Result};
use crate::krylov::{gmres, GmresOptions};
use crate::linop::LinearOperator;
use crate::newton::{newton_solve, LinearSolveInfo, NewtonOptions, NewtonProblem, NewtonStats};
use crate::problems::{Discretization, Problem, ProblemKind, ProblemSpec, TimeTerm};
use crate::schwarz::{pressure_projection_vector, SchwarzConfig, SchwarzDomain, SchwarzPreconditioner};
use crate::sparse::{LuOptions, NullPivotPolicy};
use crate::timestep::{run_transient, TimeDependentSystem, TimeStepRecord, TransientConfig};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use web_time::Instant;

pub const CONFIG_SCHEMA: &str = "nsprec-run/1";
pub const REPORT_SCHEMA: &str = "nsprec-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Stationary,
    Transient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linearization {
    Newton,
    Picard,
}

/// Inverse of one field's operator in a block preconditioner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldInverse {
    pub inverse: InverseKind,
    pub schwarz: SchwarzConfig,
}

impl Default for FieldInverse {
    fn default() -> Self {
        Self { inverse: InverseKind::Schwarz, schwarz: SchwarzConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PreconditionerConfig {
    Monolithic {
        #[serde(default)]
        schwarz: SchwarzConfig,
    },
    Block {
        strategy: BlockStrategy,
        #[serde(default)]
        velocity: FieldInverse,
        #[serde(default)]
        pressure: FieldInverse,
    },
}

impl PreconditionerConfig {
    pub fn label(&self) -> String {
        match self {
            Self::Monolithic { schwarz } => format!("monolithic-{}level", schwarz.levels),
            Self::Block { strategy, .. } => strategy.name().to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmresConfig {
    pub max_iterations: usize,
    pub restart: Option<usize>,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self { max_iterations: 1000, restart: None }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub name: String,
    pub problem: ProblemKind,
    pub discretization: Discretization,
    /// Cells per subdomain edge (H/h).
    pub h_ratio: usize,
    /// Subdomains per unit length; the cavity then has a grid of this many per direction.
    pub subdomains: usize,
    pub mode: Mode,
    pub nu: f64,
    #[serde(default = "one")]
    pub v_max: f64,
    /// Include the convection term; false solves Stokes.
    #[serde(default = "default_true")]
    pub convection: bool,
    #[serde(default = "default_linearization")]
    pub linearization: Linearization,
    #[serde(default)]
    pub transient: Option<TransientConfig>,
    pub preconditioner: PreconditionerConfig,
    #[serde(default)]
    pub newton: NewtonOptions,
    #[serde(default)]
    pub gmres: GmresConfig,
    /// Worker threads for subdomain work; 0 uses the pool default.
    #[serde(default)]
    pub threads: usize,
    /// Seed of the initial-guess perturbation.
    #[serde(default)]
    pub seed: u64,
    /// Amplitude of a seeded perturbation of the free initial velocity; 0 starts from the lifted boundary data.
    #[serde(default)]
    pub initial_perturbation: f64,
}

fn one() -> f64 {
    1.0
}

fn default_linearization() -> Linearization {
    Linearization::Newton
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::InvalidConfig(format!("schema must be {CONFIG_SCHEMA:?}, got {:?}", self.schema)));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::InvalidConfig("name must be a nonempty file stem".into()));
        }
        self.discretization.cell(self.problem.dim())?;
        if self.h_ratio == 0 || self.subdomains == 0 {
            return Err(Error::InvalidConfig("h_ratio and subdomains must be positive".into()));
        }
        if !(self.nu > 0.0) || !(self.v_max > 0.0) {
            return Err(Error::InvalidConfig("nu and v_max must be positive".into()));
        }
        match (self.mode, &self.transient) {
            (Mode::Transient, None) => return Err(Error::InvalidConfig("transient mode needs a transient section".into())),
            (Mode::Transient, Some(t)) => t.validate()?,
            _ => {}
        }
        self.newton.forcing.validate()?;
        match &self.preconditioner {
            PreconditionerConfig::Monolithic { schwarz } => schwarz.validate(2)?,
            PreconditionerConfig::Block { strategy, velocity, pressure } => {
                strategy.validate()?;
                velocity.schwarz.validate(1)?;
                pressure.schwarz.validate(1)?;
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            kind: self.problem,
            discretization: self.discretization,
            cells_per_unit: self.h_ratio * self.subdomains,
            nu: self.nu,
            v_max: self.v_max,
        }
    }

    fn transient(&self) -> bool {
        self.mode == Mode::Transient
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct CoarseDims {
    pub velocity: usize,
    pub pressure: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Timings {
    pub setup: f64,
    pub solve: f64,
    pub total: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NewtonRow {
    pub time_step: usize,
    pub step: usize,
    pub residual: f64,
    pub eta: f64,
    pub gmres_iterations: usize,
    pub backtracks: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TimeRow {
    pub t: f64,
    pub cfl_max: f64,
    pub cfl_avg: f64,
    pub newton_steps: usize,
    pub mean_gmres: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Converged,
    Diverged,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    pub schema: String,
    pub name: String,
    pub preconditioner: String,
    pub reynolds: f64,
    pub n_velocity: usize,
    pub n_pressure: usize,
    pub n_subdomains: usize,
    pub status: Status,
    pub failure: Option<String>,
    pub newton_steps: usize,
    pub gmres_iterations: usize,
    /// Total GMRES iterations over total Newton steps.
    pub avg_iterations: f64,
    pub coarse_dims: CoarseDims,
    /// Wall-clock seconds; absent in serial deterministic mode.
    pub timings: Option<Timings>,
    pub newton_log: Vec<NewtonRow>,
    pub time_steps: Vec<TimeRow>,
    pub config: RunConfig,
}

impl RunReport {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Newton log as CSV.
    pub fn newton_csv(&self) -> String {
        let mut s = String::from("time_step,newton_step,residual,eta,gmres_iterations,backtracks\n");
        for r in &self.newton_log {
            let _ = writeln!(s, "{},{},{:e},{:e},{},{}", r.time_step, r.step, r.residual, r.eta, r.gmres_iterations, r.backtracks);
        }
        s
    }

    /// Per-time-step CSV (transient runs).
    pub fn time_csv(&self) -> String {
        let mut s = format!("{}\n", TimeStepRecord::CSV_HEADER);
        for r in &self.time_steps {
            let _ = writeln!(s, "{},{},{},{},{}", r.t, r.cfl_max, r.cfl_avg, r.newton_steps, r.mean_gmres);
        }
        s
    }

    /// Writes `<name>.report.json`, `<name>.csv` and, for transient runs, `<name>.timesteps.csv`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = vec![dir.join(format!("{}.report.json", self.name)), dir.join(format!("{}.csv", self.name))];
        std::fs::write(&out[0], self.to_json())?;
        std::fs::write(&out[1], self.newton_csv())?;
        if !self.time_steps.is_empty() {
            out.push(dir.join(format!("{}.timesteps.csv", self.name)));
            std::fs::write(&out[2], self.time_csv())?;
        }
        Ok(out)
    }
}

enum Prec {
    Monolithic(SchwarzPreconditioner),
    Block(BlockPreconditioner),
}

impl Prec {
    fn op(&self) -> &dyn LinearOperator {
        match self {
            Prec::Monolithic(p) => p,
            Prec::Block(p) => p,
        }
    }
}

/// Local solves of saddle-point subdomain problems and pressure operators of enclosed flows
/// meet constant-pressure null spaces; those pivots are dropped.
fn singular_tolerant_lu() -> LuOptions {
    LuOptions { null_pivot: NullPivotPolicy::FixToZero, null_tol: 1e-10, ..LuOptions::default() }
}

/// Navier-Stokes Newton system with the configured preconditioner.
struct FlowSolver<'a> {
    problem: &'a Problem,
    cfg: &'a RunConfig,
    sharing: Vec<Vec<usize>>,
    n_subdomains: usize,
    time: Option<(f64, Vec<f64>)>,
    mono_domain: Option<SchwarzDomain>,
    prec: Option<Prec>,
    coarse: CoarseDims,
    time_setup: f64,
    time_solve: f64,
}

impl<'a> FlowSolver<'a> {
    fn new(problem: &'a Problem, cfg: &'a RunConfig) -> Result<Self> {
        let part = Partition::boxes(&problem.mesh, cfg.subdomains)?;
        Ok(Self {
            problem,
            cfg,
            sharing: part.node_sharing(&problem.mesh),
            n_subdomains: part.n_subdomains,
            time: None,
            mono_domain: None,
            prec: None,
            coarse: CoarseDims::default(),
            time_setup: 0.0,
            time_solve: 0.0,
        })
    }

    fn mass_coeff(&self) -> f64 {
        self.time.as_ref().map_or(0.0, |t| t.0)
    }

    fn time_term(&self) -> Option<TimeTerm<'_>> {
        self.time.as_ref().map(|(c, h)| TimeTerm { coeff: *c, history: h })
    }

    /// Zero-mean local pressure projection: inf-sup stable pairs in stationary runs.
    fn projected(&self) -> bool {
        !self.problem.spec.discretization.stabilized() && !self.cfg.transient()
    }

    fn setup(&mut self, x: &[f64], j: &crate::saddle::SaddleMatrix) -> Result<()> {
        let p = self.problem;
        let previous = self.prec.take();
        let prec = match &self.cfg.preconditioner {
            PreconditionerConfig::Monolithic { schwarz } => {
                let k = j.monolithic();
                if self.mono_domain.is_none() {
                    let layout = DofLayout::saddle(&p.dofs, &p.dirichlet_nodes);
                    let mut d = SchwarzDomain::new(p.dim(), k, layout, self.sharing.clone(), self.n_subdomains, schwarz.overlap)?;
                    if self.projected() {
                        d = d.with_projection(pressure_projection_vector(p.n_total(), p.n_velocity(), &p.pressure_integrals))?;
                    }
                    self.mono_domain = Some(d);
                }
                let mut sc = schwarz.clone();
                sc.local_lu = singular_tolerant_lu();
                sc.pressure_projection = self.projected();
                let prev = match &previous {
                    Some(Prec::Monolithic(pc)) => Some(pc),
                    _ => None,
                };
                let pc = SchwarzPreconditioner::setup(k, self.mono_domain.as_ref().expect("domain built"), &sc, prev)?;
                if let Some(c) = pc.coarse() {
                    self.coarse = CoarseDims { velocity: c.space.dim_of_field(FieldKind::Velocity), pressure: c.space.dim_of_field(FieldKind::Pressure) };
                }
                Prec::Monolithic(pc)
            }
            PreconditionerConfig::Block { strategy, velocity, pressure } => {
                let strategy = strategy.with_mode_defaults(self.cfg.transient());
                let w = &x[..p.n_velocity()];
                let bc = strategy.pcd_bc().unwrap_or(crate::problems::BcStrategy::Bc2);
                let pops = match strategy {
                    BlockStrategy::Pcd { .. } => p.pressure_operators(w, self.mass_coeff(), bc),
                    // LSC_Ap and its stabilized form use A_p with the BC2 boundary treatment.
                    _ => crate::problems::PressureOperators {
                        a_p: p.pressure_laplacian_bc(),
                        f_p: crate::sparse::CsrMatrix::zeros(0, 0),
                        m_p: p.pressure_mass.clone(),
                    },
                };
                let ops = BlockOperators {
                    m_u: Some(&p.velocity_mass),
                    m_p: Some(&pops.m_p),
                    a_p: Some(&pops.a_p),
                    f_p: matches!(strategy, BlockStrategy::Pcd { .. }).then_some(&pops.f_p),
                    nu: p.nu(),
                };
                let mut ps = pressure.schwarz.clone();
                ps.local_lu = singular_tolerant_lu();
                let settings = InverseSettings {
                    velocity_kind: velocity.inverse,
                    velocity_schwarz: velocity.schwarz.clone(),
                    pressure_kind: pressure.inverse,
                    pressure_schwarz: ps,
                    velocity_partition: Some(FieldPartition {
                        dim: p.dim(),
                        layout: DofLayout::velocity(&p.dofs, &p.dirichlet_nodes),
                        sharing: self.sharing.clone(),
                        n_subdomains: self.n_subdomains,
                    }),
                    pressure_partition: Some(FieldPartition {
                        dim: p.dim(),
                        layout: DofLayout::pressure(&p.dofs),
                        sharing: self.sharing.clone(),
                        n_subdomains: self.n_subdomains,
                    }),
                };
                let prev = match &previous {
                    Some(Prec::Block(pc)) => Some(pc),
                    _ => None,
                };
                let pc = BlockPreconditioner::setup(j, &strategy, &ops, &settings, prev)?;
                self.coarse = CoarseDims { velocity: pc.stats.velocity_coarse_dim, pressure: pc.stats.pressure_coarse_dim };
                Prec::Block(pc)
            }
        };
        self.prec = Some(prec);
        Ok(())
    }
}

impl NewtonProblem for FlowSolver<'_> {
    fn residual(&mut self, x: &[f64]) -> Vec<f64> {
        self.problem.residual(x, None, self.time_term(), self.cfg.convection)
    }

    fn solve_linear(&mut self, x: &[f64], r: &[f64], eta: f64, _step: usize, rebuild: bool) -> Result<(Vec<f64>, LinearSolveInfo)> {
        let newton = self.cfg.linearization == Linearization::Newton;
        let j = self.problem.jacobian(x, self.mass_coeff(), self.cfg.convection, newton);
        let t = Instant::now();
        if rebuild || self.prec.is_none() {
            self.setup(x, &j)?;
        }
        let setup_seconds = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let opts = GmresOptions { tol: eta, max_iterations: self.cfg.gmres.max_iterations, restart: self.cfg.gmres.restart };
        let res = gmres(&j, self.prec.as_ref().expect("preconditioner set up").op(), &rhs, None, &opts)?;
        let solve_seconds = t.elapsed().as_secs_f64();
        self.time_setup += setup_seconds;
        self.time_solve += solve_seconds;
        if !res.converged {
            log::warn!("GMRES stopped at {} iterations with relative residual {:.2e}", res.iterations, res.relative_residual());
        }
        Ok((res.x, LinearSolveInfo { iterations: res.iterations, converged: res.converged, setup_seconds, solve_seconds }))
    }
}

struct TransientFlow<'s, 'a> {
    solver: &'s mut FlowSolver<'a>,
    newton: NewtonOptions,
}

impl TimeDependentSystem for TransientFlow<'_, '_> {
    fn solve_step(&mut self, _t: f64, coeff: f64, history: &[f64], x: &mut [f64]) -> Result<NewtonStats> {
        let nv = self.solver.problem.n_velocity();
        self.solver.time = Some((coeff, history[..nv].to_vec()));
        newton_solve(self.solver, x, &self.newton)
    }

    fn cfl(&self, x: &[f64], dt: f64) -> (f64, f64) {
        self.solver.problem.cfl(&x[..self.solver.problem.n_velocity()], dt)
    }
}

fn initial_guess(problem: &Problem, cfg: &RunConfig) -> Vec<f64> {
    let mut x = problem.lifted_zero();
    if cfg.initial_perturbation != 0.0 {
        let mut s = cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        for i in 0..problem.n_velocity() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            if !problem.dirichlet_rows[i] {
                x[i] = cfg.initial_perturbation * ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5);
            }
        }
    }
    x
}

fn newton_rows(time_step: usize, s: &NewtonStats) -> impl Iterator<Item = NewtonRow> + '_ {
    s.steps.iter().map(move |st| NewtonRow {
        time_step,
        step: st.step,
        residual: st.residual,
        eta: st.eta,
        gmres_iterations: st.gmres_iterations,
        backtracks: st.backtracks,
    })
}

/// Runs one configuration. Solver divergence is recorded in the report; errors are setup
/// or input failures.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    if cfg.threads > 0 && !crate::par::serial() {
        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            return pool.install(|| solve(cfg)).map(|s| s.report);
        }
    }
    solve(cfg).map(|s| s.report)
}

/// A finished run with its final state.
pub struct Solution {
    pub report: RunReport,
    pub problem: Problem,
    /// Velocity then pressure dofs at the end of the run.
    pub state: Vec<f64>,
}

/// Like [`run`] on the current thread pool, keeping the discretization and final state.
pub fn solve(cfg: &RunConfig) -> Result<Solution> {
    cfg.validate()?;
    let start = Instant::now();
    let problem = Problem::new(cfg.spec())?;
    let mut solver = FlowSolver::new(&problem, cfg)?;
    let mut newton = cfg.newton;
    let reuse_k = match &cfg.preconditioner {
        PreconditionerConfig::Monolithic { schwarz } => schwarz.reuse.rebuild_first_k,
        PreconditionerConfig::Block { velocity, .. } => velocity.schwarz.reuse.rebuild_first_k,
    };
    newton.rebuild_first_k = newton.rebuild_first_k.or(reuse_k);
    let x0 = initial_guess(&problem, cfg);
    let mut log_rows = Vec::new();
    let mut time_rows = Vec::new();
    let (converged, failure, steps, iterations, state) = match cfg.mode {
        Mode::Stationary => {
            let mut x = x0;
            let s = newton_solve(&mut solver, &mut x, &newton)?;
            log_rows.extend(newton_rows(0, &s));
            (s.converged, s.failure.clone(), s.newton_steps(), s.gmres_iterations(), x)
        }
        Mode::Transient => {
            let tc = cfg.transient.expect("validated");
            let mut sys = TransientFlow { solver: &mut solver, newton };
            let res = run_transient(&mut sys, &x0, &tc)?;
            for (i, s) in res.newton.iter().enumerate() {
                log_rows.extend(newton_rows(i + 1, s));
            }
            time_rows = res
                .records
                .iter()
                .map(|r| TimeRow { t: r.t, cfl_max: r.cfl_max, cfl_avg: r.cfl_avg, newton_steps: r.newton_steps, mean_gmres: r.mean_gmres })
                .collect();
            let failure = res.newton.iter().find_map(|s| s.failure.clone());
            let steps = res.newton.iter().map(|s| s.newton_steps()).sum();
            let its = res.newton.iter().map(|s| s.gmres_iterations()).sum();
            (res.converged, failure, steps, its, res.state)
        }
    };
    let total = start.elapsed().as_secs_f64();
    let timings = (!crate::par::serial()).then(|| Timings { setup: solver.time_setup, solve: solver.time_solve, total });
    let report = RunReport {
        schema: REPORT_SCHEMA.into(),
        name: cfg.name.clone(),
        preconditioner: cfg.preconditioner.label(),
        reynolds: cfg.spec().reynolds(),
        n_velocity: problem.n_velocity(),
        n_pressure: problem.n_pressure(),
        n_subdomains: solver.n_subdomains,
        status: if converged { Status::Converged } else { Status::Diverged },
        failure,
        newton_steps: steps,
        gmres_iterations: iterations,
        avg_iterations: if steps == 0 { 0.0 } else { iterations as f64 / steps as f64 },
        coarse_dims: solver.coarse.clone(),
        timings,
        newton_log: log_rows,
        time_steps: time_rows,
        config: cfg.clone(),
    };
    drop(solver);
    Ok(Solution { report, problem, state })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Subdomains per unit length at fixed H/h.
    Subdomains,
    /// Reynolds number through the viscosity.
    ReynoldsNu,
    /// Reynolds number through the inflow speed (BFS only).
    ReynoldsV,
    /// Structured CFL number u dt / h through the time step.
    Cfl,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Parse(format!("unknown sweep axis {s:?}; expected subdomains, reynolds_nu, reynolds_v or cfl")))
    }
}

/// Config of one sweep point.
pub fn sweep_point(base: &RunConfig, axis: SweepAxis, value: f64) -> Result<RunConfig> {
    let mut c = base.clone();
    c.name = format!("{}_{}_{}", base.name, serde_json::to_value(axis)?.as_str().unwrap_or("axis"), value);
    let bfs = base.problem.is_bfs();
    match axis {
        SweepAxis::Subdomains => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(Error::InvalidConfig(format!("subdomain count must be a positive integer, got {value}")));
            }
            c.subdomains = value as usize;
        }
        SweepAxis::ReynoldsNu => {
            c.nu = if bfs { 2.0 * base.v_max / value } else { 1.0 / value };
        }
        SweepAxis::ReynoldsV => {
            if !bfs {
                return Err(Error::InvalidConfig("reynolds_v applies to the step problems only".into()));
            }
            c.v_max = value * base.nu / 2.0;
        }
        SweepAxis::Cfl => {
            let h = 1.0 / c.spec().cells_per_unit as f64;
            let t = c.transient.as_mut().ok_or_else(|| Error::InvalidConfig("cfl sweep needs a transient section".into()))?;
            let steps = t.n_steps();
            t.dt = value * h / base.v_max;
            t.end_time = t.dt * steps as f64;
        }
    }
    c.validate()?;
    Ok(c)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub report: RunReport,
}

pub fn sweep(base: &RunConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    values.iter().map(|&v| Ok(SweepRow { value: v, report: run(&sweep_point(base, axis, v)?)? })).collect()
}

/// Summary table with one row per sweep value.
pub fn sweep_csv(axis: SweepAxis, rows: &[SweepRow]) -> String {
    let axis = serde_json::to_value(axis).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let mut s = format!("{axis},status,newton_steps,gmres_iterations,avg_iter,setup,solve,total\n");
    for r in rows {
        let rep = &r.report;
        let t = |f: fn(&Timings) -> f64| rep.timings.as_ref().map(|t| format!("{:.6}", f(t))).unwrap_or_default();
        let status = if rep.converged() { "converged" } else { "diverged" };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.value,
            status,
            rep.newton_steps,
            rep.gmres_iterations,
            rep.avg_iterations,
            t(|t| t.setup),
            t(|t| t.solve),
            t(|t| t.total)
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn stokes_cavity() -> RunConfig {
        RunConfig::from_json(
            r#"{
                "schema": "nsprec-run/1",
                "name": "stokes",
                "problem": "cavity2d",
                "discretization": "p2p1",
                "h_ratio": 4,
                "subdomains": 2,
                "mode": "stationary",
                "nu": 1.0,
                "convection": false,
                "preconditioner": {"type": "monolithic", "schwarz": {"coarse": ["rgdsw"]}}
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn stokes_cavity_smoke() {
        let r = run(&stokes_cavity()).unwrap();
        assert!(r.converged());
        // Linear problem: each inexact step gains the forcing factor.
        assert!(r.newton_steps <= 4, "{}", r.newton_steps);
        assert_eq!(r.avg_iterations, r.gmres_iterations as f64 / r.newton_steps as f64);
        assert_eq!(r.n_subdomains, 4);
        assert!(r.coarse_dims.velocity > 0);
        let back: RunReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back.gmres_iterations, r.gmres_iterations);
    }

    #[test]
    fn config_validation() {
        let mut c = stokes_cavity();
        c.schema = "other".into();
        assert!(c.validate().is_err());
        let mut c = stokes_cavity();
        c.discretization = Discretization::P2p1;
        c.problem = ProblemKind::Cavity3d;
        assert!(c.validate().is_err());
        let mut c = stokes_cavity();
        c.mode = Mode::Transient;
        assert!(c.validate().is_err());
        assert!(RunConfig::from_json(r#"{"schema": "nsprec-run/1", "bogus": 1}"#).is_err());
    }

    #[test]
    fn sweep_points_map_axes() {
        let mut base = stokes_cavity();
        base.problem = ProblemKind::Bfs2d;
        base.nu = 0.01;
        let c = sweep_point(&base, SweepAxis::ReynoldsNu, 800.0).unwrap();
        assert!((c.spec().reynolds() - 800.0).abs() < 1e-9);
        let c = sweep_point(&base, SweepAxis::ReynoldsV, 3200.0).unwrap();
        assert!((c.v_max - 16.0).abs() < 1e-12);
        assert_eq!(sweep_point(&base, SweepAxis::Subdomains, 4.0).unwrap().subdomains, 4);
        assert!(sweep_point(&base, SweepAxis::Cfl, 1.0).is_err());
        assert!("nonsense".parse::<SweepAxis>().is_err());
        assert_eq!("reynolds_v".parse::<SweepAxis>().unwrap(), SweepAxis::ReynoldsV);
        assert_eq!(sweep(&base, SweepAxis::Subdomains, &[]).unwrap().len(), 0);
        assert_eq!(sweep_csv(SweepAxis::Subdomains, &[]).lines().count(), 1);
    }
}
