//! BDF-2 time stepping with a backward Euler start.
//!
//! A system M du/dt + G(u, t) = 0 is advanced by solving
//! M (c u^{n+1} - h) + G(u^{n+1}, t^{n+1}) = 0 with (c, h) from [`bdf_coefficients`].

use crate::error::{Error, Result};
use crate::newton::NewtonStats;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bootstrap {
    #[default]
    BackwardEuler,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransientConfig {
    pub dt: f64,
    pub end_time: f64,
    #[serde(default)]
    pub bootstrap: Bootstrap,
}

impl TransientConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.end_time >= self.dt) {
            return Err(Error::InvalidConfig(format!("need dt > 0 and end time >= dt, got {} and {}", self.dt, self.end_time)));
        }
        Ok(())
    }

    /// Number of steps, rounding end_time / dt to the nearest integer.
    pub fn n_steps(&self) -> usize {
        (self.end_time / self.dt).round().max(1.0) as usize
    }
}

/// (c, h) such that the discrete time derivative is c u^{n+1} - h. Without an older state
/// this is backward Euler.
pub fn bdf_coefficients(dt: f64, u_n: &[f64], u_nm1: Option<&[f64]>) -> (f64, Vec<f64>) {
    match u_nm1 {
        None => (1.0 / dt, u_n.iter().map(|v| v / dt).collect()),
        Some(old) => (1.5 / dt, u_n.iter().zip(old).map(|(a, b)| (2.0 * a - 0.5 * b) / dt).collect()),
    }
}

pub trait TimeDependentSystem {
    /// Solve M (coeff x - history) + G(x, t) = 0 for x, starting from the value in x.
    fn solve_step(&mut self, t: f64, coeff: f64, history: &[f64], x: &mut [f64]) -> Result<NewtonStats>;

    /// Largest and mean CFL number of state x for step dt.
    fn cfl(&self, _x: &[f64], _dt: f64) -> (f64, f64) {
        (0.0, 0.0)
    }

    /// Entries with a time derivative; history is zeroed elsewhere (pressure). None means all.
    fn history_mask(&self) -> Option<&[bool]> {
        None
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TimeStepRecord {
    pub t: f64,
    pub cfl_max: f64,
    pub cfl_avg: f64,
    pub newton_steps: usize,
    pub mean_gmres: f64,
    pub converged: bool,
}

impl TimeStepRecord {
    pub const CSV_HEADER: &'static str = "t,cfl_max,cfl_avg,newton_steps,mean_gmres";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.t, self.cfl_max, self.cfl_avg, self.newton_steps, self.mean_gmres)
    }
}

/// One step from u^n (and u^{n-1} if present) to u^{n+1} at time t_next.
pub fn bdf2_advance(
    sys: &mut dyn TimeDependentSystem,
    t_next: f64,
    dt: f64,
    u_n: &[f64],
    u_nm1: Option<&[f64]>,
) -> Result<(Vec<f64>, NewtonStats)> {
    let (coeff, mut history) = bdf_coefficients(dt, u_n, u_nm1);
    if let Some(mask) = sys.history_mask() {
        history.iter_mut().zip(mask).filter(|(_, m)| !**m).for_each(|(h, _)| *h = 0.0);
    }
    let mut x = u_n.to_vec();
    let stats = sys.solve_step(t_next, coeff, &history, &mut x)?;
    Ok((x, stats))
}

#[derive(Clone, Debug)]
pub struct TransientResult {
    pub state: Vec<f64>,
    pub records: Vec<TimeStepRecord>,
    pub newton: Vec<NewtonStats>,
    pub converged: bool,
}

/// Advance from u0 at t = 0 to the end time. Stops at the first step whose Newton solve fails.
pub fn run_transient(sys: &mut dyn TimeDependentSystem, u0: &[f64], cfg: &TransientConfig) -> Result<TransientResult> {
    cfg.validate()?;
    let mut u_n = u0.to_vec();
    let mut u_nm1: Option<Vec<f64>> = None;
    let mut out = TransientResult { state: Vec::new(), records: Vec::new(), newton: Vec::new(), converged: true };
    for step in 1..=cfg.n_steps() {
        let t = step as f64 * cfg.dt;
        let (u, stats) = bdf2_advance(sys, t, cfg.dt, &u_n, u_nm1.as_deref())?;
        let (cfl_max, cfl_avg) = sys.cfl(&u, cfg.dt);
        let n = stats.newton_steps();
        let mean_gmres = if n == 0 { 0.0 } else { stats.gmres_iterations() as f64 / n as f64 };
        out.records.push(TimeStepRecord { t, cfl_max, cfl_avg, newton_steps: n, mean_gmres, converged: stats.converged });
        log::info!("t = {t:.4}: cfl {cfl_max:.3}, newton {n}, gmres/step {mean_gmres:.1}");
        let ok = stats.converged;
        out.newton.push(stats);
        u_nm1 = Some(std::mem::replace(&mut u_n, u));
        if !ok {
            out.converged = false;
            break;
        }
    }
    out.state = u_n;
    Ok(out)
}
