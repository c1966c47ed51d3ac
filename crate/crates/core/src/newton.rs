//! Inexact Newton with Eisenstat-Walker forcing (choice 2) and a backtracking line search.

use crate::error::{Error, Result};
use crate::sparse::norm2;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForcingParams {
    pub eta0: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for ForcingParams {
    fn default() -> Self {
        Self { eta0: 1e-3, eta_min: 1e-8, eta_max: 1e-3, alpha: 1.5, gamma: 0.9 }
    }
}

/// eta_k = gamma (||R_k|| / ||R_{k-1}||)^alpha, bounded below by max(gamma eta_{k-1}^alpha, eta_min)
/// and above by eta_max.
pub fn forcing_choice2(p: &ForcingParams, norm: f64, prev_norm: f64, prev_eta: f64) -> f64 {
    if prev_norm == 0.0 {
        return p.eta_min;
    }
    let eta = p.gamma * (norm / prev_norm).powf(p.alpha);
    let lower = (p.gamma * prev_eta.powf(p.alpha)).max(p.eta_min);
    eta.max(lower).min(p.eta_max)
}

impl ForcingParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..1.0).contains(&v);
        if !(unit(self.eta0) && unit(self.eta_min) && unit(self.eta_max)) || self.eta_min > self.eta_max {
            return Err(Error::InvalidConfig("forcing terms must lie in [0, 1) with eta_min <= eta_max".into()));
        }
        if !(self.alpha > 1.0 && self.alpha <= 2.0) || !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig("forcing exponent must lie in (1, 2] and gamma in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonOptions {
    pub rtol: f64,
    pub step_tol: f64,
    pub max_steps: usize,
    pub max_backtracks: usize,
    pub armijo: f64,
    pub forcing: ForcingParams,
    /// Rebuild the preconditioner only on steps with index below this.
    pub rebuild_first_k: Option<usize>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            step_tol: 1e-8,
            max_steps: 50,
            max_backtracks: 8,
            armijo: 1e-4,
            forcing: ForcingParams::default(),
            rebuild_first_k: None,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct LinearSolveInfo {
    pub iterations: usize,
    pub converged: bool,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
}

pub trait NewtonProblem {
    fn residual(&mut self, x: &[f64]) -> Vec<f64>;

    /// Solve J(x) dx = -r to relative tolerance eta. `rebuild` says whether the
    /// preconditioner may be set up afresh.
    fn solve_linear(&mut self, x: &[f64], r: &[f64], eta: f64, step: usize, rebuild: bool) -> Result<(Vec<f64>, LinearSolveInfo)>;
}

#[derive(Clone, Debug, Serialize)]
pub struct NewtonStep {
    pub step: usize,
    pub residual: f64,
    pub eta: f64,
    pub gmres_iterations: usize,
    pub backtracks: usize,
    pub lambda: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct NewtonStats {
    pub converged: bool,
    /// Why the iteration stopped without converging.
    pub failure: Option<String>,
    pub steps: Vec<NewtonStep>,
    pub initial_residual: f64,
    pub final_residual: f64,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
}

impl NewtonStats {
    pub fn newton_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn gmres_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.gmres_iterations).sum()
    }
}

/// Solves R(x) = 0 in place. Divergence is reported through the stats, errors only for
/// failures of the linear solver setup.
pub fn newton_solve(problem: &mut dyn NewtonProblem, x: &mut [f64], opts: &NewtonOptions) -> Result<NewtonStats> {
    let mut r = problem.residual(x);
    let r0 = norm2(&r);
    let mut stats = NewtonStats { initial_residual: r0, final_residual: r0, ..Default::default() };
    if r0 == 0.0 {
        stats.converged = true;
        return Ok(stats);
    }
    let mut norm = r0;
    let mut prev_norm = 0.0;
    let mut eta = opts.forcing.eta0;
    for k in 0..opts.max_steps {
        if k > 0 {
            eta = forcing_choice2(&opts.forcing, norm, prev_norm, eta);
        }
        let rebuild = opts.rebuild_first_k.map_or(true, |n| k < n);
        let (dx, info) = problem.solve_linear(x, &r, eta, k, rebuild)?;
        stats.setup_seconds += info.setup_seconds;
        stats.solve_seconds += info.solve_seconds;
        let mut lambda = 1.0;
        let mut backtracks = 0;
        let (trial, trial_r, trial_norm) = loop {
            let t: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + lambda * d).collect();
            let tr = problem.residual(&t);
            let tn = norm2(&tr);
            if tn.is_finite() && tn <= (1.0 - opts.armijo * lambda * (1.0 - eta)) * norm {
                break (t, tr, tn);
            }
            if backtracks == opts.max_backtracks {
                stats.steps.push(NewtonStep { step: k, residual: norm, eta, gmres_iterations: info.iterations, backtracks, lambda });
                stats.final_residual = norm;
                stats.failure = Some(format!("line search failed at Newton step {k}"));
                return Ok(stats);
            }
            lambda *= 0.5;
            backtracks += 1;
        };
        let step_norm = lambda * norm2(&dx);
        x.copy_from_slice(&trial);
        r = trial_r;
        prev_norm = norm;
        norm = trial_norm;
        stats.final_residual = norm;
        stats.steps.push(NewtonStep { step: k, residual: norm, eta, gmres_iterations: info.iterations, backtracks, lambda });
        log::debug!("newton {k}: |R| = {norm:.3e}, eta = {eta:.2e}, gmres {}, backtracks {backtracks}", info.iterations);
        if norm <= opts.rtol * r0 || step_norm <= opts.step_tol {
            stats.converged = true;
            return Ok(stats);
        }
    }
    stats.failure = Some(format!("no convergence in {} Newton steps", opts.max_steps));
    Ok(stats)
}
