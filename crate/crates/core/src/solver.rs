//! Minimization of the discrete functional with Dirichlet data.
//!
//! The iteration is limited-memory BFGS with Armijo backtracking on the
//! regularized energy, wrapped in a continuation that halves `(δ, ε)` down to
//! the values carried by the [`ProblemParams`]. Boundary nodes are never
//! written, so the solution matches the data there bit for bit.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{check_smooth, EnergyBreakdown, EnergyModel};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::ops::{node_gradient, node_gradient_norm, p_laplacian_residual};
use crate::params::ProblemParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineSearch {
    /// Step multiplier after a rejected trial, in (0, 1).
    pub shrink: f64,
    /// Armijo constant, in (0, 1).
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearch {
    fn default() -> Self {
        Self {
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 50,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Iteration budget per continuation stage.
    pub max_iters: usize,
    /// Stop when the relative energy decrease stays below this for
    /// `stall_window` consecutive iterations.
    pub energy_tol: f64,
    /// Stop when `max_k |∂J/∂u_k| / |cell|` over interior nodes drops below
    /// this (a nodal Euler–Lagrange residual).
    pub grad_tol: f64,
    /// Number of halvings of `(δ, ε)` before reaching the target values.
    pub continuation_steps: usize,
    pub line_search: LineSearch,
    /// Red-black SOR sweeps of the harmonic extension used as initial guess.
    pub init_sweeps: usize,
    /// Correction pairs kept by the quasi-Newton update.
    pub memory: usize,
    pub stall_window: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            energy_tol: 1e-15,
            grad_tol: 1e-8,
            continuation_steps: 6,
            line_search: LineSearch::default(),
            init_sweeps: 400,
            memory: 12,
            stall_window: 20,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.into()));
        if !(self.grad_tol > 0.0 && self.energy_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        let ls = &self.line_search;
        if !(ls.shrink > 0.0 && ls.shrink < 1.0) {
            return bad("line-search shrink factor must lie in (0, 1)");
        }
        if !(ls.sufficient_decrease > 0.0 && ls.sufficient_decrease < 1.0) {
            return bad("sufficient-decrease constant must lie in (0, 1)");
        }
        if self.max_iters == 0 || ls.max_backtracks == 0 || self.memory == 0 {
            return bad("iteration budgets and memory must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientTolerance,
    EnergyStall,
    /// No step along the steepest-descent direction decreases the energy in
    /// floating point.
    LineSearchExhausted,
    IterationBudget,
}

impl StopReason {
    pub fn converged(self) -> bool {
        !matches!(self, StopReason::IterationBudget)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub delta: f64,
    pub eps: f64,
    pub grad_tol: f64,
    pub iterations: usize,
    pub energy: EnergyBreakdown,
    pub grad_sup: f64,
    pub stop: StopReason,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub params: ProblemParams,
    pub solution: ScalarField,
    /// Energy after every accepted step of the final continuation stage,
    /// starting with the stage's initial iterate.
    pub energy_history: Vec<EnergyBreakdown>,
    pub final_energy: EnergyBreakdown,
    /// `sup |Δ_p u − F′(u)|` over interior nodes with `|u| ≥ 2ε`, `|Du| ≥ 2δ`.
    pub el_residual_sup: f64,
    /// `max |u|`.
    pub sup_norm: f64,
    pub iterations_used: usize,
    pub delta_final: f64,
    pub eps_final: f64,
    pub grad_sup: f64,
    pub stages: Vec<StageSummary>,
    pub stop: StopReason,
}

/// Serializable summary of a [`SolveReport`] (everything except the field).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveSummary {
    pub params: ProblemParams,
    pub converged: bool,
    pub stop: StopReason,
    pub final_energy: EnergyBreakdown,
    pub el_residual_sup: f64,
    pub sup_norm: f64,
    pub grad_sup: f64,
    pub iterations_used: usize,
    pub delta_final: f64,
    pub eps_final: f64,
    pub stages: Vec<StageSummary>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.stop.converged()
    }

    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            params: self.params,
            converged: self.converged(),
            stop: self.stop,
            final_energy: self.final_energy,
            el_residual_sup: self.el_residual_sup,
            sup_norm: self.sup_norm,
            grad_sup: self.grad_sup,
            iterations_used: self.iterations_used,
            delta_final: self.delta_final,
            eps_final: self.eps_final,
            stages: self.stages.clone(),
        }
    }

    /// Columns `iteration,total,dirichlet,potential_plus,potential_minus`.
    pub fn write_energy_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["iteration", "total", "dirichlet", "potential_plus", "potential_minus"])?;
        for (i, e) in self.energy_history.iter().enumerate() {
            wr.write_record([
                i.to_string(),
                e.total.to_string(),
                e.dirichlet.to_string(),
                e.potential_plus.to_string(),
                e.potential_minus.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Minimizes the discrete energy over fields equal to `g` on the boundary.
///
/// Returns [`Error::NonConvergence`] carrying the best iterate when the
/// final stage exhausts its budget.
pub fn solve(g: &ScalarField, params: &ProblemParams, cfg: &SolveConfig) -> Result<SolveReport> {
    solve_from(g, params, cfg, None)
}

/// As [`solve`], adding `offset` (interior nodes only) to the initial guess.
/// Different offsets probe non-uniqueness of minimizers.
pub fn solve_from(
    g: &ScalarField,
    params: &ProblemParams,
    cfg: &SolveConfig,
    offset: Option<&ScalarField>,
) -> Result<SolveReport> {
    cfg.validate()?;
    check_smooth(params)?;
    let grid = g.grid().clone();
    if let Some(off) = offset {
        off.check_same_grid(g)?;
    }
    let interior: Vec<usize> = (0..grid.len()).filter(|&k| !grid.is_boundary(k)).collect();
    let mut u = harmonic_extension(g, cfg.init_sweeps);
    if let Some(off) = offset {
        for &k in &interior {
            u[k] += off.at(k);
        }
    }

    let mut model = EnergyModel::new(grid.clone(), *params);
    let mut stages = Vec::new();
    let mut history = Vec::new();
    let mut total_iters = 0;
    let mut last_stop = StopReason::GradientTolerance;
    for stage in 0..=cfg.continuation_steps {
        let scale = (2.0f64).powi((cfg.continuation_steps - stage) as i32);
        let stage_params = ProblemParams {
            grad_reg_delta: params.grad_reg_delta * scale,
            pot_reg_eps: params.pot_reg_eps * scale,
            ..*params
        };
        model.set_params(stage_params);
        let tol = cfg.grad_tol * scale;
        let mut stage_history = Vec::new();
        let out = minimize(&mut model, &mut u, &interior, cfg, tol, &mut stage_history);
        total_iters += out.iterations;
        stages.push(StageSummary {
            delta: stage_params.grad_reg_delta,
            eps: stage_params.pot_reg_eps,
            grad_tol: tol,
            iterations: out.iterations,
            energy: out.energy,
            grad_sup: out.grad_sup,
            stop: out.stop,
        });
        last_stop = out.stop;
        history = stage_history;
    }

    let solution = ScalarField::new(grid.clone(), u)?;
    let final_stage = stages.last().cloned().expect("at least one stage");
    let report = SolveReport {
        params: *params,
        el_residual_sup: el_residual_off_band(&solution, params)?,
        sup_norm: solution.sup_norm(),
        solution,
        energy_history: history,
        final_energy: final_stage.energy,
        iterations_used: total_iters,
        delta_final: params.grad_reg_delta,
        eps_final: params.pot_reg_eps,
        grad_sup: final_stage.grad_sup,
        stages,
        stop: last_stop,
    };
    if report.converged() {
        Ok(report)
    } else {
        Err(Error::NonConvergence(Box::new(report)))
    }
}

fn el_residual_off_band(u: &ScalarField, params: &ProblemParams) -> Result<f64> {
    let res = p_laplacian_residual(u, params)?;
    let grad = node_gradient_norm(u);
    let (eps, delta) = (params.pot_reg_eps, params.grad_reg_delta);
    Ok(res.sup_where(|k| u.at(k).abs() >= 2.0 * eps && grad.at(k) >= 2.0 * delta))
}

/// Interior values from red-black SOR sweeps of the Laplace equation with
/// the boundary values of `g`, starting from zero.
fn harmonic_extension(g: &ScalarField, sweeps: usize) -> Vec<f64> {
    let grid = g.grid();
    let [n0, n1] = grid.shape2();
    let mut u: Vec<f64> = g
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| if grid.is_boundary(k) { v } else { 0.0 })
        .collect();
    let h = grid.spacing();
    let nmax = grid.shape().iter().copied().max().unwrap_or(3) as f64;
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / nmax).sin());
    let (w0, w1) = if grid.dim() == 1 {
        (1.0, 0.0)
    } else {
        (1.0 / (h[0] * h[0]), 1.0 / (h[1] * h[1]))
    };
    let diag = 2.0 * (w0 + w1);
    for _ in 0..sweeps {
        for color in 0..2 {
            for i in 1..n0 - 1 {
                if grid.dim() == 1 {
                    if i % 2 != color {
                        continue;
                    }
                    let gs = 0.5 * (u[i - 1] + u[i + 1]);
                    u[i] += omega * (gs - u[i]);
                    continue;
                }
                for j in 1..n1 - 1 {
                    if (i + j) % 2 != color {
                        continue;
                    }
                    let k = i * n1 + j;
                    let gs = (w0 * (u[k - n1] + u[k + n1]) + w1 * (u[k - 1] + u[k + 1])) / diag;
                    u[k] += omega * (gs - u[k]);
                }
            }
        }
    }
    u
}

struct StageOutcome {
    iterations: usize,
    energy: EnergyBreakdown,
    grad_sup: f64,
    stop: StopReason,
}

fn dot(idx: &[usize], a: &[f64], b: &[f64]) -> f64 {
    idx.iter().map(|&k| a[k] * b[k]).sum()
}

fn sup_on(idx: &[usize], a: &[f64]) -> f64 {
    idx.iter().fold(0.0, |m, &k| m.max(a[k].abs()))
}

fn minimize(
    model: &mut EnergyModel,
    u: &mut [f64],
    interior: &[usize],
    cfg: &SolveConfig,
    grad_tol: f64,
    history: &mut Vec<EnergyBreakdown>,
) -> StageOutcome {
    let n = u.len();
    let vol = model.grid().cell_volume();
    let mut grad = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut energy = model.energy_and_gradient(u, &mut grad);
    model.hessian_diagonal(&mut diag);
    history.push(energy);
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut dir = vec![0.0; n];
    let mut trial = u.to_vec();
    let mut trial_grad = vec![0.0; n];
    let mut alpha_hist = vec![0.0; cfg.memory];
    let mut stall = 0usize;
    let ls = cfg.line_search;

    for it in 0..cfg.max_iters {
        let grad_sup = sup_on(interior, &grad) / vol;
        if grad_sup <= grad_tol {
            return StageOutcome { iterations: it, energy, grad_sup, stop: StopReason::GradientTolerance };
        }
        // two-loop recursion with the diagonal estimate as initial metric
        for &k in interior {
            dir[k] = -grad[k];
        }
        for (m, (s, y, rho)) in pairs.iter().enumerate().rev() {
            let a = rho * dot(interior, s, &dir);
            alpha_hist[m] = a;
            for &k in interior {
                dir[k] -= a * y[k];
            }
        }
        let theta = match pairs.back() {
            Some((s, y, _)) => {
                let yhy: f64 = interior.iter().map(|&k| y[k] * y[k] / diag[k]).sum();
                dot(interior, s, y) / yhy
            }
            None => 1.0,
        };
        for &k in interior {
            dir[k] *= theta / diag[k];
        }
        for (m, (s, y, rho)) in pairs.iter().enumerate() {
            let b = rho * dot(interior, y, &dir);
            let a = alpha_hist[m];
            for &k in interior {
                dir[k] += (a - b) * s[k];
            }
        }
        let mut slope = dot(interior, &grad, &dir);
        let mut fresh = pairs.is_empty();
        let reset = |dir: &mut [f64]| {
            for &k in interior {
                dir[k] = -grad[k] / diag[k];
            }
            dot(interior, &grad, dir)
        };
        if !(slope < 0.0) {
            pairs.clear();
            fresh = true;
            slope = reset(&mut dir);
        }

        let mut accepted = false;
        loop {
            let mut alpha = 1.0;
            for _ in 0..ls.max_backtracks {
                for &k in interior {
                    trial[k] = u[k] + alpha * dir[k];
                }
                let e = model.energy(&trial);
                if e.total <= energy.total + ls.sufficient_decrease * alpha * slope {
                    accepted = true;
                    break;
                }
                alpha *= ls.shrink;
            }
            if accepted || fresh {
                break;
            }
            pairs.clear();
            fresh = true;
            slope = reset(&mut dir);
        }
        if !accepted {
            return StageOutcome { iterations: it, energy, grad_sup, stop: StopReason::LineSearchExhausted };
        }

        let new_energy = model.energy_and_gradient(&trial, &mut trial_grad);
        model.hessian_diagonal(&mut diag);
        let mut s = vec![0.0; n];
        let mut y = vec![0.0; n];
        for &k in interior {
            s[k] = trial[k] - u[k];
            y[k] = trial_grad[k] - grad[k];
        }
        let sy = dot(interior, &s, &y);
        if sy > 1e-14 * dot(interior, &s, &s).sqrt() * dot(interior, &y, &y).sqrt() && sy > 0.0 {
            if pairs.len() == cfg.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        for &k in interior {
            u[k] = trial[k];
        }
        std::mem::swap(&mut grad, &mut trial_grad);
        let rel = (energy.total - new_energy.total) / energy.total.abs().max(f64::MIN_POSITIVE);
        energy = new_energy;
        history.push(energy);
        if rel < cfg.energy_tol {
            stall += 1;
            if stall >= cfg.stall_window {
                let grad_sup = sup_on(interior, &grad) / vol;
                return StageOutcome { iterations: it + 1, energy, grad_sup, stop: StopReason::EnergyStall };
            }
        } else {
            stall = 0;
        }
    }
    let grad_sup = sup_on(interior, &grad) / vol;
    let stop = if grad_sup <= grad_tol {
        StopReason::GradientTolerance
    } else {
        StopReason::IterationBudget
    };
    StageOutcome { iterations: cfg.max_iters, energy, grad_sup, stop }
}

/// One row of the stability table: distances between the solution for
/// `p` and the reference solution for `p = 2` on the interior subgrid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub c0_distance: f64,
    pub c1_distance: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub reference: SolveReport,
    pub entries: Vec<SolveReport>,
    pub table: Vec<SweepRow>,
}

impl SweepReport {
    /// Columns `p,c0_distance,c1_distance,converged`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["p", "c0_distance", "c1_distance", "converged"])?;
        for r in &self.table {
            wr.write_record([
                r.p.to_string(),
                r.c0_distance.to_string(),
                r.c1_distance.to_string(),
                r.converged.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn into_report(r: Result<SolveReport>) -> Result<SolveReport> {
    match r {
        Err(Error::NonConvergence(rep)) => Ok(*rep),
        other => other,
    }
}

/// Nodes at distance at least a quarter of the smallest half-width from
/// the boundary.
pub fn interior_subgrid(grid: &Grid) -> Vec<usize> {
    let (lo, hi) = (grid.lower(), grid.upper());
    let half = (0..grid.dim())
        .map(|a| 0.5 * (hi[a] - lo[a]))
        .fold(f64::INFINITY, f64::min);
    (0..grid.len())
        .filter(|&k| grid.distance_to_boundary(grid.point(k)) >= 0.25 * half)
        .collect()
}

/// Solves the same boundary-value problem for each `p` in `p_sequence` and
/// for `p = 2`, and tabulates the interior `C⁰` and `C¹` distances to the
/// `p = 2` solution. Non-converged entries are kept and flagged.
pub fn p_sweep(
    g: &ScalarField,
    base: &ProblemParams,
    p_sequence: &[f64],
    cfg: &SolveConfig,
) -> Result<SweepReport> {
    if let Some(p) = p_sequence.iter().find(|&&p| !(p >= 2.0)) {
        return Err(Error::Precondition(format!("sweep needs p >= 2 (got {p})")));
    }
    let reference = into_report(solve(g, &base.with_p(2.0)?, cfg))?;
    let entries: Vec<SolveReport> = p_sequence
        .par_iter()
        .map(|&p| into_report(solve(g, &base.with_p(p)?, cfg)))
        .collect::<Result<_>>()?;
    let idx = interior_subgrid(g.grid());
    let ref_du = node_gradient(&reference.solution);
    let table = entries
        .iter()
        .map(|e| {
            let du = node_gradient(&e.solution);
            let mut c0: f64 = 0.0;
            let mut c1: f64 = 0.0;
            for &k in &idx {
                c0 = c0.max((e.solution.at(k) - reference.solution.at(k)).abs());
                c1 = c1.max((du[k][0] - ref_du[k][0]).hypot(du[k][1] - ref_du[k][1]));
            }
            SweepRow {
                p: e.params.p,
                c0_distance: c0,
                c1_distance: c1,
                converged: e.converged(),
            }
        })
        .collect();
    Ok(SweepReport { reference, entries, table })
}
