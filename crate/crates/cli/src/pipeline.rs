use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context as _;
use quench_core::fbanalysis::{decompose, default_thresholds};
use quench_core::solver::{p_sweep, solve, SolveReport};
use quench_core::{Error, ProblemParams, ScalarField};
use serde_json::{json, Value};

use crate::analyses::{self, Analysis, AnalysisRecord};
use crate::config::ExperimentConfig;
use crate::{worse, ConfigError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Run,
    Solve,
    Analyze,
    Blowup,
    Psweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Run => "run",
            Mode::Solve => "solve",
            Mode::Analyze => "analyze",
            Mode::Blowup => "blowup",
            Mode::Psweep => "psweep",
        }
    }
}

/// Report tree of one invocation. `files` are relative to `dir`.
struct Report {
    dir: PathBuf,
    files: Vec<String>,
    exit_code: i32,
}

impl Report {
    fn create(&mut self, name: &str) -> anyhow::Result<File> {
        let f = File::create(self.dir.join(name))
            .with_context(|| format!("cannot create {}", self.dir.join(name).display()))?;
        self.files.push(name.to_owned());
        Ok(f)
    }
}

/// Runs `mode` for `cfg` and returns the exit code. The report tree is
/// written even when the solver runs out of budget.
pub fn execute(cfg: &ExperimentConfig, mode: Mode, default_name: &str) -> anyhow::Result<i32> {
    let input = match (&cfg.input.field, mode) {
        (Some(path), Mode::Analyze | Mode::Blowup | Mode::Run) => Some(load_input(path)?),
        (None, Mode::Analyze) => {
            anyhow::bail!(ConfigError("analyze needs an input field (`--input-field PATH`)".into()))
        }
        _ => None,
    };
    let grid = match &input {
        Some(u) => u.grid().clone(),
        None => cfg.grid().map_err(|e| ConfigError(e.to_string()))?,
    };
    let mut params = cfg.params_on(&grid).map_err(|e| ConfigError(e.to_string()))?;
    if mode == Mode::Psweep && cfg.problem.delta.is_none() {
        // the sweep leaves p = 2, so it needs a positive δ even if the base p is 2
        params.grad_reg_delta = 1e-4 * grid.max_spacing();
    }
    let (tau0, sigma0) = default_thresholds(&grid, &params);
    let tau = cfg.thresholds.tau.unwrap_or(tau0);
    let sigma = cfg.thresholds.sigma.unwrap_or(sigma0);

    let dir = cfg.output_dir(default_name);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut report = Report { dir, files: Vec::new(), exit_code: 0 };
    fs::write(report.dir.join("config.toml"), cfg.to_toml())?;
    report.files.push("config.toml".into());

    let mut manifest = json!({
        "tool": "quench",
        "version": env!("CARGO_PKG_VERSION"),
        "command": mode.name(),
        "config_hash": cfg.hash(),
        "timestamp": SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "grid": {
            "shape": grid.shape(),
            "spacing": grid.spacing(),
            "origin": grid.origin(),
        },
        "problem": params,
        "delta": params.grad_reg_delta,
        "eps": params.pot_reg_eps,
        "tau": tau,
        "sigma": sigma,
        "boundary": cfg.boundary.name(),
    });

    if mode == Mode::Psweep {
        let g = sample_boundary(cfg, &grid, &params)?;
        let sweep = p_sweep(&g, &params, &cfg.psweep.p_sequence, &cfg.solve)
            .map_err(|e| match e {
                Error::Precondition(m) | Error::InvalidParams(m) => anyhow::Error::new(ConfigError(m)),
                other => other.into(),
            })?;
        sweep.write_csv(report.create("sweep.csv")?)?;
        let converged = sweep.reference.converged() && sweep.entries.iter().all(SolveReport::converged);
        if !converged {
            report.exit_code = worse(report.exit_code, 3);
        }
        manifest["sweep"] = json!({
            "reference": sweep.reference.summary(),
            "entries": sweep.entries.iter().map(SolveReport::summary).collect::<Vec<_>>(),
            "table": sweep.table,
        });
        return finish(report, manifest);
    }

    let u = match input {
        Some(u) => {
            manifest["input_field"] = json!(cfg.input.field);
            u
        }
        None => {
            let g = sample_boundary(cfg, &grid, &params)?;
            let rep = match solve(&g, &params, &cfg.solve) {
                Ok(rep) => rep,
                Err(Error::NonConvergence(rep)) => {
                    report.exit_code = worse(report.exit_code, 3);
                    *rep
                }
                Err(e) => return Err(e.into()),
            };
            rep.solution.save(report.dir.join("solution.field"))?;
            report.files.push("solution.field".into());
            rep.write_energy_csv(report.create("energy.csv")?)?;
            serde_json::to_writer_pretty(report.create("solve.json")?, &rep.summary())?;
            manifest["solve"] = json!(rep.summary());
            rep.solution
        }
    };
    if mode == Mode::Solve {
        return finish(report, manifest);
    }

    let phases = decompose(&u, tau, sigma).map_err(|e| ConfigError(e.to_string()))?;
    manifest["phases"] = json!(phases.summary());
    let (list, requested) = match mode {
        Mode::Blowup => {
            let b = &cfg.blowup;
            (vec![Analysis::Blowup { center: b.center, r0: b.r0, count: b.count }], true)
        }
        Mode::Analyze if cfg.analyses.is_empty() => (Analysis::default_set(), false),
        _ => (cfg.analyses.clone(), true),
    };
    let ctx = analyses::Context { u: &u, params: &params, phases: &phases, dir: &report.dir, requested };
    let records: Vec<AnalysisRecord> = list.iter().map(|a| analyses::run(a, &ctx)).collect();
    for r in &records {
        report.exit_code = worse(report.exit_code, r.exit_code);
        report.files.extend(r.files.iter().cloned());
        if let Some(reason) = &r.reason {
            eprintln!("{}: {:?}: {reason}", r.kind, r.status);
        }
    }
    manifest["analyses"] = json!(records);
    finish(report, manifest)
}

fn sample_boundary(
    cfg: &ExperimentConfig,
    grid: &quench_core::Grid,
    params: &ProblemParams,
) -> anyhow::Result<ScalarField> {
    cfg.boundary
        .sample(grid, params)
        .map_err(|e| ConfigError(format!("boundary data ({}): {e}", cfg.boundary.name())).into())
}

fn load_input(path: &Path) -> anyhow::Result<ScalarField> {
    Ok(ScalarField::load(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?)
}

fn finish(mut report: Report, mut manifest: Value) -> anyhow::Result<i32> {
    report.files.sort();
    report.files.dedup();
    manifest["files"] = json!(report.files);
    manifest["exit_code"] = json!(report.exit_code);
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(report.dir.join("manifest.json"), text + "\n")?;
    eprintln!("report written to {}", report.dir.display());
    Ok(report.exit_code)
}
