use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use quench_core::boundary::BoundaryData;
use quench_core::solver::SolveConfig;
use quench_core::{Grid, ProblemParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analyses::Analysis;
use crate::ConfigError;

pub const SECTIONS: &[&str] = &[
    "problem", "grid", "boundary", "solve", "thresholds", "input", "output", "blowup", "psweep",
];

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub grid: GridSection,
    pub boundary: BoundaryData,
    pub solve: SolveConfig,
    pub thresholds: ThresholdSection,
    pub input: InputSection,
    pub output: OutputSection,
    pub blowup: BlowupSection,
    pub psweep: SweepSection,
    pub analyses: Vec<Analysis>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub p: f64,
    pub gamma: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// Gradient regularization; `1e-4 h` when absent (zero for `p = 2`).
    pub delta: Option<f64>,
    /// Potential smoothing; `1e-4 h` when absent.
    pub eps: Option<f64>,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self { p: 2.0, gamma: 1.0, lambda_plus: 1.0, lambda_minus: 1.0, delta: None, eps: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Nodes per axis; one entry for an interval, two for a rectangle.
    pub shape: Vec<usize>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { shape: vec![65, 65], lower: None, upper: None }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputSection {
    /// Field file analysed in place of a fresh solve.
    pub field: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Root for relative `dir`s. Falls back to `QUENCH_OUTPUT_ROOT`, then
    /// `quench-runs`.
    pub root: Option<PathBuf>,
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowupSection {
    pub center: Option<[f64; 2]>,
    pub r0: Option<f64>,
    pub count: usize,
}

impl Default for BlowupSection {
    fn default() -> Self {
        Self { center: None, r0: None, count: 4 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub p_sequence: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { p_sequence: vec![2.5, 2.25, 2.1, 2.05] }
    }
}

impl ExperimentConfig {
    /// Reads `path` (if any), applies `--section-key value` overrides and
    /// validates the result.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> anyhow::Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ConfigError(format!("cannot read {}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        apply_overrides(&mut table, overrides)?;
        // via JSON so integers are accepted where floats are expected
        let json = serde_json::to_value(&table)?;
        let cfg: ExperimentConfig =
            serde_json::from_value(json).map_err(|e| ConfigError(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let cfg_err = |e: quench_core::Error| ConfigError(e.to_string());
        self.grid().map_err(cfg_err)?;
        self.params().map_err(cfg_err)?;
        self.solve.validate().map_err(cfg_err)?;
        for (name, v) in [("tau", self.thresholds.tau), ("sigma", self.thresholds.sigma)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    bail!(ConfigError(format!("thresholds.{name} must be positive (got {v})")));
                }
            }
        }
        if let BoundaryData::File { path } = &self.boundary {
            if !path.is_file() {
                bail!(ConfigError(format!("boundary file {} does not exist", path.display())));
            }
        }
        if let Some(f) = &self.input.field {
            if !f.is_file() {
                bail!(ConfigError(format!("input field {} does not exist", f.display())));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> quench_core::Result<Grid> {
        let dim = self.grid.shape.len();
        if !(1..=2).contains(&dim) {
            return Err(quench_core::Error::InvalidGrid(format!(
                "grid.shape needs 1 or 2 entries (got {dim})"
            )));
        }
        let pick = |v: &Option<Vec<f64>>, d: f64| -> quench_core::Result<Vec<f64>> {
            match v {
                None => Ok(vec![d; dim]),
                Some(v) if v.len() == dim => Ok(v.clone()),
                Some(v) => Err(quench_core::Error::InvalidGrid(format!(
                    "grid bounds have {} entries for a {dim}-D shape",
                    v.len()
                ))),
            }
        };
        let (lo, hi) = (pick(&self.grid.lower, -1.0)?, pick(&self.grid.upper, 1.0)?);
        let spacing: Vec<f64> = (0..dim)
            .map(|a| (hi[a] - lo[a]) / (self.grid.shape[a].max(2) - 1) as f64)
            .collect();
        Grid::new(&self.grid.shape, &spacing, &lo)
    }

    pub fn params(&self) -> quench_core::Result<ProblemParams> {
        self.params_on(&self.grid()?)
    }

    /// Problem parameters with the regularization filled in from `grid`.
    pub fn params_on(&self, grid: &Grid) -> quench_core::Result<ProblemParams> {
        let pr = &self.problem;
        let base = ProblemParams::new(pr.p, pr.gamma, pr.lambda_plus, pr.lambda_minus)?;
        let h = grid.max_spacing();
        let delta = pr.delta.unwrap_or(if pr.p == 2.0 { 0.0 } else { 1e-4 * h });
        let eps = pr.eps.unwrap_or(1e-4 * h);
        let params = base.with_regularization(delta, eps)?;
        quench_core::energy::check_smooth(&params)?;
        Ok(params)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the effective configuration, leaving out where the
    /// report goes.
    pub fn hash(&self) -> String {
        let cfg = ExperimentConfig { output: OutputSection::default(), ..self.clone() };
        let digest = Sha256::digest(cfg.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn output_dir(&self, default_name: &str) -> PathBuf {
        let root = self
            .output
            .root
            .clone()
            .or_else(|| std::env::var_os("QUENCH_OUTPUT_ROOT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("quench-runs"));
        match &self.output.dir {
            Some(d) if d.is_absolute() => d.clone(),
            Some(d) => root.join(d),
            None => root.join(default_name),
        }
    }
}

/// Sets `table[section][key] = value` for each `--section-key value` pair
/// (or `--section-key=value`). Values are read as TOML literals and fall
/// back to plain strings. Keys spelled with `-` map to `_`, and
/// `--solve-line-search-x` addresses `solve.line_search.x`.
pub fn apply_overrides(table: &mut toml::Table, args: &[String]) -> anyhow::Result<()> {
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let flag = arg
            .strip_prefix("--")
            .ok_or_else(|| ConfigError(format!("expected a `--section-key` flag, got `{arg}`")))?;
        let (flag, raw) = match flag.split_once('=') {
            Some((f, v)) => (f, v.to_owned()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| ConfigError(format!("flag `--{flag}` needs a value")))?;
                (flag, v.clone())
            }
        };
        let (section, key) = SECTIONS
            .iter()
            .find_map(|s| flag.strip_prefix(s).and_then(|r| r.strip_prefix('-')).map(|k| (*s, k)))
            .ok_or_else(|| {
                ConfigError(format!(
                    "unknown flag `--{flag}`; flags are `--<section>-<key>` with section one of {}",
                    SECTIONS.join(", ")
                ))
            })?;
        let key = key.replace('-', "_");
        if key.is_empty() {
            bail!(ConfigError(format!("flag `--{flag}` names no key")));
        }
        let mut path = vec![section.to_owned()];
        match (section, key.strip_prefix("line_search_")) {
            ("solve", Some(rest)) => {
                path.push("line_search".into());
                path.push(rest.to_owned());
            }
            _ => path.push(key),
        }
        set(table, &path, parse_value(&raw))
            .with_context(|| format!("while applying `--{flag}`"))?;
    }
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()))
}

fn set(table: &mut toml::Table, path: &[String], value: toml::Value) -> anyhow::Result<()> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        cur = cur
            .entry(p.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| anyhow!(ConfigError(format!("`{p}` is not a table"))))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}
