use std::fs::File;
use std::path::Path;

use quench_core::blowup::{blowup_sequence, dyadic_scales, homogeneity_defect};
use quench_core::fbanalysis::{
    bv_inequality_probe, dyadic_radii, gradient_decay_fit, growth_fit, hessian_l2_estimate,
    nondegeneracy_fit, perimeter_estimate, small_gradient_measure, PhaseDecomposition,
};
use quench_core::grid::Point;
use quench_core::{Error, ProblemParams, ScalarField};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

fn default_eps() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}

fn four() -> usize {
    4
}

/// A measurement run on the solution. A missing `center` means the
/// degenerate free-boundary point nearest the grid center, or the grid
/// center if the field has no free boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Analysis {
    Phases {},
    Growth {
        center: Option<[f64; 2]>,
    },
    GradientDecay {
        center: Option<[f64; 2]>,
    },
    Nondegeneracy {
        center: Option<[f64; 2]>,
    },
    SmallGradient {
        #[serde(default = "default_eps")]
        eps: Vec<f64>,
    },
    Hessian {
        center: Option<[f64; 2]>,
        radii: Option<Vec<f64>>,
    },
    BvProbe {
        center: Option<[f64; 2]>,
        radius: Option<f64>,
    },
    Perimeter {},
    Blowup {
        center: Option<[f64; 2]>,
        r0: Option<f64>,
        #[serde(default = "four")]
        count: usize,
    },
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Analysis::Phases {} => "phases",
            Analysis::Growth { .. } => "growth",
            Analysis::GradientDecay { .. } => "gradient-decay",
            Analysis::Nondegeneracy { .. } => "nondegeneracy",
            Analysis::SmallGradient { .. } => "small-gradient",
            Analysis::Hessian { .. } => "hessian",
            Analysis::BvProbe { .. } => "bv-probe",
            Analysis::Perimeter {} => "perimeter",
            Analysis::Blowup { .. } => "blowup",
        }
    }

    /// Everything except the blow-up sequence, whose profiles are large.
    pub fn default_set() -> Vec<Analysis> {
        vec![
            Analysis::Phases {},
            Analysis::Growth { center: None },
            Analysis::GradientDecay { center: None },
            Analysis::Nondegeneracy { center: None },
            Analysis::SmallGradient { eps: default_eps() },
            Analysis::Hessian { center: None, radii: None },
            Analysis::BvProbe { center: None, radius: None },
            Analysis::Perimeter {},
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Skipped,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisRecord {
    pub kind: &'static str,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<Point>,
    pub files: Vec<String>,
    pub result: Value,
    #[serde(skip)]
    pub exit_code: i32,
}

pub struct Context<'a> {
    pub u: &'a ScalarField,
    pub params: &'a ProblemParams,
    pub phases: &'a PhaseDecomposition,
    pub dir: &'a Path,
    /// Analyses the user did not ask for turn resolution failures into skips.
    pub requested: bool,
}

impl Context<'_> {
    fn center(&self, explicit: Option<[f64; 2]>) -> Point {
        explicit.unwrap_or_else(|| {
            let c = self.u.grid().center();
            self.phases.degenerate_point(c).unwrap_or(c)
        })
    }

    fn csv<F>(&self, name: &str, files: &mut Vec<String>, write: F) -> quench_core::Result<()>
    where
        F: FnOnce(File) -> quench_core::Result<()>,
    {
        write(File::create(self.dir.join(name))?)?;
        files.push(name.to_owned());
        Ok(())
    }
}

type Exec = (Vec<String>, Value, Option<Point>);

pub fn run(a: &Analysis, ctx: &Context) -> AnalysisRecord {
    let record = |status, reason, exit_code, (files, result, center): Exec| AnalysisRecord {
        kind: a.name(),
        status,
        reason,
        center,
        files,
        result,
        exit_code,
    };
    match exec(a, ctx) {
        Ok(out) => record(Status::Ok, None, 0, out),
        Err(e) => {
            let empty = (Vec::new(), Value::Null, None);
            let code = match &e {
                Error::EmptyPhase(_) | Error::UndefinedFit(_) => 0,
                Error::InsufficientResolution(_) if !ctx.requested => 0,
                Error::InsufficientResolution(_) => 4,
                Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
                _ => 2,
            };
            let status = if code == 0 { Status::Skipped } else { Status::Failed };
            record(status, Some(e.to_string()), code, empty)
        }
    }
}

fn exec(a: &Analysis, ctx: &Context) -> quench_core::Result<Exec> {
    let mut files = Vec::new();
    let u = ctx.u;
    let grid = u.grid();
    let fit = matches!(
        a,
        Analysis::Growth { .. } | Analysis::GradientDecay { .. } | Analysis::Nondegeneracy { .. }
    );
    if fit && u.sup_norm() == 0.0 {
        return Err(Error::UndefinedFit("the field vanishes identically".into()));
    }
    match a {
        Analysis::Phases {} => {
            ctx.csv("phases.csv", &mut files, |f| ctx.phases.write_csv(f))?;
            Ok((files, json!(ctx.phases.summary()), None))
        }
        Analysis::Growth { center } | Analysis::GradientDecay { center } => {
            let c = ctx.center(*center);
            let (fit, name) = if matches!(a, Analysis::Growth { .. }) {
                (growth_fit(u, c)?, "growth.csv")
            } else {
                (gradient_decay_fit(u, c)?, "gradient_decay.csv")
            };
            ctx.csv(name, &mut files, |f| fit.write_csv(f))?;
            let mut result = json!(fit.summary());
            let eta = ctx.params.growth_exponent();
            let predicted = if name == "growth.csv" { eta } else { eta - 1.0 };
            result["predicted_exponent"] = json!(predicted);
            Ok((files, result, Some(c)))
        }
        Analysis::Nondegeneracy { center } => {
            let c = ctx.center(*center);
            let eta = ctx.params.growth_exponent();
            let nd = nondegeneracy_fit(u, c, eta)?;
            let mut result = json!({ "exponent": eta });
            for (side, fit, floor) in [
                ("plus", &nd.plus, nd.plus_floor()),
                ("minus", &nd.minus, nd.minus_floor()),
            ] {
                match fit {
                    Ok(fit) => {
                        ctx.csv(&format!("nondegeneracy_{side}.csv"), &mut files, |f| fit.write_csv(f))?;
                        result[side] = json!({ "fit": fit.summary(), "floor": floor });
                    }
                    Err(e) => result[side] = json!({ "skipped": e.to_string() }),
                }
            }
            Ok((files, result, Some(c)))
        }
        Analysis::SmallGradient { eps } => {
            let t = small_gradient_measure(u, ctx.params, eps)?;
            ctx.csv("small_gradient.csv", &mut files, |f| t.write_csv(f))?;
            let spread = if t.min_ratio > 0.0 { Some(t.spread()) } else { None };
            let result = json!({ "max_ratio": t.max_ratio, "min_ratio": t.min_ratio, "spread": spread });
            Ok((files, result, None))
        }
        Analysis::Hessian { center, radii } => {
            let c = ctx.center(*center);
            let radii = match radii {
                Some(r) => r.clone(),
                None => dyadic_radii(grid, c)?,
            };
            let t = hessian_l2_estimate(u, ctx.params, c, &radii)?;
            ctx.csv("hessian.csv", &mut files, |f| t.write_csv(f))?;
            Ok((files, json!({ "max": t.max(), "radii": radii.len() }), Some(c)))
        }
        Analysis::BvProbe { center, radius } => {
            let c = ctx.center(*center);
            let r = radius.unwrap_or_else(|| 0.5 * grid.distance_to_boundary(c));
            let probe = bv_inequality_probe(u, ctx.params, c, r)?;
            ctx.csv("bv_probe.csv", &mut files, |f| probe.write_csv(f))?;
            Ok((files, json!(probe), Some(c)))
        }
        Analysis::Perimeter {} => {
            if grid.dim() != 2 {
                return Err(Error::EmptyPhase("perimeter needs a 2-D field".into()));
            }
            let est = perimeter_estimate(ctx.phases)?;
            ctx.csv("perimeter.csv", &mut files, |f| est.write_csv(f))?;
            let result = json!({
                "radius": est.radius,
                "dimension": est.dimension,
                "length": est.length,
                "box_proxy": est.box_proxy,
            });
            Ok((files, result, Some(est.center)))
        }
        Analysis::Blowup { center, r0, count } => {
            let c = ctx.center(*center);
            let r0 = r0.unwrap_or_else(|| {
                let reach = grid.distance_to_boundary(c);
                2f64.powf(reach.log2().floor())
            });
            let scales = dyadic_scales(r0, *count);
            let seq = blowup_sequence(u, c, &scales, ctx.params)?;
            seq.write_dir(ctx.dir.join("blowup"))?;
            files.extend((0..seq.profiles.len()).map(|k| format!("blowup/profile_{k:02}.field")));
            files.push("blowup/residuals.csv".into());
            let result = json!({
                "exponent": seq.exponent,
                "scales": seq.scales,
                "residuals": seq.residuals,
                "defect": homogeneity_defect(&seq),
            });
            Ok((files, result, Some(c)))
        }
    }
}
