//! Named generators of Dirichlet data. Each produces a field on the whole
//! grid; the solver reads only its boundary values.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::oracles::exact_one_d;
use crate::params::ProblemParams;

fn half() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryData {
    /// The two-phase homogeneous profile in `x₀ − shift`, constant in `x₁`.
    Exact1dTrace {
        #[serde(default)]
        shift: f64,
    },
    /// `offset + slope · x`.
    Affine {
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        slope: Vec<f64>,
    },
    /// `quadratic · x₀|x₀| − cubic · (x₀³ − 3x₀x₁²)`. With `quadratic = λ/2`
    /// (`λ₁ = λ₂ = λ`), `p = 2` and `γ = 1` this solves the equation exactly.
    OddPolynomial {
        #[serde(default = "half")]
        quadratic: f64,
        #[serde(default)]
        cubic: f64,
    },
    /// One-phase dead core of radius `radius` around `center`, carrying the
    /// sign `sign`: `(λ/4)(ρ² − R²) − (λR²/2) ln(ρ/R)` for `ρ ≥ R` in 2-D,
    /// `(λ/2)(ρ − R)²` in 1-D, zero inside. Exact for `p = 2`, `γ = 1`.
    Radial {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "one")]
        sign: f64,
    },
    /// A field file on the same grid.
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

impl Default for BoundaryData {
    fn default() -> Self {
        BoundaryData::Affine { offset: 0.0, slope: Vec::new() }
    }
}

impl BoundaryData {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryData::Exact1dTrace { .. } => "exact1d-trace",
            BoundaryData::Affine { .. } => "affine",
            BoundaryData::OddPolynomial { .. } => "odd-polynomial",
            BoundaryData::Radial { .. } => "radial",
            BoundaryData::File { .. } => "file",
        }
    }

    pub fn sample(&self, grid: &Grid, params: &ProblemParams) -> Result<ScalarField> {
        match self {
            BoundaryData::Exact1dTrace { shift } => {
                let ex = exact_one_d(params)?;
                Ok(ex.sample(grid, *shift))
            }
            BoundaryData::Affine { offset, slope } => {
                if slope.len() > grid.dim() {
                    return Err(Error::InvalidParams(format!(
                        "affine slope has {} components for a {}-D grid",
                        slope.len(),
                        grid.dim()
                    )));
                }
                Ok(ScalarField::from_fn(grid.clone(), |x| {
                    offset + slope.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                }))
            }
            BoundaryData::OddPolynomial { quadratic, cubic } => Ok(ScalarField::from_fn(grid.clone(), |x| {
                quadratic * x[0] * x[0].abs() - cubic * (x[0].powi(3) - 3.0 * x[0] * x[1] * x[1])
            })),
            BoundaryData::Radial { radius, center, sign } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidParams("radial dead-core radius must be positive".into()));
                }
                let lambda = if *sign >= 0.0 { params.lambda_plus } else { params.lambda_minus };
                let r0 = *radius;
                let dim = grid.dim();
                Ok(ScalarField::from_fn(grid.clone(), |x| {
                    let rho = if dim == 1 {
                        (x[0] - center[0]).abs()
                    } else {
                        (x[0] - center[0]).hypot(x[1] - center[1])
                    };
                    if rho <= r0 {
                        return 0.0;
                    }
                    let v = if dim == 1 {
                        0.5 * lambda * (rho - r0).powi(2)
                    } else {
                        0.25 * lambda * (rho * rho - r0 * r0) - 0.5 * lambda * r0 * r0 * (rho / r0).ln()
                    };
                    sign.signum() * v
                }))
            }
            BoundaryData::File { path } => {
                let f = ScalarField::load(path)?;
                if f.grid() != grid {
                    return Err(Error::GridMismatch(format!(
                        "{} was written on a different grid",
                        path.display()
                    )));
                }
                Ok(f)
            }
        }
    }
}
