use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{Grid, Point};
use crate::ops::node_gradient_norm;

/// Least-squares power law `value ≈ coefficient · radius^exponent`.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentFit {
    /// Strictly decreasing.
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub exponent: f64,
    pub coefficient: f64,
    /// Largest `|log value − log fit|` over the rows used.
    pub max_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitSummary {
    pub exponent: f64,
    pub coefficient: f64,
    pub max_residual: f64,
    pub rows: usize,
    pub rows_used: usize,
}

impl ExponentFit {
    /// Fits `(ln r, ln v)` by least squares, dropping rows with `v = 0`.
    pub fn from_samples(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(Error::Precondition("radii and values differ in length".into()));
        }
        if radii.windows(2).any(|w| !(w[1] < w[0])) || radii.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::Precondition("radii must be positive and strictly decreasing".into()));
        }
        if values.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Precondition("values must be nonnegative".into()));
        }
        let pts: Vec<(f64, f64)> = radii
            .iter()
            .zip(&values)
            .filter(|(_, &v)| v > 0.0)
            .map(|(&r, &v)| (r.ln(), v.ln()))
            .collect();
        if pts.len() < 2 {
            return Err(Error::UndefinedFit(format!(
                "{} positive values, need at least 2",
                pts.len()
            )));
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let exponent = sxy / sxx;
        let intercept = my - exponent * mx;
        let max_residual = pts
            .iter()
            .map(|p| (p.1 - intercept - exponent * p.0).abs())
            .fold(0.0, f64::max);
        Ok(Self {
            radii,
            values,
            exponent,
            coefficient: intercept.exp(),
            max_residual,
        })
    }

    /// `value / r^exponent` per radius.
    pub fn coefficients_at(&self, exponent: f64) -> Vec<f64> {
        self.radii
            .iter()
            .zip(&self.values)
            .map(|(r, v)| v / r.powf(exponent))
            .collect()
    }

    pub fn summary(&self) -> FitSummary {
        FitSummary {
            exponent: self.exponent,
            coefficient: self.coefficient,
            max_residual: self.max_residual,
            rows: self.radii.len(),
            rows_used: self.values.iter().filter(|&&v| v > 0.0).count(),
        }
    }

    /// Columns `radius,value`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["radius", "value"])?;
        for (r, v) in self.radii.iter().zip(&self.values) {
            wr.write_record([r.to_string(), v.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Radii `r₀ 2^{−k}` from the largest power of two strictly below the distance
/// from `center` to the grid boundary, down to twice the coarsest spacing.
pub fn dyadic_radii(grid: &Grid, center: Point) -> Result<Vec<f64>> {
    let reach = grid.distance_to_boundary(center);
    let floor = 2.0 * grid.max_spacing();
    if !(reach >= floor) {
        return Err(Error::InsufficientResolution(format!(
            "center is {reach:e} from the boundary, below 2h = {floor:e}"
        )));
    }
    let mut r = 2f64.powi(reach.log2().floor() as i32);
    if r >= reach * (1.0 - 1e-12) {
        r *= 0.5;
    }
    let mut radii = Vec::new();
    while r >= floor * (1.0 - 1e-12) {
        radii.push(r);
        r *= 0.5;
    }
    if radii.len() < 4 {
        return Err(Error::InsufficientResolution(format!(
            "{} dyadic radii available, need 4",
            radii.len()
        )));
    }
    Ok(radii)
}

fn ball_sup(field: &ScalarField, center: Point, r: f64, keep: impl Fn(f64) -> Option<f64>) -> f64 {
    field
        .grid()
        .nodes_within(center, r)
        .into_iter()
        .filter_map(|k| keep(field.at(k)))
        .fold(0.0, f64::max)
}

/// Fit of `sup_{B_r(center)} |u|` against `r`.
pub fn growth_fit(u: &ScalarField, center: Point) -> Result<ExponentFit> {
    let radii = dyadic_radii(u.grid(), center)?;
    let values = radii.iter().map(|&r| ball_sup(u, center, r, |x| Some(x.abs()))).collect();
    ExponentFit::from_samples(radii, values)
}

/// Fit of `sup_{B_r(center)} |Du|` against `r`, using central differences
/// at interior nodes.
pub fn gradient_decay_fit(u: &ScalarField, center: Point) -> Result<ExponentFit> {
    let g = u.grid();
    let radii = dyadic_radii(g, center)?;
    let du = node_gradient_norm(u);
    let values = radii
        .iter()
        .map(|&r| {
            g.nodes_within(center, r)
                .into_iter()
                .filter(|&k| !g.is_boundary(k))
                .map(|k| du.at(k))
                .fold(0.0, f64::max)
        })
        .collect();
    ExponentFit::from_samples(radii, values)
}

/// Fits of `sup_{B_r ∩ {u>0}} u` and `sup_{B_r ∩ {u<0}} (−u)`.
#[derive(Debug)]
pub struct NondegeneracyFit {
    /// Exponent used for the per-radius coefficients.
    pub exponent: f64,
    pub plus: Result<ExponentFit>,
    pub minus: Result<ExponentFit>,
}

impl NondegeneracyFit {
    /// Smallest `value / r^exponent` over the radii where the phase is present.
    pub fn floor(fit: &ExponentFit, exponent: f64) -> f64 {
        fit.coefficients_at(exponent)
            .into_iter()
            .filter(|&c| c > 0.0)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn plus_floor(&self) -> Option<f64> {
        self.plus.as_ref().ok().map(|f| Self::floor(f, self.exponent))
    }

    pub fn minus_floor(&self) -> Option<f64> {
        self.minus.as_ref().ok().map(|f| Self::floor(f, self.exponent))
    }
}

/// Phase-wise sup fits around `center`; `exponent` (normally `p/(p−γ)`)
/// sets the per-radius coefficients. A side whose phase misses every ball
/// reports [`Error::EmptyPhase`].
pub fn nondegeneracy_fit(u: &ScalarField, center: Point, exponent: f64) -> Result<NondegeneracyFit> {
    let radii = dyadic_radii(u.grid(), center)?;
    let side = |sign: f64, name: &str| -> Result<ExponentFit> {
        let values: Vec<f64> = radii
            .iter()
            .map(|&r| ball_sup(u, center, r, |x| (sign * x > 0.0).then_some(sign * x)))
            .collect();
        if values.iter().all(|&v| v == 0.0) {
            return Err(Error::EmptyPhase(format!("no {name} nodes within the largest ball")));
        }
        ExponentFit::from_samples(radii.clone(), values)
    };
    Ok(NondegeneracyFit {
        exponent,
        plus: side(1.0, "positive"),
        minus: side(-1.0, "negative"),
    })
}
