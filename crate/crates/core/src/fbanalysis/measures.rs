use serde::Serialize;

use crate::energy::smoothed_potential;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Point;
use crate::ops::{cell_gradient_norm_sq, gradient, node_gradient_norm, node_hessian_norm};
use crate::params::ProblemParams;
use crate::sum::CompensatedSum;

/// The truncation `ψ_ε(t)`: `1` for `t ≥ ε^{1/(p−γ)}`, `−1` for
/// `t ≤ −ε^{1/(p−γ)}` and `|t|^{p−γ} sgn(t) / ε` between.
pub fn psi_eps(t: f64, eps: f64, p: f64, gamma: f64) -> f64 {
    let q = p - gamma;
    let cut = eps.powf(1.0 / q);
    if t >= cut {
        1.0
    } else if t <= -cut {
        -1.0
    } else {
        t.signum() * t.abs().powf(q) / eps
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SmallGradientRow {
    pub eps: f64,
    /// `ε^{1/(p−γ)}`.
    pub threshold: f64,
    pub measure: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SmallGradientTable {
    pub rows: Vec<SmallGradientRow>,
    pub max_ratio: f64,
    pub min_ratio: f64,
}

impl SmallGradientTable {
    /// `max_ratio / min_ratio` (infinite when some ratio vanishes).
    pub fn spread(&self) -> f64 {
        self.max_ratio / self.min_ratio
    }

    /// Columns `eps,threshold,measure,ratio`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `|{0 < |Du| < ε^{1/(p−γ)}}| / ε` for each `ε`, measuring cells by their
/// forward-difference gradient.
pub fn small_gradient_measure(
    u: &ScalarField,
    params: &ProblemParams,
    eps_sequence: &[f64],
) -> Result<SmallGradientTable> {
    if eps_sequence.len() < 2
        || eps_sequence.windows(2).any(|w| !(w[1] < w[0]))
        || !(eps_sequence[eps_sequence.len() - 1] > 0.0)
    {
        return Err(Error::Precondition("eps sequence must be positive and decreasing".into()));
    }
    let decades = (eps_sequence[0] / eps_sequence[eps_sequence.len() - 1]).log10();
    if decades < 3.0 - 1e-9 {
        return Err(Error::Precondition(format!(
            "eps sequence spans {decades:.2} decades, need 3"
        )));
    }
    let norms: Vec<f64> = cell_gradient_norm_sq(&gradient(u), 0.0)
        .values()
        .iter()
        .map(|n| n.sqrt())
        .collect();
    let vol = u.grid().cell_volume();
    let q = params.p - params.gamma;
    let rows: Vec<SmallGradientRow> = eps_sequence
        .iter()
        .map(|&eps| {
            let threshold = eps.powf(1.0 / q);
            let count = norms.iter().filter(|&&n| n > 0.0 && n < threshold).count();
            let measure = count as f64 * vol;
            SmallGradientRow { eps, threshold, measure, ratio: measure / eps }
        })
        .collect();
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(SmallGradientTable { rows, max_ratio, min_ratio })
}

#[derive(Clone, Debug, Serialize)]
pub struct HessianRow {
    pub radius: f64,
    pub nodes: usize,
    pub s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HessianTable {
    pub center: Point,
    pub rows: Vec<HessianRow>,
}

impl HessianTable {
    pub fn max(&self) -> f64 {
        self.rows.iter().map(|r| r.s).fold(0.0, f64::max)
    }

    /// Columns `radius,nodes,s`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `S(r) = avg_{B_r(center)} (|Du|^{p−2} |D²u|)²` over interior nodes, with
/// central differences for both derivatives. Where `Du = 0` and `p < 2` the
/// weight is taken as zero.
pub fn hessian_l2_estimate(
    u: &ScalarField,
    params: &ProblemParams,
    center: Point,
    radii: &[f64],
) -> Result<HessianTable> {
    let g = u.grid();
    let du = node_gradient_norm(u);
    let hess = node_hessian_norm(u);
    let floor = 2.0 * g.max_spacing();
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r >= floor * (1.0 - 1e-12)) {
            return Err(Error::InsufficientResolution(format!("radius {r:e} below 2h")));
        }
        let mut acc = CompensatedSum::default();
        let mut nodes = 0;
        for k in g.nodes_within(center, r) {
            let Some(d2) = hess[k] else { continue };
            let grad = du.at(k);
            let w = if grad == 0.0 && params.p < 2.0 {
                0.0
            } else {
                grad.powf(params.p - 2.0)
            };
            acc.add((w * d2).powi(2));
            nodes += 1;
        }
        if nodes == 0 {
            return Err(Error::InsufficientResolution(format!("no interior nodes within {r:e}")));
        }
        rows.push(HessianRow { radius: r, nodes, s: acc.value() / nodes as f64 });
    }
    Ok(HessianTable { center, rows })
}

#[derive(Clone, Debug, Serialize)]
pub struct BvProbe {
    pub center: Point,
    pub radius: f64,
    /// `∫ |D F(u)| φ`.
    pub lhs: f64,
    /// `∫ |Dφ|`.
    pub bump_variation: f64,
    pub ratio: f64,
}

impl BvProbe {
    /// Columns `radius,lhs,bump_variation,ratio`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["radius", "lhs", "bump_variation", "ratio"])?;
        wr.write_record([
            self.radius.to_string(),
            self.lhs.to_string(),
            self.bump_variation.to_string(),
            self.ratio.to_string(),
        ])?;
        wr.flush()?;
        Ok(())
    }
}

/// `exp(1 − 1/(1 − |x−c|²/R²))` inside the ball, zero outside.
fn bump(x: Point, center: Point, radius: f64) -> f64 {
    let d2 = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)) / (radius * radius);
    if d2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - d2)).exp()
    }
}

/// Cell-wise `|D·|` of a nodal field, `φ` at cell centers, midpoint rule.
fn weighted_variation(f: &ScalarField, weight: &[f64]) -> f64 {
    let vol = f.grid().cell_volume();
    cell_gradient_norm_sq(&gradient(f), 0.0)
        .values()
        .iter()
        .zip(weight)
        .map(|(n, w)| n.sqrt() * w * vol)
        .collect::<CompensatedSum>()
        .value()
}

/// Compares `∫|D F(u)| φ` with `∫|Dφ|` for the smooth bump `φ` of the given
/// radius; `F` is the smoothed potential of `params`.
pub fn bv_inequality_probe(
    u: &ScalarField,
    params: &ProblemParams,
    center: Point,
    radius: f64,
) -> Result<BvProbe> {
    let g = u.grid();
    if radius > g.distance_to_boundary(center) * (1.0 + 1e-12) {
        return Err(Error::Precondition("bump support leaves the domain".into()));
    }
    if radius < 4.0 * g.max_spacing() {
        return Err(Error::InsufficientResolution(format!("bump radius {radius:e} below 4h")));
    }
    let cg = g.cell_grid();
    let phi_cells: Vec<f64> = (0..cg.len()).map(|c| bump(cg.point(c), center, radius)).collect();
    let fu = u.map(|s| smoothed_potential(s, params));
    let lhs = weighted_variation(&fu, &phi_cells);
    let phi = ScalarField::from_fn(g.clone(), |x| bump(x, center, radius));
    let bump_variation = weighted_variation(&phi, &vec![1.0; cg.len()]);
    Ok(BvProbe { center, radius, lhs, bump_variation, ratio: lhs / bump_variation })
}
