use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use super::fits::ExponentFit;
use super::phases::PhaseDecomposition;
use crate::error::{Error, Result};
use crate::grid::{distance, Point};

/// Subsamples per cell and axis for the tubular-neighbourhood areas.
const SUBSAMPLES: usize = 4;

#[derive(Clone, Debug, Serialize)]
pub struct PerimeterRow {
    pub scale: f64,
    pub boxes: usize,
    /// `boxes · scale`.
    pub box_length: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PerimeterEstimate {
    pub center: Point,
    pub radius: f64,
    /// Box-counting table, scales decreasing. Boxes are centered on `center`.
    pub rows: Vec<PerimeterRow>,
    /// Negative log-log slope of box counts; `None` without free boundary.
    pub dimension: Option<f64>,
    /// Minimum of `boxes · scale` over the three finest scales.
    pub box_proxy: f64,
    /// `|{x ∈ B : dist(x, Γ) < s}| / 2s` for `s = 4h, 8h, 16h`.
    pub tube_lengths: Vec<(f64, f64)>,
    /// Mean of `tube_lengths`; the length estimate.
    pub length: f64,
}

impl PerimeterEstimate {
    /// Columns `scale,boxes,box_length`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Box counts and length estimates of the interface `{u = ±τ}` inside the
/// ball of half the domain's smaller half-width around its center.
pub fn perimeter_estimate(pd: &PhaseDecomposition) -> Result<PerimeterEstimate> {
    let g = &pd.grid;
    if g.dim() != 2 {
        return Err(Error::Precondition("perimeter estimate needs a 2-D field".into()));
    }
    let center = g.center();
    let (lo, hi) = (g.lower(), g.upper());
    let radius = 0.25 * (hi[0] - lo[0]).min(hi[1] - lo[1]);
    let h = g.max_spacing();

    // coarser boxes see the ends of the curve more than its length
    let mut scales = Vec::new();
    let mut s = 2.0 * h;
    while s <= 0.125 * radius * (1.0 + 1e-12) {
        scales.push(s);
        s *= 2.0;
    }
    if scales.len() < 3 {
        return Err(Error::InsufficientResolution(format!(
            "{} box scales between 2h and an eighth of the half-ball radius, need 3",
            scales.len()
        )));
    }
    scales.reverse();

    let inside: Vec<Point> = pd
        .interface()
        .filter(|&x| distance(x, center) <= radius)
        .collect();
    let rows: Vec<PerimeterRow> = scales
        .iter()
        .map(|&s| {
            let boxes: BTreeSet<(i64, i64)> = inside
                .iter()
                .map(|x| {
                    (
                        ((x[0] - center[0]) / s + 0.5).floor() as i64,
                        ((x[1] - center[1]) / s + 0.5).floor() as i64,
                    )
                })
                .collect();
            PerimeterRow { scale: s, boxes: boxes.len(), box_length: boxes.len() as f64 * s }
        })
        .collect();
    let dimension = if inside.is_empty() {
        None
    } else {
        let fit = ExponentFit::from_samples(
            rows.iter().map(|r| r.scale).collect(),
            rows.iter().map(|r| r.boxes as f64).collect(),
        );
        fit.ok().map(|f| -f.exponent)
    };
    let box_proxy = rows[rows.len() - 3..]
        .iter()
        .map(|r| r.box_length)
        .fold(f64::INFINITY, f64::min);

    let tube_lengths: Vec<(f64, f64)> = [4.0, 8.0, 16.0]
        .iter()
        .map(|m| {
            let s = m * h;
            (s, tube_area(pd, center, radius, s) / (2.0 * s))
        })
        .collect();
    let length = tube_lengths.iter().map(|t| t.1).sum::<f64>() / tube_lengths.len() as f64;

    Ok(PerimeterEstimate {
        center,
        radius,
        rows,
        dimension,
        box_proxy,
        tube_lengths,
        length,
    })
}

/// Area of `{x ∈ B_radius(center) : dist(x, interface) < s}` by midpoint
/// subsampling of the cells.
fn tube_area(pd: &PhaseDecomposition, center: Point, radius: f64, s: f64) -> f64 {
    if pd.interface().next().is_none() {
        return 0.0;
    }
    let g = &pd.grid;
    let mut buckets: HashMap<(i64, i64), Vec<Point>> = HashMap::new();
    let key = |x: Point| ((x[0] / s).floor() as i64, (x[1] / s).floor() as i64);
    for x in pd.interface() {
        buckets.entry(key(x)).or_default().push(x);
    }
    let h = g.spacing();
    let [n0, n1] = g.shape2();
    let (d0, d1) = (h[0] / SUBSAMPLES as f64, h[1] / SUBSAMPLES as f64);
    let (m0, m1) = ((n0 - 1) * SUBSAMPLES, (n1 - 1) * SUBSAMPLES);
    let lo = g.lower();
    let hits: usize = (0..m0)
        .into_par_iter()
        .map(|i| {
            let x0 = lo[0] + (i as f64 + 0.5) * d0;
            let mut count = 0;
            for j in 0..m1 {
                let x = [x0, lo[1] + (j as f64 + 0.5) * d1];
                if distance(x, center) > radius {
                    continue;
                }
                let (bi, bj) = key(x);
                let near = (bi - 1..=bi + 1).any(|a| {
                    (bj - 1..=bj + 1).any(|b| {
                        buckets
                            .get(&(a, b))
                            .is_some_and(|pts| pts.iter().any(|&q| distance(q, x) < s))
                    })
                });
                if near {
                    count += 1;
                }
            }
            count
        })
        .sum();
    hits as f64 * d0 * d1
}
