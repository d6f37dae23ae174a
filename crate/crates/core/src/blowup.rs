//! Rescalings `v_r(x) = u(c + r x) / r^η` with `η = p/(p−γ)` and their
//! homogeneity residuals.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{Grid, Point};
use crate::params::ProblemParams;

/// Nodes per axis of the reference grid on `[-1, 1]^n`.
pub const REFERENCE_NODES: usize = 129;

pub fn reference_grid(dim: usize) -> Grid {
    match dim {
        1 => Grid::interval(REFERENCE_NODES, -1.0, 1.0),
        _ => Grid::square(REFERENCE_NODES, -1.0, 1.0),
    }
    .expect("reference grid is valid")
}

/// Samples `u(center + r x) / r^η` on the reference grid by multilinear
/// interpolation. The box `center ± r` must lie in the grid and `r ≥ 4h`.
pub fn rescale(u: &ScalarField, center: Point, r: f64, params: &ProblemParams) -> Result<ScalarField> {
    let g = u.grid();
    let h = g.max_spacing();
    if !(r >= 4.0 * h * (1.0 - 1e-12)) {
        return Err(Error::InsufficientResolution(format!("scale {r:e} below 4h = {:e}", 4.0 * h)));
    }
    let (lo, hi) = (g.lower(), g.upper());
    for a in 0..g.dim() {
        let slack = 1e-12 * (hi[a] - lo[a]);
        if center[a] - r < lo[a] - slack || center[a] + r > hi[a] + slack {
            return Err(Error::InsufficientResolution(format!(
                "box of half-width {r:e} around {center:?} leaves the grid"
            )));
        }
    }
    let scale = r.powf(params.growth_exponent());
    let reference = reference_grid(g.dim());
    let values = (0..reference.len())
        .map(|k| {
            let xi = reference.point(k);
            let mut x = [0.0; 2];
            for a in 0..g.dim() {
                x[a] = (center[a] + r * xi[a]).clamp(lo[a], hi[a]);
            }
            u.interpolate(x).expect("clamped point lies in the grid") / scale
        })
        .collect();
    ScalarField::new(reference, values)
}

#[derive(Clone, Debug)]
pub struct BlowupSequence {
    pub center: Point,
    pub exponent: f64,
    /// Strictly decreasing.
    pub scales: Vec<f64>,
    pub profiles: Vec<ScalarField>,
    /// `residuals[k] = max |profiles[k] − profiles[k+1]|`.
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
struct ResidualRow {
    scale: f64,
    next_scale: f64,
    residual: f64,
}

impl BlowupSequence {
    /// Columns `scale,next_scale,residual`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for (k, &residual) in self.residuals.iter().enumerate() {
            wr.serialize(ResidualRow { scale: self.scales[k], next_scale: self.scales[k + 1], residual })?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Writes `profile_KK.field` per scale and `residuals.csv` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for (k, prof) in self.profiles.iter().enumerate() {
            prof.save(dir.join(format!("profile_{k:02}.field")))?;
        }
        self.write_csv(std::fs::File::create(dir.join("residuals.csv"))?)
    }

    /// Whether residuals decrease strictly along the first `count` entries.
    pub fn decreasing_until(&self, count: usize) -> bool {
        self.residuals[..count.min(self.residuals.len())]
            .windows(2)
            .all(|w| w[1] < w[0])
    }
}

/// Rescalings of `u` around `center` at each scale (at least two, strictly
/// decreasing), computed in parallel.
pub fn blowup_sequence(
    u: &ScalarField,
    center: Point,
    scales: &[f64],
    params: &ProblemParams,
) -> Result<BlowupSequence> {
    if scales.len() < 2 || scales.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Precondition("need at least two strictly decreasing scales".into()));
    }
    let profiles: Vec<ScalarField> = scales
        .par_iter()
        .map(|&r| rescale(u, center, r, params))
        .collect::<Result<_>>()?;
    let residuals = profiles
        .windows(2)
        .map(|w| {
            w[0].values()
                .iter()
                .zip(w[1].values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(BlowupSequence {
        center,
        exponent: params.growth_exponent(),
        scales: scales.to_vec(),
        profiles,
        residuals,
    })
}

/// Largest consecutive residual; zero iff the sampled profiles coincide.
pub fn homogeneity_defect(seq: &BlowupSequence) -> f64 {
    seq.residuals.iter().copied().fold(0.0, f64::max)
}

/// `r₀ 2^{−k}` for `k = 0..count`.
pub fn dyadic_scales(r0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| r0 * 0.5f64.powi(k as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::exact_one_d;

    fn unit() -> ProblemParams {
        ProblemParams::new(2.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn exact_profile_is_a_fixed_point() {
        let params = ProblemParams::new(2.0, 1.0, 1.0, 2.0).unwrap();
        let ex = exact_one_d(&params).unwrap();
        let u = ex.sample(&Grid::interval(1025, -1.0, 1.0).unwrap(), 0.0);
        let seq = blowup_sequence(&u, [0.0, 0.0], &dyadic_scales(1.0, 4), &params).unwrap();
        assert!(homogeneity_defect(&seq) <= 1e-12);
        let reference = reference_grid(1);
        for k in 0..reference.len() {
            let t = reference.point(k)[0];
            assert!((seq.profiles[2].at(k) - ex.evaluate_at(t)).abs() <= 1e-13);
        }
    }

    #[test]
    fn covariance_under_scaling() {
        // w(x) = r^η u(x/r) rescaled at r gives back u on the reference grid
        let g = Grid::square(257, -1.0, 1.0).unwrap();
        let r = 0.5;
        let w = ScalarField::from_fn(g, |x| {
            let y = [x[0] / r, x[1] / r];
            r * r * (y[0] * y[0].abs() / 2.0 - 0.2 * y[1] * y[0])
        });
        let v = rescale(&w, [0.0, 0.0], r, &unit()).unwrap();
        let reference = reference_grid(2);
        for k in 0..reference.len() {
            let x = reference.point(k);
            let exact = x[0] * x[0].abs() / 2.0 - 0.2 * x[1] * x[0];
            assert!((v.at(k) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn negation_commutes_exactly() {
        let g = Grid::square(65, -1.0, 1.0).unwrap();
        let u = ScalarField::from_fn(g, |x| (3.0 * x[0]).sin() * x[1] + x[0].powi(3));
        let a = rescale(&u.scaled(-1.0), [0.1, -0.2], 0.3, &unit()).unwrap();
        let b = rescale(&u, [0.1, -0.2], 0.3, &unit().swapped_phases()).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_eq!(x.to_bits(), (-y).to_bits());
        }
    }

    #[test]
    fn perturbed_power_defect_shrinks_like_sqrt_r() {
        let g = Grid::interval(4097, -1.0, 1.0).unwrap();
        let u = ScalarField::from_fn(g, |x| x[0].abs().powi(2) + x[0].abs().powf(2.5));
        let seq = blowup_sequence(&u, [0.0, 0.0], &dyadic_scales(1.0, 5), &unit()).unwrap();
        assert!(homogeneity_defect(&seq) > 0.0);
        for w in seq.residuals.windows(2) {
            assert!((w[1] / w[0] - 0.5f64.sqrt()).abs() < 1e-6, "{w:?}");
        }
    }

    #[test]
    fn constant_field_defect_grows() {
        let u = ScalarField::from_fn(Grid::interval(1025, -1.0, 1.0).unwrap(), |_| 1.0);
        let seq = blowup_sequence(&u, [0.0, 0.0], &dyadic_scales(0.5, 4), &unit()).unwrap();
        for w in seq.residuals.windows(2) {
            assert!((w[1] / w[0] - 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn resolution_and_domain_checks() {
        let u = ScalarField::zeros(Grid::interval(33, -1.0, 1.0).unwrap());
        assert!(matches!(rescale(&u, [0.0, 0.0], 0.1, &unit()), Err(Error::InsufficientResolution(_))));
        assert!(matches!(rescale(&u, [0.5, 0.0], 0.6, &unit()), Err(Error::InsufficientResolution(_))));
        assert!(blowup_sequence(&u, [0.0, 0.0], &[0.5], &unit()).is_err());
    }

    #[test]
    fn writes_directory() {
        let u = ScalarField::from_fn(Grid::interval(257, -1.0, 1.0).unwrap(), |x| x[0] * x[0]);
        let seq = blowup_sequence(&u, [0.0, 0.0], &dyadic_scales(1.0, 3), &unit()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        seq.write_dir(dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("residuals.csv")).unwrap();
        assert_eq!(csv.lines().count(), 3);
        let back = ScalarField::load(dir.path().join("profile_01.field")).unwrap();
        assert_eq!(back, seq.profiles[1]);
    }
}
