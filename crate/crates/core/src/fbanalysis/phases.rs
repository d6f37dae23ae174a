use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{distance, Grid, Point};
use crate::ops::node_gradient_norm;
use crate::oracles::profile_coefficient;
use crate::params::ProblemParams;

/// Nodes split by sign at threshold `τ`, with the cells on the phase
/// boundaries and the points where edges cross `±τ`.
#[derive(Clone, Debug)]
pub struct PhaseDecomposition {
    pub grid: Grid,
    pub tau: f64,
    pub sigma: f64,
    /// `{u > τ}`.
    pub omega_plus: Vec<usize>,
    /// `{u < −τ}`.
    pub omega_minus: Vec<usize>,
    /// `{|u| ≤ τ}`.
    pub zero_set: Vec<usize>,
    /// Cells (indices into `grid.cell_grid()`) with nodes on both sides of `τ`.
    pub gamma_plus_cells: Vec<usize>,
    pub gamma_minus_cells: Vec<usize>,
    /// Nodes of the cells in `gamma_plus_cells`.
    pub gamma_plus: Vec<usize>,
    pub gamma_minus: Vec<usize>,
    /// Nodes of `Γ⁺ ∩ Γ⁻` or of the zero set touching a phase-boundary cell,
    /// where the nodal gradient is at most `σ`.
    pub gamma_degenerate: Vec<usize>,
    /// Linear-interpolation crossings of `u = τ` along grid edges.
    pub interface_plus: Vec<Point>,
    /// Crossings of `u = −τ`.
    pub interface_minus: Vec<Point>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseSummary {
    pub tau: f64,
    pub sigma: f64,
    pub omega_plus: usize,
    pub omega_minus: usize,
    pub zero_set: usize,
    pub gamma_plus: usize,
    pub gamma_minus: usize,
    pub gamma_degenerate: usize,
    pub interface_points: usize,
}

/// `τ = 10·C·h^η` and `σ = 10·C·η·h^{η−1}` with `C` the larger profile
/// coefficient: the values the homogeneous profile takes one cell away from
/// its free boundary, times ten.
pub fn default_thresholds(grid: &Grid, params: &ProblemParams) -> (f64, f64) {
    let eta = params.growth_exponent();
    let c = profile_coefficient(params.lambda_plus, params.p, params.gamma)
        .max(profile_coefficient(params.lambda_minus, params.p, params.gamma));
    let h = grid.max_spacing();
    (10.0 * c * h.powf(eta), 10.0 * c * eta * h.powf(eta - 1.0))
}

/// Node indices of each cell of `g`.
pub(crate) fn cell_nodes(g: &Grid, cell: usize) -> Vec<usize> {
    let cg = g.cell_grid();
    let [i, j] = cg.multi_index(cell);
    if g.dim() == 1 {
        vec![g.index(i, 0), g.index(i + 1, 0)]
    } else {
        vec![g.index(i, j), g.index(i + 1, j), g.index(i, j + 1), g.index(i + 1, j + 1)]
    }
}

pub fn decompose(u: &ScalarField, tau: f64, sigma: f64) -> Result<PhaseDecomposition> {
    if !(tau > 0.0 && sigma > 0.0) {
        return Err(Error::InvalidParams("tau and sigma must be positive".into()));
    }
    let g = u.grid();
    let v = u.values();
    let mut omega_plus = Vec::new();
    let mut omega_minus = Vec::new();
    let mut zero_set = Vec::new();
    for (k, &x) in v.iter().enumerate() {
        if x > tau {
            omega_plus.push(k);
        } else if x < -tau {
            omega_minus.push(k);
        } else {
            zero_set.push(k);
        }
    }

    let ncells = g.cell_grid().len();
    let mut gamma_plus_cells = Vec::new();
    let mut gamma_minus_cells = Vec::new();
    let mut gp = BTreeSet::new();
    let mut gm = BTreeSet::new();
    for c in 0..ncells {
        let nodes = cell_nodes(g, c);
        let above = nodes.iter().filter(|&&k| v[k] > tau).count();
        if above > 0 && above < nodes.len() {
            gamma_plus_cells.push(c);
            gp.extend(nodes.iter().copied());
        }
        let below = nodes.iter().filter(|&&k| v[k] < -tau).count();
        if below > 0 && below < nodes.len() {
            gamma_minus_cells.push(c);
            gm.extend(nodes.iter().copied());
        }
    }

    let grad = node_gradient_norm(u);
    let gamma_degenerate = gp
        .union(&gm)
        .copied()
        .filter(|&k| {
            let both = gp.contains(&k) && gm.contains(&k);
            (both || v[k].abs() <= tau) && grad.at(k) <= sigma
        })
        .collect();

    let mut interface_plus = Vec::new();
    let mut interface_minus = Vec::new();
    let [n0, n1] = g.shape2();
    let mut edge = |a: usize, b: usize| {
        for level in [tau, -tau] {
            let (ua, ub) = (v[a] - level, v[b] - level);
            let crosses = if level > 0.0 {
                (ua > 0.0) != (ub > 0.0)
            } else {
                (ua < 0.0) != (ub < 0.0)
            };
            if crosses {
                let t = ua / (ua - ub);
                let (pa, pb) = (g.point(a), g.point(b));
                let x = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
                if level > 0.0 {
                    interface_plus.push(x);
                } else {
                    interface_minus.push(x);
                }
            }
        }
    };
    for i in 0..n0 {
        for j in 0..n1 {
            let k = i * n1 + j;
            if i + 1 < n0 {
                edge(k, k + n1);
            }
            if g.dim() == 2 && j + 1 < n1 {
                edge(k, k + 1);
            }
        }
    }

    Ok(PhaseDecomposition {
        grid: g.clone(),
        tau,
        sigma,
        omega_plus,
        omega_minus,
        zero_set,
        gamma_plus_cells,
        gamma_minus_cells,
        gamma_plus: gp.into_iter().collect(),
        gamma_minus: gm.into_iter().collect(),
        gamma_degenerate,
        interface_plus,
        interface_minus,
    })
}

impl PhaseDecomposition {
    pub fn summary(&self) -> PhaseSummary {
        PhaseSummary {
            tau: self.tau,
            sigma: self.sigma,
            omega_plus: self.omega_plus.len(),
            omega_minus: self.omega_minus.len(),
            zero_set: self.zero_set.len(),
            gamma_plus: self.gamma_plus.len(),
            gamma_minus: self.gamma_minus.len(),
            gamma_degenerate: self.gamma_degenerate.len(),
            interface_points: self.interface_plus.len() + self.interface_minus.len(),
        }
    }

    /// All crossings of `u = ±τ`.
    pub fn interface(&self) -> impl Iterator<Item = Point> + '_ {
        self.interface_plus.iter().chain(&self.interface_minus).copied()
    }

    /// A point of the two-phase free boundary near `x`: the midpoint between
    /// the `u = τ` crossing nearest to `x` and the `u = −τ` crossing nearest
    /// to that one. With a single phase present, the nearest degenerate node.
    pub fn degenerate_point(&self, x: Point) -> Option<Point> {
        let nearest_pt = |set: &[Point], y: Point| {
            set.iter()
                .copied()
                .min_by(|a, b| distance(*a, y).total_cmp(&distance(*b, y)))
        };
        match (nearest_pt(&self.interface_plus, x), self.interface_minus.is_empty()) {
            (Some(a), false) => {
                let b = nearest_pt(&self.interface_minus, a)?;
                Some([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])])
            }
            _ => self.nearest_degenerate(x).map(|k| self.grid.point(k)),
        }
    }

    /// The degenerate node closest to `x` (lowest index on ties).
    pub fn nearest_degenerate(&self, x: Point) -> Option<usize> {
        nearest(&self.grid, &self.gamma_degenerate, x)
    }

    pub fn nearest_gamma_plus(&self, x: Point) -> Option<usize> {
        nearest(&self.grid, &self.gamma_plus, x)
    }

    pub fn nearest_gamma_minus(&self, x: Point) -> Option<usize> {
        nearest(&self.grid, &self.gamma_minus, x)
    }

    /// One row per node: `index,x0,x1,phase,gamma_plus,gamma_minus,degenerate`
    /// where `phase` is `1`, `-1` or `0`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let n = self.grid.len();
        let mut phase = vec![0i8; n];
        for &k in &self.omega_plus {
            phase[k] = 1;
        }
        for &k in &self.omega_minus {
            phase[k] = -1;
        }
        let mark = |set: &[usize]| {
            let mut m = vec![false; n];
            for &k in set {
                m[k] = true;
            }
            m
        };
        let (gp, gm, gd) = (mark(&self.gamma_plus), mark(&self.gamma_minus), mark(&self.gamma_degenerate));
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["index", "x0", "x1", "phase", "gamma_plus", "gamma_minus", "degenerate"])?;
        for k in 0..n {
            let x = self.grid.point(k);
            wr.write_record([
                k.to_string(),
                x[0].to_string(),
                x[1].to_string(),
                phase[k].to_string(),
                u8::from(gp[k]).to_string(),
                u8::from(gm[k]).to_string(),
                u8::from(gd[k]).to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn nearest(g: &Grid, set: &[usize], x: Point) -> Option<usize> {
    set.iter()
        .copied()
        .min_by(|&a, &b| {
            let (da, db) = (distance(g.point(a), x), distance(g.point(b), x));
            da.total_cmp(&db).then(a.cmp(&b))
        })
}
