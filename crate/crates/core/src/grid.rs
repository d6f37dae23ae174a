use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the plane; one-dimensional grids use only the first coordinate
/// and keep the second at zero.
pub type Point = [f64; 2];

pub fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Uniform tensor grid in one or two dimensions.
///
/// Nodes are stored row-major: the flat index of `(i, j)` is `i * n1 + j`,
/// so axis 0 varies slowest. A one-dimensional grid is stored with `n1 = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    shape: [usize; 2],
    spacing: [f64; 2],
    origin: [f64; 2],
}

impl Grid {
    pub fn new(shape: &[usize], spacing: &[f64], origin: &[f64]) -> Result<Self> {
        let dim = shape.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2 (got {dim})"
            )));
        }
        if spacing.len() != dim || origin.len() != dim {
            return Err(Error::InvalidGrid(
                "shape, spacing and origin must have the same length".into(),
            ));
        }
        if let Some(n) = shape.iter().find(|&&n| n < 3) {
            return Err(Error::InvalidGrid(format!(
                "every axis needs at least 3 nodes (got {n})"
            )));
        }
        if spacing.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::InvalidGrid("spacings must be positive".into()));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self::raw(shape, spacing, origin))
    }

    fn raw(shape: &[usize], spacing: &[f64], origin: &[f64]) -> Self {
        let dim = shape.len();
        let mut g = Grid {
            dim,
            shape: [1, 1],
            spacing: [1.0, 1.0],
            origin: [0.0, 0.0],
        };
        g.shape[..dim].copy_from_slice(&shape[..dim]);
        g.spacing[..dim].copy_from_slice(&spacing[..dim]);
        g.origin[..dim].copy_from_slice(&origin[..dim]);
        g
    }

    /// `n` nodes covering `[lo, hi]`.
    pub fn interval(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(&[n], &[(hi - lo) / (n as f64 - 1.0)], &[lo])
    }

    pub fn rectangle(n: [usize; 2], lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        let h = [
            (hi[0] - lo[0]) / (n[0] as f64 - 1.0),
            (hi[1] - lo[1]) / (n[1] as f64 - 1.0),
        ];
        Self::new(&n, &h, &lo)
    }

    /// `n × n` nodes covering `[lo, hi]²`.
    pub fn square(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::rectangle([n, n], [lo, lo], [hi, hi])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    /// Node counts padded to two axes (`n1 = 1` in 1-D).
    pub fn shape2(&self) -> [usize; 2] {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing().iter().copied().fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Volume of one grid cell, `∏ h_a`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.shape[1] + j
    }

    #[inline]
    pub fn multi_index(&self, k: usize) -> [usize; 2] {
        [k / self.shape[1], k % self.shape[1]]
    }

    /// `origin + i · spacing` along `axis`.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.spacing[axis]
    }

    pub fn point(&self, k: usize) -> Point {
        let [i, j] = self.multi_index(k);
        if self.dim == 1 {
            [self.coord(0, i), 0.0]
        } else {
            [self.coord(0, i), self.coord(1, j)]
        }
    }

    pub fn lower(&self) -> Point {
        let mut p = [0.0; 2];
        p[..self.dim].copy_from_slice(self.origin());
        p
    }

    pub fn upper(&self) -> Point {
        let mut p = [0.0; 2];
        for (a, v) in p.iter_mut().enumerate().take(self.dim) {
            *v = self.coord(a, self.shape[a] - 1);
        }
        p
    }

    pub fn center(&self) -> Point {
        let (lo, hi) = (self.lower(), self.upper());
        [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])]
    }

    pub fn contains(&self, x: Point) -> bool {
        let (lo, hi) = (self.lower(), self.upper());
        (0..self.dim).all(|a| x[a] >= lo[a] - 1e-12 * self.spacing[a] && x[a] <= hi[a] + 1e-12 * self.spacing[a])
    }

    /// Distance from `x` to the nearest face of the bounding box.
    pub fn distance_to_boundary(&self, x: Point) -> f64 {
        let (lo, hi) = (self.lower(), self.upper());
        (0..self.dim)
            .map(|a| (x[a] - lo[a]).min(hi[a] - x[a]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        let [i, j] = self.multi_index(k);
        let n = self.shape;
        i == 0 || i + 1 == n[0] || (self.dim == 2 && (j == 0 || j + 1 == n[1]))
    }

    /// Node index nearest to `x` (clamped to the grid).
    pub fn nearest_node(&self, x: Point) -> usize {
        let mut ij = [0usize; 2];
        for a in 0..self.dim {
            let t = ((x[a] - self.origin[a]) / self.spacing[a]).round();
            ij[a] = t.clamp(0.0, (self.shape[a] - 1) as f64) as usize;
        }
        self.index(ij[0], ij[1])
    }

    /// Nodes `k` with `|x_k − center| ≤ r`, in increasing index order. Nodes
    /// within `1e-6 h` of the sphere count as inside, so an interpolated
    /// center a hair off a node does not lose a shell.
    pub fn nodes_within(&self, center: Point, r: f64) -> Vec<usize> {
        let slack = 1e-6 * self.min_spacing() + r * 1e-12;
        let mut lo = [0usize; 2];
        let mut hi = [0usize; 2];
        for a in 0..2 {
            if a >= self.dim {
                continue;
            }
            let h = self.spacing[a];
            let first = ((center[a] - r - self.origin[a]) / h).floor().max(0.0);
            let last = ((center[a] + r - self.origin[a]) / h)
                .ceil()
                .min((self.shape[a] - 1) as f64);
            if last < first {
                return Vec::new();
            }
            lo[a] = first as usize;
            hi[a] = last as usize;
        }
        let mut out = Vec::new();
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                let k = self.index(i, j);
                if distance(self.point(k), center) <= r + slack {
                    out.push(k);
                }
            }
        }
        out
    }

    /// Grid of cell centers: one node per cell, shifted by half a spacing.
    pub fn cell_grid(&self) -> Grid {
        let shape: Vec<usize> = self.shape().iter().map(|n| n - 1).collect();
        let origin: Vec<f64> = (0..self.dim)
            .map(|a| self.origin[a] + 0.5 * self.spacing[a])
            .collect();
        Self::raw(&shape, self.spacing(), &origin)
    }

    /// Grid with one fewer node along `axis`, offset to edge midpoints.
    pub(crate) fn edge_grid(&self, axis: usize) -> Grid {
        let mut shape = self.shape().to_vec();
        shape[axis] -= 1;
        let mut origin = self.origin().to_vec();
        origin[axis] += 0.5 * self.spacing[axis];
        Self::raw(&shape, self.spacing(), &origin)
    }

    /// Cell containing `x` and the local coordinates in `[0, 1]` along each axis.
    pub fn locate(&self, x: Point) -> Option<([usize; 2], [f64; 2])> {
        if !self.contains(x) {
            return None;
        }
        let mut cell = [0usize; 2];
        let mut frac = [0.0; 2];
        for a in 0..self.dim {
            let t = (x[a] - self.origin[a]) / self.spacing[a];
            let c = (t.floor().max(0.0) as usize).min(self.shape[a] - 2);
            cell[a] = c;
            frac[a] = (t - c as f64).clamp(0.0, 1.0);
        }
        Some((cell, frac))
    }
}
