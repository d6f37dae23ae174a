use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, Point};

/// Nodal values on a [`Grid`], row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite value at node {k}")));
        }
        Ok(Self { grid, values })
    }

    /// Unchecked constructor for values produced by finite arithmetic.
    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self::from_parts(grid, vec![0.0; n])
    }

    /// Samples `f` at every node. Panics if `f` returns a non-finite value.
    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|k| f(grid.point(k))).collect();
        assert!(
            values.iter().all(|v| v.is_finite()),
            "sampled function produced a non-finite value"
        );
        Self::from_parts(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// `self + a·other` on the same grid.
    pub fn add_scaled(&self, a: f64, other: &ScalarField) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + a * y)
            .collect();
        Ok(Self::from_parts(self.grid.clone(), values))
    }

    pub fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn at(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Multilinear interpolation at `x`; `None` outside the grid.
    pub fn interpolate(&self, x: Point) -> Option<f64> {
        let (cell, t) = self.grid.locate(x)?;
        let g = &self.grid;
        Some(if g.dim() == 1 {
            let a = self.values[cell[0]];
            let b = self.values[cell[0] + 1];
            lerp(a, b, t[0])
        } else {
            let v00 = self.values[g.index(cell[0], cell[1])];
            let v01 = self.values[g.index(cell[0], cell[1] + 1)];
            let v10 = self.values[g.index(cell[0] + 1, cell[1])];
            let v11 = self.values[g.index(cell[0] + 1, cell[1] + 1)];
            lerp(lerp(v00, v01, t[1]), lerp(v10, v11, t[1]), t[0])
        })
    }

    /// Writes the text field format: four header lines followed by one value
    /// per line with 17 significant digits.
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        let g = &self.grid;
        writeln!(w, "dim {}", g.dim())?;
        writeln!(w, "shape {}", join(g.shape().iter().map(|n| n.to_string())))?;
        writeln!(w, "spacing {}", join(g.spacing().iter().map(|v| fmt_exact(*v))))?;
        writeln!(w, "origin {}", join(g.origin().iter().map(|v| fmt_exact(*v))))?;
        let mut line = String::with_capacity(32);
        for v in &self.values {
            line.clear();
            let _ = write!(line, "{}", fmt_exact(*v));
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let mut header = |key: &str| -> Result<Vec<String>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Format(format!("missing `{key}` header")))??;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(Error::Format(format!("expected `{key}` header, got `{line}`")));
            }
            Ok(parts.map(str::to_owned).collect())
        };
        let dim: usize = parse_one(&header("dim")?, "dim")?;
        let shape: Vec<usize> = parse_all(&header("shape")?, "shape")?;
        let spacing: Vec<f64> = parse_all(&header("spacing")?, "spacing")?;
        let origin: Vec<f64> = parse_all(&header("origin")?, "origin")?;
        if shape.len() != dim {
            return Err(Error::Format(format!("dim {dim} but shape has {} entries", shape.len())));
        }
        let grid = Grid::new(&shape, &spacing, &origin)?;
        let mut values = Vec::with_capacity(grid.len());
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            values.push(
                t.parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad value `{t}`: {e}")))?,
            );
        }
        ScalarField::new(grid, values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

/// Staggered gradient storage: component `a` lives on the midpoints of the
/// edges along axis `a` and has one fewer node along that axis.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub(crate) fn from_parts(grid: Grid, components: Vec<Vec<f64>>) -> Self {
        Self { grid, components }
    }

    /// The node grid the edges belong to.
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    /// Grid of edge midpoints carrying component `axis`.
    pub fn component_grid(&self, axis: usize) -> Grid {
        self.grid.edge_grid(axis)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }
}

#[inline]
pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 {
        a
    } else if t == 1.0 {
        b
    } else {
        a + t * (b - a)
    }
}

fn fmt_exact(v: f64) -> String {
    format!("{v:.16e}")
}

fn join(it: impl Iterator<Item = String>) -> String {
    it.collect::<Vec<_>>().join(" ")
}

fn parse_all<T: std::str::FromStr>(parts: &[String], key: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    parts
        .iter()
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| Error::Format(format!("bad `{key}` entry `{s}`: {e}")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(parts: &[String], key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let mut v = parse_all::<T>(parts, key)?;
    if v.len() != 1 {
        return Err(Error::Format(format!("`{key}` takes exactly one value")));
    }
    Ok(v.remove(0))
}
