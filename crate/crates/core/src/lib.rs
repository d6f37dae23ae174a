//! Numerical laboratory for two-phase quenching problems driven by the
//! p-Laplacian.
//!
//! Minimizes `J(u) = ∫ |Du|^p/p + λ₊ u₊^γ + λ₋ u₋^γ` on 1-D and 2-D uniform
//! grids with Dirichlet data, extracts the phases and free boundaries of the
//! result, and measures the growth, non-degeneracy, gradient-decay, measure,
//! and perimeter estimates satisfied by minimizers.

pub mod error;
pub mod field;
pub mod grid;
pub mod params;
pub mod sum;

pub mod blowup;
pub mod boundary;
pub mod energy;
pub mod fbanalysis;
pub mod ops;
pub mod oracles;
pub mod solver;

pub use energy::EnergyBreakdown;
pub use error::{Error, Result};
pub use field::{ScalarField, VectorField};
pub use grid::{Grid, Point};
pub use params::ProblemParams;
