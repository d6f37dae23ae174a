//! Free-boundary measurements on discrete fields.
//!
//! [`decompose`] splits the nodes into phases with a threshold `τ`; the fits
//! measure growth, gradient decay and non-degeneracy around a point over
//! dyadic radii; the remaining operations tabulate the small-gradient set,
//! a weighted Hessian average, a BV ratio and a perimeter estimate.

mod fits;
mod measures;
mod perimeter;
mod phases;

pub use fits::{
    dyadic_radii, gradient_decay_fit, growth_fit, nondegeneracy_fit, ExponentFit, FitSummary,
    NondegeneracyFit,
};
pub use measures::{
    bv_inequality_probe, hessian_l2_estimate, psi_eps, small_gradient_measure, BvProbe,
    HessianRow, HessianTable, SmallGradientRow, SmallGradientTable,
};
pub use perimeter::{perimeter_estimate, PerimeterEstimate, PerimeterRow};
pub use phases::{decompose, default_thresholds, PhaseDecomposition, PhaseSummary};
