//! Shared fixtures for the criterion benchmarks.

use quench_core::{Grid, ProblemParams, ScalarField};

/// Sign-changing field on an `n × n` grid over `[-1, 1]²`.
pub fn wavy_field(n: usize) -> ScalarField {
    let g = Grid::square(n, -1.0, 1.0).expect("bench grid");
    ScalarField::from_fn(g, |x| (3.0 * x[0]).sin() * (1.0 + 0.5 * x[1] * x[1]))
}

pub fn bench_params(p: f64) -> ProblemParams {
    ProblemParams::new(p, 1.0, 1.0, 1.0)
        .and_then(|pr| pr.with_regularization(1e-3, 1e-4))
        .expect("bench params")
}
