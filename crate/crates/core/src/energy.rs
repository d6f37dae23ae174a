//! The discrete two-phase functional, its smoothed potential, and the exact
//! gradient of the discrete energy with respect to nodal values.
//!
//! Both terms use the midpoint rule per cell: the Dirichlet term through the
//! cell-averaged gradient norm and the potential at the mean of the cell's
//! corner values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::ops::DirichletScratch;
use crate::params::ProblemParams;
use crate::sum::CompensatedSum;

/// Value of the discrete functional split into its three parts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub potential_plus: f64,
    pub potential_minus: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn from_parts(dirichlet: f64, potential_plus: f64, potential_minus: f64) -> Self {
        Self {
            dirichlet,
            potential_plus,
            potential_minus,
            total: dirichlet + potential_plus + potential_minus,
        }
    }
}

/// One-sided profile `φ_ε(t)`, `t ≥ 0`, with `φ_ε(0) = 0`.
#[inline]
fn phi(t: f64, gamma: f64, eps: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if gamma == 0.0 {
        return if eps == 0.0 { 1.0 } else { t * t / (t * t + eps * eps) };
    }
    if eps == 0.0 {
        return if gamma == 1.0 { t } else { t.powf(gamma) };
    }
    let r = t * t + eps * eps;
    if gamma == 1.0 {
        r.sqrt() - eps
    } else if gamma == 2.0 {
        t * t
    } else {
        r.powf(0.5 * gamma) - eps.powf(gamma)
    }
}

/// `φ_ε′(t)` for `t ≥ 0`; zero at `t = 0` by convention.
#[inline]
fn phi_prime(t: f64, gamma: f64, eps: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if gamma == 0.0 {
        if eps == 0.0 {
            return 0.0;
        }
        let r = t * t + eps * eps;
        return 2.0 * t * eps * eps / (r * r);
    }
    if eps == 0.0 {
        return if gamma == 1.0 { 1.0 } else { gamma * t.powf(gamma - 1.0) };
    }
    let r = t * t + eps * eps;
    if gamma == 1.0 {
        t / r.sqrt()
    } else if gamma == 2.0 {
        2.0 * t
    } else {
        gamma * t * r.powf(0.5 * gamma - 1.0)
    }
}

/// `(λ₊ φ_ε(s₊), λ₋ φ_ε(s₋))`.
#[inline]
pub fn potential_parts(s: f64, params: &ProblemParams) -> (f64, f64) {
    let (g, e) = (params.gamma, params.pot_reg_eps);
    if s > 0.0 {
        (params.lambda_plus * phi(s, g, e), 0.0)
    } else if s < 0.0 {
        (0.0, params.lambda_minus * phi(-s, g, e))
    } else {
        (0.0, 0.0)
    }
}

/// Smoothed potential
/// `F_ε(s) = λ₊((s₊² + ε²)^{γ/2} − ε^γ) + λ₋((s₋² + ε²)^{γ/2} − ε^γ)`.
///
/// `F_0` is the exact potential `λ₊ s₊^γ + λ₋ s₋^γ`. For `γ = 0` the formula
/// above degenerates to zero, so the indicator potential is smoothed as
/// `λ s²/(s² + ε²)` on each side instead.
pub fn smoothed_potential(s: f64, params: &ProblemParams) -> f64 {
    let (a, b) = potential_parts(s, params);
    a + b
}

/// Derivative of [`smoothed_potential`]. At `s = 0` the value is 0, the
/// midpoint convention for the subdifferential when `γ = 1, ε = 0`.
#[inline]
pub fn smoothed_potential_prime(s: f64, params: &ProblemParams) -> f64 {
    let (g, e) = (params.gamma, params.pot_reg_eps);
    if s > 0.0 {
        params.lambda_plus * phi_prime(s, g, e)
    } else if s < 0.0 {
        -params.lambda_minus * phi_prime(-s, g, e)
    } else {
        0.0
    }
}

/// Discrete energy of `u`.
pub fn evaluate(u: &ScalarField, params: &ProblemParams) -> EnergyBreakdown {
    EnergyModel::new(u.grid().clone(), *params).energy(u.values())
}

/// Gradient of the discrete energy with respect to nodal values; zero on
/// Dirichlet boundary nodes.
pub fn descent_gradient(u: &ScalarField, params: &ProblemParams) -> Result<ScalarField> {
    check_smooth(params)?;
    let mut model = EnergyModel::new(u.grid().clone(), *params);
    let mut grad = vec![0.0; u.grid().len()];
    model.energy_and_gradient(u.values(), &mut grad);
    Ok(ScalarField::from_parts(u.grid().clone(), grad))
}

/// The discrete energy is differentiable iff `(δ > 0 or p = 2)` and
/// `(ε > 0 or γ ≥ 1)`.
pub fn check_smooth(params: &ProblemParams) -> Result<()> {
    params.validate()?;
    if params.grad_reg_delta == 0.0 && params.p != 2.0 {
        return Err(Error::NonSmooth(format!(
            "p = {} needs a positive gradient regularization delta",
            params.p
        )));
    }
    if params.pot_reg_eps == 0.0 && params.gamma < 1.0 {
        return Err(Error::NonSmooth(format!(
            "gamma = {} < 1 needs a positive potential smoothing eps",
            params.gamma
        )));
    }
    Ok(())
}

/// Energy evaluator with reusable buffers, for repeated evaluation on one grid.
#[derive(Clone, Debug)]
pub struct EnergyModel {
    grid: Grid,
    params: ProblemParams,
    scratch: DirichletScratch,
    cell_mean: Vec<f64>,
}

impl EnergyModel {
    pub fn new(grid: Grid, params: ProblemParams) -> Self {
        let scratch = DirichletScratch::new(&grid);
        let cells = grid.cell_grid().len();
        Self {
            grid,
            params,
            scratch,
            cell_mean: vec![0.0; cells],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn set_params(&mut self, params: ProblemParams) {
        self.params = params;
    }

    fn load_cell_means(&mut self, v: &[f64]) {
        let [n0, n1] = self.grid.shape2();
        if self.grid.dim() == 1 {
            for c in 0..n0 - 1 {
                self.cell_mean[c] = 0.5 * (v[c] + v[c + 1]);
            }
            return;
        }
        let m1 = n1 - 1;
        for i in 0..n0 - 1 {
            for j in 0..m1 {
                let k = i * n1 + j;
                self.cell_mean[i * m1 + j] = 0.25 * ((v[k] + v[k + 1]) + (v[k + n1] + v[k + n1 + 1]));
            }
        }
    }

    fn dirichlet_sum(&self) -> f64 {
        let p = self.params.p;
        let delta = self.params.grad_reg_delta;
        let floor = if delta == 0.0 { 0.0 } else { delta.powf(p) };
        let mut acc = CompensatedSum::new();
        if p == 2.0 {
            let d2 = delta * delta;
            for &n in &self.scratch.norm_sq {
                acc.add(n - d2);
            }
        } else {
            for &n in &self.scratch.norm_sq {
                acc.add(n.powf(0.5 * p) - floor);
            }
        }
        acc.value() / p
    }

    pub fn energy(&mut self, v: &[f64]) -> EnergyBreakdown {
        let g = self.grid.clone();
        self.scratch.load_edges(&g, v);
        self.scratch.load_norms(&g, self.params.grad_reg_delta);
        self.load_cell_means(v);
        self.finish(&g)
    }

    fn finish(&self, g: &Grid) -> EnergyBreakdown {
        let vol = g.cell_volume();
        let dirichlet = self.dirichlet_sum() * vol;
        let mut plus = CompensatedSum::new();
        let mut minus = CompensatedSum::new();
        for &m in &self.cell_mean {
            let (a, b) = potential_parts(m, &self.params);
            plus.add(a);
            minus.add(b);
        }
        EnergyBreakdown::from_parts(dirichlet, plus.value() * vol, minus.value() * vol)
    }

    /// Energy and its exact gradient (boundary entries zeroed) in one pass.
    pub fn energy_and_gradient(&mut self, v: &[f64], grad: &mut [f64]) -> EnergyBreakdown {
        let g = self.grid.clone();
        self.scratch.load_edges(&g, v);
        self.scratch.load_norms(&g, self.params.grad_reg_delta);
        self.load_cell_means(v);
        let e = self.finish(&g);
        self.scratch.load_kappa(self.params.p);
        grad.iter_mut().for_each(|x| *x = 0.0);
        let vol = g.cell_volume();
        self.scratch.accumulate_divergence(&g, vol, grad);
        let [n0, n1] = g.shape2();
        if g.dim() == 1 {
            let w = 0.5 * vol;
            for c in 0..n0 - 1 {
                let f = w * smoothed_potential_prime(self.cell_mean[c], &self.params);
                grad[c] += f;
                grad[c + 1] += f;
            }
        } else {
            let w = 0.25 * vol;
            let m1 = n1 - 1;
            for i in 0..n0 - 1 {
                for j in 0..m1 {
                    let f = w * smoothed_potential_prime(self.cell_mean[i * m1 + j], &self.params);
                    let k = i * n1 + j;
                    grad[k] += f;
                    grad[k + 1] += f;
                    grad[k + n1] += f;
                    grad[k + n1 + 1] += f;
                }
            }
        }
        for (k, gk) in grad.iter_mut().enumerate() {
            if g.is_boundary(k) {
                *gk = 0.0;
            }
        }
        e
    }
}

impl EnergyModel {
    /// Estimate of the Hessian diagonal at the point of the last
    /// [`energy_and_gradient`](Self::energy_and_gradient) call. Cross terms
    /// between the edges of a cell are bounded by their absolute values and
    /// concave parts of the potential are dropped, so the entries are
    /// nonnegative. Boundary entries are set to one.
    pub fn hessian_diagonal(&self, out: &mut [f64]) {
        let g = &self.grid;
        let pr = &self.params;
        let sc = &self.scratch;
        let (p, vol) = (pr.p, g.cell_volume());
        let h = g.spacing();
        let [n0, n1] = g.shape2();
        out.iter_mut().for_each(|x| *x = 0.0);
        let curv = |m: f64| second_derivative(m, pr).max(0.0);
        if g.dim() == 1 {
            let inv = 1.0 / (h[0] * h[0]);
            for c in 0..n0 - 1 {
                let n = sc.norm_sq[c];
                let e = sc.e0[c];
                let mut d = sc.kappa[c] * inv;
                if p != 2.0 && n > 0.0 {
                    d *= 1.0 + (p - 2.0) * e * e / n;
                }
                let f = 0.25 * curv(self.cell_mean[c]);
                out[c] += vol * (d + f);
                out[c + 1] += vol * (d + f);
            }
        } else {
            let m1 = n1 - 1;
            let d2n = 1.0 / (h[0] * h[0]) + 1.0 / (h[1] * h[1]);
            for i in 0..n0 - 1 {
                for j in 0..m1 {
                    let c = i * m1 + j;
                    let n = sc.norm_sq[c];
                    let kap = sc.kappa[c];
                    let f = curv(self.cell_mean[c]) / 16.0;
                    let k = i * n1 + j;
                    let corners = [
                        (k, sc.e0[i * n1 + j], sc.e1[i * m1 + j]),
                        (k + 1, sc.e0[i * n1 + j + 1], sc.e1[i * m1 + j]),
                        (k + n1, sc.e0[i * n1 + j], sc.e1[(i + 1) * m1 + j]),
                        (k + n1 + 1, sc.e0[i * n1 + j + 1], sc.e1[(i + 1) * m1 + j]),
                    ];
                    for (node, a, b) in corners {
                        let mut d = 0.5 * kap * d2n;
                        if p != 2.0 && n > 0.0 {
                            let dn = a.abs() / h[0] + b.abs() / h[1];
                            d += 0.25 * (p - 2.0) * kap / n * dn * dn;
                        }
                        out[node] += vol * (d + f);
                    }
                }
            }
        }
        let top = out.iter().copied().fold(0.0, f64::max);
        let floor = if top > 0.0 { 1e-12 * top } else { 1.0 };
        for (k, x) in out.iter_mut().enumerate() {
            if g.is_boundary(k) {
                *x = 1.0;
            } else if !(*x > floor) {
                *x = floor;
            }
        }
    }
}

/// Second derivative of [`smoothed_potential`] away from `s = 0`.
fn second_derivative(s: f64, params: &ProblemParams) -> f64 {
    let (g, e) = (params.gamma, params.pot_reg_eps);
    let lambda = if s > 0.0 {
        params.lambda_plus
    } else if s < 0.0 {
        params.lambda_minus
    } else {
        return 0.0;
    };
    let t = s.abs();
    if g == 0.0 {
        if e == 0.0 {
            return 0.0;
        }
        let r = t * t + e * e;
        return lambda * 2.0 * e * e * (e * e - 3.0 * t * t) / (r * r * r);
    }
    let r = t * t + e * e;
    lambda * g * r.powf(0.5 * g - 2.0) * (e * e + (g - 1.0) * t * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Point;

    fn params(p: f64, gamma: f64, l1: f64, l2: f64) -> ProblemParams {
        ProblemParams::new(p, gamma, l1, l2).unwrap()
    }

    #[test]
    fn zero_field_has_zero_energy() {
        let g = Grid::square(9, -1.0, 1.0).unwrap();
        let pr = params(2.5, 0.7, 1.0, 2.0).with_regularization(1e-2, 1e-3).unwrap();
        let e = evaluate(&ScalarField::zeros(g), &pr);
        assert_eq!(e.total, 0.0);
    }

    #[test]
    fn smoothed_potential_vanishes_at_zero() {
        for &eps in &[0.0, 1e-3, 0.1, 1.0] {
            for &gamma in &[0.0, 0.3, 1.0, 1.4] {
                let pr = ProblemParams {
                    pot_reg_eps: eps,
                    ..params(3.0, gamma, 1.0, 2.0)
                };
                assert_eq!(smoothed_potential(0.0, &pr), 0.0);
            }
        }
    }

    #[test]
    fn linear_potential_is_positive_part() {
        let pr = params(2.0, 1.0, 1.0, 0.0);
        for s in [-2.0, -0.1, 0.0, 0.3, 4.0] {
            assert_eq!(smoothed_potential(s, &pr), s.max(0.0));
        }
    }

    #[test]
    fn smoothed_value_and_derivative_at_sample_point() {
        let pr = params(2.0, 0.5, 1.0, 0.0).with_regularization(0.0, 0.1).unwrap();
        let want = 0.1f64.powf(0.25) - 0.1f64.powf(0.5);
        assert!((smoothed_potential(0.3, &pr) - want).abs() < 1e-15);
        let t = 1e-6;
        let fd = (smoothed_potential(0.3 + t, &pr) - smoothed_potential(0.3 - t, &pr)) / (2.0 * t);
        assert!((fd - smoothed_potential_prime(0.3, &pr)).abs() < 1e-6);
    }

    #[test]
    fn rejects_nonsmooth_settings() {
        let g = Grid::interval(5, 0.0, 1.0).unwrap();
        let u = ScalarField::zeros(g);
        assert!(matches!(
            descent_gradient(&u, &params(3.0, 1.0, 1.0, 1.0)),
            Err(Error::NonSmooth(_))
        ));
        assert!(matches!(
            descent_gradient(&u, &params(2.0, 0.5, 1.0, 1.0)),
            Err(Error::NonSmooth(_))
        ));
        assert!(descent_gradient(&u, &params(2.0, 0.5, 1.0, 1.0).with_regularization(0.0, 1e-3).unwrap()).is_ok());
    }

    #[test]
    fn zero_field_is_critical_for_gamma_one() {
        let g = Grid::square(7, -1.0, 1.0).unwrap();
        let pr = params(2.0, 1.0, 1.0, 1.0);
        let grad = descent_gradient(&ScalarField::zeros(g), &pr).unwrap();
        assert!(grad.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn affine_fields_are_discretely_harmonic() {
        let g = Grid::rectangle([8, 6], [0.0, -1.0], [1.0, 1.0]).unwrap();
        // λ's may not both vanish, so use a field that stays in the flat part
        // of a one-sided potential: λ₋ only, u > 0 everywhere.
        let pr = params(2.0, 1.0, 0.0, 1.0);
        let u = ScalarField::from_fn(g, |x: Point| 3.0 + 2.0 * x[0] - x[1]);
        let grad = descent_gradient(&u, &pr).unwrap();
        assert!(grad.sup_norm() < 1e-12, "{}", grad.sup_norm());
    }

    #[test]
    fn parts_sum_to_total() {
        let g = Grid::square(9, -1.0, 1.0).unwrap();
        let pr = params(2.5, 1.2, 1.0, 3.0).with_regularization(1e-3, 0.0).unwrap();
        let u = ScalarField::from_fn(g, |x| x[0].sin() + x[1] * x[1] - 0.4);
        let e = evaluate(&u, &pr);
        let s = e.dirichlet + e.potential_plus + e.potential_minus;
        assert!((e.total - s).abs() <= 1e-14 * e.total);
        assert!(e.dirichlet > 0.0 && e.potential_plus > 0.0 && e.potential_minus > 0.0);
    }

    #[test]
    fn breakdown_serializes_to_flat_record() {
        let e = EnergyBreakdown::from_parts(1.0, 0.5, 0.25);
        let js = serde_json::to_value(e).unwrap();
        let keys: Vec<&String> = js.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 4);
        assert_eq!(js["total"], 1.75);
    }
}
