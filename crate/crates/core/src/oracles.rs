//! Closed-form reference objects: the exact one-dimensional two-phase
//! minimizer, the radial comparison barrier, and the lower bound on the
//! optimal Hölder exponent of p-harmonic functions in the plane.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{distance, Grid, Point};
use crate::ops::node_gradient;
use crate::params::ProblemParams;

/// The homogeneous profile `u(t) = C₊ t₊^η − C₋ t₋^η`, `η = p/(p − γ)`,
/// which solves the one-dimensional Euler–Lagrange equation
/// `(|u′|^{p−2}u′)′ = γ(λ₊ u₊^{γ−1} − λ₋ u₋^{γ−1})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactOneD {
    pub params: ProblemParams,
    pub eta: f64,
    pub c_plus: f64,
    pub c_minus: f64,
}

/// Coefficient `C` of the branch `C t^η` solving the equation with weight
/// `λ`: matching `(Cη)^{p−1}(η−1)(p−1) t^{η(γ−1)} = γλ C^{γ−1} t^{η(γ−1)}`
/// gives `C^{p−γ} = λ(p−γ)/(p−1) · ((p−γ)/p)^{p−1}`.
pub fn profile_coefficient(lambda: f64, p: f64, gamma: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let q = p - gamma;
    (lambda * q / (p - 1.0)).powf(1.0 / q) * (q / p).powf((p - 1.0) / q)
}

pub fn exact_one_d(params: &ProblemParams) -> Result<ExactOneD> {
    params.validate()?;
    if params.gamma <= 0.0 {
        return Err(Error::Precondition(
            "the homogeneous profile needs gamma > 0".into(),
        ));
    }
    let (p, g) = (params.p, params.gamma);
    Ok(ExactOneD {
        params: *params,
        eta: p / (p - g),
        c_plus: profile_coefficient(params.lambda_plus, p, g),
        c_minus: profile_coefficient(params.lambda_minus, p, g),
    })
}

impl ExactOneD {
    pub fn evaluate_at(&self, t: f64) -> f64 {
        if t > 0.0 {
            self.c_plus * t.powf(self.eta)
        } else if t < 0.0 {
            -self.c_minus * (-t).powf(self.eta)
        } else {
            0.0
        }
    }

    pub fn derivative_at(&self, t: f64) -> f64 {
        let e1 = self.eta - 1.0;
        if t > 0.0 {
            self.c_plus * self.eta * t.powf(e1)
        } else if t < 0.0 {
            self.c_minus * self.eta * (-t).powf(e1)
        } else {
            0.0
        }
    }

    /// Relative mismatch of the coefficient identity
    /// `(Cη)^{p−1}(η−1)(p−1) = λγ C^{γ−1}` for each phase with `λ > 0`.
    pub fn euler_lagrange_mismatch(&self) -> f64 {
        let pr = &self.params;
        let (p, g, eta) = (pr.p, pr.gamma, self.eta);
        [(self.c_plus, pr.lambda_plus), (self.c_minus, pr.lambda_minus)]
            .into_iter()
            .filter(|(_, l)| *l > 0.0)
            .map(|(c, l)| {
                let lhs = (c * eta).powf(p - 1.0) * (eta - 1.0) * (p - 1.0);
                let rhs = l * g * c.powf(g - 1.0);
                (lhs - rhs).abs() / rhs.abs()
            })
            .fold(0.0, f64::max)
    }

    /// Profile sampled along axis 0 (constant in the second coordinate on
    /// 2-D grids), shifted so the free boundary sits at `t0`.
    pub fn sample(&self, grid: &Grid, t0: f64) -> ScalarField {
        ScalarField::from_fn(grid.clone(), |x| self.evaluate_at(x[0] - t0))
    }

    /// Closed-form energy density integral over `(a, b)`:
    /// `∫ |u′|^p/p + λ₊u₊^γ + λ₋u₋^γ`.
    pub fn energy_on(&self, a: f64, b: f64) -> f64 {
        let pr = &self.params;
        let (p, g, eta) = (pr.p, pr.gamma, self.eta);
        // |u′|^p = (Cη)^p t^{(η−1)p} and u^γ = C^γ t^{ηγ}; both exponents equal ηγ.
        let k = eta * g;
        let side = |c: f64, lambda: f64, lo: f64, hi: f64| {
            if hi <= lo {
                return 0.0;
            }
            let dens = (c * eta).powf(p) / p + lambda * c.powf(g);
            dens * (hi.powf(k + 1.0) - lo.powf(k + 1.0)) / (k + 1.0)
        };
        side(self.c_plus, pr.lambda_plus, a.max(0.0), b.max(0.0))
            + side(self.c_minus, pr.lambda_minus, (-b).max(0.0), (-a).max(0.0))
    }
}

/// Radial comparison function `w(x) = C |x − y|^{p/(p−1)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Barrier {
    pub center: Point,
    pub coefficient: f64,
    pub params: ProblemParams,
}

impl Barrier {
    pub fn exponent(&self) -> f64 {
        self.params.p / (self.params.p - 1.0)
    }

    pub fn value_at(&self, x: Point) -> f64 {
        self.coefficient * distance(x, self.center).powf(self.exponent())
    }

    pub fn sample(&self, grid: &Grid) -> ScalarField {
        ScalarField::from_fn(grid.clone(), |x| self.value_at(x))
    }
}

/// `Δ_p w` for the barrier: the flux `|Dw|^{p−2}Dw = (Cq)^{p−1}(x − y)` with
/// `q = p/(p−1)` is linear, so `Δ_p w ≡ C^{p−1} n q^{p−1}`.
pub fn barrier_p_laplacian(b: &Barrier, dim: usize) -> f64 {
    let p = b.params.p;
    b.coefficient.powf(p - 1.0) * dim as f64 * b.exponent().powf(p - 1.0)
}

/// The same constant with exponent `p` on `p/(p−1)`, the variant found in
/// the literature; kept so reports can show both values side by side.
pub fn barrier_p_laplacian_exponent_p_variant(b: &Barrier, dim: usize) -> f64 {
    let p = b.params.p;
    b.coefficient.powf(p - 1.0) * dim as f64 * b.exponent().powf(p)
}

/// Largest barrier coefficient for which the comparison argument closes:
/// `(λ₊γ(p−1)/(np))^{1/(p−1)} (p−γ)/p`.
pub fn nondegeneracy_constant(params: &ProblemParams, dim: usize) -> f64 {
    let (p, g) = (params.p, params.gamma);
    (params.lambda_plus * g * (p - 1.0) / (dim as f64 * p)).powf(1.0 / (p - 1.0)) * (p - g) / p
}

/// Lower bound for the optimal `C^{1,α}` exponent of planar p-harmonic
/// functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaPBound {
    pub p: f64,
    pub alpha_lower: f64,
}

impl AlphaPBound {
    /// Largest γ with `p/(p−γ) < 1 + α`, i.e. `γ < pα/(1+α)`, capped at `p/2`.
    pub fn max_admissible_gamma(&self) -> f64 {
        (self.p * self.alpha_lower / (1.0 + self.alpha_lower)).min(self.p / 2.0)
    }
}

/// `α_p ≥ (1/2p)(−3 − 1/(p−1) + √(33 + 30/(p−1) + 1/(p−1)²))`.
pub fn alpha_p_lower(p: f64) -> Result<AlphaPBound> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::Precondition(format!("alpha_p bound needs p >= 2 (got {p})")));
    }
    let s = 1.0 / (p - 1.0);
    let alpha = (-3.0 - s + (33.0 + 30.0 * s + s * s).sqrt()) / (2.0 * p);
    Ok(AlphaPBound { p, alpha_lower: alpha })
}

/// Whether the growth exponent `p/(p−γ)` stays below `1 + α_p` (lower bound)
/// with `0 < γ < p/2`.
pub fn admissible(p: f64, gamma: f64) -> bool {
    if !(gamma > 0.0 && gamma < p / 2.0) {
        return false;
    }
    match alpha_p_lower(p) {
        Ok(b) => p / (p - gamma) < 1.0 + b.alpha_lower,
        Err(_) => false,
    }
}

/// Outcome of the Hölder-growth implication check on a sampled field.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HolderGrowthCheck {
    pub radii: Vec<f64>,
    /// `[Du]_{C^α(B_r)}` per radius.
    pub seminorms: Vec<f64>,
    /// `sup_r r^{α−β} [Du]_{C^α(B_r)}`.
    pub hypothesis_value: f64,
    pub hypothesis_holds: bool,
    /// `max |u(x)| / |x − center|^{1+β}` over the largest ball.
    pub conclusion_ratio: f64,
    pub conclusion_holds: bool,
}

impl HolderGrowthCheck {
    /// The implication "hypothesis ⇒ conclusion".
    pub fn holds(&self) -> bool {
        !self.hypothesis_holds || self.conclusion_holds
    }
}

/// Checks that `sup_r r^{α−β}[Du]_{C^α(B_r)} ≤ A` implies `|u(x)| ≤ A|x|^{1+β}`
/// around `center`, over dyadic radii `1/2, 1/4, …` down to two grid spacings.
///
/// The center must carry `u = 0` and a gradient no larger than one grid
/// spacing. Seminorms take the maximum over all node pairs in each ball.
pub fn holder_growth_check(
    u: &ScalarField,
    center: Point,
    alpha: f64,
    beta: f64,
    bound: f64,
) -> Result<HolderGrowthCheck> {
    if !(beta > alpha && alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Precondition(format!(
            "need 0 < alpha <= 1 and beta > alpha (got alpha = {alpha}, beta = {beta})"
        )));
    }
    let g = u.grid();
    let h = g.max_spacing();
    let du = node_gradient(u);
    let c = g.nearest_node(center);
    let scale = u.sup_norm().max(1.0);
    if u.at(c).abs() > 1e-12 * scale {
        return Err(Error::Precondition(format!(
            "u(center) = {} is not zero",
            u.at(c)
        )));
    }
    let grad_c = du[c][0].hypot(du[c][1]);
    if grad_c > h {
        return Err(Error::Precondition(format!(
            "|Du(center)| = {grad_c} exceeds the grid tolerance {h}"
        )));
    }
    let center = g.point(c);
    let reach = g.distance_to_boundary(center);
    let mut radii = Vec::new();
    let mut r = 0.5;
    while r >= 2.0 * h {
        if r <= reach + 1e-12 {
            radii.push(r);
        }
        r *= 0.5;
    }
    if radii.len() < 3 {
        return Err(Error::InsufficientResolution(format!(
            "only {} dyadic radii between 2h and 1/2 fit around the center",
            radii.len()
        )));
    }
    let mut seminorms = Vec::with_capacity(radii.len());
    for &r in &radii {
        let ball = g.nodes_within(center, r);
        let mut best: f64 = 0.0;
        for (a, &ka) in ball.iter().enumerate() {
            let xa = g.point(ka);
            for &kb in &ball[a + 1..] {
                let d = distance(xa, g.point(kb));
                let diff = (du[ka][0] - du[kb][0]).hypot(du[ka][1] - du[kb][1]);
                best = best.max(diff / d.powf(alpha));
            }
        }
        seminorms.push(best);
    }
    let hypothesis_value = radii
        .iter()
        .zip(&seminorms)
        .map(|(r, s)| r.powf(alpha - beta) * s)
        .fold(0.0, f64::max);
    let mut ratio: f64 = 0.0;
    for k in g.nodes_within(center, radii[0]) {
        let d = distance(g.point(k), center);
        if d > 0.0 {
            ratio = ratio.max(u.at(k).abs() / d.powf(1.0 + beta));
        }
    }
    Ok(HolderGrowthCheck {
        radii,
        seminorms,
        hypothesis_holds: hypothesis_value <= bound,
        hypothesis_value,
        conclusion_ratio: ratio,
        conclusion_holds: ratio <= bound * (1.0 + 1e-9),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64, gamma: f64, l1: f64, l2: f64) -> ProblemParams {
        ProblemParams::new(p, gamma, l1, l2).unwrap()
    }

    #[test]
    fn membrane_profile_constants() {
        let ex = exact_one_d(&params(2.0, 1.0, 1.0, 1.0)).unwrap();
        assert_eq!(ex.eta, 2.0);
        assert!((ex.c_plus - 0.5).abs() < 1e-15 && (ex.c_minus - 0.5).abs() < 1e-15);
        assert!((ex.evaluate_at(-0.6) + 0.18).abs() < 1e-15);
    }

    #[test]
    fn p3_gamma1_constants() {
        let ex = exact_one_d(&params(3.0, 1.0, 1.0, 0.0)).unwrap();
        assert_eq!(ex.eta, 1.5);
        assert!((ex.c_plus - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ex.c_minus, 0.0);
        assert!(ex.euler_lagrange_mismatch() < 1e-12);
        assert_eq!(ex.evaluate_at(-1.0), 0.0);
    }

    #[test]
    fn rejects_gamma_zero() {
        assert!(exact_one_d(&params(2.0, 0.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn profile_satisfies_equation_pointwise() {
        // finite-difference flux divergence at t = 0.5, away from the kink
        for &(p, gamma) in &[(2.0, 0.5), (3.0, 0.7), (4.0, 1.9), (2.5, 1.25)] {
            let ex = exact_one_d(&params(p, gamma, 1.3, 0.4)).unwrap();
            let flux = |t: f64| {
                let d = ex.derivative_at(t);
                d.abs().powf(p - 2.0) * d
            };
            for &t in &[0.5, -0.5] {
                let s = 1e-5;
                let div = (flux(t + s) - flux(t - s)) / (2.0 * s);
                let u = ex.evaluate_at(t);
                let rhs = if u > 0.0 {
                    gamma * 1.3 * u.powf(gamma - 1.0)
                } else {
                    -gamma * 0.4 * (-u).powf(gamma - 1.0)
                };
                assert!((div - rhs).abs() < 1e-6 * rhs.abs(), "p={p} γ={gamma} t={t}: {div} vs {rhs}");
            }
        }
    }

    #[test]
    fn barrier_constants() {
        let b = |p: f64, c: f64| Barrier {
            center: [0.0, 0.0],
            coefficient: c,
            params: params(p, 0.5, 1.0, 1.0),
        };
        assert!((barrier_p_laplacian(&b(2.0, 1.0), 2) - 4.0).abs() < 1e-14);
        assert!((barrier_p_laplacian(&b(2.0, 1.0), 1) - 2.0).abs() < 1e-14);
        assert!((barrier_p_laplacian_exponent_p_variant(&b(2.0, 1.0), 2) - 8.0).abs() < 1e-14);
        assert_eq!(barrier_p_laplacian(&b(3.0, 0.0), 2), 0.0);
    }

    #[test]
    fn nondegeneracy_constant_values() {
        let pr = params(2.0, 1.0, 1.0, 1.0);
        assert!((nondegeneracy_constant(&pr, 2) - 0.125).abs() < 1e-15);
        assert!((nondegeneracy_constant(&pr, 1) - 0.25).abs() < 1e-15);
        let tiny = params(2.0, 1.0, 1e-300, 1.0);
        assert!(nondegeneracy_constant(&tiny, 2) < 1e-299);
    }

    #[test]
    fn alpha_p_values() {
        assert_eq!(alpha_p_lower(2.0).unwrap().alpha_lower, 1.0);
        let a3 = alpha_p_lower(3.0).unwrap().alpha_lower;
        assert!((a3 - 0.5744).abs() < 5e-5, "{a3}");
        assert!(admissible(3.0, 1.0));
        assert!(!admissible(3.0, 1.4));
        assert!(!admissible(3.0, 1.5 - 1e-9));
        assert!(alpha_p_lower(1.5).is_err());
        let m = alpha_p_lower(3.0).unwrap().max_admissible_gamma();
        assert!((m - 1.0945).abs() < 1e-3, "{m}");
    }

    #[test]
    fn holder_check_on_zero_and_power_profile() {
        let g = Grid::square(41, -1.0, 1.0).unwrap();
        let zero = ScalarField::zeros(g.clone());
        let chk = holder_growth_check(&zero, [0.0, 0.0], 0.25, 0.5, 1.0).unwrap();
        assert!(chk.hypothesis_holds && chk.conclusion_holds && chk.holds());

        let u = ScalarField::from_fn(g.clone(), |x| (x[0].hypot(x[1])).powf(1.5));
        let probe = holder_growth_check(&u, [0.0, 0.0], 0.25, 0.5, f64::INFINITY).unwrap();
        let a = probe.hypothesis_value * 1.01;
        let chk = holder_growth_check(&u, [0.0, 0.0], 0.25, 0.5, a).unwrap();
        assert!(chk.hypothesis_holds);
        assert!(chk.conclusion_holds, "{} > {a}", chk.conclusion_ratio);

        let affine = ScalarField::from_fn(g, |x| x[0]);
        assert!(matches!(
            holder_growth_check(&affine, [0.0, 0.0], 0.25, 0.5, 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn holder_check_needs_three_radii() {
        let g = Grid::interval(9, -1.0, 1.0).unwrap();
        let zero = ScalarField::zeros(g);
        assert!(matches!(
            holder_growth_check(&zero, [0.0, 0.0], 0.25, 0.5, 1.0),
            Err(Error::InsufficientResolution(_))
        ));
    }
}
