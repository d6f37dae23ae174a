//! Discrete differential operators on uniform grids.
//!
//! Gradients live on edge midpoints (one component per axis). The squared
//! gradient norm of a cell averages the squares of the edges bounding it, so
//! the Dirichlet energy `Σ_c ((|Du|²_c + δ²)^{p/2} − δ^p)/p · |c|` is a smooth
//! function of the nodal values whenever `δ > 0` or `p = 2`. The discrete
//! p-Laplacian is minus its nodal gradient divided by the cell volume, which
//! for `p = 2`, `δ = 0` is the 3-point (1-D) or 5-point (2-D) Laplacian.

use crate::energy::smoothed_potential_prime;
use crate::error::Result;
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::params::ProblemParams;

/// Forward differences along each axis, stored on edge midpoints.
pub fn gradient(u: &ScalarField) -> VectorField {
    let g = u.grid();
    let [n0, n1] = g.shape2();
    let v = u.values();
    let h = g.spacing();
    let mut comps = Vec::with_capacity(g.dim());
    let mut c0 = Vec::with_capacity((n0 - 1) * n1);
    for i in 0..n0 - 1 {
        for j in 0..n1 {
            c0.push((v[(i + 1) * n1 + j] - v[i * n1 + j]) / h[0]);
        }
    }
    comps.push(c0);
    if g.dim() == 2 {
        let mut c1 = Vec::with_capacity(n0 * (n1 - 1));
        for i in 0..n0 {
            for j in 0..n1 - 1 {
                c1.push((v[i * n1 + j + 1] - v[i * n1 + j]) / h[1]);
            }
        }
        comps.push(c1);
    }
    VectorField::from_parts(g.clone(), comps)
}

/// Cell-centered `|Du|² + δ²`, averaging the squared edge components that
/// bound each cell.
pub fn cell_gradient_norm_sq(du: &VectorField, delta: f64) -> ScalarField {
    let g = du.grid();
    let mut out = vec![0.0; g.cell_grid().len()];
    fill_cell_norm_sq(g, du.component(0), du.components_opt(1), delta * delta, &mut out);
    ScalarField::from_parts(g.cell_grid(), out)
}

impl VectorField {
    pub(crate) fn components_opt(&self, axis: usize) -> &[f64] {
        if axis < self.dim() {
            self.component(axis)
        } else {
            &[]
        }
    }
}

pub(crate) fn fill_cell_norm_sq(g: &Grid, e0: &[f64], e1: &[f64], delta2: f64, out: &mut [f64]) {
    let [n0, n1] = g.shape2();
    if g.dim() == 1 {
        for (o, d) in out.iter_mut().zip(e0) {
            *o = d * d + delta2;
        }
        return;
    }
    // e0 has shape (n0-1, n1); e1 has shape (n0, n1-1); cells (n0-1, n1-1).
    for i in 0..n0 - 1 {
        for j in 0..n1 - 1 {
            let a = e0[i * n1 + j];
            let b = e0[i * n1 + j + 1];
            let c = e1[i * (n1 - 1) + j];
            let d = e1[(i + 1) * (n1 - 1) + j];
            out[i * (n1 - 1) + j] = 0.5 * (a * a + b * b) + 0.5 * (c * c + d * d) + delta2;
        }
    }
}

/// Reusable buffers for the Dirichlet part of the energy and its gradient.
#[derive(Clone, Debug)]
pub(crate) struct DirichletScratch {
    pub e0: Vec<f64>,
    pub e1: Vec<f64>,
    pub norm_sq: Vec<f64>,
    pub kappa: Vec<f64>,
}

impl DirichletScratch {
    pub fn new(g: &Grid) -> Self {
        let [n0, n1] = g.shape2();
        let (e0, e1) = if g.dim() == 1 {
            (n0 - 1, 0)
        } else {
            ((n0 - 1) * n1, n0 * (n1 - 1))
        };
        let cells = g.cell_grid().len();
        Self {
            e0: vec![0.0; e0],
            e1: vec![0.0; e1],
            norm_sq: vec![0.0; cells],
            kappa: vec![0.0; cells],
        }
    }

    pub fn load_edges(&mut self, g: &Grid, v: &[f64]) {
        let [n0, n1] = g.shape2();
        let h = g.spacing();
        if g.dim() == 1 {
            for i in 0..n0 - 1 {
                self.e0[i] = (v[i + 1] - v[i]) / h[0];
            }
            return;
        }
        for i in 0..n0 - 1 {
            for j in 0..n1 {
                self.e0[i * n1 + j] = (v[(i + 1) * n1 + j] - v[i * n1 + j]) / h[0];
            }
        }
        for i in 0..n0 {
            for j in 0..n1 - 1 {
                self.e1[i * (n1 - 1) + j] = (v[i * n1 + j + 1] - v[i * n1 + j]) / h[1];
            }
        }
    }

    /// Fills `norm_sq` from the loaded edges.
    pub fn load_norms(&mut self, g: &Grid, delta: f64) {
        fill_cell_norm_sq(g, &self.e0, &self.e1, delta * delta, &mut self.norm_sq);
    }

    /// Fills `kappa = (|Du|² + δ²)^{(p−2)/2}`, the flux coefficient per cell.
    /// Cells with zero norm get `kappa = 0` (their flux vanishes for any p > 1).
    pub fn load_kappa(&mut self, p: f64) {
        let half = 0.5 * (p - 2.0);
        if p == 2.0 {
            self.kappa.iter_mut().for_each(|k| *k = 1.0);
        } else {
            for (k, &n) in self.kappa.iter_mut().zip(&self.norm_sq) {
                *k = if n > 0.0 { n.powf(half) } else { 0.0 };
            }
        }
    }

    /// Adds `scale · ∂D/∂u_k` (D the unnormalized Dirichlet sum, one unit of
    /// volume per cell) into `out`, where the per-cell coefficients are in
    /// `kappa`. `∂D/∂u = −(discrete p-Laplacian)` per unit volume.
    pub fn accumulate_divergence(&self, g: &Grid, scale: f64, out: &mut [f64]) {
        let [n0, n1] = g.shape2();
        let h = g.spacing();
        if g.dim() == 1 {
            let s = scale / h[0];
            for c in 0..n0 - 1 {
                let flux = s * self.kappa[c] * self.e0[c];
                out[c] -= flux;
                out[c + 1] += flux;
            }
            return;
        }
        let m1 = n1 - 1;
        let s0 = 0.5 * scale / h[0];
        // x-edges (i, j): cells (i, j-1) and (i, j).
        for i in 0..n0 - 1 {
            for j in 0..n1 {
                let mut w = 0.0;
                if j > 0 {
                    w += self.kappa[i * m1 + j - 1];
                }
                if j < m1 {
                    w += self.kappa[i * m1 + j];
                }
                let flux = s0 * w * self.e0[i * n1 + j];
                out[i * n1 + j] -= flux;
                out[(i + 1) * n1 + j] += flux;
            }
        }
        let s1 = 0.5 * scale / h[1];
        // y-edges (i, j): cells (i-1, j) and (i, j).
        for i in 0..n0 {
            for j in 0..m1 {
                let mut w = 0.0;
                if i > 0 {
                    w += self.kappa[(i - 1) * m1 + j];
                }
                if i < n0 - 1 {
                    w += self.kappa[i * m1 + j];
                }
                let flux = s1 * w * self.e1[i * m1 + j];
                out[i * n1 + j] -= flux;
                out[i * n1 + j + 1] += flux;
            }
        }
    }
}

/// Discrete `Δ_p u = div((|Du|² + δ²)^{(p−2)/2} Du)` at interior nodes;
/// boundary nodes are set to zero.
pub fn p_laplacian(u: &ScalarField, p: f64, delta: f64) -> ScalarField {
    let g = u.grid();
    let mut s = DirichletScratch::new(g);
    s.load_edges(g, u.values());
    s.load_norms(g, delta);
    s.load_kappa(p);
    let mut out = vec![0.0; g.len()];
    s.accumulate_divergence(g, 1.0, &mut out);
    for (k, o) in out.iter_mut().enumerate() {
        *o = if g.is_boundary(k) { 0.0 } else { -*o };
    }
    ScalarField::from_parts(g.clone(), out)
}

/// Euler–Lagrange residual `Δ_p u − F′(u)` on interior nodes.
#[derive(Clone, Debug)]
pub struct Residual {
    /// Residual values; zero on boundary and inactive nodes.
    pub field: ScalarField,
    /// Nodes where the residual was evaluated.
    pub active: Vec<bool>,
    /// Interior nodes where `γ < 1` and `|u| < ε` (or `u = 0`), so the
    /// right-hand side was regularized or replaced by its a.e. convention.
    pub degenerate_nodes: Vec<usize>,
}

impl Residual {
    pub fn is_degenerate(&self) -> bool {
        !self.degenerate_nodes.is_empty()
    }

    /// Supremum of `|residual|` over active nodes accepted by `keep`.
    pub fn sup_where(&self, keep: impl Fn(usize) -> bool) -> f64 {
        self.field
            .values()
            .iter()
            .enumerate()
            .filter(|(k, _)| self.active[*k] && keep(*k))
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    pub fn sup(&self) -> f64 {
        self.sup_where(|_| true)
    }
}

/// `Δ_p u − γ(λ₊ u₊^{γ−1} − λ₋ u₋^{γ−1})`, with the right-hand side replaced
/// by the smoothed potential derivative when `ε > 0`.
///
/// For `γ = 0` the right-hand side vanishes off `{u = 0}` and only nodes with
/// `|u| > ε` are evaluated.
pub fn p_laplacian_residual(u: &ScalarField, params: &ProblemParams) -> Result<Residual> {
    params.validate()?;
    let g = u.grid();
    let lap = p_laplacian(u, params.p, params.grad_reg_delta);
    let eps = params.pot_reg_eps;
    let mut active = vec![false; g.len()];
    let mut degenerate = Vec::new();
    let mut vals = vec![0.0; g.len()];
    for (k, &uk) in u.values().iter().enumerate() {
        if g.is_boundary(k) {
            continue;
        }
        if params.gamma == 0.0 && uk.abs() <= eps {
            continue;
        }
        if params.gamma < 1.0 && (uk.abs() < eps || uk == 0.0) {
            degenerate.push(k);
        }
        active[k] = true;
        vals[k] = lap.at(k) - smoothed_potential_prime(uk, params);
    }
    Ok(Residual {
        field: ScalarField::from_parts(g.clone(), vals),
        active,
        degenerate_nodes: degenerate,
    })
}

/// Nodal gradient by central differences (one-sided on the boundary).
pub fn node_gradient(u: &ScalarField) -> Vec<[f64; 2]> {
    let g = u.grid();
    let [n0, n1] = g.shape2();
    let v = u.values();
    let h = g.spacing();
    let diff = |k_minus: usize, k_plus: usize, steps: f64, h: f64| (v[k_plus] - v[k_minus]) / (steps * h);
    let mut out = vec![[0.0; 2]; g.len()];
    for i in 0..n0 {
        for j in 0..n1 {
            let k = i * n1 + j;
            let d0 = if i == 0 {
                diff(k, k + n1, 1.0, h[0])
            } else if i == n0 - 1 {
                diff(k - n1, k, 1.0, h[0])
            } else {
                diff(k - n1, k + n1, 2.0, h[0])
            };
            let d1 = if g.dim() == 1 {
                0.0
            } else if j == 0 {
                diff(k, k + 1, 1.0, h[1])
            } else if j == n1 - 1 {
                diff(k - 1, k, 1.0, h[1])
            } else {
                diff(k - 1, k + 1, 2.0, h[1])
            };
            out[k] = [d0, d1];
        }
    }
    out
}

pub fn node_gradient_norm(u: &ScalarField) -> ScalarField {
    let vals = node_gradient(u).iter().map(|d| d[0].hypot(d[1])).collect();
    ScalarField::from_parts(u.grid().clone(), vals)
}

/// Frobenius norm of the central-difference Hessian at interior nodes; `None`
/// on the boundary.
pub fn node_hessian_norm(u: &ScalarField) -> Vec<Option<f64>> {
    let g = u.grid();
    let n1 = g.shape2()[1];
    let v = u.values();
    let h = g.spacing();
    let mut out = vec![None; g.len()];
    for k in 0..g.len() {
        if g.is_boundary(k) {
            continue;
        }
        let uxx = (v[k + n1] - 2.0 * v[k] + v[k - n1]) / (h[0] * h[0]);
        if g.dim() == 1 {
            out[k] = Some(uxx.abs());
            continue;
        }
        let uyy = (v[k + 1] - 2.0 * v[k] + v[k - 1]) / (h[1] * h[1]);
        let uxy = (v[k + n1 + 1] - v[k + n1 - 1] - v[k - n1 + 1] + v[k - n1 - 1]) / (4.0 * h[0] * h[1]);
        out[k] = Some((uxx * uxx + 2.0 * uxy * uxy + uyy * uyy).sqrt());
    }
    out
}
