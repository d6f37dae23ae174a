use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents and weights of the two-phase functional
/// `∫ |Du|^p / p + λ₊ (u₊)^γ + λ₋ (u₋)^γ`, together with the two
/// regularization knobs used by the discrete energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub p: f64,
    pub gamma: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// Gradient regularization: `|Du|²` is replaced by `|Du|² + δ²`.
    #[serde(default)]
    pub grad_reg_delta: f64,
    /// Potential smoothing width ε.
    #[serde(default)]
    pub pot_reg_eps: f64,
}

impl ProblemParams {
    /// Unregularized parameters, validated.
    pub fn new(p: f64, gamma: f64, lambda_plus: f64, lambda_minus: f64) -> Result<Self> {
        Self {
            p,
            gamma,
            lambda_plus,
            lambda_minus,
            grad_reg_delta: 0.0,
            pot_reg_eps: 0.0,
        }
        .validated()
    }

    pub fn with_regularization(mut self, delta: f64, eps: f64) -> Result<Self> {
        self.grad_reg_delta = delta;
        self.pot_reg_eps = eps;
        self.validated()
    }

    pub fn with_p(mut self, p: f64) -> Result<Self> {
        self.p = p;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        let all = [
            self.p,
            self.gamma,
            self.lambda_plus,
            self.lambda_minus,
            self.grad_reg_delta,
            self.pot_reg_eps,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite".into());
        }
        if self.p <= 1.0 {
            return bad(format!("p must exceed 1 (got p = {})", self.p));
        }
        if self.gamma < 0.0 || self.gamma > self.p / 2.0 {
            return bad(format!(
                "gamma must satisfy 0 <= gamma <= p/2 (got gamma = {}, p/2 = {})",
                self.gamma,
                self.p / 2.0
            ));
        }
        if self.lambda_plus < 0.0 || self.lambda_minus < 0.0 {
            return bad("lambda_plus and lambda_minus must be non-negative".into());
        }
        if self.lambda_plus + self.lambda_minus <= 0.0 {
            return bad("lambda_plus + lambda_minus must be positive".into());
        }
        if self.grad_reg_delta < 0.0 || self.pot_reg_eps < 0.0 {
            return bad("regularization parameters must be non-negative".into());
        }
        Ok(())
    }

    /// Homogeneity exponent `p / (p − γ)` of minimizers at degenerate
    /// free-boundary points.
    pub fn growth_exponent(&self) -> f64 {
        self.p / (self.p - self.gamma)
    }

    /// Parameters with the roles of the two phases exchanged.
    pub fn swapped_phases(&self) -> Self {
        Self {
            lambda_plus: self.lambda_minus,
            lambda_minus: self.lambda_plus,
            ..*self
        }
    }
}
