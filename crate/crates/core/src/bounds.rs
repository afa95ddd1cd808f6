//! Closed-form envelopes: the threshold `β₀`, the roots `η₁`, `η₂` of the
//! quadratic envelopes `g₁`, `g₂`, and the flux envelopes `f±`.

use crate::special::{gamma, QuadratureRule};
use crate::{Error, Result};
use serde::Serialize;

/// Fractional order `α ∈ (0, 1)` and nonlinearity `m > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemParams {
    alpha: f64,
    m: f64,
    #[serde(skip)]
    gamma_1: f64,
    #[serde(skip)]
    gamma_2: f64,
}

impl ProblemParams {
    pub fn new(alpha: f64, m: f64) -> Result<Self> {
        let mut bad = Vec::new();
        if !(alpha > 0.0 && alpha < 1.0) {
            bad.push(format!("alpha must lie in (0, 1), got {alpha}"));
        }
        if !(m > 1.0) || !m.is_finite() {
            bad.push(format!("m must be finite and > 1, got {m}"));
        }
        if !bad.is_empty() {
            return Err(Error::InvalidParams(bad.join("; ")));
        }
        Ok(Self {
            alpha,
            m,
            gamma_1: gamma(1.0 - alpha)?,
            gamma_2: gamma(2.0 - alpha)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// `Γ(1-α)`.
    pub fn gamma_1(&self) -> f64 {
        self.gamma_1
    }

    /// `Γ(2-α)`.
    pub fn gamma_2(&self) -> f64 {
        self.gamma_2
    }

    /// Local exponent of `U` at a zero-flux front, `U ~ (η* - η)^{(2-α)/m}`.
    pub fn front_exponent(&self) -> f64 {
        (2.0 - self.alpha) / self.m
    }
}

pub fn beta0(p: &ProblemParams) -> f64 {
    (2.0 - p.alpha) / (2.0 * p.gamma_2 * (p.m + 1.0)).sqrt()
}

pub fn g1(eta: f64, beta: f64, p: &ProblemParams) -> f64 {
    let c = (2.0 - p.alpha).powi(2) / (8.0 * p.gamma_2);
    1.0 + (p.m + 1.0) * (-beta * eta + c * eta * eta)
}

pub fn g2(eta: f64, beta: f64, p: &ProblemParams) -> f64 {
    let c = p.alpha * p.alpha / (8.0 * p.gamma_2);
    1.0 + (p.m + 1.0) * (-beta * eta - c * eta * eta)
}

/// Smallest positive root of `g₁(·, β)`. Defined only for `β ≥ β₀`.
pub fn eta1(beta: f64, p: &ProblemParams) -> Result<f64> {
    let b = (p.m + 1.0) * beta;
    let a = (p.m + 1.0) * (2.0 - p.alpha).powi(2) / (8.0 * p.gamma_2);
    let mut disc = b * b - 4.0 * a;
    if disc.abs() <= 1e-12 * b * b {
        // β numerically at β₀
        disc = 0.0;
    } else if disc < 0.0 || !beta.is_finite() {
        return Err(Error::BelowThreshold {
            beta,
            beta0: beta0(p),
        });
    }
    // 2/(b + √disc) is the small root of a η² - b η + 1 without cancellation.
    Ok(2.0 / (b + disc.sqrt()))
}

/// Positive root of `g₂(·, β)`, `β ≥ 0`.
pub fn eta2(beta: f64, p: &ProblemParams) -> Result<f64> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::Domain {
            what: "beta",
            value: beta,
        });
    }
    let b = (p.m + 1.0) * beta;
    let c = (p.m + 1.0) * p.alpha * p.alpha / (8.0 * p.gamma_2);
    Ok(2.0 / (b + (b * b + 4.0 * c).sqrt()))
}

pub fn f_plus(beta: f64, p: &ProblemParams) -> Result<f64> {
    Ok(-beta + (1.0 - 0.5 * p.alpha) * eta1(beta, p)? / p.gamma_2)
}

/// `-β + (1-α/2)/Γ(2-α) ∫₀^{η₂} g₂^{1/(m+1)}`.
///
/// `g₂ = (m+1)c (η₂ - z)(z + r)` with `r = 1/((m+1)c η₂) ≥ η₂`, so the
/// integrand is `(η₂ - z)^{1/(m+1)}` times a factor analytic on
/// `[0, η₂]`; a Gauss-Jacobi rule with that endpoint exponent is used.
pub fn f_minus(beta: f64, p: &ProblemParams) -> Result<f64> {
    let e2 = eta2(beta, p)?;
    let mp1 = p.m + 1.0;
    let c = p.alpha * p.alpha / (8.0 * p.gamma_2);
    let r = 1.0 / (mp1 * c * e2);
    let q = 1.0 / mp1;
    let rule = QuadratureRule::gauss_jacobi(q, 0.0, 32)?;
    let smooth = rule.apply(|t| (e2 * t + r).powf(q));
    let integral = e2 * (mp1 * c * e2).powf(q) * smooth;
    Ok(-beta + (1.0 - 0.5 * p.alpha) / p.gamma_2 * integral)
}

/// All closed-form quantities at one `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsReport {
    pub beta: f64,
    pub beta0: f64,
    /// Absent when `β < β₀`.
    pub eta1: Option<f64>,
    pub eta2: f64,
    /// Absent when `β < β₀`.
    pub f_plus: Option<f64>,
    pub f_minus: f64,
}

impl BoundsReport {
    pub fn evaluate(beta: f64, p: &ProblemParams) -> Result<Self> {
        let b0 = beta0(p);
        let (e1, fp) = if beta >= b0 {
            (Some(eta1(beta, p)?), Some(f_plus(beta, p)?))
        } else {
            (None, None)
        };
        Ok(Self {
            beta,
            beta0: b0,
            eta1: e1,
            eta2: eta2(beta, p)?,
            f_plus: fp,
            f_minus: f_minus(beta, p)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_params() {
        assert!(ProblemParams::new(1.0, 2.0).is_err());
        assert!(ProblemParams::new(0.5, 1.0).is_err());
        match ProblemParams::new(0.0, 0.5) {
            Err(Error::InvalidParams(msg)) => assert!(msg.contains("alpha") && msg.contains("m ")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn eta1_at_threshold_has_no_sqrt_term() {
        let p = ProblemParams::new(0.5, 2.0).unwrap();
        let b0 = beta0(&p);
        let e = eta1(b0, &p).unwrap();
        let expect = 4.0 * b0 * p.gamma_2() / (1.5f64 * 1.5);
        assert!((e / expect - 1.0).abs() < 1e-15);
        assert!(eta1(0.99 * b0, &p).is_err());
    }
}
