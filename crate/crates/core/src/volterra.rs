//! The map `S_β`, its truncation `A_β` at the first zero, and Picard
//! iteration for `Y = A_β(Y)`.
//!
//! ```text
//! S_β(Y)(η) = 1 + (m+1) [ -βη + (1-α/2) η P(η) - Q(η) ]
//! P(η) = ∫₀^η I U,   Q(η) = ∫₀^η z I U dz,   U = Y^{1/(m+1)}
//! ```

use crate::bounds::{beta0, eta1, eta2, g2, ProblemParams};
use crate::ekoperator::{EkOperator, EkQuadrature, FrontShape, Profile, Represents};
use crate::{Error, Result};
use log::{debug, warn};
use serde::{Deserialize, Serialize};

/// Values of `S_β` clamped by more than this are reported.
pub const CLAMP_WARN: f64 = 1e-8;

/// Picard gives up once the update size has gone this many iterations
/// without a new minimum.
pub const STALL_ITERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// `None` means `η₁(β)/1024`.
    pub grid_step: Option<f64>,
    pub picard_tol: f64,
    pub max_picard_iters: usize,
    pub damping: f64,
    pub quadrature: EkQuadrature,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_step: None,
            picard_tol: 1e-10,
            max_picard_iters: 500,
            damping: 1.0,
            quadrature: EkQuadrature::default(),
        }
    }
}

impl SolverConfig {
    /// Every violated constraint, as messages.
    pub fn violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if let Some(h) = self.grid_step {
            if !(h > 0.0) || !h.is_finite() {
                bad.push(format!("grid_step must be positive, got {h}"));
            }
        }
        if !(self.picard_tol > 0.0) {
            bad.push(format!("picard_tol must be positive, got {}", self.picard_tol));
        }
        if self.max_picard_iters == 0 {
            bad.push("max_picard_iters must be at least 1".into());
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            bad.push(format!("damping must lie in (0, 1], got {}", self.damping));
        }
        if self.quadrature.jacobi_nodes < 2 || self.quadrature.panel_nodes < 2 {
            bad.push("quadrature node counts must be at least 2".into());
        }
        bad
    }

    pub fn validate(&self) -> Result<()> {
        let bad = self.violations();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FixedPointDiagnostics {
    pub iterations: usize,
    /// Sup-norm of the last update.
    pub final_residual: f64,
    pub eta_star_history: Vec<f64>,
    pub residual_history: Vec<f64>,
    /// Largest amount any `S_β` value was clamped into `[0, 1]`.
    pub max_clamp: f64,
    pub damping: f64,
}

/// Grid for a solve at `β`: step and node count.
///
/// For `β ≥ β₀` the grid covers `[0, η₁(β) + 4h]`. Below the threshold
/// `η₁` does not exist; the grid is sized from `η₁(β₀)` and extends to
/// three times it.
pub fn solve_grid(beta: f64, p: &ProblemParams, config: &SolverConfig) -> Result<(f64, usize)> {
    let b0 = beta0(p);
    let (reference, span) = if beta >= b0 {
        let e1 = eta1(beta, p)?;
        (e1, None)
    } else {
        let e1 = eta1(b0, p)?;
        (e1, Some(3.0 * e1))
    };
    let h = config.grid_step.unwrap_or(reference / 1024.0);
    let end = span.unwrap_or(reference + 4.0 * h);
    Ok((h, (end / h).ceil() as usize + 1))
}

/// Running integrals `P`, `Q` of nodal values `f` of `I U`.
///
/// Trapezoid on whole cells. When the support ends at `η*` inside the grid,
/// `f` vanishes there like `(η*-η)^q` and the cell `[η_{k0}, η*]` is
/// integrated against that shape; nodes past `η*` carry the final values.
pub(crate) fn running_moments(
    f: &[f64],
    h: f64,
    front: Option<(usize, f64, f64)>,
) -> (Vec<f64>, Vec<f64>) {
    let n = f.len();
    let mut pv = vec![0.0; n];
    let mut qv = vec![0.0; n];
    let last = front.map_or(n - 1, |(k0, _, _)| k0);
    for k in 0..last {
        let (x0, x1) = (k as f64 * h, (k + 1) as f64 * h);
        pv[k + 1] = pv[k] + 0.5 * h * (f[k] + f[k + 1]);
        qv[k + 1] = qv[k] + 0.5 * h * (x0 * f[k] + x1 * f[k + 1]);
    }
    if let Some((k0, es, q)) = front {
        let len = es - k0 as f64 * h;
        let p_end = pv[k0] + f[k0] * len / (q + 1.0);
        let q_end = qv[k0] + f[k0] * (es * len / (q + 1.0) - len * len / (q + 2.0));
        for i in k0 + 1..n {
            pv[i] = p_end;
            qv[i] = q_end;
        }
    }
    (pv, qv)
}

/// `S_β(Y)` at every node, untruncated. `Y` must represent `Y`.
pub fn apply_s(y: &Profile, beta: f64, p: &ProblemParams) -> Result<Vec<f64>> {
    let b0 = beta0(p);
    if beta < b0 {
        return Err(Error::BelowThreshold { beta, beta0: b0 });
    }
    let op = EkOperator::shared(p.alpha(), EkQuadrature::default())?;
    apply_s_with(&op, y, beta, p)
}

/// [`apply_s`] with a given operator and no threshold check.
pub fn apply_s_with(op: &EkOperator, y: &Profile, beta: f64, p: &ProblemParams) -> Result<Vec<f64>> {
    if y.represents() != Represents::Y {
        return Err(Error::InvalidProfile("apply_s expects a Y profile".into()));
    }
    let u = y.to_u(p.m());
    let iu = op.apply_grid(&u)?;
    let h = y.grid_step();
    let e = match u.front() {
        FrontShape::Linear => 1.0,
        FrontShape::PowerCell(e) | FrontShape::PowerBasis(e) => e,
    };
    let front = y
        .front_cell()
        .map(|k0| (k0, y.eta_star(), 1.0 - p.alpha() + e));
    let (pv, qv) = running_moments(&iu, h, front);
    let c = 1.0 - 0.5 * p.alpha();
    Ok((0..y.len())
        .map(|i| {
            let eta = i as f64 * h;
            1.0 + (p.m() + 1.0) * (-beta * eta + c * eta * pv[i] - qv[i])
        })
        .collect())
}

/// Smallest zero of the piecewise-linear interpolant of `raw`.
///
/// For `β ≥ β₀` the search stops at `η₁(β) + 2h`; below the threshold the
/// whole grid is searched.
pub fn detect_eta_star(raw: &[f64], grid_step: f64, beta: f64, p: &ProblemParams) -> Result<f64> {
    let limit = if beta >= beta0(p) {
        eta1(beta, p)? + 2.0 * grid_step
    } else {
        f64::INFINITY
    };
    for i in 0..raw.len().saturating_sub(1) {
        let x = i as f64 * grid_step;
        if x > limit {
            break;
        }
        let (a, b) = (raw[i], raw[i + 1]);
        if a > 0.0 && b <= 0.0 {
            let t = a / (a - b);
            let root = (i as f64 + t) * grid_step;
            if root <= limit {
                return Ok(root);
            }
            break;
        }
        if a <= 0.0 {
            return Ok(x);
        }
    }
    Err(Error::NoZero {
        beta,
        searched_to: limit.min((raw.len() - 1) as f64 * grid_step),
    })
}

/// `A_β(Y)`: `S_β(Y)` cut off at its first zero and clamped into `[0, 1]`.
/// Also returns the largest clamp applied.
pub fn apply_a(y: &Profile, beta: f64, p: &ProblemParams) -> Result<(Profile, f64)> {
    let b0 = beta0(p);
    if beta < b0 {
        return Err(Error::BelowThreshold { beta, beta0: b0 });
    }
    let op = EkOperator::shared(p.alpha(), EkQuadrature::default())?;
    apply_a_with(&op, y, beta, p)
}

fn apply_a_with(op: &EkOperator, y: &Profile, beta: f64, p: &ProblemParams) -> Result<(Profile, f64)> {
    let raw = apply_s_with(op, y, beta, p)?;
    let h = y.grid_step();
    let es = detect_eta_star(&raw, h, beta, p)?;
    truncate(raw, h, es)
}

fn truncate(mut raw: Vec<f64>, h: f64, es: f64) -> Result<(Profile, f64)> {
    let mut clamp: f64 = 0.0;
    for (i, v) in raw.iter_mut().enumerate() {
        if i as f64 * h >= es {
            *v = 0.0;
        } else {
            let c = v.clamp(0.0, 1.0);
            clamp = clamp.max((c - *v).abs());
            *v = c;
        }
    }
    if clamp > CLAMP_WARN {
        warn!("S_beta clamped into [0, 1] by {clamp:e}");
    }
    raw[0] = 1.0;
    Ok((Profile::new(h, raw, es, Represents::Y, FrontShape::Linear)?, clamp))
}

/// Fixed point of `A_β` from `Y₀ = g₂(·, β)` clipped into `[0, 1]`.
pub fn picard_solve(
    beta: f64,
    p: &ProblemParams,
    config: &SolverConfig,
) -> Result<(Profile, FixedPointDiagnostics)> {
    let b0 = beta0(p);
    if beta < b0 {
        return Err(Error::BelowThreshold { beta, beta0: b0 });
    }
    picard_solve_unchecked(beta, p, config)
}

/// [`picard_solve`] without the `β ≥ β₀` precondition. Below the threshold
/// no zero of `S_β(Y)` is guaranteed and [`Error::NoZero`] may result.
pub fn picard_solve_unchecked(
    beta: f64,
    p: &ProblemParams,
    config: &SolverConfig,
) -> Result<(Profile, FixedPointDiagnostics)> {
    config.validate()?;
    let (h, n) = solve_grid(beta, p, config)?;
    let e2 = eta2(beta, p)?;
    let vals: Vec<f64> = (0..n)
        .map(|i| {
            let x = i as f64 * h;
            if x >= e2 { 0.0 } else { g2(x, beta, p).clamp(0.0, 1.0) }
        })
        .collect();
    let y0 = Profile::new(h, vals, e2, Represents::Y, FrontShape::Linear)?;
    picard_from(&y0, beta, p, config)
}

/// Picard iteration from a given `Y` profile; the grid is taken from it.
/// Fails after `max_picard_iters`, or earlier once the update size stalls
/// for [`STALL_ITERS`] iterations.
pub fn picard_from(
    seed: &Profile,
    beta: f64,
    p: &ProblemParams,
    config: &SolverConfig,
) -> Result<(Profile, FixedPointDiagnostics)> {
    config.validate()?;
    let op = EkOperator::shared(p.alpha(), config.quadrature)?;
    let d = config.damping;
    let h = seed.grid_step();
    let mut y = seed.to_y(p.m());
    let mut diag = FixedPointDiagnostics {
        damping: d,
        ..Default::default()
    };
    let (mut best, mut best_at) = (f64::INFINITY, 0);
    for it in 1..=config.max_picard_iters {
        let (a, clamp) = apply_a_with(&op, &y, beta, p)?;
        diag.max_clamp = diag.max_clamp.max(clamp);
        let next = if d == 1.0 {
            a
        } else {
            let es = a.eta_star().max(y.eta_star());
            let vals = y
                .values()
                .iter()
                .zip(a.values())
                .map(|(old, new)| (1.0 - d) * old + d * new)
                .collect();
            Profile::new(h, vals, es, Represents::Y, FrontShape::Linear)?
        };
        let res = next
            .values()
            .iter()
            .zip(y.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        diag.iterations = it;
        diag.final_residual = res;
        diag.residual_history.push(res);
        diag.eta_star_history.push(next.eta_star());
        y = next;
        if res <= config.picard_tol {
            debug!("picard beta={beta} converged in {it} iterations, eta*={}", y.eta_star());
            return Ok((y, diag));
        }
        if res < best {
            (best, best_at) = (res, it);
        } else if it - best_at >= STALL_ITERS {
            debug!("picard beta={beta} stalled at {best:e} after {it} iterations");
            break;
        }
    }
    Err(Error::NonConvergence {
        beta,
        iterations: diag.iterations,
        residual: diag.final_residual,
    })
}

/// Pointwise residual of `(UᵐU')' = [(1-α) - (α/2) η d/dη] I U` by centred
/// differences, maximised over interior nodes with `U > 0.05`.
pub fn residual_eq2(profile: &Profile, p: &ProblemParams) -> Result<f64> {
    let op = EkOperator::shared(p.alpha(), EkQuadrature::default())?;
    let u = profile.to_u(p.m());
    let y = profile.to_y(p.m());
    let iu = op.apply_grid(&u)?;
    let h = profile.grid_step();
    let (yv, uv) = (y.values(), u.values());
    let mp1 = p.m() + 1.0;
    let a = p.alpha();
    let mut worst: f64 = 0.0;
    for i in 1..uv.len() - 1 {
        if uv[i] <= 0.05 || uv[i + 1] <= 0.0 {
            continue;
        }
        let eta = i as f64 * h;
        let lhs = (yv[i + 1] - 2.0 * yv[i] + yv[i - 1]) / (h * h * mp1);
        let rhs = (1.0 - a) * iu[i] - 0.5 * a * eta * (iu[i + 1] - iu[i - 1]) / (2.0 * h);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}
