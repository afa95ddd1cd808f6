//! The no-flux condition at the front and the search for `β*`.
//!
//! The flux through the front of the fixed point at slope `β` is
//!
//! ```text
//! Uᵐ U'(η*) = -β + (1-α/2) ∫₀^{η*} I U.
//! ```
//!
//! A compact fixed point cannot carry positive flux, so below `β*` there is
//! no fixed point at all. [`shoot`] brackets `β*` in `β` by continuation:
//! converged solves with negative flux above, failure below, with the
//! Picard map damped progressively as it loses contractivity. The final
//! value comes from [`solve_anchored`], which imposes zero flux directly on
//! a grid attached to the front.
//!
//! # Front-anchored formulation
//!
//! With `η = η* ξ`, `U(η) = V(ξ)` and zero flux, `β = (1-α/2) η* P(1)` and
//! the Volterra equation becomes a problem on `ξ ∈ [0, 1]` alone:
//!
//! ```text
//! W(ξ) = 1 - [(1-α/2) ξ (P(1) - P(ξ)) + Q(ξ)] / Q(1),   V = W^{1/(m+1)}
//! P(ξ) = ∫₀^ξ I V,   Q(ξ) = ∫₀^ξ ζ I V dζ,   η* = ((m+1) Q(1))^{-1/2}.
//! ```
//!
//! At a zero-flux front `V ~ (1-ξ)^γ` with `γ = (2-α)/m`, and `I V` vanishes
//! like `(1-ξ)^{1-α+γ}`; both are interpolated in the bases `{1, d^γ}` and
//! `{1, d^{1-α+γ}}`, `d = 1 - ξ`, which keeps the scheme second order.

use crate::bounds::{beta0, eta1, eta2, ProblemParams};
use crate::ekoperator::{EkOperator, EkQuadrature, FrontShape, Profile, Represents};
use crate::special::QuadratureRule;
use crate::volterra::{
    picard_from, picard_solve_unchecked, running_moments, solve_grid, FixedPointDiagnostics, SolverConfig,
};
use crate::{Error, Result};
use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// `-β + (1-α/2) ∫₀^{η*} I U` for a converged profile.
pub fn flux(profile: &Profile, beta: f64, p: &ProblemParams) -> Result<f64> {
    let op = EkOperator::shared(p.alpha(), EkQuadrature::default())?;
    flux_with(&op, profile, beta, p)
}

fn flux_with(op: &EkOperator, profile: &Profile, beta: f64, p: &ProblemParams) -> Result<f64> {
    let u = profile.to_u(p.m());
    if u.values().iter().all(|&v| v == 0.0) {
        return Ok(-beta);
    }
    let iu = op.apply_grid(&u)?;
    let h = u.grid_step();
    let total = match u.front() {
        FrontShape::PowerBasis(e) => {
            let cells = u.len() - 1;
            let w = basis_moments(cells, 1.0 - p.alpha() + e)?;
            (0..cells)
                .map(|k| h * (w[k][0] * iu[k] + w[k][1] * iu[k + 1]))
                .sum()
        }
        front => {
            let e = match front {
                FrontShape::PowerCell(e) => e,
                _ => 1.0,
            };
            let fc = u
                .front_cell()
                .map(|k0| (k0, u.eta_star(), 1.0 - p.alpha() + e));
            let (pv, _) = running_moments(&iu, h, fc);
            pv[pv.len() - 1]
        }
    };
    Ok(-beta + (1.0 - 0.5 * p.alpha()) * total)
}

/// Per-cell integrals `[∫φ_L, ∫φ_R, ∫xφ_L, ∫xφ_R]` of the `{1, d^q}`
/// interpolation basis in grid units, front at node `cells`. The last cell
/// holds `φ_L = d^q` only.
fn basis_moments(cells: usize, q: f64) -> Result<Vec<[f64; 4]>> {
    let gl = QuadratureRule::gauss_legendre(8)?;
    let n = cells as f64;
    Ok((0..cells)
        .map(|k| {
            let kf = k as f64;
            if k + 1 == cells {
                return [1.0 / (q + 1.0), 0.0, n / (q + 1.0) - 1.0 / (q + 2.0), 0.0];
            }
            let (dk, dk1) = (n - kf, n - kf - 1.0);
            let b = dk1.powf(q);
            let scale = dk.powf(q) - b;
            let mut w = [0.0; 4];
            for (&t, &wt) in gl.nodes.iter().zip(&gl.weights) {
                let x = kf + t;
                let phi = ((n - x).powf(q) - b) / scale;
                w[0] += wt * phi;
                w[1] += wt * (1.0 - phi);
                w[2] += wt * x * phi;
                w[3] += wt * x * (1.0 - phi);
            }
            w
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchoredSolution {
    pub beta_star: f64,
    pub eta_star: f64,
    /// `U` on `N + 1` nodes over `[0, η*]`.
    pub profile: Profile,
    pub iterations: usize,
    pub final_residual: f64,
}

/// Zero-flux solution on `cells` uniform cells of `[0, η*]`.
pub fn solve_anchored(
    p: &ProblemParams,
    cells: usize,
    tol: f64,
    max_iters: usize,
    quad: EkQuadrature,
) -> Result<AnchoredSolution> {
    if cells < 4 {
        return Err(Error::InvalidParams(format!("anchored solve needs at least 4 cells, got {cells}")));
    }
    let op = EkOperator::shared(p.alpha(), quad)?;
    let (a, m) = (p.alpha(), p.m());
    let gamma = p.front_exponent();
    let q = 1.0 - a + gamma;
    let c = 1.0 - 0.5 * a;
    let h = 1.0 / cells as f64;
    let w = basis_moments(cells, q)?;
    let mut wv: Vec<f64> = (0..=cells)
        .map(|i| (1.0 - i as f64 * h).powf(gamma * (m + 1.0)))
        .collect();
    wv[cells] = 0.0;
    let mut res = f64::INFINITY;
    for it in 1..=max_iters {
        let v: Vec<f64> = wv.iter().map(|&y| y.powf(1.0 / (m + 1.0))).collect();
        let prof = Profile::new(h, v, 1.0, Represents::U, FrontShape::PowerBasis(gamma))?;
        let iv = op.apply_grid(&prof)?;
        let mut pv = vec![0.0; cells + 1];
        let mut qv = vec![0.0; cells + 1];
        for k in 0..cells {
            pv[k + 1] = pv[k] + h * (w[k][0] * iv[k] + w[k][1] * iv[k + 1]);
            qv[k + 1] = qv[k] + h * h * (w[k][2] * iv[k] + w[k][3] * iv[k + 1]);
        }
        let (p_end, q_end) = (pv[cells], qv[cells]);
        let next: Vec<f64> = (0..=cells)
            .map(|i| {
                let xi = i as f64 * h;
                (1.0 - (c * xi * (p_end - pv[i]) + qv[i]) / q_end).clamp(0.0, 1.0)
            })
            .collect();
        res = next
            .iter()
            .zip(&wv)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        wv = next;
        wv[0] = 1.0;
        wv[cells] = 0.0;
        if res <= tol {
            let eta_star = 1.0 / ((m + 1.0) * q_end).sqrt();
            let beta_star = c * p_end * eta_star;
            let u: Vec<f64> = wv.iter().map(|&y| y.powf(1.0 / (m + 1.0))).collect();
            let profile = Profile::new(
                eta_star / cells as f64,
                u,
                eta_star,
                Represents::U,
                FrontShape::PowerBasis(gamma),
            )?;
            debug!("anchored N={cells}: beta*={beta_star} eta*={eta_star} in {it} iterations");
            return Ok(AnchoredSolution {
                beta_star,
                eta_star,
                profile,
                iterations: it,
                final_residual: res,
            });
        }
    }
    Err(Error::NonConvergence {
        beta: f64::NAN,
        iterations: max_iters,
        residual: res,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShootConfig {
    pub solver: SolverConfig,
    /// Target for `|flux|`.
    pub shoot_tol: f64,
    /// Bisection stops once the bracket is this narrow.
    pub bracket_width: f64,
    pub max_doublings: usize,
    /// Continue the bracket below `β₀` when `flux(β₀) ≤ 0`.
    pub extend_below_threshold: bool,
    /// Bisection steps spent below `β₀` before the anchored solve.
    pub max_subthreshold_steps: usize,
    /// Cells of the anchored solve; `None` derives them from the grid step
    /// as `η₁(β₀)/h`, i.e. 1024 by default.
    pub anchored_cells: Option<usize>,
    pub anchored_tol: f64,
}

impl Default for ShootConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            shoot_tol: 1e-8,
            bracket_width: 1e-12,
            max_doublings: 60,
            extend_below_threshold: true,
            max_subthreshold_steps: 10,
            anchored_cells: None,
            anchored_tol: 1e-13,
        }
    }
}

impl ShootConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut bad = self.solver.violations();
        if !(self.shoot_tol > 0.0) {
            bad.push(format!("shoot_tol must be positive, got {}", self.shoot_tol));
        }
        if !(self.bracket_width > 0.0) {
            bad.push(format!("bracket_width must be positive, got {}", self.bracket_width));
        }
        if matches!(self.anchored_cells, Some(n) if n < 4) {
            bad.push("anchored_cells must be at least 4".into());
        }
        if !(self.anchored_tol > 0.0) {
            bad.push(format!("anchored_tol must be positive, got {}", self.anchored_tol));
        }
        bad
    }

    /// Cells of the anchored grid for these parameters.
    pub fn cells(&self, p: &ProblemParams) -> Result<usize> {
        if let Some(n) = self.anchored_cells {
            return Ok(n);
        }
        Ok(match self.solver.grid_step {
            Some(h) => ((eta1(beta0(p), p)? / h).round() as usize).max(4),
            None => 1024,
        })
    }
}

/// Result of one fixed-point solve inside the search.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FluxOutcome {
    Flux { value: f64, eta_star: f64 },
    /// `S_β(Y)` stayed positive over the whole grid.
    NoZero,
    Failed { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxSample {
    pub beta: f64,
    pub outcome: FluxOutcome,
}

impl FluxSample {
    /// `Some(true)` when `β` lies below `β*` by the sign test.
    fn positive_side(&self) -> Option<bool> {
        match self.outcome {
            FluxOutcome::Flux { value, .. } => Some(value >= 0.0),
            FluxOutcome::NoZero => Some(true),
            FluxOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShootMethod {
    /// Bisection reached `|flux| ≤ shoot_tol` with `β ≥ β₀`.
    Bisection,
    /// `flux(β₀) ≤ 0` and the search was not extended: `β₀` is returned.
    Degenerate,
    /// Bracketed in `β`, then solved on the front-anchored grid.
    Anchored,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingResult {
    pub beta_star: f64,
    pub eta_star: f64,
    /// Converged `U`.
    pub profile: Profile,
    pub flux_residual: f64,
    pub method: ShootMethod,
    pub beta0: f64,
    pub bracket_history: Vec<(f64, f64)>,
    pub samples: Vec<FluxSample>,
    pub picard_diagnostics: Vec<(f64, FixedPointDiagnostics)>,
    /// Anchored iterations and final update size, when used.
    pub anchored: Option<(usize, f64)>,
    /// Whether the anchored `β*` lies below the lowest converged `β` and near
    /// [`Self::beta_extrapolated`], both within four grid steps.
    pub bracket_consistent: Option<bool>,
    /// Zero of the line through the two lowest converged flux samples.
    pub beta_extrapolated: Option<f64>,
    pub notes: Vec<String>,
}

impl ShootingResult {
    pub fn grid_step(&self) -> f64 {
        self.profile.grid_step()
    }
}

struct Evaluation {
    sample: FluxSample,
    solution: Option<(Profile, FixedPointDiagnostics)>,
}

/// Damping factors tried in turn when the Picard map fails to settle.
const DAMPING_LADDER: [f64; 3] = [1.0, 0.5, 0.2];

/// Solves at `β` from `seed` (or from `g₂` without one), descending the
/// damping ladder from `*rung` on failure. `*rung` is left at the first
/// damping that converged so later calls start there.
fn evaluate(
    beta: f64,
    p: &ProblemParams,
    solver: &SolverConfig,
    seed: Option<&Profile>,
    rung: &mut usize,
) -> Evaluation {
    let attempt = |cfg: &SolverConfig| -> Result<(Profile, FixedPointDiagnostics, f64)> {
        let (y, d) = match seed {
            Some(s) => picard_from(s, beta, p, cfg)?,
            None => picard_solve_unchecked(beta, p, cfg)?,
        };
        let f = flux(&y, beta, p)?;
        Ok((y, d, f))
    };
    let ladder: Vec<f64> = DAMPING_LADDER
        .iter()
        .map(|&d| d * solver.damping)
        .collect();
    let mut out = Err(Error::Bracket("empty damping ladder".into()));
    for (i, &d) in ladder.iter().enumerate().skip(*rung) {
        out = attempt(&SolverConfig { damping: d, ..*solver });
        match &out {
            Ok(_) => {
                *rung = i;
                break;
            }
            Err(Error::NoZero { .. } | Error::NonConvergence { .. }) => {
                debug!("picard failed at beta={beta} with damping {d}");
            }
            Err(_) => break,
        }
    }
    match out {
        Ok((y, d, f)) => Evaluation {
            sample: FluxSample {
                beta,
                outcome: FluxOutcome::Flux {
                    value: f,
                    eta_star: y.eta_star(),
                },
            },
            solution: Some((y, d)),
        },
        Err(Error::NoZero { .. }) => Evaluation {
            sample: FluxSample {
                beta,
                outcome: FluxOutcome::NoZero,
            },
            solution: None,
        },
        Err(e) => Evaluation {
            sample: FluxSample {
                beta,
                outcome: FluxOutcome::Failed {
                    message: e.to_string(),
                },
            },
            solution: None,
        },
    }
}

/// `y` padded with zeros to `n` nodes.
fn pad(y: &Profile, n: usize) -> Result<Profile> {
    let mut v = y.values().to_vec();
    v.resize(n.max(v.len()), 0.0);
    Profile::new(y.grid_step(), v, y.eta_star(), Represents::Y, FrontShape::Linear)
}

/// Flux at each `β`, evaluated in parallel.
pub fn scan_flux(p: &ProblemParams, solver: &SolverConfig, betas: &[f64]) -> Vec<FluxSample> {
    betas
        .par_iter()
        .map(|&b| evaluate(b, p, solver, None, &mut 0).sample)
        .collect()
}

/// Every sign change of the flux along a scan, as bracketing pairs.
pub fn sign_changes(samples: &[FluxSample]) -> Vec<(f64, f64)> {
    samples
        .windows(2)
        .filter_map(|w| match (w[0].positive_side(), w[1].positive_side()) {
            (Some(a), Some(b)) if a != b => Some((w[0].beta, w[1].beta)),
            _ => None,
        })
        .collect()
}

/// Finds `β*` with zero flux at the front.
pub fn shoot(p: &ProblemParams, config: &ShootConfig) -> Result<ShootingResult> {
    let bad = config.violations();
    if !bad.is_empty() {
        return Err(Error::Config(bad));
    }
    let b0 = beta0(p);
    let solver = &config.solver;
    let mut samples = Vec::new();
    let mut diags = Vec::new();
    let mut history = Vec::new();
    let mut notes = Vec::new();
    let record = |ev: Evaluation, samples: &mut Vec<FluxSample>, diags: &mut Vec<_>| {
        if let Some((_, d)) = &ev.solution {
            diags.push((ev.sample.beta, d.clone()));
        }
        samples.push(ev.sample.clone());
        ev
    };

    let at_b0 = record(evaluate(b0, p, solver, None, &mut 0), &mut samples, &mut diags);
    let f0 = match &at_b0.sample.outcome {
        FluxOutcome::Flux { value, .. } => *value,
        FluxOutcome::NoZero => {
            return Err(Error::NoZero {
                beta: b0,
                searched_to: f64::NAN,
            })
        }
        FluxOutcome::Failed { message } => {
            return Err(Error::Bracket(format!("picard failed at beta0 = {b0}: {message}")))
        }
    };

    if f0 > 0.0 {
        // flux(β₀) > 0: expand upwards by doubling, then bisect.
        let (mut lo, mut hi) = (b0, 2.0 * b0);
        let mut best = at_b0;
        let mut n = 0;
        loop {
            let ev = record(evaluate(hi, p, solver, None, &mut 0), &mut samples, &mut diags);
            match ev.sample.positive_side() {
                Some(false) => {
                    best = pick_closer(best, ev);
                    break;
                }
                Some(true) => {
                    lo = hi;
                    best = pick_closer(best, ev);
                    hi *= 2.0;
                }
                None => return Err(failed(&ev.sample)),
            }
            n += 1;
            if n >= config.max_doublings {
                return Err(Error::Bracket(format!(
                    "flux still positive at beta = {hi} after {n} doublings"
                )));
            }
        }
        history.push((lo, hi));
        while hi - lo > config.bracket_width {
            if let Some(f) = flux_of(&best.sample) {
                if f.abs() <= config.shoot_tol {
                    break;
                }
            }
            let mid = 0.5 * (lo + hi);
            let ev = record(evaluate(mid, p, solver, None, &mut 0), &mut samples, &mut diags);
            match ev.sample.positive_side() {
                Some(true) => lo = mid,
                Some(false) => hi = mid,
                None => return Err(failed(&ev.sample)),
            }
            best = pick_closer(best, ev);
            history.push((lo, hi));
        }
        let (y, _) = best.solution.expect("bisection keeps a converged solve");
        let f = flux_of(&best.sample).unwrap_or(f64::NAN);
        if f.abs() > config.shoot_tol {
            notes.push(format!("bracket closed with |flux| = {f:e} above shoot_tol"));
        }
        return Ok(ShootingResult {
            beta_star: best.sample.beta,
            eta_star: y.eta_star(),
            profile: y.to_u(p.m()),
            flux_residual: f,
            method: ShootMethod::Bisection,
            beta0: b0,
            bracket_history: history,
            samples,
            picard_diagnostics: diags,
            anchored: None,
            bracket_consistent: None,
            beta_extrapolated: None,
            notes,
        });
    }

    notes.push(format!("flux(beta0) = {f0:e} <= 0: the zero-flux slope lies below beta0"));
    warn!("flux at beta0 = {b0} is {f0:e} <= 0");
    if !config.extend_below_threshold {
        let (y, _) = at_b0.solution.expect("converged at beta0");
        return Ok(ShootingResult {
            beta_star: b0,
            eta_star: y.eta_star(),
            profile: y.to_u(p.m()),
            flux_residual: f0,
            method: ShootMethod::Degenerate,
            beta0: b0,
            bracket_history: history,
            samples,
            picard_diagnostics: diags,
            anchored: None,
            bracket_consistent: None,
            beta_extrapolated: None,
            notes,
        });
    }

    // Walk down from β₀ by continuation. Above β* the fixed points carry
    // negative flux; below it none exists, which the Picard map reports as
    // a missing zero or as non-convergence on every damping.
    let (_, n_sub) = solve_grid(0.5 * b0, p, solver)?;
    let (y0, _) = at_b0.solution.as_ref().expect("converged at beta0");
    let mut seed = pad(y0, n_sub)?;
    let mut rung = 0;
    let mut hi = b0;
    let mut converged = vec![(b0, f0)];
    let mut lo = None;
    let step = 0.125 * b0;
    let probe = |beta: f64,
                     seed: &mut Profile,
                     rung: &mut usize,
                     samples: &mut Vec<FluxSample>,
                     diags: &mut Vec<_>,
                     converged: &mut Vec<(f64, f64)>|
     -> bool {
        let ev = record(evaluate(beta, p, solver, Some(seed), rung), samples, diags);
        match (flux_of(&ev.sample), ev.solution) {
            (Some(f), Some((y, _))) if f < 0.0 => {
                converged.push((beta, f));
                *seed = y;
                false
            }
            _ => true,
        }
    };
    while lo.is_none() {
        let trial = hi - step;
        if trial <= 0.0 {
            return Err(Error::Bracket(format!("flux negative down to beta = {hi}")));
        }
        if probe(trial, &mut seed, &mut rung, &mut samples, &mut diags, &mut converged) {
            lo = Some(trial);
        } else {
            hi = trial;
        }
    }
    let mut lo = lo.expect("loop exits with a lower end");
    history.push((lo, hi));
    for _ in 0..config.max_subthreshold_steps {
        let mid = 0.5 * (lo + hi);
        if probe(mid, &mut seed, &mut rung, &mut samples, &mut diags, &mut converged) {
            lo = mid;
        } else {
            hi = mid;
        }
        history.push((lo, hi));
    }
    let failed_below = samples
        .iter()
        .filter(|s| s.beta == lo)
        .any(|s| matches!(s.outcome, FluxOutcome::Failed { .. }));
    if failed_below {
        notes.push(format!("picard did not converge at beta = {lo} on any damping"));
    }
    converged.sort_by(|a, b| a.0.total_cmp(&b.0));
    let extrapolated = match converged.as_slice() {
        [(b1, f1), (b2, f2), ..] if f2 != f1 => Some(b1 - f1 * (b2 - b1) / (f2 - f1)),
        _ => None,
    };

    let cells = config.cells(p)?;
    let anch = solve_anchored(p, cells, config.anchored_tol, solver.max_picard_iters, solver.quadrature)?;
    let f = flux(&anch.profile, anch.beta_star, p)?;
    // Only the upper end is certain: failure below it may be the Picard map
    // rather than a missing fixed point. Both β-side estimates carry the
    // first-order error of the linear front.
    let slack = 4.0 * solver.grid_step.unwrap_or(eta1(b0, p)? / 1024.0);
    let consistent = anch.beta_star <= hi + slack
        && extrapolated.is_none_or(|b| (b - anch.beta_star).abs() <= slack);
    if !consistent {
        warn!(
            "anchored beta* = {} disagrees with the continuation (upper end {hi}, extrapolated {extrapolated:?})",
            anch.beta_star
        );
        notes.push(format!(
            "anchored beta* = {} disagrees with the continuation: upper end {hi}, extrapolated {extrapolated:?}",
            anch.beta_star
        ));
    }
    if anch.beta_star < b0 {
        notes.push(format!(
            "beta* = {} is below beta0 = {b0} by {:.3e}",
            anch.beta_star,
            b0 - anch.beta_star
        ));
    }
    info!(
        "shoot alpha={} m={}: beta*={} eta*={} (N={cells})",
        p.alpha(),
        p.m(),
        anch.beta_star,
        anch.eta_star
    );
    Ok(ShootingResult {
        beta_star: anch.beta_star,
        eta_star: anch.eta_star,
        profile: anch.profile,
        flux_residual: f,
        method: ShootMethod::Anchored,
        beta0: b0,
        bracket_history: history,
        samples,
        picard_diagnostics: diags,
        anchored: Some((anch.iterations, anch.final_residual)),
        bracket_consistent: Some(consistent),
        beta_extrapolated: extrapolated,
        notes,
    })
}

fn flux_of(s: &FluxSample) -> Option<f64> {
    match s.outcome {
        FluxOutcome::Flux { value, .. } => Some(value),
        _ => None,
    }
}

fn pick_closer(a: Evaluation, b: Evaluation) -> Evaluation {
    match (flux_of(&a.sample), flux_of(&b.sample)) {
        (Some(x), Some(y)) if y.abs() < x.abs() => b,
        (None, Some(_)) => b,
        _ => a,
    }
}

fn failed(s: &FluxSample) -> Error {
    match &s.outcome {
        FluxOutcome::Failed { message } => {
            Error::Bracket(format!("picard failed at beta = {}: {message}", s.beta))
        }
        _ => Error::Bracket(format!("unexpected outcome at beta = {}", s.beta)),
    }
}

/// `η₂(β) - h ≤ η* ≤ η₁(β) + h`; the upper bound is skipped when `η₁` is
/// undefined.
pub fn in_eta_bracket(beta: f64, eta_star: f64, h: f64, p: &ProblemParams) -> Result<(bool, Option<bool>)> {
    let lower = eta2(beta, p)? - h <= eta_star;
    let upper = if beta >= beta0(p) {
        Some(eta_star <= eta1(beta, p)? + h)
    } else {
        None
    };
    Ok((lower, upper))
}
