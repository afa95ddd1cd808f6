//! Direct time-stepping of `D^α_t u = (uᵐ u_x)_x` on `(0, L)` with
//! `u(x, 0) = 0`, `u(0, t) = 1`, `u(L, t) = 0`.
//!
//! The fractional derivative uses the L1 scheme over the full history,
//!
//! ```text
//! D^α u(tₙ) ≈ dt^{-α}/Γ(2-α) Σ_{k=0}^{n-1} b_k (u^{n-k} - u^{n-k-1}),
//! b_k = (k+1)^{1-α} - k^{1-α},
//! ```
//!
//! which is valid because `u(x, 0) = 0` makes the Riemann-Liouville and
//! Caputo forms coincide. Diffusion is implicit with interface
//! diffusivity `(u_iᵐ + u_{i+1}ᵐ)/2` lagged at the previous iterate.

use crate::bounds::{beta0, eta1, ProblemParams};
use crate::ekoperator::Profile;
use crate::special::gamma;
use crate::{Error, Result};
use log::{debug, warn};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// L1 convolution weights `b_k`, `k = 0..n`, without the `dt^{-α}/Γ(2-α)`
/// factor.
pub fn l1_weights(alpha: f64, n: usize) -> Vec<f64> {
    let e = 1.0 - alpha;
    (0..n)
        .map(|k| {
            let k = k as f64;
            (k + 1.0).powf(e) - k.powf(e)
        })
        .collect()
}

/// L1 approximation of `D^α f(t_n)` from samples `f(0), f(dt), …, f(n dt)`.
pub fn l1_derivative(samples: &[f64], dt: f64, alpha: f64) -> Result<f64> {
    let n = samples.len().saturating_sub(1);
    if n == 0 {
        return Err(Error::InvalidParams("need at least two samples".into()));
    }
    let b = l1_weights(alpha, n);
    let sum: f64 = (0..n)
        .map(|k| b[k] * (samples[n - k] - samples[n - k - 1]))
        .sum();
    Ok(sum / (gamma(2.0 - alpha)? * dt.powf(alpha)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdeConfig {
    /// Spatial cells.
    pub nx: usize,
    /// Time steps.
    pub nt: usize,
    pub t_end: f64,
    /// `None` means `1.5 η₁(β₀) T^{α/2}`.
    pub length: Option<f64>,
    /// Linear solves per step, each with the diffusivity of the last.
    pub corrections: usize,
    /// Level of `u` that defines the front position.
    pub front_level: f64,
}

impl Default for PdeConfig {
    fn default() -> Self {
        Self {
            nx: 512,
            nt: 2048,
            t_end: 1.0,
            length: None,
            corrections: 3,
            front_level: 1e-3,
        }
    }
}

impl PdeConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if self.nx < 4 {
            bad.push(format!("nx must be at least 4, got {}", self.nx));
        }
        if self.nt < 1 {
            bad.push("nt must be at least 1".into());
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            bad.push(format!("t_end must be positive, got {}", self.t_end));
        }
        if let Some(l) = self.length {
            if !(l > 0.0 && l.is_finite()) {
                bad.push(format!("length must be positive, got {l}"));
            }
        }
        if self.corrections == 0 {
            bad.push("corrections must be at least 1".into());
        }
        if !(self.front_level > 0.0 && self.front_level < 1.0) {
            bad.push(format!("front_level must lie in (0, 1), got {}", self.front_level));
        }
        bad
    }
}

/// `u` on `nt + 1` time levels by `nx + 1` nodes, both ends included.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeField {
    pub alpha: f64,
    pub m: f64,
    pub dx: f64,
    pub dt: f64,
    pub nx: usize,
    pub nt: usize,
    pub u: Vec<Vec<f64>>,
    /// Largest amount any value was clipped into `[0, 1]`.
    pub max_clip: f64,
    front_level: f64,
    corrections: usize,
    weights: Vec<f64>,
    scale: f64,
}

impl PdeField {
    /// Field with only the initial level filled.
    pub fn new(p: &ProblemParams, config: &PdeConfig) -> Result<Self> {
        let bad = config.violations();
        if !bad.is_empty() {
            return Err(Error::Config(bad));
        }
        let a = p.alpha();
        let length = match config.length {
            Some(l) => l,
            None => 1.5 * eta1(beta0(p), p)? * config.t_end.powf(0.5 * a),
        };
        let dt = config.t_end / config.nt as f64;
        let mut u0 = vec![0.0; config.nx + 1];
        u0[0] = 1.0;
        Ok(Self {
            alpha: a,
            m: p.m(),
            dx: length / config.nx as f64,
            dt,
            nx: config.nx,
            nt: config.nt,
            u: vec![u0],
            max_clip: 0.0,
            front_level: config.front_level,
            corrections: config.corrections,
            weights: l1_weights(a, config.nt),
            scale: 1.0 / (gamma(2.0 - a)? * dt.powf(a)),
        })
    }

    /// All `nt` steps.
    pub fn run(p: &ProblemParams, config: &PdeConfig) -> Result<Self> {
        let mut f = Self::new(p, config)?;
        for n in 1..=f.nt {
            f.step(n)?;
        }
        debug!("pde oracle: {} steps, max clip {:e}", f.nt, f.max_clip);
        Ok(f)
    }

    /// Fills level `n`; levels `0..n` must already be present.
    pub fn step(&mut self, n: usize) -> Result<()> {
        if n == 0 || n != self.u.len() {
            return Err(Error::InvalidParams(format!(
                "step {n} requested with {} levels filled",
                self.u.len()
            )));
        }
        if n > self.nt {
            return Err(Error::InvalidParams(format!("step {n} beyond nt = {}", self.nt)));
        }
        let nx = self.nx;
        let c = self.scale;
        // c u^n - (a u_x)_x = c u^{n-1} - c Σ_{k≥1} b_k (u^{n-k} - u^{n-k-1})
        let mut rhs = self.u[n - 1].clone();
        for k in 1..n {
            let (newer, older) = (&self.u[n - k], &self.u[n - k - 1]);
            let b = self.weights[k];
            for i in 1..nx {
                rhs[i] -= b * (newer[i] - older[i]);
            }
        }
        for v in rhs.iter_mut() {
            *v *= c;
        }
        let inv_dx2 = 1.0 / (self.dx * self.dx);
        let mut iterate = self.u[n - 1].clone();
        iterate[0] = 1.0;
        let (mut lower, mut diag, mut upper) = (vec![0.0; nx + 1], vec![0.0; nx + 1], vec![0.0; nx + 1]);
        let mut b = vec![0.0; nx + 1];
        for _ in 0..self.corrections {
            let pw: Vec<f64> = iterate.iter().map(|v| v.max(0.0).powf(self.m)).collect();
            for i in 1..nx {
                let west = 0.5 * (pw[i - 1] + pw[i]) * inv_dx2;
                let east = 0.5 * (pw[i] + pw[i + 1]) * inv_dx2;
                lower[i] = -west;
                upper[i] = -east;
                diag[i] = c + west + east;
                b[i] = rhs[i];
            }
            diag[0] = 1.0;
            upper[0] = 0.0;
            b[0] = 1.0;
            diag[nx] = 1.0;
            lower[nx] = 0.0;
            b[nx] = 0.0;
            iterate = thomas(&lower, &diag, &upper, &b);
        }
        let mut clip: f64 = 0.0;
        for v in iterate.iter_mut() {
            if v.abs() > 1.0 + 1e-6 {
                return Err(Error::Instability { step: n, value: v.abs() });
            }
            let c = v.clamp(0.0, 1.0);
            clip = clip.max((c - *v).abs());
            *v = c;
        }
        if clip > 1e-8 {
            warn!("pde oracle clipped u by {clip:e} at step {n}");
        }
        self.max_clip = self.max_clip.max(clip);
        self.u.push(iterate);
        Ok(())
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    /// `∫ u dx` at level `n`, trapezoid.
    pub fn mass(&self, n: usize) -> f64 {
        let row = &self.u[n];
        self.dx * (row.iter().sum::<f64>() - 0.5 * (row[0] + row[self.nx]))
    }

    /// First `x` where `u` falls to the front level, by linear interpolation.
    pub fn front_position(&self, n: usize) -> f64 {
        let row = &self.u[n];
        let lv = self.front_level;
        for i in 0..self.nx {
            if row[i] > lv && row[i + 1] <= lv {
                return self.x(i) + self.dx * (row[i] - lv) / (row[i] - row[i + 1]);
            }
        }
        if row[0] <= lv {
            0.0
        } else {
            self.x(self.nx)
        }
    }

    /// `(t, x_f)` for every filled level after the first.
    pub fn front_trajectory(&self) -> Vec<(f64, f64)> {
        (1..self.u.len())
            .map(|n| (self.time(n), self.front_position(n)))
            .collect()
    }

    /// Least-squares slope of `ln x_f` against `ln t` over `t ≥ t_from`.
    pub fn front_exponent(&self, t_from: f64) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self
            .front_trajectory()
            .into_iter()
            .filter(|&(t, x)| t >= t_from && x > 0.0)
            .map(|(t, x)| (t.ln(), x.ln()))
            .collect();
        if pts.len() < 2 {
            return Err(Error::InvalidParams(format!("fewer than two front samples after t = {t_from}")));
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Ok(sxy / sxx)
    }

    /// `count` levels spaced `nt/16` apart, ending at the last.
    pub fn latest_levels(&self, count: usize) -> Vec<usize> {
        let last = self.u.len() - 1;
        let stride = (self.nt / 16).max(1);
        (0..count)
            .filter_map(|j| last.checked_sub(j * stride))
            .filter(|&n| n > 0)
            .collect()
    }

    /// CSV `t,x,u` on every `stride`-th level.
    pub fn write_field_csv(&self, path: &Path, stride: usize) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "t,x,u")?;
        for n in (0..self.u.len()).step_by(stride.max(1)) {
            let t = self.time(n);
            for (i, v) in self.u[n].iter().enumerate() {
                writeln!(w, "{:.16e},{:.16e},{:.16e}", t, self.x(i), v)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// CSV `t,x_f`.
    pub fn write_front_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "t,x_f")?;
        for (t, x) in self.front_trajectory() {
            writeln!(w, "{t:.16e},{x:.16e}")?;
        }
        w.flush()?;
        Ok(())
    }
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / den;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / den;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// Largest `|u(x, tₙ) - U(x tₙ^{-α/2})|` over the given levels and all nodes.
pub fn compare_self_similar(field: &PdeField, profile: &Profile, levels: &[usize]) -> f64 {
    let mut worst: f64 = 0.0;
    for &n in levels {
        let s = field.time(n).powf(-0.5 * field.alpha);
        for (i, &v) in field.u[n].iter().enumerate() {
            worst = worst.max((v - profile.value_at(field.x(i) * s)).abs());
        }
    }
    worst
}
