//! The Erdélyi-Kober operator
//!
//! ```text
//! I U(η) = 1/Γ(1-α) ∫₀¹ (1-s)^{-α} U(s^{-α/2} η) ds
//! ```
//!
//! applied to gridded profiles and to closed-form fixtures.
//!
//! All integrals are taken in the argument `w = s^{-α/2} η ≥ η`, split into
//! panels at the breakpoints of the source. With `s = (η/w)^{2/α}`,
//!
//! ```text
//! I U(η) = 1/Γ(1-α) ∫_η^∞ (1-s)^{-α} (2/α) (s/w) U(w) dw.
//! ```
//!
//! The panel starting at `w = η` carries the `(w-η)^{-α}` singularity and
//! uses a Gauss-Jacobi rule; a panel ending at the support edge with
//! `U ~ (η*-w)^e` uses a Gauss-Jacobi rule with that exponent; all other
//! panels are Gauss-Legendre. Because the kernel only depends on `w/η`, the
//! weights a node `j` gives the hat functions of cell `k` depend only on
//! `(j, k)` and are cached per `α`.

use crate::special::QuadratureRule;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock, RwLock};

/// Whether profile values hold `Y = U^{m+1}` or `U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Represents {
    Y,
    U,
}

/// Interpolation used between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FrontShape {
    /// Piecewise linear; on the cell containing `η*` the value falls
    /// linearly to zero at `η*`.
    Linear,
    /// Piecewise linear, except that on the cell containing `η*` the value
    /// is `v_k ((η*-η)/(η*-η_k))^e`.
    PowerCell(f64),
    /// Every cell interpolates in the basis `{1, (η*-η)^e}`. The front must
    /// sit on the last node.
    PowerBasis(f64),
}

impl FrontShape {
    fn exponent(self) -> f64 {
        match self {
            FrontShape::Linear => 1.0,
            FrontShape::PowerCell(e) | FrontShape::PowerBasis(e) => e,
        }
    }

    /// Shape of `v^r` when `v` has this shape.
    fn raised(self, r: f64) -> Self {
        match self {
            FrontShape::Linear => FrontShape::PowerCell(r),
            FrontShape::PowerCell(e) => FrontShape::PowerCell(e * r),
            FrontShape::PowerBasis(e) => FrontShape::PowerBasis(e * r),
        }
    }
}

/// A function sampled on `η_i = i·h` with free boundary `η*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    grid_step: f64,
    values: Vec<f64>,
    eta_star: f64,
    represents: Represents,
    front: FrontShape,
}

impl Profile {
    /// Checked constructor: `values[0] = 1`, `0 ≤ values ≤ 1`, and values
    /// vanish at nodes at or beyond `eta_star`.
    pub fn new(
        grid_step: f64,
        values: Vec<f64>,
        eta_star: f64,
        represents: Represents,
        front: FrontShape,
    ) -> Result<Self> {
        let p = Self::fixture(grid_step, values, eta_star, represents, front)?;
        if p.values[0] != 1.0 {
            return Err(Error::InvalidProfile(format!(
                "value at the origin is {}, expected 1",
                p.values[0]
            )));
        }
        if let Some((i, v)) = p
            .values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::InvalidProfile(format!(
                "value {v} at node {i} outside [0, 1]"
            )));
        }
        if let Some(i) = p
            .values
            .iter()
            .enumerate()
            .position(|(i, v)| i as f64 * grid_step >= eta_star && *v != 0.0)
        {
            return Err(Error::InvalidProfile(format!(
                "nonzero value at node {i} beyond eta_star = {eta_star}"
            )));
        }
        Ok(p)
    }

    /// Constructor for test fixtures: skips the membership checks, allows
    /// `eta_star = ∞` and values outside `[0, 1]`.
    pub fn fixture(
        grid_step: f64,
        values: Vec<f64>,
        eta_star: f64,
        represents: Represents,
        front: FrontShape,
    ) -> Result<Self> {
        if !(grid_step > 0.0) || !grid_step.is_finite() {
            return Err(Error::InvalidProfile(format!("grid step {grid_step}")));
        }
        if values.len() < 2 {
            return Err(Error::InvalidProfile("fewer than two nodes".into()));
        }
        if !(eta_star > 0.0) {
            return Err(Error::InvalidProfile(format!("eta_star {eta_star}")));
        }
        if let FrontShape::PowerCell(e) | FrontShape::PowerBasis(e) = front {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::InvalidProfile(format!("front exponent {e}")));
            }
        }
        if let FrontShape::PowerBasis(_) = front {
            let last = (values.len() - 1) as f64 * grid_step;
            if ((last - eta_star) / eta_star).abs() > 1e-12 {
                return Err(Error::InvalidProfile(
                    "power-basis profiles need eta_star on the last node".into(),
                ));
            }
        }
        Ok(Self {
            grid_step,
            values,
            eta_star,
            represents,
            front,
        })
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eta_star(&self) -> f64 {
        self.eta_star
    }

    pub fn represents(&self) -> Represents {
        self.represents
    }

    pub fn front(&self) -> FrontShape {
        self.front
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Position of the last node.
    pub fn grid_end(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.grid_step
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.grid_step
    }

    /// Index of the last node strictly below `η*`, when `η*` lies within
    /// the grid.
    pub(crate) fn front_cell(&self) -> Option<usize> {
        if self.eta_star > self.grid_end() * (1.0 + 1e-14) {
            return None;
        }
        let r = self.eta_star / self.grid_step;
        let mut k = r.ceil() as usize;
        if (k as f64 - r).abs() < 1e-9 * r.max(1.0) {
            k = r.round() as usize;
        }
        Some(k.saturating_sub(1).min(self.values.len() - 2))
    }

    /// `U = Y^{1/(m+1)}`; identity if already `U`.
    pub fn to_u(&self, m: f64) -> Profile {
        match self.represents {
            Represents::U => self.clone(),
            Represents::Y => self.mapped(1.0 / (m + 1.0), Represents::U),
        }
    }

    /// `Y = U^{m+1}`; identity if already `Y`.
    pub fn to_y(&self, m: f64) -> Profile {
        match self.represents {
            Represents::Y => self.clone(),
            Represents::U => self.mapped(m + 1.0, Represents::Y),
        }
    }

    fn mapped(&self, r: f64, represents: Represents) -> Profile {
        Profile {
            grid_step: self.grid_step,
            values: self.values.iter().map(|v| v.max(0.0).powf(r)).collect(),
            eta_star: self.eta_star,
            represents,
            front: self.front.raised(r),
        }
    }

    /// Interpolated value at `w ≥ 0`.
    pub fn value_at(&self, w: f64) -> f64 {
        let w = w.max(0.0);
        if w >= self.eta_star {
            return 0.0;
        }
        let h = self.grid_step;
        let v = &self.values;
        match self.front_cell() {
            Some(k0) => {
                let xk0 = k0 as f64 * h;
                if w >= xk0 {
                    let d = (self.eta_star - w) / (self.eta_star - xk0);
                    return v[k0] * d.powf(self.front.exponent());
                }
                let k = ((w / h) as usize).min(k0 - 1);
                match self.front {
                    FrontShape::PowerBasis(e) => {
                        let dk = self.eta_star - k as f64 * h;
                        let dk1 = dk - h;
                        let phi = basis_left(self.eta_star - w, dk, dk1, e);
                        v[k] * phi + v[k + 1] * (1.0 - phi)
                    }
                    _ => {
                        let t = w / h - k as f64;
                        v[k] * (1.0 - t) + v[k + 1] * t
                    }
                }
            }
            None => {
                let n = v.len();
                let last = self.grid_end();
                if w <= last {
                    let k = ((w / h) as usize).min(n - 2);
                    let t = w / h - k as f64;
                    v[k] * (1.0 - t) + v[k + 1] * t
                } else {
                    let slope = (v[n - 1] - v[n - 2]) / h;
                    (v[n - 1] + slope * (w - last)).clamp(0.0, 1.0)
                }
            }
        }
    }

    fn front_exponent_at_edge(&self) -> Option<f64> {
        self.front_cell().map(|_| self.front.exponent())
    }
}

/// Left basis function of the `{1, d^e}` interpolant on a cell whose
/// distances to the front are `dk > dk1 ≥ 0`.
fn basis_left(d: f64, dk: f64, dk1: f64, e: f64) -> f64 {
    let b = dk1.powf(e);
    (d.powf(e) - b) / (dk.powf(e) - b)
}

/// Something `I` can be applied to.
pub trait EkSource: Sync {
    fn value(&self, w: f64) -> f64;
    /// Points in `(eta, support_end)` where the source may lose
    /// smoothness, increasing.
    fn breakpoints_above(&self, eta: f64, out: &mut Vec<f64>);
    /// End of the support; may be infinite.
    fn support_end(&self) -> f64;
    /// `e` with `value ~ (support_end - w)^e` just inside a finite support.
    fn edge_exponent(&self) -> Option<f64> {
        None
    }
    /// `p` with `value ~ w^p` as `w → ∞` for unbounded support.
    fn growth_exponent(&self) -> f64 {
        0.0
    }
    /// Gridded profiles take a dedicated path.
    fn as_profile(&self) -> Option<&Profile> {
        None
    }
}

impl EkSource for Profile {
    fn value(&self, w: f64) -> f64 {
        self.value_at(w)
    }

    fn breakpoints_above(&self, eta: f64, out: &mut Vec<f64>) {
        let h = self.grid_step;
        let last = match self.front_cell() {
            Some(k0) => k0,
            None => self.values.len() - 1,
        };
        let first = (eta / h).floor() as usize + 1;
        for k in first..=last {
            let x = k as f64 * h;
            if x > eta * (1.0 + 1e-12) && x < self.eta_star {
                out.push(x);
            }
        }
    }

    fn support_end(&self) -> f64 {
        self.eta_star
    }

    fn edge_exponent(&self) -> Option<f64> {
        self.front_exponent_at_edge()
    }

    fn as_profile(&self) -> Option<&Profile> {
        Some(self)
    }
}

/// `U(η) = η^p` on the whole half-line.
#[derive(Debug, Clone, Copy)]
pub struct PowerLaw {
    pub p: f64,
}

impl EkSource for PowerLaw {
    fn value(&self, w: f64) -> f64 {
        w.powf(self.p)
    }
    fn breakpoints_above(&self, _eta: f64, _out: &mut Vec<f64>) {}
    fn support_end(&self) -> f64 {
        f64::INFINITY
    }
    fn growth_exponent(&self) -> f64 {
        self.p
    }
}

/// Quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EkQuadrature {
    /// Nodes of the Gauss-Jacobi rules on singular panels.
    pub jacobi_nodes: usize,
    /// Nodes of the Gauss-Legendre rule on regular panels.
    pub panel_nodes: usize,
}

impl Default for EkQuadrature {
    fn default() -> Self {
        Self {
            jacobi_nodes: 32,
            panel_nodes: 8,
        }
    }
}

/// Cached kernel weights on the scale-free grid: `rows[j][k-j]` holds the
/// weights node `j` gives to `(v_k, v_{k+1})` through cell `k`.
struct HatKernel {
    cells: usize,
    rows: Vec<Vec<[f64; 2]>>,
}

/// Weights for [`FrontShape::PowerBasis`] profiles with `n` cells and
/// exponent `e`.
struct BasisKernel {
    cells: usize,
    exponent: f64,
    rows: Vec<Vec<[f64; 2]>>,
}

struct EdgeRules {
    exponent: f64,
    last: QuadratureRule,
    first_last: QuadratureRule,
}

/// `I` for one `α`, with cached rules and kernels.
pub struct EkOperator {
    alpha: f64,
    quad: EkQuadrature,
    jacobi_nodes: usize,
    inv_gamma_1: f64,
    inv_gamma_2: f64,
    first: QuadratureRule,
    smooth: QuadratureRule,
    tail_cache: Mutex<Vec<(u64, Arc<QuadratureRule>)>>,
    edge_cache: Mutex<Vec<Arc<EdgeRules>>>,
    hat: RwLock<Arc<HatKernel>>,
    basis: Mutex<Vec<Arc<BasisKernel>>>,
}

impl std::fmt::Debug for EkOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EkOperator")
            .field("alpha", &self.alpha)
            .field("quad", &self.quad)
            .field("jacobi_nodes", &self.jacobi_nodes)
            .finish()
    }
}

type Registry = Mutex<HashMap<(u64, EkQuadrature), Arc<EkOperator>>>;

fn registry() -> &'static Registry {
    static REG: OnceLock<Registry> = OnceLock::new();
    REG.get_or_init(|| Mutex::new(HashMap::new()))
}

impl EkOperator {
    pub fn new(alpha: f64, quad: EkQuadrature) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain {
                what: "alpha",
                value: alpha,
            });
        }
        if quad.jacobi_nodes < 2 || quad.panel_nodes < 2 {
            return Err(Error::InvalidParams(format!(
                "quadrature node counts must be at least 2: {quad:?}"
            )));
        }
        let g1 = crate::special::gamma(1.0 - alpha)?;
        let g2 = crate::special::gamma(2.0 - alpha)?;
        let smooth = QuadratureRule::gauss_legendre(quad.panel_nodes)?;
        // Double the singular rule while spot checks move by more than 1e-9.
        let mut n = quad.jacobi_nodes;
        let mut first = QuadratureRule::gauss_jacobi(0.0, -alpha, n)?;
        while n < 256 {
            let finer = QuadratureRule::gauss_jacobi(0.0, -alpha, 2 * n)?;
            let moved = [1usize, 2, 16]
                .iter()
                .map(|&j| {
                    let a = hat_first_cell(alpha, j, &first, &smooth);
                    let b = hat_first_cell(alpha, j, &finer, &smooth);
                    (a[0] - b[0]).abs().max((a[1] - b[1]).abs())
                })
                .fold(0.0, f64::max);
            if moved * g1.recip() <= 1e-9 {
                break;
            }
            n *= 2;
            first = finer;
        }
        Ok(Self {
            alpha,
            quad,
            jacobi_nodes: n,
            inv_gamma_1: 1.0 / g1,
            inv_gamma_2: 1.0 / g2,
            first,
            smooth,
            tail_cache: Mutex::new(Vec::new()),
            edge_cache: Mutex::new(Vec::new()),
            hat: RwLock::new(Arc::new(HatKernel {
                cells: 0,
                rows: Vec::new(),
            })),
            basis: Mutex::new(Vec::new()),
        })
    }

    /// Process-wide operator for `(alpha, quad)`, so cached kernels are
    /// shared between solves.
    pub fn shared(alpha: f64, quad: EkQuadrature) -> Result<Arc<Self>> {
        let key = (alpha.to_bits(), quad);
        if let Some(op) = registry().lock().expect("registry").get(&key) {
            return Ok(op.clone());
        }
        let op = Arc::new(Self::new(alpha, quad)?);
        let mut reg = registry().lock().expect("registry");
        Ok(reg.entry(key).or_insert(op).clone())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Node count actually used on singular panels.
    pub fn jacobi_nodes(&self) -> usize {
        self.jacobi_nodes
    }

    fn edge_rules(&self, e: f64) -> Result<Arc<EdgeRules>> {
        let mut cache = self.edge_cache.lock().expect("edge cache");
        if let Some(r) = cache.iter().find(|r| r.exponent == e) {
            return Ok(r.clone());
        }
        let r = Arc::new(EdgeRules {
            exponent: e,
            last: QuadratureRule::gauss_jacobi(e, 0.0, self.jacobi_nodes)?,
            first_last: QuadratureRule::gauss_jacobi(e, -self.alpha, self.jacobi_nodes)?,
        });
        if cache.len() >= 8 {
            cache.remove(0);
        }
        cache.push(r.clone());
        Ok(r)
    }

    fn tail_rule(&self, b: f64, full: bool) -> Result<Arc<QuadratureRule>> {
        let key = b.to_bits() ^ u64::from(full);
        let mut cache = self.tail_cache.lock().expect("tail cache");
        if let Some((_, r)) = cache.iter().find(|(k, _)| *k == key) {
            return Ok(r.clone());
        }
        let a = if full { -self.alpha } else { 0.0 };
        let r = Arc::new(QuadratureRule::gauss_jacobi(a, b, self.jacobi_nodes)?);
        if cache.len() >= 8 {
            cache.remove(0);
        }
        cache.push((key, r.clone()));
        Ok(r)
    }

    /// `I U(η)` for any source.
    pub fn apply<S: EkSource + ?Sized>(&self, src: &S, eta: f64) -> Result<f64> {
        if !(eta >= 0.0) {
            return Err(Error::Domain {
                what: "eta",
                value: eta,
            });
        }
        if let Some(p) = src.as_profile() {
            if p.front_cell().is_some() {
                return self.apply_profile(p, eta);
            }
        }
        if eta == 0.0 {
            return Ok(src.value(0.0) * self.inv_gamma_2);
        }
        let end = src.support_end();
        if eta >= end {
            return Ok(0.0);
        }
        let a = self.alpha;
        let mut pts = Vec::new();
        src.breakpoints_above(eta, &mut pts);
        // a breakpoint within rounding of η would leave the singularity
        // on a regular panel
        pts.retain(|&x| x > eta * (1.0 + 1e-12));
        let mut total = 0.0;
        let mut add = |w: f64, _: f64, wt: f64| total += wt * src.value(w);

        if end.is_finite() {
            pts.push(end);
            let edge = match src.edge_exponent() {
                Some(e) => Some(self.edge_rules(e)?),
                None => None,
            };
            let npan = pts.len();
            let mut lo = eta;
            for (i, &hi) in pts.iter().enumerate() {
                let e = if i + 1 == npan { edge.as_deref() } else { None };
                self.for_nodes(eta, lo, hi, i == 0, e, &mut add);
                lo = hi;
            }
        } else {
            let p = src.growth_exponent();
            let b = -0.5 * a * p;
            if pts.is_empty() {
                // single tail over the whole of s ∈ (0, 1)
                let rule = self.tail_rule(b, true)?;
                let s = rule.apply(|t| t.powf(-b) * src.value(eta * t.powf(-0.5 * a)));
                return Ok(s * self.inv_gamma_1);
            }
            let mut lo = eta;
            for (i, &hi) in pts.iter().enumerate() {
                self.for_nodes(eta, lo, hi, i == 0, None, &mut add);
                lo = hi;
            }
            for _ in 0..4 {
                self.for_nodes(eta, lo, 2.0 * lo, false, None, &mut add);
                lo *= 2.0;
            }
            let rule = self.tail_rule(b, false)?;
            let sw = (eta / lo).powf(2.0 / a);
            let s = rule.apply(|t| {
                let s = sw * t;
                t.powf(-b) * (1.0 - s).powf(-a) * src.value(eta * s.powf(-0.5 * a))
            });
            total += sw * s;
        }
        Ok(total * self.inv_gamma_1)
    }

    /// Profiles with their front inside the grid, in grid units. Shares the
    /// cell weights with the cached kernels, so the scalar and grid paths
    /// agree to rounding.
    fn apply_profile(&self, p: &Profile, eta: f64) -> Result<f64> {
        if eta == 0.0 {
            return Ok(p.values()[0] * self.inv_gamma_2);
        }
        if eta >= p.eta_star() {
            return Ok(0.0);
        }
        let mut x = eta / p.grid_step();
        if (x - x.round()).abs() <= 1e-9 * x.max(1.0) {
            x = x.round();
        }
        let v = p.values();
        let kx = x.floor() as usize;
        match p.front() {
            FrontShape::PowerBasis(e) => {
                let n = p.len() - 1;
                let edge = self.edge_rules(e)?;
                let mut s = 0.0;
                for k in kx..n {
                    let w = self.basis_weights(x, k, n, e, &edge);
                    s += w[0] * v[k] + w[1] * v[k + 1];
                }
                Ok(s * self.inv_gamma_1)
            }
            front => {
                let k0 = p.front_cell().expect("front inside grid");
                let edge = self.edge_rules(front.exponent())?;
                let mut s = 0.0;
                for k in kx..k0 {
                    let w = self.hat_weights(x, k);
                    s += w[0] * v[k] + w[1] * v[k + 1];
                }
                let f = self.front_panel(p, x, k0, &edge);
                Ok(s * self.inv_gamma_1 + f * self.inv_gamma_1)
            }
        }
    }

    /// Visits the quadrature nodes of `∫_lo^hi K(η, w) f(w) dw`,
    /// `K = (1-s)^{-α} (2/α) s/w`, as `visit(w, w - lo, weight)`.
    ///
    /// `K` decays like `w^{-1-2/α}`, so the interval is cut into pieces of
    /// `ln w`-width at most `α`. `first` marks `lo = η`. With `edge`, `f`
    /// is taken to vanish like `(hi - w)^e` and the weight includes
    /// `(hi - w)^{-e}` in units of the last piece.
    fn for_nodes(
        &self,
        eta: f64,
        lo: f64,
        hi: f64,
        first: bool,
        edge: Option<&EdgeRules>,
        visit: impl FnMut(f64, f64, f64),
    ) {
        nodes_in(self.alpha, &self.first, &self.smooth, eta, lo, hi, first, edge, visit);
    }

    /// Weights of cell `[k, k+1]` on `(v_k, v_{k+1})` for linear
    /// interpolation, at `η = x` in grid units (`x ≤ k + 1`).
    fn hat_weights(&self, x: f64, k: usize) -> [f64; 2] {
        let kf = k as f64;
        let lo = kf.max(x);
        let off = lo - kf;
        let mut w = [0.0; 2];
        self.for_nodes(x, lo, kf + 1.0, kf <= x, None, |_, d, wt| {
            let r = off + d;
            w[0] += wt * (1.0 - r);
            w[1] += wt * r;
        });
        w
    }

    /// Weights of cell `[k, k+1]` for the `{1, d^e}` interpolant of a
    /// profile whose front is node `n`.
    fn basis_weights(&self, x: f64, k: usize, n: usize, e: f64, edge: &EdgeRules) -> [f64; 2] {
        let kf = k as f64;
        let lo = kf.max(x);
        let dk = (n - k) as f64;
        let dlo = n as f64 - lo;
        let mut w = [0.0; 2];
        if k + 1 == n {
            // v_n = 0: only the left basis function, (d/dk)^e
            self.for_nodes(x, lo, kf + 1.0, kf <= x, Some(edge), |_, d, wt| {
                w[0] += wt * ((dlo - d) / dk).powf(e);
            });
            return w;
        }
        self.for_nodes(x, lo, kf + 1.0, kf <= x, None, |_, d, wt| {
            let phi = basis_left(dlo - d, dk, dk - 1.0, e);
            w[0] += wt * phi;
            w[1] += wt * (1.0 - phi);
        });
        w
    }

    /// Integral over `[max(k0, x), η*]` in grid units, where the profile is
    /// `v_{k0} ((η*-w)/(η*-k0))^e`.
    fn front_panel(&self, p: &Profile, x: f64, k0: usize, edge: &EdgeRules) -> f64 {
        let es = p.eta_star() / p.grid_step();
        let kf = k0 as f64;
        let lo = kf.max(x);
        let (v0, e) = (p.values()[k0], edge.exponent);
        let span = es - kf;
        let dlo = es - lo;
        let mut s = 0.0;
        self.for_nodes(x, lo, es, kf <= x, Some(edge), |_, d, wt| {
            s += wt * v0 * ((dlo - d) / span).powf(e);
        });
        s
    }

    /// `I` at every node of `profile`.
    pub fn apply_grid(&self, profile: &Profile) -> Result<Vec<f64>> {
        let n = profile.len();
        if let FrontShape::PowerBasis(e) = profile.front() {
            let kern = self.basis_kernel(n - 1, e)?;
            return Ok(self.apply_basis(&kern, profile.values()));
        }
        let k0 = match profile.front_cell() {
            Some(k0) => k0,
            None => {
                return (0..n)
                    .into_par_iter()
                    .map(|j| self.apply(profile, profile.node(j)))
                    .collect();
            }
        };
        let hat = self.hat_kernel(k0)?;
        let edge = self.edge_rules(profile.front().exponent())?;
        let v = profile.values();
        let out = (0..n)
            .into_par_iter()
            .map(|j| {
                if j == 0 {
                    return v[0] * self.inv_gamma_2;
                }
                if j > k0 || profile.node(j) >= profile.eta_star() {
                    return 0.0;
                }
                let mut s = 0.0;
                if j < k0 {
                    let row = &hat.rows[j];
                    for k in j..k0 {
                        let wgt = row[k - j];
                        s += wgt[0] * v[k] + wgt[1] * v[k + 1];
                    }
                }
                let f = self.front_panel(profile, j as f64, k0, &edge);
                s * self.inv_gamma_1 + f * self.inv_gamma_1
            })
            .collect();
        Ok(out)
    }

    fn apply_basis(&self, kern: &BasisKernel, v: &[f64]) -> Vec<f64> {
        let n = kern.cells;
        (0..=n)
            .into_par_iter()
            .map(|j| {
                if j == 0 {
                    return v[0] * self.inv_gamma_2;
                }
                if j == n {
                    return 0.0;
                }
                let row = &kern.rows[j];
                let mut s = 0.0;
                for k in j..n {
                    let wgt = row[k - j];
                    s += wgt[0] * v[k] + wgt[1] * v[k + 1];
                }
                s * self.inv_gamma_1
            })
            .collect()
    }

    /// Hat-function weights covering cells `0..cells`.
    fn hat_kernel(&self, cells: usize) -> Result<Arc<HatKernel>> {
        {
            let cur = self.hat.read().expect("hat kernel");
            if cur.cells >= cells {
                return Ok(cur.clone());
            }
        }
        let target = cells.div_ceil(512) * 512;
        let rows: Vec<Vec<[f64; 2]>> = (0..target)
            .into_par_iter()
            .map(|j| {
                if j == 0 {
                    return Vec::new();
                }
                (j..target).map(|k| self.hat_weights(j as f64, k)).collect()
            })
            .collect();
        let kern = Arc::new(HatKernel {
            cells: target,
            rows,
        });
        let mut cur = self.hat.write().expect("hat kernel");
        if cur.cells < target {
            *cur = kern.clone();
        }
        Ok(cur.clone())
    }

    fn basis_kernel(&self, cells: usize, e: f64) -> Result<Arc<BasisKernel>> {
        {
            let cache = self.basis.lock().expect("basis kernel");
            if let Some(k) = cache
                .iter()
                .find(|k| k.cells == cells && k.exponent == e)
            {
                return Ok(k.clone());
            }
        }
        let edge = self.edge_rules(e)?;
        let rows: Vec<Vec<[f64; 2]>> = (0..cells)
            .into_par_iter()
            .map(|j| {
                if j == 0 {
                    return Vec::new();
                }
                (j..cells)
                    .map(|k| self.basis_weights(j as f64, k, cells, e, &edge))
                    .collect()
            })
            .collect();
        let kern = Arc::new(BasisKernel {
            cells,
            exponent: e,
            rows,
        });
        let mut cache = self.basis.lock().expect("basis kernel");
        if cache.len() >= 2 {
            cache.remove(0);
        }
        cache.push(kern.clone());
        Ok(kern)
    }
}

#[allow(clippy::too_many_arguments)]
fn nodes_in(
    a: f64,
    first_rule: &QuadratureRule,
    smooth: &QuadratureRule,
    eta: f64,
    lo: f64,
    hi: f64,
    first: bool,
    edge: Option<&EdgeRules>,
    mut visit: impl FnMut(f64, f64, f64),
) {
    // Regular pieces stay at least their own width away from η and have
    // `ln w`-width at most α; only the singular piece touches η.
    let grow = a.exp();
    let mut bounds = vec![lo];
    let mut c = lo;
    if first {
        c = hi.min(lo * grow);
        bounds.push(c);
    }
    while c < hi {
        c = hi.min((2.0 * c - eta).min(c * grow));
        bounds.push(c);
    }
    let pieces = bounds.len() - 1;
    for i in 0..pieces {
        let (p_lo, p_hi) = (bounds[i], bounds[i + 1]);
        let last = i + 1 == pieces;
        let len = p_hi - p_lo;
        let sing = first && i == 0;
        let e = if last { edge } else { None };
        let rule = match (sing, e) {
            (true, Some(e)) => &e.first_last,
            (true, None) => first_rule,
            (false, Some(e)) => &e.last,
            (false, None) => smooth,
        };
        let off = p_lo - eta;
        let from_lo = p_lo - lo;
        for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let d = if sing { t * len } else { off + t * len };
            let w = p_lo + t * len;
            let (k, s) = kernel(a, eta, d, sing.then_some(t));
            let mut base = wt * len * k * (2.0 / a) * s / w;
            if let Some(e) = e {
                base /= (1.0 - t).powf(e.exponent);
            }
            visit(w, from_lo + t * len, base);
        }
    }
}

/// `(1-s)^{-α}` and `s = (η/w)^{2/α}` from `d = w - η`. On a singular
/// piece `t` is the position within it and the factor `t^{-α}` carried by
/// the Gauss-Jacobi weight is divided out.
#[inline]
fn kernel(a: f64, eta: f64, d: f64, t: Option<f64>) -> (f64, f64) {
    let x = -(2.0 / a) * (d / eta).ln_1p();
    let one_minus_s = -x.exp_m1();
    let s = x.exp();
    let k = match t {
        Some(t) => (one_minus_s / t).powf(-a),
        None => one_minus_s.powf(-a),
    };
    (k, s)
}

/// First-cell weights at node `j` with a given singular rule; used to size
/// that rule.
fn hat_first_cell(a: f64, j: usize, rule: &QuadratureRule, smooth: &QuadratureRule) -> [f64; 2] {
    let eta = j as f64;
    let mut w = [0.0; 2];
    nodes_in(a, rule, smooth, eta, eta, eta + 1.0, true, None, |_, d, wt| {
        w[0] += wt * (1.0 - d);
        w[1] += wt * d;
    });
    w
}

/// `I U(η)` with the shared operator for `alpha` and default quadrature.
pub fn ek_apply(profile: &Profile, eta: f64, alpha: f64) -> Result<f64> {
    EkOperator::shared(alpha, EkQuadrature::default())?.apply(profile, eta)
}

/// `I U` at every node of `profile`.
pub fn ek_apply_grid(profile: &Profile, alpha: f64) -> Result<Vec<f64>> {
    EkOperator::shared(alpha, EkQuadrature::default())?.apply_grid(profile)
}
