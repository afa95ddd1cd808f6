//! Gamma function and Gauss quadrature on (0, 1).

use crate::{Error, Result};
use std::f64::consts::PI;

// Lanczos coefficients, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for positive arguments.
///
/// The argument is shifted into `[1, 2)` with the recurrence before the
/// Lanczos sum is applied, which keeps the relative error near 1e-15.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            what: "gamma argument",
            value: x,
        });
    }
    if x > 171.0 {
        return Ok(f64::INFINITY);
    }
    if x.fract() == 0.0 {
        return Ok((2..x as u32).map(f64::from).product());
    }
    let mut z = x;
    let mut scale = 1.0;
    while z < 1.0 {
        scale /= z;
        z += 1.0;
    }
    while z >= 2.0 {
        z -= 1.0;
        scale *= z;
    }
    Ok(scale * lanczos(z))
}

fn lanczos(x: f64) -> f64 {
    let x = x - 1.0;
    let mut t = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        t += c / (x + i as f64);
    }
    let w = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * w.powf(x + 0.5) * (-w).exp() * t
}

/// Which weight a [`QuadratureRule`] integrates against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleKind {
    /// Weight `(1-t)^a t^b` on (0, 1).
    GaussJacobi { a: f64, b: f64 },
    /// Unit weight on (0, 1).
    GaussLegendre,
}

/// Nodes and weights on the open interval (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: RuleKind,
}

impl QuadratureRule {
    /// Gauss rule for the weight `(1-t)^a t^b` on (0, 1), exact for
    /// polynomials of degree `2n-1`.
    pub fn gauss_jacobi(a: f64, b: f64, n: usize) -> Result<Self> {
        let nodes = jacobi_nodes(a, b, n)?;
        let scale = 2f64.powf(-(a + b + 1.0));
        Ok(Self {
            nodes: nodes.iter().map(JacobiNode::t).collect(),
            weights: nodes.iter().map(|nd| nd.weight * scale).collect(),
            kind: if a == 0.0 && b == 0.0 {
                RuleKind::GaussLegendre
            } else {
                RuleKind::GaussJacobi { a, b }
            },
        })
    }

    pub fn gauss_legendre(n: usize) -> Result<Self> {
        Self::gauss_jacobi(0.0, 0.0, n)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(t_i)`.
    pub fn apply(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

/// Rule for `∫₀¹ (1-s)^{-α} p(s) ds`.
pub fn jacobi_rule(alpha: f64, n: usize) -> Result<QuadratureRule> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            what: "alpha",
            value: alpha,
        });
    }
    QuadratureRule::gauss_jacobi(-alpha, 0.0, n)
}

/// Gauss-Jacobi nodes and weights on (-1, 1) for the weight
/// `(1-x)^a (1+x)^b`, nodes increasing.
pub fn gauss_jacobi(a: f64, b: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let nodes = jacobi_nodes(a, b, n)?;
    Ok((
        nodes.iter().map(|nd| nd.x()).collect(),
        nodes.iter().map(|nd| nd.weight).collect(),
    ))
}

/// A node stored as its distance `y` to the nearer endpoint so that
/// `1 ∓ x` keeps full relative precision.
struct JacobiNode {
    y: f64,
    upper: bool,
    weight: f64,
}

impl JacobiNode {
    fn x(&self) -> f64 {
        if self.upper {
            1.0 - self.y
        } else {
            self.y - 1.0
        }
    }

    /// Node mapped to (0, 1).
    fn t(&self) -> f64 {
        if self.upper {
            1.0 - 0.5 * self.y
        } else {
            0.5 * self.y
        }
    }
}

// Nodes come from the eigenvalues of the Jacobi matrix and are polished by
// Newton steps in y; the weights use the derivative formula with the
// gamma-ratio prefactor accumulated as a product.
fn jacobi_nodes(a: f64, b: f64, n: usize) -> Result<Vec<JacobiNode>> {
    if !(a > -1.0) || !(b > -1.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain {
            what: "Jacobi exponent",
            value: if a > -1.0 { b } else { a },
        });
    }
    if n < 1 {
        return Err(Error::Domain {
            what: "node count",
            value: n as f64,
        });
    }
    let ab = a + b;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    diag[0] = (b - a) / (ab + 2.0);
    for k in 1..n {
        let kf = k as f64;
        let c = 2.0 * kf + ab;
        diag[k] = (b * b - a * a) / (c * (c + 2.0));
        off[k - 1] = if k == 1 {
            (4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))).sqrt()
        } else {
            (4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (c * c * (c + 1.0) * (c - 1.0))).sqrt()
        };
    }
    tridiagonal_eigenvalues(&mut diag, &mut off)?;
    diag.sort_by(f64::total_cmp);

    let mut prefactor = gamma(a + 1.0)? * gamma(b + 1.0)? / gamma(ab + 2.0)?;
    for k in 1..=n {
        let kf = k as f64;
        prefactor *= (kf + a) * (kf + b) / kf;
        if k >= 2 {
            prefactor /= kf + ab;
        }
    }
    prefactor *= 2f64.powf(ab + 1.0);

    let nf = n as f64;
    let mut out = Vec::with_capacity(n);
    for &x in &diag {
        // P_n^{(a,b)}(-x) = (-1)^n P_n^{(b,a)}(x): reflect lower nodes.
        let upper = x >= 0.0;
        let (pa, pb) = if upper { (a, b) } else { (b, a) };
        let mut y = 1.0 - x.abs();
        let eval = |y: f64| {
            if y * nf * nf <= SERIES_LIMIT {
                jacobi_series(pa, pb, n, y)
            } else {
                jacobi_near_one(pa, pb, n, y)
            }
        };
        for _ in 0..6 {
            let (p, dp) = eval(y);
            let step = p / dp;
            y += step;
            if step.abs() <= 1e-17 * y.max(1e-300) || step == 0.0 {
                break;
            }
        }
        let (_, dp) = eval(y);
        out.push(JacobiNode {
            y,
            upper,
            weight: prefactor / (y * (2.0 - y) * dp * dp),
        });
    }
    Ok(out)
}

/// Largest `n²y` at which [`jacobi_series`] replaces the recurrence.
const SERIES_LIMIT: f64 = 16.0;

/// `P_n^{(a,b)}(1-y)` and its derivative in `x` from the terminating series
/// `P_n(1) ₂F₁(-n, n+a+b+1; a+1; y/2)`. Near `x = 1` the recurrence rounds
/// `1 - y` and loses the relative precision of `y`; the series does not.
fn jacobi_series(a: f64, b: f64, n: usize, y: f64) -> (f64, f64) {
    let nf = n as f64;
    let z = 0.5 * y;
    let (mut f, mut df) = (1.0, 0.0);
    let mut c = 1.0;
    let mut zk = 1.0;
    for k in 1..=n {
        let kf = k as f64;
        c *= (kf - 1.0 - nf) * (nf + a + b + kf) / ((a + kf) * kf);
        df += kf * c * zk;
        zk *= z;
        f += c * zk;
    }
    let p1: f64 = (1..=n).map(|k| (k as f64 + a) / k as f64).product();
    (p1 * f, -0.5 * p1 * df)
}

/// `P_n^{(a,b)}(1-y)` and its derivative in `x`, with every affine
/// coefficient rewritten in `y`.
fn jacobi_near_one(a: f64, b: f64, n: usize, y: f64) -> (f64, f64) {
    let ab = a + b;
    let mut p0 = 1.0;
    let mut p1 = (a + 1.0) - 0.5 * (ab + 2.0) * y;
    for k in 2..=n {
        let kf = k as f64;
        let c = 2.0 * kf + ab;
        let a1 = 2.0 * kf * (kf + ab) * (c - 2.0);
        let a2 = (c - 1.0) * (a * a - b * b);
        let a3 = (c - 2.0) * (c - 1.0) * c;
        let a4 = 2.0 * (kf + a - 1.0) * (kf + b - 1.0) * c;
        let p2 = ((a2 + a3 - a3 * y) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let c = 2.0 * nf + ab;
    if n == 1 {
        p0 = 1.0;
    }
    let dp = (nf * (a - b - c + c * y) * p1 + 2.0 * (nf + a) * (nf + b) * p0) / (c * y * (2.0 - y));
    (p1, dp)
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL.
/// `off[i]` couples rows `i` and `i+1`; both slices are overwritten.
fn tridiagonal_eigenvalues(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n > 0 {
        e[n - 1] = 0.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut mm = l;
            while mm + 1 < n {
                let dd = d[mm].abs() + d[mm + 1].abs();
                if e[mm].abs() <= f64::EPSILON * dd {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Eigen);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[mm] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = mm;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let bb = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[mm] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * bb;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - bb;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[mm] = 0.0;
        }
    }
    Ok(())
}

/// Composite Simpson rule on equally spaced samples; needs an odd number
/// of points (an even number of panels).
pub fn simpson(values: &[f64], h: f64) -> Result<f64> {
    let n = values.len();
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::Domain {
            what: "Simpson sample count",
            value: n as f64,
        });
    }
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    Ok(s * h / 3.0)
}
