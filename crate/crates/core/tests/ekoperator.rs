#![allow(clippy::excessive_precision, clippy::approx_constant)]

use fracpme::ekoperator::{ek_apply, ek_apply_grid, EkSource, PowerLaw};
use fracpme::special::simpson;
use fracpme::{EkOperator, EkQuadrature, FrontShape, Profile, Represents};
use proptest::prelude::*;

// Γ(1-αp/2)/Γ(2-α-αp/2), mpmath at 30 digits.
const RATIOS: [(f64, f64, f64); 12] = [
    (0.25, 0.0, 1.0880652521310173081),
    (0.25, 0.5, 1.1476808783351550623),
    (0.25, 1.0, 1.2153508991515020257),
    (0.25, 2.0, 1.3827346780725867011),
    (0.5, 0.0, 1.1283791670955125739),
    (0.5, 0.5, 1.2258248667046638859),
    (0.5, 1.0, 1.351956480134569458),
    (0.5, 2.0, 1.7724538509055160273),
    (0.75, 0.0, 1.1032626513208372574),
    (0.75, 0.5, 1.1890235111278675072),
    (0.75, 1.0, 1.3164922172823017448),
    (0.75, 2.0, 2.0455313442263373432),
];

fn op(alpha: f64) -> std::sync::Arc<EkOperator> {
    EkOperator::shared(alpha, EkQuadrature::default()).unwrap()
}

/// `η^p` sampled on `[0, L]` with step `h` and linearly interpolated there;
/// exact beyond `L`.
struct GriddedPower {
    h: f64,
    nodes: usize,
    p: f64,
}

impl GriddedPower {
    fn end(&self) -> f64 {
        self.nodes as f64 * self.h
    }
}

impl EkSource for GriddedPower {
    fn value(&self, w: f64) -> f64 {
        if w >= self.end() {
            return w.powf(self.p);
        }
        let k = (w / self.h) as usize;
        let t = w / self.h - k as f64;
        let a = (k as f64 * self.h).powf(self.p);
        let b = ((k + 1) as f64 * self.h).powf(self.p);
        a * (1.0 - t) + b * t
    }
    fn breakpoints_above(&self, eta: f64, out: &mut Vec<f64>) {
        let first = (eta / self.h).floor() as usize + 1;
        out.extend((first..=self.nodes).map(|k| k as f64 * self.h).filter(|&x| x > eta));
    }
    fn support_end(&self) -> f64 {
        f64::INFINITY
    }
    fn growth_exponent(&self) -> f64 {
        self.p
    }
}

fn constant_fixture(h: f64, n: usize) -> Profile {
    Profile::fixture(h, vec![1.0; n], f64::INFINITY, Represents::U, FrontShape::Linear).unwrap()
}

#[test]
fn constant_maps_to_inverse_gamma() {
    for &(alpha, p, ratio) in RATIOS.iter().filter(|r| r.1 == 0.0) {
        assert_eq!(p, 0.0);
        let prof = constant_fixture(0.1, 11);
        for eta in [0.0, 0.05, 0.5, 1.0, 3.7] {
            let v = ek_apply(&prof, eta, alpha).unwrap();
            assert!((v / ratio - 1.0).abs() < 1e-12, "alpha {alpha} eta {eta}: {v}");
        }
        for v in ek_apply_grid(&prof, alpha).unwrap() {
            assert!((v / ratio - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn zero_profile_maps_to_zero() {
    let z = Profile::fixture(0.1, vec![0.0; 12], 1.1, Represents::U, FrontShape::Linear).unwrap();
    for alpha in [0.25, 0.5, 0.75] {
        assert!(ek_apply_grid(&z, alpha).unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(ek_apply(&z, 0.33, alpha).unwrap(), 0.0);
    }
}

#[test]
fn power_law_closed_form() {
    for &(alpha, p, ratio) in &RATIOS {
        let o = op(alpha);
        for eta in [0.1, 0.77, 2.5] {
            let v = o.apply(&PowerLaw { p }, eta).unwrap();
            let expect = ratio * eta.powf(p);
            assert!((v / expect - 1.0).abs() < 1e-12, "alpha {alpha} p {p} eta {eta}: {v} vs {expect}");
        }
    }
}

#[test]
fn gridded_power_law_matches_closed_form() {
    for &(alpha, p, ratio) in RATIOS.iter().filter(|r| r.1 > 0.0) {
        assert!(p < 2.0 / alpha);
        let src = GriddedPower { h: 1e-5, nodes: 300_000, p };
        let o = op(alpha);
        for eta in [0.1, 0.5, 0.7373, 2.0] {
            let v = o.apply(&src, eta).unwrap();
            let expect = ratio * eta.powf(p);
            let rel = (v / expect - 1.0).abs();
            assert!(rel <= 1e-8, "alpha {alpha} p {p} eta {eta}: rel {rel:e}");
        }
    }
}

#[test]
fn gridded_power_law_converges_second_order() {
    for alpha in [0.25, 0.5, 0.75] {
        for &(a, p, ratio) in RATIOS.iter().filter(|r| r.0 == alpha && (r.1 == 0.5 || r.1 == 2.0)) {
            let o = op(a);
            let eta: f64 = 0.5;
            let expect = ratio * eta.powf(p);
            let err = |h: f64| {
                let src = GriddedPower { h, nodes: (2.0 / h).round() as usize, p };
                (o.apply(&src, eta).unwrap() - expect).abs()
            };
            let (e1, e2) = (err(0.02), err(0.01));
            assert!(e1 / e2 >= 3.5, "alpha {a} p {p}: {e1:e} -> {e2:e}");
        }
    }
}

fn bump(w: f64) -> f64 {
    if w >= 1.0 {
        0.0
    } else {
        (1.0 - w * w).powi(2)
    }
}

/// Reference in `s`, split at `s = 1/2`. Above, `s = 1 - v^{1/(1-α)}` turns
/// `(1-s)^{-α} ds` into `dv/(1-α)`; below, `u = ln s` resolves the layer
/// where `η s^{-α/2}` sweeps the support. Simpson on both.
fn bump_reference(eta: f64, alpha: f64) -> f64 {
    let g1 = fracpme::special::gamma(1.0 - alpha).unwrap();
    if eta == 0.0 {
        return bump(0.0) / ((1.0 - alpha) * g1);
    }
    let f = |s: f64| bump(eta * s.powf(-0.5 * alpha));
    let n = 20_000;
    let s_min = eta.powf(2.0 / alpha);
    let s_mid = 0.5f64.max(s_min);
    let v_max = (1.0 - s_mid).powf(1.0 - alpha);
    let dv = v_max / n as f64;
    let upper: Vec<f64> = (0..=n)
        .map(|i| f((1.0 - (i as f64 * dv).powf(1.0 / (1.0 - alpha))).max(s_mid)))
        .collect();
    let mut total = simpson(&upper, dv).unwrap() / (1.0 - alpha);
    if s_min < s_mid {
        let (u0, u1) = (s_min.ln(), s_mid.ln());
        let du = (u1 - u0) / n as f64;
        let lower: Vec<f64> = (0..=n)
            .map(|i| {
                let s = (u0 + i as f64 * du).exp();
                (1.0 - s).powf(-alpha) * f(s) * s
            })
            .collect();
        total += simpson(&lower, du).unwrap();
    }
    total / g1
}

fn bump_profile(n: usize) -> Profile {
    let h = 1.0 / n as f64;
    let v = (0..=n).map(|i| bump(i as f64 * h)).collect();
    Profile::fixture(h, v, 1.0, Represents::U, FrontShape::Linear).unwrap()
}

#[test]
fn truncated_bump_matches_reference() {
    for alpha in [0.25, 0.5, 0.75] {
        let mut prev: Option<f64> = None;
        for n in [250, 500, 1000] {
            let prof = bump_profile(n);
            let mut err: f64 = 0.0;
            for eta in [0.0, 0.1, 0.45, 0.8, 0.97] {
                let v = ek_apply(&prof, eta, alpha).unwrap();
                let r = bump_reference(eta, alpha);
                assert!(r.is_finite());
                err = err.max((v - r).abs());
            }
            assert!(err < 2e-5 * (250.0 / n as f64).powi(2), "alpha {alpha} n {n}: {err:e}");
            if let Some(p) = prev {
                assert!(p / err >= 3.5, "alpha {alpha} n {n}: ratio {}", p / err);
            }
            prev = Some(err);
        }
    }
}

#[test]
fn grid_matches_scalar() {
    for alpha in [0.25, 0.5, 0.75] {
        for (eta_star, front) in [
            (1.0, FrontShape::Linear),
            (0.9537, FrontShape::Linear),
            (0.9537, FrontShape::PowerCell(0.4)),
        ] {
            let n = 700;
            let h = 1.0 / 600.0;
            let v: Vec<f64> = (0..n)
                .map(|i| {
                    let x = i as f64 * h;
                    if x >= eta_star { 0.0 } else { (1.0 - x / eta_star).sqrt() }
                })
                .collect();
            let prof = Profile::new(h, v, eta_star, Represents::U, front).unwrap();
            let grid = ek_apply_grid(&prof, alpha).unwrap();
            for (j, g) in grid.iter().enumerate() {
                let s = ek_apply(&prof, prof.node(j), alpha).unwrap();
                assert!((g - s).abs() <= 1e-14, "alpha {alpha} node {j}: {g} vs {s}");
            }
        }
    }
}

#[test]
fn power_basis_grid_matches_scalar() {
    let e = 0.75;
    let n = 300;
    let h = 1.3 / n as f64;
    let v: Vec<f64> = (0..=n).map(|i| (1.0 - i as f64 / n as f64).powf(e)).collect();
    let prof = Profile::new(h, v, 1.3, Represents::U, FrontShape::PowerBasis(e)).unwrap();
    for alpha in [0.25, 0.75] {
        let grid = ek_apply_grid(&prof, alpha).unwrap();
        for j in [0, 1, 17, 150, 299, 300] {
            let s = ek_apply(&prof, prof.node(j), alpha).unwrap();
            assert!((grid[j] - s).abs() <= 1e-14, "alpha {alpha} node {j}: {} vs {s}", grid[j]);
        }
    }
}

/// Random nonincreasing profile in M with support `[0, eta_star]`.
fn monotone_profile(steps: Vec<f64>, eta_star: f64, h: f64) -> Profile {
    let total: f64 = steps.iter().sum::<f64>().max(1e-12);
    let n = (eta_star / h).ceil() as usize + 3;
    let k = steps.len();
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        let x = i as f64 * h;
        if x >= eta_star {
            v.push(0.0);
            continue;
        }
        let pos = x / eta_star * k as f64;
        let j = pos as usize;
        let done: f64 = steps[..j].iter().sum::<f64>() + steps[j] * (pos - j as f64);
        v.push((1.0 - done / total).clamp(0.0, 1.0));
    }
    v[0] = 1.0;
    Profile::new(h, v, eta_star, Represents::U, FrontShape::Linear).unwrap()
}

fn inv_gamma_2(alpha: f64) -> f64 {
    1.0 / fracpme::special::gamma(2.0 - alpha).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bounded_for_members_of_m(
        alpha in 0.1f64..0.9,
        steps in prop::collection::vec(0.0f64..1.0, 3..8),
        eta_star in 0.3f64..2.0,
    ) {
        let prof = monotone_profile(steps, eta_star, 0.01);
        let bound = inv_gamma_2(alpha) + 1e-10;
        for v in ek_apply_grid(&prof, alpha).unwrap() {
            prop_assert!((0.0..=bound).contains(&v), "{v} vs {bound}");
        }
    }

    #[test]
    fn monotone_in_input(
        alpha in 0.1f64..0.9,
        steps in prop::collection::vec(0.0f64..1.0, 3..8),
        eta_star in 0.3f64..2.0,
        shrink in prop::collection::vec(0.0f64..1.0, 300),
    ) {
        let hi = monotone_profile(steps, eta_star, 0.01);
        let mut lo_vals = hi.values().to_vec();
        for (i, v) in lo_vals.iter_mut().enumerate().skip(1) {
            *v *= shrink[i % shrink.len()];
        }
        let lo = Profile::fixture(0.01, lo_vals, eta_star, Represents::U, FrontShape::Linear).unwrap();
        let a = ek_apply_grid(&lo, alpha).unwrap();
        let b = ek_apply_grid(&hi, alpha).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(*x <= *y + 1e-15);
        }
    }

    #[test]
    fn linear_in_input(
        alpha in 0.1f64..0.9,
        u1 in prop::collection::vec(-2.0f64..2.0, 40),
        u2 in prop::collection::vec(-2.0f64..2.0, 40),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let h = 0.05;
        let es = 39.0 * h;
        let mk = |v: Vec<f64>| {
            let mut v = v;
            v[39] = 0.0;
            Profile::fixture(h, v, es, Represents::U, FrontShape::Linear).unwrap()
        };
        let mix: Vec<f64> = u1.iter().zip(&u2).map(|(x, y)| a * x + b * y).collect();
        let (p1, p2, pm) = (mk(u1), mk(u2), mk(mix));
        let o = op(alpha);
        for eta in [0.0, 0.13, 0.9, 1.7] {
            let l = o.apply(&pm, eta).unwrap();
            let r = a * o.apply(&p1, eta).unwrap() + b * o.apply(&p2, eta).unwrap();
            prop_assert!((l - r).abs() <= 1e-12 * (1.0 + l.abs()), "{l} vs {r}");
        }
    }
}
