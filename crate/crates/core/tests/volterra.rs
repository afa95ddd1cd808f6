mod common;

use fracpme::bounds::{beta0, eta1, eta2, g1, g2};
use fracpme::special::gamma;
use fracpme::volterra::*;
use fracpme::{Error, FrontShape, ProblemParams, Profile, Represents};

fn params() -> ProblemParams {
    ProblemParams::new(0.5, 2.0).unwrap()
}

fn converged(beta: f64, p: &ProblemParams) -> (Profile, FixedPointDiagnostics) {
    picard_solve(beta, p, &SolverConfig::default()).unwrap()
}

#[test]
fn s_is_one_at_the_origin() {
    let p = params();
    let mut rng = common::rng(1);
    for _ in 0..5 {
        let y = common::random_monotone(&mut rng, 256);
        for k in [1.0, 1.5, 3.0] {
            let s = apply_s(&y, k * beta0(&p), &p).unwrap();
            assert_eq!(s[0], 1.0);
        }
    }
}

#[test]
fn constant_profile_gives_quadratic() {
    // Y ≡ 1 everywhere: I U = 1/Γ(2-α), so
    // S = 1 + (m+1)(-βη + (1-α/2)η²/Γ(2-α) - η²/(2Γ(2-α)))
    for (a, m) in [(0.25, 1.5), (0.5, 2.0), (0.75, 3.0)] {
        let p = ProblemParams::new(a, m).unwrap();
        let h = 1e-2;
        let y = Profile::new(h, vec![1.0; 201], f64::INFINITY, Represents::Y, FrontShape::Linear).unwrap();
        let beta = 1.2 * beta0(&p);
        let s = apply_s(&y, beta, &p).unwrap();
        let g = gamma(2.0 - a).unwrap();
        for (i, v) in s.iter().enumerate() {
            let x = i as f64 * h;
            let expect = 1.0 + (m + 1.0) * (-beta * x + (1.0 - 0.5 * a) * x * x / g - x * x / (2.0 * g));
            assert!((v - expect).abs() < 1e-12 * expect.abs().max(1.0), "{a} {m} {x}: {v} vs {expect}");
        }
    }
}

#[test]
fn s_lies_between_the_envelopes() {
    let mut rng = common::rng(2);
    for (a, m) in [(0.25, 3.0), (0.75, 1.5)] {
        let p = ProblemParams::new(a, m).unwrap();
        for _ in 0..4 {
            let y = common::random_monotone(&mut rng, 400);
            for k in [1.0, 1.5, 2.0] {
                let beta = k * beta0(&p);
                let s = apply_s(&y, beta, &p).unwrap();
                for (i, v) in s.iter().enumerate() {
                    let x = y.node(i);
                    assert!(g2(x, beta, &p) - 1e-8 <= *v && *v <= g1(x, beta, &p) + 1e-8);
                }
            }
        }
    }
}

#[test]
fn s_refuses_subthreshold_beta() {
    let p = params();
    let y = common::random_monotone(&mut common::rng(3), 64);
    assert!(matches!(apply_s(&y, 0.9 * beta0(&p), &p), Err(Error::BelowThreshold { .. })));
    assert!(matches!(apply_a(&y, 0.9 * beta0(&p), &p), Err(Error::BelowThreshold { .. })));
    assert!(matches!(picard_solve(0.9 * beta0(&p), &p, &SolverConfig::default()), Err(Error::BelowThreshold { .. })));
}

#[test]
fn detect_finds_envelope_roots() {
    let p = params();
    for k in [1.0, 1.5, 2.0] {
        let beta = k * beta0(&p);
        let (e1, e2) = (eta1(beta, &p).unwrap(), eta2(beta, &p).unwrap());
        let h = e1 / 500.0;
        let n = (e1 / h) as usize + 5;
        let raw1: Vec<f64> = (0..n).map(|i| g1(i as f64 * h, beta, &p)).collect();
        let raw2: Vec<f64> = (0..n).map(|i| g2(i as f64 * h, beta, &p)).collect();
        assert!((detect_eta_star(&raw1, h, beta, &p).unwrap() - e1).abs() <= h);
        assert!((detect_eta_star(&raw2, h, beta, &p).unwrap() - e2).abs() <= h);
    }
}

#[test]
fn detect_reports_missing_zero() {
    let p = params();
    let beta = 1.5 * beta0(&p);
    let h = 1e-3;
    let raw = vec![1.0; 5000];
    match detect_eta_star(&raw, h, beta, &p) {
        Err(Error::NoZero { searched_to, .. }) => {
            assert!(searched_to <= eta1(beta, &p).unwrap() + 2.0 * h + 1e-12)
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn truncation_stays_in_m() {
    let p = params();
    let mut rng = common::rng(4);
    for _ in 0..5 {
        let y = common::random_monotone(&mut rng, 320);
        let beta = 1.3 * beta0(&p);
        let (a, _) = apply_a(&y, beta, &p).unwrap();
        let v = a.values();
        assert_eq!(v[0], 1.0);
        assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
        for (i, x) in v.iter().enumerate() {
            if a.node(i) >= a.eta_star() {
                assert_eq!(*x, 0.0);
            }
        }
        let (e1, e2) = (eta1(beta, &p).unwrap(), eta2(beta, &p).unwrap());
        let h = a.grid_step();
        assert!(e2 - h <= a.eta_star() && a.eta_star() <= e1 + h);
    }
}

#[test]
fn fixed_point_properties() {
    let p = params();
    let beta = 1.5 * beta0(&p);
    let cfg = SolverConfig::default();
    let (y, d) = converged(beta, &p);
    assert!(d.final_residual <= cfg.picard_tol);
    assert_eq!(d.iterations, d.residual_history.len());
    assert_eq!(d.iterations, d.eta_star_history.len());

    let (a, _) = apply_a(&y, beta, &p).unwrap();
    let gap = a
        .values()
        .iter()
        .zip(y.values())
        .map(|(x, z)| (x - z).abs())
        .fold(0.0, f64::max);
    assert!(gap <= 2.0 * cfg.picard_tol, "{gap:e}");

    let s = apply_s(&y, beta, &p).unwrap();
    for (i, v) in s.iter().enumerate() {
        let x = y.node(i);
        if x <= y.eta_star() {
            assert!(g2(x, beta, &p) - 1e-8 <= *v && *v <= g1(x, beta, &p) + 1e-8);
        }
    }
    let u = y.to_u(p.m());
    assert_eq!(u.values()[0], 1.0);
    assert!(u.values().windows(2).all(|w| w[1] <= w[0]));
    let h = y.grid_step();
    assert!(eta2(beta, &p).unwrap() - h <= y.eta_star());
    assert!(y.eta_star() <= eta1(beta, &p).unwrap() + h);

    let (_, again) = picard_from(&y, beta, &p, &cfg).unwrap();
    assert!(again.iterations <= 2);
}

/// The front sits between nodes and the error oscillates with its position
/// in the cell, so successive differences are bounded by `h²` rather than
/// shrinking at a clean ratio.
#[test]
fn eta_star_differences_are_order_h_squared() {
    for m in [1.5, 2.0, 3.0] {
        let p = ProblemParams::new(0.5, m).unwrap();
        let beta = 1.5 * beta0(&p);
        let h0 = eta1(beta, &p).unwrap() / 128.0;
        let es: Vec<f64> = [1.0, 2.0, 4.0]
            .iter()
            .map(|k| {
                let cfg = SolverConfig {
                    grid_step: Some(h0 / k),
                    ..SolverConfig::default()
                };
                picard_solve(beta, &p, &cfg).unwrap().0.eta_star()
            })
            .collect();
        for (i, w) in es.windows(2).enumerate() {
            let h = h0 / 2f64.powi(i as i32);
            assert!((w[0] - w[1]).abs() <= h * h, "m={m}: {es:?}");
        }
    }
}

#[test]
fn residual_detects_perturbation() {
    let p = params();
    let (y, _) = converged(1.5 * beta0(&p), &p);
    let base = residual_eq2(&y, &p).unwrap();
    let es = y.eta_star();
    let vals: Vec<f64> = y
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = y.node(i) / es;
            if *v > 0.0 && x > 0.2 && x < 0.6 {
                (v + 0.1 * (std::f64::consts::PI * (x - 0.2) / 0.4).sin().powi(2)).min(1.0)
            } else {
                *v
            }
        })
        .collect();
    let bumped = Profile::new(y.grid_step(), vals, es, Represents::Y, FrontShape::Linear).unwrap();
    let worse = residual_eq2(&bumped, &p).unwrap();
    assert!(worse > 100.0 * base, "{base:e} -> {worse:e}");
}

#[test]
fn config_lists_every_violation() {
    let cfg = SolverConfig {
        grid_step: Some(-1.0),
        picard_tol: 0.0,
        max_picard_iters: 0,
        damping: 1.5,
        ..SolverConfig::default()
    };
    let bad = cfg.violations();
    assert_eq!(bad.len(), 4, "{bad:?}");
    assert!(matches!(cfg.validate(), Err(Error::Config(v)) if v.len() == 4));
    assert!(SolverConfig::default().validate().is_ok());
}

#[test]
fn config_rejects_unknown_keys() {
    let ok: SolverConfig = serde_json::from_str(r#"{"picard_tol": 1e-9}"#).unwrap();
    assert_eq!(ok.picard_tol, 1e-9);
    assert_eq!(ok.max_picard_iters, 500);
    assert!(serde_json::from_str::<SolverConfig>(r#"{"picard_tolerance": 1e-9}"#).is_err());
}
