#![allow(dead_code)]

use fracpme::{FrontShape, Profile, Represents};
use proptest::prelude::*;
use proptest::test_runner::{RngAlgorithm, TestRng};

pub fn rng(seed: u8) -> TestRng {
    TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32])
}

/// Piecewise-linear nonincreasing `Y` from 1 at 0 to 0 at a random support
/// end in `[0.3, 3]`, sampled on `n + 1` nodes over `[0, 3.2]`.
pub fn random_monotone(rng: &mut TestRng, n: usize) -> Profile {
    let end = rng.random_range(0.3..3.0);
    let k = rng.random_range(1..6usize);
    let mut xs: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..end)).collect();
    xs.sort_by(f64::total_cmp);
    let mut ys: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
    ys.sort_by(|a, b| b.total_cmp(a));
    let mut px = vec![0.0];
    let mut py = vec![1.0];
    px.extend(&xs);
    py.extend(&ys);
    px.push(end);
    py.push(0.0);
    let h = 3.2 / n as f64;
    let vals: Vec<f64> = (0..=n)
        .map(|i| {
            let x = i as f64 * h;
            if x >= end {
                return 0.0;
            }
            let j = px.windows(2).position(|w| x < w[1]).unwrap();
            let (x0, x1) = (px[j], px[j + 1]);
            if x1 == x0 {
                return py[j + 1];
            }
            py[j] + (py[j + 1] - py[j]) * (x - x0) / (x1 - x0)
        })
        .collect();
    Profile::new(h, vals, end, Represents::Y, FrontShape::Linear).unwrap()
}
