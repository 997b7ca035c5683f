//! Indexed environment queries against linear scans over the revealed state.

use dustsim_core::env::Env;
use dustsim_core::rng::{substream, ExpGaps, GapSource, ENV_STREAM};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type TestEnv = Env<ExpGaps<ChaCha8Rng>>;

/// Small random environment with some lines extended and some particles gone.
fn random_env(rng: &mut ChaCha8Rng, seed: u64) -> TestEnv {
    let n = rng.random_range(1..=10);
    let mut env = Env::new(n, ExpGaps(substream(seed, ENV_STREAM))).unwrap();
    for id in 1..=n {
        env.extend(id, rng.random_range(0.0..6.0));
    }
    for _ in 0..rng.random_range(0..20) {
        let id = rng.random_range(1..=n);
        let ps = env.line(id).particles().to_vec();
        let p = ps[rng.random_range(0..ps.len())];
        env.remove(id, p).unwrap();
    }
    env
}

fn scan_min(env: &TestEnv, exclude: Option<usize>) -> Option<(usize, f64)> {
    env.lines()
        .iter()
        .filter(|l| Some(l.line_id()) != exclude)
        .map(|l| (l.line_id(), l.particles()[0]))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
}

#[test]
fn successor_and_predecessor_match_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for q in 0..10_000u64 {
        let mut env = random_env(&mut rng, q);
        let id = rng.random_range(1..=env.n_lines());
        let frontier = env.line(id).frontier();
        let x = rng.random_range(0.0..frontier * 1.2);
        let revealed = env.line(id).particles().to_vec();
        let pred = revealed.iter().copied().filter(|&p| p < x).last();
        assert_eq!(env.predecessor(id, x), pred, "query {q}");
        let s = env.successor(id, x);
        let after = env.line(id).particles().to_vec();
        let scan = after.iter().copied().find(|&p| p > x).unwrap();
        assert_eq!(s, scan, "query {q}");
        if revealed.iter().any(|&p| p > x) {
            // Nothing new should have been revealed.
            assert_eq!(after, revealed);
        }
    }
}

#[test]
fn global_min_matches_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for q in 0..10_000u64 {
        let mut env = random_env(&mut rng, 1_000_000 + q);
        let n = env.n_lines();
        let exclude = (n >= 2 && rng.random_bool(0.5)).then(|| rng.random_range(1..=n));
        let want = scan_min(&env, exclude);
        assert_eq!(env.global_min_leftmost(exclude), want, "query {q}");
        env.check_consistency().unwrap();
    }
}

#[test]
fn global_min_tie_goes_to_smaller_line() {
    struct Fixed(Vec<f64>);
    impl GapSource for Fixed {
        fn next_gap(&mut self) -> f64 {
            self.0.remove(0)
        }
        fn next_uniform(&mut self) -> f64 {
            0.5
        }
    }
    let mut env = Env::new(2, Fixed(vec![0.2, 0.2])).unwrap();
    assert_eq!(env.global_min_leftmost(None), Some((1, 0.2)));
    let mut env = Env::new(3, Fixed(vec![0.2, 0.5, 0.1])).unwrap();
    assert_eq!(env.global_min_leftmost(Some(3)), Some((1, 0.2)));
}

/// Kolmogorov distance of a sample from the Exp(1) law.
fn ks_exp1(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-x).exp();
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn revealed_gaps_are_exponential() {
    // Gaps revealed through lazy extension, across several lines and calls.
    let mut env = Env::new(10, ExpGaps(substream(3, ENV_STREAM))).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    while env.lines().iter().map(|l| l.particles().len()).sum::<usize>() < 100_010 {
        let id = rng.random_range(1..=10);
        let f = env.line(id).frontier();
        env.extend(id, f + rng.random_range(0.0..50.0));
    }
    let mut gaps = Vec::new();
    for l in env.lines() {
        let ps = l.particles();
        gaps.push(ps[0]);
        gaps.extend(ps.windows(2).map(|w| w[1] - w[0]));
    }
    gaps.truncate(100_000);
    let d = ks_exp1(gaps);
    // 1% critical value of the one-sample KS statistic.
    let crit = 1.628 / (100_000f64).sqrt();
    assert!(d < crit, "KS distance {d} >= {crit}");
}

#[test]
fn first_particles_have_unit_mean() {
    let env = Env::new(1_000_000, ExpGaps(substream(5, ENV_STREAM))).unwrap();
    let mean = env.lines().iter().map(|l| l.particles()[0]).sum::<f64>() / 1e6;
    assert!((mean - 1.0).abs() < 0.01, "{mean}");
}

#[test]
fn count_up_to_ten_thousand() {
    let mut env = Env::new(1, ExpGaps(substream(6, ENV_STREAM))).unwrap();
    env.extend(1, 1e4);
    let c = env.line(1).particles().iter().filter(|&&p| p <= 1e4).count() as f64;
    assert!((c - 1e4).abs() <= 400.0, "{c}");
}

proptest! {
    #[test]
    fn rho_never_decreases(seed in any::<u64>(), n in 1usize..8, picks in prop::collection::vec((0usize..8, 0usize..6), 1..60)) {
        let mut env = Env::new(n, ExpGaps(substream(seed, ENV_STREAM))).unwrap();
        let mut last = env.rho();
        for (l, j) in picks {
            let id = l % n + 1;
            env.extend(id, 3.0);
            let ps = env.line(id).particles().to_vec();
            let p = ps[j % ps.len()];
            let was_unique_min = env.global_min_leftmost(None) == Some((id, p))
                && env.lines().iter().filter(|l| l.particles()[0] == p).count() == 1;
            env.remove(id, p).unwrap();
            let rho = env.rho();
            prop_assert!(rho >= last);
            // Strict increase exactly when the unique minimum goes.
            prop_assert_eq!(rho > last, was_unique_min);
            env.check_consistency().unwrap();
            last = rho;
        }
    }
}
