use flipkljn_core::analytics::gamma_p;
use flipkljn_core::noise::*;
use flipkljn_core::rng::{StreamId, StreamKey};
use proptest::prelude::*;

proptest! {
    #[test]
    fn ratio_invariance(k in 1e-24f64..1e-20, t in 1.0f64..1000.0, df in 1.0f64..1e9, r in 1.0f64..1e6, alpha in 1.001f64..100.0) {
        let env = NoiseEnvironment::new(k, t, df, r, alpha).unwrap();
        let m = 2.0 * alpha / (1.0 + alpha);
        let tol = 1e-12;
        prop_assert!((env.v_lh() / env.v_ll() / m - 1.0).abs() < tol);
        prop_assert!((env.v_hh() / env.v_ll() / alpha - 1.0).abs() < tol);
        prop_assert!((env.i_lh() / env.i_hh() / m - 1.0).abs() < tol);
        prop_assert!((env.i_ll() / env.i_hh() / alpha - 1.0).abs() < tol);
        prop_assert!(env.v_ll() < env.v_lh() && env.v_lh() < env.v_hh());
        prop_assert!(env.i_hh() < env.i_lh() && env.i_lh() < env.i_ll());
    }

    #[test]
    fn replay_is_bit_identical(seed in any::<u64>(), n in 1usize..64) {
        let env = NoiseEnvironment::with_alpha(10.0).unwrap();
        let pair = ResistorPair::new(Resistor::Low, Resistor::High);
        let key = StreamKey::new(seed, 0, 0, StreamId::Auxiliary);
        let a = generate_exchange_samples(&env, pair, n, &mut key.rng()).unwrap();
        let b = generate_exchange_samples(&env, pair, n, &mut key.rng()).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn current_variance_large_n() {
    let env = NoiseEnvironment::with_alpha(10.0).unwrap();
    let pair = ResistorPair::new(Resistor::High, Resistor::High);
    let mut rng = StreamKey::new(3, 0, 0, StreamId::Auxiliary).rng();
    let s = generate_exchange_samples(&env, pair, 1_000_000, &mut rng).unwrap();
    let v = estimate_variance(&s.current).unwrap();
    assert!((v / env.i_hh() - 1.0).abs() < 0.01);
}

#[test]
fn average_power_current() {
    let env = NoiseEnvironment::with_alpha(10.0).unwrap();
    let p = average_signal_power(&env, Channel::Current);
    assert!((p - (env.i_ll() + env.i_lh() + env.i_hh()) / 3.0).abs() < 1e-30);
}

fn estimates(n: usize, m: usize) -> Vec<f64> {
    let env = NoiseEnvironment::with_alpha(10.0).unwrap();
    let pair = ResistorPair::new(Resistor::Low, Resistor::Low);
    (0..m)
        .map(|i| {
            let mut rng = StreamKey::new(11, 0, i as u64, StreamId::Auxiliary).rng();
            let s = generate_exchange_samples(&env, pair, n, &mut rng).unwrap();
            estimate_variance(&s.voltage).unwrap() / env.v_ll()
        })
        .collect()
}

#[test]
fn estimator_is_unbiased() {
    let n = 20;
    let m = 20_000;
    let est = estimates(n, m);
    let mean = est.iter().sum::<f64>() / m as f64;
    let bound = 3.0 * (2.0 / (n * m) as f64).sqrt();
    assert!((mean - 1.0).abs() < bound, "mean={mean} bound={bound}");
}

#[test]
fn estimator_follows_chi_square() {
    let n = 15;
    let m = 10_000;
    let mut x: Vec<f64> = estimates(n, m).into_iter().map(|v| v * n as f64).collect();
    x.sort_by(f64::total_cmp);
    let mut d: f64 = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let f = gamma_p(n as f64 / 2.0, xi / 2.0);
        d = d.max((f - i as f64 / m as f64).abs()).max(((i + 1) as f64 / m as f64 - f).abs());
    }
    // Kolmogorov critical value at significance 0.01
    let critical = 1.628 / (m as f64).sqrt();
    assert!(d < critical, "D={d} critical={critical}");
}
