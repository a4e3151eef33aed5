use flipkljn_core::analytics::*;
use flipkljn_core::noise::NoiseEnvironment;
use flipkljn_core::protocol::{
    DetectorKind, EstimateMode, ExchangeContext, MapState, ProtocolConfig, Scheme, Session, ThresholdSet,
};
use proptest::prelude::*;

/// Adaptive Simpson integration of the standard normal density on [x, 40].
fn q_by_quadrature(x: f64) -> f64 {
    fn phi(t: f64) -> f64 {
        (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }
    fn simpson(a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (phi(a) + 4.0 * phi(0.5 * (a + b)) + phi(b))
    }
    fn adapt(a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (simpson(a, m), simpson(m, b));
        if depth == 0 || (l + r - whole).abs() <= 15.0 * tol {
            return l + r + (l + r - whole) / 15.0;
        }
        adapt(a, m, l, tol / 2.0, depth - 1) + adapt(m, b, r, tol / 2.0, depth - 1)
    }
    if x < 0.0 {
        return 1.0 - q_by_quadrature(-x);
    }
    adapt(x, 40.0, simpson(x, 40.0), 1e-16, 60)
}

#[test]
fn q_matches_quadrature() {
    let mut x = -8.0;
    while x <= 8.0 {
        let q = q_function(x);
        let oracle = q_by_quadrature(x);
        assert!((q - oracle).abs() < 1e-12, "x={x} q={q} oracle={oracle}");
        x += 0.125;
    }
    assert!((q_function(2.8284271) - q_by_quadrature(2.8284271)).abs() < 1e-13);
}

#[test]
fn tail_matches_statrs_chi_squared() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    for n in [1usize, 2, 5, 20, 100, 200, 1000] {
        let d = ChiSquared::new(n as f64).unwrap();
        for g in [0.3, 0.8, 1.0, 1.4, 2.0, 3.1] {
            let ours = exact_tail_probability(g, 1.0, n).unwrap();
            let theirs = d.sf(n as f64 * g);
            assert!((ours - theirs).abs() < 1e-10, "n={n} g={g} {ours} {theirs}");
        }
    }
}

fn valid_inputs() -> impl Strategy<Value = AnalyticInputs> {
    (2.0f64..50.0, 0.0f64..1.0, 0.0f64..1.0, 10usize..=1000).prop_map(|(alpha, u, v, n)| {
        let m = 2.0 * alpha / (1.0 + alpha);
        let beta = 1.0 + (m - 1.0) * (0.001 + 0.998 * u);
        let kappa = m + (alpha - m) * (0.001 + 0.998 * v);
        AnalyticInputs::new(alpha, beta, kappa, n).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn mismatch_is_twice_match_bep(inputs in valid_inputs()) {
        let b = bep_breakdown(&inputs).unwrap();
        prop_assert_eq!(b.p[0], b.p[3]);
        prop_assert_eq!(b.p[1], b.p[2]);
        prop_assert_eq!(b.p[4], b.p[7]);
        prop_assert_eq!(b.p[5], b.p[6]);
        if b.p_bm > 0.0 {
            prop_assert!(((b.p_mm - 2.0 * b.p_bm) / b.p_bm).abs() < 1e-12);
        }
        let closed = total_bep_closed(b.p_bm);
        if closed > 0.0 {
            prop_assert!(((b.p_b - closed) / closed).abs() < 1e-12);
        }
        prop_assert!((b.p_b - closed).abs() < 1e-12);
        for p in b.p {
            prop_assert!((0.0..=1.0).contains(&p));
        }
        prop_assert!(b.p_bm <= 0.5);
    }

    #[test]
    fn linear_approximation_bound(inputs in valid_inputs()) {
        let b = bep_breakdown(&inputs).unwrap();
        if b.p_bm > 0.0 {
            let rel = (b.p_b - 3.0 * b.p_bm).abs() / b.p_b;
            prop_assert!(rel < 2.0 * b.p_bm);
        }
    }

    #[test]
    fn non_increasing_in_n(inputs in valid_inputs(), extra in 1usize..500) {
        let a = bep_breakdown(&inputs).unwrap();
        let more = AnalyticInputs { n: inputs.n + extra, ..inputs };
        let b = bep_breakdown(&more).unwrap();
        for i in 0..8 {
            prop_assert!(b.p[i] <= a.p[i]);
        }
        prop_assert!(b.p_b <= a.p_b);
    }

    #[test]
    fn q_symmetry(x in -8.0f64..8.0) {
        prop_assert!((q_function(x) + q_function(-x) - 1.0).abs() < 1e-15);
    }
}

#[test]
fn large_n_limits() {
    let b = bep_breakdown(&AnalyticInputs::new(10.0, 1.4, 4.0, 100_000).unwrap()).unwrap();
    assert!(b.p_mm < 1e-100);
    assert!(b.p_b < 1e-100);
    let worst = bep_breakdown(&AnalyticInputs::new(10.0, 1.0 + 1e-9, 10.0 - 1e-9, 1).unwrap()).unwrap();
    assert!(worst.p_bm <= 0.5);
}

/// Each matched (state, bits) event has a single-threshold error tail per
/// party. Both parties read the same estimate, so when both thresholds
/// point the same way their errors coincide, and at the intermediate level
/// they are disjoint.
#[test]
fn conditional_error_tails_by_event() {
    let env = NoiseEnvironment::with_alpha(10.0).unwrap();
    let n = 20;
    let (beta, kappa) = (1.4, 4.0);
    let m = env.intermediate_ratio();
    let mut cfg = ProtocolConfig::new(Scheme::FlipKljn, DetectorKind::VoltageOnly, ThresholdSet::mirrored(beta, kappa), n);
    cfg.estimates = EstimateMode::Sampled;
    let trials = 100_000u64;
    let up = |g: f64, s: f64| exact_tail_probability(g, s, n).unwrap();
    let low = |g: f64, s: f64| exact_lower_probability(g, s, n).unwrap();
    for state in [MapState::Normal, MapState::Flip] {
        for (b_a, b_b) in [(false, false), (false, true), (true, false), (true, true)] {
            let mut wrong = [0u64; 3];
            for k in 0..trials {
                let mut s = Session::new(state, state);
                let ctx = ExchangeContext::new(77, 0, k);
                let r = s.exchange_with_bits(b_a, b_b, &env, &cfg, &ctx);
                wrong[0] += r.error_alice as u64;
                wrong[1] += r.error_bob as u64;
                wrong[2] += (r.error_alice && r.error_bob) as u64;
            }
            let pair = flipkljn_core::protocol::Resistor::Low;
            let alice_low = flipkljn_core::protocol::map_bit_to_resistor(state, b_a) == pair;
            let bob_low = flipkljn_core::protocol::map_bit_to_resistor(state, b_b) == pair;
            let expected = match (alice_low, bob_low) {
                (true, true) => [up(beta, 1.0); 3],
                (false, false) => [low(kappa, 10.0); 3],
                (true, false) => [low(beta, m), up(kappa, m), 0.0],
                (false, true) => [up(kappa, m), low(beta, m), 0.0],
            };
            for i in 0..3 {
                let p = expected[i];
                let sigma = (p * (1.0 - p) / trials as f64).sqrt().max(1.0 / trials as f64);
                let got = wrong[i] as f64 / trials as f64;
                assert!(
                    (got - p).abs() <= 3.0 * sigma,
                    "state={state:?} bits={b_a}/{b_b} slot={i} got={got} expected={p}"
                );
            }
        }
    }
}
