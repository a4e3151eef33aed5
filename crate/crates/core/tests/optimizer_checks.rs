use flipkljn_core::analytics::{total_bep, AnalyticInputs};
use flipkljn_core::noise::Channel;
use flipkljn_core::optimizer::*;
use flipkljn_core::protocol::{DetectorKind, ThresholdSet};

fn pb(alpha: f64, n: usize, b: f64, k: f64) -> f64 {
    total_bep(&AnalyticInputs::new(alpha, b, k, n).unwrap()).unwrap()
}

#[test]
fn matches_brute_force_grid() {
    let (alpha, n) = (10.0, 100);
    let r = optimize_voltage_thresholds(&OptimizationProblem::new(alpha, n, Objective::AnalyticPb)).unwrap();
    let m = 2.0 * alpha / (1.0 + alpha);
    let g = 1000;
    let mut best = f64::INFINITY;
    for i in 1..g {
        let b = 1.0 + (m - 1.0) * i as f64 / g as f64;
        for j in 1..g {
            let k = m + (alpha - m) * j as f64 / g as f64;
            best = best.min(pb(alpha, n, b, k));
        }
    }
    assert!(r.objective_value <= best * 1.02, "opt={} brute={best}", r.objective_value);
    assert!(1.0 < r.lower && r.lower < m && m < r.upper && r.upper < alpha);
}

#[test]
fn dominates_box_midpoint_and_is_deterministic() {
    for (alpha, n) in [(3.0, 30), (10.0, 15), (10.0, 200), (25.0, 60)] {
        let p = OptimizationProblem::new(alpha, n, Objective::AnalyticPb);
        let a = optimize_voltage_thresholds(&p).unwrap();
        let b = optimize_voltage_thresholds(&p).unwrap();
        assert_eq!(a, b);
        let [(l0, l1), (u0, u1)] = p.bounds().unwrap();
        assert!(a.objective_value <= pb(alpha, n, 0.5 * (l0 + l1), 0.5 * (u0 + u1)));
        for t in &a.trace {
            assert!(l0 <= t.lower && t.lower <= l1 && u0 <= t.upper && t.upper <= u1);
        }
        assert!(a.trace.len() > 5);
    }
}

#[test]
fn gradient_changes_sign_across_optimum() {
    let (alpha, n) = (10.0, 100);
    let r = optimize_voltage_thresholds(&OptimizationProblem::new(alpha, n, Objective::AnalyticPb)).unwrap();
    let (hb, hk) = r.final_step();
    let f = |b: f64, k: f64| pb(alpha, n, b, k);
    let left = f(r.lower, r.upper) - f(r.lower - hb, r.upper);
    let right = f(r.lower + hb, r.upper) - f(r.lower, r.upper);
    assert!(left <= 0.0 && right >= 0.0, "{left} {right}");
    let left = f(r.lower, r.upper) - f(r.lower, r.upper - hk);
    let right = f(r.lower, r.upper + hk) - f(r.lower, r.upper);
    assert!(left <= 0.0 && right >= 0.0, "{left} {right}");
}

#[test]
fn current_optimum_mirrors_voltage_optimum() {
    let (alpha, n) = (10.0, 100);
    let v = optimize_voltage_thresholds(&OptimizationProblem::new(alpha, n, Objective::AnalyticPb)).unwrap();
    let p = OptimizationProblem::new(alpha, n, Objective::simulated(DetectorKind::CurrentOnly, 9));
    let c = optimize_current_thresholds(&p).unwrap();
    let m = 2.0 * alpha / (1.0 + alpha);
    assert!(1.0 < c.lower && c.lower < m && m < c.upper && c.upper < alpha);
    // The current ladder is the voltage ladder relabelled, so the simulated
    // optimum must sit where the analytic voltage objective is within the
    // sampling noise of its own minimum.
    let budget = DEFAULT_TRIAL_BUDGET as f64;
    let sigma = (v.objective_value * (1.0 - v.objective_value) / (2.0 * budget)).sqrt();
    let at_current = pb(alpha, n, c.lower, c.upper);
    assert!(at_current <= v.objective_value + 3.0 * sigma, "{at_current} vs {} ± {sigma}", v.objective_value);
}

#[test]
fn doubling_budget_does_not_hurt() {
    let (alpha, n) = (10.0, 50);
    let small = OptimizationProblem::new(
        alpha,
        n,
        Objective::SimulatedBer { detector: DetectorKind::CurrentOnly, trial_budget: 40_000, seed: 3 },
    );
    let large = OptimizationProblem {
        objective: Objective::SimulatedBer { detector: DetectorKind::CurrentOnly, trial_budget: 80_000, seed: 3 },
        ..small
    };
    let a = optimize_current_thresholds(&small).unwrap();
    let b = optimize_current_thresholds(&large).unwrap();
    let check = OptimizationProblem {
        objective: Objective::SimulatedBer { detector: DetectorKind::CurrentOnly, trial_budget: 400_000, seed: 1234 },
        ..small
    };
    let ea = simulated_ber(&check, Channel::Current, ThresholdSet::mirrored(a.lower, a.upper)).unwrap();
    let eb = simulated_ber(&check, Channel::Current, ThresholdSet::mirrored(b.lower, b.upper)).unwrap();
    let sigma = (ea * (1.0 - ea) / 800_000.0).sqrt();
    assert!(eb <= ea + 2.0 * sigma, "small={ea} large={eb} sigma={sigma}");
}
