//! Threshold search.
//!
//! A coarse grid over the feasible box followed by local refinement: each
//! round re-centres a 5×5 stencil on the incumbent and halves the step.
//! Candidates outside the box are skipped, never evaluated. Works the same
//! for a smooth analytic objective and for a noisy simulated one (which uses
//! common random numbers, so comparisons between candidates are paired).

use rand::Rng;
use rand_distr::{ChiSquared, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{total_bep, AnalyticInputs};
use crate::noise::{Channel, NoiseEnvironment};
use crate::protocol::{
    DetectorKind, ExchangeContext, ProtocolConfig, Scheme, Session, ThresholdSet,
};
use crate::rng::StreamId;
use crate::{Error, Result};

pub const DEFAULT_GRID: usize = 32;
pub const DEFAULT_ROUNDS: usize = 12;
pub const DEFAULT_INSET: f64 = 1e-3;
pub const DEFAULT_TRIAL_BUDGET: u64 = 100_000;
/// Seed of the simulated objective used when resolving thresholds
/// automatically, so that results depend only on `(α, N, detector)`.
pub const OPTIMIZER_SEED: u64 = 0x05ee_d0ff_1e1d;

const STENCIL: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// Gaussian-approximation total `P_b` of the voltage-only detector.
    AnalyticPb,
    /// Flip-KLJN BER with chi-square-law estimates over a fixed set of
    /// draws. The detector must read only the channel being optimised.
    SimulatedBer {
        detector: DetectorKind,
        trial_budget: u64,
        seed: u64,
    },
}

impl Objective {
    pub fn simulated(detector: DetectorKind, seed: u64) -> Self {
        Objective::SimulatedBer {
            detector,
            trial_budget: DEFAULT_TRIAL_BUDGET,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationProblem {
    pub alpha: f64,
    pub n: usize,
    pub objective: Objective,
    /// Points per axis of the coarse grid.
    pub grid: usize,
    pub rounds: usize,
    /// Relative inset of the box from the open ordering interval.
    pub inset: f64,
}

impl OptimizationProblem {
    pub fn new(alpha: f64, n: usize, objective: Objective) -> Self {
        Self {
            alpha,
            n,
            objective,
            grid: DEFAULT_GRID,
            rounds: DEFAULT_ROUNDS,
            inset: DEFAULT_INSET,
        }
    }

    /// `[(lower_min, lower_max), (upper_min, upper_max)]`.
    pub fn bounds(&self) -> Result<[(f64, f64); 2]> {
        if !(self.alpha.is_finite() && self.alpha > 1.0) {
            return Err(Error::domain(format!(
                "empty feasible box: alpha must be > 1, got {}",
                self.alpha
            )));
        }
        if self.n == 0 {
            return Err(Error::domain("N must be at least 1"));
        }
        if self.grid < 2 || !(0.0..0.5).contains(&self.inset) {
            return Err(Error::domain("grid must have at least 2 points and inset must be in [0, 0.5)"));
        }
        let m = 2.0 * self.alpha / (1.0 + self.alpha);
        let e = self.inset;
        Ok([(1.0 + e, m * (1.0 - e)), (m * (1.0 + e), self.alpha * (1.0 - e))])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    /// 0 is the coarse grid.
    pub round: usize,
    pub step: (f64, f64),
    pub evaluated: usize,
    pub lower: f64,
    pub upper: f64,
    pub value: f64,
}

/// Optimised pair. For the voltage channel `(lower, upper) = (β*, κ*)`, for
/// the current channel `(η*, ξ*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub lower: f64,
    pub upper: f64,
    pub objective_value: f64,
    pub evaluations: usize,
    pub trace: Vec<RoundTrace>,
}

impl OptimizationResult {
    /// Step of the last refinement round.
    pub fn final_step(&self) -> (f64, f64) {
        self.trace.last().map(|t| t.step).unwrap_or((0.0, 0.0))
    }
}

pub fn optimize_voltage_thresholds(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    let bounds = problem.bounds()?;
    match problem.objective {
        Objective::AnalyticPb => {
            let (alpha, n) = (problem.alpha, problem.n);
            search(problem, bounds, |b, k| {
                AnalyticInputs::new(alpha, b, k, n).and_then(|i| total_bep(&i)).unwrap_or(f64::INFINITY)
            })
        }
        Objective::SimulatedBer { detector, .. } => {
            if detector != DetectorKind::VoltageOnly {
                return Err(Error::domain("simulated voltage optimisation needs the voltage-only detector"));
            }
            let draws = Draws::new(problem, Channel::Voltage)?;
            search(problem, bounds, |b, k| draws.ber(ThresholdSet::mirrored(b, k)))
        }
    }
}

pub fn optimize_current_thresholds(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    let bounds = problem.bounds()?;
    match problem.objective {
        Objective::AnalyticPb => Err(Error::domain(
            "no analytic objective exists for the current channel; use a simulated objective",
        )),
        Objective::SimulatedBer { detector, .. } => {
            if detector != DetectorKind::CurrentOnly {
                return Err(Error::domain("simulated current optimisation needs the current-only detector"));
            }
            let draws = Draws::new(problem, Channel::Current)?;
            search(problem, bounds, |e, x| draws.ber(ThresholdSet::mirrored(e, x)))
        }
    }
}

fn search<F>(problem: &OptimizationProblem, bounds: [(f64, f64); 2], f: F) -> Result<OptimizationResult>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let [(l0, l1), (u0, u1)] = bounds;
    let g = problem.grid;
    let mut step = ((l1 - l0) / (g - 1) as f64, (u1 - u0) / (g - 1) as f64);
    let coarse: Vec<(f64, f64)> = (0..g)
        .flat_map(|i| (0..g).map(move |j| (i, j)))
        .map(|(i, j)| (l0 + i as f64 * step.0, u0 + j as f64 * step.1))
        .collect();

    let mut evaluations = 0;
    let mut trace = Vec::with_capacity(problem.rounds + 1);
    let mut best = (f64::NAN, f64::NAN, f64::INFINITY);
    let evaluate = |points: &[(f64, f64)], best: &mut (f64, f64, f64)| {
        let values: Vec<f64> = points.par_iter().map(|&(a, b)| f(a, b)).collect();
        for (&(a, b), v) in points.iter().zip(values) {
            if v < best.2 {
                *best = (a, b, v);
            }
        }
        points.len()
    };
    let n = evaluate(&coarse, &mut best);
    evaluations += n;
    trace.push(RoundTrace {
        round: 0,
        step,
        evaluated: n,
        lower: best.0,
        upper: best.1,
        value: best.2,
    });
    if !best.2.is_finite() {
        return Err(Error::domain("objective is not finite anywhere on the grid"));
    }

    let inside = |a: f64, b: f64| a >= l0 && a <= l1 && b >= u0 && b <= u1;
    for round in 1..=problem.rounds {
        step = (step.0 / 2.0, step.1 / 2.0);
        let (ca, cb) = (best.0, best.1);
        let points: Vec<(f64, f64)> = (-STENCIL..=STENCIL)
            .flat_map(|i| (-STENCIL..=STENCIL).map(move |j| (i, j)))
            .filter(|&(i, j)| (i, j) != (0, 0))
            .map(|(i, j)| (ca + i as f64 * step.0, cb + j as f64 * step.1))
            .filter(|&(a, b)| inside(a, b))
            .collect();
        let n = evaluate(&points, &mut best);
        evaluations += n;
        trace.push(RoundTrace {
            round,
            step,
            evaluated: n,
            lower: best.0,
            upper: best.1,
            value: best.2,
        });
    }
    Ok(OptimizationResult {
        lower: best.0,
        upper: best.1,
        objective_value: best.2,
        evaluations,
        trace,
    })
}

/// Pre-drawn bits and chi-square variates for the simulated objective. The
/// draws come from the same streams the chi-square-law estimate mode uses,
/// so `ber` equals a harness run of that mode over one shard.
struct Draws {
    env: NoiseEnvironment,
    cfg: ProtocolConfig,
    channel: Channel,
    bits: Vec<(bool, bool)>,
    units: Vec<f64>,
}

impl Draws {
    fn new(problem: &OptimizationProblem, channel: Channel) -> Result<Self> {
        let Objective::SimulatedBer {
            detector,
            trial_budget,
            seed,
        } = problem.objective
        else {
            unreachable!("analytic objective has no draws")
        };
        if trial_budget == 0 {
            return Err(Error::domain("trial budget must be at least 1"));
        }
        let env = NoiseEnvironment::with_alpha(problem.alpha)?;
        let n = problem.n as f64;
        let chi = ChiSquared::new(n).map_err(|e| Error::domain(e.to_string()))?;
        let wire = match channel {
            Channel::Voltage => StreamId::WireVoltage,
            Channel::Current => StreamId::WireCurrent,
        };
        let mut bits = Vec::with_capacity(trial_budget as usize);
        let mut units = Vec::with_capacity(trial_budget as usize);
        for k in 0..trial_budget {
            let ctx = ExchangeContext::new(seed, 0, k);
            bits.push((ctx.rng(StreamId::AliceBit).random(), ctx.rng(StreamId::BobBit).random()));
            units.push(chi.sample(&mut ctx.rng(wire)) / n);
        }
        let mut cfg = ProtocolConfig::new(Scheme::FlipKljn, detector, ThresholdSet::mirrored(1.0, 1.0), problem.n);
        cfg.estimates = crate::protocol::EstimateMode::ChiSquareLaw;
        Ok(Self {
            env,
            cfg,
            channel,
            bits,
            units,
        })
    }

    fn ber(&self, thresholds: ThresholdSet) -> f64 {
        let mut cfg = self.cfg;
        cfg.thresholds = thresholds;
        let mut session = Session::default();
        let (mut errors, mut accepted) = (0u64, 0u64);
        for (k, (&(b_a, b_b), &u)) in self.bits.iter().zip(&self.units).enumerate() {
            let (uv, ui) = match self.channel {
                Channel::Voltage => (u, f64::NAN),
                Channel::Current => (f64::NAN, u),
            };
            let r = session.exchange_with_unit_draws(b_a, b_b, uv, ui, &self.env, &cfg, k as u64);
            if r.accepted {
                accepted += 1;
                errors += r.error_alice as u64 + r.error_bob as u64;
            }
        }
        if accepted == 0 {
            return f64::INFINITY;
        }
        errors as f64 / (2 * accepted) as f64
    }
}

/// BER of Flip-KLJN under `thresholds` with the simulated objective's draws.
/// Exposed for checking optimiser output against independent samples.
pub fn simulated_ber(problem: &OptimizationProblem, channel: Channel, thresholds: ThresholdSet) -> Result<f64> {
    Ok(Draws::new(problem, channel)?.ber(thresholds))
}
