//! Batched Monte Carlo runs.
//!
//! A run is cut into fixed-length shards. Each shard is one session starting
//! from matched Normal/Normal states, with its own stream keys, so the shard
//! layout (and therefore every number in the report) depends only on the
//! configuration and never on how many workers execute it. Shard results are
//! integer counters merged in shard order.

mod eve;
mod stats;

pub use eve::{
    classify_level, eve_decide, eve_thresholds, score_half_units, EveHistory, EveModel, EveRecord,
};
pub use stats::{binomial_ci, mismatch_episode_stats, EpisodeStats, EpisodeTracker};

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{total_bep, AnalyticInputs};
use crate::noise::NoiseEnvironment;
use crate::optimizer::{
    optimize_current_thresholds, optimize_voltage_thresholds, Objective, OptimizationProblem, OPTIMIZER_SEED,
};
use crate::protocol::{DetectorKind, ExchangeContext, MapState, ProtocolConfig, Session, ThresholdSet};
use crate::rng::StreamId;
use crate::{Error, Result};

/// Smallest allowed shard; shorter shards would bias the statistics through
/// the forced matched start.
pub const MIN_SHARD_LEN: u64 = 10_000;
pub const DEFAULT_SHARD_LEN: u64 = 100_000;
/// z-score of the reported BER interval.
pub const CI_Z: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThresholdChoice {
    Explicit(ThresholdSet),
    /// Analytic optimum for `(β, κ)`; `(η, ξ)` by simulation when the detector
    /// reads the current channel, otherwise mirrored.
    Optimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub env: NoiseEnvironment,
    pub protocol: ProtocolConfig,
    pub thresholds: ThresholdChoice,
    pub exchanges: u64,
    pub master_seed: u64,
    pub eve: EveModel,
    pub shard_len: u64,
    /// Worker threads; 0 means all available cores.
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(env: NoiseEnvironment, protocol: ProtocolConfig, exchanges: u64, master_seed: u64) -> Self {
        Self {
            env,
            thresholds: ThresholdChoice::Explicit(protocol.thresholds),
            protocol,
            exchanges,
            master_seed,
            eve: EveModel::None,
            shard_len: DEFAULT_SHARD_LEN,
            workers: 0,
        }
    }

    pub fn shard_count(&self) -> u64 {
        self.exchanges.div_ceil(self.shard_len)
    }

    /// Resolve thresholds and check everything; returns the config actually run.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        if self.exchanges == 0 {
            return Err(Error::config("exchanges must be at least 1"));
        }
        if self.shard_len < MIN_SHARD_LEN {
            return Err(Error::config(format!(
                "shard length must be at least {MIN_SHARD_LEN}, got {}",
                self.shard_len
            )));
        }
        let mut out = *self;
        out.protocol.thresholds = match self.thresholds {
            ThresholdChoice::Explicit(t) => t,
            ThresholdChoice::Optimize => {
                resolve_optimal_thresholds(self.env.alpha(), self.protocol.samples, self.protocol.detector)?
            }
        };
        out.thresholds = ThresholdChoice::Explicit(out.protocol.thresholds);
        out.protocol.validate(&out.env)?;
        Ok(out)
    }
}

/// Default optimisation recipe shared by the harness and the CLI cache.
///
/// Channels are tuned independently: `(β, κ)` on the analytic `P_b`, and
/// `(η, ξ)` by simulating the current-only detector when `detector` reads
/// the current channel. The simulation uses a fixed seed so the result is a
/// function of `(α, N, detector)` alone and can be cached.
pub fn resolve_optimal_thresholds(alpha: f64, n: usize, detector: DetectorKind) -> Result<ThresholdSet> {
    let v = optimize_voltage_thresholds(&OptimizationProblem::new(alpha, n, Objective::AnalyticPb))?;
    if !detector.uses_current() {
        return Ok(ThresholdSet::mirrored(v.lower, v.upper));
    }
    let objective = Objective::simulated(DetectorKind::CurrentOnly, OPTIMIZER_SEED);
    let c = optimize_current_thresholds(&OptimizationProblem::new(alpha, n, objective))?;
    Ok(ThresholdSet::new(v.lower, v.upper, c.lower, c.upper))
}

/// Integer counters of one shard or of a whole run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub exchanges: u64,
    pub accepted: u64,
    pub errors_alice: u64,
    pub errors_bob: u64,
    /// Exchanges where at least one party flagged.
    pub flagged: u64,
    /// Exchanges that started in matched states.
    pub matched: u64,
    /// Exchanges where Alice started in the Normal state.
    pub alice_normal: u64,
    pub eve_score: u64,
    pub eve_exchanges: u64,
    pub eve_score_nonintermediate: u64,
    pub eve_nonintermediate: u64,
}

impl Counters {
    pub fn errors(&self) -> u64 {
        self.errors_alice + self.errors_bob
    }

    pub fn merge(&mut self, o: &Counters) {
        self.exchanges += o.exchanges;
        self.accepted += o.accepted;
        self.errors_alice += o.errors_alice;
        self.errors_bob += o.errors_bob;
        self.flagged += o.flagged;
        self.matched += o.matched;
        self.alice_normal += o.alice_normal;
        self.eve_score += o.eve_score;
        self.eve_exchanges += o.eve_exchanges;
        self.eve_score_nonintermediate += o.eve_score_nonintermediate;
        self.eve_nonintermediate += o.eve_nonintermediate;
    }

    /// `(errors_A + errors_B) / (2 · accepted)`.
    pub fn ber(&self) -> Option<f64> {
        (self.accepted > 0).then(|| self.errors() as f64 / (2 * self.accepted) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardResult {
    pub counters: Counters,
    pub episodes: EpisodeStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateOccupancy {
    pub alice_normal: f64,
    pub matched: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Resolved configuration, thresholds included.
    pub config: ExperimentConfig,
    pub totals: Counters,
    pub shards: Vec<ShardResult>,
    pub ber: Option<f64>,
    pub ber_ci: Option<(f64, f64)>,
    /// Batch-means standard error of the BER over shards. Detection errors
    /// cluster inside mismatch episodes, so this is wider than the binomial one.
    pub ber_batch_sigma: Option<f64>,
    pub accepted_fraction: f64,
    pub discarded_percentage: f64,
    pub episodes: EpisodeStats,
    pub eve_accuracy_overall: Option<f64>,
    pub eve_accuracy_nonintermediate: Option<f64>,
    pub state_occupancy: StateOccupancy,
    /// Gaussian-approximation `P_b` when it applies to the run: Flip-KLJN,
    /// voltage-only detector, ideal channels, sampled estimates.
    pub analytic_pb: Option<f64>,
    pub elapsed_secs: f64,
    pub workers: usize,
}

pub fn run_trials(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let cfg = config.resolve()?;
    let start = Instant::now();
    let shard_ids: Vec<u64> = (0..cfg.shard_count()).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let workers = pool.current_num_threads();
    let shards: Vec<ShardResult> = pool.install(|| shard_ids.par_iter().map(|&s| run_shard(&cfg, s)).collect());

    let mut totals = Counters::default();
    let mut episodes = EpisodeStats::default();
    for s in &shards {
        totals.merge(&s.counters);
        episodes.merge(&s.episodes);
    }
    Ok(build_report(cfg, totals, shards, episodes, start.elapsed().as_secs_f64(), workers))
}

fn build_report(
    cfg: ExperimentConfig,
    totals: Counters,
    shards: Vec<ShardResult>,
    episodes: EpisodeStats,
    elapsed_secs: f64,
    workers: usize,
) -> ExperimentReport {
    let ber = totals.ber();
    let ber_ci = (totals.accepted > 0).then(|| binomial_ci(totals.errors(), 2 * totals.accepted, CI_Z));
    let ber_batch_sigma = batch_sigma(&shards);
    let n = totals.exchanges as f64;
    let accepted_fraction = totals.accepted as f64 / n;
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / (4 * den) as f64);
    let p = &cfg.protocol;
    let analytic_pb = (p.scheme == crate::protocol::Scheme::FlipKljn
        && p.detector == DetectorKind::VoltageOnly
        && p.channels.is_ideal()
        && p.estimates == crate::protocol::EstimateMode::Sampled)
        .then(|| {
            AnalyticInputs::new(cfg.env.alpha(), p.thresholds.beta, p.thresholds.kappa, p.samples)
                .and_then(|i| total_bep(&i))
                .ok()
        })
        .flatten();
    ExperimentReport {
        config: cfg,
        ber,
        ber_ci,
        ber_batch_sigma,
        accepted_fraction,
        discarded_percentage: 100.0 * (1.0 - accepted_fraction),
        eve_accuracy_overall: ratio(totals.eve_score, totals.eve_exchanges),
        eve_accuracy_nonintermediate: ratio(totals.eve_score_nonintermediate, totals.eve_nonintermediate),
        state_occupancy: StateOccupancy {
            alice_normal: totals.alice_normal as f64 / n,
            matched: totals.matched as f64 / n,
        },
        episodes,
        totals,
        shards,
        analytic_pb,
        elapsed_secs,
        workers,
    }
}

/// Standard error of the pooled BER from the spread of per-shard BERs,
/// weighting each shard by its accepted count.
fn batch_sigma(shards: &[ShardResult]) -> Option<f64> {
    let usable: Vec<&Counters> = shards.iter().map(|s| &s.counters).filter(|c| c.accepted > 0).collect();
    if usable.len() < 2 {
        return None;
    }
    let total: f64 = usable.iter().map(|c| c.accepted as f64).sum();
    let errors: f64 = usable.iter().map(|c| c.errors() as f64).sum();
    let mean = errors / (2.0 * total);
    let k = usable.len() as f64;
    let mean_w = total / k;
    let ss: f64 = usable
        .iter()
        .map(|c| {
            let w = c.accepted as f64 / mean_w;
            let b = c.errors() as f64 / (2.0 * c.accepted as f64);
            (w * (b - mean)).powi(2)
        })
        .sum();
    Some((ss / (k * (k - 1.0))).sqrt())
}

/// Run one shard: a fresh session over exchanges `[s·L, min((s+1)·L, total))`.
pub fn run_shard(cfg: &ExperimentConfig, shard: u64) -> ShardResult {
    let first = shard * cfg.shard_len;
    let len = cfg.shard_len.min(cfg.exchanges - first);
    let mut session = Session::default();
    let mut eve_history = EveHistory::default();
    let mut tracker = EpisodeTracker::default();
    let mut c = Counters::default();
    let observe_eve = cfg.eve != EveModel::None;
    for i in 0..len {
        let mut ctx = ExchangeContext::new(cfg.master_seed, shard, i);
        ctx.observe_eve = observe_eve;
        let r = session.run_exchange(&cfg.env, &cfg.protocol, &ctx);
        c.exchanges += 1;
        if r.accepted {
            c.accepted += 1;
            c.errors_alice += r.error_alice as u64;
            c.errors_bob += r.error_bob as u64;
        }
        c.flagged += (r.flag_a || r.flag_b) as u64;
        c.matched += r.states_matched_before() as u64;
        c.alice_normal += (r.state_a_prev == MapState::Normal) as u64;
        tracker.observe(&r);

        if let Some(v) = r.est_eve_voltage {
            let coin = || ctx.rng(StreamId::EveCoin).random::<bool>();
            if let Some(e) = eve_decide(cfg.eve, v, &cfg.env, &mut eve_history, coin) {
                let score = score_half_units(e.bits, (r.b_a, r.b_b));
                c.eve_score += score;
                c.eve_exchanges += 1;
                if !r.resistors.level().is_intermediate() {
                    c.eve_score_nonintermediate += score;
                    c.eve_nonintermediate += 1;
                }
            }
        }
    }
    ShardResult {
        counters: c,
        episodes: tracker.finish(),
    }
}
