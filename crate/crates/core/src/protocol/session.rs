use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{
    detect, map_bit_to_resistor, map_resistor_to_bit, update_state, Decision, DetectorKind,
    MapState, PartyState, Role, Scheme, ThresholdSet,
};
use crate::noise::{Channel, ChannelConfigs, NoiseEnvironment, Resistor, ResistorPair};
use crate::rng::{StreamId, StreamKey};
use crate::{Error, Result};

/// How each observer's variance estimates are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimateMode {
    /// Mean of squares over `N` Gaussian wire samples per channel, with
    /// per-observer measurement noise when configured.
    Sampled,
    /// One draw from the exact law `level · χ²_N / N` per channel, shared by
    /// all observers. Ideal channels only.
    ChiSquareLaw,
    /// Estimates equal the true level (noiseless detection).
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub scheme: Scheme,
    pub detector: DetectorKind,
    pub thresholds: ThresholdSet,
    /// Samples per channel per exchange.
    pub samples: usize,
    pub channels: ChannelConfigs,
    pub estimates: EstimateMode,
    /// Let a party whose own decision stands apply the flip rule even though
    /// the exchange was discarded because of a flag. Off by default.
    pub flip_on_flagged: bool,
}

impl ProtocolConfig {
    pub fn new(scheme: Scheme, detector: DetectorKind, thresholds: ThresholdSet, samples: usize) -> Self {
        Self {
            scheme,
            detector,
            thresholds,
            samples,
            channels: ChannelConfigs::IDEAL,
            estimates: EstimateMode::Sampled,
            flip_on_flagged: false,
        }
    }

    pub fn validate(&self, env: &NoiseEnvironment) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::config("sample count N must be at least 1"));
        }
        self.thresholds.validate(env.alpha())?;
        self.channels.validate()?;
        if self.estimates == EstimateMode::ChiSquareLaw && !self.channels.is_ideal() {
            return Err(Error::config(
                "chi-square-law estimates cannot model measurement noise; use sampled estimates",
            ));
        }
        Ok(())
    }
}

/// Where an exchange sits in the stream key space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExchangeContext {
    pub master_seed: u64,
    pub shard: u64,
    pub exchange: u64,
    /// Also produce Eve's voltage estimate.
    pub observe_eve: bool,
}

impl ExchangeContext {
    pub fn new(master_seed: u64, shard: u64, exchange: u64) -> Self {
        Self {
            master_seed,
            shard,
            exchange,
            observe_eve: false,
        }
    }

    pub fn rng(&self, stream: StreamId) -> crate::rng::StreamRng {
        StreamKey::new(self.master_seed, self.shard, self.exchange, stream).rng()
    }
}

/// Variance estimates of one observer; `NaN` for a channel it did not measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub voltage: f64,
    pub current: f64,
}

impl Estimates {
    const NONE: Estimates = Estimates {
        voltage: f64::NAN,
        current: f64::NAN,
    };
}

/// Full trace of one bit-exchange period.
///
/// `d_b` is Alice's reading of Bob's bit and `d_a` Bob's reading of Alice's
/// bit. `error_alice` means `d_b != b_b`, `error_bob` means `d_a != b_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeRecord {
    pub index: u64,
    pub b_a: bool,
    pub b_b: bool,
    pub state_a_prev: MapState,
    pub state_b_prev: MapState,
    pub state_a_next: MapState,
    pub state_b_next: MapState,
    pub resistors: ResistorPair,
    pub est_alice: Estimates,
    pub est_bob: Estimates,
    pub est_eve_voltage: Option<f64>,
    pub peer_by_alice: Option<Resistor>,
    pub peer_by_bob: Option<Resistor>,
    pub d_a: Option<bool>,
    pub d_b: Option<bool>,
    pub flag_a: bool,
    pub flag_b: bool,
    pub accepted: bool,
    pub error_alice: bool,
    pub error_bob: bool,
}

impl ExchangeRecord {
    pub fn states_matched_before(&self) -> bool {
        self.state_a_prev == self.state_b_prev
    }

    pub fn states_matched_after(&self) -> bool {
        self.state_a_next == self.state_b_next
    }
}

/// Classical KLJN keeps a bit only when both ends decided that the peer used
/// the opposite resistor, i.e. both saw the intermediate level.
pub fn classical_kljn_accept(record: &ExchangeRecord) -> bool {
    let alice = record.peer_by_alice == Some(record.resistors.alice.opposite());
    let bob = record.peer_by_bob == Some(record.resistors.bob.opposite());
    !record.flag_a && !record.flag_b && alice && bob
}

/// A single Alice/Bob session. Not shared between threads while running.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub alice: PartyState,
    pub bob: PartyState,
}

impl Default for Session {
    fn default() -> Self {
        Self::new(MapState::Normal, MapState::Normal)
    }
}

impl Session {
    pub fn new(alice: MapState, bob: MapState) -> Self {
        Self {
            alice: PartyState::new(Role::Alice, alice),
            bob: PartyState::new(Role::Bob, bob),
        }
    }

    pub fn matched(&self) -> bool {
        self.alice.state == self.bob.state
    }

    /// Draw fresh bits from the context's streams and run one exchange.
    pub fn run_exchange(
        &mut self,
        env: &NoiseEnvironment,
        cfg: &ProtocolConfig,
        ctx: &ExchangeContext,
    ) -> ExchangeRecord {
        let b_a: bool = ctx.rng(StreamId::AliceBit).random();
        let b_b: bool = ctx.rng(StreamId::BobBit).random();
        self.exchange_with_bits(b_a, b_b, env, cfg, ctx)
    }

    /// Run one exchange with the given bits.
    pub fn exchange_with_bits(
        &mut self,
        b_a: bool,
        b_b: bool,
        env: &NoiseEnvironment,
        cfg: &ProtocolConfig,
        ctx: &ExchangeContext,
    ) -> ExchangeRecord {
        let resistors = self.resistors_for(b_a, b_b);
        let obs = observe(env, cfg, resistors, ctx);
        self.complete(b_a, b_b, resistors, obs, env, cfg, ctx.exchange)
    }

    /// Run one exchange whose estimates are `level · unit` per channel,
    /// shared by both parties. With `unit = χ²_N/N` this is the
    /// chi-square-law mode without touching the stream machinery, which
    /// lets callers replay the same draws under many threshold sets.
    #[allow(clippy::too_many_arguments)]
    pub fn exchange_with_unit_draws(
        &mut self,
        b_a: bool,
        b_b: bool,
        unit_v: f64,
        unit_i: f64,
        env: &NoiseEnvironment,
        cfg: &ProtocolConfig,
        index: u64,
    ) -> ExchangeRecord {
        let resistors = self.resistors_for(b_a, b_b);
        let est = Estimates {
            voltage: env.variance(Channel::Voltage, resistors) * unit_v,
            current: env.variance(Channel::Current, resistors) * unit_i,
        };
        let obs = Observations {
            alice: est,
            bob: est,
            eve: None,
        };
        self.complete(b_a, b_b, resistors, obs, env, cfg, index)
    }

    fn resistors_for(&self, b_a: bool, b_b: bool) -> ResistorPair {
        ResistorPair::new(
            map_bit_to_resistor(self.alice.state, b_a),
            map_bit_to_resistor(self.bob.state, b_b),
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn complete(
        &mut self,
        b_a: bool,
        b_b: bool,
        resistors: ResistorPair,
        obs: Observations,
        env: &NoiseEnvironment,
        cfg: &ProtocolConfig,
        index: u64,
    ) -> ExchangeRecord {
        let state_a_prev = self.alice.state;
        let state_b_prev = self.bob.state;
        let thr = &cfg.thresholds;
        let dec_a = detect(cfg.detector, resistors.alice, obs.alice.voltage, obs.alice.current, env, thr);
        let dec_b = detect(cfg.detector, resistors.bob, obs.bob.voltage, obs.bob.current, env, thr);

        let peer_by_alice = dec_a.peer();
        let peer_by_bob = dec_b.peer();
        // Each side reads the peer's resistor through its own mapping state.
        let d_b = peer_by_alice.map(|r| map_resistor_to_bit(state_a_prev, r));
        let d_a = peer_by_bob.map(|r| map_resistor_to_bit(state_b_prev, r));
        let flag_a = dec_a == Decision::Flag;
        let flag_b = dec_b == Decision::Flag;

        let mut record = ExchangeRecord {
            index,
            b_a,
            b_b,
            state_a_prev,
            state_b_prev,
            state_a_next: state_a_prev,
            state_b_next: state_b_prev,
            resistors,
            est_alice: obs.alice,
            est_bob: obs.bob,
            est_eve_voltage: obs.eve,
            peer_by_alice,
            peer_by_bob,
            d_a,
            d_b,
            flag_a,
            flag_b,
            accepted: false,
            error_alice: d_b.is_some_and(|d| d != b_b),
            error_bob: d_a.is_some_and(|d| d != b_a),
        };

        match cfg.scheme {
            Scheme::ClassicalKljn => {
                record.accepted = classical_kljn_accept(&record);
            }
            Scheme::FlipKljn => {
                record.accepted = !flag_a && !flag_b;
                let flip_allowed = record.accepted || cfg.flip_on_flagged;
                record.state_a_next = update_state(Role::Alice, b_a, d_b, flip_allowed, state_a_prev);
                record.state_b_next = update_state(Role::Bob, b_b, d_a, flip_allowed, state_b_prev);
            }
        }

        self.alice = PartyState {
            role: Role::Alice,
            state: record.state_a_next,
            bit: b_a,
            resistor: resistors.alice,
            detected: d_b,
            flagged: flag_a,
        };
        self.bob = PartyState {
            role: Role::Bob,
            state: record.state_b_next,
            bit: b_b,
            resistor: resistors.bob,
            detected: d_a,
            flagged: flag_b,
        };
        record
    }
}

/// Free-function form operating on a borrowed session.
pub fn run_exchange(
    session: &mut Session,
    env: &NoiseEnvironment,
    cfg: &ProtocolConfig,
    ctx: &ExchangeContext,
) -> ExchangeRecord {
    session.run_exchange(env, cfg, ctx)
}

struct Observations {
    alice: Estimates,
    bob: Estimates,
    eve: Option<f64>,
}

fn observe(env: &NoiseEnvironment, cfg: &ProtocolConfig, pair: ResistorPair, ctx: &ExchangeContext) -> Observations {
    let mut out = Observations {
        alice: Estimates::NONE,
        bob: Estimates::NONE,
        eve: None,
    };
    if cfg.detector.uses_voltage() || ctx.observe_eve {
        let [a, b, e] = channel_estimates(env, cfg, pair, ctx, Channel::Voltage, ctx.observe_eve);
        out.alice.voltage = a;
        out.bob.voltage = b;
        if ctx.observe_eve {
            out.eve = Some(e);
        }
    }
    if cfg.detector.uses_current() {
        let [a, b, _] = channel_estimates(env, cfg, pair, ctx, Channel::Current, false);
        out.alice.current = a;
        out.bob.current = b;
    }
    out
}

/// Estimates of one channel for `[alice, bob, eve]`.
///
/// The sampled path streams the wire samples instead of materialising them;
/// it performs the same arithmetic, in the same order, as
/// `generate` → `add_measurement_noise` → `estimate_variance`.
fn channel_estimates(
    env: &NoiseEnvironment,
    cfg: &ProtocolConfig,
    pair: ResistorPair,
    ctx: &ExchangeContext,
    channel: Channel,
    with_eve: bool,
) -> [f64; 3] {
    let level = env.variance(channel, pair);
    let n = cfg.samples;
    let wire_stream = match channel {
        Channel::Voltage => StreamId::WireVoltage,
        Channel::Current => StreamId::WireCurrent,
    };
    match cfg.estimates {
        EstimateMode::Exact => [level; 3],
        EstimateMode::ChiSquareLaw => {
            let chi = ChiSquared::new(n as f64).expect("n >= 1");
            let x: f64 = chi.sample(&mut ctx.rng(wire_stream));
            [level * (x / n as f64); 3]
        }
        EstimateMode::Sampled => {
            let noise_var = cfg.channels.get(channel).noise_variance(env);
            let mut wire = ctx.rng(wire_stream);
            let sd = level.sqrt();
            if noise_var == 0.0 {
                let mut acc = 0.0;
                for _ in 0..n {
                    let z: f64 = wire.sample(StandardNormal);
                    let x = sd * z;
                    acc += x * x;
                }
                return [acc / n as f64; 3];
            }
            let (sa, sb) = match channel {
                Channel::Voltage => (StreamId::AliceVoltageNoise, StreamId::BobVoltageNoise),
                Channel::Current => (StreamId::AliceCurrentNoise, StreamId::BobCurrentNoise),
            };
            let mut noise_a = ctx.rng(sa);
            let mut noise_b = ctx.rng(sb);
            let mut noise_e = with_eve.then(|| ctx.rng(StreamId::EveVoltageNoise));
            let sw = noise_var.sqrt();
            let mut acc = [0.0f64; 3];
            for _ in 0..n {
                let z: f64 = wire.sample(StandardNormal);
                let x = sd * z;
                let za: f64 = noise_a.sample(StandardNormal);
                let ya = x + sw * za;
                acc[0] += ya * ya;
                let zb: f64 = noise_b.sample(StandardNormal);
                let yb = x + sw * zb;
                acc[1] += yb * yb;
                if let Some(rng) = noise_e.as_mut() {
                    let ze: f64 = rng.sample(StandardNormal);
                    let ye = x + sw * ze;
                    acc[2] += ye * ye;
                }
            }
            let e = if with_eve { acc[2] / n as f64 } else { f64::NAN };
            [acc[0] / n as f64, acc[1] / n as f64, e]
        }
    }
}
