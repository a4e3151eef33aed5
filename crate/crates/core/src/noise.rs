//! Johnson-noise model of the KLJN loop.
//!
//! Voltage on the wire is the thermal noise of the parallel combination of
//! the two connected resistors; loop current is the noise voltage of the
//! series loop divided through, giving `4kT·Δf / (R_A + R_B)`. Normalised to
//! their smallest level, both channels share the ladder `1 < 2α/(1+α) < α`,
//! with the roles of `L` and `H` swapped for the current.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Boltzmann constant as used for the physical presets (J/K).
pub const BOLTZMANN: f64 = 1.38e-23;
pub const DEFAULT_TEMPERATURE: f64 = 300.0;
pub const DEFAULT_BANDWIDTH: f64 = 1e6;
pub const DEFAULT_R_LOW: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Resistor {
    Low,
    High,
}

impl Resistor {
    pub fn opposite(self) -> Self {
        match self {
            Resistor::Low => Resistor::High,
            Resistor::High => Resistor::Low,
        }
    }
}

/// Resistors connected by (Alice, Bob) during one exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResistorPair {
    pub alice: Resistor,
    pub bob: Resistor,
}

impl ResistorPair {
    pub fn new(alice: Resistor, bob: Resistor) -> Self {
        Self { alice, bob }
    }

    pub fn level(&self) -> NoiseLevel {
        match (self.alice, self.bob) {
            (Resistor::Low, Resistor::Low) => NoiseLevel::Low,
            (Resistor::High, Resistor::High) => NoiseLevel::High,
            _ => NoiseLevel::Intermediate,
        }
    }

    pub fn all() -> [ResistorPair; 4] {
        use Resistor::*;
        [
            ResistorPair::new(Low, Low),
            ResistorPair::new(Low, High),
            ResistorPair::new(High, Low),
            ResistorPair::new(High, High),
        ]
    }
}

/// Mean-square voltage level on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseLevel {
    Low,
    Intermediate,
    High,
}

impl NoiseLevel {
    pub fn is_intermediate(self) -> bool {
        self == NoiseLevel::Intermediate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    Voltage,
    Current,
}

/// Measurement signal-to-noise ratio of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Snr {
    Ideal,
    Db(f64),
}

impl Snr {
    pub fn is_ideal(&self) -> bool {
        matches!(self, Snr::Ideal)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Snr::Db(db) if !db.is_finite() => {
                Err(Error::config(format!("SNR must be finite, got {db} dB")))
            }
            _ => Ok(()),
        }
    }
}

/// Measurement noise setting for one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementChannel {
    pub channel: Channel,
    pub snr: Snr,
}

impl MeasurementChannel {
    /// Variance of the additive measurement noise, or 0 when ideal.
    pub fn noise_variance(&self, env: &NoiseEnvironment) -> f64 {
        match self.snr {
            Snr::Ideal => 0.0,
            Snr::Db(db) => average_signal_power(env, self.channel) / 10f64.powf(db / 10.0),
        }
    }
}

/// Measurement settings for both channels, shared by every observer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfigs {
    pub voltage: Snr,
    pub current: Snr,
}

impl ChannelConfigs {
    pub const IDEAL: ChannelConfigs = ChannelConfigs {
        voltage: Snr::Ideal,
        current: Snr::Ideal,
    };

    pub fn get(&self, channel: Channel) -> MeasurementChannel {
        let snr = match channel {
            Channel::Voltage => self.voltage,
            Channel::Current => self.current,
        };
        MeasurementChannel { channel, snr }
    }

    pub fn is_ideal(&self) -> bool {
        self.voltage.is_ideal() && self.current.is_ideal()
    }

    pub fn validate(&self) -> Result<()> {
        self.voltage.validate()?;
        self.current.validate()
    }
}

impl Default for ChannelConfigs {
    fn default() -> Self {
        Self::IDEAL
    }
}

/// Physical constants of the loop and the six derived variance levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseEnvironment {
    k: f64,
    temperature: f64,
    bandwidth: f64,
    r_low: f64,
    alpha: f64,
    r_high: f64,
    voltage: [f64; 3],
    current: [f64; 3],
}

/// Voltage levels `[LL, LH, HH]` and current levels `[LL, LH, HH]` for the
/// given resistor values. No validation; `r_low == r_high` collapses both
/// ladders to a single level.
pub fn johnson_levels(four_kt_df: f64, r_low: f64, r_high: f64) -> ([f64; 3], [f64; 3]) {
    let parallel = |a: f64, b: f64| a * b / (a + b);
    let voltage = [
        four_kt_df * parallel(r_low, r_low),
        four_kt_df * parallel(r_low, r_high),
        four_kt_df * parallel(r_high, r_high),
    ];
    let current = [
        four_kt_df / (r_low + r_low),
        four_kt_df / (r_low + r_high),
        four_kt_df / (r_high + r_high),
    ];
    (voltage, current)
}

impl NoiseEnvironment {
    pub fn new(k: f64, temperature: f64, bandwidth: f64, r_low: f64, alpha: f64) -> Result<Self> {
        for (name, v) in [
            ("k", k),
            ("temperature", temperature),
            ("bandwidth", bandwidth),
            ("r_low", r_low),
            ("alpha", alpha),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if alpha <= 1.0 {
            return Err(Error::config(format!(
                "alpha = R_H/R_L must satisfy alpha > 1, got {alpha}"
            )));
        }
        let r_high = alpha * r_low;
        let (voltage, current) = johnson_levels(4.0 * k * temperature * bandwidth, r_low, r_high);
        Ok(Self {
            k,
            temperature,
            bandwidth,
            r_low,
            alpha,
            r_high,
            voltage,
            current,
        })
    }

    /// Room-temperature loop with `R_L = 1 kΩ` over a 1 MHz bandwidth.
    pub fn with_alpha(alpha: f64) -> Result<Self> {
        Self::new(BOLTZMANN, DEFAULT_TEMPERATURE, DEFAULT_BANDWIDTH, DEFAULT_R_LOW, alpha)
    }

    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn temperature(&self) -> f64 {
        self.temperature
    }
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
    pub fn r_low(&self) -> f64 {
        self.r_low
    }
    pub fn r_high(&self) -> f64 {
        self.r_high
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn v_ll(&self) -> f64 {
        self.voltage[0]
    }
    pub fn v_lh(&self) -> f64 {
        self.voltage[1]
    }
    pub fn v_hh(&self) -> f64 {
        self.voltage[2]
    }
    pub fn i_ll(&self) -> f64 {
        self.current[0]
    }
    pub fn i_lh(&self) -> f64 {
        self.current[1]
    }
    pub fn i_hh(&self) -> f64 {
        self.current[2]
    }

    /// `2α/(1+α)`: the intermediate level relative to the smallest one.
    pub fn intermediate_ratio(&self) -> f64 {
        2.0 * self.alpha / (1.0 + self.alpha)
    }

    pub fn levels(&self, channel: Channel) -> [f64; 3] {
        match channel {
            Channel::Voltage => self.voltage,
            Channel::Current => self.current,
        }
    }

    /// The level a channel's thresholds are expressed against: `v_LL` for
    /// voltage, `i_HH` for current.
    pub fn reference_level(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Voltage => self.v_ll(),
            Channel::Current => self.i_hh(),
        }
    }

    pub fn variance(&self, channel: Channel, pair: ResistorPair) -> f64 {
        let idx = match pair.level() {
            NoiseLevel::Low => 0,
            NoiseLevel::Intermediate => 1,
            NoiseLevel::High => 2,
        };
        self.levels(channel)[idx]
    }
}

/// Mean of the three variance levels of `channel`.
pub fn average_signal_power(env: &NoiseEnvironment, channel: Channel) -> f64 {
    let l = env.levels(channel);
    (l[0] + l[1] + l[2]) / 3.0
}

/// One exchange's worth of shared wire observations.
#[derive(Debug, Clone, PartialEq)]
pub struct WireSamples {
    pub voltage: Vec<f64>,
    pub current: Vec<f64>,
    pub truth: ResistorPair,
}

impl WireSamples {
    pub fn len(&self) -> usize {
        self.voltage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voltage.is_empty()
    }

    pub fn channel(&self, channel: Channel) -> &[f64] {
        match channel {
            Channel::Voltage => &self.voltage,
            Channel::Current => &self.current,
        }
    }
}

/// Append `n` draws of `N(0, variance)` to `out`.
pub(crate) fn fill_gaussian<R: Rng + ?Sized>(variance: f64, n: usize, rng: &mut R, out: &mut Vec<f64>) {
    let sd = variance.sqrt();
    out.extend((0..n).map(|_| {
        let z: f64 = rng.sample(StandardNormal);
        sd * z
    }));
}

/// Draw `n` voltage samples followed by `n` current samples for `pair`.
pub fn generate_exchange_samples<R: Rng + ?Sized>(
    env: &NoiseEnvironment,
    pair: ResistorPair,
    n: usize,
    rng: &mut R,
) -> Result<WireSamples> {
    if n == 0 {
        return Err(Error::argument("sample count N must be at least 1"));
    }
    let mut voltage = Vec::with_capacity(n);
    let mut current = Vec::with_capacity(n);
    fill_gaussian(env.variance(Channel::Voltage, pair), n, rng, &mut voltage);
    fill_gaussian(env.variance(Channel::Current, pair), n, rng, &mut current);
    Ok(WireSamples {
        voltage,
        current,
        truth: pair,
    })
}

/// One observer's view of `samples`: independent Gaussian measurement noise
/// added per sample and per channel. Ideal channels are copied unchanged.
pub fn add_measurement_noise<R: Rng + ?Sized>(
    samples: &WireSamples,
    configs: &ChannelConfigs,
    env: &NoiseEnvironment,
    rng: &mut R,
) -> WireSamples {
    let mut noisy = |channel: Channel| -> Vec<f64> {
        let src = samples.channel(channel);
        let var = configs.get(channel).noise_variance(env);
        if var == 0.0 {
            return src.to_vec();
        }
        let sd = var.sqrt();
        src.iter()
            .map(|&x| {
                let z: f64 = rng.sample(StandardNormal);
                x + sd * z
            })
            .collect()
    };
    let voltage = noisy(Channel::Voltage);
    let current = noisy(Channel::Current);
    WireSamples {
        voltage,
        current,
        truth: samples.truth,
    }
}

/// Mean of squares `(1/N)·Σ x_k²` (the process mean is known to be zero).
pub fn estimate_variance(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::argument("cannot estimate variance of an empty sequence"));
    }
    let mut acc = 0.0;
    for &x in samples {
        acc += x * x;
    }
    Ok(acc / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{StreamId, StreamKey};
    use approx::assert_relative_eq;

    fn env10() -> NoiseEnvironment {
        NoiseEnvironment::new(1.38e-23, 300.0, 1e6, 1000.0, 10.0).unwrap()
    }

    #[test]
    fn voltage_levels_physical_constants() {
        let env = env10();
        // 4 * 1.38e-23 * 300 * 1e6 * 1000 / 2
        assert_relative_eq!(env.v_ll(), 8.28e-12, max_relative = 1e-12);
        assert_relative_eq!(env.v_lh(), 20.0 / 11.0 * 8.28e-12, max_relative = 1e-12);
        assert_relative_eq!(env.v_lh(), 1.5054e-11, max_relative = 1e-4);
        assert_relative_eq!(env.v_hh(), 8.28e-11, max_relative = 1e-12);
    }

    #[test]
    fn equal_resistors_collapse_levels() {
        let (v, i) = johnson_levels(4.0 * 1.38e-23 * 300.0 * 1e6, 1000.0, 1000.0);
        assert_eq!(v[0], v[1]);
        assert_eq!(v[1], v[2]);
        assert_eq!(i[0], i[2]);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(matches!(NoiseEnvironment::with_alpha(1.0), Err(Error::Config(_))));
        assert!(matches!(NoiseEnvironment::with_alpha(0.5), Err(Error::Config(_))));
        assert!(NoiseEnvironment::new(0.0, 300.0, 1e6, 1e3, 10.0).is_err());
        assert!(NoiseEnvironment::new(1.38e-23, -1.0, 1e6, 1e3, 10.0).is_err());
        assert!(NoiseEnvironment::new(1.38e-23, 300.0, f64::NAN, 1e3, 10.0).is_err());
    }

    #[test]
    fn average_power_voltage() {
        let env = env10();
        let p = average_signal_power(&env, Channel::Voltage);
        assert_relative_eq!(p, (8.28e-12 + 20.0 / 11.0 * 8.28e-12 + 8.28e-11) / 3.0, max_relative = 1e-12);
        assert_relative_eq!(p, 3.538e-11, max_relative = 1e-3);
        let pi = average_signal_power(&env, Channel::Current);
        assert_relative_eq!(pi, (env.i_ll() + env.i_lh() + env.i_hh()) / 3.0);
        let zero_db = MeasurementChannel { channel: Channel::Voltage, snr: Snr::Db(0.0) };
        assert_relative_eq!(zero_db.noise_variance(&env), p, max_relative = 1e-15);
    }

    #[test]
    fn zero_samples_rejected() {
        let env = env10();
        let mut rng = StreamKey::new(1, 0, 0, StreamId::Auxiliary).rng();
        let pair = ResistorPair::new(Resistor::Low, Resistor::Low);
        assert!(matches!(generate_exchange_samples(&env, pair, 0, &mut rng), Err(Error::Argument(_))));
        assert!(matches!(estimate_variance(&[]), Err(Error::Argument(_))));
    }

    #[test]
    fn estimator_trivial_cases() {
        assert_eq!(estimate_variance(&[0.0; 16]).unwrap(), 0.0);
        assert_relative_eq!(estimate_variance(&[3.0; 7]).unwrap(), 9.0);
        assert_relative_eq!(estimate_variance(&[-2.5; 4]).unwrap(), 6.25);
    }

    #[test]
    fn samples_replay_bit_identically() {
        let env = env10();
        let pair = ResistorPair::new(Resistor::High, Resistor::Low);
        let key = StreamKey::new(99, 0, 5, StreamId::WireVoltage);
        let a = generate_exchange_samples(&env, pair, 4, &mut key.rng()).unwrap();
        let b = generate_exchange_samples(&env, pair, 4, &mut key.rng()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.voltage.len(), 4);
        assert_eq!(a.current.len(), 4);
    }

    #[test]
    fn large_n_variance_matches_level() {
        let env = env10();
        let n = 1_000_000;
        let ll = ResistorPair::new(Resistor::Low, Resistor::Low);
        let s = generate_exchange_samples(&env, ll, n, &mut StreamKey::new(7, 0, 0, StreamId::WireVoltage).rng())
            .unwrap();
        assert_relative_eq!(estimate_variance(&s.voltage).unwrap(), env.v_ll(), max_relative = 0.01);

        let hh = ResistorPair::new(Resistor::High, Resistor::High);
        let s = generate_exchange_samples(&env, hh, n, &mut StreamKey::new(7, 0, 1, StreamId::WireVoltage).rng())
            .unwrap();
        assert_relative_eq!(estimate_variance(&s.current).unwrap(), env.i_hh(), max_relative = 0.01);
    }

    #[test]
    fn ideal_measurement_is_identity() {
        let env = env10();
        let pair = ResistorPair::new(Resistor::Low, Resistor::High);
        let s = generate_exchange_samples(&env, pair, 32, &mut StreamKey::new(3, 0, 0, StreamId::WireVoltage).rng())
            .unwrap();
        let out = add_measurement_noise(&s, &ChannelConfigs::IDEAL, &env, &mut StreamKey::new(3, 0, 0, StreamId::Auxiliary).rng());
        assert_eq!(out, s);
    }

    #[test]
    fn observers_get_independent_noise_on_shared_signal() {
        let env = env10();
        let pair = ResistorPair::new(Resistor::Low, Resistor::High);
        let s = generate_exchange_samples(&env, pair, 64, &mut StreamKey::new(3, 0, 0, StreamId::WireVoltage).rng())
            .unwrap();
        let cfg = ChannelConfigs { voltage: Snr::Db(10.0), current: Snr::Db(10.0) };
        let alice = add_measurement_noise(&s, &cfg, &env, &mut StreamKey::new(3, 0, 0, StreamId::AliceVoltageNoise).rng());
        let bob = add_measurement_noise(&s, &cfg, &env, &mut StreamKey::new(3, 0, 0, StreamId::BobVoltageNoise).rng());
        assert_ne!(alice.voltage, bob.voltage);
        assert_ne!(alice.voltage, s.voltage);
        assert_eq!(alice.truth, s.truth);
    }

    #[test]
    fn measurement_noise_variance_is_power_over_snr() {
        let env = env10();
        let cfg = ChannelConfigs { voltage: Snr::Db(0.0), current: Snr::Ideal };
        let n = 400_000;
        let zeros = WireSamples {
            voltage: vec![0.0; n],
            current: vec![0.0; n],
            truth: ResistorPair::new(Resistor::Low, Resistor::Low),
        };
        let out = add_measurement_noise(&zeros, &cfg, &env, &mut StreamKey::new(5, 0, 0, StreamId::Auxiliary).rng());
        let est = estimate_variance(&out.voltage).unwrap();
        assert_relative_eq!(est, 3.538e-11, max_relative = 0.01);
        assert!(out.current.iter().all(|&x| x == 0.0));
    }
}
