//! Passive eavesdropper models.
//!
//! Eve sees the wire voltage only and knows `α` and `N`. She classifies the
//! estimate into one of the three levels with thresholds halfway between
//! adjacent levels, then turns non-intermediate levels into bits with some
//! belief about the parties' mapping state. Intermediate levels carry no
//! information about who holds which resistor, so their bits stay
//! undetermined.

use serde::{Deserialize, Serialize};

use crate::noise::{NoiseEnvironment, NoiseLevel, Resistor};
use crate::protocol::{map_resistor_to_bit, MapState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EveModel {
    None,
    /// Level classifier that decodes with the Normal mapping.
    LevelClassifier,
    /// Decodes with a fixed assumed mapping state.
    StateAssuming(MapState),
    /// Keeps a state hypothesis and toggles it on a coin flip whenever she
    /// sees the intermediate level, since a state change can only follow one.
    StateTracking,
}

/// Eve's output for one exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EveRecord {
    pub level: NoiseLevel,
    /// Guessed `(b_A, b_B)`, `None` when undetermined.
    pub bits: Option<(bool, bool)>,
}

/// Per-session memory of the tracking model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EveHistory {
    pub hypothesis: MapState,
}

impl Default for EveHistory {
    fn default() -> Self {
        Self {
            hypothesis: MapState::Normal,
        }
    }
}

/// Midpoint thresholds `((1+m)/2, (m+α)/2)·v_LL`.
pub fn eve_thresholds(env: &NoiseEnvironment) -> (f64, f64) {
    let m = env.intermediate_ratio();
    let a = env.alpha();
    (0.5 * (1.0 + m) * env.v_ll(), 0.5 * (m + a) * env.v_ll())
}

pub fn classify_level(sigma2_v: f64, env: &NoiseEnvironment) -> NoiseLevel {
    let (lo, hi) = eve_thresholds(env);
    if sigma2_v < lo {
        NoiseLevel::Low
    } else if sigma2_v < hi {
        NoiseLevel::Intermediate
    } else {
        NoiseLevel::High
    }
}

fn decode(level: NoiseLevel, state: MapState) -> Option<(bool, bool)> {
    let r = match level {
        NoiseLevel::Low => Resistor::Low,
        NoiseLevel::High => Resistor::High,
        NoiseLevel::Intermediate => return None,
    };
    let b = map_resistor_to_bit(state, r);
    Some((b, b))
}

/// Eve's guess for one exchange. `coin` is only called by the tracking
/// model, and only at an intermediate level. Returns `None` for
/// [`EveModel::None`].
pub fn eve_decide(
    model: EveModel,
    sigma2_v: f64,
    env: &NoiseEnvironment,
    history: &mut EveHistory,
    coin: impl FnOnce() -> bool,
) -> Option<EveRecord> {
    let level = classify_level(sigma2_v, env);
    let bits = match model {
        EveModel::None => return None,
        EveModel::LevelClassifier => decode(level, MapState::Normal),
        EveModel::StateAssuming(s) => decode(level, s),
        EveModel::StateTracking => {
            if level.is_intermediate() && coin() {
                history.hypothesis = history.hypothesis.opposite();
            }
            decode(level, history.hypothesis)
        }
    };
    Some(EveRecord { level, bits })
}

/// Score in half-bits out of 4: each bit earns 2 when right, 1 when
/// undetermined (a coin flip on average) and 0 when wrong.
pub fn score_half_units(guess: Option<(bool, bool)>, truth: (bool, bool)) -> u64 {
    match guess {
        None => 2,
        Some((a, b)) => 2 * (a == truth.0) as u64 + 2 * (b == truth.1) as u64,
    }
}
