//! Per-party decision rules.
//!
//! Each party knows its own resistor, so only one threshold per channel is
//! relevant: it separates the two wire levels its peer can produce. Ties go
//! to the higher-variance hypothesis on the voltage channel; on the current
//! channel a value equal to the threshold resolves to peer `L`.

use super::{DetectorKind, ThresholdSet};
use crate::noise::{Channel, NoiseEnvironment, Resistor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Peer(Resistor),
    /// Voltage and current disagreed (JVCD only).
    Flag,
}

impl Decision {
    pub fn peer(self) -> Option<Resistor> {
        match self {
            Decision::Peer(r) => Some(r),
            Decision::Flag => None,
        }
    }
}

pub fn decide_peer_resistor_voltage(
    own: Resistor,
    sigma2_v: f64,
    env: &NoiseEnvironment,
    thresholds: &ThresholdSet,
) -> Resistor {
    let factor = match own {
        Resistor::Low => thresholds.beta,
        Resistor::High => thresholds.kappa,
    };
    if sigma2_v < factor * env.reference_level(Channel::Voltage) {
        Resistor::Low
    } else {
        Resistor::High
    }
}

/// Current falls as resistance grows, so a small estimate means peer `H`.
pub fn decide_peer_resistor_current(
    own: Resistor,
    sigma2_i: f64,
    env: &NoiseEnvironment,
    thresholds: &ThresholdSet,
) -> Resistor {
    let factor = match own {
        Resistor::High => thresholds.eta,
        Resistor::Low => thresholds.xi,
    };
    if sigma2_i < factor * env.reference_level(Channel::Current) {
        Resistor::High
    } else {
        Resistor::Low
    }
}

pub fn jvcd_decide(
    own: Resistor,
    sigma2_v: f64,
    sigma2_i: f64,
    env: &NoiseEnvironment,
    thresholds: &ThresholdSet,
) -> Decision {
    let v = decide_peer_resistor_voltage(own, sigma2_v, env, thresholds);
    let i = decide_peer_resistor_current(own, sigma2_i, env, thresholds);
    if v == i {
        Decision::Peer(v)
    } else {
        Decision::Flag
    }
}

pub fn selective_decide(
    own: Resistor,
    sigma2_v: f64,
    sigma2_i: f64,
    env: &NoiseEnvironment,
    thresholds: &ThresholdSet,
) -> Resistor {
    match own {
        Resistor::Low => decide_peer_resistor_current(own, sigma2_i, env, thresholds),
        Resistor::High => decide_peer_resistor_voltage(own, sigma2_v, env, thresholds),
    }
}

/// Dispatch on the detector kind. Channels the detector does not use may be
/// passed as `NaN`.
pub fn detect(
    kind: DetectorKind,
    own: Resistor,
    sigma2_v: f64,
    sigma2_i: f64,
    env: &NoiseEnvironment,
    thresholds: &ThresholdSet,
) -> Decision {
    match kind {
        DetectorKind::VoltageOnly => {
            Decision::Peer(decide_peer_resistor_voltage(own, sigma2_v, env, thresholds))
        }
        DetectorKind::CurrentOnly => {
            Decision::Peer(decide_peer_resistor_current(own, sigma2_i, env, thresholds))
        }
        DetectorKind::Jvcd => jvcd_decide(own, sigma2_v, sigma2_i, env, thresholds),
        DetectorKind::Selective => {
            Decision::Peer(selective_decide(own, sigma2_v, sigma2_i, env, thresholds))
        }
    }
}
