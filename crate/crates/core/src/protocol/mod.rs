//! Two-party Flip-KLJN / KLJN state machines.
//!
//! Bits are plain `bool`s (`true` is bit 1). Each party keeps a mapping state
//! that decides which resistor encodes its bit; in Flip-KLJN both parties
//! toggle the mapping after an accepted exchange whose bits were
//! Alice/Bob = 1/0, an event that only ever produces the intermediate level.

mod detector;
mod session;

pub use detector::{
    decide_peer_resistor_current, decide_peer_resistor_voltage, detect, jvcd_decide,
    selective_decide, Decision,
};
pub use session::{
    classical_kljn_accept, run_exchange, Estimates, EstimateMode, ExchangeContext,
    ExchangeRecord, ProtocolConfig, Session,
};

use serde::{Deserialize, Serialize};

pub use crate::noise::Resistor;
use crate::{Error, Result};

/// Bit-to-resistor mapping mode of one party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MapState {
    Normal,
    Flip,
}

impl MapState {
    pub fn opposite(self) -> Self {
        match self {
            MapState::Normal => MapState::Flip,
            MapState::Flip => MapState::Normal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Alice,
    Bob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    ClassicalKljn,
    FlipKljn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DetectorKind {
    VoltageOnly,
    CurrentOnly,
    /// Joint voltage-current detector: flags the exchange when the two
    /// channels disagree.
    Jvcd,
    /// Current channel when the own resistor is `L`, voltage when it is `H`.
    Selective,
}

impl DetectorKind {
    pub fn uses_voltage(self) -> bool {
        !matches!(self, DetectorKind::CurrentOnly)
    }

    pub fn uses_current(self) -> bool {
        !matches!(self, DetectorKind::VoltageOnly)
    }
}

/// Normal: 0→L, 1→H. Flip: 0→H, 1→L.
pub fn map_bit_to_resistor(state: MapState, bit: bool) -> Resistor {
    match (state, bit) {
        (MapState::Normal, false) | (MapState::Flip, true) => Resistor::Low,
        (MapState::Normal, true) | (MapState::Flip, false) => Resistor::High,
    }
}

pub fn map_resistor_to_bit(state: MapState, resistor: Resistor) -> bool {
    match (state, resistor) {
        (MapState::Normal, Resistor::Low) | (MapState::Flip, Resistor::High) => false,
        (MapState::Normal, Resistor::High) | (MapState::Flip, Resistor::Low) => true,
    }
}

/// Next mapping state of one party.
///
/// Alice toggles on `b_A/d_B = 1/0`, Bob on `d_A/b_B = 1/0`. Nothing changes
/// on an exchange that was not accepted or where the peer bit is undecided.
pub fn update_state(
    role: Role,
    own_bit: bool,
    peer_bit: Option<bool>,
    accepted: bool,
    state: MapState,
) -> MapState {
    let Some(peer) = peer_bit else {
        return state;
    };
    let trigger = match role {
        Role::Alice => own_bit && !peer,
        Role::Bob => peer && !own_bit,
    };
    if accepted && trigger {
        state.opposite()
    } else {
        state
    }
}

/// One party's protocol state after an exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyState {
    pub role: Role,
    pub state: MapState,
    pub bit: bool,
    pub resistor: Resistor,
    /// Detected peer bit; `None` before the first exchange or when flagged.
    pub detected: Option<bool>,
    pub flagged: bool,
}

impl PartyState {
    pub fn new(role: Role, state: MapState) -> Self {
        Self {
            role,
            state,
            bit: false,
            resistor: map_bit_to_resistor(state, false),
            detected: None,
            flagged: false,
        }
    }
}

/// Normalised decision thresholds. `beta`, `kappa` multiply `v_LL`; `eta`,
/// `xi` multiply `i_HH`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub beta: f64,
    pub kappa: f64,
    pub eta: f64,
    pub xi: f64,
}

/// Check `1 < lower < 2α/(1+α) < upper < α`.
pub fn check_ordering(alpha: f64, lower: f64, upper: f64) -> Result<()> {
    let mid = 2.0 * alpha / (1.0 + alpha);
    let ok = lower.is_finite() && upper.is_finite() && 1.0 < lower && lower < mid && mid < upper && upper < alpha;
    if ok {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "thresholds must satisfy 1 < {lower} < {mid} < {upper} < {alpha}"
        )))
    }
}

impl ThresholdSet {
    pub fn new(beta: f64, kappa: f64, eta: f64, xi: f64) -> Self {
        Self { beta, kappa, eta, xi }
    }

    /// Use the voltage pair for the current channel too. The normalised
    /// current ladder is the voltage ladder with `L` and `H` swapped, so this
    /// is the natural starting point when no current optimisation was run.
    pub fn mirrored(beta: f64, kappa: f64) -> Self {
        Self::new(beta, kappa, beta, kappa)
    }

    pub fn validate(&self, alpha: f64) -> Result<()> {
        check_ordering(alpha, self.beta, self.kappa)?;
        check_ordering(alpha, self.eta, self.xi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use MapState::*;

    #[test]
    fn bit_resistor_mapping() {
        assert_eq!(map_bit_to_resistor(Normal, false), Resistor::Low);
        assert_eq!(map_bit_to_resistor(Normal, true), Resistor::High);
        assert_eq!(map_bit_to_resistor(Flip, false), Resistor::High);
        assert_eq!(map_bit_to_resistor(Flip, true), Resistor::Low);
        assert!(map_resistor_to_bit(Normal, Resistor::High));
        assert!(map_resistor_to_bit(Flip, Resistor::Low));
        for s in [Normal, Flip] {
            for b in [false, true] {
                assert_eq!(map_resistor_to_bit(s, map_bit_to_resistor(s, b)), b);
            }
        }
    }

    #[test]
    fn flip_rule() {
        assert_eq!(update_state(Role::Alice, true, Some(false), true, Normal), Flip);
        assert_eq!(update_state(Role::Alice, false, Some(true), true, Normal), Normal);
        assert_eq!(update_state(Role::Alice, true, Some(false), false, Normal), Normal);
        assert_eq!(update_state(Role::Bob, false, Some(true), true, Flip), Normal);
        assert_eq!(update_state(Role::Bob, true, Some(false), true, Flip), Flip);
        assert_eq!(update_state(Role::Bob, false, None, true, Flip), Flip);
    }

    #[test]
    fn ordering_check() {
        assert!(ThresholdSet::mirrored(1.4, 4.0).validate(10.0).is_ok());
        assert!(ThresholdSet::mirrored(1.9, 4.0).validate(10.0).is_err());
        assert!(ThresholdSet::mirrored(1.4, 10.0).validate(10.0).is_err());
        assert!(ThresholdSet::mirrored(1.0, 4.0).validate(10.0).is_err());
        assert!(ThresholdSet::new(1.4, 4.0, 1.4, f64::NAN).validate(10.0).is_err());
    }
}
