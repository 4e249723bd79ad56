use serde::{Deserialize, Serialize};
use std::fmt;

/// Lifecycle position of a certificate at some tick.
///
/// Within the validity window a certificate moves through up to three
/// phases. During ramp-up it exists and is distributed (pinned) but signs
/// nothing. During the active phase it signs. During the passive phase it
/// signs nothing new but signatures it made earlier still verify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    BeforeValidity,
    RampUp,
    Active,
    Passive,
    Expired,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Phase::BeforeValidity => "before-validity",
            Phase::RampUp => "ramp-up",
            Phase::Active => "active",
            Phase::Passive => "passive",
            Phase::Expired => "expired",
        };
        f.write_str(name)
    }
}

/// Durations, in ticks, of the three phases of one certificate generation.
///
/// `active` must be at least one tick; ramp-up and passive may be empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhasePlan {
    pub ramp_up: u64,
    pub active: u64,
    pub passive: u64,
}

impl PhasePlan {
    pub fn new(ramp_up: u64, active: u64, passive: u64) -> PhasePlan {
        PhasePlan { ramp_up, active, passive }
    }

    /// Sum of all three phase durations, or `None` on overflow.
    pub fn checked_total(&self) -> Option<u64> {
        self.ramp_up
            .checked_add(self.active)?
            .checked_add(self.passive)
    }

    /// Sum of all three phase durations. Saturates at `u64::MAX`; validation
    /// paths that care about overflow use [`PhasePlan::checked_total`].
    pub fn total_validity(&self) -> u64 {
        self.ramp_up
            .saturating_add(self.active)
            .saturating_add(self.passive)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_is_the_sum_of_phases() {
        let plan = PhasePlan::new(12, 24, 24);
        assert_eq!(plan.total_validity(), 60);
        assert_eq!(plan.checked_total(), Some(60));
    }

    #[test]
    fn checked_total_reports_overflow() {
        let plan = PhasePlan::new(u64::MAX, 1, 0);
        assert_eq!(plan.checked_total(), None);
        assert_eq!(plan.total_validity(), u64::MAX);
    }
}
