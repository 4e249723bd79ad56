use serde::{Deserialize, Serialize};
use std::fmt;

/// Default number of ticks that make up one smartcard validity period.
///
/// Twelve keeps half-period offsets expressible as whole ticks, which the
/// validators and tests rely on.
pub const DEFAULT_TICKS_PER_U: u64 = 12;

/// A discrete instant on the system clock.
///
/// All scheduling and validity math happens in whole ticks. Arithmetic on
/// ticks must never wrap; code paths that combine untrusted durations use the
/// checked helpers and surface overflow as an error.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Tick(pub u64);

impl Tick {
    pub const ZERO: Tick = Tick(0);

    pub fn checked_add(self, ticks: u64) -> Option<Tick> {
        self.0.checked_add(ticks).map(Tick)
    }

    pub fn checked_sub(self, ticks: u64) -> Option<Tick> {
        self.0.checked_sub(ticks).map(Tick)
    }

    pub fn saturating_add(self, ticks: u64) -> Tick {
        Tick(self.0.saturating_add(ticks))
    }

    /// Ticks elapsed since `earlier`, or zero if `earlier` is later.
    pub fn since(self, earlier: Tick) -> u64 {
        self.0.saturating_sub(earlier.0)
    }
}

impl fmt::Display for Tick {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for Tick {
    fn from(value: u64) -> Self {
        Tick(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_numeric() {
        assert!(Tick(3) < Tick(4));
        assert_eq!(Tick(7), Tick(7));
    }

    #[test]
    fn checked_add_detects_overflow() {
        assert_eq!(Tick(u64::MAX).checked_add(1), None);
        assert_eq!(Tick(5).checked_add(7), Some(Tick(12)));
    }

    #[test]
    fn checked_sub_detects_underflow() {
        assert_eq!(Tick(3).checked_sub(4), None);
        assert_eq!(Tick(12).checked_sub(12), Some(Tick::ZERO));
    }
}
