use crate::role::Role;
use crate::tick::Tick;
use std::fmt;

/// Requirement on a single phase duration, in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// The duration must be at least this many ticks.
    AtLeast(u64),
    /// The duration must be exactly this many ticks.
    Exactly(u64),
}

impl Bound {
    /// The smallest duration satisfying the bound; planners use this as the
    /// duration they actually schedule.
    pub fn base(self) -> u64 {
        match self {
            Bound::AtLeast(v) | Bound::Exactly(v) => v,
        }
    }

    pub fn admits(self, value: u64) -> bool {
        match self {
            Bound::AtLeast(v) => value >= v,
            Bound::Exactly(v) => value == v,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Bound::Exactly(_))
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtLeast(v) => write!(f, ">= {v}"),
            Bound::Exactly(v) => write!(f, "= {v}"),
        }
    }
}

/// Phase duration requirements for one role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoleBounds {
    pub ramp_up: Bound,
    pub active: Bound,
    pub passive: Bound,
}

impl RoleBounds {
    /// Smallest total validity any conforming generation can have.
    pub fn min_validity(&self) -> u64 {
        self.ramp_up.base() + self.active.base() + self.passive.base()
    }
}

/// Per-role phase duration requirements driving planning and validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RolloverProfile {
    bounds: [RoleBounds; 10],
}

impl RolloverProfile {
    pub fn new(bounds: [RoleBounds; 10]) -> RolloverProfile {
        RolloverProfile { bounds }
    }

    pub fn bounds(&self, role: Role) -> &RoleBounds {
        &self.bounds[role.code() as usize]
    }

    pub fn set(&mut self, role: Role, bounds: RoleBounds) {
        self.bounds[role.code() as usize] = bounds;
    }

    pub fn set_ramp_up(&mut self, role: Role, bound: Bound) {
        self.bounds[role.code() as usize].ramp_up = bound;
    }

    pub fn set_active(&mut self, role: Role, bound: Bound) {
        self.bounds[role.code() as usize].active = bound;
    }

    pub fn set_passive(&mut self, role: Role, bound: Bound) {
        self.bounds[role.code() as usize].passive = bound;
    }
}

/// The baseline phase requirements, scaled to a smartcard validity period
/// of `u` ticks.
///
/// These are the minimal durations under which every smartcard stays fully
/// usable for its whole lifetime: cards pin the register, timestamp and
/// root certificates that exist when they are manufactured, so any
/// certificate they will ever need must already be in ramp-up by then, and
/// every chain they carry must outlive them. Roles whose certificates are
/// issued online and cheaply replaced (minting, service providers,
/// smartcards themselves) get exact short validities instead of minimums.
///
/// Ramp-up requirements apply to rollover generations; a first generation
/// starts the system and has nobody to ramp up for.
///
/// Panics when `u` is zero: a zero-length validity period makes every
/// requirement degenerate.
pub fn baseline_minimums(u: u64) -> RolloverProfile {
    assert!(u >= 1, "the base unit u must be at least one tick");
    let root = RoleBounds {
        ramp_up: Bound::AtLeast(u),
        active: Bound::AtLeast(2 * u),
        passive: Bound::AtLeast(2 * u),
    };
    let hardware = RoleBounds {
        ramp_up: Bound::AtLeast(0),
        active: Bound::AtLeast(2 * u),
        passive: Bound::AtLeast(2 * u),
    };
    let manufacturer = RoleBounds {
        ramp_up: Bound::AtLeast(0),
        active: Bound::AtLeast(u),
        passive: Bound::AtLeast(u),
    };
    let smartcard = RoleBounds {
        ramp_up: Bound::Exactly(0),
        active: Bound::Exactly(u),
        passive: Bound::Exactly(0),
    };
    let operational = RoleBounds {
        ramp_up: Bound::AtLeast(0),
        active: Bound::AtLeast(2 * u),
        passive: Bound::AtLeast(u),
    };
    let register = RoleBounds {
        ramp_up: Bound::AtLeast(u),
        active: Bound::AtLeast(u),
        passive: Bound::Exactly(0),
    };
    let minting = RoleBounds {
        ramp_up: Bound::Exactly(0),
        active: Bound::Exactly(2 * u),
        passive: Bound::Exactly(0),
    };
    let financial = RoleBounds {
        ramp_up: Bound::AtLeast(0),
        active: Bound::AtLeast(2 * u),
        passive: Bound::AtLeast(u),
    };
    let fsp = RoleBounds {
        ramp_up: Bound::Exactly(0),
        active: Bound::Exactly(2 * u),
        passive: Bound::Exactly(0),
    };
    RolloverProfile::new([
        root,
        hardware,
        manufacturer,
        smartcard,
        operational,
        register, // central register
        register, // timestamp service, same requirements
        minting,
        financial,
        fsp,
    ])
}

/// Scales `first_root_active`, given in multiples of `u`, to ticks.
pub fn u_multiple(u: u64, multiple: u64) -> Option<Tick> {
    multiple.checked_mul(u).map(Tick)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_minimum_validities() {
        let p = baseline_minimums(12);
        assert_eq!(p.bounds(Role::RootCa).min_validity(), 60);
        assert_eq!(p.bounds(Role::HardwareCa).min_validity(), 48);
        assert_eq!(p.bounds(Role::ManufacturerCa).min_validity(), 24);
        assert_eq!(p.bounds(Role::SmartcardEe).min_validity(), 12);
        assert_eq!(p.bounds(Role::OperationalCa).min_validity(), 36);
        assert_eq!(p.bounds(Role::CentralRegister).min_validity(), 24);
        assert_eq!(p.bounds(Role::TimestampService).min_validity(), 24);
        assert_eq!(p.bounds(Role::Minting).min_validity(), 24);
        assert_eq!(p.bounds(Role::FinancialCa).min_validity(), 36);
        assert_eq!(p.bounds(Role::Fsp).min_validity(), 24);
    }

    #[test]
    fn bound_admission() {
        assert!(Bound::AtLeast(12).admits(12));
        assert!(Bound::AtLeast(12).admits(30));
        assert!(!Bound::AtLeast(12).admits(11));
        assert!(Bound::Exactly(0).admits(0));
        assert!(!Bound::Exactly(0).admits(1));
    }
}
