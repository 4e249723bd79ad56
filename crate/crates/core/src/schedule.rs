use crate::phase::{Phase, PhasePlan};
use crate::role::Role;
use crate::tick::Tick;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One planned certificate generation of a role.
///
/// `start` is both the creation tick and the start of the verify window;
/// a certificate begins to exist (and can be pinned) the moment it is
/// signed. `parent_index` names the generation of the issuing role that
/// signs this one; root generations have none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generation {
    pub index: u32,
    pub start: Tick,
    pub ramp: u64,
    pub active: u64,
    pub passive: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_index: Option<u32>,
}

impl Generation {
    pub fn plan(&self) -> PhasePlan {
        PhasePlan::new(self.ramp, self.active, self.passive)
    }

    pub fn verify_from(&self) -> Tick {
        self.start
    }

    pub fn issue_from(&self) -> Tick {
        self.start.saturating_add(self.ramp)
    }

    pub fn issue_until(&self) -> Tick {
        self.issue_from().saturating_add(self.active)
    }

    pub fn verify_until(&self) -> Tick {
        self.issue_until().saturating_add(self.passive)
    }

    /// All four window boundaries, or `None` if they overflow the tick
    /// range. Anything loaded from a file goes through this before the
    /// saturating accessors above are trusted.
    pub fn checked_windows(&self) -> Option<(Tick, Tick, Tick, Tick)> {
        let issue_from = self.start.checked_add(self.ramp)?;
        let issue_until = issue_from.checked_add(self.active)?;
        let verify_until = issue_until.checked_add(self.passive)?;
        Some((self.start, issue_from, issue_until, verify_until))
    }

    pub fn is_active_at(&self, t: Tick) -> bool {
        self.issue_from() <= t && t < self.issue_until()
    }

    pub fn exists_at(&self, t: Tick) -> bool {
        self.start <= t && t <= self.verify_until()
    }

    pub fn phase_at(&self, t: Tick) -> Phase {
        if t < self.start {
            Phase::BeforeValidity
        } else if t < self.issue_from() {
            Phase::RampUp
        } else if t < self.issue_until() {
            Phase::Active
        } else if t <= self.verify_until() {
            Phase::Passive
        } else {
            Phase::Expired
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleStrand {
    pub role: Role,
    pub generations: Vec<Generation>,
}

/// Reference to a generation that would issue a certificate: the issuing
/// role plus the generation index within its strand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRef {
    pub role: Role,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IssuerLookupError {
    #[error("no {role} generation is active at tick {t}")]
    NoActiveIssuer { role: Role, t: Tick },
}

#[derive(Debug, Error)]
#[error("schedule file does not parse: {0}")]
pub struct ScheduleParseError(#[from] toml::de::Error);

/// A full rollover schedule: every role's generations over a horizon.
///
/// Ticks are the only clock; `u_ticks` records how many of them make up one
/// smartcard validity period. Active windows of consecutive generations of
/// a role abut or overlap so that issuance stays possible across the whole
/// horizon `[0, horizon)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    #[serde(rename = "u_ticks")]
    pub u: u64,
    pub horizon: Tick,
    pub roles: Vec<RoleStrand>,
}

impl Schedule {
    pub fn generations(&self, role: Role) -> &[Generation] {
        self.roles
            .iter()
            .find(|s| s.role == role)
            .map(|s| s.generations.as_slice())
            .unwrap_or(&[])
    }

    pub fn generations_mut(&mut self, role: Role) -> &mut Vec<Generation> {
        let pos = self.roles.iter().position(|s| s.role == role);
        let pos = pos.unwrap_or_else(|| {
            self.roles.push(RoleStrand { role, generations: Vec::new() });
            self.roles.len() - 1
        });
        &mut self.roles[pos].generations
    }

    pub fn generation(&self, role: Role, index: u32) -> Option<&Generation> {
        self.generations(role).iter().find(|g| g.index == index)
    }

    pub fn generation_count(&self) -> usize {
        self.roles.iter().map(|s| s.generations.len()).sum()
    }

    /// The generation that signs a new `role` certificate at `t`: the
    /// active generation of the issuing role, newest first when several
    /// active windows overlap.
    pub fn issuer_for(&self, role: Role, t: Tick) -> Result<GenerationRef, IssuerLookupError> {
        let issuing_role = role.issuer();
        self.generations(issuing_role)
            .iter()
            .rev()
            .find(|g| g.is_active_at(t))
            .map(|g| GenerationRef { role: issuing_role, index: g.index })
            .ok_or(IssuerLookupError::NoActiveIssuer { role: issuing_role, t })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schedule serializes")
    }

    pub fn from_toml(text: &str) -> Result<Schedule, ScheduleParseError> {
        Ok(toml::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strand(role: Role, gens: &[(u32, u64, u64, u64, u64)]) -> RoleStrand {
        RoleStrand {
            role,
            generations: gens
                .iter()
                .map(|&(index, start, ramp, active, passive)| Generation {
                    index,
                    start: Tick(start),
                    ramp,
                    active,
                    passive,
                    parent_index: None,
                })
                .collect(),
        }
    }

    #[test]
    fn issuer_prefers_the_newest_active_generation() {
        let schedule = Schedule {
            u: 12,
            horizon: Tick(72),
            roles: vec![strand(
                Role::HardwareCa,
                // Deliberately overlapping active windows: [0, 36) and [24, 60).
                &[(1, 0, 0, 36, 12), (2, 24, 0, 36, 12)],
            )],
        };
        let hit = schedule.issuer_for(Role::ManufacturerCa, Tick(30)).unwrap();
        assert_eq!(hit, GenerationRef { role: Role::HardwareCa, index: 2 });
        let hit = schedule.issuer_for(Role::ManufacturerCa, Tick(10)).unwrap();
        assert_eq!(hit.index, 1);
        assert_eq!(
            schedule.issuer_for(Role::ManufacturerCa, Tick(60)),
            Err(IssuerLookupError::NoActiveIssuer { role: Role::HardwareCa, t: Tick(60) })
        );
    }

    #[test]
    fn generation_windows() {
        let g = Generation {
            index: 2,
            start: Tick(24),
            ramp: 12,
            active: 24,
            passive: 24,
            parent_index: None,
        };
        assert_eq!(g.issue_from(), Tick(36));
        assert_eq!(g.issue_until(), Tick(60));
        assert_eq!(g.verify_until(), Tick(84));
        assert!(g.exists_at(Tick(24)));
        assert!(!g.exists_at(Tick(23)));
        assert!(g.is_active_at(Tick(36)));
        assert!(!g.is_active_at(Tick(60)));
        assert_eq!(g.phase_at(Tick(84)), Phase::Passive);
        assert_eq!(g.phase_at(Tick(85)), Phase::Expired);
    }

    #[test]
    fn checked_windows_catch_overflow() {
        let g = Generation {
            index: 1,
            start: Tick(u64::MAX - 5),
            ramp: 3,
            active: 3,
            passive: 3,
            parent_index: None,
        };
        assert_eq!(g.checked_windows(), None);
    }

    #[test]
    fn toml_round_trip() {
        let schedule = Schedule {
            u: 12,
            horizon: Tick(120),
            roles: vec![
                strand(Role::RootCa, &[(1, 0, 0, 36, 24), (2, 24, 12, 24, 24)]),
                strand(Role::HardwareCa, &[(1, 0, 0, 36, 24)]),
            ],
        };
        let text = schedule.to_toml();
        let back = Schedule::from_toml(&text).unwrap();
        assert_eq!(back, schedule);
        assert_eq!(back.to_toml(), text);
    }
}
