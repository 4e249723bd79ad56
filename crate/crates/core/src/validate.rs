use crate::profile::RolloverProfile;
use crate::role::Role;
use crate::schedule::{Generation, Schedule};
use crate::tick::Tick;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Every rule a schedule can break, each with a stable identifier that the
/// CLI and reports print and tests match on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    UnitZero,
    StartOrder,
    WindowOverflow,
    EmptyActive,
    PhaseMinimum,
    ParentMissing,
    CreationOutsideParentActive,
    ParentContainment,
    IssuanceCoverage,
    PinningRampUp,
    RootRampUp,
    RootPassive,
    RootActivePlusPassive,
}

impl Constraint {
    pub fn id(self) -> &'static str {
        match self {
            Constraint::UnitZero => "unit-zero",
            Constraint::StartOrder => "start-order",
            Constraint::WindowOverflow => "window-overflow",
            Constraint::EmptyActive => "empty-active",
            Constraint::PhaseMinimum => "phase-minimum",
            Constraint::ParentMissing => "parent-missing",
            Constraint::CreationOutsideParentActive => "creation-outside-parent-active",
            Constraint::ParentContainment => "parent-containment",
            Constraint::IssuanceCoverage => "issuance-coverage",
            Constraint::PinningRampUp => "pinning-ramp-up",
            Constraint::RootRampUp => "root-ramp-up",
            Constraint::RootPassive => "root-passive",
            Constraint::RootActivePlusPassive => "root-active-plus-passive",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<u32>,
    pub constraint: Constraint,
    pub expected: String,
    pub observed: String,
    /// Inclusive tick range the problem covers, when one is identifiable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ticks: Option<(Tick, Tick)>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.role)?;
        if let Some(g) = self.generation {
            write!(f, " generation {g}")?;
        }
        write!(f, ": {}: expected {}, observed {}", self.constraint, self.expected, self.observed)?;
        if let Some((a, b)) = self.ticks {
            write!(f, " [ticks {a}..={b}]")?;
        }
        Ok(())
    }
}

fn violation(
    role: Role,
    generation: Option<u32>,
    constraint: Constraint,
    expected: impl Into<String>,
    observed: impl Into<String>,
    ticks: Option<(Tick, Tick)>,
) -> Violation {
    Violation { role, generation, constraint, expected: expected.into(), observed: observed.into(), ticks }
}

/// The bootstrap generation of a strand starts the system cold, so a zero
/// ramp-up is always acceptable there; a nonzero one is held to the rules.
fn ramp_exempt(position: usize, g: &Generation) -> bool {
    position == 0 && g.ramp == 0
}

fn check_generation(
    s: &Schedule,
    role: Role,
    position: usize,
    g: &Generation,
    profile: &RolloverProfile,
    out: &mut Vec<Violation>,
) {
    let u = s.u;
    let gen = Some(g.index);
    if g.checked_windows().is_none() {
        out.push(violation(
            role,
            gen,
            Constraint::WindowOverflow,
            "phase durations that fit the tick range",
            format!("start {} with total validity {} overflows", g.start, g.plan().total_validity()),
            None,
        ));
        return;
    }
    if g.active == 0 {
        out.push(violation(
            role,
            gen,
            Constraint::EmptyActive,
            "an active phase of at least one tick",
            "an empty active window".to_string(),
            Some((g.start, g.verify_until())),
        ));
    }

    let bounds = profile.bounds(role);
    if !ramp_exempt(position, g) && !bounds.ramp_up.admits(g.ramp) {
        out.push(violation(
            role,
            gen,
            Constraint::PhaseMinimum,
            format!("ramp-up {}", bounds.ramp_up),
            format!("{}", g.ramp),
            Some((g.verify_from(), g.issue_from())),
        ));
    }
    if !bounds.active.admits(g.active) {
        out.push(violation(
            role,
            gen,
            Constraint::PhaseMinimum,
            format!("active {}", bounds.active),
            format!("{}", g.active),
            Some((g.issue_from(), g.issue_until())),
        ));
    }
    if !bounds.passive.admits(g.passive) {
        out.push(violation(
            role,
            gen,
            Constraint::PhaseMinimum,
            format!("passive {}", bounds.passive),
            format!("{}", g.passive),
            Some((g.issue_until(), g.verify_until())),
        ));
    }

    match role {
        Role::RootCa => {
            if !ramp_exempt(position, g) && g.ramp < u {
                out.push(violation(
                    role,
                    gen,
                    Constraint::RootRampUp,
                    format!("a root ramp-up of at least one unit ({u} ticks)"),
                    format!("{}", g.ramp),
                    None,
                ));
            }
            if g.passive < 2 * u {
                out.push(violation(
                    role,
                    gen,
                    Constraint::RootPassive,
                    format!("a root passive phase of at least two units ({} ticks)", 2 * u),
                    format!("{}", g.passive),
                    None,
                ));
            }
            if g.active + g.passive < 4 * u {
                out.push(violation(
                    role,
                    gen,
                    Constraint::RootActivePlusPassive,
                    format!("root active plus passive of at least four units ({} ticks)", 4 * u),
                    format!("{}", g.active + g.passive),
                    None,
                ));
            }
        }
        Role::CentralRegister | Role::TimestampService => {
            // Cards pin the next register and timestamp certificates during
            // manufacture, so each rollover generation must already exist
            // one full card lifetime before it activates.
            if !ramp_exempt(position, g) && g.ramp < u {
                out.push(violation(
                    role,
                    gen,
                    Constraint::PinningRampUp,
                    format!("a ramp-up of at least one unit ({u} ticks)"),
                    format!("{}", g.ramp),
                    None,
                ));
            }
        }
        _ => {}
    }

    if role == Role::RootCa {
        return;
    }
    let parent_role = role.issuer();
    match g.parent_index {
        None => out.push(violation(
            role,
            gen,
            Constraint::ParentMissing,
            format!("a link to the {parent_role} generation that signs this one"),
            "no parent reference".to_string(),
            None,
        )),
        Some(pi) => match s.generation(parent_role, pi) {
            None => out.push(violation(
                role,
                gen,
                Constraint::ParentMissing,
                format!("{parent_role} generation {pi} to exist"),
                "no such generation".to_string(),
                None,
            )),
            Some(parent) => {
                if !parent.is_active_at(g.start) {
                    out.push(violation(
                        role,
                        gen,
                        Constraint::CreationOutsideParentActive,
                        format!(
                            "creation inside {parent_role} generation {pi} active window [{}, {})",
                            parent.issue_from(),
                            parent.issue_until()
                        ),
                        format!("created at tick {}", g.start),
                        Some((g.start, g.start)),
                    ));
                }
                if g.verify_from() < parent.verify_from() || g.verify_until() > parent.verify_until() {
                    out.push(violation(
                        role,
                        gen,
                        Constraint::ParentContainment,
                        format!(
                            "validity inside {parent_role} generation {pi} verify window [{}, {}]",
                            parent.verify_from(),
                            parent.verify_until()
                        ),
                        format!("[{}, {}]", g.verify_from(), g.verify_until()),
                        Some((g.verify_from(), g.verify_until())),
                    ));
                }
            }
        },
    }
}

/// Merges a role's active windows and reports every maximal uncovered range
/// inside `[0, horizon)`.
fn coverage_gaps(s: &Schedule, role: Role) -> Vec<(Tick, Tick)> {
    let mut windows: Vec<(u64, u64)> = s
        .generations(role)
        .iter()
        .filter(|g| g.active > 0 && g.checked_windows().is_some())
        .map(|g| (g.issue_from().0, g.issue_until().0))
        .collect();
    windows.sort_unstable();
    let mut gaps = Vec::new();
    let mut covered_to = 0u64;
    for (from, until) in windows {
        if from > covered_to && covered_to < s.horizon.0 {
            gaps.push((Tick(covered_to), Tick(from.min(s.horizon.0) - 1)));
        }
        covered_to = covered_to.max(until);
        if covered_to >= s.horizon.0 {
            return gaps;
        }
    }
    if covered_to < s.horizon.0 {
        gaps.push((Tick(covered_to), Tick(s.horizon.0 - 1)));
    }
    gaps
}

/// Checks a schedule against a profile and the structural rules that keep
/// the hierarchy issuable. Returns every violation found; an empty list
/// means the schedule is sound.
pub fn validate_schedule(s: &Schedule, profile: &RolloverProfile) -> Vec<Violation> {
    let mut out = Vec::new();
    if s.u == 0 {
        out.push(violation(
            Role::RootCa,
            None,
            Constraint::UnitZero,
            "a base unit of at least one tick",
            "u = 0".to_string(),
            None,
        ));
        return out;
    }

    for strand in &s.roles {
        for pair in strand.generations.windows(2) {
            if pair[1].start < pair[0].start {
                out.push(violation(
                    strand.role,
                    Some(pair[1].index),
                    Constraint::StartOrder,
                    format!("start at or after tick {}", pair[0].start),
                    format!("start at tick {}", pair[1].start),
                    None,
                ));
            }
        }
        for (position, g) in strand.generations.iter().enumerate() {
            check_generation(s, strand.role, position, g, profile, &mut out);
        }
    }

    // The manufacturer CA must be able to issue a card at any tick below
    // the horizon, and the hardware CA must be able to equip a manufacturer
    // whenever one is created.
    for (from, until) in coverage_gaps(s, Role::ManufacturerCa) {
        out.push(violation(
            Role::ManufacturerCa,
            None,
            Constraint::IssuanceCoverage,
            "an active manufacturer-ca generation at every tick below the horizon",
            "no active generation".to_string(),
            Some((from, until)),
        ));
    }
    for g in s.generations(Role::ManufacturerCa) {
        let covered = s.generations(Role::HardwareCa).iter().any(|h| h.is_active_at(g.start));
        if !covered {
            out.push(violation(
                Role::HardwareCa,
                None,
                Constraint::IssuanceCoverage,
                "an active hardware-ca generation whenever a manufacturer-ca is created",
                format!("manufacturer-ca generation {} is created at tick {} with none active", g.index, g.start),
                Some((g.start, g.start)),
            ));
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{default_first_root_active, plan_schedule};
    use crate::profile::baseline_minimums;
    use crate::schedule::RoleStrand;

    fn planned(u: u64, horizon: u64) -> Schedule {
        plan_schedule(u, Tick(horizon), &baseline_minimums(u), default_first_root_active(u)).unwrap()
    }

    #[test]
    fn planner_output_is_clean_across_units_and_horizons() {
        for u in [1u64, 6, 12] {
            for h in [u, 3 * u, 10 * u, 20 * u] {
                let s = planned(u, h);
                let violations = validate_schedule(&s, &baseline_minimums(u));
                assert!(violations.is_empty(), "u={u} horizon={h}: {violations:?}");
            }
        }
    }

    #[test]
    fn short_register_ramp_is_flagged_as_pinning_violation() {
        let mut s = planned(12, 120);
        {
            let gens = s.generations_mut(Role::CentralRegister);
            let g = &mut gens[1];
            assert_eq!((g.start, g.ramp), (Tick(0), 12));
            // halve the ramp but keep the active window at [12, 24)
            g.ramp = 6;
            g.start = Tick(6);
            assert_eq!(g.issue_from(), Tick(12));
        }
        let violations = validate_schedule(&s, &baseline_minimums(12));
        let pinning: Vec<_> = violations
            .iter()
            .filter(|v| v.constraint == Constraint::PinningRampUp)
            .collect();
        assert_eq!(pinning.len(), 1);
        assert_eq!(pinning[0].role, Role::CentralRegister);
        assert_eq!(pinning[0].generation, Some(2));
        assert!(violations
            .iter()
            .all(|v| matches!(v.constraint, Constraint::PinningRampUp | Constraint::PhaseMinimum)));
    }

    #[test]
    fn manufacturer_gap_is_reported_with_its_tick_range() {
        let mut s = planned(12, 120);
        {
            let gens = s.generations_mut(Role::ManufacturerCa);
            assert_eq!(gens[0].active, 36);
            gens[0].active = 30;
        }
        let violations = validate_schedule(&s, &baseline_minimums(12));
        assert_eq!(violations.len(), 1, "{violations:?}");
        assert_eq!(violations[0].constraint, Constraint::IssuanceCoverage);
        assert_eq!(violations[0].role, Role::ManufacturerCa);
        assert_eq!(violations[0].ticks, Some((Tick(30), Tick(35))));
    }

    #[test]
    fn root_rules_apply_to_every_generation() {
        let mut s = planned(12, 120);
        for g in s.generations_mut(Role::RootCa).iter_mut() {
            g.passive = 12;
        }
        let violations = validate_schedule(&s, &baseline_minimums(12));
        let roots: Vec<_> = violations.iter().filter(|v| v.role == Role::RootCa).collect();
        assert!(roots.iter().any(|v| v.constraint == Constraint::RootPassive));
        // 24 active + 12 passive = 36 < 48 on generations after the first
        assert!(roots.iter().any(|v| v.constraint == Constraint::RootActivePlusPassive));
        // shrinking the root tail also strands mirrored children past it
        assert!(violations.iter().any(|v| v.constraint == Constraint::ParentContainment));
    }

    #[test]
    fn bootstrap_generations_may_skip_ramp_up_but_rollovers_may_not() {
        let mut s = planned(12, 120);
        {
            let gens = s.generations_mut(Role::RootCa);
            assert_eq!(gens[0].ramp, 0);
            gens[1].ramp = 0;
            gens[1].start = Tick(36);
        }
        let violations = validate_schedule(&s, &baseline_minimums(12));
        assert!(violations
            .iter()
            .any(|v| v.constraint == Constraint::RootRampUp && v.generation == Some(2)));
        assert!(violations
            .iter()
            .any(|v| v.constraint == Constraint::PhaseMinimum && v.role == Role::RootCa));
    }

    #[test]
    fn structural_problems_are_reported() {
        let s = Schedule { u: 0, horizon: Tick(10), roles: Vec::new() };
        let v = validate_schedule(&s, &baseline_minimums(1));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].constraint, Constraint::UnitZero);

        let mut s = planned(12, 60);
        s.generations_mut(Role::Minting).push(Generation {
            index: 9,
            start: Tick(u64::MAX - 2),
            ramp: 0,
            active: 24,
            passive: 0,
            parent_index: Some(1),
        });
        let v = validate_schedule(&s, &baseline_minimums(12));
        assert!(v.iter().any(|x| x.constraint == Constraint::WindowOverflow));

        let mut s = planned(12, 60);
        {
            let gens = s.generations_mut(Role::Fsp);
            gens.insert(
                0,
                Generation { index: 0, start: Tick(50), ramp: 0, active: 24, passive: 0, parent_index: Some(1) },
            );
        }
        let v = validate_schedule(&s, &baseline_minimums(12));
        assert!(v.iter().any(|x| x.constraint == Constraint::StartOrder));
    }

    #[test]
    fn missing_and_dangling_parents_are_flagged() {
        let mut s = planned(12, 60);
        s.generations_mut(Role::ManufacturerCa)[0].parent_index = None;
        let v = validate_schedule(&s, &baseline_minimums(12));
        assert!(v.iter().any(|x| x.constraint == Constraint::ParentMissing && x.role == Role::ManufacturerCa));

        let mut s = planned(12, 60);
        s.generations_mut(Role::ManufacturerCa)[0].parent_index = Some(40);
        let v = validate_schedule(&s, &baseline_minimums(12));
        assert!(v.iter().any(|x| x.constraint == Constraint::ParentMissing));
    }

    #[test]
    fn creation_outside_the_parent_window_is_flagged() {
        let mut s = planned(12, 120);
        {
            let gens = s.generations_mut(Role::CentralRegister);
            // repoint generation 1 at an operational generation that is not
            // yet active when the register certificate is created
            gens[0].parent_index = Some(3);
        }
        let v = validate_schedule(&s, &baseline_minimums(12));
        assert!(v
            .iter()
            .any(|x| x.constraint == Constraint::CreationOutsideParentActive && x.role == Role::CentralRegister));
    }

    #[test]
    fn growing_root_slack_never_adds_violations() {
        let base = planned(6, 60);
        assert!(validate_schedule(&base, &baseline_minimums(6)).is_empty());
        for extra in [1u64, 5, 17, 60] {
            let mut s = base.clone();
            for g in s.generations_mut(Role::RootCa).iter_mut() {
                g.passive += extra;
            }
            let v = validate_schedule(&s, &baseline_minimums(6));
            assert!(v.is_empty(), "extra={extra}: {v:?}");
        }
    }

    #[test]
    fn empty_strands_only_trip_coverage() {
        let s = Schedule {
            u: 12,
            horizon: Tick(24),
            roles: vec![RoleStrand { role: Role::RootCa, generations: Vec::new() }],
        };
        let v = validate_schedule(&s, &baseline_minimums(12));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].constraint, Constraint::IssuanceCoverage);
        assert_eq!(v[0].ticks, Some((Tick(0), Tick(23))));
    }
}
