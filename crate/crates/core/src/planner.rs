use crate::profile::{Bound, RolloverProfile};
use crate::role::Role;
use crate::schedule::{Generation, RoleStrand, Schedule};
use crate::tick::Tick;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("the base unit u must be at least one tick")]
    ZeroUnit,
    #[error("horizon {horizon} is shorter than one base unit ({u} ticks)")]
    HorizonTooShort { horizon: Tick, u: u64 },
    #[error("first root active phase of {given} ticks is below the profile minimum of {minimum}")]
    FirstRootActiveTooSmall { given: u64, minimum: u64 },
    #[error("planning is infeasible at {role} generation {generation}: {detail}")]
    Infeasible { role: Role, generation: u32, detail: String },
    #[error("tick arithmetic overflow while planning {role} generation {generation}")]
    Overflow { role: Role, generation: u32 },
}

pub fn default_first_root_active(u: u64) -> u64 {
    u.saturating_mul(3)
}

/// Picks a concrete duration from a bound, subject to a floor the cadence
/// itself imposes (for example a parent's passive phase must outlast its
/// longest child). An exact bound below the floor cannot be satisfied.
fn resolve(
    bound: Bound,
    floor: u64,
    role: Role,
    generation: u32,
    what: &str,
) -> Result<u64, PlanError> {
    match bound {
        Bound::AtLeast(b) => Ok(b.max(floor)),
        Bound::Exactly(v) if v >= floor => Ok(v),
        Bound::Exactly(v) => Err(PlanError::Infeasible {
            role,
            generation,
            detail: format!(
                "{what} is fixed at {v} ticks but the surrounding schedule needs at least {floor}"
            ),
        }),
    }
}

fn admit_mirror_active(bound: Bound, len: u64, role: Role, generation: u32) -> Result<(), PlanError> {
    if bound.admits(len) {
        Ok(())
    } else {
        Err(PlanError::Infeasible {
            role,
            generation,
            detail: format!(
                "active phase must mirror the parent window of {len} ticks, which the profile bound ({bound}) does not admit"
            ),
        })
    }
}

/// Creation must fall in the parent's active window and the whole child
/// window must fit inside the parent's verify window, otherwise the child
/// could outlive the certificate that vouches for it.
fn check_linkage(role: Role, child: &Generation, parent: &Generation) -> Result<(), PlanError> {
    let infeasible = |detail: String| PlanError::Infeasible {
        role,
        generation: child.index,
        detail,
    };
    if !parent.is_active_at(child.start) {
        return Err(infeasible(format!(
            "created at tick {} but the parent generation {} is only active in [{}, {})",
            child.start,
            parent.index,
            parent.issue_from(),
            parent.issue_until()
        )));
    }
    if child.verify_until() > parent.verify_until() {
        return Err(infeasible(format!(
            "verify window runs to tick {} but the parent generation {} expires at {}",
            child.verify_until(),
            parent.index,
            parent.verify_until()
        )));
    }
    Ok(())
}

fn push_strand(schedule: &mut Schedule, role: Role, generations: Vec<Generation>) {
    schedule.roles.push(RoleStrand { role, generations });
}

/// Lays out generations whose active windows tile `[0, horizon)` back to
/// back with stride `active`. The first generation starts cold; later ones
/// are created `ramp_rest` ticks before their active window opens.
fn cadence_strand(
    schedule: &Schedule,
    role: Role,
    horizon: Tick,
    ramp_rest: u64,
    active: u64,
    passive: u64,
) -> Result<Vec<Generation>, PlanError> {
    if active == 0 {
        return Err(PlanError::Infeasible {
            role,
            generation: 1,
            detail: "active phase resolves to zero ticks, so no issuance window ever opens".into(),
        });
    }
    let mut out = Vec::new();
    let mut active_start = 0u64;
    let mut index = 1u32;
    while active_start < horizon.0 {
        let ramp = if index == 1 { 0 } else { ramp_rest };
        let start = active_start.checked_sub(ramp).ok_or_else(|| PlanError::Infeasible {
            role,
            generation: index,
            detail: format!(
                "a ramp-up of {ramp} ticks before the active window at tick {active_start} would begin before tick 0"
            ),
        })?;
        let mut gen = Generation {
            index,
            start: Tick(start),
            ramp,
            active,
            passive,
            parent_index: None,
        };
        gen.checked_windows().ok_or(PlanError::Overflow { role, generation: index })?;
        let parent_ref = schedule.issuer_for(role, gen.start).map_err(|_| {
            PlanError::Infeasible {
                role,
                generation: index,
                detail: format!(
                    "no {} generation is active at creation tick {}",
                    role.issuer(),
                    gen.start
                ),
            }
        })?;
        let parent = schedule
            .generation(parent_ref.role, parent_ref.index)
            .expect("issuer_for returns an existing generation");
        check_linkage(role, &gen, parent)?;
        gen.parent_index = Some(parent_ref.index);
        out.push(gen);
        active_start = active_start
            .checked_add(active)
            .ok_or(PlanError::Overflow { role, generation: index })?;
        index += 1;
    }
    Ok(out)
}

/// Issuing CAs shadow the root cadence: one generation per root generation,
/// sharing the root's active window. A child created the moment the parent
/// turns active can never be orphaned mid-window.
fn mirror_strand(
    schedule: &Schedule,
    role: Role,
    parent_role: Role,
    ramp: u64,
    passive: u64,
    active_bound: Bound,
) -> Result<Vec<Generation>, PlanError> {
    let parents: Vec<Generation> = schedule.generations(parent_role).to_vec();
    let mut out = Vec::new();
    for parent in &parents {
        let index = parent.index;
        let active = parent.active;
        admit_mirror_active(active_bound, active, role, index)?;
        let start = parent.issue_from().0.checked_sub(ramp).ok_or_else(|| {
            PlanError::Infeasible {
                role,
                generation: index,
                detail: format!(
                    "a ramp-up of {ramp} ticks before tick {} would begin before tick 0",
                    parent.issue_from()
                ),
            }
        })?;
        let mut gen = Generation {
            index,
            start: Tick(start),
            ramp,
            active,
            passive,
            parent_index: None,
        };
        gen.checked_windows().ok_or(PlanError::Overflow { role, generation: index })?;
        let parent_ref = schedule.issuer_for(role, gen.start).map_err(|_| {
            PlanError::Infeasible {
                role,
                generation: index,
                detail: format!(
                    "no {} generation is active at creation tick {}",
                    role.issuer(),
                    gen.start
                ),
            }
        })?;
        let actual_parent = schedule
            .generation(parent_ref.role, parent_ref.index)
            .expect("issuer_for returns an existing generation");
        check_linkage(role, &gen, actual_parent)?;
        gen.parent_index = Some(parent_ref.index);
        out.push(gen);
    }
    Ok(out)
}

/// Builds a schedule that keeps every role issuable across `[0, horizon)`.
///
/// The root rolls back to back: the first generation starts cold with an
/// active phase of `first_root_active` ticks, later generations take the
/// profile active phase and ramp up for one unit beforehand. Hardware,
/// operational and financial CAs mirror the root's active windows; the
/// manufacturer CA mirrors hardware. Register, timestamp, minting, FSP and
/// smartcard strands tile the horizon at their own stride.
///
/// Passive phases are padded above the profile minimum where a child
/// issued at the last active tick has to stay verifiable for its whole
/// validity, so on-demand issuance never runs past a parent window.
pub fn plan_schedule(
    u: u64,
    horizon: Tick,
    profile: &RolloverProfile,
    first_root_active: u64,
) -> Result<Schedule, PlanError> {
    if u == 0 {
        return Err(PlanError::ZeroUnit);
    }
    if horizon.0 < u {
        return Err(PlanError::HorizonTooShort { horizon, u });
    }

    let root = *profile.bounds(Role::RootCa);
    let hardware = *profile.bounds(Role::HardwareCa);
    let manufacturer = *profile.bounds(Role::ManufacturerCa);
    let smartcard = *profile.bounds(Role::SmartcardEe);
    let operational = *profile.bounds(Role::OperationalCa);
    let register = *profile.bounds(Role::CentralRegister);
    let timestamp = *profile.bounds(Role::TimestampService);
    let minting = *profile.bounds(Role::Minting);
    let financial = *profile.bounds(Role::FinancialCa);
    let fsp = *profile.bounds(Role::Fsp);

    if first_root_active < root.active.base() {
        return Err(PlanError::FirstRootActiveTooSmall {
            given: first_root_active,
            minimum: root.active.base(),
        });
    }
    if !root.active.admits(first_root_active) {
        return Err(PlanError::Infeasible {
            role: Role::RootCa,
            generation: 1,
            detail: format!(
                "first active phase of {first_root_active} ticks conflicts with the profile bound ({})",
                root.active
            ),
        });
    }

    // Everything the smartcard strand needs: one unit of active use.
    let ee_ramp = resolve(smartcard.ramp_up, 0, Role::SmartcardEe, 2, "ramp-up")?;
    let ee_active = resolve(smartcard.active, 1, Role::SmartcardEe, 1, "active phase")?;
    let ee_passive = resolve(smartcard.passive, 0, Role::SmartcardEe, 1, "passive phase")?;
    let ee_total = ee_ramp + ee_active + ee_passive;

    // A card certificate issued on the manufacturer CA's last active tick
    // must verify for its full validity.
    let mca_passive =
        resolve(manufacturer.passive, ee_total, Role::ManufacturerCa, 1, "passive phase")?;
    // A manufacturer CA equipped on the hardware CA's last active tick
    // lives for one unit of issuing plus its own passive tail.
    let demand_mca_total = u + mca_passive;
    let hw_passive =
        resolve(hardware.passive, demand_mca_total, Role::HardwareCa, 1, "passive phase")?;

    let cr_ramp = resolve(register.ramp_up, u, Role::CentralRegister, 2, "ramp-up")?;
    let cr_active = resolve(register.active, 1, Role::CentralRegister, 1, "active phase")?;
    let cr_passive = resolve(register.passive, 0, Role::CentralRegister, 1, "passive phase")?;
    let ts_ramp = resolve(timestamp.ramp_up, u, Role::TimestampService, 2, "ramp-up")?;
    let ts_active = resolve(timestamp.active, 1, Role::TimestampService, 1, "active phase")?;
    let ts_passive = resolve(timestamp.passive, 0, Role::TimestampService, 1, "passive phase")?;
    let minting_ramp = resolve(minting.ramp_up, 0, Role::Minting, 2, "ramp-up")?;
    let minting_active = resolve(minting.active, 1, Role::Minting, 1, "active phase")?;
    let minting_passive = resolve(minting.passive, 0, Role::Minting, 1, "passive phase")?;

    let longest_operational_child = (cr_ramp + cr_active + cr_passive)
        .max(ts_ramp + ts_active + ts_passive)
        .max(minting_ramp + minting_active + minting_passive);
    let op_passive = resolve(
        operational.passive,
        longest_operational_child,
        Role::OperationalCa,
        1,
        "passive phase",
    )?;

    let fsp_ramp = resolve(fsp.ramp_up, 0, Role::Fsp, 2, "ramp-up")?;
    let fsp_active = resolve(fsp.active, 1, Role::Fsp, 1, "active phase")?;
    let fsp_passive = resolve(fsp.passive, 0, Role::Fsp, 1, "passive phase")?;
    let fin_passive = resolve(
        financial.passive,
        fsp_ramp + fsp_active + fsp_passive,
        Role::FinancialCa,
        1,
        "passive phase",
    )?;

    // The root must outlast whichever mirrored child tail is longest, and
    // carry at least two units of passive so stale verifiers catch up.
    let root_passive_floor = (2 * u).max(hw_passive).max(op_passive).max(fin_passive);
    let root_passive =
        resolve(root.passive, root_passive_floor, Role::RootCa, 1, "passive phase")?;
    let root_ramp = resolve(root.ramp_up, u, Role::RootCa, 2, "ramp-up")?;
    let root_active_floor = (4 * u).saturating_sub(root_passive);
    let root_active = resolve(root.active, root_active_floor, Role::RootCa, 2, "active phase")?;
    if first_root_active + root_passive < 4 * u {
        return Err(PlanError::Infeasible {
            role: Role::RootCa,
            generation: 1,
            detail: format!(
                "active ({first_root_active}) plus passive ({root_passive}) falls short of the {} ticks the trust anchor must remain usable",
                4 * u
            ),
        });
    }

    let hw_ramp = resolve(hardware.ramp_up, 0, Role::HardwareCa, 2, "ramp-up")?;
    let mca_ramp = resolve(manufacturer.ramp_up, 0, Role::ManufacturerCa, 2, "ramp-up")?;
    let op_ramp = resolve(operational.ramp_up, 0, Role::OperationalCa, 2, "ramp-up")?;
    let fin_ramp = resolve(financial.ramp_up, 0, Role::FinancialCa, 2, "ramp-up")?;

    let mut schedule = Schedule { u, horizon, roles: Vec::new() };

    // Root strand: back-to-back active windows, self-signed anchors.
    let mut root_gens = Vec::new();
    let mut active_start = 0u64;
    let mut index = 1u32;
    while active_start < horizon.0 {
        let (ramp, active) = if index == 1 { (0, first_root_active) } else { (root_ramp, root_active) };
        let start = active_start.checked_sub(ramp).ok_or_else(|| PlanError::Infeasible {
            role: Role::RootCa,
            generation: index,
            detail: format!(
                "a ramp-up of {ramp} ticks before the active window at tick {active_start} would begin before tick 0"
            ),
        })?;
        let gen = Generation {
            index,
            start: Tick(start),
            ramp,
            active,
            passive: root_passive,
            parent_index: None,
        };
        gen.checked_windows()
            .ok_or(PlanError::Overflow { role: Role::RootCa, generation: index })?;
        root_gens.push(gen);
        active_start = active_start
            .checked_add(active)
            .ok_or(PlanError::Overflow { role: Role::RootCa, generation: index })?;
        index += 1;
    }
    push_strand(&mut schedule, Role::RootCa, root_gens);

    let hw = mirror_strand(&schedule, Role::HardwareCa, Role::RootCa, hw_ramp, hw_passive, hardware.active)?;
    push_strand(&mut schedule, Role::HardwareCa, hw);
    let op = mirror_strand(
        &schedule,
        Role::OperationalCa,
        Role::RootCa,
        op_ramp,
        op_passive,
        operational.active,
    )?;
    push_strand(&mut schedule, Role::OperationalCa, op);
    let fin = mirror_strand(
        &schedule,
        Role::FinancialCa,
        Role::RootCa,
        fin_ramp,
        fin_passive,
        financial.active,
    )?;
    push_strand(&mut schedule, Role::FinancialCa, fin);
    let mca = mirror_strand(
        &schedule,
        Role::ManufacturerCa,
        Role::HardwareCa,
        mca_ramp,
        mca_passive,
        manufacturer.active,
    )?;
    push_strand(&mut schedule, Role::ManufacturerCa, mca);

    let cr = cadence_strand(&schedule, Role::CentralRegister, horizon, cr_ramp, cr_active, cr_passive)?;
    push_strand(&mut schedule, Role::CentralRegister, cr);
    let ts = cadence_strand(&schedule, Role::TimestampService, horizon, ts_ramp, ts_active, ts_passive)?;
    push_strand(&mut schedule, Role::TimestampService, ts);
    let mint = cadence_strand(&schedule, Role::Minting, horizon, minting_ramp, minting_active, minting_passive)?;
    push_strand(&mut schedule, Role::Minting, mint);
    let fsps = cadence_strand(&schedule, Role::Fsp, horizon, fsp_ramp, fsp_active, fsp_passive)?;
    push_strand(&mut schedule, Role::Fsp, fsps);
    let cards = cadence_strand(&schedule, Role::SmartcardEe, horizon, ee_ramp, ee_active, ee_passive)?;
    push_strand(&mut schedule, Role::SmartcardEe, cards);

    schedule.roles.sort_by_key(|s| s.role.code());
    Ok(schedule)
}
