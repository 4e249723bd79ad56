use crate::authority::{materialize_seeded, Issued, MaterializeError, RegistrySnapshot};
use crate::chain::verify_chain;
use crate::profile::baseline_minimums;
use crate::report::{
    Counterexample, EventCounts, Report, Requirement, RequirementVerdict, TickStats, TraceStep,
};
use crate::role::Role;
use crate::scenario::Scenario;
use crate::smartcard::{mutual_authenticate, Smartcard};
use crate::tick::Tick;
use crate::validate::{validate_schedule, Violation};
use std::collections::BTreeMap;
use thiserror::Error;

const ATTESTATION_PROBE: &[u8] = b"attestation probe";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("the schedule fails validation with {} violation(s); set allow_invalid_schedule to run it anyway", violations.len())]
    InvalidSchedule { violations: Vec<Violation> },
    #[error(transparent)]
    Materialize(#[from] MaterializeError),
    #[error("revocation at tick {tick} names unknown holder {holder:?}")]
    UnknownRevocationHolder { holder: String, tick: Tick },
    #[error("scenario is unusable: {detail}")]
    BadScenario { detail: String },
}

#[derive(Default)]
struct Track {
    checks: u64,
    failures: u64,
    first: Option<Counterexample>,
}

impl Track {
    fn pass(&mut self) {
        self.checks += 1;
    }

    fn fail(&mut self, ce: impl FnOnce() -> Counterexample) {
        self.checks += 1;
        self.failures += 1;
        if self.first.is_none() {
            self.first = Some(ce());
        }
    }

    fn verdict(self, requirement: Requirement) -> RequirementVerdict {
        RequirementVerdict {
            requirement,
            holds: self.failures == 0,
            checks: self.checks,
            failures: self.failures,
            first_counterexample: self.first,
        }
    }
}

fn manufacture_step(card: &Smartcard) -> TraceStep {
    let links: Vec<&str> = card.own_chain.iter().map(|c| c.holder_ref.as_str()).collect();
    TraceStep {
        tick: card.manufactured_at,
        action: format!("manufacture {}", card.id),
        outcome: format!(
            "chain [{}], end of life {}, pinned {} root / {} register / {} timestamp certs",
            links.join(" <- "),
            card.end_of_life,
            card.pinned_roots.len(),
            card.pinned_central_register.len(),
            card.pinned_timestamp.len()
        ),
    }
}

/// Why a card is not provisioned for its whole (modeled) life, if it
/// isn't: the first tick in [manufacture, end of life] clamped to the
/// schedule horizon where a pinned root stops covering, no pinned
/// register or timestamp certificate is in its issuing window, or an
/// own-chain certificate has run out.
fn provisioning_gap(card: &Smartcard, horizon: Tick) -> Option<(Tick, String)> {
    let last = card.end_of_life.0.min(horizon.0.saturating_sub(1));
    for t in card.manufactured_at.0..=last {
        let t = Tick(t);
        if !card.pinned_roots.iter().any(|c| c.in_verify_window(t)) {
            return Some((t, "no pinned root certificate covers this tick".into()));
        }
        if !card.pinned_central_register.iter().any(|c| c.is_active_at(t)) {
            return Some((t, "no pinned register certificate is in its issuing window".into()));
        }
        if !card.pinned_timestamp.iter().any(|c| c.is_active_at(t)) {
            return Some((t, "no pinned timestamp certificate is in its issuing window".into()));
        }
        if let Some(cert) = card.own_chain.iter().find(|c| !c.in_verify_window(t)) {
            return Some((
                t,
                format!("own chain certificate {} is outside its verify window", cert.holder_ref),
            ));
        }
    }
    None
}

/// Why a card is structurally broken at the factory gate, if it is.
fn malformation(card: &Smartcard, u: u64) -> Option<String> {
    let roles: Vec<Role> = card.own_chain.iter().map(|c| c.role).collect();
    if roles != [Role::SmartcardEe, Role::ManufacturerCa, Role::HardwareCa] {
        return Some(format!("own chain roles are {roles:?}"));
    }
    for pair in card.own_chain.windows(2) {
        if pair[0].issuer_ref != pair[1].holder_ref {
            return Some(format!(
                "chain link broken: {} names issuer {} but is followed by {}",
                pair[0].holder_ref, pair[0].issuer_ref, pair[1].holder_ref
            ));
        }
    }
    if card.pinned_roots.is_empty() {
        return Some("no pinned roots".into());
    }
    if card.pinned_central_register.is_empty() {
        return Some("no pinned register certificates".into());
    }
    if card.pinned_timestamp.is_empty() {
        return Some("no pinned timestamp certificates".into());
    }
    let ee = &card.own_chain[0];
    let m = card.manufactured_at;
    if ee.verify_from != m || ee.issue_from != m {
        return Some(format!("card validity starts at {} instead of {}", ee.verify_from, m));
    }
    let expected_end = Tick(m.0 + u);
    if ee.issue_until != expected_end || ee.verify_until != expected_end {
        return Some(format!(
            "card validity ends at {} instead of {}",
            ee.verify_until, expected_end
        ));
    }
    if card.end_of_life != expected_end {
        return Some(format!("end of life {} disagrees with {}", card.end_of_life, expected_end));
    }
    if let Err(rej) = card.verify_peer_chain(&card.own_chain, m) {
        return Some(format!("own chain does not verify at manufacture: {rej}"));
    }
    None
}

fn scenario_sanity(scenario: &Scenario) -> Result<(), SimError> {
    let bad = |detail: &str| Err(SimError::BadScenario { detail: detail.to_string() });
    if scenario.schedule.u == 0 {
        return bad("the base unit u must be at least one tick");
    }
    if scenario.manufacture.step == 0 {
        return bad("manufacture.step must be at least 1");
    }
    if scenario.payments.stride == 0 {
        return bad("payments.stride must be at least 1");
    }
    if scenario.default_sync_every == 0 {
        return bad("default_sync_every must be at least 1");
    }
    if scenario.parties.iter().any(|p| p.sync_every == Some(0)) {
        return bad("a party cannot sync every 0 ticks");
    }
    Ok(())
}

struct PartyState {
    id: String,
    every: u64,
    snapshot: RegistrySnapshot,
}

/// Runs a scenario tick by tick: applies revocations and onboarding,
/// syncs parties, manufactures cards, probes the five runtime
/// requirements, and keeps per-tick fleet statistics. The first failure
/// of each requirement is stored with a replayable trace.
pub fn run(scenario: &Scenario) -> Result<Report, SimError> {
    scenario_sanity(scenario)?;
    let violations =
        validate_schedule(&scenario.schedule, &baseline_minimums(scenario.schedule.u));
    if !violations.is_empty() && !scenario.allow_invalid_schedule {
        return Err(SimError::InvalidSchedule { violations });
    }

    let mut authority = materialize_seeded(&scenario.schedule, scenario.seed)?;
    let u = scenario.schedule.u;
    let horizon = scenario.schedule.horizon;

    let mut r1 = Track::default();
    let mut r2 = Track::default();
    let mut r3 = Track::default();
    let mut r4 = Track::default();
    let mut r5 = Track::default();
    let mut events = EventCounts::default();

    // manufacturer chains must outlive their own issuing windows; this is
    // a property of the materialized hierarchy, checked once
    for g in scenario.schedule.generations(Role::ManufacturerCa).to_vec() {
        let chain = authority
            .chain_for_generation(Role::ManufacturerCa, g.index)
            .expect("manufacturer generation is materialized");
        let from = g.issue_from();
        let until = g.issue_until();
        if until <= from {
            continue;
        }
        let last_active = Tick(until.0 - 1);
        match chain
            .iter()
            .find(|c| c.verify_from > from || c.verify_until < last_active)
        {
            None => r5.pass(),
            Some(cert) => {
                let t =
                    if cert.verify_from > from { from } else { Tick(cert.verify_until.0 + 1) };
                let reason = format!(
                    "stored chain certificate {} covers [{}, {}] but the generation issues over [{}, {})",
                    cert.holder_ref, cert.verify_from, cert.verify_until, from, until
                );
                let cert_ref = cert.holder_ref.clone();
                r5.fail(|| Counterexample {
                    tick: t,
                    subjects: vec![format!("manufacturer-ca-g{}", g.index), cert_ref],
                    reason: reason.clone(),
                    trace: vec![
                        TraceStep {
                            tick: g.start,
                            action: format!("materialize manufacturer generation {}", g.index),
                            outcome: format!(
                                "stored chain [{}]",
                                chain
                                    .iter()
                                    .map(|c| c.holder_ref.as_str())
                                    .collect::<Vec<_>>()
                                    .join(" <- ")
                            ),
                        },
                        TraceStep {
                            tick: t,
                            action: "check stored chain coverage of the issuing window".into(),
                            outcome: reason.clone(),
                        },
                    ],
                });
            }
        }
    }

    let mut fleet: Vec<Smartcard> = Vec::new();
    let mut fsps: Vec<Issued> = Vec::new();
    let mut parties: Vec<PartyState> = Vec::new();
    for plan in &scenario.parties {
        authority.register_party(&plan.id);
        parties.push(PartyState {
            id: plan.id.clone(),
            every: plan.sync_every.unwrap_or(scenario.default_sync_every),
            snapshot: RegistrySnapshot::empty(),
        });
    }
    let mut per_tick: Vec<TickStats> = Vec::with_capacity(horizon.0 as usize);

    for t in 0..horizon.0 {
        let t = Tick(t);

        for action in scenario.revocations.iter().filter(|r| r.tick == t) {
            let hits = authority.revoke_holder(&action.holder, t).map_err(|_| {
                SimError::UnknownRevocationHolder { holder: action.holder.clone(), tick: t }
            })?;
            events.revocations_applied += hits.len() as u64;
        }

        for onboarding in scenario.fsp_onboarding.iter().filter(|f| f.tick == t) {
            match authority.issue_end_entity(Role::Fsp, &onboarding.name, t) {
                Ok(issued) => {
                    fsps.push(issued);
                    events.fsps_onboarded += 1;
                }
                Err(_) => events.fsp_onboard_failures += 1,
            }
        }

        for party in parties.iter_mut() {
            if t.0 % party.every == 0 {
                party.snapshot =
                    authority.sync_party(&party.id, t).expect("party was registered");
                events.party_syncs += 1;
            }
        }

        if t.0 % scenario.manufacture.step == 0 {
            for plant in 0..scenario.manufacture.manufacturers {
                for k in 0..scenario.manufacture.cards_per_tick {
                    let id = format!("m{plant}-t{t}-c{k}");
                    match Smartcard::manufacture(&mut authority, &id, t) {
                        Err(e) => {
                            events.manufacture_failures += 1;
                            let reason = format!("manufacture failed: {e}");
                            r4.fail(|| Counterexample {
                                tick: t,
                                subjects: vec![id.clone()],
                                reason: reason.clone(),
                                trace: vec![TraceStep {
                                    tick: t,
                                    action: format!("manufacture {id}"),
                                    outcome: reason.clone(),
                                }],
                            });
                        }
                        Ok(card) => {
                            events.cards_manufactured += 1;
                            match malformation(&card, u) {
                                None => r2.pass(),
                                Some(reason) => r2.fail(|| Counterexample {
                                    tick: t,
                                    subjects: vec![card.id.clone()],
                                    reason: reason.clone(),
                                    trace: vec![
                                        manufacture_step(&card),
                                        TraceStep {
                                            tick: t,
                                            action: "inspect the card at the factory gate".into(),
                                            outcome: reason.clone(),
                                        },
                                    ],
                                }),
                            }
                            match provisioning_gap(&card, horizon) {
                                None => r1.pass(),
                                Some((gap, reason)) => r1.fail(|| Counterexample {
                                    tick: gap,
                                    subjects: vec![card.id.clone()],
                                    reason: reason.clone(),
                                    trace: vec![
                                        manufacture_step(&card),
                                        TraceStep {
                                            tick: gap,
                                            action: format!(
                                                "sweep {}'s service life for trust coverage",
                                                card.id
                                            ),
                                            outcome: reason.clone(),
                                        },
                                    ],
                                }),
                            }
                            fleet.push(card);
                        }
                    }
                }
            }
        }

        // production must be possible at every tick, not only when the
        // scenario happens to manufacture
        let mca_active = scenario
            .schedule
            .generations(Role::ManufacturerCa)
            .iter()
            .any(|g| g.is_active_at(t));
        if !mca_active {
            r4.fail(|| Counterexample {
                tick: t,
                subjects: Vec::new(),
                reason: "no manufacturer generation is in its issuing window".into(),
                trace: vec![TraceStep {
                    tick: t,
                    action: "probe manufacturer issuance".into(),
                    outcome: "no manufacturer generation is in its issuing window".into(),
                }],
            });
        } else {
            match authority.can_equip_manufacturer(t) {
                Ok(()) => r4.pass(),
                Err(e) => {
                    let reason = e.to_string();
                    r4.fail(|| Counterexample {
                        tick: t,
                        subjects: Vec::new(),
                        reason: reason.clone(),
                        trace: vec![TraceStep {
                            tick: t,
                            action: "probe issuing a fresh manufacturer certificate".into(),
                            outcome: reason.clone(),
                        }],
                    });
                }
            }
        }

        if t.0 % scenario.payments.stride == 0 {
            let alive: Vec<usize> = fleet
                .iter()
                .enumerate()
                .filter(|(_, c)| c.manufactured_at <= t && !c.is_expired(t))
                .map(|(i, _)| i)
                .collect();

            for &i in &alive {
                let card = &mut fleet[i];
                match card.verify_peer_chain(&card.own_chain, t) {
                    Ok(()) => r3.pass(),
                    Err(rej) => {
                        let reason = format!("own chain rejected: {rej}");
                        let step = manufacture_step(card);
                        let id = card.id.clone();
                        r3.fail(|| Counterexample {
                            tick: t,
                            subjects: vec![id],
                            reason: reason.clone(),
                            trace: vec![
                                step,
                                TraceStep {
                                    tick: t,
                                    action: "verify own chain against pinned roots".into(),
                                    outcome: reason.clone(),
                                },
                            ],
                        });
                    }
                }

                events.register_attestations += 1;
                let register_outcome = match authority.sign_with_central_register(ATTESTATION_PROBE, t)
                {
                    Ok((sig, signer)) => card
                        .validate_central_register_signature(ATTESTATION_PROBE, &sig, &signer, t)
                        .map_err(|e| e.to_string()),
                    Err(e) => Err(format!("register cannot sign: {e}")),
                };
                match register_outcome {
                    Ok(()) => r3.pass(),
                    Err(reason) => {
                        let step = manufacture_step(card);
                        let id = card.id.clone();
                        let reason = format!("register attestation refused: {reason}");
                        r3.fail(|| Counterexample {
                            tick: t,
                            subjects: vec![id],
                            reason: reason.clone(),
                            trace: vec![
                                step,
                                TraceStep {
                                    tick: t,
                                    action: "validate a register attestation".into(),
                                    outcome: reason.clone(),
                                },
                            ],
                        });
                    }
                }

                let time_outcome = match authority.issue_timestamp(t) {
                    Ok(ts) => card.advance_trusted_time(&ts).map(|_| ()).map_err(|e| e.to_string()),
                    Err(e) => Err(format!("timestamp service cannot sign: {e}")),
                };
                match time_outcome {
                    Ok(()) => {
                        events.timestamp_advances += 1;
                        r3.pass();
                    }
                    Err(reason) => {
                        let step = manufacture_step(card);
                        let id = card.id.clone();
                        let reason = format!("trusted time refused to advance: {reason}");
                        r3.fail(|| Counterexample {
                            tick: t,
                            subjects: vec![id],
                            reason: reason.clone(),
                            trace: vec![
                                step,
                                TraceStep {
                                    tick: t,
                                    action: "advance the trusted clock".into(),
                                    outcome: reason.clone(),
                                },
                            ],
                        });
                    }
                }
            }

            for (pos, &i) in alive.iter().enumerate() {
                for &j in &alive[pos + 1..] {
                    events.auth_checks += 1;
                    match mutual_authenticate(&fleet[i], &fleet[j], t) {
                        Ok(()) => r3.pass(),
                        Err(failure) => {
                            events.auth_failures += 1;
                            let reason = failure.to_string();
                            let steps = vec![
                                manufacture_step(&fleet[i]),
                                manufacture_step(&fleet[j]),
                                TraceStep {
                                    tick: t,
                                    action: format!(
                                        "mutually authenticate {} and {}",
                                        fleet[i].id, fleet[j].id
                                    ),
                                    outcome: reason.clone(),
                                },
                            ];
                            let subjects = vec![fleet[i].id.clone(), fleet[j].id.clone()];
                            r3.fail(|| Counterexample {
                                tick: t,
                                subjects,
                                reason: reason.clone(),
                                trace: steps,
                            });
                        }
                    }
                }
            }

            let anchors = authority.root_anchors_at(t);
            for party in &parties {
                for fsp in &fsps {
                    events.fsp_verifications += 1;
                    if verify_chain(&fsp.chain, &anchors, t, &party.snapshot).is_err() {
                        events.fsp_rejections += 1;
                    }
                }
            }
            let _ = &parties;
        }

        let alive_cards =
            fleet.iter().filter(|c| c.manufactured_at <= t && !c.is_expired(t)).count() as u64;
        let mut active_generations = BTreeMap::new();
        for role in Role::ALL {
            let n = scenario
                .schedule
                .generations(role)
                .iter()
                .filter(|g| g.is_active_at(t))
                .count() as u32;
            active_generations.insert(role.name().to_string(), n);
        }
        per_tick.push(TickStats { tick: t, alive_cards, active_generations });
    }

    let verdicts = vec![
        r1.verdict(Requirement::CardProvisioning),
        r2.verdict(Requirement::CardWellFormed),
        r3.verdict(Requirement::ContinuousOperation),
        r4.verdict(Requirement::ManufacturingAvailability),
        r5.verdict(Requirement::GenerationChainCoverage),
    ];
    let all_hold = verdicts.iter().all(|v| v.holds);
    Ok(Report {
        all_hold,
        seed: scenario.seed,
        events,
        verdicts,
        schedule_violations: violations,
        per_tick,
        scenario: scenario.clone(),
    })
}

/// The reference answer for [`run`]: no event loop, no bookkeeping, just
/// direct sweeps over every tick and every card the scenario would
/// create. Exists so the simulator's verdicts can be checked against a
/// straight-line re-derivation; it samples live checks at every tick, so
/// compare against runs with stride 1.
pub fn brute_force_verdicts(
    scenario: &Scenario,
) -> Result<BTreeMap<Requirement, bool>, SimError> {
    scenario_sanity(scenario)?;
    let violations =
        validate_schedule(&scenario.schedule, &baseline_minimums(scenario.schedule.u));
    if !violations.is_empty() && !scenario.allow_invalid_schedule {
        return Err(SimError::InvalidSchedule { violations });
    }
    let mut authority = materialize_seeded(&scenario.schedule, scenario.seed)?;
    let u = scenario.schedule.u;
    let horizon = scenario.schedule.horizon;

    let mut coverage_ok = true;
    for g in scenario.schedule.generations(Role::ManufacturerCa) {
        let chain = authority
            .chain_for_generation(Role::ManufacturerCa, g.index)
            .expect("manufacturer generation is materialized");
        if g.issue_until() <= g.issue_from() {
            continue;
        }
        for tau in g.issue_from().0..g.issue_until().0 {
            if chain.iter().any(|c| !c.in_verify_window(Tick(tau))) {
                coverage_ok = false;
            }
        }
    }

    let mut production_ok = true;
    let mut provisioned_ok = true;
    let mut well_formed_ok = true;
    let mut fleet: Vec<Smartcard> = Vec::new();
    for t in (0..horizon.0).step_by(scenario.manufacture.step as usize) {
        for plant in 0..scenario.manufacture.manufacturers {
            for k in 0..scenario.manufacture.cards_per_tick {
                let id = format!("m{plant}-t{t}-c{k}");
                match Smartcard::manufacture(&mut authority, &id, Tick(t)) {
                    Err(_) => production_ok = false,
                    Ok(card) => {
                        if malformation(&card, u).is_some() {
                            well_formed_ok = false;
                        }
                        if provisioning_gap(&card, horizon).is_some() {
                            provisioned_ok = false;
                        }
                        fleet.push(card);
                    }
                }
            }
        }
    }

    let mut operation_ok = true;
    for t in 0..horizon.0 {
        let t = Tick(t);
        let mca_active = scenario
            .schedule
            .generations(Role::ManufacturerCa)
            .iter()
            .any(|g| g.is_active_at(t));
        if !mca_active || authority.can_equip_manufacturer(t).is_err() {
            production_ok = false;
        }

        let alive: Vec<&Smartcard> = fleet
            .iter()
            .filter(|c| c.manufactured_at <= t && !c.is_expired(t))
            .collect();
        for card in &alive {
            if card.verify_peer_chain(&card.own_chain, t).is_err() {
                operation_ok = false;
            }
            match authority.sign_with_central_register(ATTESTATION_PROBE, t) {
                Ok((sig, signer)) => {
                    if card
                        .validate_central_register_signature(ATTESTATION_PROBE, &sig, &signer, t)
                        .is_err()
                    {
                        operation_ok = false;
                    }
                }
                Err(_) => operation_ok = false,
            }
            match authority.issue_timestamp(t) {
                Ok(ts) => {
                    if (*card).clone().advance_trusted_time(&ts).is_err() {
                        operation_ok = false;
                    }
                }
                Err(_) => operation_ok = false,
            }
        }
        for (pos, a) in alive.iter().enumerate() {
            for b in &alive[pos + 1..] {
                if mutual_authenticate(a, b, t).is_err() {
                    operation_ok = false;
                }
            }
        }
    }

    let mut out = BTreeMap::new();
    out.insert(Requirement::CardProvisioning, provisioned_ok);
    out.insert(Requirement::CardWellFormed, well_formed_ok);
    out.insert(Requirement::ContinuousOperation, operation_ok);
    out.insert(Requirement::ManufacturingAvailability, production_ok);
    out.insert(Requirement::GenerationChainCoverage, coverage_ok);
    Ok(out)
}
