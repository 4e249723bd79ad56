use crate::scenario::Scenario;
use crate::tick::Tick;
use crate::validate::Violation;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// The five runtime guarantees the simulator checks in the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Requirement {
    /// Every card leaves the factory with pins and an own chain that
    /// cover its whole service life.
    #[serde(rename = "R1")]
    CardProvisioning,
    /// Every card leaves the factory structurally sound: a three-link
    /// chain that verifies on the spot, nonempty pin sets, and a
    /// one-unit validity window.
    #[serde(rename = "R2")]
    CardWellFormed,
    /// Alive cards keep working: own chain verifies, register
    /// attestations validate, timestamps advance the clock, and any two
    /// alive cards authenticate each other.
    #[serde(rename = "R3")]
    ContinuousOperation,
    /// Card production never stalls: at every tick a manufacturer
    /// generation is active, a hardware generation can sign a new one,
    /// and a freshly issued manufacturer certificate fits under every
    /// ancestor.
    #[serde(rename = "R4")]
    ManufacturingAvailability,
    /// Every manufacturer generation's stored chain stays verifiable for
    /// the generation's entire issuing window.
    #[serde(rename = "R5")]
    GenerationChainCoverage,
}

impl Requirement {
    pub const ALL: [Requirement; 5] = [
        Requirement::CardProvisioning,
        Requirement::CardWellFormed,
        Requirement::ContinuousOperation,
        Requirement::ManufacturingAvailability,
        Requirement::GenerationChainCoverage,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Requirement::CardProvisioning => "R1",
            Requirement::CardWellFormed => "R2",
            Requirement::ContinuousOperation => "R3",
            Requirement::ManufacturingAvailability => "R4",
            Requirement::GenerationChainCoverage => "R5",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Requirement::CardProvisioning => "cards are provisioned for their whole life",
            Requirement::CardWellFormed => "cards leave the factory well formed",
            Requirement::ContinuousOperation => "alive cards keep transacting",
            Requirement::ManufacturingAvailability => "card production never stalls",
            Requirement::GenerationChainCoverage => "manufacturer chains cover their window",
        }
    }

    pub fn from_id(s: &str) -> Option<Requirement> {
        Requirement::ALL.into_iter().find(|r| r.id().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// One step of a replayable failure narrative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub tick: Tick,
    pub action: String,
    pub outcome: String,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tick {}: {} -> {}", self.tick, self.action, self.outcome)
    }
}

/// The first observed failure of a requirement: when, who, why, and the
/// steps to reproduce it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub tick: Tick,
    pub subjects: Vec<String>,
    pub reason: String,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementVerdict {
    pub requirement: Requirement,
    pub holds: bool,
    pub checks: u64,
    pub failures: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub cards_manufactured: u64,
    pub manufacture_failures: u64,
    pub auth_checks: u64,
    pub auth_failures: u64,
    pub register_attestations: u64,
    pub timestamp_advances: u64,
    pub fsps_onboarded: u64,
    pub fsp_onboard_failures: u64,
    pub fsp_verifications: u64,
    pub fsp_rejections: u64,
    pub revocations_applied: u64,
    pub party_syncs: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickStats {
    pub tick: Tick,
    pub alive_cards: u64,
    pub active_generations: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("{requirement} held throughout the run; there is nothing to replay")]
    RequirementHeld { requirement: Requirement },
    #[error("the report carries no verdict for {requirement}")]
    MissingVerdict { requirement: Requirement },
}

/// Everything a simulation run produced: verdicts with first
/// counterexamples, event counts, per-tick fleet stats, any schedule
/// violations that were overridden, and the scenario itself so the run
/// can be repeated from the report alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub all_hold: bool,
    pub seed: u64,
    pub events: EventCounts,
    pub verdicts: Vec<RequirementVerdict>,
    #[serde(default)]
    pub schedule_violations: Vec<Violation>,
    #[serde(default)]
    pub per_tick: Vec<TickStats>,
    pub scenario: Scenario,
}

impl Report {
    pub fn verdict(&self, requirement: Requirement) -> Option<&RequirementVerdict> {
        self.verdicts.iter().find(|v| v.requirement == requirement)
    }

    /// The stored failure narrative for a requirement that did not hold.
    pub fn replay_counterexample(
        &self,
        requirement: Requirement,
    ) -> Result<&Counterexample, ReplayError> {
        let verdict = self
            .verdict(requirement)
            .ok_or(ReplayError::MissingVerdict { requirement })?;
        match &verdict.first_counterexample {
            Some(ce) if !verdict.holds => Ok(ce),
            _ => Err(ReplayError::RequirementHeld { requirement }),
        }
    }

    /// One line per requirement, the shape the command line prints.
    pub fn summary_lines(&self) -> Vec<String> {
        self.verdicts
            .iter()
            .map(|v| match (&v.first_counterexample, v.holds) {
                (_, true) => format!(
                    "{} {}: ok ({} checks)",
                    v.requirement,
                    v.requirement.title(),
                    v.checks
                ),
                (Some(ce), false) => format!(
                    "{} {}: FAILED at tick {} ({} of {} checks): {}",
                    v.requirement,
                    v.requirement.title(),
                    ce.tick,
                    v.failures,
                    v.checks,
                    ce.reason
                ),
                (None, false) => format!(
                    "{} {}: FAILED ({} of {} checks)",
                    v.requirement,
                    v.requirement.title(),
                    v.failures,
                    v.checks
                ),
            })
            .collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}
