use crate::schedule::Schedule;
use crate::tick::Tick;
use serde::{Deserialize, Serialize};

fn one_u64() -> u64 {
    1
}

fn one_u32() -> u32 {
    1
}

/// How the factory floor behaves: every `step` ticks, each of
/// `manufacturers` plants stamps `cards_per_tick` cards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManufacturePlan {
    #[serde(default = "one_u64")]
    pub step: u64,
    #[serde(default = "one_u32")]
    pub cards_per_tick: u32,
    #[serde(default = "one_u32")]
    pub manufacturers: u32,
}

impl Default for ManufacturePlan {
    fn default() -> Self {
        ManufacturePlan { step: 1, cards_per_tick: 1, manufacturers: 1 }
    }
}

/// How often the live checks run. `stride = 1` probes every tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaymentPlan {
    #[serde(default = "one_u64")]
    pub stride: u64,
}

impl Default for PaymentPlan {
    fn default() -> Self {
        PaymentPlan { stride: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FspOnboarding {
    pub name: String,
    pub tick: Tick,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevocationAction {
    pub holder: String,
    pub tick: Tick,
}

/// A relying party that pulls registry snapshots. It sees revocations only
/// as of its last sync.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyPlan {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sync_every: Option<u64>,
}

/// A complete simulation input: the schedule to bring up plus everything
/// that happens in the field. Serializes to a single scenario file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_u64")]
    pub default_sync_every: u64,
    /// Run even when the schedule fails validation; the violations are
    /// embedded in the report so the field failures can be read against
    /// them.
    #[serde(default)]
    pub allow_invalid_schedule: bool,
    #[serde(default)]
    pub manufacture: ManufacturePlan,
    #[serde(default)]
    pub payments: PaymentPlan,
    #[serde(default)]
    pub fsp_onboarding: Vec<FspOnboarding>,
    #[serde(default)]
    pub revocations: Vec<RevocationAction>,
    #[serde(default)]
    pub parties: Vec<PartyPlan>,
    pub schedule: Schedule,
}

impl Scenario {
    /// A plain scenario for a schedule: one manufacturer making one card
    /// per tick, live checks every tick, no registry traffic.
    pub fn for_schedule(schedule: Schedule) -> Self {
        Scenario {
            seed: 0,
            default_sync_every: 1,
            allow_invalid_schedule: false,
            manufacture: ManufacturePlan::default(),
            payments: PaymentPlan::default(),
            fsp_onboarding: Vec::new(),
            revocations: Vec::new(),
            parties: Vec::new(),
            schedule,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{default_first_root_active, plan_schedule};
    use crate::profile::baseline_minimums;

    #[test]
    fn scenarios_round_trip_through_text() {
        let schedule =
            plan_schedule(12, Tick(144), &baseline_minimums(12), default_first_root_active(12))
                .unwrap();
        let mut scenario = Scenario::for_schedule(schedule);
        scenario.seed = 9;
        scenario.manufacture.manufacturers = 3;
        scenario.payments.stride = 3;
        scenario.fsp_onboarding.push(FspOnboarding { name: "bank-a".into(), tick: Tick(5) });
        scenario.revocations.push(RevocationAction { holder: "bank-a".into(), tick: Tick(50) });
        scenario.parties.push(PartyPlan { id: "merchant".into(), sync_every: Some(6) });
        let text = scenario.to_toml();
        let back = Scenario::from_toml(&text).unwrap();
        assert_eq!(back, scenario);
    }

    #[test]
    fn omitted_sections_take_defaults() {
        let schedule =
            plan_schedule(6, Tick(36), &baseline_minimums(6), default_first_root_active(6))
                .unwrap();
        let text = format!("[schedule]\n{}", schedule.to_toml().replace("[[", "[[schedule."));
        let parsed = Scenario::from_toml(&text).unwrap();
        assert_eq!(parsed.seed, 0);
        assert_eq!(parsed.manufacture, ManufacturePlan::default());
        assert_eq!(parsed.payments.stride, 1);
        assert!(!parsed.allow_invalid_schedule);
        assert!(parsed.parties.is_empty());
    }
}
