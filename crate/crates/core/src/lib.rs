//! Certificate lifecycle machinery for an offline-capable digital cash
//! system built on smartcards.
//!
//! The design problem: cards live for a fixed period `u`, carry pinned
//! copies of the certificates they trust, and may stay offline for their
//! whole life. Every certificate above them has to be planned so that a
//! card manufactured at any tick can keep paying, receiving and
//! authenticating until it expires, across root and intermediate
//! rollovers.
//!
//! The crate models that world discretely. [`Tick`] is the clock,
//! [`Schedule`] lays out certificate generations per role, the planner
//! builds schedules from per-role phase bounds, the validator checks
//! arbitrary schedules against those bounds, and the simulator drives a
//! fleet of cards through a schedule to probe whether the ecosystem's
//! guarantees actually hold tick by tick.

pub mod authority;
pub mod cert;
pub mod chain;
pub mod codec;
pub mod crypto;
pub mod phase;
pub mod planner;
pub mod profile;
pub mod report;
pub mod role;
pub mod scenario;
pub mod schedule;
pub mod sim;
pub mod smartcard;
pub mod tick;
pub mod timeline;
pub mod validate;

pub use authority::{
    materialize, materialize_seeded, AuthorityState, Issued, IssueError, MaterializeError,
    RegistryError, RegistrySnapshot, RevocationEntry, RevocationRegistry, SignedTimestamp,
};
pub use cert::Certificate;
pub use chain::{verify_chain, Rejection, RejectReason};
pub use phase::{Phase, PhasePlan};
pub use planner::{default_first_root_active, plan_schedule, PlanError};
pub use profile::{baseline_minimums, Bound, RoleBounds, RolloverProfile};
pub use report::{
    Counterexample, EventCounts, ReplayError, Report, Requirement, RequirementVerdict, TickStats,
    TraceStep,
};
pub use role::Role;
pub use scenario::{
    FspOnboarding, ManufacturePlan, PartyPlan, PaymentPlan, RevocationAction, Scenario,
};
pub use sim::{brute_force_verdicts, run, SimError};
pub use schedule::{Generation, GenerationRef, RoleStrand, Schedule};
pub use smartcard::{
    mutual_authenticate, AuthFailure, ManufactureError, RegisterValidationError, Smartcard,
    TimeError,
};
pub use tick::{Tick, DEFAULT_TICKS_PER_U};
pub use timeline::{render_svg, render_text};
pub use validate::{validate_schedule, Constraint, Violation};
