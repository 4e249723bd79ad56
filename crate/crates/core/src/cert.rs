use crate::crypto::{PublicKey, Signature};
use crate::phase::Phase;
use crate::role::Role;
use crate::tick::Tick;
use serde::{Deserialize, Serialize};

/// Maximum length, in octets, of holder and issuer references.
pub const MAX_REF_LEN: usize = 32;

/// One certificate in the hierarchy.
///
/// The four window fields always satisfy
/// `verify_from <= issue_from <= issue_until <= verify_until`.
/// Phase starts are inclusive and ends exclusive, except that the verify
/// window keeps its final tick: a certificate still verifies at
/// `verify_until`. So ramp-up covers `[verify_from, issue_from)`, the
/// active phase `[issue_from, issue_until)` and the passive phase
/// `[issue_until, verify_until]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub serial: u64,
    pub role: Role,
    pub holder_ref: String,
    pub issuer_ref: String,
    pub public_key: PublicKey,
    pub verify_from: Tick,
    pub verify_until: Tick,
    pub issue_from: Tick,
    pub issue_until: Tick,
    pub signature: Signature,
}

impl Certificate {
    pub fn phase_at(&self, t: Tick) -> Phase {
        if t < self.verify_from {
            Phase::BeforeValidity
        } else if t < self.issue_from {
            Phase::RampUp
        } else if t < self.issue_until {
            Phase::Active
        } else if t <= self.verify_until {
            Phase::Passive
        } else {
            Phase::Expired
        }
    }

    /// The certificate may sign at `t`.
    pub fn is_active_at(&self, t: Tick) -> bool {
        self.issue_from <= t && t < self.issue_until
    }

    /// `t` falls inside the verify window (ramp-up, active or passive).
    pub fn in_verify_window(&self, t: Tick) -> bool {
        self.verify_from <= t && t <= self.verify_until
    }

    /// The certificate has been created and not yet expired at `t`.
    /// Identical to [`Certificate::in_verify_window`]; certificates come
    /// into existence at the start of their verify window.
    pub fn exists_at(&self, t: Tick) -> bool {
        self.in_verify_window(t)
    }

    pub fn is_self_signed(&self) -> bool {
        self.holder_ref == self.issuer_ref
    }

    pub fn windows_ordered(&self) -> bool {
        self.verify_from <= self.issue_from
            && self.issue_from <= self.issue_until
            && self.issue_until <= self.verify_until
    }
}

/// Lifecycle phase of `cert` at tick `t`.
pub fn phase_at(cert: &Certificate, t: Tick) -> Phase {
    cert.phase_at(t)
}
