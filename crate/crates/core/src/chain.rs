use crate::authority::RegistrySnapshot;
use crate::cert::Certificate;
use crate::codec::signing_bytes;
use crate::crypto;
use crate::tick::Tick;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    BadSignature,
    Expired,
    NotYetValid,
    UntrustedRoot,
    Revoked,
    RoleViolation,
}

impl RejectReason {
    pub fn id(self) -> &'static str {
        match self {
            RejectReason::BadSignature => "bad-signature",
            RejectReason::Expired => "expired",
            RejectReason::NotYetValid => "not-yet-valid",
            RejectReason::UntrustedRoot => "untrusted-root",
            RejectReason::Revoked => "revoked",
            RejectReason::RoleViolation => "role-violation",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Why a chain was rejected. `at` is the index into the chain of the
/// offending certificate, counting from the leaf; the resolved trust
/// anchor, when one is consulted, sits at index `chain.len()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub reason: RejectReason,
    pub at: usize,
    pub detail: String,
}

impl Rejection {
    fn new(reason: RejectReason, at: usize, detail: impl Into<String>) -> Self {
        Rejection { reason, at, detail: detail.into() }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at chain position {}: {}", self.reason, self.at, self.detail)
    }
}

fn signature_valid(signer: &Certificate, signed: &Certificate) -> bool {
    match signing_bytes(signed) {
        Ok(bytes) => crypto::verify(&signer.public_key, &bytes, &signed.signature),
        Err(_) => false,
    }
}

fn check_window(cert: &Certificate, at: usize, t: Tick) -> Result<(), Rejection> {
    if t < cert.verify_from {
        return Err(Rejection::new(
            RejectReason::NotYetValid,
            at,
            format!("{} is not valid before tick {}", cert.holder_ref, cert.verify_from),
        ));
    }
    if t > cert.verify_until {
        return Err(Rejection::new(
            RejectReason::Expired,
            at,
            format!("{} expired at tick {}", cert.holder_ref, cert.verify_until),
        ));
    }
    Ok(())
}

fn check_revocation(cert: &Certificate, at: usize, registry: &RegistrySnapshot) -> Result<(), Rejection> {
    if registry.is_revoked(&cert.issuer_ref, cert.serial) {
        return Err(Rejection::new(
            RejectReason::Revoked,
            at,
            format!("{} (serial {} under {}) is revoked", cert.holder_ref, cert.serial, cert.issuer_ref),
        ));
    }
    Ok(())
}

/// The issuer must have been in its active phase at the tick it signed the
/// child. That tick is the child's `verify_from`: a certificate starts to
/// exist the moment it is signed. Verification itself may happen much
/// later, during the issuer's passive phase; that is what the passive
/// phase is for.
fn check_signing_time(child: &Certificate, parent: &Certificate, at: usize) -> Result<(), Rejection> {
    if !parent.is_active_at(child.verify_from) {
        return Err(Rejection::new(
            RejectReason::RoleViolation,
            at,
            format!(
                "{} was signed at tick {} but {} is only active in [{}, {})",
                child.holder_ref, child.verify_from, parent.holder_ref, parent.issue_from, parent.issue_until
            ),
        ));
    }
    Ok(())
}

fn check_link(child: &Certificate, parent: &Certificate, at: usize) -> Result<(), Rejection> {
    if child.role.issuer() != parent.role {
        return Err(Rejection::new(
            RejectReason::RoleViolation,
            at,
            format!("a {} certificate cannot be issued by a {} certificate", child.role, parent.role),
        ));
    }
    if child.issuer_ref != parent.holder_ref {
        return Err(Rejection::new(
            RejectReason::BadSignature,
            at,
            format!("issuer reference {} does not name {}", child.issuer_ref, parent.holder_ref),
        ));
    }
    if !signature_valid(parent, child) {
        return Err(Rejection::new(
            RejectReason::BadSignature,
            at,
            format!("signature on {} does not verify under {}", child.holder_ref, parent.holder_ref),
        ));
    }
    check_signing_time(child, parent, at)
}

/// Verifies a leaf-to-root chain at tick `t` against an explicit set of
/// trust anchors and a revocation view.
///
/// The chain may either end in a self-signed certificate, which must then
/// itself be one of the anchors, or end in a subordinate certificate whose
/// issuer is resolved among the anchors (a smartcard's own chain stops at
/// the hardware CA and relies on its pinned roots). Offline verifiers pass
/// [`RegistrySnapshot::empty`].
///
/// Checks run in a fixed order, leaf first, so the outcome is
/// deterministic: validity window and revocation per certificate, then
/// linkage (role hierarchy, issuer reference, signature, signing-time
/// legality) per adjacent pair, then anchor resolution.
pub fn verify_chain(
    chain: &[Certificate],
    anchors: &[Certificate],
    t: Tick,
    registry: &RegistrySnapshot,
) -> Result<(), Rejection> {
    if chain.is_empty() {
        return Err(Rejection::new(RejectReason::UntrustedRoot, 0, "empty certificate chain"));
    }
    for (i, cert) in chain.iter().enumerate() {
        check_window(cert, i, t)?;
        check_revocation(cert, i, registry)?;
    }
    for i in 0..chain.len() - 1 {
        check_link(&chain[i], &chain[i + 1], i)?;
    }

    let last = &chain[chain.len() - 1];
    let last_at = chain.len() - 1;
    if last.is_self_signed() {
        if !signature_valid(last, last) {
            return Err(Rejection::new(
                RejectReason::BadSignature,
                last_at,
                format!("self-signature on {} does not verify", last.holder_ref),
            ));
        }
        if !anchors.contains(last) {
            return Err(Rejection::new(
                RejectReason::UntrustedRoot,
                last_at,
                format!("{} is self-signed but not a trust anchor", last.holder_ref),
            ));
        }
        return Ok(());
    }

    let anchor_at = chain.len();
    let Some(anchor) = anchors.iter().find(|a| a.holder_ref == last.issuer_ref) else {
        return Err(Rejection::new(
            RejectReason::UntrustedRoot,
            last_at,
            format!("no trust anchor named {}", last.issuer_ref),
        ));
    };
    if last.role.issuer() != anchor.role {
        return Err(Rejection::new(
            RejectReason::RoleViolation,
            anchor_at,
            format!("a {} certificate cannot be issued by a {} anchor", last.role, anchor.role),
        ));
    }
    check_window(anchor, anchor_at, t)?;
    check_revocation(anchor, anchor_at, registry)?;
    if !signature_valid(anchor, last) {
        return Err(Rejection::new(
            RejectReason::BadSignature,
            last_at,
            format!("signature on {} does not verify under anchor {}", last.holder_ref, anchor.holder_ref),
        ));
    }
    check_signing_time(last, anchor, last_at)
}
