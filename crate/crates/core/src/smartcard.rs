use crate::authority::{
    register_attestation_bytes, timestamp_bytes, AuthorityState, IssueError, SignedTimestamp,
};
use crate::cert::Certificate;
use crate::chain::{verify_chain, Rejection};
use crate::crypto::{verify, Signature};
use crate::role::Role;
use crate::tick::Tick;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ManufactureError {
    #[error(transparent)]
    Issue(#[from] IssueError),
    #[error("card life starting at {t} overflows the tick range")]
    Overflow { t: Tick },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthFailure {
    #[error("card {card} expired at {end_of_life}, now {now}")]
    CardExpired { card: String, end_of_life: Tick, now: Tick },
    #[error("card {card} presented a chain that was rejected: {rejection}")]
    ChainRejected { card: String, rejection: Rejection },
}

impl AuthFailure {
    /// The card whose state caused the refusal.
    pub fn card(&self) -> &str {
        match self {
            AuthFailure::CardExpired { card, .. } => card,
            AuthFailure::ChainRejected { card, .. } => card,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegisterValidationError {
    #[error("signer {holder_ref} is not among the card's pinned register certificates")]
    SignerNotPinned { holder_ref: String },
    #[error("register certificate {holder_ref} is not in its issuing phase at {t}")]
    SignerNotActive { holder_ref: String, t: Tick },
    #[error("attestation signature does not verify")]
    BadSignature,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeError {
    #[error("timestamp signer {signer_ref} is not among the card's pinned timestamp certificates")]
    SignerNotPinned { signer_ref: String },
    #[error("timestamp signature does not verify")]
    BadSignature,
    #[error("signer {signer_ref} was not in its issuing phase at the asserted tick {tick}")]
    SignerNotActive { signer_ref: String, tick: Tick },
}

/// One issued card. Everything here is burned in at the factory: the
/// card's own certificate chain up to (not including) the root, and
/// pinned copies of every root, central register and timestamp
/// certificate that existed at the manufacture tick. None of it can be
/// replaced later; the only mutable state is the trusted clock, which
/// moves forward on signed timestamps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Smartcard {
    pub id: String,
    pub manufactured_at: Tick,
    pub end_of_life: Tick,
    pub own_chain: Vec<Certificate>,
    pub pinned_roots: Vec<Certificate>,
    pub pinned_central_register: Vec<Certificate>,
    pub pinned_timestamp: Vec<Certificate>,
    last_trusted_time: Tick,
}

impl Smartcard {
    /// Stamps a new card at tick `t`: the active manufacturer CA signs a
    /// fresh end-entity certificate valid for one unit, and the card pins
    /// whatever root, register and timestamp certificates exist right
    /// now, ramp-phase ones included. That forward slice of pins is the
    /// card's entire trust horizon for its whole life.
    pub fn manufacture(
        authority: &mut AuthorityState,
        id: &str,
        t: Tick,
    ) -> Result<Smartcard, ManufactureError> {
        let end_of_life = t
            .checked_add(authority.schedule().u)
            .ok_or(ManufactureError::Overflow { t })?;
        let issued = authority.issue_card(id, t)?;
        let mut own_chain = issued.chain;
        if own_chain.last().map_or(false, |c| c.is_self_signed()) {
            own_chain.pop();
        }
        Ok(Smartcard {
            id: id.to_string(),
            manufactured_at: t,
            end_of_life,
            own_chain,
            pinned_roots: authority.strand_existing_at(Role::RootCa, t),
            pinned_central_register: authority.strand_existing_at(Role::CentralRegister, t),
            pinned_timestamp: authority.strand_existing_at(Role::TimestampService, t),
            last_trusted_time: t,
        })
    }

    pub fn is_expired(&self, t: Tick) -> bool {
        t > self.end_of_life
    }

    pub fn last_trusted_time(&self) -> Tick {
        self.last_trusted_time
    }

    /// The card's own leaf certificate.
    pub fn certificate(&self) -> &Certificate {
        &self.own_chain[0]
    }

    /// Checks another card's chain against this card's pinned roots, the
    /// way it happens inside an offline payment. No registry: revocation
    /// never reaches a card.
    pub fn verify_peer_chain(&self, peer: &[Certificate], t: Tick) -> Result<(), Rejection> {
        verify_chain(peer, &self.pinned_roots, t, &crate::authority::RegistrySnapshot::empty())
    }

    /// Accepts a register attestation only from a pinned register
    /// certificate that is in its issuing phase at `t`. Ramp-phase pins
    /// exist so that FUTURE attestations will check out; they are not
    /// valid signers yet, and passive-phase registers have been replaced.
    pub fn validate_central_register_signature(
        &self,
        payload: &[u8],
        signature: &Signature,
        signer: &Certificate,
        t: Tick,
    ) -> Result<(), RegisterValidationError> {
        if !self.pinned_central_register.contains(signer) {
            return Err(RegisterValidationError::SignerNotPinned {
                holder_ref: signer.holder_ref.clone(),
            });
        }
        if !signer.is_active_at(t) {
            return Err(RegisterValidationError::SignerNotActive {
                holder_ref: signer.holder_ref.clone(),
                t,
            });
        }
        if !verify(&signer.public_key, &register_attestation_bytes(payload), signature) {
            return Err(RegisterValidationError::BadSignature);
        }
        Ok(())
    }

    /// Moves the card's clock forward on a signed timestamp. The clock
    /// never goes backwards: replaying an old timestamp is accepted but
    /// changes nothing. Returns the clock after the update.
    pub fn advance_trusted_time(&mut self, ts: &SignedTimestamp) -> Result<Tick, TimeError> {
        let signer = self
            .pinned_timestamp
            .iter()
            .find(|c| c.holder_ref == ts.signer_ref)
            .ok_or_else(|| TimeError::SignerNotPinned { signer_ref: ts.signer_ref.clone() })?;
        if !verify(&signer.public_key, &timestamp_bytes(ts.tick), &ts.signature) {
            return Err(TimeError::BadSignature);
        }
        if !signer.is_active_at(ts.tick) {
            return Err(TimeError::SignerNotActive {
                signer_ref: ts.signer_ref.clone(),
                tick: ts.tick,
            });
        }
        if ts.tick > self.last_trusted_time {
            self.last_trusted_time = ts.tick;
        }
        Ok(self.last_trusted_time)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("card serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

/// The offline handshake: each card checks the other is not past end of
/// life and verifies the other's chain against its own pinned roots.
/// Acceptance is symmetric; a refusal names the card that failed.
pub fn mutual_authenticate(a: &Smartcard, b: &Smartcard, t: Tick) -> Result<(), AuthFailure> {
    for card in [a, b] {
        if card.is_expired(t) {
            return Err(AuthFailure::CardExpired {
                card: card.id.clone(),
                end_of_life: card.end_of_life,
                now: t,
            });
        }
    }
    a.verify_peer_chain(&b.own_chain, t).map_err(|rejection| AuthFailure::ChainRejected {
        card: b.id.clone(),
        rejection,
    })?;
    b.verify_peer_chain(&a.own_chain, t).map_err(|rejection| AuthFailure::ChainRejected {
        card: a.id.clone(),
        rejection,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::authority::materialize;
    use crate::chain::RejectReason;
    use crate::crypto::{keypair_from_seed, sign, MOCK_ALGORITHM};
    use crate::planner::{default_first_root_active, plan_schedule};
    use crate::profile::baseline_minimums;
    use crate::role::Role;

    fn authority(u: u64, horizon: u64) -> AuthorityState {
        let s = plan_schedule(u, Tick(horizon), &baseline_minimums(u), default_first_root_active(u))
            .unwrap();
        materialize(&s).unwrap()
    }

    #[test]
    fn a_card_carries_its_chain_up_to_the_hardware_ca() {
        let mut auth = authority(12, 120);
        let card = Smartcard::manufacture(&mut auth, "card-1", Tick(5)).unwrap();
        let roles: Vec<Role> = card.own_chain.iter().map(|c| c.role).collect();
        assert_eq!(roles, [Role::SmartcardEe, Role::ManufacturerCa, Role::HardwareCa]);
        assert_eq!(card.own_chain[0].issuer_ref, card.own_chain[1].holder_ref);
        assert_eq!(card.own_chain[1].issuer_ref, card.own_chain[2].holder_ref);
        assert_eq!(card.certificate().verify_from, Tick(5));
        assert_eq!(card.certificate().verify_until, Tick(17));
        assert_eq!(card.end_of_life, Tick(17));
        assert_eq!(card.last_trusted_time(), Tick(5));
    }

    #[test]
    fn pins_include_ramp_phase_successors() {
        let mut auth = authority(12, 120);
        // the second root generation enters its ramp at tick 24
        let early = Smartcard::manufacture(&mut auth, "early", Tick(20)).unwrap();
        let late = Smartcard::manufacture(&mut auth, "late", Tick(30)).unwrap();
        let names = |card: &Smartcard| {
            card.pinned_roots.iter().map(|c| c.holder_ref.clone()).collect::<Vec<_>>()
        };
        assert_eq!(names(&early), ["root-ca-g1"]);
        assert_eq!(names(&late), ["root-ca-g1", "root-ca-g2"]);
        assert!(!late.pinned_central_register.is_empty());
        assert!(!late.pinned_timestamp.is_empty());
    }

    #[test]
    fn cards_in_the_same_window_authenticate() {
        let mut auth = authority(12, 120);
        let a = Smartcard::manufacture(&mut auth, "a", Tick(0)).unwrap();
        let b = Smartcard::manufacture(&mut auth, "b", Tick(10)).unwrap();
        assert_eq!(mutual_authenticate(&a, &b, Tick(11)), Ok(()));
        assert_eq!(mutual_authenticate(&a, &b, Tick(12)), Ok(()));
        let err = mutual_authenticate(&a, &b, Tick(13)).unwrap_err();
        assert_eq!(err.card(), "a");
        assert!(matches!(err, AuthFailure::CardExpired { end_of_life: Tick(12), .. }));
    }

    #[test]
    fn acceptance_is_symmetric() {
        let mut auth = authority(6, 72);
        let cards: Vec<Smartcard> = (0..18)
            .map(|m| Smartcard::manufacture(&mut auth, &format!("c{m}"), Tick(m)).unwrap())
            .collect();
        for a in &cards {
            for b in &cards {
                for t in 0..30 {
                    let ab = mutual_authenticate(a, b, Tick(t)).is_ok();
                    let ba = mutual_authenticate(b, a, Tick(t)).is_ok();
                    assert_eq!(ab, ba, "{} vs {} at {}", a.id, b.id, t);
                    let overlap = t >= a.manufactured_at.0.max(b.manufactured_at.0)
                        && t <= a.end_of_life.0.min(b.end_of_life.0);
                    assert_eq!(ab, overlap, "{} vs {} at {}", a.id, b.id, t);
                }
            }
        }
    }

    #[test]
    fn a_peer_anchored_to_an_unknown_root_is_named_in_the_refusal() {
        let mut auth = authority(12, 120);
        let old = Smartcard::manufacture(&mut auth, "old", Tick(20)).unwrap();
        let mut new = Smartcard::manufacture(&mut auth, "new", Tick(40)).unwrap();
        assert_eq!(new.own_chain[2].issuer_ref, "root-ca-g2");
        // pretend the old card were still in service when the new card appears
        let mut zombie = old.clone();
        zombie.end_of_life = Tick(60);
        new.end_of_life = Tick(60);
        let err = mutual_authenticate(&zombie, &new, Tick(41)).unwrap_err();
        assert_eq!(err.card(), "new");
        match err {
            AuthFailure::ChainRejected { rejection, .. } => {
                assert_eq!(rejection.reason, RejectReason::UntrustedRoot);
            }
            other => panic!("unexpected failure {other:?}"),
        }
    }

    #[test]
    fn register_attestations_need_an_active_pinned_signer() {
        let mut auth = authority(12, 120);
        let card = Smartcard::manufacture(&mut auth, "card", Tick(0)).unwrap();
        let payload = b"balance attestation";
        let (sig, signer) = auth.sign_with_central_register(payload, Tick(5)).unwrap();
        assert_eq!(card.validate_central_register_signature(payload, &sig, &signer, Tick(5)), Ok(()));
        assert!(matches!(
            card.validate_central_register_signature(b"altered", &sig, &signer, Tick(5)),
            Err(RegisterValidationError::BadSignature)
        ));
        // past the signer's issuing window the attestation is stale
        let until = signer.issue_until;
        assert!(matches!(
            card.validate_central_register_signature(payload, &sig, &signer, until),
            Err(RegisterValidationError::SignerNotActive { .. })
        ));
        // an on-demand register leaf is not among the pins
        let stray = auth.issue_end_entity(Role::CentralRegister, "stray", Tick(5)).unwrap();
        assert!(matches!(
            card.validate_central_register_signature(payload, &sig, &stray.certificate, Tick(5)),
            Err(RegisterValidationError::SignerNotPinned { .. })
        ));
    }

    #[test]
    fn the_trusted_clock_only_moves_forward() {
        let mut auth = authority(12, 120);
        let mut card = Smartcard::manufacture(&mut auth, "card", Tick(0)).unwrap();
        let ts8 = auth.issue_timestamp(Tick(8)).unwrap();
        assert_eq!(card.advance_trusted_time(&ts8), Ok(Tick(8)));
        let ts3 = auth.issue_timestamp(Tick(3)).unwrap();
        assert_eq!(card.advance_trusted_time(&ts3), Ok(Tick(8)));
        assert_eq!(card.last_trusted_time(), Tick(8));

        let mut forged = ts8.clone();
        forged.tick = Tick(11);
        assert_eq!(card.advance_trusted_time(&forged), Err(TimeError::BadSignature));
        assert_eq!(card.last_trusted_time(), Tick(8));

        let mut unknown = ts8.clone();
        unknown.signer_ref = "nobody".into();
        assert!(matches!(
            card.advance_trusted_time(&unknown),
            Err(TimeError::SignerNotPinned { .. })
        ));
    }

    #[test]
    fn a_signer_asserting_a_time_outside_its_window_is_refused() {
        let key = keypair_from_seed(MOCK_ALGORITHM, &[9; 32]).unwrap();
        let cert = Certificate {
            serial: 99,
            role: Role::TimestampService,
            holder_ref: "drifted".into(),
            issuer_ref: "operational-ca-g1".into(),
            public_key: key.public().clone(),
            verify_from: Tick(0),
            issue_from: Tick(0),
            issue_until: Tick(12),
            verify_until: Tick(12),
            signature: Signature { algorithm: MOCK_ALGORITHM, bytes: vec![0; 32] },
        };
        let mut card_auth = authority(12, 60);
        let mut card = Smartcard::manufacture(&mut card_auth, "card", Tick(0)).unwrap();
        card.pinned_timestamp.push(cert);
        let ts = SignedTimestamp {
            tick: Tick(20),
            signer_ref: "drifted".into(),
            signature: sign(&key, &timestamp_bytes(Tick(20))).unwrap(),
        };
        assert!(matches!(
            card.advance_trusted_time(&ts),
            Err(TimeError::SignerNotActive { tick: Tick(20), .. })
        ));
    }

    #[test]
    fn cards_round_trip_through_text() {
        let mut auth = authority(12, 120);
        let mut card = Smartcard::manufacture(&mut auth, "card", Tick(30)).unwrap();
        let ts = auth.issue_timestamp(Tick(33)).unwrap();
        card.advance_trusted_time(&ts).unwrap();
        let text = card.to_toml();
        let back = Smartcard::from_toml(&text).unwrap();
        assert_eq!(back, card);
        assert_eq!(back.last_trusted_time(), Tick(33));
    }
}
