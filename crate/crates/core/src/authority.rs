use crate::cert::{Certificate, MAX_REF_LEN};
use crate::codec::signing_bytes;
use crate::crypto::{keypair_from_seed, sign, KeyPair, Signature, MOCK_ALGORITHM};
use crate::role::Role;
use crate::schedule::Schedule;
use crate::tick::Tick;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

const TIMESTAMP_DOMAIN: &[u8] = b"signed-timestamp.v1";
const REGISTER_DOMAIN: &[u8] = b"register-attestation.v1";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RevocationEntry {
    pub issuer_ref: String,
    pub serial: u64,
    pub tick: Tick,
}

/// The central bank's revocation book: an append-only list of withdrawn
/// certificates plus a log of when each registered relying party last
/// pulled a copy. There is no broadcast; parties see exactly what their
/// most recent sync contained.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevocationRegistry {
    entries: Vec<RevocationEntry>,
    last_sync: BTreeMap<String, Tick>,
}

impl RevocationRegistry {
    pub fn entries(&self) -> &[RevocationEntry] {
        &self.entries
    }

    pub fn last_sync(&self, party: &str) -> Option<Tick> {
        self.last_sync.get(party).copied()
    }

    fn contains(&self, issuer_ref: &str, serial: u64) -> bool {
        self.entries.iter().any(|e| e.issuer_ref == issuer_ref && e.serial == serial)
    }

    fn record(&mut self, issuer_ref: String, serial: u64, tick: Tick) {
        if !self.contains(&issuer_ref, serial) {
            self.entries.push(RevocationEntry { issuer_ref, serial, tick });
        }
    }

    /// The registry as a party syncing at `t` sees it: only revocations
    /// that had already happened.
    pub fn snapshot_at(&self, t: Tick) -> RegistrySnapshot {
        let mut entries: Vec<RevocationEntry> =
            self.entries.iter().filter(|e| e.tick <= t).cloned().collect();
        entries.sort();
        RegistrySnapshot { taken_at: t, entries }
    }
}

/// What one relying party knows about revocations: a frozen copy taken at
/// sync time. Offline verifiers use [`RegistrySnapshot::empty`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistrySnapshot {
    pub taken_at: Tick,
    pub entries: Vec<RevocationEntry>,
}

impl RegistrySnapshot {
    pub fn empty() -> Self {
        RegistrySnapshot { taken_at: Tick::ZERO, entries: Vec::new() }
    }

    pub fn is_revoked(&self, issuer_ref: &str, serial: u64) -> bool {
        self.entries.iter().any(|e| e.issuer_ref == issuer_ref && e.serial == serial)
    }

    pub fn record(&mut self, issuer_ref: String, serial: u64, tick: Tick) {
        if !self.is_revoked(&issuer_ref, serial) {
            self.entries.push(RevocationEntry { issuer_ref, serial, tick });
            self.entries.sort();
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("snapshot serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

/// A timestamp assertion from the timestamp service: the tick, which
/// service generation signed it, and the signature over both.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedTimestamp {
    pub tick: Tick,
    pub signer_ref: String,
    pub signature: Signature,
}

pub fn timestamp_bytes(tick: Tick) -> Vec<u8> {
    let mut out = Vec::with_capacity(TIMESTAMP_DOMAIN.len() + 8);
    out.extend_from_slice(TIMESTAMP_DOMAIN);
    out.extend_from_slice(&tick.0.to_be_bytes());
    out
}

pub fn register_attestation_bytes(payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(REGISTER_DOMAIN.len() + 8 + payload.len());
    out.extend_from_slice(REGISTER_DOMAIN);
    out.extend_from_slice(&(payload.len() as u64).to_be_bytes());
    out.extend_from_slice(payload);
    out
}

#[derive(Debug, Clone)]
struct GenerationEntry {
    keypair: KeyPair,
    certificate: Certificate,
    parent: Option<(Role, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaterializeError {
    #[error("no {issuer} generation can sign {role} generation {index} at its creation tick {t}")]
    NoActiveIssuer { role: Role, index: u32, issuer: Role, t: Tick },
    #[error("{role} generation {index} names parent generation {parent} which does not exist")]
    MissingParent { role: Role, index: u32, parent: u32 },
    #[error("{role} generation {index} overflows the tick range")]
    Overflow { role: Role, index: u32 },
    #[error("{role} generation {index} produces an oversized name: {holder}")]
    BadReference { role: Role, index: u32, holder: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IssueError {
    #[error("{role} certificates are not issued on demand")]
    NotEndEntity { role: Role },
    #[error("no active {issuer} generation at tick {t}")]
    NoActiveIssuer { issuer: Role, t: Tick },
    #[error("holder reference {holder:?} is empty or longer than {max} bytes")]
    BadHolderRef { holder: String, max: usize },
    #[error("certificate for {holder} would outlive {ancestor} generation {index}, which expires at {ancestor_until} (needed {needed}); the schedule should have made this impossible")]
    AncestorWindowExceeded {
        holder: String,
        ancestor: Role,
        index: u32,
        ancestor_until: Tick,
        needed: Tick,
    },
    #[error("validity window starting at {t} overflows the tick range")]
    Overflow { t: Tick },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("no certificate with serial {serial} issued under {issuer_ref}")]
    UnknownCertificate { issuer_ref: String, serial: u64 },
    #[error("no certificate held by {holder_ref}")]
    UnknownHolder { holder_ref: String },
    #[error("party {id} is not registered")]
    UnknownParty { id: String },
}

/// An issued certificate together with its full chain, leaf first, ending
/// at the self-signed root: `chain[0]` is the certificate itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issued {
    pub certificate: Certificate,
    pub chain: Vec<Certificate>,
}

/// The central bank's view of the whole hierarchy: every scheduled
/// generation materialized as a key pair and certificate, serial counters
/// per issuer, the revocation book, and the set of registered relying
/// parties.
#[derive(Debug, Clone)]
pub struct AuthorityState {
    schedule: Schedule,
    entries: BTreeMap<(Role, u32), GenerationEntry>,
    serials: BTreeMap<String, u64>,
    issued: BTreeMap<(String, u64), Certificate>,
    registry: RevocationRegistry,
    parties: BTreeSet<String>,
    master_seed: u64,
}

fn derive_seed(master: u64, domain: &str, name: &str, n: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(domain.as_bytes());
    h.update(master.to_be_bytes());
    h.update((name.len() as u64).to_be_bytes());
    h.update(name.as_bytes());
    h.update(n.to_be_bytes());
    h.finalize().into()
}

fn generation_holder(role: Role, index: u32) -> String {
    format!("{role}-g{index}")
}

/// On-demand validity, in (active, passive) ticks, for certificates issued
/// outside the planned generations. Cards and register/timestamp
/// certificates live one unit; minting and service providers get two.
fn demand_durations(role: Role, u: u64) -> (u64, u64) {
    match role {
        Role::SmartcardEe | Role::CentralRegister | Role::TimestampService => (u, 0),
        Role::Minting | Role::Fsp => (2 * u, 0),
        Role::ManufacturerCa => (u, u),
        _ => (0, 0),
    }
}

pub fn materialize(schedule: &Schedule) -> Result<AuthorityState, MaterializeError> {
    materialize_seeded(schedule, 0)
}

/// Builds the authority for a schedule: walks roles top-down, creates one
/// key pair per generation, and signs each certificate with the parent
/// generation that is active at the child's creation tick (the root signs
/// itself; each root generation is an independent trust anchor).
///
/// This insists on schedule structure it physically needs (a live signer
/// at every creation tick, names that fit the wire format) but does not
/// re-run the full validator; the simulator uses that looseness to bring
/// up deliberately broken schedules and watch them fail in the field.
pub fn materialize_seeded(
    schedule: &Schedule,
    master_seed: u64,
) -> Result<AuthorityState, MaterializeError> {
    let mut state = AuthorityState {
        schedule: schedule.clone(),
        entries: BTreeMap::new(),
        serials: BTreeMap::new(),
        issued: BTreeMap::new(),
        registry: RevocationRegistry::default(),
        parties: BTreeSet::new(),
        master_seed,
    };

    for role in Role::ALL {
        for g in schedule.generations(role) {
            let holder = generation_holder(role, g.index);
            if holder.len() > MAX_REF_LEN {
                return Err(MaterializeError::BadReference { role, index: g.index, holder });
            }
            g.checked_windows()
                .ok_or(MaterializeError::Overflow { role, index: g.index })?;
            let keypair = keypair_from_seed(
                MOCK_ALGORITHM,
                &derive_seed(master_seed, "generation-key", &holder, 0),
            )
            .expect("the mock signature scheme is registered");

            let (issuer_ref, parent) = if role == Role::RootCa {
                (holder.clone(), None)
            } else {
                let issuer_role = role.issuer();
                let parent_index = match g.parent_index {
                    Some(pi) => pi,
                    None => schedule
                        .issuer_for(role, g.start)
                        .map_err(|_| MaterializeError::NoActiveIssuer {
                            role,
                            index: g.index,
                            issuer: issuer_role,
                            t: g.start,
                        })?
                        .index,
                };
                let parent_gen = schedule.generation(issuer_role, parent_index).ok_or(
                    MaterializeError::MissingParent { role, index: g.index, parent: parent_index },
                )?;
                if !parent_gen.is_active_at(g.start) {
                    return Err(MaterializeError::NoActiveIssuer {
                        role,
                        index: g.index,
                        issuer: issuer_role,
                        t: g.start,
                    });
                }
                (generation_holder(issuer_role, parent_index), Some((issuer_role, parent_index)))
            };

            let signer_key = match parent {
                None => keypair.clone(),
                Some(key) => state.entries[&key].keypair.clone(),
            };
            let serial = state.next_serial(&issuer_ref);
            let mut certificate = Certificate {
                serial,
                role,
                holder_ref: holder.clone(),
                issuer_ref,
                public_key: keypair.public().clone(),
                verify_from: g.verify_from(),
                issue_from: g.issue_from(),
                issue_until: g.issue_until(),
                verify_until: g.verify_until(),
                signature: Signature { algorithm: MOCK_ALGORITHM, bytes: Vec::new() },
            };
            let bytes = signing_bytes(&certificate).map_err(|_| MaterializeError::BadReference {
                role,
                index: g.index,
                holder: holder.clone(),
            })?;
            certificate.signature = sign(&signer_key, &bytes).expect("mock signing is total");

            state
                .issued
                .insert((certificate.issuer_ref.clone(), serial), certificate.clone());
            state
                .entries
                .insert((role, g.index), GenerationEntry { keypair, certificate, parent });
        }
    }
    Ok(state)
}

impl AuthorityState {
    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn registry(&self) -> &RevocationRegistry {
        &self.registry
    }

    fn next_serial(&mut self, issuer_ref: &str) -> u64 {
        let counter = self.serials.entry(issuer_ref.to_string()).or_insert(0);
        *counter += 1;
        *counter
    }

    pub fn generation_certificate(&self, role: Role, index: u32) -> Option<&Certificate> {
        self.entries.get(&(role, index)).map(|e| &e.certificate)
    }

    pub fn certificate_count(&self) -> usize {
        self.entries.len()
    }

    /// The certificate chain of a planned generation, leaf first, up to
    /// and including its root anchor.
    pub fn chain_for_generation(&self, role: Role, index: u32) -> Option<Vec<Certificate>> {
        let mut out = Vec::new();
        let mut key = (role, index);
        loop {
            let entry = self.entries.get(&key)?;
            out.push(entry.certificate.clone());
            match entry.parent {
                None => return Some(out),
                Some(parent) => key = parent,
            }
        }
    }

    /// Root certificates that exist (in any phase) at `t`: what an online
    /// verifier or a card manufactured at `t` can anchor trust in.
    pub fn root_anchors_at(&self, t: Tick) -> Vec<Certificate> {
        self.strand_existing_at(Role::RootCa, t)
    }

    /// All certificates of a role's planned strand that exist at `t`,
    /// oldest generation first.
    pub fn strand_existing_at(&self, role: Role, t: Tick) -> Vec<Certificate> {
        self.schedule
            .generations(role)
            .iter()
            .filter(|g| g.exists_at(t))
            .filter_map(|g| self.generation_certificate(role, g.index).cloned())
            .collect()
    }

    fn active_entry(&self, role: Role, t: Tick) -> Result<&GenerationEntry, IssueError> {
        self.schedule
            .generations(role)
            .iter()
            .rev()
            .find(|g| g.is_active_at(t))
            .and_then(|g| self.entries.get(&(role, g.index)))
            .ok_or(IssueError::NoActiveIssuer { issuer: role, t })
    }

    fn check_ref(holder_ref: &str) -> Result<(), IssueError> {
        if holder_ref.is_empty() || holder_ref.len() > MAX_REF_LEN {
            return Err(IssueError::BadHolderRef {
                holder: holder_ref.to_string(),
                max: MAX_REF_LEN,
            });
        }
        Ok(())
    }

    /// Signs a new leaf under the active generation of `role`'s issuer.
    /// With `enforce_fit` the new windows must stay inside every ancestor
    /// window; the factory floor skips that discipline (a manufacturer
    /// stamps cards mechanically), which is how planning mistakes get to
    /// exist in the field for the simulator to observe.
    fn issue_under(
        &mut self,
        role: Role,
        holder_ref: &str,
        t: Tick,
        enforce_fit: bool,
    ) -> Result<Issued, IssueError> {
        Self::check_ref(holder_ref)?;
        let issuer_role = role.issuer();
        let issuer_index = self.active_entry(issuer_role, t)?.certificate.holder_ref.clone();
        let issuer_gen = self
            .schedule
            .issuer_for(role, t)
            .map_err(|_| IssueError::NoActiveIssuer { issuer: issuer_role, t })?;
        debug_assert_eq!(generation_holder(issuer_gen.role, issuer_gen.index), issuer_index);

        let (active, passive) = demand_durations(role, self.schedule.u);
        let issue_until = t
            .checked_add(active)
            .ok_or(IssueError::Overflow { t })?;
        let verify_until = issue_until
            .checked_add(passive)
            .ok_or(IssueError::Overflow { t })?;

        let ancestors = self
            .chain_for_generation(issuer_gen.role, issuer_gen.index)
            .expect("issuer generation is materialized");
        if enforce_fit {
            for (ancestor, key) in ancestors.iter().zip(self.ancestor_keys(issuer_gen)) {
                if verify_until > ancestor.verify_until || t < ancestor.verify_from {
                    return Err(IssueError::AncestorWindowExceeded {
                        holder: holder_ref.to_string(),
                        ancestor: key.0,
                        index: key.1,
                        ancestor_until: ancestor.verify_until,
                        needed: verify_until,
                    });
                }
            }
        }

        let issuer = &self.entries[&(issuer_gen.role, issuer_gen.index)];
        let issuer_key = issuer.keypair.clone();
        let issuer_ref = issuer.certificate.holder_ref.clone();
        let serial = self.next_serial(&issuer_ref);
        let keypair = keypair_from_seed(
            MOCK_ALGORITHM,
            &derive_seed(self.master_seed, "end-entity-key", holder_ref, serial),
        )
        .expect("the mock signature scheme is registered");

        let mut certificate = Certificate {
            serial,
            role,
            holder_ref: holder_ref.to_string(),
            issuer_ref: issuer_ref.clone(),
            public_key: keypair.public().clone(),
            verify_from: t,
            issue_from: t,
            issue_until,
            verify_until,
            signature: Signature { algorithm: MOCK_ALGORITHM, bytes: Vec::new() },
        };
        let bytes = signing_bytes(&certificate)
            .map_err(|_| IssueError::BadHolderRef { holder: holder_ref.into(), max: MAX_REF_LEN })?;
        certificate.signature = sign(&issuer_key, &bytes).expect("mock signing is total");

        self.issued.insert((issuer_ref, serial), certificate.clone());
        let mut chain = vec![certificate.clone()];
        chain.extend(ancestors);
        Ok(Issued { certificate, chain })
    }

    fn ancestor_keys(&self, start: crate::schedule::GenerationRef) -> Vec<(Role, u32)> {
        let mut out = Vec::new();
        let mut key = (start.role, start.index);
        while let Some(entry) = self.entries.get(&key) {
            out.push(key);
            match entry.parent {
                None => break,
                Some(parent) => key = parent,
            }
        }
        out
    }

    /// Issues an end-entity certificate at `t`: a smartcard, service
    /// provider, minting, register or timestamp leaf with its role's
    /// on-demand validity starting immediately.
    pub fn issue_end_entity(
        &mut self,
        role: Role,
        holder_ref: &str,
        t: Tick,
    ) -> Result<Issued, IssueError> {
        if !role.is_end_entity() {
            return Err(IssueError::NotEndEntity { role });
        }
        self.issue_under(role, holder_ref, t, true)
    }

    /// Card issuance as the factory does it: the active manufacturer CA
    /// signs without looking above its own head.
    pub(crate) fn issue_card(&mut self, holder_ref: &str, t: Tick) -> Result<Issued, IssueError> {
        self.issue_under(Role::SmartcardEe, holder_ref, t, false)
    }

    /// Issues a manufacturer CA on demand: one unit of issuing time plus
    /// one unit of passive tail, signed by the active hardware CA.
    pub fn equip_manufacturer(&mut self, holder_ref: &str, t: Tick) -> Result<Issued, IssueError> {
        self.issue_under(Role::ManufacturerCa, holder_ref, t, true)
    }

    /// Whether a fresh manufacturer CA issued at `t` would fit: an active
    /// hardware generation must exist and the new windows must stay inside
    /// every ancestor. This is the "manufacturer certificates can be
    /// issued at any time" probe; it never mutates state.
    pub fn can_equip_manufacturer(&self, t: Tick) -> Result<(), IssueError> {
        let issuer_gen = self
            .schedule
            .issuer_for(Role::ManufacturerCa, t)
            .map_err(|_| IssueError::NoActiveIssuer { issuer: Role::HardwareCa, t })?;
        let (active, passive) = demand_durations(Role::ManufacturerCa, self.schedule.u);
        let verify_until = t
            .checked_add(active)
            .and_then(|x| x.checked_add(passive))
            .ok_or(IssueError::Overflow { t })?;
        let ancestors = self
            .chain_for_generation(issuer_gen.role, issuer_gen.index)
            .expect("issuer generation is materialized");
        for (ancestor, key) in ancestors.iter().zip(self.ancestor_keys(issuer_gen)) {
            if verify_until > ancestor.verify_until || t < ancestor.verify_from {
                return Err(IssueError::AncestorWindowExceeded {
                    holder: "fresh manufacturer".into(),
                    ancestor: key.0,
                    index: key.1,
                    ancestor_until: ancestor.verify_until,
                    needed: verify_until,
                });
            }
        }
        Ok(())
    }

    /// Signs `payload` with the central register generation active at `t`.
    pub fn sign_with_central_register(
        &self,
        payload: &[u8],
        t: Tick,
    ) -> Result<(Signature, Certificate), IssueError> {
        let entry = self.active_entry(Role::CentralRegister, t)?;
        let sig = sign(&entry.keypair, &register_attestation_bytes(payload))
            .expect("mock signing is total");
        Ok((sig, entry.certificate.clone()))
    }

    /// A signed assertion that the trusted clock reads `t`, from the
    /// timestamp service generation active at `t`.
    pub fn issue_timestamp(&self, t: Tick) -> Result<SignedTimestamp, IssueError> {
        let entry = self.active_entry(Role::TimestampService, t)?;
        let signature =
            sign(&entry.keypair, &timestamp_bytes(t)).expect("mock signing is total");
        Ok(SignedTimestamp {
            tick: t,
            signer_ref: entry.certificate.holder_ref.clone(),
            signature,
        })
    }

    /// Withdraws one certificate. Relying parties learn of it at their
    /// next sync; revoking an already-revoked certificate changes nothing.
    pub fn revoke(&mut self, issuer_ref: &str, serial: u64, t: Tick) -> Result<(), RegistryError> {
        if !self.issued.contains_key(&(issuer_ref.to_string(), serial)) {
            return Err(RegistryError::UnknownCertificate {
                issuer_ref: issuer_ref.to_string(),
                serial,
            });
        }
        self.registry.record(issuer_ref.to_string(), serial, t);
        Ok(())
    }

    /// Withdraws every certificate held by `holder_ref`; returns the
    /// (issuer, serial) pairs that were revoked.
    pub fn revoke_holder(
        &mut self,
        holder_ref: &str,
        t: Tick,
    ) -> Result<Vec<(String, u64)>, RegistryError> {
        let hits: Vec<(String, u64)> = self
            .issued
            .iter()
            .filter(|(_, cert)| cert.holder_ref == holder_ref)
            .map(|((issuer, serial), _)| (issuer.clone(), *serial))
            .collect();
        if hits.is_empty() {
            return Err(RegistryError::UnknownHolder { holder_ref: holder_ref.to_string() });
        }
        for (issuer, serial) in &hits {
            self.registry.record(issuer.clone(), *serial, t);
        }
        Ok(hits)
    }

    pub fn register_party(&mut self, id: &str) {
        self.parties.insert(id.to_string());
    }

    /// Hands `party` the registry as of `t` and logs the sync. The party
    /// keeps this snapshot until it syncs again; anything revoked later is
    /// invisible to it.
    pub fn sync_party(&mut self, id: &str, t: Tick) -> Result<RegistrySnapshot, RegistryError> {
        if !self.parties.contains(id) {
            return Err(RegistryError::UnknownParty { id: id.to_string() });
        }
        self.registry.last_sync.insert(id.to_string(), t);
        Ok(self.registry.snapshot_at(t))
    }

    pub fn find_issued(&self, issuer_ref: &str, serial: u64) -> Option<&Certificate> {
        self.issued.get(&(issuer_ref.to_string(), serial))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{verify_chain, RejectReason};
    use crate::crypto::verify;
    use crate::planner::{default_first_root_active, plan_schedule};
    use crate::profile::baseline_minimums;

    fn state(u: u64, horizon: u64) -> AuthorityState {
        let s = plan_schedule(u, Tick(horizon), &baseline_minimums(u), default_first_root_active(u))
            .unwrap();
        materialize(&s).unwrap()
    }

    #[test]
    fn one_certificate_per_generation() {
        let st = state(12, 120);
        assert_eq!(st.certificate_count(), st.schedule().generation_count());
    }

    #[test]
    fn root_generations_are_independent_anchors() {
        let st = state(12, 120);
        let g1 = st.generation_certificate(Role::RootCa, 1).unwrap();
        let g2 = st.generation_certificate(Role::RootCa, 2).unwrap();
        assert!(g2.is_self_signed());
        let bytes = signing_bytes(g2).unwrap();
        assert!(verify(&g2.public_key, &bytes, &g2.signature));
        assert!(!verify(&g1.public_key, &bytes, &g2.signature));
        assert_ne!(g1.public_key, g2.public_key);
    }

    #[test]
    fn every_generation_chain_verifies_at_creation() {
        let st = state(12, 120);
        for strand in &st.schedule().roles.clone() {
            for g in &strand.generations {
                let chain = st.chain_for_generation(strand.role, g.index).unwrap();
                let anchors = st.root_anchors_at(g.start);
                let verdict = verify_chain(&chain, &anchors, g.start, &RegistrySnapshot::empty());
                assert_eq!(verdict, Ok(()), "{} generation {}", strand.role, g.index);
            }
        }
    }

    #[test]
    fn certificate_windows_mirror_the_generation() {
        let st = state(12, 120);
        let g = st.schedule().generation(Role::RootCa, 2).copied().unwrap();
        let cert = st.generation_certificate(Role::RootCa, 2).unwrap();
        assert_eq!(cert.verify_from, g.verify_from());
        assert_eq!(cert.issue_from, g.issue_from());
        assert_eq!(cert.issue_until, g.issue_until());
        assert_eq!(cert.verify_until, g.verify_until());
    }

    #[test]
    fn serials_increase_per_issuer_and_never_repeat() {
        let mut st = state(12, 60);
        let a = st.issue_end_entity(Role::Fsp, "bank-a", Tick(5)).unwrap();
        let b = st.issue_end_entity(Role::Fsp, "bank-b", Tick(5)).unwrap();
        assert_eq!(a.certificate.issuer_ref, b.certificate.issuer_ref);
        assert!(b.certificate.serial > a.certificate.serial);
    }

    #[test]
    fn fsp_windows_span_two_units() {
        let mut st = state(12, 60);
        let fsp = st.issue_end_entity(Role::Fsp, "bank-a", Tick(7)).unwrap().certificate;
        assert_eq!(fsp.verify_from, Tick(7));
        assert_eq!(fsp.verify_until, Tick(31));
        assert_eq!(fsp.verify_until.0 - fsp.verify_from.0, 24);
    }

    #[test]
    fn cards_issued_at_the_last_manufacturer_tick_stay_verifiable() {
        let mut st = state(12, 120);
        let mca = st.schedule().generation(Role::ManufacturerCa, 1).copied().unwrap();
        let last_active = Tick(mca.issue_until().0 - 1);
        let card = st.issue_end_entity(Role::SmartcardEe, "late-card", last_active).unwrap();
        let anchors = st.root_anchors_at(last_active);
        for t in last_active.0..=last_active.0 + 12 {
            assert_eq!(
                verify_chain(&card.chain, &anchors, Tick(t), &RegistrySnapshot::empty()),
                Ok(()),
                "tick {t}"
            );
        }
    }

    #[test]
    fn issuance_succeeds_at_every_tick_and_chains_hold_for_whole_windows() {
        let u = 6;
        let mut st = state(u, 10 * u);
        let horizon = st.schedule().horizon.0;
        for role in [
            Role::SmartcardEe,
            Role::Fsp,
            Role::CentralRegister,
            Role::TimestampService,
            Role::Minting,
        ] {
            for t in 0..horizon {
                let issued = st
                    .issue_end_entity(role, "sweep-holder", Tick(t))
                    .unwrap_or_else(|e| panic!("{role} at {t}: {e}"));
                let anchors = st.root_anchors_at(Tick(t));
                let until = issued.certificate.verify_until.0;
                for tau in t..=until {
                    assert_eq!(
                        verify_chain(&issued.chain, &anchors, Tick(tau), &RegistrySnapshot::empty()),
                        Ok(()),
                        "{role} issued {t} checked {tau}"
                    );
                }
            }
        }
    }

    #[test]
    fn ca_roles_are_not_issued_on_demand() {
        let mut st = state(12, 60);
        let err = st.issue_end_entity(Role::HardwareCa, "rogue", Tick(3)).unwrap_err();
        assert!(matches!(err, IssueError::NotEndEntity { role: Role::HardwareCa }));
    }

    #[test]
    fn fresh_manufacturers_fit_everywhere_under_a_sound_schedule() {
        let st = state(12, 120);
        for t in 0..120 {
            assert_eq!(st.can_equip_manufacturer(Tick(t)), Ok(()), "tick {t}");
        }
        let mut st = state(12, 120);
        let issued = st.equip_manufacturer("extra-plant", Tick(50)).unwrap();
        assert_eq!(issued.certificate.role, Role::ManufacturerCa);
        assert_eq!(issued.certificate.verify_until, Tick(74));
    }

    #[test]
    fn revocation_reaches_parties_only_at_sync_time() {
        let mut st = state(12, 120);
        let fsp = st.issue_end_entity(Role::Fsp, "bank-a", Tick(40)).unwrap();
        st.register_party("merchant");
        st.register_party("laggard");
        let before = st.sync_party("laggard", Tick(49)).unwrap();
        st.revoke(&fsp.certificate.issuer_ref, fsp.certificate.serial, Tick(50)).unwrap();
        let after = st.sync_party("merchant", Tick(51)).unwrap();

        let anchors = st.root_anchors_at(Tick(52));
        let fresh = verify_chain(&fsp.chain, &anchors, Tick(52), &after).unwrap_err();
        assert_eq!(fresh.reason, RejectReason::Revoked);
        assert_eq!(verify_chain(&fsp.chain, &anchors, Tick(52), &before), Ok(()));
        // offline verifiers never see the registry at all
        assert_eq!(
            verify_chain(&fsp.chain, &anchors, Tick(52), &RegistrySnapshot::empty()),
            Ok(())
        );
    }

    #[test]
    fn revocation_is_idempotent_and_monotone() {
        let mut st = state(12, 120);
        let fsp = st.issue_end_entity(Role::Fsp, "bank-a", Tick(40)).unwrap();
        let key = (fsp.certificate.issuer_ref.clone(), fsp.certificate.serial);
        st.revoke(&key.0, key.1, Tick(50)).unwrap();
        st.revoke(&key.0, key.1, Tick(55)).unwrap();
        assert_eq!(st.registry().entries().len(), 1);
        assert_eq!(st.registry().entries()[0].tick, Tick(50));
        for t in 50..60 {
            assert!(st.registry().snapshot_at(Tick(t)).is_revoked(&key.0, key.1));
        }
    }

    #[test]
    fn unknown_certificates_and_parties_are_errors() {
        let mut st = state(12, 60);
        assert!(matches!(
            st.revoke("nobody", 1, Tick(1)),
            Err(RegistryError::UnknownCertificate { .. })
        ));
        assert!(matches!(
            st.revoke_holder("ghost", Tick(1)),
            Err(RegistryError::UnknownHolder { .. })
        ));
        assert!(matches!(
            st.sync_party("unregistered", Tick(1)),
            Err(RegistryError::UnknownParty { .. })
        ));
    }

    #[test]
    fn materialize_is_deterministic_per_seed() {
        let s = plan_schedule(12, Tick(60), &baseline_minimums(12), 36).unwrap();
        let a = materialize_seeded(&s, 7).unwrap();
        let b = materialize_seeded(&s, 7).unwrap();
        let c = materialize_seeded(&s, 8).unwrap();
        let cert_a = a.generation_certificate(Role::HardwareCa, 1).unwrap();
        let cert_b = b.generation_certificate(Role::HardwareCa, 1).unwrap();
        let cert_c = c.generation_certificate(Role::HardwareCa, 1).unwrap();
        assert_eq!(cert_a, cert_b);
        assert_ne!(cert_a.public_key, cert_c.public_key);
    }
}
