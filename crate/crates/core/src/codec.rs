//! Binary certificate encoding.
//!
//! Certificates serialize to a fixed tag-length-value layout: one octet of
//! tag, two octets of big-endian length, then the value. Fields appear in
//! strictly ascending tag order with the signature last, and every field is
//! mandatory. The layout has no optional or variable parts beyond the
//! length-prefixed values, so encoding is canonical: re-encoding any
//! successfully decoded input reproduces it byte for byte.
//!
//! The signature covers all bytes that precede the signature field, i.e.
//! the encoding of tags 0x01 through 0x0a.

use crate::cert::{Certificate, MAX_REF_LEN};
use crate::crypto::{scheme_for, PublicKey, Signature};
use crate::role::Role;
use crate::tick::Tick;
use thiserror::Error;

pub const TAG_VERSION: u8 = 0x01;
pub const TAG_SERIAL: u8 = 0x02;
pub const TAG_ROLE: u8 = 0x03;
pub const TAG_HOLDER_REF: u8 = 0x04;
pub const TAG_ISSUER_REF: u8 = 0x05;
pub const TAG_PUBLIC_KEY: u8 = 0x06;
pub const TAG_VERIFY_FROM: u8 = 0x07;
pub const TAG_VERIFY_UNTIL: u8 = 0x08;
pub const TAG_ISSUE_FROM: u8 = 0x09;
pub const TAG_ISSUE_UNTIL: u8 = 0x0a;
pub const TAG_SIGNATURE: u8 = 0x7f;

pub const FORMAT_VERSION: u8 = 0x01;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("malformed certificate at offset {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
    #[error("{which} reference is {len} octets, limit is {MAX_REF_LEN}")]
    RefTooLong { which: &'static str, len: usize },
    #[error("unsupported signature algorithm 0x{0:02x}")]
    UnsupportedAlgorithm(u8),
    #[error("field under tag 0x{tag:02x} is too long to encode ({len} octets)")]
    FieldTooLong { tag: u8, len: usize },
}

fn malformed(offset: usize, reason: impl Into<String>) -> CodecError {
    CodecError::Malformed { offset, reason: reason.into() }
}

fn put_tlv(out: &mut Vec<u8>, tag: u8, value: &[u8]) -> Result<(), CodecError> {
    let len = u16::try_from(value.len())
        .map_err(|_| CodecError::FieldTooLong { tag, len: value.len() })?;
    out.push(tag);
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(value);
    Ok(())
}

fn check_refs(cert: &Certificate) -> Result<(), CodecError> {
    if cert.holder_ref.len() > MAX_REF_LEN {
        return Err(CodecError::RefTooLong { which: "holder", len: cert.holder_ref.len() });
    }
    if cert.issuer_ref.len() > MAX_REF_LEN {
        return Err(CodecError::RefTooLong { which: "issuer", len: cert.issuer_ref.len() });
    }
    Ok(())
}

/// The octets a signature over this certificate covers: every field in
/// encoding order up to, but excluding, the signature itself.
pub fn signing_bytes(cert: &Certificate) -> Result<Vec<u8>, CodecError> {
    check_refs(cert)?;
    if scheme_for(cert.public_key.algorithm).is_none() {
        return Err(CodecError::UnsupportedAlgorithm(cert.public_key.algorithm));
    }
    let mut out = Vec::with_capacity(192);
    put_tlv(&mut out, TAG_VERSION, &[FORMAT_VERSION])?;
    put_tlv(&mut out, TAG_SERIAL, &cert.serial.to_be_bytes())?;
    put_tlv(&mut out, TAG_ROLE, &[cert.role.code()])?;
    put_tlv(&mut out, TAG_HOLDER_REF, cert.holder_ref.as_bytes())?;
    put_tlv(&mut out, TAG_ISSUER_REF, cert.issuer_ref.as_bytes())?;
    let mut key = Vec::with_capacity(cert.public_key.bytes.len() + 1);
    key.push(cert.public_key.algorithm);
    key.extend_from_slice(&cert.public_key.bytes);
    put_tlv(&mut out, TAG_PUBLIC_KEY, &key)?;
    put_tlv(&mut out, TAG_VERIFY_FROM, &cert.verify_from.0.to_be_bytes())?;
    put_tlv(&mut out, TAG_VERIFY_UNTIL, &cert.verify_until.0.to_be_bytes())?;
    put_tlv(&mut out, TAG_ISSUE_FROM, &cert.issue_from.0.to_be_bytes())?;
    put_tlv(&mut out, TAG_ISSUE_UNTIL, &cert.issue_until.0.to_be_bytes())?;
    Ok(out)
}

pub fn encode(cert: &Certificate) -> Result<Vec<u8>, CodecError> {
    if scheme_for(cert.signature.algorithm).is_none() {
        return Err(CodecError::UnsupportedAlgorithm(cert.signature.algorithm));
    }
    let mut out = signing_bytes(cert)?;
    let mut sig = Vec::with_capacity(cert.signature.bytes.len() + 1);
    sig.push(cert.signature.algorithm);
    sig.extend_from_slice(&cert.signature.bytes);
    put_tlv(&mut out, TAG_SIGNATURE, &sig)?;
    Ok(out)
}

struct Reader<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn field(&mut self, expect_tag: u8, name: &str) -> Result<&'a [u8], CodecError> {
        let start = self.pos;
        if self.input.len() - self.pos < 3 {
            return Err(malformed(start, format!("truncated before {name} field")));
        }
        let tag = self.input[self.pos];
        if tag != expect_tag {
            let reason = if tag_name(tag).is_some() {
                format!("expected {name} (tag 0x{expect_tag:02x}), found tag 0x{tag:02x} out of order")
            } else {
                format!("unknown tag 0x{tag:02x} where {name} (tag 0x{expect_tag:02x}) was expected")
            };
            return Err(malformed(start, reason));
        }
        let len =
            u16::from_be_bytes([self.input[self.pos + 1], self.input[self.pos + 2]]) as usize;
        self.pos += 3;
        if self.input.len() - self.pos < len {
            return Err(malformed(start, format!("{name} value truncated")));
        }
        let value = &self.input[self.pos..self.pos + len];
        self.pos += len;
        Ok(value)
    }

    fn fixed(&mut self, tag: u8, name: &str, want: usize) -> Result<&'a [u8], CodecError> {
        let start = self.pos;
        let value = self.field(tag, name)?;
        if value.len() != want {
            return Err(malformed(
                start,
                format!("{name} must be {want} octets, found {}", value.len()),
            ));
        }
        Ok(value)
    }
}

fn tag_name(tag: u8) -> Option<&'static str> {
    match tag {
        TAG_VERSION => Some("version"),
        TAG_SERIAL => Some("serial"),
        TAG_ROLE => Some("role"),
        TAG_HOLDER_REF => Some("holder reference"),
        TAG_ISSUER_REF => Some("issuer reference"),
        TAG_PUBLIC_KEY => Some("public key"),
        TAG_VERIFY_FROM => Some("verify-from"),
        TAG_VERIFY_UNTIL => Some("verify-until"),
        TAG_ISSUE_FROM => Some("issue-from"),
        TAG_ISSUE_UNTIL => Some("issue-until"),
        TAG_SIGNATURE => Some("signature"),
        _ => None,
    }
}

fn be_u64(value: &[u8]) -> u64 {
    u64::from_be_bytes(value.try_into().unwrap())
}

fn parse_ref(value: &[u8], offset: usize, which: &str) -> Result<String, CodecError> {
    if value.len() > MAX_REF_LEN {
        return Err(malformed(
            offset,
            format!("{which} reference is {} octets, limit is {MAX_REF_LEN}", value.len()),
        ));
    }
    std::str::from_utf8(value)
        .map(str::to_owned)
        .map_err(|_| malformed(offset, format!("{which} reference is not valid UTF-8")))
}

/// Strict structural decode: exact field order, exact lengths, no unknown
/// or duplicate tags, no trailing bytes. Window ordering and signature
/// validity are deliberately not checked here; chain verification owns
/// those judgements.
pub fn decode(input: &[u8]) -> Result<Certificate, CodecError> {
    let mut r = Reader { input, pos: 0 };

    let start = r.pos;
    let version = r.fixed(TAG_VERSION, "version", 1)?;
    if version[0] != FORMAT_VERSION {
        return Err(malformed(start, format!("unsupported format version {}", version[0])));
    }

    let serial = be_u64(r.fixed(TAG_SERIAL, "serial", 8)?);

    let start = r.pos;
    let role_code = r.fixed(TAG_ROLE, "role", 1)?[0];
    let role = Role::from_code(role_code)
        .ok_or_else(|| malformed(start, format!("unknown role code 0x{role_code:02x}")))?;

    let start = r.pos;
    let holder = r.field(TAG_HOLDER_REF, "holder reference")?;
    let holder_ref = parse_ref(holder, start, "holder")?;

    let start = r.pos;
    let issuer = r.field(TAG_ISSUER_REF, "issuer reference")?;
    let issuer_ref = parse_ref(issuer, start, "issuer")?;

    let start = r.pos;
    let key = r.field(TAG_PUBLIC_KEY, "public key")?;
    if key.is_empty() {
        return Err(malformed(start, "public key field is empty"));
    }
    let public_key = PublicKey { algorithm: key[0], bytes: key[1..].to_vec() };

    let verify_from = Tick(be_u64(r.fixed(TAG_VERIFY_FROM, "verify-from", 8)?));
    let verify_until = Tick(be_u64(r.fixed(TAG_VERIFY_UNTIL, "verify-until", 8)?));
    let issue_from = Tick(be_u64(r.fixed(TAG_ISSUE_FROM, "issue-from", 8)?));
    let issue_until = Tick(be_u64(r.fixed(TAG_ISSUE_UNTIL, "issue-until", 8)?));

    let start = r.pos;
    let sig = r.field(TAG_SIGNATURE, "signature")?;
    if sig.is_empty() {
        return Err(malformed(start, "signature field is empty"));
    }
    let signature = Signature { algorithm: sig[0], bytes: sig[1..].to_vec() };

    if r.pos != input.len() {
        return Err(malformed(r.pos, format!("{} trailing bytes", input.len() - r.pos)));
    }

    Ok(Certificate {
        serial,
        role,
        holder_ref,
        issuer_ref,
        public_key,
        verify_from,
        verify_until,
        issue_from,
        issue_until,
        signature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{keypair_from_seed, sign, verify, MOCK_ALGORITHM};

    fn signed_cert(holder: &str, issuer_seed: u8) -> Certificate {
        let holder_key = keypair_from_seed(MOCK_ALGORITHM, &[7; 32]).unwrap();
        let issuer_key = keypair_from_seed(MOCK_ALGORITHM, &[issuer_seed; 32]).unwrap();
        let mut cert = Certificate {
            serial: 42,
            role: Role::ManufacturerCa,
            holder_ref: holder.into(),
            issuer_ref: "hardware-ca-g1".into(),
            public_key: holder_key.public().clone(),
            verify_from: Tick(0),
            verify_until: Tick(48),
            issue_from: Tick(0),
            issue_until: Tick(24),
            signature: Signature { algorithm: MOCK_ALGORITHM, bytes: Vec::new() },
        };
        cert.signature = sign(&issuer_key, &signing_bytes(&cert).unwrap()).unwrap();
        cert
    }

    #[test]
    fn round_trip_is_identity() {
        let cert = signed_cert("manufacturer-ca-g1", 3);
        let bytes = encode(&cert).unwrap();
        let back = decode(&bytes).unwrap();
        assert_eq!(back, cert);
        assert_eq!(encode(&back).unwrap(), bytes);
    }

    #[test]
    fn encoded_size_stays_small() {
        let cert = signed_cert(&"m".repeat(32), 3);
        assert!(encode(&cert).unwrap().len() <= 256);
    }

    #[test]
    fn signature_covers_all_preceding_bytes() {
        let cert = signed_cert("manufacturer-ca-g1", 3);
        let bytes = encode(&cert).unwrap();
        let issuer_key = keypair_from_seed(MOCK_ALGORITHM, &[3; 32]).unwrap();
        let body_len = bytes.len() - (3 + 1 + cert.signature.bytes.len());
        assert!(verify(issuer_key.public(), &bytes[..body_len], &cert.signature));
    }

    #[test]
    fn rejects_truncation_at_every_length() {
        let bytes = encode(&signed_cert("manufacturer-ca-g1", 3)).unwrap();
        for cut in 0..bytes.len() {
            assert!(decode(&bytes[..cut]).is_err(), "accepted truncation to {cut} bytes");
        }
    }

    #[test]
    fn rejects_trailing_bytes() {
        let mut bytes = encode(&signed_cert("manufacturer-ca-g1", 3)).unwrap();
        bytes.push(0);
        assert!(matches!(decode(&bytes), Err(CodecError::Malformed { .. })));
    }

    #[test]
    fn rejects_out_of_order_and_duplicate_tags() {
        let cert = signed_cert("manufacturer-ca-g1", 3);
        let bytes = encode(&cert).unwrap();

        // Swap the serial and role fields: 0x03 then 0x02.
        let mut swapped = Vec::new();
        swapped.extend_from_slice(&bytes[..4]);
        swapped.extend_from_slice(&bytes[15..19]);
        swapped.extend_from_slice(&bytes[4..15]);
        swapped.extend_from_slice(&bytes[19..]);
        assert!(decode(&swapped).is_err());

        // Duplicate the version field.
        let mut duplicated = Vec::new();
        duplicated.extend_from_slice(&bytes[..4]);
        duplicated.extend_from_slice(&bytes);
        assert!(decode(&duplicated).is_err());
    }

    #[test]
    fn rejects_unknown_tag() {
        let mut bytes = encode(&signed_cert("manufacturer-ca-g1", 3)).unwrap();
        bytes[0] = 0x55;
        let err = decode(&bytes).unwrap_err();
        assert!(matches!(err, CodecError::Malformed { offset: 0, .. }), "{err}");
    }

    #[test]
    fn rejects_overlong_reference_on_encode() {
        let mut cert = signed_cert("manufacturer-ca-g1", 3);
        cert.holder_ref = "x".repeat(33);
        assert_eq!(
            encode(&cert),
            Err(CodecError::RefTooLong { which: "holder", len: 33 })
        );
    }

    #[test]
    fn rejects_unsupported_algorithm_on_encode() {
        let mut cert = signed_cert("manufacturer-ca-g1", 3);
        cert.public_key.algorithm = 0x09;
        assert_eq!(encode(&cert), Err(CodecError::UnsupportedAlgorithm(0x09)));
    }

    #[test]
    fn decoder_never_panics_on_random_input() {
        use rand_chacha::rand_core::{RngCore, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let len = (rng.next_u32() % 300) as usize;
            let mut buf = vec![0u8; len];
            rng.fill_bytes(&mut buf);
            if let Ok(cert) = decode(&buf) {
                // Anything accepted and re-encodable must reproduce the
                // input byte for byte.
                if let Ok(out) = encode(&cert) {
                    assert_eq!(out, buf);
                }
            }
        }
    }
}
