use serde::{Deserialize, Serialize};
use std::fmt;

/// Certificate holder kinds in the currency hierarchy.
///
/// The issuing relation is fixed: the root signs the hardware, operational
/// and financial CAs (and its own successors); the hardware CA signs
/// manufacturer CAs, which sign smartcards; the operational CA signs the
/// central register, timestamp service and minting certificates; the
/// financial CA signs service providers. No other issuer/subject pairs are
/// valid anywhere in the system.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    RootCa,
    HardwareCa,
    ManufacturerCa,
    SmartcardEe,
    OperationalCa,
    CentralRegister,
    TimestampService,
    Minting,
    FinancialCa,
    Fsp,
}

impl Role {
    /// Every role, in wire-code order.
    pub const ALL: [Role; 10] = [
        Role::RootCa,
        Role::HardwareCa,
        Role::ManufacturerCa,
        Role::SmartcardEe,
        Role::OperationalCa,
        Role::CentralRegister,
        Role::TimestampService,
        Role::Minting,
        Role::FinancialCa,
        Role::Fsp,
    ];

    /// The role that signs certificates of this role.
    ///
    /// Root certificates are self-signed, so the root is its own issuer.
    pub fn issuer(self) -> Role {
        match self {
            Role::RootCa => Role::RootCa,
            Role::HardwareCa | Role::OperationalCa | Role::FinancialCa => Role::RootCa,
            Role::ManufacturerCa => Role::HardwareCa,
            Role::SmartcardEe => Role::ManufacturerCa,
            Role::CentralRegister | Role::TimestampService | Role::Minting => Role::OperationalCa,
            Role::Fsp => Role::FinancialCa,
        }
    }

    pub fn can_issue(self, subject: Role) -> bool {
        subject.issuer() == self
    }

    pub fn is_ca(self) -> bool {
        matches!(
            self,
            Role::RootCa
                | Role::HardwareCa
                | Role::ManufacturerCa
                | Role::OperationalCa
                | Role::FinancialCa
        )
    }

    pub fn is_end_entity(self) -> bool {
        !self.is_ca()
    }

    /// One-octet code used by the binary certificate encoding.
    pub fn code(self) -> u8 {
        Role::ALL.iter().position(|r| *r == self).unwrap() as u8
    }

    pub fn from_code(code: u8) -> Option<Role> {
        Role::ALL.get(code as usize).copied()
    }

    /// Stable lowercase name, identical to the serialized form.
    pub fn name(self) -> &'static str {
        match self {
            Role::RootCa => "root-ca",
            Role::HardwareCa => "hardware-ca",
            Role::ManufacturerCa => "manufacturer-ca",
            Role::SmartcardEe => "smartcard-ee",
            Role::OperationalCa => "operational-ca",
            Role::CentralRegister => "central-register",
            Role::TimestampService => "timestamp-service",
            Role::Minting => "minting",
            Role::FinancialCa => "financial-ca",
            Role::Fsp => "fsp",
        }
    }

    pub fn from_name(name: &str) -> Option<Role> {
        Role::ALL.iter().copied().find(|r| r.name() == name)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn issuer_relation_matches_hierarchy() {
        assert_eq!(Role::RootCa.issuer(), Role::RootCa);
        assert_eq!(Role::HardwareCa.issuer(), Role::RootCa);
        assert_eq!(Role::ManufacturerCa.issuer(), Role::HardwareCa);
        assert_eq!(Role::SmartcardEe.issuer(), Role::ManufacturerCa);
        assert_eq!(Role::OperationalCa.issuer(), Role::RootCa);
        assert_eq!(Role::CentralRegister.issuer(), Role::OperationalCa);
        assert_eq!(Role::TimestampService.issuer(), Role::OperationalCa);
        assert_eq!(Role::Minting.issuer(), Role::OperationalCa);
        assert_eq!(Role::FinancialCa.issuer(), Role::RootCa);
        assert_eq!(Role::Fsp.issuer(), Role::FinancialCa);
    }

    #[test]
    fn every_role_reaches_the_root_without_cycles() {
        for role in Role::ALL {
            let mut current = role;
            let mut hops = 0;
            while current != Role::RootCa {
                current = current.issuer();
                hops += 1;
                assert!(hops <= 3, "{role} does not terminate at the root");
            }
        }
    }

    #[test]
    fn can_issue_rejects_everything_else() {
        assert!(Role::HardwareCa.can_issue(Role::ManufacturerCa));
        assert!(!Role::HardwareCa.can_issue(Role::SmartcardEe));
        assert!(!Role::OperationalCa.can_issue(Role::Fsp));
        assert!(!Role::ManufacturerCa.can_issue(Role::ManufacturerCa));
        assert!(Role::RootCa.can_issue(Role::RootCa));
    }

    #[test]
    fn codes_round_trip() {
        for role in Role::ALL {
            assert_eq!(Role::from_code(role.code()), Some(role));
            assert_eq!(Role::from_name(role.name()), Some(role));
        }
        assert_eq!(Role::from_code(0x0a), None);
    }
}
