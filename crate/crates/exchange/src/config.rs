use std::fmt;
use std::str::FromStr;

use fde_core::veck::{MaskHash, SessionMode, DEFAULT_CHUNK_BITS};
use fde_core::SECURITY_BITS;

use crate::{ExchangeError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Scheme {
    VeckPlus = 1,
    VeckStar = 2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum RailKind {
    Contract = 1,
    Htlc = 2,
    Lightning = 3,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::VeckPlus, Scheme::VeckStar];
}

impl RailKind {
    pub const ALL: [RailKind; 3] = [RailKind::Contract, RailKind::Htlc, RailKind::Lightning];
}

impl TryFrom<u8> for Scheme {
    type Error = ExchangeError;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Scheme::VeckPlus),
            2 => Ok(Scheme::VeckStar),
            _ => Err(ExchangeError::Wire(format!("unknown scheme {v}"))),
        }
    }
}

impl TryFrom<u8> for RailKind {
    type Error = ExchangeError;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(RailKind::Contract),
            2 => Ok(RailKind::Htlc),
            3 => Ok(RailKind::Lightning),
            _ => Err(ExchangeError::Wire(format!("unknown rail {v}"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::VeckPlus => "plus",
            Scheme::VeckStar => "star",
        })
    }
}

impl fmt::Display for RailKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RailKind::Contract => "contract",
            RailKind::Htlc => "htlc",
            RailKind::Lightning => "ln",
        })
    }
}

impl FromStr for Scheme {
    type Err = ExchangeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plus" | "veck_plus" | "veck+" => Ok(Scheme::VeckPlus),
            "star" | "veck_star" | "veck*" => Ok(Scheme::VeckStar),
            _ => Err(ExchangeError::Config(format!("unknown scheme `{s}`"))),
        }
    }
}

impl FromStr for RailKind {
    type Err = ExchangeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "contract" => Ok(RailKind::Contract),
            "htlc" => Ok(RailKind::Htlc),
            "ln" | "lightning" => Ok(RailKind::Lightning),
            _ => Err(ExchangeError::Config(format!("unknown rail `{s}`"))),
        }
    }
}

/// Parameters both parties must agree on before any data flows.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionConfig {
    pub scheme: Scheme,
    pub rail: RailKind,
    pub beta: f64,
    pub lambda: usize,
    pub chunk_bits: u32,
    pub price: u64,
    /// Blocks the payment stays claimable.
    pub timeout_blocks: u64,
    pub mask: MaskHash,
    /// Positions to buy; `None` buys the whole file.
    pub subset: Option<Vec<u64>>,
    pub mode: SessionMode,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::VeckStar,
            rail: RailKind::Contract,
            beta: 2.0,
            lambda: SECURITY_BITS,
            chunk_bits: DEFAULT_CHUNK_BITS,
            price: 100,
            timeout_blocks: 144,
            mask: MaskHash::Sha256,
            subset: None,
            mode: SessionMode::TestOnly,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda != SECURITY_BITS {
            return Err(ExchangeError::Config(format!("security parameter must be {SECURITY_BITS}")));
        }
        if !(self.beta > 1.0 && self.beta.is_finite()) {
            return Err(ExchangeError::Config(format!("expansion rate {} must exceed 1", self.beta)));
        }
        if self.price == 0 {
            return Err(ExchangeError::Config("price must be positive".into()));
        }
        if self.timeout_blocks == 0 {
            return Err(ExchangeError::Config("timeout must be at least one block".into()));
        }
        if let Some(s) = &self.subset {
            if self.scheme != Scheme::VeckPlus {
                return Err(ExchangeError::Config("subset purchases need the plus scheme".into()));
            }
            if s.is_empty() || s.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ExchangeError::Config("subset must be nonempty and strictly ascending".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let ok = SessionConfig::default();
        ok.validate().unwrap();
        assert!(SessionConfig { lambda: 64, ..ok.clone() }.validate().is_err());
        assert!(SessionConfig { beta: 1.0, ..ok.clone() }.validate().is_err());
        assert!(SessionConfig { price: 0, ..ok.clone() }.validate().is_err());
        assert!(SessionConfig { subset: Some(vec![1, 2]), ..ok.clone() }.validate().is_err());
        let plus = SessionConfig { scheme: Scheme::VeckPlus, ..ok };
        SessionConfig { subset: Some(vec![1, 2]), ..plus.clone() }.validate().unwrap();
        assert!(SessionConfig { subset: Some(vec![2, 2]), ..plus }.validate().is_err());
    }

    #[test]
    fn names() {
        for s in Scheme::ALL {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
            assert_eq!(Scheme::try_from(s as u8).unwrap(), s);
        }
        for r in RailKind::ALL {
            assert_eq!(r.to_string().parse::<RailKind>().unwrap(), r);
            assert_eq!(RailKind::try_from(r as u8).unwrap(), r);
        }
    }
}
