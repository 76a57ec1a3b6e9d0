//! Domain-separated SHA-256.

use std::fmt;
use std::str::FromStr;

use sha2::{Digest as _, Sha256};

use super::CryptoError;
use crate::encoding::{Canonical, DecodeError, Reader, Writer};

/// Registered hash domains. Distinct tags give independent functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DomainTag {
    Leaf,
    Node,
    EmptyLeaf,
    DelegationId,
    FiatShamir,
    RootSignature,
    StateDigest,
}

impl DomainTag {
    pub const ALL: [DomainTag; 7] = [
        DomainTag::Leaf,
        DomainTag::Node,
        DomainTag::EmptyLeaf,
        DomainTag::DelegationId,
        DomainTag::FiatShamir,
        DomainTag::RootSignature,
        DomainTag::StateDigest,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DomainTag::Leaf => "leaf",
            DomainTag::Node => "node",
            DomainTag::EmptyLeaf => "empty",
            DomainTag::DelegationId => "did",
            DomainTag::FiatShamir => "fs",
            DomainTag::RootSignature => "root-sig",
            DomainTag::StateDigest => "state",
        }
    }
}

impl FromStr for DomainTag {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DomainTag::ALL
            .into_iter()
            .find(|t| t.label() == s)
            .ok_or_else(|| CryptoError::UnknownDomainTag(s.to_owned()))
    }
}

/// A 256-bit digest. The all-zero value doubles as "unset".
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0; 32]);

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", hex::encode(&self.0[..8]))
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl Canonical for Digest {
    fn encode(&self, w: &mut Writer) {
        w.raw(&self.0);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let mut out = [0u8; 32];
        out.copy_from_slice(r.take(32)?);
        Ok(Digest(out))
    }
}

crate::impl_hex_serde!(Digest);

/// `SHA-256(len(label) ‖ label ‖ data)`.
pub(crate) fn hash_raw(label: &[u8], data: &[u8]) -> Digest {
    let label_len = u8::try_from(label.len()).expect("domain label longer than 255 bytes");
    let mut h = Sha256::new();
    h.update([label_len]);
    h.update(label);
    h.update(data);
    Digest(h.finalize().into())
}

pub fn hash(tag: DomainTag, data: &[u8]) -> Digest {
    hash_raw(tag.label().as_bytes(), data)
}

/// Hash under a textual tag; unregistered tags are refused.
pub fn hash_labelled(tag: &str, data: &[u8]) -> Result<Digest, CryptoError> {
    Ok(hash(tag.parse()?, data))
}
