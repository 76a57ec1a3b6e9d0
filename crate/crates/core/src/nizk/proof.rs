use curve25519_dalek::ristretto::RistrettoPoint;
use curve25519_dalek::scalar::Scalar;

use crate::crypto::hash_raw;
use crate::encoding::{Canonical, DecodeError, Reader, Writer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelationTag {
    Delegation,
    Vote,
    Decryption,
}

impl RelationTag {
    pub fn byte(self) -> u8 {
        match self {
            RelationTag::Delegation => 1,
            RelationTag::Vote => 2,
            RelationTag::Decryption => 3,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            1 => Some(RelationTag::Delegation),
            2 => Some(RelationTag::Vote),
            3 => Some(RelationTag::Decryption),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RelationTag::Delegation => "del",
            RelationTag::Vote => "vote",
            RelationTag::Decryption => "dec",
        }
    }
}

/// A Fiat–Shamir-compiled sigma proof.
///
/// Wire format: relation byte, then length-prefixed lists of commitments
/// (group elements), challenges and responses (scalars).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proof {
    pub relation: RelationTag,
    pub commitments: Vec<RistrettoPoint>,
    pub challenges: Vec<Scalar>,
    pub responses: Vec<Scalar>,
}

impl Canonical for Proof {
    fn encode(&self, w: &mut Writer) {
        w.u8(self.relation.byte())
            .points(&self.commitments)
            .scalars(&self.challenges)
            .scalars(&self.responses);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let relation =
            RelationTag::from_byte(r.u8()?).ok_or(DecodeError::Invalid("relation tag"))?;
        Ok(Proof {
            relation,
            commitments: r.points()?,
            challenges: r.scalars()?,
            responses: r.scalars()?,
        })
    }
}

crate::impl_hex_serde!(Proof);

/// `H("fs:" ‖ tag, statement ‖ commitments)` reduced into the scalar field.
///
/// Two counter-suffixed digests are concatenated and reduced as a 512-bit
/// integer so the result is uniform modulo `q`.
pub fn fs_challenge(tag: RelationTag, statement: &[u8], commitments: &[u8]) -> Scalar {
    let label = format!("fs:{}", tag.label());
    let mut data = Vec::with_capacity(statement.len() + commitments.len() + 1);
    data.extend_from_slice(statement);
    data.extend_from_slice(commitments);
    data.push(0);
    let lo = hash_raw(label.as_bytes(), &data);
    *data.last_mut().expect("counter byte") = 1;
    let hi = hash_raw(label.as_bytes(), &data);
    let mut wide = [0u8; 64];
    wide[..32].copy_from_slice(lo.as_bytes());
    wide[32..].copy_from_slice(hi.as_bytes());
    Scalar::from_bytes_mod_order_wide(&wide)
}
