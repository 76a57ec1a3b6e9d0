//! Binary Merkle trees over token lists and encrypted-power lists.
//!
//! Leaves are hashed under the `leaf` tag and inner nodes under `node`. The
//! leaf level is padded with a fixed empty-leaf digest to a power of two, with
//! a minimum width of two, so even a single leaf has a one-sibling proof.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{hash, Ciphertext, Digest, DomainTag};
use crate::encoding::{Canonical, DecodeError, Reader, Writer};
use crate::params::PartyId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MerkleError {
    #[error("cannot build a tree without leaves")]
    EmptyTree,
    #[error("leaf index {index} out of range for {len} leaves")]
    IndexOutOfRange { index: usize, len: usize },
}

pub fn empty_leaf() -> Digest {
    hash(DomainTag::EmptyLeaf, b"")
}

pub fn leaf_digest(data: &[u8]) -> Digest {
    hash(DomainTag::Leaf, data)
}

fn node_digest(left: &Digest, right: &Digest) -> Digest {
    let mut buf = [0u8; 64];
    buf[..32].copy_from_slice(left.as_bytes());
    buf[32..].copy_from_slice(right.as_bytes());
    hash(DomainTag::Node, &buf)
}

/// Leaf bytes for the token tree: `index ‖ tokenCount`.
pub fn token_leaf(party: PartyId, tokens: u64) -> Vec<u8> {
    let mut w = Writer::new();
    w.u32(party.0).u64(tokens);
    w.finish()
}

/// Leaf bytes for the power-snapshot tree: `index ‖ ciphertext`.
pub fn power_leaf(party: PartyId, ct: &Ciphertext) -> Vec<u8> {
    let mut w = Writer::new();
    w.u32(party.0).raw(&ct.to_bytes());
    w.finish()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MerkleTree {
    /// `levels[0]` is the padded leaf level, the last level holds the root.
    levels: Vec<Vec<Digest>>,
    leaf_count: usize,
}

impl MerkleTree {
    pub fn build<L: AsRef<[u8]>>(leaves: &[L]) -> Result<Self, MerkleError> {
        let digests: Vec<Digest> = leaves.iter().map(|l| leaf_digest(l.as_ref())).collect();
        Self::from_leaf_digests(digests)
    }

    pub fn from_leaf_digests(mut digests: Vec<Digest>) -> Result<Self, MerkleError> {
        if digests.is_empty() {
            return Err(MerkleError::EmptyTree);
        }
        let leaf_count = digests.len();
        let width = leaf_count.next_power_of_two().max(2);
        digests.resize(width, empty_leaf());

        let mut levels = vec![digests];
        while levels.last().expect("nonempty").len() > 1 {
            let next = levels
                .last()
                .expect("nonempty")
                .chunks(2)
                .map(|pair| node_digest(&pair[0], &pair[1]))
                .collect();
            levels.push(next);
        }
        Ok(MerkleTree { levels, leaf_count })
    }

    pub fn root(&self) -> Digest {
        self.levels.last().expect("nonempty")[0]
    }

    pub fn height(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn len(&self) -> usize {
        self.leaf_count
    }

    pub fn is_empty(&self) -> bool {
        self.leaf_count == 0
    }

    fn check_index(&self, index: usize) -> Result<(), MerkleError> {
        if index >= self.leaf_count {
            return Err(MerkleError::IndexOutOfRange {
                index,
                len: self.leaf_count,
            });
        }
        Ok(())
    }

    pub fn prove(&self, index: usize) -> Result<MerkleProof, MerkleError> {
        self.check_index(index)?;
        let siblings = self.levels[..self.height()]
            .iter()
            .enumerate()
            .map(|(depth, level)| level[(index >> depth) ^ 1])
            .collect();
        Ok(MerkleProof {
            index: index as u32,
            siblings,
        })
    }

    /// Returns a new tree with leaf `index` replaced; only the path to the
    /// root is rehashed.
    pub fn update(&self, index: usize, new_leaf: &[u8]) -> Result<MerkleTree, MerkleError> {
        self.check_index(index)?;
        let mut next = self.clone();
        next.levels[0][index] = leaf_digest(new_leaf);
        let mut pos = index;
        for depth in 0..next.height() {
            let base = pos & !1;
            let parent = node_digest(&next.levels[depth][base], &next.levels[depth][base + 1]);
            pos >>= 1;
            next.levels[depth + 1][pos] = parent;
        }
        Ok(next)
    }
}

pub fn mt_root<L: AsRef<[u8]>>(leaves: &[L]) -> Result<Digest, MerkleError> {
    Ok(MerkleTree::build(leaves)?.root())
}

/// Inclusion proof; directions come from the bits of `index`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MerkleProof {
    pub index: u32,
    pub siblings: Vec<Digest>,
}

impl Canonical for MerkleProof {
    fn encode(&self, w: &mut Writer) {
        w.u32(self.index);
        for s in &self.siblings {
            w.raw(s.as_bytes());
        }
    }

    /// Consumes the rest of the input: the sibling count is implied by length.
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let index = r.u32()?;
        if !r.remaining().is_multiple_of(32) {
            return Err(DecodeError::Invalid("merkle proof length"));
        }
        let mut siblings = Vec::with_capacity(r.remaining() / 32);
        while r.remaining() > 0 {
            siblings.push(Digest::decode(r)?);
        }
        Ok(MerkleProof { index, siblings })
    }
}

impl Serialize for MerkleProof {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.to_canonical_bytes()))
    }
}

impl<'de> Deserialize<'de> for MerkleProof {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let bytes = hex::decode(s).map_err(serde::de::Error::custom)?;
        MerkleProof::from_canonical_bytes(&bytes).map_err(serde::de::Error::custom)
    }
}

/// True iff folding `leaf` up through the siblings along `index` reproduces `root`.
pub fn mt_verify(leaf: &[u8], index: usize, proof: &MerkleProof, root: &Digest) -> bool {
    if proof.index as usize != index || proof.siblings.is_empty() {
        return false;
    }
    let height = proof.siblings.len();
    if height < usize::BITS as usize && index >> height != 0 {
        return false;
    }
    let mut acc = leaf_digest(leaf);
    for (depth, sibling) in proof.siblings.iter().enumerate() {
        acc = if (index >> depth) & 1 == 0 {
            node_digest(&acc, sibling)
        } else {
            node_digest(sibling, &acc)
        };
    }
    acc == *root
}
