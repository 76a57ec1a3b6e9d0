//! Best-effort provers for false statements.
//!
//! These run the honest prover wherever a clause actually holds and fall back
//! to guessing the challenge elsewhere. A sound verifier must reject every
//! proof they produce for a false statement. Used by the soundness tests.

use curve25519_dalek::scalar::Scalar;
use rand::{CryptoRng, RngCore};

use super::decryption::DecryptionStatement;
use super::delegation::DelegationStatement;
use super::proof::{Proof, RelationTag};
use super::sigma::{prove_composite, AndClause, OrClause};
use super::vote::VoteStatement;
use crate::crypto::EncSecretKey;

/// `entries[k] = (plaintext, randomness)` actually used for `ct_vec[k]`.
pub fn forge_delegation<R: RngCore + CryptoRng>(
    stmt: &DelegationStatement,
    entries: &[(i64, Scalar)],
    rng: &mut R,
) -> Proof {
    let t = stmt.tokens as i64;
    let ors: Vec<OrClause> = stmt
        .or_branches()
        .into_iter()
        .zip(entries)
        .map(|(branches, (m, r))| OrClause {
            branches,
            witness: match *m {
                0 => Some((0, *r)),
                m if m == t => Some((1, *r)),
                _ => None,
            },
        })
        .collect();
    let total: i64 = entries.iter().map(|(m, _)| m).sum();
    let sum = AndClause {
        statement: stmt.sum_statement(),
        witness: (total == t).then(|| entries.iter().map(|(_, r)| r).sum()),
    };
    prove_composite(RelationTag::Delegation, &stmt.to_bytes(), &ors, &[sum], rng)
}

#[derive(Debug, Clone, Copy)]
pub enum VoteEntry {
    /// Fresh encryption of 0 under this randomness.
    Zero(Scalar),
    /// Rerandomization of the power ciphertext under this randomness.
    Power(Scalar),
    /// Anything else.
    Other,
}

pub fn forge_vote<R: RngCore + CryptoRng>(
    stmt: &VoteStatement,
    entries: &[VoteEntry],
    rng: &mut R,
) -> Proof {
    let ors: Vec<OrClause> = stmt
        .or_branches()
        .into_iter()
        .zip(entries)
        .map(|(branches, e)| OrClause {
            branches,
            witness: match e {
                VoteEntry::Zero(r) => Some((0, *r)),
                VoteEntry::Power(r) => Some((1, *r)),
                VoteEntry::Other => None,
            },
        })
        .collect();
    let powers = entries.iter().filter(|e| matches!(e, VoteEntry::Power(_))).count();
    let known = entries.iter().all(|e| !matches!(e, VoteEntry::Other));
    let sum_witness = (known && powers == 1).then(|| {
        entries
            .iter()
            .map(|e| match e {
                VoteEntry::Zero(r) | VoteEntry::Power(r) => *r,
                VoteEntry::Other => Scalar::ZERO,
            })
            .sum()
    });
    let sum = AndClause {
        statement: stmt.sum_statement(),
        witness: sum_witness,
    };
    prove_composite(RelationTag::Vote, &stmt.to_bytes(), &ors, &[sum], rng)
}

/// Runs the honest decryption prover with the real key regardless of whether
/// the claimed counts are right.
pub fn forge_decryption<R: RngCore + CryptoRng>(
    stmt: &DecryptionStatement,
    sk: &EncSecretKey,
    rng: &mut R,
) -> Proof {
    let ands: Vec<AndClause> = stmt
        .clauses()
        .into_iter()
        .map(|statement| AndClause {
            statement,
            witness: Some(*sk.scalar()),
        })
        .collect();
    prove_composite(RelationTag::Decryption, &stmt.to_bytes(), &[], &ands, rng)
}
