//! Delegation-vector validity.
//!
//! Public: the authority key, the anonymity set, the ciphertext vector, the
//! voter's token count with its Merkle proof against the token root.
//! Secret: the target position and the encryption randomness.
//!
//! Each entry is shown to encrypt `0` or `t`, and the homomorphic sum is shown
//! to encrypt exactly `t`. For `t ≥ 1` that is the same as "one entry encrypts
//! `t`, the rest encrypt 0". The Merkle part is checked in the clear.

use std::collections::BTreeSet;

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT as G;
use curve25519_dalek::scalar::Scalar;
use rand::{CryptoRng, RngCore};

use super::proof::{Proof, RelationTag};
use super::sigma::{prove_composite, verify_composite, AndClause, DleqStatement, OrClause};
use super::NizkError;
use crate::crypto::{Ciphertext, Digest, EncPublicKey, Plaintext};
use crate::encoding::{Canonical, Writer};
use crate::merkle::{mt_verify, token_leaf, MerkleProof};
use crate::params::PartyId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelegationStatement {
    pub pk: EncPublicKey,
    pub anon_set: Vec<PartyId>,
    pub ct_vec: Vec<Ciphertext>,
    pub tokens: u64,
    pub token_root: Digest,
    pub token_proof: MerkleProof,
    pub voter: PartyId,
}

#[derive(Debug, Clone)]
pub struct DelegationWitness {
    pub target_pos: usize,
    pub r_vec: Vec<Scalar>,
}

impl DelegationStatement {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.pk.encode(&mut w);
        self.anon_set.encode(&mut w);
        self.ct_vec.encode(&mut w);
        w.u64(self.tokens);
        self.token_root.encode(&mut w);
        w.bytes(&self.token_proof.to_canonical_bytes());
        w.u32(self.voter.0);
        w.finish()
    }

    fn well_formed(&self) -> Result<(), NizkError> {
        if self.ct_vec.is_empty() || self.ct_vec.len() != self.anon_set.len() {
            return Err(NizkError::InvalidStatement("anonymity set and vector lengths differ"));
        }
        let distinct: BTreeSet<_> = self.anon_set.iter().collect();
        if distinct.len() != self.anon_set.len() {
            return Err(NizkError::InvalidStatement("anonymity set has duplicates"));
        }
        if self.tokens == 0 {
            return Err(NizkError::InvalidStatement("zero voting power"));
        }
        Ok(())
    }

    fn tokens_point(&self) -> curve25519_dalek::ristretto::RistrettoPoint {
        G * Scalar::from(self.tokens)
    }

    pub(crate) fn or_branches(&self) -> Vec<[DleqStatement; 2]> {
        let pk = self.pk.point();
        let t = self.tokens_point();
        self.ct_vec
            .iter()
            .map(|ct| {
                [
                    DleqStatement::new([G, pk], [ct.c1, ct.c2]),
                    DleqStatement::new([G, pk], [ct.c1, ct.c2 - t]),
                ]
            })
            .collect()
    }

    pub(crate) fn sum_statement(&self) -> DleqStatement {
        let sum = Ciphertext::sum(&self.ct_vec);
        DleqStatement::new([G, self.pk.point()], [sum.c1, sum.c2 - self.tokens_point()])
    }
}

pub fn prove_delegation<R: RngCore + CryptoRng>(
    stmt: &DelegationStatement,
    wit: &DelegationWitness,
    rng: &mut R,
) -> Result<Proof, NizkError> {
    stmt.well_formed()?;
    let n = stmt.ct_vec.len();
    if wit.target_pos >= n || wit.r_vec.len() != n {
        return Err(NizkError::WitnessMismatch);
    }
    let t = i64::try_from(stmt.tokens).map_err(|_| NizkError::WitnessMismatch)?;
    for (k, (ct, r)) in stmt.ct_vec.iter().zip(&wit.r_vec).enumerate() {
        let m = if k == wit.target_pos { t } else { 0 };
        let m = Plaintext::new(m, stmt.tokens).expect("within bound");
        if stmt.pk.encrypt(m, r) != *ct {
            return Err(NizkError::WitnessMismatch);
        }
    }

    let ors: Vec<OrClause> = stmt
        .or_branches()
        .into_iter()
        .zip(&wit.r_vec)
        .enumerate()
        .map(|(k, (branches, r))| OrClause {
            branches,
            witness: Some((usize::from(k == wit.target_pos), *r)),
        })
        .collect();
    let sum = AndClause {
        statement: stmt.sum_statement(),
        witness: Some(wit.r_vec.iter().sum()),
    };
    Ok(prove_composite(
        RelationTag::Delegation,
        &stmt.to_bytes(),
        &ors,
        &[sum],
        rng,
    ))
}

pub fn verify_delegation(stmt: &DelegationStatement, proof: &Proof) -> bool {
    if stmt.well_formed().is_err() {
        return false;
    }
    let leaf = token_leaf(stmt.voter, stmt.tokens);
    if !mt_verify(&leaf, stmt.voter.index(), &stmt.token_proof, &stmt.token_root) {
        return false;
    }
    verify_composite(
        RelationTag::Delegation,
        &stmt.to_bytes(),
        &stmt.or_branches(),
        &[stmt.sum_statement()],
        proof,
    )
}
