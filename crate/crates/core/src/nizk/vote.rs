//! Private-vote validity: each entry of the vote vector encrypts either 0 or a
//! rerandomization of the delegate's snapshot power, and the vector minus the
//! power ciphertext sums to an encryption of 0.

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT as G;
use curve25519_dalek::scalar::Scalar;
use rand::{CryptoRng, RngCore};

use super::proof::{Proof, RelationTag};
use super::sigma::{prove_composite, verify_composite, AndClause, DleqStatement, OrClause};
use super::NizkError;
use crate::crypto::{Ciphertext, Digest, EncPublicKey, Plaintext};
use crate::encoding::{Canonical, Writer};
use crate::merkle::{mt_verify, power_leaf, MerkleProof};
use crate::params::PartyId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteStatement {
    pub pk: EncPublicKey,
    pub power_ct: Ciphertext,
    pub vote_vec: Vec<Ciphertext>,
    pub delegate: PartyId,
    pub snapshot_root: Digest,
    pub snapshot_proof: MerkleProof,
}

#[derive(Debug, Clone)]
pub struct VoteWitness {
    pub choice: usize,
    pub r_vec: Vec<Scalar>,
}

impl VoteStatement {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.pk.encode(&mut w);
        self.power_ct.encode(&mut w);
        self.vote_vec.encode(&mut w);
        w.u32(self.delegate.0);
        self.snapshot_root.encode(&mut w);
        w.bytes(&self.snapshot_proof.to_canonical_bytes());
        w.finish()
    }

    pub(crate) fn or_branches(&self) -> Vec<[DleqStatement; 2]> {
        let pk = self.pk.point();
        self.vote_vec
            .iter()
            .map(|ct| {
                let shifted = *ct - self.power_ct;
                [
                    DleqStatement::new([G, pk], [ct.c1, ct.c2]),
                    DleqStatement::new([G, pk], [shifted.c1, shifted.c2]),
                ]
            })
            .collect()
    }

    pub(crate) fn sum_statement(&self) -> DleqStatement {
        let rest = Ciphertext::sum(&self.vote_vec) - self.power_ct;
        DleqStatement::new([G, self.pk.point()], [rest.c1, rest.c2])
    }
}

pub fn prove_vote<R: RngCore + CryptoRng>(
    stmt: &VoteStatement,
    wit: &VoteWitness,
    rng: &mut R,
) -> Result<Proof, NizkError> {
    let n = stmt.vote_vec.len();
    if n == 0 {
        return Err(NizkError::InvalidStatement("empty vote vector"));
    }
    if wit.choice >= n || wit.r_vec.len() != n {
        return Err(NizkError::WitnessMismatch);
    }
    for (j, (ct, r)) in stmt.vote_vec.iter().zip(&wit.r_vec).enumerate() {
        let expected = if j == wit.choice {
            stmt.pk.rerandomize(&stmt.power_ct, r)
        } else {
            stmt.pk.encrypt(Plaintext::ZERO, r)
        };
        if expected != *ct {
            return Err(NizkError::WitnessMismatch);
        }
    }
    let ors: Vec<OrClause> = stmt
        .or_branches()
        .into_iter()
        .zip(&wit.r_vec)
        .enumerate()
        .map(|(j, (branches, r))| OrClause {
            branches,
            witness: Some((usize::from(j == wit.choice), *r)),
        })
        .collect();
    let sum = AndClause {
        statement: stmt.sum_statement(),
        witness: Some(wit.r_vec.iter().sum()),
    };
    Ok(prove_composite(RelationTag::Vote, &stmt.to_bytes(), &ors, &[sum], rng))
}

pub fn verify_vote(stmt: &VoteStatement, proof: &Proof) -> bool {
    if stmt.vote_vec.is_empty() {
        return false;
    }
    let leaf = power_leaf(stmt.delegate, &stmt.power_ct);
    if !mt_verify(&leaf, stmt.delegate.index(), &stmt.snapshot_proof, &stmt.snapshot_root) {
        return false;
    }
    verify_composite(
        RelationTag::Vote,
        &stmt.to_bytes(),
        &stmt.or_branches(),
        &[stmt.sum_statement()],
        proof,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{random_nonzero_scalar, EncKeyPair};
    use crate::merkle::MerkleTree;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn fixture(rng: &mut ChaCha20Rng, choice: usize) -> (VoteStatement, VoteWitness) {
        let kp = EncKeyPair::generate(rng);
        let powers: Vec<Ciphertext> = [0i64, 8, 2]
            .iter()
            .map(|m| kp.pk.encrypt_random(Plaintext::new(*m, 10).unwrap(), rng).0)
            .collect();
        let leaves: Vec<_> = powers
            .iter()
            .enumerate()
            .map(|(i, ct)| power_leaf(PartyId(i as u32), ct))
            .collect();
        let tree = MerkleTree::build(&leaves).unwrap();
        let r_vec: Vec<Scalar> = (0..3).map(|_| random_nonzero_scalar(rng)).collect();
        let vote_vec = (0..3)
            .map(|j| {
                if j == choice {
                    kp.pk.rerandomize(&powers[1], &r_vec[j])
                } else {
                    kp.pk.encrypt(Plaintext::ZERO, &r_vec[j])
                }
            })
            .collect();
        (
            VoteStatement {
                pk: kp.pk,
                power_ct: powers[1],
                vote_vec,
                delegate: PartyId(1),
                snapshot_root: tree.root(),
                snapshot_proof: tree.prove(1).unwrap(),
            },
            VoteWitness { choice, r_vec },
        )
    }

    #[test]
    fn completeness_each_choice() {
        let mut rng = ChaCha20Rng::seed_from_u64(20);
        for choice in 0..3 {
            let (stmt, wit) = fixture(&mut rng, choice);
            let proof = prove_vote(&stmt, &wit, &mut rng).unwrap();
            assert!(verify_vote(&stmt, &proof));
        }
    }

    #[test]
    fn different_snapshot_root_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let (stmt, wit) = fixture(&mut rng, 0);
        let proof = prove_vote(&stmt, &wit, &mut rng).unwrap();
        let (other, _) = fixture(&mut rng, 0);
        let mut replay = stmt.clone();
        replay.snapshot_root = other.snapshot_root;
        assert!(!verify_vote(&replay, &proof));
    }

    #[test]
    fn witness_mismatch() {
        let mut rng = ChaCha20Rng::seed_from_u64(22);
        let (stmt, mut wit) = fixture(&mut rng, 0);
        wit.choice = 1;
        assert_eq!(prove_vote(&stmt, &wit, &mut rng), Err(NizkError::WitnessMismatch));
    }
}
