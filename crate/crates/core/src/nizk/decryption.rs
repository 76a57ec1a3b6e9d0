//! Correct tally decryption: for every option `i`,
//! `log_G(pk) = log_{c1_i}(c2_i − D_i·G)`, all under one challenge.

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT as G;
use curve25519_dalek::scalar::Scalar;
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::proof::{Proof, RelationTag};
use super::sigma::{prove_composite, verify_composite, AndClause, DleqStatement};
use super::NizkError;
use crate::crypto::{Ciphertext, EncPublicKey, EncSecretKey};
use crate::encoding::{Canonical, Writer};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecryptionStatement {
    pub pk: EncPublicKey,
    pub tally_cts: Vec<Ciphertext>,
    pub plain_counts: Vec<u64>,
}

/// Counts plus their decryption proof, as submitted by the authority.
///
/// The board verifies against these counts but only ever publishes the
/// derived percentages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecryptionProof {
    pub counts: Vec<u64>,
    pub proof: Proof,
}

impl DecryptionStatement {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.pk.encode(&mut w);
        self.tally_cts.encode(&mut w);
        w.len(self.plain_counts.len());
        for c in &self.plain_counts {
            w.u64(*c);
        }
        w.finish()
    }

    pub(crate) fn clauses(&self) -> Vec<DleqStatement> {
        self.tally_cts
            .iter()
            .zip(&self.plain_counts)
            .map(|(ct, d)| {
                DleqStatement::new([G, ct.c1], [self.pk.point(), ct.c2 - G * Scalar::from(*d)])
            })
            .collect()
    }

    fn well_formed(&self) -> bool {
        !self.tally_cts.is_empty() && self.tally_cts.len() == self.plain_counts.len()
    }
}

pub fn prove_decryption<R: RngCore + CryptoRng>(
    stmt: &DecryptionStatement,
    sk: &EncSecretKey,
    rng: &mut R,
) -> Result<Proof, NizkError> {
    if !stmt.well_formed() {
        return Err(NizkError::InvalidStatement("tally and count lengths differ"));
    }
    let clauses = stmt.clauses();
    if clauses.iter().any(|c| !c.holds_for(sk.scalar())) {
        return Err(NizkError::WitnessMismatch);
    }
    let ands: Vec<AndClause> = clauses
        .into_iter()
        .map(|statement| AndClause {
            statement,
            witness: Some(*sk.scalar()),
        })
        .collect();
    Ok(prove_composite(RelationTag::Decryption, &stmt.to_bytes(), &[], &ands, rng))
}

pub fn verify_decryption(stmt: &DecryptionStatement, proof: &Proof) -> bool {
    stmt.well_formed()
        && verify_composite(RelationTag::Decryption, &stmt.to_bytes(), &[], &stmt.clauses(), proof)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{EncKeyPair, Plaintext};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn fixture(rng: &mut ChaCha20Rng, kp: &EncKeyPair, counts: &[u64]) -> DecryptionStatement {
        DecryptionStatement {
            pk: kp.pk,
            tally_cts: counts
                .iter()
                .map(|c| kp.pk.encrypt_random(Plaintext::new(*c as i64, 100).unwrap(), rng).0)
                .collect(),
            plain_counts: counts.to_vec(),
        }
    }

    #[test]
    fn honest_off_by_one_and_cross_key() {
        let mut rng = ChaCha20Rng::seed_from_u64(30);
        let a = EncKeyPair::generate(&mut rng);
        let b = EncKeyPair::generate(&mut rng);
        let stmt = fixture(&mut rng, &a, &[8, 2, 0]);
        let proof = prove_decryption(&stmt, &a.sk, &mut rng).unwrap();
        assert!(verify_decryption(&stmt, &proof));
        assert!(proof.challenges.is_empty());

        let mut off = stmt.clone();
        off.plain_counts[0] += 1;
        assert!(!verify_decryption(&off, &proof));
        assert_eq!(prove_decryption(&off, &a.sk, &mut rng), Err(NizkError::WitnessMismatch));

        let mut cross = stmt.clone();
        cross.pk = b.pk;
        assert!(!verify_decryption(&cross, &proof));
        assert_eq!(prove_decryption(&stmt, &b.sk, &mut rng), Err(NizkError::WitnessMismatch));
    }
}
