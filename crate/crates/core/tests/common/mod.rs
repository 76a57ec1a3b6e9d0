//! Statement builders shared by the integration tests.
#![allow(dead_code)]

use kite_core::crypto::{Ciphertext, EncKeyPair, Plaintext, Scalar};
use kite_core::merkle::{power_leaf, token_leaf, MerkleTree};
use kite_core::nizk::{
    DecryptionStatement, DelegationStatement, DelegationWitness, VoteStatement, VoteWitness,
};
use kite_core::params::PartyId;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

pub const BIG: u64 = 1 << 40;

pub fn pt(m: i64) -> Plaintext {
    Plaintext::new(m, BIG).unwrap()
}

pub fn token_tree(tokens: &[u64]) -> MerkleTree {
    let leaves: Vec<_> = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| token_leaf(PartyId(i as u32), *t))
        .collect();
    MerkleTree::build(&leaves).unwrap()
}

pub fn power_tree(powers: &[Ciphertext]) -> MerkleTree {
    let leaves: Vec<_> = powers
        .iter()
        .enumerate()
        .map(|(i, c)| power_leaf(PartyId(i as u32), c))
        .collect();
    MerkleTree::build(&leaves).unwrap()
}

pub struct DelegationCase {
    pub kp: EncKeyPair,
    pub stmt: DelegationStatement,
    pub wit: DelegationWitness,
}

/// Honest delegation of party 0 over an anonymity set of `size` with the
/// given plaintexts (for honest cases: `t` at one position, 0 elsewhere).
pub fn delegation_with(
    rng: &mut ChaCha20Rng,
    kp: &EncKeyPair,
    tokens: u64,
    plaintexts: &[i64],
) -> (DelegationStatement, Vec<Scalar>) {
    let n = plaintexts.len();
    let mut list: Vec<u64> = (0..n as u64 + 1).map(|i| 1 + i % 7).collect();
    list[0] = tokens;
    let tree = token_tree(&list);
    let r_vec: Vec<Scalar> = (0..n).map(|_| Scalar::random(rng)).collect();
    let ct_vec = plaintexts
        .iter()
        .zip(&r_vec)
        .map(|(m, r)| kp.pk.encrypt(pt(*m), r))
        .collect();
    (
        DelegationStatement {
            pk: kp.pk,
            anon_set: (1..=n as u32).map(PartyId).collect(),
            ct_vec,
            tokens,
            token_root: tree.root(),
            token_proof: tree.prove(0).unwrap(),
            voter: PartyId(0),
        },
        r_vec,
    )
}

pub fn honest_delegation(rng: &mut ChaCha20Rng, size: usize) -> DelegationCase {
    let kp = EncKeyPair::generate(rng);
    let tokens = rng.gen_range(1..=1000u64);
    let target_pos = rng.gen_range(0..size);
    let plaintexts: Vec<i64> = (0..size)
        .map(|k| if k == target_pos { tokens as i64 } else { 0 })
        .collect();
    let (stmt, r_vec) = delegation_with(rng, &kp, tokens, &plaintexts);
    DelegationCase {
        kp,
        stmt,
        wit: DelegationWitness { target_pos, r_vec },
    }
}

pub struct VoteCase {
    pub kp: EncKeyPair,
    pub powers: Vec<Ciphertext>,
    pub stmt: VoteStatement,
    pub wit: VoteWitness,
}

/// Snapshot of `n` encrypted powers; party `delegate` votes.
pub fn vote_with(
    kp: &EncKeyPair,
    powers: &[Ciphertext],
    delegate: usize,
    vote_vec: Vec<Ciphertext>,
) -> VoteStatement {
    let tree = power_tree(powers);
    VoteStatement {
        pk: kp.pk,
        power_ct: powers[delegate],
        vote_vec,
        delegate: PartyId(delegate as u32),
        snapshot_root: tree.root(),
        snapshot_proof: tree.prove(delegate).unwrap(),
    }
}

pub fn random_powers(rng: &mut ChaCha20Rng, kp: &EncKeyPair, n: usize) -> (Vec<Ciphertext>, Vec<i64>) {
    let values: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=500)).collect();
    let cts = values
        .iter()
        .map(|m| kp.pk.encrypt_random(pt(*m), rng).0)
        .collect();
    (cts, values)
}

pub fn honest_vote(rng: &mut ChaCha20Rng, num_options: usize) -> VoteCase {
    let kp = EncKeyPair::generate(rng);
    let n = rng.gen_range(1..=9);
    let (powers, _) = random_powers(rng, &kp, n);
    let delegate = rng.gen_range(0..n);
    let choice = rng.gen_range(0..num_options);
    let r_vec: Vec<Scalar> = (0..num_options)
        .map(|_| kite_core::crypto::random_nonzero_scalar(rng))
        .collect();
    let vote_vec = r_vec
        .iter()
        .enumerate()
        .map(|(j, r)| {
            if j == choice {
                kp.pk.rerandomize(&powers[delegate], r)
            } else {
                kp.pk.encrypt(pt(0), r)
            }
        })
        .collect();
    let stmt = vote_with(&kp, &powers, delegate, vote_vec);
    VoteCase {
        kp,
        powers,
        stmt,
        wit: VoteWitness { choice, r_vec },
    }
}

pub fn decryption_case(
    rng: &mut ChaCha20Rng,
    kp: &EncKeyPair,
    options: usize,
) -> (DecryptionStatement, Vec<u64>) {
    let counts: Vec<u64> = (0..options).map(|_| rng.gen_range(0..=2000)).collect();
    let tally_cts = counts
        .iter()
        .map(|c| kp.pk.encrypt_random(pt(*c as i64), rng).0)
        .collect();
    (
        DecryptionStatement {
            pk: kp.pk,
            tally_cts,
            plain_counts: counts.clone(),
        },
        counts,
    )
}
