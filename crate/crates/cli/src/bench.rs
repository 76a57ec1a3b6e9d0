use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use kite_core::board::power_tree;
use kite_core::crypto::{random_nonzero_scalar, Ciphertext, EncKeyPair, Plaintext, Scalar};
use kite_core::encoding::Canonical;
use kite_core::merkle::{token_leaf, MerkleTree};
use kite_core::nizk::{
    prove_decryption, prove_delegation, prove_vote, verify_decryption, verify_delegation,
    verify_vote, DecryptionStatement, DelegationStatement, DelegationWitness, Proof, VoteStatement,
    VoteWitness,
};
use kite_core::params::PartyId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Relation {
    Delegation,
    Vote,
    Decryption,
}

pub struct Report {
    pub prove: Vec<Duration>,
    pub verify: Vec<Duration>,
    pub proof_bytes: usize,
}

fn median(v: &mut [Duration]) -> Duration {
    v.sort();
    v[v.len() / 2]
}

impl Report {
    pub fn line(&mut self, relation: Relation, size: usize) -> String {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        let (p, v) = (median(&mut self.prove), median(&mut self.verify));
        format!(
            "relation={} size={size} iters={} prove_ms_median={:.3} verify_ms_median={:.3} proof_bytes={}",
            format!("{relation:?}").to_lowercase(),
            self.prove.len(),
            ms(p),
            ms(v),
            self.proof_bytes
        )
    }
}

const BOUND: u64 = 1 << 20;

fn pt(m: i64) -> Plaintext {
    Plaintext::new(m, BOUND).expect("bench plaintext in range")
}

/// One proof round; returns (prove time, verify time, proof, verified).
fn timed<P, V>(prove: P, verify: V) -> (Duration, Duration, Proof, bool)
where
    P: FnOnce() -> Proof,
    V: FnOnce(&Proof) -> bool,
{
    let t0 = Instant::now();
    let proof = prove();
    let tp = t0.elapsed();
    let t1 = Instant::now();
    let ok = verify(&proof);
    (tp, t1.elapsed(), proof, ok)
}

fn delegation_round(rng: &mut ChaCha20Rng, size: usize) -> (Duration, Duration, Proof, bool) {
    let kp = EncKeyPair::generate(rng);
    let tokens = rng.gen_range(1..=1000u64);
    let target_pos = rng.gen_range(0..size);
    let r_vec: Vec<Scalar> = (0..size).map(|_| Scalar::random(rng)).collect();
    let ct_vec = r_vec
        .iter()
        .enumerate()
        .map(|(k, r)| kp.pk.encrypt(pt(if k == target_pos { tokens as i64 } else { 0 }), r))
        .collect();
    let leaves = [token_leaf(PartyId(0), tokens), token_leaf(PartyId(1), 1)];
    let tree = MerkleTree::build(&leaves).expect("two leaves");
    let stmt = DelegationStatement {
        pk: kp.pk,
        anon_set: (1..=size as u32).map(PartyId).collect(),
        ct_vec,
        tokens,
        token_root: tree.root(),
        token_proof: tree.prove(0).expect("leaf 0"),
        voter: PartyId(0),
    };
    let wit = DelegationWitness { target_pos, r_vec };
    let mut prng = ChaCha20Rng::from_rng(&mut *rng).expect("seeded");
    timed(
        || prove_delegation(&stmt, &wit, &mut prng).expect("honest witness"),
        |p| verify_delegation(&stmt, p),
    )
}

fn vote_round(rng: &mut ChaCha20Rng, options: usize) -> (Duration, Duration, Proof, bool) {
    let kp = EncKeyPair::generate(rng);
    let powers: Vec<Ciphertext> = (0..16)
        .map(|_| kp.pk.encrypt_random(pt(rng.gen_range(0..1000)), rng).0)
        .collect();
    let delegate = rng.gen_range(0..powers.len());
    let choice = rng.gen_range(0..options);
    let r_vec: Vec<Scalar> = (0..options).map(|_| random_nonzero_scalar(rng)).collect();
    let vote_vec = r_vec
        .iter()
        .enumerate()
        .map(|(j, r)| {
            if j == choice {
                kp.pk.rerandomize(&powers[delegate], r)
            } else {
                kp.pk.encrypt(Plaintext::ZERO, r)
            }
        })
        .collect();
    let tree = power_tree(&powers);
    let stmt = VoteStatement {
        pk: kp.pk,
        power_ct: powers[delegate],
        vote_vec,
        delegate: PartyId(delegate as u32),
        snapshot_root: tree.root(),
        snapshot_proof: tree.prove(delegate).expect("delegate leaf"),
    };
    let wit = VoteWitness { choice, r_vec };
    let mut prng = ChaCha20Rng::from_rng(&mut *rng).expect("seeded");
    timed(
        || prove_vote(&stmt, &wit, &mut prng).expect("honest witness"),
        |p| verify_vote(&stmt, p),
    )
}

fn decryption_round(rng: &mut ChaCha20Rng, options: usize) -> (Duration, Duration, Proof, bool) {
    let kp = EncKeyPair::generate(rng);
    let counts: Vec<u64> = (0..options).map(|_| rng.gen_range(0..10_000)).collect();
    let stmt = DecryptionStatement {
        pk: kp.pk,
        tally_cts: counts
            .iter()
            .map(|c| kp.pk.encrypt_random(pt(*c as i64), rng).0)
            .collect(),
        plain_counts: counts,
    };
    let mut prng = ChaCha20Rng::from_rng(&mut *rng).expect("seeded");
    timed(
        || prove_decryption(&stmt, &kp.sk, &mut prng).expect("honest key"),
        |p| verify_decryption(&stmt, p),
    )
}

pub fn run(relation: Relation, size: usize, iters: usize, seed: u64) -> Result<Report, String> {
    if size == 0 || iters == 0 {
        return Err("size and iters must be positive".into());
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut report = Report {
        prove: Vec::new(),
        verify: Vec::new(),
        proof_bytes: 0,
    };
    for _ in 0..iters {
        let (p, v, proof, ok) = match relation {
            Relation::Delegation => delegation_round(&mut rng, size),
            Relation::Vote => vote_round(&mut rng, size),
            Relation::Decryption => decryption_round(&mut rng, size),
        };
        if !ok {
            return Err("honest proof failed to verify".into());
        }
        report.prove.push(p);
        report.verify.push(v);
        report.proof_bytes = proof.to_canonical_bytes().len();
    }
    Ok(report)
}
