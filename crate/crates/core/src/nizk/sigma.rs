//! Chaum–Pedersen equality-of-discrete-log sub-protocols, their two-branch
//! disjunction, and a composite Fiat–Shamir prover/verifier that runs many of
//! them under one challenge.

use curve25519_dalek::ristretto::RistrettoPoint;
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::VartimeMultiscalarMul;
use rand::{CryptoRng, RngCore};

use super::proof::{fs_challenge, Proof, RelationTag};
use crate::encoding::Writer;

/// `targets[i] = w · bases[i]` for both `i`, with `w` the witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DleqStatement {
    pub bases: [RistrettoPoint; 2],
    pub targets: [RistrettoPoint; 2],
}

/// One (commitment, challenge, response) transcript of a [`DleqStatement`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchTranscript {
    pub commitments: [RistrettoPoint; 2],
    pub challenge: Scalar,
    pub response: Scalar,
}

impl DleqStatement {
    pub fn new(bases: [RistrettoPoint; 2], targets: [RistrettoPoint; 2]) -> Self {
        DleqStatement { bases, targets }
    }

    /// Honest-verifier check: `z·B_i = A_i + e·X_i`.
    pub fn check(&self, t: &BranchTranscript) -> bool {
        (0..2).all(|i| {
            RistrettoPoint::vartime_multiscalar_mul(
                [t.response, -t.challenge],
                [self.bases[i], self.targets[i]],
            ) == t.commitments[i]
        })
    }

    fn commit(&self, nonce: &Scalar) -> [RistrettoPoint; 2] {
        [self.bases[0] * nonce, self.bases[1] * nonce]
    }

    pub fn holds_for(&self, witness: &Scalar) -> bool {
        self.bases[0] * witness == self.targets[0] && self.bases[1] * witness == self.targets[1]
    }
}

/// Simulator: an accepting transcript for `challenge` built without a witness.
pub fn simulate_or_branch<R: RngCore + CryptoRng>(
    stmt: &DleqStatement,
    challenge: Scalar,
    rng: &mut R,
) -> BranchTranscript {
    let response = Scalar::random(rng);
    let commitments = [0, 1].map(|i| {
        RistrettoPoint::vartime_multiscalar_mul(
            [response, -challenge],
            [stmt.bases[i], stmt.targets[i]],
        )
    });
    BranchTranscript {
        commitments,
        challenge,
        response,
    }
}

/// A disjunction "branch 0 holds OR branch 1 holds".
#[derive(Debug, Clone)]
pub(crate) struct OrClause {
    pub branches: [DleqStatement; 2],
    /// `(true branch, witness)`; `None` makes the prover guess the challenge.
    pub witness: Option<(usize, Scalar)>,
}

#[derive(Debug, Clone)]
pub(crate) struct AndClause {
    pub statement: DleqStatement,
    pub witness: Option<Scalar>,
}

#[allow(clippy::large_enum_variant)]
enum OrState {
    Real {
        real: usize,
        nonce: Scalar,
        witness: Scalar,
        sim: BranchTranscript,
    },
    Guessed {
        sims: [BranchTranscript; 2],
    },
}

/// Proof layout, in order:
///
/// * commitments: 4 per or-clause (branch 0 then branch 1), 2 per and-clause
/// * challenges: 2 per or-clause (they must sum to the common challenge)
/// * responses: 2 per or-clause, 1 per and-clause
///
/// The common challenge is `fs_challenge(tag, statement, commitments)`.
pub(crate) fn prove_composite<R: RngCore + CryptoRng>(
    tag: RelationTag,
    statement_bytes: &[u8],
    ors: &[OrClause],
    ands: &[AndClause],
    rng: &mut R,
) -> Proof {
    let guess = Scalar::random(rng);
    let mut commitments = Vec::with_capacity(4 * ors.len() + 2 * ands.len());

    let or_states: Vec<OrState> = ors
        .iter()
        .map(|clause| match clause.witness {
            Some((real, witness)) => {
                let nonce = Scalar::random(rng);
                let sim = simulate_or_branch(&clause.branches[1 - real], Scalar::random(rng), rng);
                let mut pair = [[RistrettoPoint::default(); 2]; 2];
                pair[real] = clause.branches[real].commit(&nonce);
                pair[1 - real] = sim.commitments;
                commitments.extend(pair.into_iter().flatten());
                OrState::Real {
                    real,
                    nonce,
                    witness,
                    sim,
                }
            }
            None => {
                let e0 = Scalar::random(rng);
                let sims = [
                    simulate_or_branch(&clause.branches[0], e0, rng),
                    simulate_or_branch(&clause.branches[1], guess - e0, rng),
                ];
                commitments.extend(sims.iter().flat_map(|s| s.commitments));
                OrState::Guessed { sims }
            }
        })
        .collect();

    #[allow(clippy::result_large_err)]
    let and_states: Vec<Result<(Scalar, Scalar), BranchTranscript>> = ands
        .iter()
        .map(|clause| match clause.witness {
            Some(w) => {
                let nonce = Scalar::random(rng);
                commitments.extend(clause.statement.commit(&nonce));
                Ok((nonce, w))
            }
            None => {
                let sim = simulate_or_branch(&clause.statement, guess, rng);
                commitments.extend(sim.commitments);
                Err(sim)
            }
        })
        .collect();

    let challenge = fs_challenge(tag, statement_bytes, &commitment_bytes(&commitments));

    let mut challenges = Vec::with_capacity(2 * ors.len());
    let mut responses = Vec::with_capacity(2 * ors.len() + ands.len());
    for state in or_states {
        match state {
            OrState::Real {
                real,
                nonce,
                witness,
                sim,
            } => {
                let e_real = challenge - sim.challenge;
                let z_real = nonce + e_real * witness;
                let mut es = [Scalar::ZERO; 2];
                let mut zs = [Scalar::ZERO; 2];
                es[real] = e_real;
                zs[real] = z_real;
                es[1 - real] = sim.challenge;
                zs[1 - real] = sim.response;
                challenges.extend(es);
                responses.extend(zs);
            }
            OrState::Guessed { sims } => {
                // Keep the split consistent with the real challenge; branch 1
                // then fails its check unless the guess was right.
                challenges.extend([sims[0].challenge, challenge - sims[0].challenge]);
                responses.extend([sims[0].response, sims[1].response]);
            }
        }
    }
    for state in and_states {
        responses.push(match state {
            Ok((nonce, w)) => nonce + challenge * w,
            Err(sim) => sim.response,
        });
    }

    Proof {
        relation: tag,
        commitments,
        challenges,
        responses,
    }
}

pub(crate) fn verify_composite(
    tag: RelationTag,
    statement_bytes: &[u8],
    ors: &[[DleqStatement; 2]],
    ands: &[DleqStatement],
    proof: &Proof,
) -> bool {
    if proof.relation != tag
        || proof.commitments.len() != 4 * ors.len() + 2 * ands.len()
        || proof.challenges.len() != 2 * ors.len()
        || proof.responses.len() != 2 * ors.len() + ands.len()
    {
        return false;
    }
    let challenge = fs_challenge(tag, statement_bytes, &commitment_bytes(&proof.commitments));

    for (k, branches) in ors.iter().enumerate() {
        let e = &proof.challenges[2 * k..2 * k + 2];
        if e[0] + e[1] != challenge {
            return false;
        }
        for (b, stmt) in branches.iter().enumerate() {
            let at = 4 * k + 2 * b;
            let t = BranchTranscript {
                commitments: [proof.commitments[at], proof.commitments[at + 1]],
                challenge: e[b],
                response: proof.responses[2 * k + b],
            };
            if !stmt.check(&t) {
                return false;
            }
        }
    }
    let c_base = 4 * ors.len();
    let z_base = 2 * ors.len();
    ands.iter().enumerate().all(|(k, stmt)| {
        stmt.check(&BranchTranscript {
            commitments: [proof.commitments[c_base + 2 * k], proof.commitments[c_base + 2 * k + 1]],
            challenge,
            response: proof.responses[z_base + k],
        })
    })
}

fn commitment_bytes(commitments: &[RistrettoPoint]) -> Vec<u8> {
    let mut w = Writer::new();
    w.points(commitments);
    w.finish()
}
