//! Honest voter and delegate logic.
//!
//! Builders return board [`Command`]s; the caller submits them and reports
//! acceptance back so the local state stays in step with the board.

use std::fs;
use std::io;
use std::path::Path;

use curve25519_dalek::scalar::Scalar;
use rand::seq::SliceRandom;
use rand::{CryptoRng, Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::{power_tree, Command};
use crate::crypto::{random_nonzero_scalar, Ciphertext, EncPublicKey, Plaintext};
use crate::encoding::hex_scalars;
use crate::merkle::{token_leaf, MerkleTree};
use crate::nizk::{
    prove_delegation, prove_vote, DelegationStatement, DelegationWitness, NizkError,
    VoteStatement, VoteWitness,
};
use crate::params::{ElectionId, PartyId};

/// Anonymity-set sizes offered by default.
pub const DEFAULT_ANONYMITY_SIZES: [usize; 3] = [5, 10, 20];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClientError {
    #[error("unknown party {0}")]
    UnknownParty(PartyId),
    #[error("pool of {pool} delegates cannot fill an anonymity set of {size}")]
    PoolTooSmall { pool: usize, size: usize },
    #[error("anonymity set size {0} is not supported")]
    UnsupportedSize(usize),
    #[error("delegation target {0} is not an active delegate")]
    TargetNotInPool(PartyId),
    #[error("party {0} holds no tokens")]
    ZeroPower(PartyId),
    #[error("party {0} already has an outstanding delegation")]
    AlreadyDelegated(PartyId),
    #[error("party {0} has nothing to undelegate")]
    NothingToUndelegate(PartyId),
    #[error("party {0} is not a registered delegate")]
    NotDelegate(PartyId),
    #[error("option {0} is not on the ballot")]
    BadOption(usize),
    #[error("snapshot does not cover party {0}")]
    NotInSnapshot(PartyId),
    #[error(transparent)]
    Proof(#[from] NizkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Voter,
    Delegate,
}

/// What the voter must keep to undelegate later. The target position and
/// randomness never leave the client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredDelegation {
    pub anon_set: Vec<PartyId>,
    pub ct_vec: Vec<Ciphertext>,
    #[serde(with = "hex_scalars")]
    pub r_vec: Vec<Scalar>,
    pub target_pos: usize,
}

impl StoredDelegation {
    pub fn target(&self) -> PartyId {
        self.anon_set[self.target_pos]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoterState {
    pub party: PartyId,
    pub tokens: u64,
    pub stored: Option<StoredDelegation>,
    pub role: Role,
}

/// A delegation ready for submission plus the secret part to store once
/// the board accepts it.
#[derive(Debug, Clone)]
pub struct DelegationBundle {
    pub command: Command,
    pub stored: StoredDelegation,
}

pub fn voter_setup(token_list: &[u64], party: PartyId) -> Result<VoterState, ClientError> {
    let tokens = *token_list
        .get(party.index())
        .ok_or(ClientError::UnknownParty(party))?;
    Ok(VoterState {
        party,
        tokens,
        stored: None,
        role: Role::Voter,
    })
}

fn token_tree(balances: &[u64]) -> MerkleTree {
    let leaves: Vec<_> = balances
        .iter()
        .enumerate()
        .map(|(i, t)| token_leaf(PartyId(i as u32), *t))
        .collect();
    MerkleTree::build(&leaves).expect("nonempty token list")
}

impl VoterState {
    pub fn load(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(self).expect("serializes"))?;
        fs::rename(tmp, path)
    }

    /// Samples `size − 1` other delegates uniformly without replacement,
    /// inserts the target at a uniform position and proves the vector.
    ///
    /// `balances` is the current token list the board's root commits to.
    /// `supported` restricts set sizes; `None` allows any.
    #[allow(clippy::too_many_arguments)]
    pub fn build_delegation<R: RngCore + CryptoRng>(
        &self,
        pk: &EncPublicKey,
        balances: &[u64],
        target: PartyId,
        size: usize,
        pool: &[PartyId],
        supported: Option<&[usize]>,
        rng: &mut R,
    ) -> Result<DelegationBundle, ClientError> {
        if self.stored.is_some() {
            return Err(ClientError::AlreadyDelegated(self.party));
        }
        let tokens = *balances
            .get(self.party.index())
            .ok_or(ClientError::UnknownParty(self.party))?;
        if tokens == 0 {
            return Err(ClientError::ZeroPower(self.party));
        }
        if !pool.contains(&target) {
            return Err(ClientError::TargetNotInPool(target));
        }
        let mut others: Vec<PartyId> = pool.iter().copied().filter(|q| *q != target).collect();
        others.sort();
        others.dedup();
        if size == 0 || size > others.len() + 1 {
            return Err(ClientError::PoolTooSmall {
                pool: others.len() + 1,
                size,
            });
        }
        if let Some(sizes) = supported {
            if !sizes.contains(&size) {
                return Err(ClientError::UnsupportedSize(size));
            }
        }
        let mut anon_set: Vec<PartyId> =
            others.choose_multiple(rng, size - 1).copied().collect();
        let target_pos = rng.gen_range(0..size);
        anon_set.insert(target_pos, target);

        let r_vec: Vec<Scalar> = (0..size).map(|_| Scalar::random(rng)).collect();
        let ct_vec: Vec<Ciphertext> = r_vec
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let m = if k == target_pos { tokens as i64 } else { 0 };
                pk.encrypt(Plaintext::new(m, tokens).expect("within bound"), r)
            })
            .collect();
        let tree = token_tree(balances);
        let token_proof = tree.prove(self.party.index()).expect("party in tree");
        let stmt = DelegationStatement {
            pk: *pk,
            anon_set: anon_set.clone(),
            ct_vec: ct_vec.clone(),
            tokens,
            token_root: tree.root(),
            token_proof: token_proof.clone(),
            voter: self.party,
        };
        let proof = prove_delegation(
            &stmt,
            &DelegationWitness {
                target_pos,
                r_vec: r_vec.clone(),
            },
            rng,
        )?;
        Ok(DelegationBundle {
            command: Command::Delegate {
                party: self.party,
                anon_set: anon_set.clone(),
                ct_vec: ct_vec.clone(),
                proof,
                token_proof,
            },
            stored: StoredDelegation {
                anon_set,
                ct_vec,
                r_vec,
                target_pos,
            },
        })
    }

    pub fn confirm_delegation(&mut self, bundle: &DelegationBundle) {
        self.stored = Some(bundle.stored.clone());
    }

    /// Returns the stored pair byte-for-byte as it was posted.
    pub fn build_undelegation(&self) -> Result<Command, ClientError> {
        let stored = self
            .stored
            .as_ref()
            .ok_or(ClientError::NothingToUndelegate(self.party))?;
        Ok(Command::Undelegate {
            party: self.party,
            anon_set: stored.anon_set.clone(),
            ct_vec: stored.ct_vec.clone(),
        })
    }

    pub fn confirm_undelegation(&mut self) {
        self.stored = None;
    }

    pub fn register(&self) -> Command {
        Command::Register { party: self.party }
    }

    pub fn unregister(&self) -> Command {
        Command::Unregister { party: self.party }
    }

    pub fn confirm_registered(&mut self, registered: bool) {
        self.role = if registered { Role::Delegate } else { Role::Voter };
    }

    fn snapshot_opening(
        &self,
        snapshot: &[Ciphertext],
    ) -> Result<(Ciphertext, crate::merkle::MerkleProof), ClientError> {
        let power = *snapshot
            .get(self.party.index())
            .ok_or(ClientError::NotInSnapshot(self.party))?;
        let proof = power_tree(snapshot)
            .prove(self.party.index())
            .expect("party in snapshot");
        Ok((power, proof))
    }

    pub fn cast_public_vote(
        &self,
        eid: ElectionId,
        option: usize,
        num_options: usize,
        snapshot: &[Ciphertext],
    ) -> Result<Command, ClientError> {
        if self.role != Role::Delegate {
            return Err(ClientError::NotDelegate(self.party));
        }
        if option >= num_options {
            return Err(ClientError::BadOption(option));
        }
        let (power_ct, snapshot_proof) = self.snapshot_opening(snapshot)?;
        Ok(Command::VotePublic {
            eid,
            party: self.party,
            option,
            snapshot_proof,
            power_ct,
        })
    }

    /// Rerandomizes the snapshot power into the chosen slot, encrypts 0
    /// elsewhere and proves the vector. All randomness is nonzero.
    #[allow(clippy::too_many_arguments)]
    pub fn cast_private_vote<R: RngCore + CryptoRng>(
        &self,
        eid: ElectionId,
        option: usize,
        num_options: usize,
        pk: &EncPublicKey,
        snapshot: &[Ciphertext],
        rng: &mut R,
    ) -> Result<Command, ClientError> {
        if self.role != Role::Delegate {
            return Err(ClientError::NotDelegate(self.party));
        }
        if option >= num_options {
            return Err(ClientError::BadOption(option));
        }
        let (power_ct, snapshot_proof) = self.snapshot_opening(snapshot)?;
        let r_vec: Vec<Scalar> = (0..num_options).map(|_| random_nonzero_scalar(rng)).collect();
        let vote_vec: Vec<Ciphertext> = r_vec
            .iter()
            .enumerate()
            .map(|(j, r)| {
                if j == option {
                    pk.rerandomize(&power_ct, r)
                } else {
                    pk.encrypt(Plaintext::ZERO, r)
                }
            })
            .collect();
        let stmt = VoteStatement {
            pk: *pk,
            power_ct,
            vote_vec: vote_vec.clone(),
            delegate: self.party,
            snapshot_root: power_tree(snapshot).root(),
            snapshot_proof: snapshot_proof.clone(),
        };
        let proof = prove_vote(&stmt, &VoteWitness { choice: option, r_vec }, rng)?;
        Ok(Command::VotePrivate {
            eid,
            party: self.party,
            vote_vec,
            proof,
            snapshot_proof,
            power_ct,
        })
    }

    pub fn create_election(&self, eid: ElectionId, desc: &str) -> Command {
        Command::ElectionSetup {
            party: self.party,
            eid,
            desc: desc.to_owned(),
        }
    }

    pub fn start_election(&self, eid: ElectionId) -> Command {
        Command::ElectionStart {
            party: self.party,
            eid,
        }
    }
}
