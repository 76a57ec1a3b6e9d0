//! The bulletin-board state machine with its lock-aware token ledger and
//! append-only event log.
//!
//! Every input is a [`Command`]. Accepted commands produce the matching
//! [`EventKind`]; rejected ones leave [`BoardState`] untouched and produce a
//! `Rejected` (or `TransferLocked`) event. Commands and events are both kept
//! so the state can be rebuilt by replay.

mod types;

use std::collections::{BTreeMap, BTreeSet};

use curve25519_dalek::scalar::Scalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use types::{Command, Event, EventKind};

use crate::authority::{root_message, token_root, SetupBundle};
use crate::crypto::{
    hash, sig_verify, Ciphertext, Digest, DomainTag, EncPublicKey, Plaintext, SigVerifyingKey,
    Signature,
};
use crate::encoding::{Canonical, Writer};
use crate::merkle::{mt_verify, power_leaf, MerkleProof, MerkleTree};
use crate::nizk::{
    verify_decryption, verify_delegation, verify_vote, DecryptionProof, DecryptionStatement,
    DelegationStatement, Proof, VoteStatement,
};
use crate::params::{ElectionId, PartyId, SystemParams};
use crate::tally::basis_points;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoardError {
    #[error("board is not initialized")]
    NotInitialized,
    #[error("board is already initialized")]
    AlreadyInitialized,
    #[error("invalid setup: {0}")]
    InvalidSetup(String),
    #[error("signature does not verify under the authority key")]
    BadSignature,
    #[error("token root does not match the ledger")]
    RootMismatch,
    #[error("unknown party {0}")]
    UnknownParty(PartyId),
    #[error("party {0} is already locked or active")]
    AlreadyLocked(PartyId),
    #[error("party {0} is not an active delegate")]
    NotActive(PartyId),
    #[error("tokens of party {0} are locked")]
    LockedTokens(PartyId),
    #[error("party {0} holds no tokens")]
    ZeroPower(PartyId),
    #[error("token root is stale until the authority refreshes it")]
    StaleRoot,
    #[error("proof does not verify")]
    InvalidProof,
    #[error("party {0} has no outstanding delegation")]
    NotLocked(PartyId),
    #[error("no stored delegation of party {0} matches")]
    NoSuchDelegation(PartyId),
    #[error("election {0} already exists")]
    DuplicateElection(ElectionId),
    #[error("unknown election {0}")]
    UnknownElection(ElectionId),
    #[error("party {party} did not create election {eid}")]
    NotCreator { eid: ElectionId, party: PartyId },
    #[error("election {0} has not started")]
    ElectionNotStarted(ElectionId),
    #[error("election {eid} is in phase {phase:?}")]
    WrongPhase { eid: ElectionId, phase: Phase },
    #[error("party {party} already voted in election {eid}")]
    AlreadyVoted { eid: ElectionId, party: PartyId },
    #[error("power ciphertext is not in the election snapshot")]
    BadSnapshotProof,
    #[error("option {0} is not on the ballot")]
    BadOption(usize),
    #[error("decryption proof does not verify")]
    InvalidDecryptionProof,
    #[error("percentages do not follow from the decrypted counts")]
    BadPercentages,
    #[error("tokens of party {0} are locked")]
    TokensLocked(PartyId),
    #[error("party {party} holds {balance} tokens, cannot send {amount}")]
    InsufficientBalance { party: PartyId, balance: u64, amount: u64 },
    #[error("malformed input: {0}")]
    Malformed(&'static str),
}

impl BoardError {
    /// Guard violations depend on board state; the rest are bad inputs.
    pub fn is_guard(&self) -> bool {
        use BoardError::*;
        matches!(
            self,
            NotInitialized
                | AlreadyInitialized
                | AlreadyLocked(_)
                | NotActive(_)
                | LockedTokens(_)
                | ZeroPower(_)
                | StaleRoot
                | NotLocked(_)
                | NoSuchDelegation(_)
                | DuplicateElection(_)
                | UnknownElection(_)
                | NotCreator { .. }
                | ElectionNotStarted(_)
                | WrongPhase { .. }
                | AlreadyVoted { .. }
                | TokensLocked(_)
                | InsufficientBalance { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Created,
    Started,
    Tallied,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElectionState {
    pub eid: ElectionId,
    pub desc: String,
    pub creator: PartyId,
    pub phase: Phase,
    pub tallies: Vec<Ciphertext>,
    pub voted: BTreeSet<PartyId>,
    pub snapshot_root: Option<Digest>,
    pub snapshot_powers: Vec<Ciphertext>,
    pub result: Option<Vec<u32>>,
    pub no_votes: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoardState {
    pub params: SystemParams,
    pub pk_enc: EncPublicKey,
    pub vk_sig: SigVerifyingKey,
    pub balances: Vec<u64>,
    pub locks: Vec<bool>,
    pub active: Vec<bool>,
    pub token_root: Digest,
    pub root_sig: Signature,
    pub root_stale: bool,
    pub delegate_powers: Vec<Ciphertext>,
    /// `Digest::ZERO` means no outstanding delegation.
    pub delegation_ids: Vec<Digest>,
    pub elections: BTreeMap<ElectionId, ElectionState>,
}

/// Identifier stored at delegation time and checked at undelegation.
pub fn delegation_id(anon_set: &[PartyId], ct_vec: &[Ciphertext]) -> Digest {
    let mut w = Writer::new();
    anon_set.to_vec().encode(&mut w);
    ct_vec.to_vec().encode(&mut w);
    hash(DomainTag::DelegationId, w.as_slice())
}

/// Merkle tree over `(index, power)` leaves.
pub fn power_tree(powers: &[Ciphertext]) -> MerkleTree {
    let leaves: Vec<_> = powers
        .iter()
        .enumerate()
        .map(|(i, ct)| power_leaf(PartyId(i as u32), ct))
        .collect();
    MerkleTree::build(&leaves).expect("at least one party")
}

fn deterministic_encryption(pk: &EncPublicKey, m: i64, max_total: u64) -> Ciphertext {
    let m = Plaintext::new(m, max_total).expect("balance within total supply");
    pk.encrypt(m, &Scalar::ZERO)
}

impl BoardState {
    pub fn num_parties(&self) -> usize {
        self.balances.len()
    }

    pub fn num_options(&self) -> usize {
        self.params.num_options
    }

    pub fn active_delegates(&self) -> Vec<PartyId> {
        (0..self.num_parties())
            .filter(|&i| self.active[i])
            .map(|i| PartyId(i as u32))
            .collect()
    }

    pub fn election(&self, eid: ElectionId) -> Option<&ElectionState> {
        self.elections.get(&eid)
    }

    /// Canonical digest of the whole state.
    pub fn digest(&self) -> Digest {
        let bytes = serde_json::to_vec(self).expect("state serializes");
        hash(DomainTag::StateDigest, &bytes)
    }

    /// No party is unlocked and active; an outstanding delegation implies
    /// locked and inactive.
    pub fn check_invariants(&self) -> Result<(), String> {
        for i in 0..self.num_parties() {
            if !self.locks[i] && self.active[i] {
                return Err(format!("party {i} unlocked and active"));
            }
            if !self.delegation_ids[i].is_zero() && (!self.locks[i] || self.active[i]) {
                return Err(format!("party {i} delegating but not locked-inactive"));
            }
        }
        Ok(())
    }

    fn party(&self, p: PartyId) -> Result<usize, BoardError> {
        let i = p.index();
        if i < self.num_parties() {
            Ok(i)
        } else {
            Err(BoardError::UnknownParty(p))
        }
    }

    fn zero_ct(&self) -> Ciphertext {
        Ciphertext::zero()
    }

    fn encrypt_det(&self, m: i64) -> Ciphertext {
        deterministic_encryption(&self.pk_enc, m, self.params.max_total)
    }

    fn register(&mut self, p: PartyId) -> Result<EventKind, BoardError> {
        let i = self.party(p)?;
        if self.active[i] || self.locks[i] {
            return Err(BoardError::AlreadyLocked(p));
        }
        self.locks[i] = true;
        self.active[i] = true;
        // Overwrites whatever was there, exactly like the contract.
        self.delegate_powers[i] = self.encrypt_det(self.balances[i] as i64);
        Ok(EventKind::Registered {
            party: p,
            lock: true,
            active: true,
            power: self.delegate_powers[i],
        })
    }

    fn unregister(&mut self, p: PartyId) -> Result<EventKind, BoardError> {
        let i = self.party(p)?;
        if !self.active[i] || !self.locks[i] {
            return Err(BoardError::NotActive(p));
        }
        self.locks[i] = false;
        self.active[i] = false;
        self.delegate_powers[i] =
            self.delegate_powers[i] + self.encrypt_det(-(self.balances[i] as i64));
        Ok(EventKind::Unregistered {
            party: p,
            lock: false,
            active: false,
            power: self.delegate_powers[i],
        })
    }

    fn delegate(
        &mut self,
        p: PartyId,
        anon_set: &[PartyId],
        ct_vec: &[Ciphertext],
        proof: &Proof,
        token_proof: &MerkleProof,
    ) -> Result<EventKind, BoardError> {
        let i = self.party(p)?;
        if self.locks[i] {
            return Err(BoardError::LockedTokens(p));
        }
        if self.root_stale {
            return Err(BoardError::StaleRoot);
        }
        if anon_set.is_empty() || anon_set.len() != ct_vec.len() {
            return Err(BoardError::Malformed("anonymity set and vector lengths differ"));
        }
        let positions = anon_set
            .iter()
            .map(|q| self.party(*q))
            .collect::<Result<Vec<_>, _>>()?;
        if self.balances[i] == 0 {
            return Err(BoardError::ZeroPower(p));
        }
        let stmt = DelegationStatement {
            pk: self.pk_enc,
            anon_set: anon_set.to_vec(),
            ct_vec: ct_vec.to_vec(),
            tokens: self.balances[i],
            token_root: self.token_root,
            token_proof: token_proof.clone(),
            voter: p,
        };
        if !verify_delegation(&stmt, proof) {
            return Err(BoardError::InvalidProof);
        }
        self.locks[i] = true;
        for (&k, ct) in positions.iter().zip(ct_vec) {
            self.delegate_powers[k] = self.delegate_powers[k] + *ct;
        }
        let id = delegation_id(anon_set, ct_vec);
        self.delegation_ids[i] = id;
        Ok(EventKind::Delegated {
            party: p,
            lock: true,
            anon_set: anon_set.to_vec(),
            powers: positions.iter().map(|&k| self.delegate_powers[k]).collect(),
            delegation_id: id,
        })
    }

    fn undelegate(
        &mut self,
        p: PartyId,
        anon_set: &[PartyId],
        ct_vec: &[Ciphertext],
    ) -> Result<EventKind, BoardError> {
        let i = self.party(p)?;
        if !self.locks[i] {
            return Err(BoardError::NotLocked(p));
        }
        let id = &self.delegation_ids[i];
        if id.is_zero() || *id != delegation_id(anon_set, ct_vec) {
            return Err(BoardError::NoSuchDelegation(p));
        }
        // The identifier pins the set, so every index is known and in range.
        let positions: Vec<usize> = anon_set.iter().map(|q| q.index()).collect();
        self.locks[i] = false;
        for (&k, ct) in positions.iter().zip(ct_vec) {
            self.delegate_powers[k] = self.delegate_powers[k] - *ct;
        }
        self.delegation_ids[i] = Digest::ZERO;
        Ok(EventKind::Undelegated {
            party: p,
            lock: false,
            anon_set: anon_set.to_vec(),
            powers: positions.iter().map(|&k| self.delegate_powers[k]).collect(),
        })
    }

    fn election_setup(
        &mut self,
        p: PartyId,
        eid: ElectionId,
        desc: &str,
    ) -> Result<EventKind, BoardError> {
        self.party(p)?;
        if self.elections.contains_key(&eid) {
            return Err(BoardError::DuplicateElection(eid));
        }
        let tallies = vec![self.zero_ct(); self.num_options()];
        self.elections.insert(
            eid,
            ElectionState {
                eid,
                desc: desc.to_owned(),
                creator: p,
                phase: Phase::Created,
                tallies,
                voted: BTreeSet::new(),
                snapshot_root: None,
                snapshot_powers: Vec::new(),
                result: None,
                no_votes: false,
            },
        );
        Ok(EventKind::ElectionCreated {
            eid,
            desc: desc.to_owned(),
            creator: p,
        })
    }

    fn election_start(&mut self, p: PartyId, eid: ElectionId) -> Result<EventKind, BoardError> {
        let powers = self.delegate_powers.clone();
        let e = self
            .elections
            .get_mut(&eid)
            .ok_or(BoardError::UnknownElection(eid))?;
        if e.creator != p {
            return Err(BoardError::NotCreator { eid, party: p });
        }
        if e.phase != Phase::Created {
            return Err(BoardError::WrongPhase { eid, phase: e.phase });
        }
        let root = power_tree(&powers).root();
        e.snapshot_root = Some(root);
        e.snapshot_powers = powers;
        e.phase = Phase::Started;
        Ok(EventKind::ElectionStarted {
            eid,
            snapshot_root: root,
        })
    }

    /// Shared guards of both vote paths. Returns the snapshot root.
    fn vote_guards(
        &self,
        eid: ElectionId,
        p: PartyId,
        snapshot_proof: &MerkleProof,
        power_ct: &Ciphertext,
    ) -> Result<Digest, BoardError> {
        let e = self.elections.get(&eid).ok_or(BoardError::UnknownElection(eid))?;
        let root = match (e.phase, e.snapshot_root) {
            (Phase::Started, Some(root)) => root,
            (Phase::Created, _) => return Err(BoardError::ElectionNotStarted(eid)),
            (phase, _) => return Err(BoardError::WrongPhase { eid, phase }),
        };
        let i = self.party(p)?;
        if !self.active[i] {
            return Err(BoardError::NotActive(p));
        }
        if e.voted.contains(&p) {
            return Err(BoardError::AlreadyVoted { eid, party: p });
        }
        if !mt_verify(&power_leaf(p, power_ct), i, snapshot_proof, &root) {
            return Err(BoardError::BadSnapshotProof);
        }
        Ok(root)
    }

    fn vote_public(
        &mut self,
        eid: ElectionId,
        p: PartyId,
        option: usize,
        snapshot_proof: &MerkleProof,
        power_ct: &Ciphertext,
        skip_add: bool,
    ) -> Result<EventKind, BoardError> {
        self.vote_guards(eid, p, snapshot_proof, power_ct)?;
        if option >= self.num_options() {
            return Err(BoardError::BadOption(option));
        }
        let e = self.elections.get_mut(&eid).expect("guarded");
        e.voted.insert(p);
        if !skip_add {
            e.tallies[option] = e.tallies[option] + *power_ct;
        }
        Ok(EventKind::Voted {
            eid,
            party: p,
            option: Some(option),
        })
    }

    fn vote_private(
        &mut self,
        eid: ElectionId,
        p: PartyId,
        vote_vec: &[Ciphertext],
        proof: &Proof,
        snapshot_proof: &MerkleProof,
        power_ct: &Ciphertext,
    ) -> Result<EventKind, BoardError> {
        let root = self.vote_guards(eid, p, snapshot_proof, power_ct)?;
        if vote_vec.len() != self.num_options() {
            return Err(BoardError::Malformed("vote vector length differs from option count"));
        }
        let stmt = VoteStatement {
            pk: self.pk_enc,
            power_ct: *power_ct,
            vote_vec: vote_vec.to_vec(),
            delegate: p,
            snapshot_root: root,
            snapshot_proof: snapshot_proof.clone(),
        };
        if !verify_vote(&stmt, proof) {
            return Err(BoardError::InvalidProof);
        }
        let e = self.elections.get_mut(&eid).expect("guarded");
        e.voted.insert(p);
        for (t, v) in e.tallies.iter_mut().zip(vote_vec) {
            *t = *t + *v;
        }
        Ok(EventKind::Voted {
            eid,
            party: p,
            option: None,
        })
    }

    fn tally(
        &mut self,
        eid: ElectionId,
        percentages: &[u32],
        dec: &DecryptionProof,
    ) -> Result<EventKind, BoardError> {
        let n = self.num_options();
        let pk = self.pk_enc;
        let e = self
            .elections
            .get_mut(&eid)
            .ok_or(BoardError::UnknownElection(eid))?;
        if e.phase != Phase::Started {
            return Err(BoardError::WrongPhase { eid, phase: e.phase });
        }
        if percentages.len() != n || dec.counts.len() != n {
            return Err(BoardError::Malformed("result length differs from option count"));
        }
        let stmt = DecryptionStatement {
            pk,
            tally_cts: e.tallies.clone(),
            plain_counts: dec.counts.clone(),
        };
        if !verify_decryption(&stmt, &dec.proof) {
            return Err(BoardError::InvalidDecryptionProof);
        }
        if basis_points(&dec.counts) != percentages {
            return Err(BoardError::BadPercentages);
        }
        let no_votes = dec.counts.iter().all(|&c| c == 0);
        e.result = Some(percentages.to_vec());
        e.no_votes = no_votes;
        e.phase = Phase::Tallied;
        Ok(EventKind::Tallied {
            eid,
            percentages: percentages.to_vec(),
            no_votes,
        })
    }

    fn transfer(&mut self, from: PartyId, to: PartyId, amount: u64) -> Result<EventKind, BoardError> {
        let f = self.party(from)?;
        let t = self.party(to)?;
        if self.locks[f] {
            return Err(BoardError::TokensLocked(from));
        }
        if self.locks[t] {
            return Err(BoardError::TokensLocked(to));
        }
        if self.balances[f] < amount {
            return Err(BoardError::InsufficientBalance {
                party: from,
                balance: self.balances[f],
                amount,
            });
        }
        self.balances[f] -= amount;
        self.balances[t] += amount;
        self.root_stale = token_root(&self.balances) != self.token_root;
        Ok(EventKind::Transferred { from, to, amount })
    }

    fn refresh_root(&mut self, root: Digest, sig: &Signature) -> Result<EventKind, BoardError> {
        if !sig_verify(&self.vk_sig, root_message(&root).as_bytes(), sig) {
            return Err(BoardError::BadSignature);
        }
        if token_root(&self.balances) != root {
            return Err(BoardError::RootMismatch);
        }
        self.token_root = root;
        self.root_sig = *sig;
        self.root_stale = false;
        Ok(EventKind::RootRefreshed { token_root: root })
    }
}

fn initial_state(bundle: &SetupBundle, num_options: usize) -> Result<BoardState, BoardError> {
    if bundle.token_list.is_empty() || bundle.token_list.len() > u32::MAX as usize {
        return Err(BoardError::InvalidSetup("token list size".into()));
    }
    let total = bundle
        .token_list
        .iter()
        .try_fold(0u64, |acc, t| acc.checked_add(*t))
        .filter(|t| *t <= i64::MAX as u64)
        .ok_or_else(|| BoardError::InvalidSetup("token supply overflows".into()))?;
    let params = SystemParams::new(total.max(1), num_options).map_err(BoardError::InvalidSetup)?;
    if !sig_verify(&bundle.vk_sig, root_message(&bundle.token_root).as_bytes(), &bundle.root_sig) {
        return Err(BoardError::BadSignature);
    }
    if token_root(&bundle.token_list) != bundle.token_root {
        return Err(BoardError::RootMismatch);
    }
    let n = bundle.token_list.len();
    Ok(BoardState {
        params,
        pk_enc: bundle.pk_enc,
        vk_sig: bundle.vk_sig,
        balances: bundle.token_list.clone(),
        locks: vec![false; n],
        active: vec![false; n],
        token_root: bundle.token_root,
        root_sig: bundle.root_sig,
        root_stale: false,
        delegate_powers: vec![Ciphertext::zero(); n],
        delegation_ids: vec![Digest::ZERO; n],
        elections: BTreeMap::new(),
    })
}

/// Deliberate defects for fault-injection tests of the differential runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Accept public votes without adding them to the tally.
    SkipPublicVoteAdd,
}

#[derive(Debug, Clone, Default)]
pub struct Board {
    state: Option<BoardState>,
    events: Vec<Event>,
    commands: Vec<Command>,
    fault: Option<Fault>,
}

impl Board {
    pub fn new() -> Self {
        Board::default()
    }

    pub fn with_fault(fault: Fault) -> Self {
        Board {
            fault: Some(fault),
            ..Board::default()
        }
    }

    /// Rebuilds a board from its command log.
    pub fn replay<I: IntoIterator<Item = Command>>(commands: I) -> Board {
        let mut board = Board::new();
        for cmd in commands {
            let _ = board.apply(cmd);
        }
        board
    }

    pub fn state(&self) -> Option<&BoardState> {
        self.state.as_ref()
    }

    pub fn require_state(&self) -> Result<&BoardState, BoardError> {
        self.state.as_ref().ok_or(BoardError::NotInitialized)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn events_from(&self, seq: u64) -> &[Event] {
        let start = (seq as usize).min(self.events.len());
        &self.events[start..]
    }

    pub fn commands(&self) -> &[Command] {
        &self.commands
    }

    /// Digest of the state; an uninitialized board hashes `null`.
    pub fn state_hash(&self) -> Digest {
        match &self.state {
            Some(s) => s.digest(),
            None => hash(DomainTag::StateDigest, b"null"),
        }
    }

    /// Applies one command, logging it and its outcome.
    pub fn apply(&mut self, cmd: Command) -> Result<Event, BoardError> {
        let outcome = self.execute(&cmd);
        let kind = match &outcome {
            Ok(kind) => kind.clone(),
            Err(BoardError::TokensLocked(_)) => match &cmd {
                Command::Transfer { from, to, amount } => EventKind::TransferLocked {
                    from: *from,
                    to: *to,
                    amount: *amount,
                },
                _ => unreachable!("only transfers report locked tokens"),
            },
            Err(e) => EventKind::Rejected {
                command: cmd.verb().to_owned(),
                party: cmd.actor(),
                reason: e.to_string(),
            },
        };
        let event = Event {
            seq: self.events.len() as u64,
            kind,
        };
        self.events.push(event.clone());
        self.commands.push(cmd);
        outcome.map(|_| event)
    }

    fn execute(&mut self, cmd: &Command) -> Result<EventKind, BoardError> {
        if let Command::Setup { bundle, num_options } = cmd {
            if self.state.is_some() {
                return Err(BoardError::AlreadyInitialized);
            }
            let st = initial_state(bundle, *num_options)?;
            let kind = EventKind::Setup {
                num_parties: st.num_parties(),
                num_options: st.num_options(),
                token_root: st.token_root,
            };
            self.state = Some(st);
            return Ok(kind);
        }
        let skip_add = self.fault == Some(Fault::SkipPublicVoteAdd);
        let st = self.state.as_mut().ok_or(BoardError::NotInitialized)?;
        match cmd {
            Command::Setup { .. } => unreachable!(),
            Command::Register { party } => st.register(*party),
            Command::Unregister { party } => st.unregister(*party),
            Command::Delegate {
                party,
                anon_set,
                ct_vec,
                proof,
                token_proof,
            } => st.delegate(*party, anon_set, ct_vec, proof, token_proof),
            Command::Undelegate {
                party,
                anon_set,
                ct_vec,
            } => st.undelegate(*party, anon_set, ct_vec),
            Command::ElectionSetup { party, eid, desc } => st.election_setup(*party, *eid, desc),
            Command::ElectionStart { party, eid } => st.election_start(*party, *eid),
            Command::VotePublic {
                eid,
                party,
                option,
                snapshot_proof,
                power_ct,
            } => st.vote_public(*eid, *party, *option, snapshot_proof, power_ct, skip_add),
            Command::VotePrivate {
                eid,
                party,
                vote_vec,
                proof,
                snapshot_proof,
                power_ct,
            } => st.vote_private(*eid, *party, vote_vec, proof, snapshot_proof, power_ct),
            Command::Tally {
                eid,
                percentages,
                decryption,
            } => st.tally(*eid, percentages, decryption),
            Command::Transfer { from, to, amount } => st.transfer(*from, *to, *amount),
            Command::RefreshRoot {
                token_root,
                root_sig,
            } => st.refresh_root(*token_root, root_sig),
        }
    }
}
