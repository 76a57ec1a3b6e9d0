use serde::{Deserialize, Serialize};

use crate::authority::SetupBundle;
use crate::crypto::{Ciphertext, Digest, Signature};
use crate::merkle::MerkleProof;
use crate::nizk::{DecryptionProof, Proof};
use crate::params::{ElectionId, PartyId};

/// A board input. The command log is the persistence and replay format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Command {
    Setup {
        bundle: SetupBundle,
        num_options: usize,
    },
    Register {
        party: PartyId,
    },
    Unregister {
        party: PartyId,
    },
    Delegate {
        party: PartyId,
        anon_set: Vec<PartyId>,
        ct_vec: Vec<Ciphertext>,
        proof: Proof,
        token_proof: MerkleProof,
    },
    Undelegate {
        party: PartyId,
        anon_set: Vec<PartyId>,
        ct_vec: Vec<Ciphertext>,
    },
    ElectionSetup {
        party: PartyId,
        eid: ElectionId,
        desc: String,
    },
    ElectionStart {
        party: PartyId,
        eid: ElectionId,
    },
    VotePublic {
        eid: ElectionId,
        party: PartyId,
        option: usize,
        snapshot_proof: MerkleProof,
        power_ct: Ciphertext,
    },
    VotePrivate {
        eid: ElectionId,
        party: PartyId,
        vote_vec: Vec<Ciphertext>,
        proof: Proof,
        snapshot_proof: MerkleProof,
        power_ct: Ciphertext,
    },
    Tally {
        eid: ElectionId,
        percentages: Vec<u32>,
        decryption: DecryptionProof,
    },
    Transfer {
        from: PartyId,
        to: PartyId,
        amount: u64,
    },
    RefreshRoot {
        token_root: Digest,
        root_sig: Signature,
    },
}

impl Command {
    pub fn verb(&self) -> &'static str {
        match self {
            Command::Setup { .. } => "setup",
            Command::Register { .. } => "register",
            Command::Unregister { .. } => "unregister",
            Command::Delegate { .. } => "delegate",
            Command::Undelegate { .. } => "undelegate",
            Command::ElectionSetup { .. } => "election_setup",
            Command::ElectionStart { .. } => "election_start",
            Command::VotePublic { .. } => "vote_public",
            Command::VotePrivate { .. } => "vote_private",
            Command::Tally { .. } => "tally",
            Command::Transfer { .. } => "transfer",
            Command::RefreshRoot { .. } => "refresh_root",
        }
    }

    /// The party the command acts for, if any.
    pub fn actor(&self) -> Option<PartyId> {
        match self {
            Command::Register { party }
            | Command::Unregister { party }
            | Command::Delegate { party, .. }
            | Command::Undelegate { party, .. }
            | Command::ElectionSetup { party, .. }
            | Command::ElectionStart { party, .. }
            | Command::VotePublic { party, .. }
            | Command::VotePrivate { party, .. } => Some(*party),
            Command::Transfer { from, .. } => Some(*from),
            Command::Setup { .. } | Command::Tally { .. } | Command::RefreshRoot { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Public board output. Nothing here names a delegation target or a raw
/// vote count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Setup {
        num_parties: usize,
        num_options: usize,
        token_root: Digest,
    },
    Registered {
        party: PartyId,
        lock: bool,
        active: bool,
        power: Ciphertext,
    },
    Unregistered {
        party: PartyId,
        lock: bool,
        active: bool,
        power: Ciphertext,
    },
    Delegated {
        party: PartyId,
        lock: bool,
        anon_set: Vec<PartyId>,
        powers: Vec<Ciphertext>,
        delegation_id: Digest,
    },
    Undelegated {
        party: PartyId,
        lock: bool,
        anon_set: Vec<PartyId>,
        powers: Vec<Ciphertext>,
    },
    ElectionCreated {
        eid: ElectionId,
        desc: String,
        creator: PartyId,
    },
    ElectionStarted {
        eid: ElectionId,
        snapshot_root: Digest,
    },
    Voted {
        eid: ElectionId,
        party: PartyId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        option: Option<usize>,
    },
    Tallied {
        eid: ElectionId,
        percentages: Vec<u32>,
        no_votes: bool,
    },
    Transferred {
        from: PartyId,
        to: PartyId,
        amount: u64,
    },
    TransferLocked {
        from: PartyId,
        to: PartyId,
        amount: u64,
    },
    RootRefreshed {
        token_root: Digest,
    },
    Rejected {
        command: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        party: Option<PartyId>,
        reason: String,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Setup { .. } => "setup",
            EventKind::Registered { .. } => "registered",
            EventKind::Unregistered { .. } => "unregistered",
            EventKind::Delegated { .. } => "delegated",
            EventKind::Undelegated { .. } => "undelegated",
            EventKind::ElectionCreated { .. } => "election_created",
            EventKind::ElectionStarted { .. } => "election_started",
            EventKind::Voted { .. } => "voted",
            EventKind::Tallied { .. } => "tallied",
            EventKind::Transferred { .. } => "transferred",
            EventKind::TransferLocked { .. } => "transfer_locked",
            EventKind::RootRefreshed { .. } => "root_refreshed",
            EventKind::Rejected { .. } => "rejected",
        }
    }

    pub fn is_rejection(&self) -> bool {
        matches!(self, EventKind::Rejected { .. } | EventKind::TransferLocked { .. })
    }
}
