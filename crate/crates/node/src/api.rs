//! Wire types of the HTTP API and the mapping between board commands and
//! `(path, body)` requests. Binary fields are lowercase hex throughout.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use kite_core::authority::SetupBundle;
use kite_core::board::{BoardState, Command, Event};
use kite_core::client::StoredDelegation;
use kite_core::crypto::{Ciphertext, Digest, Signature};
use kite_core::merkle::MerkleProof;
use kite_core::nizk::{DecryptionProof, Proof};
use kite_core::params::{ElectionId, PartyId};

/// `POST /setup`. Either `tokens` (the in-process authority generates keys)
/// or a `bundle` produced by an external authority.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SetupBody {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<SetupBundle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_options: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DelegateBody {
    pub anon_set: Vec<PartyId>,
    pub ct_vec: Vec<Ciphertext>,
    pub proof: Proof,
    pub token_proof: MerkleProof,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UndelegateBody {
    pub anon_set: Vec<PartyId>,
    pub ct_vec: Vec<Ciphertext>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElectionBody {
    pub party: PartyId,
    pub eid: ElectionId,
    #[serde(default)]
    pub desc: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartBody {
    pub party: PartyId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum VoteBody {
    Public {
        party: PartyId,
        option: usize,
        snapshot_proof: MerkleProof,
        power_ct: Ciphertext,
    },
    Private {
        party: PartyId,
        vote_vec: Vec<Ciphertext>,
        proof: Proof,
        snapshot_proof: MerkleProof,
        power_ct: Ciphertext,
    },
}

/// `POST /elections/{eid}/tally` from an external authority. An empty body
/// asks the in-process authority instead.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TallyBody {
    pub percentages: Vec<u32>,
    pub decryption: DecryptionProof,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TransferBody {
    pub from: PartyId,
    pub to: PartyId,
    pub amount: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootBody {
    pub token_root: Digest,
    pub root_sig: Signature,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssistDelegateBody {
    pub party: PartyId,
    pub target: PartyId,
    /// Defaults to the largest configured size the pool can fill.
    #[serde(default)]
    pub size: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssistVoteBody {
    pub eid: ElectionId,
    pub party: PartyId,
    pub option: usize,
    #[serde(default)]
    pub private: bool,
}

/// A ready-to-post request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiRequest {
    pub path: String,
    pub body: Value,
}

/// Response of `POST /assist/delegate`. `stored` is the secret half and is
/// meant for the caller's local cache only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssistDelegation {
    pub request: ApiRequest,
    pub stored: StoredDelegation,
}

/// Every mutation answers with the events it appended.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Applied {
    pub events: Vec<Event>,
    pub state_hash: Digest,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<Box<Event>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateView {
    pub initialized: bool,
    pub state_hash: Digest,
    pub next_seq: u64,
    pub state: Option<BoardState>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotView {
    pub eid: ElectionId,
    pub snapshot_root: Digest,
    pub leaves: Vec<Digest>,
    pub powers: Vec<Ciphertext>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigView {
    pub group: String,
    pub anonymity_sizes: Vec<usize>,
    pub num_options: usize,
    pub authority: bool,
}

fn json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("wire types serialize")
}

/// The request that submits `cmd`. Setup, tally and refresh carry the
/// external-authority form.
pub fn request_for(cmd: &Command) -> ApiRequest {
    let (path, body) = match cmd.clone() {
        Command::Setup { bundle, num_options } => (
            "/setup".to_owned(),
            json(&SetupBody {
                tokens: None,
                bundle: Some(bundle),
                num_options: Some(num_options),
            }),
        ),
        Command::Register { party } => (format!("/parties/{}/register", party.0), Value::Null),
        Command::Unregister { party } => (format!("/parties/{}/unregister", party.0), Value::Null),
        Command::Delegate { party, anon_set, ct_vec, proof, token_proof } => (
            format!("/parties/{}/delegate", party.0),
            json(&DelegateBody { anon_set, ct_vec, proof, token_proof }),
        ),
        Command::Undelegate { party, anon_set, ct_vec } => (
            format!("/parties/{}/undelegate", party.0),
            json(&UndelegateBody { anon_set, ct_vec }),
        ),
        Command::ElectionSetup { party, eid, desc } => {
            ("/elections".to_owned(), json(&ElectionBody { party, eid, desc }))
        }
        Command::ElectionStart { party, eid } => {
            (format!("/elections/{}/start", eid.0), json(&StartBody { party }))
        }
        Command::VotePublic { eid, party, option, snapshot_proof, power_ct } => (
            format!("/elections/{}/vote", eid.0),
            json(&VoteBody::Public { party, option, snapshot_proof, power_ct }),
        ),
        Command::VotePrivate { eid, party, vote_vec, proof, snapshot_proof, power_ct } => (
            format!("/elections/{}/vote", eid.0),
            json(&VoteBody::Private { party, vote_vec, proof, snapshot_proof, power_ct }),
        ),
        Command::Tally { eid, percentages, decryption } => (
            format!("/elections/{}/tally", eid.0),
            json(&TallyBody { percentages, decryption }),
        ),
        Command::Transfer { from, to, amount } => {
            ("/transfer".to_owned(), json(&TransferBody { from, to, amount }))
        }
        Command::RefreshRoot { token_root, root_sig } => {
            ("/root".to_owned(), json(&RootBody { token_root, root_sig }))
        }
    };
    ApiRequest { path, body }
}

impl VoteBody {
    pub fn into_command(self, eid: ElectionId) -> Command {
        match self {
            VoteBody::Public { party, option, snapshot_proof, power_ct } => {
                Command::VotePublic { eid, party, option, snapshot_proof, power_ct }
            }
            VoteBody::Private { party, vote_vec, proof, snapshot_proof, power_ct } => {
                Command::VotePrivate { eid, party, vote_vec, proof, snapshot_proof, power_ct }
            }
        }
    }
}
