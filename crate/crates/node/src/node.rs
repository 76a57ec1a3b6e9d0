use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use kite_core::authority::{Authority, AuthorityError, Transfer};
use kite_core::board::{power_tree, Board, BoardError, Command, Event};
use kite_core::client::{voter_setup, ClientError};
use kite_core::merkle::{leaf_digest, power_leaf};
use kite_core::params::{ElectionId, PartyId};

use crate::api::{
    request_for, Applied, AssistDelegateBody, AssistDelegation, AssistVoteBody, ApiRequest,
    ConfigView, ErrorBody, SetupBody, SnapshotView, StateView, TallyBody,
};

pub const LOG_FILE: &str = "commands.jsonl";
pub const AUTHORITY_FILE: &str = "authority.json";

/// Per-party token bound accepted by the in-process authority.
pub const TOKEN_BOUND: u64 = 1 << 32;

#[derive(Debug, Clone)]
pub struct NodeConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    pub group: String,
    pub anonymity_sizes: Vec<usize>,
    pub num_options: usize,
    /// Run the authority inside the node.
    pub authority: bool,
    /// Seeds the node's randomness; fresh entropy when absent.
    pub seed: Option<u64>,
}

impl NodeConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        NodeConfig {
            listen: ([127, 0, 0, 1], 8080).into(),
            data_dir: data_dir.into(),
            group: "ristretto255".into(),
            anonymity_sizes: kite_core::client::DEFAULT_ANONYMITY_SIZES.to_vec(),
            num_options: 3,
            authority: true,
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<(), NodeError> {
        if self.group != "ristretto255" {
            return Err(NodeError::Config(format!("unsupported group {}", self.group)));
        }
        if self.anonymity_sizes.is_empty() || self.anonymity_sizes.contains(&0) {
            return Err(NodeError::Config("anonymity sizes must be nonempty and positive".into()));
        }
        if self.num_options < 2 {
            return Err(NodeError::Config("at least two options".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum NodeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("data directory: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt command log at line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },
    #[error("corrupt authority file: {0}")]
    CorruptAuthority(String),
    #[error("address {0} is already in use")]
    PortInUse(SocketAddr),
}

/// A typed API failure; `status` is the HTTP status code.
#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: u16,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: u16, error: &str, reason: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error: error.to_owned(),
                reason: reason.into(),
                event: None,
            },
        }
    }

    pub fn malformed(reason: impl Into<String>) -> Self {
        ApiError::new(400, "Malformed", reason)
    }

    fn not_found(reason: impl Into<String>) -> Self {
        ApiError::new(404, "NotFound", reason)
    }

    fn internal(reason: impl Into<String>) -> Self {
        ApiError::new(500, "Internal", reason)
    }

    fn board(e: &BoardError, event: Option<Event>) -> Self {
        let status = if e.is_guard() { 409 } else { 400 };
        let mut err = ApiError::new(status, &variant_name(e), e.to_string());
        err.body.event = event.map(Box::new);
        err
    }

    fn client(e: &ClientError) -> Self {
        let status = match e {
            ClientError::AlreadyDelegated(_)
            | ClientError::NothingToUndelegate(_)
            | ClientError::NotDelegate(_) => 409,
            _ => 400,
        };
        ApiError::new(status, &variant_name(e), e.to_string())
    }

    fn authority(e: &AuthorityError) -> Self {
        ApiError::new(400, &variant_name(e), e.to_string())
    }
}

/// `UnknownParty(PartyId(3))` → `UnknownParty`.
fn variant_name<E: std::fmt::Debug>(e: &E) -> String {
    let s = format!("{e:?}");
    s.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_owned()
}

/// Board plus write-ahead command log plus optional in-process authority.
/// Callers serialize access; every mutation goes through `submit`.
pub struct Node {
    config: NodeConfig,
    board: Board,
    authority: Option<Authority>,
    log: File,
    rng: ChaCha20Rng,
}

fn read_log(path: &Path) -> Result<Vec<Command>, NodeError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut commands = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let cmd = serde_json::from_str(&line).map_err(|e| NodeError::CorruptLog {
            line: i + 1,
            reason: e.to_string(),
        })?;
        commands.push(cmd);
    }
    Ok(commands)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(tmp, path)
}

impl Node {
    /// Replays the command log in `data_dir`, creating it if needed.
    pub fn open(config: NodeConfig) -> Result<Node, NodeError> {
        config.validate()?;
        fs::create_dir_all(&config.data_dir)?;
        let log_path = config.data_dir.join(LOG_FILE);
        let board = Board::replay(read_log(&log_path)?);
        let authority = if config.authority {
            match fs::read(config.data_dir.join(AUTHORITY_FILE)) {
                Ok(bytes) => Some(
                    serde_json::from_slice::<Authority>(&bytes)
                        .map_err(|e| NodeError::CorruptAuthority(e.to_string()))?,
                ),
                Err(e) if e.kind() == io::ErrorKind::NotFound => None,
                Err(e) => return Err(e.into()),
            }
        } else {
            None
        };
        // Keys left over from a setup that never reached the log.
        let authority = authority.filter(|a| {
            board.state().is_none_or(|s| s.pk_enc == a.pk_enc())
        });
        let log = OpenOptions::new().create(true).append(true).open(&log_path)?;
        let rng = match config.seed {
            Some(s) => ChaCha20Rng::seed_from_u64(s),
            None => ChaCha20Rng::from_entropy(),
        };
        let mut node = Node {
            config,
            board,
            authority,
            log,
            rng,
        };
        node.recover_root();
        Ok(node)
    }

    /// A crash between a transfer and its root refresh leaves the root
    /// stale; the authority re-signs the ledger it observes.
    fn recover_root(&mut self) {
        let stale = self.board.state().filter(|s| s.root_stale).map(|s| s.balances.clone());
        if let (Some(balances), true) = (stale, self.authority.is_some()) {
            let a = self.authority.as_mut().expect("checked");
            if let Ok((token_root, root_sig)) = a.observe_ledger(&balances) {
                if self.save_authority().is_ok() {
                    let _ = self.submit(Command::RefreshRoot { token_root, root_sig });
                }
            }
        }
    }

    pub fn config(&self) -> &NodeConfig {
        &self.config
    }

    pub fn board(&self) -> &Board {
        &self.board
    }

    pub fn authority(&self) -> Option<&Authority> {
        self.authority.as_ref()
    }

    fn save_authority(&self) -> io::Result<()> {
        if let Some(a) = &self.authority {
            let bytes = serde_json::to_vec_pretty(a).expect("authority serializes");
            write_atomic(&self.config.data_dir.join(AUTHORITY_FILE), &bytes)?;
        }
        Ok(())
    }

    fn append(&mut self, cmd: &Command) -> io::Result<()> {
        let mut line = serde_json::to_vec(cmd).expect("commands serialize");
        line.push(b'\n');
        self.log.write_all(&line)?;
        self.log.sync_data()
    }

    /// Logs `cmd` durably, then applies it.
    pub fn submit(&mut self, cmd: Command) -> Result<Event, ApiError> {
        self.append(&cmd).map_err(|e| ApiError::internal(e.to_string()))?;
        self.board
            .apply(cmd)
            .map_err(|e| ApiError::board(&e, self.board.events().last().cloned()))
    }

    fn applied(&self, events: Vec<Event>) -> Applied {
        Applied {
            events,
            state_hash: self.board.state_hash(),
        }
    }

    pub fn apply(&mut self, cmd: Command) -> Result<Applied, ApiError> {
        let event = self.submit(cmd)?;
        Ok(self.applied(vec![event]))
    }

    pub fn setup(&mut self, body: SetupBody) -> Result<Applied, ApiError> {
        let num_options = body.num_options.unwrap_or(self.config.num_options);
        let bundle = match (body.tokens, body.bundle) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(ApiError::malformed("give exactly one of tokens or bundle"))
            }
            (None, Some(bundle)) => {
                if self.board.state().is_none() {
                    self.authority = None;
                }
                bundle
            }
            (Some(tokens), None) => {
                if !self.config.authority {
                    return Err(ApiError::new(409, "NoAuthority", "node runs without an authority"));
                }
                let (bundle, authority) = Authority::setup(&tokens, TOKEN_BOUND, &mut self.rng)
                    .map_err(|e| ApiError::authority(&e))?;
                // A second setup is still logged and rejected by the board,
                // but must not replace the keys on disk.
                if self.board.state().is_none() {
                    self.authority = Some(authority);
                    self.save_authority().map_err(|e| ApiError::internal(e.to_string()))?;
                }
                bundle
            }
        };
        self.apply(Command::Setup { bundle, num_options })
    }

    pub fn tally(&mut self, eid: ElectionId, body: Option<TallyBody>) -> Result<Applied, ApiError> {
        let (percentages, decryption) = match body {
            Some(b) => (b.percentages, b.decryption),
            None => {
                let st = self.board.require_state().map_err(|e| ApiError::board(&e, None))?;
                let tallies = match st.election(eid) {
                    Some(e) => e.tallies.clone(),
                    None => return self.apply(Command::Tally {
                        eid,
                        percentages: Vec::new(),
                        decryption: empty_decryption(),
                    }),
                };
                let a = self
                    .authority
                    .as_ref()
                    .ok_or_else(|| ApiError::new(409, "NoAuthority", "node runs without an authority"))?;
                let (res, decryption) = a
                    .tally_decrypt(eid, &tallies, &mut self.rng)
                    .map_err(|e| ApiError::authority(&e))?;
                (res.percentages, decryption)
            }
        };
        self.apply(Command::Tally { eid, percentages, decryption })
    }

    /// Applies the transfer and, with an in-process authority, refreshes the
    /// token root right away.
    pub fn transfer(&mut self, from: PartyId, to: PartyId, amount: u64) -> Result<Applied, ApiError> {
        let event = self.submit(Command::Transfer { from, to, amount })?;
        let mut events = vec![event];
        let stale = self.board.state().is_some_and(|s| s.root_stale);
        if let (true, Some(a)) = (stale, self.authority.as_mut()) {
            let (token_root, root_sig) = a
                .refresh_root(&[Transfer { from, to, amount }])
                .map_err(|e| ApiError::authority(&e))?;
            self.save_authority().map_err(|e| ApiError::internal(e.to_string()))?;
            events.push(self.submit(Command::RefreshRoot { token_root, root_sig })?);
        }
        Ok(self.applied(events))
    }

    pub fn state_view(&self) -> StateView {
        StateView {
            initialized: self.board.state().is_some(),
            state_hash: self.board.state_hash(),
            next_seq: self.board.events().len() as u64,
            state: self.board.state().cloned(),
        }
    }

    pub fn config_view(&self) -> ConfigView {
        ConfigView {
            group: self.config.group.clone(),
            anonymity_sizes: self.config.anonymity_sizes.clone(),
            num_options: self
                .board
                .state()
                .map_or(self.config.num_options, |s| s.num_options()),
            authority: self.authority.is_some(),
        }
    }

    pub fn election(&self, eid: ElectionId) -> Result<kite_core::board::ElectionState, ApiError> {
        self.board
            .state()
            .and_then(|s| s.election(eid))
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown election {eid}")))
    }

    pub fn snapshot(&self, eid: ElectionId) -> Result<SnapshotView, ApiError> {
        let e = self.election(eid)?;
        let root = e
            .snapshot_root
            .ok_or_else(|| ApiError::new(409, "ElectionNotStarted", format!("election {eid} has not started")))?;
        let leaves = e
            .snapshot_powers
            .iter()
            .enumerate()
            .map(|(i, ct)| leaf_digest(&power_leaf(PartyId(i as u32), ct)))
            .collect();
        debug_assert_eq!(power_tree(&e.snapshot_powers).root(), root);
        Ok(SnapshotView {
            eid,
            snapshot_root: root,
            leaves,
            powers: e.snapshot_powers,
        })
    }

    pub fn events_from(&self, seq: u64) -> Vec<Event> {
        self.board.events_from(seq).to_vec()
    }

    /// Builds a delegation for `party` without submitting it.
    pub fn assist_delegate(&mut self, body: AssistDelegateBody) -> Result<AssistDelegation, ApiError> {
        let st = self.board.require_state().map_err(|e| ApiError::board(&e, None))?;
        let voter = voter_setup(&st.balances, body.party).map_err(|e| ApiError::client(&e))?;
        let pool = st.active_delegates();
        let size = body.size.unwrap_or_else(|| {
            self.config
                .anonymity_sizes
                .iter()
                .copied()
                .filter(|s| *s <= pool.len())
                .max()
                .unwrap_or(pool.len())
        });
        let bundle = voter
            .build_delegation(&st.pk_enc, &st.balances, body.target, size, &pool, None, &mut self.rng)
            .map_err(|e| ApiError::client(&e))?;
        Ok(AssistDelegation {
            request: request_for(&bundle.command),
            stored: bundle.stored,
        })
    }

    /// Builds a public or private vote for `party` without submitting it.
    pub fn assist_vote(&mut self, body: AssistVoteBody) -> Result<ApiRequest, ApiError> {
        let st = self.board.require_state().map_err(|e| ApiError::board(&e, None))?;
        let e = st
            .election(body.eid)
            .ok_or_else(|| ApiError::board(&BoardError::UnknownElection(body.eid), None))?;
        if e.snapshot_root.is_none() {
            return Err(ApiError::board(&BoardError::ElectionNotStarted(body.eid), None));
        }
        let mut voter = voter_setup(&st.balances, body.party).map_err(|e| ApiError::client(&e))?;
        voter.confirm_registered(st.active.get(body.party.index()).copied().unwrap_or(false));
        let n = st.num_options();
        let cmd = if body.private {
            voter.cast_private_vote(body.eid, body.option, n, &st.pk_enc, &e.snapshot_powers, &mut self.rng)
        } else {
            voter.cast_public_vote(body.eid, body.option, n, &e.snapshot_powers)
        }
        .map_err(|e| ApiError::client(&e))?;
        Ok(request_for(&cmd))
    }
}

/// Placeholder proof for a tally of an unknown election, which the board
/// rejects before looking at it.
fn empty_decryption() -> kite_core::nizk::DecryptionProof {
    kite_core::nizk::DecryptionProof {
        counts: Vec::new(),
        proof: kite_core::nizk::Proof {
            relation: kite_core::nizk::RelationTag::Decryption,
            commitments: Vec::new(),
            challenges: Vec::new(),
            responses: Vec::new(),
        },
    }
}
