#![allow(dead_code)]

use std::path::Path;

use kite_core::authority::{Authority, Transfer};
use kite_core::board::{Board, Command, Event};
use kite_core::client::{voter_setup, DelegationBundle, VoterState};
use kite_core::oracle::{TraceCommand, Verb};
use kite_core::params::PartyId;
use kite_node::api::{request_for, Applied, ErrorBody};
use kite_node::{NodeConfig, Server};
use rand_chacha::ChaCha20Rng;
use serde_json::Value;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub struct Running {
    pub base: String,
    pub http: reqwest::Client,
    stop: Option<oneshot::Sender<()>>,
    task: Option<JoinHandle<std::io::Result<()>>>,
}

pub fn config(dir: &Path, authority: bool) -> NodeConfig {
    let mut c = NodeConfig::new(dir);
    c.listen = ([127, 0, 0, 1], 0).into();
    c.authority = authority;
    c.seed = Some(7);
    c
}

pub async fn start(config: NodeConfig) -> Running {
    let server = Server::bind(config).await.expect("node starts");
    let base = format!("http://{}", server.local_addr());
    let (tx, rx) = oneshot::channel();
    let task = tokio::spawn(server.run_until(async {
        let _ = rx.await;
    }));
    Running {
        base,
        http: reqwest::Client::new(),
        stop: Some(tx),
        task: Some(task),
    }
}

impl Running {
    pub async fn stop(mut self) {
        let _ = self.stop.take().unwrap().send(());
        self.task.take().unwrap().await.unwrap().unwrap();
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        let r = self.http.get(format!("{}{path}", self.base)).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        let mut req = self.http.post(format!("{}{path}", self.base));
        if !body.is_null() {
            req = req.json(body);
        }
        let r = req.send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn post_raw(&self, path: &str, body: &'static str) -> (u16, Value) {
        let r = self
            .http
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .await
            .unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn state_hash(&self) -> Value {
        self.get("/state").await.1["state_hash"].clone()
    }

    /// Posts `cmd` and returns the single event it produced.
    pub async fn submit(&self, cmd: &Command) -> (u16, Event) {
        let req = request_for(cmd);
        let (status, body) = self.post(&req.path, &req.body).await;
        let event = if status == 200 {
            let mut a: Applied = serde_json::from_value(body).unwrap();
            assert_eq!(a.events.len(), 1, "{:?}", a.events);
            a.events.remove(0)
        } else {
            let e: ErrorBody = serde_json::from_value(body.clone()).unwrap_or_else(|_| panic!("{body}"));
            *e.event.unwrap_or_else(|| panic!("no event in {body}"))
        };
        (status, event)
    }
}

/// Client side of a trace with an out-of-process authority; mirrors the
/// real stack of the differential runner but emits commands.
pub struct Driver {
    pub board: Board,
    pub authority: Option<Authority>,
    pub voters: Vec<VoterState>,
    pub rng: ChaCha20Rng,
    pub num_options: usize,
    pending: Option<DelegationBundle>,
}

impl Driver {
    pub fn new(seed: u64) -> Self {
        use rand::SeedableRng;
        Driver {
            board: Board::new(),
            authority: None,
            voters: Vec::new(),
            rng: ChaCha20Rng::seed_from_u64(seed),
            num_options: 3,
            pending: None,
        }
    }

    /// The commands for one trace step, given the board as it is now.
    /// `None` means the client refused locally.
    pub fn build(&mut self, c: &TraceCommand) -> Option<Command> {
        let i = c.actor.index();
        if !matches!(c.verb, Verb::Setup { .. }) && i >= self.voters.len() {
            return None;
        }
        let st = self.board.state().cloned();
        Some(match &c.verb {
            Verb::Setup { tokens } => {
                let (bundle, a) = Authority::setup(tokens, 1 << 20, &mut self.rng).ok()?;
                self.voters = (0..tokens.len() as u32)
                    .map(|k| voter_setup(tokens, PartyId(k)).unwrap())
                    .collect();
                self.authority = Some(a);
                Command::Setup { bundle, num_options: self.num_options }
            }
            Verb::Register => self.voters[i].register(),
            Verb::Unregister => self.voters[i].unregister(),
            Verb::Delegate { target, set_size } => {
                let st = st?;
                let b = self.voters[i]
                    .build_delegation(&st.pk_enc, &st.balances, *target, *set_size, &st.active_delegates(), None, &mut self.rng)
                    .ok()?;
                let cmd = b.command.clone();
                self.pending = Some(b);
                cmd
            }
            Verb::Undelegate => self.voters[i].build_undelegation().ok()?,
            Verb::ElectionSetup { eid, desc } => self.voters[i].create_election(*eid, desc),
            Verb::ElectionStart { eid } => self.voters[i].start_election(*eid),
            Verb::Vote { eid, option, private } => {
                let st = st?;
                let snap = st.election(*eid).map(|e| e.snapshot_powers.clone()).unwrap_or_default();
                let v = &self.voters[i];
                if *private {
                    v.cast_private_vote(*eid, *option, st.num_options(), &st.pk_enc, &snap, &mut self.rng)
                } else {
                    v.cast_public_vote(*eid, *option, st.num_options(), &snap)
                }
                .ok()?
            }
            Verb::Tally { eid } => {
                let tallies = st?.election(*eid)?.tallies.clone();
                let (res, decryption) = self
                    .authority
                    .as_ref()?
                    .tally_decrypt(*eid, &tallies, &mut self.rng)
                    .ok()?;
                Command::Tally { eid: *eid, percentages: res.percentages, decryption }
            }
            Verb::Transfer { to, amount } => Command::Transfer { from: c.actor, to: *to, amount: *amount },
        })
    }

    /// Applies `cmd` to the local board and updates client state. Returns
    /// a follow-up root refresh after an accepted transfer.
    pub fn record(&mut self, c: &TraceCommand, cmd: Command) -> (Event, Option<Command>) {
        let accepted = self.board.apply(cmd.clone()).is_ok();
        let event = self.board.events().last().unwrap().clone();
        let mut follow = None;
        if accepted {
            let i = c.actor.index();
            match (&c.verb, &cmd) {
                (Verb::Register, _) => self.voters[i].confirm_registered(true),
                (Verb::Unregister, _) => self.voters[i].confirm_registered(false),
                (Verb::Delegate { .. }, _) => {
                    let b = self.pending.take().unwrap();
                    self.voters[i].confirm_delegation(&b);
                }
                (Verb::Undelegate, _) => self.voters[i].confirm_undelegation(),
                (Verb::Transfer { to, amount }, _) => {
                    let a = self.authority.as_mut().unwrap();
                    let (token_root, root_sig) = a
                        .refresh_root(&[Transfer { from: c.actor, to: *to, amount: *amount }])
                        .unwrap();
                    follow = Some(Command::RefreshRoot { token_root, root_sig });
                }
                _ => {}
            }
        }
        (event, follow)
    }
}
