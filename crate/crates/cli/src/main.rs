//! `kite`: drives a Kite node and runs local simulations and benchmarks.
//!
//! Output is one `key=value` record per line.

mod bench;
mod http;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};
use thiserror::Error;

use kite_core::board::{BoardState, Event, EventKind};
use kite_core::client::{voter_setup, ClientError, VoterState};
use kite_core::oracle::{differential_run, trace_gen, write_trace, RealStack, TraceBounds, Verdict};
use kite_core::params::{option_label, parse_option, ElectionId, PartyId};
use kite_core::tally::format_basis_points;
use kite_node::api::{request_for, Applied};

use http::NodeClient;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot reach node {0}")]
    Connection(String),
    #[error("{error} (HTTP {status}): {reason}")]
    Api { status: u16, error: String, reason: String },
    #[error("{0}")]
    Client(#[from] ClientError),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("{0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    /// Stable error name printed as `error=<code>`.
    fn code(&self) -> String {
        match self {
            CliError::Connection(_) => "Connection".into(),
            CliError::Api { error, .. } => error.clone(),
            CliError::Client(e) => {
                let s = format!("{e:?}");
                s.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_owned()
            }
            CliError::Protocol(_) => "Protocol".into(),
            CliError::Usage(_) => "Usage".into(),
            CliError::Io(_) => "Io".into(),
            CliError::Failed(_) => "Failed".into(),
        }
    }
}

#[derive(Parser)]
#[command(name = "kite", version, about = "Private delegation governance from the command line")]
struct Cli {
    /// Node base URL.
    #[arg(long, global = true, env = "NODE_URL", default_value = "http://127.0.0.1:8080")]
    node: String,
    /// Where per-party client state (delegation secrets) is kept.
    #[arg(long, global = true, env = "KITE_STATE_DIR", default_value = "kite-client")]
    state_dir: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Initialize the board from a token file (`partyIndex tokens` per line).
    Setup {
        #[arg(long)]
        tokens: PathBuf,
        #[arg(long)]
        options: Option<usize>,
    },
    Register {
        #[arg(long)]
        party: u32,
    },
    Unregister {
        #[arg(long)]
        party: u32,
    },
    /// Delegate all tokens of `--from` to `--to`, hidden among `--anonymity` delegates.
    Delegate {
        #[arg(long)]
        from: u32,
        #[arg(long)]
        to: u32,
        #[arg(long)]
        anonymity: usize,
    },
    Undelegate {
        #[arg(long)]
        party: u32,
    },
    Election {
        #[command(subcommand)]
        action: ElectionCmd,
    },
    Vote {
        #[arg(long)]
        eid: u64,
        #[arg(long)]
        party: u32,
        /// Option label (`yes`, `no`, `abstain`) or index.
        #[arg(long)]
        choice: String,
        #[arg(long)]
        private: bool,
    },
    /// Ask the node's authority to tally and print the percentages.
    Tally {
        #[arg(long)]
        eid: u64,
    },
    Transfer {
        #[arg(long)]
        from: u32,
        #[arg(long)]
        to: u32,
        #[arg(long)]
        amount: u64,
    },
    /// Print a summary of the board state.
    Status,
    /// Print events starting at `--from`.
    Events {
        #[arg(long, default_value_t = 0)]
        from: u64,
    },
    /// Run a generated trace against a local in-memory stack.
    Simulate {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        commands: usize,
        /// Also write the trace as JSON lines.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Compare the real stack against the ideal model on generated traces.
    DiffTest {
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
    },
    /// Time proving and verification of one relation.
    Bench {
        #[arg(long, value_enum)]
        relation: bench::Relation,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 10)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum ElectionCmd {
    Create {
        #[arg(long)]
        eid: u64,
        #[arg(long, default_value = "")]
        desc: String,
        #[arg(long, default_value_t = 0)]
        party: u32,
    },
    Start {
        #[arg(long)]
        eid: u64,
        #[arg(long, default_value_t = 0)]
        party: u32,
    },
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) if items.iter().all(|x| !x.is_object() && !x.is_array()) => {
            items.iter().map(scalar_text).collect::<Vec<_>>().join(",")
        }
        other => other.to_string(),
    }
}

fn event_line(e: &Event) -> String {
    let v = serde_json::to_value(e).expect("events serialize");
    let obj = v.as_object().expect("event is an object");
    let mut parts = vec![format!("seq={}", e.seq), format!("kind={}", e.kind.name())];
    for (k, x) in obj {
        if k != "seq" && k != "kind" {
            parts.push(format!("{k}={}", scalar_text(x)));
        }
    }
    parts.join(" ")
}

fn tally_line(num_options: usize, percentages: &[u32]) -> String {
    percentages
        .iter()
        .enumerate()
        .map(|(i, bp)| format!("{} {}", option_label(num_options, i), format_basis_points(*bp)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn print_applied(v: Value) -> Result<Applied, CliError> {
    let applied: Applied =
        serde_json::from_value(v).map_err(|e| CliError::Protocol(format!("bad response: {e}")))?;
    for e in &applied.events {
        println!("{}", event_line(e));
    }
    Ok(applied)
}

fn parse_token_file(path: &Path) -> Result<Vec<u64>, CliError> {
    let text = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || CliError::Usage(format!("{}:{}: expected `partyIndex tokens`", path.display(), n + 1));
        let mut it = line.split_whitespace();
        let (Some(p), Some(t), None) = (it.next(), it.next(), it.next()) else {
            return Err(bad());
        };
        let p: usize = p.parse().map_err(|_| bad())?;
        let t: u64 = t.parse().map_err(|_| bad())?;
        pairs.push((p, t));
    }
    pairs.sort();
    for (i, (p, _)) in pairs.iter().enumerate() {
        if *p != i {
            return Err(CliError::Usage(format!(
                "party indices must be 0..{} without gaps or repeats",
                pairs.len()
            )));
        }
    }
    if pairs.is_empty() {
        return Err(CliError::Usage("token file lists no parties".into()));
    }
    Ok(pairs.into_iter().map(|(_, t)| t).collect())
}

fn require_state(node: &NodeClient) -> Result<BoardState, CliError> {
    node.state()?
        .state
        .ok_or_else(|| CliError::Api {
            status: 409,
            error: "NotInitialized".into(),
            reason: "board is not initialized".into(),
        })
}

fn voter_path(dir: &Path, party: PartyId) -> PathBuf {
    dir.join(format!("party-{}.json", party.0))
}

/// Local client state, refreshed from the board's public view.
fn load_voter(dir: &Path, party: PartyId, st: &BoardState) -> Result<VoterState, CliError> {
    let path = voter_path(dir, party);
    let mut v = if path.exists() {
        VoterState::load(&path)?
    } else {
        voter_setup(&st.balances, party)?
    };
    v.tokens = st.balances[party.index()];
    v.confirm_registered(st.active[party.index()]);
    Ok(v)
}

fn save_voter(dir: &Path, v: &VoterState) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    v.save(&voter_path(dir, v.party))?;
    Ok(())
}

fn known_party(st: &BoardState, p: u32) -> Result<PartyId, CliError> {
    let party = PartyId(p);
    if party.index() >= st.num_parties() {
        return Err(ClientError::UnknownParty(party).into());
    }
    Ok(party)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let node = NodeClient::new(&cli.node);
    let dir = cli.state_dir.as_path();
    let mut rng = ChaCha20Rng::from_entropy();
    match cli.cmd {
        Cmd::Setup { tokens, options } => {
            let tokens = parse_token_file(&tokens)?;
            let mut body = json!({ "tokens": tokens });
            if let Some(n) = options {
                body["num_options"] = json!(n);
            }
            print_applied(node.post("/setup", &body)?)?;
        }
        Cmd::Register { party } | Cmd::Unregister { party } => {
            let register = matches!(cli.cmd, Cmd::Register { .. });
            let st = require_state(&node)?;
            let party = known_party(&st, party)?;
            let mut v = load_voter(dir, party, &st)?;
            let cmd = if register { v.register() } else { v.unregister() };
            print_applied(node.send(&request_for(&cmd))?)?;
            v.confirm_registered(register);
            save_voter(dir, &v)?;
        }
        Cmd::Delegate { from, to, anonymity } => {
            let st = require_state(&node)?;
            let party = known_party(&st, from)?;
            let mut v = load_voter(dir, party, &st)?;
            let bundle = v.build_delegation(
                &st.pk_enc,
                &st.balances,
                PartyId(to),
                anonymity,
                &st.active_delegates(),
                None,
                &mut rng,
            )?;
            print_applied(node.send(&request_for(&bundle.command))?)?;
            v.confirm_delegation(&bundle);
            save_voter(dir, &v)?;
        }
        Cmd::Undelegate { party } => {
            let st = require_state(&node)?;
            let party = known_party(&st, party)?;
            let mut v = load_voter(dir, party, &st)?;
            let cmd = v.build_undelegation()?;
            print_applied(node.send(&request_for(&cmd))?)?;
            v.confirm_undelegation();
            save_voter(dir, &v)?;
        }
        Cmd::Election { action } => {
            let st = require_state(&node)?;
            let cmd = match action {
                ElectionCmd::Create { eid, desc, party } => {
                    load_voter(dir, known_party(&st, party)?, &st)?.create_election(ElectionId(eid), &desc)
                }
                ElectionCmd::Start { eid, party } => {
                    load_voter(dir, known_party(&st, party)?, &st)?.start_election(ElectionId(eid))
                }
            };
            print_applied(node.send(&request_for(&cmd))?)?;
        }
        Cmd::Vote { eid, party, choice, private } => {
            let st = require_state(&node)?;
            let party = known_party(&st, party)?;
            let eid = ElectionId(eid);
            let n = st.num_options();
            let option = parse_option(n, &choice)
                .ok_or_else(|| CliError::Usage(format!("unknown choice {choice}")))?;
            let e = st.election(eid).ok_or_else(|| CliError::Api {
                status: 409,
                error: "UnknownElection".into(),
                reason: format!("unknown election {eid}"),
            })?;
            let v = load_voter(dir, party, &st)?;
            let cmd = if private {
                v.cast_private_vote(eid, option, n, &st.pk_enc, &e.snapshot_powers, &mut rng)?
            } else {
                v.cast_public_vote(eid, option, n, &e.snapshot_powers)?
            };
            print_applied(node.send(&request_for(&cmd))?)?;
        }
        Cmd::Tally { eid } => {
            let applied = print_applied(node.post(&format!("/elections/{eid}/tally"), &Value::Null)?)?;
            let n = require_state(&node)?.num_options();
            for e in &applied.events {
                if let EventKind::Tallied { percentages, .. } = &e.kind {
                    println!("{}", tally_line(n, percentages));
                }
            }
        }
        Cmd::Transfer { from, to, amount } => {
            print_applied(node.post("/transfer", &json!({"from": from, "to": to, "amount": amount}))?)?;
        }
        Cmd::Status => {
            let view = node.state()?;
            println!("initialized={} next_seq={} state_hash={}", view.initialized, view.next_seq, scalar_text(&json!(view.state_hash)));
            if let Some(st) = view.state {
                for i in 0..st.num_parties() {
                    println!(
                        "party={i} tokens={} locked={} active={}",
                        st.balances[i], st.locks[i], st.active[i]
                    );
                }
                for (eid, e) in &st.elections {
                    let mut line = format!(
                        "eid={} phase={} creator={} voted={}",
                        eid.0,
                        scalar_text(&json!(e.phase)),
                        e.creator.0,
                        e.voted.len()
                    );
                    if let Some(p) = &e.result {
                        line.push_str(&format!(" result=\"{}\"", tally_line(st.num_options(), p)));
                    }
                    println!("{line}");
                }
            }
        }
        Cmd::Events { from } => {
            let v = node.get(&format!("/events?from={from}"))?;
            let events: Vec<Event> =
                serde_json::from_value(v).map_err(|e| CliError::Protocol(e.to_string()))?;
            for e in &events {
                println!("{}", event_line(e));
            }
        }
        Cmd::Simulate { seed, commands, trace_out } => simulate(seed, commands, trace_out)?,
        Cmd::DiffTest { seeds, first_seed } => diff_test(first_seed, seeds)?,
        Cmd::Bench { relation, size, iters, seed } => {
            let mut report = bench::run(relation, size, iters, seed).map_err(CliError::Failed)?;
            println!("{}", report.line(relation, size));
        }
    }
    Ok(())
}

fn simulate(seed: u64, commands: usize, trace_out: Option<PathBuf>) -> Result<(), CliError> {
    let bounds = TraceBounds {
        max_commands: commands.max(1),
        ..TraceBounds::default()
    };
    let trace = trace_gen(seed, &bounds);
    if let Some(path) = trace_out {
        fs::write(path, write_trace(seed, &trace))?;
    }
    let mut stack = RealStack::new(seed, bounds.num_options);
    for c in &trace {
        stack.step(c);
    }
    let board = stack.board();
    let rejected = board.events().iter().filter(|e| e.kind.is_rejection()).count();
    println!(
        "seed={seed} commands={} events={} rejected={rejected} state_hash={}",
        trace.len(),
        board.events().len(),
        scalar_text(&json!(board.state_hash()))
    );
    for e in board.events() {
        if let EventKind::Tallied { eid, percentages, .. } = &e.kind {
            println!("eid={} result=\"{}\"", eid.0, tally_line(bounds.num_options, percentages));
        }
    }
    Ok(())
}

fn diff_test(first: u64, seeds: u64) -> Result<(), CliError> {
    let bounds = TraceBounds::default();
    let mut equal = 0;
    for seed in first..first + seeds {
        let trace = trace_gen(seed, &bounds);
        let mut real = RealStack::new(seed, bounds.num_options);
        match differential_run(&trace, &mut real) {
            Verdict::Equal => equal += 1,
            Verdict::Divergence { index, command, real, ideal } => {
                println!("seed={seed} diverged_at={index} command={command:?} real={real:?} ideal={ideal:?}");
            }
        }
    }
    println!("{equal}/{seeds} Equal");
    if equal == seeds {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{} divergent seeds", seeds - equal)))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error={} reason=\"{e}\"", e.code());
            ExitCode::FAILURE
        }
    }
}
