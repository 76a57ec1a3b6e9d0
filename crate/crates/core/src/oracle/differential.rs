use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::ideal::{IdealEvent, IdealState};
use super::trace::{TraceCommand, Verb};
use crate::authority::{Authority, Transfer};
use crate::board::{Board, BoardState, Command, EventKind, Fault};
use crate::client::{voter_setup, VoterState};
use crate::params::{ElectionId, PartyId};

/// Token bound used for both models.
const BOUND: u64 = 1 << 20;

/// The public facts both models are compared on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observation {
    Setup { num_parties: usize },
    Registered { party: PartyId },
    Unregistered { party: PartyId },
    Delegated { party: PartyId },
    Undelegated { party: PartyId },
    ElectionCreated { eid: ElectionId, creator: PartyId },
    ElectionStarted { eid: ElectionId },
    Voted { eid: ElectionId, party: PartyId, option: Option<usize> },
    Tallied { eid: ElectionId, percentages: Vec<u32> },
    Transferred { from: PartyId, to: PartyId, amount: u64 },
    Rejected { command: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Equal,
    Divergence {
        index: usize,
        command: TraceCommand,
        real: Vec<Observation>,
        ideal: Vec<Observation>,
    },
}

impl Verdict {
    pub fn is_equal(&self) -> bool {
        *self == Verdict::Equal
    }
}

/// Board, authority and one honest client per party.
pub struct RealStack {
    board: Board,
    authority: Option<Authority>,
    voters: Vec<VoterState>,
    rng: ChaCha20Rng,
    num_options: usize,
}

impl RealStack {
    pub fn new(seed: u64, num_options: usize) -> Self {
        Self::with_board(Board::new(), seed, num_options)
    }

    pub fn with_fault(fault: Fault, seed: u64, num_options: usize) -> Self {
        Self::with_board(Board::with_fault(fault), seed, num_options)
    }

    fn with_board(board: Board, seed: u64, num_options: usize) -> Self {
        RealStack {
            board,
            authority: None,
            voters: Vec::new(),
            rng: ChaCha20Rng::seed_from_u64(seed ^ 0x6b69_7465),
            num_options,
        }
    }

    pub fn board(&self) -> &Board {
        &self.board
    }

    pub fn authority(&self) -> Option<&Authority> {
        self.authority.as_ref()
    }

    pub fn voters(&self) -> &[VoterState] {
        &self.voters
    }

    fn state(&self) -> &BoardState {
        self.board.state().expect("set up")
    }

    /// Runs one trace command through client, authority and board and
    /// returns the public observations it produced.
    pub fn step(&mut self, c: &TraceCommand) -> Vec<Observation> {
        let from = self.board.events().len() as u64;
        if let Err(reason) = self.drive(c) {
            return vec![Observation::Rejected {
                command: c.name().to_owned(),
                reason,
            }];
        }
        self.board
            .events_from(from)
            .iter()
            .filter_map(|e| project_real(&e.kind, c))
            .collect()
    }

    fn submit(&mut self, cmd: Command) -> Result<(), String> {
        self.board.apply(cmd).map(|_| ()).map_err(|e| e.to_string())
    }

    fn drive(&mut self, c: &TraceCommand) -> Result<(), String> {
        let p = c.actor;
        let i = p.index();
        if !matches!(c.verb, Verb::Setup { .. }) && i >= self.voters.len() {
            return Err(format!("unknown party {p}"));
        }
        match &c.verb {
            Verb::Setup { tokens } => {
                let (bundle, authority) =
                    Authority::setup(tokens, BOUND, &mut self.rng).map_err(|e| e.to_string())?;
                self.voters = (0..tokens.len() as u32)
                    .map(|k| voter_setup(tokens, PartyId(k)).expect("in range"))
                    .collect();
                self.authority = Some(authority);
                self.submit(Command::Setup {
                    bundle,
                    num_options: self.num_options,
                })
            }
            Verb::Register => {
                let cmd = self.voters[i].register();
                let res = self.submit(cmd);
                if res.is_ok() {
                    self.voters[i].confirm_registered(true);
                }
                res
            }
            Verb::Unregister => {
                let cmd = self.voters[i].unregister();
                let res = self.submit(cmd);
                if res.is_ok() {
                    self.voters[i].confirm_registered(false);
                }
                res
            }
            Verb::Delegate { target, set_size } => {
                let st = self.state();
                let (pk, balances, pool) = (st.pk_enc, st.balances.clone(), st.active_delegates());
                let bundle = self.voters[i]
                    .build_delegation(&pk, &balances, *target, *set_size, &pool, None, &mut self.rng)
                    .map_err(|e| e.to_string())?;
                self.submit(bundle.command.clone())?;
                self.voters[i].confirm_delegation(&bundle);
                Ok(())
            }
            Verb::Undelegate => {
                let cmd = self.voters[i].build_undelegation().map_err(|e| e.to_string())?;
                self.submit(cmd)?;
                self.voters[i].confirm_undelegation();
                Ok(())
            }
            Verb::ElectionSetup { eid, desc } => {
                let cmd = self.voters[i].create_election(*eid, desc);
                self.submit(cmd)
            }
            Verb::ElectionStart { eid } => {
                let cmd = self.voters[i].start_election(*eid);
                self.submit(cmd)
            }
            Verb::Vote {
                eid,
                option,
                private,
            } => {
                let st = self.state();
                let snapshot = st
                    .election(*eid)
                    .map(|e| e.snapshot_powers.clone())
                    .unwrap_or_default();
                let pk = st.pk_enc;
                let n = st.num_options();
                let v = &self.voters[i];
                let cmd = if *private {
                    v.cast_private_vote(*eid, *option, n, &pk, &snapshot, &mut self.rng)
                } else {
                    v.cast_public_vote(*eid, *option, n, &snapshot)
                }
                .map_err(|e| e.to_string())?;
                self.submit(cmd)
            }
            Verb::Tally { eid } => {
                let tallies = self
                    .state()
                    .election(*eid)
                    .map(|e| e.tallies.clone())
                    .ok_or_else(|| format!("unknown election {eid}"))?;
                let authority = self.authority.as_ref().expect("set up");
                let (res, decryption) = authority
                    .tally_decrypt(*eid, &tallies, &mut self.rng)
                    .map_err(|e| e.to_string())?;
                self.submit(Command::Tally {
                    eid: *eid,
                    percentages: res.percentages,
                    decryption,
                })
            }
            Verb::Transfer { to, amount } => {
                self.submit(Command::Transfer {
                    from: p,
                    to: *to,
                    amount: *amount,
                })?;
                let authority = self.authority.as_mut().expect("set up");
                let (token_root, root_sig) = authority
                    .refresh_root(&[Transfer {
                        from: p,
                        to: *to,
                        amount: *amount,
                    }])
                    .map_err(|e| e.to_string())?;
                self.submit(Command::RefreshRoot {
                    token_root,
                    root_sig,
                })
            }
        }
    }
}

fn project_real(kind: &EventKind, c: &TraceCommand) -> Option<Observation> {
    Some(match kind {
        EventKind::Setup { num_parties, .. } => Observation::Setup {
            num_parties: *num_parties,
        },
        EventKind::Registered { party, .. } => Observation::Registered { party: *party },
        EventKind::Unregistered { party, .. } => Observation::Unregistered { party: *party },
        EventKind::Delegated { party, .. } => Observation::Delegated { party: *party },
        EventKind::Undelegated { party, .. } => Observation::Undelegated { party: *party },
        EventKind::ElectionCreated { eid, creator, .. } => Observation::ElectionCreated {
            eid: *eid,
            creator: *creator,
        },
        EventKind::ElectionStarted { eid, .. } => Observation::ElectionStarted { eid: *eid },
        EventKind::Voted { eid, party, option } => Observation::Voted {
            eid: *eid,
            party: *party,
            option: *option,
        },
        EventKind::Tallied {
            eid, percentages, ..
        } => Observation::Tallied {
            eid: *eid,
            percentages: percentages.clone(),
        },
        EventKind::Transferred { from, to, amount } => Observation::Transferred {
            from: *from,
            to: *to,
            amount: *amount,
        },
        EventKind::RootRefreshed { .. } => return None,
        EventKind::TransferLocked { .. } => Observation::Rejected {
            command: c.name().to_owned(),
            reason: "transfer locked".into(),
        },
        EventKind::Rejected { reason, .. } => Observation::Rejected {
            command: c.name().to_owned(),
            reason: reason.clone(),
        },
    })
}

fn project_ideal(e: &IdealEvent, c: &TraceCommand) -> Observation {
    match e {
        IdealEvent::Setup { tokens } => Observation::Setup {
            num_parties: tokens.len(),
        },
        IdealEvent::Register { party } => Observation::Registered { party: *party },
        IdealEvent::Unregister { party } => Observation::Unregistered { party: *party },
        IdealEvent::Delegate { party } => Observation::Delegated { party: *party },
        IdealEvent::Undelegate { party } => Observation::Undelegated { party: *party },
        IdealEvent::ElectionSetup { eid, creator, .. } => Observation::ElectionCreated {
            eid: *eid,
            creator: *creator,
        },
        IdealEvent::ElectionStart { eid, .. } => Observation::ElectionStarted { eid: *eid },
        IdealEvent::Vote { eid, option, party } => {
            let private = matches!(c.verb, Verb::Vote { private: true, .. });
            Observation::Voted {
                eid: *eid,
                party: *party,
                option: (!private).then_some(*option),
            }
        }
        IdealEvent::Tally { eid, percentages } => Observation::Tallied {
            eid: *eid,
            percentages: percentages.clone(),
        },
        IdealEvent::Transfer { from, to, amount } => Observation::Transferred {
            from: *from,
            to: *to,
            amount: *amount,
        },
    }
}

/// Runs `trace` through `real` and the ideal model side by side and reports
/// the first command whose observations differ.
pub fn differential_run(trace: &[TraceCommand], real: &mut RealStack) -> Verdict {
    let mut ideal = IdealState::new(BOUND, real.num_options);
    for (index, c) in trace.iter().enumerate() {
        let r = real.step(c);
        let i: Vec<Observation> = ideal
            .step(c.actor, &c.ideal_input())
            .iter()
            .map(|e| project_ideal(e, c))
            .collect();
        if r != i {
            return Verdict::Divergence {
                index,
                command: c.clone(),
                real: r,
                ideal: i,
            };
        }
    }
    Verdict::Equal
}
