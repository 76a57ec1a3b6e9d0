use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::ideal::IdealInput;
use crate::params::{ElectionId, PartyId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verb", rename_all = "snake_case")]
pub enum Verb {
    Setup { tokens: Vec<u64> },
    Register,
    Unregister,
    Delegate { target: PartyId, set_size: usize },
    Undelegate,
    ElectionSetup { eid: ElectionId, desc: String },
    ElectionStart { eid: ElectionId },
    Vote { eid: ElectionId, option: usize, private: bool },
    Tally { eid: ElectionId },
    Transfer { to: PartyId, amount: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceCommand {
    pub actor: PartyId,
    #[serde(flatten)]
    pub verb: Verb,
}

impl TraceCommand {
    pub fn ideal_input(&self) -> IdealInput {
        match &self.verb {
            Verb::Setup { tokens } => IdealInput::Setup {
                tokens: tokens.clone(),
            },
            Verb::Register => IdealInput::Register,
            Verb::Unregister => IdealInput::Unregister,
            Verb::Delegate { target, .. } => IdealInput::Delegate { target: *target },
            Verb::Undelegate => IdealInput::Undelegate,
            Verb::ElectionSetup { eid, desc } => IdealInput::ElectionSetup {
                eid: *eid,
                desc: desc.clone(),
            },
            Verb::ElectionStart { eid } => IdealInput::ElectionStart { eid: *eid },
            Verb::Vote { eid, option, .. } => IdealInput::Vote {
                eid: *eid,
                option: *option,
            },
            Verb::Tally { eid } => IdealInput::Tally { eid: *eid },
            Verb::Transfer { to, amount } => IdealInput::Transfer {
                to: *to,
                amount: *amount,
            },
        }
    }

    pub fn name(&self) -> &'static str {
        match self.verb {
            Verb::Setup { .. } => "setup",
            Verb::Register => "register",
            Verb::Unregister => "unregister",
            Verb::Delegate { .. } => "delegate",
            Verb::Undelegate => "undelegate",
            Verb::ElectionSetup { .. } => "esetup",
            Verb::ElectionStart { .. } => "estart",
            Verb::Vote { .. } => "vote",
            Verb::Tally { .. } => "tally",
            Verb::Transfer { .. } => "transfer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceBounds {
    pub max_parties: usize,
    pub max_elections: usize,
    pub max_commands: usize,
    pub max_tokens: u64,
    pub num_options: usize,
    pub max_set_size: usize,
}

impl Default for TraceBounds {
    fn default() -> Self {
        TraceBounds {
            max_parties: 16,
            max_elections: 4,
            max_commands: 64,
            max_tokens: 20,
            num_options: 3,
            max_set_size: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GenPhase {
    Created,
    Started,
    Tallied,
}

struct GenElection {
    eid: ElectionId,
    creator: PartyId,
    phase: GenPhase,
    active_at_start: BTreeSet<PartyId>,
    voted: BTreeSet<PartyId>,
}

/// Mirror of the real guards, just enough to pick commands both models
/// accept and agree on.
struct GenModel {
    balances: Vec<u64>,
    locked: Vec<bool>,
    active: Vec<bool>,
    delegating: Vec<Option<PartyId>>,
    elections: Vec<GenElection>,
}

impl GenModel {
    fn parties(&self) -> impl Iterator<Item = PartyId> + '_ {
        (0..self.balances.len() as u32).map(PartyId)
    }

    fn inbound(&self, p: PartyId) -> bool {
        self.delegating.contains(&Some(p))
    }

    fn pool(&self) -> Vec<PartyId> {
        self.parties().filter(|p| self.active[p.index()]).collect()
    }

    fn candidates<R: Rng>(&self, rng: &mut R, b: &TraceBounds) -> Vec<Vec<TraceCommand>> {
        let cmd = |actor, verb| TraceCommand { actor, verb };
        let mut by_verb: Vec<Vec<TraceCommand>> = Vec::new();

        by_verb.push(
            self.parties()
                .filter(|p| !self.locked[p.index()] && !self.active[p.index()] && !self.inbound(*p))
                .map(|p| cmd(p, Verb::Register))
                .collect(),
        );
        by_verb.push(
            self.parties()
                .filter(|p| self.active[p.index()])
                .map(|p| cmd(p, Verb::Unregister))
                .collect(),
        );
        let pool = self.pool();
        by_verb.push(if pool.is_empty() {
            vec![]
        } else {
            self.parties()
                .filter(|p| !self.locked[p.index()] && self.balances[p.index()] >= 1)
                .map(|p| {
                    let target = *pool.choose(rng).expect("nonempty pool");
                    let set_size = rng.gen_range(1..=pool.len().min(b.max_set_size));
                    cmd(p, Verb::Delegate { target, set_size })
                })
                .collect()
        });
        by_verb.push(
            self.parties()
                .filter(|p| self.delegating[p.index()].is_some())
                .map(|p| cmd(p, Verb::Undelegate))
                .collect(),
        );
        by_verb.push(if self.elections.len() < b.max_elections {
            let eid = ElectionId(self.elections.len() as u64 + 1);
            let creator = PartyId(rng.gen_range(0..self.balances.len() as u32));
            vec![cmd(
                creator,
                Verb::ElectionSetup {
                    eid,
                    desc: format!("proposal {}", eid.0),
                },
            )]
        } else {
            vec![]
        });
        by_verb.push(
            self.elections
                .iter()
                .filter(|e| e.phase == GenPhase::Created)
                .map(|e| cmd(e.creator, Verb::ElectionStart { eid: e.eid }))
                .collect(),
        );
        let mut votes = Vec::new();
        for e in self.elections.iter().filter(|e| e.phase == GenPhase::Started) {
            for p in &e.active_at_start {
                if self.active[p.index()] && !e.voted.contains(p) {
                    votes.push(cmd(
                        *p,
                        Verb::Vote {
                            eid: e.eid,
                            option: rng.gen_range(0..b.num_options),
                            private: rng.gen_bool(0.5),
                        },
                    ));
                }
            }
        }
        by_verb.push(votes);
        by_verb.push(
            self.elections
                .iter()
                .filter(|e| e.phase == GenPhase::Started)
                .map(|e| cmd(PartyId(0), Verb::Tally { eid: e.eid }))
                .collect(),
        );
        let unlocked: Vec<PartyId> = self.parties().filter(|p| !self.locked[p.index()]).collect();
        let mut transfers = Vec::new();
        for from in &unlocked {
            let bal = self.balances[from.index()];
            let others: Vec<_> = unlocked.iter().filter(|q| *q != from).collect();
            if bal >= 1 && !others.is_empty() {
                let to = **others.choose(rng).expect("nonempty");
                let amount = rng.gen_range(1..=bal);
                transfers.push(cmd(*from, Verb::Transfer { to, amount }));
            }
        }
        by_verb.push(transfers);
        by_verb
    }

    fn apply(&mut self, c: &TraceCommand) {
        let i = c.actor.index();
        match &c.verb {
            Verb::Setup { .. } => {}
            Verb::Register => {
                self.locked[i] = true;
                self.active[i] = true;
            }
            Verb::Unregister => {
                self.locked[i] = false;
                self.active[i] = false;
            }
            Verb::Delegate { target, .. } => {
                self.locked[i] = true;
                self.delegating[i] = Some(*target);
            }
            Verb::Undelegate => {
                self.locked[i] = false;
                self.delegating[i] = None;
            }
            Verb::ElectionSetup { eid, .. } => self.elections.push(GenElection {
                eid: *eid,
                creator: c.actor,
                phase: GenPhase::Created,
                active_at_start: BTreeSet::new(),
                voted: BTreeSet::new(),
            }),
            Verb::ElectionStart { eid } => {
                let active: BTreeSet<PartyId> = self.pool().into_iter().collect();
                let e = self.election(*eid);
                e.phase = GenPhase::Started;
                e.active_at_start = active;
            }
            Verb::Vote { eid, .. } => {
                self.election(*eid).voted.insert(c.actor);
            }
            Verb::Tally { eid } => self.election(*eid).phase = GenPhase::Tallied,
            Verb::Transfer { to, amount } => {
                self.balances[i] -= amount;
                self.balances[to.index()] += amount;
            }
        }
    }

    fn election(&mut self, eid: ElectionId) -> &mut GenElection {
        self.elections
            .iter_mut()
            .find(|e| e.eid == eid)
            .expect("generated election")
    }
}

/// A seeded trace whose every command passes both the board's guards and
/// the ideal functionality's checks at the point it is issued.
///
/// The first command is always `setup`. Beyond the guards, it keeps to the
/// region where both models agree: registration only without inbound
/// delegations, delegation only to active targets by unlocked parties
/// holding tokens, votes only by parties active both at election start and
/// now, one start and one tally per election, and transfers only between
/// unlocked parties.
pub fn trace_gen(seed: u64, bounds: &TraceBounds) -> Vec<TraceCommand> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=bounds.max_parties.max(2));
    let tokens: Vec<u64> = (0..n).map(|_| rng.gen_range(0..=bounds.max_tokens)).collect();
    let mut model = GenModel {
        balances: tokens.clone(),
        locked: vec![false; n],
        active: vec![false; n],
        delegating: vec![None; n],
        elections: Vec::new(),
    };
    let mut trace = vec![TraceCommand {
        actor: PartyId(0),
        verb: Verb::Setup { tokens },
    }];
    let len = rng.gen_range(1..=bounds.max_commands.max(1));
    while trace.len() < len {
        let verbs: Vec<Vec<TraceCommand>> = model
            .candidates(&mut rng, bounds)
            .into_iter()
            .filter(|v| !v.is_empty())
            .collect();
        let Some(choices) = verbs.choose(&mut rng) else {
            break;
        };
        let c = choices.choose(&mut rng).expect("nonempty").clone();
        model.apply(&c);
        trace.push(c);
    }
    trace
}

#[derive(Serialize, Deserialize)]
struct Header {
    seed: u64,
}

/// JSON lines: a `{"seed":…}` header, then one command per line.
pub fn write_trace(seed: u64, trace: &[TraceCommand]) -> String {
    let mut out = serde_json::to_string(&Header { seed }).expect("serializes");
    out.push('\n');
    for c in trace {
        out.push_str(&serde_json::to_string(c).expect("serializes"));
        out.push('\n');
    }
    out
}

pub fn read_trace(text: &str) -> Result<(Option<u64>, Vec<TraceCommand>), serde_json::Error> {
    let mut seed = None;
    let mut trace = Vec::new();
    for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        if i == 0 {
            if let Ok(h) = serde_json::from_str::<Header>(line) {
                seed = Some(h.seed);
                continue;
            }
        }
        trace.push(serde_json::from_str(line)?);
    }
    Ok((seed, trace))
}
