use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::params::{ElectionId, PartyId};
use crate::tally::basis_points;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum IdealInput {
    Setup { tokens: Vec<u64> },
    Register,
    Unregister,
    Delegate { target: PartyId },
    Undelegate,
    ElectionSetup { eid: ElectionId, desc: String },
    ElectionStart { eid: ElectionId },
    Vote { eid: ElectionId, option: usize },
    Tally { eid: ElectionId },
    Transfer { to: PartyId, amount: u64 },
}

/// What the functionality broadcasts to all participants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum IdealEvent {
    Setup { tokens: Vec<u64> },
    Register { party: PartyId },
    Unregister { party: PartyId },
    Delegate { party: PartyId },
    Undelegate { party: PartyId },
    ElectionSetup { eid: ElectionId, desc: String, creator: PartyId },
    ElectionStart { eid: ElectionId, party: PartyId },
    Vote { eid: ElectionId, option: usize, party: PartyId },
    Tally { eid: ElectionId, percentages: Vec<u32> },
    Transfer { from: PartyId, to: PartyId, amount: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealElection {
    pub creator: PartyId,
    pub voted: BTreeSet<PartyId>,
    /// `t^eid`: power per party frozen at start.
    pub power: Vec<u64>,
    /// `r^eid`: running counters per option.
    pub counters: Vec<u64>,
    pub percentages: Option<Vec<u32>>,
}

/// The ideal functionality. Inputs that fail its checks are ignored and
/// broadcast nothing. It deliberately has no duplicate or phase checks
/// beyond what the functionality states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealState {
    pub bound: u64,
    pub num_options: usize,
    pub reg: Vec<bool>,
    pub d: Vec<PartyId>,
    pub t: Vec<u64>,
    pub elections: BTreeMap<ElectionId, IdealElection>,
    pub broadcast: Vec<IdealEvent>,
}

impl IdealState {
    pub fn new(bound: u64, num_options: usize) -> Self {
        IdealState {
            bound,
            num_options,
            reg: Vec::new(),
            d: Vec::new(),
            t: Vec::new(),
            elections: BTreeMap::new(),
            broadcast: Vec::new(),
        }
    }

    fn known(&self, p: PartyId) -> bool {
        p.index() < self.t.len()
    }

    /// Processes one input from `actor` and returns what it broadcast.
    pub fn step(&mut self, actor: PartyId, input: &IdealInput) -> Vec<IdealEvent> {
        let out = self.transition(actor, input);
        self.broadcast.extend(out.iter().cloned());
        out
    }

    fn transition(&mut self, actor: PartyId, input: &IdealInput) -> Vec<IdealEvent> {
        if !matches!(input, IdealInput::Setup { .. }) && !self.known(actor) {
            return vec![];
        }
        let i = actor.index();
        match input {
            IdealInput::Setup { tokens } => {
                if tokens.is_empty() || tokens.iter().any(|&t| t > self.bound) {
                    return vec![];
                }
                let n = tokens.len();
                self.t = tokens.clone();
                self.reg = vec![false; n];
                self.d = (0..n as u32).map(PartyId).collect();
                vec![IdealEvent::Setup {
                    tokens: tokens.clone(),
                }]
            }
            IdealInput::Register => {
                self.reg[i] = true;
                vec![IdealEvent::Register { party: actor }]
            }
            IdealInput::Unregister => {
                self.reg[i] = false;
                vec![IdealEvent::Unregister { party: actor }]
            }
            IdealInput::Delegate { target } => {
                if self.reg[i] || !self.known(*target) {
                    return vec![];
                }
                self.d[i] = *target;
                vec![IdealEvent::Delegate { party: actor }]
            }
            IdealInput::Undelegate => {
                self.d[i] = actor;
                vec![IdealEvent::Undelegate { party: actor }]
            }
            IdealInput::ElectionSetup { eid, desc } => {
                let n = self.t.len();
                self.elections.insert(
                    *eid,
                    IdealElection {
                        creator: actor,
                        voted: BTreeSet::new(),
                        power: vec![0; n],
                        counters: vec![0; self.num_options],
                        percentages: None,
                    },
                );
                vec![IdealEvent::ElectionSetup {
                    eid: *eid,
                    desc: desc.clone(),
                    creator: actor,
                }]
            }
            IdealInput::ElectionStart { eid } => {
                let Some(e) = self.elections.get_mut(eid) else {
                    return vec![];
                };
                if e.creator != actor {
                    return vec![];
                }
                // Delegators credit their delegate, everyone else themselves;
                // with d_k = k initially both cases credit d_k.
                for (k, dk) in self.d.iter().enumerate() {
                    e.power[dk.index()] += self.t[k];
                }
                vec![IdealEvent::ElectionStart {
                    eid: *eid,
                    party: actor,
                }]
            }
            IdealInput::Vote { eid, option } => {
                if !self.reg[i] || *option >= self.num_options {
                    return vec![];
                }
                let Some(e) = self.elections.get_mut(eid) else {
                    return vec![];
                };
                e.voted.insert(actor);
                e.counters[*option] += e.power[i];
                vec![IdealEvent::Vote {
                    eid: *eid,
                    option: *option,
                    party: actor,
                }]
            }
            IdealInput::Tally { eid } => {
                let Some(e) = self.elections.get_mut(eid) else {
                    return vec![];
                };
                let pct = basis_points(&e.counters);
                e.percentages = Some(pct.clone());
                vec![IdealEvent::Tally {
                    eid: *eid,
                    percentages: pct,
                }]
            }
            IdealInput::Transfer { to, amount } => {
                if !self.known(*to) || self.t[i] < *amount {
                    return vec![];
                }
                self.t[i] -= amount;
                self.t[to.index()] += amount;
                vec![IdealEvent::Transfer {
                    from: actor,
                    to: *to,
                    amount: *amount,
                }]
            }
        }
    }
}
