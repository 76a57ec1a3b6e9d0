use std::fmt;

use serde::{Deserialize, Serialize};

use crate::crypto::DomainTag;
use crate::encoding::{Canonical, DecodeError, Reader, Writer};

/// Index of a party in the token list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartyId(pub u32);

impl PartyId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for PartyId {
    fn from(v: u32) -> Self {
        PartyId(v)
    }
}

impl Canonical for PartyId {
    fn encode(&self, w: &mut Writer) {
        w.u32(self.0);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(PartyId(r.u32()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElectionId(pub u64);

impl fmt::Display for ElectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub const DEFAULT_NUM_OPTIONS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Total token supply `M`; bounds every plaintext.
    pub max_total: u64,
    pub num_options: usize,
    pub domain_tags: Vec<String>,
}

impl SystemParams {
    pub fn new(max_total: u64, num_options: usize) -> Result<Self, String> {
        let p = SystemParams {
            max_total,
            num_options,
            domain_tags: DomainTag::ALL.iter().map(|t| t.label().to_owned()).collect(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_total < 1 {
            return Err("total token supply must be at least 1".into());
        }
        if self.num_options < 2 {
            return Err("at least two vote options are required".into());
        }
        Ok(())
    }

    pub fn option_label(&self, option: usize) -> String {
        option_label(self.num_options, option)
    }
}

/// `yes`/`no`/`abstain` for the default three options, `option<i>` otherwise.
pub fn option_label(num_options: usize, option: usize) -> String {
    match (num_options, option) {
        (3, 0) => "yes".into(),
        (3, 1) => "no".into(),
        (3, 2) => "abstain".into(),
        _ => format!("option{option}"),
    }
}

/// Parses an option by label or index.
pub fn parse_option(num_options: usize, s: &str) -> Option<usize> {
    let s = s.trim().to_ascii_lowercase();
    if let Ok(i) = s.parse::<usize>() {
        return (i < num_options).then_some(i);
    }
    (0..num_options).find(|i| option_label(num_options, *i) == s)
}
