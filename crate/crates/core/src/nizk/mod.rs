//! Non-interactive proofs for the three board relations: delegation-vector
//! validity, private-vote validity and correct tally decryption.

mod decryption;
mod delegation;
pub mod forge;
mod proof;
mod sigma;
mod vote;

pub use decryption::{prove_decryption, verify_decryption, DecryptionProof, DecryptionStatement};
pub use delegation::{prove_delegation, verify_delegation, DelegationStatement, DelegationWitness};
pub use proof::{fs_challenge, Proof, RelationTag};
pub use sigma::{simulate_or_branch, BranchTranscript, DleqStatement};
pub use vote::{prove_vote, verify_vote, VoteStatement, VoteWitness};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NizkError {
    #[error("witness does not satisfy the statement")]
    WitnessMismatch,
    #[error("malformed statement: {0}")]
    InvalidStatement(&'static str),
}
