//! Group arithmetic, exponential ElGamal, signatures and hashing.

mod elgamal;
mod group;
mod hash;
mod signature;

use thiserror::Error;

pub use elgamal::{
    ct_add, ct_neg, Ciphertext, DlogTable, EncKeyPair, EncPublicKey, EncSecretKey, Plaintext,
};
pub use group::{random_nonzero_scalar, scalar_from_i64, GroupParams};
pub use hash::{hash, hash_labelled, Digest, DomainTag};
pub(crate) use hash::hash_raw;
pub use signature::{sig_verify, SigKeyPair, SigVerifyingKey, Signature};

pub use curve25519_dalek::ristretto::RistrettoPoint;
pub use curve25519_dalek::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("message {m} outside [-{max_total}, {max_total}]")]
    MessageOutOfRange { m: i64, max_total: u64 },
    #[error("no discrete log in [-{bound}, {bound}]")]
    DlogNotFound { bound: u64 },
    #[error("unknown hash domain tag {0:?}")]
    UnknownDomainTag(String),
}
