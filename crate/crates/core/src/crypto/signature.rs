//! Ed25519 signatures for the authority's token-root publications.

use std::fmt;

use ed25519_dalek::{Signer, SigningKey, VerifyingKey};
use rand::{CryptoRng, RngCore};

use crate::encoding::{Canonical, DecodeError, Reader, Writer};

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct SigVerifyingKey(VerifyingKey);

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Signature(ed25519_dalek::Signature);

#[derive(Clone)]
pub struct SigKeyPair {
    pub vk: SigVerifyingKey,
    sk: SigningKey,
}

impl SigKeyPair {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let sk = SigningKey::generate(rng);
        SigKeyPair {
            vk: SigVerifyingKey(sk.verifying_key()),
            sk,
        }
    }

    pub fn sign(&self, msg: &[u8]) -> Signature {
        Signature(self.sk.sign(msg))
    }

    pub fn secret_bytes(&self) -> [u8; 32] {
        self.sk.to_bytes()
    }

    pub fn from_secret_bytes(bytes: &[u8; 32]) -> Self {
        let sk = SigningKey::from_bytes(bytes);
        SigKeyPair {
            vk: SigVerifyingKey(sk.verifying_key()),
            sk,
        }
    }
}

impl fmt::Debug for SigKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SigKeyPair").field("vk", &self.vk).finish_non_exhaustive()
    }
}

impl SigVerifyingKey {
    /// Strict verification: rejects malleable and small-order encodings.
    pub fn verify(&self, msg: &[u8], sig: &Signature) -> bool {
        self.0.verify_strict(msg, &sig.0).is_ok()
    }
}

pub fn sig_verify(vk: &SigVerifyingKey, msg: &[u8], sig: &Signature) -> bool {
    vk.verify(msg, sig)
}

impl fmt::Debug for SigVerifyingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SigVerifyingKey({})", hex::encode(&self.0.to_bytes()[..8]))
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({})", hex::encode(&self.0.to_bytes()[..8]))
    }
}

impl Canonical for SigVerifyingKey {
    fn encode(&self, w: &mut Writer) {
        w.raw(self.0.as_bytes());
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let bytes: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        VerifyingKey::from_bytes(&bytes)
            .map(SigVerifyingKey)
            .map_err(|_| DecodeError::Invalid("verification key"))
    }
}

impl Canonical for Signature {
    fn encode(&self, w: &mut Writer) {
        w.raw(&self.0.to_bytes());
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let bytes: [u8; 64] = r.take(64)?.try_into().expect("64 bytes");
        Ok(Signature(ed25519_dalek::Signature::from_bytes(&bytes)))
    }
}

crate::impl_hex_serde!(SigVerifyingKey);
crate::impl_hex_serde!(Signature);
