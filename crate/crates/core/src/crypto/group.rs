use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::RistrettoPoint;
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::Identity;
use rand::{CryptoRng, RngCore};

/// The prime-order group every ciphertext and proof lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupParams {
    pub group_id: &'static str,
    pub generator: RistrettoPoint,
}

impl GroupParams {
    pub const RISTRETTO255: &'static str = "ristretto255";

    pub fn ristretto255() -> Self {
        GroupParams {
            group_id: Self::RISTRETTO255,
            generator: RISTRETTO_BASEPOINT_POINT,
        }
    }

    /// Group order `q` as big-endian bytes.
    pub fn order_be(&self) -> [u8; 32] {
        // q - 1 is representable as a scalar; q itself is not.
        let mut le = (-Scalar::ONE).to_bytes();
        let mut carry = 1u16;
        for b in le.iter_mut() {
            let v = *b as u16 + carry;
            *b = v as u8;
            carry = v >> 8;
        }
        le.reverse();
        le
    }

    pub fn identity(&self) -> RistrettoPoint {
        RistrettoPoint::identity()
    }
}

impl Default for GroupParams {
    fn default() -> Self {
        Self::ristretto255()
    }
}

/// Uniform scalar in `[1, q-1]`.
pub fn random_nonzero_scalar<R: RngCore + CryptoRng>(rng: &mut R) -> Scalar {
    loop {
        let s = Scalar::random(rng);
        if s != Scalar::ZERO {
            return s;
        }
    }
}

/// Maps a signed integer into the scalar field; negatives become additive inverses.
pub fn scalar_from_i64(m: i64) -> Scalar {
    let abs = Scalar::from(m.unsigned_abs());
    if m < 0 {
        -abs
    } else {
        abs
    }
}
