//! Exponential ElGamal: `Enc(pk, m; r) = (r·G, m·G + r·pk)`.
//!
//! The message lives in the exponent, so ciphertexts add homomorphically and
//! decryption ends with a bounded discrete-log search ([`DlogTable`]).

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT as G;
use curve25519_dalek::ristretto::RistrettoPoint;
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::Identity;
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::group::{random_nonzero_scalar, scalar_from_i64};
use super::CryptoError;
use crate::encoding::{self, Canonical, DecodeError, Reader, Writer};

/// A plaintext in `[-M, M]`, `M` being the total token supply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Plaintext(i64);

impl Plaintext {
    pub fn new(m: i64, max_total: u64) -> Result<Self, CryptoError> {
        if m.unsigned_abs() > max_total {
            return Err(CryptoError::MessageOutOfRange { m, max_total });
        }
        Ok(Plaintext(m))
    }

    pub const ZERO: Plaintext = Plaintext(0);

    pub fn value(self) -> i64 {
        self.0
    }

    fn exponent(self) -> Scalar {
        scalar_from_i64(self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct EncPublicKey(pub(crate) RistrettoPoint);

impl EncPublicKey {
    pub fn point(&self) -> RistrettoPoint {
        self.0
    }

    pub fn encrypt(&self, m: Plaintext, r: &Scalar) -> Ciphertext {
        Ciphertext {
            c1: G * r,
            c2: G * m.exponent() + self.0 * r,
        }
    }

    pub fn encrypt_random<R: RngCore + CryptoRng>(&self, m: Plaintext, rng: &mut R) -> (Ciphertext, Scalar) {
        let r = Scalar::random(rng);
        (self.encrypt(m, &r), r)
    }

    /// `ct + Enc(pk, 0; r)`: same plaintext, fresh-looking ciphertext.
    pub fn rerandomize(&self, ct: &Ciphertext, r: &Scalar) -> Ciphertext {
        *ct + self.encrypt(Plaintext::ZERO, r)
    }
}

impl fmt::Debug for EncPublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EncPublicKey({})", hex::encode(&encoding::encode_point(&self.0)[..8]))
    }
}

impl Canonical for EncPublicKey {
    fn encode(&self, w: &mut Writer) {
        w.point(&self.0);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(EncPublicKey(r.point()?))
    }
}

crate::impl_hex_serde!(EncPublicKey);

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncSecretKey(#[serde(with = "crate::encoding::hex_scalar")] pub(crate) Scalar);

impl EncSecretKey {
    pub fn scalar(&self) -> &Scalar {
        &self.0
    }

    /// `c2 - sk·c1`, i.e. `m·G`.
    pub fn decrypt_to_point(&self, ct: &Ciphertext) -> RistrettoPoint {
        ct.c2 - ct.c1 * self.0
    }

    pub fn decrypt(&self, ct: &Ciphertext, table: &DlogTable) -> Result<i64, CryptoError> {
        table
            .solve(&self.decrypt_to_point(ct))
            .ok_or(CryptoError::DlogNotFound { bound: table.bound() })
    }
}

impl fmt::Debug for EncSecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("EncSecretKey(..)")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncKeyPair {
    pub pk: EncPublicKey,
    pub sk: EncSecretKey,
}

impl EncKeyPair {
    /// `sk` uniform in `[1, q-1]`, `pk = sk·G`.
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        Self::from_secret(random_nonzero_scalar(rng))
    }

    pub fn from_secret(sk: Scalar) -> Self {
        EncKeyPair {
            pk: EncPublicKey(G * sk),
            sk: EncSecretKey(sk),
        }
    }

    pub fn decrypt(&self, ct: &Ciphertext, table: &DlogTable) -> Result<i64, CryptoError> {
        self.sk.decrypt(ct, table)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Ciphertext {
    pub c1: RistrettoPoint,
    pub c2: RistrettoPoint,
}

impl Ciphertext {
    /// `Enc(pk, 0; 0)` for any key: both components are the identity.
    pub fn zero() -> Self {
        Ciphertext {
            c1: RistrettoPoint::identity(),
            c2: RistrettoPoint::identity(),
        }
    }

    pub fn to_bytes(&self) -> [u8; 64] {
        let mut out = [0u8; 64];
        out[..32].copy_from_slice(&encoding::encode_point(&self.c1));
        out[32..].copy_from_slice(&encoding::encode_point(&self.c2));
        out
    }

    pub fn sum<'a>(cts: impl IntoIterator<Item = &'a Ciphertext>) -> Ciphertext {
        cts.into_iter().fold(Ciphertext::zero(), |acc, ct| acc + *ct)
    }
}

impl Add for Ciphertext {
    type Output = Ciphertext;

    fn add(self, rhs: Ciphertext) -> Ciphertext {
        Ciphertext {
            c1: self.c1 + rhs.c1,
            c2: self.c2 + rhs.c2,
        }
    }
}

impl Neg for Ciphertext {
    type Output = Ciphertext;

    fn neg(self) -> Ciphertext {
        Ciphertext {
            c1: -self.c1,
            c2: -self.c2,
        }
    }
}

impl Sub for Ciphertext {
    type Output = Ciphertext;

    fn sub(self, rhs: Ciphertext) -> Ciphertext {
        self + (-rhs)
    }
}

impl fmt::Debug for Ciphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.to_bytes();
        write!(f, "Ciphertext({}/{})", hex::encode(&b[..6]), hex::encode(&b[32..38]))
    }
}

impl Canonical for Ciphertext {
    fn encode(&self, w: &mut Writer) {
        w.point(&self.c1).point(&self.c2);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Ciphertext {
            c1: r.point()?,
            c2: r.point()?,
        })
    }
}

crate::impl_hex_serde!(Ciphertext);

/// Homomorphic addition.
pub fn ct_add(a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
    *a + *b
}

/// Homomorphic negation.
pub fn ct_neg(a: &Ciphertext) -> Ciphertext {
    -*a
}

/// Baby-step/giant-step table for discrete logs in `[-M, M]`.
///
/// The search shifts the target by `M·G` so it runs over `[0, 2M]` with
/// `⌈√(2M+1)⌉` baby steps.
#[derive(Clone)]
pub struct DlogTable {
    bound: u64,
    step: u64,
    baby: HashMap<[u8; 32], u64>,
    giant: RistrettoPoint,
    shift: RistrettoPoint,
}

impl DlogTable {
    pub fn new(bound: u64) -> Self {
        let span = 2 * bound + 1;
        let step = ceil_sqrt(span);
        let mut baby = HashMap::with_capacity(step as usize);
        let mut acc = RistrettoPoint::identity();
        for j in 0..step {
            baby.insert(encoding::encode_point(&acc), j);
            acc += G;
        }
        DlogTable {
            bound,
            step,
            baby,
            giant: -(G * Scalar::from(step)),
            shift: G * Scalar::from(bound),
        }
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn table_size(&self) -> u64 {
        self.step
    }

    /// Returns `m ∈ [-M, M]` with `m·G = point`, if any.
    pub fn solve(&self, point: &RistrettoPoint) -> Option<i64> {
        let top = 2 * self.bound;
        let mut q = point + self.shift;
        let mut i = 0u64;
        while i * self.step <= top {
            if let Some(j) = self.baby.get(&encoding::encode_point(&q)) {
                let shifted = i * self.step + j;
                if shifted <= top {
                    return Some(shifted as i64 - self.bound as i64);
                }
                return None;
            }
            q += self.giant;
            i += 1;
        }
        None
    }
}

impl fmt::Debug for DlogTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DlogTable")
            .field("bound", &self.bound)
            .field("step", &self.step)
            .finish()
    }
}

fn ceil_sqrt(n: u64) -> u64 {
    let mut s = (n as f64).sqrt() as u64;
    while s * s < n {
        s += 1;
    }
    while s > 1 && (s - 1) * (s - 1) >= n {
        s -= 1;
    }
    s.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    const M: u64 = 100;

    fn setup() -> (EncKeyPair, DlogTable, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        (EncKeyPair::generate(&mut rng), DlogTable::new(M), rng)
    }

    fn pt(m: i64) -> Plaintext {
        Plaintext::new(m, M).unwrap()
    }

    #[test]
    fn keygen_relation_and_identity_case() {
        let (kp, _, mut rng) = setup();
        assert_eq!(kp.pk.0, G * kp.sk.0);
        assert_eq!(EncKeyPair::from_secret(Scalar::ONE).pk.0, G);
        let sks: std::collections::HashSet<_> = (0..100)
            .map(|_| EncKeyPair::generate(&mut rng).sk.0.to_bytes())
            .collect();
        assert_eq!(sks.len(), 100);
    }

    #[test]
    fn zero_message_zero_randomness_is_identity() {
        let (kp, table, _) = setup();
        let ct = kp.pk.encrypt(Plaintext::ZERO, &Scalar::ZERO);
        assert_eq!(ct, Ciphertext::zero());
        assert_eq!(kp.decrypt(&Ciphertext::zero(), &table).unwrap(), 0);
    }

    #[test]
    fn deterministic_registration_encryption() {
        let (kp, _, _) = setup();
        let ct = kp.pk.encrypt(pt(5), &Scalar::ZERO);
        assert_eq!(ct.c1, RistrettoPoint::identity());
        assert_eq!(ct.c2, G * Scalar::from(5u64));
        assert_eq!(ct.to_bytes(), kp.pk.encrypt(pt(5), &Scalar::ZERO).to_bytes());
    }

    #[test]
    fn out_of_range_message_rejected() {
        assert_eq!(
            Plaintext::new(101, M),
            Err(CryptoError::MessageOutOfRange { m: 101, max_total: M })
        );
        assert!(Plaintext::new(-100, M).is_ok());
    }

    #[test]
    fn round_trip_random_r() {
        let (kp, table, mut rng) = setup();
        for _ in 0..100 {
            let (ct, _) = kp.pk.encrypt_random(pt(5), &mut rng);
            assert_eq!(kp.decrypt(&ct, &table).unwrap(), 5);
        }
    }

    #[test]
    fn negative_plaintexts_decrypt() {
        let (kp, table, _) = setup();
        for t in 1..=20i64 {
            let ct = kp.pk.encrypt(pt(-t), &Scalar::ZERO);
            // Oracle: direct exponent check against g^{-t}.
            assert_eq!(ct.c2, -(G * Scalar::from(t as u64)));
            assert_eq!(kp.decrypt(&ct, &table).unwrap(), -t);
        }
    }

    #[test]
    fn additive_homomorphism() {
        let (kp, table, mut rng) = setup();
        let (a, _) = kp.pk.encrypt_random(pt(2), &mut rng);
        let (b, _) = kp.pk.encrypt_random(pt(3), &mut rng);
        assert_eq!(kp.decrypt(&ct_add(&a, &b), &table).unwrap(), 5);

        let ms: Vec<i64> = (0..10).map(|i| (i * 7 % 11) - 3).collect();
        let total = ms
            .iter()
            .map(|m| kp.pk.encrypt_random(pt(*m), &mut rng).0)
            .fold(Ciphertext::zero(), |acc, ct| acc + ct);
        assert_eq!(kp.decrypt(&total, &table).unwrap(), ms.iter().sum::<i64>());
    }

    #[test]
    fn identity_and_associativity() {
        let (kp, _, mut rng) = setup();
        let cts: Vec<_> = (0..3).map(|i| kp.pk.encrypt_random(pt(i), &mut rng).0).collect();
        assert_eq!(ct_add(&cts[0], &kp.pk.encrypt(Plaintext::ZERO, &Scalar::ZERO)), cts[0]);
        assert_eq!((cts[0] + cts[1]) + cts[2], cts[0] + (cts[1] + cts[2]));
    }

    #[test]
    fn negation() {
        let (kp, table, mut rng) = setup();
        let (ct, _) = kp.pk.encrypt_random(pt(7), &mut rng);
        assert_eq!(kp.decrypt(&(ct + ct_neg(&ct)), &table).unwrap(), 0);
        assert_eq!(kp.decrypt(&ct_neg(&ct), &table).unwrap(), -7);
        let det = kp.pk.encrypt(pt(9), &Scalar::ZERO);
        assert_eq!(ct_neg(&det), kp.pk.encrypt(pt(-9), &Scalar::ZERO));
    }

    #[test]
    fn rerandomization() {
        let (kp, table, mut rng) = setup();
        let (ct, _) = kp.pk.encrypt_random(pt(11), &mut rng);
        assert_eq!(kp.pk.rerandomize(&ct, &Scalar::ZERO), ct);
        let r = random_nonzero_scalar(&mut rng);
        let fresh = kp.pk.rerandomize(&ct, &r);
        assert_ne!(fresh, ct);
        assert_eq!(kp.decrypt(&fresh, &table).unwrap(), 11);

        let mut chained = ct;
        for _ in 0..5 {
            chained = kp.pk.rerandomize(&chained, &random_nonzero_scalar(&mut rng));
        }
        assert_eq!(kp.decrypt(&chained, &table).unwrap(), 11);
    }

    #[test]
    fn dlog_out_of_range_is_reported() {
        let (kp, table, _) = setup();
        let big = EncKeyPair::from_secret(kp.sk.0).pk.encrypt(Plaintext::new(101, 1000).unwrap(), &Scalar::ZERO);
        assert_eq!(
            kp.decrypt(&big, &table),
            Err(CryptoError::DlogNotFound { bound: M })
        );
    }

    #[test]
    fn dlog_table_covers_whole_range_exhaustively() {
        for bound in [0u64, 1, 2, 3, 10, 17] {
            let table = DlogTable::new(bound);
            assert!(table.table_size() * table.table_size() >= 2 * bound + 1);
            for m in -(bound as i64)..=(bound as i64) {
                assert_eq!(table.solve(&(G * scalar_from_i64(m))), Some(m), "bound {bound} m {m}");
            }
            let outside = bound as i64 + 1;
            assert_eq!(table.solve(&(G * scalar_from_i64(outside))), None);
            assert_eq!(table.solve(&(G * scalar_from_i64(-outside))), None);
        }
    }

    #[test]
    fn ceil_sqrt_matches_definition() {
        for n in 1..2000u64 {
            let s = ceil_sqrt(n);
            assert!(s * s >= n && (s - 1) * (s - 1) < n, "n = {n}");
        }
    }
}
