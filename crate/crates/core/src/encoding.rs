//! Canonical byte encodings.
//!
//! Every digest, delegation identifier and Fiat–Shamir challenge is computed
//! over these encodings, so they must be bit-stable:
//!
//! * group element: 32-byte canonical Ristretto encoding
//! * scalar: 32 bytes, big-endian, canonical (`< q`)
//! * integers: big-endian `u32` / `u64`
//! * vectors: `u32` big-endian length prefix followed by the items
//!
//! JSON surfaces carry these bytes as lowercase hex.

use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("unexpected end of input")]
    Truncated,
    #[error("trailing bytes after value")]
    TrailingBytes,
    #[error("byte string is not a valid group element")]
    InvalidElement,
    #[error("scalar is not canonical")]
    NonCanonicalScalar,
    #[error("invalid value: {0}")]
    Invalid(&'static str),
    #[error("bad hex: {0}")]
    Hex(String),
}

pub fn encode_point(point: &RistrettoPoint) -> [u8; 32] {
    point.compress().to_bytes()
}

pub fn decode_point(bytes: &[u8; 32]) -> Result<RistrettoPoint, DecodeError> {
    CompressedRistretto(*bytes)
        .decompress()
        .ok_or(DecodeError::InvalidElement)
}

pub fn encode_scalar(scalar: &Scalar) -> [u8; 32] {
    let mut bytes = scalar.to_bytes();
    bytes.reverse();
    bytes
}

pub fn decode_scalar(bytes: &[u8; 32]) -> Result<Scalar, DecodeError> {
    let mut le = *bytes;
    le.reverse();
    Option::from(Scalar::from_canonical_bytes(le)).ok_or(DecodeError::NonCanonicalScalar)
}

/// Append-only canonical encoder.
#[derive(Debug, Default, Clone)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn i64(&mut self, v: i64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn len(&mut self, n: usize) -> &mut Self {
        let n = u32::try_from(n).expect("vector longer than u32::MAX");
        self.u32(n)
    }

    pub fn raw(&mut self, bytes: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(bytes);
        self
    }

    /// Length-prefixed byte string.
    pub fn bytes(&mut self, bytes: &[u8]) -> &mut Self {
        self.len(bytes.len()).raw(bytes)
    }

    pub fn point(&mut self, p: &RistrettoPoint) -> &mut Self {
        self.raw(&encode_point(p))
    }

    pub fn scalar(&mut self, s: &Scalar) -> &mut Self {
        self.raw(&encode_scalar(s))
    }

    pub fn points(&mut self, ps: &[RistrettoPoint]) -> &mut Self {
        self.len(ps.len());
        for p in ps {
            self.point(p);
        }
        self
    }

    pub fn scalars(&mut self, ss: &[Scalar]) -> &mut Self {
        self.len(ss.len());
        for s in ss {
            self.scalar(s);
        }
        self
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.buf
    }
}

/// Cursor over a canonical encoding.
#[derive(Debug)]
pub struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.buf.len() < n {
            return Err(DecodeError::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    pub fn i64(&mut self) -> Result<i64, DecodeError> {
        Ok(i64::from_be_bytes(self.array()?))
    }

    /// Reads a length prefix, refusing lengths that cannot fit in the rest of
    /// the input given `item_size` bytes per item.
    pub fn len(&mut self, item_size: usize) -> Result<usize, DecodeError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(item_size) > self.buf.len() {
            return Err(DecodeError::Truncated);
        }
        Ok(n)
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], DecodeError> {
        let n = self.len(1)?;
        self.take(n)
    }

    pub fn point(&mut self) -> Result<RistrettoPoint, DecodeError> {
        decode_point(&self.array()?)
    }

    pub fn scalar(&mut self) -> Result<Scalar, DecodeError> {
        decode_scalar(&self.array()?)
    }

    pub fn points(&mut self) -> Result<Vec<RistrettoPoint>, DecodeError> {
        let n = self.len(32)?;
        (0..n).map(|_| self.point()).collect()
    }

    pub fn scalars(&mut self) -> Result<Vec<Scalar>, DecodeError> {
        let n = self.len(32)?;
        (0..n).map(|_| self.scalar()).collect()
    }

    pub fn remaining(&self) -> usize {
        self.buf.len()
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(DecodeError::TrailingBytes)
        }
    }
}

/// Types with a canonical byte encoding.
pub trait Canonical: Sized {
    fn encode(&self, w: &mut Writer);
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError>;

    fn to_canonical_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode(&mut w);
        w.finish()
    }

    /// Decodes a complete value; trailing bytes are an error.
    fn from_canonical_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let v = Self::decode(&mut r)?;
        r.finish()?;
        Ok(v)
    }
}

impl<T: Canonical> Canonical for Vec<T> {
    fn encode(&self, w: &mut Writer) {
        w.len(self.len());
        for item in self {
            item.encode(w);
        }
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let n = r.len(1)?;
        (0..n).map(|_| T::decode(r)).collect()
    }
}

pub fn from_hex<T: Canonical>(s: &str) -> Result<T, DecodeError> {
    let bytes = hex::decode(s).map_err(|e| DecodeError::Hex(e.to_string()))?;
    T::from_canonical_bytes(&bytes)
}

pub fn to_hex<T: Canonical>(v: &T) -> String {
    hex::encode(v.to_canonical_bytes())
}

/// Implements `Serialize`/`Deserialize` as a hex string of the canonical bytes.
#[macro_export]
macro_rules! impl_hex_serde {
    ($ty:ty) => {
        impl serde::Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&$crate::encoding::to_hex(self))
            }
        }

        impl<'de> serde::Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = <String as serde::Deserialize>::deserialize(d)?;
                $crate::encoding::from_hex(&s).map_err(serde::de::Error::custom)
            }
        }
    };
}

/// Serde adapter for bare scalars (hex of the big-endian encoding).
pub mod hex_scalar {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: &Scalar, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&hex::encode(encode_scalar(s)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Scalar, D::Error> {
        let s = String::deserialize(d)?;
        let bytes: [u8; 32] = hex::decode(&s)
            .map_err(serde::de::Error::custom)?
            .try_into()
            .map_err(|_| serde::de::Error::custom("scalar must be 32 bytes"))?;
        decode_scalar(&bytes).map_err(serde::de::Error::custom)
    }
}

pub mod hex_scalars {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Scalar], ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_seq(v.iter().map(|s| hex::encode(encode_scalar(s))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Scalar>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| {
                let bytes: [u8; 32] = hex::decode(s)
                    .map_err(serde::de::Error::custom)?
                    .try_into()
                    .map_err(|_| serde::de::Error::custom("scalar must be 32 bytes"))?;
                decode_scalar(&bytes).map_err(serde::de::Error::custom)
            })
            .collect()
    }
}
