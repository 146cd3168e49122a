//! Keyed hashing, key generation and login nonces.

use std::fmt;

use hmac::{Hmac, KeyInit, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use subtle::ConstantTimeEq;

use crate::{CoreError, RandomSource};

pub const NONCE_DIGITS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HmacAlgorithm {
    #[serde(rename = "HMAC-SHA256")]
    HmacSha256,
}

impl HmacAlgorithm {
    pub fn digest_len(self) -> usize {
        match self {
            HmacAlgorithm::HmacSha256 => 32,
        }
    }
}

/// Cipher-suite parameters attached to distribution keys and policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CryptoSpec {
    pub hmac_algorithm: HmacAlgorithm,
    pub key_length_bytes: usize,
}

impl CryptoSpec {
    pub const MIN_KEY_LENGTH: usize = 16;

    pub fn new(hmac_algorithm: HmacAlgorithm, key_length_bytes: usize) -> Result<Self, CoreError> {
        let spec = Self {
            hmac_algorithm,
            key_length_bytes,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.key_length_bytes < Self::MIN_KEY_LENGTH {
            return Err(CoreError::CryptoSpec(format!(
                "key length {} is below the minimum of {} bytes",
                self.key_length_bytes,
                Self::MIN_KEY_LENGTH
            )));
        }
        Ok(())
    }
}

impl Default for CryptoSpec {
    fn default() -> Self {
        Self {
            hmac_algorithm: HmacAlgorithm::HmacSha256,
            key_length_bytes: 32,
        }
    }
}

/// Secret key bytes. `Debug` is redacted; the hex serde form exists only so
/// keys can cross the signed Auth channel and the Auth event log.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeyMaterial(#[serde(with = "crate::serde_util::hex_bytes")] Vec<u8>);

impl KeyMaterial {
    pub fn from_bytes(bytes: impl Into<Vec<u8>>) -> Self {
        Self(bytes.into())
    }

    pub fn from_hex(s: &str) -> Result<Self, CoreError> {
        hex::decode(s.trim())
            .map(Self)
            .map_err(|e| CoreError::Hex(e.to_string()))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_spec(&self, spec: &CryptoSpec) -> Result<(), CoreError> {
        if self.0.len() != spec.key_length_bytes {
            return Err(CoreError::KeyLength {
                expected: spec.key_length_bytes,
                actual: self.0.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for KeyMaterial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeyMaterial(<{} bytes redacted>)", self.0.len())
    }
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HmacTag(#[serde(with = "crate::serde_util::hex_bytes")] Vec<u8>);

impl HmacTag {
    pub fn from_bytes(bytes: impl Into<Vec<u8>>) -> Self {
        Self(bytes.into())
    }

    pub fn from_hex(s: &str) -> Result<Self, CoreError> {
        hex::decode(s.trim())
            .map(Self)
            .map_err(|e| CoreError::Hex(e.to_string()))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Constant-time comparison.
    pub fn matches(&self, other: &HmacTag) -> bool {
        constant_time_equal(&self.0, &other.0)
    }
}

impl fmt::Debug for HmacTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HmacTag({})", self.to_hex())
    }
}

/// A login challenge of exactly 32 decimal digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Nonce(String);

impl Nonce {
    pub fn parse(s: impl Into<String>) -> Result<Self, CoreError> {
        let s = s.into();
        if s.len() != NONCE_DIGITS || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(CoreError::Nonce(format!(
                "expected {NONCE_DIGITS} decimal digits, got {s:?}"
            )));
        }
        Ok(Self(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }
}

impl TryFrom<String> for Nonce {
    type Error = CoreError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::parse(s)
    }
}

impl From<Nonce> for String {
    fn from(n: Nonce) -> String {
        n.0
    }
}

impl fmt::Display for Nonce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Draws 32 octets and maps each to one digit (`octet mod 10`).
pub fn generate_nonce(rng: &dyn RandomSource) -> Result<Nonce, CoreError> {
    let mut raw = [0u8; NONCE_DIGITS];
    rng.try_fill(&mut raw)?;
    let digits = raw.iter().map(|b| char::from(b'0' + b % 10)).collect();
    Ok(Nonce(digits))
}

/// HMAC over `message`. The key must have the length the spec declares.
pub fn compute_hmac(
    spec: &CryptoSpec,
    key: &KeyMaterial,
    message: &[u8],
) -> Result<HmacTag, CoreError> {
    key.check_spec(spec)?;
    match spec.hmac_algorithm {
        HmacAlgorithm::HmacSha256 => {
            let mut mac = <Hmac<Sha256> as KeyInit>::new_from_slice(key.as_bytes())
                .expect("HMAC accepts keys of any length");
            mac.update(message);
            Ok(HmacTag(mac.finalize().into_bytes().to_vec()))
        }
    }
}

pub fn generate_session_key(
    spec: &CryptoSpec,
    rng: &dyn RandomSource,
) -> Result<KeyMaterial, CoreError> {
    spec.validate()?;
    Ok(KeyMaterial(rng.bytes(spec.key_length_bytes)?))
}

/// Equal length and equal content; timing does not depend on where the
/// first mismatch occurs.
pub fn constant_time_equal(a: &[u8], b: &[u8]) -> bool {
    a.ct_eq(b).into()
}
