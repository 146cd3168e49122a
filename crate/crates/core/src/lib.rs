//! Shared domain types and cryptographic primitives for delegated agent access.
//!
//! Every service in the workspace (the key distribution service, the website,
//! the agent client and the scenario harness) builds on the types here. Two
//! injectable capabilities thread through all of them:
//!
//! * [`RandomSource`] supplies every random octet (nonces, keys, tokens), so a
//!   seeded source makes whole runs reproducible.
//! * [`Clock`] supplies the current time, so expiry logic can be driven
//!   without sleeping.

pub mod clock;
pub mod crypto;
mod error;
pub mod names;
pub mod random;
pub mod serde_util;
pub mod validity;

pub use clock::{Clock, ManualClock, SharedClock, SystemClock};
pub use crypto::{
    compute_hmac, constant_time_equal, generate_nonce, generate_session_key, CryptoSpec,
    HmacAlgorithm, HmacTag, KeyMaterial, Nonce, NONCE_DIGITS,
};
pub use error::CoreError;
pub use names::{EntityName, GroupName, TrustLevel};
pub use random::{OsRandom, RandomSource, SeededRandom, SharedRandom};
pub use validity::ValidityWindow;
