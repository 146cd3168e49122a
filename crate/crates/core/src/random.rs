use std::sync::{Arc, Mutex};

use rand::rngs::OsRng;
use rand::{RngCore, SeedableRng, TryRngCore};
use rand_chacha::ChaCha20Rng;

use crate::CoreError;

/// Source of random octets. Implementations must be safe to share between
/// concurrent request handlers.
pub trait RandomSource: Send + Sync {
    fn try_fill(&self, dest: &mut [u8]) -> Result<(), CoreError>;

    fn bytes(&self, len: usize) -> Result<Vec<u8>, CoreError> {
        let mut buf = vec![0u8; len];
        self.try_fill(&mut buf)?;
        Ok(buf)
    }
}

pub type SharedRandom = Arc<dyn RandomSource>;

/// Operating system CSPRNG.
#[derive(Debug, Default, Clone, Copy)]
pub struct OsRandom;

impl RandomSource for OsRandom {
    fn try_fill(&self, dest: &mut [u8]) -> Result<(), CoreError> {
        OsRng
            .try_fill_bytes(dest)
            .map_err(|e| CoreError::Entropy(e.to_string()))
    }
}

/// Deterministic ChaCha20 stream for reproducible runs and tests.
#[derive(Debug)]
pub struct SeededRandom {
    rng: Mutex<ChaCha20Rng>,
}

impl SeededRandom {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Mutex::new(ChaCha20Rng::seed_from_u64(seed)),
        }
    }
}

impl RandomSource for SeededRandom {
    fn try_fill(&self, dest: &mut [u8]) -> Result<(), CoreError> {
        self.rng.lock().unwrap().fill_bytes(dest);
        Ok(())
    }
}
