use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::CoreError;

/// Relative validity (counted from first use) plus a hard absolute deadline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityWindow {
    #[serde(rename = "relative_validity_secs", with = "crate::serde_util::duration_secs")]
    pub relative_validity: Duration,
    pub absolute_expiration: DateTime<Utc>,
}

impl ValidityWindow {
    pub fn new(
        relative_validity: Duration,
        absolute_expiration: DateTime<Utc>,
        now: DateTime<Utc>,
    ) -> Result<Self, CoreError> {
        if relative_validity.is_zero() {
            return Err(CoreError::Validity("relative validity must be positive".into()));
        }
        if absolute_expiration <= now {
            return Err(CoreError::Validity("absolute expiration must be in the future".into()));
        }
        Ok(Self {
            relative_validity,
            absolute_expiration,
        })
    }

    /// Expired at and after the deadline.
    pub fn is_expired(&self, now: DateTime<Utc>) -> bool {
        now >= self.absolute_expiration
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_relative_and_past_deadline() {
        let now = DateTime::from_timestamp(1_000, 0).unwrap();
        let later = DateTime::from_timestamp(2_000, 0).unwrap();
        assert!(ValidityWindow::new(Duration::from_secs(5), later, now).is_ok());
        assert!(ValidityWindow::new(Duration::ZERO, later, now).is_err());
        assert!(ValidityWindow::new(Duration::from_secs(5), now, now).is_err());
        let w = ValidityWindow::new(Duration::from_secs(5), later, now).unwrap();
        assert!(!w.is_expired(now));
        assert!(w.is_expired(later));
    }
}
