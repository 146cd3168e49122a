use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::CoreError;

/// Unique identifier of a registered principal (user, agent or website).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EntityName(String);

impl EntityName {
    pub fn new(value: impl Into<String>) -> Result<Self, CoreError> {
        let value = value.into();
        if value.is_empty() {
            return Err(CoreError::Name(value, "must not be empty"));
        }
        if value.chars().any(|c| c.is_control() || c.is_whitespace()) {
            return Err(CoreError::Name(value, "must contain printable characters only"));
        }
        Ok(Self(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Name of an entity group, e.g. `Users`, `Websites` or `HighTrustAgents`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GroupName(String);

impl GroupName {
    pub const USERS: &'static str = "Users";
    pub const WEBSITES: &'static str = "Websites";

    pub fn new(value: impl Into<String>) -> Result<Self, CoreError> {
        let value = value.into();
        if value.is_empty() {
            return Err(CoreError::Name(value, "must not be empty"));
        }
        if value.chars().any(char::is_control) {
            return Err(CoreError::Name(value, "must contain printable characters only"));
        }
        Ok(Self(value))
    }

    pub fn users() -> Self {
        Self(Self::USERS.to_owned())
    }

    pub fn websites() -> Self {
        Self(Self::WEBSITES.to_owned())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

macro_rules! string_newtype_impls {
    ($ty:ident) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl FromStr for $ty {
            type Err = CoreError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::new(s)
            }
        }

        impl TryFrom<String> for $ty {
            type Error = CoreError;
            fn try_from(s: String) -> Result<Self, Self::Error> {
                Self::new(s)
            }
        }

        impl From<$ty> for String {
            fn from(v: $ty) -> String {
                v.0
            }
        }

        impl AsRef<str> for $ty {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }
    };
}

string_newtype_impls!(EntityName);
string_newtype_impls!(GroupName);

/// Trust classification of an agent. Each level corresponds to exactly one
/// agent group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrustLevel {
    High,
    Medium,
    Low,
}

impl TrustLevel {
    pub const ALL: [TrustLevel; 3] = [TrustLevel::High, TrustLevel::Medium, TrustLevel::Low];

    pub fn group_str(self) -> &'static str {
        match self {
            TrustLevel::High => "HighTrustAgents",
            TrustLevel::Medium => "MediumTrustAgents",
            TrustLevel::Low => "LowTrustAgents",
        }
    }

    pub fn group(self) -> GroupName {
        GroupName(self.group_str().to_owned())
    }

    pub fn from_group(group: &GroupName) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.group_str() == group.as_str())
    }
}

impl fmt::Display for TrustLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrustLevel::High => "high",
            TrustLevel::Medium => "medium",
            TrustLevel::Low => "low",
        })
    }
}

impl FromStr for TrustLevel {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "high" => Ok(TrustLevel::High),
            "medium" => Ok(TrustLevel::Medium),
            "low" => Ok(TrustLevel::Low),
            _ => Err(CoreError::Name(s.to_owned(), "expected high, medium or low")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entity_names_reject_empty_and_unprintable() {
        assert!(EntityName::new("userAlice").is_ok());
        assert!(EntityName::new("").is_err());
        assert!(EntityName::new("user Alice").is_err());
        assert!(EntityName::new("bad\u{7}").is_err());
        assert!(GroupName::new("").is_err());
    }

    #[test]
    fn trust_levels_map_bijectively_to_groups() {
        for t in TrustLevel::ALL {
            assert_eq!(TrustLevel::from_group(&t.group()), Some(t));
        }
        assert_eq!(TrustLevel::from_group(&GroupName::websites()), None);
        let groups: std::collections::HashSet<_> =
            TrustLevel::ALL.iter().map(|t| t.group_str()).collect();
        assert_eq!(groups.len(), 3);
    }

    #[test]
    fn names_round_trip_through_json() {
        let n: EntityName = serde_json::from_str("\"Business\"").unwrap();
        assert_eq!(serde_json::to_string(&n).unwrap(), "\"Business\"");
        assert!(serde_json::from_str::<EntityName>("\"\"").is_err());
        assert_eq!(serde_json::to_string(&TrustLevel::High).unwrap(), "\"high\"");
    }
}
