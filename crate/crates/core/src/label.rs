use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The two MPC classes. `Mental` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Mental,
    Physical,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Mental
    }

    /// 1.0 for Mental, 0.0 for Physical.
    pub fn target(self) -> f64 {
        match self {
            Label::Mental => 1.0,
            Label::Physical => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Mental => "mental",
            Label::Physical => "physical",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownLabel(pub String);

impl fmt::Display for UnknownLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown label {:?} (expected mental or physical)", self.0)
    }
}

impl std::error::Error for UnknownLabel {}

impl FromStr for Label {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mental" => Ok(Label::Mental),
            "physical" => Ok(Label::Physical),
            _ => Err(UnknownLabel(s.to_string())),
        }
    }
}
