//! Shipped analyses: code impact (with its isolated/fresh/stale variants)
//! and ML data leakage.

pub mod cia;
pub mod kb;
pub mod leak;
pub mod variants;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cia::{CiaAnalysis, CiaState};
pub use kb::{CallClass, KbError, KnowledgeBase};
pub use leak::{LeakAnalysis, LeakState, LeakValue, LeakViolation, Mark, SourceToken};
pub use variants::{CiaVariantReport, PropagationNode};

/// Abstract domain label; one component of the product state per label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Abstraction {
    CodeImpact,
    DataLeakage,
}

impl Abstraction {
    pub const ALL: [Abstraction; 2] = [Abstraction::CodeImpact, Abstraction::DataLeakage];

    pub fn as_str(self) -> &'static str {
        match self {
            Abstraction::CodeImpact => "code-impact",
            Abstraction::DataLeakage => "data-leakage",
        }
    }
}

impl fmt::Display for Abstraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// User-facing analysis id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalysisId {
    Isolated,
    Fresh,
    Stale,
    DataLeakage,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown analysis `{0}` (expected isolated, fresh, stale or data-leakage)")]
pub struct UnknownAnalysis(pub String);

impl AnalysisId {
    pub const ALL: [AnalysisId; 4] =
        [AnalysisId::Isolated, AnalysisId::Fresh, AnalysisId::Stale, AnalysisId::DataLeakage];

    pub fn as_str(self) -> &'static str {
        match self {
            AnalysisId::Isolated => "isolated",
            AnalysisId::Fresh => "fresh",
            AnalysisId::Stale => "stale",
            AnalysisId::DataLeakage => "data-leakage",
        }
    }

    pub fn descriptor(self) -> AnalysisDescriptor {
        let (abstraction, default_k) = match self {
            AnalysisId::Isolated => (Abstraction::CodeImpact, KBound::Finite(1)),
            AnalysisId::Fresh => (Abstraction::CodeImpact, KBound::Finite(3)),
            AnalysisId::Stale => (Abstraction::CodeImpact, KBound::Finite(3)),
            AnalysisId::DataLeakage => (Abstraction::DataLeakage, KBound::Infinite),
        };
        AnalysisDescriptor { id: self, abstraction, default_k }
    }
}

impl fmt::Display for AnalysisId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnalysisId {
    type Err = UnknownAnalysis;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AnalysisId::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| UnknownAnalysis(s.to_string()))
    }
}

/// Abstraction label, check condition and φ predicate bundle. The check and
/// φ behaviour are selected by `abstraction` and `id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AnalysisDescriptor {
    pub id: AnalysisId,
    pub abstraction: Abstraction,
    pub default_k: KBound,
}

/// Inter-cell exploration depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KBound {
    Finite(u32),
    Infinite,
}

impl KBound {
    pub fn is_zero(self) -> bool {
        self == KBound::Finite(0)
    }

    /// One propagation step; `Infinite` never decrements.
    pub fn dec(self) -> KBound {
        match self {
            KBound::Finite(k) => KBound::Finite(k.saturating_sub(1)),
            KBound::Infinite => KBound::Infinite,
        }
    }
}

impl PartialOrd for KBound {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for KBound {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match (self, other) {
            (KBound::Finite(a), KBound::Finite(b)) => a.cmp(b),
            (KBound::Finite(_), KBound::Infinite) => Less,
            (KBound::Infinite, KBound::Finite(_)) => Greater,
            (KBound::Infinite, KBound::Infinite) => Equal,
        }
    }
}

impl fmt::Display for KBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KBound::Finite(k) => write!(f, "{k}"),
            KBound::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid K `{0}` (expected a non-negative integer or `inf`)")]
pub struct InvalidK(pub String);

impl FromStr for KBound {
    type Err = InvalidK;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "∞" | "infinity" => Ok(KBound::Infinite),
            t => t.parse().map(KBound::Finite).map_err(|_| InvalidK(s.to_string())),
        }
    }
}

/// `K` on the wire: a non-negative integer or the string `"inf"`.
impl Serialize for KBound {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            KBound::Finite(k) => s.serialize_u32(*k),
            KBound::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for KBound {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u32),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(k) => Ok(KBound::Finite(k)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analysis_ids_round_trip() {
        for id in AnalysisId::ALL {
            assert_eq!(id.as_str().parse::<AnalysisId>().unwrap(), id);
            let json = serde_json::to_string(&id).unwrap();
            assert_eq!(json, format!("\"{}\"", id.as_str()));
        }
        assert!("leak".parse::<AnalysisId>().is_err());
    }

    #[test]
    fn default_k_policies() {
        assert_eq!(AnalysisId::Isolated.descriptor().default_k, KBound::Finite(1));
        assert_eq!(AnalysisId::Stale.descriptor().default_k, KBound::Finite(3));
        assert_eq!(AnalysisId::Fresh.descriptor().default_k, KBound::Finite(3));
        assert_eq!(AnalysisId::DataLeakage.descriptor().default_k, KBound::Infinite);
    }

    #[test]
    fn k_bound_parsing_and_order() {
        assert_eq!("inf".parse::<KBound>().unwrap(), KBound::Infinite);
        assert_eq!("3".parse::<KBound>().unwrap(), KBound::Finite(3));
        assert!("-1".parse::<KBound>().is_err());
        assert!(KBound::Finite(100) < KBound::Infinite);
        assert_eq!(KBound::Infinite.dec(), KBound::Infinite);
        assert_eq!(KBound::Finite(1).dec(), KBound::Finite(0));
        let k: KBound = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(k, KBound::Infinite);
        let k: KBound = serde_json::from_str("4").unwrap();
        assert_eq!(serde_json::to_string(&k).unwrap(), "4");
    }
}
