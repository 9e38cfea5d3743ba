//! The five decision-rule catalogs and their selection logic.
//!
//! Scoring functions are pure and work on lightweight views so that the
//! engine and independent reference evaluators can share inputs.

mod score;
mod select;

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use score::{
    age_score, common_lines_score, completable_orders, demand_score, fast_lane_eligible, lateness_fallback_score,
    lateness_score, pile_on_score, pod_match_score, LineView, OrderView, PodView,
};
pub use select::{
    poa_select, pps_select, psa_select, rps_select, ties_max, ties_min, PoaContext, PpsContext, PsaCandidate,
    PsaChoice, RpsCandidate,
};

macro_rules! rule_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = RuleError;

            fn from_str(s: &str) -> Result<Self, RuleError> {
                Self::ALL
                    .iter()
                    .copied()
                    .find(|r| r.name() == s)
                    .ok_or(RuleError::UnknownRule { problem: stringify!($name), name: s.into() })
            }
        }
    };
}

rule_enum!(
    /// Pick order assignment.
    PoaRule { Random => "Random", Fcfs => "FCFS", DueTime => "DueTime", FastLane => "FastLane", CommonLines => "CommonLines", PodMatch => "PodMatch" }
);
rule_enum!(
    /// Replenishment order assignment.
    RoaRule { Random => "Random", PodBatch => "PodBatch" }
);
rule_enum!(
    /// Pick pod selection.
    PpsRule { Random => "Random", Nearest => "Nearest", PileOn => "PileOn", Demand => "Demand", Lateness => "Lateness", Age => "Age" }
);
rule_enum!(
    /// Replenishment pod selection.
    RpsRule { Random => "Random", Emptiest => "Emptiest", Nearest => "Nearest", LeastDemand => "LeastDemand", Class => "Class" }
);
rule_enum!(
    /// Pod storage assignment.
    PsaRule { Random => "Random", Fixed => "Fixed", Nearest => "Nearest", StationBased => "StationBased", Class => "Class" }
);

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("unknown {problem} rule `{name}`")]
    UnknownRule { problem: &'static str, name: alloc::string::String },
    #[error("PodBatch replenishment assignment cannot be combined with Nearest replenishment pod selection")]
    Forbidden,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRuleConfiguration {
    pub poa: PoaRule,
    pub roa: RoaRule,
    pub pps: PpsRule,
    pub rps: RpsRule,
    pub psa: PsaRule,
}

/// One rule per decision problem; the PodBatch/Nearest pair is rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawRuleConfiguration", into = "RawRuleConfiguration")]
pub struct RuleConfiguration {
    poa: PoaRule,
    roa: RoaRule,
    pps: PpsRule,
    rps: RpsRule,
    psa: PsaRule,
}

impl RuleConfiguration {
    pub fn new(poa: PoaRule, roa: RoaRule, pps: PpsRule, rps: RpsRule, psa: PsaRule) -> Result<Self, RuleError> {
        if roa == RoaRule::PodBatch && rps == RpsRule::Nearest {
            return Err(RuleError::Forbidden);
        }
        Ok(Self { poa, roa, pps, rps, psa })
    }

    pub fn poa(&self) -> PoaRule {
        self.poa
    }
    pub fn roa(&self) -> RoaRule {
        self.roa
    }
    pub fn pps(&self) -> PpsRule {
        self.pps
    }
    pub fn rps(&self) -> RpsRule {
        self.rps
    }
    pub fn psa(&self) -> PsaRule {
        self.psa
    }

    /// Rule names in POA, ROA, PPS, RPS, PSA order.
    pub fn names(&self) -> [&'static str; 5] {
        [self.poa.name(), self.roa.name(), self.pps.name(), self.rps.name(), self.psa.name()]
    }

    pub fn with_poa(self, poa: PoaRule) -> Self {
        Self { poa, ..self }
    }

    pub fn with_rps(self, rps: RpsRule) -> Result<Self, RuleError> {
        Self::new(self.poa, self.roa, self.pps, rps, self.psa)
    }
}

impl TryFrom<RawRuleConfiguration> for RuleConfiguration {
    type Error = RuleError;

    fn try_from(r: RawRuleConfiguration) -> Result<Self, RuleError> {
        Self::new(r.poa, r.roa, r.pps, r.rps, r.psa)
    }
}

impl From<RuleConfiguration> for RawRuleConfiguration {
    fn from(r: RuleConfiguration) -> Self {
        Self { poa: r.poa, roa: r.roa, pps: r.pps, rps: r.rps, psa: r.psa }
    }
}

impl fmt::Display for RuleConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d, e] = self.names();
        write!(f, "{a}/{b}/{c}/{d}/{e}")
    }
}
