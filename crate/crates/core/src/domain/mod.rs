//! Shared domain types: outcomes, coverage and kill matrices, flakiness
//! models, repair scenarios and the counters produced by a flaky run.
//!
//! Every type here validates its invariants on construction; nothing in this
//! module performs I/O or draws random numbers.

mod bits;
mod matrix;
mod model;
mod scenario;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

pub use bits::BitMatrix;
pub use matrix::{CoverageMatrix, KillCell, KillMatrix};
pub use model::{Direction, FlakeProbability, FlakinessModel, Scope};
pub use scenario::{PatchRecord, RepairScenario};

use crate::error::{Error, Result};

/// Recorded verdict of a test on the unperturbed program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome of one (possibly perturbed) test execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    /// Passed on its own, then failed by injected flakiness.
    FlakyFail,
    /// Failed on its own, then reported as passing by injected flakiness.
    FlakyPass,
}

impl Outcome {
    /// Whether a flakiness-blind consumer sees this execution as failing.
    pub fn is_failing(self) -> bool {
        matches!(self, Outcome::Fail | Outcome::FlakyFail)
    }

    pub fn is_flaky(self) -> bool {
        matches!(self, Outcome::FlakyFail | Outcome::FlakyPass)
    }
}

impl From<Verdict> for Outcome {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Pass => Outcome::Pass,
            Verdict::Fail => Outcome::Fail,
        }
    }
}

macro_rules! label_id {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name {
            pub index: usize,
            pub label: String,
        }

        impl $name {
            pub fn new(index: usize, label: impl Into<String>) -> Self {
                $name { index, label: label.into() }
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(&self.label)
            }
        }
    };
}

label_id!(
    /// Test row of a matrix.
    TestId
);
label_id!(StatementId);
label_id!(MutantId);
label_id!(PatchId);

/// Class (group) of a test, derived from its label.
///
/// `pkg.Class#method` belongs to `pkg.Class`; without a `#` the text before
/// the last `.` is used; bare labels have no group.
pub fn test_group(label: &str) -> Option<&str> {
    label
        .rfind('#')
        .or_else(|| label.rfind('.'))
        .map(|i| &label[..i])
        .filter(|g| !g.is_empty())
}

/// Counters of one perturbed run, as kept by the flaky test runner.
///
/// `nb_tests = nb_passed + nb_flaked + nb_real_failed` always holds for
/// values produced by this crate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlakeCounters {
    #[serde(rename = "nbTests")]
    pub nb_tests: u64,
    #[serde(rename = "nbPassed")]
    pub nb_passed: u64,
    #[serde(rename = "nbFlaked")]
    pub nb_flaked: u64,
    #[serde(rename = "nbRealFailed")]
    pub nb_real_failed: u64,
}

impl FlakeCounters {
    pub fn from_outcomes(outcomes: &[Outcome]) -> Self {
        let mut c = FlakeCounters {
            nb_tests: outcomes.len() as u64,
            ..Default::default()
        };
        for o in outcomes {
            match o {
                Outcome::Pass => c.nb_passed += 1,
                Outcome::Fail => c.nb_real_failed += 1,
                Outcome::FlakyFail | Outcome::FlakyPass => c.nb_flaked += 1,
            }
        }
        c
    }

    pub fn is_consistent(&self) -> bool {
        self.nb_tests == self.nb_passed + self.nb_flaked + self.nb_real_failed
    }
}

/// Agreement between a selection and its ground truth.
///
/// `None` marks an undefined metric (empty denominator), never zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics<T> {
    pub accuracy: Option<T>,
    pub precision: Option<T>,
    pub recall: Option<T>,
}

pub(crate) fn check_unique_labels(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

pub(crate) fn check_probability(value: f64, context: impl FnOnce() -> String) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Probability {
            value,
            context: context(),
        })
    }
}

/// Re-checks the invariants of an already constructed value.
pub trait Validate {
    fn validate(&self) -> Result<()>;
}
