//! Spectrum-based fault localization with Ochiai and threshold selection,
//! and how flaky failures disturb the selected statement set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{CoverageMatrix, FlakinessModel, Outcome, SelectionMetrics, Validate};
use crate::error::{Error, Result};
use crate::flakiness::{apply_flakes, check_outcome_len, Independent};
use crate::rng::RngStream;
use crate::scalar::{survival_power, Real};
use crate::stats;

/// Default selection threshold used by threshold-based repair tools.
pub const DEFAULT_THRESHOLD: f64 = 0.1;

/// Which failing count enters Ochiai's first denominator factor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OchiaiMode {
    /// `a_ef / sqrt((a_ef + a_nf)(a_ef + a_ep))`; the first factor is the
    /// number of failing tests.
    #[default]
    Standard,
    /// `a_ef / sqrt((a_ef + F)(a_ef + a_ep))` with `F` the number of failing
    /// tests. A statement covered by the only failing test scores `1/sqrt(2)`.
    CoveredPlusFailing,
}

/// Spectrum of one statement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Failing tests covering the statement.
    pub a_ef: u64,
    /// Failing tests not covering it.
    pub a_nf: u64,
    /// Passing tests covering it.
    pub a_ep: u64,
}

/// Standard Ochiai; `None` when the denominator is zero (no failing test at
/// all, or nothing covers the statement).
pub fn ochiai<T: Real>(a_ef: u64, a_nf: u64, a_ep: u64) -> Option<T> {
    ochiai_with(Spectrum { a_ef, a_nf, a_ep }, OchiaiMode::Standard)
}

pub fn ochiai_with<T: Real>(s: Spectrum, mode: OchiaiMode) -> Option<T> {
    let failing = match mode {
        OchiaiMode::Standard => s.a_ef + s.a_nf,
        OchiaiMode::CoveredPlusFailing => 2 * s.a_ef + s.a_nf,
    };
    let denom = failing * (s.a_ef + s.a_ep);
    if denom == 0 {
        None
    } else {
        Some(T::of_count(s.a_ef) / T::of_count(denom).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatementSuspicion<T> {
    pub score: Option<T>,
    pub selected: bool,
}

/// Ochiai scores of every statement and the thresholded selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspiciousnessReport<T> {
    pub threshold: T,
    pub statements: Vec<StatementSuspicion<T>>,
}

impl<T: Real> SuspiciousnessReport<T> {
    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.statements
            .iter()
            .enumerate()
            .filter(|(_, s)| s.selected)
            .map(|(i, _)| i)
    }

    pub fn selected_count(&self) -> usize {
        self.statements.iter().filter(|s| s.selected).count()
    }

    /// The same scores selected at another threshold.
    pub fn rethreshold(&self, threshold: T) -> Self {
        SuspiciousnessReport {
            threshold,
            statements: self
                .statements
                .iter()
                .map(|s| StatementSuspicion {
                    score: s.score,
                    selected: s.score.is_some_and(|v| v >= threshold),
                })
                .collect(),
        }
    }
}

/// Per-statement spectra for the given outcomes. Flaky failures count as
/// failures: the technique cannot tell them apart.
pub fn spectra(m: &CoverageMatrix, outcomes: &[Outcome]) -> Result<Vec<Spectrum>> {
    check_outcome_len(m.n_tests(), outcomes)?;
    let mut ef = vec![0u64; m.n_statements()];
    let mut ep = vec![0u64; m.n_statements()];
    let mut failing = 0u64;
    for (t, o) in outcomes.iter().enumerate() {
        let counts = if o.is_failing() {
            failing += 1;
            &mut ef
        } else {
            &mut ep
        };
        for s in m.cover().row_ones(t) {
            counts[s] += 1;
        }
    }
    Ok(ef
        .into_iter()
        .zip(ep)
        .map(|(a_ef, a_ep)| Spectrum {
            a_ef,
            a_nf: failing - a_ef,
            a_ep,
        })
        .collect())
}

pub fn localize<T: Real>(
    m: &CoverageMatrix,
    outcomes: &[Outcome],
    threshold: T,
    mode: OchiaiMode,
) -> Result<SuspiciousnessReport<T>> {
    let statements = spectra(m, outcomes)?
        .into_iter()
        .map(|s| {
            let score = ochiai_with::<T>(s, mode);
            StatementSuspicion {
                score,
                selected: score.is_some_and(|v| v >= threshold),
            }
        })
        .collect();
    Ok(SuspiciousnessReport { threshold, statements })
}

/// Accuracy, precision and recall of a selection against the ground truth
/// selection over the same statements.
pub fn selection_robustness<T: Real>(
    ground_truth: &SuspiciousnessReport<T>,
    flaky: &SuspiciousnessReport<T>,
) -> Result<SelectionMetrics<T>> {
    if ground_truth.statements.len() != flaky.statements.len() {
        return Err(Error::Dimension(format!(
            "ground truth has {} statements, flaky selection {}",
            ground_truth.statements.len(),
            flaky.statements.len()
        )));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for (g, f) in ground_truth.statements.iter().zip(&flaky.statements) {
        match (g.selected, f.selected) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let ratio = |num: u64, den: u64| (den > 0).then(|| T::of_count(num) / T::of_count(den));
    Ok(SelectionMetrics {
        accuracy: ratio(tp + tn, tp + tn + fp + fn_),
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
    })
}

/// Mean of the defined values plus how many were undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub missing: usize,
}

impl MetricSummary {
    pub fn of(values: impl Iterator<Item = Option<f64>>) -> Self {
        let mut missing = 0;
        let present: Vec<f64> = values
            .filter_map(|v| {
                if v.is_none() {
                    missing += 1;
                }
                v
            })
            .collect();
        MetricSummary {
            mean: stats::mean(&present),
            median: stats::median(&present),
            missing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessPoint {
    pub p: f64,
    pub replicates: Vec<SelectionMetrics<f64>>,
    pub accuracy: MetricSummary,
    pub precision: MetricSummary,
    pub recall: MetricSummary,
}

/// Selection robustness over a grid of uniform flake probabilities.
///
/// The ground truth is the selection on the recorded outcomes. Replicate `r`
/// uses stream `r` of `seed` at every grid point.
pub fn robustness_sweep(
    m: &CoverageMatrix,
    model: &FlakinessModel,
    threshold: f64,
    mode: OchiaiMode,
    grid: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<Vec<RobustnessPoint>> {
    m.validate()?;
    if m.failing_tests().next().is_none() {
        return Err(Error::InvalidArgument(
            "robustness sweep needs at least one recorded failing test".into(),
        ));
    }
    if replicates == 0 {
        return Err(Error::InvalidArgument("at least one replicate is required".into()));
    }
    let baseline: Vec<Outcome> = m.baseline().iter().map(|&v| v.into()).collect();
    let truth = localize(m, &baseline, threshold, mode)?;
    let models = grid
        .iter()
        .map(|&p| model.with_uniform(p))
        .collect::<Result<Vec<_>>>()?;

    models
        .par_iter()
        .map(|md| {
            let probs = md.resolve(m.tests(), m.baseline())?;
            let metrics = (0..replicates as u64)
                .into_par_iter()
                .map(|r| {
                    let outcomes = apply_flakes(
                        m.baseline(),
                        &probs,
                        md.direction,
                        &mut Independent,
                        &mut RngStream::new(seed, r).rng(),
                    );
                    let flaky = localize(m, &outcomes, threshold, mode)?;
                    selection_robustness(&truth, &flaky)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(RobustnessPoint {
                p: md.uniform_probability().unwrap_or(f64::NAN),
                accuracy: MetricSummary::of(metrics.iter().map(|x| x.accuracy)),
                precision: MetricSummary::of(metrics.iter().map(|x| x.precision)),
                recall: MetricSummary::of(metrics.iter().map(|x| x.recall)),
                replicates: metrics,
            })
        })
        .collect()
}

/// Flake probability for the single real failing test in targeted fault
/// localization: the chance that at least one of `n_evaluated` tests flakes,
/// `1 - (1 - p)^n`.
pub fn targeted_flakiness_probability<T: Real>(p: T, n_evaluated: u64) -> T {
    T::one() - survival_power(p, n_evaluated)
}
