//! Closed-form effect of i.i.d. flakiness on a deterministic repair tool.
//!
//! A valid patch `v` covered by `k = |T_v|` tests is wrongly rejected when
//! any of them flakes: `p̄_v = 1 - (1 - p)^k`. From that follow the expected
//! number of surviving valid (genuine) patches `Σ (1 - p̄_v)` and the
//! probability that at least one survives, `1 - Π p̄_v`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{check_probability, PatchRecord, RepairScenario, Validate};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::{survival_power, Real};
use crate::stats;

/// Probability that a valid patch covered by `covering` tests is labelled
/// invalid.
pub fn patch_invalidation_prob<T: Real>(p: T, covering: u64) -> T {
    T::one() - survival_power(p, covering)
}

/// Expected number of patches that stay valid.
pub fn expected_surviving<'a, T: Real>(patches: impl IntoIterator<Item = &'a PatchRecord>, p: T) -> T {
    patches.into_iter().map(|v| survival_power(p, v.covering_tests())).sum()
}

/// Probability that at least one of the patches stays valid; 0 for an
/// empty set.
pub fn prob_at_least_one<'a, T: Real>(patches: impl IntoIterator<Item = &'a PatchRecord>, p: T) -> T {
    let mut any = false;
    let all_rejected = patches.into_iter().fold(T::one(), |acc, v| {
        any = true;
        acc * patch_invalidation_prob(p, v.covering_tests())
    });
    if any {
        T::one() - all_rejected
    } else {
        T::zero()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchRisk<T> {
    pub id: String,
    pub covering_tests: u64,
    pub invalidation: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRepairReport<T> {
    pub p: T,
    pub n_patches: usize,
    pub n_valid: usize,
    pub n_genuine: usize,
    pub expected_valid: T,
    pub expected_genuine: T,
    pub p_valid: T,
    pub p_genuine: T,
    /// `p̄_v` of every valid patch, in input order.
    pub per_patch: Vec<PatchRisk<T>>,
}

pub fn analyze<T: Real>(scenario: &RepairScenario, p: T) -> Result<AnalyticRepairReport<T>> {
    scenario.validate()?;
    check_probability(p.to_f64_lossy(), || "repair flake rate".into())?;
    Ok(AnalyticRepairReport {
        p,
        n_patches: scenario.patches.len(),
        n_valid: scenario.valid().count(),
        n_genuine: scenario.genuine().count(),
        expected_valid: expected_surviving(scenario.valid(), p),
        expected_genuine: expected_surviving(scenario.genuine(), p),
        p_valid: prob_at_least_one(scenario.valid(), p),
        p_genuine: prob_at_least_one(scenario.genuine(), p),
        per_patch: scenario
            .valid()
            .map(|v| PatchRisk {
                id: v.id.clone(),
                covering_tests: v.covering_tests(),
                invalidation: patch_invalidation_prob(p, v.covering_tests()),
            })
            .collect(),
    })
}

/// Empirical counterpart of [`expected_surviving`] / [`prob_at_least_one`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloRepair {
    pub replicates: usize,
    pub mean_surviving: f64,
    /// Standard error of `mean_surviving` from the sample variance.
    pub std_error: f64,
    pub at_least_one_rate: f64,
    /// Survivor count of each replicate.
    pub surviving: Vec<u32>,
}

/// Simulates the validity check: in each replicate, every patch survives
/// independently with probability `(1 - p)^k`.
pub fn monte_carlo_repair(patches: &[PatchRecord], p: f64, replicates: usize, seed: u64) -> Result<MonteCarloRepair> {
    check_probability(p, || "repair flake rate".into())?;
    let survival: Vec<f64> = patches.iter().map(|v| survival_power(p, v.covering_tests())).collect();
    monte_carlo_survival(&survival, replicates, seed)
}

/// Same as [`monte_carlo_repair`] with arbitrary per-patch survival
/// probabilities.
pub fn monte_carlo_survival(survival: &[f64], replicates: usize, seed: u64) -> Result<MonteCarloRepair> {
    if replicates == 0 {
        return Err(Error::InvalidArgument("at least one replicate is required".into()));
    }
    for &s in survival {
        check_probability(s, || "patch survival".into())?;
    }
    let surviving: Vec<u32> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, r).rng();
            survival.iter().filter(|&&s| rng.random::<f64>() < s).count() as u32
        })
        .collect();
    let counts: Vec<f64> = surviving.iter().map(|&c| c as f64).collect();
    let mean = stats::mean(&counts).unwrap();
    let n = counts.len() as f64;
    let sample_var = if counts.len() > 1 {
        counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(MonteCarloRepair {
        replicates,
        mean_surviving: mean,
        std_error: (sample_var / n).sqrt(),
        at_least_one_rate: surviving.iter().filter(|&&c| c > 0).count() as f64 / n,
        surviving,
    })
}

/// Genuine-patch survival against the average valid-patch survival.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenuineAdvantage<T> {
    pub p_genuine: T,
    /// `E(|V_f|) / |V|`.
    pub mean_valid_survival: T,
    /// `p_genuine / mean_valid_survival`.
    pub ratio: T,
}

pub fn genuine_advantage<T: Real>(scenario: &RepairScenario, p: T) -> Result<GenuineAdvantage<T>> {
    scenario.validate()?;
    let n_valid = scenario.valid().count();
    if n_valid == 0 || scenario.genuine().count() == 0 {
        return Err(Error::InvalidArgument(
            "genuine advantage needs at least one valid and one genuine patch".into(),
        ));
    }
    let p_genuine = prob_at_least_one(scenario.genuine(), p);
    let mean_valid_survival = expected_surviving(scenario.valid(), p) / T::of_count(n_valid as u64);
    Ok(GenuineAdvantage {
        p_genuine,
        mean_valid_survival,
        ratio: p_genuine / mean_valid_survival,
    })
}
