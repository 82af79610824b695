//! Mutation score under injected flakiness.
//!
//! The score is `|K| / |M|` (equivalent mutants are not modelled). A flaky
//! test that passes on a mutant may still report a failure, turning a
//! surviving mutant into a killed one; [`expected_flaky_score`] gives the
//! exact mean and spread of the resulting score, [`score_sweep`] and
//! [`sampled_suite_differences`] measure it by simulation.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Direction, FlakinessModel, KillCell, KillMatrix, Validate, Verdict};
use crate::error::{Error, Result};
use crate::flakiness::flip_kill_cells;
use crate::rng::RngStream;
use crate::scalar::Real;
use crate::stats::{self, Summary};

/// `|K| / |M|`.
pub fn mutation_score<T: Real>(m: &KillMatrix) -> Result<T> {
    if m.n_mutants() == 0 {
        return Err(Error::InvalidArgument("mutation score of zero mutants".into()));
    }
    Ok(T::of_count(m.killed_count() as u64) / T::of_count(m.n_mutants() as u64))
}

/// Mean and standard deviation of a random score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlakyScore<T> {
    pub mean: T,
    pub std: T,
}

/// Probability that each mutant ends up killed after one flaky execution of
/// every covering cell.
///
/// Surviving cells of eligible passing tests flip with the test's
/// probability; killed cells may revert only when the direction allows it.
pub fn mutant_kill_probabilities<T: Real>(m: &KillMatrix, probs: &[f64], direction: Direction) -> Vec<T> {
    let k = m.n_mutants();
    let mut log_survive = vec![T::zero(); k];
    let mut certain = vec![false; k];
    for (t, &p) in probs.iter().enumerate() {
        let p = T::of(p);
        let pass_eligible = direction.flips_passes() && m.baseline()[t] == Verdict::Pass;
        for mutant in m.cover().row_ones(t) {
            match m.cell(t, mutant) {
                KillCell::Survived if pass_eligible => log_survive[mutant] = log_survive[mutant] + (-p).ln_1p(),
                KillCell::Killed if direction.flips_failures() => {
                    // the kill is lost with probability p
                    if p == T::zero() {
                        certain[mutant] = true;
                    } else {
                        log_survive[mutant] = log_survive[mutant] + p.ln();
                    }
                }
                KillCell::Killed => certain[mutant] = true,
                _ => {}
            }
        }
    }
    log_survive
        .into_iter()
        .zip(certain)
        .map(|(ls, c)| if c { T::one() } else { -ls.exp_m1() })
        .collect()
}

/// Exact mean and standard deviation of the flaky mutation score.
///
/// With `q_m` the kill probability of mutant `m`,
/// `E = Σ q_m / |M|` and `Var = Σ q_m (1 - q_m) / |M|²`; for pass-to-fail
/// flakiness `q_m = 1` for killed mutants and
/// `q_m = 1 - Π (1 - p_t)` over the passing in-scope tests covering a
/// survivor.
pub fn expected_flaky_score<T: Real>(m: &KillMatrix, model: &FlakinessModel) -> Result<FlakyScore<T>> {
    if m.n_mutants() == 0 {
        return Err(Error::InvalidArgument("mutation score of zero mutants".into()));
    }
    m.validate()?;
    model.validate()?;
    let probs = model.resolve(m.tests(), m.baseline())?;
    Ok(score_moments(m, &probs, model.direction))
}

fn score_moments<T: Real>(m: &KillMatrix, probs: &[f64], direction: Direction) -> FlakyScore<T> {
    let q: Vec<T> = mutant_kill_probabilities(m, probs, direction);
    let n = T::of_count(m.n_mutants() as u64);
    let mean = q.iter().copied().sum::<T>() / n;
    let var = q.iter().map(|&x| x * (T::one() - x)).sum::<T>() / (n * n);
    FlakyScore { mean, std: var.sqrt() }
}

/// Score reached when every eligible flaky execution fails:
/// killed mutants plus survivors covered by at least one passing test with
/// nonzero flake probability.
pub fn saturation_score<T: Real>(m: &KillMatrix, model: &FlakinessModel) -> Result<T> {
    if m.n_mutants() == 0 {
        return Err(Error::InvalidArgument("mutation score of zero mutants".into()));
    }
    let probs = model.resolve(m.tests(), m.baseline())?;
    let mut reachable = m.killed_mutants();
    for (t, &p) in probs.iter().enumerate() {
        if p > 0.0 && m.baseline()[t] == Verdict::Pass {
            for mutant in m.cover().row_ones(t) {
                reachable[mutant] = true;
            }
        }
    }
    let hit = reachable.iter().filter(|r| **r).count() as u64;
    Ok(T::of_count(hit) / T::of_count(m.n_mutants() as u64))
}

/// Replicated flaky scores at one flake probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSweepPoint {
    pub p: f64,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub scores: Vec<f64>,
    /// Closed-form mean and standard deviation at this point.
    pub expected: FlakyScore<f64>,
}

/// Simulated flaky mutation scores over a grid of uniform probabilities.
///
/// The model's direction and scope are kept, its probability replaced by
/// each grid value. Replicate `r` uses stream `r` of `seed` at every grid
/// point, so the points are compared under common random numbers and every
/// replicate's score is non-decreasing in `p`.
pub fn score_sweep(
    m: &KillMatrix,
    model: &FlakinessModel,
    grid: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<Vec<ScoreSweepPoint>> {
    if m.n_mutants() == 0 {
        return Err(Error::InvalidArgument("mutation score of zero mutants".into()));
    }
    if replicates == 0 {
        return Err(Error::InvalidArgument("at least one replicate is required".into()));
    }
    m.validate()?;
    let models = grid
        .iter()
        .map(|&p| model.with_uniform(p))
        .collect::<Result<Vec<_>>>()?;
    let probs = models
        .iter()
        .map(|md| md.resolve(m.tests(), m.baseline()))
        .collect::<Result<Vec<_>>>()?;

    let n = m.n_mutants() as f64;
    Ok(grid
        .par_iter()
        .zip(probs.par_iter())
        .map(|(&p, probs)| {
            let scores: Vec<f64> = (0..replicates as u64)
                .into_par_iter()
                .map(|r| {
                    let flaky = flip_kill_cells(m, probs, model.direction, &mut RngStream::new(seed, r).rng());
                    flaky.killed_count() as f64 / n
                })
                .collect();
            ScoreSweepPoint {
                p,
                mean: stats::mean(&scores).unwrap(),
                std: stats::population_std(&scores).unwrap(),
                min: scores.iter().copied().fold(f64::INFINITY, f64::min),
                max: scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                expected: score_moments(m, probs, model.direction),
                scores,
            }
        })
        .collect())
}

/// How random sub-suites are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteSampling {
    pub n_suites: usize,
    /// Suite size as a fraction of the full suite, drawn uniformly in
    /// `[min_fraction, max_fraction]`.
    pub min_fraction: f64,
    pub max_fraction: f64,
}

impl Default for SuiteSampling {
    fn default() -> Self {
        SuiteSampling {
            n_suites: 100,
            min_fraction: 0.10,
            max_fraction: 0.90,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSuite {
    pub size: usize,
    pub base_score: f64,
    /// Flaky minus non-flaky score, one per replicate.
    pub differences: Vec<f64>,
    pub mean_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSuiteResult {
    pub p: f64,
    pub suites: Vec<SampledSuite>,
    /// Distribution of the per-suite mean differences.
    pub suite_means: Summary,
}

const SUITE_DOMAIN: u64 = 0x0057_17E5;
const FLAKE_DOMAIN: u64 = 0x00F1_A4E5;

/// Score inflation on random sub-suites.
///
/// Each suite is a uniformly chosen subset (without replacement) whose size
/// is drawn uniformly from the configured fraction range, at least one test.
/// Flake probabilities are resolved on the full suite, so scopes naming
/// tests that a sub-suite dropped stay valid.
pub fn sampled_suite_differences(
    m: &KillMatrix,
    model: &FlakinessModel,
    sampling: SuiteSampling,
    replicates: usize,
    seed: u64,
) -> Result<SampledSuiteResult> {
    let SuiteSampling {
        n_suites,
        min_fraction: lo,
        max_fraction: hi,
    } = sampling;
    if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "suite size range [{lo}, {hi}] must lie in (0, 1]"
        )));
    }
    if n_suites == 0 || replicates == 0 {
        return Err(Error::InvalidArgument(
            "need at least one suite and one replicate".into(),
        ));
    }
    if m.n_tests() == 0 || m.n_mutants() == 0 {
        return Err(Error::InvalidArgument("cannot sample from an empty kill matrix".into()));
    }
    m.validate()?;
    model.validate()?;
    let probs = model.resolve(m.tests(), m.baseline())?;
    let n = m.n_tests();
    let min_size = ((lo * n as f64).ceil() as usize).clamp(1, n);
    let max_size = ((hi * n as f64).floor() as usize).clamp(min_size, n);
    let root = RngStream::new(seed, 0);

    let suites: Vec<SampledSuite> = (0..n_suites as u64)
        .into_par_iter()
        .map(|s| {
            let suite_stream = root.child(SUITE_DOMAIN, s);
            let mut rng = suite_stream.rng();
            let size = rng.random_range(min_size..=max_size);
            let mut rows = sample(&mut rng, n, size).into_vec();
            rows.sort_unstable();
            let sub = m.select_tests(&rows);
            let sub_probs: Vec<f64> = rows.iter().map(|&r| probs[r]).collect();
            let base_score = sub.killed_count() as f64 / sub.n_mutants() as f64;
            let differences: Vec<f64> = (0..replicates as u64)
                .map(|r| {
                    let mut rng = suite_stream.child(FLAKE_DOMAIN, r).rng();
                    let flaky = flip_kill_cells(&sub, &sub_probs, model.direction, &mut rng);
                    flaky.killed_count() as f64 / sub.n_mutants() as f64 - base_score
                })
                .collect();
            SampledSuite {
                size,
                base_score,
                mean_difference: stats::mean(&differences).unwrap(),
                differences,
            }
        })
        .collect();

    let means: Vec<f64> = suites.iter().map(|s| s.mean_difference).collect();
    Ok(SampledSuiteResult {
        p: model.uniform_probability().unwrap_or(f64::NAN),
        suite_means: Summary::of(&means).expect("at least one suite"),
        suites,
    })
}
