//! Abstract generate-and-validate repair campaign under flakiness.
//!
//! One campaign runs the test suite once (possibly flaky) to localize the
//! fault, keeps the statements whose Ochiai score reaches the threshold as
//! repair ingredients, then evaluates a fixed budget of candidate edits drawn
//! with probability proportional to suspiciousness. A candidate is correct
//! when it edits a buggy statement and passes a Bernoulli(q) draw; it is
//! reported valid when it is correct and no test of the validation set
//! (failing tests of the initial run plus passing tests covering an
//! ingredient) flakes. The validation set is fixed after the initial run.
//!
//! In targeted mode localization only sees the real failures, and the single
//! real failing test carries the combined flake probability of the whole
//! validation set instead, so each correct candidate keeps the same odds of
//! being rejected while the search space stays clean.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{
    check_probability, BitMatrix, CoverageMatrix, Direction, FlakinessModel, Outcome, Validate, Verdict,
};
use crate::error::{Error, Result};
use crate::fl::{localize, OchiaiMode, SuspiciousnessReport, DEFAULT_THRESHOLD};
use crate::flakiness::{apply_flakes, Independent};
use crate::rng::RngStream;
use crate::stats::{self, wilcoxon_signed_rank, WilcoxonResult};

/// Program model: coverage, recorded failures, which statements hold the
/// bug and how likely an edit on a buggy statement is correct.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProgram {
    coverage: CoverageMatrix,
    buggy: Vec<bool>,
    fix_probability: f64,
}

impl SyntheticProgram {
    pub fn new(coverage: CoverageMatrix, buggy_statements: &[usize], fix_probability: f64) -> Result<Self> {
        let mut buggy = vec![false; coverage.n_statements()];
        for &s in buggy_statements {
            *buggy.get_mut(s).ok_or_else(|| {
                Error::Dimension(format!(
                    "buggy statement {s} out of {} statements",
                    coverage.n_statements()
                ))
            })? = true;
        }
        let prog = SyntheticProgram {
            coverage,
            buggy,
            fix_probability,
        };
        prog.validate()?;
        Ok(prog)
    }

    pub fn coverage(&self) -> &CoverageMatrix {
        &self.coverage
    }

    pub fn is_buggy(&self, statement: usize) -> bool {
        self.buggy[statement]
    }

    pub fn buggy_statements(&self) -> Vec<usize> {
        (0..self.buggy.len()).filter(|&s| self.buggy[s]).collect()
    }

    pub fn fix_probability(&self) -> f64 {
        self.fix_probability
    }

    pub fn real_failing_tests(&self) -> Vec<usize> {
        self.coverage.failing_tests().collect()
    }
}

impl Validate for SyntheticProgram {
    fn validate(&self) -> Result<()> {
        self.coverage.validate()?;
        if !(self.fix_probability > 0.0 && self.fix_probability <= 1.0) {
            return Err(Error::Probability {
                value: self.fix_probability,
                context: "fix probability must lie in (0, 1]".into(),
            });
        }
        let failing = self.real_failing_tests();
        if failing.is_empty() {
            return Err(Error::InvalidArgument("program has no real failing test".into()));
        }
        for t in failing {
            if !self.coverage.cover().row_ones(t).any(|s| self.buggy[s]) {
                return Err(Error::InvalidArgument(format!(
                    "real failing test `{}` covers no buggy statement",
                    self.coverage.tests()[t]
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    /// Candidates evaluated per run.
    pub budget: usize,
    /// Candidates per generation.
    pub population: usize,
    pub threshold: f64,
    pub ochiai: OchiaiMode,
    pub targeted: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            budget: 200,
            population: 20,
            threshold: DEFAULT_THRESHOLD,
            ochiai: OchiaiMode::Standard,
            targeted: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub valid_patch_count: u64,
    /// Tests failing in the initial run (real and flaky).
    pub failing_test_count: u64,
    /// Passing tests covering at least one ingredient.
    pub positive_test_count: u64,
    /// Tests executed per candidate validation.
    pub executed_test_count: u64,
    pub generations_used: u64,
    pub candidates_evaluated: u64,
    pub ingredient_count: u64,
    pub buggy_ingredient_count: u64,
}

const FL_DOMAIN: u64 = 1;
const SEARCH_DOMAIN: u64 = 2;
const VALIDATION_DOMAIN: u64 = 3;

pub fn run_campaign(
    prog: &SyntheticProgram,
    model: &FlakinessModel,
    cfg: &CampaignConfig,
    stream: RngStream,
) -> Result<CampaignResult> {
    if cfg.population == 0 || cfg.budget < cfg.population {
        return Err(Error::InvalidArgument(format!(
            "need budget >= population >= 1, got budget {} and population {}",
            cfg.budget, cfg.population
        )));
    }
    if model.direction != Direction::PassToFail {
        return Err(Error::InvalidArgument(
            "repair campaigns support pass-to-fail flakiness only".into(),
        ));
    }
    model.validate()?;
    let cov = &prog.coverage;
    let probs = model.resolve(cov.tests(), cov.baseline())?;

    let outcomes: Vec<Outcome> = if cfg.targeted {
        cov.baseline().iter().map(|&v| v.into()).collect()
    } else {
        apply_flakes(
            cov.baseline(),
            &probs,
            model.direction,
            &mut Independent,
            &mut stream.child(FL_DOMAIN, 0).rng(),
        )
    };
    let report: SuspiciousnessReport<f64> = localize(cov, &outcomes, cfg.threshold, cfg.ochiai)?;
    let ingredients: Vec<(usize, f64)> = report
        .selected()
        .filter_map(|s| report.statements[s].score.filter(|w| *w > 0.0).map(|w| (s, w)))
        .collect();

    let ingredient_mask = {
        let mut mask = BitMatrix::new(1, cov.n_statements());
        for &(s, _) in &ingredients {
            mask.set(0, s, true);
        }
        mask
    };
    let validation: Vec<usize> = (0..cov.n_tests())
        .filter(|&t| {
            outcomes[t].is_failing()
                || cov
                    .cover()
                    .row_words(t)
                    .iter()
                    .zip(ingredient_mask.row_words(0))
                    .any(|(a, b)| a & b != 0)
        })
        .collect();
    let failing_test_count = outcomes.iter().filter(|o| o.is_failing()).count() as u64;
    let executed = validation.len() as u64;

    let validation_probs: Vec<f64> = if cfg.targeted {
        let combined = 1.0 - validation.iter().map(|&t| 1.0 - probs[t]).product::<f64>();
        let first_failing = prog.real_failing_tests()[0];
        validation
            .iter()
            .map(|&t| if t == first_failing { combined } else { 0.0 })
            .collect()
    } else {
        validation.iter().map(|&t| probs[t]).collect()
    };

    let mut result = CampaignResult {
        valid_patch_count: 0,
        failing_test_count,
        positive_test_count: executed - failing_test_count,
        executed_test_count: executed,
        generations_used: 0,
        candidates_evaluated: 0,
        ingredient_count: ingredients.len() as u64,
        buggy_ingredient_count: ingredients.iter().filter(|(s, _)| prog.buggy[*s]).count() as u64,
    };
    if ingredients.is_empty() {
        return Ok(result);
    }

    let picker = WeightedIndex::new(ingredients.iter().map(|(_, w)| *w))
        .map_err(|e| Error::InvalidArgument(format!("ingredient weights: {e}")))?;
    let mut search = stream.child(SEARCH_DOMAIN, 0).rng();
    let mut check = stream.child(VALIDATION_DOMAIN, 0).rng();
    let mut remaining = cfg.budget;
    while remaining > 0 {
        let batch = remaining.min(cfg.population);
        for _ in 0..batch {
            let (statement, _) = ingredients[picker.sample(&mut search)];
            let correct = prog.buggy[statement] && search.random::<f64>() < prog.fix_probability;
            if correct && !validation_probs.iter().any(|&p| check.random::<f64>() < p) {
                result.valid_patch_count += 1;
            }
        }
        remaining -= batch;
        result.candidates_evaluated += batch as u64;
        result.generations_used += 1;
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetedComparison {
    pub targeted: Vec<CampaignResult>,
    pub non_targeted: Vec<CampaignResult>,
    pub targeted_median: f64,
    pub non_targeted_median: f64,
    /// Paired test on valid-patch counts, targeted minus non-targeted.
    pub wilcoxon: WilcoxonResult,
}

/// Paired targeted vs non-targeted campaigns; run `i` of both variants uses
/// stream `i` of `seed`.
pub fn compare_targeted(
    prog: &SyntheticProgram,
    model: &FlakinessModel,
    cfg: &CampaignConfig,
    runs: usize,
    seed: u64,
) -> Result<TargetedComparison> {
    if runs < 2 {
        return Err(Error::InvalidArgument("comparison needs at least two runs".into()));
    }
    let side = |targeted: bool| -> Result<Vec<CampaignResult>> {
        let cfg = CampaignConfig { targeted, ..*cfg };
        (0..runs as u64)
            .into_par_iter()
            .map(|r| run_campaign(prog, model, &cfg, RngStream::new(seed, r)))
            .collect()
    };
    let targeted = side(true)?;
    let non_targeted = side(false)?;
    let counts = |rs: &[CampaignResult]| rs.iter().map(|r| r.valid_patch_count as f64).collect::<Vec<_>>();
    let (t, n) = (counts(&targeted), counts(&non_targeted));
    Ok(TargetedComparison {
        targeted_median: stats::median(&t).unwrap(),
        non_targeted_median: stats::median(&n).unwrap(),
        wilcoxon: wilcoxon_signed_rank(&t, &n)?,
        targeted,
        non_targeted,
    })
}

/// Parameters of the synthetic program generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureParams {
    pub n_tests: usize,
    pub n_statements: usize,
    /// Test classes; tests are split into contiguous blocks, the real failing
    /// test is the first test of the first class.
    pub n_groups: usize,
    /// Probability that a test covers a given non-buggy statement.
    pub density: f64,
    pub n_buggy: usize,
    /// Passing tests covering the buggy statements.
    pub bug_covering_tests: usize,
    pub fix_probability: f64,
}

impl Default for FixtureParams {
    fn default() -> Self {
        FixtureParams {
            n_tests: 60,
            n_statements: 200,
            n_groups: 3,
            density: 0.05,
            n_buggy: 2,
            bug_covering_tests: 5,
            fix_probability: 0.5,
        }
    }
}

/// Random program with one real failing test covering every buggy
/// statement.
pub fn generate_fixture(params: &FixtureParams, seed: u64) -> Result<SyntheticProgram> {
    let FixtureParams {
        n_tests,
        n_statements,
        n_groups,
        density,
        n_buggy,
        bug_covering_tests,
        fix_probability,
    } = *params;
    if n_tests == 0 || n_groups == 0 || n_groups > n_tests {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= n_groups ({n_groups}) <= n_tests ({n_tests})"
        )));
    }
    if n_buggy == 0 || n_buggy > n_statements {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= n_buggy ({n_buggy}) <= n_statements ({n_statements})"
        )));
    }
    if bug_covering_tests >= n_tests {
        return Err(Error::InvalidArgument(
            "bug_covering_tests must leave room for the failing test".into(),
        ));
    }
    check_probability(density, || "coverage density".into())?;

    let mut rng = RngStream::new(seed, 0).rng();
    let tests: Vec<String> = (0..n_tests)
        .map(|i| format!("C{}#t{i}", i * n_groups / n_tests))
        .collect();
    let statements: Vec<String> = (0..n_statements).map(|j| format!("s{j}")).collect();
    let mut cover = BitMatrix::new(n_tests, n_statements);
    for t in 0..n_tests {
        for s in n_buggy..n_statements {
            if rng.random::<f64>() < density {
                cover.set(t, s, true);
            }
        }
    }
    let mut bug_tests = rand::seq::index::sample(&mut rng, n_tests - 1, bug_covering_tests).into_vec();
    bug_tests.iter_mut().for_each(|t| *t += 1);
    bug_tests.push(0);
    for &t in &bug_tests {
        for s in 0..n_buggy {
            cover.set(t, s, true);
        }
    }
    let mut baseline = vec![Verdict::Pass; n_tests];
    baseline[0] = Verdict::Fail;
    let coverage = CoverageMatrix::new(tests, statements, cover, baseline)?;
    SyntheticProgram::new(coverage, &(0..n_buggy).collect::<Vec<_>>(), fix_probability)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Scope;

    /// One failing test uniquely covering the single buggy statement.
    fn isolated() -> SyntheticProgram {
        let cov = CoverageMatrix::from_rows(
            vec!["A#f".into(), "A#p1".into(), "A#p2".into()],
            vec!["bug".into(), "x".into()],
            &[[true, false], [false, true], [false, true]],
            vec![Verdict::Fail, Verdict::Pass, Verdict::Pass],
        )
        .unwrap();
        SyntheticProgram::new(cov, &[0], 1.0).unwrap()
    }

    #[test]
    fn program_invariants() {
        let cov = isolated().coverage().clone();
        assert!(SyntheticProgram::new(cov.clone(), &[1], 1.0).is_err());
        assert!(SyntheticProgram::new(cov.clone(), &[0], 0.0).is_err());
        assert!(SyntheticProgram::new(cov, &[9], 1.0).is_err());
    }

    #[test]
    fn deterministic_without_flakiness() {
        let prog = isolated();
        let cfg = CampaignConfig {
            budget: 50,
            population: 10,
            ..Default::default()
        };
        let model = FlakinessModel::uniform(0.0).unwrap();
        let a = run_campaign(&prog, &model, &cfg, RngStream::new(4, 0)).unwrap();
        assert_eq!(a.valid_patch_count, 50);
        assert_eq!(a.candidates_evaluated, 50);
        assert_eq!(a.generations_used, 5);
        assert_eq!(a.failing_test_count, 1);
        assert_eq!(a.positive_test_count, 0);
        assert_eq!(a, run_campaign(&prog, &model, &cfg, RngStream::new(4, 0)).unwrap());
    }

    #[test]
    fn certain_flakiness_rejects_everything() {
        let prog = isolated();
        let cfg = CampaignConfig {
            budget: 40,
            population: 7,
            ..Default::default()
        };
        let model = FlakinessModel::uniform(1.0).unwrap();
        for targeted in [false, true] {
            let r = run_campaign(&prog, &model, &CampaignConfig { targeted, ..cfg }, RngStream::new(1, 0)).unwrap();
            assert_eq!(r.valid_patch_count, 0);
            assert_eq!(r.generations_used, 6);
        }
    }

    #[test]
    fn budget_must_cover_population() {
        let cfg = CampaignConfig {
            budget: 5,
            population: 10,
            ..Default::default()
        };
        let model = FlakinessModel::uniform(0.0).unwrap();
        assert!(run_campaign(&isolated(), &model, &cfg, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn empty_ingredients_is_zero_patch_run() {
        let prog = isolated();
        let cfg = CampaignConfig {
            threshold: 1.5,
            ..Default::default()
        };
        let r = run_campaign(
            &prog,
            &FlakinessModel::uniform(0.0).unwrap(),
            &cfg,
            RngStream::new(0, 0),
        )
        .unwrap();
        assert_eq!(r.ingredient_count, 0);
        assert_eq!(r.valid_patch_count, 0);
        assert_eq!(r.candidates_evaluated, 0);
    }

    #[test]
    fn zero_flakiness_comparison_is_degenerate() {
        let prog = generate_fixture(&FixtureParams::default(), 3).unwrap();
        let model = FlakinessModel::uniform(0.0).unwrap();
        let c = compare_targeted(&prog, &model, &CampaignConfig::default(), 4, 8).unwrap();
        assert_eq!(c.targeted, c.non_targeted);
        assert_eq!(c.wilcoxon.method, stats::WilcoxonMethod::Degenerate);
    }

    #[test]
    fn fixture_shape() {
        let p = FixtureParams {
            n_tests: 30,
            n_groups: 3,
            bug_covering_tests: 4,
            ..Default::default()
        };
        let prog = generate_fixture(&p, 1).unwrap();
        let cov = prog.coverage();
        assert_eq!(cov.n_tests(), 30);
        assert_eq!(prog.real_failing_tests(), vec![0]);
        assert_eq!(cov.cover().col_count(0), 5);
        assert_eq!(cov.tests()[29], "C2#t29");
        let scoped = FlakinessModel::uniform(0.1).unwrap().with_scope(Scope::FailingGroups);
        let probs = scoped.resolve(cov.tests(), cov.baseline()).unwrap();
        assert_eq!(probs.iter().filter(|p| **p > 0.0).count(), 10);
        assert_eq!(generate_fixture(&p, 1).unwrap(), prog);
    }

    #[test]
    fn other_directions_rejected() {
        let model = FlakinessModel::uniform(0.1).unwrap().with_direction(Direction::Both);
        assert!(run_campaign(&isolated(), &model, &CampaignConfig::default(), RngStream::new(0, 0)).is_err());
    }
}
