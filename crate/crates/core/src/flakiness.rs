//! Injection of flaky outcomes into recorded executions.
//!
//! A flake is decided after the test has run: the recorded verdict (and what
//! the test covered) is kept, and only the reported outcome is inverted. In
//! pass-to-fail mode a passing execution becomes [`Outcome::FlakyFail`] with
//! the test's probability; recorded failures are never touched.
//!
//! Every eligible execution consumes exactly one uniform draw whether or not
//! its probability is zero, so two models differing only in probabilities see
//! the same draws (common random numbers across a probability sweep).

use rand::Rng;

use crate::domain::{
    CoverageMatrix, Direction, FlakeCounters, FlakinessModel, KillCell, KillMatrix, Outcome, Validate, Verdict,
};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Outcomes of one perturbed run and the runner's counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbedRun {
    pub outcomes: Vec<Outcome>,
    pub counters: FlakeCounters,
}

impl PerturbedRun {
    fn from_outcomes(outcomes: Vec<Outcome>) -> Self {
        let counters = FlakeCounters::from_outcomes(&outcomes);
        PerturbedRun { outcomes, counters }
    }

    pub fn failing_count(&self) -> usize {
        self.outcomes.iter().filter(|o| o.is_failing()).count()
    }
}

/// Hook for flake processes whose probability depends on the run so far
/// (for instance on how many tests already flaked).
///
/// Only [`Independent`] ships; correlated processes plug in through
/// [`perturb_outcomes_with`].
pub trait FlakeProcess {
    /// Probability that `test` flakes now, given its model probability and
    /// the number of flakes injected earlier in the same run.
    fn probability(&mut self, test: usize, base: f64, flaked_so_far: u64) -> f64;
}

/// I.i.d. flakes: the model probability, unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct Independent;

impl FlakeProcess for Independent {
    fn probability(&mut self, _test: usize, base: f64, _flaked_so_far: u64) -> f64 {
        base
    }
}

/// Perturbs a recorded run. Tests are identified by label for scoping.
pub fn perturb_outcomes(
    tests: &[String],
    baseline: &[Verdict],
    model: &FlakinessModel,
    stream: RngStream,
) -> Result<PerturbedRun> {
    perturb_outcomes_with(tests, baseline, model, &mut Independent, stream)
}

pub fn perturb_outcomes_with<P: FlakeProcess>(
    tests: &[String],
    baseline: &[Verdict],
    model: &FlakinessModel,
    process: &mut P,
    stream: RngStream,
) -> Result<PerturbedRun> {
    model.validate()?;
    let probs = model.resolve(tests, baseline)?;
    let outcomes = apply_flakes(baseline, &probs, model.direction, process, &mut stream.rng());
    Ok(PerturbedRun::from_outcomes(outcomes))
}

/// Perturbs the initial (fault-localization) run recorded in a coverage
/// matrix. Coverage itself is never modified.
pub fn perturb_fl_run(m: &CoverageMatrix, model: &FlakinessModel, stream: RngStream) -> Result<PerturbedRun> {
    perturb_outcomes(m.tests(), m.baseline(), model, stream)
}

pub(crate) fn apply_flakes<P: FlakeProcess, R: Rng>(
    baseline: &[Verdict],
    probs: &[f64],
    direction: Direction,
    process: &mut P,
    rng: &mut R,
) -> Vec<Outcome> {
    let mut flaked = 0u64;
    baseline
        .iter()
        .zip(probs)
        .enumerate()
        .map(|(i, (&verdict, &base))| {
            let eligible = match verdict {
                Verdict::Pass => direction.flips_passes(),
                Verdict::Fail => direction.flips_failures(),
            };
            if !eligible {
                return verdict.into();
            }
            let u: f64 = rng.random();
            if u < process.probability(i, base, flaked) {
                flaked += 1;
                match verdict {
                    Verdict::Pass => Outcome::FlakyFail,
                    Verdict::Fail => Outcome::FlakyPass,
                }
            } else {
                verdict.into()
            }
        })
        .collect()
}

/// Re-runs every (test, mutant) execution through the flake model.
///
/// Covered-but-surviving cells of baseline-passing tests turn into kills
/// with the test's probability, independently per cell (each mutant run is a
/// separate execution). Uncovered cells never change. Under
/// [`Direction::FailToPass`]/[`Direction::Both`], killed cells may also turn
/// back into survivals.
pub fn perturb_kill_matrix(m: &KillMatrix, model: &FlakinessModel, stream: RngStream) -> Result<KillMatrix> {
    m.validate()?;
    model.validate()?;
    let probs = model.resolve(m.tests(), m.baseline())?;
    Ok(flip_kill_cells(m, &probs, model.direction, &mut stream.rng()))
}

pub(crate) fn flip_kill_cells<R: Rng>(m: &KillMatrix, probs: &[f64], direction: Direction, rng: &mut R) -> KillMatrix {
    debug_assert_eq!(probs.len(), m.n_tests());
    let mut out = m.clone();
    for (t, &p) in probs.iter().enumerate() {
        let pass_eligible = direction.flips_passes() && m.baseline()[t] == Verdict::Pass;
        let fail_eligible = direction.flips_failures();
        if !pass_eligible && !fail_eligible {
            continue;
        }
        for mutant in m.cover().row_ones(t) {
            let flipped = match m.cell(t, mutant) {
                KillCell::Survived if pass_eligible => true,
                KillCell::Killed if fail_eligible => false,
                _ => continue,
            };
            if rng.random::<f64>() < p {
                out.set_kill(t, mutant, flipped);
            }
        }
    }
    out
}

/// Checks that `outcomes` has one entry per test of `m`.
pub(crate) fn check_outcome_len(expected: usize, outcomes: &[Outcome]) -> Result<()> {
    if expected == outcomes.len() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{expected} tests but {} outcomes",
            outcomes.len()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BitMatrix, Scope};

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("T#t{i}")).collect()
    }

    #[test]
    fn zero_probability_is_identity() {
        let baseline = vec![Verdict::Pass, Verdict::Fail, Verdict::Pass];
        let model = FlakinessModel::uniform(0.0).unwrap();
        let run = perturb_outcomes(&labels(3), &baseline, &model, RngStream::new(1, 0)).unwrap();
        assert_eq!(run.outcomes, vec![Outcome::Pass, Outcome::Fail, Outcome::Pass]);
        assert_eq!(run.counters.nb_flaked, 0);
        assert!(run.counters.is_consistent());
    }

    #[test]
    fn certain_flakes_hit_every_passing_test() {
        let baseline = vec![Verdict::Pass; 5];
        let model = FlakinessModel::uniform(1.0).unwrap();
        let run = perturb_outcomes(&labels(5), &baseline, &model, RngStream::new(1, 0)).unwrap();
        assert!(run.outcomes.iter().all(|o| *o == Outcome::FlakyFail));
        assert_eq!(run.counters.nb_flaked, 5);
        assert_eq!(run.counters.nb_passed, 0);
    }

    #[test]
    fn pass_to_fail_never_touches_failures() {
        let baseline = vec![Verdict::Fail, Verdict::Pass, Verdict::Fail];
        let model = FlakinessModel::uniform(1.0).unwrap();
        let run = perturb_outcomes(&labels(3), &baseline, &model, RngStream::new(3, 0)).unwrap();
        assert_eq!(run.outcomes, vec![Outcome::Fail, Outcome::FlakyFail, Outcome::Fail]);
        assert_eq!(run.counters.nb_real_failed, 2);
    }

    #[test]
    fn fail_to_pass_and_both() {
        let baseline = vec![Verdict::Fail, Verdict::Pass];
        let f2p = FlakinessModel::uniform(1.0)
            .unwrap()
            .with_direction(Direction::FailToPass);
        let run = perturb_outcomes(&labels(2), &baseline, &f2p, RngStream::new(3, 0)).unwrap();
        assert_eq!(run.outcomes, vec![Outcome::FlakyPass, Outcome::Pass]);
        let both = f2p.with_direction(Direction::Both);
        let run = perturb_outcomes(&labels(2), &baseline, &both, RngStream::new(3, 0)).unwrap();
        assert_eq!(run.outcomes, vec![Outcome::FlakyPass, Outcome::FlakyFail]);
        assert!(run.counters.is_consistent());
    }

    #[test]
    fn unknown_scope_test_is_error() {
        let model = FlakinessModel::uniform(0.5)
            .unwrap()
            .with_scope(Scope::Tests(vec!["ghost".into()]));
        let err = perturb_outcomes(&labels(2), &[Verdict::Pass; 2], &model, RngStream::new(0, 0));
        assert!(matches!(err, Err(Error::UnknownTest(_))));
    }

    #[test]
    fn out_of_scope_tests_unchanged() {
        let tests = vec!["A#x".to_string(), "B#y".to_string()];
        let model = FlakinessModel::uniform(1.0)
            .unwrap()
            .with_scope(Scope::Groups(vec!["B".into()]));
        let run = perturb_outcomes(&tests, &[Verdict::Pass; 2], &model, RngStream::new(0, 0)).unwrap();
        assert_eq!(run.outcomes, vec![Outcome::Pass, Outcome::FlakyFail]);
    }

    struct CapAfterOne;
    impl FlakeProcess for CapAfterOne {
        fn probability(&mut self, _t: usize, base: f64, flaked: u64) -> f64 {
            if flaked >= 1 {
                0.0
            } else {
                base
            }
        }
    }

    #[test]
    fn history_dependent_process_plugs_in() {
        let model = FlakinessModel::uniform(1.0).unwrap();
        let run = perturb_outcomes_with(
            &labels(4),
            &[Verdict::Pass; 4],
            &model,
            &mut CapAfterOne,
            RngStream::new(0, 0),
        )
        .unwrap();
        assert_eq!(run.counters.nb_flaked, 1);
        assert_eq!(run.outcomes[0], Outcome::FlakyFail);
    }

    fn one_survivor() -> KillMatrix {
        KillMatrix::from_cells(
            labels(2),
            vec!["m0".into(), "m1".into()],
            &[
                vec![KillCell::Killed, KillCell::Survived],
                vec![KillCell::Uncovered, KillCell::Uncovered],
            ],
            vec![Verdict::Pass; 2],
        )
        .unwrap()
    }

    #[test]
    fn kill_matrix_zero_and_one() {
        let m = one_survivor();
        let same = perturb_kill_matrix(&m, &FlakinessModel::uniform(0.0).unwrap(), RngStream::new(5, 0)).unwrap();
        assert_eq!(same, m);
        let all = perturb_kill_matrix(&m, &FlakinessModel::uniform(1.0).unwrap(), RngStream::new(5, 0)).unwrap();
        assert_eq!(all.killed_mutants(), vec![true, true]);
        assert_eq!(all.cover(), m.cover());
        assert_eq!(all.cell(1, 1), KillCell::Uncovered);
    }

    #[test]
    fn kill_matrix_unkill_under_fail_to_pass() {
        let m = one_survivor();
        let model = FlakinessModel::uniform(1.0)
            .unwrap()
            .with_direction(Direction::FailToPass);
        let out = perturb_kill_matrix(&m, &model, RngStream::new(5, 0)).unwrap();
        assert_eq!(out.killed_mutants(), vec![false, false]);
    }

    #[test]
    fn fl_run_keeps_coverage() {
        let cm = CoverageMatrix::new(
            labels(2),
            vec!["s".into()],
            BitMatrix::from_rows(1, &[[true], [false]]).unwrap(),
            vec![Verdict::Pass, Verdict::Fail],
        )
        .unwrap();
        let before = cm.clone();
        let run = perturb_fl_run(&cm, &FlakinessModel::uniform(1.0).unwrap(), RngStream::new(0, 0)).unwrap();
        assert_eq!(run.outcomes, vec![Outcome::FlakyFail, Outcome::Fail]);
        assert_eq!(cm, before);
    }
}
