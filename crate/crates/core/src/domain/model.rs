use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{check_probability, test_group, Validate, Verdict};
use crate::error::{Error, Result};

/// Which recorded outcomes injected flakiness may invert.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    #[default]
    PassToFail,
    FailToPass,
    Both,
}

impl Direction {
    pub fn flips_passes(self) -> bool {
        matches!(self, Direction::PassToFail | Direction::Both)
    }

    pub fn flips_failures(self) -> bool {
        matches!(self, Direction::FailToPass | Direction::Both)
    }
}

/// Set of tests that are allowed to flake.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    #[default]
    All,
    /// Every test sharing a class with one of the recorded failing tests.
    FailingGroups,
    Groups(Vec<String>),
    Tests(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlakeProbability {
    Uniform(f64),
    /// Explicit probabilities by test label; unlisted tests never flake.
    PerTest(BTreeMap<String, f64>),
}

/// Per-test flake probabilities together with direction and scope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlakinessModel {
    pub probability: FlakeProbability,
    pub direction: Direction,
    pub scope: Scope,
}

impl FlakinessModel {
    pub fn uniform(p: f64) -> Result<Self> {
        let model = FlakinessModel {
            probability: FlakeProbability::Uniform(p),
            direction: Direction::PassToFail,
            scope: Scope::All,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn per_test(probabilities: BTreeMap<String, f64>) -> Result<Self> {
        let model = FlakinessModel {
            probability: FlakeProbability::PerTest(probabilities),
            direction: Direction::PassToFail,
            scope: Scope::All,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_scope(mut self, scope: Scope) -> Self {
        self.scope = scope;
        self
    }

    /// Same direction and scope, uniform probability `p`.
    pub fn with_uniform(&self, p: f64) -> Result<Self> {
        let model = FlakinessModel {
            probability: FlakeProbability::Uniform(p),
            ..self.clone()
        };
        model.validate()?;
        Ok(model)
    }

    pub fn uniform_probability(&self) -> Option<f64> {
        match self.probability {
            FlakeProbability::Uniform(p) => Some(p),
            FlakeProbability::PerTest(_) => None,
        }
    }

    /// Scope membership per test.
    pub fn in_scope(&self, tests: &[String], baseline: &[Verdict]) -> Result<Vec<bool>> {
        if tests.len() != baseline.len() {
            return Err(Error::Dimension(format!(
                "{} tests but {} baseline verdicts",
                tests.len(),
                baseline.len()
            )));
        }
        Ok(match &self.scope {
            Scope::All => vec![true; tests.len()],
            Scope::Tests(wanted) => {
                let index: HashMap<&str, usize> = tests.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
                let mut member = vec![false; tests.len()];
                for w in wanted {
                    let i = index.get(w.as_str()).ok_or_else(|| Error::UnknownTest(w.clone()))?;
                    member[*i] = true;
                }
                member
            }
            Scope::Groups(groups) => {
                let known: HashSet<&str> = tests.iter().filter_map(|t| test_group(t)).collect();
                if let Some(g) = groups.iter().find(|g| !known.contains(g.as_str())) {
                    return Err(Error::UnknownGroup(g.clone()));
                }
                tests
                    .iter()
                    .map(|t| test_group(t).is_some_and(|g| groups.iter().any(|w| w == g)))
                    .collect()
            }
            Scope::FailingGroups => {
                let failing: HashSet<&str> = tests
                    .iter()
                    .zip(baseline)
                    .filter(|(_, v)| **v == Verdict::Fail)
                    .map(|(t, _)| test_group(t).unwrap_or(t.as_str()))
                    .collect();
                tests
                    .iter()
                    .map(|t| failing.contains(test_group(t).unwrap_or(t.as_str())))
                    .collect()
            }
        })
    }

    /// Effective flake probability of every test; out-of-scope tests get 0.
    pub fn resolve(&self, tests: &[String], baseline: &[Verdict]) -> Result<Vec<f64>> {
        let scope = self.in_scope(tests, baseline)?;
        let raw: Vec<f64> = match &self.probability {
            FlakeProbability::Uniform(p) => vec![*p; tests.len()],
            FlakeProbability::PerTest(map) => {
                let index: HashMap<&str, usize> = tests.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
                let mut probs = vec![0.0; tests.len()];
                for (label, p) in map {
                    let i = index
                        .get(label.as_str())
                        .ok_or_else(|| Error::UnknownTest(label.clone()))?;
                    probs[*i] = *p;
                }
                probs
            }
        };
        Ok(raw
            .into_iter()
            .zip(scope)
            .map(|(p, s)| if s { p } else { 0.0 })
            .collect())
    }
}

impl Validate for FlakinessModel {
    fn validate(&self) -> Result<()> {
        match &self.probability {
            FlakeProbability::Uniform(p) => check_probability(*p, || "uniform flake rate".into()),
            FlakeProbability::PerTest(map) => map
                .iter()
                .try_for_each(|(t, p)| check_probability(*p, || format!("flake rate of `{t}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn suite() -> (Vec<String>, Vec<Verdict>) {
        let tests = ["A#t1", "A#t2", "B#t1", "B#t2", "loose"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let baseline = vec![
            Verdict::Fail,
            Verdict::Pass,
            Verdict::Pass,
            Verdict::Pass,
            Verdict::Pass,
        ];
        (tests, baseline)
    }

    #[test]
    fn rejects_out_of_range_probabilities() {
        assert!(FlakinessModel::uniform(1.5).is_err());
        assert!(FlakinessModel::uniform(-0.1).is_err());
        assert!(FlakinessModel::uniform(f64::NAN).is_err());
        let bad = BTreeMap::from([("a".to_string(), 2.0)]);
        assert!(matches!(FlakinessModel::per_test(bad), Err(Error::Probability { .. })));
    }

    #[test]
    fn scopes_resolve() {
        let (tests, baseline) = suite();
        let m = FlakinessModel::uniform(0.5).unwrap();
        assert_eq!(m.resolve(&tests, &baseline).unwrap(), vec![0.5; 5]);

        let g = m.clone().with_scope(Scope::Groups(vec!["B".into()]));
        assert_eq!(g.resolve(&tests, &baseline).unwrap(), vec![0.0, 0.0, 0.5, 0.5, 0.0]);

        let f = m.clone().with_scope(Scope::FailingGroups);
        assert_eq!(f.resolve(&tests, &baseline).unwrap(), vec![0.5, 0.5, 0.0, 0.0, 0.0]);

        let t = m.with_scope(Scope::Tests(vec!["loose".into()]));
        assert_eq!(t.resolve(&tests, &baseline).unwrap(), vec![0.0, 0.0, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn unknown_scope_members_are_errors() {
        let (tests, baseline) = suite();
        let m = FlakinessModel::uniform(0.1).unwrap();
        let t = m.clone().with_scope(Scope::Tests(vec!["nope".into()]));
        assert!(matches!(t.resolve(&tests, &baseline), Err(Error::UnknownTest(_))));
        let g = m.with_scope(Scope::Groups(vec!["C".into()]));
        assert!(matches!(g.resolve(&tests, &baseline), Err(Error::UnknownGroup(_))));
        let p = FlakinessModel::per_test(BTreeMap::from([("zz".to_string(), 0.1)])).unwrap();
        assert!(matches!(p.resolve(&tests, &baseline), Err(Error::UnknownTest(_))));
    }

    #[test]
    fn per_test_defaults_to_zero() {
        let (tests, baseline) = suite();
        let p = FlakinessModel::per_test(BTreeMap::from([("B#t2".to_string(), 0.25)])).unwrap();
        assert_eq!(p.resolve(&tests, &baseline).unwrap(), vec![0.0, 0.0, 0.0, 0.25, 0.0]);
    }
}
