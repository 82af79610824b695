use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{PatchId, Validate};
use crate::error::{Error, Result};

/// A patch produced by a deterministic repair tool.
///
/// Only the number of covering tests matters to the i.i.d. flakiness model;
/// the explicit test list is kept when the input provides it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchRecord {
    pub id: String,
    #[serde(rename = "covering_tests", with = "covering_serde")]
    pub covering: Covering,
    #[serde(rename = "valid")]
    pub is_valid: bool,
    #[serde(rename = "genuine")]
    pub is_genuine: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Covering {
    Count(u64),
    Tests(Vec<String>),
}

impl PatchRecord {
    pub fn new(id: impl Into<String>, covering_tests: u64, is_valid: bool, is_genuine: bool) -> Self {
        PatchRecord {
            id: id.into(),
            covering: Covering::Count(covering_tests),
            is_valid,
            is_genuine,
        }
    }

    pub fn with_tests(id: impl Into<String>, tests: Vec<String>, is_valid: bool, is_genuine: bool) -> Self {
        PatchRecord {
            id: id.into(),
            covering: Covering::Tests(tests),
            is_valid,
            is_genuine,
        }
    }

    /// `|T_v|`.
    pub fn covering_tests(&self) -> u64 {
        match &self.covering {
            Covering::Count(n) => *n,
            Covering::Tests(t) => t.len() as u64,
        }
    }

    pub fn patch_id(&self, index: usize) -> PatchId {
        PatchId::new(index, self.id.clone())
    }
}

mod covering_serde {
    use super::Covering;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Count(u64),
        Tests(Vec<String>),
    }

    pub fn serialize<S: Serializer>(c: &Covering, s: S) -> Result<S::Ok, S::Error> {
        match c {
            Covering::Count(n) => Repr::Count(*n),
            Covering::Tests(t) => Repr::Tests(t.clone()),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Covering, D::Error> {
        Ok(match Repr::deserialize(d)? {
            Repr::Count(n) => Covering::Count(n),
            Repr::Tests(t) => Covering::Tests(t),
        })
    }
}

/// Patches of one bug, with `G ⊆ V ⊆ P`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairScenario {
    pub patches: Vec<PatchRecord>,
}

impl RepairScenario {
    pub fn new(patches: Vec<PatchRecord>) -> Result<Self> {
        let s = RepairScenario { patches };
        s.validate()?;
        Ok(s)
    }

    pub fn valid(&self) -> impl Iterator<Item = &PatchRecord> + Clone {
        self.patches.iter().filter(|p| p.is_valid)
    }

    pub fn genuine(&self) -> impl Iterator<Item = &PatchRecord> + Clone {
        self.patches.iter().filter(|p| p.is_genuine)
    }
}

impl Validate for RepairScenario {
    fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for p in &self.patches {
            if !ids.insert(p.id.as_str()) {
                return Err(Error::DuplicateLabel(p.id.clone()));
            }
            let fail = |reason: &str| {
                Err(Error::Patch {
                    id: p.id.clone(),
                    reason: reason.into(),
                })
            };
            if p.is_genuine && !p.is_valid {
                return fail("genuine patches must be valid");
            }
            if p.is_valid && p.covering_tests() == 0 {
                return fail("valid patches need at least one covering test");
            }
            if let Covering::Tests(t) = &p.covering {
                if t.iter().collect::<HashSet<_>>().len() != t.len() {
                    return fail("covering test list has duplicates");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genuine_must_be_valid() {
        let err = RepairScenario::new(vec![PatchRecord::new("g", 1, false, true)]).unwrap_err();
        assert!(matches!(err, Error::Patch { .. }));
    }

    #[test]
    fn valid_needs_covering_test() {
        assert!(RepairScenario::new(vec![PatchRecord::new("v", 0, true, false)]).is_err());
        assert!(RepairScenario::new(vec![PatchRecord::new("p", 0, false, false)]).is_ok());
    }

    #[test]
    fn explicit_tests_give_count() {
        let p = PatchRecord::with_tests("v", vec!["a".into(), "b".into()], true, true);
        assert_eq!(p.covering_tests(), 2);
        let dup = PatchRecord::with_tests("w", vec!["a".into(), "a".into()], true, false);
        assert!(RepairScenario::new(vec![dup]).is_err());
    }

    #[test]
    fn json_accepts_count_or_list() {
        let s: RepairScenario = serde_json::from_str(
            r#"{"patches":[{"id":"a","covering_tests":3,"valid":true,"genuine":false},
                           {"id":"b","covering_tests":["t1","t2"],"valid":true,"genuine":true}]}"#,
        )
        .unwrap();
        assert_eq!(s.patches[0].covering_tests(), 3);
        assert_eq!(s.patches[1].covering_tests(), 2);
        let back: RepairScenario = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
