//! JSON files for repair scenarios and synthetic programs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::domain::{BitMatrix, CoverageMatrix, PatchRecord, RepairScenario, Validate, Verdict};
use crate::error::{Error, Result};
use crate::repair_sim::SyntheticProgram;

/// Patches of one bug plus an optional default flake probability.
///
/// ```json
/// {"p": 0.05, "patches": [{"id": "v0", "covering_tests": 2, "valid": true, "genuine": true}]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub patches: Vec<PatchRecord>,
}

impl ScenarioFile {
    pub fn scenario(&self) -> Result<RepairScenario> {
        RepairScenario::new(self.patches.clone())
    }
}

pub fn parse_scenario_json(bytes: &[u8]) -> Result<ScenarioFile> {
    let file: ScenarioFile = serde_json::from_slice(bytes)?;
    file.scenario()?;
    Ok(file)
}

pub fn emit_scenario_json(file: &ScenarioFile) -> Result<Vec<u8>> {
    file.scenario()?;
    let mut out = serde_json::to_vec_pretty(file)?;
    out.push(b'\n');
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProgramTest {
    label: String,
    baseline: Verdict,
    /// Labels of the covered statements.
    covers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProgramFile {
    statements: Vec<String>,
    tests: Vec<ProgramTest>,
    buggy: Vec<String>,
    fix_probability: f64,
}

/// Reads a synthetic program:
///
/// ```json
/// {"statements": ["s0", "s1"],
///  "tests": [{"label": "A#t0", "baseline": "fail", "covers": ["s0"]}],
///  "buggy": ["s0"], "fix_probability": 0.5}
/// ```
pub fn parse_program_json(bytes: &[u8]) -> Result<SyntheticProgram> {
    let file: ProgramFile = serde_json::from_slice(bytes)?;
    let index: HashMap<&str, usize> = file
        .statements
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let lookup = |s: &str| {
        index
            .get(s)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown statement `{s}`")))
    };
    let mut cover = BitMatrix::new(file.tests.len(), file.statements.len());
    for (t, test) in file.tests.iter().enumerate() {
        for s in &test.covers {
            cover.set(t, lookup(s)?, true);
        }
    }
    let buggy = file.buggy.iter().map(|s| lookup(s)).collect::<Result<Vec<_>>>()?;
    let coverage = CoverageMatrix::new(
        file.tests.iter().map(|t| t.label.clone()).collect(),
        file.statements.clone(),
        cover,
        file.tests.iter().map(|t| t.baseline).collect(),
    )?;
    SyntheticProgram::new(coverage, &buggy, file.fix_probability)
}

pub fn emit_program_json(prog: &SyntheticProgram) -> Result<Vec<u8>> {
    prog.validate()?;
    let cov = prog.coverage();
    let file = ProgramFile {
        statements: cov.statements().to_vec(),
        tests: (0..cov.n_tests())
            .map(|t| ProgramTest {
                label: cov.tests()[t].clone(),
                baseline: cov.baseline()[t],
                covers: cov.cover().row_ones(t).map(|s| cov.statements()[s].clone()).collect(),
            })
            .collect(),
        buggy: prog
            .buggy_statements()
            .into_iter()
            .map(|s| cov.statements()[s].clone())
            .collect(),
        fix_probability: prog.fix_probability(),
    };
    let mut out = serde_json::to_vec_pretty(&file)?;
    out.push(b'\n');
    Ok(out)
}
