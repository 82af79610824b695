//! Generators and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flakilab::report_io::{ExperimentReport, MetricRow, ReplicateResult, TestCase, TestReport};
use flakilab::{BitMatrix, CoverageMatrix, KillCell, KillMatrix, Outcome, PatchRecord, RepairScenario, Verdict};

pub fn verdict() -> impl Strategy<Value = Verdict> {
    prop_oneof![Just(Verdict::Pass), Just(Verdict::Fail)]
}

pub fn outcome() -> impl Strategy<Value = Outcome> {
    prop_oneof![
        Just(Outcome::Pass),
        Just(Outcome::Fail),
        Just(Outcome::FlakyFail),
        Just(Outcome::FlakyPass),
    ]
}

/// Printable labels including characters that need quoting or escaping.
pub fn label() -> impl Strategy<Value = String> {
    "[A-Za-z0-9_.$#<>&'\" ,;:é中-]{0,8}"
}

/// `n` distinct labels.
pub fn labels(n: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(label(), n).prop_map(|v| v.into_iter().enumerate().map(|(i, l)| format!("{l}{i}")).collect())
}

pub fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        -1e3..1e3f64,
        Just(0.0),
        Just(0.1),
    ]
}

pub fn test_report() -> impl Strategy<Value = TestReport> {
    let case = (
        prop_oneof![Just(String::new()), "[a-z]{1,3}(\\.[A-Z][a-z]{0,3}){0,2}"],
        "[A-Za-z0-9_<>&'\" $-]{1,8}",
        outcome(),
        prop_oneof![
            0.0..1e4f64,
            Just(0.0),
            Just(1e-9),
            any::<f64>().prop_map(f64::abs).prop_filter("finite", |x| x.is_finite())
        ],
    );
    ("[A-Za-z0-9 <>&-]{0,8}", prop::collection::vec(case, 0..50)).prop_map(|(name, cases)| {
        let mut seen = BTreeSet::new();
        let cases = cases
            .into_iter()
            .filter(|(c, n, _, _)| seen.insert((c.clone(), n.clone())))
            .map(|(c, n, o, d)| TestCase::new(c, n, o, d))
            .collect();
        TestReport::new(name, cases).expect("generated report is valid")
    })
}

pub fn coverage_matrix() -> impl Strategy<Value = CoverageMatrix> {
    (0usize..10, 0usize..12)
        .prop_flat_map(|(t, s)| {
            (
                labels(t),
                labels(s),
                prop::collection::vec(prop::collection::vec(any::<bool>(), s), t),
                prop::collection::vec(verdict(), t),
            )
        })
        .prop_map(|(tests, stmts, rows, baseline)| {
            let n = stmts.len();
            let cover = BitMatrix::from_rows(n, &rows).unwrap();
            CoverageMatrix::new(tests, stmts, cover, baseline).unwrap()
        })
}

pub fn kill_cell() -> impl Strategy<Value = KillCell> {
    prop_oneof![
        Just(KillCell::Uncovered),
        Just(KillCell::Survived),
        Just(KillCell::Killed)
    ]
}

pub fn kill_matrix() -> impl Strategy<Value = KillMatrix> {
    (0usize..10, 0usize..12)
        .prop_flat_map(|(t, k)| {
            (
                labels(t),
                labels(k),
                prop::collection::vec(prop::collection::vec(kill_cell(), k), t),
                prop::collection::vec(verdict(), t),
            )
        })
        .prop_map(|(tests, mutants, rows, baseline)| KillMatrix::from_cells(tests, mutants, &rows, baseline).unwrap())
}

fn json_value() -> impl Strategy<Value = serde_json::Value> {
    let leaf = prop_oneof![
        Just(serde_json::Value::Null),
        any::<bool>().prop_map(serde_json::Value::Bool),
        any::<i64>().prop_map(|x| x.into()),
        any::<u64>().prop_map(|x| x.into()),
        finite().prop_map(serde_json::Value::from),
        label().prop_map(serde_json::Value::String),
    ];
    leaf.prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(serde_json::Value::Array),
            prop::collection::btree_map(label(), inner, 0..4)
                .prop_map(|m| serde_json::Value::Object(m.into_iter().collect())),
        ]
    })
}

fn opt_finite() -> impl Strategy<Value = Option<f64>> {
    prop::option::of(finite())
}

pub fn experiment_report() -> impl Strategy<Value = ExperimentReport> {
    let result = (
        opt_finite(),
        any::<u64>(),
        prop::option::of(label()),
        prop::collection::btree_map("[a-z_]{1,8}", opt_finite(), 0..4),
    )
        .prop_map(
            |(p, replicate, label, metrics): (_, _, _, BTreeMap<String, Option<f64>>)| {
                let mut r = ReplicateResult::new(p, replicate);
                r.label = label;
                r.metrics = metrics;
                r
            },
        );
    let row =
        (opt_finite(), prop::option::of(label()), "[a-z_]{1,8}", opt_finite()).prop_map(|(p, label, metric, value)| {
            let mut r = MetricRow::new(p, &metric, value);
            r.label = label;
            r
        });
    (
        "[a-z-]{1,12}",
        any::<u64>(),
        json_value(),
        prop::collection::vec(result, 0..6),
        prop::collection::vec(row, 0..4),
    )
        .prop_map(|(experiment, seed, config, results, summary)| {
            let mut r = ExperimentReport::new(experiment, seed, config);
            r.results = results;
            r.summary = summary;
            r
        })
}

pub fn scenario() -> impl Strategy<Value = RepairScenario> {
    prop::collection::vec((1u64..60, any::<bool>(), any::<bool>()), 0..10).prop_map(|ps| {
        let patches = ps
            .into_iter()
            .enumerate()
            .map(|(i, (k, valid, genuine))| PatchRecord::new(format!("p{i}"), k, valid, valid && genuine))
            .collect();
        RepairScenario::new(patches).unwrap()
    })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random `n_tests x n_mutants` kill matrix: each cell covered with
/// probability `density`, covered cells killed with probability one half,
/// roughly one test in ten failing on the original program.
pub fn random_kill_matrix(n_tests: usize, n_mutants: usize, density: f64, seed: u64) -> KillMatrix {
    let mut r = rng(seed);
    let rows: Vec<Vec<KillCell>> = (0..n_tests)
        .map(|_| {
            (0..n_mutants)
                .map(|_| {
                    if r.random::<f64>() >= density {
                        KillCell::Uncovered
                    } else if r.random::<bool>() {
                        KillCell::Killed
                    } else {
                        KillCell::Survived
                    }
                })
                .collect()
        })
        .collect();
    let baseline = (0..n_tests)
        .map(|_| {
            if r.random::<f64>() < 0.1 {
                Verdict::Fail
            } else {
                Verdict::Pass
            }
        })
        .collect();
    KillMatrix::from_cells(
        (0..n_tests).map(|i| format!("C{}#t{i}", i % 4)).collect(),
        (0..n_mutants).map(|j| format!("m{j}")).collect(),
        &rows,
        baseline,
    )
    .unwrap()
}
