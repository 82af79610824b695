//! Experiment configuration and the drivers behind each command.
//!
//! A configuration names the experiment, its input files, the flakiness
//! model, an optional probability grid, the replicate count and seed, and
//! where to write outputs. [`run`] is deterministic for a given configuration
//! (thread count included) and touches no file except its inputs;
//! [`write_outputs`] writes the reports afterwards.
//!
//! ```json
//! {"experiment": "mutation-sweep",
//!  "inputs": {"matrix": "kill.csv"},
//!  "flakiness": {"direction": "pass-to-fail", "scope": "all"},
//!  "sweep": {"p_start": 0.0, "p_end": 0.5, "p_step": 0.01},
//!  "replicates": 1000, "seed": 42,
//!  "outputs": {"json": "sweep.json", "csv": "sweep.csv"}}
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{Direction, FlakinessModel, Outcome, Scope};
use crate::error::{Error, Result};
use crate::fl::{self, MetricSummary, OchiaiMode, DEFAULT_THRESHOLD};
use crate::flakiness::perturb_fl_run;
use crate::mutation::{self, SuiteSampling};
use crate::repair_analytic::{self, monte_carlo_repair};
use crate::repair_sim::{self, CampaignConfig, CampaignResult, FixtureParams, SyntheticProgram};
use crate::report_io::{
    emit_flaked_report, emit_long_csv, emit_report_json, parse_coverage_csv, parse_junit_xml, parse_kill_csv,
    parse_program_json, parse_scenario_json, ExperimentReport, MetricRow, ReplicateResult,
};
use crate::rng::RngStream;
use crate::stats::{self, WilcoxonResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    MutationSweep,
    SampledSuites,
    RepairAnalytic,
    RepairSim,
    FlLocalize,
    FlRobustnessSweep,
    FlakeReport,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::MutationSweep,
        ExperimentKind::SampledSuites,
        ExperimentKind::RepairAnalytic,
        ExperimentKind::RepairSim,
        ExperimentKind::FlLocalize,
        ExperimentKind::FlRobustnessSweep,
        ExperimentKind::FlakeReport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::MutationSweep => "mutation-sweep",
            ExperimentKind::SampledSuites => "sampled-suites",
            ExperimentKind::RepairAnalytic => "repair-analytic",
            ExperimentKind::RepairSim => "repair-sim",
            ExperimentKind::FlLocalize => "fl-localize",
            ExperimentKind::FlRobustnessSweep => "fl-robustness-sweep",
            ExperimentKind::FlakeReport => "flake-report",
        }
    }

    fn default_replicates(self) -> usize {
        match self {
            ExperimentKind::MutationSweep => 1000,
            ExperimentKind::SampledSuites | ExperimentKind::FlRobustnessSweep => 100,
            ExperimentKind::RepairAnalytic => 0,
            ExperimentKind::RepairSim => 10,
            ExperimentKind::FlLocalize | ExperimentKind::FlakeReport => 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    /// Kill matrix CSV (mutation experiments) or coverage matrix CSV (fault
    /// localization).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<PathBuf>,
    /// JUnit XML report.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    /// Synthetic program JSON.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlakinessConfig {
    /// Uniform flake probability.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Per-test probabilities by label; exclusive with `p`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_test: Option<BTreeMap<String, f64>>,
    pub direction: Direction,
    pub scope: Scope,
}

impl FlakinessConfig {
    pub fn model(&self, default_p: f64) -> Result<FlakinessModel> {
        let model = match (&self.per_test, self.p) {
            (Some(_), Some(_)) => return Err(Error::InvalidArgument("flakiness sets both `p` and `per_test`".into())),
            (Some(map), None) => FlakinessModel::per_test(map.clone())?,
            (None, p) => FlakinessModel::uniform(p.unwrap_or(default_p))?,
        };
        Ok(model.with_direction(self.direction).with_scope(self.scope.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub p_start: f64,
    pub p_end: f64,
    pub p_step: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            p_start: 0.0,
            p_end: 0.5,
            p_step: 0.01,
        }
    }
}

impl SweepConfig {
    /// `p_start, p_start + p_step, …` up to `p_end` inclusive, rounded to
    /// twelve decimals so that grid points print as typed.
    pub fn grid(&self) -> Result<Vec<f64>> {
        let SweepConfig { p_start, p_end, p_step } = *self;
        if !(0.0 <= p_start && p_start <= p_end && p_end <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "sweep range [{p_start}, {p_end}] must lie within [0, 1]"
            )));
        }
        if p_step.is_nan() || p_step <= 0.0 {
            return Err(Error::InvalidArgument(format!("sweep step {p_step} must be positive")));
        }
        let n = ((p_end - p_start) / p_step + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|i| ((p_start + i as f64 * p_step) * 1e12).round() / 1e12)
            .map(|p| p.min(1.0))
            .collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    /// Long-form CSV.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// Flaked JUnit report of the first replicate (`flake-report`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xml: Option<PathBuf>,
}

/// Which campaigns `repair-sim` runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    #[default]
    Compare,
    Targeted,
    NonTargeted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub threshold: f64,
    pub ochiai: OchiaiMode,
    pub n_suites: usize,
    pub size_min: f64,
    pub size_max: f64,
    pub budget: usize,
    pub population: usize,
    pub mode: SimMode,
    /// Generator parameters for `repair-sim` without a fixture file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<FixtureParams>,
    /// Worker threads; results do not depend on it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl Default for Params {
    fn default() -> Self {
        let sampling = SuiteSampling::default();
        let campaign = CampaignConfig::default();
        Params {
            threshold: DEFAULT_THRESHOLD,
            ochiai: OchiaiMode::Standard,
            n_suites: sampling.n_suites,
            size_min: sampling.min_fraction,
            size_max: sampling.max_fraction,
            budget: campaign.budget,
            population: campaign.population,
            mode: SimMode::Compare,
            generator: None,
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub flakiness: FlakinessConfig,
    /// Probability grid; without it a single point at `flakiness.p` (or the
    /// experiment default) is evaluated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub params: Params,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            inputs: Inputs::default(),
            flakiness: FlakinessConfig::default(),
            sweep: None,
            replicates: None,
            seed: None,
            outputs: Outputs::default(),
            params: Params::default(),
        }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn replicates(&self) -> usize {
        self.replicates.unwrap_or_else(|| self.experiment.default_replicates())
    }

    /// Configuration as embedded in reports: output paths and the thread
    /// count are left out since they do not affect results.
    pub fn echo(&self) -> serde_json::Value {
        let mut c = self.clone();
        c.outputs = Outputs::default();
        c.params.jobs = None;
        serde_json::to_value(c).expect("configurations serialize")
    }

    /// Evaluated probabilities.
    fn grid(&self, default_p: f64) -> Result<Vec<f64>> {
        match &self.sweep {
            Some(s) => s.grid(),
            None => Ok(vec![self.flakiness.p.unwrap_or(default_p)]),
        }
    }
}

/// Reports produced by one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    /// Flaked JUnit report of replicate 0, for `flake-report`.
    pub xml: Option<Vec<u8>>,
}

/// Runs an experiment. The configuration must carry a seed.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let seed = config
        .seed
        .ok_or_else(|| Error::InvalidArgument("experiment has no seed".into()))?;
    match config.params.jobs {
        Some(0) => Err(Error::InvalidArgument("jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(|| dispatch(config, seed)),
        None => dispatch(config, seed),
    }
}

/// Writes the configured outputs. Nothing is written unless every report
/// serializes.
pub fn write_outputs(config: &ExperimentConfig, output: &ExperimentOutput) -> Result<()> {
    let mut files: Vec<(&Path, Vec<u8>)> = Vec::new();
    if let Some(p) = &config.outputs.json {
        files.push((p, emit_report_json(&output.report)?));
    }
    if let Some(p) = &config.outputs.csv {
        files.push((p, emit_long_csv(&output.report)));
    }
    if let (Some(p), Some(xml)) = (&config.outputs.xml, &output.xml) {
        files.push((p, xml.clone()));
    }
    for (path, bytes) in files {
        fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn dispatch(config: &ExperimentConfig, seed: u64) -> Result<ExperimentOutput> {
    let mut report = ExperimentReport::new(config.experiment.name(), seed, config.echo());
    let mut xml = None;
    match config.experiment {
        ExperimentKind::MutationSweep => mutation_sweep(config, seed, &mut report)?,
        ExperimentKind::SampledSuites => sampled_suites(config, seed, &mut report)?,
        ExperimentKind::RepairAnalytic => repair_analytic(config, seed, &mut report)?,
        ExperimentKind::RepairSim => repair_sim(config, seed, &mut report)?,
        ExperimentKind::FlLocalize => fl_localize(config, seed, &mut report)?,
        ExperimentKind::FlRobustnessSweep => fl_robustness(config, seed, &mut report)?,
        ExperimentKind::FlakeReport => xml = Some(flake_report(config, seed, &mut report)?),
    }
    Ok(ExperimentOutput { report, xml })
}

fn read_input(path: &Option<PathBuf>, key: &str) -> Result<Vec<u8>> {
    let path = path
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("missing input `{key}`")))?;
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Grid of a sweep experiment: the configured sweep, else the single
/// configured probability, else the default sweep.
fn sweep_grid(config: &ExperimentConfig) -> Result<Vec<f64>> {
    if config.flakiness.per_test.is_some() {
        return Err(Error::InvalidArgument(format!(
            "{} varies a uniform probability; per-test probabilities do not apply",
            config.experiment.name()
        )));
    }
    match (&config.sweep, config.flakiness.p) {
        (Some(s), _) => s.grid(),
        (None, Some(p)) => Ok(vec![p]),
        (None, None) => SweepConfig::default().grid(),
    }
}

/// Model evaluated at grid point `p`; per-test models ignore the grid.
fn model_at(config: &ExperimentConfig, p: f64) -> Result<FlakinessModel> {
    let model = config.flakiness.model(p)?;
    match config.flakiness.per_test {
        Some(_) => Ok(model),
        None => model.with_uniform(p),
    }
}

fn require_replicates(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidArgument("at least one replicate is required".into()));
    }
    Ok(n)
}

fn mutation_sweep(config: &ExperimentConfig, seed: u64, report: &mut ExperimentReport) -> Result<()> {
    let m = parse_kill_csv(&read_input(&config.inputs.matrix, "matrix")?)?;
    let model = config.flakiness.model(0.0)?;
    let grid = sweep_grid(config)?;
    let n = require_replicates(config.replicates())?;
    let points = mutation::score_sweep(&m, &model, &grid, n, seed)?;
    report.summary.push(MetricRow::new(
        None,
        "baseline_score",
        mutation::mutation_score::<f64>(&m)?,
    ));
    for pt in points {
        let p = Some(pt.p);
        for (r, s) in pt.scores.iter().enumerate() {
            report
                .results
                .push(ReplicateResult::new(p, r as u64).metric("score", *s));
        }
        let saturation: f64 = mutation::saturation_score(&m, &model.with_uniform(pt.p)?)?;
        for (metric, value) in [
            ("mean", pt.mean),
            ("std", pt.std),
            ("std_error", pt.std / (n as f64).sqrt()),
            ("min", pt.min),
            ("max", pt.max),
            ("expected_mean", pt.expected.mean),
            ("expected_std", pt.expected.std),
            ("saturation", saturation),
        ] {
            report.summary.push(MetricRow::new(p, metric, value));
        }
    }
    Ok(())
}

fn sampled_suites(config: &ExperimentConfig, seed: u64, report: &mut ExperimentReport) -> Result<()> {
    let m = parse_kill_csv(&read_input(&config.inputs.matrix, "matrix")?)?;
    let sampling = SuiteSampling {
        n_suites: config.params.n_suites,
        min_fraction: config.params.size_min,
        max_fraction: config.params.size_max,
    };
    let n = require_replicates(config.replicates())?;
    for p in config.grid(0.05)? {
        let model = model_at(config, p)?;
        let res = mutation::sampled_suite_differences(&m, &model, sampling, n, seed)?;
        let pv = model.uniform_probability();
        for (i, s) in res.suites.iter().enumerate() {
            report.results.push(
                ReplicateResult::new(pv, i as u64)
                    .metric("size", s.size as f64)
                    .metric("base_score", s.base_score)
                    .metric("mean_difference", s.mean_difference),
            );
        }
        let q = res.suite_means;
        for (metric, value) in [
            ("mean", q.mean),
            ("std", q.std),
            ("min", q.min),
            ("q1", q.q1),
            ("median", q.median),
            ("q3", q.q3),
            ("max", q.max),
        ] {
            report
                .summary
                .push(MetricRow::new(pv, metric, value).with_label("mean_difference"));
        }
    }
    Ok(())
}

fn repair_analytic(config: &ExperimentConfig, seed: u64, report: &mut ExperimentReport) -> Result<()> {
    let file = parse_scenario_json(&read_input(&config.inputs.scenario, "scenario")?)?;
    let scenario = file.scenario()?;
    let default_p = file.p.unwrap_or(0.05);
    let valid: Vec<_> = scenario.valid().cloned().collect();
    let n = config.replicates();
    for p in config.grid(default_p)? {
        let r = repair_analytic::analyze::<f64>(&scenario, p)?;
        let pv = Some(p);
        for (i, risk) in r.per_patch.iter().enumerate() {
            report.results.push(
                ReplicateResult::new(pv, i as u64)
                    .with_label(risk.id.clone())
                    .metric("covering_tests", risk.covering_tests as f64)
                    .metric("invalidation", risk.invalidation),
            );
        }
        for (metric, value) in [
            ("n_patches", r.n_patches as f64),
            ("n_valid", r.n_valid as f64),
            ("n_genuine", r.n_genuine as f64),
            ("expected_valid", r.expected_valid),
            ("expected_genuine", r.expected_genuine),
            ("p_valid", r.p_valid),
            ("p_genuine", r.p_genuine),
        ] {
            report.summary.push(MetricRow::new(pv, metric, value));
        }
        if let Ok(adv) = repair_analytic::genuine_advantage::<f64>(&scenario, p) {
            report.summary.push(MetricRow::new(pv, "genuine_advantage", adv.ratio));
        }
        if n > 0 {
            let mc = monte_carlo_repair(&valid, p, n, seed)?;
            for (i, c) in mc.surviving.iter().enumerate() {
                report.results.push(
                    ReplicateResult::new(pv, i as u64)
                        .with_label("monte-carlo")
                        .metric("surviving", *c as f64),
                );
            }
            for (metric, value) in [
                ("mean_surviving", mc.mean_surviving),
                ("std_error", mc.std_error),
                ("at_least_one_rate", mc.at_least_one_rate),
            ] {
                report
                    .summary
                    .push(MetricRow::new(pv, metric, value).with_label("monte-carlo"));
            }
        }
    }
    Ok(())
}

fn load_program(config: &ExperimentConfig, seed: u64) -> Result<SyntheticProgram> {
    match (&config.inputs.fixture, &config.params.generator) {
        (Some(_), Some(_)) => Err(Error::InvalidArgument(
            "give either a fixture file or generator parameters".into(),
        )),
        (Some(_), None) => parse_program_json(&read_input(&config.inputs.fixture, "fixture")?),
        (None, g) => repair_sim::generate_fixture(&g.unwrap_or_default(), seed),
    }
}

fn campaign_row(p: Option<f64>, run: usize, label: &str, c: &CampaignResult) -> ReplicateResult {
    ReplicateResult::new(p, run as u64)
        .with_label(label)
        .metric("valid_patch_count", c.valid_patch_count as f64)
        .metric("failing_test_count", c.failing_test_count as f64)
        .metric("positive_test_count", c.positive_test_count as f64)
        .metric("executed_test_count", c.executed_test_count as f64)
        .metric("generations_used", c.generations_used as f64)
        .metric("candidates_evaluated", c.candidates_evaluated as f64)
        .metric("ingredient_count", c.ingredient_count as f64)
        .metric("buggy_ingredient_count", c.buggy_ingredient_count as f64)
}

fn campaign_summary(p: Option<f64>, label: &str, runs: &[CampaignResult]) -> Vec<MetricRow> {
    let valid: Vec<f64> = runs.iter().map(|c| c.valid_patch_count as f64).collect();
    let executed: Vec<f64> = runs.iter().map(|c| c.executed_test_count as f64).collect();
    [
        ("median_valid", stats::median(&valid)),
        ("mean_valid", stats::mean(&valid)),
        ("median_executed", stats::median(&executed)),
        ("std_executed", stats::population_std(&executed)),
    ]
    .into_iter()
    .map(|(metric, value)| MetricRow::new(p, metric, value).with_label(label))
    .collect()
}

fn wilcoxon_rows(p: Option<f64>, w: &WilcoxonResult) -> Vec<MetricRow> {
    [
        ("p_value", w.p_value),
        ("w_plus", Some(w.w_plus)),
        ("w_minus", Some(w.w_minus)),
        ("n_used", Some(w.n_used as f64)),
    ]
    .into_iter()
    .map(|(metric, value)| MetricRow::new(p, metric, value).with_label("wilcoxon"))
    .collect()
}

fn repair_sim(config: &ExperimentConfig, seed: u64, report: &mut ExperimentReport) -> Result<()> {
    let prog = load_program(config, seed)?;
    let runs = require_replicates(config.replicates())?;
    let base = CampaignConfig {
        budget: config.params.budget,
        population: config.params.population,
        threshold: config.params.threshold,
        ochiai: config.params.ochiai,
        targeted: false,
    };
    for p in config.grid(0.05)? {
        let model = model_at(config, p)?;
        let pv = model.uniform_probability();
        let mut sides: Vec<(&str, Vec<CampaignResult>)> = Vec::new();
        match config.params.mode {
            SimMode::Compare => {
                let c = repair_sim::compare_targeted(&prog, &model, &base, runs, seed)?;
                report.summary.extend(wilcoxon_rows(pv, &c.wilcoxon));
                sides.push(("targeted", c.targeted));
                sides.push(("non-targeted", c.non_targeted));
            }
            mode => {
                let targeted = mode == SimMode::Targeted;
                let cfg = CampaignConfig { targeted, ..base };
                let results = (0..runs as u64)
                    .map(|r| repair_sim::run_campaign(&prog, &model, &cfg, RngStream::new(seed, r)))
                    .collect::<Result<Vec<_>>>()?;
                sides.push((if targeted { "targeted" } else { "non-targeted" }, results));
            }
        }
        for (label, results) in &sides {
            for (r, c) in results.iter().enumerate() {
                report.results.push(campaign_row(pv, r, label, c));
            }
            report.summary.extend(campaign_summary(pv, label, results));
        }
    }
    Ok(())
}

fn selection_row(p: Option<f64>, r: usize, m: &crate::SelectionMetricsF64) -> ReplicateResult {
    ReplicateResult::new(p, r as u64)
        .metric("accuracy", m.accuracy)
        .metric("precision", m.precision)
        .metric("recall", m.recall)
}

fn metric_summary_rows(p: Option<f64>, name: &str, s: &MetricSummary) -> Vec<MetricRow> {
    vec![
        MetricRow::new(p, "mean", s.mean).with_label(name),
        MetricRow::new(p, "median", s.median).with_label(name),
        MetricRow::new(p, "missing", s.missing as f64).with_label(name),
    ]
}

fn fl_localize(config: &ExperimentConfig, seed: u64, report: &mut ExperimentReport) -> Result<()> {
    let m = parse_coverage_csv(&read_input(&config.inputs.matrix, "matrix")?)?;
    let (threshold, mode) = (config.params.threshold, config.params.ochiai);
    let n = require_replicates(config.replicates())?;
    let baseline: Vec<Outcome> = m.baseline().iter().map(|&v| v.into()).collect();
    let truth = fl::localize::<f64>(&m, &baseline, threshold, mode)?;
    for p in config.grid(0.0)? {
        let model = model_at(config, p)?;
        let pv = model.uniform_probability();
        let mut metrics = Vec::with_capacity(n);
        for r in 0..n {
            let run = perturb_fl_run(&m, &model, RngStream::new(seed, r as u64))?;
            let sus = fl::localize::<f64>(&m, &run.outcomes, threshold, mode)?;
            for (s, st) in sus.statements.iter().enumerate() {
                report.results.push(
                    ReplicateResult::new(pv, r as u64)
                        .with_label(m.statements()[s].clone())
                        .metric("score", st.score)
                        .metric("selected", if st.selected { 1.0 } else { 0.0 }),
                );
            }
            let sel = fl::selection_robustness(&truth, &sus)?;
            report.results.push(
                selection_row(pv, r, &sel)
                    .metric("failing_tests", run.failing_count() as f64)
                    .metric("flaked", run.counters.nb_flaked as f64)
                    .metric("selected_count", sus.selected_count() as f64),
            );
            metrics.push(sel);
        }
        report.summary.push(MetricRow::new(
            pv,
            "ground_truth_selected",
            truth.selected_count() as f64,
        ));
        report.summary.extend(metric_summary_rows(
            pv,
            "accuracy",
            &MetricSummary::of(metrics.iter().map(|x| x.accuracy)),
        ));
        report.summary.extend(metric_summary_rows(
            pv,
            "precision",
            &MetricSummary::of(metrics.iter().map(|x| x.precision)),
        ));
        report.summary.extend(metric_summary_rows(
            pv,
            "recall",
            &MetricSummary::of(metrics.iter().map(|x| x.recall)),
        ));
    }
    Ok(())
}

fn fl_robustness(config: &ExperimentConfig, seed: u64, report: &mut ExperimentReport) -> Result<()> {
    let m = parse_coverage_csv(&read_input(&config.inputs.matrix, "matrix")?)?;
    let model = config.flakiness.model(0.0)?;
    let grid = sweep_grid(config)?;
    let n = require_replicates(config.replicates())?;
    let points = fl::robustness_sweep(
        &m,
        &model,
        config.params.threshold,
        config.params.ochiai,
        &grid,
        n,
        seed,
    )?;
    for pt in points {
        let pv = Some(pt.p);
        for (r, x) in pt.replicates.iter().enumerate() {
            report.results.push(selection_row(pv, r, x));
        }
        report.summary.extend(metric_summary_rows(pv, "accuracy", &pt.accuracy));
        report
            .summary
            .extend(metric_summary_rows(pv, "precision", &pt.precision));
        report.summary.extend(metric_summary_rows(pv, "recall", &pt.recall));
    }
    Ok(())
}

fn flake_report(config: &ExperimentConfig, seed: u64, report: &mut ExperimentReport) -> Result<Vec<u8>> {
    let junit = parse_junit_xml(&read_input(&config.inputs.report, "report")?)?;
    let model = config.flakiness.model(0.05)?;
    let pv = model.uniform_probability();
    let n = require_replicates(config.replicates())?;
    let mut first = None;
    let mut flaked = Vec::with_capacity(n);
    for r in 0..n {
        let f = emit_flaked_report(&junit, &model, RngStream::new(seed, r as u64))?;
        let c = f.counters;
        report.results.push(
            ReplicateResult::new(pv, r as u64)
                .metric("nbTests", c.nb_tests as f64)
                .metric("nbPassed", c.nb_passed as f64)
                .metric("nbFlaked", c.nb_flaked as f64)
                .metric("nbRealFailed", c.nb_real_failed as f64),
        );
        flaked.push(c.nb_flaked as f64);
        first.get_or_insert(f.xml);
    }
    report
        .summary
        .push(MetricRow::new(pv, "mean_flaked", stats::mean(&flaked)));
    Ok(first.expect("at least one replicate"))
}
