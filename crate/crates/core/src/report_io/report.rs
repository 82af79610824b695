//! Experiment reports: JSON and long-form CSV.
//!
//! Reports carry the tool name and version, the experiment kind, the seed
//! and an echo of the configuration. Keys are emitted in a fixed order (struct
//! fields in declaration order, maps sorted), and floats in shortest
//! round-trip form, so equal reports serialize to equal bytes.

use std::collections::BTreeMap;

use csv::{Terminator, WriterBuilder};
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Metrics measured by one replicate (or one labelled unit within it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicateResult {
    pub p: Option<f64>,
    pub replicate: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// `null` marks an undefined value.
    pub metrics: BTreeMap<String, Option<f64>>,
}

impl ReplicateResult {
    pub fn new(p: Option<f64>, replicate: u64) -> Self {
        ReplicateResult {
            p: p.and_then(finite),
            replicate,
            label: None,
            metrics: BTreeMap::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Adds a metric; non-finite values are stored as undefined.
    pub fn metric(mut self, name: &str, value: impl Into<Option<f64>>) -> Self {
        self.metrics.insert(name.to_owned(), value.into().and_then(finite));
        self
    }
}

/// One aggregated value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricRow {
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub metric: String,
    pub value: Option<f64>,
}

impl MetricRow {
    pub fn new(p: Option<f64>, metric: &str, value: impl Into<Option<f64>>) -> Self {
        MetricRow {
            p: p.and_then(finite),
            label: None,
            metric: metric.to_owned(),
            value: value.into().and_then(finite),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentReport {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub results: Vec<ReplicateResult>,
    pub summary: Vec<MetricRow>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, seed: u64, config: serde_json::Value) -> Self {
        ExperimentReport {
            tool: TOOL_NAME.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            experiment: experiment.into(),
            seed,
            config,
            results: Vec::new(),
            summary: Vec::new(),
        }
    }

    pub fn summary_value(&self, p: Option<f64>, label: Option<&str>, metric: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.p == p && r.label.as_deref() == label && r.metric == metric)
            .and_then(|r| r.value)
    }
}

pub fn emit_report_json(report: &ExperimentReport) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(report)?;
    out.push(b'\n');
    Ok(out)
}

pub fn parse_report_json(bytes: &[u8]) -> Result<ExperimentReport> {
    Ok(serde_json::from_slice(bytes)?)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per replicate and metric: `experiment,p,replicate,metric,value`.
/// Labelled results prefix the metric with `label/`; undefined values and
/// absent probabilities are empty fields.
pub fn emit_long_csv(report: &ExperimentReport) -> Vec<u8> {
    let mut w = WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["experiment", "p", "replicate", "metric", "value"])
        .expect("writing CSV to memory cannot fail");
    for r in &report.results {
        let p = fmt_opt(r.p);
        let replicate = r.replicate.to_string();
        for (name, value) in &r.metrics {
            let metric = match &r.label {
                Some(l) => format!("{l}/{name}"),
                None => name.clone(),
            };
            w.write_record([report.experiment.as_str(), &p, &replicate, &metric, &fmt_opt(*value)])
                .expect("writing CSV to memory cannot fail");
        }
    }
    w.into_inner().expect("writing CSV to memory cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        let mut r = ExperimentReport::new("mutation-sweep", 7, serde_json::json!({"b": 1, "a": [0.1, null]}));
        r.results.push(ReplicateResult::new(Some(0.05), 0).metric("score", 0.8));
        r.results.push(
            ReplicateResult::new(Some(0.05), 1)
                .with_label("s1")
                .metric("score", f64::NAN)
                .metric("size", 3.0),
        );
        r.summary.push(MetricRow::new(Some(0.05), "mean", 0.8));
        r
    }

    #[test]
    fn empty_experiment_has_config_and_results() {
        let r = ExperimentReport::new("fl-localize", 1, serde_json::json!({"x": 1}));
        let v: serde_json::Value = serde_json::from_slice(&emit_report_json(&r).unwrap()).unwrap();
        assert_eq!(v["results"], serde_json::json!([]));
        assert_eq!(v["config"]["x"], 1);
        assert_eq!(v["tool"], TOOL_NAME);
    }

    #[test]
    fn json_roundtrip() {
        let r = sample();
        let bytes = emit_report_json(&r).unwrap();
        assert_eq!(parse_report_json(&bytes).unwrap(), r);
        assert_eq!(r.results.len(), 2);
        assert_eq!(r.results[1].metrics["score"], None);
        // map keys come out sorted
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.find("\"a\"").unwrap() < text.find("\"b\"").unwrap());
    }

    #[test]
    fn long_csv_rows() {
        let text = String::from_utf8(emit_long_csv(&sample())).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines,
            [
                "experiment,p,replicate,metric,value",
                "mutation-sweep,0.05,0,score,0.8",
                "mutation-sweep,0.05,1,s1/score,",
                "mutation-sweep,0.05,1,s1/size,3",
            ]
        );
    }
}
