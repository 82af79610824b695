//! Reading and writing test artifacts: JUnit XML reports, matrix CSV files,
//! scenario and program JSON files, and experiment reports.
//!
//! Parsers return structured errors on any malformed input and never panic.
//! Emitters write UTF-8 with LF line endings; parsers also accept CRLF.

mod junit;
mod matrix_csv;
mod program;
mod report;

pub use junit::{
    emit_flaked_report, emit_junit_xml, parse_junit_xml, read_flake_counters, FlakedReport, TestCase, TestReport,
    FLAKY_FAILURE_TYPE,
};
pub use matrix_csv::{
    emit_coverage_csv, emit_kill_csv, parse_coverage_csv, parse_kill_csv, parse_matrix_csv, MatrixKind, ParsedMatrix,
    BASELINE_COLUMN,
};
pub use program::{emit_program_json, emit_scenario_json, parse_program_json, parse_scenario_json, ScenarioFile};
pub use report::{
    emit_long_csv, emit_report_json, parse_report_json, ExperimentReport, MetricRow, ReplicateResult, TOOL_NAME,
};
