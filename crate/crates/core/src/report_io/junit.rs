//! JUnit XML reports.
//!
//! Accepted structure: an optional `<testsuites>` root holding (possibly
//! nested) `<testsuite>` elements, each with `<testcase>` children. A
//! testcase with a `<failure>` or `<error>` child failed; a failure typed
//! [`FLAKY_FAILURE_TYPE`] is an injected flaky failure. An injected flaky
//! pass is marked by the `flaky="pass"` testcase attribute. `<properties>`,
//! `<system-out>` and `<system-err>` are accepted; anything else (including
//! `<skipped>`) is rejected.

use std::collections::{BTreeMap, HashSet};

use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, Event};
use quick_xml::{Reader, Writer};
use serde::{Deserialize, Serialize};

use crate::domain::{FlakeCounters, FlakinessModel, Outcome, Validate, Verdict};
use crate::error::{Error, Result};
use crate::flakiness::perturb_outcomes;
use crate::rng::RngStream;

/// Exception type recorded for injected failures.
pub const FLAKY_FAILURE_TYPE: &str = "FlakiException";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub name: String,
    /// Class (group) of the test; may be empty.
    pub class: String,
    pub outcome: Outcome,
    /// Seconds.
    pub duration: f64,
}

impl TestCase {
    pub fn new(class: impl Into<String>, name: impl Into<String>, outcome: Outcome, duration: f64) -> Self {
        TestCase {
            name: name.into(),
            class: class.into(),
            outcome,
            duration,
        }
    }

    /// `class#name`, or the bare name without a class.
    pub fn label(&self) -> String {
        if self.class.is_empty() {
            self.name.clone()
        } else {
            format!("{}#{}", self.class, self.name)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub cases: Vec<TestCase>,
}

impl TestReport {
    pub fn new(name: impl Into<String>, cases: Vec<TestCase>) -> Result<Self> {
        let r = TestReport {
            name: name.into(),
            cases,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn labels(&self) -> Vec<String> {
        self.cases.iter().map(TestCase::label).collect()
    }

    /// Recorded verdicts, reading any failure (flaky or not) as a failure.
    pub fn verdicts(&self) -> Vec<Verdict> {
        self.cases
            .iter()
            .map(|c| {
                if c.outcome.is_failing() {
                    Verdict::Fail
                } else {
                    Verdict::Pass
                }
            })
            .collect()
    }
}

fn check_text(what: &str, s: &str) -> Result<()> {
    if s.chars().any(|c| c.is_control()) {
        return Err(Error::InvalidArgument(format!(
            "{what} `{}` contains control characters",
            s.escape_debug()
        )));
    }
    Ok(())
}

impl Validate for TestReport {
    fn validate(&self) -> Result<()> {
        check_text("report name", &self.name)?;
        let mut seen = HashSet::new();
        for c in &self.cases {
            check_text("test name", &c.name)?;
            check_text("class name", &c.class)?;
            if c.name.is_empty() {
                return Err(Error::InvalidArgument("empty test name".into()));
            }
            if !(c.duration.is_finite() && c.duration >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "test `{}` has duration {}",
                    c.label(),
                    c.duration
                )));
            }
            if !seen.insert((c.class.as_str(), c.name.as_str())) {
                return Err(Error::DuplicateLabel(c.label()));
            }
        }
        Ok(())
    }
}

fn xml_err(e: impl std::fmt::Display) -> Error {
    Error::Xml(e.to_string())
}

struct Attrs(BTreeMap<String, String>);

impl Attrs {
    fn of(e: &BytesStart<'_>, reader: &Reader<&[u8]>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for a in e.attributes() {
            let a = a.map_err(xml_err)?;
            let key = std::str::from_utf8(a.key.as_ref()).map_err(xml_err)?.to_owned();
            let value = a
                .decode_and_unescape_value(reader.decoder())
                .map_err(xml_err)?
                .into_owned();
            map.insert(key, value);
        }
        Ok(Attrs(map))
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

#[derive(Default)]
struct OpenCase {
    name: String,
    class: String,
    duration: f64,
    flaky_pass: bool,
    real_failures: usize,
    flaky_failures: usize,
}

impl OpenCase {
    fn close(self) -> Result<TestCase> {
        let outcome = match (self.real_failures, self.flaky_failures, self.flaky_pass) {
            (0, 0, false) => Outcome::Pass,
            (0, 0, true) => Outcome::FlakyPass,
            (_, 0, false) => Outcome::Fail,
            (0, _, false) => Outcome::FlakyFail,
            _ => {
                return Err(Error::Xml(format!(
                    "testcase `{}` mixes real and injected outcomes",
                    self.name
                )))
            }
        };
        Ok(TestCase {
            name: self.name,
            class: self.class,
            outcome,
            duration: self.duration,
        })
    }
}

struct Scan {
    report: TestReport,
    properties: BTreeMap<String, String>,
}

fn scan(bytes: &[u8]) -> Result<Scan> {
    let mut reader = Reader::from_reader(bytes);
    let mut stack: Vec<String> = Vec::new();
    let mut name: Option<String> = None;
    let mut cases = Vec::new();
    let mut open: Option<OpenCase> = None;
    let mut properties = BTreeMap::new();
    let mut saw_root = false;

    loop {
        let event = reader
            .read_event()
            .map_err(|e| Error::Xml(format!("{e} at byte {}", reader.error_position())))?;
        let (e, is_empty) = match event {
            Event::Start(e) => (e, false),
            Event::Empty(e) => (e, true),
            Event::End(_) => {
                if stack.pop().as_deref() == Some("testcase") {
                    cases.push(open.take().expect("open testcase").close()?);
                }
                continue;
            }
            Event::Eof => break,
            _ => continue,
        };
        let tag = std::str::from_utf8(e.name().as_ref()).map_err(xml_err)?.to_owned();
        let attrs = Attrs::of(&e, &reader)?;
        let parent = stack.last().map(String::as_str);
        match (parent, tag.as_str()) {
            (None, _) if saw_root => return Err(Error::Xml("more than one root element".into())),
            (None, "testsuites") | (None, "testsuite") => {
                saw_root = true;
                name = attrs.get("name").map(str::to_owned);
            }
            (Some("testsuites" | "testsuite"), "testsuite") => {}
            (Some("testsuite"), "properties") => {}
            (Some("properties"), "property") => {
                if let (Some(k), Some(v)) = (attrs.get("name"), attrs.get("value")) {
                    properties.insert(k.to_owned(), v.to_owned());
                }
            }
            (Some("testsuite"), "testcase") => {
                let case_name = attrs
                    .get("name")
                    .ok_or_else(|| Error::Xml("testcase without a name".into()))?
                    .to_owned();
                let duration = match attrs.get("time") {
                    None => 0.0,
                    Some(t) => t
                        .trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|d| d.is_finite() && *d >= 0.0)
                        .ok_or_else(|| Error::Xml(format!("testcase `{case_name}` has bad time `{t}`")))?,
                };
                let flaky_pass = match attrs.get("flaky") {
                    None => false,
                    Some("pass") => true,
                    Some(other) => return Err(Error::Xml(format!("unknown flaky marker `{other}` on `{case_name}`"))),
                };
                open = Some(OpenCase {
                    name: case_name,
                    class: attrs.get("classname").unwrap_or_default().to_owned(),
                    duration,
                    flaky_pass,
                    ..Default::default()
                });
            }
            (Some("testcase"), "failure" | "error") => {
                let case = open.as_mut().expect("open testcase");
                if attrs.get("type") == Some(FLAKY_FAILURE_TYPE) {
                    case.flaky_failures += 1;
                } else {
                    case.real_failures += 1;
                }
            }
            (Some("testcase" | "testsuite"), "system-out" | "system-err") => {}
            (parent, _) => {
                return Err(Error::Xml(match parent {
                    Some(p) => format!("unexpected <{tag}> inside <{p}>"),
                    None => format!("unexpected root element <{tag}>"),
                }))
            }
        }
        if is_empty {
            if tag == "testcase" {
                cases.push(open.take().expect("open testcase").close()?);
            }
        } else {
            stack.push(tag);
        }
    }
    if !stack.is_empty() {
        return Err(Error::Xml(format!("unclosed <{}>", stack.last().unwrap())));
    }
    if !saw_root {
        return Err(Error::Xml("no testsuite element".into()));
    }
    Ok(Scan {
        report: TestReport::new(name.unwrap_or_default(), cases)?,
        properties,
    })
}

/// Parses a JUnit XML report; testcases are kept in document order.
pub fn parse_junit_xml(bytes: &[u8]) -> Result<TestReport> {
    scan(bytes).map(|s| s.report)
}

/// Counters stored in the report properties by [`emit_flaked_report`], if
/// present.
pub fn read_flake_counters(bytes: &[u8]) -> Result<Option<FlakeCounters>> {
    let props = scan(bytes)?.properties;
    let get = |k: &str| -> Result<Option<u64>> {
        props
            .get(k)
            .map(|v| {
                v.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::Xml(format!("property {k} is not a count: `{v}`")))
            })
            .transpose()
    };
    let (Some(nb_tests), Some(nb_passed), Some(nb_flaked)) = (get("nbTests")?, get("nbPassed")?, get("nbFlaked")?)
    else {
        return Ok(None);
    };
    let nb_real_failed = match get("nbRealFailed")? {
        Some(n) => n,
        None => nb_tests
            .checked_sub(nb_passed + nb_flaked)
            .ok_or_else(|| Error::Xml("flake counters exceed nbTests".into()))?,
    };
    Ok(Some(FlakeCounters {
        nb_tests,
        nb_passed,
        nb_flaked,
        nb_real_failed,
    }))
}

fn write(w: &mut Writer<Vec<u8>>, event: Event<'_>) {
    w.write_event(event).expect("writing XML to memory cannot fail");
}

fn emit(report: &TestReport, counters: Option<&FlakeCounters>) -> Vec<u8> {
    let mut w = Writer::new_with_indent(Vec::new(), b' ', 2);
    write(&mut w, Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)));
    let failures = report
        .cases
        .iter()
        .filter(|c| c.outcome.is_failing())
        .count()
        .to_string();
    let tests = report.cases.len().to_string();
    let suite = BytesStart::new("testsuite").with_attributes([
        ("name", report.name.as_str()),
        ("tests", tests.as_str()),
        ("failures", failures.as_str()),
        ("errors", "0"),
    ]);
    write(&mut w, Event::Start(suite));
    if let Some(c) = counters {
        write(&mut w, Event::Start(BytesStart::new("properties")));
        for (k, v) in [
            ("nbTests", c.nb_tests),
            ("nbPassed", c.nb_passed),
            ("nbFlaked", c.nb_flaked),
            ("nbRealFailed", c.nb_real_failed),
        ] {
            let v = v.to_string();
            write(
                &mut w,
                Event::Empty(BytesStart::new("property").with_attributes([("name", k), ("value", v.as_str())])),
            );
        }
        write(&mut w, Event::End(BytesEnd::new("properties")));
    }
    for c in &report.cases {
        let time = c.duration.to_string();
        let mut case = BytesStart::new("testcase").with_attributes([
            ("name", c.name.as_str()),
            ("classname", c.class.as_str()),
            ("time", time.as_str()),
        ]);
        match c.outcome {
            Outcome::Pass => write(&mut w, Event::Empty(case)),
            Outcome::FlakyPass => {
                case.push_attribute(("flaky", "pass"));
                write(&mut w, Event::Empty(case));
            }
            Outcome::Fail | Outcome::FlakyFail => {
                write(&mut w, Event::Start(case));
                let failure = if c.outcome == Outcome::Fail {
                    BytesStart::new("failure").with_attributes([("type", "failure")])
                } else {
                    BytesStart::new("failure")
                        .with_attributes([("type", FLAKY_FAILURE_TYPE), ("message", "injected flaky failure")])
                };
                write(&mut w, Event::Empty(failure));
                write(&mut w, Event::End(BytesEnd::new("testcase")));
            }
        }
    }
    write(&mut w, Event::End(BytesEnd::new("testsuite")));
    let mut out = w.into_inner();
    out.push(b'\n');
    out
}

/// Serializes a report. Real failures are written as
/// `<failure type="failure"/>`.
pub fn emit_junit_xml(report: &TestReport) -> Result<Vec<u8>> {
    report.validate()?;
    Ok(emit(report, None))
}

/// A report after flakiness injection.
#[derive(Debug, Clone, PartialEq)]
pub struct FlakedReport {
    pub report: TestReport,
    pub counters: FlakeCounters,
    pub xml: Vec<u8>,
}

/// Re-runs a recorded report under a flakiness model and serializes the
/// result with the flake counters as suite properties.
///
/// Tests are scoped by their `class#name` label.
pub fn emit_flaked_report(report: &TestReport, model: &FlakinessModel, stream: RngStream) -> Result<FlakedReport> {
    report.validate()?;
    let run = perturb_outcomes(&report.labels(), &report.verdicts(), model, stream)?;
    let flaked = TestReport {
        name: report.name.clone(),
        cases: report
            .cases
            .iter()
            .zip(&run.outcomes)
            .map(|(c, &outcome)| TestCase { outcome, ..c.clone() })
            .collect(),
    };
    let xml = emit(&flaked, Some(&run.counters));
    Ok(FlakedReport {
        report: flaked,
        counters: run.counters,
        xml,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_PASS: &str = r#"<?xml version="1.0"?>
<testsuites>
  <testsuite name="s" tests="2">
    <testcase name="a" classname="pkg.A" time="0.25"/>
    <testcase name="b" classname="pkg.A"><system-out>hello</system-out></testcase>
  </testsuite>
</testsuites>"#;

    #[test]
    fn parses_passing_cases() {
        let r = parse_junit_xml(TWO_PASS.as_bytes()).unwrap();
        assert_eq!(r.cases.len(), 2);
        assert!(r.cases.iter().all(|c| c.outcome == Outcome::Pass));
        assert_eq!(r.cases[0].duration, 0.25);
        assert_eq!(r.cases[1].label(), "pkg.A#b");
        assert_eq!(r.name, "");
    }

    #[test]
    fn failure_and_error_children() {
        let xml = r#"<testsuite name="x">
            <testcase name="f"><failure message="boom">trace</failure></testcase>
            <testcase name="e"><error/></testcase>
            <testcase name="k"><failure type="FlakiException"/></testcase>
            <testcase name="q" flaky="pass"/>
        </testsuite>"#;
        let r = parse_junit_xml(xml.as_bytes()).unwrap();
        let outcomes: Vec<_> = r.cases.iter().map(|c| c.outcome).collect();
        assert_eq!(
            outcomes,
            [Outcome::Fail, Outcome::Fail, Outcome::FlakyFail, Outcome::FlakyPass]
        );
    }

    #[test]
    fn rejects_bad_structure() {
        for bad in [
            "",
            "<testsuite><testcase name='a'><skipped/></testcase></testsuite>",
            "<testsuite><testcase name='a'>",
            "<testsuite><testcase/></testsuite>",
            "<testsuite><testcase name='a' time='x'/></testsuite>",
            "<report/>",
            "<testsuite><testcase name='a'/><testcase name='a'/></testsuite>",
            "<testsuite/><testsuite/>",
            "<testsuite><testcase name='a'><failure/><failure type='FlakiException'/></testcase></testsuite>",
        ] {
            assert!(parse_junit_xml(bad.as_bytes()).is_err(), "{bad}");
        }
    }

    #[test]
    fn roundtrip_with_escaping() {
        let r = TestReport::new(
            "suite <&>",
            vec![
                TestCase::new("a.B", "x\"y'", Outcome::Pass, 1e-7),
                TestCase::new("", "z&", Outcome::Fail, 0.0),
                TestCase::new("a.B", "w", Outcome::FlakyFail, 3.5),
                TestCase::new("a.C", "v", Outcome::FlakyPass, 12.0),
            ],
        )
        .unwrap();
        let xml = emit_junit_xml(&r).unwrap();
        assert_eq!(parse_junit_xml(&xml).unwrap(), r);
        assert!(!xml.contains(&b'\r'));
    }

    fn all_pass(n: usize) -> TestReport {
        TestReport::new(
            "r",
            (0..n)
                .map(|i| TestCase::new("C", format!("t{i}"), Outcome::Pass, 0.1))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn flaked_report_at_zero_matches_plain_emit() {
        let r = all_pass(4);
        let f = emit_flaked_report(&r, &FlakinessModel::uniform(0.0).unwrap(), RngStream::new(1, 0)).unwrap();
        assert_eq!(f.report, r);
        let plain = String::from_utf8(emit_junit_xml(&r).unwrap()).unwrap();
        let flaked = String::from_utf8(f.xml.clone()).unwrap();
        let without_props: String = {
            let start = flaked.find("  <properties>").unwrap();
            let end = flaked.find("</properties>\n").unwrap() + "</properties>\n".len();
            format!("{}{}", &flaked[..start], &flaked[end..])
        };
        assert_eq!(without_props, plain);
        assert_eq!(read_flake_counters(&f.xml).unwrap(), Some(f.counters));
        assert_eq!(read_flake_counters(&emit_junit_xml(&r).unwrap()).unwrap(), None);
    }

    #[test]
    fn flaked_report_at_one_fails_everything() {
        let f = emit_flaked_report(
            &all_pass(3),
            &FlakinessModel::uniform(1.0).unwrap(),
            RngStream::new(2, 0),
        )
        .unwrap();
        let text = String::from_utf8(f.xml).unwrap();
        assert_eq!(text.matches("type=\"FlakiException\"").count(), 3);
        assert_eq!(f.counters.nb_flaked, 3);
        assert!(f.counters.is_consistent());
    }
}
