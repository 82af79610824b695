//! Coverage and kill matrices as CSV.
//!
//! ```text
//! test,s0,s1,baseline
//! pkg.A#t0,1,0,fail
//! pkg.A#t1,1,1,pass
//! ```
//!
//! The first column holds test labels, the header names the statements (or
//! mutants). Coverage cells are `0`/`1`; kill cells are `0` (not covered),
//! `1` (covered, survived) or `2` (covered, killed). The trailing `baseline`
//! column is optional and defaults to `pass`.

use csv::{ReaderBuilder, StringRecord, Terminator, WriterBuilder};
use serde::{Deserialize, Serialize};

use crate::domain::{CoverageMatrix, KillCell, KillMatrix, Verdict};
use crate::error::{Error, Result};

pub const BASELINE_COLUMN: &str = "baseline";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Coverage,
    Kill,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParsedMatrix {
    Coverage(CoverageMatrix),
    Kill(KillMatrix),
}

struct Grid {
    tests: Vec<String>,
    columns: Vec<String>,
    cells: Vec<Vec<u8>>,
    baseline: Vec<Verdict>,
}

fn line_of(rec: &StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn read_grid(bytes: &[u8], max_cell: u8) -> Result<Grid> {
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut records = reader.records();
    let csv_err = |e: csv::Error| Error::Csv {
        line: e.position().map_or(0, |p| p.line()),
        reason: e.to_string(),
    };
    let header = records
        .next()
        .ok_or(Error::Csv {
            line: 1,
            reason: "missing header row".into(),
        })?
        .map_err(csv_err)?;
    let width = header.len();
    if width == 0 {
        return Err(Error::Csv {
            line: line_of(&header),
            reason: "empty header row".into(),
        });
    }
    let has_baseline = width >= 2 && header.get(width - 1) == Some(BASELINE_COLUMN);
    let n_cols = width - 1 - has_baseline as usize;
    let columns: Vec<String> = header.iter().skip(1).take(n_cols).map(str::to_owned).collect();

    let mut grid = Grid {
        tests: Vec::new(),
        columns,
        cells: Vec::new(),
        baseline: Vec::new(),
    };
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        let line = line_of(&rec);
        if rec.len() != width {
            return Err(Error::Csv {
                line,
                reason: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        let mut row = Vec::with_capacity(n_cols);
        for (j, raw) in rec.iter().skip(1).take(n_cols).enumerate() {
            match raw.trim().parse::<u8>() {
                Ok(v) if v <= max_cell => row.push(v),
                _ => {
                    return Err(Error::Csv {
                        line,
                        reason: format!("illegal cell `{raw}` in column `{}`", grid.columns[j]),
                    })
                }
            }
        }
        let verdict = if has_baseline {
            let raw = &rec[width - 1];
            match raw.trim().to_ascii_lowercase().as_str() {
                "pass" => Verdict::Pass,
                "fail" => Verdict::Fail,
                _ => {
                    return Err(Error::Csv {
                        line,
                        reason: format!("baseline must be pass or fail, found `{raw}`"),
                    })
                }
            }
        } else {
            Verdict::Pass
        };
        grid.tests.push(rec[0].to_owned());
        grid.cells.push(row);
        grid.baseline.push(verdict);
    }
    Ok(grid)
}

pub fn parse_coverage_csv(bytes: &[u8]) -> Result<CoverageMatrix> {
    let g = read_grid(bytes, 1)?;
    let rows: Vec<Vec<bool>> = g.cells.iter().map(|r| r.iter().map(|&c| c == 1).collect()).collect();
    CoverageMatrix::from_rows(g.tests, g.columns, &rows, g.baseline)
}

pub fn parse_kill_csv(bytes: &[u8]) -> Result<KillMatrix> {
    let g = read_grid(bytes, 2)?;
    let rows: Vec<Vec<KillCell>> = g
        .cells
        .iter()
        .map(|r| {
            r.iter()
                .map(|&c| match c {
                    0 => KillCell::Uncovered,
                    1 => KillCell::Survived,
                    _ => KillCell::Killed,
                })
                .collect()
        })
        .collect();
    KillMatrix::from_cells(g.tests, g.columns, &rows, g.baseline)
}

pub fn parse_matrix_csv(bytes: &[u8], kind: MatrixKind) -> Result<ParsedMatrix> {
    Ok(match kind {
        MatrixKind::Coverage => ParsedMatrix::Coverage(parse_coverage_csv(bytes)?),
        MatrixKind::Kill => ParsedMatrix::Kill(parse_kill_csv(bytes)?),
    })
}

fn emit_grid(columns: &[String], tests: &[String], baseline: &[Verdict], cell: impl Fn(usize, usize) -> u8) -> Vec<u8> {
    let mut w = WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header = vec!["test"];
    header.extend(columns.iter().map(String::as_str));
    header.push(BASELINE_COLUMN);
    w.write_record(&header).expect("writing CSV to memory cannot fail");
    let digits = ["0", "1", "2"];
    for (t, label) in tests.iter().enumerate() {
        let mut row = vec![label.as_str()];
        row.extend((0..columns.len()).map(|j| digits[cell(t, j) as usize]));
        row.push(match baseline[t] {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        });
        w.write_record(&row).expect("writing CSV to memory cannot fail");
    }
    w.into_inner().expect("writing CSV to memory cannot fail")
}

/// Writes a coverage matrix, always including the baseline column.
pub fn emit_coverage_csv(m: &CoverageMatrix) -> Vec<u8> {
    emit_grid(m.statements(), m.tests(), m.baseline(), |t, s| m.covers(t, s) as u8)
}

/// Writes a kill matrix, always including the baseline column.
pub fn emit_kill_csv(m: &KillMatrix) -> Vec<u8> {
    emit_grid(m.mutants(), m.tests(), m.baseline(), |t, j| match m.cell(t, j) {
        KillCell::Uncovered => 0,
        KillCell::Survived => 1,
        KillCell::Killed => 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one_coverage() {
        let m = parse_coverage_csv(b"test,s0\nt0,1\n").unwrap();
        assert!(m.covers(0, 0));
        assert_eq!(m.tests(), ["t0"]);
        assert_eq!(m.baseline(), [Verdict::Pass]);
    }

    #[test]
    fn kill_cell_two_implies_cover() {
        let m = parse_kill_csv(b"test,m0,m1,baseline\r\nt0,2,1,pass\r\nt1,0,0,FAIL\r\n").unwrap();
        assert_eq!(m.cell(0, 0), KillCell::Killed);
        assert!(m.cover().get(0, 0));
        assert_eq!(m.cell(0, 1), KillCell::Survived);
        assert_eq!(m.cell(1, 0), KillCell::Uncovered);
        assert_eq!(m.baseline()[1], Verdict::Fail);
    }

    #[test]
    fn rejects_malformed() {
        for (bad, kind) in [
            (&b"test,m0\nt0,3\n"[..], MatrixKind::Kill),
            (b"test,s0\nt0,2\n", MatrixKind::Coverage),
            (b"test,s0,s1\nt0,1\n", MatrixKind::Coverage),
            (b"test,s0,s0\nt0,1,1\n", MatrixKind::Coverage),
            (b"test,s0\nt0,1\nt0,0\n", MatrixKind::Coverage),
            (b"test,s0,baseline\nt0,1,maybe\n", MatrixKind::Coverage),
            (b"", MatrixKind::Kill),
            (b"test,s0\nt0,\xff\n", MatrixKind::Coverage),
        ] {
            assert!(parse_matrix_csv(bad, kind).is_err(), "{}", String::from_utf8_lossy(bad));
        }
    }

    #[test]
    fn ragged_row_reports_line() {
        match parse_coverage_csv(b"test,s0\nt0,1\nt1,1,0\n") {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn roundtrip_with_quoting() {
        let m = CoverageMatrix::from_rows(
            vec!["a,b".into(), "c\"d".into()],
            vec!["s 0".into(), "baseline".into()],
            &[[true, false], [false, true]],
            vec![Verdict::Fail, Verdict::Pass],
        )
        .unwrap();
        let bytes = emit_coverage_csv(&m);
        assert!(!bytes.contains(&b'\r'));
        assert_eq!(parse_coverage_csv(&bytes).unwrap(), m);
    }
}
