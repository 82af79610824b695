use super::{check_unique_labels, BitMatrix, MutantId, StatementId, TestId, Validate, Verdict};
use crate::error::{Error, Result};

/// Tests × statements coverage with the recorded per-test verdicts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMatrix {
    tests: Vec<String>,
    statements: Vec<String>,
    cover: BitMatrix,
    baseline: Vec<Verdict>,
}

impl CoverageMatrix {
    pub fn new(tests: Vec<String>, statements: Vec<String>, cover: BitMatrix, baseline: Vec<Verdict>) -> Result<Self> {
        let m = CoverageMatrix {
            tests,
            statements,
            cover,
            baseline,
        };
        m.validate()?;
        Ok(m)
    }

    /// Builds from per-test rows of booleans.
    pub fn from_rows<R: AsRef<[bool]>>(
        tests: Vec<String>,
        statements: Vec<String>,
        rows: &[R],
        baseline: Vec<Verdict>,
    ) -> Result<Self> {
        if rows.len() != tests.len() {
            return Err(Error::Dimension(format!(
                "{} tests but {} coverage rows",
                tests.len(),
                rows.len()
            )));
        }
        let cover = BitMatrix::from_rows(statements.len(), rows)
            .ok_or_else(|| Error::Dimension(format!("coverage rows must have {} cells", statements.len())))?;
        Self::new(tests, statements, cover, baseline)
    }

    pub fn n_tests(&self) -> usize {
        self.tests.len()
    }

    pub fn n_statements(&self) -> usize {
        self.statements.len()
    }

    pub fn tests(&self) -> &[String] {
        &self.tests
    }

    pub fn statements(&self) -> &[String] {
        &self.statements
    }

    pub fn test_id(&self, index: usize) -> TestId {
        TestId::new(index, self.tests[index].clone())
    }

    pub fn statement_id(&self, index: usize) -> StatementId {
        StatementId::new(index, self.statements[index].clone())
    }

    pub fn baseline(&self) -> &[Verdict] {
        &self.baseline
    }

    pub fn cover(&self) -> &BitMatrix {
        &self.cover
    }

    pub fn covers(&self, test: usize, statement: usize) -> bool {
        self.cover.get(test, statement)
    }

    pub fn failing_tests(&self) -> impl Iterator<Item = usize> + '_ {
        self.baseline
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == Verdict::Fail)
            .map(|(i, _)| i)
    }
}

impl Validate for CoverageMatrix {
    fn validate(&self) -> Result<()> {
        if self.cover.rows() != self.tests.len() || self.cover.cols() != self.statements.len() {
            return Err(Error::Dimension(format!(
                "coverage is {}x{} but labels are {}x{}",
                self.cover.rows(),
                self.cover.cols(),
                self.tests.len(),
                self.statements.len()
            )));
        }
        if self.baseline.len() != self.tests.len() {
            return Err(Error::Dimension(format!(
                "{} tests but baseline has {} entries",
                self.tests.len(),
                self.baseline.len()
            )));
        }
        check_unique_labels(&self.tests)?;
        check_unique_labels(&self.statements)
    }
}

/// One cell of a kill matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KillCell {
    Uncovered,
    Survived,
    Killed,
}

/// Tests × mutants execution results.
///
/// A cell is killed only if the test also covers the mutant; a mutant is
/// killed iff at least one of its cells is.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KillMatrix {
    tests: Vec<String>,
    mutants: Vec<String>,
    cover: BitMatrix,
    kill: BitMatrix,
    baseline: Vec<Verdict>,
}

impl KillMatrix {
    pub fn new(
        tests: Vec<String>,
        mutants: Vec<String>,
        cover: BitMatrix,
        kill: BitMatrix,
        baseline: Vec<Verdict>,
    ) -> Result<Self> {
        let m = KillMatrix {
            tests,
            mutants,
            cover,
            kill,
            baseline,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_cells<R: AsRef<[KillCell]>>(
        tests: Vec<String>,
        mutants: Vec<String>,
        rows: &[R],
        baseline: Vec<Verdict>,
    ) -> Result<Self> {
        if rows.len() != tests.len() {
            return Err(Error::Dimension(format!(
                "{} tests but {} kill rows",
                tests.len(),
                rows.len()
            )));
        }
        let mut cover = BitMatrix::new(tests.len(), mutants.len());
        let mut kill = BitMatrix::new(tests.len(), mutants.len());
        for (t, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != mutants.len() {
                return Err(Error::Dimension(format!(
                    "kill row {t} has {} cells, expected {}",
                    row.len(),
                    mutants.len()
                )));
            }
            for (m, cell) in row.iter().enumerate() {
                match cell {
                    KillCell::Uncovered => {}
                    KillCell::Survived => cover.set(t, m, true),
                    KillCell::Killed => {
                        cover.set(t, m, true);
                        kill.set(t, m, true);
                    }
                }
            }
        }
        Self::new(tests, mutants, cover, kill, baseline)
    }

    pub fn n_tests(&self) -> usize {
        self.tests.len()
    }

    pub fn n_mutants(&self) -> usize {
        self.mutants.len()
    }

    pub fn tests(&self) -> &[String] {
        &self.tests
    }

    pub fn mutants(&self) -> &[String] {
        &self.mutants
    }

    pub fn test_id(&self, index: usize) -> TestId {
        TestId::new(index, self.tests[index].clone())
    }

    pub fn mutant_id(&self, index: usize) -> MutantId {
        MutantId::new(index, self.mutants[index].clone())
    }

    pub fn baseline(&self) -> &[Verdict] {
        &self.baseline
    }

    pub fn cover(&self) -> &BitMatrix {
        &self.cover
    }

    pub fn kill(&self) -> &BitMatrix {
        &self.kill
    }

    pub fn cell(&self, test: usize, mutant: usize) -> KillCell {
        if self.kill.get(test, mutant) {
            KillCell::Killed
        } else if self.cover.get(test, mutant) {
            KillCell::Survived
        } else {
            KillCell::Uncovered
        }
    }

    /// Per-mutant killed flags.
    pub fn killed_mutants(&self) -> Vec<bool> {
        let mut killed = vec![false; self.mutants.len()];
        for t in 0..self.tests.len() {
            for m in self.kill.row_ones(t) {
                killed[m] = true;
            }
        }
        killed
    }

    pub fn killed_count(&self) -> usize {
        self.killed_mutants().iter().filter(|k| **k).count()
    }

    /// Restriction to a subset of tests (rows kept in the given order).
    pub fn select_tests(&self, rows: &[usize]) -> KillMatrix {
        KillMatrix {
            tests: rows.iter().map(|&r| self.tests[r].clone()).collect(),
            mutants: self.mutants.clone(),
            cover: self.cover.select_rows(rows),
            kill: self.kill.select_rows(rows),
            baseline: rows.iter().map(|&r| self.baseline[r]).collect(),
        }
    }

    /// Overwrites the kill bit of a covered cell. Used by the perturbation
    /// engine on its private copy.
    pub(crate) fn set_kill(&mut self, test: usize, mutant: usize, killed: bool) {
        debug_assert!(self.cover.get(test, mutant));
        self.kill.set(test, mutant, killed);
    }
}

impl Validate for KillMatrix {
    fn validate(&self) -> Result<()> {
        let (n, k) = (self.tests.len(), self.mutants.len());
        for (name, bits) in [("cover", &self.cover), ("kill", &self.kill)] {
            if bits.rows() != n || bits.cols() != k {
                return Err(Error::Dimension(format!(
                    "{name} bits are {}x{} but labels are {n}x{k}",
                    bits.rows(),
                    bits.cols()
                )));
            }
        }
        if self.baseline.len() != n {
            return Err(Error::Dimension(format!(
                "{n} tests but baseline has {} entries",
                self.baseline.len()
            )));
        }
        if let Some((test, mutant)) = self.kill.first_bit_outside(&self.cover) {
            return Err(Error::KillWithoutCover { test, mutant });
        }
        check_unique_labels(&self.tests)?;
        check_unique_labels(&self.mutants)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn empty_matrices_are_valid() {
        let c = CoverageMatrix::new(vec![], vec![], BitMatrix::new(0, 0), vec![]).unwrap();
        assert!(c.validate().is_ok());
        let k = KillMatrix::new(vec![], vec![], BitMatrix::new(0, 0), BitMatrix::new(0, 0), vec![]).unwrap();
        assert!(k.validate().is_ok());
    }

    #[test]
    fn kill_without_cover_rejected() {
        let mut kill = BitMatrix::new(1, 1);
        kill.set(0, 0, true);
        let err = KillMatrix::new(
            labels("t", 1),
            labels("m", 1),
            BitMatrix::new(1, 1),
            kill,
            vec![Verdict::Pass],
        )
        .unwrap_err();
        assert!(matches!(err, Error::KillWithoutCover { test: 0, mutant: 0 }));
    }

    #[test]
    fn baseline_length_mismatch_rejected() {
        let err = CoverageMatrix::new(
            labels("t", 3),
            labels("s", 2),
            BitMatrix::new(3, 2),
            vec![Verdict::Pass; 2],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn duplicate_labels_rejected() {
        let err = CoverageMatrix::new(
            vec!["a".into(), "a".into()],
            labels("s", 1),
            BitMatrix::new(2, 1),
            vec![Verdict::Pass; 2],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateLabel(l) if l == "a"));
    }

    #[test]
    fn cells_roundtrip_and_kill_counts() {
        use KillCell::*;
        let rows = vec![vec![Killed, Survived, Uncovered], vec![Uncovered, Survived, Killed]];
        let m = KillMatrix::from_cells(labels("t", 2), labels("m", 3), &rows, vec![Verdict::Pass; 2]).unwrap();
        assert_eq!(m.killed_mutants(), vec![true, false, true]);
        assert_eq!(m.killed_count(), 2);
        for (t, row) in rows.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                assert_eq!(m.cell(t, j), *c);
            }
        }
        let sub = m.select_tests(&[1]);
        assert_eq!(sub.killed_mutants(), vec![false, false, true]);
        assert_eq!(sub.tests(), &["t1".to_string()]);
    }
}
