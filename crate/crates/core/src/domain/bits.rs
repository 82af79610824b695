/// Dense row-major boolean matrix, one `u64` bitset per row.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        let stride = cols.div_ceil(64);
        BitMatrix {
            rows,
            cols,
            stride,
            words: vec![0; rows * stride],
        }
    }

    pub fn from_rows<R: AsRef<[bool]>>(cols: usize, rows: &[R]) -> Option<Self> {
        let mut m = BitMatrix::new(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return None;
            }
            for (c, &bit) in row.iter().enumerate() {
                if bit {
                    m.set(r, c, true);
                }
            }
        }
        Some(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.rows && col < self.cols);
        (self.words[row * self.stride + col / 64] >> (col % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        debug_assert!(row < self.rows && col < self.cols);
        let word = &mut self.words[row * self.stride + col / 64];
        let mask = 1u64 << (col % 64);
        if value {
            *word |= mask;
        } else {
            *word &= !mask;
        }
    }

    pub fn row_words(&self, row: usize) -> &[u64] {
        &self.words[row * self.stride..(row + 1) * self.stride]
    }

    /// Column indices of the set bits in `row`, ascending.
    pub fn row_ones(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        self.row_words(row)
            .iter()
            .enumerate()
            .flat_map(|(w, &word)| BitIter { word }.map(move |b| w * 64 + b))
    }

    pub fn row_count(&self, row: usize) -> usize {
        self.row_words(row).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn col_count(&self, col: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, col)).count()
    }

    /// First `(row, col)` set in `self` but not in `other`, if any.
    pub fn first_bit_outside(&self, other: &BitMatrix) -> Option<(usize, usize)> {
        for r in 0..self.rows {
            let a = self.row_words(r);
            let b = other.row_words(r);
            for (w, (&x, &y)) in a.iter().zip(b).enumerate() {
                let stray = x & !y;
                if stray != 0 {
                    return Some((r, w * 64 + stray.trailing_zeros() as usize));
                }
            }
        }
        None
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> BitMatrix {
        let mut words = Vec::with_capacity(rows.len() * self.stride);
        for &r in rows {
            words.extend_from_slice(self.row_words(r));
        }
        BitMatrix {
            rows: rows.len(),
            cols: self.cols,
            stride: self.stride,
            words,
        }
    }
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let line: String = (0..self.cols).map(|c| if self.get(r, c) { '1' } else { '0' }).collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

struct BitIter {
    word: u64,
}

impl Iterator for BitIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.word == 0 {
            return None;
        }
        let bit = self.word.trailing_zeros() as usize;
        self.word &= self.word - 1;
        Some(bit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_across_word_boundary() {
        let mut m = BitMatrix::new(2, 130);
        m.set(1, 0, true);
        m.set(1, 63, true);
        m.set(1, 64, true);
        m.set(1, 129, true);
        assert!(m.get(1, 64));
        assert!(!m.get(0, 64));
        assert_eq!(m.row_ones(1).collect::<Vec<_>>(), vec![0, 63, 64, 129]);
        assert_eq!(m.row_count(1), 4);
        assert_eq!(m.col_count(129), 1);
        m.set(1, 63, false);
        assert_eq!(m.row_count(1), 3);
    }

    #[test]
    fn subset_reports_first_stray_bit() {
        let a = BitMatrix::from_rows(3, &[[false, true, false], [true, false, true]]).unwrap();
        let b = BitMatrix::from_rows(3, &[[false, true, true], [true, false, false]]).unwrap();
        assert_eq!(a.first_bit_outside(&b), Some((1, 2)));
        assert_eq!(b.first_bit_outside(&b), None);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(BitMatrix::from_rows(2, &[vec![true], vec![true, false]]).is_none());
    }

    #[test]
    fn select_rows_reorders() {
        let a = BitMatrix::from_rows(2, &[[true, false], [false, true], [true, true]]).unwrap();
        let s = a.select_rows(&[2, 0]);
        assert_eq!(s.rows(), 2);
        assert!(s.get(0, 1) && s.get(0, 0));
        assert!(!s.get(1, 1));
    }
}
