//! One-sided subshifts of finite type.
//!
//! Symbols are 1-based in every user-facing form (word strings, `Display`,
//! [`Word::from_symbols`]) and 0-based internally.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// An aperiodic 0/1 transition matrix together with its least primitivity
/// exponent `M` (the smallest power with all entries positive).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionMatrix {
    size: usize,
    entries: Vec<bool>,
    exponent: usize,
}

impl TransitionMatrix {
    /// Validates a raw integer matrix.
    ///
    /// Aperiodicity is decided by boolean powers up to the Wielandt bound
    /// `s0^2 - 2 s0 + 2`, which is sharp for primitive matrices.
    pub fn new(raw: &[Vec<i64>]) -> Result<Self> {
        let size = raw.len();
        for row in raw {
            if row.len() != size || size < 2 {
                return Err(Error::NotSquare { rows: size, cols: row.len() });
            }
        }
        if size < 2 {
            return Err(Error::NotSquare { rows: size, cols: 0 });
        }
        let mut entries = Vec::with_capacity(size * size);
        for (i, row) in raw.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => entries.push(false),
                    1 => entries.push(true),
                    _ => return Err(Error::NotZeroOne { row: i + 1, col: j + 1, value: v }),
                }
            }
        }
        for s in 0..size {
            if !(0..size).any(|j| entries[s * size + j]) {
                return Err(Error::DeadSymbol { symbol: s + 1, which: "row" });
            }
            if !(0..size).any(|i| entries[i * size + s]) {
                return Err(Error::DeadSymbol { symbol: s + 1, which: "column" });
            }
        }
        let bound = wielandt_bound(size);
        let mut power = entries.clone();
        let mut exponent = None;
        for m in 1..=bound {
            if power.iter().all(|&b| b) {
                exponent = Some(m);
                break;
            }
            power = bool_mul(&power, &entries, size);
        }
        let exponent = exponent.ok_or(Error::NotAperiodic { bound })?;
        Ok(Self { size, entries, exponent })
    }

    /// The full shift on `size` symbols.
    pub fn full(size: usize) -> Self {
        Self::new(&vec![vec![1; size]; size]).expect("full shift is valid")
    }

    /// The golden-mean shift `[[0,1],[1,1]]` (the word `11` is forbidden).
    pub fn golden_mean() -> Self {
        Self::new(&[vec![0, 1], vec![1, 1]]).expect("golden mean shift is valid")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Least `M` with `A^M > 0` entrywise.
    pub fn aperiodicity_exponent(&self) -> usize {
        self.exponent
    }

    /// Whether the transition `a -> b` is allowed (0-based symbols).
    #[inline]
    pub fn allows(&self, a: usize, b: usize) -> bool {
        self.entries[a * self.size + b]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        (0..self.size).map(|i| (0..self.size).map(|j| self.allows(i, j) as i64).collect()).collect()
    }

    pub fn is_admissible(&self, word: &Word) -> bool {
        word.0.iter().all(|&s| s < self.size) && word.0.windows(2).all(|p| self.allows(p[0], p[1]))
    }

    /// Number of admissible words of length `k` (sum of entries of `A^(k-1)`).
    pub fn count_words(&self, k: usize) -> u128 {
        if k == 0 {
            return 1;
        }
        let mut counts = vec![1u128; self.size];
        for _ in 1..k {
            let mut next = vec![0u128; self.size];
            for (a, &c) in counts.iter().enumerate() {
                for (b, slot) in next.iter_mut().enumerate() {
                    if self.allows(a, b) {
                        *slot += c;
                    }
                }
            }
            counts = next;
        }
        counts.iter().sum()
    }
}

pub fn wielandt_bound(size: usize) -> usize {
    size * size - 2 * size + 2
}

fn bool_mul(x: &[bool], y: &[bool], n: usize) -> Vec<bool> {
    let mut out = vec![false; n * n];
    for i in 0..n {
        for k in 0..n {
            if x[i * n + k] {
                for j in 0..n {
                    out[i * n + j] |= y[k * n + j];
                }
            }
        }
    }
    out
}

/// A finite word over the alphabet, stored 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub(crate) Vec<usize>);

impl Word {
    /// Builds a word from 1-based symbols.
    pub fn from_symbols(symbols: &[usize]) -> Result<Self> {
        if symbols.is_empty() || symbols.contains(&0) {
            return Err(Error::BadWord(format!("{symbols:?}")));
        }
        Ok(Self(symbols.iter().map(|s| s - 1).collect()))
    }

    pub(crate) fn from_zero_based(symbols: Vec<usize>) -> Self {
        Self(symbols)
    }

    /// Parses `"121"` (one digit per symbol) or `"1,2,10"` (separated form
    /// for alphabets larger than 9).
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let symbols: Option<Vec<usize>> = if text.contains([',', ' ', '.']) {
            text.split([',', ' ', '.']).filter(|t| !t.is_empty()).map(|t| t.parse().ok()).collect()
        } else {
            text.chars().map(|c| c.to_digit(10).map(|d| d as usize)).collect()
        };
        match symbols {
            Some(s) if !s.is_empty() && !s.contains(&0) => Self::from_symbols(&s),
            _ => Err(Error::BadWord(text.to_string())),
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based symbols.
    pub fn symbols(&self) -> Vec<usize> {
        self.0.iter().map(|s| s + 1).collect()
    }

    pub(crate) fn raw(&self) -> &[usize] {
        &self.0
    }

    /// Formats using single digits when every symbol is below 10, otherwise
    /// comma separated.
    pub fn to_key(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&s| s < 9) {
            for s in &self.0 {
                write!(f, "{}", s + 1)?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|s| (s + 1).to_string()).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

/// All admissible words of length `k`, in lexicographic order.
pub fn enumerate_words(shift: &TransitionMatrix, k: usize) -> Vec<Word> {
    assert!(k >= 1, "word length must be positive");
    let mut out = Vec::new();
    let mut stack = Vec::with_capacity(k);
    fn extend(shift: &TransitionMatrix, k: usize, stack: &mut Vec<usize>, out: &mut Vec<Word>) {
        if stack.len() == k {
            out.push(Word(stack.clone()));
            return;
        }
        for b in 0..shift.size() {
            if stack.last().is_none_or(|&a| shift.allows(a, b)) {
                stack.push(b);
                extend(shift, k, stack, out);
                stack.pop();
            }
        }
    }
    extend(shift, k, &mut stack, &mut out);
    out
}

/// `d_theta` between two words of equal length: 0 if equal, `theta^k` where
/// `k` is the last index of the common prefix, and 1 when the first symbols
/// already differ.
pub fn cylinder_distance(w: &Word, v: &Word, theta: f64) -> Result<f64> {
    if w.len() != v.len() {
        return Err(Error::LengthMismatch { left: w.len(), right: v.len() });
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::BadTheta(theta));
    }
    let common = w.0.iter().zip(&v.0).take_while(|(a, b)| a == b).count();
    Ok(if common == w.len() {
        0.0
    } else if common == 0 {
        1.0
    } else {
        theta.powi(common as i32 - 1)
    })
}

/// Indexed set of admissible `k`-words; the position of a word is its state
/// index everywhere downstream.
#[derive(Clone, Debug)]
pub struct WordSpace {
    k: usize,
    base: usize,
    words: Vec<Word>,
    index: HashMap<u64, usize>,
}

impl WordSpace {
    pub fn new(shift: &TransitionMatrix, k: usize) -> Self {
        let base = shift.size();
        let words = enumerate_words(shift, k);
        let index = words.iter().enumerate().map(|(i, w)| (encode(base, &w.0), i)).collect();
        Self { k, base, words, index }
    }

    pub fn word_len(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &Word {
        &self.words[i]
    }

    /// State index of a 0-based symbol slice of length `k`.
    #[inline]
    pub(crate) fn index_of(&self, symbols: &[usize]) -> Option<usize> {
        debug_assert_eq!(symbols.len(), self.k);
        if symbols.iter().any(|&s| s >= self.base) {
            return None;
        }
        self.index.get(&encode(self.base, symbols)).copied()
    }

    pub fn position(&self, word: &Word) -> Option<usize> {
        if word.len() != self.k {
            return None;
        }
        self.index_of(&word.0)
    }
}

#[inline]
fn encode(base: usize, symbols: &[usize]) -> u64 {
    symbols.iter().fold(0u64, |acc, &s| acc * base as u64 + s as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(shift: &TransitionMatrix, k: usize) -> Vec<String> {
        enumerate_words(shift, k).iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn exponents() {
        assert_eq!(TransitionMatrix::full(2).aperiodicity_exponent(), 1);
        assert_eq!(TransitionMatrix::golden_mean().aperiodicity_exponent(), 2);
        let err = TransitionMatrix::new(&[vec![0, 1], vec![1, 0]]).unwrap_err();
        assert!(matches!(err, Error::NotAperiodic { .. }));
    }

    #[test]
    fn wielandt_matrix_reaches_the_bound() {
        // Wielandt's extremal matrix: cycle 1->2->...->n->1 plus n->2.
        let n = 4;
        let mut raw = vec![vec![0; n]; n];
        for i in 0..n - 1 {
            raw[i][i + 1] = 1;
        }
        raw[n - 1][0] = 1;
        raw[n - 1][1] = 1;
        let a = TransitionMatrix::new(&raw).unwrap();
        assert_eq!(a.aperiodicity_exponent(), wielandt_bound(n));
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            TransitionMatrix::new(&[vec![1, 2], vec![1, 1]]),
            Err(Error::NotZeroOne { row: 1, col: 2, value: 2 })
        ));
        assert!(matches!(TransitionMatrix::new(&[vec![0, 0], vec![1, 1]]), Err(Error::DeadSymbol { symbol: 1, .. })));
        assert!(matches!(
            TransitionMatrix::new(&[vec![1, 0], vec![1, 0]]),
            Err(Error::DeadSymbol { symbol: 2, which: "column" })
        ));
        assert!(matches!(TransitionMatrix::new(&[vec![1]]), Err(Error::NotSquare { .. })));
        assert!(matches!(TransitionMatrix::new(&[vec![1, 1], vec![1]]), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn word_lists() {
        assert_eq!(words(&TransitionMatrix::full(2), 2), ["11", "12", "21", "22"]);
        let g = TransitionMatrix::golden_mean();
        assert_eq!(words(&g, 2), ["12", "21", "22"]);
        assert_eq!(words(&g, 3), ["121", "122", "212", "221", "222"]);
    }

    #[test]
    fn word_counts_match_matrix_powers() {
        let shifts = [
            TransitionMatrix::full(3),
            TransitionMatrix::golden_mean(),
            TransitionMatrix::new(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]]).unwrap(),
        ];
        for a in &shifts {
            for k in 1..=10 {
                assert_eq!(enumerate_words(a, k).len() as u128, a.count_words(k));
            }
        }
    }

    #[test]
    fn distances() {
        let w = |s| Word::parse(s).unwrap();
        assert_eq!(cylinder_distance(&w("121"), &w("121"), 0.5).unwrap(), 0.0);
        assert_eq!(cylinder_distance(&w("121"), &w("122"), 0.5).unwrap(), 0.5);
        assert_eq!(cylinder_distance(&w("122"), &w("222"), 0.5).unwrap(), 1.0);
        assert_eq!(cylinder_distance(&w("1211"), &w("1212"), 0.5).unwrap(), 0.25);
        assert!(matches!(cylinder_distance(&w("12"), &w("122"), 0.5), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn parsing() {
        assert_eq!(Word::parse("121").unwrap().symbols(), [1, 2, 1]);
        assert_eq!(Word::parse("1,10,2").unwrap().symbols(), [1, 10, 2]);
        assert_eq!(Word::parse("1,10,2").unwrap().to_string(), "1,10,2");
        assert!(Word::parse("102").is_err());
        assert!(Word::parse("").is_err());
        assert!(Word::parse("1a").is_err());
    }

    #[test]
    fn word_space_indices_are_lexicographic() {
        let space = WordSpace::new(&TransitionMatrix::golden_mean(), 3);
        for (i, w) in space.words().iter().enumerate() {
            assert_eq!(space.position(w), Some(i));
        }
        assert_eq!(space.position(&Word::parse("112").unwrap()), None);
    }
}
