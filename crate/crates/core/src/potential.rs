//! Finite-range (locally constant) potentials on the one-sided shift.
//!
//! A potential of range `r` is a table indexed by admissible `r`-words; its
//! value at a sequence depends only on the first `r` symbols. Every norm is
//! therefore computable exactly: `var_k g = 0` for `k >= r - 1`.
//!
//! General Hölder functions must be truncated before they can be used here.
//! Replacing `g` by any function of its first `r` coordinates that agrees with
//! `g` somewhere on each `r`-cylinder moves values by at most
//! `var_{r-1} g <= |g|_theta * theta^(r-1)` (see [`truncation_error_bound`]).

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::sft::{TransitionMatrix, Word, WordSpace};

#[derive(Clone, Debug)]
pub struct Potential {
    shift: TransitionMatrix,
    theta: f64,
    space: WordSpace,
    values: Vec<f64>,
    variations: Vec<f64>,
    sup_norm: f64,
    seminorm: f64,
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::BadTheta(theta))
    }
}

/// `var_k` for `k = 0..k_max-1` of a function on the words of `space`.
/// Words sharing a `(k+1)`-prefix are contiguous in lexicographic order.
pub(crate) fn variations(space: &WordSpace, values: &[f64]) -> Vec<f64> {
    let k_len = space.word_len();
    (0..k_len.saturating_sub(1))
        .map(|k| {
            let mut var = 0.0f64;
            let mut start = 0;
            let words = space.words();
            while start < words.len() {
                let prefix = &words[start].raw()[..=k];
                let mut end = start;
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                while end < words.len() && &words[end].raw()[..=k] == prefix {
                    lo = lo.min(values[end]);
                    hi = hi.max(values[end]);
                    end += 1;
                }
                var = var.max(hi - lo);
                start = end;
            }
            var
        })
        .collect()
}

pub(crate) fn seminorm_from_variations(variations: &[f64], theta: f64) -> f64 {
    variations.iter().enumerate().map(|(k, v)| v / theta.powi(k as i32)).fold(0.0, f64::max)
}

/// `(|g|_inf, |g|_theta)` of a function given on the words of `space`.
pub(crate) fn theta_norms(space: &WordSpace, values: &[f64], theta: f64) -> (f64, f64) {
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let semi = seminorm_from_variations(&variations(space, values), theta);
    (sup, semi)
}

impl Potential {
    /// Builds a potential from an explicit table keyed by admissible
    /// `range`-words.
    pub fn new(shift: &TransitionMatrix, range: usize, table: &HashMap<Word, f64>, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        if range == 0 {
            return Err(Error::InvalidArgument("potential range must be at least 1".into()));
        }
        let space = WordSpace::new(shift, range);
        for key in table.keys() {
            if key.len() != range || !shift.is_admissible(key) {
                return Err(Error::InadmissibleWord(key.to_string()));
            }
        }
        let values = space
            .words()
            .iter()
            .map(|w| table.get(w).copied().ok_or_else(|| Error::MissingWord(w.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(shift.clone(), theta, space, values)
    }

    pub fn from_fn(
        shift: &TransitionMatrix,
        range: usize,
        theta: f64,
        mut f: impl FnMut(&Word) -> f64,
    ) -> Result<Self> {
        check_theta(theta)?;
        if range == 0 {
            return Err(Error::InvalidArgument("potential range must be at least 1".into()));
        }
        let space = WordSpace::new(shift, range);
        let values = space.words().iter().map(&mut f).collect();
        Self::from_parts(shift.clone(), theta, space, values)
    }

    pub fn constant(shift: &TransitionMatrix, theta: f64, c: f64) -> Result<Self> {
        Self::from_fn(shift, 1, theta, |_| c)
    }

    /// Indicator of the cylinder `[word]`.
    pub fn cylinder_indicator(shift: &TransitionMatrix, word: &Word, theta: f64) -> Result<Self> {
        if !shift.is_admissible(word) {
            return Err(Error::InadmissibleWord(word.to_string()));
        }
        Self::from_fn(shift, word.len(), theta, |w| (w == word) as u8 as f64)
    }

    pub(crate) fn from_parts(shift: TransitionMatrix, theta: f64, space: WordSpace, values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite potential value at word {}", space.word(bad))));
        }
        let variations = variations(&space, &values);
        let seminorm = seminorm_from_variations(&variations, theta);
        let sup_norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self { shift, theta, space, values, variations, sup_norm, seminorm })
    }

    pub fn shift(&self) -> &TransitionMatrix {
        &self.shift
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn range(&self) -> usize {
        self.space.word_len()
    }

    pub fn words(&self) -> &[Word] {
        self.space.words()
    }

    pub(crate) fn space(&self) -> &WordSpace {
        &self.space
    }

    /// Values in the canonical (lexicographic) word order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at any word of length at least `range` (only the prefix is read).
    pub fn value(&self, word: &Word) -> Result<f64> {
        self.value_at(word.raw())
    }

    #[inline]
    pub(crate) fn value_at(&self, symbols: &[usize]) -> Result<f64> {
        let r = self.range();
        if symbols.len() < r {
            return Err(Error::WordTooShort { len: symbols.len(), needed: r });
        }
        self.space
            .index_of(&symbols[..r])
            .map(|i| self.values[i])
            .ok_or_else(|| Error::InadmissibleWord(Word::from_zero_based(symbols[..r].to_vec()).to_string()))
    }

    /// `var_k g` for `k = 0..range-1`; all higher variations vanish.
    pub fn variations(&self) -> &[f64] {
        &self.variations
    }

    /// `|g|_inf`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// `|g|_theta = sup_k var_k g / theta^k`.
    pub fn seminorm(&self) -> f64 {
        self.seminorm
    }

    /// `||g||_theta = |g|_theta + |g|_inf`.
    pub fn norm(&self) -> f64 {
        self.seminorm + self.sup_norm
    }

    /// `b = max{1, |g|_theta}`.
    pub fn b(&self) -> f64 {
        self.seminorm.max(1.0)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn compatible(&self, other: &Potential) -> bool {
        self.shift == other.shift && self.theta == other.theta
    }

    /// The same function tabulated on longer words.
    pub fn extend_to(&self, range: usize) -> Result<Self> {
        if range < self.range() {
            return Err(Error::InvalidArgument(format!("cannot shorten range {} to {range}", self.range())));
        }
        if range == self.range() {
            return Ok(self.clone());
        }
        let space = WordSpace::new(&self.shift, range);
        let values = space.words().iter().map(|w| self.value_at(w.raw())).collect::<Result<Vec<_>>>()?;
        Self::from_parts(self.shift.clone(), self.theta, space, values)
    }

    /// The shortest range `r'` such that `var_k <= tol` for every
    /// `k >= r' - 1`, tabulated on `r'`-words (taking the first extension of
    /// each prefix).
    pub fn reduce_range(&self, tol: f64) -> Result<Self> {
        let mut r = self.range();
        while r > 1 && self.variations[r - 2] <= tol {
            r -= 1;
        }
        if r == self.range() {
            return Ok(self.clone());
        }
        let space = WordSpace::new(&self.shift, r);
        let mut values = vec![f64::NAN; space.len()];
        for (w, &v) in self.space.words().iter().zip(&self.values) {
            let i = space.index_of(&w.raw()[..r]).expect("prefix of admissible word");
            if values[i].is_nan() {
                values[i] = v;
            }
        }
        Self::from_parts(self.shift.clone(), self.theta, space, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Self::from_parts(self.shift.clone(), self.theta, self.space.clone(), values)
    }

    pub fn add_constant(&self, c: f64) -> Result<Self> {
        self.map(|v| v + c)
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| v * c)
    }

    /// `g_n(w) = g(w) + g(sigma w) + ... + g(sigma^(n-1) w)`; needs
    /// `len(w) >= n + range - 1`.
    pub fn birkhoff_sum(&self, word: &Word, n: usize) -> Result<f64> {
        if n == 0 {
            return Ok(0.0);
        }
        let needed = n + self.range() - 1;
        if word.len() < needed {
            return Err(Error::WordTooShort { len: word.len(), needed });
        }
        if !self.shift.is_admissible(word) {
            return Err(Error::InadmissibleWord(word.to_string()));
        }
        let s = word.raw();
        (0..n).map(|i| self.value_at(&s[i..])).sum()
    }
}

/// `phi + q psi` on the larger of the two ranges.
pub fn affine_combine(phi: &Potential, psi: &Potential, q: f64) -> Result<Potential> {
    if !phi.compatible(psi) {
        return Err(Error::ModelMismatch);
    }
    let range = phi.range().max(psi.range());
    let space = WordSpace::new(&phi.shift, range);
    let values = space
        .words()
        .iter()
        .map(|w| Ok(phi.value_at(w.raw())? + q * psi.value_at(w.raw())?))
        .collect::<Result<Vec<_>>>()?;
    Potential::from_parts(phi.shift.clone(), phi.theta, space, values)
}

/// `psi + c` with `c = -min psi` when `psi` takes negative values, else
/// `(psi, 0)`.
pub fn shift_nonnegative(psi: &Potential) -> Result<(Potential, f64)> {
    let min = psi.min();
    if min >= 0.0 {
        return Ok((psi.clone(), 0.0));
    }
    let c = -min;
    let shifted = psi.map(|v| (v + c).max(0.0))?;
    Ok((shifted, c))
}

/// Upper bound on `|g - g_r|_inf` when a Hölder function with seminorm
/// `seminorm` is replaced by a range-`r` truncation.
pub fn truncation_error_bound(seminorm: f64, theta: f64, range: usize) -> f64 {
    seminorm * theta.powi(range as i32 - 1)
}

/// A finite-range function approximating the indicator of a union of
/// cylinders `K` from above.
///
/// Let `m` be the longest word in `K` (shorter words are refined to length
/// `m`). For an `m`-word `x`, let `a` be the longest common prefix of `x`
/// with a word of `K` and `d = m - a` its refinement distance (so `d = 0`
/// exactly on `K`, and `d_theta(x, K) = theta^(a-1)`). The value is
/// `max(0, 1 - d / (pad + 1))`: 1 on `K`, 0 outside the `pad`-refinement
/// neighbourhood, linear in between. With `pad = 0` this is the indicator
/// itself, whose seminorm is `theta^-(m-2)`: thin neighbourhoods of deep
/// cylinders have `b = |psi|_theta >> 1`.
pub fn indicator_example(shift: &TransitionMatrix, k: &[Word], pad: usize, theta: f64) -> Result<Potential> {
    check_theta(theta)?;
    if k.is_empty() {
        return Err(Error::InvalidArgument("K must contain at least one cylinder".into()));
    }
    for w in k {
        if w.is_empty() || !shift.is_admissible(w) {
            return Err(Error::InadmissibleWord(w.to_string()));
        }
    }
    let m = k.iter().map(Word::len).max().unwrap_or(1);
    Potential::from_fn(shift, m, theta, |x| {
        let deficit = k
            .iter()
            .map(|c| {
                let common = c.raw().iter().zip(x.raw()).take_while(|(a, b)| a == b).count();
                if common == c.len() {
                    0
                } else {
                    m - common
                }
            })
            .min()
            .unwrap_or(m);
        (1.0 - deficit as f64 / (pad as f64 + 1.0)).max(0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn table(pairs: &[(&str, f64)]) -> HashMap<Word, f64> {
        pairs.iter().map(|(k, v)| (w(k), *v)).collect()
    }

    /// Brute force: all pairs of words, variation indexed by common prefix.
    fn brute_seminorm(p: &Potential) -> f64 {
        let r = p.range();
        let mut var = vec![0.0f64; r];
        for (a, va) in p.words().iter().zip(p.values()) {
            for (b, vb) in p.words().iter().zip(p.values()) {
                let common = a.symbols().iter().zip(b.symbols()).take_while(|(x, y)| **x == *y).count();
                for slot in var.iter_mut().take(common) {
                    *slot = slot.max((va - vb).abs());
                }
            }
        }
        var.iter().enumerate().map(|(k, v)| v / p.theta().powi(k as i32)).fold(0.0, f64::max)
    }

    #[test]
    fn norms_of_small_examples() {
        let full = TransitionMatrix::full(2);
        let zero = Potential::new(&full, 1, &table(&[("1", 0.0), ("2", 0.0)]), 0.5).unwrap();
        assert_eq!((zero.sup_norm(), zero.seminorm(), zero.b()), (0.0, 0.0, 1.0));
        let ind = Potential::new(&full, 1, &table(&[("1", 1.0), ("2", 0.0)]), 0.5).unwrap();
        assert_eq!((ind.sup_norm(), ind.seminorm(), ind.b()), (1.0, 0.0, 1.0));
        let r2 = Potential::new(&full, 2, &table(&[("11", 1.0), ("12", 0.0), ("21", 0.0), ("22", 0.0)]), 0.5).unwrap();
        assert_eq!(r2.variations(), &[1.0]);
        assert_eq!(r2.seminorm(), 1.0);
        assert_eq!(brute_seminorm(&r2), 1.0);
    }

    #[test]
    fn table_errors() {
        let g = TransitionMatrix::golden_mean();
        let missing = table(&[("12", 0.0), ("21", 0.0)]);
        assert_eq!(Potential::new(&g, 2, &missing, 0.5).unwrap_err(), Error::MissingWord("22".into()));
        let bad = table(&[("11", 0.0), ("12", 0.0), ("21", 0.0), ("22", 0.0)]);
        assert_eq!(Potential::new(&g, 2, &bad, 0.5).unwrap_err(), Error::InadmissibleWord("11".into()));
        let ok = table(&[("12", 0.0), ("21", 0.0), ("22", 0.0)]);
        assert_eq!(Potential::new(&g, 2, &ok, 1.0).unwrap_err(), Error::BadTheta(1.0));
    }

    #[test]
    fn birkhoff_examples() {
        let full = TransitionMatrix::full(2);
        let psi = Potential::cylinder_indicator(&full, &w("1"), 0.5).unwrap();
        assert_eq!(psi.birkhoff_sum(&w("12122"), 3).unwrap(), 2.0);
        assert_eq!(psi.birkhoff_sum(&w("1"), 0).unwrap(), 0.0);
        let g = TransitionMatrix::golden_mean();
        let psi = Potential::cylinder_indicator(&g, &w("1"), 0.5).unwrap();
        assert_eq!(psi.birkhoff_sum(&w("21212"), 4).unwrap(), 2.0);
        assert!(matches!(psi.birkhoff_sum(&w("212"), 4), Err(Error::WordTooShort { .. })));
        assert!(matches!(psi.birkhoff_sum(&w("2112"), 4), Err(Error::InadmissibleWord(_))));
    }

    #[test]
    fn affine_examples() {
        let full = TransitionMatrix::full(2);
        let phi = Potential::constant(&full, 0.5, -(2f64.ln())).unwrap();
        let psi = Potential::cylinder_indicator(&full, &w("1"), 0.5).unwrap();
        let fq = affine_combine(&phi, &psi, 2.0).unwrap();
        assert_eq!(fq.values(), &[2.0 - 2f64.ln(), -(2f64.ln())]);
        let psi2 = Potential::cylinder_indicator(&full, &w("12"), 0.5).unwrap();
        let f0 = affine_combine(&phi, &psi2, 0.0).unwrap();
        assert_eq!(f0.range(), 2);
        assert!(f0.values().iter().all(|&v| v == -(2f64.ln())));
        let zero = Potential::constant(&full, 0.5, 0.0).unwrap();
        assert_eq!(affine_combine(&zero, &psi2, 1.0).unwrap().values(), psi2.values());
        let other = Potential::constant(&full, 0.25, 0.0).unwrap();
        assert_eq!(affine_combine(&other, &psi, 1.0).unwrap_err(), Error::ModelMismatch);
    }

    #[test]
    fn nonnegative_shift() {
        let full = TransitionMatrix::full(2);
        let psi = Potential::new(&full, 1, &table(&[("1", -0.3), ("2", 0.7)]), 0.5).unwrap();
        let (shifted, c) = shift_nonnegative(&psi).unwrap();
        assert_eq!(c, 0.3);
        assert_eq!(shifted.values(), &[0.0, 1.0]);
        let (same, c0) = shift_nonnegative(&shifted).unwrap();
        assert_eq!((same.values(), c0), (shifted.values(), 0.0));
    }

    #[test]
    fn indicator_examples() {
        let full = TransitionMatrix::full(2);
        let all = indicator_example(&full, &[w("1"), w("2")], 0, 0.5).unwrap();
        assert!(all.values().iter().all(|&v| v == 1.0));
        assert_eq!(all.seminorm(), 0.0);
        let one = indicator_example(&full, &[w("1")], 0, 0.5).unwrap();
        assert_eq!(one.values(), &[1.0, 0.0]);
        // [11] with one refinement step of padding: 11 -> 1, 12 -> 1/2, 2x -> 0.
        let padded = indicator_example(&full, &[w("11")], 1, 0.5).unwrap();
        assert_eq!(padded.values(), &[1.0, 0.5, 0.0, 0.0]);
        assert_eq!(padded.seminorm(), brute_seminorm(&padded));
        assert_eq!(padded.seminorm(), 0.5);
        // Deep cylinders: |chi_[c]|_theta = theta^-(m-2).
        for m in 2..8 {
            let c = Word::from_symbols(&vec![1; m]).unwrap();
            let chi = indicator_example(&full, &[c], 0, 0.5).unwrap();
            assert_eq!(chi.seminorm(), 2f64.powi(m as i32 - 2));
        }
        assert!(matches!(
            indicator_example(&TransitionMatrix::golden_mean(), &[w("11")], 0, 0.5),
            Err(Error::InadmissibleWord(_))
        ));
    }

    #[test]
    fn reduce_range_finds_minimal_table() {
        let full = TransitionMatrix::full(2);
        let psi = Potential::cylinder_indicator(&full, &w("1"), 0.5).unwrap();
        let long = psi.extend_to(4).unwrap();
        assert_eq!(long.range(), 4);
        let back = long.reduce_range(0.0).unwrap();
        assert_eq!(back.range(), 1);
        assert_eq!(back.values(), psi.values());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn shift_strategy() -> impl Strategy<Value = TransitionMatrix> {
            prop_oneof![
                Just(TransitionMatrix::full(2)),
                Just(TransitionMatrix::full(3)),
                Just(TransitionMatrix::golden_mean()),
                Just(TransitionMatrix::new(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]]).unwrap()),
            ]
        }

        fn potential_strategy(max_range: usize) -> impl Strategy<Value = Potential> {
            (shift_strategy(), 1..=max_range, 0.1f64..0.9).prop_flat_map(|(shift, r, theta)| {
                let n = WordSpace::new(&shift, r).len();
                proptest::collection::vec(-3.0f64..3.0, n).prop_map(move |vals| {
                    let space = WordSpace::new(&shift, r);
                    Potential::from_parts(shift.clone(), theta, space, vals).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn seminorm_matches_brute_force(p in potential_strategy(4)) {
                prop_assert_eq!(p.seminorm(), brute_seminorm(&p));
            }

            #[test]
            fn constants_do_not_change_seminorm(p in potential_strategy(4), c in -5.0f64..5.0) {
                let shifted = p.add_constant(c).unwrap();
                prop_assert!((shifted.seminorm() - p.seminorm()).abs() <= 1e-12 * (1.0 + p.seminorm()));
                let (nonneg, _) = shift_nonnegative(&p).unwrap();
                prop_assert!(nonneg.min() >= 0.0);
                prop_assert!(nonneg.sup_norm() <= 2.0 * p.sup_norm() + 1e-12);
                prop_assert!((nonneg.seminorm() - p.seminorm()).abs() <= 1e-12 * (1.0 + p.seminorm()));
            }

            #[test]
            fn birkhoff_is_additive(p in potential_strategy(3), m in 0usize..5, n in 0usize..5, seed in 0u64..1000) {
                let len = m + n + p.range() - 1;
                let words = crate::sft::enumerate_words(p.shift(), len.max(1));
                let word = &words[(seed as usize) % words.len()];
                let tail = Word::from_zero_based(word.raw()[m..].to_vec());
                let lhs = p.birkhoff_sum(word, m + n).unwrap();
                let rhs = p.birkhoff_sum(word, m).unwrap() + if n > 0 { p.birkhoff_sum(&tail, n).unwrap() } else { 0.0 };
                prop_assert!((lhs - rhs).abs() <= 1e-12);
            }

            #[test]
            fn affine_is_linear(p in potential_strategy(3), q in -3.0f64..3.0, seed in 0u64..1000) {
                let psi = p.map(|v| (v * 1.7).sin()).unwrap().extend_to(p.range() + 1).unwrap();
                let fq = affine_combine(&p, &psi, q).unwrap();
                prop_assert!(fq.norm() <= p.norm() + q.abs() * psi.norm() + 1e-12);
                let n = 4;
                let words = crate::sft::enumerate_words(p.shift(), n + fq.range() - 1);
                let word = &words[(seed as usize) % words.len()];
                let lhs = fq.birkhoff_sum(word, n).unwrap();
                let rhs = p.birkhoff_sum(word, n).unwrap() + q * psi.birkhoff_sum(word, n).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12);
            }
        }
    }
}
