//! Equilibrium states as stationary Markov measures on word states.

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::sft::{TransitionMatrix, Word, WordSpace};
use crate::transfer::{build_transfer_matrix, perron};

/// Stationary Markov measure on admissible `k`-words.
///
/// `transition(u)` lists `P(u -> v)`, the probability that the state before
/// `u` is `v = (a u)_{0..k-1}`. This is the kernel `L_f` induces after
/// normalization: `P(u -> v) = L(u, v) h(v) / (lambda h(u))`. Forward-time
/// transitions are derived from it by time reversal.
#[derive(Clone, Debug)]
pub struct MarkovMeasure {
    shift: TransitionMatrix,
    states: WordSpace,
    stationary: Vec<f64>,
    backward: Vec<Vec<(usize, f64)>>,
    forward: Vec<Vec<(usize, f64)>>,
}

/// Equilibrium state of `f` resolved on `k`-words (`k` is raised to the
/// resolution of `f` if needed).
pub fn equilibrium_measure(f: &Potential, k: usize) -> Result<MarkovMeasure> {
    let t = build_transfer_matrix(f, k);
    let p = perron(&t)?;
    let stationary: Vec<f64> = p.h.iter().zip(&p.nu).map(|(h, nu)| h * nu).collect();
    let backward: Vec<Vec<(usize, f64)>> = t
        .scaled_rows()
        .iter()
        .enumerate()
        .map(|(u, row)| {
            let mut out: Vec<(usize, f64)> =
                row.iter().map(|&(v, w)| (v, w * p.h[v] / (p.lambda_scaled * p.h[u]))).collect();
            let total: f64 = out.iter().map(|e| e.1).sum();
            out.iter_mut().for_each(|e| e.1 /= total);
            out
        })
        .collect();
    Ok(MarkovMeasure::from_backward(f.shift().clone(), t.states().clone(), stationary, backward))
}

impl MarkovMeasure {
    fn from_backward(
        shift: TransitionMatrix,
        states: WordSpace,
        mut stationary: Vec<f64>,
        backward: Vec<Vec<(usize, f64)>>,
    ) -> Self {
        let total: f64 = stationary.iter().sum();
        stationary.iter_mut().for_each(|x| *x /= total);
        let mut forward = vec![Vec::new(); states.len()];
        for (u, row) in backward.iter().enumerate() {
            for &(v, p) in row {
                forward[v].push((u, stationary[u] * p / stationary[v]));
            }
        }
        for row in &mut forward {
            row.sort_by_key(|e| e.0);
            let total: f64 = row.iter().map(|e| e.1).sum();
            row.iter_mut().for_each(|e| e.1 /= total);
        }
        Self { shift, states, stationary, backward, forward }
    }

    pub fn shift(&self) -> &TransitionMatrix {
        &self.shift
    }

    pub fn states(&self) -> &WordSpace {
        &self.states
    }

    pub fn word_len(&self) -> usize {
        self.states.word_len()
    }

    /// `pi`, indexed like [`MarkovMeasure::states`].
    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Row `u` of the preimage kernel `P`.
    pub fn transition(&self, u: usize) -> &[(usize, f64)] {
        &self.backward[u]
    }

    /// Row `v` of the forward-time kernel: successor state `u` of `v`.
    pub fn forward_transition(&self, v: usize) -> &[(usize, f64)] {
        &self.forward[v]
    }

    /// `max |pi P - pi|`.
    pub fn stationarity_residual(&self) -> f64 {
        let mut next = vec![0.0; self.stationary.len()];
        for (u, row) in self.backward.iter().enumerate() {
            for &(v, p) in row {
                next[v] += self.stationary[u] * p;
            }
        }
        next.iter().zip(&self.stationary).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Mass of the cylinder `[w]`; zero for inadmissible words.
    pub fn cylinder_mass(&self, w: &Word) -> f64 {
        self.cylinder_mass_raw(w.raw())
    }

    pub(crate) fn cylinder_mass_raw(&self, s: &[usize]) -> f64 {
        let k = self.word_len();
        if s.is_empty() {
            return 1.0;
        }
        if s.iter().any(|&x| x >= self.shift.size()) || !s.windows(2).all(|p| self.shift.allows(p[0], p[1])) {
            return 0.0;
        }
        if s.len() < k {
            // Words are lexicographic, so the extensions are contiguous.
            return self
                .states
                .words()
                .iter()
                .zip(&self.stationary)
                .filter(|(w, _)| w.raw().starts_with(s))
                .map(|(_, p)| p)
                .sum();
        }
        let n = s.len();
        let mut state = self.states.index_of(&s[n - k..]).expect("admissible");
        let mut log_mass = self.stationary[state].ln();
        for j in (0..n - k).rev() {
            let prev = self.states.index_of(&s[j..j + k]).expect("admissible");
            let p = self.backward[state].iter().find(|e| e.0 == prev).map(|e| e.1).unwrap_or(0.0);
            if p == 0.0 {
                return 0.0;
            }
            log_mass += p.ln();
            state = prev;
        }
        log_mass.exp()
    }

    /// The same measure resolved on `k`-words, `k >= word_len()`.
    pub fn refine(&self, k: usize) -> Result<MarkovMeasure> {
        let k0 = self.word_len();
        if k < k0 {
            return Err(Error::InvalidArgument(format!("cannot coarsen {k0}-word states to {k}")));
        }
        if k == k0 {
            return Ok(self.clone());
        }
        let states = WordSpace::new(&self.shift, k);
        let stationary = states.words().iter().map(|w| self.cylinder_mass(w)).collect();
        let mut buf = vec![0usize; k + 1];
        let backward = states
            .words()
            .iter()
            .map(|u| {
                let u = u.raw();
                let coarse = self.states.index_of(&u[..k0]).expect("admissible");
                buf[1..].copy_from_slice(u);
                self.backward[coarse]
                    .iter()
                    .map(|&(v, p)| {
                        buf[0] = self.states.word(v).raw()[0];
                        (states.index_of(&buf[..k]).expect("admissible"), p)
                    })
                    .collect()
            })
            .collect();
        Ok(Self::from_backward(self.shift.clone(), states, stationary, backward))
    }
}

/// `∫ g dmu = sum over range-r words w of g(w) mu([w])`.
pub fn integrate(mu: &MarkovMeasure, g: &Potential) -> Result<f64> {
    if mu.shift() != g.shift() {
        return Err(Error::ModelMismatch);
    }
    Ok(g.words().iter().zip(g.values()).map(|(w, v)| v * mu.cylinder_mass(w)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::enumerate_words;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn bernoulli(q: f64) -> (Potential, Potential) {
        let full = TransitionMatrix::full(2);
        let psi = Potential::cylinder_indicator(&full, &w("1"), 0.5).unwrap();
        let f = psi.map(|v| q * v - (1.0 + q.exp()).ln()).unwrap();
        (f, psi)
    }

    #[test]
    fn uniform_bernoulli() {
        let (f, psi) = bernoulli(0.0);
        let mu = equilibrium_measure(&f, 1).unwrap();
        assert!(mu.stationary().iter().all(|p| (p - 0.5).abs() < 1e-15));
        assert!(mu.transition(0).iter().all(|e| (e.1 - 0.5).abs() < 1e-15));
        assert!((mu.cylinder_mass(&w("1211")) - 0.0625).abs() < 1e-15);
        assert!((integrate(&mu, &psi).unwrap() - 0.5).abs() < 1e-15);
        let c = Potential::constant(f.shift(), 0.5, 3.25).unwrap();
        assert!((integrate(&mu, &c).unwrap() - 3.25).abs() < 1e-14);
    }

    #[test]
    fn tilted_bernoulli() {
        for q in [-1.5, 1.0, 2.0] {
            let (f, psi) = bernoulli(q);
            let mu = equilibrium_measure(&f, 1).unwrap();
            let p1 = q.exp() / (1.0 + q.exp());
            assert!((mu.stationary()[0] - p1).abs() < 1e-14);
            assert!((mu.stationary()[1] - (1.0 - p1)).abs() < 1e-14);
            assert!((integrate(&mu, &psi).unwrap() - p1).abs() < 1e-14);
        }
        let (f, psi) = bernoulli(1.0);
        let mu = equilibrium_measure(&f, 1).unwrap();
        assert!((integrate(&mu, &psi).unwrap() - 0.7310585786300049).abs() < 1e-12);
    }

    #[test]
    fn golden_mean_measure() {
        let g = TransitionMatrix::golden_mean();
        let f = Potential::from_fn(&g, 2, 0.5, |x| if x.to_string() == "22" { 0.2 } else { 0.0 }).unwrap();
        for k in 1..=3 {
            let mu = equilibrium_measure(&f, k).unwrap();
            assert!(mu.stationarity_residual() < 1e-12);
            assert!(mu.stationary().iter().all(|&p| p > 0.0));
            for u in 0..mu.states().len() {
                let s: f64 = mu.transition(u).iter().map(|e| e.1).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
            let total: f64 = enumerate_words(&g, 5).iter().map(|w| mu.cylinder_mass(w)).sum();
            assert!((total - 1.0).abs() < 1e-10);
            assert_eq!(mu.cylinder_mass(&w("2112")), 0.0);
        }
        // Zero potential: Parry measure, pi(1) = 1 / (1 + golden^2).
        let zero = Potential::constant(&g, 0.5, 0.0).unwrap();
        let mu = equilibrium_measure(&zero, 1).unwrap();
        let gold = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((mu.stationary()[0] - 1.0 / (1.0 + gold * gold)).abs() < 1e-13);
    }

    #[test]
    fn masses_are_consistent_and_invariant() {
        let shift = TransitionMatrix::new(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 1, 1]]).unwrap();
        let f = Potential::from_fn(&shift, 3, 0.5, |x| {
            let s = x.symbols();
            ((s[0] * 3 + s[1] * 5 + s[2]) as f64 * 0.61).cos()
        })
        .unwrap();
        let mu = equilibrium_measure(&f, 2).unwrap();
        for word in enumerate_words(&shift, 3) {
            let m = mu.cylinder_mass(&word);
            let mut right = 0.0;
            let mut left = 0.0;
            for a in 1..=3usize {
                let mut r = word.symbols();
                r.push(a);
                right += mu.cylinder_mass(&Word::from_symbols(&r).unwrap());
                let mut l = vec![a];
                l.extend(word.symbols());
                left += mu.cylinder_mass(&Word::from_symbols(&l).unwrap());
            }
            assert!((right - m).abs() < 1e-12, "Markov consistency");
            assert!((left - m).abs() < 1e-12, "shift invariance");
        }
        let fine = mu.refine(4).unwrap();
        assert!(fine.stationarity_residual() < 1e-12);
        for word in enumerate_words(&shift, 6) {
            assert!((fine.cylinder_mass(&word) - mu.cylinder_mass(&word)).abs() < 1e-14);
        }
    }
}
