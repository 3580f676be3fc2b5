//! Probabilities of Birkhoff-average deviations,
//! `mu{ x : psi_n(x)/n in (p - delta, p + delta) }`,
//! by exact dynamic programming over word states and by seeded sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::MarkovMeasure;
use crate::potential::Potential;
use crate::rate::{RateProblem, RateStatus};

/// Memory budget for the DP tables.
pub const MEMORY_BUDGET: usize = 2 << 30;
/// Relative tolerance for deciding that a sum sits on a window edge.
pub const EDGE_TOL: f64 = 1e-9;
/// Largest denominator accepted when detecting a common value lattice.
pub const MAX_DENOMINATOR: i64 = 1_000_000;
/// Number of independent random streams used by [`sample_paths`].
pub const SHARDS: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ExactDp,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ExactDp => "exact_dp",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowMass {
    pub n: usize,
    pub p: f64,
    pub delta: f64,
    pub mass: f64,
    /// `log(mass) / n`; `-inf` when the mass is zero.
    pub log_rate: f64,
    pub method: Method,
    /// Binning uncertainty for the DP, 95% half-width for sampling.
    pub slack: f64,
}

impl WindowMass {
    fn new(n: usize, p: f64, delta: f64, mass: f64, method: Method, slack: f64) -> Self {
        let mass = mass.clamp(0.0, 1.0);
        let log_rate = if mass > 0.0 { mass.ln() / n as f64 } else { f64::NEG_INFINITY };
        Self { n, p, delta, mass, log_rate, method, slack }
    }
}

/// Open window on Birkhoff sums with edge tolerance.
#[derive(Clone, Copy, Debug)]
struct Window {
    lo: f64,
    hi: f64,
    tol: f64,
}

impl Window {
    fn for_sums(n: usize, p: f64, delta: f64) -> Self {
        let nf = n as f64;
        let (lo, hi) = (nf * (p - delta), nf * (p + delta));
        Self { lo, hi, tol: EDGE_TOL * lo.abs().max(hi.abs()).max(1.0) }
    }

    fn above_lo(&self, s: f64) -> bool {
        s > self.lo + self.tol
    }

    fn below_hi(&self, s: f64) -> bool {
        s < self.hi - self.tol
    }

    fn contains(&self, s: f64) -> bool {
        self.above_lo(s) && self.below_hi(s)
    }
}

/// Forward-time chain on `K`-word states with the increment of the
/// Birkhoff sum attached to every edge.
struct Chain {
    initial: Vec<f64>,
    /// Sum of the `psi` terms fully inside each initial `K`-word (at most
    /// `n` of them), as indices into `psi.values()`.
    initial_terms: Vec<Vec<usize>>,
    /// `edges[v] = [(u, prob, term)]`, term an index into `psi.values()`.
    edges: Vec<Vec<(usize, f64, usize)>>,
    steps: usize,
}

fn chain(mu: &MarkovMeasure, psi: &Potential, n: usize) -> Result<Chain> {
    if mu.shift() != psi.shift() {
        return Err(Error::ModelMismatch);
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let r = psi.range();
    let k = mu.word_len().max(r.saturating_sub(1)).max(1);
    let mu = mu.refine(k)?;
    let states = mu.states();
    let space = psi.space();
    let term = |window: &[usize]| space.index_of(window).expect("admissible window");
    let initial_terms = states
        .words()
        .iter()
        .map(|w| {
            let s = w.raw();
            (0..=k.saturating_sub(r)).filter(|&i| i + r <= k).take(n).map(|i| term(&s[i..i + r])).collect()
        })
        .collect();
    let mut buf = vec![0usize; k + 1];
    let edges = (0..states.len())
        .map(|v| {
            buf[..k].copy_from_slice(states.word(v).raw());
            mu.forward_transition(v)
                .iter()
                .map(|&(u, prob)| {
                    buf[k] = states.word(u).raw()[k - 1];
                    (u, prob, term(&buf[k + 1 - r..]))
                })
                .collect()
        })
        .collect();
    // The cylinder has n + r - 1 symbols; the first K are in the state.
    let steps = (n + r - 1).saturating_sub(k);
    Ok(Chain { initial: mu.stationary().to_vec(), initial_terms, edges, steps })
}

/// `(unit, offsets)` with `values[i] = min + offsets[i] * unit` when the
/// values lie on a common lattice with denominator at most
/// [`MAX_DENOMINATOR`] relative to their spread.
fn detect_lattice(values: &[f64]) -> Option<(f64, Vec<i64>)> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = max - min;
    if spread == 0.0 {
        return Some((1.0, vec![0; values.len()]));
    }
    let mut denom: i64 = 1;
    for &v in values {
        let (_, d) = rational_approximation((v - min) / spread, MAX_DENOMINATOR)?;
        denom = lcm(denom, d);
        if denom > MAX_DENOMINATOR {
            return None;
        }
    }
    let unit = spread / denom as f64;
    let offsets: Vec<i64> = values.iter().map(|&v| ((v - min) / unit).round() as i64).collect();
    let exact =
        values.iter().zip(&offsets).all(|(&v, &m)| (min + m as f64 * unit - v).abs() <= 1e-12 * spread.max(1.0));
    exact.then_some((unit, offsets))
}

/// Best rational `a/b` with `b <= max_den` by continued fractions, if it
/// matches `x` to `1e-14`.
fn rational_approximation(x: f64, max_den: i64) -> Option<(i64, i64)> {
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        let (h2, k2) = (a as i64 * h1 + h0, a as i64 * k1 + k0);
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if ((h1 as f64 / k1 as f64) - x).abs() <= 1e-14 {
            return Some((h1, k1));
        }
        let frac = y - a;
        if frac < 1e-15 {
            break;
        }
        y = 1.0 / frac;
    }
    (k1 > 0 && ((h1 as f64 / k1 as f64) - x).abs() <= 1e-14).then_some((h1, k1))
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: i64, b: i64) -> i64 {
    a / gcd(a, b) * b
}

/// Mass distribution over integer offsets: runs the chain and returns,
/// for each total offset, the probability of all paths with that total.
fn offset_distribution(c: &Chain, offsets: &[i64], n: usize) -> Result<Vec<f64>> {
    let max_step = offsets.iter().copied().max().unwrap_or(0).max(0) as usize;
    let width = n * max_step + 1;
    let bytes = 2usize.saturating_mul(c.edges.len()).saturating_mul(width).saturating_mul(std::mem::size_of::<f64>());
    if bytes > MEMORY_BUDGET {
        return Err(Error::Infeasible(format!("exact DP needs {bytes} bytes for n = {n}; use sampling instead")));
    }
    let mut cur = vec![0.0; c.edges.len() * width];
    let mut reach = 0usize;
    for (v, terms) in c.initial_terms.iter().enumerate() {
        let m: i64 = terms.iter().map(|&t| offsets[t]).sum();
        cur[v * width + m as usize] += c.initial[v];
        reach = reach.max(m as usize);
    }
    let mut next = vec![0.0; cur.len()];
    for _ in 0..c.steps {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (v, edges) in c.edges.iter().enumerate() {
            let row = &cur[v * width..v * width + reach + 1];
            if row.iter().all(|&x| x == 0.0) {
                continue;
            }
            for &(u, prob, t) in edges {
                let shift = offsets[t] as usize;
                let target = &mut next[u * width + shift..u * width + shift + reach + 1];
                for (dst, &src) in target.iter_mut().zip(row) {
                    *dst += prob * src;
                }
            }
        }
        reach += max_step;
        std::mem::swap(&mut cur, &mut next);
    }
    let mut totals = vec![0.0; width];
    for v in 0..c.edges.len() {
        for (t, &x) in totals.iter_mut().zip(&cur[v * width..(v + 1) * width]) {
            *t += x;
        }
    }
    Ok(totals)
}

/// Exact mass of the `n`-cylinders whose Birkhoff average lies in the open
/// window `(p - delta, p + delta)`.
///
/// When the values of `psi` lie on a lattice the sums are tracked exactly
/// and `slack = 0`. Otherwise every term is rounded down and up to a grid
/// of width `delta / 100`; since every path satisfies
/// `lower <= sum <= upper`, the window mass is bracketed by
/// `P(lower > a) + P(upper < b) - 1` and `P(upper > a) + P(lower < b) - 1`,
/// and the midpoint is reported with half the bracket as slack.
pub fn exact_window_mass(mu: &MarkovMeasure, psi: &Potential, n: usize, p: f64, delta: f64) -> Result<WindowMass> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let c = chain(mu, psi, n)?;
    let window = Window::for_sums(n, p, delta);
    let values = psi.values();
    let min = psi.min();
    let nf = n as f64;
    if let Some((unit, offsets)) = detect_lattice(values) {
        let dist = offset_distribution(&c, &offsets, n)?;
        let mass =
            dist.iter().enumerate().filter(|(m, _)| window.contains(nf * min + *m as f64 * unit)).map(|(_, x)| x).sum();
        return Ok(WindowMass::new(n, p, delta, mass, Method::ExactDp, 0.0));
    }
    let beta = delta / 100.0;
    let floor: Vec<i64> = values.iter().map(|v| ((v - min) / beta).floor() as i64).collect();
    let ceil: Vec<i64> = values.iter().map(|v| ((v - min) / beta).ceil() as i64).collect();
    let lower = offset_distribution(&c, &floor, n)?;
    let upper = offset_distribution(&c, &ceil, n)?;
    let sum_at = |m: usize| nf * min + m as f64 * beta;
    let prob = |dist: &[f64], pred: &dyn Fn(f64) -> bool| -> f64 {
        dist.iter().enumerate().filter(|(m, _)| pred(sum_at(*m))).map(|(_, x)| x).sum()
    };
    let low = prob(&lower, &|s| window.above_lo(s)) + prob(&upper, &|s| window.below_hi(s)) - 1.0;
    let high = prob(&upper, &|s| s > window.lo - window.tol) + prob(&lower, &|s| s < window.hi + window.tol) - 1.0;
    let (low, high) = (low.clamp(0.0, 1.0), high.clamp(0.0, 1.0).max(low.clamp(0.0, 1.0)));
    Ok(WindowMass::new(n, p, delta, 0.5 * (low + high), Method::ExactDp, 0.5 * (high - low)))
}

/// Monte Carlo estimate of the window mass.
///
/// Paths start from the stationary law and follow the forward kernel.
/// Trials are split over [`SHARDS`] streams of `ChaCha8Rng` seeded with
/// `seed` (stream index = shard), so the result does not depend on thread
/// count.
pub fn sample_paths(
    mu: &MarkovMeasure,
    psi: &Potential,
    n: usize,
    trials: u64,
    seed: u64,
    p: f64,
    delta: f64,
) -> Result<WindowMass> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let c = chain(mu, psi, n)?;
    let window = Window::for_sums(n, p, delta);
    let values = psi.values();
    let cumulative = |weights: &mut dyn Iterator<Item = f64>| -> Vec<f64> {
        let mut acc = 0.0;
        weights
            .map(|w| {
                acc += w;
                acc
            })
            .collect()
    };
    let start = cumulative(&mut c.initial.iter().copied());
    let rows: Vec<Vec<f64>> = c.edges.iter().map(|e| cumulative(&mut e.iter().map(|x| x.1))).collect();
    let pick = |cdf: &[f64], x: f64| -> usize {
        let target = x * cdf.last().copied().unwrap_or(1.0);
        cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
    };
    let hits: u64 = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let count = trials / SHARDS + u64::from(shard < trials % SHARDS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let mut hits = 0u64;
            for _ in 0..count {
                let mut v = pick(&start, rng.random::<f64>());
                let mut sum: f64 = c.initial_terms[v].iter().map(|&t| values[t]).sum();
                for _ in 0..c.steps {
                    let e = pick(&rows[v], rng.random::<f64>());
                    let (u, _, t) = c.edges[v][e];
                    sum += values[t];
                    v = u;
                }
                hits += u64::from(window.contains(sum));
            }
            hits
        })
        .sum();
    let m = hits as f64 / trials as f64;
    let slack = 1.96 * (m * (1.0 - m) / trials as f64).sqrt();
    Ok(WindowMass::new(n, p, delta, m, Method::MonteCarlo, slack))
}

/// Window masses along `n_list` with the fixed-window limit
/// `-min { I(u) : u in [p - delta, p + delta] }`.
#[derive(Clone, Debug)]
pub struct LdpScan {
    pub rows: Vec<WindowMass>,
    pub reference: f64,
}

impl LdpScan {
    /// Whether `log_rate` is strictly increasing over the rows with `n > n_from`
    /// (including the transition from the last row with `n <= n_from`).
    pub fn increasing_after(&self, n_from: usize) -> bool {
        let start = self.rows.iter().rposition(|r| r.n <= n_from).unwrap_or(0);
        self.rows[start..].windows(2).all(|w| w[1].log_rate > w[0].log_rate)
    }

    /// `reference - log_rate` at the given `n`.
    pub fn gap_at(&self, n: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.n == n).map(|r| self.reference - r.log_rate)
    }
}

/// `-min I` over the closed window: `I` is convex with its zero at the
/// mean, so the minimum is at the mean or at the nearer endpoint.
pub fn window_reference(problem: &RateProblem, p: f64, delta: f64) -> Result<f64> {
    let mean = problem.mean();
    let (a, b) = (p - delta, p + delta);
    if mean >= a && mean <= b {
        return Ok(0.0);
    }
    let nearest = if mean < a { a } else { b };
    let r = problem.rate(nearest)?;
    Ok(if r.status == RateStatus::Outside { f64::NEG_INFINITY } else { -r.value })
}

pub fn ldp_scan(
    mu: &MarkovMeasure,
    psi: &Potential,
    problem: &RateProblem,
    n_list: &[usize],
    p: f64,
    delta: f64,
) -> Result<LdpScan> {
    let rows = n_list.par_iter().map(|&n| exact_window_mass(mu, psi, n, p, delta)).collect::<Result<Vec<_>>>()?;
    Ok(LdpScan { rows, reference: window_reference(problem, p, delta)? })
}
