//! Extreme cycle means of a potential, i.e. the endpoints of the interval
//! `{ ∫ psi dm : m invariant }`.
//!
//! Periodic orbits of a range-`r` potential are cycles in the graph whose
//! vertices are admissible `(r-1)`-words and whose edges are `r`-words (for
//! `r = 1`, the symbol graph with weight `psi(a)` on every edge leaving `a`).
//! The minimum cycle mean is found with Karp's algorithm; the maximum is the
//! minimum for `-psi`.

use crate::potential::Potential;
use crate::sft::{Word, WordSpace};

/// Absolute spread below which an observable is treated as cohomologous to a
/// constant.
pub const TOL_COB: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct CohomologySpread {
    pub min_mean: f64,
    pub max_mean: f64,
    /// Periodic block of a cycle attaining `min_mean`.
    pub min_cycle: Word,
    /// Periodic block of a cycle attaining `max_mean`.
    pub max_cycle: Word,
}

impl CohomologySpread {
    pub fn width(&self) -> f64 {
        self.max_mean - self.min_mean
    }

    pub fn is_cohomologous_to_constant(&self) -> bool {
        self.width() <= TOL_COB
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.min_mean && p <= self.max_mean
    }
}

/// Edge-weighted digraph in adjacency-list form.
#[derive(Clone, Debug)]
pub(crate) struct CycleGraph {
    /// `edges[u] = [(v, weight)]`.
    pub edges: Vec<Vec<(usize, f64)>>,
    /// Symbol contributed to the periodic block when leaving each vertex.
    pub label: Vec<usize>,
}

impl CycleGraph {
    pub fn of_potential(psi: &Potential, sign: f64) -> Self {
        let shift = psi.shift();
        let r = psi.range();
        if r == 1 {
            let s0 = shift.size();
            let edges = (0..s0)
                .map(|a| {
                    let wa = sign * psi.values()[a];
                    (0..s0).filter(|&b| shift.allows(a, b)).map(|b| (b, wa)).collect()
                })
                .collect();
            return Self { edges, label: (0..s0).collect() };
        }
        let states = WordSpace::new(shift, r - 1);
        let mut edges = vec![Vec::new(); states.len()];
        for (word, &value) in psi.words().iter().zip(psi.values()) {
            let s = word.raw();
            let u = states.index_of(&s[..r - 1]).expect("prefix admissible");
            let v = states.index_of(&s[1..]).expect("suffix admissible");
            edges[u].push((v, sign * value));
        }
        let label = states.words().iter().map(|w| w.raw()[0]).collect();
        Self { edges, label }
    }

    pub fn vertex_count(&self) -> usize {
        self.edges.len()
    }
}

/// Karp's minimum mean cycle. Returns the mean and one cycle attaining it as
/// a vertex sequence. Uses a virtual source joined to every vertex, so the
/// graph need not be strongly connected. `None` for an acyclic graph.
#[allow(clippy::needless_range_loop)]
pub(crate) fn karp_min_mean_cycle(graph: &CycleGraph) -> Option<(f64, Vec<usize>)> {
    let n = graph.vertex_count();
    if n == 0 {
        return None;
    }
    let inf = f64::INFINITY;
    // dist[k][v]: minimum weight of a walk with exactly k edges ending at v.
    let mut dist = vec![vec![inf; n]; n + 1];
    let mut pred = vec![vec![usize::MAX; n]; n + 1];
    dist[0].iter_mut().for_each(|d| *d = 0.0);
    for k in 0..n {
        let (done, rest) = dist.split_at_mut(k + 1);
        let (cur, next) = (&done[k], &mut rest[0]);
        for u in 0..n {
            if cur[u] == inf {
                continue;
            }
            for &(v, w) in &graph.edges[u] {
                let cand = cur[u] + w;
                if cand < next[v] {
                    next[v] = cand;
                    pred[k + 1][v] = u;
                }
            }
        }
    }
    let mut best: Option<(f64, usize)> = None;
    for v in 0..n {
        if dist[n][v] == inf {
            continue;
        }
        let worst = (0..n)
            .filter(|&k| dist[k][v] < inf)
            .map(|k| (dist[n][v] - dist[k][v]) / (n - k) as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        if best.is_none_or(|(b, _)| worst < b) {
            best = Some((worst, v));
        }
    }
    let (value, end) = best?;

    // The critical walk of length n decomposes into a simple path plus
    // cycles, each of which has minimum mean.
    let mut walk = vec![end];
    let mut v = end;
    for k in (1..=n).rev() {
        v = pred[k][v];
        walk.push(v);
    }
    walk.reverse();
    let mut stack: Vec<usize> = Vec::new();
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    for &x in &walk {
        if let Some(pos) = stack.iter().rposition(|&y| y == x) {
            cycles.push(stack.split_off(pos));
        }
        stack.push(x);
    }
    let cycle =
        cycles.into_iter().map(|c| (cycle_mean(graph, &c), c)).min_by(|a, b| a.0.total_cmp(&b.0)).map(|(_, c)| c)?;
    Some((value, cycle))
}

/// Mean weight of a closed vertex sequence (the edge back to the first
/// vertex is implied). Parallel edges take the smallest weight.
pub(crate) fn cycle_mean(graph: &CycleGraph, cycle: &[usize]) -> f64 {
    let total: f64 = (0..cycle.len())
        .map(|i| {
            let (u, v) = (cycle[i], cycle[(i + 1) % cycle.len()]);
            graph.edges[u].iter().filter(|(t, _)| *t == v).map(|(_, w)| *w).fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / cycle.len() as f64
}

/// Minimum and maximum cycle means of `psi`, with witnesses.
pub fn cohomology_spread(psi: &Potential) -> CohomologySpread {
    let extreme = |sign: f64| {
        let graph = CycleGraph::of_potential(psi, sign);
        let (_, cycle) = karp_min_mean_cycle(&graph).expect("aperiodic shift has cycles");
        let mean = sign * cycle_mean(&graph, &cycle);
        let block = Word::from_zero_based(cycle.iter().map(|&v| graph.label[v]).collect());
        (mean, block)
    };
    let (min_mean, min_cycle) = extreme(1.0);
    let (max_mean, max_cycle) = extreme(-1.0);
    CohomologySpread { min_mean, max_mean, min_cycle, max_cycle }
}
