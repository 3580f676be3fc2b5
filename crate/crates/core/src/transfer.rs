//! The Ruelle transfer operator of a finite-range potential, realized exactly
//! as a sparse matrix on admissible `k`-words, and its Perron data.
//!
//! For `k >= r - 1` the operator maps functions of the first `k` symbols to
//! functions of the first `k` symbols:
//!
//! ```text
//! (L_f g)(u) = sum over a with A(a, u_0) = 1 of exp(f(a u)) g((a u)_{0..k-1})
//! ```
//!
//! so the row of state `u` has one entry per admissible preimage symbol.

use crate::bounds::paper_rpf_constants;
use crate::error::{Error, Result};
use crate::potential::{theta_norms, Potential};
use crate::sft::{TransitionMatrix, WordSpace};

/// Relative residual accepted by [`rpf_solve`].
pub const PERRON_TOL: f64 = 1e-13;
/// Iteration cap for the power iterations.
pub const MAX_ITERATIONS: usize = 1_000_000;
/// Unshifted steps before the Perron iteration switches to `T + lambda I`.
const PLAIN_STEPS: usize = 64;

#[derive(Clone, Debug)]
pub struct TransferMatrix {
    shift: TransitionMatrix,
    theta: f64,
    states: WordSpace,
    /// `rows[u] = [(v, exp(f(a u) - log_scale))]`.
    rows: Vec<Vec<(usize, f64)>>,
    log_scale: f64,
}

/// Builds the transfer matrix on `k`-words, `k = max(k_min, r - 1, 1)`.
///
/// Weights are stored divided by `exp(max f)` so that large potentials do not
/// overflow; [`TransferMatrix::apply`] restores the true scale.
pub fn build_transfer_matrix(f: &Potential, k_min: usize) -> TransferMatrix {
    let r = f.range();
    let k = k_min.max(r.saturating_sub(1)).max(1);
    let shift = f.shift().clone();
    let states = WordSpace::new(&shift, k);
    let log_scale = f.max();
    let mut buf = vec![0usize; k + 1];
    let rows = states
        .words()
        .iter()
        .map(|u| {
            let u = u.raw();
            buf[1..].copy_from_slice(u);
            (0..shift.size())
                .filter(|&a| shift.allows(a, u[0]))
                .map(|a| {
                    buf[0] = a;
                    let v = states.index_of(&buf[..k]).expect("admissible preimage");
                    let fv = f.value_at(&buf[..r]).expect("admissible word");
                    (v, (fv - log_scale).exp())
                })
                .collect()
        })
        .collect();
    TransferMatrix { shift, theta: f.theta(), states, rows, log_scale }
}

impl TransferMatrix {
    pub(crate) fn from_rows(
        shift: TransitionMatrix,
        theta: f64,
        states: WordSpace,
        rows: Vec<Vec<(usize, f64)>>,
        log_scale: f64,
    ) -> Self {
        Self { shift, theta, states, rows, log_scale }
    }

    pub fn states(&self) -> &WordSpace {
        &self.states
    }

    pub fn shift(&self) -> &TransitionMatrix {
        &self.shift
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Nonzero entries `(column, weight)` of a row, at true scale.
    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let s = self.log_scale.exp();
        self.rows[u].iter().map(move |&(v, w)| (v, w * s))
    }

    /// `L_f g` for `g` given on the state words.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let s = self.log_scale.exp();
        self.apply_scaled(g).into_iter().map(|x| x * s).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|u| {
                let mut row = vec![0.0; n];
                for (v, w) in self.row(u) {
                    row[v] += w;
                }
                row
            })
            .collect()
    }

    pub(crate) fn apply_scaled(&self, g: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|&(v, w)| w * g[v]).sum()).collect()
    }

    pub(crate) fn apply_transpose_scaled(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (u, row) in self.rows.iter().enumerate() {
            let xu = x[u];
            for &(v, w) in row {
                out[v] += xu * w;
            }
        }
        out
    }

    pub(crate) fn scaled_rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }
}

/// Perron triple of a transfer matrix plus a measured contraction ratio.
#[derive(Clone, Debug)]
pub struct RpfSolution {
    pub lambda: f64,
    pub log_lambda: f64,
    /// Right eigenvector, positive, normalized by `sum h_i nu_i = 1`.
    pub h: Vec<f64>,
    /// Left eigenvector as a probability vector (the cylinder masses of the
    /// eigenmeasure on the state words).
    pub nu: Vec<f64>,
    /// Estimate of `|lambda_2| / lambda` from deflated power iteration. This
    /// is a measurement, not a certified bound.
    pub gap_ratio: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Perron data at the matrix's internal scale.
#[derive(Clone, Debug)]
pub(crate) struct Perron {
    pub lambda_scaled: f64,
    pub h: Vec<f64>,
    pub nu: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl Perron {
    pub fn log_lambda(&self, t: &TransferMatrix) -> f64 {
        self.lambda_scaled.ln() + t.log_scale
    }
}

fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Simultaneous right/left power iteration from the all-ones vector with a
/// two-sided Rayleigh quotient.
///
/// If plain iteration has not converged after [`PLAIN_STEPS`] steps, each
/// further step applies `T + lambda_k I` with the current estimate
/// `lambda_k`. This leaves the Perron vectors fixed and maps an eigenvalue
/// `z` to `(z + lambda) / (2 lambda)` in relative size, which stays below
/// one even when `T` is close to a periodic matrix (strongly tilted
/// potentials concentrate on a single periodic orbit).
pub(crate) fn perron(t: &TransferMatrix) -> Result<Perron> {
    let n = t.dim();
    let mut h = vec![1.0; n];
    let mut nu = vec![1.0 / n as f64; n];
    let mut best = f64::INFINITY;
    let mut best_at = 0;
    for it in 0..MAX_ITERATIONS {
        let mut th = t.apply_scaled(&h);
        let mut tn = t.apply_transpose_scaled(&nu);
        let lambda = dot(&nu, &th) / dot(&nu, &h);
        let rh = th.iter().zip(&h).fold(0.0f64, |m, (a, b)| m.max((a - lambda * b).abs())) / (lambda * sup(&h));
        let rn = tn.iter().zip(&nu).fold(0.0f64, |m, (a, b)| m.max((a - lambda * b).abs())) / (lambda * sup(&nu));
        let residual = rh.max(rn);
        if residual < best * 0.9 {
            best = residual;
            best_at = it;
        }
        // Accept the rounding floor if it is reached slightly above the
        // target and no longer improves.
        let stalled = it - best_at > 1000 && best <= 1e-12;
        if residual <= PERRON_TOL || stalled {
            let mass: f64 = nu.iter().sum();
            nu.iter_mut().for_each(|x| *x /= mass);
            let c = dot(&h, &nu);
            h.iter_mut().for_each(|x| *x /= c);
            return Ok(Perron { lambda_scaled: lambda, h, nu, iterations: it, residual });
        }
        if it >= PLAIN_STEPS {
            th.iter_mut().zip(&h).for_each(|(y, x)| *y += lambda * x);
            tn.iter_mut().zip(&nu).for_each(|(y, x)| *y += lambda * x);
        }
        let hs = sup(&th);
        h = th.into_iter().map(|x| x / hs).collect();
        let ns: f64 = tn.iter().sum();
        nu = tn.into_iter().map(|x| x / ns).collect();
    }
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual: best })
}

/// Deterministic non-constant start vector for the deflated iteration.
fn probe_vector(n: usize) -> Vec<f64> {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .collect()
}

/// `x - h (nu . x)`: removes the Perron component (`nu . h = 1`).
pub(crate) fn project(x: &mut [f64], h: &[f64], nu: &[f64]) {
    let c = dot(nu, x);
    x.iter_mut().zip(h).for_each(|(xi, hi)| *xi -= c * hi);
}

/// `|lambda_2| / lambda` by power iteration on the operator restricted to
/// the complement of the Perron direction. Per-step growth is averaged
/// geometrically over windows so complex pairs do not oscillate the result.
pub(crate) fn second_eigen_ratio(t: &TransferMatrix, p: &Perron) -> f64 {
    const WINDOW: usize = 64;
    const MAX_WINDOWS: usize = 400;
    let mut x = probe_vector(t.dim());
    project(&mut x, &p.h, &p.nu);
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nx = norm(&x);
    if nx == 0.0 {
        return 0.0;
    }
    x.iter_mut().for_each(|a| *a /= nx);
    let mut previous = f64::NAN;
    for _ in 0..MAX_WINDOWS {
        let mut log_growth = 0.0;
        for _ in 0..WINDOW {
            let mut y = t.apply_scaled(&x);
            y.iter_mut().for_each(|a| *a /= p.lambda_scaled);
            project(&mut y, &p.h, &p.nu);
            let ny = norm(&y);
            if ny == 0.0 || !ny.is_finite() {
                return 0.0;
            }
            log_growth += ny.ln();
            x = y.into_iter().map(|a| a / ny).collect();
        }
        let estimate = (log_growth / WINDOW as f64).exp();
        if (estimate - previous).abs() <= 1e-10 * estimate.max(1e-300) {
            return estimate.min(1.0);
        }
        previous = estimate;
    }
    previous.min(1.0)
}

/// Perron triple `(lambda, h, nu)` with `L h = lambda h`, `L* nu = lambda nu`,
/// `nu` a probability vector and `sum h nu = 1`, plus the measured ratio of
/// the second eigenvalue.
pub fn rpf_solve(t: &TransferMatrix) -> Result<RpfSolution> {
    let p = perron(t)?;
    let gap_ratio = second_eigen_ratio(t, &p);
    let log_lambda = p.log_lambda(t);
    Ok(RpfSolution {
        lambda: log_lambda.exp(),
        log_lambda,
        h: p.h,
        nu: p.nu,
        gap_ratio,
        iterations: p.iterations,
        residual: p.residual,
    })
}

/// Tolerance under which variations of the normalized potential are treated
/// as zero when choosing its range.
const RANGE_TOL: f64 = 1e-12;

/// The cohomologous potential `phi = f + log h - log h∘sigma - log lambda`,
/// which satisfies `L_phi 1 = 1` and has the same equilibrium state.
pub fn normalize_potential(f: &Potential) -> Result<Potential> {
    let t = build_transfer_matrix(f, 1);
    let p = perron(&t)?;
    let k = t.states.word_len();
    let log_lambda = p.log_lambda(&t);
    let log_h: Vec<f64> = p.h.iter().map(|x| x.ln()).collect();
    let phi = Potential::from_fn(f.shift(), k + 1, f.theta(), |y| {
        let s = y.raw();
        let head = t.states.index_of(&s[..k]).expect("admissible");
        let tail = t.states.index_of(&s[1..]).expect("admissible");
        f.value_at(s).expect("admissible") + log_h[head] - log_h[tail] - log_lambda
    })?
    .reduce_range(RANGE_TOL)?;
    let defect = normalization_defect(&phi);
    if defect > 1e-10 {
        return Err(Error::NotNormalized(defect));
    }
    Ok(phi)
}

/// `max |L_phi 1 - 1|` over states.
pub fn normalization_defect(phi: &Potential) -> f64 {
    let t = build_transfer_matrix(phi, 1);
    t.apply(&vec![1.0; t.dim()]).iter().fold(0.0f64, |m, x| m.max((x - 1.0).abs()))
}

/// Per-`n` record of the convergence check.
#[derive(Clone, Debug)]
pub struct RpfStep {
    pub n: usize,
    /// `|| lambda^-n L^n g - h ∫ g dnu ||_theta` on the state words.
    pub deviation: f64,
    /// `log(D rho^n ||g||_theta)` with the explicit constants.
    pub log_paper_bound: f64,
    pub within_paper_bound: bool,
    /// `min_x lambda^-n (L^n 1)(x)` and `max_x ...`.
    pub iterate_min: f64,
    pub iterate_max: f64,
    pub within_sandwich: bool,
}

#[derive(Clone, Debug)]
pub struct RpfBoundsReport {
    pub solution: RpfSolution,
    pub steps: Vec<RpfStep>,
    /// Least-squares geometric ratio of the deviations over `n >= 5`.
    pub fitted_ratio: Option<f64>,
    pub h_norm: f64,
    pub log_h_norm_bound: f64,
    pub h_min: f64,
    pub log_h_min_bound: f64,
    pub test_norm: f64,
}

impl RpfBoundsReport {
    pub fn all_pass(&self) -> bool {
        self.first_violation().is_none()
    }

    pub fn first_violation(&self) -> Option<String> {
        if self.h_norm.ln() > self.log_h_norm_bound {
            return Some(format!("||h||_theta = {} above explicit bound", self.h_norm));
        }
        if self.h_min.ln() < self.log_h_min_bound {
            return Some(format!("min h = {} below explicit bound", self.h_min));
        }
        self.steps.iter().find_map(|s| {
            if !s.within_paper_bound {
                Some(format!("deviation {} above D rho^n ||g|| at n = {}", s.deviation, s.n))
            } else if !s.within_sandwich {
                Some(format!("lambda^-n L^n 1 outside [min h/|h|, |h|/min h] at n = {}", s.n))
            } else {
                None
            }
        })
    }
}

/// Iterates `x -> P L x / lambda` where `P` removes the Perron component.
/// Since `P` commutes with `L`, the `n`-th iterate of `P g` equals
/// `lambda^-n L^n g - h ∫ g dnu` exactly, but keeps full relative precision
/// once the deviation is far below the size of `g`.
pub(crate) fn deviation_sequence(t: &TransferMatrix, p: &Perron, g: &[f64], n_max: usize) -> Vec<f64> {
    let mut x = g.to_vec();
    project(&mut x, &p.h, &p.nu);
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let (s, semi) = theta_norms(&t.states, &x, t.theta);
        out.push(s + semi);
        if n < n_max {
            let mut y = t.apply_scaled(&x);
            y.iter_mut().for_each(|a| *a /= p.lambda_scaled);
            project(&mut y, &p.h, &p.nu);
            x = y;
        }
    }
    out
}

/// Least-squares slope of `log dev_n` for `n` in `[n_from, ..]`, as a ratio.
pub(crate) fn fit_geometric_ratio(devs: &[f64], n_from: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        devs.iter().enumerate().skip(n_from).filter(|(_, &d)| d > 1e-300).map(|(n, d)| (n as f64, d.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some((sxy / sxx).exp())
}

/// Checks the explicit Ruelle–Perron–Frobenius estimates for `f` on the
/// test function `g` for `n = 0..=n_max`: the exponential convergence
/// bound with explicit `D`, `rho`, the `lambda^n` sandwich for `L^n 1`, and
/// the explicit bounds on `||h||_theta` and `min h`.
///
/// Returns [`Error::BoundViolated`] on the first failure; these are
/// theorems, so a failure means a bug.
pub fn verify_rpf_bounds(f: &Potential, n_max: usize, g: &Potential) -> Result<RpfBoundsReport> {
    if !f.compatible(g) {
        return Err(Error::ModelMismatch);
    }
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let k = f.range().saturating_sub(1).max(g.range()).max(1);
    let t = build_transfer_matrix(f, k);
    let p = perron(&t)?;
    let gap_ratio = second_eigen_ratio(&t, &p);
    let shift = f.shift();
    let consts = paper_rpf_constants(f.theta(), shift.size(), shift.aperiodicity_exponent(), f.b(), f.sup_norm())?;
    let gv: Vec<f64> = t.states.words().iter().map(|w| g.value_at(w.raw())).collect::<Result<_>>()?;
    let test_norm = g.norm();
    let devs = deviation_sequence(&t, &p, &gv, n_max);

    let (h_sup, h_semi) = theta_norms(&t.states, &p.h, t.theta);
    let h_min = p.h.iter().copied().fold(f64::INFINITY, f64::min);
    let lower = h_min / h_sup;
    let upper = h_sup / h_min;
    let slack = 1e-12;

    let mut iterate = vec![1.0; t.dim()];
    let mut steps = Vec::with_capacity(n_max + 1);
    for (n, &deviation) in devs.iter().enumerate() {
        let log_paper_bound = consts.log_d + n as f64 * consts.log_rho + test_norm.ln();
        let within_paper_bound = deviation == 0.0 || deviation.ln() <= log_paper_bound;
        let iterate_min = iterate.iter().copied().fold(f64::INFINITY, f64::min);
        let iterate_max = iterate.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let within_sandwich = iterate_min >= lower * (1.0 - slack) && iterate_max <= upper * (1.0 + slack);
        steps.push(RpfStep {
            n,
            deviation,
            log_paper_bound,
            within_paper_bound,
            iterate_min,
            iterate_max,
            within_sandwich,
        });
        iterate = t.apply_scaled(&iterate);
        iterate.iter_mut().for_each(|a| *a /= p.lambda_scaled);
    }
    let log_lambda = p.log_lambda(&t);
    let report = RpfBoundsReport {
        fitted_ratio: fit_geometric_ratio(&devs, 5),
        h_norm: h_sup + h_semi,
        log_h_norm_bound: consts.log_h_norm_bound,
        h_min,
        log_h_min_bound: consts.log_h_min_bound,
        test_norm,
        steps,
        solution: RpfSolution {
            lambda: log_lambda.exp(),
            log_lambda,
            h: p.h,
            nu: p.nu,
            gap_ratio,
            iterations: p.iterations,
            residual: p.residual,
        },
    };
    match report.first_violation() {
        Some(what) => Err(Error::BoundViolated { what }),
        None => Ok(report),
    }
}
