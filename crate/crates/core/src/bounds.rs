//! Explicit spectral constants and the uniform lower bound on the rate
//! function outside a window around the mean.
//!
//! Everything that can overflow is kept in natural-log space: for modest
//! norms the convergence constant `D` exceeds `f64::MAX` and `rho` is
//! within `1e-16` of one.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::rate::{RateProblem, RateStatus, RateValue, TiltedFamily};
use crate::transfer::{deviation_sequence, normalization_defect, second_eigen_ratio};

/// Where a set of spectral constants comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstantsMode {
    /// The explicit closed-form constants. Rigorous.
    Paper,
    /// Fitted to measured spectral data. Empirical, not a certificate.
    Measured,
}

impl ConstantsMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConstantsMode::Paper => "paper",
            ConstantsMode::Measured => "measured",
        }
    }
}

impl std::str::FromStr for ConstantsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(ConstantsMode::Paper),
            "measured" => Ok(ConstantsMode::Measured),
            other => Err(Error::InvalidArgument(format!("unknown constants mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceParams {
    pub theta: f64,
    pub s0: usize,
    pub m: usize,
    pub b_f: f64,
    pub f_inf: f64,
}

/// `(D, rho)` with `||lambda^-n L^n g - h ∫ g dnu||_theta <= D rho^n ||g||_theta`,
/// plus bounds on the eigenfunction.
#[derive(Clone, Debug, PartialEq)]
pub struct RpfConstants {
    pub mode: ConstantsMode,
    /// `rho` as a float; may round to exactly 1 in paper mode.
    pub rho: f64,
    pub log_rho: f64,
    /// `log(-log rho)`, finite even when `-log rho` underflows.
    pub log_neg_log_rho: f64,
    pub log_d: f64,
    /// Upper bound on `log ||h||_theta`.
    pub log_h_norm_bound: f64,
    /// Lower bound on `log min h`.
    pub log_h_min_bound: f64,
    pub params: SourceParams,
}

impl RpfConstants {
    /// Constants given directly as numbers, e.g. from an external estimate.
    /// The eigenfunction bounds are left unconstrained.
    pub fn from_values(rho: f64, d: f64, theta: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidArgument(format!("rho must lie in (0,1), got {rho}")));
        }
        if !(d >= 1.0 && d.is_finite()) {
            return Err(Error::InvalidArgument(format!("D must be a finite number >= 1, got {d}")));
        }
        crate::potential::check_theta(theta)?;
        Ok(Self {
            mode: ConstantsMode::Measured,
            rho,
            log_rho: rho.ln(),
            log_neg_log_rho: (-rho.ln()).ln(),
            log_d: d.ln(),
            log_h_norm_bound: f64::INFINITY,
            log_h_min_bound: f64::NEG_INFINITY,
            params: SourceParams { theta, s0: 0, m: 0, b_f: 0.0, f_inf: 0.0 },
        })
    }

    /// `D` as a float; `+inf` once `log D > 709`.
    pub fn d(&self) -> f64 {
        self.log_d.exp()
    }

    /// `log(-log max(rho, theta))`: the log of the decay exponent `alpha`.
    pub fn log_alpha(&self) -> f64 {
        let log_theta = self.params.theta.ln();
        if self.log_rho >= log_theta {
            self.log_neg_log_rho
        } else {
            (-log_theta).ln()
        }
    }
}

/// The closed-form constants for a potential with `b_f = max(1, |f|_theta)`
/// and `f_inf = |f|_∞` on an `s0`-symbol shift whose matrix has positive
/// `M`-th power:
///
/// ```text
/// rho = (1 - (1-θ) / (4 s0^{2M} e^{8θ b_f/(1-θ)} e^{4M f_inf}))^{1/(2M)}
/// D   = 1e8 b_f^7 / (θ^10 (1-θ)^8) s0^{17M} e^{40 b_f/(1-θ)} e^{33M f_inf}
/// ||h||_θ <= 6 s0^M b_f / (θ^2 (1-θ)) e^{4 b_f/(1-θ)} e^{2M f_inf}
/// min h  >= 1 / (e^{2 b_f/(1-θ)} s0^M e^{2M f_inf})
/// ```
pub fn paper_rpf_constants(theta: f64, s0: usize, m: usize, b_f: f64, f_inf: f64) -> Result<RpfConstants> {
    crate::potential::check_theta(theta)?;
    if s0 < 2 || m < 1 {
        return Err(Error::InvalidArgument(format!("need s0 >= 2 and M >= 1, got s0 = {s0}, M = {m}")));
    }
    if !(b_f >= 1.0 && b_f.is_finite()) || !(f_inf >= 0.0 && f_inf.is_finite()) {
        return Err(Error::InvalidArgument(format!("need b_f >= 1 and f_inf >= 0, got {b_f}, {f_inf}")));
    }
    let (mf, ln_s0, ln_1m) = (m as f64, (s0 as f64).ln(), (1.0 - theta).ln());
    let log_eps = ln_1m - 4f64.ln() - 2.0 * mf * ln_s0 - 8.0 * theta * b_f / (1.0 - theta) - 4.0 * mf * f_inf;
    let eps = log_eps.exp();
    let (log_rho, log_neg_log_rho) = if eps > 1e-300 {
        let log_rho = (-eps).ln_1p() / (2.0 * mf);
        (log_rho, (-log_rho).ln())
    } else {
        // (1 - eps)^{1/2M} = exp(-eps/2M) to full precision here.
        let lnl = log_eps - (2.0 * mf).ln();
        (-lnl.exp(), lnl)
    };
    let log_d = 8.0 * 10f64.ln() + 7.0 * b_f.ln() - 10.0 * theta.ln() - 8.0 * ln_1m
        + 17.0 * mf * ln_s0
        + 40.0 * b_f / (1.0 - theta)
        + 33.0 * mf * f_inf;
    let log_h_norm_bound =
        6f64.ln() + mf * ln_s0 + b_f.ln() - 2.0 * theta.ln() - ln_1m + 4.0 * b_f / (1.0 - theta) + 2.0 * mf * f_inf;
    let log_h_min_bound = -(2.0 * b_f / (1.0 - theta) + mf * ln_s0 + 2.0 * mf * f_inf);
    Ok(RpfConstants {
        mode: ConstantsMode::Paper,
        rho: log_rho.exp(),
        log_rho,
        log_neg_log_rho,
        log_d,
        log_h_norm_bound,
        log_h_min_bound,
        params: SourceParams { theta, s0, m, b_f, f_inf },
    })
}

/// `C0 = ||phi||_theta + 2 max(|psi|_∞, 1)`.
pub fn c0(phi: &Potential, psi: &Potential) -> f64 {
    phi.norm() + 2.0 * psi.sup_norm().max(1.0)
}

/// Closed-form constants valid uniformly for the tilted family
/// `phi + q psi`, `|q| <= 1/b`, obtained with `b_f = f_inf = C0`.
pub fn paper_constants_for_family(phi: &Potential, psi: &Potential) -> Result<RpfConstants> {
    let c = c0(phi, psi);
    let shift = phi.shift();
    paper_rpf_constants(phi.theta(), shift.size(), shift.aperiodicity_exponent(), c, c)
}

const MEASURED_MARGIN: f64 = 0.05;
const RHO_CAP: f64 = 1.0 - 1e-9;

/// Empirical constants for the family `phi + q psi`: `rho` is the largest
/// measured second-eigenvalue ratio over `q in {-probe, 0, probe}` plus a
/// margin, and `D` covers all observed deviations of the test functions
/// `1` and `psi` for `n <= n_max` with a factor 2.
pub fn measured_rpf_constants(phi: &Potential, psi: &Potential, q_probe: f64, n_max: usize) -> Result<RpfConstants> {
    if n_max < 8 {
        return Err(Error::InvalidArgument(format!("n_max must be at least 8, got {n_max}")));
    }
    if !(q_probe.is_finite() && q_probe >= 0.0) {
        return Err(Error::InvalidArgument(format!("probe must be finite and >= 0, got {q_probe}")));
    }
    let family = TiltedFamily::with_resolution(phi, psi, psi.range())?;
    let states = family.states();
    let tests: Vec<(Vec<f64>, f64)> = vec![
        (vec![1.0; states.len()], 1.0),
        (states.words().iter().map(|w| psi.value_at(w.raw())).collect::<Result<_>>()?, psi.norm()),
    ];
    let mut gap: f64 = 0.0;
    let mut runs = Vec::new();
    let mut h_norm: f64 = 0.0;
    let mut h_min = f64::INFINITY;
    for q in [-q_probe, 0.0, q_probe] {
        let (t, p) = family.solve(q)?;
        gap = gap.max(second_eigen_ratio(&t, &p));
        let (sup, semi) = crate::potential::theta_norms(states, &p.h, phi.theta());
        h_norm = h_norm.max(sup + semi);
        h_min = h_min.min(p.h.iter().copied().fold(f64::INFINITY, f64::min));
        for (g, norm) in &tests {
            if *norm > 0.0 {
                runs.push((deviation_sequence(&t, &p, g, n_max), *norm));
            }
        }
    }
    let theta = phi.theta();
    let rho = if gap < 1e-12 { theta + MEASURED_MARGIN } else { gap + MEASURED_MARGIN }.min(RHO_CAP);
    let mut fit: f64 = 0.0;
    for (devs, norm) in &runs {
        for (n, d) in devs.iter().enumerate() {
            fit = fit.max(d / (rho.powi(n as i32) * norm));
        }
    }
    let d = (2.0 * fit).max(1.0);
    let shift = phi.shift();
    Ok(RpfConstants {
        mode: ConstantsMode::Measured,
        rho,
        log_rho: rho.ln(),
        log_neg_log_rho: (-rho.ln()).ln(),
        log_d: d.ln(),
        log_h_norm_bound: (2.0 * h_norm).ln(),
        log_h_min_bound: (h_min / 2.0).ln(),
        params: SourceParams {
            theta,
            s0: shift.size(),
            m: shift.aperiodicity_exponent(),
            b_f: phi.b(),
            f_inf: phi.sup_norm(),
        },
    })
}

/// Default settings for [`measured_rpf_constants`]: probe at `q = 1/b`.
pub const MEASURED_N_MAX: usize = 30;

/// Constants of either kind for the pair `(phi, psi)`.
pub fn constants_for(mode: ConstantsMode, phi: &Potential, psi: &Potential) -> Result<RpfConstants> {
    match mode {
        ConstantsMode::Paper => paper_constants_for_family(phi, psi),
        ConstantsMode::Measured => measured_rpf_constants(phi, psi, 1.0 / psi.b(), MEASURED_N_MAX),
    }
}

/// Outcome at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub p: f64,
    pub rate: RateValue,
    pub bound: f64,
    /// `Γ(q0)` for `p > mean`, `Γ(-q0)` for `p < mean`.
    pub gamma_at_q0: f64,
    pub pass: bool,
}

/// The quantities behind the uniform lower bound `I(p) >= delta0 q0 / 2`.
///
/// `q0 = min(C, 1/b)` with `C = delta0 / (100 C0^2 n0)` and `n0` the
/// integer with `n0 - 1 <= |log(delta0 / (16 C0 D))| / alpha < n0`,
/// `alpha = -log max(rho, theta)`.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub mode: ConstantsMode,
    pub constants: RpfConstants,
    pub c0: f64,
    /// `∫ psi dmu_phi`.
    pub psi_mean: f64,
    /// `psi_mean - min(0, min psi)`.
    pub b_psi: f64,
    pub b: f64,
    pub delta0: f64,
    pub alpha: f64,
    pub log_alpha: f64,
    /// `|log(delta0 / (16 C0 D))| / alpha`, as a float.
    pub x: f64,
    /// `n0` as a float; exact below `2^53`.
    pub n0: f64,
    /// `n0` as an integer when it fits.
    pub n0_exact: Option<u64>,
    pub q0: f64,
    pub log_q0: f64,
    pub bound: f64,
    pub verdicts: Vec<Verdict>,
    /// Grid points inside `[mean - delta0, mean + delta0]`, skipped.
    pub excluded: Vec<f64>,
    pub tilted: Option<TiltedCheck>,
}

impl BoundReport {
    /// `e^{-n0 alpha} < delta0/(16 C0 D) <= e^{-(n0-1) alpha}` in log space.
    /// Once `n0` exceeds `2^53` the integer part of `x` is not resolved by
    /// a float and the check compares against `x` itself.
    pub fn sandwich_holds(&self) -> bool {
        let target = (self.delta0 / (16.0 * self.c0)).ln() - self.constants.log_d;
        if self.n0 < 9.0e15 {
            -self.n0 * self.alpha < target && target <= -(self.n0 - 1.0) * self.alpha
        } else {
            let scaled = -target / self.alpha;
            (scaled - self.x).abs() <= 1e-12 * self.x && self.n0 >= self.x
        }
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass) && self.tilted.as_ref().is_none_or(|t| t.pass())
    }

    pub fn first_failure(&self) -> Option<String> {
        if let Some(v) = self.verdicts.iter().find(|v| !v.pass) {
            return Some(format!("p = {}: I = {}, Γ(±q0) = {}, bound = {}", v.p, v.rate.value, v.gamma_at_q0, v.bound));
        }
        match &self.tilted {
            Some(t) if !t.pass() => Some(format!("tilted family check failed: {t:?}")),
            _ => None,
        }
    }
}

/// `b_psi`, `C0`, `alpha`, `n0`, `q0` and the bound for normalized `phi`
/// and nonnegative `psi`.
pub fn theorem1_constants(phi: &Potential, psi: &Potential, delta0: f64, consts: &RpfConstants) -> Result<BoundReport> {
    let problem = checked_problem(phi, psi)?;
    report_for(&problem, delta0, consts)
}

fn checked_problem(phi: &Potential, psi: &Potential) -> Result<RateProblem> {
    let defect = normalization_defect(phi);
    if defect > 1e-10 {
        return Err(Error::NotNormalized(defect));
    }
    if psi.min() < 0.0 {
        return Err(Error::NegativeObservable(psi.min()));
    }
    RateProblem::new(phi, psi)
}

fn report_for(problem: &RateProblem, delta0: f64, consts: &RpfConstants) -> Result<BoundReport> {
    let (phi, psi) = (problem.family().phi(), problem.family().psi());
    let psi_mean = problem.mean();
    let b_psi = psi_mean - psi.min().min(0.0);
    if !(delta0 > 0.0 && delta0 < b_psi) {
        return Err(Error::Delta0OutOfRange { delta0, b_psi });
    }
    let c0 = c0(phi, psi);
    let b = psi.b();
    let log_alpha = consts.log_alpha();
    let alpha = log_alpha.exp();
    let target = (delta0 / (16.0 * c0)).ln() - consts.log_d;
    let log_x = target.abs().ln() - log_alpha;
    let x = log_x.exp();
    let n0 = x.floor() + 1.0;
    let n0_exact = (n0 < 1.8e19).then_some(n0 as u64);
    let log_c = delta0.ln() - 100f64.ln() - 2.0 * c0.ln() - n0.ln();
    let (q0, log_q0) = if log_c < -b.ln() { (log_c.exp(), log_c) } else { (1.0 / b, -b.ln()) };
    Ok(BoundReport {
        mode: consts.mode,
        constants: consts.clone(),
        c0,
        psi_mean,
        b_psi,
        b,
        delta0,
        alpha,
        log_alpha,
        x,
        n0,
        n0_exact,
        q0,
        log_q0,
        bound: delta0 * q0 / 2.0,
        verdicts: Vec::new(),
        excluded: Vec::new(),
        tilted: None,
    })
}

/// Checks along the tilted family at `q = ±q0`:
/// `e^{-q0 C0} <= lambda_q <= e^{q0 C0}` and
/// `max(0, e^{-2 q0 C0 n} - D rho^n) <= h_q <= e^{2 q0 C0 n} + D rho^n`
/// (best `n`), together with the eigenfunction bounds of the constants.
#[derive(Clone, Debug, PartialEq)]
pub struct TiltedCheck {
    pub q0: f64,
    /// `log lambda_q` at `-q0` and `+q0`.
    pub log_lambda: [f64; 2],
    pub log_lambda_bound: f64,
    pub h_min: [f64; 2],
    pub h_max: [f64; 2],
    pub h_norm: [f64; 2],
    pub h_lower: f64,
    pub h_upper: f64,
    pub lambda_ok: bool,
    pub h_sandwich_ok: bool,
    pub h_norm_ok: bool,
}

impl TiltedCheck {
    pub fn pass(&self) -> bool {
        self.lambda_ok && self.h_sandwich_ok && self.h_norm_ok
    }
}

/// `max_n (e^{-a n} - D rho^n)` and `min_n (e^{a n} + D rho^n)` over
/// integers `n >= 0`, for `a = 2 q0 C0`.
fn h_sandwich(a: f64, log_d: f64, alpha: f64) -> (f64, f64) {
    let lower_at = |n: f64| ((-a * n).exp() - (log_d - alpha * n).exp()).max(0.0);
    let upper_at = |n: f64| (a * n).exp() + (log_d - alpha * n).exp();
    let mut candidates = vec![0.0];
    if alpha > a {
        // Stationary points of the two smooth profiles.
        let lo = ((log_d + (alpha / a).ln()) / (alpha - a)).max(0.0);
        let hi = ((log_d + (alpha / a).ln()) / (alpha + a)).max(0.0);
        for n in [lo, hi] {
            if n.is_finite() {
                candidates.extend([n.floor(), n.floor() + 1.0]);
            }
        }
    }
    let lower = candidates.iter().map(|&n| lower_at(n)).fold(0.0, f64::max);
    let upper = candidates.iter().map(|&n| upper_at(n)).fold(f64::INFINITY, f64::min);
    (lower, upper)
}

pub fn verify_tilted_family(problem: &RateProblem, report: &BoundReport) -> Result<TiltedCheck> {
    let family = problem.family();
    let phi = family.phi();
    let consts = &report.constants;
    let q0 = report.q0;
    let slack = 1e-12;
    let mut check = TiltedCheck {
        q0,
        log_lambda: [0.0; 2],
        log_lambda_bound: q0 * report.c0,
        h_min: [0.0; 2],
        h_max: [0.0; 2],
        h_norm: [0.0; 2],
        h_lower: 0.0,
        h_upper: 0.0,
        lambda_ok: true,
        h_sandwich_ok: true,
        h_norm_ok: true,
    };
    let (lower, upper) = h_sandwich(2.0 * q0 * report.c0, consts.log_d, report.alpha);
    check.h_lower = lower;
    check.h_upper = upper;
    for (i, q) in [-q0, q0].into_iter().enumerate() {
        // Pr(phi) = 0, so log lambda_q is the pressure increment.
        let log_lambda = family.pressure_increment(q)?;
        let (t, p) = family.solve(q)?;
        let h_min = p.h.iter().copied().fold(f64::INFINITY, f64::min);
        let h_max = p.h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (sup, semi) = crate::potential::theta_norms(t.states(), &p.h, phi.theta());
        check.log_lambda[i] = log_lambda;
        check.h_min[i] = h_min;
        check.h_max[i] = h_max;
        check.h_norm[i] = sup + semi;
        check.lambda_ok &= log_lambda.abs() <= check.log_lambda_bound + slack;
        check.h_sandwich_ok &= h_min >= lower - slack && h_max <= upper + slack;
        check.h_norm_ok &=
            (sup + semi).ln() <= consts.log_h_norm_bound + slack && h_min.ln() >= consts.log_h_min_bound - slack;
    }
    Ok(check)
}

/// Computes the report and evaluates every grid point outside the closed
/// window `[mean - delta0, mean + delta0]` without failing on violations.
pub fn evaluate_bound(
    phi: &Potential,
    psi: &Potential,
    delta0: f64,
    p_grid: &[f64],
    consts: &RpfConstants,
) -> Result<BoundReport> {
    let problem = checked_problem(phi, psi)?;
    let mut report = report_for(&problem, delta0, consts)?;
    let mean = report.psi_mean;
    let (inside, outside): (Vec<f64>, Vec<f64>) = p_grid.iter().partition(|&&p| (p - mean).abs() <= delta0);
    report.excluded = inside;
    let q0 = report.q0;
    let family = problem.family();
    let increments = [family.pressure_increment(-q0)?, family.pressure_increment(q0)?];
    let bound = report.bound;
    report.verdicts = outside
        .par_iter()
        .map(|&p| {
            let rate = problem.rate(p)?;
            let gamma_at_q0 = if p > mean { p * q0 - increments[1] } else { -p * q0 - increments[0] };
            let rate_ok = rate.status == RateStatus::Outside || rate.value >= bound;
            Ok(Verdict { p, rate, bound, gamma_at_q0, pass: rate_ok && gamma_at_q0 >= bound })
        })
        .collect::<Result<_>>()?;
    report.tilted = Some(verify_tilted_family(&problem, &report)?);
    Ok(report)
}

/// As [`evaluate_bound`], failing with [`Error::BoundViolated`] on the first
/// violated inequality.
pub fn verify_bound(
    phi: &Potential,
    psi: &Potential,
    delta0: f64,
    p_grid: &[f64],
    consts: &RpfConstants,
) -> Result<BoundReport> {
    let report = evaluate_bound(phi, psi, delta0, p_grid, consts)?;
    match report.first_failure() {
        Some(what) => Err(Error::BoundViolated { what }),
        None => Ok(report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::{TransitionMatrix, Word};

    fn bernoulli() -> (Potential, Potential) {
        let full = TransitionMatrix::full(2);
        let phi = Potential::constant(&full, 0.5, -(2f64.ln())).unwrap();
        let psi = Potential::cylinder_indicator(&full, &Word::parse("1").unwrap(), 0.5).unwrap();
        (phi, psi)
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn paper_constant_examples() {
        let c = paper_rpf_constants(0.5, 2, 1, 1.0, 0.0).unwrap();
        let rho = (1.0 - 0.5 / (16.0 * 8f64.exp())).sqrt();
        assert!(close(c.rho, rho, 1e-15));
        assert!((c.rho - 0.9999948).abs() < 1e-7);
        let c = paper_rpf_constants(0.5, 2, 1, 1.0, 2f64.ln()).unwrap();
        let log_d = 1e8f64.ln() + 18.0 * 2f64.ln() + 17.0 * 2f64.ln() + 80.0 + 33.0 * 2f64.ln();
        assert!(close(c.log_d, log_d, 1e-15));
        assert!(close(c.d(), 1.6e63, 0.05));
        let h_norm = 6.0 * 2.0 / (0.25 * 0.5) * 8f64.exp() * 4.0;
        assert!(close(c.log_h_norm_bound, h_norm.ln(), 1e-14));
        let h_min = 1.0 / (4f64.exp() * 2.0 * 4.0);
        assert!(close(c.log_h_min_bound, h_min.ln(), 1e-14));
        assert!(matches!(paper_rpf_constants(1.5, 2, 1, 1.0, 0.0), Err(Error::BadTheta(_))));
    }

    #[test]
    fn paper_constants_are_monotone_in_f_inf() {
        let mut last: Option<RpfConstants> = None;
        for f_inf in [0.0, 0.5, 1.0, 2.0] {
            let c = paper_rpf_constants(0.5, 2, 1, 1.0, f_inf).unwrap();
            if let Some(prev) = &last {
                assert!(c.log_d > prev.log_d);
                assert!(c.log_rho > prev.log_rho);
            }
            last = Some(c);
        }
    }

    #[test]
    fn paper_rho_survives_underflow() {
        let c = paper_rpf_constants(0.5, 3, 4, 40.0, 40.0).unwrap();
        assert_eq!(c.rho, 1.0);
        assert!(c.log_rho < 0.0 || c.log_neg_log_rho.is_finite());
        assert!(c.log_neg_log_rho < -700.0);
        assert!(c.log_d.is_finite() && c.d().is_infinite());
    }

    #[test]
    fn worked_example() {
        let (phi, psi) = bernoulli();
        let consts = RpfConstants::from_values(0.6, 5.0, 0.5).unwrap();
        let r = theorem1_constants(&phi, &psi, 0.1, &consts).unwrap();
        assert!(close(r.c0, 2f64.ln() + 2.0, 1e-15));
        assert!(close(r.alpha, -(0.6f64.ln()), 1e-15));
        assert_eq!(r.n0_exact, Some(16));
        let q0 = 0.1 / (100.0 * r.c0 * r.c0 * 16.0);
        assert!(close(r.q0, q0, 1e-12));
        assert!((r.q0 - 8.62e-6).abs() < 1e-8);
        assert!(close(r.bound, 0.1 * q0 / 2.0, 1e-12));
        assert!(r.sandwich_holds());
    }

    #[test]
    fn paper_mode_on_bernoulli() {
        let (phi, psi) = bernoulli();
        let consts = paper_constants_for_family(&phi, &psi).unwrap();
        let r = theorem1_constants(&phi, &psi, 0.1, &consts).unwrap();
        assert!(r.sandwich_holds());
        assert!(r.q0 > 0.0 && r.bound > 0.0);
        assert!(r.q0 < 1e-20);
    }

    #[test]
    fn preconditions() {
        let (phi, psi) = bernoulli();
        let consts = RpfConstants::from_values(0.6, 5.0, 0.5).unwrap();
        assert!(matches!(theorem1_constants(&phi, &psi, 0.5, &consts), Err(Error::Delta0OutOfRange { .. })));
        let f = Potential::constant(phi.shift(), 0.5, 0.0).unwrap();
        assert!(matches!(theorem1_constants(&f, &psi, 0.1, &consts), Err(Error::NotNormalized(_))));
        let neg = psi.add_constant(-0.5).unwrap();
        assert!(matches!(theorem1_constants(&phi, &neg, 0.1, &consts), Err(Error::NegativeObservable(_))));
    }

    #[test]
    fn q0_monotonicity() {
        let (phi, psi) = bernoulli();
        for rho in [0.3, 0.6, 0.9] {
            let mut by_d = Vec::new();
            for d in [1.0, 10.0, 1e6] {
                let c = RpfConstants::from_values(rho, d, 0.5).unwrap();
                let mut by_delta = Vec::new();
                for delta0 in [0.05, 0.1, 0.3] {
                    by_delta.push(theorem1_constants(&phi, &psi, delta0, &c).unwrap().q0);
                }
                assert!(by_delta.windows(2).all(|w| w[1] >= w[0]));
                by_d.push(by_delta[1]);
            }
            assert!(by_d.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn bound_examples() {
        let (phi, psi) = bernoulli();
        let consts = RpfConstants::from_values(0.6, 5.0, 0.5).unwrap();
        let report = verify_bound(&phi, &psi, 0.1, &[0.6, 0.7, 0.9, 0.2], &consts).unwrap();
        assert_eq!(report.excluded, vec![0.6]);
        let at = |p: f64| report.verdicts.iter().find(|v| v.p == p).unwrap();
        let kl = 2f64.ln() + 0.7 * 0.7f64.ln() + 0.3 * 0.3f64.ln();
        assert!((at(0.7).rate.value - kl).abs() < 1e-9);
        assert!((kl - 0.0823).abs() < 1e-4);
        assert!(at(0.9).gamma_at_q0 >= report.bound);
        assert!(report.all_pass());
        assert!(report.tilted.as_ref().unwrap().pass());
    }

    #[test]
    fn measured_constants_full_shift() {
        let (phi, psi) = bernoulli();
        let c = measured_rpf_constants(&phi, &psi, 1.0, 20).unwrap();
        assert_eq!(c.mode, ConstantsMode::Measured);
        assert!((c.rho - 0.55).abs() < 1e-12);
        assert!((c.d() - 1.0).abs() < 1e-9 || c.d() <= 2.0 + 1e-9);
        let paper = paper_constants_for_family(&phi, &psi).unwrap();
        assert!(c.rho <= paper.rho);
    }

    #[test]
    fn sandwich_profile() {
        let (lo, hi) = h_sandwich(1e-4, 5f64.ln(), 0.5);
        assert!(lo > 0.99 && lo < 1.0);
        assert!(hi > 1.0 && hi < 1.01);
        // D = 1: n = 0 gives nothing, larger n approach 1 from below.
        let (lo, _) = h_sandwich(1e-6, 0.0, 0.5);
        assert!(lo > 0.9999 && lo < 1.0);
    }
}
