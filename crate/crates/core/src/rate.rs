//! Pressure of tilted potentials and the large-deviation rate function
//!
//! ```text
//! I(p) = sup_q Γ(q),   Γ(q) = p q - (Pr(phi + q psi) - Pr(phi)),
//! Γ'(q) = p - ∫ psi dmu_{phi + q psi}.
//! ```
//!
//! `Γ` is concave, so the maximizer is bracketed by a sign change of `Γ'`
//! and refined by bisection with a Newton polish.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::{equilibrium_measure, integrate};
use crate::potential::Potential;
use crate::sft::WordSpace;
use crate::spread::{cohomology_spread, CohomologySpread};
use crate::transfer::{build_transfer_matrix, perron, Perron, TransferMatrix};

pub const TOL_GRAD: f64 = 1e-10;
pub const TOL_END: f64 = 1e-9;

/// `Pr(f) = log lambda_f`.
pub fn pressure(f: &Potential) -> Result<f64> {
    let t = build_transfer_matrix(f, 1);
    Ok(perron(&t)?.log_lambda(&t))
}

/// Measure-theoretic entropy of the equilibrium state,
/// `h(mu_f) = Pr(f) - ∫ f dmu_f`.
pub fn entropy(f: &Potential) -> Result<f64> {
    let mu = equilibrium_measure(f, 1)?;
    Ok(pressure(f)? - integrate(&mu, f)?)
}

/// The one-parameter family `phi + q psi` on a common state space, so that
/// each `q` only rescales stored exponents.
#[derive(Clone, Debug)]
pub struct TiltedFamily {
    phi: Potential,
    psi: Potential,
    states: WordSpace,
    /// `rows[u] = [(v, phi(a u), psi(a u))]`.
    rows: Vec<Vec<(usize, f64, f64)>>,
    base_pressure: f64,
}

/// Pressure and its derivative at one tilt.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TiltedPoint {
    pub q: f64,
    /// `Pr(phi + q psi)`.
    pub pressure: f64,
    /// `∫ psi dmu_{phi + q psi}`.
    pub derivative: f64,
}

impl TiltedFamily {
    pub fn new(phi: &Potential, psi: &Potential) -> Result<Self> {
        Self::with_resolution(phi, psi, 1)
    }

    /// The family on `k`-word states, `k >= k_min` and large enough for
    /// both potentials.
    pub fn with_resolution(phi: &Potential, psi: &Potential, k_min: usize) -> Result<Self> {
        if !phi.compatible(psi) {
            return Err(Error::ModelMismatch);
        }
        let k = phi.range().max(psi.range()).saturating_sub(1).max(k_min).max(1);
        let zero = Potential::constant(phi.shift(), phi.theta(), 0.0)?;
        let template = build_transfer_matrix(&zero, k);
        let states = template.states().clone();
        let mut buf = vec![0usize; k + 1];
        let rows = states
            .words()
            .iter()
            .enumerate()
            .map(|(u, word)| {
                buf[1..].copy_from_slice(word.raw());
                template
                    .row(u)
                    .map(|(v, _)| {
                        buf[0] = states.word(v).raw()[0];
                        let a = phi.value_at(&buf).expect("admissible");
                        let b = psi.value_at(&buf).expect("admissible");
                        (v, a, b)
                    })
                    .collect()
            })
            .collect();
        let mut family = Self { phi: phi.clone(), psi: psi.clone(), states, rows, base_pressure: 0.0 };
        let (t, p) = family.solve(0.0)?;
        family.base_pressure = p.log_lambda(&t);
        Ok(family)
    }

    pub fn phi(&self) -> &Potential {
        &self.phi
    }

    pub fn psi(&self) -> &Potential {
        &self.psi
    }

    /// `Pr(phi)`.
    pub fn base_pressure(&self) -> f64 {
        self.base_pressure
    }

    pub fn states(&self) -> &WordSpace {
        &self.states
    }

    pub(crate) fn matrix(&self, q: f64) -> TransferMatrix {
        let scale = self.rows.iter().flatten().map(|&(_, a, b)| a + q * b).fold(f64::NEG_INFINITY, f64::max);
        let rows =
            self.rows.iter().map(|row| row.iter().map(|&(v, a, b)| (v, (a + q * b - scale).exp())).collect()).collect();
        TransferMatrix::from_rows(self.phi.shift().clone(), self.phi.theta(), self.states.clone(), rows, scale)
    }

    pub(crate) fn solve(&self, q: f64) -> Result<(TransferMatrix, Perron)> {
        let t = self.matrix(q);
        let p = perron(&t)?;
        Ok((t, p))
    }

    pub fn point(&self, q: f64) -> Result<TiltedPoint> {
        let (t, p) = self.solve(q)?;
        let mut derivative = 0.0;
        for (u, (row, tilted)) in self.rows.iter().zip(t.scaled_rows()).enumerate() {
            for (&(_, _, b), &(v, w)) in row.iter().zip(tilted) {
                derivative += p.nu[u] * w * p.h[v] * b;
            }
        }
        derivative /= p.lambda_scaled;
        Ok(TiltedPoint { q, pressure: p.log_lambda(&t), derivative })
    }

    /// `∫ psi dmu_{phi + q psi}`.
    pub fn derivative(&self, q: f64) -> Result<f64> {
        Ok(self.point(q)?.derivative)
    }

    /// `Pr(phi + q psi) - Pr(phi)`, evaluated by Gauss–Legendre quadrature
    /// of the derivative for small `|q psi|` (where the direct difference
    /// of two logarithms would be rounding noise) and directly otherwise.
    pub fn pressure_increment(&self, q: f64) -> Result<f64> {
        if q == 0.0 {
            return Ok(0.0);
        }
        if q.abs() * self.psi.sup_norm() <= 1e-2 {
            let half = q / 2.0;
            let mut acc = 0.0;
            for (x, w) in GAUSS_LEGENDRE_8 {
                acc += w * self.derivative(half * (1.0 + x))?;
            }
            Ok(half * acc)
        } else {
            Ok(self.point(q)?.pressure - self.base_pressure)
        }
    }
}

const GAUSS_LEGENDRE_8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

#[derive(Clone, Debug)]
pub struct PressureCurve {
    pub q_grid: Vec<f64>,
    pub pressures: Vec<f64>,
    pub derivatives: Vec<f64>,
}

impl PressureCurve {
    /// Second differences (uneven grids allowed) are `>= -1e-9`.
    pub fn is_convex(&self) -> bool {
        self.second_differences().iter().all(|&d| d >= -1e-9)
    }

    pub fn derivatives_nondecreasing(&self) -> bool {
        self.derivatives.windows(2).all(|w| w[1] >= w[0] - 1e-12)
    }

    /// Divided second differences of the pressure.
    pub fn second_differences(&self) -> Vec<f64> {
        let (q, p) = (&self.q_grid, &self.pressures);
        (1..q.len().saturating_sub(1))
            .map(|i| {
                let left = (p[i] - p[i - 1]) / (q[i] - q[i - 1]);
                let right = (p[i + 1] - p[i]) / (q[i + 1] - q[i]);
                2.0 * (right - left) / (q[i + 1] - q[i - 1])
            })
            .collect()
    }
}

/// Pressures `Pr(phi + q psi)` and derivatives along a sorted grid.
pub fn pressure_curve(phi: &Potential, psi: &Potential, q_grid: &[f64]) -> Result<PressureCurve> {
    TiltedFamily::new(phi, psi)?.curve(q_grid)
}

impl TiltedFamily {
    pub fn curve(&self, q_grid: &[f64]) -> Result<PressureCurve> {
        if q_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("q grid must be strictly increasing".into()));
        }
        let points = q_grid.par_iter().map(|&q| self.point(q)).collect::<Result<Vec<_>>>()?;
        Ok(PressureCurve {
            q_grid: q_grid.to_vec(),
            pressures: points.iter().map(|p| p.pressure).collect(),
            derivatives: points.iter().map(|p| p.derivative).collect(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateStatus {
    /// Finite maximizer found.
    Interior,
    /// At (or numerically indistinguishable from) an endpoint of the
    /// interval of cycle means; `value` is a lower bound.
    Boundary,
    /// Outside the interval of cycle means: `I = +inf`.
    Outside,
    /// `p` is the mean `∫ psi dmu`: `I = 0`.
    MeanZero,
}

impl RateStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RateStatus::Interior => "interior",
            RateStatus::Boundary => "boundary",
            RateStatus::Outside => "outside",
            RateStatus::MeanZero => "mean_zero",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateValue {
    pub p: f64,
    /// `I(p)`; `f64::INFINITY` exactly when `status` is `Outside`.
    pub value: f64,
    pub q_star: Option<f64>,
    pub status: RateStatus,
    pub iterations: usize,
}

impl RateValue {
    pub fn is_infinite(&self) -> bool {
        self.status == RateStatus::Outside
    }
}

/// Everything needed to evaluate `I_psi` for a fixed pair `(phi, psi)`.
#[derive(Clone, Debug)]
pub struct RateProblem {
    family: TiltedFamily,
    spread: CohomologySpread,
    mean: f64,
}

impl RateProblem {
    /// Fails with [`Error::CohomologousConstant`] when `psi` has no
    /// nontrivial deviations.
    pub fn new(phi: &Potential, psi: &Potential) -> Result<Self> {
        let spread = cohomology_spread(psi);
        if spread.is_cohomologous_to_constant() {
            return Err(Error::CohomologousConstant { spread: spread.width() });
        }
        let family = TiltedFamily::new(phi, psi)?;
        let mean = family.derivative(0.0)?;
        Ok(Self { family, spread, mean })
    }

    pub fn family(&self) -> &TiltedFamily {
        &self.family
    }

    pub fn spread(&self) -> &CohomologySpread {
        &self.spread
    }

    /// `∫ psi dmu_phi`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `(Γ(q), Γ'(q))`.
    pub fn gamma(&self, p: f64, q: f64) -> Result<(f64, f64)> {
        if q == 0.0 {
            return Ok((0.0, p - self.mean));
        }
        let value = p * q - self.family.pressure_increment(q)?;
        let slope = p - self.family.derivative(q)?;
        Ok((value, slope))
    }

    fn slope(&self, p: f64, q: f64) -> Result<f64> {
        if q == 0.0 {
            return Ok(p - self.mean);
        }
        Ok(p - self.family.derivative(q)?)
    }

    pub fn rate(&self, p: f64) -> Result<RateValue> {
        let (lo_end, hi_end) = (self.spread.min_mean, self.spread.max_mean);
        if p < lo_end - TOL_END || p > hi_end + TOL_END {
            return Ok(RateValue { p, value: f64::INFINITY, q_star: None, status: RateStatus::Outside, iterations: 0 });
        }
        let d0 = p - self.mean;
        if d0.abs() <= TOL_GRAD {
            return Ok(RateValue { p, value: 0.0, q_star: Some(0.0), status: RateStatus::MeanZero, iterations: 0 });
        }
        let at_end = (p - lo_end).abs() <= TOL_END || (p - hi_end).abs() <= TOL_END;
        let sign = d0.signum();
        let q_cap = 700.0 / self.family.psi.sup_norm().max(1e-12);

        // Expand until Γ' changes sign.
        let mut iterations = 0;
        let (mut a, mut b) = (0.0, sign);
        let mut slope_b;
        loop {
            iterations += 1;
            slope_b = self.slope(p, b)?;
            if slope_b.abs() <= TOL_GRAD {
                let value = self.gamma(p, b)?.0;
                let status = if at_end { RateStatus::Boundary } else { RateStatus::Interior };
                return Ok(RateValue { p, value, q_star: Some(b), status, iterations });
            }
            if slope_b.signum() != sign && !at_end {
                break;
            }
            if b.abs() >= q_cap || at_end && b.abs() >= 64.0 {
                let value = self.gamma(p, b)?.0.max(0.0);
                return Ok(RateValue { p, value, q_star: None, status: RateStatus::Boundary, iterations });
            }
            a = b;
            b = (2.0 * b).clamp(-q_cap, q_cap);
        }

        // Γ'(a) has sign `sign`, Γ'(b) the opposite. Bisect, then Newton.
        let mut q = 0.5 * (a + b);
        for _ in 0..400 {
            iterations += 1;
            let s = self.slope(p, q)?;
            if s.abs() <= TOL_GRAD {
                break;
            }
            if s.signum() == sign {
                a = q;
            } else {
                b = q;
            }
            let width = (b - a).abs();
            let mut next = 0.5 * (a + b);
            if width < 1e-3 {
                let h = 1e-5 * q.abs().max(1.0);
                let curvature = (self.slope(p, q + h)? - self.slope(p, q - h)?) / (2.0 * h);
                iterations += 2;
                if curvature < 0.0 {
                    let newton = q - s / curvature;
                    if newton > a.min(b) && newton < a.max(b) {
                        next = newton;
                    }
                }
            }
            if next == q || width <= f64::EPSILON * q.abs().max(1.0) {
                break;
            }
            q = next;
        }
        let value = self.gamma(p, q)?.0.max(0.0);
        Ok(RateValue { p, value, q_star: Some(q), status: RateStatus::Interior, iterations })
    }
}

/// `(Γ(q), Γ'(q))` for `Γ(q) = p q - Pr(phi + q psi) + Pr(phi)`.
pub fn gamma(phi: &Potential, psi: &Potential, p: f64, q: f64) -> Result<(f64, f64)> {
    let family = TiltedFamily::new(phi, psi)?;
    let mean = family.derivative(0.0)?;
    if q == 0.0 {
        return Ok((0.0, p - mean));
    }
    Ok((p * q - family.pressure_increment(q)?, p - family.derivative(q)?))
}

/// `I_psi(p) = sup_q Γ(q)`.
pub fn rate_function(phi: &Potential, psi: &Potential, p: f64) -> Result<RateValue> {
    RateProblem::new(phi, psi)?.rate(p)
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

    fn kl(p: f64) -> f64 {
        2f64.ln() + p * p.ln() + (1.0 - p) * (1.0 - p).ln()
    }

    #[test]
    fn pressure_examples() {
        let full = TransitionMatrix::full(2);
        let g = TransitionMatrix::golden_mean();
        let gold = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((pressure(&Potential::constant(&full, 0.5, 0.0).unwrap()).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((pressure(&Potential::constant(&g, 0.5, 0.0).unwrap()).unwrap() - gold.ln()).abs() < 1e-14);
        let (_, psi) = bernoulli();
        for q in [-3.0, 0.5, 2.0] {
            let pr = pressure(&psi.scale(q).unwrap()).unwrap();
            assert!((pr - (1.0 + q.exp()).ln()).abs() < 1e-13);
        }
        let shifted = Potential::constant(&g, 0.5, 1.75).unwrap();
        assert!((pressure(&shifted).unwrap() - gold.ln() - 1.75).abs() < 1e-13);
    }

    #[test]
    fn curve_examples() {
        let (phi, psi) = bernoulli();
        let curve = pressure_curve(&phi, &psi, &[0.0, 1.0]).unwrap();
        assert!(curve.pressures[0].abs() < 1e-15);
        assert!((curve.derivatives[0] - 0.5).abs() < 1e-15);
        assert!((curve.pressures[1] - 0.6201145069582775).abs() < 1e-12);
        assert!((curve.derivatives[1] - 0.7310585786300049).abs() < 1e-12);
        let fam = TiltedFamily::new(&phi, &psi).unwrap();
        for q in [-2.0, 0.3, 1.7] {
            let h = 1e-5;
            let fd = (fam.point(q + h).unwrap().pressure - fam.point(q - h).unwrap().pressure) / (2.0 * h);
            assert!((fd - fam.derivative(q).unwrap()).abs() < 1e-6);
        }
        assert!(pressure_curve(&phi, &psi, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn gamma_examples() {
        let (phi, psi) = bernoulli();
        assert_eq!(gamma(&phi, &psi, 0.3, 0.0).unwrap(), (0.0, 0.3 - 0.5));
        assert_eq!(gamma(&phi, &psi, 0.5, 0.0).unwrap(), (0.0, 0.0));
        let (g, dg) = gamma(&phi, &psi, 0.8, 1.0).unwrap();
        assert!((g - 0.1798854930417225).abs() < 1e-12);
        assert!((dg - 0.06894142136999512).abs() < 1e-12);
    }

    #[test]
    fn tiny_tilts_keep_relative_accuracy() {
        let (phi, psi) = bernoulli();
        let fam = TiltedFamily::new(&phi, &psi).unwrap();
        for q in [1e-20, -3e-9, 1e-4] {
            let inc = fam.pressure_increment(q).unwrap();
            let exact = ((1.0 + q.exp()) / 2.0).ln();
            // exact computed via log1p for tiny q
            let exact_small = (0.5 * q.exp_m1()).ln_1p();
            let reference = if q.abs() < 1e-3 { exact_small } else { exact };
            assert!((inc - reference).abs() <= 1e-12 * reference.abs(), "q = {q}: {inc} vs {reference}");
        }
    }

    #[test]
    fn rate_examples() {
        let (phi, psi) = bernoulli();
        let problem = RateProblem::new(&phi, &psi).unwrap();
        let half = problem.rate(0.5).unwrap();
        assert_eq!((half.value, half.q_star, half.status), (0.0, Some(0.0), RateStatus::MeanZero));
        let r = problem.rate(0.8).unwrap();
        assert_eq!(r.status, RateStatus::Interior);
        assert!((r.value - 0.19274475702175753).abs() < 1e-10);
        assert!((r.q_star.unwrap() - 4f64.ln()).abs() < 1e-8);
        let out = problem.rate(1.2).unwrap();
        assert_eq!(out.status, RateStatus::Outside);
        assert!(out.value.is_infinite());
        let edge = problem.rate(1.0).unwrap();
        assert_eq!(edge.status, RateStatus::Boundary);
        assert!(edge.value <= 2f64.ln() + 1e-9 && edge.value > 0.69);
        for p in [0.05, 0.2, 0.37, 0.63, 0.95] {
            assert!((problem.rate(p).unwrap().value - kl(p)).abs() < 1e-9);
        }
    }

    #[test]
    fn cohomologous_observable_is_rejected() {
        let (phi, _) = bernoulli();
        let c = Potential::constant(phi.shift(), 0.5, 0.4).unwrap();
        assert!(matches!(RateProblem::new(&phi, &c), Err(Error::CohomologousConstant { .. })));
    }

    #[test]
    fn entropy_examples() {
        let full = TransitionMatrix::full(2);
        let g = TransitionMatrix::golden_mean();
        let gold = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((entropy(&Potential::constant(&full, 0.5, 0.0).unwrap()).unwrap() - 2f64.ln()).abs() < 1e-14);
        assert!((entropy(&Potential::constant(&g, 0.5, 0.0).unwrap()).unwrap() - gold.ln()).abs() < 1e-13);
        // Tilted Bernoulli q = 1: entropy of the (e/(1+e), 1/(1+e)) coin.
        let (_, psi) = bernoulli();
        let f = psi.map(|v| v - (1.0 + 1f64.exp()).ln()).unwrap();
        let p1 = 1f64.exp() / (1.0 + 1f64.exp());
        let coin = -(p1 * p1.ln() + (1.0 - p1) * (1.0 - p1).ln());
        assert!((entropy(&f).unwrap() - coin).abs() < 1e-13);
        assert!((coin - 0.5822).abs() < 1e-4);
    }
}
