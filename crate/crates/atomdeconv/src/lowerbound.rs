//! Two-alternative minimax lower-bound laboratory.
//!
//! Constructs pairs of models `(p_1, f_1)` and `(p_2, f_2)` whose atom
//! masses are separated by `~ delta^{alpha+1/2}` while the observation
//! densities `q_1, q_2` stay statistically close: the difference of their
//! characteristic functions vanishes identically on `|t| <= 1/delta`, so
//! the chi-square divergence shrinks superfast as `delta -> 0`. Along a
//! schedule `delta = delta_n` this certifies that `n * chi^2 -> 0`, which
//! caps the rate any estimator of the atom mass can achieve.
//!
//! Construction: the continuous part `f_i` is a zero-truncated
//! compound-Poisson sum of Cauchy draws (intensity `lambda_i`,
//! ingredient characteristic function `phi_{g_i}`), which gives the
//! mixture characteristic function the closed Poisson form
//! `p_i + (1 - p_i) phi_{f_i}(t) = e^{lambda_i (phi_{g_i}(t) - 1)}`
//! with `p_i = e^{-lambda_i}`. The second ingredient perturbs the first,
//! `phi_{g_2} = phi_{g_1} + tau`, where `tau` is sized so that
//! `lambda_2 (phi_{g_2} - 1) = lambda_1 (phi_{g_1} - 1)` wherever the
//! flat-top window equals 1.

use crate::error::{Error, Result};
use crate::numerics::{integrate_symmetric, invert_cf_on_grid, trapezoid_mass, QuadratureSpec};
use num_complex::Complex64;
use serde::Serialize;

/// Half-width of the spatial window used for the tail minorant constant.
const MINORANT_A: f64 = 5.0;
/// Modulus a noise CF must decay below at the frequency cutoff.
const CF_TAIL_TOL: f64 = 1e-7;
/// Hard cap on the adaptive frequency cutoff.
const MAX_FREQ_CUTOFF: f64 = 32768.0;
/// Step of central finite differences for the CF derivative in the tail
/// bound.
const FD_STEP: f64 = 1e-4;

/// A pair of alternatives indexed by `(lambda, delta, alpha)`:
/// `lambda_1 = lambda + delta^{alpha+1/2}`, `lambda_2 = lambda`, with atom
/// masses `p_i = e^{-lambda_i}`. `delta = 0` is admitted as the degenerate
/// equal-model fixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlternativePair {
    lambda: f64,
    delta: f64,
    alpha: f64,
}

impl AlternativePair {
    pub fn new(lambda: f64, delta: f64, alpha: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Invalid(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::Invalid(format!(
                "delta must lie in [0, 1), got {delta}"
            )));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Invalid(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        Ok(Self { lambda, delta, alpha })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The separation increment `delta^{alpha + 1/2}` (0 when `delta = 0`).
    pub fn increment(&self) -> f64 {
        if self.delta == 0.0 { 0.0 } else { self.delta.powf(self.alpha + 0.5) }
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda + self.increment()
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda
    }

    pub fn p1(&self) -> f64 {
        (-self.lambda1()).exp()
    }

    pub fn p2(&self) -> f64 {
        (-self.lambda2()).exp()
    }
}

/// Characteristic function of the first ingredient: standard Cauchy,
/// `e^{-|t|}`.
pub fn phi_g1(t: f64) -> f64 {
    (-t.abs()).exp()
}

/// Characteristic function of the first continuous part: zero-truncated
/// compound Poisson of Cauchy draws at intensity `lambda_1`.
pub fn phi_f1(t: f64, pair: &AlternativePair) -> f64 {
    let l1 = pair.lambda1();
    (l1 * phi_g1(t)).exp_m1() / l1.exp_m1()
}

/// A smooth flat-top window: exactly 1 on `[-1, 1]`, exactly 0 outside
/// `[-2, 2]`, with a C-infinity partition-of-unity transition
/// `h(s) = q(1-s) / (q(s) + q(1-s))`, `q(s) = e^{-1/s}`, `s = |t| - 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlatTop;

impl FlatTop {
    /// End of the identically-1 plateau.
    pub fn inner(&self) -> f64 {
        1.0
    }

    /// End of the support.
    pub fn outer(&self) -> f64 {
        2.0
    }

    pub fn eval(&self, t: f64) -> f64 {
        let a = t.abs();
        if a <= 1.0 {
            1.0
        } else if a >= 2.0 {
            0.0
        } else {
            let s = a - 1.0;
            let q = |s: f64| (-1.0 / s).exp();
            q(1.0 - s) / (q(s) + q(1.0 - s))
        }
    }
}

/// The concrete flat-top window used throughout the laboratory.
pub fn flat_top_h() -> FlatTop {
    FlatTop
}

/// The perturbation carried by the second ingredient:
/// `tau(t) = (delta^{alpha+1/2} / lambda_2) (phi_g1(t) - 1) phi_H(delta t)`.
///
/// Sized so the two compound exponents coincide wherever the window is 1:
/// `lambda_2 tau = (lambda_1 - lambda_2)(phi_g1 - 1)` there, hence the
/// difference of the observation CFs vanishes identically on
/// `|t| <= 1/delta`.
pub fn tau(t: f64, pair: &AlternativePair, h: &FlatTop) -> f64 {
    (pair.increment() / pair.lambda2()) * (phi_g1(t) - 1.0) * h.eval(pair.delta() * t)
}

/// Characteristic function of the second ingredient,
/// `phi_g2 = phi_g1 + tau`.
pub fn phi_g2(t: f64, pair: &AlternativePair, h: &FlatTop) -> f64 {
    phi_g1(t) + tau(t, pair, h)
}

/// Which alternative's observation density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    Q1,
    Q2,
}

/// Characteristic function of the observation density under one
/// alternative: the atom/continuous mixture times the noise CF, in its
/// closed Poisson form `e^{lambda_i (phi_{g_i}(t) - 1)} * noise_cf(t)`.
pub fn phi_q<F>(
    t: f64,
    which: Alternative,
    pair: &AlternativePair,
    h: &FlatTop,
    noise_cf: &F,
) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let exponent = match which {
        Alternative::Q1 => pair.lambda1() * (phi_g1(t) - 1.0),
        Alternative::Q2 => pair.lambda2() * (phi_g2(t, pair, h) - 1.0),
    };
    noise_cf(t) * exponent.exp()
}

/// The difference `phi_q2(t) - phi_q1(t)` in factored form,
/// `noise_cf(t) e^{lambda_1 (phi_g1 - 1)} (e^{Delta} - 1)` with
/// `Delta = delta^{alpha+1/2} (phi_g1(t) - 1)(phi_H(delta t) - 1)`.
/// On `|t| <= 1/delta` the window is exactly 1, so `Delta = 0` and the
/// difference is exactly zero with no cancellation error.
pub fn phi_q_diff<F>(t: f64, pair: &AlternativePair, h: &FlatTop, noise_cf: &F) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let base = (pair.lambda1() * (phi_g1(t) - 1.0)).exp();
    let delta_exp = pair.increment() * (phi_g1(t) - 1.0) * (h.eval(pair.delta() * t) - 1.0);
    noise_cf(t) * base * delta_exp.exp_m1()
}

/// The separation of the two atom masses,
/// `|p_2 - p_1| = e^{-lambda} (1 - e^{-delta^{alpha+1/2}})`.
pub fn separation(pair: &AlternativePair) -> f64 {
    (-pair.lambda()).exp() * (-(-pair.increment()).exp_m1())
}

/// How `delta` shrinks with the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DeltaMode {
    /// `delta = c (ln n)^{-1/2}` (supersmooth noise; requires `0 < c < 1`).
    SupersmoothLog,
    /// `delta = c n^{-1/(2 alpha + 2 beta)}` (ordinary-smooth noise of
    /// degree `beta > 1/2`).
    OrdinaryPoly,
}

/// The scheduled `delta` for sample size `n`.
pub fn delta_schedule(n: usize, mode: DeltaMode, c: f64, alpha: f64, beta: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Invalid(format!("sample size must be at least 2, got {n}")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Invalid(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    match mode {
        DeltaMode::SupersmoothLog => {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::Invalid(format!(
                    "log-mode constant must satisfy 0 < c < 1, got {c}"
                )));
            }
            Ok(c / (n as f64).ln().sqrt())
        }
        DeltaMode::OrdinaryPoly => {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::Invalid(format!(
                    "poly-mode constant must be positive, got {c}"
                )));
            }
            if !(beta > 0.5) || !beta.is_finite() {
                return Err(Error::Invalid(format!(
                    "poly mode requires beta > 1/2, got {beta}"
                )));
            }
            Ok(c * (n as f64).powf(-1.0 / (2.0 * alpha + 2.0 * beta)))
        }
    }
}

/// A chi-square divergence evaluation: the trapezoid integral of
/// `(q_2 - q_1)^2 / q_1` over `[-cutoff, cutoff]`, plus an analytic bound
/// on the untruncated tail built from the Cauchy minorant
/// `q_1(x) >= c_lambda g_1(|x| + A)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSq {
    pub chi_sq: f64,
    pub tail_bound: f64,
}

impl ChiSq {
    pub fn total(&self) -> f64 {
        self.chi_sq + self.tail_bound
    }
}

/// Pick a frequency cutoff at which the observation CF has decayed below
/// tolerance: start past the perturbation's support and double until the
/// noise CF modulus is small (the mixture factor has modulus <= 1).
fn frequency_cutoff<F>(pair: &AlternativePair, noise_cf: &F) -> Result<f64>
where
    F: Fn(f64) -> Complex64,
{
    let support = if pair.delta() > 0.0 { 2.0 / pair.delta() } else { 0.0 };
    let mut t = (support + 16.0).max(64.0);
    while t <= MAX_FREQ_CUTOFF {
        if noise_cf(t).norm().max(noise_cf(-t).norm()) <= CF_TAIL_TOL {
            return Ok(t);
        }
        t *= 2.0;
    }
    Err(Error::Invalid(format!(
        "noise characteristic function does not decay below {CF_TAIL_TOL:.0e} \
         by t = {MAX_FREQ_CUTOFF}; divergence inversion would be unreliable"
    )))
}

/// Chi-square divergence between the two observation densities.
///
/// Both CFs are inverted onto the symmetric grid of spacing `grid_step`
/// covering `[-cutoff, cutoff]`; the divergence integrand uses the exact
/// factored difference CF, which vanishes identically on
/// `|t| <= 1/delta`. The reported tail bound covers `|x| > cutoff` via
/// `S_tail <= (pi / c_lambda) (1/C^2 + (1 + A/C)^2) * (1/2pi) Int |phi_d'|^2`,
/// with `c_lambda = kappa_A lambda_1 e^{-lambda_1}` and `kappa_A` the
/// noise mass on `[-A, A]`.
pub fn chi_sq_divergence<F>(
    pair: &AlternativePair,
    h: &FlatTop,
    noise_cf: &F,
    cutoff: f64,
    grid_step: f64,
) -> Result<ChiSq>
where
    F: Fn(f64) -> Complex64,
{
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::Invalid(format!(
            "spatial cutoff must be positive and finite, got {cutoff}"
        )));
    }
    if !(grid_step > 0.0) || !(grid_step <= cutoff) {
        return Err(Error::Invalid(format!(
            "grid step must satisfy 0 < step <= cutoff, got {grid_step}"
        )));
    }

    let half_points = (cutoff / grid_step).floor() as i64;
    let xs: Vec<f64> = (-half_points..=half_points)
        .map(|k| k as f64 * grid_step)
        .collect();
    let covered = half_points as f64 * grid_step;

    let t_max = frequency_cutoff(pair, noise_cf)?;
    let spec = QuadratureSpec::new(4096, 1e-7)?;

    let q1 = invert_cf_on_grid(
        |t| phi_q(t, Alternative::Q1, pair, h, noise_cf),
        &xs,
        t_max,
        &spec,
    )?;
    let d = invert_cf_on_grid(|t| phi_q_diff(t, pair, h, noise_cf), &xs, t_max, &spec)?;

    let mut integrand = Vec::with_capacity(xs.len());
    for ((&x, &q), &dv) in xs.iter().zip(&q1).zip(&d) {
        if q <= 0.0 {
            return Err(Error::DensityNonPositive { x, value: q });
        }
        integrand.push(dv * dv / q);
    }
    let chi_sq = trapezoid_mass(&xs, &integrand)?;

    // Tail bound over |x| > covered.
    let kappa_grid: Vec<f64> = (-500..=500).map(|k| k as f64 * (MINORANT_A / 500.0)).collect();
    let noise_density = invert_cf_on_grid(noise_cf, &kappa_grid, t_max, &spec)?;
    let kappa_a = trapezoid_mass(&kappa_grid, &noise_density)?.min(1.0);
    if !(kappa_a > 0.0) {
        return Err(Error::DensityNonPositive { x: 0.0, value: kappa_a });
    }
    let c_lambda = kappa_a * pair.lambda1() * (-pair.lambda1()).exp();

    // (1/2pi) Int |phi_d'(t)|^2 dt by central differences; the integrand
    // varies on unit scale, so the default node count resolves it.
    let deriv_nodes = QuadratureSpec::new(((4.0 * t_max) as usize).max(4096), 1e-7)?;
    let m2 = integrate_symmetric(
        |t| {
            let d1 = phi_q_diff(t + FD_STEP, pair, h, noise_cf);
            let d0 = phi_q_diff(t - FD_STEP, pair, h, noise_cf);
            let deriv = (d1 - d0) / (2.0 * FD_STEP);
            Complex64::new(deriv.norm_sqr(), 0.0)
        },
        t_max,
        &deriv_nodes,
    )?
    .re
        / (2.0 * std::f64::consts::PI);

    let c = covered;
    let a = MINORANT_A;
    let tail_bound =
        (std::f64::consts::PI / c_lambda) * (1.0 / (c * c) + (1.0 + a / c).powi(2)) * m2;

    Ok(ChiSq { chi_sq, tail_bound: tail_bound.max(0.0) })
}

/// One row of the divergence-scaling table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceRow {
    pub delta: f64,
    pub n: usize,
    pub chi_sq: f64,
    pub n_times_chi_sq: f64,
    pub separation: f64,
    pub tail_bound: f64,
}

/// Evaluate the divergence and separation along a `delta` schedule.
#[allow(clippy::too_many_arguments)]
pub fn divergence_table<F>(
    lambda: f64,
    alpha: f64,
    ns: &[usize],
    mode: DeltaMode,
    c: f64,
    beta: f64,
    noise_cf: &F,
    cutoff: f64,
    grid_step: f64,
) -> Result<Vec<DivergenceRow>>
where
    F: Fn(f64) -> Complex64,
{
    if ns.is_empty() {
        return Err(Error::Invalid("at least one sample size is required".into()));
    }
    let h = flat_top_h();
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let delta = delta_schedule(n, mode, c, alpha, beta)?;
        let pair = AlternativePair::new(lambda, delta, alpha)?;
        let div = chi_sq_divergence(&pair, &h, noise_cf, cutoff, grid_step)?;
        rows.push(DivergenceRow {
            delta,
            n,
            chi_sq: div.chi_sq,
            n_times_chi_sq: n as f64 * div.chi_sq,
            separation: separation(&pair),
            tail_bound: div.tail_bound,
        });
    }
    Ok(rows)
}

/// CSV with header `delta,n,chi_sq,n_times_chi_sq,separation,tail_bound`.
pub fn divergence_csv(rows: &[DivergenceRow]) -> String {
    let mut out = String::from("delta,n,chi_sq,n_times_chi_sq,separation,tail_bound\n");
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.delta, r.n, r.chi_sq, r.n_times_chi_sq, r.separation, r.tail_bound
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gaussian_cf(t: f64) -> Complex64 {
        Complex64::new((-0.5 * t * t).exp(), 0.0)
    }

    fn pair(lambda: f64, delta: f64, alpha: f64) -> AlternativePair {
        AlternativePair::new(lambda, delta, alpha).unwrap()
    }

    #[test]
    fn pair_validation_and_derived_quantities() {
        assert!(AlternativePair::new(0.0, 0.1, 0.5).is_err());
        assert!(AlternativePair::new(1.0, 1.0, 0.5).is_err());
        assert!(AlternativePair::new(1.0, -0.1, 0.5).is_err());
        assert!(AlternativePair::new(1.0, 0.1, 0.0).is_err());

        let p = pair(1.0, 0.25, 0.5);
        // increment = 0.25^{1.0} = 0.25.
        assert_eq!(p.increment(), 0.25);
        assert_eq!(p.lambda1(), 1.25);
        assert_eq!(p.lambda2(), 1.0);
        assert!(p.p1() > 0.0 && p.p1() < 1.0);
        assert!(p.p2() > 0.0 && p.p2() < 1.0);
        assert!(p.p1() < p.p2());
    }

    #[test]
    fn phi_g1_matches_closed_form() {
        assert_eq!(phi_g1(0.0), 1.0);
        assert!((phi_g1(1.0) - (-1.0f64).exp()).abs() <= 1e-16);
        for t in [-3.0, -0.5, 0.1, 2.7] {
            assert_eq!(phi_g1(t), phi_g1(-t));
        }
    }

    #[test]
    fn phi_f1_is_a_cf_like_profile() {
        let p = pair(1.0, 0.25, 0.5);
        assert_eq!(phi_f1(0.0, &p), 1.0);
        assert!(phi_f1(500.0, &p).abs() <= 1e-12);
        let mut prev = f64::INFINITY;
        for k in 0..=100 {
            let v = phi_f1(k as f64 * 0.1, &p);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn phi_f1_closed_form_example() {
        // lambda_1 = ln 2 and t = ln 2 (so phi_g1 = 1/2):
        // (e^{0.5 ln 2} - 1) / (2 - 1) = sqrt(2) - 1.
        let p = pair(std::f64::consts::LN_2, 0.0, 0.5);
        assert_eq!(p.lambda1(), std::f64::consts::LN_2);
        let got = phi_f1(std::f64::consts::LN_2, &p);
        assert!(
            (got - (std::f64::consts::SQRT_2 - 1.0)).abs() <= 1e-14,
            "phi_f1 = {got}"
        );
    }

    #[test]
    fn flat_top_plateau_support_and_midpoint() {
        let h = flat_top_h();
        assert_eq!(h.inner(), 1.0);
        assert_eq!(h.outer(), 2.0);
        assert_eq!(h.eval(0.0), 1.0);
        assert_eq!(h.eval(0.7), 1.0);
        assert_eq!(h.eval(-1.0), 1.0);
        assert_eq!(h.eval(2.0), 0.0);
        assert_eq!(h.eval(2.5), 0.0);
        assert_eq!(h.eval(-3.0), 0.0);
        // Exact symmetry of the transition at its midpoint.
        assert_eq!(h.eval(1.5), 0.5);
        assert_eq!(h.eval(-1.5), 0.5);
    }

    #[test]
    fn flat_top_transition_is_monotone_and_smooth() {
        let h = flat_top_h();
        let mut prev = 1.0;
        for k in 1..=1000 {
            let t = 1.0 + k as f64 * 1e-3;
            let v = h.eval(t);
            assert!(v <= prev + 1e-15, "not monotone at t = {t}");
            prev = v;
        }
        // Finite-difference second derivative: bounded everywhere on the
        // transition, and continuous (near zero) across both seams.
        let fd2 = |t: f64| {
            let e = 1e-3;
            (h.eval(t + e) - 2.0 * h.eval(t) + h.eval(t - e)) / (e * e)
        };
        for t in [0.990, 0.999, 1.001, 1.010] {
            assert!(fd2(t).abs() <= 1e-2, "seam at 1: fd2({t}) = {}", fd2(t));
        }
        for t in [1.990, 1.999, 2.001, 2.010] {
            assert!(fd2(t).abs() <= 1e-2, "seam at 2: fd2({t}) = {}", fd2(t));
        }
        let max_fd2 = (1..200)
            .map(|k| fd2(1.0 + k as f64 * 0.005).abs())
            .fold(0.0f64, f64::max);
        assert!(max_fd2.is_finite() && max_fd2 <= 100.0, "max |fd2| = {max_fd2}");
    }

    #[test]
    fn tau_vanishes_where_required_and_respects_bound() {
        let p = pair(1.0, 0.25, 0.5);
        let h = flat_top_h();
        assert_eq!(tau(0.0, &p, &h), 0.0);
        // Beyond the window support |t| > 2/delta = 8.
        assert_eq!(tau(8.1, &p, &h), 0.0);
        assert_eq!(tau(-100.0, &p, &h), 0.0);
        let bound = p.increment() / p.lambda2();
        for k in -400..=400 {
            let t = k as f64 * 0.025;
            assert!(tau(t, &p, &h).abs() <= bound + 1e-15);
        }
    }

    #[test]
    fn tau_closed_form_example() {
        // lambda = 1, delta = 0.25, alpha = 0.5: the window is 1 at
        // delta * t = 0.25, so tau(1) = 0.25 * (e^{-1} - 1).
        let p = pair(1.0, 0.25, 0.5);
        let h = flat_top_h();
        let expected = 0.25 * ((-1.0f64).exp() - 1.0);
        assert!((tau(1.0, &p, &h) - expected).abs() <= 1e-16, "tau(1) = {}", tau(1.0, &p, &h));
        assert!((expected - (-0.15803013970713942)).abs() <= 1e-15);
    }

    #[test]
    fn phi_g2_is_one_at_zero_exactly() {
        let h = flat_top_h();
        for delta in [0.0, 0.1, 0.25, 0.5] {
            let p = pair(1.0, delta, 0.5);
            assert_eq!(phi_g2(0.0, &p, &h), 1.0);
        }
    }

    fn min_g2_on_grid(lambda: f64, delta: f64, alpha: f64) -> f64 {
        let h = flat_top_h();
        let p = pair(lambda, delta, alpha);
        let xs: Vec<f64> = (-100..=100).map(|k| k as f64 * 0.5).collect();
        let spec = QuadratureSpec::new(4096, 1e-7).unwrap();
        let t_max = 60.0f64.max(2.0 / delta + 8.0);
        let g2 = invert_cf_on_grid(|t| Complex64::new(phi_g2(t, &p, &h), 0.0), &xs, t_max, &spec)
            .unwrap();
        // Evenness in x comes along for free here.
        for j in 0..xs.len() {
            let k = xs.len() - 1 - j;
            assert!((g2[j] - g2[k]).abs() <= 1e-12);
        }
        g2.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn inverted_g2_is_nonnegative_on_wide_grid() {
        // The second ingredient is a genuine density (nonnegative) once
        // alpha > 1/2: the window term of tau injects a negative spike of
        // size ~ delta^{alpha - 1/2} * 3/(2 pi) at the origin, which is
        // dominated by g1(0) = 1/pi for these parameters.
        for delta in [0.25, 0.2, 0.1, 0.05] {
            let min = min_g2_on_grid(1.0, delta, 1.0);
            assert!(min >= -1e-9, "delta = {delta}: min g2 = {min}");
        }
    }

    #[test]
    fn g2_positivity_fails_at_boundary_exponent() {
        // At alpha = 1/2 exactly the spike is O(1) regardless of delta
        // (delta^{alpha - 1/2} = 1), so the perturbed ingredient dips
        // negative at the origin and positivity cannot hold, not even in
        // the small-delta limit (where g2(0) -> 1/pi - 3/(2 pi) < 0).
        // Cross-checked against an independent quadrature oracle:
        // g2(0) = -0.079821 at delta = 0.25, -0.143239 at delta = 0.05.
        let min = min_g2_on_grid(1.0, 0.25, 0.5);
        assert!((min - (-0.079821)).abs() <= 1e-4, "min g2 = {min}");
        let min = min_g2_on_grid(1.0, 0.05, 0.5);
        assert!((min - (-0.143239)).abs() <= 1e-4, "min g2 = {min}");
    }

    #[test]
    fn phi_q_is_one_at_zero_and_bounded() {
        let p = pair(1.0, 0.25, 0.5);
        let h = flat_top_h();
        let q0 = phi_q(0.0, Alternative::Q1, &p, &h, &gaussian_cf);
        assert_eq!(q0, Complex64::new(1.0, 0.0));
        let q0 = phi_q(0.0, Alternative::Q2, &p, &h, &gaussian_cf);
        assert_eq!(q0, Complex64::new(1.0, 0.0));
        for k in -200..=200 {
            let t = k as f64 * 0.25;
            for which in [Alternative::Q1, Alternative::Q2] {
                let v = phi_q(t, which, &p, &h, &gaussian_cf).norm();
                assert!(v <= 1.0 + 1e-12, "|phi_q({t})| = {v}");
            }
        }
    }

    #[test]
    fn poisson_form_matches_mixture_oracle() {
        // Independent evaluation: p_i + (1 - p_i) phi_{f_i} with the
        // truncated compound formula must reproduce the exponential form.
        let p = pair(1.0, 0.25, 0.5);
        let h = flat_top_h();
        for k in -60..=60 {
            let t = k as f64 * 0.3;
            let q1 = phi_q(t, Alternative::Q1, &p, &h, &gaussian_cf);
            let mix1 = (p.p1() + (1.0 - p.p1()) * phi_f1(t, &p)) * gaussian_cf(t);
            assert!((q1 - mix1).norm() <= 1e-14, "Q1 mismatch at t = {t}");

            let l2 = p.lambda2();
            let f2 = (l2 * phi_g2(t, &p, &h)).exp_m1() / l2.exp_m1();
            let mix2 = (p.p2() + (1.0 - p.p2()) * f2) * gaussian_cf(t);
            let q2 = phi_q(t, Alternative::Q2, &p, &h, &gaussian_cf);
            assert!((q2 - mix2).norm() <= 1e-14, "Q2 mismatch at t = {t}");
        }
    }

    #[test]
    fn cf_difference_vanishes_exactly_on_inner_region() {
        let p = pair(1.0, 0.25, 0.5);
        let h = flat_top_h();
        // |t| <= 1/delta = 4: the factored difference is exactly zero,
        // and the direct difference of the two closed forms agrees with
        // that oracle to 1e-12.
        for k in -40..=40 {
            let t = k as f64 * 0.1;
            assert_eq!(phi_q_diff(t, &p, &h, &gaussian_cf), Complex64::new(0.0, 0.0));
            let direct = phi_q(t, Alternative::Q2, &p, &h, &gaussian_cf)
                - phi_q(t, Alternative::Q1, &p, &h, &gaussian_cf);
            assert!(direct.norm() <= 1e-12, "direct difference {direct} at t = {t}");
        }
        // Outside the plateau the factored and direct forms agree too.
        for t in [4.5, 5.0, 6.0, 7.5, -4.5, -6.25] {
            let fac = phi_q_diff(t, &p, &h, &gaussian_cf);
            let direct = phi_q(t, Alternative::Q2, &p, &h, &gaussian_cf)
                - phi_q(t, Alternative::Q1, &p, &h, &gaussian_cf);
            assert!((fac - direct).norm() <= 1e-14, "mismatch at t = {t}");
            assert!(fac.norm() > 0.0, "difference should be nonzero at t = {t}");
        }
    }

    #[test]
    fn separation_closed_form_and_small_delta_ratio() {
        let p = pair(1.0, 0.0, 0.5);
        assert_eq!(separation(&p), 0.0);

        let p = pair(1.0, 0.25, 0.5);
        assert!((separation(&p) - 0.0813746451077132).abs() <= 1e-9);
        // separation = |p2 - p1| identically.
        assert!((separation(&p) - (p.p2() - p.p1())).abs() <= 1e-16);

        // Ratio to delta^{alpha+1/2} approaches e^{-lambda}.
        let p = pair(1.0, 0.05, 0.5);
        let ratio = separation(&p) / p.increment();
        let limit = (-1.0f64).exp();
        assert!((ratio - limit).abs() / limit <= 0.10, "ratio = {ratio}");
    }

    #[test]
    fn delta_schedule_examples_and_rejections() {
        // n = 55 makes ln n closest to 4: 0.5 * 4^{-1/2} = 0.25.
        let d = delta_schedule(55, DeltaMode::SupersmoothLog, 0.5, 0.5, 2.0).unwrap();
        assert!((d - 0.25).abs() <= 2e-3, "d = {d}");
        // 65536^{-1/16} = 1/2 exactly.
        let d = delta_schedule(65536, DeltaMode::OrdinaryPoly, 1.0, 6.0, 2.0).unwrap();
        assert!((d - 0.5).abs() <= 1e-15, "d = {d}");

        assert!(delta_schedule(1, DeltaMode::SupersmoothLog, 0.5, 0.5, 2.0).is_err());
        assert!(delta_schedule(100, DeltaMode::SupersmoothLog, 1.5, 0.5, 2.0).is_err());
        assert!(delta_schedule(100, DeltaMode::SupersmoothLog, 0.0, 0.5, 2.0).is_err());
        assert!(delta_schedule(100, DeltaMode::OrdinaryPoly, 1.0, 0.5, 0.5).is_err());
        assert!(delta_schedule(100, DeltaMode::OrdinaryPoly, -1.0, 0.5, 2.0).is_err());
        assert!(delta_schedule(100, DeltaMode::OrdinaryPoly, 1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn chi_sq_is_zero_for_degenerate_pair() {
        let p = pair(1.0, 0.0, 0.5);
        let h = flat_top_h();
        let div = chi_sq_divergence(&p, &h, &gaussian_cf, 50.0, 0.5).unwrap();
        assert_eq!(div.chi_sq, 0.0);
        assert!(div.tail_bound.abs() <= 1e-25);
        assert_eq!(div.total(), div.chi_sq + div.tail_bound);
    }

    #[test]
    fn chi_sq_decreases_with_delta_and_scales_log_log() {
        let h = flat_top_h();
        let deltas = [0.4, 0.3, 0.2, 0.1];
        let mut chis = Vec::new();
        for &delta in &deltas {
            let p = pair(1.0, delta, 0.5);
            let div = chi_sq_divergence(&p, &h, &gaussian_cf, 50.0, 0.5).unwrap();
            assert!(div.chi_sq >= 0.0);
            chis.push(div.chi_sq);
        }
        for w in chis.windows(2) {
            assert!(w[1] < w[0], "chi^2 not strictly decreasing: {chis:?}");
        }
        // Positive log-log slope with strong linearity.
        let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
        let ys: Vec<f64> = chis.iter().map(|c| c.ln()).collect();
        let mx = xs.iter().sum::<f64>() / 4.0;
        let my = ys.iter().sum::<f64>() / 4.0;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
        let slope = sxy / sxx;
        let r2 = sxy * sxy / (sxx * syy);
        assert!(slope > 0.0, "slope = {slope}");
        assert!(r2 > 0.9, "r2 = {r2}");
    }

    #[test]
    fn chi_sq_rejects_bad_arguments_and_nonpositive_densities() {
        let p = pair(1.0, 0.25, 0.5);
        let h = flat_top_h();
        assert!(chi_sq_divergence(&p, &h, &gaussian_cf, 0.0, 0.5).is_err());
        assert!(chi_sq_divergence(&p, &h, &gaussian_cf, 50.0, 0.0).is_err());
        assert!(chi_sq_divergence(&p, &h, &gaussian_cf, 1.0, 2.0).is_err());

        // A valid-looking but non-positive-definite "noise CF" produces a
        // signed reference function; the guard reports it.
        let bogus = |t: f64| Complex64::new((2.0 * (5.0 * t).cos() - 1.0) * (-0.5 * t * t).exp(), 0.0);
        assert!(matches!(
            chi_sq_divergence(&p, &h, &bogus, 50.0, 0.5),
            Err(Error::DensityNonPositive { .. })
        ));

        // A noise CF that never decays is refused honestly.
        let stuck = |_t: f64| Complex64::new(1.0, 0.0);
        assert!(matches!(
            chi_sq_divergence(&p, &h, &stuck, 50.0, 0.5),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn divergence_table_follows_log_schedule() {
        let rows = divergence_table(
            1.0,
            0.5,
            &[1_000, 10_000],
            DeltaMode::SupersmoothLog,
            0.5,
            2.0,
            &gaussian_cf,
            50.0,
            0.5,
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].delta > rows[1].delta);
        assert!(rows[0].n_times_chi_sq > rows[1].n_times_chi_sq);
        for r in &rows {
            assert!((r.n_times_chi_sq - r.n as f64 * r.chi_sq).abs() <= 1e-300);
            assert!(r.separation > 0.0);
            assert!(r.tail_bound >= 0.0);
        }
        let csv = divergence_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("delta,n,chi_sq,n_times_chi_sq,separation,tail_bound")
        );
        assert_eq!(csv.lines().count(), 3);
        let first = csv.lines().nth(1).unwrap();
        assert_eq!(first.split(',').count(), 6);
        assert_eq!(first.split(',').nth(1), Some("1000"));
    }

    #[test]
    fn ordinary_poly_mode_runs_with_laplace_like_cf() {
        // Theorem-5 style check: same pair, ordinary-smooth noise CF.
        let laplace_cf = |t: f64| Complex64::new(1.0 / (1.0 + t * t), 0.0);
        let p = pair(1.0, 0.25, 0.5);
        let h = flat_top_h();
        let div = chi_sq_divergence(&p, &h, &laplace_cf, 20.0, 0.5).unwrap();
        assert!(div.chi_sq > 0.0);
        assert!(div.tail_bound.is_finite() && div.tail_bound >= 0.0);
    }

    proptest! {
        #[test]
        fn prop_flat_top_stays_in_unit_interval(t in -5.0f64..5.0) {
            let v = flat_top_h().eval(t);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, flat_top_h().eval(-t));
        }

        #[test]
        fn prop_phi_q_modulus_bounded(
            t in -30.0f64..30.0,
            delta in 0.0f64..0.9,
            lambda in 0.1f64..3.0,
            alpha in 0.1f64..4.0,
        ) {
            let p = AlternativePair::new(lambda, delta, alpha).unwrap();
            let h = flat_top_h();
            for which in [Alternative::Q1, Alternative::Q2] {
                let v = phi_q(t, which, &p, &h, &gaussian_cf).norm();
                prop_assert!(v <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn prop_tau_bounded_and_even(
            t in -20.0f64..20.0,
            delta in 0.01f64..0.9,
        ) {
            let p = AlternativePair::new(1.0, delta, 0.5).unwrap();
            let h = flat_top_h();
            let v = tau(t, &p, &h);
            prop_assert!(v.abs() <= p.increment() / p.lambda2() + 1e-15);
            prop_assert_eq!(v, tau(-t, &p, &h));
        }

        #[test]
        fn prop_phi_f1_in_unit_interval(
            t in -50.0f64..50.0,
            lambda in 0.1f64..4.0,
            delta in 0.0f64..0.9,
        ) {
            let p = AlternativePair::new(lambda, delta, 0.5).unwrap();
            let v = phi_f1(t, &p);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
