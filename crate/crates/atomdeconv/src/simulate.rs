//! Synthetic data generation from the atomic-mixture convolution model,
//! Monte-Carlo risk estimation (MSE for the atom mass, MISE for the
//! density), and empirical rate-exponent fitting.
//!
//! Reproducibility contract: every replicate derives its own generator
//! seed from `(master seed, n, replicate index)` through a fixed mixing
//! function, and each model draw uses three independent sub-streams
//! (atom indicator, latent value, noise). Reports are bit-identical
//! regardless of thread count: replicates are computed into positionally
//! indexed slots and reduced in fixed order.

use crate::error::{Error, Result};
use crate::estimators::{
    clamp_p, estimate_f, estimate_p_raw, positive_part_p, EstimationConfig, Sample,
};
use crate::kernels::FourierKernel;
use crate::noise::{substream_seed, NoiseModel, NOISE_STREAM};
use crate::numerics::{integrate_symmetric, trapezoid_mass, QuadratureSpec};
use crate::tuning::{Preset, Quantity};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::Serialize;

/// Frequency cutoff and resolution used to certify builtin targets.
const CERT_CUTOFF: f64 = 60.0;
const CERT_NODES: usize = 1 << 16;

/// A Sobolev-type smoothness certificate: the computed value of
/// `Integral |cf_f(t)|^2 (1 + |t|^{2 alpha}) dt`, finite for targets in
/// the class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolevCert {
    pub alpha: f64,
    pub k_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TargetKind {
    StdNormal,
    Cauchy,
}

/// A builtin continuous target density with closed-form density and
/// characteristic function, a seeded sampler, and a quadrature-verified
/// smoothness certificate.
#[derive(Debug, Clone)]
pub struct TargetDensity {
    kind: TargetKind,
    cert: SobolevCert,
}

impl TargetDensity {
    /// Standard normal target; in the smoothness class for every `alpha`.
    pub fn std_normal(alpha: f64) -> Result<Self> {
        Self::new(TargetKind::StdNormal, alpha)
    }

    /// Standard Cauchy target: density `1 / (pi (1 + x^2))`,
    /// characteristic function `e^{-|t|}`.
    pub fn cauchy(alpha: f64) -> Result<Self> {
        Self::new(TargetKind::Cauchy, alpha)
    }

    fn new(kind: TargetKind, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Invalid(format!(
                "certificate exponent alpha must be positive and finite, got {alpha}"
            )));
        }
        let cf = |t: f64| match kind {
            TargetKind::StdNormal => (-0.5 * t * t).exp(),
            TargetKind::Cauchy => (-t.abs()).exp(),
        };
        let spec = QuadratureSpec::new(CERT_NODES, 1e-9)?;
        let k_sigma = integrate_symmetric(
            |t| {
                let c = cf(t);
                Complex64::new(c * c * (1.0 + t.abs().powf(2.0 * alpha)), 0.0)
            },
            CERT_CUTOFF,
            &spec,
        )?
        .re;
        Ok(Self { kind, cert: SobolevCert { alpha, k_sigma } })
    }

    /// Parse a builtin target name: `std-normal` or `cauchy`.
    pub fn parse(name: &str, alpha: f64) -> Result<Self> {
        match name.trim() {
            "std-normal" => Self::std_normal(alpha),
            "cauchy" => Self::cauchy(alpha),
            other => Err(Error::Invalid(format!(
                "unknown target {other:?}; expected std-normal or cauchy"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            TargetKind::StdNormal => "std-normal",
            TargetKind::Cauchy => "cauchy",
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self.kind {
            TargetKind::StdNormal => {
                (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
            }
            TargetKind::Cauchy => std::f64::consts::FRAC_1_PI / (1.0 + x * x),
        }
    }

    pub fn cf(&self, t: f64) -> Complex64 {
        let v = match self.kind {
            TargetKind::StdNormal => (-0.5 * t * t).exp(),
            TargetKind::Cauchy => (-t.abs()).exp(),
        };
        Complex64::new(v, 0.0)
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.kind {
            TargetKind::StdNormal => rand_distr::StandardNormal.sample(rng),
            TargetKind::Cauchy => rand_distr::Cauchy::new(0.0, 1.0)
                .expect("valid parameters")
                .sample(rng),
        }
    }

    pub fn certificate(&self) -> SobolevCert {
        self.cert
    }
}

/// The builtin targets, certified at the given smoothness exponent.
pub fn builtin_targets(alpha: f64) -> Result<Vec<TargetDensity>> {
    Ok(vec![TargetDensity::std_normal(alpha)?, TargetDensity::cauchy(alpha)?])
}

/// A complete synthetic model: atom mass, continuous target, noise.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub p: f64,
    pub target: TargetDensity,
    pub noise: NoiseModel,
}

impl ModelSpec {
    pub fn new(p: f64, target: TargetDensity, noise: NoiseModel) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(Error::Invalid(format!(
                "atom mass p must lie in [0, 1], got {p}"
            )));
        }
        Ok(Self { p, target, noise })
    }
}

/// Derive the generator seed for one replicate from the master seed, the
/// sample size, and the replicate index (fixed SplitMix64-based mixing).
pub fn derive_seed(master: u64, n: usize, replicate: usize) -> u64 {
    use crate::noise::splitmix64 as mix;
    mix(mix(mix(master) ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        ^ (replicate as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F))
}

/// Draw `n` observations `X = A V + Z` and the latent atom indicators
/// (`true` when the atom fired, i.e. `A = 0` and the `V` term was
/// dropped). Three independent sub-streams feed the indicator, the latent
/// value, and the noise, so `p = 1` reproduces the pure-noise stream of
/// `sample_noise` exactly.
pub fn sample_model_with_latent(
    spec: &ModelSpec,
    n: usize,
    seed: u64,
) -> Result<(Sample, Vec<bool>)> {
    if n == 0 {
        return Err(Error::Invalid("sample size must be at least 1".into()));
    }
    let mut a_rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, 0));
    let mut v_rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, 1));
    let mut z_rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, NOISE_STREAM));
    let mut xs = Vec::with_capacity(n);
    let mut atoms = Vec::with_capacity(n);
    for _ in 0..n {
        let atom = a_rng.random::<f64>() < spec.p;
        let v = spec.target.draw(&mut v_rng);
        let z = spec.noise.draw(&mut z_rng);
        xs.push(if atom { z } else { v + z });
        atoms.push(atom);
    }
    Ok((Sample::new(xs)?, atoms))
}

/// Draw `n` observations from the model; deterministic given the seed.
pub fn sample_model(spec: &ModelSpec, n: usize, seed: u64) -> Result<Sample> {
    Ok(sample_model_with_latent(spec, n, seed)?.0)
}

/// Which functional of the raw atom estimate enters the risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PVariant {
    Raw,
    Clamped,
    Positive,
}

/// Estimation machinery shared by all Monte-Carlo runs: preset, class
/// smoothness, bandwidth constant, kernels, quadrature resolution.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub preset: Preset,
    pub alpha: f64,
    pub d: f64,
    pub quad_nodes: usize,
    pub u: FourierKernel,
    pub w: FourierKernel,
}

/// One row of a risk report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskRow {
    pub n: usize,
    pub risk_mean: f64,
    pub risk_se: f64,
    pub replicates: usize,
}

/// Monte-Carlo risk estimates across sample sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub quantity: Quantity,
    pub seed: u64,
    pub rows: Vec<RiskRow>,
}

impl RiskReport {
    /// CSV with header `n,risk_mean,risk_se,replicates`; floats carry 17
    /// significant digits so parsing them back is exact.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,risk_mean,risk_se,replicates\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{}\n",
                r.n, r.risk_mean, r.risk_se, r.replicates
            ));
        }
        out
    }
}

/// Raw atom estimates for every replicate at one sample size, plus the
/// truncation level the schedule prescribed there.
#[derive(Debug, Clone, PartialEq)]
pub struct PEstimates {
    pub n: usize,
    pub epsilon: f64,
    pub raw: Vec<f64>,
}

fn check_ns(ns: &[usize]) -> Result<()> {
    if ns.is_empty() {
        return Err(Error::Invalid("at least one sample size is required".into()));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid(
            "sample sizes must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Run the replicate closure for every `(n, replicate)` cell. Replicates
/// run in parallel but land in positionally indexed slots; the first
/// error in index order wins, so outcomes are thread-count independent.
fn replicate_map<T: Send>(
    ns: &[usize],
    replicates: usize,
    seed: u64,
    f: impl Fn(usize, u64) -> Result<T> + Sync,
) -> Result<Vec<(usize, Vec<T>)>> {
    check_ns(ns)?;
    if replicates < 2 {
        return Err(Error::Invalid(format!(
            "at least 2 replicates are required, got {replicates}"
        )));
    }
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        let results: Vec<Result<T>> = (0..replicates)
            .into_par_iter()
            .map(|rep| f(n, derive_seed(seed, n, rep)))
            .collect();
        let mut values = Vec::with_capacity(replicates);
        for (rep, r) in results.into_iter().enumerate() {
            match r {
                Ok(v) => values.push(v),
                Err(e) => {
                    return Err(Error::Replicate { n, replicate: rep, source: Box::new(e) })
                }
            }
        }
        out.push((n, values));
    }
    Ok(out)
}

/// Raw atom estimates for every replicate, across sample sizes. The
/// expensive sampling + estimation runs once; risks for any estimator
/// variant are derived from these values.
pub fn mc_estimates_p(
    spec: &ModelSpec,
    ns: &[usize],
    replicates: usize,
    mc: &McConfig,
    seed: u64,
) -> Result<Vec<PEstimates>> {
    let class = spec.noise.classification();
    let rows = replicate_map(ns, replicates, seed, |n, rep_seed| {
        let schedule = mc.preset.schedule(n, mc.alpha, &class, mc.d)?;
        let sample = sample_model(spec, n, rep_seed)?;
        estimate_p_raw(&sample, schedule.g, &mc.u, &spec.noise, mc.quad_nodes)
    })?;
    rows.into_iter()
        .map(|(n, raw)| {
            let schedule = mc.preset.schedule(n, mc.alpha, &class, mc.d)?;
            Ok(PEstimates { n, epsilon: schedule.epsilon, raw })
        })
        .collect()
}

/// Apply an estimator variant to one raw estimate.
pub fn apply_variant(raw: f64, variant: PVariant, epsilon: f64) -> f64 {
    match variant {
        PVariant::Raw => raw,
        PVariant::Clamped => clamp_p(raw, epsilon),
        PVariant::Positive => positive_part_p(raw),
    }
}

/// Assemble a risk report from precomputed raw estimates.
pub fn risk_report_from_estimates(
    estimates: &[PEstimates],
    p: f64,
    variant: PVariant,
    seed: u64,
) -> RiskReport {
    let rows = estimates
        .iter()
        .map(|e| {
            let sq: Vec<f64> = e
                .raw
                .iter()
                .map(|&raw| {
                    let v = apply_variant(raw, variant, e.epsilon);
                    (v - p) * (v - p)
                })
                .collect();
            let (mean, se) = mean_and_se(&sq);
            RiskRow { n: e.n, risk_mean: mean, risk_se: se, replicates: e.raw.len() }
        })
        .collect();
    RiskReport { quantity: Quantity::AtomP, seed, rows }
}

/// Monte-Carlo mean squared error of the atom estimate across sample
/// sizes, for the chosen estimator variant.
pub fn mc_risk_p(
    spec: &ModelSpec,
    ns: &[usize],
    replicates: usize,
    mc: &McConfig,
    variant: PVariant,
    seed: u64,
) -> Result<RiskReport> {
    let estimates = mc_estimates_p(spec, ns, replicates, mc, seed)?;
    Ok(risk_report_from_estimates(&estimates, spec.p, variant, seed))
}

/// The default MISE grid: `[-10, 10]` with step `0.02` (1001 points),
/// carrying at least 0.999 of the mass of every builtin target.
pub fn default_mise_grid() -> Vec<f64> {
    (-500..=500).map(|k| k as f64 * 0.02).collect()
}

/// Monte-Carlo mean integrated squared error of the density estimate
/// across sample sizes. The grid must carry at least 0.999 of the
/// target's mass; splitting follows the preset's schedule.
pub fn mc_risk_f(
    spec: &ModelSpec,
    ns: &[usize],
    replicates: usize,
    mc: &McConfig,
    grid: &[f64],
    seed: u64,
) -> Result<RiskReport> {
    let target_vals: Vec<f64> = grid.iter().map(|&x| spec.target.density(x)).collect();
    let mass = trapezoid_mass(grid, &target_vals)?;
    if mass < 0.999 {
        return Err(Error::GridTooNarrow { mass });
    }

    let class = spec.noise.classification();
    let rows = replicate_map(ns, replicates, seed, |n, rep_seed| {
        let schedule = mc.preset.schedule(n, mc.alpha, &class, mc.d)?;
        let sample = sample_model(spec, n, rep_seed)?;
        let config = EstimationConfig {
            g: schedule.g,
            h: schedule.h,
            epsilon: schedule.epsilon,
            split: schedule.split,
            quad_nodes: mc.quad_nodes,
        };
        let est = estimate_f(&sample, &config, &mc.w, &mc.u, &spec.noise, grid)?;
        let sq: Vec<f64> = est
            .values()
            .iter()
            .zip(&target_vals)
            .map(|(fh, f)| (fh - f) * (fh - f))
            .collect();
        trapezoid_mass(grid, &sq)
    })?;

    let rows = rows
        .into_iter()
        .map(|(n, mises)| {
            let (mean, se) = mean_and_se(&mises);
            RiskRow { n, risk_mean: mean, risk_se: se, replicates: mises.len() }
        })
        .collect();
    Ok(RiskReport { quantity: Quantity::DensityF, seed, rows })
}

/// Which abscissa a rate fit regresses against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitScale {
    /// `ln(risk)` against `ln(n)`.
    PolyInN,
    /// `ln(risk)` against `ln(ln(n))`.
    LogInN,
}

/// Least-squares fit of a risk report's decay exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fit `ln(risk_mean)` against `ln(n)` (or `ln(ln n)`) by ordinary least
/// squares. Requires at least 3 rows and strictly positive risks.
pub fn fit_rate(report: &RiskReport, scale: FitScale) -> Result<RateFit> {
    if report.rows.len() < 3 {
        return Err(Error::Invalid(format!(
            "rate fitting needs at least 3 rows, got {}",
            report.rows.len()
        )));
    }
    let mut xs = Vec::with_capacity(report.rows.len());
    let mut ys = Vec::with_capacity(report.rows.len());
    for row in &report.rows {
        if !(row.risk_mean > 0.0) {
            return Err(Error::NonPositiveRisk { n: row.n });
        }
        let ln_n = (row.n as f64).ln();
        xs.push(match scale {
            FitScale::PolyInN => ln_n,
            FitScale::LogInN => ln_n.ln(),
        });
        ys.push(row.risk_mean.ln());
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("rate fit abscissae are degenerate".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateFit { slope, intercept, r_squared })
}
