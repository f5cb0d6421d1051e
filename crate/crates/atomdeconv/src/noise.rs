//! Known error-distribution models: characteristic functions, smoothness
//! classification, and seeded samplers for simulation.
//!
//! The deconvolution estimators divide by the noise characteristic
//! function, so its decay class drives every bandwidth and rate formula:
//!
//! * ordinary smooth noise decays polynomially,
//!   `|cf(t)| >= d0 |t|^{-beta}` for large `|t|` (e.g. Laplace);
//! * supersmooth noise decays essentially exponentially,
//!   `|cf(t)| >= d0 |t|^{beta0} e^{-|t|^beta / gamma}` (e.g. Gaussian).
//!
//! Samplers are deterministic functions of a seed; each consumer derives
//! an independent sub-stream so that adding or removing draws of one kind
//! never perturbs another.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use std::fmt;
use std::sync::Arc;

/// Decay classification of a noise characteristic function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothnessClass {
    /// Polynomial decay: `|cf(t)| >= d0 |t|^{-beta}` for large `|t|`.
    /// Integrability of the noise density forces `beta > 1`.
    OrdinarySmooth { d0: f64, beta: f64 },
    /// Essentially exponential decay:
    /// `|cf(t)| >= d0 |t|^{beta0} e^{-|t|^beta / gamma}`.
    Supersmooth { d0: f64, beta0: f64, beta: f64, gamma: f64 },
}

impl SmoothnessClass {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SmoothnessClass::OrdinarySmooth { d0, beta } => {
                if !(d0 > 0.0) || !d0.is_finite() {
                    return Err(Error::Invalid(format!(
                        "ordinary-smooth d0 must be positive and finite, got {d0}"
                    )));
                }
                if !(beta > 1.0) || !beta.is_finite() {
                    return Err(Error::Invalid(format!(
                        "ordinary-smooth beta must exceed 1 (integrability), got {beta}"
                    )));
                }
            }
            SmoothnessClass::Supersmooth { d0, beta0, beta, gamma } => {
                if !(d0 > 0.0) || !d0.is_finite() {
                    return Err(Error::Invalid(format!(
                        "supersmooth d0 must be positive and finite, got {d0}"
                    )));
                }
                if !beta0.is_finite() {
                    return Err(Error::Invalid(format!(
                        "supersmooth beta0 must be finite, got {beta0}"
                    )));
                }
                if !(beta > 0.0) || !beta.is_finite() {
                    return Err(Error::Invalid(format!(
                        "supersmooth beta must be positive and finite, got {beta}"
                    )));
                }
                if !(gamma > 0.0) || !gamma.is_finite() {
                    return Err(Error::Invalid(format!(
                        "supersmooth gamma must be positive and finite, got {gamma}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The decay exponent `beta` common to both classes.
    pub fn beta(&self) -> f64 {
        match *self {
            SmoothnessClass::OrdinarySmooth { beta, .. } => beta,
            SmoothnessClass::Supersmooth { beta, .. } => beta,
        }
    }
}

#[derive(Clone)]
enum CfShape {
    /// `exp(-sigma^2 t^2 / 2)`.
    Gaussian { sigma: f64 },
    /// `1 / (1 + b^2 t^2)`.
    Laplace { b: f64 },
    Custom(Arc<dyn Fn(f64) -> Complex64 + Send + Sync>),
}

type Sampler = Arc<dyn Fn(&mut ChaCha8Rng) -> f64 + Send + Sync>;

/// A noise model: exact characteristic function, decay classification,
/// and a seeded sampler.
#[derive(Clone)]
pub struct NoiseModel {
    name: String,
    shape: CfShape,
    classification: SmoothnessClass,
    sampler: Sampler,
}

impl fmt::Debug for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoiseModel")
            .field("name", &self.name)
            .field("classification", &self.classification)
            .finish()
    }
}

/// Gaussian noise with standard deviation `sigma`:
/// `cf(t) = exp(-sigma^2 t^2 / 2)`, supersmooth with `beta = 2`,
/// `gamma = 2 / sigma^2`, `beta0 = 0`, `d0 = 1` (the bound is an equality).
pub fn gaussian_noise(sigma: f64) -> Result<NoiseModel> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Invalid(format!(
            "gaussian noise sigma must be positive and finite, got {sigma}"
        )));
    }
    let dist = rand_distr::Normal::new(0.0, sigma).expect("sigma validated above");
    Ok(NoiseModel {
        name: format!("gaussian:{sigma}"),
        shape: CfShape::Gaussian { sigma },
        classification: SmoothnessClass::Supersmooth {
            d0: 1.0,
            beta0: 0.0,
            beta: 2.0,
            gamma: 2.0 / (sigma * sigma),
        },
        sampler: Arc::new(move |rng| dist.sample(rng)),
    })
}

/// Laplace noise with scale `b`: `cf(t) = 1 / (1 + b^2 t^2)`, ordinary
/// smooth with `beta = 2` and grid-certified `d0 = min(1, 1/(2 b^2))`
/// (valid for `|t| >= 1`).
pub fn laplace_noise(b: f64) -> Result<NoiseModel> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::Invalid(format!(
            "laplace noise scale must be positive and finite, got {b}"
        )));
    }
    Ok(NoiseModel {
        name: format!("laplace:{b}"),
        shape: CfShape::Laplace { b },
        classification: SmoothnessClass::OrdinarySmooth {
            d0: 1.0f64.min(1.0 / (2.0 * b * b)),
            beta: 2.0,
        },
        // Inverse-CDF sampler: u uniform in (0,1),
        // x = b ln(2u) for u < 1/2, x = -b ln(2(1-u)) otherwise.
        sampler: Arc::new(move |rng| {
            let u: f64 = loop {
                let u = rng.random::<f64>();
                if u > 0.0 {
                    break u;
                }
            };
            if u < 0.5 {
                b * (2.0 * u).ln()
            } else {
                -b * (2.0 * (1.0 - u)).ln()
            }
        }),
    })
}

/// Wrap a caller-supplied characteristic function, classification, and
/// sampler. `cf(0) = 1` is verified and Hermitian symmetry is
/// spot-checked; the decay bounds of the classification are trusted.
pub fn custom_noise<C, S>(
    name: impl Into<String>,
    cf: C,
    classification: SmoothnessClass,
    sampler: S,
) -> Result<NoiseModel>
where
    C: Fn(f64) -> Complex64 + Send + Sync + 'static,
    S: Fn(&mut ChaCha8Rng) -> f64 + Send + Sync + 'static,
{
    classification.validate()?;
    let at_zero = cf(0.0);
    if (at_zero.re - 1.0).abs() > 1e-12 || at_zero.im.abs() > 1e-12 {
        return Err(Error::CfNotOneAtZero { value: at_zero.re });
    }
    for t in [0.5, 1.0, 2.0, 3.7] {
        let d = (cf(-t) - cf(t).conj()).norm();
        if !(d <= 1e-10 * (1.0 + cf(t).norm())) {
            return Err(Error::Invalid(format!(
                "custom noise cf is not Hermitian at t = {t}: |cf(-t) - conj(cf(t))| = {d}"
            )));
        }
    }
    Ok(NoiseModel {
        name: name.into(),
        shape: CfShape::Custom(Arc::new(cf)),
        classification,
        sampler: Arc::new(sampler),
    })
}

/// The degenerate `Z = 0` model (`cf` identically 1), useful as a test
/// double: deconvolving against it reduces every estimator to its
/// noise-free form.
pub fn identity_noise() -> NoiseModel {
    custom_noise(
        "identity",
        |_t| Complex64::new(1.0, 0.0),
        // Formally supersmooth with arbitrarily slow decay; parameters are
        // placeholders satisfying the validity constraints.
        SmoothnessClass::Supersmooth { d0: 1.0, beta0: 0.0, beta: 2.0, gamma: 1e12 },
        |_rng| 0.0,
    )
    .expect("identity cf satisfies all checks")
}

impl NoiseModel {
    /// Evaluate the characteristic function at `t`.
    pub fn cf(&self, t: f64) -> Complex64 {
        match &self.shape {
            CfShape::Gaussian { sigma } => {
                let st = sigma * t;
                Complex64::new((-0.5 * st * st).exp(), 0.0)
            }
            CfShape::Laplace { b } => {
                let bt = b * t;
                Complex64::new(1.0 / (1.0 + bt * bt), 0.0)
            }
            CfShape::Custom(f) => f(t),
        }
    }

    pub fn classification(&self) -> SmoothnessClass {
        self.classification
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Draw one value from the given generator.
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        (self.sampler)(rng)
    }

    /// Parse a noise selection string: `gaussian:<sigma>` or
    /// `laplace:<b>`.
    pub fn parse(s: &str) -> Result<NoiseModel> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("gaussian:") {
            let sigma: f64 = rest.parse().map_err(|_| {
                Error::Invalid(format!("cannot parse gaussian sigma from {rest:?}"))
            })?;
            return gaussian_noise(sigma);
        }
        if let Some(rest) = s.strip_prefix("laplace:") {
            let b: f64 = rest
                .parse()
                .map_err(|_| Error::Invalid(format!("cannot parse laplace scale from {rest:?}")))?;
            return laplace_noise(b);
        }
        Err(Error::Invalid(format!(
            "unknown noise {s:?}; expected gaussian:<sigma> or laplace:<b>"
        )))
    }
}

/// SplitMix64 output function: a bijective mixer with good avalanche,
/// used to derive independent sub-stream seeds from one master seed.
pub(crate) fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sub-stream `stream` of a master seed. Streams 0, 1, 2 are the
/// atom-indicator, latent-value, and noise draws of one model sample.
pub(crate) fn substream_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ stream.wrapping_mul(0xA076_1D64_78BD_642F))
}

/// Sub-stream index used for noise draws (shared with the model sampler so
/// that a pure-noise model reproduces `sample_noise` exactly).
pub(crate) const NOISE_STREAM: u64 = 2;

/// `n` i.i.d. draws from the noise model; deterministic given the seed.
pub fn sample_noise(model: &NoiseModel, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Invalid("sample size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, NOISE_STREAM));
    Ok((0..n).map(|_| model.draw(&mut rng)).collect())
}
