//! Rate-optimal bandwidth and truncation schedules, theoretical
//! convergence-rate descriptors, and named presets wiring them together.
//!
//! The schedules depend on the smoothness exponent `alpha` of the target
//! class and the decay class of the noise characteristic function:
//!
//! * ordinary smooth noise (polynomial decay `beta`): power-law bandwidths
//!   and polynomial risk rates;
//! * supersmooth noise (exponential decay `beta`, `gamma`): logarithmic
//!   bandwidths and logarithmic risk rates.
//!
//! All logarithms are natural.

use crate::error::{Error, Result};
use crate::noise::SmoothnessClass;
use serde::Serialize;

/// Which estimand a rate statement refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantity {
    /// The atom mass `p` (squared-error risk).
    AtomP,
    /// The density `f` (integrated squared-error risk).
    DensityF,
}

/// A target of a rate statement: target-class smoothness plus noise class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTarget {
    pub alpha: f64,
    pub noise_class: SmoothnessClass,
    pub quantity: Quantity,
}

/// Whether a risk bound decays polynomially in `n` or polynomially in
/// `log n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RateScale {
    PowerOfN,
    PowerOfLogN,
}

/// `risk ~ (scale base)^{exponent}` with a negative exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateDescriptor {
    pub scale: RateScale,
    pub exponent: f64,
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Invalid(format!(
            "{name} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

/// Atom-estimator bandwidth under ordinary smooth noise:
/// `d n^{-1/(2 alpha + 2 beta)}`.
pub fn g_ordinary(n: usize, alpha: f64, beta: f64, d: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Invalid("sample size must be at least 1".into()));
    }
    require_positive("alpha", alpha)?;
    require_positive("beta", beta)?;
    require_positive("d", d)?;
    Ok(d * (n as f64).powf(-1.0 / (2.0 * alpha + 2.0 * beta)))
}

/// Atom-estimator bandwidth under supersmooth noise:
/// `(4 / gamma)^{1/beta} (ln n)^{-1/beta}`.
pub fn g_supersmooth(n: usize, beta: f64, gamma: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Invalid(format!(
            "supersmooth bandwidth needs n >= 2 (ln n > 0), got {n}"
        )));
    }
    require_positive("beta", beta)?;
    require_positive("gamma", gamma)?;
    Ok((4.0 / gamma).powf(1.0 / beta) * (n as f64).ln().powf(-1.0 / beta))
}

/// Density-estimator bandwidth under ordinary smooth noise:
/// `d (n - floor(n/2))^{-1/(2 alpha + 2 beta + 1)}` — the effective sample
/// is the post-split half that feeds the ECF.
pub fn h_ordinary(n: usize, alpha: f64, beta: f64, d: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Invalid(format!(
            "density bandwidth needs n >= 2, got {n}"
        )));
    }
    require_positive("alpha", alpha)?;
    require_positive("beta", beta)?;
    require_positive("d", d)?;
    let half = (n - n / 2) as f64;
    Ok(d * half.powf(-1.0 / (2.0 * alpha + 2.0 * beta + 1.0)))
}

/// Truncation level `1 / ln(3n)`, strictly inside `(0, 1)` for `n >= 1`.
pub fn epsilon_schedule(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::Invalid("sample size must be at least 1".into()));
    }
    Ok(1.0 / (3.0 * n as f64).ln())
}

/// The theoretical risk rate for a target (exponent of `n`, or of `ln n`,
/// depending on the noise class).
pub fn theoretical_rate(target: &RateTarget) -> Result<RateDescriptor> {
    require_positive("alpha", target.alpha)?;
    target.noise_class.validate()?;
    let alpha = target.alpha;
    Ok(match (target.noise_class, target.quantity) {
        (SmoothnessClass::OrdinarySmooth { beta, .. }, Quantity::AtomP) => RateDescriptor {
            scale: RateScale::PowerOfN,
            exponent: -(2.0 * alpha + 1.0) / (2.0 * alpha + 2.0 * beta),
        },
        (SmoothnessClass::OrdinarySmooth { beta, .. }, Quantity::DensityF) => RateDescriptor {
            scale: RateScale::PowerOfN,
            exponent: -(2.0 * alpha) / (2.0 * alpha + 2.0 * beta + 1.0),
        },
        (SmoothnessClass::Supersmooth { beta, .. }, Quantity::AtomP) => RateDescriptor {
            scale: RateScale::PowerOfLogN,
            exponent: -(2.0 * alpha + 1.0) / beta,
        },
        (SmoothnessClass::Supersmooth { beta, .. }, Quantity::DensityF) => RateDescriptor {
            scale: RateScale::PowerOfLogN,
            exponent: -(2.0 * alpha) / beta,
        },
    })
}

/// Named tuning presets: atom-estimation and density-estimation variants
/// for each noise class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Preset {
    /// Atom estimation, ordinary smooth noise: `g = d n^{-1/(2a+2b)}`.
    Thm1Ordinary,
    /// Atom estimation, supersmooth noise: logarithmic `g`.
    Thm1Supersmooth,
    /// Density estimation, ordinary smooth noise: sample splitting, the
    /// atom bandwidth computed from the first-half size.
    Thm2Ordinary,
    /// Density estimation, supersmooth noise: `h = g` logarithmic, no
    /// splitting.
    Thm2Supersmooth,
}

/// A fully resolved schedule for one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub g: f64,
    pub h: f64,
    pub epsilon: f64,
    pub split: bool,
}

impl Preset {
    /// Parse a preset name: `thm1-ordinary`, `thm1-supersmooth`,
    /// `thm2-ordinary`, `thm2-supersmooth`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "thm1-ordinary" => Ok(Preset::Thm1Ordinary),
            "thm1-supersmooth" => Ok(Preset::Thm1Supersmooth),
            "thm2-ordinary" => Ok(Preset::Thm2Ordinary),
            "thm2-supersmooth" => Ok(Preset::Thm2Supersmooth),
            other => Err(Error::Invalid(format!(
                "unknown preset {other:?}; expected thm1-ordinary, thm1-supersmooth, thm2-ordinary, or thm2-supersmooth"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Thm1Ordinary => "thm1-ordinary",
            Preset::Thm1Supersmooth => "thm1-supersmooth",
            Preset::Thm2Ordinary => "thm2-ordinary",
            Preset::Thm2Supersmooth => "thm2-supersmooth",
        }
    }

    /// Whether this preset estimates the atom mass or the density.
    pub fn quantity(&self) -> Quantity {
        match self {
            Preset::Thm1Ordinary | Preset::Thm1Supersmooth => Quantity::AtomP,
            Preset::Thm2Ordinary | Preset::Thm2Supersmooth => Quantity::DensityF,
        }
    }

    /// Resolve the schedule for sample size `n`. `alpha` is the
    /// target-class smoothness, `noise_class` the noise decay
    /// classification, and `d` the free constant of the power-law
    /// bandwidths (ignored by supersmooth presets).
    ///
    /// The density presets: splitting is used under ordinary smooth noise
    /// (with the atom bandwidth computed from the first-half size
    /// `floor(n/2)`), while the supersmooth preset sets `h = g` with no
    /// splitting. Either way `epsilon = 1 / ln(3n)`.
    pub fn schedule(
        &self,
        n: usize,
        alpha: f64,
        noise_class: &SmoothnessClass,
        d: f64,
    ) -> Result<Schedule> {
        let epsilon = epsilon_schedule(n)?;
        match (self, noise_class) {
            (Preset::Thm1Ordinary, SmoothnessClass::OrdinarySmooth { beta, .. }) => {
                let g = g_ordinary(n, alpha, *beta, d)?;
                Ok(Schedule { g, h: g, epsilon, split: false })
            }
            (Preset::Thm1Supersmooth, SmoothnessClass::Supersmooth { beta, gamma, .. }) => {
                let g = g_supersmooth(n, *beta, *gamma)?;
                Ok(Schedule { g, h: g, epsilon, split: false })
            }
            (Preset::Thm2Ordinary, SmoothnessClass::OrdinarySmooth { beta, .. }) => {
                if n < 2 {
                    return Err(Error::Invalid(format!(
                        "density preset needs n >= 2, got {n}"
                    )));
                }
                let g = g_ordinary(n / 2, alpha, *beta, d)?;
                let h = h_ordinary(n, alpha, *beta, d)?;
                Ok(Schedule { g, h, epsilon, split: true })
            }
            (Preset::Thm2Supersmooth, SmoothnessClass::Supersmooth { beta, gamma, .. }) => {
                let g = g_supersmooth(n, *beta, *gamma)?;
                Ok(Schedule { g, h: g, epsilon, split: false })
            }
            (preset, class) => Err(Error::Invalid(format!(
                "preset {} expects a {} noise model, got {class:?}",
                preset.name(),
                match preset {
                    Preset::Thm1Ordinary | Preset::Thm2Ordinary => "polynomial-decay",
                    _ => "exponential-decay",
                }
            ))),
        }
    }
}
