//! Fourier-domain kernels and numerical validation of the two kernel
//! conditions used by the estimators.
//!
//! Everything here lives on the Fourier side: a kernel is represented by
//! its transform `phi`, a real, even, compactly supported function. Two
//! roles exist:
//!
//! * an atom-side kernel (`AtomKernelU`) must integrate to 2 over its
//!   support and satisfy `|phi(t) / t^alpha| <= U` for some finite `U`
//!   (so it vanishes at the origin at rate `t^alpha`);
//! * a density-side kernel (`DensityKernelW`) must satisfy `phi(0) = 1`
//!   and `|phi(t) - 1| <= W |t|^alpha` for some finite `W`.
//!
//! The validators estimate the tightest grid-certified constants `U` and
//! `W` and detect unbounded ratios by comparing the grid maximum against a
//! 2x-refined grid: a bounded ratio is stable under refinement while an
//! unbounded one keeps growing.

use crate::error::{Error, Result};
use crate::numerics::{integrate_symmetric, QuadratureSpec};
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

/// Default number of validation grid points per unit interval.
pub const DEFAULT_VALIDATION_GRID: usize = 4096;

/// Integral tolerance for the atom-kernel normalization check.
const INTEGRAL_TOL: f64 = 1e-9;

/// Growth factor threshold for the refinement-based unboundedness check.
const GROWTH_THRESHOLD: f64 = 1.05;

/// Deviations `|phi(t) - 1|` below this floor are rounding residue of the
/// O(1) subtraction (absolute error ~ 1.1e-16), not signal; ratios formed
/// from them are pure noise that grows under refinement. Nodes below the
/// floor are excluded from the W estimate. A kernel whose true deviation
/// hides entirely below this floor is unresolvable in double precision.
const W_DEVIATION_FLOOR: f64 = 1e-10;

/// Which estimator side a kernel is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Atom-mass side: must vanish at the origin like `t^alpha` and
    /// integrate to 2.
    AtomKernelU,
    /// Density side: must equal 1 at the origin with `alpha`-order contact.
    DensityKernelW,
}

#[derive(Clone)]
enum Shape {
    /// `(693/8) t^6 (1 - t^2)^2` on `[-1, 1]`.
    PaperU,
    /// Indicator of `[-1, 1]`.
    Sinc,
    /// `1 - |t|^alpha` on `[-1, 1]`.
    PolyW { alpha: f64 },
    /// User-supplied transform (tests, experiments).
    Custom {
        name: String,
        phi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

/// A kernel represented by its Fourier transform.
#[derive(Clone)]
pub struct FourierKernel {
    shape: Shape,
    kind: KernelKind,
    support_halfwidth: f64,
}

impl fmt::Debug for FourierKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match &self.shape {
            Shape::PaperU => "paper-u".to_string(),
            Shape::Sinc => "sinc".to_string(),
            Shape::PolyW { alpha } => format!("poly-w:{alpha}"),
            Shape::Custom { name, .. } => format!("custom:{name}"),
        };
        f.debug_struct("FourierKernel")
            .field("shape", &name)
            .field("kind", &self.kind)
            .field("support_halfwidth", &self.support_halfwidth)
            .finish()
    }
}

/// Pointwise atom-side kernel transform: `(693/8) t^6 (1-t^2)^2` on
/// `[-1, 1]`, zero outside. Integrates to exactly 2.
pub fn phi_u_paper(t: f64) -> f64 {
    if t.abs() > 1.0 {
        return 0.0;
    }
    let t2 = t * t;
    let s = 1.0 - t2;
    (693.0 / 8.0) * t2 * t2 * t2 * s * s
}

/// Pointwise indicator-of-`[-1, 1]` transform (boundary points included).
pub fn phi_sinc(t: f64) -> f64 {
    if t.abs() <= 1.0 {
        1.0
    } else {
        0.0
    }
}

/// Pointwise density-side kernel transform `1 - |t|^alpha` on `[-1, 1]`,
/// zero outside. Satisfies `|phi(t) - 1| <= |t|^alpha` with constant 1.
pub fn phi_w_default(t: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Invalid(format!(
            "density-kernel exponent alpha must be positive and finite, got {alpha}"
        )));
    }
    Ok(if t.abs() <= 1.0 {
        1.0 - t.abs().powf(alpha)
    } else {
        0.0
    })
}

impl FourierKernel {
    /// The polynomial atom-side kernel with `alpha = 6`, `U = 693/8`.
    pub fn paper_u() -> Self {
        Self {
            shape: Shape::PaperU,
            kind: KernelKind::AtomKernelU,
            support_halfwidth: 1.0,
        }
    }

    /// The indicator kernel, usable on either side (it fails atom-side
    /// validation: its ratio to `t^alpha` is unbounded at the origin).
    pub fn sinc(kind: KernelKind) -> Self {
        Self {
            shape: Shape::Sinc,
            kind,
            support_halfwidth: 1.0,
        }
    }

    /// The default density-side kernel `1 - |t|^alpha`.
    pub fn poly_w(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Invalid(format!(
                "density-kernel exponent alpha must be positive and finite, got {alpha}"
            )));
        }
        Ok(Self {
            shape: Shape::PolyW { alpha },
            kind: KernelKind::DensityKernelW,
            support_halfwidth: 1.0,
        })
    }

    /// Wrap a user-supplied transform. Evenness is spot-checked and the
    /// support clause is enforced by clipping to zero outside
    /// `[-support_halfwidth, support_halfwidth]`.
    pub fn custom<F>(
        name: impl Into<String>,
        phi: F,
        kind: KernelKind,
        support_halfwidth: f64,
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(support_halfwidth > 0.0) || !support_halfwidth.is_finite() {
            return Err(Error::Invalid(format!(
                "kernel support halfwidth must be positive and finite, got {support_halfwidth}"
            )));
        }
        for k in 1..=8 {
            let t = support_halfwidth * k as f64 / 8.0;
            let d = (phi(t) - phi(-t)).abs();
            if !(d <= 1e-10) {
                return Err(Error::Invalid(format!(
                    "custom kernel transform is not even: phi({t}) - phi({}) = {d}",
                    -t
                )));
            }
        }
        Ok(Self {
            shape: Shape::Custom {
                name: name.into(),
                phi: Arc::new(phi),
            },
            kind,
            support_halfwidth,
        })
    }

    /// Evaluate the transform at `t`. Total; zero outside the support.
    pub fn eval(&self, t: f64) -> f64 {
        if t.abs() > self.support_halfwidth {
            return 0.0;
        }
        match &self.shape {
            Shape::PaperU => phi_u_paper(t),
            Shape::Sinc => phi_sinc(t),
            Shape::PolyW { alpha } => {
                if t.abs() <= 1.0 {
                    1.0 - t.abs().powf(*alpha)
                } else {
                    0.0
                }
            }
            Shape::Custom { phi, .. } => phi(t),
        }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn support_halfwidth(&self) -> f64 {
        self.support_halfwidth
    }

    /// Parse a kernel selection string: `paper-u`, `sinc`, or
    /// `poly-w:<alpha>`. The kind is stamped by the caller (CLI flag).
    pub fn parse(s: &str, kind: KernelKind) -> Result<Self> {
        let s = s.trim();
        if s == "paper-u" {
            return Ok(Self {
                shape: Shape::PaperU,
                kind,
                support_halfwidth: 1.0,
            });
        }
        if s == "sinc" {
            return Ok(Self::sinc(kind));
        }
        if let Some(rest) = s.strip_prefix("poly-w:") {
            let alpha: f64 = rest.parse().map_err(|_| {
                Error::Invalid(format!("cannot parse poly-w exponent from {rest:?}"))
            })?;
            let mut k = Self::poly_w(alpha)?;
            k.kind = kind;
            return Ok(k);
        }
        Err(Error::Invalid(format!(
            "unknown kernel {s:?}; expected paper-u, sinc, or poly-w:<alpha>"
        )))
    }
}

/// Grid-certified constants for an atom-side kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UValidity {
    pub alpha: f64,
    /// Tightest grid-certified `U` with `|phi(t)/t^alpha| <= U`.
    pub u_bound: f64,
}

/// Grid-certified constants for a density-side kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WValidity {
    pub alpha: f64,
    /// Tightest grid-certified `W` with `|phi(t) - 1| <= W |t|^alpha`.
    pub w_bound: f64,
}

fn check_validation_args(alpha: f64, grid_size: usize) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Invalid(format!(
            "validation exponent alpha must be positive and finite, got {alpha}"
        )));
    }
    if grid_size < 16 {
        return Err(Error::Invalid(format!(
            "validation grid size must be at least 16, got {grid_size}"
        )));
    }
    Ok(())
}

/// Max of `ratio(t_i)` over the grid `t_i = i * halfwidth / n`,
/// `i = 1..=n`. `NaN` anywhere is an input error.
fn grid_max<R>(ratio: R, halfwidth: f64, n: usize) -> Result<f64>
where
    R: Fn(f64) -> f64,
{
    let mut max = 0.0f64;
    for i in 1..=n {
        let t = i as f64 * halfwidth / n as f64;
        let r = ratio(t);
        if r.is_nan() {
            return Err(Error::Invalid(format!(
                "kernel validation ratio is NaN at t = {t}"
            )));
        }
        max = max.max(r);
    }
    Ok(max)
}

/// Validate an atom-side kernel: the transform must integrate to 2 over
/// its support within 1e-9 and the ratio `|phi(t)/t^alpha|` must be
/// bounded. Returns the tightest grid-certified `U`, taking the `t = 0`
/// value as the continuity limit extrapolated from the two innermost grid
/// points (quadratic Richardson step, exact for `C + O(t^2)` behavior).
pub fn validate_u_kernel(
    kernel: &FourierKernel,
    alpha: f64,
    grid_size: usize,
) -> Result<UValidity> {
    if kernel.kind() != KernelKind::AtomKernelU {
        return Err(Error::Invalid(
            "validate_u_kernel requires an atom-side kernel (kind AtomKernelU)".into(),
        ));
    }
    check_validation_args(alpha, grid_size)?;

    let a = kernel.support_halfwidth();
    // The integral tolerance is fixed, so the quadrature resolution is
    // floored at 4096 subintervals regardless of the ratio-grid size.
    let quad = QuadratureSpec::new(grid_size.max(4096).next_multiple_of(4), INTEGRAL_TOL)?;
    let integral = integrate_symmetric(|t| Complex64::new(kernel.eval(t), 0.0), a, &quad)?.re;
    if (integral - 2.0).abs() > INTEGRAL_TOL {
        return Err(Error::IntegralNotTwo {
            integral,
            tol: INTEGRAL_TOL,
        });
    }

    let ratio = |t: f64| (kernel.eval(t) / t.abs().powf(alpha)).abs();
    let coarse = grid_max(ratio, a, grid_size)?;
    let refined = grid_max(ratio, a, 2 * grid_size)?;
    if refined > GROWTH_THRESHOLD * coarse {
        return Err(Error::RatioUnbounded { coarse, refined });
    }

    // Continuity limit at t = 0 from the two innermost nodes: with
    // r(t) = L + c t^2 + O(t^4) and t2 = 2 t1, L = r1 + (r1 - r2)/3.
    let t1 = a / grid_size as f64;
    let r1 = ratio(t1);
    let r2 = ratio(2.0 * t1);
    let limit = (r1 + (r1 - r2) / 3.0).max(0.0);

    Ok(UValidity {
        alpha,
        u_bound: coarse.max(limit),
    })
}

/// Validate a density-side kernel: `phi(0) = 1`, finite square integral,
/// and bounded ratio `|phi(t) - 1| / |t|^alpha` over the support. Returns
/// the tightest grid-certified `W`. Nodes whose deviation falls below the
/// double-precision resolvability floor are excluded (see
/// `W_DEVIATION_FLOOR`); if no node resolves, `W = 0`.
pub fn validate_w_kernel(
    kernel: &FourierKernel,
    alpha: f64,
    grid_size: usize,
) -> Result<WValidity> {
    if kernel.kind() != KernelKind::DensityKernelW {
        return Err(Error::Invalid(
            "validate_w_kernel requires a density-side kernel (kind DensityKernelW)".into(),
        ));
    }
    check_validation_args(alpha, grid_size)?;

    let at_zero = kernel.eval(0.0);
    if (at_zero - 1.0).abs() > 1e-12 {
        return Err(Error::NotOneAtZero { value: at_zero });
    }

    let a = kernel.support_halfwidth();
    let quad = QuadratureSpec::new(grid_size.max(4096).next_multiple_of(4), INTEGRAL_TOL)?;
    let square = integrate_symmetric(
        |t| {
            let v = kernel.eval(t);
            Complex64::new(v * v, 0.0)
        },
        a,
        &quad,
    )?
    .re;
    if !square.is_finite() {
        return Err(Error::Invalid(
            "density-side kernel has non-finite square integral".into(),
        ));
    }

    let ratio = |t: f64| {
        let dev = (kernel.eval(t) - 1.0).abs();
        if dev < W_DEVIATION_FLOOR {
            0.0
        } else {
            dev / t.abs().powf(alpha)
        }
    };
    let coarse = grid_max(ratio, a, grid_size)?;
    let refined = grid_max(ratio, a, 2 * grid_size)?;
    if refined > GROWTH_THRESHOLD * coarse {
        return Err(Error::RatioUnbounded { coarse, refined });
    }

    Ok(WValidity {
        alpha,
        w_bound: coarse,
    })
}
