//! Shared numerical machinery: composite Simpson quadrature on symmetric
//! intervals, Fourier inversion of characteristic functions onto spatial
//! grids, and trapezoid mass computation.
//!
//! Conventions used throughout the crate:
//!
//! * Quadrature nodes on `[-a, a]` are constructed as `t_j = (j - m/2) * h`
//!   with `h = a / (m/2)`, so the grid is bitwise symmetric and contains
//!   `t = 0` exactly. Summation proceeds outward in mirrored pairs; for an
//!   odd integrand the pair contributions cancel exactly and for a
//!   Hermitian integrand (`f(-t) = conj(f(t))`) the imaginary parts cancel
//!   exactly, so realness is a structural property rather than a rounding
//!   accident.
//! * Oscillatory inversion integrands `e^{-itx} cf(t)` are resolved with at
//!   least 8 nodes per oscillation period; the node count is raised
//!   automatically above the requested resolution when the grid extent
//!   demands it.
//! * Node counts are rounded up to a multiple of 4 so that `t = 0` is a
//!   panel boundary: characteristic functions with a kink at the origin
//!   (Laplace-type, compound mixtures of `e^{-|t|}`) then converge at the
//!   full Simpson order on each half line.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Resolution and convergence tolerance for a quadrature call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    nodes: usize,
    tolerance: f64,
}

impl QuadratureSpec {
    /// `nodes` is the number of Simpson subintervals on the full interval;
    /// it must be even and at least 16. `tolerance` gates grid-doubling
    /// convergence checks where they apply.
    pub fn new(nodes: usize, tolerance: f64) -> Result<Self> {
        if nodes < 16 || !nodes.is_multiple_of(2) {
            return Err(Error::Invalid(format!(
                "quadrature nodes must be even and >= 16, got {nodes}"
            )));
        }
        if !(tolerance > 0.0) || !tolerance.is_finite() {
            return Err(Error::Invalid(format!(
                "quadrature tolerance must be positive and finite, got {tolerance}"
            )));
        }
        Ok(Self { nodes, tolerance })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

impl Default for QuadratureSpec {
    /// 4096 subintervals, 1e-7 relative convergence tolerance.
    fn default() -> Self {
        Self { nodes: 4096, tolerance: 1e-7 }
    }
}

/// Round `m` up to the next multiple of 4 (minimum 16).
fn round_up_mult4(m: usize) -> usize {
    let m = m.max(16);
    m.div_ceil(4) * 4
}

/// Simpson weight (1, 4, 2, 4, ..., 4, 1 pattern) for node `j` of `m`
/// subintervals; the `h/3` factor is applied separately.
#[inline]
fn simpson_weight(j: usize, m: usize) -> f64 {
    if j == 0 || j == m {
        1.0
    } else if j % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

/// Composite Simpson integral of a complex-valued integrand over
/// `[-halfwidth, halfwidth]` with `spec.nodes()` subintervals.
///
/// Mirrored nodes are summed pairwise, so odd integrands cancel exactly and
/// Hermitian integrands produce an exactly real result up to the rounding
/// of the pair sums themselves.
pub fn integrate_symmetric<F>(f: F, halfwidth: f64, spec: &QuadratureSpec) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if !(halfwidth > 0.0) || !halfwidth.is_finite() {
        return Err(Error::Invalid(format!(
            "integration halfwidth must be positive and finite, got {halfwidth}"
        )));
    }
    let m = round_up_mult4(spec.nodes());
    let half = m / 2;
    let h = halfwidth / half as f64;

    let eval = |t: f64| -> Result<Complex64> {
        let v = f(t);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFiniteIntegrand { t });
        }
        Ok(v)
    };

    // Center node (weight 2 unless it degenerates, but m >= 16 so j = half
    // is an interior node; its weight depends on parity of `half`).
    let mut sum = eval(0.0)? * simpson_weight(half, m);
    for k in 1..=half {
        let t = k as f64 * h;
        let w = simpson_weight(half + k, m); // mirrored weights are equal
        sum += (eval(t)? + eval(-t)?) * w;
    }
    Ok(sum * (h / 3.0))
}

/// Fourier inversion of a characteristic function on a spatial grid:
///
/// `out[i] = (1 / 2 pi) * Integral_{-cutoff}^{cutoff} e^{-i t x_i} cf(t) dt`
///
/// The characteristic function is evaluated once per node and shared across
/// grid points; each grid point walks the nodes outward from `t = 0` with a
/// complex phase recurrence. When `cf` is Hermitian (spot-checked), the
/// imaginary part of the integral cancels pairwise and a debug assertion
/// verifies the residual.
pub fn invert_cf_on_grid<F>(
    cf: F,
    grid: &[f64],
    cutoff: f64,
    spec: &QuadratureSpec,
) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Complex64,
{
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::Invalid(format!(
            "inversion cutoff must be positive and finite, got {cutoff}"
        )));
    }
    if grid.is_empty() {
        return Err(Error::GridNotIncreasing);
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::GridNotIncreasing);
    }

    let max_abs_x = grid.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    // >= 8 nodes per oscillation period of e^{-itx} over the full interval.
    let oscillation = (8.0 * cutoff * max_abs_x / std::f64::consts::PI).ceil() as usize;
    let m = round_up_mult4(spec.nodes().max(oscillation));
    let half = m / 2;
    let h = cutoff / half as f64;

    // Evaluate cf once on the node set: index k in [-half, half] stored as
    // pos[k] for t = k h and neg[k] for t = -k h.
    let mut pos = Vec::with_capacity(half + 1);
    let mut neg = Vec::with_capacity(half + 1);
    for k in 0..=half {
        let t = k as f64 * h;
        let vp = cf(t);
        let vn = if k == 0 { vp } else { cf(-t) };
        if !vp.re.is_finite() || !vp.im.is_finite() {
            return Err(Error::NonFiniteIntegrand { t });
        }
        if !vn.re.is_finite() || !vn.im.is_finite() {
            return Err(Error::NonFiniteIntegrand { t: -t });
        }
        pos.push(vp);
        neg.push(vn);
    }

    // Spot-check Hermitian symmetry at a few interior nodes.
    let hermitian = [half / 3, half / 2, (3 * half) / 4].iter().all(|&k| {
        let d = neg[k] - pos[k].conj();
        d.norm() <= 1e-10 * (1.0 + pos[k].norm())
    });

    let inv_two_pi = 0.5 / std::f64::consts::PI;
    let mut out = Vec::with_capacity(grid.len());
    for &x in grid {
        // Outward walk: z_k = e^{-i k h x}; the mirrored node contributes
        // cf(-t) e^{+i k h x} = neg[k] * conj(z_k).
        let step = Complex64::from_polar(1.0, -h * x);
        let mut z = Complex64::new(1.0, 0.0);
        let mut sum = pos[0] * simpson_weight(half, m);
        for k in 1..=half {
            z *= step;
            let w = simpson_weight(half + k, m);
            sum += (pos[k] * z + neg[k] * z.conj()) * w;
        }
        let val = sum * (h / 3.0) * inv_two_pi;
        if hermitian {
            debug_assert!(
                val.im.abs() <= 1e-8 * val.re.abs().max(1.0),
                "imaginary residue {} for Hermitian cf at x = {}",
                val.im,
                x
            );
        }
        out.push(val.re);
    }
    Ok(out)
}

/// Trapezoid-rule mass of sampled values over a strictly increasing grid.
pub fn trapezoid_mass(grid: &[f64], values: &[f64]) -> Result<f64> {
    if grid.len() != values.len() {
        return Err(Error::LengthMismatch { left: grid.len(), right: values.len() });
    }
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::GridNotIncreasing);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("trapezoid values must be finite".into()));
    }
    let mut acc = 0.0;
    for i in 0..grid.len() - 1 {
        acc += 0.5 * (grid[i + 1] - grid[i]) * (values[i] + values[i + 1]);
    }
    Ok(acc)
}

/// Integration cutoff for characteristic functions with a Gaussian factor:
/// `max(40, sqrt(2 ln(1/tol)))`. Beyond it `e^{-t^2/2}` is below `tol`
/// (and below the f64 underflow floor at the default).
pub fn gaussian_cf_cutoff(tol: f64) -> f64 {
    debug_assert!(tol > 0.0 && tol < 1.0);
    40.0f64.max((2.0 * (1.0 / tol).ln()).sqrt())
}

/// Both Simpson sums obtainable from one fused evaluation pass on a uniform
/// grid of `values` over `[0, width]`: `fine` uses every node (len - 1
/// subintervals), `coarse` uses the even-indexed nodes (half as many).
/// `values.len()` must be `4k + 1` so both rules are valid.
pub(crate) fn simpson_pair(values: &[f64], width: f64) -> (f64, f64) {
    let m = values.len() - 1;
    debug_assert!(m >= 4 && m.is_multiple_of(4));
    let h = width / m as f64;
    let mut fine = 0.0;
    let mut coarse = 0.0;
    for (j, &v) in values.iter().enumerate() {
        fine += simpson_weight(j, m) * v;
        if j % 2 == 0 {
            coarse += simpson_weight(j / 2, m / 2) * v;
        }
    }
    (fine * h / 3.0, coarse * (2.0 * h) / 3.0)
}
