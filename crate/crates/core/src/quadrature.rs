//! Direct single-scatter link gain for a narrow beam.
//!
//! The gain is the path integral
//!
//! ```text
//! L_g = ∫₀^∞ P(μ(l)) · Ω(l) · k_s · exp(−k_e (l + l′(l))) dl
//! ```
//!
//! evaluated with globally adaptive 7/15-point Gauss-Kronrod subdivision on a
//! truncated interval `[0, l_max]`. The truncation tail is bounded
//! analytically and the interval is extended until that bound is negligible.

use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::atmosphere::{mixture, phase_function_bound, AtmosphereParams, PhaseFunctionParams};
use crate::error::{Error, Result};
use crate::geometry::{reduce_to_standard, ReceiverPos};

/// Receivers closer than this to the transmitter are rejected; the integral
/// diverges at `r = 0`.
pub const R_MIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Truncation point in units of the mean extinction length `1 / k_e`.
    pub l_max_factor: f64,
    /// Upper limit on the number of subintervals before giving up.
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-30,
            l_max_factor: 30.0,
            max_intervals: 4000,
        }
    }
}

impl QuadratureOptions {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "abs_tol must be non-negative, got {}",
                self.abs_tol
            )));
        }
        if !(self.l_max_factor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "l_max_factor must be positive, got {}",
                self.l_max_factor
            )));
        }
        if self.max_intervals == 0 {
            return Err(Error::InvalidParameter(
                "max_intervals must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A converged link gain together with its convergence evidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainEstimate {
    pub value: f64,
    /// Estimated quadrature error over `[0, l_max]`.
    pub error_bound: f64,
    /// Analytic bound on the neglected integral beyond `l_max`.
    pub tail_bound: f64,
    pub l_max: f64,
    pub evaluations: usize,
}

// Kronrod abscissae (descending) and weights for the 15-point rule; the
// odd-indexed nodes carry the embedded 7-point Gauss rule.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let sum = f(center - dx) + f(center + dx);
        kronrod += w * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    let value = kronrod * half;
    let raw = ((kronrod - gauss) * half).abs();
    // floor at a few ulps of the segment magnitude so tight tolerances terminate
    let error = raw.max(50.0 * f64::EPSILON * value.abs());
    Segment { a, b, value, error }
}

/// Globally adaptive integration over the subintervals delimited by `breaks`.
///
/// Returns `(value, error, evaluations)`, or a failure carrying the best
/// estimate when `max_intervals` is exhausted.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<(f64, f64, usize)> {
    let mut heap: BinaryHeap<Segment> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gauss_kronrod(&f, w[0], w[1]))
        .collect();
    let mut evaluations = 15 * heap.len();
    let mut total: f64 = heap.iter().map(|s| s.value).sum();
    let mut error: f64 = heap.iter().map(|s| s.error).sum();
    loop {
        if error <= abs_tol.max(rel_tol * total.abs()) {
            // resum to shed drift from the running updates
            total = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
            if error <= abs_tol.max(rel_tol * total.abs()) {
                return Ok((total, error, evaluations));
            }
        }
        if heap.len() >= max_intervals {
            return Err(Error::QuadratureFailure {
                estimate: total,
                error_bound: error,
            });
        }
        let worst = heap.pop().expect("non-empty segment heap");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // interval cannot be split further in floating point
            return Err(Error::QuadratureFailure {
                estimate: total,
                error_bound: error,
            });
        }
        let left = gauss_kronrod(&f, worst.a, mid);
        let right = gauss_kronrod(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error = (error + left.error + right.error - worst.error).max(0.0);
        heap.push(left);
        heap.push(right);
        evaluations += 30;
    }
}

/// Precomputed single-scatter integrand for one receiver and beam.
#[derive(Debug, Clone, Copy)]
struct Kernel<'a> {
    x: f64,
    y: f64,
    sin_a: f64,
    cos_a: f64,
    aperture_area: f64,
    k_s: f64,
    k_e: f64,
    atmos: &'a AtmosphereParams,
    pf: &'a PhaseFunctionParams,
}

impl<'a> Kernel<'a> {
    fn new(
        pos: ReceiverPos,
        alpha: f64,
        aperture_area: f64,
        atmos: &'a AtmosphereParams,
        pf: &'a PhaseFunctionParams,
    ) -> Self {
        let (sin_a, cos_a) = alpha.sin_cos();
        Self {
            x: pos.x,
            y: pos.y,
            sin_a,
            cos_a,
            aperture_area,
            k_s: atmos.k_s(),
            k_e: atmos.k_e(),
            atmos,
            pf,
        }
    }

    #[inline]
    fn eval(&self, l: f64) -> f64 {
        let lp2 = self.x * self.x + self.y * self.y + l * l - 2.0 * self.y * l * self.cos_a;
        let lp = lp2.max(0.0).sqrt();
        if lp <= 0.0 {
            return 0.0;
        }
        let mu = ((self.y * self.cos_a - l) / lp).clamp(-1.0, 1.0);
        let omega = self.aperture_area * l * self.sin_a / (lp2 * lp);
        mixture(mu, self.atmos, self.pf, self.k_s) * omega * self.k_s * (-self.k_e * (l + lp)).exp()
    }
}

/// Integrand `P(μ) Ω k_s exp(−k_e (l + l′))` at path length `l`.
pub fn link_gain_integrand(
    pos: ReceiverPos,
    alpha: f64,
    l: f64,
    aperture_area: f64,
    atmos: &AtmosphereParams,
    pf: &PhaseFunctionParams,
) -> f64 {
    Kernel::new(pos, alpha, aperture_area, atmos, pf).eval(l)
}

/// Link gain `E_r / E_t` for a narrow beam at elevation `alpha` and a receiver at `pos`.
///
/// The integrand is evaluated directly in the `(x, y, α)` frame; only the
/// subdivision breakpoints use the canonical geometry. Fails with
/// [`Error::TransmitterCollocated`] for `r < R_MIN`.
pub fn link_gain_direct(
    pos: ReceiverPos,
    alpha: f64,
    atmos: &AtmosphereParams,
    pf: &PhaseFunctionParams,
    aperture_area: f64,
    opts: &QuadratureOptions,
) -> Result<GainEstimate> {
    atmos.validate()?;
    pf.validate()?;
    opts.validate()?;
    if !(aperture_area > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "aperture area must be positive, got {aperture_area}"
        )));
    }
    if !(alpha > 0.0 && alpha < std::f64::consts::PI) {
        return Err(Error::InvalidParameter(format!(
            "elevation must lie in (0, pi), got {alpha}"
        )));
    }
    let r = pos.range();
    if !(r >= R_MIN) {
        return Err(Error::TransmitterCollocated { r, r_min: R_MIN });
    }

    let k_s = atmos.k_s();
    let k_e = atmos.k_e();
    let kernel = Kernel::new(pos, alpha, aperture_area, atmos, pf);
    let integrand = |l: f64| kernel.eval(l);

    // Closest approach of the beam to the receiver sets the scale of the peak.
    let std = reduce_to_standard(pos, alpha)?;
    let l_peak = (r * std.beta.cos()).max(0.0);
    let width = (r * std.beta.sin()).max(R_MIN);

    let mut l_max = (opts.l_max_factor / k_e).max(2.0 * r);
    let p_max = phase_function_bound(atmos, pf);
    let tail = |l_max: f64| {
        // for l ≥ 2r: l′ ≥ l − r ≥ l/2, so Ω ≤ 8 A_r / l²
        8.0 * aperture_area * p_max * k_s * (-k_e * l_max).exp() / (k_e * l_max * l_max)
    };

    let mut breaks = vec![0.0];
    for m in [-1000.0, -100.0, -10.0, -1.0, 0.0, 1.0, 10.0, 100.0, 1000.0] {
        let b = l_peak + m * width;
        if b > 0.0 && b < l_max {
            breaks.push(b);
        }
    }
    breaks.push(l_max);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let (mut value, mut error, mut evaluations) = integrate_adaptive(
        integrand,
        &breaks,
        opts.rel_tol,
        opts.abs_tol,
        opts.max_intervals,
    )?;

    let mut tail_bound = tail(l_max);
    while tail_bound > opts.abs_tol.max(opts.rel_tol * value.abs()) && value > 0.0 {
        let (v, e, n) = integrate_adaptive(
            integrand,
            &[l_max, 2.0 * l_max],
            opts.rel_tol,
            opts.abs_tol.max(opts.rel_tol * value.abs()),
            opts.max_intervals,
        )?;
        value += v;
        error += e;
        evaluations += n;
        l_max *= 2.0;
        tail_bound = tail(l_max);
    }

    Ok(GainEstimate {
        value,
        error_bound: error,
        tail_bound,
        l_max,
        evaluations,
    })
}

/// Gain in the canonical geometry: receiver at `(0, r)` and beam elevation `beta`.
pub fn link_gain_standard(
    r: f64,
    beta: f64,
    atmos: &AtmosphereParams,
    pf: &PhaseFunctionParams,
    aperture_area: f64,
    opts: &QuadratureOptions,
) -> Result<GainEstimate> {
    link_gain_direct(
        ReceiverPos::new(0.0, r),
        beta,
        atmos,
        pf,
        aperture_area,
        opts,
    )
}
