//! Axis-aligned ellipse fits for iso-gain contours.
//!
//! The model is `x²/a² + (y − y₀)²/b² = 1` with the center on the Y axis.
//! Rearranged, `x² = k₁ + k₂·y + k₃·y²` is linear in
//! `k = [a²(1 − y₀²/b²), 2a²y₀/b², −a²/b²]`, so the fit is an ordinary least
//! squares problem on a three-column Vandermonde matrix in `y`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative excess of `a` over `b` still treated as a circle by [`characteristics`].
pub const CIRCULAR_TOLERANCE: f64 = 1e-2;

/// Smallest accepted ratio of singular values of the scaled design matrix.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseFit {
    pub y0: f64,
    /// Semi-axis along X.
    pub a: f64,
    /// Semi-axis along Y.
    pub b: f64,
    /// Root-mean-square of `k₁ + k₂yᵢ + k₃yᵢ² − xᵢ²` (m²).
    pub rms_residual: f64,
}

impl EllipseFit {
    /// Regression coefficients `[k₁, k₂, k₃]` in the original `y` coordinate.
    pub fn coefficients(&self) -> [f64; 3] {
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        [
            a2 * (1.0 - self.y0 * self.y0 / b2),
            2.0 * a2 * self.y0 / b2,
            -a2 / b2,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseCharacteristics {
    pub eccentricity: f64,
    pub left_focus: (f64, f64),
    pub right_focus: (f64, f64),
    pub left_endpoint: (f64, f64),
    pub right_endpoint: (f64, f64),
}

/// Serialized form of a fit together with its derived characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub y0: f64,
    pub a: f64,
    pub b: f64,
    pub rms_residual: f64,
    pub eccentricity: f64,
    pub left_focus: (f64, f64),
    pub endpoints: Endpoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoints {
    pub left: (f64, f64),
    pub right: (f64, f64),
}

impl FitReport {
    pub fn new(fit: &EllipseFit, ch: &EllipseCharacteristics) -> Self {
        Self {
            y0: fit.y0,
            a: fit.a,
            b: fit.b,
            rms_residual: fit.rms_residual,
            eccentricity: ch.eccentricity,
            left_focus: ch.left_focus,
            endpoints: Endpoints {
                left: ch.left_endpoint,
                right: ch.right_endpoint,
            },
        }
    }
}

/// Least-squares ellipse through `points`, centered on the Y axis.
pub fn fit_ellipse(points: &[(f64, f64)]) -> Result<EllipseFit> {
    let m = points.len();
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::DegenerateData("non-finite point".into()));
    }
    let mut ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    if ys.len() < 3 {
        return Err(Error::DegenerateData(format!(
            "need at least 3 distinct y values, got {}",
            ys.len()
        )));
    }
    if points.iter().all(|p| p.0 == 0.0) {
        return Err(Error::DegenerateData("all x values are zero".into()));
    }

    // center and scale y for conditioning; undone below
    let mean = points.iter().map(|p| p.1).sum::<f64>() / m as f64;
    let scale = (points.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / m as f64).sqrt();
    let design = DMatrix::from_fn(m, 3, |i, j| {
        let u = (points[i].1 - mean) / scale;
        u.powi(j as i32)
    });
    let rhs = DVector::from_iterator(m, points.iter().map(|p| p.0 * p.0));

    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > RANK_TOL * smax) {
        return Err(Error::DegenerateData("rank-deficient design matrix".into()));
    }
    let c = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::DegenerateData(e.to_string()))?;
    let (c1, c2, c3) = (c[0], c[1], c[2]);

    if !(c3 < 0.0) {
        return Err(Error::NonElliptic(format!(
            "quadratic coefficient {c3} is not negative"
        )));
    }
    let u0 = -c2 / (2.0 * c3);
    let a2 = c1 - c3 * u0 * u0;
    if !(a2 > 0.0) {
        return Err(Error::NonElliptic(format!("a² = {a2} is not positive")));
    }
    let k3 = c3 / (scale * scale);
    let b2 = -a2 / k3;
    let residual = &design * &c - &rhs;
    let rms_residual = (residual.norm_squared() / m as f64).sqrt();

    Ok(EllipseFit {
        y0: mean + scale * u0,
        a: a2.sqrt(),
        b: b2.sqrt(),
        rms_residual,
    })
}

/// Eccentricity, foci and Y-axis endpoints of a fit whose major axis lies along Y.
///
/// Fits with `a` exceeding `b` by less than [`CIRCULAR_TOLERANCE`] are treated
/// as circles (`e = 0`, foci at the center).
pub fn characteristics(fit: &EllipseFit) -> Result<EllipseCharacteristics> {
    if !(fit.a > 0.0 && fit.b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "semi-axes must be positive, got a = {}, b = {}",
            fit.a, fit.b
        )));
    }
    if fit.a > fit.b * (1.0 + CIRCULAR_TOLERANCE) {
        return Err(Error::AxisOrientation { a: fit.a, b: fit.b });
    }
    let c = (fit.b * fit.b - fit.a * fit.a).max(0.0).sqrt();
    Ok(EllipseCharacteristics {
        eccentricity: c / fit.b,
        left_focus: (0.0, fit.y0 - c),
        right_focus: (0.0, fit.y0 + c),
        left_endpoint: (0.0, fit.y0 - fit.b),
        right_endpoint: (0.0, fit.y0 + fit.b),
    })
}

/// Points on the ellipse, for plotting.
pub fn sample_ellipse(fit: &EllipseFit, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            (fit.a * t.cos(), fit.y0 + fit.b * t.sin())
        })
        .collect()
}
