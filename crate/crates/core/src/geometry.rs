//! Scattering geometry for a transmitter at the origin and a receiver on the
//! ground plane.
//!
//! The beam leaves the origin along `(0, cos α, sin α)`; a scattering point at
//! path length `l` sits at `(0, l cos α, l sin α)`. Every narrow-beam gain can be
//! reduced to a receiver on the +Y axis at the same ground range, with an
//! adjusted elevation `β` and a multiplicative factor `sin α / sin β`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this `√(1 - zz²)` a beam is treated as vertical.
pub const VERTICAL_EPS: f64 = 1e-9;

/// Ground position of the receiver; the transmitter sits at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverPos {
    pub x: f64,
    pub y: f64,
}

impl ReceiverPos {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Ground range from the transmitter.
    pub fn range(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn mirrored(&self) -> Self {
        Self::new(-self.x, self.y)
    }
}

/// Unit emission direction `(zx, zy, zz)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamDirection {
    pub zx: f64,
    pub zy: f64,
    pub zz: f64,
}

impl BeamDirection {
    /// Beam center for elevation `alpha`.
    pub fn center(alpha: f64) -> Self {
        Self {
            zx: 0.0,
            zy: alpha.cos(),
            zz: alpha.sin(),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.zx * self.zx + self.zy * self.zy + self.zz * self.zz).sqrt()
    }
}

/// Canonical geometry `L(0, r, β)` plus the factor that maps it back.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardForm {
    pub r: f64,
    pub beta: f64,
    /// `sin α / sin β`.
    pub scale: f64,
}

/// Receiver position and elevation after rotating the ground frame so that
/// the beam azimuth lies along +Y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedReceiver {
    pub pos: ReceiverPos,
    pub alpha: f64,
}

/// Distance `l′` from the scattering point at path length `l` to the receiver.
pub fn receiver_distance(pos: ReceiverPos, alpha: f64, l: f64) -> f64 {
    let sq = pos.x * pos.x + pos.y * pos.y + l * l - 2.0 * pos.y * l * alpha.cos();
    sq.max(0.0).sqrt()
}

/// Cosine of the scattering angle, `(y cos α − l) / l′`, clamped to `[-1, 1]`.
pub fn scattering_cosine(pos: ReceiverPos, alpha: f64, l: f64) -> Result<f64> {
    let lp = receiver_distance(pos, alpha, l);
    if lp <= 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    Ok(((pos.y * alpha.cos() - l) / lp).clamp(-1.0, 1.0))
}

/// Solid angle `A_r · l sin α / l′³` subtended by a horizontal aperture.
pub fn solid_angle(pos: ReceiverPos, alpha: f64, l: f64, aperture_area: f64) -> Result<f64> {
    let lp = receiver_distance(pos, alpha, l);
    if lp <= 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    Ok(aperture_area * l * alpha.sin() / (lp * lp * lp))
}

/// Azimuth of the receiver measured from +Y toward +X.
pub fn azimuth(pos: ReceiverPos) -> f64 {
    pos.x.atan2(pos.y)
}

/// Maps `(x, y, α)` to the canonical on-axis geometry.
///
/// `cos β = (y / r) cos α`, so receivers behind the transmitter (`y < 0`)
/// land at `β > π/2`.
pub fn reduce_to_standard(pos: ReceiverPos, alpha: f64) -> Result<StandardForm> {
    let r = pos.range();
    if !(r > 0.0) {
        return Err(Error::TransmitterCollocated { r, r_min: 0.0 });
    }
    let cos_beta = (pos.y / r * alpha.cos()).clamp(-1.0, 1.0);
    let beta = cos_beta.acos();
    let sin_beta = (1.0 - cos_beta * cos_beta).max(0.0).sqrt();
    if sin_beta <= 0.0 {
        return Err(Error::DegenerateAxis);
    }
    // on-axis receivers keep β = α bit-for-bit; a vertical beam sees every
    // receiver at β = π/2 (cos α is not exactly zero in floating point)
    if alpha == FRAC_PI_2 {
        return Ok(StandardForm {
            r,
            beta: FRAC_PI_2,
            scale: 1.0,
        });
    }
    if pos.x == 0.0 && pos.y > 0.0 {
        return Ok(StandardForm {
            r,
            beta: alpha,
            scale: 1.0,
        });
    }
    Ok(StandardForm {
        r,
        beta,
        scale: alpha.sin() / sin_beta,
    })
}

/// Draws an emission direction uniformly over the cone of full angle `phi_d`
/// around the beam center at elevation `alpha`.
pub fn sample_beam_direction<R: Rng + ?Sized>(
    alpha: f64,
    phi_d: f64,
    rng: &mut R,
) -> BeamDirection {
    let xi1: f64 = rng.random();
    let xi2: f64 = rng.random();
    beam_direction_from_uniforms(alpha, phi_d, xi1, xi2)
}

/// Deterministic core of [`sample_beam_direction`] for given uniforms `xi1`, `xi2 ∈ [0, 1)`.
pub fn beam_direction_from_uniforms(alpha: f64, phi_d: f64, xi1: f64, xi2: f64) -> BeamDirection {
    let cos_theta = 1.0 - xi1 * (1.0 - (0.5 * phi_d).cos());
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let phi = 2.0 * PI * xi2;
    let (sin_phi, cos_phi) = phi.sin_cos();
    let (sin_a, cos_a) = alpha.sin_cos();
    BeamDirection {
        zx: sin_theta * sin_phi,
        zy: -sin_theta * cos_phi * sin_a + cos_theta * cos_a,
        zz: sin_theta * cos_phi * cos_a + cos_theta * sin_a,
    }
}

/// Rotates the receiver into the frame where the tilted beam's azimuth is +Y.
pub fn transform_receiver(pos: ReceiverPos, dir: BeamDirection) -> Result<TransformedReceiver> {
    if dir.zz <= 0.0 {
        return Err(Error::BelowHorizon(dir.zz));
    }
    let n = (1.0 - dir.zz * dir.zz).max(0.0).sqrt();
    if n < VERTICAL_EPS {
        return Ok(TransformedReceiver {
            pos,
            alpha: FRAC_PI_2,
        });
    }
    // normalize the horizontal component directly so the rotation stays orthonormal
    let h = dir.zx.hypot(dir.zy);
    let (s, c) = (dir.zx / h, dir.zy / h);
    Ok(TransformedReceiver {
        pos: ReceiverPos::new(c * pos.x - s * pos.y, s * pos.x + c * pos.y),
        alpha: dir.zz.min(1.0).asin(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn distance_examples() {
        assert_eq!(
            receiver_distance(ReceiverPos::new(3.0, 4.0), FRAC_PI_2, 0.0),
            5.0
        );
        assert!((receiver_distance(ReceiverPos::new(0.0, 0.0), 0.7, 12.5) - 12.5).abs() < 1e-12);
        assert_eq!(
            receiver_distance(ReceiverPos::new(0.0, 10.0), 0.0, 10.0),
            0.0
        );
    }

    #[test]
    fn cosine_examples() {
        let alpha = 0.6;
        let mu = scattering_cosine(ReceiverPos::new(0.0, 50.0), alpha, 0.0).unwrap();
        assert!((mu - alpha.cos()).abs() < 1e-15);

        let pos = ReceiverPos::new(20.0, 80.0);
        let mu = scattering_cosine(pos, alpha, pos.y * alpha.cos()).unwrap();
        assert!(mu.abs() < 1e-15);

        let mu = scattering_cosine(ReceiverPos::new(0.0, 0.0), FRAC_PI_2, 3.0).unwrap();
        assert_eq!(mu, -1.0);

        assert!(matches!(
            scattering_cosine(ReceiverPos::new(0.0, 10.0), 0.0, 10.0),
            Err(Error::DegenerateGeometry)
        ));
    }

    #[test]
    fn solid_angle_examples() {
        let o = ReceiverPos::new(0.0, 0.0);
        assert!((solid_angle(o, FRAC_PI_2, 2.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(
            solid_angle(ReceiverPos::new(5.0, 5.0), 0.4, 0.0, 1.0).unwrap(),
            0.0
        );
        let p = ReceiverPos::new(30.0, -12.0);
        let one = solid_angle(p, 0.9, 17.0, 1.0).unwrap();
        let two = solid_angle(p, 0.9, 17.0, 2.0).unwrap();
        assert_eq!(two, 2.0 * one);
        assert!(matches!(
            solid_angle(ReceiverPos::new(0.0, 10.0), 0.0, 10.0, 1.0),
            Err(Error::DegenerateGeometry)
        ));
    }

    #[test]
    fn reduction_examples() {
        let s = reduce_to_standard(ReceiverPos::new(-120.0, 35.0), FRAC_PI_2).unwrap();
        assert!((s.beta - FRAC_PI_2).abs() < 1e-15);
        assert!((s.scale - 1.0).abs() < 1e-15);
        assert!(rel(s.r, 125.0) < 1e-15);

        let s = reduce_to_standard(ReceiverPos::new(0.0, 42.0), 0.3).unwrap();
        assert_eq!(s.beta, 0.3);
        assert_eq!(s.scale, 1.0);

        let s = reduce_to_standard(ReceiverPos::new(10.0, 10.0), 60f64.to_radians()).unwrap();
        assert!((s.beta.cos() - 0.353553).abs() < 1e-6);
        assert!((s.beta - 1.20943).abs() < 1e-5);
        assert!((s.scale - 0.92582).abs() < 1e-5);

        assert!(matches!(
            reduce_to_standard(ReceiverPos::new(0.0, 0.0), 0.5),
            Err(Error::TransmitterCollocated { .. })
        ));
        assert!(matches!(
            reduce_to_standard(ReceiverPos::new(0.0, 10.0), 0.0),
            Err(Error::DegenerateAxis)
        ));
    }

    #[test]
    fn behind_transmitter_is_obtuse() {
        let s = reduce_to_standard(ReceiverPos::new(0.0, -50.0), 0.4).unwrap();
        assert!((s.beta - (PI - 0.4)).abs() < 1e-12);
        assert!((s.scale - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beam_center_and_edge() {
        let alpha = 0.5;
        let d = beam_direction_from_uniforms(alpha, 0.6, 0.0, 0.37);
        assert_eq!(d.zx, 0.0);
        assert_eq!(d.zy, alpha.cos());
        assert_eq!(d.zz, alpha.sin());

        let phi_d = 0.6;
        let d = beam_direction_from_uniforms(alpha, phi_d, 1.0 - 1e-15, 0.2);
        let c = BeamDirection::center(alpha);
        let cos_off = d.zx * c.zx + d.zy * c.zy + d.zz * c.zz;
        assert!((cos_off.acos() - phi_d / 2.0).abs() < 1e-6);
    }

    #[test]
    fn sampled_directions_stay_in_cone() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (alpha, phi_d) = (0.7, 1.2);
        let c = BeamDirection::center(alpha);
        for _ in 0..10_000 {
            let d = sample_beam_direction(alpha, phi_d, &mut rng);
            assert!((d.norm() - 1.0).abs() < 1e-12);
            let cos_off = (d.zx * c.zx + d.zy * c.zy + d.zz * c.zz).min(1.0);
            assert!(cos_off.acos() <= phi_d / 2.0 + 1e-12);
        }
    }

    #[test]
    fn zero_divergence_is_center_for_every_seed() {
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = sample_beam_direction(0.9, 0.0, &mut rng);
            assert_eq!(d, BeamDirection::center(0.9));
        }
    }

    #[test]
    fn untilted_beam_transform_is_identity() {
        let pos = ReceiverPos::new(-37.0, 212.0);
        for alpha in [0.1, 0.5, 1.0, 1.5] {
            let t = transform_receiver(pos, BeamDirection::center(alpha)).unwrap();
            assert!((t.pos.x - pos.x).abs() < 1e-12);
            assert!((t.pos.y - pos.y).abs() < 1e-12);
            assert!((t.alpha - alpha).abs() < 1e-12);
        }
    }

    #[test]
    fn vertical_and_below_horizon_branches() {
        let pos = ReceiverPos::new(3.0, -4.0);
        let t = transform_receiver(
            pos,
            BeamDirection {
                zx: 0.0,
                zy: 0.0,
                zz: 1.0,
            },
        )
        .unwrap();
        assert_eq!(t.pos, pos);
        assert_eq!(t.alpha, FRAC_PI_2);
        let below = BeamDirection {
            zx: 0.6,
            zy: 0.8,
            zz: 0.0,
        };
        assert!(matches!(
            transform_receiver(pos, below),
            Err(Error::BelowHorizon(_))
        ));
    }
}
