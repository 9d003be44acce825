//! Wide-beam (LED) link gain by averaging table-backed narrow-beam gains over
//! uniformly sampled emission directions inside the divergence cone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaintable::GainTable;
use crate::geometry::{sample_beam_direction, transform_receiver, ReceiverPos};

/// Default number of sampled beams per query.
pub const DEFAULT_BEAMS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    /// Beam-center elevation (rad).
    pub alpha: f64,
    /// Full divergence angle (rad); zero for a laser.
    pub phi_d: f64,
    /// Receiver aperture area (m²).
    pub aperture_area: f64,
    pub n_beams: usize,
    pub seed: u64,
}

impl SourceSpec {
    pub fn laser(alpha: f64) -> Self {
        Self {
            alpha,
            phi_d: 0.0,
            aperture_area: 1.0,
            n_beams: DEFAULT_BEAMS,
            seed: 0,
        }
    }

    pub fn led(alpha: f64, phi_d: f64, n_beams: usize, seed: u64) -> Self {
        Self {
            alpha,
            phi_d,
            aperture_area: 1.0,
            n_beams,
            seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!(
                "elevation must lie in (0, pi/2], got {}",
                self.alpha
            )));
        }
        if !(self.phi_d >= 0.0 && self.phi_d < std::f64::consts::PI) {
            return Err(Error::InvalidParameter(format!(
                "divergence must lie in [0, pi), got {}",
                self.phi_d
            )));
        }
        if !(self.aperture_area > 0.0 && self.aperture_area.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "aperture area must be positive, got {}",
                self.aperture_area
            )));
        }
        if self.n_beams == 0 {
            return Err(Error::InvalidParameter("n_beams must be at least 1".into()));
        }
        Ok(())
    }
}

/// Monte Carlo estimate of the LED gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedGain {
    pub mean: f64,
    /// Standard error of the mean; zero when every sample is identical or `N = 1`.
    pub std_error: f64,
    pub n_beams: usize,
    /// Beams that left below the horizon and contributed zero.
    pub below_horizon: usize,
    /// Beams whose transformed receiver fell inside `R_MIN`; they contribute zero.
    pub collocated: usize,
}

/// SplitMix64 finalizer; decorrelates per-pixel seeds from a global seed.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Averages narrow-beam gains over `src.n_beams` directions drawn from a
/// generator seeded with `src.seed`.
pub fn led_gain(pos: ReceiverPos, src: &SourceSpec, table: &GainTable) -> Result<LedGain> {
    src.validate()?;
    let area_scale = src.aperture_area / table.meta().aperture_area;

    // every draw is the beam center
    if src.phi_d == 0.0 {
        let g = match table.gain(pos, src.alpha) {
            Ok(g) => g * area_scale,
            Err(Error::TransmitterCollocated { .. }) => {
                return Ok(LedGain {
                    mean: 0.0,
                    std_error: 0.0,
                    n_beams: src.n_beams,
                    below_horizon: 0,
                    collocated: src.n_beams,
                })
            }
            Err(e) => {
                return Err(Error::BeamOutOfRange {
                    beam: 0,
                    source: Box::new(e),
                })
            }
        };
        return Ok(LedGain {
            mean: g,
            std_error: 0.0,
            n_beams: src.n_beams,
            below_horizon: 0,
            collocated: 0,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(src.seed);
    let mut below_horizon = 0;
    let mut collocated = 0;
    // Welford accumulation
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 0..src.n_beams {
        let dir = sample_beam_direction(src.alpha, src.phi_d, &mut rng);
        let sample = match transform_receiver(pos, dir) {
            Err(Error::BelowHorizon(_)) => {
                below_horizon += 1;
                0.0
            }
            Err(e) => return Err(e),
            Ok(t) => match table.gain(t.pos, t.alpha) {
                Ok(g) => g * area_scale,
                Err(Error::TransmitterCollocated { .. }) => {
                    collocated += 1;
                    0.0
                }
                Err(e) => {
                    return Err(Error::BeamOutOfRange {
                        beam: k,
                        source: Box::new(e),
                    })
                }
            },
        };
        let n = (k + 1) as f64;
        let delta = sample - mean;
        mean += delta / n;
        m2 += delta * (sample - mean);
    }
    let n = src.n_beams as f64;
    let std_error = if src.n_beams > 1 {
        (m2 / (n - 1.0)).max(0.0).sqrt() / n.sqrt()
    } else {
        0.0
    };
    Ok(LedGain {
        mean,
        std_error,
        n_beams: src.n_beams,
        below_horizon,
        collocated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_seed_spreads_neighbouring_indices() {
        let a = mix_seed(42, 0);
        let b = mix_seed(42, 1);
        assert_ne!(a, b);
        assert!((a ^ b).count_ones() > 16);
        assert_eq!(mix_seed(42, 7), mix_seed(42, 7));
        assert_ne!(mix_seed(1, 7), mix_seed(2, 7));
    }

    #[test]
    fn source_validation() {
        assert!(SourceSpec::laser(0.5).validate().is_ok());
        assert!(SourceSpec::laser(0.0).validate().is_err());
        assert!(SourceSpec::laser(1.6).validate().is_err());
        assert!(SourceSpec::led(0.5, std::f64::consts::PI, 10, 0)
            .validate()
            .is_err());
        assert!(SourceSpec::led(0.5, 0.3, 0, 0).validate().is_err());
    }
}
