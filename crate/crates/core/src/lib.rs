//! Single-scatter non-line-of-sight ultraviolet channel engine.
//!
//! The pipeline runs bottom-up:
//!
//! - [`atmosphere`]: coefficients and the Rayleigh/Mie phase function
//! - [`geometry`]: scattering geometry, canonical reduction, beam sampling
//! - [`quadrature`]: direct 1D link-gain integral for a narrow beam
//! - [`gaintable`]: precomputed `L(0, r, β)` library with interpolation and the UVGT file format
//! - [`led`]: Monte Carlo averaging over a wide emission cone
//! - [`field`]: 2D gain maps and iso-gain contour extraction
//! - [`ellipse`]: elliptic fits of contours and their characteristics

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atmosphere;
pub mod ellipse;
pub mod error;
pub mod field;
pub mod gaintable;
pub mod geometry;
pub mod led;
pub mod quadrature;

pub use atmosphere::{AtmosphereParams, CoefficientUnit, PhaseFunctionParams, Profile};
pub use ellipse::{EllipseCharacteristics, EllipseFit};
pub use error::{Error, Result};
pub use field::{Contour, FieldGrid, Region};
pub use gaintable::GainTable;
pub use geometry::{BeamDirection, ReceiverPos, StandardForm};
pub use led::{LedGain, SourceSpec};
pub use quadrature::{GainEstimate, QuadratureOptions};
