use thiserror::Error;

/// Which axis of a [`GainTable`](crate::gaintable::GainTable) a query fell outside of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Range,
    Elevation,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::Range => f.write_str("range r"),
            Axis::Elevation => f.write_str("elevation beta"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("scattering cosine {0} outside [-1, 1]")]
    Domain(f64),

    #[error("invalid atmosphere: {0}")]
    InvalidAtmosphere(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate geometry: receiver coincides with the scattering point")]
    DegenerateGeometry,

    #[error("receiver at r = {r} m is collocated with the transmitter (r_min = {r_min} m)")]
    TransmitterCollocated { r: f64, r_min: f64 },

    #[error("degenerate axis: sin(beta) vanishes for this geometry")]
    DegenerateAxis,

    #[error("beam direction is at or below the horizon (zz = {0})")]
    BelowHorizon(f64),

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    QuadratureFailure { estimate: f64, error_bound: f64 },

    #[error("table build failed at r = {r} m, alpha = {alpha} rad")]
    BuildFailure {
        r: f64,
        alpha: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{axis} = {value} outside table range [{min}, {max}]")]
    OutOfRange {
        axis: Axis,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("sampled beam {beam} left the table")]
    BeamOutOfRange {
        beam: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("table format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("table checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Corrupt { stored: u32, computed: u32 },

    #[error("level {level:e} does not cross the field (range {min:e} to {max:e})")]
    EmptyContour { level: f64, min: f64, max: f64 },

    #[error("fitted conic is not an ellipse: {0}")]
    NonElliptic(String),

    #[error("degenerate fit data: {0}")]
    DegenerateData(String),

    #[error("major axis is not along Y (a = {a}, b = {b})")]
    AxisOrientation { a: f64, b: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
