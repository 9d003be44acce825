//! Precomputed library of canonical link gains `L(0, r, β)`.
//!
//! Any narrow-beam gain `L(x, y, α)` is recovered from the library by reducing
//! the geometry to its standard form and interpolating:
//! `L(x, y, α) = L(0, r, β) · sin α / sin β`.
//!
//! # File format
//!
//! Tables persist as little-endian `UVGT` files:
//!
//! ```text
//! "UVGT" | u32 version | u32 Nr | u32 Nα | Nr×f64 r | Nα×f64 α
//!        | Nr·Nα×f64 values (row-major over r) | u32 len | metadata JSON | u32 CRC32
//! ```
//!
//! The trailing CRC32 covers every preceding byte.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atmosphere::{AtmosphereParams, PhaseFunctionParams};
use crate::error::{Axis, Error, Result};
use crate::geometry::{reduce_to_standard, ReceiverPos};
use crate::quadrature::{link_gain_standard, QuadratureOptions, R_MIN};

pub const MAGIC: &[u8; 4] = b"UVGT";
pub const FORMAT_VERSION: u32 = 1;

/// Elevation nodes with `sin α` below this hold the NaN sentinel.
const SIN_EPS: f64 = 1e-9;

/// Provenance recorded with every table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildInfo {
    pub profile: String,
    /// Seconds since the Unix epoch; supplied by the caller so builds can be reproducible.
    pub built_unix: u64,
    pub format_version: u32,
    pub generator: String,
}

impl BuildInfo {
    pub fn new(profile: impl Into<String>, built_unix: u64) -> Self {
        Self {
            profile: profile.into(),
            built_unix,
            format_version: FORMAT_VERSION,
            generator: concat!("uvscatter ", env!("CARGO_PKG_VERSION")).to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub atmosphere: AtmosphereParams,
    pub phase: PhaseFunctionParams,
    pub aperture_area: f64,
    pub quadrature: QuadratureOptions,
    pub build: BuildInfo,
}

/// How queries between nodes are blended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Bilinear on `log L`, falling back to linear when a corner is zero.
    #[default]
    LogBilinear,
    /// Plain bilinear on `L`.
    Bilinear,
}

/// Grid presets.
pub mod grids {
    use super::PI;

    /// `r = 0, 1, …, 1000` m.
    pub fn full_r() -> Vec<f64> {
        (0..=1000).map(f64::from).collect()
    }

    /// `α = π·j/200` for `j = 1..=200`.
    pub fn full_alpha() -> Vec<f64> {
        (1..=200).map(|j| PI * f64::from(j) / 200.0).collect()
    }

    /// `r = 1, 6, …, 1001` m.
    pub fn desk_r() -> Vec<f64> {
        (0..=200).map(|i| 1.0 + 5.0 * f64::from(i)).collect()
    }

    /// `α = π·j/100` for `j = 1..=100`.
    pub fn desk_alpha() -> Vec<f64> {
        (1..=100).map(|j| PI * f64::from(j) / 100.0).collect()
    }

    /// `start, start + step, …` up to and including `stop` (within half a step).
    pub fn stepped(start: f64, step: f64, stop: f64) -> Vec<f64> {
        if !(step > 0.0) || stop < start {
            return Vec::new();
        }
        let n = ((stop - start) / step + 0.5).floor() as usize;
        (0..=n).map(|i| start + i as f64 * step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    r_grid: Vec<f64>,
    alpha_grid: Vec<f64>,
    values: Vec<f64>,
    meta: TableMeta,
    mode: Interpolation,
}

fn check_grid(name: &str, grid: &[f64]) -> std::result::Result<(), String> {
    if grid.is_empty() {
        return Err(format!("{name} grid is empty"));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(format!("{name} grid contains non-finite values"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(format!("{name} grid is not strictly ascending"));
    }
    Ok(())
}

fn check_grids(r_grid: &[f64], alpha_grid: &[f64]) -> std::result::Result<(), String> {
    check_grid("r", r_grid)?;
    check_grid("alpha", alpha_grid)?;
    if r_grid[0] < 0.0 {
        return Err("r grid must be non-negative".into());
    }
    if !(alpha_grid[0] > 0.0) || alpha_grid[alpha_grid.len() - 1] > PI {
        return Err("alpha grid must lie in (0, pi]".into());
    }
    Ok(())
}

fn is_sentinel_r(r: f64) -> bool {
    r < R_MIN
}

fn is_sentinel_alpha(alpha: f64) -> bool {
    alpha.sin() < SIN_EPS
}

/// Computes `L(0, rᵢ, αⱼ)` for every node, in parallel over rows.
///
/// Rows with `r < R_MIN` and columns with `sin α ≈ 0` hold NaN.
pub fn build_table(
    r_grid: &[f64],
    alpha_grid: &[f64],
    atmos: &AtmosphereParams,
    pf: &PhaseFunctionParams,
    aperture_area: f64,
    opts: &QuadratureOptions,
    build: BuildInfo,
) -> Result<GainTable> {
    check_grids(r_grid, alpha_grid).map_err(Error::InvalidParameter)?;
    atmos.validate()?;
    pf.validate()?;
    opts.validate()?;

    let rows: Vec<Vec<f64>> = r_grid
        .par_iter()
        .map(|&r| {
            alpha_grid
                .iter()
                .map(|&alpha| {
                    if is_sentinel_r(r) || is_sentinel_alpha(alpha) {
                        return Ok(f64::NAN);
                    }
                    link_gain_standard(r, alpha, atmos, pf, aperture_area, opts)
                        .map(|g| g.value)
                        .map_err(|e| Error::BuildFailure {
                            r,
                            alpha,
                            source: Box::new(e),
                        })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(GainTable {
        r_grid: r_grid.to_vec(),
        alpha_grid: alpha_grid.to_vec(),
        values: rows.concat(),
        meta: TableMeta {
            atmosphere: *atmos,
            phase: *pf,
            aperture_area,
            quadrature: *opts,
            build,
        },
        mode: Interpolation::default(),
    })
}

fn lerp(a: f64, b: f64, t: f64, log: bool) -> f64 {
    if t == 0.0 || a == b {
        a
    } else if t == 1.0 {
        b
    } else if log {
        (a.ln() * (1.0 - t) + b.ln() * t).exp()
    } else {
        a * (1.0 - t) + b * t
    }
}

/// Index of the cell containing `v` and the fractional position inside it.
fn locate(grid: &[f64], v: f64) -> (usize, f64) {
    if grid.len() == 1 {
        return (0, 0.0);
    }
    let i = grid
        .partition_point(|&g| g <= v)
        .saturating_sub(1)
        .min(grid.len() - 2);
    let t = ((v - grid[i]) / (grid[i + 1] - grid[i])).clamp(0.0, 1.0);
    (i, t)
}

impl GainTable {
    /// Assembles a table from parts, checking shapes and value invariants.
    pub fn from_parts(
        r_grid: Vec<f64>,
        alpha_grid: Vec<f64>,
        values: Vec<f64>,
        meta: TableMeta,
    ) -> Result<Self> {
        check_grids(&r_grid, &alpha_grid).map_err(Error::InvalidParameter)?;
        if values.len() != r_grid.len() * alpha_grid.len() {
            return Err(Error::InvalidParameter(format!(
                "values has {} entries, expected {}",
                values.len(),
                r_grid.len() * alpha_grid.len()
            )));
        }
        if values
            .iter()
            .any(|v| !v.is_nan() && !(*v >= 0.0 && v.is_finite()))
        {
            return Err(Error::InvalidParameter(
                "table values must be finite and >= 0".into(),
            ));
        }
        Ok(Self {
            r_grid,
            alpha_grid,
            values,
            meta,
            mode: Interpolation::default(),
        })
    }

    pub fn with_interpolation(mut self, mode: Interpolation) -> Self {
        self.mode = mode;
        self
    }

    pub fn interpolation(&self) -> Interpolation {
        self.mode
    }

    pub fn r_grid(&self) -> &[f64] {
        &self.r_grid
    }

    pub fn alpha_grid(&self) -> &[f64] {
        &self.alpha_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meta(&self) -> &TableMeta {
        &self.meta
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.r_grid.len(), self.alpha_grid.len())
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.alpha_grid.len() + j]
    }

    /// First and last usable range nodes.
    pub fn r_bounds(&self) -> (f64, f64) {
        let lo = self
            .r_grid
            .iter()
            .copied()
            .find(|&r| !is_sentinel_r(r))
            .unwrap_or(f64::NAN);
        (lo, self.r_grid[self.r_grid.len() - 1])
    }

    /// First and last usable elevation nodes.
    pub fn alpha_bounds(&self) -> (f64, f64) {
        let hi = self
            .alpha_grid
            .iter()
            .rev()
            .copied()
            .find(|&a| !is_sentinel_alpha(a))
            .unwrap_or(f64::NAN);
        (self.alpha_grid[0], hi)
    }

    /// Interpolated canonical gain `L(0, r, β)`.
    ///
    /// Queries between the grid's first node and its first positive node clamp
    /// to the latter.
    pub fn interpolate(&self, r: f64, beta: f64) -> Result<f64> {
        let (r_lo, r_hi) = self.r_bounds();
        let r_min = self.r_grid[0];
        if !(r >= r_min && r <= r_hi) || r_lo.is_nan() {
            return Err(Error::OutOfRange {
                axis: Axis::Range,
                value: r,
                min: r_min,
                max: r_hi,
            });
        }
        let (a_lo, a_hi) = self.alpha_bounds();
        if !(beta >= a_lo && beta <= a_hi) {
            return Err(Error::OutOfRange {
                axis: Axis::Elevation,
                value: beta,
                min: a_lo,
                max: a_hi,
            });
        }
        let r = r.max(r_lo);

        let (i, t) = locate(&self.r_grid, r);
        let (j, u) = locate(&self.alpha_grid, beta);
        let nj = self.alpha_grid.len();
        let at = |ii: usize, jj: usize| self.values[ii * nj + jj];
        let i1 = (i + 1).min(self.r_grid.len() - 1);
        let j1 = (j + 1).min(nj - 1);
        let corners = [at(i, j), at(i, j1), at(i1, j), at(i1, j1)];
        let log = self.mode == Interpolation::LogBilinear && corners.iter().all(|&v| v > 0.0);
        let lower = lerp(corners[0], corners[1], u, log);
        let upper = lerp(corners[2], corners[3], u, log);
        Ok(lerp(lower, upper, t, log))
    }

    /// Narrow-beam gain at `pos` for elevation `alpha`, through the canonical reduction.
    pub fn gain(&self, pos: ReceiverPos, alpha: f64) -> Result<f64> {
        let r = pos.range();
        if !(r >= R_MIN) {
            return Err(Error::TransmitterCollocated { r, r_min: R_MIN });
        }
        let std = reduce_to_standard(pos, alpha)?;
        Ok(self.interpolate(std.r, std.beta)? * std.scale)
    }

    /// Serializes to the UVGT byte layout.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let meta = serde_json::to_vec(&self.meta)?;
        let (nr, na) = self.shape();
        let mut out = Vec::with_capacity(20 + 8 * (nr + na + nr * na) + meta.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(nr as u32).to_le_bytes());
        out.extend_from_slice(&(na as u32).to_le_bytes());
        for v in self
            .r_grid
            .iter()
            .chain(&self.alpha_grid)
            .chain(&self.values)
        {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        Ok(out)
    }

    /// Parses a UVGT byte buffer; no partial table is ever returned.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = Reader { bytes, pos: 0 };
        let magic = rd.take(4, "magic")?;
        if magic != MAGIC {
            return Err(Error::Format {
                offset: 0,
                message: format!("bad magic {magic:?}"),
            });
        }
        let version = rd.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(Error::Format {
                offset: 4,
                message: format!("unsupported version {version}"),
            });
        }
        let nr = rd.u32("r grid length")? as usize;
        let na = rd.u32("alpha grid length")? as usize;
        let n_floats = nr
            .checked_mul(na)
            .and_then(|n| n.checked_add(nr + na))
            .ok_or_else(|| Error::Format {
                offset: 8,
                message: "grid dimensions overflow".into(),
            })?;
        if n_floats.saturating_mul(8) > bytes.len() - rd.pos {
            return Err(Error::Format {
                offset: bytes.len(),
                message: format!(
                    "truncated: {nr}x{na} table needs {} data bytes",
                    n_floats * 8
                ),
            });
        }
        let r_grid = rd.f64s(nr, "r grid")?;
        let alpha_grid = rd.f64s(na, "alpha grid")?;
        let values = rd.f64s(nr * na, "values")?;
        let meta_len = rd.u32("metadata length")? as usize;
        let meta_offset = rd.pos;
        let meta_bytes = rd.take(meta_len, "metadata")?;
        let crc_offset = rd.pos;
        let stored = rd.u32("checksum")?;
        if rd.pos != bytes.len() {
            return Err(Error::Format {
                offset: rd.pos,
                message: format!("{} trailing bytes", bytes.len() - rd.pos),
            });
        }
        let computed = crc32fast::hash(&bytes[..crc_offset]);
        if stored != computed {
            return Err(Error::Corrupt { stored, computed });
        }
        let meta: TableMeta = serde_json::from_slice(meta_bytes).map_err(|e| Error::Format {
            offset: meta_offset,
            message: format!("metadata: {e}"),
        })?;
        Self::from_parts(r_grid, alpha_grid, values, meta).map_err(|e| Error::Format {
            offset: 16,
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// CRC32 of the little-endian values block, independent of metadata.
    pub fn values_checksum(&self) -> u32 {
        let mut h = crc32fast::Hasher::new();
        for v in &self.values {
            h.update(&v.to_le_bytes());
        }
        h.finalize()
    }
}

/// Narrow-beam gain from the table: `interpolate(r, β) · sin α / sin β`.
pub fn gain_via_table(table: &GainTable, pos: ReceiverPos, alpha: f64) -> Result<f64> {
    table.gain(pos, alpha)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Format {
                offset: self.pos,
                message: format!("truncated while reading {what}"),
            }),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let b = self.take(n * 8, what)?;
        Ok(b.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}
