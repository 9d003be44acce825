//! Ground-plane link-gain maps and iso-gain contours.
//!
//! Contours are traced with marching squares on `log₁₀(gain)`, so crossing
//! points on cell edges are placed by interpolating the logarithm. Saddle
//! cells are disambiguated by comparing the mean of the four corner values
//! against the level.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaintable::GainTable;
use crate::geometry::ReceiverPos;
use crate::led::{led_gain, mix_seed, SourceSpec};

/// Rectangular ground region in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn square(half_width: f64) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            y_min: -half_width,
            y_max: half_width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !ok || !(self.x_min < self.x_max) || !(self.y_min < self.y_max) {
            return Err(Error::InvalidParameter(format!(
                "region bounds out of order: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Identifies the table a field was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSummary {
    pub profile: String,
    pub shape: (usize, usize),
    pub values_crc32: u32,
    pub aperture_area: f64,
}

impl TableSummary {
    pub fn of(table: &GainTable) -> Self {
        Self {
            profile: table.meta().build.profile.clone(),
            shape: table.shape(),
            values_crc32: table.values_checksum(),
            aperture_area: table.meta().aperture_area,
        }
    }
}

/// Sampled gains over a regular grid; `gains[i * nx + j]` sits at `(x_axis[j], y_axis[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub x_axis: Vec<f64>,
    pub y_axis: Vec<f64>,
    pub gains: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub source: Option<SourceSpec>,
    pub table: Option<TableSummary>,
    /// Pixels left as NaN (collocated with the transmitter or beyond table reach).
    pub masked: usize,
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|k| if k == n - 1 { hi } else { lo + k as f64 * step })
        .collect()
}

impl FieldGrid {
    /// Wraps precomputed values, e.g. analytic test fields.
    pub fn from_values(x_axis: Vec<f64>, y_axis: Vec<f64>, gains: Vec<f64>) -> Result<Self> {
        if x_axis.len() < 2 || y_axis.len() < 2 || gains.len() != x_axis.len() * y_axis.len() {
            return Err(Error::InvalidParameter(format!(
                "field of {} values does not match {}x{} axes",
                gains.len(),
                x_axis.len(),
                y_axis.len()
            )));
        }
        let masked = gains.iter().filter(|g| g.is_nan()).count();
        let n = gains.len();
        Ok(Self {
            x_axis,
            y_axis,
            gains,
            std_errors: vec![0.0; n],
            source: None,
            table: None,
            masked,
        })
    }

    pub fn nx(&self) -> usize {
        self.x_axis.len()
    }

    pub fn ny(&self) -> usize {
        self.y_axis.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.gains[i * self.nx() + j]
    }

    /// Finite minimum and maximum gain.
    pub fn value_range(&self) -> (f64, f64) {
        self.gains
            .iter()
            .filter(|g| g.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &g| {
                (lo.min(g), hi.max(g))
            })
    }

    /// Writes the field as CSV: a header row of x values, then one row per y.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "x")?;
        for x in &self.x_axis {
            write!(w, ",{x}")?;
        }
        writeln!(w)?;
        for (i, y) in self.y_axis.iter().enumerate() {
            write!(w, "{y}")?;
            for g in &self.gains[i * self.nx()..(i + 1) * self.nx()] {
                if g.is_nan() {
                    write!(w, ",")?;
                } else {
                    write!(w, ",{g:e}")?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Evaluates the LED (or laser, when `phi_d = 0`) gain on an `nx × ny` grid.
///
/// Each pixel draws from its own generator seeded by mixing `src.seed` with
/// the pixel index, so results do not depend on evaluation order.
pub fn compute_field(
    region: &Region,
    nx: usize,
    ny: usize,
    src: &SourceSpec,
    table: &GainTable,
) -> Result<FieldGrid> {
    region.validate()?;
    src.validate()?;
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidParameter(format!(
            "resolution must be at least 2 per axis, got {nx}x{ny}"
        )));
    }
    let x_axis = axis(region.x_min, region.x_max, nx);
    let y_axis = axis(region.y_min, region.y_max, ny);

    let pixels: Vec<(f64, f64)> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / nx, idx % nx);
            let pixel_src = src.with_seed(mix_seed(src.seed, idx as u64));
            let pos = ReceiverPos::new(x_axis[j], y_axis[i]);
            match led_gain(pos, &pixel_src, table) {
                Ok(g) if g.collocated == g.n_beams => (f64::NAN, f64::NAN),
                Ok(g) => (g.mean, g.std_error),
                Err(_) => (f64::NAN, f64::NAN),
            }
        })
        .collect();
    let (gains, std_errors): (Vec<f64>, Vec<f64>) = pixels.into_iter().unzip();
    let masked = gains.iter().filter(|g| g.is_nan()).count();
    Ok(FieldGrid {
        x_axis,
        y_axis,
        gains,
        std_errors,
        source: Some(*src),
        table: Some(TableSummary::of(table)),
        masked,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<(f64, f64)>,
    /// True when the last point connects back to the first.
    pub closed: bool,
}

impl Polyline {
    /// Signed shoelace area (positive for counter-clockwise loops).
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        if n < 3 {
            return 0.0;
        }
        let mut acc = 0.0;
        for k in 0..n {
            let (x0, y0) = self.points[k];
            let (x1, y1) = self.points[(k + 1) % n];
            acc += x0 * y1 - x1 * y0;
        }
        0.5 * acc
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Minimum and maximum `y` over the points.
    pub fn y_extent(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| {
                (lo.min(y), hi.max(y))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub level: f64,
    pub polylines: Vec<Polyline>,
}

impl Contour {
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.polylines.iter().flat_map(|p| p.points.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.polylines.iter().map(|p| p.points.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The closed loop enclosing the largest area, if any.
    pub fn main_loop(&self) -> Option<&Polyline> {
        self.polylines
            .iter()
            .filter(|p| p.closed)
            .max_by(|a, b| a.area().total_cmp(&b.area()))
    }

    /// Writes `x,y` rows; polylines are separated by a blank line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y")?;
        for (k, line) in self.polylines.iter().enumerate() {
            if k > 0 {
                writeln!(w)?;
            }
            for (x, y) in &line.points {
                writeln!(w, "{x},{y}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    /// Between nodes (i, j) and (i, j + 1).
    H(usize, usize),
    /// Between nodes (i, j) and (i + 1, j).
    V(usize, usize),
}

/// Traces the iso-gain contour at `level` over `field`.
pub fn extract_contour(field: &FieldGrid, level: f64) -> Result<Contour> {
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "contour level must be positive, got {level}"
        )));
    }
    let (min, max) = field.value_range();
    if !(min < level && max > level) {
        return Err(Error::EmptyContour { level, min, max });
    }

    let (nx, ny) = (field.nx(), field.ny());
    let log_level = level.log10();
    // signed log distance from the level; zero gains map far below it
    let s: Vec<f64> = field
        .gains
        .iter()
        .map(|&g| {
            if g.is_nan() {
                f64::NAN
            } else {
                g.max(1e-300).log10() - log_level
            }
        })
        .collect();
    let sv = |i: usize, j: usize| s[i * nx + j];
    let above = |v: f64| v > 0.0;

    let edge_point = |e: Edge| -> (f64, f64) {
        let (a, b, p0, p1) = match e {
            Edge::H(i, j) => (
                sv(i, j),
                sv(i, j + 1),
                (field.x_axis[j], field.y_axis[i]),
                (field.x_axis[j + 1], field.y_axis[i]),
            ),
            Edge::V(i, j) => (
                sv(i, j),
                sv(i + 1, j),
                (field.x_axis[j], field.y_axis[i]),
                (field.x_axis[j], field.y_axis[i + 1]),
            ),
        };
        let t = a / (a - b);
        (p0.0 + t * (p1.0 - p0.0), p0.1 + t * (p1.1 - p0.1))
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..ny - 1 {
        for j in 0..nx - 1 {
            // corners: bottom-left, bottom-right, top-right, top-left
            let c = [sv(i, j), sv(i, j + 1), sv(i + 1, j + 1), sv(i + 1, j)];
            if c.iter().any(|v| v.is_nan()) {
                continue;
            }
            // edges: bottom, right, top, left; edge k joins corners k and k+1
            let edges = [
                Edge::H(i, j),
                Edge::V(i, j + 1),
                Edge::H(i + 1, j),
                Edge::V(i, j),
            ];
            let cls = c.map(above);
            let crossing: Vec<usize> = (0..4).filter(|&k| cls[k] != cls[(k + 1) % 4]).collect();
            match crossing.len() {
                0 => {}
                2 => segments.push((edges[crossing[0]], edges[crossing[1]])),
                4 => {
                    let center = above(c.iter().sum::<f64>() / 4.0);
                    // isolate the corners whose class differs from the center
                    for k in 0..4 {
                        if cls[k] != center {
                            segments.push((edges[(k + 3) % 4], edges[k]));
                        }
                    }
                }
                _ => {
                    unreachable!("a closed cell boundary crosses the level an even number of times")
                }
            }
        }
    }

    Ok(Contour {
        level,
        polylines: chain(&segments, edge_point),
    })
}

fn chain<F: Fn(Edge) -> (f64, f64)>(segments: &[(Edge, Edge)], point: F) -> Vec<Polyline> {
    let mut adjacency: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(k);
        adjacency.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];

    let walk = |start_seg: usize, start_edge: Edge, used: &mut Vec<bool>| -> (Vec<Edge>, bool) {
        let mut path = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            if next == start_edge {
                return (path, true);
            }
            path.push(next);
            at = next;
            match adjacency[&next].iter().copied().find(|&s| !used[s]) {
                Some(s) => seg = s,
                None => return (path, false),
            }
        }
    };

    let mut lines = Vec::new();
    // open polylines start at edges touched by a single segment
    let mut open_starts: Vec<Edge> = adjacency
        .iter()
        .filter(|(_, segs)| segs.len() == 1)
        .map(|(e, _)| *e)
        .collect();
    open_starts.sort_by_key(edge_key);
    for e in open_starts {
        let seg = adjacency[&e][0];
        if used[seg] {
            continue;
        }
        let (path, closed) = walk(seg, e, &mut used);
        lines.push((path, closed));
    }
    for k in 0..segments.len() {
        if !used[k] {
            let start = segments[k].0;
            lines.push(walk(k, start, &mut used));
        }
    }

    let mut polylines: Vec<Polyline> = lines
        .into_iter()
        .map(|(path, closed)| {
            let mut pl = Polyline {
                points: path.into_iter().map(&point).collect(),
                closed,
            };
            if closed && pl.signed_area() < 0.0 {
                pl.points.reverse();
            }
            pl
        })
        .collect();
    polylines.sort_by_key(|p| std::cmp::Reverse(p.points.len()));
    polylines
}

fn edge_key(e: &Edge) -> (usize, usize, u8) {
    match *e {
        Edge::H(i, j) => (i, j, 0),
        Edge::V(i, j) => (i, j, 1),
    }
}
