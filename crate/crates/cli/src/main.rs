#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uvscatter::Region;

use crate::config::ConfigError;

/// Single-scatter NLOS ultraviolet link gains, coverage maps and contour fits.
#[derive(Debug, Parser)]
#[command(name = "uvscatter", version)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand; each overrides the matching config key.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Named atmosphere/phase profile.
    #[arg(long, global = true)]
    pub profile: Option<String>,
    /// Gain table file.
    #[arg(long, global = true)]
    pub table: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Beam elevation (degrees).
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Full divergence angle (degrees); 0 is a laser.
    #[arg(long = "phi-d", global = true)]
    pub phi_d: Option<f64>,
    /// Receiver aperture area (m²).
    #[arg(long, global = true)]
    pub aperture: Option<f64>,
    /// Sampled beams per LED query.
    #[arg(long, global = true)]
    pub beams: Option<usize>,
    /// Ground region as x_min,x_max,y_min,y_max (m).
    #[arg(long, global = true, value_parser = parse_region)]
    pub region: Option<Region>,
    /// Samples per axis as NX or NX,NY.
    #[arg(long, global = true, value_parser = parse_resolution)]
    pub resolution: Option<[usize; 2]>,
    /// Contour level; repeat for several.
    #[arg(long, global = true)]
    pub level: Option<Vec<f64>>,
    /// Progress messages on stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the canonical gain table and write it as UVGT.
    BuildTable {
        /// 1001×200 grid (r = 0..1000 m, Δα = 0.9°) instead of the 201×100 desk grid.
        #[arg(long)]
        full_grid: bool,
        /// Build timestamp to record (Unix seconds); pin it for byte-identical rebuilds.
        #[arg(long)]
        built_unix: Option<u64>,
        /// Build twice and require identical values.
        #[arg(long)]
        verify: bool,
    },
    /// Print laser and LED gain at one receiver position.
    Gain {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
    },
    /// Compute a gain field; writes field.csv and field.svg.
    Field {
        /// 500×500 samples instead of the configured resolution.
        #[arg(long)]
        full_res: bool,
    },
    /// Extract iso-gain contours and fit ellipses.
    Contour {
        #[arg(long)]
        full_res: bool,
    },
    /// Contour characteristics across elevations and divergence angles.
    Sweep,
}

fn parse_region(s: &str) -> Result<Region, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x_min, x_max, y_min, y_max] => Ok(Region {
            x_min,
            x_max,
            y_min,
            y_max,
        }),
        _ => Err("expected x_min,x_max,y_min,y_max".into()),
    }
}

fn parse_resolution(s: &str) -> Result<[usize; 2], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [n] => Ok([n, n]),
        [nx, ny] => Ok([nx, ny]),
        _ => Err("expected NX or NX,NY".into()),
    }
}

/// Exit codes: 1 I/O or other, 2 usage (clap), 3 config, 4 out of range,
/// 5 numeric failure, 6 empty contour.
fn exit_code(err: &anyhow::Error) -> u8 {
    use uvscatter::Error as E;
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidAtmosphere(_) | E::InvalidParameter(_) => 3,
                E::OutOfRange { .. }
                | E::BeamOutOfRange { .. }
                | E::TransmitterCollocated { .. }
                | E::BelowHorizon(_) => 4,
                E::EmptyContour { .. } => 6,
                E::Io(_) | E::Json(_) | E::Format { .. } | E::Corrupt { .. } => 1,
                _ => 5,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command, &cli.common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
