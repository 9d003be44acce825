//! Run configuration: a JSON file, overridden by command-line flags, resolved
//! into one validated [`RunConfig`] that is written next to every output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uvscatter::gaintable::Interpolation;
use uvscatter::{
    AtmosphereParams, CoefficientUnit, PhaseFunctionParams, Profile, QuadratureOptions, Region,
    SourceSpec,
};

use crate::CommonArgs;

/// Invalid or unreadable configuration; maps to its own exit code.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Coefficients and phase parameters given explicitly in the config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    #[serde(default)]
    pub unit: CoefficientUnit,
    pub k_s_ray: f64,
    pub k_s_mie: f64,
    pub k_a: f64,
    pub g: f64,
    pub f: f64,
    pub gamma_r: f64,
}

impl ProfileSpec {
    fn resolve(&self, name: &str) -> anyhow::Result<Profile> {
        let atmosphere =
            AtmosphereParams::with_unit(self.k_s_ray, self.k_s_mie, self.k_a, self.unit)
                .map_err(|e| bad(format!("profile {name}: {e}")))?;
        let phase = PhaseFunctionParams::new(self.g, self.f, self.gamma_r)
            .map_err(|e| bad(format!("profile {name}: {e}")))?;
        Ok(Profile {
            name: name.to_string(),
            atmosphere,
            phase,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileChoice {
    Named(String),
    Explicit(ProfileSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridChoice {
    /// 201×100 nodes, r = 1..1001 m.
    #[default]
    Desk,
    /// 1001×200 nodes, r = 0..1000 m.
    Full,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceFile {
    pub alpha_deg: Option<f64>,
    pub phi_d_deg: Option<f64>,
    pub aperture_area: Option<f64>,
    pub n_beams: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepFile {
    pub alphas_deg: Option<Vec<f64>>,
    pub phi_ds_deg: Option<Vec<f64>>,
}

/// The config file as written by the user; every key is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub profile: Option<ProfileChoice>,
    pub profiles: BTreeMap<String, ProfileSpec>,
    pub source: SourceFile,
    pub seed: Option<u64>,
    pub table: Option<PathBuf>,
    pub grid: Option<GridChoice>,
    pub interpolation: Option<Interpolation>,
    pub quadrature: Option<QuadratureOptions>,
    pub region: Option<Region>,
    pub resolution: Option<[usize; 2]>,
    pub levels: Option<Vec<f64>>,
    pub output_dir: Option<PathBuf>,
    pub built_unix: Option<u64>,
    pub sweep: SweepFile,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SourceConfig {
    pub alpha_deg: f64,
    pub phi_d_deg: f64,
    pub aperture_area: f64,
    pub n_beams: usize,
}

impl SourceConfig {
    pub fn spec(&self, seed: u64) -> SourceSpec {
        SourceSpec {
            alpha: self.alpha_deg.to_radians(),
            phi_d: self.phi_d_deg.to_radians(),
            aperture_area: self.aperture_area,
            n_beams: self.n_beams,
            seed,
        }
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub profile: Profile,
    pub source: SourceConfig,
    pub seed: u64,
    pub table: PathBuf,
    pub grid: GridChoice,
    pub interpolation: Interpolation,
    pub quadrature: QuadratureOptions,
    pub region: Region,
    pub resolution: [usize; 2],
    pub levels: Vec<f64>,
    pub output_dir: PathBuf,
    pub built_unix: Option<u64>,
    pub alphas_deg: Vec<f64>,
    pub phi_ds_deg: Vec<f64>,
}

pub const DEFAULT_TABLE: &str = "gain_table.uvgt";
pub const DEFAULT_LEVEL: f64 = 1e-7;

/// Tall region that holds the 1e-7 laser contour for every elevation from
/// 10° up while staying inside a 1000 m table.
pub fn sweep_region() -> Region {
    Region {
        x_min: -300.0,
        x_max: 300.0,
        y_min: -200.0,
        y_max: 900.0,
    }
}

fn resolve_profile(
    choice: Option<&ProfileChoice>,
    user: &BTreeMap<String, ProfileSpec>,
) -> anyhow::Result<Profile> {
    match choice {
        None => Ok(Profile::literature_default()),
        Some(ProfileChoice::Explicit(spec)) => spec.resolve("explicit"),
        Some(ProfileChoice::Named(name)) => {
            if let Some(spec) = user.get(name) {
                spec.resolve(name)
            } else {
                Profile::by_name(name).ok_or_else(|| {
                    let mut known: Vec<&str> = user.keys().map(String::as_str).collect();
                    known.push(Profile::LITERATURE_DEFAULT);
                    bad(format!(
                        "unknown profile {name:?}; known: {}",
                        known.join(", ")
                    ))
                })
            }
        }
    }
}

impl RunConfig {
    /// Merges the config file (if any) with flag overrides and validates the result.
    pub fn resolve(
        command: &str,
        file: FileConfig,
        args: &CommonArgs,
        sweep_defaults: bool,
    ) -> anyhow::Result<Self> {
        let profile_choice = args
            .profile
            .clone()
            .map(ProfileChoice::Named)
            .or(file.profile);
        let profile = resolve_profile(profile_choice.as_ref(), &file.profiles)?;

        let source = SourceConfig {
            alpha_deg: args.alpha.or(file.source.alpha_deg).unwrap_or(30.0),
            phi_d_deg: args.phi_d.or(file.source.phi_d_deg).unwrap_or(0.0),
            aperture_area: args.aperture.or(file.source.aperture_area).unwrap_or(1.0),
            n_beams: args
                .beams
                .or(file.source.n_beams)
                .unwrap_or(uvscatter::led::DEFAULT_BEAMS),
        };
        let seed = args.seed.or(file.seed).unwrap_or(0);
        source
            .spec(seed)
            .validate()
            .map_err(|e| bad(format!("source: {e}")))?;

        let region = match args.region.or(file.region) {
            Some(r) => r,
            None if sweep_defaults => sweep_region(),
            None => Region::square(500.0),
        };
        region.validate().map_err(|e| bad(e.to_string()))?;

        let resolution = args.resolution.or(file.resolution).unwrap_or([100, 100]);
        if resolution.iter().any(|&n| n < 2) {
            return Err(bad(format!(
                "resolution must be at least 2 per axis, got {resolution:?}"
            )));
        }

        let levels = args
            .level
            .clone()
            .filter(|l| !l.is_empty())
            .or(file.levels)
            .unwrap_or_else(|| vec![DEFAULT_LEVEL]);
        if levels.is_empty() || levels.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(bad(format!(
                "contour levels must be positive, got {levels:?}"
            )));
        }

        let quadrature = file.quadrature.unwrap_or_default();
        quadrature
            .validate()
            .map_err(|e| bad(format!("quadrature: {e}")))?;

        let alphas_deg = file
            .sweep
            .alphas_deg
            .unwrap_or_else(|| (1..=9).map(|k| 10.0 * k as f64).collect());
        let phi_ds_deg = file
            .sweep
            .phi_ds_deg
            .unwrap_or_else(|| (0..=11).map(|k| 5.0 * k as f64).collect());
        for a in &alphas_deg {
            if !(*a > 0.0 && *a <= 90.0) {
                return Err(bad(format!("sweep elevation {a} deg outside (0, 90]")));
            }
        }
        for p in &phi_ds_deg {
            if !(*p >= 0.0 && *p < 180.0) {
                return Err(bad(format!("sweep divergence {p} deg outside [0, 180)")));
            }
        }

        Ok(Self {
            command: command.to_string(),
            profile,
            source,
            seed,
            table: args
                .table
                .clone()
                .or(file.table)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_TABLE)),
            grid: file.grid.unwrap_or_default(),
            interpolation: file.interpolation.unwrap_or_default(),
            quadrature,
            region,
            resolution,
            levels,
            output_dir: args
                .out
                .clone()
                .or(file.output_dir)
                .unwrap_or_else(|| PathBuf::from("out")),
            built_unix: file.built_unix,
            alphas_deg,
            phi_ds_deg,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Writes `<dir>/<command>_config.json`.
    pub fn write_beside(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        let path = dir.join(format!("{}_config.json", self.command.replace('-', "_")));
        std::fs::write(&path, self.to_json() + "\n")?;
        Ok(path)
    }
}
