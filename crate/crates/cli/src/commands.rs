use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use serde::Serialize;
use uvscatter::ellipse::{characteristics, fit_ellipse, EllipseCharacteristics, FitReport};
use uvscatter::field::{compute_field, extract_contour, Polyline};
use uvscatter::gaintable::{build_table, grids, BuildInfo};
use uvscatter::led::led_gain;
use uvscatter::quadrature::{link_gain_direct, R_MIN};
use uvscatter::{Contour, EllipseFit, FieldGrid, GainTable, ReceiverPos};

use crate::config::{ConfigError, FileConfig, GridChoice, RunConfig};
use crate::{svg, Command, CommonArgs};

pub fn run(command: Command, args: &CommonArgs) -> anyhow::Result<()> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let name = match &command {
        Command::BuildTable { .. } => "build-table",
        Command::Gain { .. } => "gain",
        Command::Field { .. } => "field",
        Command::Contour { .. } => "contour",
        Command::Sweep => "sweep",
    };
    let mut cfg = RunConfig::resolve(name, file, args, matches!(command, Command::Sweep))?;
    let log = |msg: &str| {
        if args.verbose {
            eprintln!("{msg}");
        }
    };

    match command {
        Command::BuildTable {
            full_grid,
            built_unix,
            verify,
        } => {
            if full_grid {
                cfg.grid = GridChoice::Full;
            }
            let stamp = built_unix.or(cfg.built_unix).unwrap_or_else(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            });
            cfg.built_unix = Some(stamp);
            cmd_build_table(&cfg, verify, log)
        }
        Command::Gain { x, y } => cmd_gain(&cfg, ReceiverPos::new(x, y)),
        Command::Field { full_res } => {
            if full_res {
                cfg.resolution = [500, 500];
            }
            cmd_field(&cfg, log)
        }
        Command::Contour { full_res } => {
            if full_res {
                cfg.resolution = [500, 500];
            }
            cmd_contour(&cfg, log)
        }
        Command::Sweep => cmd_sweep(&cfg, log),
    }
}

fn build(cfg: &RunConfig) -> anyhow::Result<GainTable> {
    let (r, a) = match cfg.grid {
        GridChoice::Desk => (grids::desk_r(), grids::desk_alpha()),
        GridChoice::Full => (grids::full_r(), grids::full_alpha()),
    };
    let table = build_table(
        &r,
        &a,
        &cfg.profile.atmosphere,
        &cfg.profile.phase,
        cfg.source.aperture_area,
        &cfg.quadrature,
        BuildInfo::new(cfg.profile.name.clone(), cfg.built_unix.unwrap_or(0)),
    )?;
    Ok(table)
}

fn cmd_build_table(cfg: &RunConfig, verify: bool, log: impl Fn(&str)) -> anyhow::Result<()> {
    log(&format!(
        "building {:?} table for profile {}",
        cfg.grid, cfg.profile.name
    ));
    let start = Instant::now();
    let table = build(cfg)?;
    let secs = start.elapsed().as_secs_f64();
    if verify {
        log("rebuilding to verify determinism");
        let again = build(cfg)?;
        if again.values_checksum() != table.values_checksum() {
            return Err(anyhow!(
                "rebuild produced different values; build is not deterministic"
            ));
        }
    }

    let dir = cfg
        .table
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    table
        .save(&cfg.table)
        .with_context(|| format!("writing {}", cfg.table.display()))?;
    let bytes = fs::read(&cfg.table)?;
    let file_crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());

    let (nr, na) = table.shape();
    let finite: Vec<f64> = table
        .values()
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    let (lo, hi) = finite
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    let mut summary = String::new();
    summary += &format!("table        {}\n", cfg.table.display());
    summary += &format!(
        "grid         {:?}: {nr} ranges x {na} elevations\n",
        cfg.grid
    );
    summary += &format!(
        "r            {} .. {} m\n",
        table.r_grid()[0],
        table.r_grid()[nr - 1]
    );
    summary += &format!(
        "alpha        {:.4} .. {:.4} rad\n",
        table.alpha_grid()[0],
        table.alpha_grid()[na - 1]
    );
    summary += &format!("profile      {}\n", cfg.profile.name);
    summary += &format!("gain range   {lo:.3e} .. {hi:.3e}\n");
    summary += &format!("sentinels    {}\n", table.values().len() - finite.len());
    summary += &format!("values crc32 {:08x}\n", table.values_checksum());
    summary += &format!("file crc32   {file_crc:08x}\n");
    summary += &format!("built_unix   {}\n", cfg.built_unix.unwrap_or(0));
    summary += &format!("build time   {secs:.2} s\n");
    if verify {
        summary += "verified     rebuild matched\n";
    }
    print!("{summary}");
    fs::write(cfg.table.with_extension("summary.txt"), &summary)?;
    cfg.write_beside(dir)?;
    Ok(())
}

fn load_table(cfg: &RunConfig) -> anyhow::Result<GainTable> {
    if !cfg.table.exists() {
        return Err(anyhow!(
            "gain table {} not found; create it with `uvscatter build-table --table {}`",
            cfg.table.display(),
            cfg.table.display()
        ));
    }
    let table =
        GainTable::load(&cfg.table).with_context(|| format!("loading {}", cfg.table.display()))?;
    let meta = table.meta();
    if meta.atmosphere != cfg.profile.atmosphere || meta.phase != cfg.profile.phase {
        return Err(ConfigError(format!(
            "table {} was built for profile {:?} with different coefficients than the requested {:?}; rebuild it",
            cfg.table.display(),
            meta.build.profile,
            cfg.profile.name
        ))
        .into());
    }
    Ok(table.with_interpolation(cfg.interpolation))
}

fn cmd_gain(cfg: &RunConfig, pos: ReceiverPos) -> anyhow::Result<()> {
    let table = load_table(cfg)?;
    let src = cfg.source.spec(cfg.seed);
    let laser_src = uvscatter::SourceSpec { phi_d: 0.0, ..src };
    let laser = led_gain(pos, &laser_src, &table)?;
    if laser.collocated > 0 {
        return Err(uvscatter::Error::TransmitterCollocated {
            r: pos.range(),
            r_min: R_MIN,
        }
        .into());
    }
    println!(
        "position       x = {} m, y = {} m (r = {:.3} m)",
        pos.x,
        pos.y,
        pos.range()
    );
    println!("profile        {}", cfg.profile.name);
    println!("elevation      {} deg", cfg.source.alpha_deg);
    println!("laser (table)  {:.6e}", laser.mean);
    let direct = link_gain_direct(
        pos,
        src.alpha,
        &cfg.profile.atmosphere,
        &cfg.profile.phase,
        src.aperture_area,
        &cfg.quadrature,
    )?;
    println!(
        "laser (direct) {:.6e}  (table rel diff {:.2e}, quadrature error bound {:.1e})",
        direct.value,
        (laser.mean - direct.value).abs() / direct.value,
        direct.error_bound
    );
    if src.phi_d > 0.0 {
        let g = led_gain(pos, &src, &table)?;
        println!(
            "led            {:.6e} +/- {:.2e}  (phi_d = {} deg, N = {}, seed = {}, below horizon {})",
            g.mean, g.std_error, cfg.source.phi_d_deg, g.n_beams, cfg.seed, g.below_horizon
        );
    }
    Ok(())
}

fn field_for(
    cfg: &RunConfig,
    table: &GainTable,
    alpha_deg: f64,
    phi_d_deg: f64,
) -> anyhow::Result<FieldGrid> {
    let mut src = cfg.source.spec(cfg.seed);
    src.alpha = alpha_deg.to_radians();
    src.phi_d = phi_d_deg.to_radians();
    let [nx, ny] = cfg.resolution;
    Ok(compute_field(&cfg.region, nx, ny, &src, table)?)
}

fn out_dir(cfg: &RunConfig) -> anyhow::Result<&Path> {
    fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    Ok(&cfg.output_dir)
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> anyhow::Result<()> {
    let mut w =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn title(cfg: &RunConfig, alpha_deg: f64, phi_d_deg: f64) -> String {
    format!(
        "alpha = {alpha_deg} deg, phi_d = {phi_d_deg} deg, profile {}",
        cfg.profile.name
    )
}

fn warn_masked(field: &FieldGrid) {
    if field.masked > 0 {
        eprintln!(
            "warning: {} of {} pixels masked (at the transmitter or beyond the table's reach)",
            field.masked,
            field.gains.len()
        );
    }
}

fn cmd_field(cfg: &RunConfig, log: impl Fn(&str)) -> anyhow::Result<()> {
    let table = load_table(cfg)?;
    let dir = out_dir(cfg)?;
    log(&format!(
        "computing {}x{} field",
        cfg.resolution[0], cfg.resolution[1]
    ));
    let field = field_for(cfg, &table, cfg.source.alpha_deg, cfg.source.phi_d_deg)?;
    warn_masked(&field);
    write_file(&dir.join("field.csv"), |w| field.write_csv(w))?;
    if cfg.source.phi_d_deg > 0.0 {
        let se = FieldGrid {
            gains: field.std_errors.clone(),
            ..field.clone()
        };
        write_file(&dir.join("field_std_error.csv"), |w| se.write_csv(w))?;
    }
    let svg = svg::heatmap(
        &field,
        &title(cfg, cfg.source.alpha_deg, cfg.source.phi_d_deg),
        &cfg.to_json(),
    );
    fs::write(dir.join("field.svg"), svg)?;
    cfg.write_beside(dir)?;
    let (lo, hi) = field.value_range();
    println!(
        "field {}x{}: gain {lo:.3e} .. {hi:.3e}, written to {}",
        field.nx(),
        field.ny(),
        dir.display()
    );
    Ok(())
}

struct Fitted {
    contour: Contour,
    closed: bool,
    area: f64,
    fit: EllipseFit,
    ch: EllipseCharacteristics,
}

/// Fits the largest closed loop, or the longest polyline when the contour
/// leaves the region.
fn fit_level(field: &FieldGrid, level: f64) -> anyhow::Result<Fitted> {
    let contour = extract_contour(field, level)?;
    let (line, closed): (&Polyline, bool) = match contour.main_loop() {
        Some(l) => (l, true),
        None => (
            contour
                .polylines
                .iter()
                .max_by_key(|p| p.points.len())
                .expect("non-empty contour"),
            false,
        ),
    };
    let fit = fit_ellipse(&line.points)?;
    let ch = characteristics(&fit)?;
    let area = if closed { line.area() } else { f64::NAN };
    Ok(Fitted {
        contour,
        closed,
        area,
        fit,
        ch,
    })
}

#[derive(Serialize)]
struct FitOutput {
    level: f64,
    closed: bool,
    n_points: usize,
    area_m2: Option<f64>,
    #[serde(flatten)]
    report: FitReport,
}

fn cmd_contour(cfg: &RunConfig, log: impl Fn(&str)) -> anyhow::Result<()> {
    let table = load_table(cfg)?;
    let dir = out_dir(cfg)?;
    log(&format!(
        "computing {}x{} field",
        cfg.resolution[0], cfg.resolution[1]
    ));
    let field = field_for(cfg, &table, cfg.source.alpha_deg, cfg.source.phi_d_deg)?;
    warn_masked(&field);
    cfg.write_beside(dir)?;
    for &level in &cfg.levels {
        let tag = format!("{level:e}");
        let f = fit_level(&field, level)?;
        if !f.closed {
            eprintln!(
                "warning: contour at {tag} leaves the region; fitted the longest open polyline"
            );
        }
        write_file(&dir.join(format!("contour_{tag}.csv")), |w| {
            f.contour.write_csv(w)
        })?;
        let out = FitOutput {
            level,
            closed: f.closed,
            n_points: f.contour.len(),
            area_m2: f.closed.then_some(f.area),
            report: FitReport::new(&f.fit, &f.ch),
        };
        fs::write(
            dir.join(format!("fit_{tag}.json")),
            serde_json::to_string_pretty(&out)? + "\n",
        )?;
        let t = format!(
            "{}, L = {tag}",
            title(cfg, cfg.source.alpha_deg, cfg.source.phi_d_deg)
        );
        fs::write(
            dir.join(format!("contour_{tag}.svg")),
            svg::contour_overlay(&field, &f.contour, Some(&f.fit), &t, &cfg.to_json()),
        )?;
        println!(
            "L = {tag}: y0 = {:.2} m, a = {:.2} m, b = {:.2} m, e = {:.4}, right endpoint {:.2} m{}",
            f.fit.y0,
            f.fit.a,
            f.fit.b,
            f.ch.eccentricity,
            f.ch.right_endpoint.1,
            if f.closed { "" } else { " (open)" }
        );
    }
    Ok(())
}

const SWEEP_HEADER: &str = "alpha_deg,phi_d_deg,level,status,area_m2,y0,a,b,rms_residual,eccentricity,cos_alpha,left_focus_y,left_endpoint_y,right_endpoint_y";

fn sweep_row(
    w: &mut impl Write,
    alpha_deg: f64,
    phi_d_deg: f64,
    level: f64,
    fitted: anyhow::Result<Fitted>,
) -> anyhow::Result<()> {
    let cos = alpha_deg.to_radians().cos();
    match fitted {
        Ok(f) => writeln!(
            w,
            "{alpha_deg},{phi_d_deg},{level:e},{},{},{},{},{},{},{},{cos},{},{},{}",
            if f.closed { "closed" } else { "open" },
            f.area,
            f.fit.y0,
            f.fit.a,
            f.fit.b,
            f.fit.rms_residual,
            f.ch.eccentricity,
            f.ch.left_focus.1,
            f.ch.left_endpoint.1,
            f.ch.right_endpoint.1
        )?,
        Err(e) => {
            let status = match e.downcast_ref::<uvscatter::Error>() {
                Some(uvscatter::Error::EmptyContour { .. }) => "empty",
                Some(uvscatter::Error::AxisOrientation { .. }) => "wide",
                _ => "failed",
            };
            writeln!(
                w,
                "{alpha_deg},{phi_d_deg},{level:e},{status},,,,,,,{cos},,,"
            )?;
        }
    }
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, log: impl Fn(&str)) -> anyhow::Result<()> {
    let table = load_table(cfg)?;
    let dir = out_dir(cfg)?;
    cfg.write_beside(dir)?;

    let mut rows = Vec::new();
    writeln!(rows, "{SWEEP_HEADER}")?;
    for &alpha in &cfg.alphas_deg {
        log(&format!("laser field at alpha = {alpha} deg"));
        let field = field_for(cfg, &table, alpha, 0.0)?;
        for &level in &cfg.levels {
            sweep_row(&mut rows, alpha, 0.0, level, fit_level(&field, level))?;
        }
    }
    fs::write(dir.join("sweep_alpha.csv"), &rows)?;

    let mut rows = Vec::new();
    writeln!(rows, "{SWEEP_HEADER}")?;
    let alpha = cfg.source.alpha_deg;
    for &phi_d in &cfg.phi_ds_deg {
        log(&format!(
            "field at alpha = {alpha} deg, phi_d = {phi_d} deg"
        ));
        let field = field_for(cfg, &table, alpha, phi_d)?;
        for &level in &cfg.levels {
            sweep_row(&mut rows, alpha, phi_d, level, fit_level(&field, level))?;
        }
    }
    fs::write(dir.join("sweep_phi_d.csv"), &rows)?;
    println!(
        "sweep: {} elevations, {} divergence angles, {} level(s); written to {}",
        cfg.alphas_deg.len(),
        cfg.phi_ds_deg.len(),
        cfg.levels.len(),
        dir.display()
    );
    Ok(())
}
