//! Command-line front end: spectra, peak metrics, parameter sweeps,
//! telegraph statistics, spring-mode tables and the validation suite.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error,
//! 3 numerical failure. All physical inputs are in units of γ (γ defaults
//! to 1); `--a` and `--gamma2` are mutually exclusive ways to fix the
//! de-shelving rate. Worker count for sweeps and curve evaluation follows
//! `RAYON_NUM_THREADS`.

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;

use crate::analytic::{self, regime};
use crate::liouvillian::SystemParams;
use crate::montecarlo;
use crate::spectrum::{self, GridSpec, PeakMetrics};
use crate::springmodel;
use crate::validation;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unusable parameter combinations → exit 2.
    Config(String),
    /// The requested computation failed → exit 3.
    Numerical(String),
    /// One or more validation criteria failed → exit 1.
    ValidationFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ValidationFailed => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn message(&self) -> Option<&str> {
        match self {
            CliError::Config(m) | CliError::Numerical(m) => Some(m),
            CliError::ValidationFailed => None,
        }
    }
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "fluorsim", version, about = "Resonance fluorescence of a laser-driven three-level atom with a weak shelving level", max_term_width = 100)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the incoherent spectrum, write CSV, print a JSON summary
    Spectrum(SpectrumArgs),
    /// Narrow-peak metrics from every route side by side
    Peak(PeakArgs),
    /// Cartesian parameter sweep with per-point peak metrics
    Sweep(SweepArgs),
    /// Monte Carlo bright/dark period statistics
    Telegraph(TelegraphArgs),
    /// Dressed-state mode table (eigenvalues, widths, weights)
    Modes(ModesArgs),
    /// Run the validation suite
    Validate(ValidateArgs),
}

/// Physical rates shared by all computing subcommands, in units of γ.
#[derive(Debug, Args)]
pub struct PhysicalArgs {
    /// Half decay width of the driven transition (sets the unit scale)
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Half de-shelving width γ₂ (exclusive with --a)
    #[arg(long, conflicts_with = "a")]
    pub gamma2: Option<f64>,
    /// Shelving ratio a = γ₂/γ₃ (exclusive with --gamma2)
    #[arg(long)]
    pub a: Option<f64>,
    /// Half shelving width γ₃
    #[arg(long, default_value_t = 0.0)]
    pub gamma3: f64,
    /// Rabi frequency Ω
    #[arg(long, default_value_t = 0.0)]
    pub rabi: f64,
    /// Detuning Δ = ω_L − ω₀, or "auto" for the amplitude-maximizing value
    #[arg(long, default_value = "0")]
    pub delta: String,
}

impl PhysicalArgs {
    /// Resolve the flags into parameters plus the auto-detuning, if used.
    pub fn resolve(&self) -> Result<(SystemParams, Option<f64>), CliError> {
        let gamma2 = match (self.gamma2, self.a) {
            (Some(g2), None) => g2,
            (None, Some(a)) => {
                if self.gamma3 <= 0.0 {
                    return Err(CliError::Config(
                        "--a needs --gamma3 > 0 to define γ₂ = a·γ₃".into(),
                    ));
                }
                a * self.gamma3
            }
            (None, None) => 0.0,
            (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
        };
        let base = SystemParams::new(self.gamma, gamma2, self.gamma3, self.rabi, 0.0)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.delta.trim() == "auto" {
            let dmax = analytic::delta_max(&base).map_err(numerical)?;
            Ok((base.with_detuning(dmax), Some(dmax)))
        } else {
            let delta: f64 = self
                .delta
                .parse()
                .map_err(|_| CliError::Config(format!("bad --delta value '{}'", self.delta)))?;
            let p = SystemParams::new(self.gamma, gamma2, self.gamma3, self.rabi, delta)
                .map_err(|e| CliError::Config(e.to_string()))?;
            Ok((p, None))
        }
    }
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub physical: PhysicalArgs,
    /// Uniform grid points across the span
    #[arg(long, default_value_t = 601)]
    pub points: usize,
    /// Extra log-spaced points per side inside the narrow-peak region
    #[arg(long, default_value_t = 80)]
    pub log_points: usize,
    /// Half-span of the grid in γ (default 1.5·Ω̃)
    #[arg(long)]
    pub span: Option<f64>,
    /// Output CSV path
    #[arg(long, short, default_value = "spectrum.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PeakArgs {
    #[command(flatten)]
    pub physical: PhysicalArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub physical: PhysicalArgs,
    /// Sweep axis `field=start:stop:count`; repeat for a Cartesian grid.
    /// Fields: gamma, gamma2, gamma3, a, rabi, delta
    #[arg(long = "sweep", required = true)]
    pub axes: Vec<String>,
    /// Output CSV path (stdout when omitted)
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TelegraphArgs {
    #[command(flatten)]
    pub physical: PhysicalArgs,
    /// Simulated record length in 1/γ
    #[arg(long, default_value_t = 1e6)]
    pub duration: f64,
    /// RNG seed
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Also estimate the peak width from a synthetic telegraph periodogram
    #[arg(long)]
    pub psd: bool,
    /// Dump the jump record as JSON lines to this path
    #[arg(long)]
    pub dump_jumps: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModesArgs {
    #[command(flatten)]
    pub physical: PhysicalArgs,
    /// Emit a CSV table instead of JSON
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// List the criteria without running them
    #[arg(long)]
    pub list: bool,
    /// Run only these criterion ids (default: all)
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<usize>,
}

fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

fn metrics_json(m: &PeakMetrics) -> serde_json::Value {
    json!({
        "amplitude": m.amplitude,
        "hwhm": m.hwhm,
        "intensity": m.intensity,
        "method": serde_json::to_value(m.method).unwrap(),
    })
}

/// Peak summary shared by `spectrum` and `peak`.
fn peak_summary(p: &SystemParams, auto_delta: Option<f64>) -> serde_json::Value {
    let numeric = spectrum::peak_metrics_numeric(p).ok();
    let secular = analytic::secular_peak(p).ok();
    let telegraph = analytic::telegraph_peak(p).ok();
    let eigen = spectrum::peak_width_eigenvalue(p).ok();
    let spring = springmodel::mode_widths_weighted(p).ok().map(|(_, gc, _)| gc);
    json!({
        "version": version(),
        "params": p,
        "delta_max": auto_delta,
        "elastic_intensity": spectrum::elastic_intensity(p).ok(),
        "peak": {
            "numeric": numeric.map(|m| metrics_json(&m)),
            "secular": secular.map(|m| {
                let mut v = metrics_json(&m);
                v["regime"] = json!(regime::SECULAR);
                v
            }),
            "telegraph": telegraph.map(|m| {
                let mut v = metrics_json(&m);
                v["regime"] = json!(regime::TELEGRAPH);
                v
            }),
            "eigenvalue": eigen.map(|w| json!({ "hwhm": w })),
            "spring": spring.map(|w| json!({ "hwhm": w, "regime": regime::SECULAR })),
        },
    })
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<(), CliError> {
    let (p, auto_delta) = args.physical.resolve()?;
    let grid = GridSpec {
        coarse_points: args.points,
        log_points_per_side: args.log_points,
        span: args.span,
    };
    if grid.is_empty() {
        return Err(CliError::Config("empty grid: no points requested".into()));
    }
    let curve = spectrum::spectrum_curve(&p, &grid).map_err(numerical)?;
    let file = std::fs::File::create(&args.out)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", args.out.display())))?;
    let mut writer = std::io::BufWriter::new(file);
    spectrum::write_curve_csv(&curve, &mut writer).map_err(numerical)?;
    writer.flush().map_err(numerical)?;

    let mut summary = peak_summary(&p, auto_delta);
    summary["csv"] = json!(args.out.display().to_string());
    summary["grid_points"] = json!(curve.offsets.len());
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    Ok(())
}

pub fn cmd_peak(args: &PeakArgs) -> Result<(), CliError> {
    let (p, auto_delta) = args.physical.resolve()?;
    // The numeric route must work for `peak`; everything else is best-effort.
    spectrum::peak_metrics_numeric(&p).map_err(numerical)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&peak_summary(&p, auto_delta)).unwrap()
    );
    Ok(())
}

#[derive(Debug, Clone)]
struct SweepAxis {
    field: String,
    values: Vec<f64>,
}

fn parse_axis(text: &str) -> Result<SweepAxis, CliError> {
    let bad = || CliError::Config(format!("bad sweep axis '{text}', want field=start:stop:count"));
    let (field, range) = text.split_once('=').ok_or_else(bad)?;
    let field = field.trim().to_string();
    if !["gamma", "gamma2", "gamma3", "a", "rabi", "delta"].contains(&field.as_str()) {
        return Err(CliError::Config(format!("unknown sweep field '{field}'")));
    }
    let parts: Vec<&str> = range.split(':').collect();
    let values = match parts.as_slice() {
        [single] => vec![single.parse().map_err(|_| bad())?],
        [start, stop, count] => {
            let (start, stop): (f64, f64) =
                (start.parse().map_err(|_| bad())?, stop.parse().map_err(|_| bad())?);
            let count: usize = count.parse().map_err(|_| bad())?;
            if count == 0 {
                return Err(CliError::Config(format!("empty sweep range in '{text}'")));
            }
            if count == 1 {
                vec![start]
            } else {
                (0..count)
                    .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
                    .collect()
            }
        }
        _ => return Err(bad()),
    };
    Ok(SweepAxis { field, values })
}

fn apply_axis(args: &PhysicalArgs, field: &str, value: f64) -> PhysicalArgs {
    PhysicalArgs {
        gamma: if field == "gamma" { value } else { args.gamma },
        gamma2: if field == "gamma2" {
            Some(value)
        } else if field == "a" {
            None
        } else {
            args.gamma2
        },
        a: if field == "a" {
            Some(value)
        } else if field == "gamma2" {
            None
        } else {
            args.a
        },
        gamma3: if field == "gamma3" { value } else { args.gamma3 },
        rabi: if field == "rabi" { value } else { args.rabi },
        delta: if field == "delta" {
            format!("{value}")
        } else {
            args.delta.clone()
        },
    }
}

const SWEEP_HEADER: &str = "gamma,gamma2,gamma3,rabi,delta,amp_numeric,hwhm_numeric,int_numeric,\
amp_secular,hwhm_secular,int_secular,amp_telegraph,hwhm_telegraph,int_telegraph,hwhm_eigen,error";

fn sweep_row(p: &SystemParams) -> String {
    let head = format!(
        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        p.gamma, p.gamma2, p.gamma3, p.rabi, p.detuning
    );
    let numeric = spectrum::peak_metrics_numeric(p);
    let secular = analytic::secular_peak(p);
    let telegraph = analytic::telegraph_peak(p);
    let eigen = spectrum::peak_width_eigenvalue(p);
    let mut reason = String::new();
    let push = |s: &mut String, v: Option<f64>| {
        match v {
            Some(x) => s.push_str(&format!(",{x:.16e}")),
            None => s.push_str(",null"),
        };
    };
    let mut row = head;
    let take3 = |m: Result<PeakMetrics, _>, row: &mut String, reason_mut: &mut String| match m {
        Ok(m) => {
            push(row, Some(m.amplitude));
            push(row, Some(m.hwhm));
            push(row, Some(m.intensity));
        }
        Err(e) => {
            push(row, None);
            push(row, None);
            push(row, None);
            if reason_mut.is_empty() {
                *reason_mut = format!("{e}");
            }
        }
    };
    take3(numeric.map_err(|e| e.to_string()), &mut row, &mut reason);
    take3(secular.map_err(|e| e.to_string()), &mut row, &mut reason);
    take3(telegraph.map_err(|e| e.to_string()), &mut row, &mut reason);
    match eigen {
        Ok(w) => push(&mut row, Some(w)),
        Err(e) => {
            push(&mut row, None);
            if reason.is_empty() {
                reason = e.to_string();
            }
        }
    }
    row.push(',');
    row.push_str(&reason.replace(',', ";"));
    row
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let axes: Vec<SweepAxis> = args
        .axes
        .iter()
        .map(|t| parse_axis(t))
        .collect::<Result<_, _>>()?;
    // Cartesian product in axis-major order.
    let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for axis in &axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for base in &points {
            for &v in &axis.values {
                let mut row = base.clone();
                row.push((axis.field.clone(), v));
                next.push(row);
            }
        }
        points = next;
    }

    let params: Vec<SystemParams> = points
        .iter()
        .map(|assignments| {
            let mut phys = PhysicalArgs {
                gamma: args.physical.gamma,
                gamma2: args.physical.gamma2,
                a: args.physical.a,
                gamma3: args.physical.gamma3,
                rabi: args.physical.rabi,
                delta: args.physical.delta.clone(),
            };
            for (field, value) in assignments {
                phys = apply_axis(&phys, field, *value);
            }
            phys.resolve().map(|(p, _)| p)
        })
        .collect::<Result<_, _>>()?;

    // Independent points; deterministic row order by construction.
    let rows: Vec<String> = params.par_iter().map(sweep_row).collect();
    let failures = rows.iter().filter(|r| r.contains(",null,")).count();

    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(path).map_err(
            |e| CliError::Config(format!("cannot write {}: {e}", path.display())),
        )?)),
        None => Box::new(std::io::stdout().lock()),
    };
    writeln!(out, "{SWEEP_HEADER}").map_err(numerical)?;
    for row in &rows {
        writeln!(out, "{row}").map_err(numerical)?;
    }
    out.flush().map_err(numerical)?;

    if failures * 10 > rows.len() {
        return Err(CliError::Numerical(format!(
            "{failures}/{} sweep points failed",
            rows.len()
        )));
    }
    Ok(())
}

pub fn cmd_telegraph(args: &TelegraphArgs) -> Result<(), CliError> {
    let (p, _) = args.physical.resolve()?;
    // Surface the physical obstruction before simulating.
    let tau_b = analytic::tau_bright(&p).map_err(numerical)?;
    let tau_d = analytic::tau_dark(&p).map_err(numerical)?;
    let width_pred = analytic::telegraph_width(&p).map_err(numerical)?;

    let stats = montecarlo::estimate_taus(&p, args.duration, args.seed).map_err(numerical)?;
    if let Some(path) = &args.dump_jumps {
        let rec = montecarlo::simulate_trajectory(&p, args.duration, args.seed)
            .map_err(numerical)?;
        let file = std::fs::File::create(path)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        let mut writer = std::io::BufWriter::new(file);
        montecarlo::write_jumps_jsonl(&rec, &mut writer).map_err(numerical)?;
    }

    let width_from_psd = if args.psd {
        let duration = 80.0 * std::f64::consts::PI / width_pred;
        Some(
            montecarlo::telegraph_psd_hwhm(tau_b, tau_d, duration, 48, args.seed)
                .map_err(numerical)?,
        )
    } else {
        None
    };

    let out = json!({
        "version": version(),
        "params": p,
        "duration": args.duration,
        "seed": args.seed,
        "tau_bright": {
            "est": stats.tau_bright_est,
            "stderr": stats.stderr_bright,
            "n": stats.n_bright,
            "formula": tau_b,
        },
        "tau_dark": {
            "est": stats.tau_dark_est,
            "stderr": stats.stderr_dark,
            "n": stats.n_dark,
            "formula": tau_d,
        },
        "width_pred": width_pred,
        "width_from_psd": width_from_psd,
    });
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(())
}

pub fn cmd_modes(args: &ModesArgs) -> Result<(), CliError> {
    let (p, auto_delta) = args.physical.resolve()?;
    let angle = springmodel::dressed_angle(&p).map_err(numerical)?;
    let set = springmodel::mode_set(&p).map_err(numerical)?;
    let sys = springmodel::spring_system(&p).map_err(numerical)?;
    if args.csv {
        println!("mode,eigenvalue_re,eigenvalue_im,naive_width,weighted_width,w_plus,w_minus,w_shelf");
        for (name, m) in [("elastic", &set.elastic), ("mollow", &set.mollow), ("peak", &set.peak)] {
            println!(
                "{name},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                m.eigenvalue_re,
                m.eigenvalue_im,
                m.naive_width,
                m.weighted_width,
                m.weights.plus,
                m.weights.minus,
                m.weights.shelf
            );
        }
        return Ok(());
    }
    let out = json!({
        "version": version(),
        "params": p,
        "delta_max": auto_delta,
        "dressed_angle": angle,
        "masses": { "plus": sys.masses.0, "minus": sys.masses.1, "shelf": sys.masses.2 },
        "spring_constants": { "d1": sys.constants.0, "d2": sys.constants.1, "d3": sys.constants.2 },
        "modes": set,
        "regime": regime::SECULAR,
    });
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(())
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<(), CliError> {
    if args.list {
        for (id, name) in validation::criteria() {
            println!("[{id:>2}/11] {name}");
        }
        return Ok(());
    }
    let ids: Vec<usize> = if args.only.is_empty() {
        validation::criteria().iter().map(|(id, _)| *id).collect()
    } else {
        for &id in &args.only {
            if validation::run_criterion(id).is_none() && !(1..=11).contains(&id) {
                return Err(CliError::Config(format!("unknown criterion id {id}")));
            }
        }
        args.only.clone()
    };
    let mut all_passed = true;
    for id in ids {
        let report = validation::run_criterion(id)
            .ok_or_else(|| CliError::Config(format!("unknown criterion id {id}")))?;
        println!("{}", report.summary_line());
        for line in &report.details {
            println!("{line}");
        }
        all_passed &= report.passed;
    }
    if all_passed {
        println!("all criteria passed");
        Ok(())
    } else {
        println!("validation FAILED");
        Err(CliError::ValidationFailed)
    }
}

pub fn run(config: &RunConfig) -> Result<(), CliError> {
    match &config.command {
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Peak(args) => cmd_peak(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Telegraph(args) => cmd_telegraph(args),
        Command::Modes(args) => cmd_modes(args),
        Command::Validate(args) => cmd_validate(args),
    }
}
