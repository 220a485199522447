//! `spdc` — command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration or usage error,
//! 3 resource limit, 4 numerically degenerate result. Diagnostics go to
//! stderr; stdout carries only the requested data.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spdc_core::camera::camera_pair;
use spdc_core::export::{read_binary, read_csv, BINARY_MAGIC};
use spdc_core::spectral::{far_field_jid, jid_pair};
use spdc_core::stats::{reid_product, summarize};
use spdc_core::sweep::{run_sweep, SweepSpec, SweptVariable};
use spdc_core::{ExperimentParams, JointDistribution64, Plane, SpdcWavelengths64, TransverseAxis, Wavelength64};

use config::{ConfigError, Format, Loaded};

#[derive(Parser)]
#[command(
    name = "spdc",
    version,
    about = "Transverse photon-pair correlations from Type-I SPDC in BBO"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// TOML run configuration; the degenerate preset when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides output.directory).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Output format (overrides output.formats).
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Lattice side (overrides grid.n).
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(2..))]
    grid_n: Option<u32>,
    /// Spectral slices (overrides spectral.slices).
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    slices: Option<u32>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Bin,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
            FormatArg::Bin => Format::Bin,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AxisArg {
    X,
    Y,
}

impl From<AxisArg> for TransverseAxis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::X => TransverseAxis::X,
            AxisArg::Y => TransverseAxis::Y,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PlaneArg {
    Near,
    Far,
}

impl From<PlaneArg> for Plane {
    fn from(p: PlaneArg) -> Self {
        match p {
            PlaneArg::Near => Plane::Near,
            PlaneArg::Far => Plane::Far,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VaryArg {
    FilterFwhm,
    CrystalLength,
    PumpWaist,
}

impl From<VaryArg> for SweptVariable {
    fn from(v: VaryArg) -> Self {
        match v {
            VaryArg::FilterFwhm => SweptVariable::FilterFwhm,
            VaryArg::CrystalLength => SweptVariable::CrystalLength,
            VaryArg::PumpWaist => SweptVariable::PumpWaist,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Phase-matching angle, walk-off and refractive indices as JSON.
    PmAngle {
        #[command(flatten)]
        common: Common,
    },
    /// Compute one joint intensity distribution and write it with its statistics.
    Jid {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "far")]
        plane: PlaneArg,
        #[arg(long, value_enum, default_value = "x")]
        axis: AxisArg,
    },
    /// Moments and inferred width of a distribution, computed or read from a file.
    Stats {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "far")]
        plane: PlaneArg,
        #[arg(long, value_enum, default_value = "x")]
        axis: AxisArg,
        /// Previously written matrix (.csv or SPDCJID1 binary) to analyse.
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
    },
    /// Reid product over a range of filter widths, crystal lengths or waists.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Swept variable (overrides sweep.variable).
        #[arg(long, value_enum)]
        vary: Option<VaryArg>,
        /// Comma-separated values in nm, mm or µm (overrides sweep.values).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Option<Vec<f64>>,
        /// Single axis; both when omitted (overrides sweep.axes).
        #[arg(long, value_enum)]
        axis: Option<AxisArg>,
        /// Rerun the extreme values at doubled grid size and warn on drift.
        #[arg(long)]
        convergence_check: bool,
    },
    /// Uncorrected and corrected camera-plane JPDs with a slope report.
    Camera {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "y")]
        axis: AxisArg,
    },
    /// Near field, far field and Reid product for one or both axes.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Option<AxisArg>,
    },
}

#[derive(Debug)]
enum Failure {
    Config(ConfigError),
    Core(spdc_core::Error),
    Io(PathBuf, std::io::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        use spdc_core::Error as E;
        match self {
            Failure::Config(_) => 2,
            Failure::Io(..) => 1,
            Failure::Core(e) if e.is_resource() => 3,
            Failure::Core(e) if e.is_numerical() => 4,
            Failure::Core(E::Io(_)) => 1,
            Failure::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<spdc_core::Error> for Failure {
    fn from(e: spdc_core::Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

struct Context {
    loaded: Loaded,
    params: ExperimentParams,
    out_dir: PathBuf,
    formats: Vec<Format>,
}

impl Context {
    fn new(c: &Common) -> Outcome<Self> {
        let loaded = match &c.config {
            Some(p) => config::load(p)?,
            None => config::parse("", Path::new("<defaults>"))?,
        };
        let mut params = loaded.params.clone();
        if let Some(n) = c.grid_n {
            params.grid_n = n as usize;
        }
        if let Some(n) = c.slices {
            params.slices = n as usize;
        }
        let out_dir = c.out.clone().unwrap_or_else(|| loaded.config.output.directory.clone());
        let formats = match c.format {
            Some(f) => vec![f.into()],
            None => loaded.config.output.formats.clone(),
        };
        Ok(Self {
            loaded,
            params,
            out_dir,
            formats,
        })
    }

    fn experiment(&self) -> Outcome<spdc_core::Experiment64> {
        Ok(self.loaded.experiment(self.params.clone())?)
    }

    fn camera_n(&self) -> usize {
        self.loaded.config.camera.grid_n.unwrap_or(self.params.grid_n)
    }
}

fn print_json<T: Serialize>(v: &T) -> Outcome {
    let s = serde_json::to_string_pretty(v).map_err(|e| Failure::Core(spdc_core::Error::Format(e.to_string())))?;
    println!("{s}");
    Ok(())
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::PmAngle { common } => pm_angle(&Context::new(&common)?),
        Command::Jid { common, plane, axis } => jid(&Context::new(&common)?, plane.into(), axis.into()),
        Command::Stats {
            common,
            plane,
            axis,
            input,
        } => stats(&Context::new(&common)?, plane.into(), axis.into(), input.as_deref()),
        Command::Sweep {
            common,
            vary,
            values,
            axis,
            convergence_check,
        } => sweep(&Context::new(&common)?, &common, vary, values, axis, convergence_check),
        Command::Camera { common, axis } => camera(&Context::new(&common)?, axis.into()),
        Command::Certify { common, axis } => certify(&Context::new(&common)?, axis),
    }
}

#[derive(Serialize)]
struct Indices {
    n_o_signal: f64,
    n_o_idler: f64,
    n_o_pump: f64,
    n_e_pump: f64,
    n_eff_pump: f64,
}

#[derive(Serialize)]
struct PmReport {
    pump_nm: f64,
    signal_nm: f64,
    idler_nm: f64,
    /// Cut angle in use: the configured one, else the phase-matched one.
    theta_p_deg: f64,
    theta_closed_form_deg: Option<f64>,
    theta_numeric_deg: Option<f64>,
    rho_deg: f64,
    indices: Indices,
}

fn pm_angle(ctx: &Context) -> Outcome {
    let p = &ctx.params;
    let s = &ctx.loaded.sellmeier;
    let w = SpdcWavelengths64::new(Wavelength64::from_nm(p.pump_nm), Wavelength64::from_nm(p.signal_nm))?;
    let pm = s.phase_matching_angle(&w);
    let theta = match (p.theta_p_deg, &pm) {
        (Some(d), _) => d.to_radians(),
        (None, Ok(pm)) => pm.theta(),
        (None, Err(_)) => return Err(pm.unwrap_err().into()),
    };
    let pm = pm.ok();
    let report = PmReport {
        pump_nm: p.pump_nm,
        signal_nm: p.signal_nm,
        idler_nm: w.idler.nm(),
        theta_p_deg: theta.to_degrees(),
        theta_closed_form_deg: pm.map(|m| m.closed_form.to_degrees()),
        theta_numeric_deg: pm.map(|m| m.numeric.to_degrees()),
        rho_deg: s.walkoff_angle(theta, w.pump)?.to_degrees(),
        indices: Indices {
            n_o_signal: s.n_ordinary(w.signal)?,
            n_o_idler: s.n_ordinary(w.idler)?,
            n_o_pump: s.n_ordinary(w.pump)?,
            n_e_pump: s.n_extraordinary(w.pump)?,
            n_eff_pump: s.effective_index(theta, w.pump)?,
        },
    };
    print_json(&report)
}

fn jid(ctx: &Context, plane: Plane, axis: TransverseAxis) -> Outcome {
    let exp = ctx.experiment()?;
    let j = match plane {
        Plane::Far => far_field_jid(
            &exp.model,
            axis,
            &exp.lattice,
            &exp.sampling,
            exp.grid.memory_budget_bytes,
        )?,
        Plane::Near => {
            jid_pair(
                &exp.model,
                axis,
                &exp.lattice,
                &exp.sampling,
                exp.grid.memory_budget_bytes,
            )?
            .near
        }
    };
    let report = output::JidReport::new(&j)?;
    let stem = format!("jid_{}_{}", plane.name(), axis);
    output::write_matrix(&ctx.out_dir, &stem, &j, &ctx.formats, ctx.params.grid_n)?;
    output::write_json(&ctx.out_dir, &format!("{stem}_stats"), &report)?;
    print_json(&report)
}

fn read_matrix(path: &Path, plane: Plane, axis: TransverseAxis) -> Outcome<JointDistribution64> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Io(path.to_owned(), e))?;
    let g = if bytes.starts_with(BINARY_MAGIC) {
        read_binary(&bytes[..])?
    } else {
        read_csv(&bytes[..])?
    };
    Ok(JointDistribution64::new(plane, axis, g.lattice()?, g.data)?)
}

fn stats(ctx: &Context, plane: Plane, axis: TransverseAxis, input: Option<&Path>) -> Outcome {
    let j = match input {
        Some(p) => read_matrix(p, plane, axis)?,
        None => {
            let exp = ctx.experiment()?;
            match plane {
                Plane::Far => far_field_jid(
                    &exp.model,
                    axis,
                    &exp.lattice,
                    &exp.sampling,
                    exp.grid.memory_budget_bytes,
                )?,
                Plane::Near => exp.jids(axis)?.near,
            }
        }
    };
    print_json(&output::JidReport::new(&j)?)
}

fn sweep(
    ctx: &Context,
    common: &Common,
    vary: Option<VaryArg>,
    values: Option<Vec<f64>>,
    axis: Option<AxisArg>,
    convergence_check: bool,
) -> Outcome {
    let section = &ctx.loaded.config.sweep;
    let variable = vary
        .map(SweptVariable::from)
        .or(section.variable)
        .unwrap_or(SweptVariable::FilterFwhm);
    let values = values
        .or_else(|| section.values.clone())
        .unwrap_or_else(|| variable.default_values());
    let axes = match axis {
        Some(a) => vec![a.into()],
        None => section
            .axes
            .clone()
            .unwrap_or_else(|| vec![TransverseAxis::X, TransverseAxis::Y]),
    };
    let mut spec = SweepSpec::new(ctx.params.clone(), variable, values, axes)?;
    spec.convergence_check = convergence_check || section.convergence_check;
    // validate every point before the long run so bad values fail fast
    for &v in &spec.values {
        ctx.loaded.experiment(variable.apply(&spec.base, v)).map_err(|e| {
            if e.is_numerical() || e.is_resource() {
                Failure::Core(e)
            } else {
                Failure::Core(spdc_core::Error::Sweep {
                    value: v,
                    source: Box::new(e),
                })
            }
        })?;
    }
    let rows = run_sweep::<f64>(&spec)?;
    let json = ctx.formats.contains(&Format::Json) && !ctx.formats.contains(&Format::Csv);
    let mut buf = Vec::new();
    if json {
        let s =
            serde_json::to_string_pretty(&rows).map_err(|e| Failure::Core(spdc_core::Error::Format(e.to_string())))?;
        buf.extend_from_slice(s.as_bytes());
        buf.push(b'\n');
    } else {
        spdc_core::sweep::write_csv(&rows, &mut buf)?;
    }
    if common.out.is_some() {
        let name = format!(
            "sweep_{}.{}",
            variable_name(variable),
            if json { "json" } else { "csv" }
        );
        output::write_bytes(&ctx.out_dir, &name, &buf)?;
    }
    print!("{}", String::from_utf8_lossy(&buf));
    Ok(())
}

fn variable_name(v: SweptVariable) -> &'static str {
    match v {
        SweptVariable::FilterFwhm => "filter_fwhm",
        SweptVariable::CrystalLength => "crystal_length",
        SweptVariable::PumpWaist => "pump_waist",
    }
}

fn camera(ctx: &Context, axis: TransverseAxis) -> Outcome {
    let exp = ctx.experiment()?;
    let n = ctx.camera_n();
    let pair = camera_pair(&exp, axis, n)?;
    for (name, jpd) in [("uncorrected", &pair.uncorrected), ("corrected", &pair.corrected)] {
        let d = jpd.to_distribution()?;
        output::write_matrix(&ctx.out_dir, &format!("camera_{name}_{axis}"), &d, &ctx.formats, n)?;
    }
    output::write_json(&ctx.out_dir, &format!("camera_slopes_{axis}"), &pair.report)?;
    print_json(&pair.report)
}

#[derive(Serialize)]
struct CertifyEntry {
    axis: TransverseAxis,
    near: spdc_core::StatsSummary64,
    far: spdc_core::StatsSummary64,
    reid: spdc_core::ReidReport64,
}

fn certify(ctx: &Context, axis: Option<AxisArg>) -> Outcome {
    let exp = ctx.experiment()?;
    let axes = match axis {
        Some(a) => vec![a.into()],
        None => vec![TransverseAxis::X, TransverseAxis::Y],
    };
    let mut entries = Vec::new();
    for a in axes {
        let pair = exp.jids(a)?;
        let near = summarize(&pair.near)?;
        let far = summarize(&pair.far)?;
        let reid = reid_product(&near, &far)?;
        entries.push(CertifyEntry {
            axis: a,
            near,
            far,
            reid,
        });
    }
    print_json(&entries)
}
