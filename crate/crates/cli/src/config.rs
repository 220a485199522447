//! TOML run configuration.
//!
//! Every section is optional and falls back to the degenerate preset; unknown
//! keys are rejected. Errors carry the line of the offending key.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use spdc_core::camera::ShiftMode;
use spdc_core::grid::{GridLayout, DEFAULT_GRID_N, DEFAULT_MEMORY_BUDGET};
use spdc_core::spectral::DEFAULT_SLICES;
use spdc_core::sweep::SweptVariable;
use spdc_core::{Arm, Experiment64, ExperimentParams, FilterShape, Kernel, SellmeierSet64, TransverseAxis};

#[derive(Debug)]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.path.display(), l, self.message),
            None => write!(f, "{}: {}", self.path.display(), self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub crystal: CrystalSection,
    pub pump: PumpSection,
    pub wavelengths: WavelengthSection,
    pub filter: FilterSection,
    pub grid: GridSection,
    pub spectral: SpectralSection,
    pub camera: CameraSection,
    pub output: OutputSection,
    pub sweep: SweepSection,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrystalSection {
    #[serde(rename = "type")]
    pub kind: String,
    pub length_mm: f64,
    /// Replaces the bundled BBO coefficients; relative to the config file.
    pub sellmeier_file: Option<PathBuf>,
    pub theta_p_deg: Option<f64>,
}

impl Default for CrystalSection {
    fn default() -> Self {
        Self {
            kind: "bbo".into(),
            length_mm: 1.0,
            sellmeier_file: None,
            theta_p_deg: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpSection {
    pub wavelength_nm: f64,
    pub waist_um: f64,
}

impl Default for PumpSection {
    fn default() -> Self {
        Self {
            wavelength_nm: 405.0,
            waist_um: 500.0,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WavelengthSection {
    pub degenerate: Option<bool>,
    pub signal_nm: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub shape: FilterShape,
    pub center_nm: Option<f64>,
    pub fwhm_nm: f64,
    pub arm: Arm,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self {
            shape: FilterShape::Gaussian,
            center_nm: None,
            fwhm_nm: 10.0,
            arm: Arm::Signal,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub layout: GridLayout,
    pub sum_extent: Option<f64>,
    pub diff_extent: Option<f64>,
    pub memory_budget_bytes: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n: DEFAULT_GRID_N,
            layout: GridLayout::RidgeAligned,
            sum_extent: None,
            diff_extent: None,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralSection {
    pub slices: usize,
    pub kernel: Kernel,
}

impl Default for SpectralSection {
    fn default() -> Self {
        Self {
            slices: DEFAULT_SLICES,
            kernel: Kernel::Sinc,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSection {
    pub focal_length_m: f64,
    pub magnification: f64,
    pub shift_mode: ShiftMode,
    /// Side of the camera output grid; defaults to the simulation grid.
    pub grid_n: Option<usize>,
}

impl Default for CameraSection {
    fn default() -> Self {
        Self {
            focal_length_m: 0.25,
            magnification: 1.0,
            shift_mode: ShiftMode::Fitted,
            grid_n: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Bin,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Bin => "bin",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("spdc-out"),
            formats: vec![Format::Csv],
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub variable: Option<SweptVariable>,
    pub values: Option<Vec<f64>>,
    pub axes: Option<Vec<TransverseAxis>>,
    pub convergence_check: bool,
}

/// A parsed, validated configuration.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: RunConfig,
    pub params: ExperimentParams,
    pub sellmeier: SellmeierSet64,
}

impl Loaded {
    pub fn experiment(&self, params: ExperimentParams) -> spdc_core::Result<Experiment64> {
        Experiment64::with_sellmeier(params, self.sellmeier.clone())
    }
}

pub fn load(path: &Path) -> Result<Loaded, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: path.to_owned(),
        line: None,
        message: format!("cannot read config: {e}"),
    })?;
    parse(&text, path)
}

/// Parses and validates `text`; `path` labels errors and anchors relative
/// file references.
pub fn parse(text: &str, path: &Path) -> Result<Loaded, ConfigError> {
    let err = |line: Option<usize>, message: String| ConfigError {
        path: path.to_owned(),
        line,
        message,
    };
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        err(line, e.message().trim().to_string())
    })?;
    let at = |section: &str, key: &str| key_line(text, section, key);

    if !config.crystal.kind.eq_ignore_ascii_case("bbo") {
        return Err(err(
            at("crystal", "type"),
            format!(
                "unsupported crystal type '{}', only bbo is modelled",
                config.crystal.kind
            ),
        ));
    }
    let sellmeier = match &config.crystal.sellmeier_file {
        None => SellmeierSet64::bbo(),
        Some(p) => {
            let full = path.parent().unwrap_or(Path::new(".")).join(p);
            SellmeierSet64::load(&full)
                .map_err(|e| err(at("crystal", "sellmeier_file"), format!("{}: {e}", full.display())))?
        }
    };

    let pump = config.pump.wavelength_nm;
    let signal_nm = match (config.wavelengths.degenerate, config.wavelengths.signal_nm) {
        (Some(true), Some(s)) if (s - 2.0 * pump).abs() > 1e-9 * s.abs() => {
            return Err(err(
                at("wavelengths", "signal_nm"),
                format!("degenerate = true conflicts with signal_nm = {s} (pump {pump} nm)"),
            ))
        }
        (Some(false), None) => {
            return Err(err(
                at("wavelengths", "degenerate"),
                "degenerate = false needs signal_nm".into(),
            ));
        }
        (_, Some(s)) => s,
        (_, None) => 2.0 * pump,
    };

    let checks: [(&str, &str, f64); 7] = [
        ("crystal", "length_mm", config.crystal.length_mm),
        ("pump", "wavelength_nm", pump),
        ("pump", "waist_um", config.pump.waist_um),
        ("wavelengths", "signal_nm", signal_nm),
        ("filter", "fwhm_nm", config.filter.fwhm_nm),
        ("camera", "focal_length_m", config.camera.focal_length_m),
        ("camera", "magnification", config.camera.magnification),
    ];
    for (section, key, v) in checks {
        if !(v.is_finite() && v > 0.0) {
            return Err(err(
                at(section, key),
                format!("{section}.{key} must be positive, got {v}"),
            ));
        }
    }
    if let Some(c) = config.filter.center_nm {
        if !(c.is_finite() && c > 0.0) {
            return Err(err(
                at("filter", "center_nm"),
                format!("filter.center_nm must be positive, got {c}"),
            ));
        }
    }
    for (key, v) in [
        ("sum_extent", config.grid.sum_extent),
        ("diff_extent", config.grid.diff_extent),
    ] {
        if let Some(v) = v {
            if !(v.is_finite() && v > 0.0) {
                return Err(err(at("grid", key), format!("grid.{key} must be positive, got {v}")));
            }
        }
    }
    if config.grid.n < 2 {
        return Err(err(
            at("grid", "n"),
            format!("grid.n must be at least 2, got {}", config.grid.n),
        ));
    }
    if config.spectral.slices == 0 {
        return Err(err(
            at("spectral", "slices"),
            "spectral.slices must be at least 1".into(),
        ));
    }
    if config.camera.grid_n.is_some_and(|n| n < 2) {
        return Err(err(at("camera", "grid_n"), "camera.grid_n must be at least 2".into()));
    }
    if config.output.formats.is_empty() {
        return Err(err(
            at("output", "formats"),
            "output.formats must list at least one format".into(),
        ));
    }
    if let Some(v) = &config.sweep.values {
        if v.is_empty()
            || v.windows(2).any(|w| w[1] <= w[0] || w[1].is_nan())
            || v.iter().any(|x| !(x.is_finite() && *x > 0.0))
        {
            return Err(err(
                at("sweep", "values"),
                "sweep.values must be positive and strictly increasing".into(),
            ));
        }
    }

    let params = ExperimentParams {
        pump_nm: pump,
        signal_nm,
        crystal_length_mm: config.crystal.length_mm,
        pump_waist_um: config.pump.waist_um,
        theta_p_deg: config.crystal.theta_p_deg,
        filter_shape: config.filter.shape,
        filter_fwhm_nm: config.filter.fwhm_nm,
        filter_center_nm: config.filter.center_nm,
        filter_arm: config.filter.arm,
        grid_n: config.grid.n,
        grid_layout: config.grid.layout,
        sum_extent: config.grid.sum_extent,
        diff_extent: config.grid.diff_extent,
        memory_budget_bytes: config.grid.memory_budget_bytes,
        slices: config.spectral.slices,
        kernel: config.spectral.kernel,
        focal_length_m: config.camera.focal_length_m,
        magnification: config.camera.magnification,
        shift_mode: config.camera.shift_mode,
    };

    // Builds the models once so wavelength, Sellmeier-range and
    // phase-matching problems surface at load time.
    if let Err(e) = Experiment64::with_sellmeier(params.clone(), sellmeier.clone()) {
        if !e.is_numerical() {
            let line = match &e {
                spdc_core::Error::OutOfRange { .. } => at("wavelengths", "signal_nm").or(at("pump", "wavelength_nm")),
                _ => None,
            };
            return Err(err(line, e.to_string()));
        }
    }

    Ok(Loaded {
        config,
        params,
        sellmeier,
    })
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// 1-based line of `key = ...` inside `[section]`, if present.
fn key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix('[') {
            current = h.trim_end_matches(']').trim().to_string();
            continue;
        }
        if current != section {
            continue;
        }
        if let Some((k, _)) = line.split_once('=') {
            if k.trim() == key {
                return Some(i + 1);
            }
        }
    }
    None
}
