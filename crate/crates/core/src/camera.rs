//! Far-field → camera-plane mapping, and the per-slice idler rescaling and
//! walk-off shift that undo the chromatic skew of a non-degenerate JPD.
//!
//! A lens of focal length f images transverse wavevector q onto
//! Y = M·(f/k)·q with the vacuum wavenumber k = 2π/λ of each arm. Slices at
//! different wavelengths therefore land on differently scaled axes; summing
//! them without compensation tilts the ridge to −λ_s/λ_i.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::biphoton::{TransverseAxis, TransverseSlice};
use crate::dispersion::SpdcWavelengths;
use crate::error::{Error, Result};
use crate::experiment::Experiment;
use crate::grid::Lattice;
use crate::resample::deposit;
use crate::scalar::{compensated_sum, Real};
use crate::spectral::{JointDistribution, Plane};
use crate::stats::{ridge_slope, ProbabilityTable, RidgeFit};

/// Source of the ridge offset removed by [`walkoff_correct`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftMode {
    /// Offset fitted from the slice's own momentum-space ridge.
    #[default]
    Fitted,
    /// Offset b = k_{y,p}, the pump's transverse carrier.
    Literal,
}

impl std::str::FromStr for ShiftMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fitted" => Ok(ShiftMode::Fitted),
            "literal" => Ok(ShiftMode::Literal),
            _ => Err(Error::Usage(format!(
                "unknown shift mode '{s}', expected fitted or literal"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CameraMapping<T> {
    pub focal_length: T,
    pub magnification: T,
}

impl<T: Real> CameraMapping<T> {
    pub fn new(focal_length: T, magnification: T) -> Result<Self> {
        if !(focal_length > T::zero() && magnification > T::zero()) {
            return Err(Error::Invalid("focal length and magnification must be positive".into()));
        }
        Ok(Self {
            focal_length,
            magnification,
        })
    }

    /// M·f/k = M·f·λ/(2π), metres per rad/m.
    pub fn scale(&self, lambda: crate::dispersion::Wavelength<T>) -> T {
        self.magnification * self.focal_length / lambda.vacuum_wavenumber()
    }
}

/// One spectral slice on camera coordinates (Y_s, Y_i).
#[derive(Clone, Debug)]
pub struct CameraSlice<T> {
    pub axis: TransverseAxis,
    pub lattice: Lattice<T>,
    pub intensity: Array2<T>,
    pub wavelengths: SpdcWavelengths<T>,
    pub weight: T,
    /// Signal-arm scale M·f/k_s used for shifts after rescaling.
    pub signal_scale: T,
    /// Idler offset b of the momentum-space ridge q_i ≈ m·q_s + b, rad/m.
    pub fitted_offset: T,
    pub rescaled: bool,
    pub shifted: bool,
}

/// Relabels a far-field slice with camera coordinates; intensities are
/// unchanged.
pub fn map_to_camera<T: Real>(
    jid: &JointDistribution<T>,
    mapping: &CameraMapping<T>,
    wavelengths: SpdcWavelengths<T>,
    weight: T,
) -> Result<CameraSlice<T>> {
    if jid.plane != Plane::Far {
        return Err(Error::Usage("camera mapping needs a far-field distribution".into()));
    }
    let fit = ridge_slope(&ProbabilityTable::from_intensity(jid.lattice, &jid.data)?)?;
    let ss = mapping.scale(wavelengths.signal);
    let si = mapping.scale(wavelengths.idler);
    Ok(CameraSlice {
        axis: jid.axis,
        lattice: jid.lattice.scaled(ss, si),
        intensity: jid.data.clone(),
        wavelengths,
        weight,
        signal_scale: ss,
        fitted_offset: fit.idler_offset(),
        rescaled: false,
        shifted: false,
    })
}

/// Multiplies the idler camera axis by λ_s/λ_i, putting both arms on the
/// signal's scale.
pub fn rescale_idler<T: Real>(mut slice: CameraSlice<T>) -> CameraSlice<T> {
    let f = slice.wavelengths.signal.meters() / slice.wavelengths.idler.meters();
    slice.lattice = slice.lattice.scaled(T::one(), f);
    slice.rescaled = true;
    slice
}

/// Translates the idler camera axis by −(M f/k_s)·b.
pub fn walkoff_correct<T: Real>(mut slice: CameraSlice<T>, mode: ShiftMode, pump_k_y: T) -> Result<CameraSlice<T>> {
    if slice.axis != TransverseAxis::Y {
        return Err(Error::Usage("walk-off correction applies to the y axis only".into()));
    }
    let b = match mode {
        ShiftMode::Fitted => slice.fitted_offset,
        ShiftMode::Literal => pump_k_y,
    };
    slice.lattice = slice.lattice.translated(T::zero(), -slice.signal_scale * b);
    slice.shifted = true;
    Ok(slice)
}

/// Rescale then (y axis only) shift.
pub fn correct_slice<T: Real>(slice: CameraSlice<T>, mode: ShiftMode, pump_k_y: T) -> Result<CameraSlice<T>> {
    let s = rescale_idler(slice);
    match s.axis {
        TransverseAxis::Y => walkoff_correct(s, mode, pump_k_y),
        TransverseAxis::X => Ok(s),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SliceRecord {
    pub signal_nm: f64,
    pub idler_nm: f64,
    pub weight: f64,
}

/// Weighted sum of camera slices on a common square grid.
#[derive(Clone, Debug)]
pub struct CameraJpd<T> {
    pub axis: TransverseAxis,
    pub lattice: Lattice<T>,
    pub intensity: Array2<T>,
    pub corrected: bool,
    pub slices: Vec<SliceRecord>,
    /// Mass that fell outside the grid (zero unless the extent was forced).
    pub clipped: T,
}

impl<T: Real> CameraJpd<T> {
    pub fn probability_table(&self) -> Result<ProbabilityTable<T>> {
        ProbabilityTable::from_intensity(self.lattice, &self.intensity)
    }

    pub fn ridge(&self) -> Result<RidgeFit<T>> {
        ridge_slope(&self.probability_table()?)
    }

    pub fn total(&self) -> T {
        compensated_sum(self.intensity.iter().copied()) * self.lattice.cell_area()
    }

    /// As a far-plane [`JointDistribution`] for export.
    pub fn to_distribution(&self) -> Result<JointDistribution<T>> {
        JointDistribution::new(Plane::Far, self.axis, self.lattice, self.intensity.clone())
    }
}

/// Square `n × n` grid centred on zero enclosing every point in `bounds`.
fn common_grid<T: Real>(n: usize, half: T) -> Result<Lattice<T>> {
    // one spare cell on each side keeps the bilinear stencil inside
    let h = half * T::from_count(n) / T::from_count(n.saturating_sub(2).max(1));
    Lattice::cell_centered(n, n, (-h, h), (-h, h))
}

fn half_extent<T: Real>(lattice: &Lattice<T>) -> T {
    lattice.max_abs()
}

/// Incremental weighted sum onto a fixed grid.
pub struct CameraAccumulator<T> {
    axis: TransverseAxis,
    lattice: Lattice<T>,
    intensity: Array2<T>,
    clipped: T,
    slices: Vec<SliceRecord>,
    corrected: bool,
}

impl<T: Real> CameraAccumulator<T> {
    pub fn new(axis: TransverseAxis, n: usize, half_extent: T, corrected: bool) -> Result<Self> {
        let lattice = common_grid(n, half_extent)?;
        Ok(Self {
            axis,
            lattice,
            intensity: Array2::zeros((n, n)),
            clipped: T::zero(),
            slices: Vec::new(),
            corrected,
        })
    }

    pub fn add(&mut self, s: &CameraSlice<T>) -> Result<()> {
        if s.axis != self.axis {
            return Err(Error::Usage("slices from different axes".into()));
        }
        let c = deposit(&s.lattice, &s.intensity, s.weight, &self.lattice, &mut self.intensity)?;
        self.clipped = self.clipped + c;
        self.slices.push(SliceRecord {
            signal_nm: s.wavelengths.signal.nm().as_f64(),
            idler_nm: s.wavelengths.idler.nm().as_f64(),
            weight: s.weight.as_f64(),
        });
        Ok(())
    }

    pub fn finish(self) -> CameraJpd<T> {
        if self.clipped > T::zero() {
            log::warn!("camera grid clipped mass {}", self.clipped);
        }
        CameraJpd {
            axis: self.axis,
            lattice: self.lattice,
            intensity: self.intensity,
            corrected: self.corrected,
            slices: self.slices,
            clipped: self.clipped,
        }
    }
}

fn sum_slices<T: Real>(slices: &[CameraSlice<T>], n: usize, corrected: bool) -> Result<CameraJpd<T>> {
    let first = slices
        .first()
        .ok_or_else(|| Error::Invalid("no camera slices".into()))?;
    let half = slices
        .iter()
        .map(|s| half_extent(&s.lattice))
        .fold(T::zero(), |a, b| a.max(b));
    let mut acc = CameraAccumulator::new(first.axis, n, half, corrected)?;
    for s in slices {
        acc.add(s)?;
    }
    Ok(acc.finish())
}

/// Slices summed with their own per-arm scales (no compensation).
pub fn uncorrected_jpd<T: Real>(slices: &[CameraSlice<T>], n: usize) -> Result<CameraJpd<T>> {
    sum_slices(slices, n, false)
}

/// Slices rescaled and shifted one by one, then summed.
pub fn corrected_jpd<T: Real>(
    slices: &[CameraSlice<T>],
    n: usize,
    mode: ShiftMode,
    pump_k_y: T,
) -> Result<CameraJpd<T>> {
    let fixed = slices
        .iter()
        .cloned()
        .map(|s| correct_slice(s, mode, pump_k_y))
        .collect::<Result<Vec<_>>>()?;
    sum_slices(&fixed, n, true)
}

/// Both camera JPDs and their ridge fits.
#[derive(Clone, Debug)]
pub struct CameraPair<T> {
    pub uncorrected: CameraJpd<T>,
    pub corrected: CameraJpd<T>,
    pub report: SlopeReport<T>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SlopeReport<T> {
    pub axis: TransverseAxis,
    pub method: &'static str,
    pub shift_mode: ShiftMode,
    /// d Y_s / d Y_i of the uncorrected JPD.
    pub uncorrected_slope: T,
    pub corrected_slope: T,
    /// Regression (C/V_i) slopes in the same orientation.
    pub uncorrected_ols_slope: T,
    pub corrected_ols_slope: T,
    /// −λ_s/λ_i at the nominal wavelengths.
    pub analytic_uncorrected_slope: T,
    /// Corrected ridge crossing of Y_s = 0 in grid cells.
    pub corrected_offset_cells: T,
}

/// Streams every spectral slice of `exp` through the camera model on
/// `axis`, producing the uncorrected and corrected JPDs on `n × n` grids.
///
/// Each slice is evaluated twice (grid extents first, then deposition) so
/// only one slice is held in memory at a time.
pub fn camera_pair<T: Real>(exp: &Experiment<T>, axis: TransverseAxis, n: usize) -> Result<CameraPair<T>> {
    let p = &exp.params;
    let mapping = CameraMapping::new(T::lit(p.focal_length_m), T::lit(p.magnification))?;
    let mode = p.shift_mode;
    let k_y = exp.model.pump.k_y;
    let slice_at = |s: &crate::spectral::SpectralSample<T>| -> Result<CameraSlice<T>> {
        let ts = TransverseSlice {
            axis,
            lattice: exp.lattice,
            wavelengths: s.wavelengths,
        };
        let psi = exp.model.evaluate_grid(&ts, exp.grid.memory_budget_bytes)?;
        let jid = JointDistribution::new(Plane::Far, axis, exp.lattice, psi.mapv(|a| a * a))?;
        map_to_camera(&jid, &mapping, s.wavelengths, s.weight)
    };
    let active: Vec<_> = exp.sampling.samples.iter().filter(|s| s.weight > T::zero()).collect();
    if active.is_empty() {
        return Err(Error::Invalid("no spectral slice has non-zero weight".into()));
    }
    let (mut half_u, mut half_c) = (T::zero(), T::zero());
    for s in &active {
        let raw = slice_at(s)?;
        half_u = half_u.max(half_extent(&raw.lattice));
        let fixed = correct_slice(raw, mode, k_y)?;
        half_c = half_c.max(half_extent(&fixed.lattice));
    }
    let mut unc = CameraAccumulator::new(axis, n, half_u, false)?;
    let mut cor = CameraAccumulator::new(axis, n, half_c, true)?;
    for s in &active {
        let raw = slice_at(s)?;
        unc.add(&raw)?;
        cor.add(&correct_slice(raw, mode, k_y)?)?;
    }
    let (unc, cor) = (unc.finish(), cor.finish());
    let (fu, fc) = (unc.ridge()?, cor.ridge()?);
    let w = exp.wavelengths();
    let cell = cor.lattice.spacings().map(|(d, _)| d).unwrap_or_else(T::one);
    let report = SlopeReport {
        axis,
        method: fu.method,
        shift_mode: mode,
        uncorrected_slope: fu.slope,
        corrected_slope: fc.slope,
        uncorrected_ols_slope: fu.ols_slope,
        corrected_ols_slope: fc.ols_slope,
        analytic_uncorrected_slope: -w.signal.meters() / w.idler.meters(),
        corrected_offset_cells: fc.idler_offset() / cell,
    };
    Ok(CameraPair {
        uncorrected: unc,
        corrected: cor,
        report,
    })
}
