//! Spectral filtering, incoherent integration over frequency slices, and the
//! per-slice transform to the near field.

use ndarray::{Array2, Zip};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::biphoton::{BiphotonModel, TransverseAxis, TransverseSlice};
use crate::dispersion::{idler_wavelength, SpdcWavelengths, Wavelength};
use crate::error::{Error, Result};
use crate::fft::CenteredFft2;
use crate::grid::Lattice;
use crate::resample::deposit;
use crate::scalar::{compensated_sum, Real};

/// Default number of spectral slices.
pub const DEFAULT_SLICES: usize = 31;

/// Half-width of the sampled Gaussian support in units of the FWHM.
pub const GAUSSIAN_SUPPORT_FWHM: f64 = 2.5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterShape {
    #[default]
    Gaussian,
    Tophat,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    #[default]
    Signal,
    Idler,
}

/// Bandpass filter in front of one arm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FilterSpec<T> {
    pub shape: FilterShape,
    pub center: Wavelength<T>,
    /// Full width at half maximum, metres.
    pub fwhm: T,
    pub arm: Arm,
}

impl<T: Real> FilterSpec<T> {
    pub fn new(shape: FilterShape, center: Wavelength<T>, fwhm: T, arm: Arm) -> Result<Self> {
        if !(fwhm > T::zero() && fwhm.is_finite()) {
            return Err(Error::Invalid(format!("filter FWHM {fwhm} m must be positive")));
        }
        if !(center.meters() > fwhm * T::lit(GAUSSIAN_SUPPORT_FWHM)) {
            return Err(Error::Invalid("filter support reaches non-positive wavelengths".into()));
        }
        Ok(Self {
            shape,
            center,
            fwhm,
            arm,
        })
    }

    /// σ_λ = FWHM/(2√(2 ln 2)).
    pub fn sigma_lambda(&self) -> T {
        self.fwhm / (T::lit(2.0) * (T::lit(2.0) * T::LN_2()).sqrt())
    }

    /// σ_ω = 2πc σ_λ/λ₀², the first-order image of σ_λ.
    pub fn sigma_omega(&self) -> T {
        let l0 = self.center.meters();
        T::TAU() * T::lit(crate::scalar::SPEED_OF_LIGHT) * self.sigma_lambda() / (l0 * l0)
    }

    /// Power transmission at `lambda`, in [0, 1].
    ///
    /// Gaussian: exp(−Δω²/2σ_ω²) with the frequency offset taken to first
    /// order, Δω = 2πc(λ₀ − λ)/λ₀². Top-hat: 1 on |λ − λ₀| ≤ Δλ/2.
    pub fn transmission(&self, lambda: Wavelength<T>) -> T {
        let l0 = self.center.meters();
        let d = lambda.meters() - l0;
        match self.shape {
            FilterShape::Gaussian => {
                let dw = T::TAU() * T::lit(crate::scalar::SPEED_OF_LIGHT) * d / (l0 * l0);
                let s = self.sigma_omega();
                (-(dw * dw) / (T::lit(2.0) * s * s)).exp()
            }
            FilterShape::Tophat => {
                let half = self.fwhm * T::lit(0.5) * (T::one() + T::tolerance(1e-12));
                if d.abs() <= half {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Wavelength interval sampled by [`sample_spectrum`].
    pub fn support(&self) -> (Wavelength<T>, Wavelength<T>) {
        let half = match self.shape {
            FilterShape::Gaussian => self.fwhm * T::lit(GAUSSIAN_SUPPORT_FWHM),
            FilterShape::Tophat => self.fwhm * T::lit(0.5),
        };
        let l0 = self.center.meters();
        (Wavelength::from_meters(l0 - half), Wavelength::from_meters(l0 + half))
    }
}

/// One monochromatic slice and its filter weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralSample<T> {
    pub wavelengths: SpdcWavelengths<T>,
    pub weight: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralSampling<T> {
    pub samples: Vec<SpectralSample<T>>,
}

impl<T: Real> SpectralSampling<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The slice at the filter centre (or nearest to it).
    pub fn central(&self) -> &SpectralSample<T> {
        &self.samples[self.samples.len() / 2]
    }

    pub fn total_weight(&self) -> T {
        compensated_sum(self.samples.iter().map(|s| s.weight))
    }
}

/// Uniform samples over the filter support, weighted by transmission at the
/// filtered arm; the partner wavelength follows from energy conservation.
/// `n = 1` gives the centre slice with weight 1.
pub fn sample_spectrum<T: Real>(filter: &FilterSpec<T>, pump: Wavelength<T>, n: usize) -> Result<SpectralSampling<T>> {
    if n == 0 {
        return Err(Error::Invalid("spectral sampling needs at least one slice".into()));
    }
    let triple = |filtered: Wavelength<T>| -> Result<SpdcWavelengths<T>> {
        let partner = idler_wavelength(pump, filtered)?;
        Ok(match filter.arm {
            Arm::Signal => SpdcWavelengths {
                pump,
                signal: filtered,
                idler: partner,
            },
            Arm::Idler => SpdcWavelengths {
                pump,
                signal: partner,
                idler: filtered,
            },
        })
    };
    if n == 1 {
        return Ok(SpectralSampling {
            samples: vec![SpectralSample {
                wavelengths: triple(filter.center)?,
                weight: T::one(),
            }],
        });
    }
    let (lo, hi) = filter.support();
    let (lo, hi) = (lo.meters(), hi.meters());
    let last = T::from_count(n - 1);
    let mut samples = Vec::with_capacity(n);
    for j in 0..n {
        // symmetric about the centre: pair j with n−1−j exactly
        let t = (T::from_count(2 * j) - last) / last;
        let lambda = Wavelength::from_meters(filter.center.meters() + t * (hi - lo) * T::lit(0.5));
        samples.push(SpectralSample {
            wavelengths: triple(lambda)?,
            weight: filter.transmission(lambda),
        });
    }
    Ok(SpectralSampling { samples })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    /// Momentum coordinates, rad/m.
    Far,
    /// Crystal-plane positions, m.
    Near,
}

impl Plane {
    pub fn name(self) -> &'static str {
        match self {
            Plane::Far => "far",
            Plane::Near => "near",
        }
    }
}

impl std::fmt::Display for Plane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Plane {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "far" => Ok(Plane::Far),
            "near" => Ok(Plane::Near),
            _ => Err(Error::Usage(format!("unknown plane '{s}', expected near or far"))),
        }
    }
}

/// Non-negative two-photon intensity on a lattice of (signal, idler) points.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution<T> {
    pub plane: Plane,
    pub axis: TransverseAxis,
    pub lattice: Lattice<T>,
    pub data: Array2<T>,
}

impl<T: Real> JointDistribution<T> {
    pub fn new(plane: Plane, axis: TransverseAxis, lattice: Lattice<T>, data: Array2<T>) -> Result<Self> {
        if data.dim() != (lattice.rows, lattice.cols) {
            return Err(Error::Invalid(format!(
                "intensity matrix {:?} does not match a {}x{} lattice",
                data.dim(),
                lattice.rows,
                lattice.cols
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(v.is_finite() && **v >= T::zero())) {
            return Err(Error::Invalid(format!(
                "intensity entry {bad} is negative or not finite"
            )));
        }
        Ok(Self {
            plane,
            axis,
            lattice,
            data,
        })
    }

    /// Σ I · cell area.
    pub fn total(&self) -> T {
        compensated_sum(self.data.iter().copied()) * self.lattice.cell_area()
    }

    /// Mass-preserving copy on an `n × n` axis-aligned grid covering the
    /// lattice with one spare cell on each side. Axis-aligned input is
    /// returned unchanged.
    pub fn to_rectangular(&self, n: usize) -> Result<Self> {
        if self.lattice.is_axis_aligned() {
            return Ok(self.clone());
        }
        if n < 3 {
            return Err(Error::Invalid("resampled grid needs at least 3 cells".into()));
        }
        let ((s0, s1), (i0, i1)) = self.lattice.bounds();
        let span = T::from_count(n - 2);
        let (ds, di) = ((s1 - s0) / span, (i1 - i0) / span);
        let onto = Lattice::cell_centered(n, n, (s0 - ds, s1 + ds), (i0 - di, i1 + di))?;
        let mut out = Array2::zeros((n, n));
        deposit(&self.lattice, &self.data, T::one(), &onto, &mut out)?;
        Self::new(self.plane, self.axis, onto, out)
    }
}

/// Far- and near-field distributions of the same configuration.
#[derive(Clone, Debug)]
pub struct JidPair<T> {
    pub far: JointDistribution<T>,
    pub near: JointDistribution<T>,
}

/// Bytes per lattice point needed for the requested planes.
pub fn bytes_per_point<T>(near: bool) -> usize {
    let s = std::mem::size_of::<T>();
    // amplitude + far accumulator, plus near accumulator and three complex
    // work arrays when transforming
    if near {
        s * (3 + 6)
    } else {
        s * 2
    }
}

fn accumulate<T: Real>(
    model: &BiphotonModel<T>,
    axis: TransverseAxis,
    lattice: &Lattice<T>,
    sampling: &SpectralSampling<T>,
    memory_budget_bytes: usize,
    want_near: bool,
) -> Result<(Array2<T>, Option<Array2<T>>)> {
    if sampling.is_empty() {
        return Err(Error::Invalid("no spectral slices".into()));
    }
    let required = lattice.len().saturating_mul(bytes_per_point::<T>(want_near));
    if required > memory_budget_bytes {
        return Err(Error::Resource {
            rows: lattice.rows,
            cols: lattice.cols,
            required,
            budget: memory_budget_bytes,
        });
    }
    let dim = (lattice.rows, lattice.cols);
    let mut far = Array2::<T>::zeros(dim);
    let mut near = want_near.then(|| Array2::<T>::zeros(dim));
    let fft = want_near.then(|| CenteredFft2::<T>::new(dim.0, dim.1));
    let mut spectrum = want_near.then(|| Array2::<Complex<T>>::zeros(dim));
    // slices in fixed order; each accumulation is elementwise
    for s in &sampling.samples {
        if s.weight == T::zero() {
            continue;
        }
        let slice = TransverseSlice {
            axis,
            lattice: *lattice,
            wavelengths: s.wavelengths,
        };
        let psi = model.evaluate_grid(&slice, usize::MAX)?;
        let w = s.weight;
        Zip::from(&mut far).and(&psi).par_for_each(|f, &a| *f = *f + w * a * a);
        if let (Some(near), Some(fft), Some(spec)) = (near.as_mut(), fft.as_ref(), spectrum.as_mut()) {
            fft.transform(&psi, lattice, spec);
            Zip::from(near)
                .and(&*spec)
                .par_for_each(|n, z| *n = *n + w * z.norm_sqr());
        }
    }
    Ok((far, near))
}

/// Σ_slices w·|Ψ|² on the momentum lattice (not normalised).
pub fn far_field_jid<T: Real>(
    model: &BiphotonModel<T>,
    axis: TransverseAxis,
    lattice: &Lattice<T>,
    sampling: &SpectralSampling<T>,
    memory_budget_bytes: usize,
) -> Result<JointDistribution<T>> {
    let (far, _) = accumulate(model, axis, lattice, sampling, memory_budget_bytes, false)?;
    JointDistribution::new(Plane::Far, axis, *lattice, far)
}

/// Σ_slices w·|F[Ψ]|² on the conjugate position lattice.
pub fn near_field_jid<T: Real>(
    model: &BiphotonModel<T>,
    axis: TransverseAxis,
    lattice: &Lattice<T>,
    sampling: &SpectralSampling<T>,
    memory_budget_bytes: usize,
) -> Result<JointDistribution<T>> {
    Ok(jid_pair(model, axis, lattice, sampling, memory_budget_bytes)?.near)
}

/// Both planes from a single pass over the spectral slices.
pub fn jid_pair<T: Real>(
    model: &BiphotonModel<T>,
    axis: TransverseAxis,
    lattice: &Lattice<T>,
    sampling: &SpectralSampling<T>,
    memory_budget_bytes: usize,
) -> Result<JidPair<T>> {
    let (far, near) = accumulate(model, axis, lattice, sampling, memory_budget_bytes, true)?;
    Ok(JidPair {
        far: JointDistribution::new(Plane::Far, axis, *lattice, far)?,
        near: JointDistribution::new(
            Plane::Near,
            axis,
            lattice.conjugate(),
            near.expect("near field requested"),
        )?,
    })
}
