//! Phase mismatch, phase-matching kernel, pump envelope and the transverse
//! biphoton amplitude on one transverse axis at a time.

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{CrystalSetup, SpdcWavelengths, Wavelength};
use crate::error::{Error, Result};
use crate::grid::Lattice;
use crate::scalar::{sinc, Real};

/// Decay constant of the exponential stand-in for the sinc kernel,
/// exp(−α|u|) ≈ sinc(u) with matched 1/e width.
pub const GAUSSIAN_KERNEL_ALPHA: f64 = 0.455;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransverseAxis {
    X,
    Y,
}

impl TransverseAxis {
    pub fn name(self) -> &'static str {
        match self {
            TransverseAxis::X => "x",
            TransverseAxis::Y => "y",
        }
    }
}

impl std::fmt::Display for TransverseAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TransverseAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(TransverseAxis::X),
            "y" | "Y" => Ok(TransverseAxis::Y),
            _ => Err(Error::Usage(format!("unknown axis '{s}', expected x or y"))),
        }
    }
}

/// Longitudinal phase-matching kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Sinc,
    /// exp(−α|u|); turns the degenerate amplitude into a double Gaussian.
    Gaussian,
}

impl Kernel {
    #[inline]
    pub fn eval<T: Real>(self, u: T) -> T {
        match self {
            Kernel::Sinc => sinc(u),
            Kernel::Gaussian => (-T::lit(GAUSSIAN_KERNEL_ALPHA) * u.abs()).exp(),
        }
    }
}

/// Monochromatic Gaussian pump inside the crystal.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PumpSpec<T> {
    pub wavelength: Wavelength<T>,
    /// Beam waist w₀, metres.
    pub waist: T,
    /// k_p = 2π n_eff(θ_p, λ_p)/λ_p.
    pub k: T,
    /// k_p sin ρ.
    pub k_y: T,
    /// k_p cos ρ.
    pub k_z: T,
}

impl<T: Real> PumpSpec<T> {
    pub fn new(wavelength: Wavelength<T>, waist: T, crystal: &CrystalSetup<T>) -> Result<Self> {
        if !(waist > T::zero() && waist.is_finite()) {
            return Err(Error::Invalid(format!("pump waist {waist} m must be positive")));
        }
        let k = crystal.pump_wavenumber(wavelength)?;
        let (s, c) = crystal.rho.sin_cos();
        Ok(Self {
            wavelength,
            waist,
            k,
            k_y: k * s,
            k_z: k * c,
        })
    }

    pub fn k_x(&self) -> T {
        T::zero()
    }
}

/// Components of k_p − k_s − k_i.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseMismatch<T> {
    pub dk_x: T,
    pub dk_y: T,
    pub dk_z: T,
}

/// sinc²(Δk_z L/2).
pub fn sinc_efficiency<T: Real>(dk_z: T, length: T) -> T {
    let s = sinc(dk_z * length * T::lit(0.5));
    s * s
}

/// exp[−w₀²(Δk_x² + Δk_y²)/4].
pub fn pump_envelope<T: Real>(dk_x: T, dk_y: T, waist: T) -> T {
    (-(waist * waist) * (dk_x * dk_x + dk_y * dk_y) * T::lit(0.25)).exp()
}

/// One transverse axis of one spectral slice, sampled on a lattice.
#[derive(Clone, Copy, Debug)]
pub struct TransverseSlice<T> {
    pub axis: TransverseAxis,
    pub lattice: Lattice<T>,
    pub wavelengths: SpdcWavelengths<T>,
}

/// Per-slice wavenumbers, computed once per grid.
#[derive(Clone, Copy, Debug)]
struct SliceWavenumbers<T> {
    k_s: T,
    k_i: T,
    /// (k_s0 − k_s) + (k_i0 − k_i)
    detuning: T,
}

/// Amplitude model for a crystal, pump and nominal wavelength pair.
///
/// Δk_z is re-centred so that collinear emission at the nominal wavelengths
/// is exactly phase matched, as an aligned crystal would be.
#[derive(Clone, Debug)]
pub struct BiphotonModel<T> {
    pub crystal: CrystalSetup<T>,
    pub pump: PumpSpec<T>,
    pub nominal: SpdcWavelengths<T>,
    pub kernel: Kernel,
    k_s0: T,
    k_i0: T,
    tan_rho: T,
}

impl<T: Real> BiphotonModel<T> {
    pub fn new(crystal: CrystalSetup<T>, pump: PumpSpec<T>, nominal: SpdcWavelengths<T>) -> Result<Self> {
        if nominal.pump != pump.wavelength {
            return Err(Error::Invalid("pump wavelength differs from nominal triple".into()));
        }
        let k_s0 = crystal.sellmeier.k_ordinary(nominal.signal)?;
        let k_i0 = crystal.sellmeier.k_ordinary(nominal.idler)?;
        let tan_rho = crystal.rho.tan();
        Ok(Self {
            crystal,
            pump,
            nominal,
            kernel: Kernel::Sinc,
            k_s0,
            k_i0,
            tan_rho,
        })
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    /// Mean of the nominal signal and idler wavenumbers in the crystal.
    pub fn mean_wavenumber(&self) -> T {
        (self.k_s0 + self.k_i0) * T::lit(0.5)
    }

    fn wavenumbers(&self, w: &SpdcWavelengths<T>) -> Result<SliceWavenumbers<T>> {
        if w.pump != self.pump.wavelength {
            return Err(Error::Invalid(
                "slice pump wavelength differs from the model pump".into(),
            ));
        }
        let k_s = self.crystal.sellmeier.k_ordinary(w.signal)?;
        let k_i = self.crystal.sellmeier.k_ordinary(w.idler)?;
        Ok(SliceWavenumbers {
            k_s,
            k_i,
            detuning: (self.k_s0 - k_s) + (self.k_i0 - k_i),
        })
    }

    /// Re-centred Δk_z. With raw Δk_z = k_zp − k_zs − k_zi − Δk_y tan ρ, the
    /// constant pump terms cancel against the nominal point, leaving
    /// (k_s0 − k_s) + (k_i0 − k_i) + Σ q²/(k + k_z) + (q_sy + q_iy) tan ρ.
    #[inline]
    fn dk_z(&self, qs: [T; 2], qi: [T; 2], kn: &SliceWavenumbers<T>) -> Option<T> {
        let qs2 = qs[0] * qs[0] + qs[1] * qs[1];
        let qi2 = qi[0] * qi[0] + qi[1] * qi[1];
        let ks2 = kn.k_s * kn.k_s;
        let ki2 = kn.k_i * kn.k_i;
        if qs2 >= ks2 || qi2 >= ki2 {
            return None;
        }
        let kzs = (ks2 - qs2).sqrt();
        let kzi = (ki2 - qi2).sqrt();
        Some(kn.detuning + qs2 / (kn.k_s + kzs) + qi2 / (kn.k_i + kzi) + (qs[1] + qi[1]) * self.tan_rho)
    }

    /// Phase mismatch for full transverse wavevectors `[q_x, q_y]`.
    pub fn mismatch(&self, qs: [T; 2], qi: [T; 2], w: &SpdcWavelengths<T>) -> Result<PhaseMismatch<T>> {
        let kn = self.wavenumbers(w)?;
        let dk_z = self.dk_z(qs, qi, &kn).ok_or_else(|| evanescent(qs, qi))?;
        Ok(PhaseMismatch {
            dk_x: self.pump.k_x() - qs[0] - qi[0],
            dk_y: self.pump.k_y - qs[1] - qi[1],
            dk_z,
        })
    }

    /// Small-angle form Σ q²/(2k) of the transverse contribution to Δk_z
    /// (plus the detuning and walk-off terms), for comparison.
    pub fn paraxial_dk_z(&self, qs: [T; 2], qi: [T; 2], w: &SpdcWavelengths<T>) -> Result<T> {
        let kn = self.wavenumbers(w)?;
        let two = T::lit(2.0);
        let qs2 = qs[0] * qs[0] + qs[1] * qs[1];
        let qi2 = qi[0] * qi[0] + qi[1] * qi[1];
        Ok(kn.detuning + qs2 / (two * kn.k_s) + qi2 / (two * kn.k_i) + (qs[1] + qi[1]) * self.tan_rho)
    }

    #[inline]
    fn amplitude_from(&self, qs: [T; 2], qi: [T; 2], dk_z: T) -> T {
        // envelope is centred on zero transverse carrier: evaluated at q_s + q_i
        let env = pump_envelope(qs[0] + qi[0], qs[1] + qi[1], self.pump.waist);
        env * self.kernel.eval(dk_z * self.crystal.length * T::lit(0.5))
    }

    /// Ψ = E(q_s + q_i) · K(Δk_z L/2) for full transverse wavevectors.
    pub fn amplitude(&self, qs: [T; 2], qi: [T; 2], w: &SpdcWavelengths<T>) -> Result<T> {
        let m = self.mismatch(qs, qi, w)?;
        Ok(self.amplitude_from(qs, qi, m.dk_z))
    }

    /// Amplitude at lattice point `(a_s, a_i)` on `axis`, the other axis zero.
    pub fn amplitude_on_axis(&self, axis: TransverseAxis, a_s: T, a_i: T, w: &SpdcWavelengths<T>) -> Result<T> {
        let (qs, qi) = embed(axis, a_s, a_i);
        self.amplitude(qs, qi, w)
    }

    /// Dense amplitude matrix over the slice lattice. Rows are evaluated in
    /// parallel; each element depends only on its own coordinates, so the
    /// output does not depend on the worker count.
    pub fn evaluate_grid(&self, slice: &TransverseSlice<T>, memory_budget_bytes: usize) -> Result<Array2<T>> {
        let lat = &slice.lattice;
        let required = lat.len().saturating_mul(std::mem::size_of::<T>());
        if required > memory_budget_bytes {
            return Err(Error::Resource {
                rows: lat.rows,
                cols: lat.cols,
                required,
                budget: memory_budget_bytes,
            });
        }
        let kn = self.wavenumbers(&slice.wavelengths)?;
        // the largest |q| sits at a lattice corner
        let lim = lat.max_abs();
        if lim * lim >= kn.k_s.min(kn.k_i).powi(2) {
            let (qs, qi) = embed(slice.axis, lim, lim);
            return Err(evanescent(qs, qi));
        }
        let mut out = Array2::<T>::zeros((lat.rows, lat.cols));
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(r, mut row)| {
                for (c, v) in row.iter_mut().enumerate() {
                    let p = lat.point(r, c);
                    let (qs, qi) = embed(slice.axis, p[0], p[1]);
                    let dkz = self.dk_z(qs, qi, &kn).unwrap_or_else(T::nan);
                    *v = self.amplitude_from(qs, qi, dkz);
                }
            });
        Ok(out)
    }
}

#[inline]
fn embed<T: Real>(axis: TransverseAxis, a_s: T, a_i: T) -> ([T; 2], [T; 2]) {
    match axis {
        TransverseAxis::X => ([a_s, T::zero()], [a_i, T::zero()]),
        TransverseAxis::Y => ([T::zero(), a_s], [T::zero(), a_i]),
    }
}

fn evanescent<T: Real>(qs: [T; 2], qi: [T; 2]) -> Error {
    Error::Domain(format!(
        "transverse wavevector ({}, {}) / ({}, {}) rad/m is evanescent",
        qs[0], qs[1], qi[0], qi[1]
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::SellmeierSet;
    use crate::grid::Lattice;

    fn model(signal_nm: f64) -> BiphotonModel<f64> {
        let w = SpdcWavelengths::new(Wavelength::from_nm(405.0), Wavelength::from_nm(signal_nm)).unwrap();
        let c = CrystalSetup::phase_matched(1e-3, SellmeierSet::bbo(), &w).unwrap();
        let p = PumpSpec::new(w.pump, 500e-6, &c).unwrap();
        BiphotonModel::new(c, p, w).unwrap()
    }

    #[test]
    fn pump_carrier_components() {
        let m = model(780.0);
        let p = m.pump;
        let rel = (p.k_y * p.k_y + p.k_z * p.k_z - p.k * p.k).abs() / (p.k * p.k);
        assert!(rel < 1e-10);
        assert_eq!(p.k_x(), 0.0);
    }

    #[test]
    fn aligned_point_is_phase_matched() {
        for s in [810.0, 780.0] {
            let m = model(s);
            let d = m.mismatch([0.0; 2], [0.0; 2], &m.nominal).unwrap();
            assert_eq!(d.dk_z, 0.0);
            assert_eq!(m.amplitude([0.0; 2], [0.0; 2], &m.nominal).unwrap(), 1.0);
        }
    }

    #[test]
    fn degenerate_transverse_mismatch_matches_paraxial() {
        let m = model(810.0);
        let k = m.crystal.sellmeier.k_ordinary(Wavelength::from_nm(810.0)).unwrap();
        let d = m.mismatch([1e5, 0.0], [-1e5, 0.0], &m.nominal).unwrap();
        let oracle = 1e10 / (2.0 * k) * 2.0;
        assert!((d.dk_z - oracle).abs() / oracle < 1e-3);
        assert!((d.dk_z - 7.8e2).abs() < 10.0);
        // x mirror symmetry
        let e = m.mismatch([-1e5, 0.0], [1e5, 0.0], &m.nominal).unwrap();
        assert_eq!(d.dk_z, e.dk_z);
    }

    #[test]
    fn evanescent_rejected() {
        let m = model(810.0);
        assert!(matches!(
            m.mismatch([2e7, 0.0], [0.0; 2], &m.nominal),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn kernel_values() {
        let l = 1e-3;
        assert_eq!(sinc_efficiency(0.0, l), 1.0);
        assert!(sinc_efficiency(std::f64::consts::TAU / l, l) < 1e-12);
        let v = sinc_efficiency(std::f64::consts::PI / l, l);
        assert!((v - (2.0 / std::f64::consts::PI).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn envelope_values() {
        let w0 = 500e-6;
        assert_eq!(pump_envelope(0.0, 0.0, w0), 1.0);
        assert!((pump_envelope(2.0 / w0, 0.0, w0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(pump_envelope(3e3, -1e3, w0), pump_envelope(-3e3, 1e3, w0));
    }

    #[test]
    fn anti_diagonal_amplitude_is_kernel_only() {
        let m = model(810.0);
        let a = m.amplitude([2e5, 0.0], [-2e5, 0.0], &m.nominal).unwrap();
        let d = m.mismatch([2e5, 0.0], [-2e5, 0.0], &m.nominal).unwrap();
        assert_eq!(a, sinc(d.dk_z * 1e-3 / 2.0));
    }

    #[test]
    fn grid_matches_pointwise_and_is_symmetric() {
        let m = model(810.0);
        let lat = Lattice::centered_rectangular(6, 6, 1e5, 1e5).unwrap();
        let s = TransverseSlice {
            axis: TransverseAxis::X,
            lattice: lat,
            wavelengths: m.nominal,
        };
        let g = m.evaluate_grid(&s, usize::MAX).unwrap();
        for r in 0..6 {
            for c in 0..6 {
                let p = lat.point(r, c);
                let a = m.amplitude_on_axis(TransverseAxis::X, p[0], p[1], &m.nominal).unwrap();
                assert_eq!(g[[r, c]], a);
            }
        }
        // (q_s, q_i) → (−q_s, −q_i): index n/2 ± k
        for r in 1..6 {
            for c in 1..6 {
                assert_eq!(g[[r, c]], g[[6 - r, 6 - c]]);
            }
        }
        assert!(matches!(m.evaluate_grid(&s, 64), Err(Error::Resource { .. })));
    }
}
