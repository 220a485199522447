//! A complete configuration in interface units, and the models built from it.

use serde::{Deserialize, Serialize};

use crate::biphoton::{BiphotonModel, Kernel, PumpSpec, TransverseAxis};
use crate::camera::ShiftMode;
use crate::dispersion::{CrystalSetup, SellmeierSet, SpdcWavelengths, Wavelength};
use crate::error::{Error, Result};
use crate::grid::{GridLayout, GridSpec, Lattice, DEFAULT_GRID_N, DEFAULT_MEMORY_BUDGET};
use crate::scalar::Real;
use crate::spectral::{
    jid_pair, sample_spectrum, Arm, FilterShape, FilterSpec, JidPair, SpectralSampling, DEFAULT_SLICES,
};
use crate::stats::{reid_product, summarize, ReidReport, StatsSummary};

/// Experiment description: nanometres, millimetres, micrometres, degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentParams {
    pub pump_nm: f64,
    /// Centre signal wavelength; the idler follows from energy conservation.
    pub signal_nm: f64,
    pub crystal_length_mm: f64,
    pub pump_waist_um: f64,
    /// Cut angle; derived from collinear phase matching when absent.
    pub theta_p_deg: Option<f64>,
    pub filter_shape: FilterShape,
    pub filter_fwhm_nm: f64,
    /// Defaults to the nominal wavelength of the filtered arm.
    pub filter_center_nm: Option<f64>,
    pub filter_arm: Arm,
    pub grid_n: usize,
    pub grid_layout: GridLayout,
    /// Half-extent overrides, rad/m.
    pub sum_extent: Option<f64>,
    pub diff_extent: Option<f64>,
    pub memory_budget_bytes: usize,
    pub slices: usize,
    pub kernel: Kernel,
    pub focal_length_m: f64,
    pub magnification: f64,
    pub shift_mode: ShiftMode,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self::degenerate()
    }
}

impl ExperimentParams {
    /// 405 nm → 810 + 810 nm, 1 mm crystal, 500 µm waist, 10 nm filter.
    pub fn degenerate() -> Self {
        Self {
            pump_nm: 405.0,
            signal_nm: 810.0,
            crystal_length_mm: 1.0,
            pump_waist_um: 500.0,
            theta_p_deg: None,
            filter_shape: FilterShape::Gaussian,
            filter_fwhm_nm: 10.0,
            filter_center_nm: None,
            filter_arm: Arm::Signal,
            grid_n: DEFAULT_GRID_N,
            grid_layout: GridLayout::RidgeAligned,
            sum_extent: None,
            diff_extent: None,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
            slices: DEFAULT_SLICES,
            kernel: Kernel::Sinc,
            focal_length_m: 0.25,
            magnification: 1.0,
            shift_mode: ShiftMode::Fitted,
        }
    }

    /// Same as [`Self::degenerate`] with a 780 nm signal (842.4 nm idler).
    pub fn non_degenerate() -> Self {
        Self {
            signal_nm: 780.0,
            ..Self::degenerate()
        }
    }

    pub fn wavelengths<T: Real>(&self) -> Result<SpdcWavelengths<T>> {
        SpdcWavelengths::new(
            Wavelength::from_nm(T::lit(self.pump_nm)),
            Wavelength::from_nm(T::lit(self.signal_nm)),
        )
    }

    fn check(&self) -> Result<()> {
        let positive = [
            ("pump_nm", self.pump_nm),
            ("signal_nm", self.signal_nm),
            ("crystal_length_mm", self.crystal_length_mm),
            ("pump_waist_um", self.pump_waist_um),
            ("filter_fwhm_nm", self.filter_fwhm_nm),
            ("focal_length_m", self.focal_length_m),
            ("magnification", self.magnification),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("{name} = {v} must be positive")));
            }
        }
        if self.slices == 0 {
            return Err(Error::Invalid("slices must be at least 1".into()));
        }
        Ok(())
    }
}

/// Models and sampling derived from [`ExperimentParams`].
#[derive(Clone, Debug)]
pub struct Experiment<T> {
    pub params: ExperimentParams,
    pub model: BiphotonModel<T>,
    pub filter: FilterSpec<T>,
    pub sampling: SpectralSampling<T>,
    pub grid: GridSpec<T>,
    pub lattice: Lattice<T>,
}

impl<T: Real> Experiment<T> {
    /// Builds with the bundled BBO coefficients.
    pub fn new(params: ExperimentParams) -> Result<Self> {
        Self::with_sellmeier(params, SellmeierSet::bbo())
    }

    pub fn with_sellmeier(params: ExperimentParams, sellmeier: SellmeierSet<T>) -> Result<Self> {
        params.check()?;
        let w = params.wavelengths::<T>()?;
        let length = T::lit(params.crystal_length_mm * 1e-3);
        let crystal = match params.theta_p_deg {
            None => CrystalSetup::phase_matched(length, sellmeier, &w)?,
            Some(deg) => {
                let theta = T::lit(deg.to_radians());
                let rho = sellmeier.walkoff_angle(theta, w.pump)?;
                CrystalSetup::with_angles(length, theta, rho, sellmeier, w.pump)?
            }
        };
        let pump = PumpSpec::new(w.pump, T::lit(params.pump_waist_um * 1e-6), &crystal)?;
        let model = BiphotonModel::new(crystal, pump, w)?.with_kernel(params.kernel);
        let nominal_filtered = match params.filter_arm {
            Arm::Signal => w.signal,
            Arm::Idler => w.idler,
        };
        let center = params
            .filter_center_nm
            .map(|nm| Wavelength::from_nm(T::lit(nm)))
            .unwrap_or(nominal_filtered);
        let filter = FilterSpec::new(
            params.filter_shape,
            center,
            T::lit(params.filter_fwhm_nm * 1e-9),
            params.filter_arm,
        )?;
        let sampling = sample_spectrum(&filter, w.pump, params.slices)?;
        let grid = GridSpec {
            n: params.grid_n,
            layout: params.grid_layout,
            sum_extent: params.sum_extent.map(T::lit),
            diff_extent: params.diff_extent.map(T::lit),
            memory_budget_bytes: params.memory_budget_bytes,
        };
        let lattice = grid.lattice(pump.waist, model.mean_wavenumber(), length)?;
        Ok(Self {
            params,
            model,
            filter,
            sampling,
            grid,
            lattice,
        })
    }

    pub fn wavelengths(&self) -> SpdcWavelengths<T> {
        self.model.nominal
    }

    pub fn jids(&self, axis: TransverseAxis) -> Result<JidPair<T>> {
        jid_pair(
            &self.model,
            axis,
            &self.lattice,
            &self.sampling,
            self.grid.memory_budget_bytes,
        )
    }

    /// Near/far summaries and their Reid product on one axis.
    pub fn certify(&self, axis: TransverseAxis) -> Result<Certification<T>> {
        let pair = self.jids(axis)?;
        let near = summarize(&pair.near)?;
        let far = summarize(&pair.far)?;
        let reid = reid_product(&near, &far)?;
        Ok(Certification { near, far, reid })
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Certification<T> {
    pub near: StatsSummary<T>,
    pub far: StatsSummary<T>,
    pub reid: ReidReport<T>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build() {
        let e = Experiment::<f64>::new(ExperimentParams::non_degenerate()).unwrap();
        assert!((e.wavelengths().idler.nm() - 842.4).abs() < 1e-9);
        assert_eq!(e.sampling.len(), 31);
        assert_eq!(e.lattice.rows, 1024);
    }

    #[test]
    fn explicit_cut_angle_sets_walkoff() {
        let p = ExperimentParams {
            theta_p_deg: Some(27.80),
            ..ExperimentParams::non_degenerate()
        };
        let e = Experiment::<f64>::new(p).unwrap();
        assert!((e.model.crystal.rho.to_degrees() - 4.41).abs() < 0.05);
    }

    #[test]
    fn invalid_values_rejected() {
        let p = ExperimentParams {
            pump_waist_um: -1.0,
            ..ExperimentParams::degenerate()
        };
        assert!(matches!(Experiment::<f64>::new(p), Err(Error::Invalid(_))));
        let p = ExperimentParams {
            signal_nm: 300.0,
            ..ExperimentParams::degenerate()
        };
        assert!(matches!(Experiment::<f64>::new(p), Err(Error::Domain(_))));
    }

    #[test]
    fn small_grid_certifies() {
        let p = ExperimentParams {
            grid_n: 128,
            slices: 3,
            ..ExperimentParams::degenerate()
        };
        let c = Experiment::<f64>::new(p).unwrap().certify(TransverseAxis::X).unwrap();
        assert!(c.reid.certified);
        assert!(c.far.c_si < 0.0 && c.near.c_si > 0.0);
    }
}
