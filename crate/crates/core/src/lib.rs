//! Transverse spatial correlations of photon pairs from Type-I spontaneous
//! parametric down-conversion in a bulk uniaxial crystal.
//!
//! The pipeline runs dispersion → biphoton amplitude → spectral integration
//! (far field) and per-slice Fourier transform (near field) → moments and
//! Reid products, with a camera model for frequency non-degenerate pairs.
//! Everything numerical is generic over [`Real`] (`f32`/`f64`); the `*64`
//! aliases below are the usual entry points.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod biphoton;
pub mod camera;
pub mod dispersion;
pub mod error;
pub mod experiment;
pub mod export;
pub mod fft;
pub mod grid;
pub mod resample;
pub mod roots;
pub mod scalar;
pub mod spectral;
pub mod stats;
pub mod sweep;

pub use biphoton::{BiphotonModel, Kernel, PumpSpec, TransverseAxis};
pub use camera::{CameraJpd, CameraMapping, ShiftMode};
pub use dispersion::{CrystalSetup, SellmeierSet, SpdcWavelengths, Wavelength};
pub use error::{Error, Result};
pub use experiment::{Experiment, ExperimentParams};
pub use grid::{GridLayout, GridSpec, Lattice};
pub use scalar::Real;
pub use spectral::{Arm, FilterShape, FilterSpec, JointDistribution, Plane};
pub use stats::{ProbabilityTable, ReidReport, RidgeFit, StatsSummary};

pub type Wavelength64 = Wavelength<f64>;
pub type SellmeierSet64 = SellmeierSet<f64>;
pub type CrystalSetup64 = CrystalSetup<f64>;
pub type SpdcWavelengths64 = SpdcWavelengths<f64>;
pub type PumpSpec64 = PumpSpec<f64>;
pub type BiphotonModel64 = BiphotonModel<f64>;
pub type Lattice64 = Lattice<f64>;
pub type FilterSpec64 = FilterSpec<f64>;
pub type JointDistribution64 = JointDistribution<f64>;
pub type ProbabilityTable64 = ProbabilityTable<f64>;
pub type StatsSummary64 = StatsSummary<f64>;
pub type ReidReport64 = ReidReport<f64>;
pub type CameraJpd64 = CameraJpd<f64>;
pub type Experiment64 = Experiment<f64>;

pub type Wavelength32 = Wavelength<f32>;
pub type SellmeierSet32 = SellmeierSet<f32>;
pub type JointDistribution32 = JointDistribution<f32>;
pub type Experiment32 = Experiment<f32>;
