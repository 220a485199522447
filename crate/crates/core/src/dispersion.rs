//! Refractive indices of a negative uniaxial crystal, collinear Type-I phase
//! matching and pump walk-off.
//!
//! Wavelengths travel through the API as [`Wavelength`] (stored in metres,
//! constructed from nanometres at the edges). Angles are radians.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{brent, Bracket};
use crate::scalar::{Real, SPEED_OF_LIGHT};

/// Coefficient file for beta-barium borate shipped with the crate.
pub const BBO_SELLMEIER_TOML: &str = include_str!("../data/bbo.toml");

/// Vacuum wavelength, stored in metres.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Wavelength<T>(T);

impl<T: Real> Wavelength<T> {
    pub fn from_meters(m: T) -> Self {
        Self(m)
    }

    pub fn from_nm(nm: T) -> Self {
        Self(nm * T::lit(1e-9))
    }

    pub fn meters(self) -> T {
        self.0
    }

    pub fn nm(self) -> T {
        self.0 * T::lit(1e9)
    }

    pub fn um(self) -> T {
        self.0 * T::lit(1e6)
    }

    /// ω = 2πc/λ, rad/s.
    pub fn angular_frequency(self) -> T {
        T::TAU() * T::lit(SPEED_OF_LIGHT) / self.0
    }

    /// 2π/λ, rad/m.
    pub fn vacuum_wavenumber(self) -> T {
        T::TAU() / self.0
    }

    /// Wavelength with angular frequency `omega`.
    pub fn from_angular_frequency(omega: T) -> Self {
        Self(T::TAU() * T::lit(SPEED_OF_LIGHT) / omega)
    }
}

/// One polarisation's coefficients for n² = A + B/(λ² − C) − Dλ², λ in µm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellmeierCoefficients<T> {
    #[serde(rename = "A")]
    pub a: T,
    #[serde(rename = "B")]
    pub b: T,
    #[serde(rename = "C")]
    pub c: T,
    #[serde(rename = "D")]
    pub d: T,
}

impl<T: Real> SellmeierCoefficients<T> {
    pub fn index_squared(&self, lambda_um: T) -> T {
        let l2 = lambda_um * lambda_um;
        self.a + self.b / (l2 - self.c) - self.d * l2
    }

    fn cast<U: Real>(&self) -> SellmeierCoefficients<U> {
        SellmeierCoefficients {
            a: U::lit(self.a.as_f64()),
            b: U::lit(self.b.as_f64()),
            c: U::lit(self.c.as_f64()),
            d: U::lit(self.d.as_f64()),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SellmeierFile {
    #[serde(default)]
    name: Option<String>,
    range_um: [f64; 2],
    ordinary: SellmeierCoefficients<f64>,
    extraordinary: SellmeierCoefficients<f64>,
}

/// Ordinary and extraordinary dispersion of a uniaxial crystal.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SellmeierSet<T> {
    pub name: String,
    pub ordinary: SellmeierCoefficients<T>,
    pub extraordinary: SellmeierCoefficients<T>,
    /// Validity range in micrometres.
    pub range_um: (T, T),
}

impl<T: Real> SellmeierSet<T> {
    /// Beta-barium borate coefficients from the bundled data file.
    pub fn bbo() -> Self {
        Self::from_toml_str(BBO_SELLMEIER_TOML).expect("bundled BBO coefficients are valid")
    }

    /// Parses a coefficient file with keys `ordinary.A/B/C/D`,
    /// `extraordinary.A/B/C/D` and `range_um = [min, max]`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SellmeierFile = toml::from_str(text).map_err(|e| Error::Format(format!("Sellmeier file: {e}")))?;
        let set = Self {
            name: file.name.unwrap_or_else(|| "custom".to_owned()),
            ordinary: file.ordinary.cast(),
            extraordinary: file.extraordinary.cast(),
            range_um: (T::lit(file.range_um[0]), T::lit(file.range_um[1])),
        };
        set.validate()?;
        Ok(set)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Checks n² > 1 and n_o > n_e on a 1 nm grid across the validity range.
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.range_um;
        if !(lo > T::zero() && hi > lo) {
            return Err(Error::Invalid(format!("Sellmeier range [{lo}, {hi}] um is empty")));
        }
        let pole = self.ordinary.c.max(self.extraordinary.c);
        if pole >= lo * lo {
            return Err(Error::Invalid(
                "Sellmeier pole lies inside the validity range".to_owned(),
            ));
        }
        let steps = ((hi - lo) * T::lit(1000.0)).ceil().to_usize().unwrap_or(0).max(1);
        for k in 0..=steps {
            let l = (lo + (hi - lo) * T::from_count(k) / T::from_count(steps)).min(hi);
            let no2 = self.ordinary.index_squared(l);
            let ne2 = self.extraordinary.index_squared(l);
            if !(no2 > T::one() && ne2 > T::one()) {
                return Err(Error::Invalid(format!("n^2 <= 1 at {l} um")));
            }
            if no2 <= ne2 {
                return Err(Error::Invalid(format!(
                    "crystal is not negative uniaxial at {l} um (n_o <= n_e)"
                )));
            }
        }
        Ok(())
    }

    fn lambda_um(&self, lambda: Wavelength<T>) -> Result<T> {
        let um = lambda.um();
        let (lo, hi) = self.range_um;
        // allow rounding from nm→µm conversions at the range edges
        let slack = T::tolerance(1e-12) * hi;
        if um < lo - slack || um > hi + slack || !um.is_finite() {
            return Err(Error::OutOfRange {
                wavelength_nm: lambda.nm().as_f64(),
                min_nm: (lo * T::lit(1000.0)).as_f64(),
                max_nm: (hi * T::lit(1000.0)).as_f64(),
            });
        }
        Ok(um)
    }

    pub fn n_ordinary(&self, lambda: Wavelength<T>) -> Result<T> {
        Ok(self.ordinary.index_squared(self.lambda_um(lambda)?).sqrt())
    }

    pub fn n_extraordinary(&self, lambda: Wavelength<T>) -> Result<T> {
        Ok(self.extraordinary.index_squared(self.lambda_um(lambda)?).sqrt())
    }

    /// Ordinary wavenumber inside the crystal, 2π n_o/λ.
    pub fn k_ordinary(&self, lambda: Wavelength<T>) -> Result<T> {
        Ok(T::TAU() * self.n_ordinary(lambda)? / lambda.meters())
    }

    /// Index seen by an extraordinary wave at `theta` from the optic axis.
    ///
    /// 1/n² = cos²θ/n_o² + sin²θ/n_e², so θ = 0 gives n_o and θ = π/2 gives n_e.
    pub fn effective_index(&self, theta: T, lambda: Wavelength<T>) -> Result<T> {
        if !(theta >= T::zero() && theta <= T::FRAC_PI_2() * (T::one() + T::epsilon())) {
            return Err(Error::Domain(format!(
                "propagation angle {theta} rad outside [0, pi/2]"
            )));
        }
        let no = self.n_ordinary(lambda)?;
        let ne = self.n_extraordinary(lambda)?;
        let (s, c) = theta.sin_cos();
        Ok((c * c / (no * no) + s * s / (ne * ne)).sqrt().recip())
    }

    /// ρ = arctan[(n_o²/n_e² − 1)·tanθ·cosθ] at the pump wavelength.
    pub fn walkoff_angle(&self, theta: T, pump: Wavelength<T>) -> Result<T> {
        let no = self.n_ordinary(pump)?;
        let ne = self.n_extraordinary(pump)?;
        Ok(((no * no / (ne * ne) - T::one()) * theta.tan() * theta.cos()).atan())
    }

    /// Collinear Type-I phase-matching angle from the closed form, with an
    /// independent root solve of k_p(θ) = k_s + k_i as a cross-check.
    pub fn phase_matching_angle(&self, w: &SpdcWavelengths<T>) -> Result<PhaseMatching<T>> {
        let closed = self.phase_matching_closed_form(w)?;
        let numeric = self.solve_phase_matching(w, false)?;
        Ok(PhaseMatching {
            closed_form: closed,
            numeric,
        })
    }

    /// cos²θ = (λ_s²λ_i²/(λ_p²(λ_s n_i + λ_i n_s)²) − 1/n_e²)·(n_o n_e)²/(n_e² − n_o²),
    /// with n_o, n_e at the pump and n_s, n_i ordinary at signal and idler.
    pub fn phase_matching_closed_form(&self, w: &SpdcWavelengths<T>) -> Result<T> {
        let (lp, ls, li) = (w.pump.meters(), w.signal.meters(), w.idler.meters());
        let ns = self.n_ordinary(w.signal)?;
        let ni = self.n_ordinary(w.idler)?;
        let npo = self.n_ordinary(w.pump)?;
        let npe = self.n_extraordinary(w.pump)?;
        let mix = ls * ni + li * ns;
        let first = (ls * ls * li * li) / (lp * lp * mix * mix) - (npe * npe).recip();
        let second = (npo * npe).powi(2) / (npe * npe - npo * npo);
        let cos2 = first * second;
        if !(cos2 >= T::zero() && cos2 <= T::one()) {
            let (lower, upper) = self.bracket_residuals(w)?;
            return Err(Error::NoPhaseMatch { lower, upper });
        }
        Ok(cos2.sqrt().acos())
    }

    /// Residual k_p(θ)·[cos ρ(θ)] − k_s − k_i at θ = 0 and θ = π/2.
    fn bracket_residuals(&self, w: &SpdcWavelengths<T>) -> Result<(f64, f64)> {
        let r0 = self.collinear_residual(w, T::zero(), false)?;
        let r1 = self.collinear_residual(w, T::FRAC_PI_2(), false)?;
        Ok((r0.as_f64(), r1.as_f64()))
    }

    fn collinear_residual(&self, w: &SpdcWavelengths<T>, theta: T, walkoff: bool) -> Result<T> {
        let mut kp = T::TAU() * self.effective_index(theta, w.pump)? / w.pump.meters();
        if walkoff {
            kp = kp * self.walkoff_angle(theta, w.pump)?.cos();
        }
        Ok(kp - self.k_ordinary(w.signal)? - self.k_ordinary(w.idler)?)
    }

    /// Brent solve of the collinear longitudinal mismatch on θ ∈ [0, π/2].
    ///
    /// With `include_walkoff` the pump's longitudinal wavevector k_p cos ρ(θ)
    /// replaces k_p.
    pub fn solve_phase_matching(&self, w: &SpdcWavelengths<T>, include_walkoff: bool) -> Result<T> {
        // validate wavelengths up front so the closure cannot fail
        self.n_ordinary(w.signal)?;
        self.n_ordinary(w.idler)?;
        self.n_extraordinary(w.pump)?;
        let residual = |theta: T| {
            self.collinear_residual(w, theta, include_walkoff)
                .unwrap_or_else(|_| T::nan())
        };
        match brent(residual, T::zero(), T::FRAC_PI_2(), T::tolerance(1e-13)) {
            Bracket::Root(theta) => Ok(theta),
            Bracket::NotBracketed { f_lower, f_upper } => Err(Error::NoPhaseMatch {
                lower: f_lower.as_f64(),
                upper: f_upper.as_f64(),
            }),
        }
    }
}

/// Phase-matching angle by both routes.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PhaseMatching<T> {
    pub closed_form: T,
    pub numeric: T,
}

impl<T: Real> PhaseMatching<T> {
    pub fn theta(&self) -> T {
        self.closed_form
    }

    pub fn disagreement(&self) -> T {
        (self.closed_form - self.numeric).abs()
    }
}

/// λ_i from energy conservation 1/λ_i = 1/λ_p − 1/λ_s.
pub fn idler_wavelength<T: Real>(pump: Wavelength<T>, signal: Wavelength<T>) -> Result<Wavelength<T>> {
    let (lp, ls) = (pump.meters(), signal.meters());
    if !(lp > T::zero()) || !(ls > lp) {
        return Err(Error::Domain(format!(
            "signal wavelength {} nm must exceed pump wavelength {} nm",
            signal.nm(),
            pump.nm()
        )));
    }
    Ok(Wavelength::from_meters(lp * ls / (ls - lp)))
}

/// An energy-conserving pump/signal/idler triple.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpdcWavelengths<T> {
    pub pump: Wavelength<T>,
    pub signal: Wavelength<T>,
    pub idler: Wavelength<T>,
}

impl<T: Real> SpdcWavelengths<T> {
    pub fn new(pump: Wavelength<T>, signal: Wavelength<T>) -> Result<Self> {
        let idler = idler_wavelength(pump, signal)?;
        Ok(Self { pump, signal, idler })
    }

    /// Signal and idler both at twice the pump wavelength.
    pub fn degenerate(pump: Wavelength<T>) -> Self {
        let d = Wavelength::from_meters(pump.meters() * T::lit(2.0));
        Self {
            pump,
            signal: d,
            idler: d,
        }
    }

    /// Triple whose idler is `idler`; signal from energy conservation.
    pub fn with_idler(pump: Wavelength<T>, idler: Wavelength<T>) -> Result<Self> {
        let signal = idler_wavelength(pump, idler)?;
        Ok(Self { pump, signal, idler })
    }

    pub fn swapped(&self) -> Self {
        Self {
            pump: self.pump,
            signal: self.idler,
            idler: self.signal,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        (self.signal.meters() - self.idler.meters()).abs() <= T::tolerance(1e-12) * self.signal.meters()
    }

    /// |1/λ_p − 1/λ_s − 1/λ_i| · λ_p.
    pub fn energy_mismatch(&self) -> T {
        let inv = |w: Wavelength<T>| w.meters().recip();
        (inv(self.pump) - inv(self.signal) - inv(self.idler)).abs() * self.pump.meters()
    }

    pub fn omegas(&self) -> (T, T, T) {
        (
            self.pump.angular_frequency(),
            self.signal.angular_frequency(),
            self.idler.angular_frequency(),
        )
    }
}

/// Plane containing the pump walk-off. Only the y–z plane is modelled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum WalkoffPlane {
    #[default]
    YZ,
}

/// A cut and oriented crystal.
#[derive(Clone, Debug, Serialize)]
pub struct CrystalSetup<T> {
    /// Length along z, metres.
    pub length: T,
    /// Angle between pump wavevector and optic axis, radians.
    pub theta_p: T,
    /// Pump walk-off angle, radians.
    pub rho: T,
    pub sellmeier: SellmeierSet<T>,
    pub walkoff_plane: WalkoffPlane,
}

impl<T: Real> CrystalSetup<T> {
    /// Crystal cut for collinear phase matching of `w`; θ_p and ρ are derived.
    pub fn phase_matched(length: T, sellmeier: SellmeierSet<T>, w: &SpdcWavelengths<T>) -> Result<Self> {
        let theta_p = sellmeier.phase_matching_angle(w)?.theta();
        let rho = sellmeier.walkoff_angle(theta_p, w.pump)?;
        Self::with_angles(length, theta_p, rho, sellmeier, w.pump)
    }

    /// Crystal with explicit angles; ρ must match the walk-off formula at θ_p.
    pub fn with_angles(length: T, theta_p: T, rho: T, sellmeier: SellmeierSet<T>, pump: Wavelength<T>) -> Result<Self> {
        if !(length > T::zero()) {
            return Err(Error::Invalid(format!("crystal length {length} m must be positive")));
        }
        if !(theta_p > T::zero() && theta_p < T::FRAC_PI_2()) {
            return Err(Error::Invalid(format!("theta_p {theta_p} rad outside (0, pi/2)")));
        }
        if !(rho >= T::zero() && rho < T::lit(0.2)) {
            return Err(Error::Invalid(format!("walk-off {rho} rad outside [0, 0.2)")));
        }
        let expected = sellmeier.walkoff_angle(theta_p, pump)?;
        if (expected - rho).abs() > T::tolerance(1e-12) {
            return Err(Error::Invalid(format!(
                "walk-off {rho} rad inconsistent with theta_p (expected {expected} rad)"
            )));
        }
        Ok(Self {
            length,
            theta_p,
            rho,
            sellmeier,
            walkoff_plane: WalkoffPlane::YZ,
        })
    }

    /// Pump wavenumber inside the crystal at the cut angle, rad/m.
    pub fn pump_wavenumber(&self, pump: Wavelength<T>) -> Result<T> {
        Ok(T::TAU() * self.sellmeier.effective_index(self.theta_p, pump)? / pump.meters())
    }

    pub fn with_length(&self, length: T) -> Result<Self> {
        if !(length > T::zero()) {
            return Err(Error::Invalid(format!("crystal length {length} m must be positive")));
        }
        Ok(Self { length, ..self.clone() })
    }
}
