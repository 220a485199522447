//! Batch studies over filter bandwidth, crystal length or pump waist.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::biphoton::TransverseAxis;
use crate::error::{Error, Result};
use crate::experiment::{Experiment, ExperimentParams};
use crate::scalar::Real;

/// Relative tolerance band of the trend predicates.
pub const TREND_TOLERANCE: f64 = 0.02;

/// Relative width change above which the convergence guard warns.
pub const CONVERGENCE_TOLERANCE: f64 = 0.01;

pub const CSV_HEADER: &str = "swept_value,axis,dx_inferred_um,dq_inferred_radm,reid_product,certified";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptVariable {
    /// nm
    FilterFwhm,
    /// mm
    CrystalLength,
    /// µm
    PumpWaist,
}

impl SweptVariable {
    pub fn unit(self) -> &'static str {
        match self {
            SweptVariable::FilterFwhm => "nm",
            SweptVariable::CrystalLength => "mm",
            SweptVariable::PumpWaist => "um",
        }
    }

    /// Representative values for each variable.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweptVariable::FilterFwhm => vec![1.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            SweptVariable::CrystalLength => vec![0.5, 1.0, 2.0, 4.0],
            SweptVariable::PumpWaist => vec![100.0, 250.0, 500.0, 1000.0],
        }
    }

    pub fn apply(self, base: &ExperimentParams, value: f64) -> ExperimentParams {
        let mut p = base.clone();
        match self {
            SweptVariable::FilterFwhm => p.filter_fwhm_nm = value,
            SweptVariable::CrystalLength => p.crystal_length_mm = value,
            SweptVariable::PumpWaist => p.pump_waist_um = value,
        }
        p
    }
}

impl std::str::FromStr for SweptVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "filter_fwhm" | "fwhm" => Ok(SweptVariable::FilterFwhm),
            "crystal_length" | "length" => Ok(SweptVariable::CrystalLength),
            "pump_waist" | "waist" => Ok(SweptVariable::PumpWaist),
            _ => Err(Error::Usage(format!(
                "unknown swept variable '{s}', expected filter_fwhm, crystal_length or pump_waist"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub base: ExperimentParams,
    pub variable: SweptVariable,
    pub values: Vec<f64>,
    pub axes: Vec<TransverseAxis>,
    /// Rerun the first and last values at twice the grid size.
    pub convergence_check: bool,
}

impl SweepSpec {
    pub fn new(
        base: ExperimentParams,
        variable: SweptVariable,
        values: Vec<f64>,
        axes: Vec<TransverseAxis>,
    ) -> Result<Self> {
        let spec = Self {
            base,
            variable,
            values,
            axes,
            convergence_check: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Invalid("sweep needs at least one value".into()));
        }
        if self.values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("sweep values must be strictly increasing".into()));
        }
        if self.axes.is_empty() {
            return Err(Error::Invalid("sweep needs at least one axis".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub swept_value: f64,
    pub axis: TransverseAxis,
    pub dx_inferred_um: f64,
    pub dq_inferred_radm: f64,
    pub reid_product: f64,
    pub certified: bool,
}

fn row_for<T: Real>(params: ExperimentParams, value: f64, axis: TransverseAxis) -> Result<SweepRow> {
    let c = Experiment::<T>::new(params)?.certify(axis)?;
    Ok(SweepRow {
        swept_value: value,
        axis,
        dx_inferred_um: c.reid.dx_inferred.as_f64() * 1e6,
        dq_inferred_radm: c.reid.dq_inferred.as_f64(),
        reid_product: c.reid.reid_product.as_f64(),
        certified: c.reid.certified,
    })
}

/// One row per (value, axis), in spec order. The first failure aborts the
/// sweep and names the offending value.
pub fn run_sweep<T: Real>(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.values.len() * spec.axes.len());
    for &v in &spec.values {
        let params = spec.variable.apply(&spec.base, v);
        for &axis in &spec.axes {
            let row = row_for::<T>(params.clone(), v, axis).map_err(|e| Error::Sweep {
                value: v,
                source: Box::new(e),
            })?;
            log::info!("{} = {v} {}: U = {:.6e}", spec.variable.unit(), axis, row.reid_product);
            rows.push(row);
        }
    }
    if spec.convergence_check {
        convergence_guard::<T>(spec, &rows)?;
    }
    Ok(rows)
}

/// Reruns the extreme values at doubled resolution; returns the largest
/// relative width change and warns above 1 %.
pub fn convergence_guard<T: Real>(spec: &SweepSpec, rows: &[SweepRow]) -> Result<f64> {
    let mut extremes = vec![spec.values[0]];
    if spec.values.len() > 1 {
        extremes.push(spec.values[spec.values.len() - 1]);
    }
    let mut worst = 0.0f64;
    for v in extremes {
        let mut params = spec.variable.apply(&spec.base, v);
        params.grid_n *= 2;
        for &axis in &spec.axes {
            let fine = row_for::<T>(params.clone(), v, axis).map_err(|e| Error::Sweep {
                value: v,
                source: Box::new(e),
            })?;
            let coarse = rows
                .iter()
                .find(|r| r.swept_value == v && r.axis == axis)
                .ok_or_else(|| Error::Invalid("missing sweep row".into()))?;
            for (a, b) in [
                (coarse.dx_inferred_um, fine.dx_inferred_um),
                (coarse.dq_inferred_radm, fine.dq_inferred_radm),
            ] {
                let rel = (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
                worst = worst.max(rel);
                if rel > CONVERGENCE_TOLERANCE {
                    log::warn!(
                        "grid not converged at {v} {}: width changes {:.2}% at 2x resolution",
                        spec.variable.unit(),
                        rel * 100.0
                    );
                }
            }
        }
    }
    Ok(worst)
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.swept_value, r.axis, r.dx_inferred_um, r.dq_inferred_radm, r.reid_product, r.certified
        )?;
    }
    Ok(())
}

/// Quantity a trend predicate looks at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    ReidProduct,
    DxInferred,
    DqInferred,
}

impl Metric {
    fn of(self, r: &SweepRow) -> f64 {
        match self {
            Metric::ReidProduct => r.reid_product,
            Metric::DxInferred => r.dx_inferred_um,
            Metric::DqInferred => r.dq_inferred_radm,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    /// Each step may fall by at most the tolerance band.
    NonDecreasing,
    NonIncreasing,
    /// Every step strictly up (no band).
    StrictlyIncreasing,
    StrictlyDecreasing,
    /// max/min − 1 below the tolerance band.
    Flat,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrendExpectation {
    pub metric: Metric,
    pub axis: TransverseAxis,
    pub predicate: Predicate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendVerdict {
    pub expectation: TrendExpectation,
    pub passed: bool,
    pub values: Vec<f64>,
    pub detail: String,
}

pub fn trend_checks(rows: &[SweepRow], expectations: &[TrendExpectation]) -> Result<Vec<TrendVerdict>> {
    expectations
        .iter()
        .map(|e| {
            let values: Vec<f64> = rows
                .iter()
                .filter(|r| r.axis == e.axis)
                .map(|r| e.metric.of(r))
                .collect();
            if values.len() < 2 {
                return Err(Error::Invalid(format!(
                    "trend check on {} needs at least two rows",
                    e.axis
                )));
            }
            let (passed, detail) = evaluate(e.predicate, &values, TREND_TOLERANCE);
            Ok(TrendVerdict {
                expectation: *e,
                passed,
                values,
                detail,
            })
        })
        .collect()
}

/// Applies one predicate to a sequence.
pub fn evaluate(p: Predicate, v: &[f64], tol: f64) -> (bool, String) {
    let steps = || v.windows(2).map(|w| (w[0], w[1]));
    match p {
        Predicate::NonDecreasing => {
            let worst = steps().map(|(a, b)| (b - a) / a.abs()).fold(f64::INFINITY, f64::min);
            (
                worst >= -tol,
                format!("smallest relative step {worst:+.3e} (band -{tol})"),
            )
        }
        Predicate::NonIncreasing => {
            let worst = steps()
                .map(|(a, b)| (b - a) / a.abs())
                .fold(f64::NEG_INFINITY, f64::max);
            (
                worst <= tol,
                format!("largest relative step {worst:+.3e} (band +{tol})"),
            )
        }
        Predicate::StrictlyIncreasing => {
            let ok = steps().all(|(a, b)| b > a);
            (ok, format!("strictly increasing: {ok}"))
        }
        Predicate::StrictlyDecreasing => {
            let ok = steps().all(|(a, b)| b < a);
            (ok, format!("strictly decreasing: {ok}"))
        }
        Predicate::Flat => {
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let spread = max / min - 1.0;
            (
                min > 0.0 && spread < tol,
                format!("max/min - 1 = {spread:.3e} (limit {tol})"),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(vals: &[f64]) -> Vec<SweepRow> {
        vals.iter()
            .enumerate()
            .map(|(k, &u)| SweepRow {
                swept_value: k as f64,
                axis: TransverseAxis::X,
                dx_inferred_um: u,
                dq_inferred_radm: 1.0,
                reid_product: u,
                certified: u < 0.5,
            })
            .collect()
    }

    fn check(vals: &[f64], p: Predicate) -> bool {
        let e = TrendExpectation {
            metric: Metric::ReidProduct,
            axis: TransverseAxis::X,
            predicate: p,
        };
        trend_checks(&rows(vals), &[e]).unwrap()[0].passed
    }

    #[test]
    fn constant_rows_are_flat_not_strict() {
        let c = [0.2; 4];
        assert!(check(&c, Predicate::Flat));
        assert!(!check(&c, Predicate::StrictlyIncreasing));
        assert!(!check(&c, Predicate::StrictlyDecreasing));
        assert!(check(&c, Predicate::NonDecreasing));
    }

    #[test]
    fn tolerance_band() {
        assert!(check(&[1.0, 0.99, 1.2], Predicate::NonDecreasing));
        assert!(!check(&[1.0, 0.97, 1.2], Predicate::NonDecreasing));
        assert!(check(&[1.0, 1.01, 0.5], Predicate::NonIncreasing));
        assert!(!check(&[1.0, 1.03], Predicate::Flat));
    }

    #[test]
    fn spec_validation() {
        let b = ExperimentParams::degenerate();
        assert!(SweepSpec::new(b.clone(), SweptVariable::PumpWaist, vec![], vec![TransverseAxis::X]).is_err());
        assert!(SweepSpec::new(
            b.clone(),
            SweptVariable::PumpWaist,
            vec![2.0, 1.0],
            vec![TransverseAxis::X]
        )
        .is_err());
        assert!(SweepSpec::new(b, SweptVariable::PumpWaist, vec![1.0], vec![]).is_err());
    }

    #[test]
    fn failure_names_value() {
        let b = ExperimentParams {
            grid_n: 16,
            slices: 1,
            ..ExperimentParams::degenerate()
        };
        // a 1000 nm wide filter reaches non-positive wavelengths
        let s = SweepSpec::new(b, SweptVariable::FilterFwhm, vec![1.0, 1000.0], vec![TransverseAxis::X]).unwrap();
        match run_sweep::<f64>(&s) {
            Err(Error::Sweep { value, .. }) => assert_eq!(value, 1000.0),
            other => panic!("expected sweep error, got {other:?}"),
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let mut buf = Vec::new();
        write_csv(&rows(&[0.25]), &mut buf).unwrap();
        let t = String::from_utf8(buf).unwrap();
        assert_eq!(t, format!("{CSV_HEADER}\n0,x,0.25,1,0.25,true\n"));
    }
}
