//! Moments, linear inference and Reid products of joint distributions.

use ndarray::Array2;
use serde::Serialize;

use crate::biphoton::TransverseAxis;
use crate::error::{Error, Result};
use crate::grid::Lattice;
use crate::scalar::{CompensatedSum, Real};
use crate::spectral::{JointDistribution, Plane};

/// Reid EPR bound under the ħ = 1 wavenumber convention.
pub const REID_BOUND: f64 = 0.5;

/// Eigenvalue ratio below which a table has no preferred direction.
pub const ISOTROPY_RATIO: f64 = 1.01;

/// Probability density on a lattice: Σ P · cell area = 1.
#[derive(Clone, Debug)]
pub struct ProbabilityTable<T> {
    pub lattice: Lattice<T>,
    pub density: Array2<T>,
}

impl<T: Real> ProbabilityTable<T> {
    /// Normalises raw intensities sampled on `lattice`.
    pub fn from_intensity(lattice: Lattice<T>, intensity: &Array2<T>) -> Result<Self> {
        if intensity.dim() != (lattice.rows, lattice.cols) {
            return Err(Error::Invalid("intensity shape does not match lattice".into()));
        }
        let mut sum = CompensatedSum::new();
        for &v in intensity.iter() {
            if !(v >= T::zero() && v.is_finite()) {
                return Err(Error::Invalid(format!("intensity entry {v} is negative or not finite")));
            }
            sum.add(v);
        }
        let mass = sum.total() * lattice.cell_area();
        if !(mass > T::zero()) {
            return Err(Error::DegenerateDistribution("all intensities are zero".into()));
        }
        Ok(Self {
            lattice,
            density: intensity.mapv(|v| v / mass),
        })
    }

    pub fn total(&self) -> T {
        let s: CompensatedSum<T> = self.density.iter().copied().collect();
        s.total() * self.lattice.cell_area()
    }

    pub fn transposed(&self) -> Self {
        Self {
            lattice: self.lattice.transposed(),
            density: self.density.clone(),
        }
    }
}

pub fn normalize<T: Real>(jid: &JointDistribution<T>) -> Result<ProbabilityTable<T>> {
    ProbabilityTable::from_intensity(jid.lattice, &jid.data)
}

/// Moments and linear inference of one table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StatsSummary<T> {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plane: Option<Plane>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<TransverseAxis>,
    pub mu_s: T,
    pub mu_i: T,
    #[serde(rename = "V_s")]
    pub v_s: T,
    #[serde(rename = "V_i")]
    pub v_i: T,
    #[serde(rename = "C_si")]
    pub c_si: T,
    /// C_si/V_s.
    #[serde(rename = "G")]
    pub gain: Option<T>,
    /// V_i − C_si²/V_s.
    pub var_inferred: Option<T>,
    pub width_inferred: Option<T>,
    /// Set when V_s = 0 made inference impossible.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub inference_skipped: bool,
}

/// Means, variances and covariance from the joint table.
pub fn moments<T: Real>(p: &ProbabilityTable<T>) -> StatsSummary<T> {
    let area = p.lattice.cell_area();
    let lat = &p.lattice;
    let (mut m0, mut ms, mut mi) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
    for ((r, c), &v) in p.density.indexed_iter() {
        let w = v * area;
        let pt = lat.point(r, c);
        m0.add(w);
        ms.add(w * pt[0]);
        mi.add(w * pt[1]);
    }
    // guard the normalisation drift of the stored density
    let norm = m0.total();
    let (mu_s, mu_i) = (ms.total() / norm, mi.total() / norm);
    let (mut vs, mut vi, mut cs) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
    for ((r, c), &v) in p.density.indexed_iter() {
        let w = v * area;
        let pt = lat.point(r, c);
        let (ds, di) = (pt[0] - mu_s, pt[1] - mu_i);
        vs.add(w * ds * ds);
        vi.add(w * di * di);
        cs.add(w * ds * di);
    }
    StatsSummary {
        plane: None,
        axis: None,
        mu_s,
        mu_i,
        v_s: vs.total() / norm,
        v_i: vi.total() / norm,
        c_si: cs.total() / norm,
        gain: None,
        var_inferred: None,
        width_inferred: None,
        inference_skipped: false,
    }
}

/// Marginal route to the same moments; needs an axis-aligned lattice.
pub fn moments_from_marginals<T: Real>(p: &ProbabilityTable<T>) -> Result<StatsSummary<T>> {
    let (sa, ia) = match (p.lattice.signal_axis(), p.lattice.idler_axis()) {
        (Some(s), Some(i)) => (s, i),
        _ => return Err(Error::Invalid("marginals need an axis-aligned lattice".into())),
    };
    let area = p.lattice.cell_area();
    let ps: Vec<T> = p
        .density
        .rows()
        .into_iter()
        .map(|row| row.iter().copied().collect::<CompensatedSum<T>>().total() * area)
        .collect();
    let pi: Vec<T> = p
        .density
        .columns()
        .into_iter()
        .map(|col| col.iter().copied().collect::<CompensatedSum<T>>().total() * area)
        .collect();
    let mean = |a: &[T], w: &[T]| {
        a.iter()
            .zip(w)
            .map(|(x, p)| *x * *p)
            .collect::<CompensatedSum<T>>()
            .total()
    };
    let (mu_s, mu_i) = (mean(&sa, &ps), mean(&ia, &pi));
    let var = |a: &[T], w: &[T], mu: T| {
        a.iter()
            .zip(w)
            .map(|(x, p)| (*x - mu) * (*x - mu) * *p)
            .collect::<CompensatedSum<T>>()
            .total()
    };
    let mut cs = CompensatedSum::new();
    for ((r, c), &v) in p.density.indexed_iter() {
        cs.add(v * area * (sa[r] - mu_s) * (ia[c] - mu_i));
    }
    Ok(StatsSummary {
        plane: None,
        axis: None,
        mu_s,
        mu_i,
        v_s: var(&sa, &ps, mu_s),
        v_i: var(&ia, &pi, mu_i),
        c_si: cs.total(),
        gain: None,
        var_inferred: None,
        width_inferred: None,
        inference_skipped: false,
    })
}

/// Completes G, the inferred variance and width.
pub fn reid_inference<T: Real>(s: &StatsSummary<T>) -> Result<StatsSummary<T>> {
    if !(s.v_s > T::zero()) {
        return Err(Error::DegenerateMarginal);
    }
    let gain = s.c_si / s.v_s;
    // clamp round-off so that 0 ≤ Var ≤ V_i
    let var = (s.v_i - s.c_si * s.c_si / s.v_s).max(T::zero()).min(s.v_i);
    Ok(StatsSummary {
        gain: Some(gain),
        var_inferred: Some(var),
        width_inferred: Some(var.sqrt()),
        inference_skipped: false,
        ..*s
    })
}

/// Moments plus inference for a distribution; a zero signal variance is
/// flagged instead of failing.
pub fn summarize<T: Real>(jid: &JointDistribution<T>) -> Result<StatsSummary<T>> {
    let mut s = moments(&normalize(jid)?);
    s.plane = Some(jid.plane);
    s.axis = Some(jid.axis);
    match reid_inference(&s) {
        Ok(done) => Ok(done),
        Err(Error::DegenerateMarginal) => {
            log::warn!("signal variance is zero; inference skipped");
            s.inference_skipped = true;
            Ok(s)
        }
        Err(e) => Err(e),
    }
}

/// Inferred position width × inferred momentum width for one axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReidReport<T> {
    pub axis: TransverseAxis,
    /// Δx_{i|s}, metres.
    pub dx_inferred: T,
    /// Δq_{i|s}, rad/m.
    pub dq_inferred: T,
    pub reid_product: T,
    pub bound: f64,
    pub certified: bool,
}

pub fn reid_product<T: Real>(near: &StatsSummary<T>, far: &StatsSummary<T>) -> Result<ReidReport<T>> {
    if near.plane == Some(Plane::Far) || far.plane == Some(Plane::Near) {
        return Err(Error::Usage(
            "Reid product needs a near-field and a far-field summary".into(),
        ));
    }
    let axis = match (near.axis, far.axis) {
        (Some(a), Some(b)) if a == b => a,
        (Some(a), Some(b)) => {
            return Err(Error::Usage(format!(
                "axis mismatch: near field on {a}, far field on {b}"
            )))
        }
        (a, b) => a.or(b).unwrap_or(TransverseAxis::X),
    };
    let (dx, dq) = match (near.width_inferred, far.width_inferred) {
        (Some(x), Some(q)) => (x, q),
        _ => return Err(Error::DegenerateMarginal),
    };
    let u = dx * dq;
    Ok(ReidReport {
        axis,
        dx_inferred: dx,
        dq_inferred: dq,
        reid_product: u,
        bound: REID_BOUND,
        certified: u < T::lit(REID_BOUND),
    })
}

/// Orientation of the bright ridge, expressed as a_s against a_i:
/// a_s = slope·a_i + intercept.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RidgeFit<T> {
    /// Principal-axis (total least squares) slope d a_s / d a_i.
    pub slope: T,
    /// a_s at a_i = 0 on the principal-axis line.
    pub intercept: T,
    /// Weighted least-squares slope of a_s on a_i, C/V_i.
    pub ols_slope: T,
    pub ols_intercept: T,
    /// Ratio of the larger to the smaller second-moment eigenvalue.
    pub eigen_ratio: T,
    pub isotropic: bool,
    pub method: &'static str,
}

impl<T: Real> RidgeFit<T> {
    /// a_i where the principal line crosses a_s = 0, i.e. b in a_i ≈ −a_s + b
    /// for an anti-correlated ridge.
    pub fn idler_offset(&self) -> T {
        -self.intercept / self.slope
    }
}

pub fn ridge_slope<T: Real>(p: &ProbabilityTable<T>) -> Result<RidgeFit<T>> {
    ridge_from_moments(&moments(p))
}

pub fn ridge_from_moments<T: Real>(m: &StatsSummary<T>) -> Result<RidgeFit<T>> {
    let (vs, vi, c) = (m.v_s, m.v_i, m.c_si);
    if !(vs > T::zero() && vi > T::zero()) {
        return Err(Error::DegenerateDistribution(
            "ridge fit needs spread on both axes".into(),
        ));
    }
    let half = T::lit(0.5);
    let mean = (vs + vi) * half;
    let disc = (((vi - vs) * half).powi(2) + c * c).sqrt();
    let (l_hi, l_lo) = (mean + disc, mean - disc);
    // eigenvector of [[V_i, C], [C, V_s]] for l_hi, as (Δa_i, Δa_s)
    let slope = if vi >= vs { c / (l_hi - vs) } else { (l_hi - vi) / c };
    let eigen_ratio = if l_lo > T::zero() { l_hi / l_lo } else { T::infinity() };
    let isotropic = eigen_ratio < T::lit(ISOTROPY_RATIO);
    let ols_slope = c / vi;
    if isotropic {
        log::warn!(
            "no ridge: second-moment eigenvalue ratio {eigen_ratio} (principal slope {slope}, regression slope {ols_slope})"
        );
    }
    Ok(RidgeFit {
        slope,
        intercept: m.mu_s - slope * m.mu_i,
        ols_slope,
        ols_intercept: m.mu_s - ols_slope * m.mu_i,
        eigen_ratio,
        isotropic,
        method: "principal-axis",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(n: usize, d: f64, f: impl Fn(f64, f64) -> f64) -> ProbabilityTable<f64> {
        let lat = Lattice::centered_rectangular(n, n, d, d).unwrap();
        let data = Array2::from_shape_fn((n, n), |(r, c)| {
            let p = lat.point(r, c);
            f(p[0], p[1])
        });
        ProbabilityTable::from_intensity(lat, &data).unwrap()
    }

    #[test]
    fn uniform_table() {
        let t = table(8, 0.5, |_, _| 3.0);
        for v in t.density.iter() {
            assert!((v - 1.0 / (64.0 * 0.25)).abs() < 1e-15);
        }
        assert!((t.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_table_is_degenerate() {
        let lat = Lattice::<f64>::centered_rectangular(4, 4, 1.0, 1.0).unwrap();
        assert!(matches!(
            ProbabilityTable::from_intensity(lat, &Array2::zeros((4, 4))),
            Err(Error::DegenerateDistribution(_))
        ));
    }

    #[test]
    fn separable_gaussian_has_no_covariance() {
        let t = table(64, 0.25, |s, i| (-(s * s) / 2.0 - i * i).exp());
        let m = moments(&t);
        assert!(m.c_si.abs() < 1e-10);
        let r = reid_inference(&m).unwrap();
        assert_eq!(r.var_inferred.unwrap(), m.v_i);
    }

    #[test]
    fn mirror_flips_covariance() {
        let f = |s: f64, i: f64| (-(s * s + i * i - 1.2 * s * i)).exp();
        let a = moments(&table(63, 0.2, f));
        let b = moments(&table(63, 0.2, move |s, i| f(s, -i)));
        assert!((a.c_si + b.c_si).abs() < 1e-12);
        assert!((a.v_s - b.v_s).abs() < 1e-12 && (a.v_i - b.v_i).abs() < 1e-12);
    }

    #[test]
    fn marginal_route_agrees() {
        let t = table(50, 0.3, |s, i| (-(s - 0.4).powi(2) - 2.0 * (i + s * 0.7).powi(2)).exp());
        let a = moments(&t);
        let b = moments_from_marginals(&t).unwrap();
        for (x, y) in [
            (a.mu_s, b.mu_s),
            (a.mu_i, b.mu_i),
            (a.v_s, b.v_s),
            (a.v_i, b.v_i),
            (a.c_si, b.c_si),
        ] {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn inference_limits() {
        let base = StatsSummary {
            plane: None,
            axis: None,
            mu_s: 0.0,
            mu_i: 0.0,
            v_s: 2.0_f64,
            v_i: 8.0,
            c_si: 4.0,
            gain: None,
            var_inferred: None,
            width_inferred: None,
            inference_skipped: false,
        };
        let r = reid_inference(&base).unwrap();
        assert_eq!(r.var_inferred, Some(0.0));
        assert_eq!(r.gain, Some(2.0));
        let rho = StatsSummary {
            v_s: 1.0,
            v_i: 1.0,
            c_si: 0.8,
            ..base
        };
        assert!((reid_inference(&rho).unwrap().var_inferred.unwrap() - 0.36).abs() < 1e-15);
        assert!(matches!(
            reid_inference(&StatsSummary { v_s: 0.0, ..base }),
            Err(Error::DegenerateMarginal)
        ));
    }

    #[test]
    fn single_cell_table_skips_inference() {
        let lat = Lattice::<f64>::centered_rectangular(5, 5, 1.0, 1.0).unwrap();
        let mut d = Array2::zeros((5, 5));
        d[[1, 3]] = 2.0;
        let j = JointDistribution::new(Plane::Far, TransverseAxis::X, lat, d).unwrap();
        let s = summarize(&j).unwrap();
        assert!(s.inference_skipped);
        assert_eq!(s.v_s, 0.0);
        assert!(s.var_inferred.is_none());
    }

    #[test]
    fn ridge_of_anti_diagonal() {
        let t = table(81, 0.1, |s, i| (-(s + i).powi(2) * 50.0 - (s - i).powi(2) * 0.5).exp());
        let fit = ridge_slope(&t).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-9);
        assert!(fit.intercept.abs() < 1e-9);
        assert!(!fit.isotropic);
        // exchanging the axes inverts the slope
        let tr = ridge_slope(&t.transposed()).unwrap();
        assert!((tr.slope - 1.0 / fit.slope).abs() < 1e-9);
    }

    #[test]
    fn isotropic_table_flagged() {
        let t = table(41, 0.2, |s, i| (-(s * s + i * i)).exp());
        let fit = ridge_slope(&t).unwrap();
        assert!(fit.isotropic);
    }

    #[test]
    fn reid_product_axis_checks() {
        let mk = |plane, axis, w: f64| StatsSummary {
            plane: Some(plane),
            axis: Some(axis),
            mu_s: 0.0,
            mu_i: 0.0,
            v_s: 1.0,
            v_i: 1.0,
            c_si: 0.0,
            gain: Some(0.0),
            var_inferred: Some(w * w),
            width_inferred: Some(w),
            inference_skipped: false,
        };
        let r = reid_product(
            &mk(Plane::Near, TransverseAxis::Y, 1e-5),
            &mk(Plane::Far, TransverseAxis::Y, 1e3),
        )
        .unwrap();
        assert!((r.reid_product - 1e-2).abs() < 1e-15);
        assert!(r.certified);
        assert!(matches!(
            reid_product(
                &mk(Plane::Near, TransverseAxis::X, 1.0),
                &mk(Plane::Far, TransverseAxis::Y, 1.0)
            ),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn summary_json_names() {
        let t = table(9, 1.0, |s, i| (-(s - i).powi(2)).exp() + 0.1);
        let s = reid_inference(&moments(&t)).unwrap();
        let v = serde_json::to_value(s).unwrap();
        for k in [
            "mu_s",
            "mu_i",
            "V_s",
            "V_i",
            "C_si",
            "G",
            "var_inferred",
            "width_inferred",
        ] {
            assert!(v.get(k).is_some(), "missing {k}");
        }
    }

    proptest! {
        #[test]
        fn normalisation_and_scale_invariance(
            vals in proptest::collection::vec(0.0f64..10.0, 36),
            scale in 0.01f64..100.0,
        ) {
            prop_assume!(vals.iter().any(|v| *v > 1e-3));
            let lat = Lattice::centered_rectangular(6, 6, 0.3, 0.7).unwrap();
            let a = Array2::from_shape_vec((6, 6), vals).unwrap();
            let p = ProbabilityTable::from_intensity(lat, &a).unwrap();
            prop_assert!((p.total() - 1.0).abs() < 1e-12);
            let q = ProbabilityTable::from_intensity(lat, &a.mapv(|v| v * scale)).unwrap();
            for (x, y) in p.density.iter().zip(q.density.iter()) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
            }
        }

        #[test]
        fn cauchy_schwarz_and_inference_bounds(vals in proptest::collection::vec(0.0f64..1.0, 49)) {
            prop_assume!(vals.iter().filter(|v| **v > 1e-3).count() > 3);
            let lat = Lattice::ridge_aligned(7, 1.0, 2.0).unwrap();
            let a = Array2::from_shape_vec((7, 7), vals).unwrap();
            let m = moments(&ProbabilityTable::from_intensity(lat, &a).unwrap());
            prop_assert!(m.c_si * m.c_si <= m.v_s * m.v_i * (1.0 + 1e-12));
            if let Ok(r) = reid_inference(&m) {
                let v = r.var_inferred.unwrap();
                prop_assert!(v >= 0.0 && v <= m.v_i);
            }
        }
    }
}
