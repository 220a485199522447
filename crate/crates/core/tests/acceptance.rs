//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fail.
//!
//! Runs with a custom harness so the lines are always printed:
//! `cargo test -p spdc-core --test acceptance`.

use std::time::{Duration, Instant};

use ndarray::Array2;
use spdc_core::biphoton::{sinc_efficiency, TransverseSlice};
use spdc_core::camera::camera_pair;
use spdc_core::fft::centered_fft2;
use spdc_core::grid::Lattice;
use spdc_core::stats::{moments, reid_inference, ProbabilityTable};
use spdc_core::sweep::{evaluate, run_sweep, Predicate, SweepRow, SweepSpec, SweptVariable};
use spdc_core::{
    BiphotonModel64, Experiment64, ExperimentParams, Kernel, SellmeierSet64, SpdcWavelengths64, TransverseAxis,
    Wavelength64,
};

const AXES: [TransverseAxis; 2] = [TransverseAxis::X, TransverseAxis::Y];
const FWHMS: [f64; 6] = [1.0, 2.0, 4.0, 6.0, 8.0, 10.0];

struct Board {
    failed: Vec<&'static str>,
    count: usize,
}

impl Board {
    fn record(&mut self, id: &'static str, title: &str, pass: bool, detail: String) {
        self.count += 1;
        println!("{} {id:>3}  {title}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id);
        }
    }
}

fn nm(x: f64) -> Wavelength64 {
    Wavelength64::from_nm(x)
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn ms(d: Duration) -> String {
    format!("{:.1} ms", d.as_secs_f64() * 1e3)
}

fn sweep(base: ExperimentParams, var: SweptVariable, values: &[f64]) -> Vec<SweepRow> {
    let spec = SweepSpec::new(base, var, values.to_vec(), AXES.to_vec()).expect("sweep spec");
    run_sweep::<f64>(&spec).expect("sweep")
}

fn series(rows: &[SweepRow], axis: TransverseAxis, f: impl Fn(&SweepRow) -> f64) -> Vec<f64> {
    rows.iter().filter(|r| r.axis == axis).map(f).collect()
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn phase_matching(b: &mut Board) {
    let t = Instant::now();
    let s = SellmeierSet64::bbo();
    let deg = SpdcWavelengths64::degenerate(nm(405.0));
    let th = s.phase_matching_angle(&deg).unwrap().theta().to_degrees();
    let dt = t.elapsed();
    b.record(
        "1",
        "phase-matching angle, 405 -> 810 + 810 nm",
        within(th, 28.81, 0.3) && dt < Duration::from_secs(1),
        format!("theta_p = {th:.4} deg (target 28.81 +- 0.3), {}", ms(dt)),
    );

    let t = Instant::now();
    let non = SpdcWavelengths64::new(nm(405.0), nm(780.0)).unwrap();
    let pm = s.phase_matching_angle(&non).unwrap();
    let th = pm.theta().to_degrees();
    let dt = t.elapsed();
    b.record(
        "2",
        "phase-matching angle, 405 -> 780 + 842.4 nm",
        within(th, 27.80, 0.3) && dt < Duration::from_secs(1),
        format!(
            "theta_p = {th:.4} deg (closed form {:.4}, root finder {:.4}; target 27.80 +- 0.3), {}",
            pm.closed_form.to_degrees(),
            pm.numeric.to_degrees(),
            ms(dt)
        ),
    );

    let t = Instant::now();
    let rho = s.walkoff_angle(pm.theta(), non.pump).unwrap().to_degrees();
    let dt = t.elapsed();
    let rho_at_cut = s.walkoff_angle(27.80_f64.to_radians(), non.pump).unwrap().to_degrees();
    b.record(
        "3",
        "walk-off angle at the 780 nm operating point",
        within(rho, 4.51, 0.25) && dt < Duration::from_secs(1),
        format!(
            "rho = {rho:.4} deg at theta_p = {th:.3} deg (target 4.51 +- 0.25; {rho_at_cut:.4} deg at 27.80 deg), {}",
            ms(dt)
        ),
    );

    let li = non.idler.nm();
    b.record(
        "4",
        "energy conservation, idler of (405, 780) nm",
        within(li, 842.4, 0.1),
        format!("lambda_i = {li:.4} nm (target 842.4 +- 0.1)"),
    );
}

fn camera(b: &mut Board) {
    let base = ExperimentParams::non_degenerate();
    let t = Instant::now();
    let exp = Experiment64::new(base.clone()).unwrap();
    let pair = camera_pair(&exp, TransverseAxis::Y, base.grid_n).unwrap();
    let dt = t.elapsed();
    let r = pair.report;
    let ratio = r.uncorrected_slope / r.analytic_uncorrected_slope;
    b.record(
        "5",
        "camera skew, uncorrected y-axis JPD (1024^2, 31 slices)",
        within(r.uncorrected_slope, -0.92, 0.02) && (ratio - 1.0).abs() < 0.01 && dt < Duration::from_secs(60),
        format!(
            "slope {:.5} (target -0.92 +- 0.02), analytic -ls/li = {:.5}, ratio {ratio:.5} (1% limit), {:.1} s",
            r.uncorrected_slope,
            r.analytic_uncorrected_slope,
            dt.as_secs_f64()
        ),
    );

    let mut slopes = Vec::new();
    for &f in &FWHMS {
        let p = ExperimentParams {
            filter_fwhm_nm: f,
            ..base.clone()
        };
        let m = if f == base.filter_fwhm_nm {
            r.corrected_slope
        } else {
            let e = Experiment64::new(p.clone()).unwrap();
            camera_pair(&e, TransverseAxis::Y, p.grid_n)
                .unwrap()
                .report
                .corrected_slope
        };
        slopes.push(m);
    }
    let band = slopes.iter().all(|m| (0.99..=1.01).contains(&m.abs()));
    b.record(
        "6",
        "camera correction, corrected y-axis JPD",
        within(r.corrected_slope, -0.994, 0.006) && band,
        format!(
            "corrected slope {:.7} at 10 nm (target -0.994 +- 0.006); |m| over FWHM 1-10 nm {} in [0.99, 1.01]: {band}",
            r.corrected_slope,
            fmt(&slopes)
        ),
    );
}

fn filter_trends(b: &mut Board) {
    let deg = sweep(ExperimentParams::degenerate(), SweptVariable::FilterFwhm, &FWHMS);
    let mut ok = true;
    let mut detail = Vec::new();
    for axis in AXES {
        let u = series(&deg, axis, |r| r.reid_product);
        let (pass, d) = evaluate(Predicate::Flat, &u, 0.02);
        ok &= pass;
        detail.push(format!("{axis}: U {} {d}", fmt(&u)));
    }
    b.record(
        "7",
        "degenerate Reid product flat over FWHM 1-10 nm",
        ok,
        detail.join("; "),
    );

    let non = sweep(ExperimentParams::non_degenerate(), SweptVariable::FilterFwhm, &FWHMS);
    let mut ok = true;
    let mut detail = Vec::new();
    for axis in AXES {
        // only round-off is forgiven
        let u = series(&non, axis, |r| r.reid_product);
        let dx = series(&non, axis, |r| r.dx_inferred_um);
        let (pu, du) = evaluate(Predicate::NonDecreasing, &u, 1e-9);
        let (px, dxd) = evaluate(Predicate::NonDecreasing, &dx, 1e-9);
        ok &= pu && px;
        detail.push(format!("{axis}: U {} {du}; dx_i|s/um {} {dxd}", fmt(&u), fmt(&dx)));
    }
    b.record(
        "8",
        "non-degenerate Reid product and dx_i|s non-decreasing in FWHM",
        ok,
        detail.join("; "),
    );
}

fn parameter_trends(b: &mut Board) -> Vec<f64> {
    let mut baseline = Vec::new();
    let waists = [100.0, 250.0, 500.0, 1000.0];
    let lengths = [0.5, 1.0, 2.0, 4.0];

    let rows = sweep(ExperimentParams::degenerate(), SweptVariable::PumpWaist, &waists);
    let mut ok = true;
    let mut detail = Vec::new();
    for axis in AXES {
        let u = series(&rows, axis, |r| r.reid_product);
        baseline.push(u[2]);
        let (p, _) = evaluate(Predicate::StrictlyDecreasing, &u, 0.0);
        ok &= p;
        detail.push(format!("{axis}: U {}", fmt(&u)));
    }
    b.record(
        "9a",
        "degenerate U decreasing in w0 over 100-1000 um",
        ok,
        detail.join("; "),
    );

    let rows = sweep(ExperimentParams::degenerate(), SweptVariable::CrystalLength, &lengths);
    let mut ok = true;
    let mut detail = Vec::new();
    for axis in AXES {
        let u = series(&rows, axis, |r| r.reid_product);
        let (p, _) = evaluate(Predicate::StrictlyDecreasing, &u, 0.0);
        ok &= p;
        detail.push(format!("{axis}: U {}", fmt(&u)));
    }
    b.record(
        "9b",
        "degenerate U decreasing in L over 0.5-4 mm",
        ok,
        detail.join("; "),
    );

    let rows = sweep(
        ExperimentParams::non_degenerate(),
        SweptVariable::CrystalLength,
        &lengths,
    );
    let mut ok = true;
    let mut detail = Vec::new();
    for axis in AXES {
        let u = series(&rows, axis, |r| r.reid_product);
        baseline.push(u[1]);
        let (p, _) = evaluate(Predicate::StrictlyIncreasing, &u, 0.0);
        ok &= p;
        detail.push(format!("{axis}: U {}", fmt(&u)));
    }
    b.record(
        "9c",
        "non-degenerate (10 nm filter) U increasing in L over 0.5-4 mm",
        ok,
        detail.join("; "),
    );
    baseline
}

fn certification(b: &mut Board, baseline: &[f64]) {
    let below = baseline.iter().all(|&u| u < 0.5);
    let best = baseline.iter().cloned().fold(f64::INFINITY, f64::min);
    let order = best.log10().round() as i32;
    b.record(
        "10",
        "entanglement certified; best U of order 1e-2",
        below && order == -2,
        format!(
            "baseline U {} all < 0.5: {below}; best {best:.4e} (order 1e{order})",
            fmt(baseline)
        ),
    );
}

fn gaussian_oracle(b: &mut Board) {
    let (n, rho) = (1024usize, 0.8f64);
    let (ss, si) = (1.0f64, 1.0f64);
    let h = 6.0 / (n as f64 / 2.0);
    let lat = Lattice::centered_rectangular(n, n, h * ss, h * si).unwrap();
    let norm = 1.0 / (1.0 - rho * rho);
    let d = Array2::from_shape_fn((n, n), |(r, c)| {
        let p = lat.point(r, c);
        let (x, y) = (p[0] / ss, p[1] / si);
        (-0.5 * norm * (x * x - 2.0 * rho * x * y + y * y)).exp()
    });
    let table = ProbabilityTable::from_intensity(lat, &d).unwrap();
    let m = reid_inference(&moments(&table)).unwrap();
    let rel = |x: f64, t: f64| (x - t).abs() / t.abs();
    let errs = [
        m.mu_s.abs() / ss,
        m.mu_i.abs() / si,
        rel(m.v_s, ss * ss),
        rel(m.v_i, si * si),
        rel(m.c_si, rho * ss * si),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    let var = m.var_inferred.unwrap();
    let target = (1.0 - rho * rho) * m.v_i;
    b.record(
        "11",
        "statistics oracle, bivariate Gaussian rho = 0.8 on 1024^2 over +-6 sigma",
        worst < 1e-3 && (var - target).abs() < 1e-3,
        format!("worst moment error {worst:.2e} (limit 1e-3); var_i|s = {var:.6} vs 0.36 V_i = {target:.6}"),
    );
}

fn fourier(b: &mut Board) {
    // Parseval on production slices, both axes, edge and centre of the spectrum.
    let exp = Experiment64::new(ExperimentParams::non_degenerate()).unwrap();
    let conj = exp.lattice.conjugate();
    let mut worst = 0.0f64;
    for axis in AXES {
        for s in [&exp.sampling.samples[0], exp.sampling.central()] {
            let slice = TransverseSlice {
                axis,
                lattice: exp.lattice,
                wavelengths: s.wavelengths,
            };
            let psi = exp.model.evaluate_grid(&slice, exp.grid.memory_budget_bytes).unwrap();
            let f = centered_fft2(&psi, &exp.lattice);
            let e_q: f64 = psi.iter().map(|a| a * a).sum::<f64>() * exp.lattice.cell_area();
            let e_x: f64 = f.iter().map(|z| z.norm_sqr()).sum::<f64>() * conj.cell_area();
            worst = worst.max((e_q - e_x).abs() / e_q);
        }
    }

    // Exponential kernel: Ψ ∝ exp(−a u² − β v²) with u, v the sum and
    // difference coordinates, a = w0²/2 + β, β = αL/(4k).
    let p = ExperimentParams {
        kernel: Kernel::Gaussian,
        slices: 1,
        ..ExperimentParams::degenerate()
    };
    let e = Experiment64::new(p.clone()).unwrap();
    let k = e.model.crystal.sellmeier.k_ordinary(e.wavelengths().signal).unwrap();
    let beta = spdc_core::biphoton::GAUSSIAN_KERNEL_ALPHA * p.crystal_length_mm * 1e-3 / (4.0 * k);
    let w0 = p.pump_waist_um * 1e-6;
    let a = w0 * w0 / 2.0 + beta;
    let near = reid_inference(&moments(
        &ProbabilityTable::from_intensity(e.lattice.conjugate(), &e.jids(TransverseAxis::X).unwrap().near.data)
            .unwrap(),
    ))
    .unwrap();
    let rel = |x: f64, t: f64| (x - t).abs() / t;
    let widths = [
        rel(near.v_s, (a + beta) / 2.0),
        rel(near.v_i, (a + beta) / 2.0),
        rel(near.c_si, (a - beta) / 2.0),
        rel(near.var_inferred.unwrap(), 2.0 * a * beta / (a + beta)),
    ];
    let w = widths.iter().cloned().fold(0.0, f64::max);
    b.record(
        "12",
        "Fourier machinery: Parseval per slice; exponential-kernel near-field widths",
        worst < 1e-9 && w < 0.01,
        format!("worst Parseval error {worst:.2e} (limit 1e-9); worst near-field width error {w:.2e} (limit 1e-2)"),
    );
}

fn hygiene(b: &mut Board) {
    let exp = Experiment64::new(ExperimentParams {
        grid_n: 256,
        slices: 5,
        ..ExperimentParams::non_degenerate()
    })
    .unwrap();
    let mut norm = 0.0f64;
    for axis in AXES {
        let pair = exp.jids(axis).unwrap();
        for j in [&pair.far, &pair.near] {
            let t = ProbabilityTable::from_intensity(j.lattice, &j.data).unwrap().total();
            norm = norm.max((t - 1.0).abs());
        }
    }

    let l = exp.model.crystal.length;
    let zero = sinc_efficiency(std::f64::consts::TAU / l, l);

    let model: &BiphotonModel64 = &exp.model;
    let w = exp.wavelengths();
    let ks = model.crystal.sellmeier.k_ordinary(w.signal).unwrap();
    let ki = model.crystal.sellmeier.k_ordinary(w.idler).unwrap();
    let qmax = 0.02 * ks.min(ki);
    let steps = 12;
    let mut worst = 0.0f64;
    for a in 0..=steps {
        for c in 0..=steps {
            let ang_s = a as f64 * std::f64::consts::TAU / steps as f64;
            let ang_i = c as f64 * 2.4;
            let rs = qmax * (a as f64 + 1.0) / (steps as f64 + 1.0);
            let ri = qmax * (c as f64 + 1.0) / (steps as f64 + 1.0);
            let qs = [rs * ang_s.cos(), rs * ang_s.sin()];
            let qi = [ri * ang_i.cos(), ri * ang_i.sin()];
            let exact = model.mismatch(qs, qi, &w).unwrap().dk_z;
            let parax = model.paraxial_dk_z(qs, qi, &w).unwrap();
            // shared detuning and walk-off terms cancel in the difference
            let transverse = (rs * rs) / (2.0 * ks) + (ri * ri) / (2.0 * ki);
            worst = worst.max((exact - parax).abs() / transverse);
        }
    }
    b.record(
        "13",
        "numerics hygiene",
        norm < 1e-9 && zero < 1e-12 && worst < 1e-3,
        format!(
            "max |sum P dA - 1| = {norm:.2e} (1e-9); sinc_efficiency(2 pi/L) = {zero:.2e} (1e-12); exact vs paraxial dk_z {worst:.2e} (1e-3)"
        ),
    );
}

fn main() {
    let mut b = Board {
        failed: Vec::new(),
        count: 0,
    };
    let t = Instant::now();
    phase_matching(&mut b);
    camera(&mut b);
    filter_trends(&mut b);
    let baseline = parameter_trends(&mut b);
    certification(&mut b, &baseline);
    gaussian_oracle(&mut b);
    fourier(&mut b);
    hygiene(&mut b);
    println!(
        "acceptance: {} of {} criteria passed in {:.1} s",
        b.count - b.failed.len(),
        b.count,
        t.elapsed().as_secs_f64()
    );
    if !b.failed.is_empty() {
        println!("failed: {}", b.failed.join(", "));
        std::process::exit(1);
    }
}
