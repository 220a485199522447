use spdc_core::camera::{camera_pair, corrected_jpd, map_to_camera, uncorrected_jpd, CameraMapping, ShiftMode};
use spdc_core::export::{read_binary, read_csv, write_binary, write_csv};
use spdc_core::spectral::far_field_jid;
use spdc_core::stats::{reid_product, summarize};
use spdc_core::sweep::{run_sweep, write_csv as write_sweep, SweepSpec, SweptVariable, CSV_HEADER};
use spdc_core::{
    Experiment32, Experiment64, ExperimentParams, FilterShape, JointDistribution64, Plane, TransverseAxis,
};

fn small(p: ExperimentParams) -> ExperimentParams {
    ExperimentParams {
        grid_n: 128,
        slices: 5,
        ..p
    }
}

#[test]
fn f32_and_f64_agree_on_reid_product() {
    let p = small(ExperimentParams::non_degenerate());
    let u64 = Experiment64::new(p.clone())
        .unwrap()
        .certify(TransverseAxis::Y)
        .unwrap()
        .reid
        .reid_product;
    let u32 = Experiment32::new(p)
        .unwrap()
        .certify(TransverseAxis::Y)
        .unwrap()
        .reid
        .reid_product as f64;
    assert!((u32 - u64).abs() < 1e-3 * u64, "{u32} vs {u64}");
}

#[test]
fn far_and_near_are_anti_and_positively_correlated() {
    let e = Experiment64::new(small(ExperimentParams::non_degenerate())).unwrap();
    for axis in [TransverseAxis::X, TransverseAxis::Y] {
        let pair = e.jids(axis).unwrap();
        let far = summarize(&pair.far).unwrap();
        let near = summarize(&pair.near).unwrap();
        assert!(far.gain.unwrap() < -0.99);
        assert!(near.gain.unwrap() > 0.99);
        let r = reid_product(&near, &far).unwrap();
        assert!(r.certified && r.reid_product > 0.0);
    }
}

#[test]
fn near_field_rejects_far_field_reid_argument_order() {
    let e = Experiment64::new(small(ExperimentParams::degenerate())).unwrap();
    let pair = e.jids(TransverseAxis::X).unwrap();
    let far = summarize(&pair.far).unwrap();
    let near = summarize(&pair.near).unwrap();
    assert!(reid_product(&far, &near).is_err());
}

#[test]
fn tophat_and_gaussian_filters_both_certify() {
    for shape in [FilterShape::Tophat, FilterShape::Gaussian] {
        let p = ExperimentParams {
            filter_shape: shape,
            ..small(ExperimentParams::non_degenerate())
        };
        let c = Experiment64::new(p).unwrap().certify(TransverseAxis::X).unwrap();
        assert!(c.reid.certified);
    }
}

#[test]
fn exported_matrix_reproduces_statistics() {
    let e = Experiment64::new(ExperimentParams {
        grid_layout: spdc_core::GridLayout::Rectangular,
        ..small(ExperimentParams::degenerate())
    })
    .unwrap();
    let j = far_field_jid(
        &e.model,
        TransverseAxis::X,
        &e.lattice,
        &e.sampling,
        e.grid.memory_budget_bytes,
    )
    .unwrap();
    let s0 = summarize(&j).unwrap();

    let mut csv = Vec::new();
    write_csv(&j, &mut csv).unwrap();
    let mut bin = Vec::new();
    write_binary(&j, &mut bin).unwrap();
    for g in [read_csv(&csv[..]).unwrap(), read_binary(&bin[..]).unwrap()] {
        let back = JointDistribution64::new(Plane::Far, TransverseAxis::X, g.lattice().unwrap(), g.data).unwrap();
        let s = summarize(&back).unwrap();
        assert!((s.v_s - s0.v_s).abs() < 1e-9 * s0.v_s);
        assert!((s.c_si - s0.c_si).abs() < 1e-9 * s0.c_si.abs());
    }
}

#[test]
fn resampled_export_keeps_mass_and_correlation() {
    let e = Experiment64::new(small(ExperimentParams::degenerate())).unwrap();
    let j = far_field_jid(
        &e.model,
        TransverseAxis::X,
        &e.lattice,
        &e.sampling,
        e.grid.memory_budget_bytes,
    )
    .unwrap();
    let r = j.to_rectangular(256).unwrap();
    assert!(r.lattice.is_axis_aligned());
    assert!((r.total() - j.total()).abs() < 1e-9 * j.total());
    assert!(summarize(&r).unwrap().gain.unwrap() < -0.95);
}

#[test]
fn sweep_rows_follow_value_then_axis_order() {
    let spec = SweepSpec::new(
        small(ExperimentParams::degenerate()),
        SweptVariable::PumpWaist,
        vec![250.0, 500.0],
        vec![TransverseAxis::X, TransverseAxis::Y],
    )
    .unwrap();
    let rows = run_sweep::<f64>(&spec).unwrap();
    let keys: Vec<_> = rows.iter().map(|r| (r.swept_value, r.axis)).collect();
    assert_eq!(
        keys,
        vec![
            (250.0, TransverseAxis::X),
            (250.0, TransverseAxis::Y),
            (500.0, TransverseAxis::X),
            (500.0, TransverseAxis::Y)
        ]
    );
    // doubling the waist halves Δq and so roughly halves U
    assert!((rows[2].reid_product / rows[0].reid_product - 0.5).abs() < 0.05);
    let mut out = Vec::new();
    write_sweep(&rows, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn sweep_failure_names_the_value() {
    let spec = SweepSpec::new(
        small(ExperimentParams::degenerate()),
        SweptVariable::FilterFwhm,
        vec![1.0, 400.0],
        vec![TransverseAxis::X],
    )
    .unwrap();
    let err = run_sweep::<f64>(&spec).unwrap_err();
    assert!(err.to_string().contains("400"), "{err}");
}

#[test]
fn degenerate_camera_pipeline_is_untilted() {
    let e = Experiment64::new(small(ExperimentParams::degenerate())).unwrap();
    let pair = camera_pair(&e, TransverseAxis::Y, 128).unwrap();
    assert!((pair.report.uncorrected_slope + 1.0).abs() < 0.01);
    assert!((pair.report.corrected_slope + 1.0).abs() < 0.01);
    assert!((pair.uncorrected.total() - pair.corrected.total()).abs() < 1e-6 * pair.uncorrected.total());
    assert_eq!(pair.corrected.slices.len(), 5);
}

#[test]
fn single_slice_camera_scaling_matches_wavelength_ratio() {
    let e = Experiment64::new(ExperimentParams {
        slices: 1,
        ..small(ExperimentParams::non_degenerate())
    })
    .unwrap();
    let s = e.sampling.central();
    let j = far_field_jid(
        &e.model,
        TransverseAxis::X,
        &e.lattice,
        &e.sampling,
        e.grid.memory_budget_bytes,
    )
    .unwrap();
    let q_slope = spdc_core::stats::ridge_slope(&spdc_core::stats::normalize(&j).unwrap())
        .unwrap()
        .slope;
    let m = CameraMapping::new(0.25, 1.0).unwrap();
    let cam = map_to_camera(&j, &m, s.wavelengths, s.weight).unwrap();
    let u = uncorrected_jpd(std::slice::from_ref(&cam), 256)
        .unwrap()
        .ridge()
        .unwrap()
        .slope;
    let expected = q_slope * s.wavelengths.signal.meters() / s.wavelengths.idler.meters();
    assert!((u / expected - 1.0).abs() < 0.01, "{u} vs {expected}");
    let c = corrected_jpd(&[cam], 256, ShiftMode::Fitted, 0.0)
        .unwrap()
        .ridge()
        .unwrap()
        .slope;
    assert!((c / q_slope - 1.0).abs() < 0.01);
}
