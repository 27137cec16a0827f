use std::f64::consts::PI;

use num_complex::Complex64;
use rfd_nls::exec::Execution;
use rfd_nls::grid::norm_1h;
use rfd_nls::harness::{convergence_study, run_single, verify_properties, RunConfig, VariantName};
use rfd_nls::ops::laplacian_eigenvalue;
use rfd_nls::{GridFunction, ProblemId, SchemeVariant, SpaceMesh};

#[test]
fn zero_problem_has_zero_errors() {
    for variant in [VariantName::SecondOrderInit, VariantName::FirstOrderInit] {
        let r = run_single(&RunConfig::new(ProblemId::Zero, 15, 8).with_variant(variant)).unwrap();
        assert_eq!(r.err_node_h1, Some(0.0));
        assert_eq!(r.err_half_h1, Some(0.0));
        assert_eq!(r.err_relax_h1, Some(0.0));
        assert_eq!(r.charge_drift, 0.0);
        assert_eq!(r.energy_drift, Some(0.0));
    }
    let mut cfg = RunConfig::new(ProblemId::Zero, 15, 8).with_variant(VariantName::Mollified);
    cfg.delta_star = Some(1.0);
    let r = run_single(&cfg).unwrap();
    assert_eq!(r.err_node_h1, Some(0.0));
    assert_eq!(r.max_fixed_point_iterations, Some(1));
}

#[test]
fn linear_mode_error_matches_eigenmode_phase() {
    let (j, n, t) = (63, 40, 1.0);
    let r = run_single(&RunConfig::new(ProblemId::LinearMode, j, n).with_final_time(t)).unwrap();
    let mesh = SpaceMesh::new(0.0, 1.0, j).unwrap();
    let tau = t / n as f64;
    let lam = laplacian_eigenvalue(1, &mesh);
    let q = 0.5 * tau * lam;
    let factor = Complex64::new(1.0, -q) / Complex64::new(1.0, q);
    // W⁰ = (π²/λ) I_h sin, and each step multiplies the mode by `factor`
    let amp = PI * PI / lam;
    let mode = GridFunction::from_fn_interior(&mesh, |x| Complex64::new((PI * x).sin(), 0.0));
    let size = norm_1h(&mode, &mesh);
    let expected = (0..=n)
        .map(|m| {
            let t_m = m as f64 * tau;
            (Complex64::from_polar(1.0, -PI * PI * t_m) - amp * factor.powu(m as u32)).norm() * size
        })
        .fold(0.0, f64::max);
    let got = r.err_node_h1.unwrap();
    assert!((got - expected).abs() <= 1e-10, "{got} vs {expected}");
}

#[test]
fn linear_mode_converges_at_second_order() {
    let mut cfg = RunConfig::new(ProblemId::LinearMode, 15, 16);
    cfg.levels = 4;
    let t = convergence_study(&cfg).unwrap();
    let s = t.slope_node.unwrap();
    assert!((1.8..=2.2).contains(&s), "{s}");
}

#[test]
fn cubic_sine_baseline_at_j127() {
    // τ = h = 1/128
    let r = run_single(&RunConfig::new(ProblemId::CubicSine, 127, 128)).unwrap();
    let e = r.err_node_h1.unwrap();
    let scale = 2.0 * r.h * r.h;
    assert!(e > 0.0 && e <= 50.0 * scale, "{e}");
}

#[test]
fn defocusing_problem_converges() {
    let mut cfg = RunConfig::new(ProblemId::DefocusingSine, 31, 32);
    cfg.levels = 3;
    let t = convergence_study(&cfg).unwrap();
    let s = t.slope_node.unwrap();
    assert!((1.8..=2.2).contains(&s), "{s}");
}

#[test]
fn studies_need_three_levels() {
    let mut cfg = RunConfig::new(ProblemId::CubicSine, 7, 8);
    cfg.levels = 2;
    assert!(convergence_study(&cfg).is_err());
}

#[test]
fn adding_a_level_keeps_earlier_rows() {
    let mut cfg = RunConfig::new(ProblemId::CubicSine, 15, 16);
    cfg.levels = 3;
    let three = convergence_study(&cfg).unwrap();
    cfg.levels = 4;
    let four = convergence_study(&cfg).unwrap();
    for (a, b) in three.rows.iter().zip(&four.rows) {
        assert_eq!(a.err_node_h1, b.err_node_h1);
        assert_eq!(a.eoc_node, b.eoc_node);
        assert_eq!(a.err_relax_h1, b.err_relax_h1);
        assert_eq!(a.eoc_relax, b.eoc_relax);
    }
}

#[test]
fn reports_are_deterministic_across_execution_modes() {
    let mut cfg = RunConfig::new(ProblemId::CubicSine, 15, 16);
    cfg.levels = 3;
    cfg.execution = Execution::Sequential;
    let a = convergence_study(&cfg).unwrap();
    cfg.execution = Execution::Parallel;
    let b = convergence_study(&cfg).unwrap();
    let strip = |t: &rfd_nls::harness::EocTable| {
        let mut t = t.clone();
        t.rows.iter_mut().for_each(|r| r.wall_ms = 0.0);
        serde_json::to_string(&t).unwrap()
    };
    assert_eq!(strip(&a), strip(&b));

    let single = RunConfig::new(ProblemId::Soliton, 199, 20);
    let (x, y) = (run_single(&single).unwrap(), run_single(&single).unwrap());
    assert_eq!(x.without_timing(), y.without_timing());

    let (p, q) = (
        verify_properties(3, &[3, 10], Execution::Parallel).unwrap(),
        verify_properties(3, &[3, 10], Execution::Sequential).unwrap(),
    );
    assert_eq!(p, q);
}

#[test]
fn csv_has_the_documented_columns() {
    let mut cfg = RunConfig::new(ProblemId::CubicSine, 7, 8);
    cfg.levels = 3;
    let csv = convergence_study(&cfg).unwrap().to_csv_string().unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "level,J,N,h,tau,err_node_h1,eoc_node,err_half_h1,err_relax_h1,eoc_relax,charge_drift,energy_drift,wall_ms"
    );
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn mollified_run_reports_mesh_condition() {
    let cfg = RunConfig::new(ProblemId::CubicSine, 31, 32).with_variant(VariantName::Mollified);
    let r = run_single(&cfg).unwrap();
    let SchemeVariant::Mollified { delta_star, .. } = r.variant else {
        panic!("variant not recorded")
    };
    assert!(delta_star > 2.0 * 1.0);
    let mc = r.mesh_condition.unwrap();
    assert!(mc.satisfied && mc.threshold == 0.5 * delta_star);
    assert!(r.max_fixed_point_iterations.unwrap() <= 2);
    let rfd = run_single(&RunConfig::new(ProblemId::CubicSine, 31, 32)).unwrap();
    assert_eq!(r.err_node_h1, rfd.err_node_h1);
}

#[test]
fn snapshots_are_taken_at_requested_times() {
    let mut cfg = RunConfig::new(ProblemId::LinearMode, 9, 10);
    cfg.snapshot_times = vec![0.0, 0.5, 0.52];
    let r = run_single(&cfg).unwrap();
    let steps: Vec<usize> = r.snapshots.iter().map(|s| s.n).collect();
    assert_eq!(steps, vec![0, 5, 10]);
    assert!(r.snapshots.iter().all(|s| s.values.len() == 11));
    assert_eq!(r.snapshots[2].values[0], (0.0, 0.0));
}

#[test]
fn soliton_energy_drift_shrinks_at_least_quadratically() {
    let coarse = run_single(&RunConfig::new(ProblemId::Soliton, 399, 10)).unwrap();
    let fine = run_single(&RunConfig::new(ProblemId::Soliton, 799, 20)).unwrap();
    let ratio = coarse.energy_drift.unwrap() / fine.energy_drift.unwrap();
    // at least 4x; the τ² part cancels for a travelling pulse and about 8x is observed
    assert!(ratio >= 3.5, "{ratio}");
    assert!(coarse.charge_drift <= 1e-13);
}

#[test]
fn property_suite_passes_including_spikes() {
    let r = verify_properties(11, &[1, 3, 10, 100], Execution::Parallel).unwrap();
    for e in &r.entries {
        assert!(e.passed, "{e:?}");
    }
    assert!(r.all_passed);
    let sbp = r.entry("summation-by-parts J=100").unwrap();
    assert_eq!(sbp.samples, 103);
}
