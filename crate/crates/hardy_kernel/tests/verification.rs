use hardy_kernel::couplings::ModelParams;
use hardy_kernel::verification::*;

fn params(zeta: f64, alpha: f64) -> ModelParams {
    ModelParams::new(zeta, alpha).unwrap()
}

#[test]
fn free_kernel_conserves_mass() {
    let spec = VerifySpec::default();
    for (z, a) in [(1.0, 1.0), (0.2, 1.3), (1.5, 2.0)] {
        let report = check_invariance(&params(z, a), 0.0, 1.0, &[0.25, 1.0, 4.0], &spec).unwrap();
        assert!(report.max_rel_residual < 1e-6, "({z},{a}): {}", report.max_rel_residual);
    }
}

#[test]
fn finite_time_potential_holds_on_both_sides_of_zero() {
    let spec = VerifySpec::from_rel_tol(1e-4);
    for beta in [0.7, -0.5] {
        let report = check_finite_time_potential(&params(1.0, 1.0), beta, 1.0, 1.0, &spec).unwrap();
        assert!(report.max_abs_residual < 1e-4, "beta={beta}: {:?}", report.points);
    }
}

#[test]
fn finite_time_potential_rejects_exponents_outside_window() {
    let spec = VerifySpec::default();
    assert!(check_finite_time_potential(&params(1.0, 1.0), -1.5, 1.0, 1.0, &spec).is_err());
    assert!(check_finite_time_potential(&params(1.0, 1.0), 2.5, 1.0, 1.0, &spec).is_err());
}

#[test]
fn free_kernel_is_its_own_comparator_up_to_constants() {
    let report = sharp_bound_envelope(&params(1.0, 1.0), 0.0, &EnvelopeGrid::default(), &VerifySpec::default()).unwrap();
    assert!(report.passes(Some(100f64.ln())), "{}", report.summary(Some(100f64.ln())));
    assert_eq!(report.points.len(), 243);
}

#[test]
fn threeg_ratio_is_finite_for_cauchy() {
    let report = threeg_envelope(&params(1.0, 1.0), &default_threeg_sample()).unwrap();
    assert!(report.passes(None));
    assert!(threeg_envelope(&params(1.0, 2.0), &default_threeg_sample()).is_err());
}

#[test]
fn csv_has_one_row_per_sample_and_summary_is_parseable() {
    let report = check_invariance(&params(1.0, 1.0), 0.0, 1.0, &[0.5, 2.0], &VerifySpec::default()).unwrap();
    let csv = report.to_csv();
    assert_eq!(csv.lines().count(), 3);
    let summary = report.summary(1e-6);
    let fields: Vec<&str> = summary.split(' ').collect();
    assert_eq!(fields[0], "PASS");
    assert!(fields[2].parse::<f64>().is_ok());
}

#[test]
fn log_spacing_hits_endpoints() {
    let v = log_spaced(0.05, 20.0, 9);
    assert!((v[0] - 0.05).abs() < 1e-15 && (v[8] - 20.0).abs() < 1e-12);
}

#[test]
fn free_kernel_is_continuous() {
    let kernel = PerturbedKernel::new(&params(1.0, 1.0), 0.0, Default::default()).unwrap();
    let d = continuity_smoke(&kernel, 1.0, 0.7, 1.3, 0.1).unwrap();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
}

#[test]
fn hardy_invariance_at_alpha_two() {
    let spec = VerifySpec::default();
    let report = check_invariance(&params(1.5, 2.0), 0.5, 1.0, &[0.5, 2.0], &spec).unwrap();
    assert!(report.max_rel_residual < 1e-3, "{}", report.to_csv());
}
