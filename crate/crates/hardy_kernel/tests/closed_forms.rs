use approx::assert_relative_eq;
use hardy_kernel::couplings::{c_alpha_constant, psi, ModelParams};
use hardy_kernel::subordinated_kernel::{h_beta_gamma, h_beta_gamma_oracle};
use proptest::prelude::*;

#[test]
fn h_functional_matches_double_quadrature_for_subordinated_kernel() {
    let p = ModelParams::new(2.0, 0.7).unwrap();
    let oracle = h_beta_gamma_oracle(&p, 1.5, 1.0, 0.5, 1e-6).unwrap();
    assert_relative_eq!(oracle, h_beta_gamma(&p, 1.5, 1.0, 0.5).unwrap(), max_relative = 1e-4);
}

#[test]
fn h_functional_oracle_handles_small_beta() {
    let p = ModelParams::new(1.0, 1.0).unwrap();
    let oracle = h_beta_gamma_oracle(&p, 0.5, 1.0, 2.0, 1e-8).unwrap();
    assert_relative_eq!(oracle, h_beta_gamma(&p, 0.5, 1.0, 2.0).unwrap(), max_relative = 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// C^(α)(1, 2ζ−α−β, ζ) = 1/Ψ(β) across the admissible range.
    #[test]
    fn kappa_inverse_constant(zeta in 0.5f64..3.0, alpha in 0.2f64..2.0, frac in 0.05f64..0.95) {
        let p = ModelParams::new(zeta, alpha).unwrap();
        let beta = frac * (p.dimension() - alpha);
        let lhs = c_alpha_constant(&p, 1.0, 2.0 * zeta - alpha - beta).unwrap();
        let rhs = 1.0 / psi(&p, beta).unwrap();
        prop_assert!(((lhs - rhs) / rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    /// h(r)/h(1) = r^{αβ+γ−2ζ}.
    #[test]
    fn h_functional_is_homogeneous(beta_frac in 0.05f64..0.95, gamma in -0.5f64..1.0, r in 0.01f64..100.0) {
        let p = ModelParams::new(1.0, 1.0).unwrap();
        let beta = beta_frac * (2.0 - gamma);
        let ratio = h_beta_gamma(&p, beta, gamma, r).unwrap() / h_beta_gamma(&p, beta, gamma, 1.0).unwrap();
        let exact = r.powf(beta + gamma - 2.0);
        prop_assert!(((ratio - exact) / exact).abs() < 1e-12);
    }
}
