//! Model parameters, the coupling map Ψ_ζ(η), its critical value and inverse,
//! the Hardy potential, and the closed-form Gamma-ratio constants C and C^(α).

use crate::error::{HardyError, Result};
use crate::special_functions::{log_gamma, Sign};

/// The pair (ζ, α): ζ fixes the effective dimension 2ζ+1, α the order of the
/// fractional power of the Bessel operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    zeta: f64,
    alpha: f64,
}

impl ModelParams {
    /// # Errors
    /// Domain error unless ζ > −1/2, 0 < α ≤ 2 and α < 2ζ+1.
    pub fn new(zeta: f64, alpha: f64) -> Result<Self> {
        if !zeta.is_finite() || zeta <= -0.5 {
            return Err(HardyError::domain(format!("zeta must exceed -1/2, got {zeta}")));
        }
        if !alpha.is_finite() || alpha <= 0.0 || alpha > 2.0 {
            return Err(HardyError::domain(format!("alpha must lie in (0, 2], got {alpha}")));
        }
        if alpha >= 2.0 * zeta + 1.0 {
            return Err(HardyError::domain(format!(
                "alpha must be below 2*zeta+1 = {}, got {alpha}",
                2.0 * zeta + 1.0
            )));
        }
        Ok(Self { zeta, alpha })
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// True for the local (α = 2) case.
    pub fn is_local(&self) -> bool {
        self.alpha == 2.0
    }

    /// Effective dimension 2ζ+1.
    pub fn dimension(&self) -> f64 {
        2.0 * self.zeta + 1.0
    }

    /// Lower bound −M of admissible exponents: M = α for α < 2, ∞ for α = 2.
    pub fn m_bound(&self) -> f64 {
        if self.is_local() {
            f64::INFINITY
        } else {
            self.alpha
        }
    }

    /// The exponent at which Ψ_ζ is maximal, (2ζ+1−α)/2.
    pub fn eta_critical(&self) -> f64 {
        0.5 * (self.dimension() - self.alpha)
    }

    /// Same model with ζ replaced (used by the shifted α = 2 closed form).
    pub fn with_zeta(&self, zeta: f64) -> Result<Self> {
        Self::new(zeta, self.alpha)
    }

    /// Same ζ, different α.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.zeta, alpha)
    }

    /// Checks that η lies in the admissible set of Ψ_ζ.
    pub fn check_eta(&self, eta: f64) -> Result<()> {
        if !eta.is_finite() {
            return Err(HardyError::domain(format!("eta must be finite, got {eta}")));
        }
        if !self.is_local() && !(eta > -self.alpha && eta < self.dimension()) {
            return Err(HardyError::domain(format!(
                "eta must lie in (-{}, {}), got {eta}",
                self.alpha,
                self.dimension()
            )));
        }
        Ok(())
    }

    /// Checks that η lies on the branch (−M, (2ζ+1−α)/2] used by the
    /// perturbation operations.
    pub fn check_branch(&self, eta: f64) -> Result<()> {
        self.check_eta(eta)?;
        if eta > self.eta_critical() * (1.0 + 1e-14) {
            return Err(HardyError::domain(format!(
                "eta must not exceed the critical exponent {}, got {eta}",
                self.eta_critical()
            )));
        }
        Ok(())
    }
}

/// An exponent η together with its coupling constant κ = Ψ_ζ(η).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub eta: f64,
    pub kappa: f64,
}

impl Coupling {
    pub fn from_eta(params: &ModelParams, eta: f64) -> Result<Self> {
        Ok(Self { eta, kappa: psi(params, eta)? })
    }

    pub fn from_kappa(params: &ModelParams, kappa: f64) -> Result<Self> {
        Ok(Self { eta: eta_from_kappa(params, kappa)?, kappa })
    }
}

/// ln|Γ| of each argument summed with signs: returns (Σ ±ln|Γ(a_i)|, sign).
fn gamma_ratio(num: &[f64], den: &[f64]) -> Result<(f64, Sign)> {
    let mut value = 0.0;
    let mut sign = Sign::Positive;
    for &a in num {
        let (l, s) = log_gamma(a)?;
        value += l;
        sign = sign.times(s);
    }
    for &a in den {
        let (l, s) = log_gamma(a)?;
        value -= l;
        sign = sign.times(s);
    }
    Ok((value, sign))
}

/// The coupling map Ψ_ζ(η).
///
/// For α < 2,
/// Ψ_ζ(η) = 2^α Γ((2ζ+1−η)/2) Γ((α+η)/2) / (Γ(η/2) Γ((2ζ+1−η−α)/2)),
/// and for α = 2 the polynomial (2ζ−1−η)η.
///
/// # Errors
/// Domain error outside η ∈ (−α, 2ζ+1) when α < 2.
pub fn psi(params: &ModelParams, eta: f64) -> Result<f64> {
    params.check_eta(eta)?;
    let zeta = params.zeta();
    let alpha = params.alpha();
    if params.is_local() {
        return Ok((2.0 * zeta - 1.0 - eta) * eta);
    }
    let other_zero = params.dimension() - alpha;
    if eta == 0.0 || eta == other_zero {
        return Ok(0.0);
    }
    let d = params.dimension();
    let (l, sign) = gamma_ratio(
        &[0.5 * (d - eta), 0.5 * (alpha + eta)],
        &[0.5 * eta, 0.5 * (d - eta - alpha)],
    )?;
    Ok(sign.as_f64() * (alpha * std::f64::consts::LN_2 + l).exp())
}

/// κ_c(ζ, α) = Ψ_ζ((2ζ+1−α)/2), the maximum of the coupling map.
pub fn kappa_critical(params: &ModelParams) -> f64 {
    psi(params, params.eta_critical()).expect("the midpoint is always admissible")
}

/// Inverse of Ψ_ζ on the branch (−M, (2ζ+1−α)/2].
///
/// α = 2 is solved in closed form; otherwise bisection refined by secant
/// steps on the bracket (−α(1−10⁻⁹), (2ζ+1−α)/2], where Ψ is increasing.
///
/// # Errors
/// [`HardyError::Supercritical`] for κ > κ_c, and a convergence error if κ is
/// so negative that it is not reached inside the bracket.
pub fn eta_from_kappa(params: &ModelParams, kappa: f64) -> Result<f64> {
    if !kappa.is_finite() {
        return Err(HardyError::domain(format!("kappa must be finite, got {kappa}")));
    }
    let critical = kappa_critical(params);
    let eta_c = params.eta_critical();
    if kappa > critical {
        if kappa - critical <= 1e-14 * critical.abs() {
            return Ok(eta_c);
        }
        return Err(HardyError::Supercritical { kappa, critical });
    }
    if kappa == 0.0 {
        return Ok(0.0);
    }
    if params.is_local() {
        // η² − (2ζ−1)η + κ = 0, smaller root. Written to avoid cancellation.
        let b = 2.0 * params.zeta() - 1.0;
        let disc = (b * b - 4.0 * kappa).max(0.0).sqrt();
        let big = 0.5 * (b + disc);
        return Ok(if big != 0.0 { kappa / big } else { 0.5 * (b - disc) });
    }

    let f = |eta: f64| psi(params, eta).map(|v| v - kappa);
    let mut lo = -params.alpha() * (1.0 - 1e-9);
    let mut hi = eta_c;
    let mut f_lo = f(lo)?;
    let mut f_hi = f(hi)?;
    if f_lo > 0.0 {
        return Err(HardyError::convergence(
            "eta_from_kappa",
            format!("kappa {kappa} is below psi at the bracket end [{lo}, {hi}] (psi-kappa = {f_lo})"),
        ));
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    let tol = 1e-15 * kappa.abs().max(1e-300);
    for _ in 0..300 {
        let width = hi - lo;
        // Secant candidate, accepted only if it lies well inside the bracket.
        let mut x = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        if !(x > lo + 0.05 * width && x < hi - 0.05 * width) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x)?;
        if fx == 0.0 || fx.abs() <= tol {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
            return Ok(if f_hi.abs() < f_lo.abs() { hi } else { lo });
        }
    }
    Err(HardyError::convergence(
        "eta_from_kappa",
        format!("bracket [{lo}, {hi}] with residuals [{f_lo}, {f_hi}]"),
    ))
}

/// The Hardy potential q(z) = Ψ_ζ(η) z^{−α}.
pub fn hardy_potential(params: &ModelParams, eta: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(HardyError::domain(format!("position must be positive, got {z}")));
    }
    Ok(psi(params, eta)? * z.powf(-params.alpha()))
}

/// Unchecked Gamma-ratio of C(β, γ, ζ): evaluates the formula wherever no
/// Gamma argument is a pole. Used for the continuation past β = (2ζ−γ)/2.
fn c_formula(beta: f64, gamma: f64, zeta: f64) -> Result<f64> {
    let (l, sign) = gamma_ratio(
        &[beta, 0.5 * (gamma + 1.0), 0.5 * (2.0 * zeta - 2.0 * beta - gamma)],
        &[0.5 * (2.0 * zeta - gamma), 0.5 * (2.0 * beta + gamma + 1.0)],
    )?;
    Ok(sign.as_f64() * (l - 2.0 * beta * std::f64::consts::LN_2).exp())
}

/// C(β, γ, ζ) = 2^{−2β} Γ(β) Γ((γ+1)/2) Γ((2ζ−2β−γ)/2) / (Γ((2ζ−γ)/2) Γ((2β+γ+1)/2)),
/// the value of ∫₀^∞ t^{β−1} ∫₀^∞ s^γ p₂(t,1,s) ds dt.
///
/// # Errors
/// Domain error unless γ > −1 and 0 < β < (2ζ−γ)/2.
pub fn c_constant(beta: f64, gamma: f64, zeta: f64) -> Result<f64> {
    if !(gamma > -1.0) {
        return Err(HardyError::domain(format!("gamma must exceed -1, got {gamma}")));
    }
    if !(beta > 0.0 && beta < 0.5 * (2.0 * zeta - gamma)) {
        return Err(HardyError::domain(format!(
            "beta must lie in (0, {}), got {beta}",
            0.5 * (2.0 * zeta - gamma)
        )));
    }
    c_formula(beta, gamma, zeta)
}

/// C^(α)(β, γ, ζ) = Γ(β)/Γ(αβ/2) · C(αβ/2, γ, ζ).
///
/// # Errors
/// Domain error unless γ > −1 and 0 < β < (2ζ−γ)/α.
pub fn c_alpha_constant(params: &ModelParams, beta: f64, gamma: f64) -> Result<f64> {
    let limit = (2.0 * params.zeta() - gamma) / params.alpha();
    if !(beta > 0.0 && beta < limit) {
        return Err(HardyError::domain(format!("beta must lie in (0, {limit}), got {beta}")));
    }
    c_alpha_continued(params, beta, gamma)
}

/// C^(α)(β, γ, ζ) on the extended range 0 < β < (2ζ−γ+2)/α, excluding the
/// pole β = (2ζ−γ)/α. Past the pole the value is negative.
///
/// # Errors
/// Domain error off the extended range; [`HardyError::Pole`] on the pole.
pub fn c_alpha_continued(params: &ModelParams, beta: f64, gamma: f64) -> Result<f64> {
    if !(gamma > -1.0) {
        return Err(HardyError::domain(format!("gamma must exceed -1, got {gamma}")));
    }
    let alpha = params.alpha();
    let zeta = params.zeta();
    let limit = (2.0 * zeta - gamma + 2.0) / alpha;
    if !(beta > 0.0 && beta < limit) {
        return Err(HardyError::domain(format!("beta must lie in (0, {limit}), got {beta}")));
    }
    let pole = (2.0 * zeta - gamma) / alpha;
    if beta == pole {
        return Err(HardyError::Pole(beta));
    }
    let b2 = 0.5 * alpha * beta;
    let (l, sign) = gamma_ratio(&[beta], &[b2])?;
    Ok(sign.as_f64() * l.exp() * c_formula(b2, gamma, zeta)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1.0, 1.0).is_ok());
        assert!(ModelParams::new(-0.5, 0.5).is_err());
        assert!(ModelParams::new(0.0, 1.0).is_err()); // α must be < 2ζ+1 = 1
        assert!(ModelParams::new(1.0, 2.1).is_err());
        assert!(ModelParams::new(1.0, 0.0).is_err());
        let p = ModelParams::new(1.0, 2.0).unwrap();
        assert!(p.m_bound().is_infinite());
        assert_eq!(ModelParams::new(1.0, 1.5).unwrap().m_bound(), 1.5);
    }

    #[test]
    fn psi_reference_values() {
        let p11 = ModelParams::new(1.0, 1.0).unwrap();
        assert!(rel(psi(&p11, 1.0).unwrap(), 2.0 / PI) < 1e-13);
        let p21 = ModelParams::new(2.0, 1.0).unwrap();
        assert!(rel(psi(&p21, 2.0).unwrap(), PI / 2.0) < 1e-13);
        assert_eq!(psi(&p11, 0.0).unwrap(), 0.0);
        assert_eq!(psi(&p11, 2.0).unwrap(), 0.0);
        let p = ModelParams::new(1.5, 2.0).unwrap();
        assert_eq!(psi(&p, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn psi_half_at_one_half() {
        // Ψ_1(1/2) with α = 1 equals 1/2.
        let p = ModelParams::new(1.0, 1.0).unwrap();
        assert!(rel(psi(&p, 0.5).unwrap(), 0.5) < 1e-13);
    }

    #[test]
    fn psi_domain() {
        let p = ModelParams::new(1.0, 1.0).unwrap();
        assert!(psi(&p, -1.0).is_err());
        assert!(psi(&p, 3.0).is_err());
        assert!(psi(&p, -0.999).unwrap() < -100.0);
        let p2 = ModelParams::new(1.0, 2.0).unwrap();
        assert_eq!(psi(&p2, -10.0).unwrap(), (2.0 - 1.0 + 10.0) * -10.0);
    }

    #[test]
    fn critical_values() {
        assert!(rel(kappa_critical(&ModelParams::new(1.0, 1.0).unwrap()), 2.0 / PI) < 1e-13);
        assert!(rel(kappa_critical(&ModelParams::new(2.0, 1.0).unwrap()), PI / 2.0) < 1e-13);
        assert_eq!(kappa_critical(&ModelParams::new(1.5, 2.0).unwrap()), 1.0);
    }

    #[test]
    fn inverse_examples() {
        let p = ModelParams::new(1.0, 1.0).unwrap();
        assert!((eta_from_kappa(&p, 2.0 / PI).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(eta_from_kappa(&p, 0.0).unwrap(), 0.0);
        let q = ModelParams::new(1.5, 2.0).unwrap();
        assert!((eta_from_kappa(&q, -3.0).unwrap() + 1.0).abs() < 1e-14);
        assert!(matches!(
            eta_from_kappa(&p, 0.7),
            Err(HardyError::Supercritical { .. })
        ));
    }

    #[test]
    fn hardy_potential_examples() {
        let p = ModelParams::new(1.0, 1.0).unwrap();
        assert!(rel(hardy_potential(&p, 1.0, 2.0).unwrap(), 1.0 / PI) < 1e-13);
        assert_eq!(hardy_potential(&p, 0.0, 5.0).unwrap(), 0.0);
        let q = ModelParams::new(1.5, 2.0).unwrap();
        assert_eq!(hardy_potential(&q, -1.0, 1.0).unwrap(), -3.0);
        assert!(hardy_potential(&p, 0.5, 0.0).is_err());
    }

    #[test]
    fn c_constant_hand_value() {
        assert!(rel(c_constant(0.5, 0.0, 1.0).unwrap(), PI.powf(1.5) / 2.0) < 1e-13);
        assert!(c_constant(1.0, 0.0, 1.0).is_err());
        assert!(c_constant(0.5, -1.0, 1.0).is_err());
    }

    #[test]
    fn c_alpha_reduces_at_alpha_two() {
        let p = ModelParams::new(2.0, 2.0).unwrap();
        let a = c_alpha_constant(&p, 1.0, 0.5).unwrap();
        let b = c_constant(1.0, 0.5, 2.0).unwrap();
        assert!(rel(a, b) < 1e-14);
    }

    #[test]
    fn c_alpha_inverts_psi() {
        // C^(α)(1, 2ζ−α−β, ζ) = 1/Ψ_ζ(β)
        for &(zeta, alpha, beta) in &[(1.0, 1.0, 0.5), (1.0, 1.0, 0.2), (2.0, 0.7, 1.3), (0.4, 1.5, 0.1)] {
            let p = ModelParams::new(zeta, alpha).unwrap();
            let c = c_alpha_constant(&p, 1.0, 2.0 * zeta - alpha - beta).unwrap();
            assert!(rel(c, 1.0 / psi(&p, beta).unwrap()) < 1e-12, "{zeta} {alpha} {beta}");
        }
    }

    #[test]
    fn continuation_sign_and_pole() {
        let p = ModelParams::new(1.0, 1.0).unwrap();
        // pole at β = (2ζ−γ)/α = 2 for γ = 0
        assert!(c_alpha_continued(&p, 1.9, 0.0).unwrap() > 0.0);
        assert!(c_alpha_continued(&p, 2.1, 0.0).unwrap() < 0.0);
        assert!(matches!(c_alpha_continued(&p, 2.0, 0.0), Err(HardyError::Pole(_))));
        assert!(c_alpha_constant(&p, 2.1, 0.0).is_err());
    }
}
