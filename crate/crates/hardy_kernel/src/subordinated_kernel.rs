//! The subordinated Bessel heat kernel p_ζ^(α), its sharp comparator, and
//! the space–time integral functionals h_{β,γ} and h⁺_{β,γ}.

use std::f64::consts::PI;

use crate::bessel_kernel::BesselKernel;
use crate::couplings::{c_alpha_constant, c_alpha_continued, psi, ModelParams};
use crate::error::{HardyError, Result};
use crate::quadrature::{integrate_pieces, QuadratureSpec};
use crate::stable_densities::Subordinator;

/// Relative tolerance of the subordination integral.
const SUBORDINATION_TOL: f64 = 1e-11;

#[derive(Debug, Clone)]
enum Form {
    /// α = 2: the Bessel kernel itself.
    Local,
    /// ζ = 1, α = 1: radial part of the three-dimensional Cauchy kernel,
    /// p(t,r,s) = 4t / (π (t² + (r−s)²)(t² + (r+s)²)).
    Cauchy3,
    /// Everything else: ∫ σ_t(τ) p₂(τ, r, s) dτ.
    Subordinated(Subordinator),
}

/// Evaluator of p_ζ^(α)(t, r, s) with its subordinator table cached.
#[derive(Debug, Clone)]
pub struct SubordinatedKernel {
    params: ModelParams,
    bessel: BesselKernel,
    form: Form,
}

impl SubordinatedKernel {
    /// Uses closed forms where they exist (α = 2; ζ = 1 with α = 1).
    pub fn new(params: &ModelParams) -> Result<Self> {
        let form = if params.is_local() {
            Form::Local
        } else if params.zeta() == 1.0 && params.alpha() == 1.0 {
            Form::Cauchy3
        } else {
            Form::Subordinated(Subordinator::new(params.alpha())?)
        };
        Ok(Self { params: *params, bessel: BesselKernel::new(params.zeta())?, form })
    }

    /// Always evaluates the subordination integral, even where a closed form
    /// exists. Used to cross-check the closed forms.
    ///
    /// # Errors
    /// Domain error for α = 2, where there is nothing to subordinate.
    pub fn subordinated(params: &ModelParams) -> Result<Self> {
        if params.is_local() {
            return Err(HardyError::domain("subordination needs alpha < 2"));
        }
        Ok(Self {
            params: *params,
            bessel: BesselKernel::new(params.zeta())?,
            form: Form::Subordinated(Subordinator::new(params.alpha())?),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// p(t, r, s) for t > 0 and r, s ≥ 0.
    ///
    /// # Errors
    /// Domain errors for invalid points; quadrature failures of the
    /// subordination integral.
    pub fn density(&self, t: f64, r: f64, s: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(HardyError::domain(format!("time must be positive, got {t}")));
        }
        if !(r >= 0.0 && s >= 0.0 && r.is_finite() && s.is_finite()) {
            return Err(HardyError::domain(format!("positions must be nonnegative, got r={r}, s={s}")));
        }
        match &self.form {
            Form::Local => Ok(self.bessel.density(t, r, s)),
            Form::Cauchy3 => {
                let (a, b) = (r - s, r + s);
                Ok(4.0 * t / (PI * (t * t + a * a) * (t * t + b * b)))
            }
            Form::Subordinated(sub) => {
                let alpha = self.params.alpha();
                let c = t.powf(-1.0 / alpha);
                Ok(c.powf(self.params.dimension()) * self.subordinate(sub, r * c, s * c)?)
            }
        }
    }

    /// ∫₀^∞ σ₁(τ) p₂(τ, r, s) dτ in the variable u = ln τ, cut at the natural
    /// scales of both factors, plus the tail beyond T evaluated termwise from
    /// the subordinator's power series with p₂(τ, r, s) ≈ p₂(τ, 0, 0).
    fn subordinate(&self, sub: &Subordinator, r: f64, s: f64) -> Result<f64> {
        let zeta = self.params.zeta();
        let reach = 1f64.max(r * r).max(s * s);
        let big_t = sub.series_threshold().max(1e6 * reach);
        let u_lo = sub.support_floor().ln();
        let u_hi = big_t.ln();
        let mut cuts = vec![u_lo, u_hi, 0.0];
        for scale in [r * s, (r - s) * (r - s), r * r + s * s] {
            if scale > 0.0 {
                cuts.extend([scale.ln() - 2.0, scale.ln(), scale.ln() + 2.0]);
            }
        }
        let mut u = u_lo;
        while u < u_hi {
            cuts.push(u);
            u += 4.0;
        }
        cuts.retain(|c| *c >= u_lo && *c <= u_hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let bessel = &self.bessel;
        let f = |u: f64| {
            let tau = u.exp();
            (sub.ln_density_unit(tau) + bessel.ln_density(tau, r, s) + u).exp()
        };
        let spec = QuadratureSpec::identity().with_rel_tol(SUBORDINATION_TOL).with_abs_tol(1e-300);
        let body = integrate_pieces(f, &cuts, &spec)?.value;
        let origin = bessel.ln_origin(1.0, 0.0).exp();
        Ok(body + origin * sub.tail_moment(big_t, zeta + 0.5))
    }
}

/// p_ζ^(α)(t, r, s); α = 2 delegates to the Bessel kernel.
///
/// Builds a fresh evaluator; use [`SubordinatedKernel`] for repeated calls.
pub fn p_alpha(params: &ModelParams, t: f64, r: f64, s: f64) -> Result<f64> {
    if !(r > 0.0 && s > 0.0) {
        return Err(HardyError::domain(format!("positions must be positive, got r={r}, s={s}")));
    }
    SubordinatedKernel::new(params)?.density(t, r, s)
}

/// The sharp comparator
/// Φ(t,r,s) = t / (|r−s|^{1+α}(r+s)^{2ζ} + t^{(1+α)/α}(t^{1/α}+r+s)^{2ζ}).
pub fn sharp_comparator(params: &ModelParams, t: f64, r: f64, s: f64) -> Result<f64> {
    if !(t > 0.0 && r > 0.0 && s > 0.0) {
        return Err(HardyError::domain(format!("need t, r, s > 0, got ({t}, {r}, {s})")));
    }
    let (a, z) = (params.alpha(), params.zeta());
    let tr = t.powf(1.0 / a);
    let far = (r - s).abs().powf(1.0 + a) * (r + s).powf(2.0 * z);
    let near = t.powf((1.0 + a) / a) * (tr + r + s).powf(2.0 * z);
    Ok(t / (far + near))
}

/// Weight (1 ∧ r/t^{1/α})^{−η} (1 ∧ s/t^{1/α})^{−η} of the sharp bounds.
pub fn comparator_weight(params: &ModelParams, eta: f64, t: f64, r: f64, s: f64) -> f64 {
    let tr = t.powf(1.0 / params.alpha());
    (r / tr).min(1.0).powf(-eta) * (s / tr).min(1.0).powf(-eta)
}

/// (1 ∧ r/t^{1/α})^{−η} (1 ∧ s/t^{1/α})^{−η} p_ζ^(α)(t, r, s).
pub fn comparator_phi(params: &ModelParams, eta: f64, t: f64, r: f64, s: f64) -> Result<f64> {
    params.check_eta(eta)?;
    Ok(comparator_weight(params, eta, t, r, s) * p_alpha(params, t, r, s)?)
}

/// h_{β,γ}(r) = C^(α)(β,γ,ζ) r^{αβ+γ−2ζ}.
///
/// # Errors
/// Domain error unless γ > −1 and 0 < β < (2ζ−γ)/α.
pub fn h_beta_gamma(params: &ModelParams, beta: f64, gamma: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(HardyError::domain(format!("position must be positive, got {r}")));
    }
    let c = c_alpha_constant(params, beta, gamma)?;
    Ok(c * r.powf(params.alpha() * beta + gamma - 2.0 * params.zeta()))
}

/// h⁺_{β,γ}(s) = C^(α)(β,γ,ζ) s^{αβ+γ−2ζ} on 0 < β < (2ζ−γ+2)/α.
///
/// Past the pole β = (2ζ−γ)/α the constant is negative. It then equals the
/// compensated integral ∫dt t^{β−1} ∫dr r^γ (p(t,r,s) − p(t,r,0)); see
/// [`h_plus_oracle`].
///
/// # Errors
/// Domain errors off the range; [`HardyError::Pole`] at β = (2ζ−γ)/α.
pub fn h_plus_beta_gamma(params: &ModelParams, beta: f64, gamma: f64, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(HardyError::domain(format!("position must be positive, got {s}")));
    }
    let c = c_alpha_continued(params, beta, gamma)?;
    Ok(c * s.powf(params.alpha() * beta + gamma - 2.0 * params.zeta()))
}

/// The ratio (β−1) h_{β−1,γ}(s) / h⁺_{β,γ}(s), which equals Ψ_ζ(η)/s^α
/// for η = 2ζ − γ − αβ.
pub fn fitzsimmons_ratio(params: &ModelParams, beta: f64, gamma: f64, s: f64) -> Result<f64> {
    let num = (beta - 1.0) * h_beta_gamma(params, beta - 1.0, gamma, s)?;
    Ok(num / h_plus_beta_gamma(params, beta, gamma, s)?)
}

/// Ψ_ζ(η)/s^α, the potential the Fitzsimmons ratio should reproduce.
pub fn fitzsimmons_target(params: &ModelParams, beta: f64, gamma: f64, s: f64) -> Result<f64> {
    let eta = 2.0 * params.zeta() - gamma - params.alpha() * beta;
    Ok(psi(params, eta)? * s.powf(-params.alpha()))
}

/// Cut points in ln x covering [lo, hi], refined geometrically around
/// `centre` down to the relative width `width`.
fn log_cuts(lo: f64, hi: f64, centre: f64, width: f64) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut cuts = vec![a, b];
    let mut u = a;
    while u < b {
        cuts.push(u);
        u += 2.0;
    }
    let c = centre.ln();
    cuts.push(c);
    let mut d = width.min(1.0);
    while d < 4.0 {
        cuts.extend([c - d, c + d]);
        d *= 2.0;
    }
    cuts.retain(|x| *x >= a && *x <= b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

/// ∫ x^{k+1} g(x) dx/x over (0, ∞) in u = ln x, truncated where the
/// integrand's power-law decay `p_lo` (at 0) and `p_hi` (at ∞) brings it
/// below 1e−13 of its scale, with nodes refined around `centre`.
fn radial_moment<G: FnMut(f64) -> Result<f64>>(
    mut g: G,
    k: f64,
    centre: f64,
    scale: f64,
    width: f64,
    decay_hi: Option<f64>,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let lo = scale * 10f64.powf(-13.0 / (k + 1.0));
    let hi = match decay_hi {
        Some(p) => scale * 10f64.powf(13.0 / p),
        None => centre + 12.0 * scale,
    };
    let mut err = None;
    let v = integrate_pieces(
        |u: f64| {
            let x = u.exp();
            match g(x) {
                Ok(v) => x.powf(k + 1.0) * v,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        },
        &log_cuts(lo, hi, centre, width),
        spec,
    )?;
    err.map_or(Ok(v.value), Err)
}

/// ∫₀^∞ dt t^{β−1} F(t) where F is known to behave like t^{−β−e_hi} for
/// t ≥ T: integrates up to T and adds the exact tail F(T)T^β/e_hi.
fn time_moment<F: FnMut(f64) -> Result<f64>>(
    mut inner: F,
    beta: f64,
    lo: f64,
    big_t: f64,
    centre: f64,
    e_hi: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let mut err = None;
    let body = integrate_pieces(
        |u: f64| {
            let t = u.exp();
            match inner(t) {
                Ok(v) => t.powf(beta) * v,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        },
        &log_cuts(lo, big_t, centre, 1.0),
        spec,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(body.value + inner(big_t)? * big_t.powf(beta) / e_hi)
}

/// Oracle for h_{β,γ}(r): the double integral
/// ∫₀^∞ dt t^{β−1} ∫₀^∞ ds s^γ p(t, r, s) by nested quadrature in log
/// variables.
///
/// For t ≪ r^α the inner integral tends to r^{γ−2ζ} and the layer below
/// (10⁻⁶r)^α is added in closed form; for t ≫ r^α the inner integral equals t^{(γ−2ζ)/α}·J(r t^{−1/α}) with
/// J(x) = J(0) + O(x²), so the time integral beyond T = (10³ r)^α is added in
/// closed form.
pub fn h_beta_gamma_oracle(params: &ModelParams, beta: f64, gamma: f64, r: f64, rel_tol: f64) -> Result<f64> {
    c_alpha_constant(params, beta, gamma)?;
    let kernel = SubordinatedKernel::new(params)?;
    let (a, z) = (params.alpha(), params.zeta());
    let spec = QuadratureSpec::identity().with_rel_tol(rel_tol).with_abs_tol(1e-300);
    let decay = (!params.is_local()).then_some(2.0 * z + a - gamma);
    let inner = |t: f64| {
        let tr = t.powf(1.0 / a);
        radial_moment(|s| kernel.density(t, r, s), gamma, r, r.max(tr), tr / r, decay, &spec)
    };
    let ra = r.powf(a);
    // Below lo the kernel is a point mass at r for the measure s^{2ζ}ds, so
    // the inner integral is r^{γ−2ζ} up to O(t/r^α).
    let lo = (1e-6 * r).powf(a);
    let head = r.powf(gamma - 2.0 * z) * lo.powf(beta) / beta;
    let big_t = (1e3 * r).powf(a);
    Ok(head + time_moment(inner, beta, lo, big_t, ra, (2.0 * z - gamma) / a - beta, &spec)?)
}

/// Oracle for h⁺_{β,γ}(s) in the extended band: the compensated double
/// integral ∫₀^∞ dt t^{β−1} ∫₀^∞ dr r^γ (p(t, r, s) − p(t, r, 0)).
///
/// For large t the difference is of relative size s²/t^{2/α} and would be
/// lost to cancellation, so the time integral beyond T = (10^{2.5} s)^α uses
/// the exact scaling t^{(γ−2ζ−2)/α} of the leading term.
pub fn h_plus_oracle(params: &ModelParams, beta: f64, gamma: f64, s: f64, rel_tol: f64) -> Result<f64> {
    c_alpha_continued(params, beta, gamma)?;
    let kernel = SubordinatedKernel::new(params)?;
    let (a, z) = (params.alpha(), params.zeta());
    let e_lo = beta - (2.0 * z - gamma) / a;
    let e_hi = (2.0 * z - gamma + 2.0) / a - beta;
    if !(e_lo > 0.0 && e_hi > 0.0) {
        return Err(HardyError::domain(format!("beta {beta} is outside the compensated band")));
    }
    let spec = QuadratureSpec::identity().with_rel_tol(rel_tol).with_abs_tol(1e-300);
    let decay = (!params.is_local()).then_some(2.0 * z + a - gamma);
    let inner = |t: f64| {
        let tr = t.powf(1.0 / a);
        radial_moment(
            |r| Ok(kernel.density(t, r, s)? - kernel.density(t, r, 0.0)?),
            gamma,
            s,
            s.max(tr),
            tr / s,
            decay,
            &spec,
        )
    };
    let sa = s.powf(a);
    let lo = sa * 10f64.powf(-13.0 / e_lo);
    let big_t = (10f64.powf(2.5) * s).powf(a);
    time_moment(inner, beta, lo, big_t, sa, e_hi, &spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn cauchy_closed_form_matches_subordination() {
        let p = ModelParams::new(1.0, 1.0).unwrap();
        let closed = SubordinatedKernel::new(&p).unwrap();
        let sub = SubordinatedKernel::subordinated(&p).unwrap();
        for &(t, r, s) in &[(1.0, 1.0, 1.0), (1.0, 0.1, 2.0), (0.3, 5.0, 4.0), (2.0, 0.01, 0.02), (1.0, 30.0, 0.5)] {
            let a = closed.density(t, r, s).unwrap();
            let b = sub.density(t, r, s).unwrap();
            assert!(rel(a, b) < 1e-8, "({t},{r},{s}): {a} vs {b}");
        }
    }

    #[test]
    fn normalization_and_symmetry() {
        let spec = QuadratureSpec::identity().with_rel_tol(1e-10);
        for &(zeta, alpha, r) in &[(1.0, 1.0, 0.5), (0.2, 1.3, 2.0), (2.0, 0.7, 1.0)] {
            let p = ModelParams::new(zeta, alpha).unwrap();
            let k = SubordinatedKernel::subordinated(&p).unwrap();
            let m = integrate(
                |u: f64| {
                    let s = u.exp();
                    s.powf(2.0 * zeta + 1.0) * k.density(1.0, r, s).unwrap()
                },
                -40.0,
                40.0,
                &spec,
            )
            .unwrap()
            .value;
            assert!((m - 1.0).abs() < 1e-6, "zeta={zeta} alpha={alpha}: mass {m}");
            assert_eq!(k.density(1.0, r, 0.7).unwrap(), k.density(1.0, 0.7, r).unwrap());
        }
    }

    #[test]
    fn scaling() {
        let p = ModelParams::new(0.7, 1.4).unwrap();
        let k = SubordinatedKernel::new(&p).unwrap();
        let (t, r, s) = (3.0f64, 0.8, 2.5);
        let c = t.powf(-1.0 / 1.4);
        let lhs = k.density(t, r, s).unwrap();
        let rhs = c.powf(p.dimension()) * k.density(1.0, r * c, s * c).unwrap();
        assert!(rel(lhs, rhs) < 1e-12);
    }

    #[test]
    fn comparator_clamps() {
        let p = ModelParams::new(1.0, 1.0).unwrap();
        let base = p_alpha(&p, 1.0, 0.1, 2.0).unwrap();
        assert!(rel(comparator_phi(&p, 1.0, 1.0, 0.1, 2.0).unwrap(), 10.0 * base) < 1e-14);
        assert_eq!(comparator_phi(&p, 0.0, 1.0, 0.1, 2.0).unwrap(), base);
        assert_eq!(comparator_phi(&p, 0.5, 1.0, 1.5, 2.0).unwrap(), p_alpha(&p, 1.0, 1.5, 2.0).unwrap());
    }

    #[test]
    fn h_homogeneity_and_kappa_inverse() {
        let p = ModelParams::new(1.0, 1.0).unwrap();
        let h1 = h_beta_gamma(&p, 1.2, 0.0, 1.0).unwrap();
        let h3 = h_beta_gamma(&p, 1.2, 0.0, 3.0).unwrap();
        assert!(rel(h3 / h1, 3f64.powf(1.2 - 2.0)) < 1e-14);
        // β = 1, γ = 2ζ − α − β̃ gives r^{−β̃}/Ψ(β̃).
        let bt = 0.4;
        let h = h_beta_gamma(&p, 1.0, 2.0 - 1.0 - bt, 2.0).unwrap();
        assert!(rel(h, 2f64.powf(-bt) / psi(&p, bt).unwrap()) < 1e-12);
    }

    #[test]
    fn h_oracle_cauchy() {
        let p = ModelParams::new(1.0, 1.0).unwrap();
        let closed = h_beta_gamma(&p, 1.2, 0.0, 1.0).unwrap();
        let oracle = h_beta_gamma_oracle(&p, 1.2, 0.0, 1.0, 1e-8).unwrap();
        assert!(rel(oracle, closed) < 1e-5, "{oracle} vs {closed}");
    }

    #[test]
    fn fitzsimmons_identity() {
        let p = ModelParams::new(1.0, 1.0).unwrap();
        // β past the pole (2ζ−γ)/α = 2 gives η ∈ (−α, 0).
        for &(beta, gamma) in &[(2.5, 0.0), (2.2, 0.3)] {
            let a = fitzsimmons_ratio(&p, beta, gamma, 1.7).unwrap();
            let b = fitzsimmons_target(&p, beta, gamma, 1.7).unwrap();
            assert!(rel(a, b) < 1e-12, "beta={beta}: {a} vs {b}");
        }
        assert!(matches!(h_plus_beta_gamma(&p, 2.0, 0.0, 1.0), Err(HardyError::Pole(_))));
    }

    #[test]
    fn h_plus_oracle_local() {
        let p = ModelParams::new(1.0, 2.0).unwrap();
        let closed = h_plus_beta_gamma(&p, 1.5, 0.0, 1.0).unwrap();
        let oracle = h_plus_oracle(&p, 1.5, 0.0, 1.0, 1e-8).unwrap();
        assert!(closed < 0.0);
        assert!(rel(oracle, closed) < 1e-3, "{oracle} vs {closed}");
    }
}
