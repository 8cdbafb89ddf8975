//! The reflected Bessel heat kernel (the α = 2 object), its value at the
//! origin, and the exact Hardy-perturbed kernel available when α = 2.
//!
//! The reference measure throughout is r^{2ζ} dr on (0, ∞).

use crate::couplings::ModelParams;
use crate::error::{HardyError, Result};
use crate::special_functions::{log_gamma, ScaledBesselI};

/// Bessel heat kernel of index ζ, with cached Bessel order ν = ζ − 1/2.
///
/// p(t, r, s) = (rs)^{1/2−ζ}/(2t) · exp(−(r²+s²)/(4t)) · I_{ζ−1/2}(rs/(2t)),
/// evaluated as exp(−(r−s)²/(4t)) times the exponentially scaled Bessel
/// function so that nothing overflows.
#[derive(Debug, Clone, Copy)]
pub struct BesselKernel {
    zeta: f64,
    bessel: ScaledBesselI,
    ln_origin_const: f64,
}

impl BesselKernel {
    /// # Errors
    /// Domain error unless ζ > −1/2.
    pub fn new(zeta: f64) -> Result<Self> {
        if !(zeta > -0.5) || !zeta.is_finite() {
            return Err(HardyError::domain(format!("zeta must exceed -1/2, got {zeta}")));
        }
        let bessel = ScaledBesselI::new(zeta - 0.5)?;
        let ln_origin_const = -2.0 * zeta * std::f64::consts::LN_2 - log_gamma(zeta + 0.5)?.0;
        Ok(Self { zeta, bessel, ln_origin_const })
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Natural log of p(t, r, s); r or s may be zero.
    #[inline]
    pub fn ln_density(&self, t: f64, r: f64, s: f64) -> f64 {
        if r == 0.0 || s == 0.0 {
            return self.ln_origin(t, r.max(s));
        }
        let x = r * s / (2.0 * t);
        let d = r - s;
        (0.5 - self.zeta) * (r * s).ln() - (2.0 * t).ln() - d * d / (4.0 * t) + self.bessel.ln_eval(x)
    }

    /// p(t, r, s) without argument checks.
    #[inline]
    pub fn density(&self, t: f64, r: f64, s: f64) -> f64 {
        self.ln_density(t, r, s).exp()
    }

    /// ln p(t, r, 0) = ln[2^{−2ζ}/Γ(ζ+1/2) · t^{−(2ζ+1)/2} · e^{−r²/(4t)}].
    #[inline]
    pub fn ln_origin(&self, t: f64, r: f64) -> f64 {
        self.ln_origin_const - (self.zeta + 0.5) * t.ln() - r * r / (4.0 * t)
    }
}

fn check_point(t: f64, r: f64, s: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(HardyError::domain(format!("time must be positive, got {t}")));
    }
    if !(r > 0.0 && s > 0.0 && r.is_finite() && s.is_finite()) {
        return Err(HardyError::domain(format!("positions must be positive, got r={r}, s={s}")));
    }
    Ok(())
}

/// The Bessel heat kernel p_ζ^(2)(t, r, s); the α of `params` is ignored.
pub fn p2(params: &ModelParams, t: f64, r: f64, s: f64) -> Result<f64> {
    check_point(t, r, s)?;
    Ok(BesselKernel::new(params.zeta())?.density(t, r, s))
}

/// p_ζ^(2)(t, r, 0) = 2^{−2ζ}/Γ((2ζ+1)/2) · t^{−(2ζ+1)/2} · e^{−r²/(4t)}.
pub fn p2_origin(params: &ModelParams, t: f64, r: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(HardyError::domain(format!("time must be positive, got {t}")));
    }
    if !(r >= 0.0) {
        return Err(HardyError::domain(format!("position must be nonnegative, got {r}")));
    }
    Ok(BesselKernel::new(params.zeta())?.ln_origin(t, r).exp())
}

/// The exact heat kernel of the α = 2 operator with Hardy potential
/// Ψ_ζ(η)/r²: (rs)^{−η} p_{ζ−η}^(2)(t, r, s).
///
/// # Errors
/// Domain error if η exceeds (2ζ−1)/2 or ζ − η ≤ −1/2.
pub fn p2_hardy(params: &ModelParams, eta: f64, t: f64, r: f64, s: f64) -> Result<f64> {
    check_point(t, r, s)?;
    Ok(HardyBesselKernel::new(params.zeta(), eta)?.density(t, r, s))
}

/// Cached form of [`p2_hardy`].
#[derive(Debug, Clone, Copy)]
pub struct HardyBesselKernel {
    eta: f64,
    shifted: BesselKernel,
}

impl HardyBesselKernel {
    pub fn new(zeta: f64, eta: f64) -> Result<Self> {
        if !eta.is_finite() || eta > 0.5 * (2.0 * zeta - 1.0) * (1.0 + 1e-14) + 1e-300 {
            return Err(HardyError::domain(format!(
                "eta must not exceed (2*zeta-1)/2 = {}, got {eta}",
                0.5 * (2.0 * zeta - 1.0)
            )));
        }
        if !(zeta - eta > -0.5) {
            return Err(HardyError::domain(format!("shifted index zeta-eta must exceed -1/2, got {}", zeta - eta)));
        }
        Ok(Self { eta, shifted: BesselKernel::new(zeta - eta)? })
    }

    pub fn ln_density(&self, t: f64, r: f64, s: f64) -> f64 {
        -self.eta * (r * s).ln() + self.shifted.ln_density(t, r, s)
    }

    pub fn density(&self, t: f64, r: f64, s: f64) -> f64 {
        self.ln_density(t, r, s).exp()
    }
}
