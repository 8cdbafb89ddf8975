//! Log-Gamma with sign tracking and the exponentially scaled modified Bessel
//! function of the first kind.
//!
//! These are the only special functions the kernel formulas need. Both are
//! evaluated so that large arguments never overflow: the Gamma function is
//! returned as `(ln|Γ(x)|, sign Γ(x))` and the Bessel function as
//! `e^{-z} I_ν(z)`.

use std::f64::consts::PI;

use crate::error::{HardyError, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Sign of a Gamma value; Γ has no zeros so the sign is never zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }

    /// Product of two signs.
    pub fn times(self, other: Sign) -> Sign {
        if self == other {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }
}

/// Lanczos evaluation of ln Γ(x) for x ≥ 0.5.
fn ln_gamma_lanczos(x: f64) -> f64 {
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Returns `(ln|Γ(x)|, sign Γ(x))`.
///
/// Arguments below one half go through the reflection formula
/// Γ(x)Γ(1−x) = π / sin(πx), which is where negative signs arise.
///
/// # Errors
/// [`HardyError::Pole`] at nonpositive integers and
/// [`HardyError::Domain`] for NaN input.
pub fn log_gamma(x: f64) -> Result<(f64, Sign)> {
    if x.is_nan() {
        return Err(HardyError::domain("log_gamma of NaN"));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(HardyError::Pole(x));
    }
    if x >= 0.5 {
        return Ok((ln_gamma_lanczos(x), Sign::Positive));
    }
    // sin(πx) via the reduced argument keeps precision for large |x|.
    let frac = x - x.floor();
    let s = (PI * frac).sin() * if (x.floor() as i64) % 2 == 0 { 1.0 } else { -1.0 };
    let sign = if s > 0.0 { Sign::Positive } else { Sign::Negative };
    let value = PI.ln() - s.abs().ln() - ln_gamma_lanczos(1.0 - x);
    Ok((value, sign))
}

/// Γ(x) as a plain float (overflows to ±∞ for large x).
pub fn gamma(x: f64) -> Result<f64> {
    let (lg, sign) = log_gamma(x)?;
    Ok(sign.as_f64() * lg.exp())
}

/// The scaled modified Bessel function `e^{-z} I_ν(z)` at fixed order.
///
/// Caches `ln Γ(ν+1)` so that kernels evaluating the same order millions of
/// times do not recompute it.
#[derive(Debug, Clone, Copy)]
pub struct ScaledBesselI {
    nu: f64,
    ln_gamma_nu1: f64,
    switch: f64,
    four_nu2: f64,
}

impl ScaledBesselI {
    /// # Errors
    /// Domain error unless ν > −1.
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > -1.0) || !nu.is_finite() {
            return Err(HardyError::domain(format!(
                "Bessel order must exceed -1, got {nu}"
            )));
        }
        let (ln_gamma_nu1, _) = log_gamma(nu + 1.0)?;
        Ok(Self {
            nu,
            ln_gamma_nu1,
            switch: 30.0 + nu * nu,
            four_nu2: 4.0 * nu * nu,
        })
    }

    pub fn order(&self) -> f64 {
        self.nu
    }

    /// Argument at which evaluation switches from the ascending series to
    /// the large-argument expansion.
    pub fn switch_point(&self) -> f64 {
        self.switch
    }

    /// `e^{-z} I_ν(z)` for z ≥ 0; z < 0 is not checked here (see
    /// [`besseli_scaled`] for the checked entry point).
    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        if z == 0.0 {
            return if self.nu == 0.0 {
                1.0
            } else if self.nu > 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
        }
        if z < self.switch {
            self.series(z)
        } else {
            self.asymptotic(z)
        }
    }

    /// `ln(e^{-z} I_ν(z))`, accurate even where the value underflows.
    #[inline]
    pub fn ln_eval(&self, z: f64) -> f64 {
        if z == 0.0 {
            return self.eval(0.0).ln();
        }
        if z < self.switch {
            self.series_log(z)
        } else {
            self.asymptotic(z).ln()
        }
    }

    /// Ascending series Σ (z/2)^{2k+ν} / (k! Γ(k+ν+1)), all terms positive
    /// for ν > −1, scaled by e^{-z}.
    pub fn series(&self, z: f64) -> f64 {
        let half = 0.5 * z;
        let mut term = (self.nu * half.ln() - self.ln_gamma_nu1 - z).exp();
        if term == 0.0 {
            // Leading term underflowed; fall back on a log-domain sum.
            return self.series_log(z).exp();
        }
        let q = half * half;
        let mut sum = term;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= q / (k * (k + self.nu));
            sum += term;
            if term <= 1e-17 * sum && k > half {
                break;
            }
        }
        sum
    }

    fn series_log(&self, z: f64) -> f64 {
        let half = 0.5 * z;
        let lead = self.nu * half.ln() - self.ln_gamma_nu1 - z;
        let q = half * half;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= q / (k * (k + self.nu));
            sum += term;
            if term <= 1e-17 * sum && k > half {
                break;
            }
        }
        lead + sum.ln()
    }

    /// Hankel large-argument expansion
    /// e^{-z} I_ν(z) ≈ (2πz)^{-1/2} Σ (−1)^k a_k(ν) / z^k,
    /// truncated at the smallest term.
    pub fn asymptotic(&self, z: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut last = f64::INFINITY;
        for k in 1..200 {
            let odd = (2 * k - 1) as f64;
            term *= -(self.four_nu2 - odd * odd) / (k as f64 * 8.0 * z);
            if term.abs() >= last {
                break;
            }
            sum += term;
            last = term.abs();
            if last <= 1e-17 * sum.abs() {
                break;
            }
        }
        sum / (2.0 * PI * z).sqrt()
    }
}

/// `e^{-z} I_ν(z)` for ν > −1 and z ≥ 0.
///
/// # Errors
/// Domain error for z < 0 or ν ≤ −1.
pub fn besseli_scaled(nu: f64, z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(HardyError::domain(format!(
            "Bessel argument must be nonnegative, got {z}"
        )));
    }
    Ok(ScaledBesselI::new(nu)?.eval(z))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn log_gamma_known_values() {
        let (v, s) = log_gamma(0.5).unwrap();
        assert!(rel(v, PI.sqrt().ln()) < 1e-14);
        assert_eq!(s, Sign::Positive);

        let (v, s) = log_gamma(1.0).unwrap();
        assert!(v.abs() < 1e-15);
        assert_eq!(s, Sign::Positive);

        let (v, s) = log_gamma(-0.5).unwrap();
        assert!(rel(v, (2.0 * PI.sqrt()).ln()) < 1e-14);
        assert_eq!(s, Sign::Negative);

        let (v, _) = log_gamma(11.0).unwrap();
        assert!(rel(v, 3_628_800f64.ln()) < 1e-14);
    }

    #[test]
    fn log_gamma_sign_pattern_on_negative_axis() {
        // Γ alternates sign between consecutive negative integers.
        assert_eq!(log_gamma(-0.3).unwrap().1, Sign::Negative);
        assert_eq!(log_gamma(-1.3).unwrap().1, Sign::Positive);
        assert_eq!(log_gamma(-2.3).unwrap().1, Sign::Negative);
        assert_eq!(log_gamma(0.3).unwrap().1, Sign::Positive);
    }

    #[test]
    fn log_gamma_poles() {
        assert_eq!(log_gamma(0.0), Err(HardyError::Pole(0.0)));
        assert_eq!(log_gamma(-3.0), Err(HardyError::Pole(-3.0)));
        assert!(log_gamma(f64::NAN).is_err());
    }

    #[test]
    fn bessel_half_integer_closed_form() {
        // I_{1/2}(z) = sqrt(2/(πz)) sinh z
        for &z in &[0.01, 0.5, 1.0, 7.0, 29.0, 31.0, 80.0, 500.0] {
            let exact = (2.0 / (PI * z)).sqrt() * 0.5 * (1.0 - (-2.0 * z).exp());
            assert!(rel(besseli_scaled(0.5, z).unwrap(), exact) < 1e-13, "z={z}");
        }
        let v = besseli_scaled(0.5, 1.0).unwrap();
        // e^{-1} sqrt(2/π) sinh(1)
        assert!((v - 0.344_951_313_888_244_7).abs() < 1e-15);
        // I_{-1/2}(z) = sqrt(2/(πz)) cosh z
        for &z in &[0.01, 1.0, 40.0] {
            let exact = (2.0 / (PI * z)).sqrt() * 0.5 * (1.0 + (-2.0 * z).exp());
            assert!(rel(besseli_scaled(-0.5, z).unwrap(), exact) < 1e-13);
        }
    }

    #[test]
    fn bessel_at_origin() {
        assert_eq!(besseli_scaled(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(besseli_scaled(2.0, 0.0).unwrap(), 0.0);
        assert!(besseli_scaled(0.0, -1.0).is_err());
        assert!(besseli_scaled(-1.0, 1.0).is_err());
    }

    #[test]
    fn bessel_tabulated_i0() {
        // I_0(0.5) = 1.0634833707413236
        let v = besseli_scaled(0.0, 0.5).unwrap() * 0.5f64.exp();
        assert!(rel(v, 1.063_483_370_741_323_6) < 1e-14);
        // I_1(10) = 2670.988303701255
        let v = besseli_scaled(1.0, 10.0).unwrap() * 10f64.exp();
        assert!(rel(v, 2_670.988_303_701_255) < 1e-13);
    }

    #[test]
    fn regimes_agree_at_switch() {
        for &nu in &[-0.7, 0.0, 0.3, 1.5, 2.5] {
            let b = ScaledBesselI::new(nu).unwrap();
            let z = b.switch_point();
            let a = b.series(z);
            let c = b.asymptotic(z);
            assert!(rel(a, c) < 1e-12, "nu={nu}: {a} vs {c}");
        }
    }

    #[test]
    fn ln_eval_handles_underflow() {
        let b = ScaledBesselI::new(2.5).unwrap();
        let z: f64 = 1e-200;
        let expected = 2.5 * (0.5 * z).ln() - log_gamma(3.5).unwrap().0;
        assert!(rel(b.ln_eval(z), expected) < 1e-12);
    }
}
