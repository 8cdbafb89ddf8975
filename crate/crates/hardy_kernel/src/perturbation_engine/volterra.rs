//! Duhamel series for time-inhomogeneous kernels on a finite space.
//!
//! For a transition density p(s, t, x, y) with reference masses m(z) and a
//! potential q(u, z), the iterates are
//!
//!   p_n(s, t, x, y) = ∫_s^t du Σ_z m(z) p_{n−1}(s, u, x, z) q(u, z) p(u, t, z, y).
//!
//! With s and x fixed, each iterate is a function of the end time on
//! [s, t]; it is carried as a Chebyshev interpolant per target point, and
//! the time integral is done by Gauss–Legendre against it. The scheme is
//! spectrally accurate for kernels that are smooth in time away from the
//! diagonal (the integrand may have a kink at u = t).

use crate::error::{HardyError, Result};
use crate::quadrature::gauss_legendre_unit;

/// A transition density on {0, …, points−1}.
pub trait FiniteKernel {
    fn points(&self) -> usize;
    /// Reference mass of a point.
    fn mass(&self, z: usize) -> f64;
    /// p(s, t, x, y); must vanish for t < s and, at t = s, return its limit
    /// from above (the iterates are interpolated up to that endpoint).
    fn density(&self, s: f64, t: f64, x: usize, y: usize) -> f64;
}

/// The kernel (t − s)_+ on a single point of unit mass.
#[derive(Debug, Clone, Copy, Default)]
pub struct ToyKernel;

impl FiniteKernel for ToyKernel {
    fn points(&self) -> usize {
        1
    }
    fn mass(&self, _z: usize) -> f64 {
        1.0
    }
    fn density(&self, s: f64, t: f64, _x: usize, _y: usize) -> f64 {
        (t - s).max(0.0)
    }
}

/// Chebyshev degree and quadrature order of the engine.
const DEGREE: usize = 72;
const ORDER: usize = 80;

/// Barycentric interpolation on Chebyshev points of the second kind.
struct Chebyshev {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    a: f64,
    b: f64,
}

impl Chebyshev {
    fn new(a: f64, b: f64, degree: usize) -> Self {
        let nodes = (0..=degree)
            .map(|j| match j {
                // Exact endpoints: kernels may jump just outside [a, b].
                0 => b,
                j if j == degree => a,
                j => {
                    let x = (std::f64::consts::PI * j as f64 / degree as f64).cos();
                    0.5 * (a + b) + 0.5 * (b - a) * x
                }
            })
            .collect();
        let weights = (0..=degree)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == degree {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();
        Self { nodes, weights, a, b }
    }

    fn eval(&self, values: &[f64], x: f64) -> f64 {
        let x = x.clamp(self.a.min(self.b), self.a.max(self.b));
        let (mut num, mut den) = (0.0, 0.0);
        for ((&xj, &wj), &fj) in self.nodes.iter().zip(&self.weights).zip(values) {
            let d = x - xj;
            if d == 0.0 {
                return fj;
            }
            let c = wj / d;
            num += c * fj;
            den += c;
        }
        num / den
    }
}

/// p_0(s, t, x, y), …, p_{n_terms−1}(s, t, x, y).
///
/// # Errors
/// Domain errors for t < s or points out of range; non-finite iterates.
pub fn duhamel_series<K, Q>(kernel: &K, q: Q, s: f64, t: f64, x: usize, y: usize, n_terms: usize) -> Result<Vec<f64>>
where
    K: FiniteKernel + ?Sized,
    Q: Fn(f64, usize) -> f64,
{
    let m = kernel.points();
    if !(t >= s) || !s.is_finite() || !t.is_finite() {
        return Err(HardyError::domain(format!("need s <= t, got s={s}, t={t}")));
    }
    if x >= m || y >= m {
        return Err(HardyError::domain(format!("points must be below {m}, got x={x}, y={y}")));
    }
    if n_terms == 0 {
        return Ok(Vec::new());
    }
    if t == s {
        let mut out = vec![0.0; n_terms];
        out[0] = kernel.density(s, t, x, y);
        return Ok(out);
    }
    let cheb = Chebyshev::new(s, t, DEGREE);
    let (gx, gw) = gauss_legendre_unit(ORDER);
    // current[z][i] = p_n(s, u_i, x, z) at the Chebyshev nodes u_i.
    let mut current: Vec<Vec<f64>> = (0..m).map(|z| cheb.nodes.iter().map(|&u| kernel.density(s, u, x, z)).collect()).collect();
    let mut terms = vec![kernel.density(s, t, x, y)];
    while terms.len() < n_terms {
        let mut next = vec![vec![0.0; cheb.nodes.len()]; m];
        for (i, &u) in cheb.nodes.iter().enumerate() {
            if u <= s {
                continue;
            }
            for (zy, row) in next.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (&g, &w) in gx.iter().zip(&gw) {
                    let v = s + (u - s) * g;
                    for (z, cur) in current.iter().enumerate() {
                        let qv = q(v, z);
                        if qv != 0.0 {
                            acc += w * kernel.mass(z) * cheb.eval(cur, v) * qv * kernel.density(v, u, z, zy);
                        }
                    }
                }
                row[i] = (u - s) * acc;
            }
        }
        current = next;
        let value = cheb.eval(&current[y], t);
        if !value.is_finite() {
            return Err(HardyError::NonFinite { context: "finite-space Duhamel iterate".into(), at: t });
        }
        terms.push(value);
    }
    Ok(terms)
}

/// (t − s)_+.
pub fn toy_base(s: f64, t: f64) -> f64 {
    (t - s).max(0.0)
}

/// p_n(s, t) of the toy kernel for q ≡ 1, computed by the series engine.
pub fn toy_iterate(n: usize, s: f64, t: f64) -> Result<f64> {
    if t <= s {
        return Ok(0.0);
    }
    Ok(duhamel_series(&ToyKernel, |_, _| 1.0, s, t, 0, 0, n + 1)?[n])
}

/// Number of series terms summed by [`toy_perturbed`].
pub const TOY_TERMS: usize = 25;

/// The toy kernel perturbed by the constant potential λ, summed from the
/// series engine: sinh(√λ(t−s)_+)/√λ for λ > 0 and sin(√|λ|(t−s)_+)/√|λ|
/// for λ < 0.
pub fn toy_perturbed(lambda: f64, s: f64, t: f64) -> Result<f64> {
    if t <= s {
        return Ok(0.0);
    }
    Ok(duhamel_series(&ToyKernel, |_, _| lambda, s, t, 0, 0, TOY_TERMS)?.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two-state kernel with time-dependent rates: smooth, non-degenerate.
    struct TwoState;

    impl FiniteKernel for TwoState {
        fn points(&self) -> usize {
            2
        }
        fn mass(&self, z: usize) -> f64 {
            [1.0, 0.5][z]
        }
        fn density(&self, s: f64, t: f64, x: usize, y: usize) -> f64 {
            if t < s {
                return 0.0;
            }
            let d = t - s;
            let same = 0.5 * (1.0 + (-2.0 * d).exp());
            let p = if x == y { same } else { 1.0 - same };
            p / self.mass(y)
        }
    }

    #[test]
    fn toy_iterates_are_odd_factorials() {
        let mut fact = 1.0;
        for n in 0..=8usize {
            if n > 0 {
                fact *= ((2 * n) * (2 * n + 1)) as f64;
            }
            let v = toy_iterate(n, 0.0, 1.0).unwrap();
            assert!((v * fact - 1.0).abs() < 1e-12, "n={n}: {v} vs {}", 1.0 / fact);
        }
    }

    #[test]
    fn toy_sums() {
        assert!((toy_perturbed(1.0, 0.0, 1.0).unwrap() - 1f64.sinh()).abs() < 1e-12);
        assert!(toy_perturbed(-1.0, 0.0, std::f64::consts::PI).unwrap().abs() < 1e-12);
        let v = toy_perturbed(-4.0, 0.5, 1.5).unwrap();
        assert!((v - 2f64.sin() / 2.0).abs() < 1e-12);
        assert_eq!(toy_perturbed(1.0, 1.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn constant_potential_multiplies_by_exponential() {
        // For q ≡ c on a conservative kernel, p^q = e^{c(t−s)} p.
        let c = 0.7;
        let terms = duhamel_series(&TwoState, |_, _| c, 0.2, 1.4, 0, 1, 30).unwrap();
        let sum: f64 = terms.iter().sum();
        let exact = (c * 1.2f64).exp() * TwoState.density(0.2, 1.4, 0, 1);
        assert!(((sum - exact) / exact).abs() < 1e-11, "{sum} vs {exact}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(duhamel_series(&ToyKernel, |_, _| 1.0, 1.0, 0.0, 0, 0, 3).is_err());
        assert!(duhamel_series(&ToyKernel, |_, _| 1.0, 0.0, 1.0, 1, 0, 3).is_err());
    }
}
