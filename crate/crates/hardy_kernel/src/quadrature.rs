//! Numerical integration shared by every module: adaptive Gauss–Kronrod
//! quadrature with endpoint power substitutions, semi-infinite integrals with
//! bound-driven truncation, Gauss–Legendre rules, and the tensor grids used to
//! discretize space–time integrals.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::couplings::ModelParams;
use crate::error::{HardyError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Weights of the embedded 7-point Gauss rule (nodes XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// How the upper end of a semi-infinite integral is truncated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailPolicy {
    /// Integrate up to the given finite cutoff and ignore the rest.
    Fixed(f64),
    /// Integrate over geometrically growing panels until two consecutive
    /// panels contribute less than a tenth of the tolerance.
    BoundDriven,
}

/// Tolerances and substitution settings for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Substitution exponent p at the left end: z = a + (b−a)u^p.
    pub endpoint_power_left: Option<f64>,
    /// Substitution exponent p at the right end: z = b − (b−a)v^p.
    pub endpoint_power_right: Option<f64>,
    pub tail: TailPolicy,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::identity()
    }
}

impl QuadratureSpec {
    /// Tolerance used for identity checks (relative 1e−8).
    pub fn identity() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-15,
            max_subdivisions: 2000,
            endpoint_power_left: None,
            endpoint_power_right: None,
            tail: TailPolicy::BoundDriven,
        }
    }

    /// Looser tolerance used for envelope sweeps (relative 1e−5).
    pub fn envelope() -> Self {
        Self { rel_tol: 1e-5, ..Self::identity() }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_left_power(mut self, p: f64) -> Self {
        self.endpoint_power_left = Some(p);
        self
    }

    pub fn with_right_power(mut self, p: f64) -> Self {
        self.endpoint_power_right = Some(p);
        self
    }

    pub fn with_tail(mut self, tail: TailPolicy) -> Self {
        self.tail = tail;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(HardyError::domain("quadrature tolerances must be positive"));
        }
        if self.max_subdivisions < 8 {
            return Err(HardyError::domain("max_subdivisions must be at least 8"));
        }
        for p in [self.endpoint_power_left, self.endpoint_power_right].into_iter().flatten() {
            if !(p >= 1.0) {
                return Err(HardyError::domain(format!(
                    "substitution exponents must be at least 1, got {p}"
                )));
            }
        }
        Ok(())
    }

    /// Substitution exponent that tames an integrable endpoint singularity
    /// z^{m} with m > −1: p = ceil(1/(1+m)), so that u^{p(1+m)−1} is bounded.
    pub fn power_for_singularity(min_power: f64) -> f64 {
        if min_power >= 0.0 {
            1.0
        } else {
            (1.0 / (1.0 + min_power)).ceil()
        }
    }
}

/// Value of an integral together with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value + o.value,
            error: self.error + o.error,
            evaluations: self.evaluations + o.evaluations,
        }
    }
}

/// One application of the 15-point Kronrod rule with its embedded 7-point
/// Gauss rule. Returns (Kronrod value, |Kronrod − Gauss|).
pub fn gauss_kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive bisection on a finite interval without substitutions.
fn adaptive<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let nonfinite: Cell<Option<f64>> = Cell::new(None);
    let mut g = |x: f64| {
        let v = f(x);
        if !v.is_finite() && nonfinite.get().is_none() {
            nonfinite.set(Some(x));
        }
        v
    };
    let (v, e) = gauss_kronrod15(&mut g, a, b);
    let mut evals = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, error: e });
    let mut total = v;
    let mut total_err = e;
    loop {
        if let Some(at) = nonfinite.get() {
            return Err(HardyError::NonFinite { context: "quadrature integrand".into(), at });
        }
        if total_err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            break;
        }
        if heap.len() >= spec.max_subdivisions {
            let worst = heap.peek().copied().expect("heap is nonempty");
            return Err(HardyError::convergence(
                "adaptive quadrature",
                format!(
                    "value {total:e} error {total_err:e} after {} subintervals; worst [{:e}, {:e}] error {:e}",
                    heap.len(),
                    worst.a,
                    worst.b,
                    worst.error
                ),
            ));
        }
        let worst = heap.pop().expect("heap is nonempty");
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            // Interval cannot be split further in floating point.
            return Err(HardyError::convergence(
                "adaptive quadrature",
                format!("interval [{:e}, {:e}] exhausted precision", worst.a, worst.b),
            ));
        }
        let (v1, e1) = gauss_kronrod15(&mut g, worst.a, m);
        let (v2, e2) = gauss_kronrod15(&mut g, m, worst.b);
        evals += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Piece { a: m, b: worst.b, value: v2, error: e2 });
        // Recompute from scratch now and then to cancel drift in the sums.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok(Estimate { value, error, evaluations: evals })
}

/// Integrates over a finite interval applying the endpoint substitutions of
/// `spec`.
fn integrate_finite<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    match (spec.endpoint_power_left, spec.endpoint_power_right) {
        (None, None) => adaptive(f, a, b, spec),
        (Some(p), None) => {
            let w = b - a;
            let mut g = |u: f64| {
                if u <= 0.0 {
                    return 0.0;
                }
                let up = u.powf(p - 1.0);
                f(a + w * up * u) * w * p * up
            };
            adaptive(&mut g, 0.0, 1.0, spec)
        }
        (None, Some(p)) => {
            let w = b - a;
            let mut g = |v: f64| {
                if v <= 0.0 {
                    return 0.0;
                }
                let vp = v.powf(p - 1.0);
                f(b - w * vp * v) * w * p * vp
            };
            adaptive(&mut g, 0.0, 1.0, spec)
        }
        (Some(_), Some(_)) => {
            let m = 0.5 * (a + b);
            let left = QuadratureSpec { endpoint_power_right: None, ..*spec };
            let right = QuadratureSpec { endpoint_power_left: None, ..*spec };
            Ok(integrate_finite(f, a, m, &left)? + integrate_finite(f, m, b, &right)?)
        }
    }
}

/// Integrates `f` over `[a, b]`; `b` may be `f64::INFINITY`, in which case
/// the tail policy of `spec` decides where to stop.
///
/// # Errors
/// Non-convergence carries the worst subinterval; non-finite integrand
/// values raise [`HardyError::NonFinite`].
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    spec.validate()?;
    if !a.is_finite() || b.is_nan() || b < a {
        return Err(HardyError::domain(format!("invalid integration interval [{a}, {b}]")));
    }
    if b.is_finite() {
        return integrate_finite(&mut f, a, b, spec);
    }
    match spec.tail {
        TailPolicy::Fixed(cut) => {
            if cut <= a {
                return Err(HardyError::domain(format!("tail cutoff {cut} is not above {a}")));
            }
            integrate_finite(&mut f, a, cut, spec)
        }
        TailPolicy::BoundDriven => {
            let first = QuadratureSpec { endpoint_power_right: None, ..*spec };
            let rest = QuadratureSpec { endpoint_power_left: None, endpoint_power_right: None, ..*spec };
            let mut len = a.abs().max(1.0);
            let mut lo = a;
            let mut total = integrate_finite(&mut f, lo, lo + len, &first)?;
            lo += len;
            let mut quiet = 0;
            for _ in 0..400 {
                len *= 2.0;
                let piece = integrate_finite(&mut f, lo, lo + len, &rest)?;
                total = total + piece;
                lo += len;
                let tol = spec.abs_tol.max(spec.rel_tol * total.value.abs());
                if piece.value.abs() + piece.error <= 0.1 * tol {
                    quiet += 1;
                    if quiet == 2 {
                        return Ok(total);
                    }
                } else {
                    quiet = 0;
                }
                if !lo.is_finite() {
                    break;
                }
            }
            Err(HardyError::convergence(
                "semi-infinite quadrature",
                format!("tail beyond {lo:e} still contributes; partial value {:e}", total.value),
            ))
        }
    }
}

/// Integrates `f` over `[a, ∞)` up to the first cutoff c with
/// `tail_bound(c) ≤ tol`, adding the bound to the error estimate.
/// `tail_bound(c)` must bound ∫_c^∞ |f|.
pub fn integrate_with_tail_bound<F, B>(mut f: F, a: f64, tail_bound: B, spec: &QuadratureSpec) -> Result<Estimate>
where
    F: FnMut(f64) -> f64,
    B: Fn(f64) -> f64,
{
    spec.validate()?;
    let mut len = a.abs().max(1.0);
    let mut total = Estimate { value: 0.0, error: 0.0, evaluations: 0 };
    let mut lo = a;
    for _ in 0..400 {
        let piece_spec = if lo == a { *spec } else { QuadratureSpec { endpoint_power_left: None, ..*spec } };
        total = total + integrate_finite(&mut f, lo, lo + len, &piece_spec)?;
        lo += len;
        len *= 2.0;
        let tol = spec.abs_tol.max(spec.rel_tol * total.value.abs());
        let tb = tail_bound(lo);
        if tb <= tol {
            total.error += tb;
            return Ok(total);
        }
    }
    Err(HardyError::convergence("tail-bounded quadrature", format!("bound never fell below tolerance by {lo:e}")))
}

/// Integrates `f` over consecutive pieces delimited by `cuts` (sorted,
/// finite). Pieces are processed in decreasing order of a coarse estimate,
/// and each later piece only needs to be accurate relative to the running
/// total, so that negligible pieces cost one rule application.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(mut f: F, cuts: &[f64], spec: &QuadratureSpec) -> Result<Estimate> {
    spec.validate()?;
    let mut pieces: Vec<(f64, f64, f64)> = Vec::with_capacity(cuts.len());
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gauss_kronrod15(&mut f, w[0], w[1]);
            pieces.push((w[0], w[1], v.abs() + e));
        }
    }
    pieces.sort_by(|p, q| q.2.total_cmp(&p.2));
    let mut total = Estimate { value: 0.0, error: 0.0, evaluations: 15 * pieces.len() };
    for (a, b, _) in pieces {
        let local = QuadratureSpec { abs_tol: spec.abs_tol.max(0.01 * spec.rel_tol * total.value.abs()), ..*spec };
        total = total + integrate_finite(&mut f, a, b, &local)?;
    }
    Ok(total)
}

/// Gauss–Legendre rule with `n` nodes on [−1, 1], by Newton iteration on the
/// Legendre polynomial. Nodes are returned in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss–Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to [0, 1].
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (x.iter().map(|v| 0.5 * (v + 1.0)).collect(), w.iter().map(|v| 0.5 * v).collect())
}

/// Nodes and weights on (0, t) clustered at both ends by the substitution
/// τ = t·u²(3−2u), applied to an n-point Gauss–Legendre rule in u.
pub fn clustered_time_rule(t: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (u, w) = gauss_legendre_unit(n);
    let nodes = u.iter().map(|&u| t * u * u * (3.0 - 2.0 * u)).collect();
    let weights = u.iter().zip(&w).map(|(&u, &w)| t * 6.0 * u * (1.0 - u) * w).collect();
    (nodes, weights)
}

/// Composite Gauss–Legendre rule in ln z over [z_min, z_max], `per_decade`
/// panels per factor of ten, `order` nodes per panel. Weights include the
/// Jacobian, so Σ w_i f(z_i) ≈ ∫ f(z) dz.
pub fn log_panel_rule(z_min: f64, z_max: f64, per_decade: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (u, w) = gauss_legendre_unit(order);
    let l0 = z_min.ln();
    let l1 = z_max.ln();
    let decades = (l1 - l0) / std::f64::consts::LN_10;
    let panels = ((decades * per_decade as f64).ceil() as usize).max(1);
    let h = (l1 - l0) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for k in 0..panels {
        let a = l0 + k as f64 * h;
        for (ui, wi) in u.iter().zip(&w) {
            let z = (a + h * ui).exp();
            nodes.push(z);
            weights.push(h * wi * z);
        }
    }
    (nodes, weights)
}

/// Positions at which kernels are to be evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridWindow {
    pub r_min: f64,
    pub r_max: f64,
}

/// Space–time lattice discretizing ∫₀^t dτ ∫₀^∞ dz.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    pub t: f64,
    pub space_nodes: Vec<f64>,
    /// Weights for ∫ f(z) dz (the measure z^{2ζ} is not included).
    pub space_weights: Vec<f64>,
    pub time_nodes: Vec<f64>,
    pub time_weights: Vec<f64>,
}

impl TensorGrid {
    pub fn z_min(&self) -> f64 {
        self.space_nodes[0]
    }

    pub fn z_max(&self) -> f64 {
        *self.space_nodes.last().expect("grid is nonempty")
    }

    /// Σ w_i f(z_i).
    pub fn integrate_space<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.space_nodes.iter().zip(&self.space_weights).map(|(&z, &w)| w * f(z)).sum()
    }

    /// Σ w_k f(τ_k).
    pub fn integrate_time<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.time_nodes.iter().zip(&self.time_weights).map(|(&t, &w)| w * f(t)).sum()
    }
}

/// Builds a tensor grid whose spatial range keeps the kernel mass lost
/// outside [z_min, z_max] below `spec.abs_tol` for every r in `window`.
///
/// The cutoffs come from the two-sided envelope of the kernel: near the
/// origin the kernel is bounded by a multiple of t^{−(2ζ+1)/α}, and for
/// α < 2 its tail decays like t|r−s|^{−1−α}(r+s)^{−2ζ} (Gaussian for α = 2).
/// Both bounds carry a safety factor of 10.
///
/// # Errors
/// Infeasible window (nonpositive or reversed) or invalid spec.
pub fn build_grid(params: &ModelParams, t: f64, window: GridWindow, spec: &QuadratureSpec) -> Result<TensorGrid> {
    spec.validate()?;
    if !(t > 0.0) {
        return Err(HardyError::domain(format!("time must be positive, got {t}")));
    }
    if !(window.r_min > 0.0 && window.r_max >= window.r_min && window.r_max.is_finite()) {
        return Err(HardyError::domain(format!(
            "infeasible evaluation window [{}, {}]",
            window.r_min, window.r_max
        )));
    }
    let alpha = params.alpha();
    let d = params.dimension();
    let tol = spec.abs_tol;
    let scale = t.powf(1.0 / alpha);
    let z_min = scale * (tol * d / 10.0).powf(1.0 / d);
    let z_max = if params.is_local() {
        window.r_max + 3.0 * (t * (10.0 / tol).ln()).sqrt() * 2.0
    } else {
        window.r_max + (10.0 * t / (alpha * tol)).powf(1.0 / alpha)
    };
    if !(z_min < z_max) {
        return Err(HardyError::domain("grid window collapsed: z_min >= z_max"));
    }
    let per_decade = if spec.rel_tol < 1e-6 { 2 } else { 1 };
    let (space_nodes, space_weights) = log_panel_rule(z_min, z_max, per_decade, 10);
    let n_t = if spec.rel_tol < 1e-6 { 32 } else { 16 };
    let (time_nodes, time_weights) = clustered_time_rule(t, n_t);
    Ok(TensorGrid { t, space_nodes, space_weights, time_nodes, time_weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk15_is_exact_for_polynomials() {
        let (v, e) = gauss_kronrod15(&mut |x: f64| x.powi(12) - 3.0 * x.powi(5) + 1.0, -1.0, 2.0);
        let exact = (2f64.powi(13) + 1.0) / 13.0 - 0.5 * (64.0 - 1.0) + 3.0;
        assert!((v - exact).abs() < 1e-10 * exact.abs());
        assert!(e < 1e-8);
    }

    #[test]
    fn inverse_sqrt_with_substitution() {
        let spec = QuadratureSpec::identity().with_rel_tol(1e-12).with_left_power(2.0);
        let est = integrate(|z: f64| z.powf(-0.5), 0.0, 1.0, &spec).unwrap();
        assert!((est.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn exponential_to_infinity() {
        let est = integrate(|z: f64| (-z).exp(), 0.0, f64::INFINITY, &QuadratureSpec::identity()).unwrap();
        assert!((est.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fixed_tail() {
        let spec = QuadratureSpec::identity().with_tail(TailPolicy::Fixed(40.0));
        let est = integrate(|z: f64| (-z).exp(), 0.0, f64::INFINITY, &spec).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tail_bound_driven() {
        // ∫_0^∞ 1/(1+z)^3 dz = 1/2, tail ∫_c^∞ = 1/(2(1+c)^2)
        let spec = QuadratureSpec::identity().with_rel_tol(1e-10);
        let est = integrate_with_tail_bound(|z: f64| (1.0 + z).powi(-3), 0.0, |c| 0.5 / (1.0 + c).powi(2), &spec)
            .unwrap();
        assert!((est.value - 0.5).abs() < 1e-9);
        assert!(est.error >= (est.value - 0.5).abs());
    }

    #[test]
    fn nonfinite_is_reported() {
        let r = integrate(|z: f64| if z > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, &QuadratureSpec::identity());
        assert!(matches!(r, Err(HardyError::NonFinite { .. })));
    }

    #[test]
    fn nonconvergence_is_reported() {
        let spec = QuadratureSpec { max_subdivisions: 8, ..QuadratureSpec::identity().with_rel_tol(1e-14) };
        let r = integrate(|z: f64| (1.0 / z).sin(), 1e-6, 1.0, &spec);
        assert!(matches!(r, Err(HardyError::Convergence { .. })));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn clustered_time_rule_integrates_smooth_functions() {
        let (t, w) = clustered_time_rule(2.0, 24);
        let s: f64 = t.iter().zip(&w).map(|(t, w)| w * t.cos()).sum();
        assert!((s - 2f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn grid_reproduces_gamma_integral() {
        let params = ModelParams::new(1.0, 1.0).unwrap();
        let spec = QuadratureSpec::identity().with_abs_tol(1e-8);
        let grid = build_grid(&params, 1.0, GridWindow { r_min: 0.1, r_max: 10.0 }, &spec).unwrap();
        assert!(grid.z_max() > 1e3);
        // ∫ z^2 e^{-z} dz = 2 (the grid's omitted ranges are negligible).
        let v = grid.integrate_space(|z| z * z * (-z).exp());
        assert!((v - 2.0).abs() < 1e-8 * 2.0, "{v}");
    }

    #[test]
    fn grid_rejects_bad_window() {
        let params = ModelParams::new(1.0, 1.0).unwrap();
        let bad = GridWindow { r_min: 2.0, r_max: 1.0 };
        assert!(build_grid(&params, 1.0, bad, &QuadratureSpec::identity()).is_err());
    }
}
