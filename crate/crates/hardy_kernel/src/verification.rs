//! Executable checks of the identities and bounds satisfied by the Hardy
//! perturbed kernels: invariance of the ground state, moment identities,
//! finite-time potentials, supermedian property, two-sided envelopes, mass
//! bounds, the 3G inequality and the blow-up of the series above the
//! critical coupling.
//!
//! Residual checks produce a [`ResidualReport`], envelope checks an
//! [`EnvelopeReport`]; both render as CSV and as a one-line summary
//! `PASS|FAIL <check-id> <worst-value>`.

use std::fmt::Write as _;

use crate::couplings::{psi, ModelParams};
use crate::error::{HardyError, Result};
use crate::perturbation_engine::{series_for_kappa, EngineSpec, HardySolution, SeriesReport};
use crate::quadrature::{gauss_legendre_unit, integrate_pieces, QuadratureSpec};
use crate::stable_densities::stable1d;
use crate::subordinated_kernel::{comparator_phi, SubordinatedKernel};

/// Formats a value with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// `PASS <id> <worst>` or `FAIL <id> <worst>`.
pub fn summary_line(pass: bool, id: &str, worst: f64) -> String {
    format!("{} {id} {}", if pass { "PASS" } else { "FAIL" }, fmt17(worst))
}

/// Tolerances of a verification run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifySpec {
    /// Target accuracy of the kernel evaluations.
    pub rel_tol: f64,
    pub engine: EngineSpec,
    /// Relative tolerance of the spatial and temporal quadratures; kept well
    /// below `rel_tol` so that the kernel error dominates the residuals.
    pub quad_tol: f64,
}

impl VerifySpec {
    pub fn from_rel_tol(rel_tol: f64) -> Self {
        Self { rel_tol, engine: EngineSpec::from_rel_tol(rel_tol), quad_tol: 1e-3 * rel_tol }
    }

    /// The same run at a tenfold tighter tolerance.
    pub fn tightened(&self) -> Self {
        Self::from_rel_tol(self.rel_tol / 10.0)
    }
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self::from_rel_tol(1e-3)
    }
}

/// The kernel under test: the free kernel for η = 0, otherwise a solved
/// Hardy perturbation.
#[derive(Debug, Clone)]
pub enum PerturbedKernel {
    Free(SubordinatedKernel),
    Hardy(Box<HardySolution>),
}

impl PerturbedKernel {
    /// # Errors
    /// As [`SubordinatedKernel::new`] and [`HardySolution::new`].
    pub fn new(params: &ModelParams, eta: f64, spec: EngineSpec) -> Result<Self> {
        if eta == 0.0 {
            Ok(Self::Free(SubordinatedKernel::new(params)?))
        } else {
            Ok(Self::Hardy(Box::new(HardySolution::new(params, eta, spec)?)))
        }
    }

    pub fn params(&self) -> ModelParams {
        match self {
            Self::Free(k) => *k.params(),
            Self::Hardy(s) => *s.params(),
        }
    }

    pub fn eta(&self) -> f64 {
        match self {
            Self::Free(_) => 0.0,
            Self::Hardy(s) => s.eta(),
        }
    }

    pub fn density(&self, t: f64, r: f64, s: f64) -> Result<f64> {
        match self {
            Self::Free(k) => k.density(t, r, s),
            Self::Hardy(sol) => sol.density(t, r, s),
        }
    }
}

impl From<HardySolution> for PerturbedKernel {
    fn from(sol: HardySolution) -> Self {
        Self::Hardy(Box::new(sol))
    }
}

/// ∫₀^∞ k(t, r, s) s^power ds.
///
/// The integral runs in ln s between 10⁻³ and 10³ times the larger of r and
/// the time scale t^{1/α}; outside, the integrand follows its power laws:
/// s^{power−η} at the origin and s^{power−(2ζ+1)−α}(1 + O(s^{−α})) at
/// infinity (α < 2;
/// the Gaussian tail of α = 2 is cut off instead).
///
/// # Errors
/// Domain errors for non-integrable powers; evaluation and quadrature errors.
pub fn moment(kernel: &PerturbedKernel, t: f64, r: f64, power: f64, tol: f64) -> Result<f64> {
    let params = kernel.params();
    let alpha = params.alpha();
    let eta = kernel.eta();
    let head_exp = power - eta;
    let tail_exp = power - params.dimension() - alpha;
    if !(head_exp > -1.0) || (alpha < 2.0 && !(tail_exp < -1.0)) {
        return Err(HardyError::domain(format!("s^{power} is not integrable against the kernel with eta={eta}")));
    }
    let scale = t.powf(1.0 / alpha);
    let a = 1e-3 * r.min(scale);
    let b = if alpha < 2.0 { 1e3 * r.max(scale) } else { r + 20.0 * scale };
    let tail = (alpha < 2.0).then_some(Tail { exponent: tail_exp, gap: alpha });
    // For short times the kernel is a spike of width t^{1/α} around r.
    let mut features = vec![r, scale];
    if scale < 0.5 * r {
        features.extend([r - 2.0 * scale, r + 2.0 * scale]);
    }
    integrate_log_axis(|s| Ok(kernel.density(t, r, s)? * s.powf(power)), (a, b), (head_exp, tail), &features, tol)
}

/// Power-law behaviour of an integrand at infinity: f(s) ≈ A s^e + B s^{e−gap}.
#[derive(Debug, Clone, Copy)]
struct Tail {
    exponent: f64,
    gap: f64,
}

impl Tail {
    /// ∫_b^∞ of the two-term law fitted through f(b/4) and f(b).
    fn integral(&self, fb: f64, fq: f64, b: f64) -> f64 {
        let (e, g) = (self.exponent, self.gap);
        // Unknowns a = A b^e, c = B b^{e−g}; at b/4 they scale by 4^{−e}, 4^{g−e}.
        let (k1, k2) = (4f64.powf(-e), 4f64.powf(g - e));
        let c = (fq - k1 * fb) / (k2 - k1);
        let a = fb - c;
        b * (a / (-e - 1.0) + c / (g - e - 1.0))
    }
}

/// ∫₀^∞ f(s) ds computed in ln s on [a, b], with power-law end pieces:
/// f ~ s^{head} below a and the two-term [`Tail`] above b (no tail piece
/// for `None`). Pieces break at every decade and around each of `features`.
fn integrate_log_axis<F>(mut f: F, (a, b): (f64, f64), (head_exp, tail): (f64, Option<Tail>), features: &[f64], tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut failure = None;
    let mut g = |s: f64| match f(s) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let head = g(a) * a / (head_exp + 1.0);
    let tail = tail.map_or(0.0, |law| law.integral(g(b), g(0.25 * b), b));
    let (la, lb) = (a.ln(), b.ln());
    let mut cuts: Vec<f64> = Vec::new();
    let mut u = la;
    while u < lb {
        cuts.push(u);
        u += std::f64::consts::LN_10;
    }
    cuts.push(lb);
    for &x in features {
        cuts.extend([-0.3, 0.0, 0.3].map(|d| x.ln() + d));
    }
    cuts.retain(|c| (la..=lb).contains(c));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
    let spec = QuadratureSpec::identity().with_rel_tol(tol).with_abs_tol(1e-300);
    let body = integrate_pieces(
        |u: f64| {
            let s = u.exp();
            g(s) * s
        },
        &cuts,
        &spec,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(head + body.value + tail)
}

/// Decades and Gauss–Legendre nodes per decade of the ln τ rule used for
/// time integrals.
const TIME_DECADES: f64 = 4.0;
const TIME_ORDER: usize = 6;

/// ∫₀^t dτ ∫₀^∞ k(τ, r, s) s^power ds.
///
/// Composite Gauss–Legendre in ln τ over four decades below
/// min(t, r^α); the layer below uses the short-time limit
/// ∫ k(τ, r, s) s^power ds = r^{power−2ζ}(1 + O(τ/r^α)).
pub fn time_moment(kernel: &PerturbedKernel, t: f64, r: f64, power: f64, tol: f64) -> Result<f64> {
    let params = kernel.params();
    let tau0 = 10f64.powf(-TIME_DECADES) * t.min(r.powf(params.alpha()));
    let head = tau0 * r.powf(power - 2.0 * params.zeta());
    let (gx, gw) = gauss_legendre_unit(TIME_ORDER);
    let (l0, l1) = (tau0.ln(), t.ln());
    let panels = ((l1 - l0) / std::f64::consts::LN_10).ceil().max(1.0) as usize;
    let h = (l1 - l0) / panels as f64;
    let mut total = head;
    for p in 0..panels {
        for (x, w) in gx.iter().zip(&gw) {
            let tau = (l0 + h * (p as f64 + x)).exp();
            total += h * w * tau * moment(kernel, tau, r, power, tol)?;
        }
    }
    Ok(total)
}

/// One sampled instance of an identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualPoint {
    pub t: f64,
    pub r: f64,
    /// Second spatial argument, for two-point identities.
    pub s: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

impl ResidualPoint {
    pub fn abs_residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }

    pub fn rel_residual(&self) -> f64 {
        self.abs_residual() / self.rhs.abs()
    }
}

/// Residuals of an identity over its sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub id: String,
    pub points: Vec<ResidualPoint>,
    pub max_abs_residual: f64,
    pub max_rel_residual: f64,
}

impl ResidualReport {
    fn new(id: impl Into<String>, points: Vec<ResidualPoint>) -> Self {
        let max_abs_residual = points.iter().map(ResidualPoint::abs_residual).fold(0.0, f64::max);
        let max_rel_residual = points.iter().map(ResidualPoint::rel_residual).fold(0.0, f64::max);
        Self { id: id.into(), points, max_abs_residual, max_rel_residual }
    }

    /// Whether the largest relative residual is below `threshold`.
    pub fn passes(&self, threshold: f64) -> bool {
        self.max_rel_residual.is_finite() && self.max_rel_residual < threshold
    }

    pub fn summary(&self, threshold: f64) -> String {
        summary_line(self.passes(threshold), &self.id, self.max_rel_residual)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,t,r,s,lhs,rhs,abs_residual,rel_residual\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                self.id,
                fmt17(p.t),
                fmt17(p.r),
                p.s.map(fmt17).unwrap_or_default(),
                fmt17(p.lhs),
                fmt17(p.rhs),
                fmt17(p.abs_residual()),
                fmt17(p.rel_residual())
            );
        }
        out
    }
}

/// ∫ k(t, r, s) s^{2ζ−η} ds = r^{−η} at each r: invariance of the ground
/// state s^{−η} (for η = 0, conservation of mass).
pub fn check_invariance_on(kernel: &PerturbedKernel, t: f64, r_list: &[f64], quad_tol: f64) -> Result<ResidualReport> {
    let eta = kernel.eta();
    let zeta = kernel.params().zeta();
    let points = r_list
        .iter()
        .map(|&r| Ok(ResidualPoint { t, r, s: None, lhs: moment(kernel, t, r, 2.0 * zeta - eta, quad_tol)?, rhs: r.powf(-eta) }))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::new(format!("invariance(eta={eta})"), points))
}

/// [`check_invariance_on`] for a freshly built kernel.
pub fn check_invariance(params: &ModelParams, eta: f64, t: f64, r_list: &[f64], spec: &VerifySpec) -> Result<ResidualReport> {
    check_invariance_on(&PerturbedKernel::new(params, eta, spec.engine)?, t, r_list, spec.quad_tol)
}

/// ∫ k(t, r, s) s^{2ζ−β} ds = r^{−β} + (Ψ(η) − Ψ(β)) ∫₀^t∫ k(τ, r, s) s^{2ζ−β−α} ds dτ,
/// the moment identity for exponents β other than η.
///
/// # Errors
/// Domain errors for β outside [0, 2ζ+1−α−η) (η > 0) or outside the
/// negative branch (η < 0).
pub fn check_identity_beta_on(kernel: &PerturbedKernel, beta: f64, t: f64, r: f64, quad_tol: f64) -> Result<ResidualReport> {
    let params = kernel.params();
    let eta = kernel.eta();
    let (zeta, alpha) = (params.zeta(), params.alpha());
    let window_ok = if eta > 0.0 {
        (0.0..params.dimension() - alpha - eta).contains(&beta)
    } else {
        beta < 0.0 && beta > -params.m_bound()
    };
    if !window_ok {
        return Err(HardyError::domain(format!("beta={beta} is outside the window of the moment identity for eta={eta}")));
    }
    let coefficient = psi(&params, eta)? - psi(&params, beta)?;
    let lhs = moment(kernel, t, r, 2.0 * zeta - beta, quad_tol)?;
    let potential = time_moment(kernel, t, r, 2.0 * zeta - beta - alpha, quad_tol)?;
    let point = ResidualPoint { t, r, s: None, lhs, rhs: r.powf(-beta) + coefficient * potential };
    Ok(ResidualReport::new(format!("identity_beta(eta={eta},beta={beta})"), vec![point]))
}

pub fn check_identity_beta(params: &ModelParams, eta: f64, beta: f64, t: f64, r: f64, spec: &VerifySpec) -> Result<ResidualReport> {
    check_identity_beta_on(&PerturbedKernel::new(params, eta, spec.engine)?, beta, t, r, spec.quad_tol)
}

/// ∫ k(t, r, s) s^{2ζ−η} ds ≤ r^{−η}: only the excess over the right side
/// counts as residual.
pub fn check_supermedian_on(kernel: &PerturbedKernel, t: f64, r_list: &[f64], quad_tol: f64) -> Result<ResidualReport> {
    let eta = kernel.eta();
    if eta < 0.0 || eta > kernel.params().eta_critical() {
        return Err(HardyError::domain(format!("the supermedian check needs 0 <= eta <= critical, got {eta}")));
    }
    let mut report = check_invariance_on(kernel, t, r_list, quad_tol)?;
    for p in &mut report.points {
        p.lhs = p.lhs.max(p.rhs);
    }
    Ok(ResidualReport::new(format!("supermedian(eta={eta})"), report.points))
}

pub fn check_supermedian(params: &ModelParams, eta: f64, t: f64, r_list: &[f64], spec: &VerifySpec) -> Result<ResidualReport> {
    check_supermedian_on(&PerturbedKernel::new(params, eta, spec.engine)?, t, r_list, spec.quad_tol)
}

/// ∫ p(t, r, s) s^{2ζ−β} ds = r^{−β} − Ψ(β) ∫₀^t∫ p(τ, r, s) s^{2ζ−α−β} ds dτ
/// for the free kernel, β ∈ (−M, 2ζ+1−α).
pub fn check_finite_time_potential(params: &ModelParams, beta: f64, t: f64, r: f64, spec: &VerifySpec) -> Result<ResidualReport> {
    if !(beta > -params.m_bound() && beta < params.dimension() - params.alpha()) {
        return Err(HardyError::domain(format!("beta={beta} is outside the window of the finite-time identity")));
    }
    let kernel = PerturbedKernel::Free(SubordinatedKernel::new(params)?);
    let zeta = params.zeta();
    let lhs = moment(&kernel, t, r, 2.0 * zeta - beta, spec.quad_tol)?;
    let potential = time_moment(&kernel, t, r, 2.0 * zeta - params.alpha() - beta, spec.quad_tol)?;
    let point = ResidualPoint { t, r, s: None, lhs, rhs: r.powf(-beta) - psi(params, beta)? * potential };
    Ok(ResidualReport::new(format!("finite_time_potential(beta={beta})"), vec![point]))
}

/// ∫ k(t/2, r, z) k(t/2, z, s) z^{2ζ} dz = k(t, r, s) over the grid.
pub fn check_chapman_kolmogorov_on(kernel: &PerturbedKernel, grid: &EnvelopeGrid, quad_tol: f64) -> Result<ResidualReport> {
    let params = kernel.params();
    let (alpha, zeta) = (params.alpha(), params.zeta());
    let points = grid
        .points()
        .map(|(t, r, s)| {
            let half = 0.5 * t;
            let scale = half.powf(1.0 / alpha);
            let a = 1e-3 * r.min(s).min(scale);
            let b = if alpha < 2.0 { 1e3 * r.max(s).max(scale) } else { r.max(s) + 20.0 * scale };
            // Both factors decay like z^{−(2ζ+1+α)} at infinity.
            let tail = (alpha < 2.0).then_some(Tail { exponent: 2.0 * zeta - 2.0 * (params.dimension() + alpha), gap: alpha });
            let lhs = integrate_log_axis(
                |z| Ok(kernel.density(half, r, z)? * kernel.density(half, z, s)? * z.powf(2.0 * zeta)),
                (a, b),
                (2.0 * zeta - 2.0 * kernel.eta(), tail),
                &[r, s, scale],
                quad_tol,
            )?;
            Ok(ResidualPoint { t, r, s: Some(s), lhs, rhs: kernel.density(t, r, s)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::new(format!("chapman_kolmogorov(eta={})", kernel.eta()), points))
}

/// Mass conservation of the free kernel, ∫ p(t, r, s) s^{2ζ} ds = 1, at
/// every (t, r) of the grid.
pub fn check_normalization(params: &ModelParams, grid: &EnvelopeGrid, quad_tol: f64) -> Result<ResidualReport> {
    let kernel = PerturbedKernel::Free(SubordinatedKernel::new(params)?);
    let mut points = Vec::with_capacity(grid.t.len() * grid.r.len());
    for &t in &grid.t {
        points.extend(check_invariance_on(&kernel, t, &grid.r, quad_tol)?.points);
    }
    Ok(ResidualReport::new("normalization", points))
}

/// A residual check run at a tolerance and at a tenfold tighter one.
#[derive(Debug, Clone, PartialEq)]
pub struct Tightening {
    pub coarse: ResidualReport,
    pub fine: ResidualReport,
}

/// Residuals below this are at round-off and need not shrink further.
const RESIDUAL_FLOOR: f64 = 1e-10;

impl Tightening {
    /// coarse / fine worst relative residual.
    pub fn factor(&self) -> f64 {
        self.coarse.max_rel_residual / self.fine.max_rel_residual
    }

    /// The residual shrank at least twofold (or is already at round-off).
    pub fn passes(&self) -> bool {
        self.factor() >= 2.0 || self.coarse.max_rel_residual.max(self.fine.max_rel_residual) < RESIDUAL_FLOOR
    }

    pub fn summary(&self) -> String {
        summary_line(self.passes(), &format!("tightening:{}", self.coarse.id), self.factor())
    }
}

/// Runs `check` at `spec` and at [`VerifySpec::tightened`].
pub fn tighten<F>(spec: &VerifySpec, mut check: F) -> Result<Tightening>
where
    F: FnMut(&VerifySpec) -> Result<ResidualReport>,
{
    Ok(Tightening { coarse: check(spec)?, fine: check(&spec.tightened())? })
}

/// One sample of an envelope: coordinates, value, comparator and ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePoint {
    pub coords: Vec<f64>,
    pub value: f64,
    pub comparator: f64,
}

impl EnvelopePoint {
    pub fn ratio(&self) -> f64 {
        self.value / self.comparator
    }
}

/// Range of value/comparator over a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub id: String,
    /// Description of the sample.
    pub grid: String,
    pub coord_names: Vec<String>,
    pub points: Vec<EnvelopePoint>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin: Vec<f64>,
    pub argmax: Vec<f64>,
    /// ln(max_ratio / min_ratio).
    pub log_range: f64,
}

impl EnvelopeReport {
    fn new(id: impl Into<String>, grid: impl Into<String>, coord_names: &[&str], points: Vec<EnvelopePoint>) -> Result<Self> {
        let first = points.first().ok_or_else(|| HardyError::domain("an envelope needs at least one sample"))?;
        let (mut lo, mut hi) = (first, first);
        for p in &points {
            if p.ratio() < lo.ratio() || p.ratio().is_nan() {
                lo = p;
            }
            if p.ratio() > hi.ratio() {
                hi = p;
            }
        }
        let (min_ratio, max_ratio) = (lo.ratio(), hi.ratio());
        Ok(Self {
            id: id.into(),
            grid: grid.into(),
            coord_names: coord_names.iter().map(|s| s.to_string()).collect(),
            argmin: lo.coords.clone(),
            argmax: hi.coords.clone(),
            min_ratio,
            max_ratio,
            log_range: (max_ratio / min_ratio).ln(),
            points,
        })
    }

    /// Positive, finite ratios, and a log-range below `max_log_range` when
    /// one is given.
    pub fn passes(&self, max_log_range: Option<f64>) -> bool {
        let bounded = self.min_ratio > 0.0 && self.max_ratio.is_finite();
        bounded && max_log_range.map_or(true, |m| self.log_range < m)
    }

    pub fn summary(&self, max_log_range: Option<f64>) -> String {
        let worst = if max_log_range.is_some() { self.log_range } else { self.max_ratio };
        summary_line(self.passes(max_log_range), &self.id, worst)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.coord_names.join(",");
        out.push_str(",value,comparator,ratio\n");
        for p in &self.points {
            for c in &p.coords {
                out.push_str(&fmt17(*c));
                out.push(',');
            }
            let _ = writeln!(out, "{},{},{}", fmt17(p.value), fmt17(p.comparator), fmt17(p.ratio()));
        }
        out
    }
}

/// Grid of (t, r, s) points for envelope sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeGrid {
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
}

/// `n` log-spaced points from `lo` to `hi`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| (lo.ln() + (hi / lo).ln() * k as f64 / (n - 1) as f64).exp()).collect()
}

impl Default for EnvelopeGrid {
    /// t ∈ {1/4, 1, 4}; r, s at nine log-spaced points from 0.05 to 20.
    fn default() -> Self {
        Self { t: vec![0.25, 1.0, 4.0], r: log_spaced(0.05, 20.0, 9), s: log_spaced(0.05, 20.0, 9) }
    }
}

impl EnvelopeGrid {
    fn describe(&self) -> String {
        let span = |v: &[f64]| format!("{}pts[{}..{}]", v.len(), v.first().copied().unwrap_or(f64::NAN), v.last().copied().unwrap_or(f64::NAN));
        format!("t:{} r:{} s:{}", span(&self.t), span(&self.r), span(&self.s))
    }

    /// Points in t-major, then r, then s order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.t.iter().flat_map(move |&t| self.r.iter().flat_map(move |&r| self.s.iter().map(move |&s| (t, r, s))))
    }
}

/// kernel / comparator_phi over the grid: the two-sided sharp bound holds
/// iff the ratio stays within a fixed window.
pub fn sharp_bound_envelope_on(kernel: &PerturbedKernel, grid: &EnvelopeGrid) -> Result<EnvelopeReport> {
    let params = kernel.params();
    let eta = kernel.eta();
    let points = grid
        .points()
        .map(|(t, r, s)| {
            Ok(EnvelopePoint { coords: vec![t, r, s], value: kernel.density(t, r, s)?, comparator: comparator_phi(&params, eta, t, r, s)? })
        })
        .collect::<Result<Vec<_>>>()?;
    EnvelopeReport::new(format!("sharp_bound(eta={eta})"), grid.describe(), &["t", "r", "s"], points)
}

pub fn sharp_bound_envelope(params: &ModelParams, eta: f64, grid: &EnvelopeGrid, spec: &VerifySpec) -> Result<EnvelopeReport> {
    sharp_bound_envelope_on(&PerturbedKernel::new(params, eta, spec.engine)?, grid)
}

/// Mass ∫ k(t, r, s) s^{2ζ} ds against 1 + (r t^{−1/α})^{−η} (η > 0) or
/// 1 ∧ (r t^{−1/α})^{−η} (η < 0).
pub fn mass_bound_probe_on(kernel: &PerturbedKernel, t_list: &[f64], r_list: &[f64], quad_tol: f64) -> Result<EnvelopeReport> {
    let params = kernel.params();
    let eta = kernel.eta();
    let mut points = Vec::with_capacity(t_list.len() * r_list.len());
    for &t in t_list {
        for &r in r_list {
            let x = r * t.powf(-1.0 / params.alpha());
            let comparator = match eta {
                e if e > 0.0 => 1.0 + x.powf(-e),
                e if e < 0.0 => x.powf(-e).min(1.0),
                _ => 1.0,
            };
            points.push(EnvelopePoint { coords: vec![t, r], value: moment(kernel, t, r, 2.0 * params.zeta(), quad_tol)?, comparator });
        }
    }
    EnvelopeReport::new(format!("mass_bound(eta={eta})"), format!("t:{t_list:?} r:{r_list:?}"), &["t", "r"], points)
}

pub fn mass_bound_probe(params: &ModelParams, eta: f64, t_list: &[f64], r_list: &[f64], spec: &VerifySpec) -> Result<EnvelopeReport> {
    mass_bound_probe_on(&PerturbedKernel::new(params, eta, spec.engine)?, t_list, r_list, spec.quad_tol)
}

/// Series at coupling κ (any sign, above the critical value included) at
/// one point; divergence is reported, not raised.
pub fn blowup_probe(params: &ModelParams, kappa: f64, point: (f64, f64, f64), n_max: usize, spec: &EngineSpec) -> Result<SeriesReport> {
    let (t, r, s) = point;
    series_for_kappa(params, kappa, t, r, s, n_max, *spec)
}

/// Summary statistics of a blow-up run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupStats {
    /// S_hi / S_lo with S_n = p_0 + … + p_n.
    pub partial_sum_ratio: f64,
    /// Number of trailing terms each at least as large as its predecessor.
    pub growth_run: usize,
    /// |p_n| / |p_{n−1}| at the last term.
    pub last_growth: f64,
}

impl BlowupStats {
    pub fn from_report(report: &SeriesReport, lo: usize, hi: usize) -> Self {
        let terms = &report.terms;
        let sum = |n: usize| terms.iter().take(n + 1).sum::<f64>();
        let growth_run = terms.windows(2).rev().take_while(|w| w[1].abs() >= w[0].abs()).count();
        let last_growth = match terms.len() {
            0 | 1 => 0.0,
            n => terms[n - 1].abs() / terms[n - 2].abs(),
        };
        Self { partial_sum_ratio: sum(hi) / sum(lo), growth_run, last_growth }
    }
}

/// A fixed, deterministic sample of (t, τ, r, s, z) for the 3G inequality.
pub fn default_threeg_sample() -> Vec<[f64; 5]> {
    let times = [0.1, 1.0, 10.0];
    let space = [0.05, 0.5, 5.0, 50.0];
    let mut out = Vec::new();
    for &t in &times {
        for &tau in &times {
            for &r in &space {
                for &s in &space {
                    for &z in &space {
                        out.push([t, tau, r, s, z]);
                    }
                }
            }
        }
    }
    out
}

/// p(t,r,z) p(τ,z,s) / p¹(t+τ,r,s) against
/// p(t,r,z)/(τ^{1/α}+z+s)^{2ζ} + p(τ,z,s)/(t^{1/α}+z+r)^{2ζ}, where p is
/// the free kernel and p¹ the symmetric α-stable density on the line
/// (both sides then scale alike).
///
/// # Errors
/// Domain error for α = 2, where the inequality does not hold.
pub fn threeg_envelope(params: &ModelParams, sample: &[[f64; 5]]) -> Result<EnvelopeReport> {
    if params.is_local() {
        return Err(HardyError::domain("the 3G inequality needs alpha < 2"));
    }
    let kernel = SubordinatedKernel::new(params)?;
    let (alpha, zeta) = (params.alpha(), params.zeta());
    let points = sample
        .iter()
        .map(|&[t, tau, r, s, z]| {
            let prz = kernel.density(t, r, z)?;
            let pzs = kernel.density(tau, z, s)?;
            let lhs = prz * pzs / stable1d(alpha, t + tau, r, s)?;
            let rhs = prz / (tau.powf(1.0 / alpha) + z + s).powf(2.0 * zeta) + pzs / (t.powf(1.0 / alpha) + z + r).powf(2.0 * zeta);
            Ok(EnvelopePoint { coords: vec![t, tau, r, s, z], value: lhs, comparator: rhs })
        })
        .collect::<Result<Vec<_>>>()?;
    EnvelopeReport::new("threeg", format!("{} fixed samples", sample.len()), &["t", "tau", "r", "s", "z"], points)
}

/// |k(t,r,s) − k(t,r,s+δ)| for δ, δ/2, δ/4, δ/8; continuity requires these
/// to decrease.
pub fn continuity_smoke(kernel: &PerturbedKernel, t: f64, r: f64, s: f64, delta: f64) -> Result<[f64; 4]> {
    let base = kernel.density(t, r, s)?;
    let mut out = [0.0; 4];
    for (k, o) in out.iter_mut().enumerate() {
        *o = (kernel.density(t, r, s + delta / f64::from(1u32 << k))? - base).abs();
    }
    Ok(out)
}
