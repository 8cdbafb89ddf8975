//! Schrödinger perturbation of heat kernels: the Duhamel series for the
//! Hardy potential Ψ_ζ(η) z^{−α} over p_ζ^(α), its resolvent sum, the
//! truncated-potential construction for repulsive couplings, the
//! exponential lower bound, and a generic series engine for finite spaces.
//!
//! The Hardy machinery works at unit time and rescales (see [`lattice`]):
//! a [`HardySolution`] is built once per (ζ, α, η) and then evaluates any
//! (t, r, s) cheaply.

mod lattice;
mod truncation;
mod volterra;

pub use lattice::{DuhamelLattice, LatticeSpec};
pub use truncation::TruncationCheck;
pub use volterra::{duhamel_series, toy_base, toy_iterate, toy_perturbed, FiniteKernel, ToyKernel, TOY_TERMS};

use std::f64::consts::PI;

use crate::bessel_kernel::BesselKernel;
use crate::couplings::{psi, ModelParams};
use crate::error::{HardyError, Result};
use crate::krylov::KrylovStats;
use crate::subordinated_kernel::p_alpha;

/// A base kernel cheap enough to evaluate millions of times, with reference
/// measure z^{2ζ} dz.
pub trait KernelEvaluator {
    fn zeta(&self) -> f64;
    fn alpha(&self) -> f64;
    /// ln p(t, r, s) for t, r, s > 0.
    fn ln_density(&self, t: f64, r: f64, s: f64) -> f64;
    /// ln of the reference-measure density z^{2ζ}.
    fn ln_measure(&self, z: f64) -> f64 {
        2.0 * self.zeta() * z.ln()
    }
}

impl KernelEvaluator for BesselKernel {
    fn zeta(&self) -> f64 {
        BesselKernel::zeta(self)
    }
    fn alpha(&self) -> f64 {
        2.0
    }
    fn ln_density(&self, t: f64, r: f64, s: f64) -> f64 {
        BesselKernel::ln_density(self, t, r, s)
    }
}

/// The base kernels with a fast evaluator.
#[derive(Debug, Clone, Copy)]
pub enum BaseKernel {
    /// α = 2.
    Bessel(BesselKernel),
    /// ζ = 1, α = 1: the radial part of the three-dimensional Cauchy kernel.
    Cauchy3,
}

impl BaseKernel {
    /// # Errors
    /// Configuration error for parameters without a closed-form kernel.
    pub fn new(params: &ModelParams) -> Result<Self> {
        if params.is_local() {
            Ok(Self::Bessel(BesselKernel::new(params.zeta())?))
        } else if params.zeta() == 1.0 && params.alpha() == 1.0 {
            Ok(Self::Cauchy3)
        } else {
            Err(HardyError::Config(format!(
                "the perturbation engine needs a closed-form base kernel (alpha = 2, or zeta = alpha = 1); \
                 got zeta = {}, alpha = {}",
                params.zeta(),
                params.alpha()
            )))
        }
    }
}

impl KernelEvaluator for BaseKernel {
    fn zeta(&self) -> f64 {
        match self {
            Self::Bessel(k) => k.zeta(),
            Self::Cauchy3 => 1.0,
        }
    }

    fn alpha(&self) -> f64 {
        match self {
            Self::Bessel(_) => 2.0,
            Self::Cauchy3 => 1.0,
        }
    }

    #[inline]
    fn ln_density(&self, t: f64, r: f64, s: f64) -> f64 {
        match self {
            Self::Bessel(k) => k.ln_density(t, r, s),
            Self::Cauchy3 => {
                let (a, b) = (r - s, r + s);
                (4.0 * t / PI).ln() - (t * t + a * a).ln() - (t * t + b * b).ln()
            }
        }
    }
}

/// Tolerances of the perturbation engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineSpec {
    /// Relative tolerance of the series stop rule.
    pub rel_tol: f64,
    /// Resolution of the Duhamel lattice.
    pub lattice: LatticeSpec,
    /// Most series terms ever computed.
    pub max_terms: usize,
    /// Consecutive non-decreasing terms after which the series is declared
    /// divergent.
    pub divergence_run: usize,
    /// Agreement required between the resolvent sum and the
    /// truncated-potential limit for repulsive couplings.
    pub truncation_gate: f64,
}

impl Default for EngineSpec {
    fn default() -> Self {
        Self::from_rel_tol(1e-3)
    }
}

impl EngineSpec {
    /// Engine settings whose discretisation error is around `rel_tol`.
    pub fn from_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            lattice: LatticeSpec::for_tolerance(rel_tol),
            max_terms: 120,
            divergence_run: 40,
            truncation_gate: 1e-3,
        }
    }

    /// Threshold of the series stop rule. The neglected tail after a term
    /// of relative size tol is about tol·g/(1 − g) for growth g < 0.9, so the
    /// rule runs a decade below `rel_tol`.
    pub fn series_tol(&self) -> f64 {
        0.1 * self.rel_tol
    }

    pub fn with_lattice(mut self, lattice: LatticeSpec) -> Self {
        self.lattice = lattice;
        self
    }
}

/// The Duhamel series at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesReport {
    /// p_n(t, r, s) for n = 0, 1, ….
    pub terms: Vec<f64>,
    /// Number of terms summed.
    pub truncation_index: usize,
    pub converged: bool,
    /// |p_{n+1}/p_n| for the last pair of terms.
    pub growth_ratio: f64,
}

impl SeriesReport {
    /// Σ_{n < truncation_index} p_n.
    pub fn partial_sum(&self, n: usize) -> f64 {
        self.terms.iter().take(n).sum()
    }

    pub fn sum(&self) -> f64 {
        self.partial_sum(self.truncation_index)
    }

    /// Applies the stop rule to a sequence of terms: the first n ≥ 3 with
    /// |p_n| ≤ tol·|Σ| and growth below 0.9 converges; `run` consecutive
    /// growth ratios ≥ 1 declare divergence.
    pub fn from_terms(terms: Vec<f64>, tol: f64, run: usize) -> Self {
        let mut sum = 0.0;
        let mut growth = f64::NAN;
        let mut streak = 0;
        for (n, &p) in terms.iter().enumerate() {
            sum += p;
            if n >= 1 {
                growth = if terms[n - 1] != 0.0 { (p / terms[n - 1]).abs() } else { f64::INFINITY };
                if p == 0.0 && terms[n - 1] == 0.0 {
                    growth = 0.0;
                }
                streak = if growth >= 1.0 { streak + 1 } else { 0 };
            }
            if n >= 3 && p.abs() <= tol * sum.abs() && growth < 0.9 {
                return Self { truncation_index: n + 1, converged: true, growth_ratio: growth, terms };
            }
            if n >= 1 && terms[0] == sum && p == 0.0 {
                // Vanishing potential: the series has one term.
                return Self { truncation_index: 1, converged: true, growth_ratio: 0.0, terms };
            }
            if streak >= run {
                return Self { truncation_index: n + 1, converged: false, growth_ratio: growth, terms };
            }
        }
        Self { truncation_index: terms.len(), converged: false, growth_ratio: growth, terms }
    }
}

/// How the value of a [`HardySolution`] is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumMethod {
    /// The Duhamel series converged at the point.
    Series,
    /// The series did not converge at the point (it alternates with
    /// growing terms for strongly repulsive couplings, and converges too
    /// slowly at the critical coupling); the value is the resolvent
    /// (I − K)^{−1} applied to the base kernel, which is the sum of the
    /// series wherever the latter converges.
    Resolvent,
}

/// One evaluation of the perturbed kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub base: f64,
    pub method: SumMethod,
    pub series: SeriesReport,
    /// True when a rescaled coordinate lies outside the lattice window; the
    /// value is still computed, from clamped table data.
    pub clamped: bool,
}

/// Table-level iterates G_n of the Duhamel map, stored as H_n = G_n/W.
#[derive(Debug, Clone)]
struct Iterates {
    tables: Vec<Vec<f64>>,
}

impl Iterates {
    /// Iterates until the sup-norm of G_n on [10⁻², 10²]² drops below
    /// 0.1·series_tol of the partial sum with decreasing terms, diverges, or hits
    /// `max_terms`.
    fn run<K: KernelEvaluator>(lattice: &DuhamelLattice<K>, spec: &EngineSpec) -> Self {
        let mut tables = vec![lattice.identity_table()];
        let mut sum = tables[0].clone();
        let (lo, hi) = (1e-2, 1e2);
        let mut prev = lattice.sup_norm(&tables[0], lo, hi);
        let mut streak = 0;
        while tables.len() < spec.max_terms {
            let mut next = vec![0.0; sum.len()];
            lattice.apply(tables.last().expect("nonempty"), &mut next);
            for (a, b) in sum.iter_mut().zip(&next) {
                *a += b;
            }
            let m = lattice.sup_norm(&next, lo, hi);
            let growth = m / prev;
            prev = m;
            tables.push(next);
            streak = if growth >= 1.0 { streak + 1 } else { 0 };
            let n = tables.len() - 1;
            if m == 0.0 || (n >= 3 && growth < 0.9 && m <= 0.1 * spec.series_tol() * lattice.sup_norm(&sum, lo, hi)) {
                // One spare term so point-level rules can see the decay.
                let mut extra = vec![0.0; sum.len()];
                lattice.apply(tables.last().expect("nonempty"), &mut extra);
                tables.push(extra);
                break;
            }
            if streak >= spec.divergence_run || !m.is_finite() {
                break;
            }
        }
        Self { tables }
    }
}

/// The perturbed kernel p_{ζ,η}^(α) for one (ζ, α, η), ready to be
/// evaluated anywhere.
#[derive(Debug, Clone)]
pub struct HardySolution {
    params: ModelParams,
    eta: f64,
    kappa: f64,
    spec: EngineSpec,
    lattice: DuhamelLattice<BaseKernel>,
    iterates: Iterates,
    resolvent: Vec<f64>,
    resolvent_stats: KrylovStats,
    truncation: Option<TruncationCheck>,
}

impl HardySolution {
    /// Builds the lattice, the series iterates and the resolvent sum. For
    /// η < 0 it also runs the truncated-potential construction and requires
    /// agreement within `spec.truncation_gate`.
    ///
    /// # Errors
    /// Domain errors off the admissible branch; configuration errors for
    /// kernels without a fast evaluator; convergence errors when the linear
    /// solve stalls or the truncated limit disagrees with the resolvent.
    pub fn new(params: &ModelParams, eta: f64, spec: EngineSpec) -> Result<Self> {
        params.check_branch(eta)?;
        let kappa = psi(params, eta)?;
        let kernel = BaseKernel::new(params)?;
        let lattice = DuhamelLattice::build(kernel, kappa, eta, spec.lattice)?;
        let iterates = if eta == 0.0 { Iterates { tables: vec![lattice.identity_table()] } } else { Iterates::run(&lattice, &spec) };
        let (resolvent, resolvent_stats) = if eta == 0.0 {
            (lattice.identity_table(), KrylovStats { iterations: 0, relative_residual: 0.0 })
        } else {
            lattice.solve(1e-6 * spec.rel_tol)?
        };
        let truncation = if eta < 0.0 {
            let check = truncation::run(&lattice, &resolvent, &spec)?;
            if !(check.discrepancy <= spec.truncation_gate) {
                return Err(HardyError::convergence(
                    "truncated-potential limit",
                    format!(
                        "discrepancy {:e} with the resolvent sum exceeds {:e} (levels up to {:e})",
                        check.discrepancy,
                        spec.truncation_gate,
                        check.levels.last().copied().unwrap_or(0.0)
                    ),
                ));
            }
            Some(check)
        } else {
            None
        };
        Ok(Self { params: *params, eta, kappa, spec, lattice, iterates, resolvent, resolvent_stats, truncation })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn spec(&self) -> &EngineSpec {
        &self.spec
    }

    pub fn lattice(&self) -> &DuhamelLattice<BaseKernel> {
        &self.lattice
    }

    pub fn resolvent_stats(&self) -> KrylovStats {
        self.resolvent_stats
    }

    /// The truncated-potential cross-check (η < 0 only).
    pub fn truncation(&self) -> Option<&TruncationCheck> {
        self.truncation.as_ref()
    }

    /// Number of table-level series iterates computed.
    pub fn table_terms(&self) -> usize {
        self.iterates.tables.len()
    }

    fn unit_frame(&self, t: f64, r: f64, s: f64) -> Result<(f64, f64, f64)> {
        if !(t > 0.0 && t.is_finite() && r > 0.0 && s > 0.0 && r.is_finite() && s.is_finite()) {
            return Err(HardyError::domain(format!("need t, r, s > 0, got ({t}, {r}, {s})")));
        }
        let alpha = self.params.alpha();
        let c = t.powf(-1.0 / alpha);
        Ok((c.powf(self.params.dimension()), r * c, s * c))
    }

    /// p_{ζ,η}(t, r, s) with its series report.
    ///
    /// # Errors
    /// Domain errors for invalid points; non-finite results.
    pub fn evaluate(&self, t: f64, r: f64, s: f64) -> Result<Evaluation> {
        let (scale, x, y) = self.unit_frame(t, r, s)?;
        let kernel = self.lattice.kernel();
        let base_unit = kernel.ln_density(1.0, x, y).exp();
        let spec = self.lattice.spec();
        let clamped = x.min(y) < spec.x_min || x.max(y) > spec.x_max;
        let base = scale * base_unit;
        let row = self.lattice.row_weights(&self.lattice.row_at(x, y));
        let w = self.lattice.weight(x, y);
        let mut terms = vec![base];
        if self.eta != 0.0 {
            for table in &self.iterates.tables[..self.iterates.tables.len() - 1] {
                terms.push(base * w * self.lattice.apply_weights(&row, table));
            }
        }
        let series = SeriesReport::from_terms(terms, self.spec.series_tol(), self.spec.divergence_run);
        let (value, method) = if series.converged {
            (series.sum(), SumMethod::Series)
        } else {
            (base * (1.0 + w * self.lattice.apply_weights(&row, &self.resolvent)), SumMethod::Resolvent)
        };
        if !value.is_finite() {
            return Err(HardyError::NonFinite { context: "perturbed kernel".into(), at: r });
        }
        Ok(Evaluation { value, base, method, series, clamped })
    }

    pub fn density(&self, t: f64, r: f64, s: f64) -> Result<f64> {
        Ok(self.evaluate(t, r, s)?.value)
    }

    /// The first Duhamel iterate for the potential |Ψ(η)| z^{−α}.
    pub fn first_iterate_abs(&self, t: f64, r: f64, s: f64) -> Result<f64> {
        let (scale, x, y) = self.unit_frame(t, r, s)?;
        let base = scale * self.lattice.kernel().ln_density(1.0, x, y).exp();
        let row = self.lattice.row_at(x, y);
        let g1 = self.lattice.weight(x, y) * self.lattice.apply_row(&row, &self.iterates.tables[0]);
        Ok((base * g1).abs())
    }

    /// p_alpha·exp(−p₁/p_alpha) with p₁ the first iterate for |q|.
    pub fn cmc_lower_bound(&self, t: f64, r: f64, s: f64) -> Result<f64> {
        let (scale, x, y) = self.unit_frame(t, r, s)?;
        let base = scale * self.lattice.kernel().ln_density(1.0, x, y).exp();
        Ok(base * (-self.first_iterate_abs(t, r, s)? / base).exp())
    }
}

/// p_{ζ,η}^(α)(t, r, s) and its series report, building a fresh
/// [`HardySolution`]; η = 0 returns p_alpha without building anything.
///
/// # Errors
/// See [`HardySolution::new`] and [`HardySolution::evaluate`].
pub fn hardy_perturbed(params: &ModelParams, eta: f64, t: f64, r: f64, s: f64, spec: EngineSpec) -> Result<(f64, SeriesReport)> {
    if eta == 0.0 {
        params.check_branch(eta)?;
        let p = p_alpha(params, t, r, s)?;
        return Ok((p, SeriesReport { terms: vec![p], truncation_index: 1, converged: true, growth_ratio: 0.0 }));
    }
    let e = HardySolution::new(params, eta, spec)?.evaluate(t, r, s)?;
    Ok((e.value, e.series))
}

/// p_n(t, r, s), the n-th Duhamel iterate for the potential Ψ(η) z^{−α}.
pub fn duhamel_iterate(params: &ModelParams, eta: f64, n: usize, t: f64, r: f64, s: f64, spec: EngineSpec) -> Result<f64> {
    params.check_branch(eta)?;
    let kernel = BaseKernel::new(params)?;
    let lattice = DuhamelLattice::build(kernel, psi(params, eta)?, eta, spec.lattice)?;
    let tables = iterate_tables(&lattice, n.saturating_sub(1));
    point_terms(&lattice, &tables, t, r, s).map(|terms| terms[n])
}

/// cmc lower bound p_alpha·exp(−p₁(|q|)/p_alpha) for a repulsive coupling.
pub fn cmc_lower_bound(params: &ModelParams, eta: f64, t: f64, r: f64, s: f64, spec: EngineSpec) -> Result<f64> {
    if !(eta < 0.0) {
        return Err(HardyError::domain(format!("the lower bound is for eta < 0, got {eta}")));
    }
    params.check_branch(eta)?;
    let kernel = BaseKernel::new(params)?;
    let lattice = DuhamelLattice::build(kernel, psi(params, eta)?.abs(), eta, spec.lattice)?;
    let terms = point_terms(&lattice, &iterate_tables(&lattice, 0), t, r, s)?;
    Ok(terms[0] * (-terms[1] / terms[0]).exp())
}

/// H₀, …, H_m: m applications of the lattice map.
fn iterate_tables<K: KernelEvaluator>(lattice: &DuhamelLattice<K>, m: usize) -> Vec<Vec<f64>> {
    let mut tables = vec![lattice.identity_table()];
    for _ in 0..m {
        let mut next = vec![0.0; tables[0].len()];
        lattice.apply(tables.last().expect("nonempty"), &mut next);
        tables.push(next);
    }
    tables
}

/// p_0, …, p_{m+1} at (t, r, s) from tables H₀..H_m.
fn point_terms<K: KernelEvaluator>(lattice: &DuhamelLattice<K>, tables: &[Vec<f64>], t: f64, r: f64, s: f64) -> Result<Vec<f64>> {
    if !(t > 0.0 && r > 0.0 && s > 0.0) {
        return Err(HardyError::domain(format!("need t, r, s > 0, got ({t}, {r}, {s})")));
    }
    let kernel = lattice.kernel();
    let alpha = kernel.alpha();
    let c = t.powf(-1.0 / alpha);
    let (x, y) = (r * c, s * c);
    let base = c.powf(2.0 * kernel.zeta() + 1.0) * kernel.ln_density(1.0, x, y).exp();
    let row = lattice.row_at(x, y);
    let w = lattice.weight(x, y);
    let mut terms = vec![base];
    terms.extend(tables.iter().map(|h| base * w * lattice.apply_row(&row, h)));
    Ok(terms)
}

/// Runs the Duhamel series for the raw potential κ z^{−α}, κ possibly above
/// κ_c, at one point. Divergence is reported, not raised.
///
/// # Errors
/// Configuration errors for kernels without a fast evaluator.
pub fn series_for_kappa(params: &ModelParams, kappa: f64, t: f64, r: f64, s: f64, n_max: usize, spec: EngineSpec) -> Result<SeriesReport> {
    let kernel = BaseKernel::new(params)?;
    // The critical exponent absorbs the strongest singularity any admissible
    // coupling produces at the origin.
    let eta_w = if kappa > 0.0 { params.eta_critical() } else { 0.0 };
    let lattice = DuhamelLattice::build(kernel, kappa, eta_w, spec.lattice)?;
    let tables = iterate_tables(&lattice, n_max.saturating_sub(1));
    let terms = point_terms(&lattice, &tables, t, r, s)?;
    let mut report = SeriesReport::from_terms(terms, spec.series_tol(), spec.divergence_run);
    if !report.converged {
        report.truncation_index = report.terms.len();
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel_kernel::HardyBesselKernel;

    #[test]
    fn lattice_matches_exact_quadratic_case() {
        let zeta = 1.5;
        let params = ModelParams::new(zeta, 2.0).unwrap();
        for &eta in &[0.5, -0.5] {
            let kappa = psi(&params, eta).unwrap();
            let lat = DuhamelLattice::build(BaseKernel::new(&params).unwrap(), kappa, eta, LatticeSpec::default()).unwrap();
            let (g, _) = lat.solve(1e-10).unwrap();
            let exact = HardyBesselKernel::new(zeta, eta).unwrap();
            let k = BesselKernel::new(zeta).unwrap();
            for &r in &[0.1, 0.5, 1.0, 3.0] {
                for &s in &[0.2, 1.0, 2.0] {
                    let v = lat.nystrom(&g, r, s) * k.density(1.0, r, s);
                    let e = exact.density(1.0, r, s);
                    assert!(((v - e) / e).abs() < 5e-4, "eta={eta} r={r} s={s}");
                }
            }
        }
    }

    #[test]
    fn stop_rule() {
        let geometric: Vec<f64> = (0..30).map(|n| 0.5f64.powi(n)).collect();
        let rep = SeriesReport::from_terms(geometric, 1e-3, 40);
        assert!(rep.converged);
        assert_eq!(rep.truncation_index, 10);
        assert!((rep.growth_ratio - 0.5).abs() < 1e-15);
        let growing: Vec<f64> = (0..50).map(|n| 1.1f64.powi(n)).collect();
        let rep = SeriesReport::from_terms(growing, 1e-3, 40);
        assert!(!rep.converged);
        assert_eq!(rep.truncation_index, 41);
        let single = SeriesReport::from_terms(vec![2.0, 0.0, 0.0, 0.0], 1e-3, 40);
        assert!(single.converged && single.sum() == 2.0);
    }
}
