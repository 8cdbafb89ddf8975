//! The subcommands. Each returns the text it produces and the exit status;
//! library errors propagate and are mapped to exit codes by `main`.

use std::fmt::Write as _;

use hardy_kernel::bessel_kernel::p2_hardy;
use hardy_kernel::couplings::{kappa_critical, psi};
use hardy_kernel::error::{HardyError, Result};
use hardy_kernel::perturbation_engine::{toy_iterate, toy_perturbed, EngineSpec, TOY_TERMS};
use hardy_kernel::subordinated_kernel::{comparator_phi, p_alpha};
use hardy_kernel::verification::{
    blowup_probe, check_chapman_kolmogorov_on, check_finite_time_potential, check_identity_beta_on, check_invariance_on,
    check_normalization, check_supermedian_on, continuity_smoke, default_threeg_sample, fmt17, mass_bound_probe_on,
    sharp_bound_envelope_on, summary_line, threeg_envelope, BlowupStats, EnvelopeGrid, PerturbedKernel, Tightening, VerifySpec,
};

use crate::config::{CouplingInput, RunConfig};

/// Text for stdout, optional CSV for `--out`, and the exit status.
pub struct Output {
    pub stdout: String,
    pub csv: Option<String>,
    pub status: u8,
}

impl Output {
    /// A table: to `--out` when given, otherwise to stdout.
    fn table(cfg: &RunConfig, csv: String) -> Self {
        if cfg.out.is_some() {
            Self { stdout: String::new(), csv: Some(csv), status: 0 }
        } else {
            Self { stdout: csv, csv: None, status: 0 }
        }
    }
}

fn engine(cfg: &RunConfig) -> EngineSpec {
    EngineSpec::from_rel_tol(cfg.rel_tol)
}

/// `t,r,s,p_base,p_perturbed,comparator,ratio` for every point, plus the
/// α = 2 closed form in an `oracle` column when requested.
pub fn eval(cfg: &RunConfig) -> Result<Output> {
    let eta = cfg.eta()?;
    let params = cfg.params;
    if cfg.oracle && !params.is_local() {
        return Err(HardyError::Config("--oracle needs alpha = 2, where the perturbed kernel has a closed form".into()));
    }
    let kernel = PerturbedKernel::new(&params, eta, engine(cfg))?;
    let mut csv = String::from("t,r,s,p_base,p_perturbed,comparator,ratio");
    csv.push_str(if cfg.oracle { ",oracle\n" } else { "\n" });
    for (t, r, s) in cfg.points() {
        let base = p_alpha(&params, t, r, s)?;
        let value = kernel.density(t, r, s)?;
        let comparator = comparator_phi(&params, eta, t, r, s)?;
        let _ = write!(csv, "{},{},{},{},{},{},{}", fmt17(t), fmt17(r), fmt17(s), fmt17(base), fmt17(value), fmt17(comparator), fmt17(value / comparator));
        if cfg.oracle {
            let _ = write!(csv, ",{}", fmt17(p2_hardy(&params, eta, t, r, s)?));
        }
        csv.push('\n');
    }
    Ok(Output::table(cfg, csv))
}

/// Number of interior samples of the coupling branch.
const BRANCH_SAMPLES: usize = 20;

/// `eta,psi` along the branch up to the critical exponent, then
/// `critical,<κ_c>`.
pub fn couplings(cfg: &RunConfig) -> Result<Output> {
    let params = cfg.params;
    let top = params.eta_critical();
    // The branch starts at −M; for α = 2 (M = ∞) it is sampled from −(2ζ+1).
    let bottom = if params.is_local() { -params.dimension() } else { -params.m_bound() };
    let mut csv = String::from("eta,psi\n");
    for k in 1..=BRANCH_SAMPLES {
        let eta = bottom + (top - bottom) * k as f64 / BRANCH_SAMPLES as f64;
        let _ = writeln!(csv, "{},{}", fmt17(eta), fmt17(psi(&params, eta)?));
    }
    let _ = writeln!(csv, "critical,{}", fmt17(kappa_critical(&params)));
    Ok(Output::table(cfg, csv))
}

/// All checks in the order `all` runs them.
pub const CHECKS: &[&str] = &[
    "normalization",
    "invariance",
    "supermedian",
    "identity_beta",
    "finite_time_potential",
    "chapman_kolmogorov",
    "sharp_bound",
    "mass_bound",
    "threeg",
    "continuity",
    "tightening",
    "blowup",
];

/// Lazily built kernel for the configured coupling.
struct Lazy<'a> {
    cfg: &'a RunConfig,
    kernel: Option<PerturbedKernel>,
}

impl Lazy<'_> {
    fn get(&mut self) -> Result<&PerturbedKernel> {
        if self.kernel.is_none() {
            self.kernel = Some(PerturbedKernel::new(&self.cfg.params, self.cfg.eta()?, engine(self.cfg))?);
        }
        Ok(self.kernel.as_ref().expect("just built"))
    }
}

/// Whether `all` includes `check` for this configuration.
fn applicable(check: &str, cfg: &RunConfig) -> bool {
    let eta = match cfg.coupling {
        CouplingInput::Kappa(k) if k > kappa_critical(&cfg.params) => return check == "blowup",
        _ => cfg.eta().unwrap_or(f64::NAN),
    };
    match check {
        "supermedian" => eta >= 0.0,
        "identity_beta" => eta != 0.0,
        "threeg" => !cfg.params.is_local(),
        _ => true,
    }
}

/// Summary line and CSV rows of one check.
fn run_check(check: &str, cfg: &RunConfig, lazy: &mut Lazy) -> Result<(String, String)> {
    let spec = VerifySpec::from_rel_tol(cfg.rel_tol);
    let threshold = cfg.rel_tol;
    let t = cfg.t[0];
    // Two-point checks default to a small grid: they cost one integral per point.
    let small = EnvelopeGrid { t: vec![t], r: cfg.r.clone(), s: cfg.r.clone() };
    let grid = cfg.grid.clone();
    Ok(match check {
        "normalization" => {
            let rep = check_normalization(&cfg.params, &grid.unwrap_or(small), spec.quad_tol)?;
            (rep.summary(threshold), rep.to_csv())
        }
        "invariance" => {
            let rep = check_invariance_on(lazy.get()?, t, &cfg.r, spec.quad_tol)?;
            (rep.summary(threshold), rep.to_csv())
        }
        "supermedian" => {
            let rep = check_supermedian_on(lazy.get()?, t, &cfg.r, spec.quad_tol)?;
            (rep.summary(threshold), rep.to_csv())
        }
        "identity_beta" => {
            let kernel = lazy.get()?;
            let beta = cfg.beta.unwrap_or(0.5 * kernel.eta());
            let mut rows = String::new();
            let mut worst = 0.0f64;
            for &r in &cfg.r {
                let rep = check_identity_beta_on(kernel, beta, t, r, spec.quad_tol)?;
                worst = worst.max(rep.max_rel_residual);
                rows.push_str(&rep.to_csv());
            }
            (summary_line(worst < threshold, &format!("identity_beta(beta={beta})"), worst), rows)
        }
        "finite_time_potential" => {
            let beta = cfg.beta.unwrap_or(0.5 * (cfg.params.dimension() - cfg.params.alpha()));
            let mut rows = String::new();
            let mut worst = 0.0f64;
            for &r in &cfg.r {
                let rep = check_finite_time_potential(&cfg.params, beta, t, r, &spec)?;
                worst = worst.max(rep.max_rel_residual);
                rows.push_str(&rep.to_csv());
            }
            (summary_line(worst < threshold, &format!("finite_time_potential(beta={beta})"), worst), rows)
        }
        "chapman_kolmogorov" => {
            let rep = check_chapman_kolmogorov_on(lazy.get()?, &grid.unwrap_or(small), spec.quad_tol)?;
            (rep.summary(threshold), rep.to_csv())
        }
        "sharp_bound" => {
            let rep = sharp_bound_envelope_on(lazy.get()?, &grid.unwrap_or_default())?;
            let window = Some(100f64.ln());
            (rep.summary(window), rep.to_csv())
        }
        "mass_bound" => {
            let rep = mass_bound_probe_on(lazy.get()?, &cfg.t, &cfg.r, spec.quad_tol)?;
            (rep.summary(None), rep.to_csv())
        }
        "threeg" => {
            let rep = threeg_envelope(&cfg.params, &default_threeg_sample())?;
            (rep.summary(None), rep.to_csv())
        }
        "continuity" => {
            let (r, s) = (cfg.r[0], cfg.s[0]);
            let diffs = continuity_smoke(lazy.get()?, t, r, s, 0.1 * s)?;
            let pass = diffs.windows(2).all(|w| w[1] < w[0]);
            let mut rows = String::from("t,r,s,delta,difference\n");
            for (k, d) in diffs.iter().enumerate() {
                let _ = writeln!(rows, "{},{},{},{},{}", fmt17(t), fmt17(r), fmt17(s), fmt17(0.1 * s / f64::from(1u32 << k)), fmt17(*d));
            }
            (summary_line(pass, "continuity", diffs[3]), rows)
        }
        "tightening" => {
            let eta = cfg.eta()?;
            let coarse = check_invariance_on(lazy.get()?, t, &cfg.r, spec.quad_tol)?;
            let fine_spec = spec.tightened();
            let fine_kernel = PerturbedKernel::new(&cfg.params, eta, fine_spec.engine)?;
            let fine = check_invariance_on(&fine_kernel, t, &cfg.r, fine_spec.quad_tol)?;
            let rows = format!("{}{}", coarse.to_csv(), fine.to_csv());
            let tight = Tightening { coarse, fine };
            (tight.summary(), rows)
        }
        "blowup" => {
            let kc = kappa_critical(&cfg.params);
            let kappa = match cfg.coupling {
                CouplingInput::Kappa(k) => k,
                CouplingInput::Eta(_) => 1.1 * kc,
            };
            let report = blowup_probe(&cfg.params, kappa, BLOWUP_POINT, cfg.n_max, &engine(cfg))?;
            // Divergence is the expected finding above the critical coupling.
            let pass = report.converged == (kappa <= kc);
            (summary_line(pass, &format!("blowup(kappa={kappa})"), report.growth_ratio), series_csv(&report.terms))
        }
        other => return Err(HardyError::Config(format!("unknown check {other:?}; known: {}", CHECKS.join(", ")))),
    })
}

/// Point of the blow-up probe.
const BLOWUP_POINT: (f64, f64, f64) = (1.0, 0.5, 0.5);

fn series_csv(terms: &[f64]) -> String {
    let mut csv = String::from("n,term,partial_sum,growth\n");
    let mut sum = 0.0;
    for (n, &term) in terms.iter().enumerate() {
        sum += term;
        let growth = if n == 0 { f64::NAN } else { (term / terms[n - 1]).abs() };
        let _ = writeln!(csv, "{n},{},{},{}", fmt17(term), fmt17(sum), fmt17(growth));
    }
    csv
}

/// One `PASS|FAIL` line per check; exit status 1 if any fails.
pub fn verify(cfg: &RunConfig) -> Result<Output> {
    let checks: Vec<&str> = if cfg.checks.iter().any(|c| c == "all") {
        CHECKS.iter().copied().filter(|c| applicable(c, cfg)).collect()
    } else {
        cfg.checks.iter().map(String::as_str).collect()
    };
    let mut lazy = Lazy { cfg, kernel: None };
    let (mut stdout, mut csv, mut status) = (String::new(), String::new(), 0);
    for check in checks {
        let (summary, rows) = run_check(check, cfg, &mut lazy)?;
        if summary.starts_with("FAIL") {
            status = 1;
        }
        stdout.push_str(&summary);
        stdout.push('\n');
        csv.push_str(&rows);
        csv.push_str(&summary);
        csv.push('\n');
    }
    Ok(Output { stdout, csv: cfg.out.is_some().then_some(csv), status })
}

/// The series at the configured coupling (κ may exceed κ_c) at the first
/// configured point, with its growth statistics.
pub fn blowup(cfg: &RunConfig) -> Result<Output> {
    let kappa = cfg.kappa()?;
    let point = (cfg.t[0], cfg.r[0], cfg.s[0]);
    let report = blowup_probe(&cfg.params, kappa, point, cfg.n_max, &engine(cfg))?;
    let stats = BlowupStats::from_report(&report, 5, 15);
    let mut csv = series_csv(&report.terms);
    let _ = writeln!(csv, "kappa,{}", fmt17(kappa));
    let _ = writeln!(csv, "kappa_over_critical,{}", fmt17(kappa / kappa_critical(&cfg.params)));
    let _ = writeln!(csv, "converged,{}", report.converged);
    let _ = writeln!(csv, "growth_ratio,{}", fmt17(report.growth_ratio));
    let _ = writeln!(csv, "growth_run,{}", stats.growth_run);
    let _ = writeln!(csv, "s15_over_s5,{}", fmt17(stats.partial_sum_ratio));
    Ok(Output::table(cfg, csv))
}

/// The one-point example with kernel (t − s)_+: terms against
/// 1/(2n+1)!, and the perturbed values sinh 1 and sin π.
pub fn toy(cfg: &RunConfig) -> Result<Output> {
    let mut csv = String::from("n,term,exact\n");
    let mut factorial = 1.0;
    for n in 0..=8usize {
        if n > 0 {
            factorial *= ((2 * n) * (2 * n + 1)) as f64;
        }
        let _ = writeln!(csv, "{n},{},{}", fmt17(toy_iterate(n, 0.0, 1.0)?), fmt17(1.0 / factorial));
    }
    let _ = writeln!(csv, "sinh,{},{}", fmt17(toy_perturbed(1.0, 0.0, 1.0)?), fmt17(1f64.sinh()));
    let _ = writeln!(csv, "sin,{},{}", fmt17(toy_perturbed(-1.0, 0.0, std::f64::consts::PI)?), fmt17(0.0));
    let _ = writeln!(csv, "terms,{TOY_TERMS}");
    Ok(Output::table(cfg, csv))
}
