//! Run configuration: a flat `key=value` file whose keys can each be
//! overridden by the command-line flag of the same name.

use std::collections::BTreeMap;
use std::path::PathBuf;

use hardy_kernel::couplings::{eta_from_kappa, kappa_critical, psi, ModelParams};
use hardy_kernel::error::{HardyError, Result};
use hardy_kernel::verification::{log_spaced, EnvelopeGrid};

/// Keys understood in config files and as flags.
pub const KEYS: &[&str] = &["zeta", "alpha", "eta", "kappa", "t", "r", "s", "grid", "rel-tol", "out", "oracle", "check", "beta", "n-max"];

/// Parses `key=value` lines; blank lines and `#` comments are skipped and
/// underscores in keys are read as dashes.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| HardyError::Config(format!("line {}: expected key=value, got {line:?}", no + 1)))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(HardyError::Config(format!("line {}: unknown key {key:?}", no + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

/// Either parameterization of the coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingInput {
    Eta(f64),
    Kappa(f64),
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub coupling: CouplingInput,
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub grid: Option<EnvelopeGrid>,
    pub rel_tol: f64,
    pub out: Option<PathBuf>,
    pub oracle: bool,
    pub checks: Vec<String>,
    pub beta: Option<f64>,
    pub n_max: usize,
}

fn number(key: &str, raw: &str) -> Result<f64> {
    raw.trim().parse().map_err(|_| HardyError::Config(format!("{key}: not a number: {raw:?}")))
}

fn list(key: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split(',').map(|x| number(key, x)).collect()
}

impl RunConfig {
    /// Merges flags over the config file and validates the result.
    pub fn resolve(flags: &BTreeMap<String, String>, file: &BTreeMap<String, String>) -> Result<Self> {
        let get = |key: &str| flags.get(key).or_else(|| file.get(key)).map(String::as_str);
        let num = |key: &str, default: f64| get(key).map_or(Ok(default), |v| number(key, v));
        let params = ModelParams::new(num("zeta", 1.0)?, num("alpha", 1.0)?)?;
        let coupling = match (get("eta"), get("kappa")) {
            (Some(_), Some(_)) => return Err(HardyError::Config("give either eta or kappa, not both".into())),
            (Some(e), None) => CouplingInput::Eta(number("eta", e)?),
            (None, Some(k)) => CouplingInput::Kappa(parse_kappa(&params, k)?),
            (None, None) => CouplingInput::Eta(0.0),
        };
        let lists = |key: &str, default: &[f64]| get(key).map_or(Ok(default.to_vec()), |v| list(key, v));
        let t = lists("t", &[1.0])?;
        let grid = match get("grid") {
            None => None,
            Some("default") => Some(EnvelopeGrid::default()),
            Some(n) => {
                let n: usize = n.parse().map_err(|_| HardyError::Config(format!("grid: expected `default` or a point count, got {n:?}")))?;
                if n == 0 {
                    return Err(HardyError::Config("grid: needs at least one point".into()));
                }
                let space = log_spaced(0.05, 20.0, n);
                Some(EnvelopeGrid { t: lists("t", &[0.25, 1.0, 4.0])?, r: space.clone(), s: space })
            }
        };
        let rel_tol = num("rel-tol", 1e-3)?;
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(HardyError::Config(format!("rel-tol must lie in (0, 1), got {rel_tol}")));
        }
        let oracle = match get("oracle") {
            None | Some("false") | Some("0") => false,
            Some("true") | Some("1") | Some("") => true,
            Some(v) => return Err(HardyError::Config(format!("oracle: expected true or false, got {v:?}"))),
        };
        let n_max = match get("n-max") {
            None => 60,
            Some(v) => v.parse().map_err(|_| HardyError::Config(format!("n-max: expected a count, got {v:?}")))?,
        };
        Ok(Self {
            params,
            coupling,
            t,
            r: lists("r", &[0.25, 1.0, 4.0])?,
            s: lists("s", &[1.0])?,
            grid,
            rel_tol,
            out: get("out").map(PathBuf::from),
            oracle,
            checks: get("check").unwrap_or("all").split(',').map(|c| c.trim().to_string()).collect(),
            beta: get("beta").map(|b| number("beta", b)).transpose()?,
            n_max,
        })
    }

    /// The ground-state exponent η, mapping κ through the branch inverse.
    pub fn eta(&self) -> Result<f64> {
        match self.coupling {
            CouplingInput::Eta(eta) => {
                self.params.check_eta(eta)?;
                Ok(eta)
            }
            CouplingInput::Kappa(kappa) => eta_from_kappa(&self.params, kappa),
        }
    }

    /// The raw coupling κ, which may exceed the critical value.
    pub fn kappa(&self) -> Result<f64> {
        match self.coupling {
            CouplingInput::Eta(eta) => psi(&self.params, eta),
            CouplingInput::Kappa(kappa) => Ok(kappa),
        }
    }

    /// Evaluation points: the grid if one is set, otherwise all
    /// combinations of the t, r and s lists (t-major).
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let grid = self.grid.clone().unwrap_or_else(|| EnvelopeGrid { t: self.t.clone(), r: self.r.clone(), s: self.s.clone() });
        grid.points().collect()
    }
}

/// A number, or a multiple of the critical coupling written `<x>kc`.
fn parse_kappa(params: &ModelParams, raw: &str) -> Result<f64> {
    match raw.trim().strip_suffix("kc") {
        Some(factor) => Ok(number("kappa", factor)? * kappa_critical(params)),
        None => number("kappa", raw),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config("# run\nzeta = 2\nalpha=1.5\nrel_tol=1e-4\n").unwrap();
        let cfg = RunConfig::resolve(&map(&[("zeta", "1")]), &file).unwrap();
        assert_eq!(cfg.params.zeta(), 1.0);
        assert_eq!(cfg.params.alpha(), 1.5);
        assert_eq!(cfg.rel_tol, 1e-4);
    }

    #[test]
    fn rejects_unknown_keys_and_double_coupling() {
        assert!(parse_config("colour=red").is_err());
        assert!(parse_config("no equals sign").is_err());
        assert!(RunConfig::resolve(&map(&[("eta", "0.5"), ("kappa", "0.1")]), &BTreeMap::new()).is_err());
    }

    #[test]
    fn kappa_in_critical_units() {
        let cfg = RunConfig::resolve(&map(&[("kappa", "1.1kc")]), &BTreeMap::new()).unwrap();
        let kc = kappa_critical(&cfg.params);
        assert!((cfg.kappa().unwrap() - 1.1 * kc).abs() < 1e-15);
        assert!(cfg.eta().is_err());
    }

    #[test]
    fn grid_sizes() {
        let cfg = RunConfig::resolve(&map(&[("grid", "default")]), &BTreeMap::new()).unwrap();
        assert_eq!(cfg.points().len(), 243);
        let cfg = RunConfig::resolve(&map(&[("grid", "2"), ("t", "1")]), &BTreeMap::new()).unwrap();
        assert_eq!(cfg.points().len(), 4);
        let cfg = RunConfig::resolve(&map(&[("r", "1,2"), ("s", "3")]), &BTreeMap::new()).unwrap();
        assert_eq!(cfg.points(), vec![(1.0, 1.0, 3.0), (1.0, 2.0, 3.0)]);
    }
}
