//! Run configuration: flat `key = value` files overlaid by command-line
//! flags, resolved into a validated [`SolverConfig`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use fkp_core::solver::{SeedKind, SeedSpec, SolverConfig};
use fkp_core::symbols::{Branch, SymbolParams, DEFAULT_LAMBDA};
use fkp_core::{FkpError, SpectralGrid};
use serde::Serialize;

/// Keys accepted in config files; each matches a flag name.
pub const KEYS: &[&str] = &[
    "alpha",
    "c",
    "sigma",
    "nu",
    "lambda",
    "n",
    "l",
    "tol",
    "max-iter",
    "seed",
    "seed-amplitude",
    "seed-width",
    "allow-supercritical",
    "dealias",
    "out",
];

/// A configuration problem attributed to one key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(key: &str, reason: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid value for `{}`: {}", self.key, self.reason)
    }
}

impl std::error::Error for ConfigError {}

impl From<FkpError> for ConfigError {
    fn from(e: FkpError) -> Self {
        match e {
            FkpError::InvalidConfig { key, reason } => ConfigError { key, reason },
            FkpError::UnsupportedEquation(reason) => ConfigError::new("sigma", reason),
            FkpError::InvalidGrid(reason) => ConfigError::new("n", reason),
            FkpError::InvalidExponent(p) => ConfigError::new("p", format!("{p} must exceed 1/2")),
            other => ConfigError::new("config", other.to_string()),
        }
    }
}

/// Raw `key -> value` pairs.
pub type RawConfig = BTreeMap<String, String>;

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<RawConfig, ConfigError> {
    let mut out = RawConfig::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new("config", format!("line {}: expected `key = value`", no + 1)))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::new(key, format!("unknown key on line {}", no + 1)));
        }
        out.insert(key.to_string(), value.trim().to_string());
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<RawConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
    parse_config_text(&text)
}

fn get<T: std::str::FromStr>(raw: &RawConfig, key: &str, default: T) -> Result<T, ConfigError> {
    match raw.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| ConfigError::new(key, format!("cannot parse `{v}`"))),
    }
}

fn get_bool(raw: &RawConfig, key: &str) -> Result<bool, ConfigError> {
    match raw.get(key).map(String::as_str) {
        None | Some("false") => Ok(false),
        Some("true") | Some("") => Ok(true),
        Some(v) => Err(ConfigError::new(key, format!("expected true or false, got `{v}`"))),
    }
}

pub fn parse_seed(value: &str) -> Result<SeedKind, ConfigError> {
    match value {
        "gaussian" => Ok(SeedKind::Gaussian),
        "exact-kp1" => Ok(SeedKind::ExactKp1),
        other => match other.strip_prefix("file:") {
            Some(path) if !path.is_empty() => Ok(SeedKind::File(PathBuf::from(path))),
            _ => Err(ConfigError::new(
                "seed",
                format!("`{other}` is not gaussian, exact-kp1 or file:PATH"),
            )),
        },
    }
}

/// The fully resolved settings of a solve, as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedRun {
    pub alpha: f64,
    pub c: f64,
    pub sigma: f64,
    pub nu: f64,
    pub lambda: f64,
    pub n: usize,
    pub l: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: String,
    pub seed_amplitude: f64,
    pub seed_width: f64,
    pub allow_supercritical: bool,
    pub dealias: bool,
    pub out: PathBuf,
}

impl ResolvedRun {
    pub fn grid(&self) -> Result<SpectralGrid, ConfigError> {
        SpectralGrid::square(self.n, self.l).map_err(|e| match e {
            FkpError::InvalidGrid(r) if r.starts_with("lx") => ConfigError::new("l", r),
            FkpError::InvalidGrid(r) => ConfigError::new("n", r),
            other => other.into(),
        })
    }

    pub fn params(&self) -> Result<SymbolParams, ConfigError> {
        let branch = Branch::from_sigma(self.sigma).map_err(|e| ConfigError::new("sigma", e.to_string()))?;
        let params = SymbolParams {
            alpha: self.alpha,
            c: self.c,
            branch,
            lambda: self.lambda,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn solver_config(&self) -> Result<SolverConfig, ConfigError> {
        let params = self.params()?;
        let mut cfg = SolverConfig::new(self.grid()?, params);
        cfg.nu = self.nu;
        cfg.tol = self.tol;
        cfg.max_iter = self.max_iter;
        cfg.seed = SeedSpec {
            kind: parse_seed(&self.seed)?,
            amplitude: Some(self.seed_amplitude),
            width: self.seed_width,
        };
        cfg.allow_supercritical = self.allow_supercritical;
        cfg.dealias = self.dealias;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Applies defaults to `raw` and validates every value.
pub fn resolve(raw: &RawConfig) -> Result<ResolvedRun, ConfigError> {
    let c: f64 = get(raw, "c", 1.0)?;
    let run = ResolvedRun {
        alpha: get(raw, "alpha", 2.0)?,
        c,
        sigma: get(raw, "sigma", -1.0)?,
        nu: get(raw, "nu", 2.0)?,
        lambda: get(raw, "lambda", DEFAULT_LAMBDA)?,
        n: get(raw, "n", 1024)?,
        l: get(raw, "l", 256.0)?,
        tol: get(raw, "tol", 1e-5)?,
        max_iter: get(raw, "max-iter", 200)?,
        seed: raw.get("seed").cloned().unwrap_or_else(|| "gaussian".into()),
        seed_amplitude: get(raw, "seed-amplitude", 3.0 * c)?,
        seed_width: get(raw, "seed-width", 2.0)?,
        allow_supercritical: get_bool(raw, "allow-supercritical")?,
        dealias: get_bool(raw, "dealias")?,
        out: PathBuf::from(raw.get("out").cloned().unwrap_or_else(|| "fkp-out".into())),
    };
    run.solver_config()?;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(pairs: &[(&str, &str)]) -> RawConfig {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn parses_files_with_comments() {
        let text = "# run\nalpha = 1.7\n\n  n=512 # grid\nseed = file:/tmp/x.fkpl\n";
        let r = parse_config_text(text).unwrap();
        assert_eq!(r["alpha"], "1.7");
        assert_eq!(r["n"], "512");
        assert_eq!(r["seed"], "file:/tmp/x.fkpl");
        assert_eq!(parse_config_text("bogus = 1").unwrap_err().key, "bogus");
        assert_eq!(parse_config_text("alpha 2").unwrap_err().key, "config");
    }

    #[test]
    fn defaults() {
        let r = resolve(&RawConfig::new()).unwrap();
        assert_eq!((r.alpha, r.c, r.sigma, r.nu), (2.0, 1.0, -1.0, 2.0));
        assert_eq!((r.n, r.l, r.max_iter), (1024, 256.0, 200));
        assert_eq!(r.seed_amplitude, 3.0);
        assert_eq!(r.lambda, 2.2e-16);
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            (raw(&[("alpha", "0.7")]), "alpha"),
            (raw(&[("sigma", "+1")]), "sigma"),
            (raw(&[("sigma", "0.5")]), "sigma"),
            (raw(&[("tol", "-1")]), "tol"),
            (raw(&[("n", "1000")]), "n"),
            (raw(&[("l", "0")]), "l"),
            (raw(&[("max-iter", "x")]), "max-iter"),
            (raw(&[("seed", "uniform")]), "seed"),
            (raw(&[("seed-width", "0")]), "seed-width"),
            (raw(&[("allow-supercritical", "maybe")]), "allow-supercritical"),
            (raw(&[("c", "-2")]), "c"),
        ];
        for (r, key) in cases {
            assert_eq!(resolve(&r).unwrap_err().key, key, "{r:?}");
        }
        assert!(resolve(&raw(&[("alpha", "0.7"), ("allow-supercritical", "true")])).is_ok());
    }
}
