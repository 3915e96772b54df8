//! Flat `key = value` config files and flag > file > default resolution.

use crate::checks::num;
use anyhow::{anyhow, bail, Context, Result};
use serde_json::Value;
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

/// Environment variable that overrides the output directory from the config
/// file or the default (an explicit `--out` still wins).
pub const OUT_ENV: &str = "FRACHARM_OUT";
pub const DEFAULT_OUT: &str = "out";
pub const DEFAULT_SEED: u64 = 7;

/// Every key any command reads, so one file can drive all of them.
pub const KNOWN_KEYS: &[&str] = &[
    "out", "seed", // shared
    "t_max", "points", "slope_lo", "slope_hi", "residual_points", "caputo_nodes", // figure1
    "pairs", "agree_pairs", "dirichlet_points", // green
    "s", "n", "basis", "tests", // eigen
    "ladder_hi", "ladder_lo", "ladder_points", "directions", // asymp
    "k", "oversample", "eps", "block_checks", // span
    "ell", "etas", "rank_tol", // approx
];

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    pub entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                bail!("line {}: empty key", i + 1);
            }
            if !KNOWN_KEYS.contains(&k) {
                bail!("line {}: unknown key '{k}'", i + 1);
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                bail!("line {}: duplicate key '{k}'", i + 1);
            }
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }
}

/// Resolves typed settings and records each resolved value for the manifest.
pub struct Resolver<'a> {
    file: &'a ConfigFile,
    used: RefCell<Vec<(String, Value)>>,
}

fn parse_val<T: std::str::FromStr>(key: &str, s: &str) -> Result<T> {
    s.parse().map_err(|_| anyhow!("{key}: cannot parse '{s}'"))
}

impl<'a> Resolver<'a> {
    pub fn new(file: &'a ConfigFile) -> Self {
        Resolver { file, used: RefCell::new(Vec::new()) }
    }

    fn pick<T: std::str::FromStr + Copy>(&self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        match (flag, self.file.get(key)) {
            (Some(v), _) => Ok(v),
            (None, Some(s)) => parse_val(key, s),
            (None, None) => Ok(default),
        }
    }

    pub fn f64(&self, key: &str, flag: Option<f64>, default: f64, range: RangeInclusive<f64>) -> Result<f64> {
        let v = self.pick(key, flag, default)?;
        if !v.is_finite() || !range.contains(&v) {
            bail!("{key} = {v} outside [{}, {}]", range.start(), range.end());
        }
        self.used.borrow_mut().push((key.into(), num(v)));
        Ok(v)
    }

    pub fn usize(&self, key: &str, flag: Option<usize>, default: usize, range: RangeInclusive<usize>) -> Result<usize> {
        let v = self.pick(key, flag, default)?;
        if !range.contains(&v) {
            bail!("{key} = {v} outside [{}, {}]", range.start(), range.end());
        }
        self.used.borrow_mut().push((key.into(), Value::from(v)));
        Ok(v)
    }

    /// Comma-separated list in the file, repeated or comma-separated flag.
    pub fn f64_list(&self, key: &str, flag: Option<Vec<f64>>, default: &[f64], range: RangeInclusive<f64>) -> Result<Vec<f64>> {
        let v = match (flag, self.file.get(key)) {
            (Some(v), _) => v,
            (None, Some(s)) => s.split(',').map(|x| parse_val(key, x.trim())).collect::<Result<Vec<f64>>>()?,
            (None, None) => default.to_vec(),
        };
        if v.is_empty() {
            bail!("{key}: empty list");
        }
        if let Some(bad) = v.iter().find(|x| !x.is_finite() || !range.contains(x)) {
            bail!("{key}: {bad} outside [{}, {}]", range.start(), range.end());
        }
        self.used.borrow_mut().push((key.into(), Value::Array(v.iter().map(|&x| num(x)).collect())));
        Ok(v)
    }

    pub fn seed(&self, flag: Option<u64>) -> Result<u64> {
        self.pick("seed", flag, DEFAULT_SEED)
    }

    /// `--out` > `$FRACHARM_OUT` > config `out` > `out`.
    pub fn out_dir(&self, flag: Option<PathBuf>) -> PathBuf {
        self.out_dir_with(flag, std::env::var_os(OUT_ENV).map(PathBuf::from))
    }

    pub fn out_dir_with(&self, flag: Option<PathBuf>, env: Option<PathBuf>) -> PathBuf {
        flag.or(env.filter(|p| !p.as_os_str().is_empty()))
            .or_else(|| self.file.get("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn inputs(&self) -> Vec<(String, Value)> {
        self.used.borrow().clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_precedence() {
        let c = ConfigFile::parse("# comment\npairs = 50\n\nt_max=1.5 # trailing\n").unwrap();
        let r = Resolver::new(&c);
        assert_eq!(r.usize("pairs", None, 10, 1..=100).unwrap(), 50);
        assert_eq!(r.usize("pairs", Some(7), 10, 1..=100).unwrap(), 7);
        assert_eq!(r.f64("t_max", None, 2.0, 0.0..=10.0).unwrap(), 1.5);
        assert_eq!(r.f64("eps", None, 0.25, 0.0..=1.0).unwrap(), 0.25);
        assert!(r.f64("t_max", Some(20.0), 2.0, 0.0..=10.0).is_err());
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ConfigFile::parse("pairs 5").is_err());
        assert!(ConfigFile::parse("bogus = 1").is_err());
        assert!(ConfigFile::parse("seed = 1\nseed = 2").is_err());
    }

    #[test]
    fn out_dir_order() {
        let c = ConfigFile::parse("out = cfg").unwrap();
        let r = Resolver::new(&c);
        assert_eq!(r.out_dir_with(None, None), PathBuf::from("cfg"));
        assert_eq!(r.out_dir_with(None, Some("env".into())), PathBuf::from("env"));
        assert_eq!(r.out_dir_with(Some("flag".into()), Some("env".into())), PathBuf::from("flag"));
        let empty = ConfigFile::default();
        assert_eq!(Resolver::new(&empty).out_dir_with(None, None), PathBuf::from(DEFAULT_OUT));
    }
}
