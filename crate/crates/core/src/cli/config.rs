//! Flat `key = value` configuration files. Keys are the long flag names.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::model::GraphParams;

pub const KEYS: &[&str] = &["N", "c", "critical", "alpha", "T", "runs", "seed", "threads", "out", "dt", "limit-runs", "top", "kmax", "eager"];

/// Partially specified parameters; `None` means "not given here".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub side: Option<u32>,
    pub c: Option<f64>,
    pub critical: Option<bool>,
    pub alpha: Option<f64>,
    pub horizon: Option<f64>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub dt: Option<f64>,
    pub limit_runs: Option<usize>,
    pub top: Option<usize>,
    pub kmax: Option<usize>,
    pub eager: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("cannot parse `{value}` for `{key}`: {e}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("cannot parse `{value}` for `{key}`: expected true or false")),
    }
}

impl Settings {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "N" => self.side = Some(parse(key, value)?),
            "c" => self.c = Some(parse(key, value)?),
            "critical" => self.critical = Some(parse_bool(key, value)?),
            "alpha" => {
                let alpha: f64 = parse(key, value)?;
                GraphParams::new(3, 1.0, alpha).map_err(|e| e.to_string())?;
                self.alpha = Some(alpha);
            }
            "T" => self.horizon = Some(parse(key, value)?),
            "runs" => self.runs = Some(parse(key, value)?),
            "seed" => self.seed = Some(parse(key, value)?),
            "threads" => self.threads = Some(parse(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "dt" => self.dt = Some(parse(key, value)?),
            "limit-runs" => self.limit_runs = Some(parse(key, value)?),
            "top" => self.top = Some(parse(key, value)?),
            "kmax" => self.kmax = Some(parse(key, value)?),
            "eager" => self.eager = Some(parse_bool(key, value)?),
            _ => return Err(format!("unknown key `{key}` (expected one of {})", KEYS.join(", "))),
        }
        Ok(())
    }

    /// `self` with every value given in `over` replaced.
    pub fn overridden_by(self, over: Settings) -> Settings {
        Settings {
            side: over.side.or(self.side),
            c: over.c.or(self.c),
            critical: over.critical.or(self.critical),
            alpha: over.alpha.or(self.alpha),
            horizon: over.horizon.or(self.horizon),
            runs: over.runs.or(self.runs),
            seed: over.seed.or(self.seed),
            threads: over.threads.or(self.threads),
            out: over.out.or(self.out),
            dt: over.dt.or(self.dt),
            limit_runs: over.limit_runs.or(self.limit_runs),
            top: over.top.or(self.top),
            kmax: over.kmax.or(self.kmax),
            eager: over.eager.or(self.eager),
        }
    }
}

pub fn parse_config(text: &str) -> Result<Settings, ConfigError> {
    let mut settings = Settings::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError { line, message: format!("expected `key = value`, found `{content}`") })?;
        settings.set(key.trim(), value.trim()).map_err(|message| ConfigError { line, message })?;
    }
    Ok(settings)
}

pub fn load_config(path: &Path) -> Result<Settings, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse_config("").unwrap(), Settings::default());
        assert_eq!(parse_config("# only a comment\n\n   \n").unwrap(), Settings::default());
    }

    #[test]
    fn values_and_comments() {
        let s = parse_config("N = 150  # side\nT=10\ncritical = true\nlimit-runs = 5000\nout = /tmp/x\n").unwrap();
        assert_eq!(s.side, Some(150));
        assert_eq!(s.horizon, Some(10.0));
        assert_eq!(s.critical, Some(true));
        assert_eq!(s.limit_runs, Some(5000));
        assert_eq!(s.out, Some(PathBuf::from("/tmp/x")));
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config("N = 150\nseed = 3\n").unwrap();
        let flags = Settings { side: Some(100), ..Settings::default() };
        let merged = file.overridden_by(flags);
        assert_eq!(merged.side, Some(100));
        assert_eq!(merged.seed, Some(3));
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_config("N = 10\nbogus = 1\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("unknown key"));
        let e = parse_config("# c\nN = ten\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_config("\n\nalpha = 3\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.to_string().starts_with("line 3:"));
        let e = parse_config("N 10\n").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(parse_config("config = x\n").is_err());
    }
}
