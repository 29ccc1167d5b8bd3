//! Command-line front end.
//!
//! Exit codes: 0 when every assertion of the verb passes, 1 when one fails
//! (a `failures.json` report is written next to the manifest), 2 for usage,
//! configuration and domain errors.

pub mod commands;
pub mod config;
pub mod manifest;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::model::{critical_coupling, GraphParams};
use config::{load_config, Settings};
use manifest::{unix_ms, write_atomic, write_json, FailureReport, RunManifest, SuiteOutcome};

pub const OUT_ENV: &str = "CTL_OUT";
pub const DEFAULT_OUT: &str = "ctl-out";

#[derive(Debug, Parser)]
#[command(name = "ctl", version, about = "Critical geometric random graph on the 2-torus: simulation and verification")]
struct Cli {
    #[command(subcommand)]
    verb: VerbArgs,
}

#[derive(Debug, Subcommand)]
enum VerbArgs {
    /// Exact identities: expected degree, neighbor-mass bound, return probability, two-step dominance
    Verify(Flags),
    /// Exact TV profile of P^k against the mixing bound
    Mixing(Flags),
    /// One exploration trace
    Explore(Flags),
    /// Walk moments, component-vs-excursion KS and growth counts
    Campaign(Flags),
    /// Excursion lengths of the reflected parabolic-drift Brownian motion
    Limit(Flags),
    /// Max-generation tail of the dominating branching process
    Branching(Flags),
    /// Law of the walker position v_j against uniform
    Uniformity(Flags),
}

#[derive(Debug, Clone, Default, Args)]
struct Flags {
    #[arg(long = "N", value_name = "SIDE")]
    side: Option<u32>,
    #[arg(long)]
    c: Option<f64>,
    /// Use c = 1 / (4 ln 2)
    #[arg(long)]
    critical: bool,
    #[arg(long)]
    alpha: Option<f64>,
    /// Horizon in units of n^{2/3}
    #[arg(long = "T", value_name = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "limit-runs")]
    limit_runs: Option<usize>,
    #[arg(long, value_name = "J")]
    top: Option<usize>,
    #[arg(long)]
    kmax: Option<usize>,
    /// explore: realize the whole graph first and also write graph.edges
    #[arg(long)]
    eager: bool,
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

impl Flags {
    fn settings(&self) -> Settings {
        Settings {
            side: self.side,
            c: self.c,
            critical: self.critical.then_some(true),
            alpha: self.alpha,
            horizon: self.horizon,
            runs: self.runs,
            seed: self.seed,
            threads: self.threads,
            out: self.out.clone(),
            dt: self.dt,
            limit_runs: self.limit_runs,
            top: self.top,
            kmax: self.kmax,
            eager: self.eager.then_some(true),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Verify,
    Mixing,
    Explore,
    Campaign,
    Limit,
    Branching,
    Uniformity,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Verify => "verify",
            Verb::Mixing => "mixing",
            Verb::Explore => "explore",
            Verb::Campaign => "campaign",
            Verb::Limit => "limit",
            Verb::Branching => "branching",
            Verb::Uniformity => "uniformity",
        }
    }

    fn default_side(self) -> u32 {
        match self {
            Verb::Verify => 101,
            Verb::Mixing => 25,
            Verb::Branching => 10_000,
            Verb::Uniformity => 15,
            Verb::Explore | Verb::Campaign | Verb::Limit => 150,
        }
    }

    fn default_runs(self) -> usize {
        match self {
            Verb::Branching => 200_000,
            Verb::Uniformity => 1_000_000,
            Verb::Campaign => 2000,
            _ => 1,
        }
    }

    fn default_kmax(self) -> usize {
        match self {
            Verb::Verify => 8,
            Verb::Mixing => 40,
            Verb::Branching => 50,
            _ => 20,
        }
    }
}

/// Fully resolved parameters of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub verb: Verb,
    pub params: GraphParams,
    pub horizon: f64,
    pub runs: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub dt: f64,
    pub limit_runs: usize,
    pub top: usize,
    pub kmax: usize,
    pub eager: bool,
}

impl Resolved {
    /// Parameters as `key -> value` with the flag names as keys. `out` and
    /// `threads` are left out because they do not affect results.
    pub fn param_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("N".into(), self.params.side.to_string());
        if self.params.critical {
            m.insert("critical".into(), "true".into());
        } else {
            m.insert("c".into(), self.params.c.to_string());
        }
        m.insert("alpha".into(), self.params.alpha.to_string());
        m.insert("T".into(), self.horizon.to_string());
        m.insert("runs".into(), self.runs.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("dt".into(), self.dt.to_string());
        m.insert("limit-runs".into(), self.limit_runs.to_string());
        m.insert("top".into(), self.top.to_string());
        m.insert("kmax".into(), self.kmax.to_string());
        m.insert("eager".into(), self.eager.to_string());
        m
    }

    pub fn config_text(&self) -> String {
        let mut s = format!("# ctl {} parameters\n", self.verb.name());
        for (k, v) in self.param_map() {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}

pub fn resolve(verb: Verb, settings: Settings, env_out: Option<PathBuf>) -> Result<Resolved, String> {
    let side = settings.side.unwrap_or(verb.default_side());
    let alpha = settings.alpha.unwrap_or(1.0);
    let critical = settings.critical.unwrap_or(false);
    let params = match (critical, settings.c) {
        (true, Some(c)) if c != critical_coupling() => return Err(format!("--critical conflicts with --c {c}")),
        (_, Some(c)) if !critical => GraphParams::new(side, c, alpha),
        _ => GraphParams::new(side, critical_coupling(), alpha).map(|p| GraphParams { critical: true, ..p }),
    }
    .map_err(|e| e.to_string())?;
    Ok(Resolved {
        verb,
        params,
        horizon: settings.horizon.unwrap_or(10.0),
        runs: settings.runs.unwrap_or(verb.default_runs()),
        seed: settings.seed.unwrap_or(42),
        threads: settings.threads,
        out: settings.out.or(env_out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        dt: settings.dt.unwrap_or(crate::limit::DEFAULT_DT),
        limit_runs: settings.limit_runs.unwrap_or(5000),
        top: settings.top.unwrap_or(3),
        kmax: settings.kmax.unwrap_or(verb.default_kmax()),
        eager: settings.eager.unwrap_or(false),
    })
}

/// What a verb produced.
pub struct VerbOutput {
    pub suites: Vec<SuiteOutcome>,
    /// `(file name, contents)` pairs written to the output directory.
    pub files: Vec<(String, Vec<u8>)>,
    pub provenance: Vec<String>,
}

/// Parses `args`, runs the verb and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<String> = args.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (verb, flags) = match cli.verb {
        VerbArgs::Verify(f) => (Verb::Verify, f),
        VerbArgs::Mixing(f) => (Verb::Mixing, f),
        VerbArgs::Explore(f) => (Verb::Explore, f),
        VerbArgs::Campaign(f) => (Verb::Campaign, f),
        VerbArgs::Limit(f) => (Verb::Limit, f),
        VerbArgs::Branching(f) => (Verb::Branching, f),
        VerbArgs::Uniformity(f) => (Verb::Uniformity, f),
    };
    let file = match &flags.config {
        Some(path) => match load_config(path) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: config {e}");
                return 2;
            }
        },
        None => Settings::default(),
    };
    let env_out = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let resolved = match resolve(verb, file.overridden_by(flags.settings()), env_out) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    execute(&resolved, argv)
}

fn execute(resolved: &Resolved, argv: Vec<String>) -> i32 {
    let started = unix_ms();
    let output = match crate::stats::with_threads(resolved.threads, || commands::dispatch(resolved)).map_err(|e| e.to_string()).and_then(|r| r) {
        Ok(output) => output,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let out = &resolved.out;
    if let Err(e) = std::fs::create_dir_all(out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return 2;
    }
    let mut artifacts = Vec::new();
    let mut files = output.files;
    files.push(("params.conf".into(), resolved.config_text().into_bytes()));
    for (name, bytes) in &files {
        if let Err(e) = write_atomic(&out.join(name), bytes) {
            eprintln!("error: cannot write {name}: {e}");
            return 2;
        }
        artifacts.push(name.clone());
    }
    for s in &output.suites {
        println!("{}: {} ({})", s.name, if s.passed { "PASS" } else { "FAIL" }, s.detail);
    }
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").into(),
        command: resolved.verb.name().into(),
        argv,
        params: resolved.param_map(),
        seed: resolved.seed,
        started_unix_ms: started,
        finished_unix_ms: unix_ms(),
        suites: output.suites,
        artifacts,
        provenance: output.provenance,
    };
    let failures: Vec<SuiteOutcome> = manifest.suites.iter().filter(|s| !s.passed).cloned().collect();
    let failure_path = out.join("failures.json");
    let written = if failures.is_empty() {
        let _ = std::fs::remove_file(&failure_path);
        Ok(())
    } else {
        write_json(&failure_path, &FailureReport { command: manifest.command.clone(), failures })
    }
    .and_then(|_| write_json(&out.join("manifest.json"), &manifest));
    if let Err(e) = written {
        eprintln!("error: cannot write manifest: {e}");
        return 2;
    }
    if manifest.passed() {
        0
    } else {
        1
    }
}
