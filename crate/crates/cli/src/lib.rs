//! Command-line scenario runner for `qrseal`.
//!
//! Exit codes: 0 success, 1 error (nothing written), 2 an asserted bound
//! was violated or a verify criterion failed.

pub mod config;
pub mod report;
pub mod runner;
pub mod table;

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use qrseal::frontier::BuiltinFamily;
use qrseal::{BuiltinDevice, BuiltinEncoding, BuiltinSeal};
use serde_json::json;

use crate::config::{Overrides, Scenario, ScenarioConfig};
use crate::runner::RunOutput;

#[derive(Debug, Parser)]
#[command(name = "qrseal", version, about = "Quantum repeating devices and quantum seals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scenario described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run every acceptance criterion and print one line per criterion.
    VerifyAll {
        #[command(flatten)]
        flags: RunFlags,
    },
    /// List built-in devices, encodings, seals, families and scenarios.
    ListBuiltins,
    /// Show the parameters and an example reference for one built-in.
    Describe { name: String },
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory for report.json and CSV tables.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Absolute tolerance replacing the stated one on closed-form checks.
    #[arg(long)]
    pub tol_exact: Option<f64>,
    /// Allowed Monte Carlo deviation, in standard errors.
    #[arg(long)]
    pub tol_mc: Option<f64>,
}

impl From<&RunFlags> for Overrides {
    fn from(f: &RunFlags) -> Self {
        Self {
            seed: f.seed,
            samples: f.samples,
            workers: f.workers,
            out: f.out.clone(),
            tol_exact: f.tol_exact,
            tol_mc: f.tol_mc,
        }
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = write!(stderr, "{e}");
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            1
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Run { config, flags } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            cfg.apply(&(&flags).into())?;
            execute(&cfg, out)
        }
        Command::VerifyAll { flags } => {
            let mut cfg = ScenarioConfig {
                scenario: Scenario::VerifyAll {},
                sampling: Default::default(),
                tolerances: Default::default(),
                output: Default::default(),
                assert_bounds: false,
            };
            cfg.apply(&(&flags).into())?;
            execute(&cfg, out)
        }
        Command::ListBuiltins => {
            list_builtins(out)?;
            Ok(0)
        }
        Command::Describe { name } => {
            let d = describe(&name).with_context(|| format!("no built-in named {name:?}; try list-builtins"))?;
            writeln!(out, "{}", serde_json::to_string_pretty(&d)?)?;
            Ok(0)
        }
    }
}

/// Run, then either write the output directory or print the report.
pub fn execute(cfg: &ScenarioConfig, out: &mut dyn Write) -> Result<i32> {
    let result = runner::run(cfg)?;
    if let runner::RunOutput {
        report:
            report::RunReport {
                results: report::Results::VerifyAll(v),
                ..
            },
        ..
    } = &result
    {
        for c in &v.data.criteria {
            writeln!(out, "{}", c.line())?;
        }
    }
    match &cfg.output.dir {
        Some(dir) => {
            write_outputs(&result, dir)?;
            writeln!(out, "wrote {}", dir.join("report.json").display())?;
        }
        None if !matches!(cfg.scenario, Scenario::VerifyAll {}) => out.write_all(result.report.to_json().as_bytes())?,
        None => {}
    }
    for v in &result.report.violations {
        writeln!(out, "violated: {v}")?;
    }
    Ok(result.exit_code())
}

pub fn write_outputs(result: &RunOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("report.json"), result.report.to_json())?;
    for t in &result.tables {
        t.write(dir)?;
    }
    Ok(())
}

fn list_builtins(out: &mut dyn Write) -> Result<()> {
    writeln!(out, "devices:")?;
    for info in BuiltinDevice::catalog() {
        writeln!(out, "  {:<20} {:<24} {:<17} {}", info.name, info.params, info.kind, info.summary)?;
    }
    writeln!(out, "encodings:")?;
    for name in BuiltinEncoding::names() {
        writeln!(out, "  {name}")?;
    }
    writeln!(out, "seals:")?;
    for name in BuiltinSeal::names() {
        writeln!(out, "  {name}")?;
    }
    writeln!(out, "families:")?;
    for name in BuiltinFamily::names() {
        writeln!(out, "  {name}")?;
    }
    writeln!(out, "scenarios:")?;
    for name in ["device", "seal", "bridge", "bounds", "frontier", "verify-all", "paper-table"] {
        writeln!(out, "  {name}")?;
    }
    Ok(())
}

/// Description of a built-in, with a reference usable in a config file.
pub fn describe(name: &str) -> Option<serde_json::Value> {
    if let Some(info) = BuiltinDevice::catalog().into_iter().find(|i| i.name == name) {
        return Some(json!({ "category": "device", "info": info, "example": example_device(name)? }));
    }
    if BuiltinEncoding::names().contains(&name) {
        let example = match name {
            "orthogonal" => json!({ "builtin": { "name": "orthogonal", "d": 2 } }),
            _ => json!({ "builtin": { "name": name } }),
        };
        let built: BuiltinEncoding = serde_json::from_value(example["builtin"].clone()).ok()?;
        let enc = built.build().ok()?;
        return Some(json!({
            "category": "encoding",
            "symbols": enc.symbols(),
            "dim": enc.dim(),
            "example": example,
        }));
    }
    if BuiltinSeal::names().contains(&name) {
        let seal: BuiltinSeal = serde_json::from_value(json!({ "name": name })).ok()?;
        let p = seal.build().ok()?;
        return Some(json!({
            "category": "seal",
            "dim_alice": p.dim_alice(),
            "dim_bob": p.dim_bob(),
            "values": p.values(),
            "example": { "builtin": { "name": name } },
        }));
    }
    if BuiltinFamily::names().contains(&name) {
        let example = match name {
            "diagonal_weak" => json!({ "name": name, "d": 3 }),
            "basis_angle" => json!({ "name": name, "encoding": { "name": "simplified" } }),
            _ => json!({ "name": name }),
        };
        let fam: BuiltinFamily = serde_json::from_value(example.clone()).ok()?;
        let fam = fam.build().ok()?;
        return Some(json!({
            "category": "family",
            "dim": fam.dim(),
            "kind": fam.kind(),
            "params": fam.params(),
            "example": example,
        }));
    }
    None
}

fn example_device(name: &str) -> Option<serde_json::Value> {
    let params = match name {
        "do_nothing" | "measure_reprepare" | "measure_keep" => json!({ "d": 2 }),
        "breidbart" => json!({}),
        "basis_angle" => json!({ "angle": std::f64::consts::FRAC_PI_8 }),
        "weak_family" => json!({ "lambda": 0.25 }),
        "diagonal_weak" => json!({ "d": 3, "strength": 0.5 }),
        "random" => json!({ "d": 2, "outcomes": 2, "seed": 1 }),
        _ => return None,
    };
    let mut obj = params.as_object()?.clone();
    obj.insert("name".into(), json!(name));
    Some(json!({ "builtin": obj }))
}
