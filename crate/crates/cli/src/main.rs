use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use ncchern::experiment::{run_experiment, ExperimentConfig, ExperimentKind, ResultRecord, Status};

#[derive(Parser)]
#[command(name = "ncchern", version, about = "Chern cocycle and index experiments on lattice models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Local Chern cocycle on periodic tori.
    Chern(Opts),
    /// Fedosov index of the Dirac phase on open boxes.
    Index(Opts),
    /// Weak invariant of a 3D stack on periodic tori.
    Sigma12(Opts),
    /// Central identity between the two cocycle formulas.
    IdentityCheck(Opts),
    /// Off-diagonal decay of commutators with the Dirac phase.
    Decay(Opts),
    /// Index values over a sweep of box radii.
    Convergence(Opts),
    /// Momentum-space Chern number of a clean 2D model.
    Oracle(Opts),
}

#[derive(Args)]
struct Opts {
    /// TOML experiment file; a small built-in sweep is used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for results.csv, results.json and decay tables.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Disorder seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Torus sides, box radii or grid sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Distance to the reference integer counted as agreement.
    #[arg(long)]
    tolerance: Option<f64>,
}

impl Command {
    fn split(self) -> (ExperimentKind, Opts) {
        match self {
            Command::Chern(o) => (ExperimentKind::Chern, o),
            Command::Index(o) => (ExperimentKind::Index, o),
            Command::Sigma12(o) => (ExperimentKind::Sigma12, o),
            Command::IdentityCheck(o) => (ExperimentKind::IdentityCheck, o),
            Command::Decay(o) => (ExperimentKind::Decay, o),
            Command::Convergence(o) => (ExperimentKind::Convergence, o),
            Command::Oracle(o) => (ExperimentKind::Oracle, o),
        }
    }
}

fn default_config(kind: ExperimentKind) -> String {
    let (sizes, model) = match kind {
        ExperimentKind::Chern => ("[12, 16, 24]", "builtin = \"chern\"\nmass = 1.0"),
        ExperimentKind::Index => ("[10]", "builtin = \"chern\"\nmass = 1.0"),
        ExperimentKind::Convergence => ("[6, 8, 10]", "builtin = \"chern\"\nmass = 1.0"),
        ExperimentKind::Decay => ("[10]", "builtin = \"chern\"\nmass = 1.0"),
        ExperimentKind::Oracle => ("[24, 48]", "builtin = \"chern\"\nmass = 1.0"),
        ExperimentKind::Sigma12 => ("[8]", "builtin = \"stack\"\nmass = 1.0\nt3 = 0.0"),
        ExperimentKind::IdentityCheck => return "kind = \"identity-check\"\n".to_string(),
    };
    format!("kind = \"{}\"\nsizes = {sizes}\n[model]\n{model}\n", kind.as_str())
}

fn load(kind: ExperimentKind, opts: Opts) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &opts.config {
        Some(path) => ExperimentConfig::from_path(path)
            .with_context(|| format!("reading {}", path.display()))?,
        None => ExperimentConfig::from_toml_str(&default_config(kind))?,
    };
    if cfg.kind != kind {
        bail!("config describes a '{}' experiment, not '{}'", cfg.kind.as_str(), kind.as_str());
    }
    if let Some(s) = opts.sizes {
        cfg.sizes = s;
    }
    if let Some(s) = opts.seeds {
        cfg.seeds = s;
    }
    if let Some(t) = opts.threads {
        cfg.threads = Some(t);
    }
    if let Some(t) = opts.tolerance {
        if !(t > 0.0) {
            bail!("tolerance must be positive");
        }
        cfg.tolerances.accept = t;
    }
    if let Some(o) = opts.out {
        cfg.output = Some(o);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into())
}

fn summary(r: &ResultRecord) -> String {
    let mut line = format!("{:<24} {:>12}", r.experiment_id, fmt_opt(r.value_re));
    if let Some(w) = r.window {
        line.push_str(&format!("  R'={w}"));
    }
    if let Some(x0) = &r.x0 {
        line.push_str(&format!("  x0={x0:?}"));
    }
    if let Some(k) = r.reference {
        line.push_str(&format!("  ref={k}"));
    }
    if let Some(ok) = r.within_tolerance {
        line.push_str(if ok { "  ok" } else { "  off" });
    }
    if let Some(e) = &r.error {
        line.push_str(&format!("  FAILED: {e}"));
    }
    if let Some(w) = &r.warning {
        line.push_str(&format!("  warning: {w}"));
    }
    line
}

fn main() -> ExitCode {
    let (kind, opts) = Cli::parse().command.split();
    let cfg = match load(kind, opts) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let records = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for r in &records {
        println!("{}", summary(r));
    }
    if let Some(dir) = &cfg.output {
        eprintln!("wrote {} records to {}", records.len(), dir.display());
    }
    if records.iter().any(|r| r.status == Status::Failed) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
