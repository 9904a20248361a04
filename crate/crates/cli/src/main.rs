use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use schatten_lab::spaces::TypeSpec;
use schatten_lab::verify::{build_space_file, run_suite, verify_space_file, SpaceFile, SuiteConfig, SuiteName};

/// Build catalog spaces and verify their projections.
#[derive(Parser)]
#[command(name = "schatten-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve a type spec and write its space and projection.
    Build {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the projection stored in a space file.
    Verify {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a named suite: fock, spin, catalog, duality, bridge, impossibility, appendix or all.
    Suite {
        name: SuiteName,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<SuiteConfig> {
    match path {
        Some(p) => read_json(p),
        None => Ok(SuiteConfig::default()),
    }
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("SCHATTEN_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("SCHATTEN_LAB_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    match cli.command {
        Command::Build { spec, out } => {
            let spec: TypeSpec = read_json(&spec)?;
            let tol = Default::default();
            let file = build_space_file(&spec, &tol)?;
            write_json(&out, &file)?;
            eprintln!("{:?}: dim {}", file.spec.kind, file.space.dim());
            Ok(true)
        }
        Command::Verify { space, config, out } => {
            let file: SpaceFile = read_json(&space)?;
            let cfg = load_config(config.as_deref())?;
            let report = verify_space_file(&file, &cfg)?;
            write_json(&out, &report)?;
            for f in &report.failures {
                eprintln!("FAIL {f}");
            }
            Ok(report.passed)
        }
        Command::Suite { name, config, out } => {
            let cfg = load_config(config.as_deref())?;
            let report = run_suite(name, &cfg)?;
            write_json(&out, &report)?;
            for c in report.cases.iter().filter(|c| !c.passed) {
                eprintln!("FAIL {}: {}", c.id, c.failures.join("; "));
            }
            eprintln!("{}: {} cases, {} failed", report.suite, report.cases.len(), report.failed);
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
