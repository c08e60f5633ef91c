//! `ahsp-sim`: runs hidden-subgroup experiments and compares reports.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ahsp_core::experiment::{
    self, AlgorithmChoice, ExperimentConfig, ExperimentReport, Generators, Mode,
};
use ahsp_core::algorithms::AuxSpec;
use ahsp_core::Error;
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

#[derive(Parser, Debug)]
#[command(name = "ahsp-sim", version, about = "Abelian hidden subgroup simulator")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment (the default when no subcommand is given).
    Run(RunArgs),
    /// Compare a standard report with an initialization-free report.
    Compare {
        standard: PathBuf,
        init_free: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// JSON experiment configuration; other flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cyclic factor orders, e.g. `2,4`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    moduli: Option<Vec<i64>>,
    /// Per-factor generators, e.g. `1,2`, or `random:SEED`.
    #[arg(long, allow_hyphen_values = true)]
    generators: Option<String>,
    /// standard, init-free or both.
    #[arg(long)]
    algorithm: Option<String>,
    /// zero, random-pure, random-mixed[:MEMBERS], or a JSON descriptor.
    #[arg(long)]
    aux: Option<String>,
    /// shots, exact, channel or recover.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Compose the hiding function with a seeded relabelling of its values.
    #[arg(long)]
    relabel_f: bool,
    /// Recovery trials per algorithm.
    #[arg(long)]
    trials: Option<u64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    output: Option<String>,
    /// json or csv.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads for shot parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Some(Command::Run(args)) => run(args),
        Some(Command::Compare {
            standard,
            init_free,
            output,
        }) => compare(&standard, &init_free, output.as_deref()),
        None => run(cli.run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 1 for configuration problems, 2 for resource caps, 3 for internal
/// invariant violations.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::CapExceeded(_) | Error::Overflow(_)) => 2,
        Some(Error::Invariant(_) | Error::NotUnitary(_)) => 3,
        _ => 1,
    }
}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Error::Config(msg.into()))
}

fn parse_name<T: DeserializeOwned>(what: &str, s: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(s.trim().to_string()))
        .map_err(|_| config_err(format!("unknown {what} `{s}`")))
}

fn parse_generators(s: &str) -> Result<Generators> {
    let s = s.trim();
    if let Some(seed) = s.strip_prefix("random:").or_else(|| s.strip_prefix("random-subgroup:")) {
        let seed = seed
            .trim()
            .parse()
            .map_err(|_| config_err(format!("bad subgroup seed `{seed}`")))?;
        return Ok(Generators::Random { random_subgroup: seed });
    }
    let list = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<i64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| config_err(format!("bad generator list `{s}`")))?;
    Ok(Generators::List(list))
}

fn parse_aux(s: &str) -> Result<AuxSpec> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| config_err(format!("bad aux descriptor: {e}")));
    }
    match s.split_once(':') {
        Some(("random-mixed", n)) => {
            let members = n
                .trim()
                .parse()
                .map_err(|_| config_err(format!("bad member count `{n}`")))?;
            Ok(AuxSpec::RandomMixed { members })
        }
        Some(_) => Err(config_err(format!("unknown aux `{s}`"))),
        None if s == "random-mixed" => Ok(AuxSpec::random_mixed()),
        None => serde_json::from_value(serde_json::json!({ "kind": s }))
            .map_err(|_| config_err(format!("unknown aux `{s}`"))),
    }
}

fn build_config(args: RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(|e| config_err(format!("{e:#}")))?;
            ExperimentConfig::from_json(&text)?
        }
        None => {
            let moduli = args
                .moduli
                .clone()
                .ok_or_else(|| config_err("--moduli is required without --config"))?;
            ExperimentConfig::new(moduli, Vec::new(), AlgorithmChoice::Both, Mode::Exact)
        }
    };
    match (&args.config, &args.generators) {
        (_, Some(g)) => cfg.generators = parse_generators(g)?,
        (None, None) => bail!(config_err("--generators is required without --config")),
        _ => {}
    }
    if let Some(m) = args.moduli {
        cfg.moduli = m;
    }
    if let Some(a) = &args.algorithm {
        cfg.algorithm = parse_name("algorithm", a)?;
    }
    if let Some(a) = &args.aux {
        cfg.aux = parse_aux(a)?;
    }
    if let Some(m) = &args.mode {
        cfg.mode = parse_name("mode", m)?;
    }
    if let Some(f) = &args.format {
        cfg.format = parse_name("format", f)?;
    }
    if let Some(n) = args.shots {
        cfg.shots = n;
    }
    if let Some(n) = args.seed {
        cfg.seed = n;
    }
    if let Some(n) = args.trials {
        cfg.trials = n;
    }
    if args.relabel_f {
        cfg.relabel_f = true;
    }
    if args.output.is_some() {
        cfg.output = args.output;
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    Ok(cfg)
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    match threads {
        Some(0) => Err(config_err("--threads must be at least 1")),
        #[cfg(feature = "parallel")]
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool"),
        #[cfg(not(feature = "parallel"))]
        Some(n) => {
            if n > 1 {
                eprintln!("warning: built without the `parallel` feature; running on one thread");
            }
            Ok(())
        }
        None => Ok(()),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = build_config(args)?;
    configure_threads(cfg.threads)?;
    let report = experiment::run(&cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match &cfg.output {
        Some(path) => experiment::write_report(&report, Path::new(path), cfg.format)?,
        None => std::io::stdout().write_all(&experiment::render_report(&report, cfg.format)?)?,
    }
    Ok(())
}

fn read_report(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("parsing {}: {e}", path.display())))
}

fn compare(standard: &Path, init_free: &Path, output: Option<&Path>) -> Result<()> {
    let cmp = experiment::compare(&read_report(standard)?, &read_report(init_free)?)?;
    let text = serde_json::to_string_pretty(&cmp)? + "\n";
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}
