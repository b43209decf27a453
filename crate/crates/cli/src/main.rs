//! `mec-sim`: generate, validate, run and compare offloading scenarios.
//!
//! Exit codes: 0 success, 2 bad arguments or unparsable input, 3 a scenario
//! that parses but breaks an invariant, 4 a failure while running or writing.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mec_core::policies::PolicySpec;
use mec_core::scenario::{
    reference_scenario, ScenarioError, ScenarioSpec, Traffic, ValidatedScenario,
};
use mec_core::sim::{
    run_experiment, write_report, ExperimentReport, LifespanFamily, Metric, BASELINE,
};
use thiserror::Error;

#[derive(Parser, Debug)]
#[command(
    name = "mec-sim",
    version,
    about = "Energy-aware task offloading simulator for edge networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the reference scenario at scale h as TOML.
    Generate(GenerateArgs),
    /// Check a scenario against every invariant without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run one policy and write per-replication metrics.
    Run(RunArgs),
    /// Run several policies and write the relative and timeline tables.
    Compare(RunArgs),
}

#[derive(Args, Debug, Clone)]
struct SourceArgs {
    /// Scenario file; without it the reference scenario is generated.
    #[arg(long, conflicts_with_all = ["rho", "rho_per_class", "scale"])]
    scenario: Option<PathBuf>,
    #[arg(long, conflicts_with = "rho_per_class")]
    rho: Option<f64>,
    /// One intensity per class, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    rho_per_class: Option<Vec<f64>>,
    /// Scaling parameter h.
    #[arg(long)]
    scale: Option<u32>,
}

#[derive(Args, Debug, Clone)]
struct ControlArgs {
    /// Policy names, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    policy: Option<Vec<String>>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    warmup: Option<f64>,
    #[arg(long)]
    reps: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// exp, det, pareto-f or pareto-inf.
    #[arg(long)]
    lifespan: Option<LifespanFamily>,
    /// Piecewise-constant arrival-rate multipliers (CSV).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    control: ControlArgs,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    control: ControlArgs,
    /// Output directory for the tables.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Invalid(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Invalid(_) => "validation",
            CliError::Runtime(_) => "runtime",
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Parse(_) => CliError::Parse(e.to_string()),
            ScenarioError::Io { .. } => CliError::Runtime(e.to_string()),
            ScenarioError::Invalid(_) | ScenarioError::Network(_) => {
                CliError::Invalid(e.to_string())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate(args) => generate(args),
        Command::Validate { scenario } => validate(&scenario),
        Command::Run(args) => run(args, false),
        Command::Compare(args) => run(args, true),
    }
}

/// The scenario named by the source flags, with run-control overrides
/// applied, and the directory relative paths resolve against.
fn resolve(
    source: &SourceArgs,
    control: &ControlArgs,
) -> Result<(ScenarioSpec, Option<PathBuf>), CliError> {
    let (mut spec, base) = match &source.scenario {
        Some(path) => {
            let spec = ScenarioSpec::load(path)?;
            (spec, path.parent().map(Path::to_path_buf))
        }
        None => {
            let traffic = match (&source.rho, &source.rho_per_class) {
                (_, Some(v)) => Traffic::PerClass(v.clone()),
                (Some(r), None) => Traffic::Uniform(*r),
                (None, None) => {
                    return Err(CliError::Parse(
                        "give --scenario, --rho or --rho-per-class".into(),
                    ))
                }
            };
            (
                reference_scenario(source.scale.unwrap_or(1), traffic)?,
                None,
            )
        }
    };
    let e = &mut spec.experiment;
    if let Some(h) = control.horizon {
        e.horizon = h;
        if control.warmup.is_none() {
            e.warm_up = Some(0.1 * h);
        }
        if e.timeline_bin.is_some() {
            e.timeline_bin = Some(h / 50.0);
        }
    }
    if let Some(w) = control.warmup {
        e.warm_up = Some(w);
    }
    if let Some(r) = control.reps {
        e.replications = r;
    }
    if let Some(s) = control.seed {
        e.seed = s;
    }
    if let Some(l) = control.lifespan {
        e.lifespan = l;
    }
    if let Some(t) = &control.trace {
        spec.trace = Some(t.clone());
    }
    if let Some(names) = &control.policy {
        spec.policies = names
            .iter()
            .map(|n| {
                PolicySpec::from_name(n).ok_or_else(|| {
                    CliError::Parse(format!(
                        "unknown policy {n:?}; expected one of {}",
                        PolicySpec::NAMES.join(", ")
                    ))
                })
            })
            .collect::<Result<_, _>>()?;
    }
    Ok((spec, base))
}

fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let (spec, base) = resolve(&args.source, &args.control)?;
    spec.validate(base.as_deref())?;
    let text = spec.to_toml();
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn validate(path: &Path) -> Result<(), CliError> {
    let spec = ScenarioSpec::load(path)?;
    let v = spec.validate(path.parent())?;
    println!(
        "ok: {} classes, {} SC groups, {} channels, {} policies",
        v.config.num_classes(),
        v.config.num_groups(),
        v.config.num_channels(),
        v.policies.len()
    );
    Ok(())
}

fn run(args: RunArgs, compare: bool) -> Result<(), CliError> {
    let (spec, base) = resolve(&args.source, &args.control)?;
    let ValidatedScenario {
        config,
        mut policies,
        options,
        ..
    } = spec.validate(base.as_deref())?;
    if !compare {
        if policies.len() != 1 {
            return Err(CliError::Parse(format!(
                "run takes exactly one policy, got {}; use --policy or compare",
                policies.len()
            )));
        }
    } else if !policies.iter().any(|p| p.name() == BASELINE) {
        policies.push(PolicySpec::from_name(BASELINE).expect("baseline exists"));
    }
    let report = run_experiment(&config, &policies, &options)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let out = args.out.clone().or_else(|| spec.output.clone());
    if let Some(dir) = out {
        let written = write_report(&report, &dir)
            .map_err(|e| CliError::Runtime(format!("cannot write to {}: {e}", dir.display())))?;
        for p in written {
            eprintln!("wrote {}", p.display());
        }
    }
    print_table(&report, compare).map_err(|e| CliError::Runtime(e.to_string()))
}

fn print_table(report: &ExperimentReport, compare: bool) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    write!(out, "{:<14}", "policy")?;
    if compare {
        write!(out, " {:>22}", "conservation")?;
    }
    for m in Metric::ALL {
        write!(out, " {:>24}", m.name())?;
    }
    writeln!(out)?;
    for s in &report.summaries {
        write!(out, "{:<14}", s.policy)?;
        if compare {
            let r = report.relative(s.policy).expect("relative rows");
            write!(
                out,
                " {:>22}",
                format!("{:.4} ± {:.4}", r.conservation, r.conservation_half_width)
            )?;
        }
        for m in Metric::ALL {
            let v = s.get(m);
            write!(
                out,
                " {:>24}",
                format!("{:.4} ± {:.4}", v.mean, v.half_width)
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}
