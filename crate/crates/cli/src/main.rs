use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use idpoint::diagnostics::Verdict;
use idpoint_cli::recipes::{self, RECIPES};
use idpoint_cli::{run, CliError, CliResult, ExperimentConfig, ExperimentKind, RunOptions};

#[derive(Parser)]
#[command(name = "idpoint", version, about = "Series samplers, point processes and dependence diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct Overrides {
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the config value, then to every core.
    #[arg(long, env = "IDPOINT_THREADS")]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Series sums and paths of an infinitely divisible law.
    Sample(RunArgs),
    /// Point-process simulation, counts and Laplace functionals.
    Cluster(RunArgs),
    /// Weak-dependence condition estimators on triangular arrays.
    Diagnose(RunArgs),
    /// Block lengths for a mixing profile.
    Blocks(RunArgs),
    /// Row sums against the limiting law.
    Converge(RunArgs),
    /// Built-in recipes.
    Recipes {
        #[command(subcommand)]
        action: RecipeAction,
    },
}

#[derive(Subcommand)]
enum RecipeAction {
    List,
    /// Prints the recipe config.
    Show { name: String },
    Run {
        name: String,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn options(o: Overrides) -> RunOptions {
    RunOptions {
        seed: o.seed,
        threads: o.threads,
        out: o.out,
    }
}

fn execute(config: ExperimentConfig, overrides: Overrides) -> CliResult<()> {
    let output = run(&config, &options(overrides))?;
    for e in output.report.entries.values() {
        let mark = match e.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::TrendOnly => "TREND",
            Verdict::NoTarget => "-",
        };
        match e.target {
            Some(t) => println!("{mark:5} {}: {} ± {} (target {t})", e.name, e.estimate, e.se),
            None => println!("{mark:5} {}: {} ± {}", e.name, e.estimate, e.se),
        }
    }
    println!(
        "{} checks {}; outputs in {}",
        output.report.entries.len(),
        if output.manifest.all_passed { "passed" } else { "did not all pass" },
        output.out_dir.display()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let (kind, args) = match cli.command {
        Command::Sample(a) => (ExperimentKind::Sample, a),
        Command::Cluster(a) => (ExperimentKind::Cluster, a),
        Command::Diagnose(a) => (ExperimentKind::Diagnose, a),
        Command::Blocks(a) => (ExperimentKind::Blocks, a),
        Command::Converge(a) => (ExperimentKind::Converge, a),
        Command::Recipes { action } => {
            return match action {
                RecipeAction::List => {
                    for r in RECIPES {
                        println!("{} ({}): {}", r.name, r.version, r.summary);
                    }
                    Ok(())
                }
                RecipeAction::Show { name } => {
                    print!("{}", recipes::find(&name)?.source);
                    Ok(())
                }
                RecipeAction::Run { name, overrides } => execute(recipes::find(&name)?.config(), overrides),
            };
        }
    };
    let mut config = ExperimentConfig::from_path(&args.config)?;
    match config.kind {
        Some(k) if k != kind => {
            return Err(CliError::Config(format!(
                "config declares kind `{}` but `{}` was requested",
                k.as_str(),
                kind.as_str()
            )))
        }
        _ => config.kind = Some(kind),
    }
    execute(config, args.overrides)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
