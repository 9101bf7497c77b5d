use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hdgame_harness::{
    config_for, parse_config, run_experiment, run_verifications, ExperimentConfig, ExperimentKind,
    HarnessError, Scope, VerifyOptions,
};

#[derive(Parser)]
#[command(
    name = "hdgame",
    version,
    about = "Simulate and verify history-dependent learning games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    parallelism: Option<usize>,
    /// Override a config key, e.g. `--set graph.n=12` or `--set tau=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<String> {
        let mut o = self.overrides.clone();
        if let Some(s) = self.seed {
            o.push(format!("seed={s}"));
        }
        if let Some(t) = self.trials {
            o.push(format!("trials={t}"));
        }
        if let Some(p) = self.parallelism {
            o.push(format!("parallelism={p}"));
        }
        if let Some(d) = &self.out {
            o.push(format!(
                "out={}",
                serde_json::Value::String(d.display().to_string())
            ));
        }
        o
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NamedExperiment {
    #[value(name = "cti-fig1")]
    CtiFig1,
    #[value(name = "sis-fig2")]
    SisFig2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Core,
    Coupling,
    Equilibrium,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run one of the shipped experiments with optional overrides.
    Experiment {
        name: NamedExperiment,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the exhaustive verification suites and print JSON verdicts.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        scope: ScopeArg,
        /// Largest number of agents in the enumerated sweeps.
        #[arg(long, default_value_t = 4)]
        budget: usize,
        /// Inject known faults; the affected properties must fail.
        #[arg(long, hide = true)]
        corrupt_fixture: bool,
    },
}

fn experiment(cfg: ExperimentConfig) -> Result<bool, HarnessError> {
    let out = run_experiment(&cfg)?;
    for v in &out.summary.verdicts {
        println!(
            "{:<32} {}  {}",
            v.property,
            if v.passed { "pass" } else { "FAIL" },
            v.detail
        );
    }
    println!(
        "wrote {}, {}, {}",
        out.csv.display(),
        out.summary_path.display(),
        out.figure.display()
    );
    Ok(out.summary.passed)
}

fn run(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Simulate { config, run } => experiment(parse_config(&config, &run.overrides())?),
        Command::Experiment { name, run } => {
            let kind = match name {
                NamedExperiment::CtiFig1 => ExperimentKind::CtiFig1,
                NamedExperiment::SisFig2 => ExperimentKind::SisFig2,
            };
            experiment(config_for(kind, &run.overrides())?)
        }
        Command::Verify {
            scope,
            budget,
            corrupt_fixture,
        } => {
            let scope = match scope {
                ScopeArg::Core => Scope::Core,
                ScopeArg::Coupling => Scope::Coupling,
                ScopeArg::Equilibrium => Scope::Equilibrium,
                ScopeArg::All => Scope::All,
            };
            let report = run_verifications(VerifyOptions {
                scope,
                budget,
                corrupt: corrupt_fixture,
            })?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
