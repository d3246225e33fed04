use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod oracle_check;
mod output;
mod worked;

use output::Failure;
use topoforge::experiments::InstanceFamily;
use topoforge::instance::{Config, SweepStrategy};

/// Clusters weighted users around earth stations by recursive line splits
/// and picks the cheapest set of stations from the split tree.
#[derive(Parser, Debug)]
#[command(name = "topoforge", version, about)]
struct Cli {
    /// Log progress and solver diagnostics to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve an instance and write the solution JSON.
    Solve {
        /// Instance file (.json or .csv).
        instance: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Sample the root split cost over all candidate line angles.
    Sweep {
        instance: PathBuf,
        /// CSV of (angle, h) rows.
        #[arg(long, short)]
        output: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Generate a random instance.
    Gen {
        #[arg(long, short)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Family::Uniform)]
        family: Family,
        /// Output path; the extension picks JSON or CSV.
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Time the solver across sizes and measure how often the split profile is bimodal.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Users per bimodality trial.
        #[arg(long, default_value_t = 50)]
        trial_n: usize,
        #[arg(long, value_enum, default_value_t = Family::Uniform)]
        family: Family,
        #[arg(long)]
        scaling_out: PathBuf,
        #[arg(long)]
        bimodality_out: PathBuf,
        /// JSON summary of the bimodality study.
        #[arg(long)]
        summary_out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run the brute-force equivalence suites on small random cases.
    OracleCheck {
        #[arg(long, default_value_t = 10)]
        max_n: usize,
        #[arg(long, default_value_t = 20)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Replay one of the bundled worked examples.
    PaperExample {
        #[arg(value_enum)]
        which: Example,
    },
}

#[derive(Args, Debug, Clone, Default)]
struct SolverArgs {
    /// JSON config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum)]
    sweep_strategy: Option<Strategy>,
    #[arg(long)]
    min_users: Option<usize>,
    #[arg(long)]
    min_weight: Option<f64>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Stop refinement after one reassignment pass.
    #[arg(long)]
    single_pass_refine: bool,
}

impl SolverArgs {
    fn resolve(&self) -> Result<Config, Failure> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p).map_err(Failure::from_core)?,
            None => Config::default(),
        };
        if let Some(e) = self.epsilon {
            cfg.solver.epsilon = e;
        }
        if let Some(s) = self.sweep_strategy {
            cfg.solver.sweep_strategy = s.into();
        }
        if let Some(u) = self.min_users {
            cfg.thresholds.min_users = u;
        }
        if let Some(w) = self.min_weight {
            cfg.thresholds.min_weight = w;
        }
        if let Some(d) = self.max_depth {
            cfg.thresholds.max_depth = d;
        }
        if let Some(s) = self.seed {
            cfg.solver.rng_seed = s;
        }
        if self.single_pass_refine {
            cfg.solver.refine_max_passes = 1;
        }
        cfg.validate().map_err(Failure::from_core)?;
        Ok(cfg)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Strategy {
    FullScan,
    FibonacciIfBimodal,
}

impl From<Strategy> for SweepStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::FullScan => SweepStrategy::FullScan,
            Strategy::FibonacciIfBimodal => SweepStrategy::FibonacciIfBimodal,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Family {
    Uniform,
    TwoBlobs,
}

impl From<Family> for InstanceFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Uniform => InstanceFamily::UniformBox,
            Family::TwoBlobs => InstanceFamily::TwoBlobs,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Example {
    Table1,
    Table3a,
    Table3b,
    Table4,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve {
            instance,
            output,
            solver,
        } => commands::solve(&instance, &output, &solver.resolve()?),
        Command::Sweep {
            instance,
            output,
            solver,
        } => commands::sweep(&instance, &output, &solver.resolve()?),
        Command::Gen {
            n,
            seed,
            family,
            output,
        } => commands::gen(n, seed, family.into(), &output),
        Command::Bench {
            sizes,
            repeats,
            trials,
            trial_n,
            family,
            scaling_out,
            bimodality_out,
            summary_out,
            solver,
        } => commands::bench(
            &commands::BenchPlan {
                sizes,
                repeats,
                trials,
                trial_n,
                family: family.into(),
                scaling_out,
                bimodality_out,
                summary_out,
            },
            &solver.resolve()?,
        ),
        Command::OracleCheck { max_n, cases, seed } => oracle_check::run(max_n, cases, seed),
        Command::PaperExample { which } => match which {
            Example::Table1 => worked::table1(),
            Example::Table3a => worked::table3a(),
            Example::Table3b => worked::table3b(),
            Example::Table4 => worked::table4(),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(output::EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
