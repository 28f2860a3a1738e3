use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use stockblend::experiment::{self, ExperimentSpec, SuccessRule};
use stockblend::generator::{generate_instance, GeneratorRanges};
use stockblend::report;
use stockblend::solution::SolutionFile;
use stockblend::validate::validate_solution;
use stockblend::{HarnessError, Result};
use stockblend_core::model::{load_instance, LogBase};
use stockblend_core::{de, ChanceConfig64, DeConfig64, FitnessConfig64, FitnessMode};

const EXIT_INPUT: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "stockblend", version, about = "Stockpile blending optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Det,
    Cu,
    Fl,
    Both,
}

impl From<Mode> for FitnessMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Det => FitnessMode::Deterministic,
            Mode::Cu => FitnessMode::ChanceCu,
            Mode::Fl => FitnessMode::ChanceFl,
            Mode::Both => FitnessMode::ChanceBoth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Base {
    #[value(name = "e")]
    E,
    #[value(name = "10")]
    Ten,
}

impl From<Base> for LogBase {
    fn from(b: Base) -> Self {
        match b {
            Base::E => LogBase::Natural,
            Base::Ten => LogBase::Ten,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum Success {
    Best,
    Population,
}

impl From<Success> for SuccessRule {
    fn from(s: Success) -> Self {
        match s {
            Success::Best => SuccessRule::Best,
            Success::Population => SuccessRule::Population,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one instance with a single seeded run.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "det")]
        mode: Mode,
        #[arg(long, default_value_t = 0.9)]
        alpha_cu: f64,
        #[arg(long, default_value_t = 0.9)]
        alpha_fl: f64,
        #[arg(long, default_value_t = 10)]
        pop: usize,
        #[arg(long, default_value_t = 10_000)]
        gens: usize,
        #[arg(long, default_value_t = 0.5)]
        f: f64,
        #[arg(long, default_value_t = 0.9)]
        cr: f64,
        /// Overrides the instance file's logarithm base.
        #[arg(long, value_enum)]
        log_base: Option<Base>,
        /// Claimed tonnage may not drive any stockpile negative.
        #[arg(long)]
        strict_inventory: bool,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a random instance.
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(3..=5))]
        parcels: Option<u64>,
    },
    /// Run a grid of instances, modes and confidence levels.
    Experiment {
        #[arg(long)]
        spec: PathBuf,
        /// Defaults to the spec's `out_dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check a solution's chance constraints by Monte Carlo sampling.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0.9)]
        alpha_cu: f64,
        #[arg(long, default_value_t = 0.9)]
        alpha_fl: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Summarize the run log of an experiment directory.
    Report {
        #[arg(long)]
        runs_dir: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long, value_enum, default_value = "best")]
        success: Success,
    },
}

fn solve(
    instance: PathBuf,
    mode: FitnessMode,
    chance: ChanceConfig64,
    de_config: DeConfig64,
    log_base: Option<LogBase>,
    out: Option<PathBuf>,
) -> Result<bool> {
    let mut inst = load_instance::<f64>(&instance)?;
    if let Some(base) = log_base {
        inst.factors.log_base = base;
    }
    let result = de::run(&inst, &de_config)?;
    let sol = SolutionFile::from_run(
        &inst,
        mode,
        mode.chance_cu().then_some(chance.alpha_cu),
        mode.chance_fl().then_some(chance.alpha_fl),
        de_config.seed,
        &result,
    );
    match out {
        Some(path) => sol.write(&path)?,
        None => print!("{}", sol.to_json()),
    }
    let f = &result.best.fitness;
    eprintln!(
        "objective={} feasible={} u={} v={} w={} q={} g={}",
        f.objective, result.feasible, f.u, f.v, f.w, f.q, f.g
    );
    Ok(result.feasible)
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve {
            instance,
            mode,
            alpha_cu,
            alpha_fl,
            pop,
            gens,
            f,
            cr,
            log_base,
            strict_inventory,
            seed,
            out,
        } => {
            let mode = FitnessMode::from(mode);
            let chance = ChanceConfig64::new(alpha_cu, alpha_fl)?;
            let mut fitness = FitnessConfig64::new(mode, chance);
            fitness.strict_inventory = strict_inventory;
            let config = DeConfig64 {
                pop_size: pop,
                generations: gens,
                f_scale: f,
                crossover_rate: cr,
                seed,
                fitness,
            };
            config.validate()?;
            let feasible = solve(
                instance,
                mode,
                chance,
                config,
                log_base.map(Into::into),
                out,
            )?;
            Ok(if feasible {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_INFEASIBLE)
            })
        }
        Command::Generate { seed, out, parcels } => {
            let inst = generate_instance(
                &GeneratorRanges::default(),
                seed,
                parcels.map(|p| p as usize),
            );
            std::fs::write(&out, inst.to_json()).map_err(|e| HarnessError::Io {
                path: out,
                source: e,
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment {
            spec,
            out_dir,
            jobs,
        } => {
            let spec = ExperimentSpec::load(&spec)?;
            let dir = out_dir
                .or_else(|| spec.out_dir.clone())
                .ok_or_else(|| HarnessError::Spec("no output directory given".into()))?;
            let outcome = experiment::run_experiment(&spec, jobs)?;
            experiment::write_outputs(&outcome, &dir)?;
            print!("{}", report::render_table(&outcome.summaries));
            Ok(if outcome.any_success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_INFEASIBLE)
            })
        }
        Command::Validate {
            instance,
            solution,
            samples,
            alpha_cu,
            alpha_fl,
            seed,
        } => {
            let inst = load_instance::<f64>(&instance)?;
            let sol = SolutionFile::read(&solution)?;
            let genome = sol.genome_for(&inst)?;
            let chance = ChanceConfig64::new(alpha_cu, alpha_fl)?;
            let report = validate_solution(&inst, &genome, chance, samples, seed)?;
            print!("{}", report.render());
            println!("overall: {}", if report.passed() { "pass" } else { "FAIL" });
            Ok(ExitCode::SUCCESS)
        }
        Command::Report {
            runs_dir,
            format,
            success,
        } => {
            let records = experiment::read_run_log(&runs_dir.join(experiment::RUN_LOG))?;
            let summaries = experiment::summarize(&records, success.into());
            match format {
                Format::Csv => print!("{}", report::csv_string(&summaries)?),
                Format::Table => print!("{}", report::render_table(&summaries)),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
