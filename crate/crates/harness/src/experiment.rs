//! Multi-run experiments over a grid of instances, fitness modes and
//! confidence levels.
//!
//! Every run is logged as one JSON line; summaries are always recomputed
//! from those records, so a run directory can be re-reported at any time.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stockblend_core::de::{self, DeConfig};
use stockblend_core::model::{load_instance, LogBase};
use stockblend_core::rng::child_seed;
use stockblend_core::{ChanceConfig, FitnessConfig, FitnessMode, Instance64};

use crate::nonfinite::LoggedFitness;
use crate::report;
use crate::{HarnessError, Result};

pub const RUN_LOG: &str = "runs.jsonl";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_TABLE: &str = "summary.txt";

/// What makes a run successful.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SuccessRule {
    /// The returned best member is feasible.
    #[default]
    #[serde(rename = "best")]
    Best,
    /// Every member of the final population is feasible.
    #[serde(rename = "population")]
    Population,
}

impl std::str::FromStr for SuccessRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "best" => Ok(SuccessRule::Best),
            "population" => Ok(SuccessRule::Population),
            other => Err(format!(
                "unknown success rule `{other}` (expected best or population)"
            )),
        }
    }
}

/// Optimizer settings shared by every run; the seed is the base of the
/// per-run child seeds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeTemplate {
    pub pop_size: usize,
    pub generations: usize,
    pub f_scale: f64,
    pub crossover_rate: f64,
    pub seed: u64,
}

impl Default for DeTemplate {
    fn default() -> Self {
        let d = DeConfig::<f64>::default();
        DeTemplate {
            pop_size: d.pop_size,
            generations: d.generations,
            f_scale: d.f_scale,
            crossover_rate: d.crossover_rate,
            seed: 1,
        }
    }
}

fn default_modes() -> Vec<FitnessMode> {
    FitnessMode::ALL.to_vec()
}

fn default_alphas() -> Vec<f64> {
    vec![0.999, 0.99, 0.9]
}

fn default_runs() -> usize {
    30
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Instance files; relative paths resolve against the spec file. Only
    /// [`run_experiment`] reads them.
    pub instances: Vec<PathBuf>,
    #[serde(default = "default_modes")]
    pub modes: Vec<FitnessMode>,
    #[serde(default = "default_alphas")]
    pub alpha_cu: Vec<f64>,
    #[serde(default = "default_alphas")]
    pub alpha_fl: Vec<f64>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub de: DeTemplate,
    /// Overrides the instance files' log base when set.
    #[serde(default)]
    pub log_base: Option<LogBase>,
    #[serde(default)]
    pub strict_inventory: bool,
    #[serde(default)]
    pub success: SuccessRule,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut spec: ExperimentSpec =
            serde_json::from_str(&text).map_err(|e| HarnessError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for inst in &mut spec.instances {
            if inst.is_relative() {
                *inst = base.join(&*inst);
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let spec_err = |m: &str| Err(HarnessError::Spec(m.to_string()));
        if self.modes.is_empty() {
            return spec_err("no fitness modes listed");
        }
        if self.runs == 0 {
            return spec_err("runs must be at least 1");
        }
        if self.modes.iter().any(|m| m.chance_cu()) && self.alpha_cu.is_empty() {
            return spec_err("alpha_cu grid is empty");
        }
        if self.modes.iter().any(|m| m.chance_fl()) && self.alpha_fl.is_empty() {
            return spec_err("alpha_fl grid is empty");
        }
        for &a in self.alpha_cu.iter().chain(&self.alpha_fl) {
            ChanceConfig::new(a, a)?;
        }
        self.de_config(0, FitnessConfig::deterministic())
            .validate()?;
        Ok(())
    }

    fn de_config(&self, seed: u64, fitness: FitnessConfig<f64>) -> DeConfig<f64> {
        DeConfig {
            pop_size: self.de.pop_size,
            generations: self.de.generations,
            f_scale: self.de.f_scale,
            crossover_rate: self.de.crossover_rate,
            seed,
            fitness,
        }
    }
}

/// One column of the result tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub instance: String,
    pub mode: FitnessMode,
    pub alpha_cu: Option<f64>,
    pub alpha_fl: Option<f64>,
}

impl CellKey {
    fn matches(&self, r: &RunRecord) -> bool {
        self.instance == r.instance
            && self.mode == r.mode
            && self.alpha_cu == r.alpha_cu
            && self.alpha_fl == r.alpha_fl
    }

    fn chance(&self) -> ChanceConfig<f64> {
        let d = ChanceConfig::<f64>::default();
        ChanceConfig {
            alpha_cu: self.alpha_cu.unwrap_or(d.alpha_cu),
            alpha_fl: self.alpha_fl.unwrap_or(d.alpha_fl),
        }
    }
}

/// Cells in table order: deterministic, Cu-only, Fl-only, then combined with
/// the Cu level varying slowest. Modes absent from the spec are skipped.
pub fn cells(spec: &ExperimentSpec, instance: &str) -> Vec<CellKey> {
    let key = |mode, alpha_cu, alpha_fl| CellKey {
        instance: instance.to_string(),
        mode,
        alpha_cu,
        alpha_fl,
    };
    let mut out = Vec::new();
    for mode in FitnessMode::ALL {
        if !spec.modes.contains(&mode) {
            continue;
        }
        match mode {
            FitnessMode::Deterministic => out.push(key(mode, None, None)),
            FitnessMode::ChanceCu => {
                out.extend(spec.alpha_cu.iter().map(|&a| key(mode, Some(a), None)))
            }
            FitnessMode::ChanceFl => {
                out.extend(spec.alpha_fl.iter().map(|&a| key(mode, None, Some(a))))
            }
            FitnessMode::ChanceBoth => {
                for &a in &spec.alpha_cu {
                    out.extend(spec.alpha_fl.iter().map(|&b| key(mode, Some(a), Some(b))));
                }
            }
        }
    }
    out
}

/// One line of the run log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub mode: FitnessMode,
    pub alpha_cu: Option<f64>,
    pub alpha_fl: Option<f64>,
    pub run: usize,
    pub seed: u64,
    pub generations: usize,
    pub fitness: LoggedFitness,
    pub feasible: bool,
    pub population_feasible: bool,
}

impl RunRecord {
    pub fn objective(&self) -> f64 {
        self.fitness.objective
    }

    pub fn succeeded(&self, rule: SuccessRule) -> bool {
        match rule {
            SuccessRule::Best => self.feasible,
            SuccessRule::Population => self.population_feasible,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub key: CellKey,
    pub runs: usize,
    pub successes: usize,
    /// Statistics of the successful runs' objectives; `None` without any.
    pub mean: Option<f64>,
    pub best: Option<f64>,
    pub worst: Option<f64>,
    pub success_rate: f64,
}

/// Groups records by cell, in order of first appearance.
pub fn summarize(records: &[RunRecord], rule: SuccessRule) -> Vec<CellSummary> {
    let mut keys: Vec<CellKey> = Vec::new();
    for r in records {
        if !keys.iter().any(|k| k.matches(r)) {
            keys.push(CellKey {
                instance: r.instance.clone(),
                mode: r.mode,
                alpha_cu: r.alpha_cu,
                alpha_fl: r.alpha_fl,
            });
        }
    }
    keys.into_iter()
        .map(|key| {
            let cell: Vec<&RunRecord> = records.iter().filter(|r| key.matches(r)).collect();
            let wins: Vec<f64> = cell
                .iter()
                .filter(|r| r.succeeded(rule))
                .map(|r| r.objective())
                .collect();
            let n = wins.len();
            let (mean, best, worst) = if n == 0 {
                (None, None, None)
            } else {
                (
                    Some(wins.iter().sum::<f64>() / n as f64),
                    Some(wins.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                    Some(wins.iter().copied().fold(f64::INFINITY, f64::min)),
                )
            };
            CellSummary {
                key,
                runs: cell.len(),
                successes: n,
                mean,
                best,
                worst,
                success_rate: n as f64 / cell.len() as f64,
            }
        })
        .collect()
}

/// Runs every cell of the grid on already loaded instances. Results come
/// back in cell order, then run order, whatever the thread count.
pub fn run_cells(
    instances: &[Instance64],
    spec: &ExperimentSpec,
    jobs: Option<usize>,
) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    let mut names = HashSet::new();
    for inst in instances {
        if !names.insert(inst.name.as_str()) {
            return Err(HarnessError::Spec(format!(
                "duplicate instance name `{}`",
                inst.name
            )));
        }
    }
    let instances: Vec<Instance64> = instances
        .iter()
        .cloned()
        .map(|mut inst| {
            if let Some(base) = spec.log_base {
                inst.factors.log_base = base;
            }
            inst
        })
        .collect();
    let mut jobs_list = Vec::new();
    for inst in &instances {
        for key in cells(spec, &inst.name) {
            for run in 0..spec.runs {
                jobs_list.push((inst, key.clone(), run));
            }
        }
    }
    let execute = || {
        jobs_list
            .par_iter()
            .map(|(inst, key, run)| {
                let seed = child_seed(spec.de.seed, *run as u64);
                let mut fitness = FitnessConfig::new(key.mode, key.chance());
                fitness.strict_inventory = spec.strict_inventory;
                let result = de::run(inst, &spec.de_config(seed, fitness))?;
                Ok(RunRecord {
                    instance: key.instance.clone(),
                    mode: key.mode,
                    alpha_cu: key.alpha_cu,
                    alpha_fl: key.alpha_fl,
                    run: *run,
                    seed,
                    generations: result.generations,
                    fitness: result.best.fitness.into(),
                    feasible: result.feasible,
                    population_feasible: result.population_feasible,
                })
            })
            .collect::<Result<Vec<_>>>()
    };
    match jobs {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| HarnessError::Spec(format!("cannot start {k} worker threads: {e}")))?
            .install(execute),
        None => execute(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutcome {
    pub records: Vec<RunRecord>,
    pub summaries: Vec<CellSummary>,
}

impl ExperimentOutcome {
    pub fn any_success(&self) -> bool {
        self.summaries.iter().any(|s| s.successes > 0)
    }
}

/// Loads the spec's instances and runs the whole grid.
pub fn run_experiment(spec: &ExperimentSpec, jobs: Option<usize>) -> Result<ExperimentOutcome> {
    if spec.instances.is_empty() {
        return Err(HarnessError::Spec("no instances listed".into()));
    }
    let instances = spec
        .instances
        .iter()
        .map(load_instance::<f64>)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let records = run_cells(&instances, spec, jobs)?;
    let summaries = summarize(&records, spec.success);
    Ok(ExperimentOutcome { records, summaries })
}

pub fn write_run_log(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("run records serialize");
        out.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    file.write_all(&out).map_err(|e| HarnessError::io(path, e))
}

pub fn read_run_log(path: &Path) -> Result<Vec<RunRecord>> {
    let file = fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line).map_err(|e| HarnessError::Parse {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", i + 1),
            })?,
        );
    }
    Ok(records)
}

/// Writes the run log, the CSV summary and the text tables into `dir`.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write_run_log(&outcome.records, &dir.join(RUN_LOG))?;
    report::write_csv(&outcome.summaries, &dir.join(SUMMARY_CSV))?;
    let table = report::render_table(&outcome.summaries);
    fs::write(dir.join(SUMMARY_TABLE), table)
        .map_err(|e| HarnessError::io(dir.join(SUMMARY_TABLE), e))
}
