//! Solution files: the best plan of a run with its durations and fitness.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stockblend_core::{FitnessMode, Genome64, Instance64, RunResult64};

use crate::nonfinite::LoggedFitness;
use crate::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub instance: String,
    pub mode: FitnessMode,
    pub alpha_cu: Option<f64>,
    pub alpha_fl: Option<f64>,
    pub seed: u64,
    pub generations: usize,
    /// Row `p` holds the fractions parcel `p` claims from each stockpile.
    pub genome: Vec<Vec<f64>>,
    /// Repaired duration of each parcel, in days.
    pub durations: Vec<f64>,
    pub fitness: LoggedFitness,
    pub objective: f64,
    pub feasible: bool,
}

impl SolutionFile {
    pub fn from_run(
        instance: &Instance64,
        mode: FitnessMode,
        alpha_cu: Option<f64>,
        alpha_fl: Option<f64>,
        seed: u64,
        result: &RunResult64,
    ) -> Self {
        SolutionFile {
            instance: instance.name.clone(),
            mode,
            alpha_cu,
            alpha_fl,
            seed,
            generations: result.generations,
            genome: result.best.genome.to_rows(),
            durations: result
                .best
                .plan
                .as_ref()
                .map(|p| p.durations())
                .unwrap_or_default(),
            fitness: result.best.fitness.into(),
            objective: result.best.fitness.objective,
            feasible: result.feasible,
        }
    }

    /// The stored genome, checked against the instance's shape.
    pub fn genome_for(&self, instance: &Instance64) -> Result<Genome64> {
        if self.genome.is_empty() || self.genome.iter().any(|r| r.len() != self.genome[0].len()) {
            return Err(HarnessError::Parse {
                path: "genome".into(),
                message: "genome must be a non-empty rectangular matrix".into(),
            });
        }
        let genome = Genome64::from_rows(&self.genome);
        genome.check_shape(instance)?;
        Ok(genome)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("solutions serialize");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| HarnessError::io(path, e))
    }
}
