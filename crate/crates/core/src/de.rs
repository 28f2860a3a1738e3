//! Differential evolution over claim-fraction genomes.
//!
//! Each generation builds one trial per member with DE/target-to-best/1
//! mutation and binomial crossover, all against the population as it stood
//! at the start of the generation, then lets each trial replace its target
//! when it is at least as good under [`lex_compare`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::fitness::{
    eval_fitness, lex_compare, Evaluated, FitnessConfig, FitnessVector, Preference,
};
use crate::model::{Genome, Instance};
use crate::rng::{stream, StreamRng};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DeConfig<T> {
    pub pop_size: usize,
    pub generations: usize,
    /// Scale factor `F`.
    pub f_scale: T,
    /// Crossover rate `Cr`.
    pub crossover_rate: T,
    pub seed: u64,
    pub fitness: FitnessConfig<T>,
}

impl<T: Scalar> Default for DeConfig<T> {
    fn default() -> Self {
        DeConfig {
            pop_size: 10,
            generations: 10_000,
            f_scale: T::lit(0.5),
            crossover_rate: T::lit(0.9),
            seed: 0,
            fitness: FitnessConfig::deterministic(),
        }
    }
}

impl<T: Scalar> DeConfig<T> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.pop_size < 4 {
            return Err(ConfigError::PopulationTooSmall(self.pop_size));
        }
        if !(self.f_scale > T::zero() && self.f_scale.is_finite()) {
            return Err(ConfigError::ScaleFactor(self.f_scale.as_f64()));
        }
        if !(self.crossover_rate >= T::zero() && self.crossover_rate <= T::one()) {
            return Err(ConfigError::CrossoverRate(self.crossover_rate.as_f64()));
        }
        if self.fitness.mode != crate::fitness::FitnessMode::Deterministic {
            self.fitness.chance.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Population<T> {
    pub members: Vec<Evaluated<T>>,
    pub best_index: usize,
}

impl<T: Scalar> Population<T> {
    pub fn from_members(members: Vec<Evaluated<T>>) -> Self {
        let best_index = best_of(&members);
        Population {
            members,
            best_index,
        }
    }

    pub fn best(&self) -> &Evaluated<T> {
        &self.members[self.best_index]
    }

    pub fn all_feasible(&self, parcels: usize) -> bool {
        self.members.iter().all(|m| m.fitness.is_feasible(parcels))
    }
}

/// Index of the lexicographically best member; the earliest wins ties.
fn best_of<T: Scalar>(members: &[Evaluated<T>]) -> usize {
    let mut best = 0;
    for (i, m) in members.iter().enumerate().skip(1) {
        if lex_compare(&m.fitness, &members[best].fitness) == Preference::APreferred {
            best = i;
        }
    }
    best
}

/// Hooks into a run, for tracing and tests.
pub trait RunObserver<T> {
    fn on_parents(&mut self, _generation: usize, _target: usize, _r1: usize, _r2: usize) {}
    fn on_generation(&mut self, _generation: usize, _population: &Population<T>) {}
}

/// Observer that does nothing.
pub struct Silent;

impl<T> RunObserver<T> for Silent {}

fn random_genome<T: Scalar>(instance: &Instance<T>, rng: &mut StreamRng) -> Genome<T> {
    let (p, s) = (instance.parcel_count(), instance.stockpile_count);
    let data = (0..p * s).map(|_| T::lit(rng.random::<f64>())).collect();
    Genome::new(p, s, data)
}

fn init_with<T: Scalar>(
    instance: &Instance<T>,
    config: &DeConfig<T>,
    rng: &mut StreamRng,
) -> Population<T> {
    let members = (0..config.pop_size)
        .map(|_| {
            let genome = random_genome(instance, rng);
            eval_fitness(instance, &genome, &config.fitness)
        })
        .collect();
    Population::from_members(members)
}

/// Random initial population, entries uniform in `[0, 1)`, each member
/// repaired and scored.
pub fn init_population<T: Scalar>(
    instance: &Instance<T>,
    config: &DeConfig<T>,
) -> Result<Population<T>, ConfigError> {
    config.validate()?;
    Ok(init_with(instance, config, &mut stream(config.seed)))
}

/// Two distinct indices in `0..pop_size`, both different from `target`.
pub fn sample_parents(rng: &mut StreamRng, pop_size: usize, target: usize) -> (usize, usize) {
    assert!(pop_size >= 3 && target < pop_size);
    // Draw from the indices with `target` removed, then shift past it.
    let skip = |r: usize| if r >= target { r + 1 } else { r };
    let a = rng.random_range(0..pop_size - 1);
    let mut b = rng.random_range(0..pop_size - 2);
    if b >= a {
        b += 1;
    }
    (skip(a), skip(b))
}

/// `x_i + F (x_best - x_i) + F (x_r1 - x_r2)`, clamped to `[0, 1]`.
pub fn mutate_target_to_best<T: Scalar>(
    x_i: &Genome<T>,
    x_best: &Genome<T>,
    x_r1: &Genome<T>,
    x_r2: &Genome<T>,
    f_scale: T,
) -> Genome<T> {
    let mut out = x_i.clone();
    let parts = (x_best.as_slice(), x_r1.as_slice(), x_r2.as_slice());
    for (j, v) in out.as_mut_slice().iter_mut().enumerate() {
        let xi = *v;
        let raw = xi + f_scale * (parts.0[j] - xi) + f_scale * (parts.1[j] - parts.2[j]);
        *v = raw.max(T::zero()).min(T::one());
    }
    out
}

/// Binomial crossover: gene `j` comes from the mutant when a fresh uniform
/// draw is at most `Cr`, and always at `j_rand`.
pub fn crossover_binomial<T: Scalar>(
    x_i: &Genome<T>,
    v_i: &Genome<T>,
    crossover_rate: T,
    j_rand: usize,
    rng: &mut StreamRng,
) -> Genome<T> {
    let mut out = x_i.clone();
    for (j, (u, &v)) in out
        .as_mut_slice()
        .iter_mut()
        .zip(v_i.as_slice())
        .enumerate()
    {
        let draw = T::lit(rng.random::<f64>());
        if draw <= crossover_rate || j == j_rand {
            *u = v;
        }
    }
    out
}

/// The trial survives unless the target is strictly better.
pub fn select<T: Scalar>(target: Evaluated<T>, trial: Evaluated<T>) -> Evaluated<T> {
    match lex_compare(&trial.fitness, &target.fitness) {
        Preference::BPreferred => target,
        Preference::APreferred | Preference::Tie => trial,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult<T> {
    pub best: Evaluated<T>,
    pub feasible: bool,
    /// Every member of the final population is feasible.
    pub population_feasible: bool,
    pub generations: usize,
    /// Objective of the lexicographically best member, starting with the
    /// initial population.
    pub history: Vec<T>,
}

impl<T: Scalar> RunResult<T> {
    pub fn fitness(&self) -> &FitnessVector<T> {
        &self.best.fitness
    }
}

pub fn run<T: Scalar>(
    instance: &Instance<T>,
    config: &DeConfig<T>,
) -> Result<RunResult<T>, ConfigError> {
    run_observed(instance, config, &mut Silent)
}

pub fn run_observed<T: Scalar>(
    instance: &Instance<T>,
    config: &DeConfig<T>,
    observer: &mut impl RunObserver<T>,
) -> Result<RunResult<T>, ConfigError> {
    config.validate()?;
    let mut rng = stream(config.seed);
    let mut population = init_with(instance, config, &mut rng);
    observer.on_generation(0, &population);
    let np = config.pop_size;
    let dim = instance.parcel_count() * instance.stockpile_count;
    let mut history = Vec::with_capacity(config.generations + 1);
    history.push(population.best().fitness.objective);

    for generation in 1..=config.generations {
        let best = &population.best().genome;
        let trials: Vec<Genome<T>> = (0..np)
            .map(|i| {
                let (r1, r2) = sample_parents(&mut rng, np, i);
                observer.on_parents(generation, i, r1, r2);
                let members = &population.members;
                let mutant = mutate_target_to_best(
                    &members[i].genome,
                    best,
                    &members[r1].genome,
                    &members[r2].genome,
                    config.f_scale,
                );
                let j_rand = rng.random_range(0..dim);
                crossover_binomial(
                    &members[i].genome,
                    &mutant,
                    config.crossover_rate,
                    j_rand,
                    &mut rng,
                )
            })
            .collect();
        let next = population
            .members
            .into_iter()
            .zip(trials)
            .map(|(target, trial)| select(target, eval_fitness(instance, &trial, &config.fitness)))
            .collect();
        population = Population::from_members(next);
        history.push(population.best().fitness.objective);
        observer.on_generation(generation, &population);
    }

    let parcels = instance.parcel_count();
    let population_feasible = population.all_feasible(parcels);
    let best = population.members.swap_remove(population.best_index);
    Ok(RunResult {
        feasible: best.fitness.is_feasible(parcels),
        population_feasible,
        best,
        generations: config.generations,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::FitnessMode;
    use crate::golden;
    use crate::uncertainty::ChanceConfig;
    use proptest::prelude::*;

    fn small_config(generations: usize, seed: u64) -> DeConfig<f64> {
        DeConfig {
            generations,
            seed,
            ..DeConfig::default()
        }
    }

    #[test]
    fn initial_population_shape_and_determinism() {
        let inst: Instance<f64> = golden::instance(1);
        let cfg = small_config(0, 42);
        let pop = init_population(&inst, &cfg).unwrap();
        assert_eq!(pop.members.len(), 10);
        for m in &pop.members {
            assert_eq!((m.genome.parcels(), m.genome.stockpiles()), (3, 7));
            assert!(m
                .genome
                .as_slice()
                .iter()
                .all(|&x| (0.0..=1.0).contains(&x)));
        }
        assert_eq!(pop, init_population(&inst, &cfg).unwrap());
    }

    #[test]
    fn rejects_bad_configs() {
        let inst: Instance<f64> = golden::instance(1);
        let cfg = DeConfig {
            pop_size: 3,
            ..small_config(0, 1)
        };
        assert_eq!(
            init_population(&inst, &cfg).unwrap_err(),
            ConfigError::PopulationTooSmall(3)
        );
        let cfg = DeConfig {
            f_scale: 0.0,
            ..small_config(0, 1)
        };
        assert!(matches!(cfg.validate(), Err(ConfigError::ScaleFactor(_))));
        let cfg = DeConfig {
            crossover_rate: 1.5,
            ..small_config(0, 1)
        };
        assert!(matches!(cfg.validate(), Err(ConfigError::CrossoverRate(_))));
        let mut cfg = small_config(0, 1);
        cfg.fitness = FitnessConfig::new(
            FitnessMode::ChanceCu,
            ChanceConfig {
                alpha_cu: 1.0,
                alpha_fl: 0.9,
            },
        );
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::Confidence { .. })
        ));
    }

    fn g(values: &[f64]) -> Genome<f64> {
        Genome::new(1, values.len(), values.to_vec())
    }

    #[test]
    fn mutation_arithmetic() {
        let m = mutate_target_to_best(&g(&[0.2]), &g(&[0.4]), &g(&[0.6]), &g(&[0.2]), 0.5);
        assert!((m.as_slice()[0] - 0.5).abs() < 1e-15);
        let x = g(&[0.1, 0.7, 0.3]);
        assert_eq!(mutate_target_to_best(&x, &x, &x, &x, 0.8), x);
        let far = mutate_target_to_best(
            &g(&[0.9, 0.1]),
            &g(&[1.0, 0.0]),
            &g(&[1.0, 0.0]),
            &g(&[0.0, 1.0]),
            2.0,
        );
        assert_eq!(far.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn crossover_extremes() {
        let x = g(&[0.0; 6]);
        let v = g(&[1.0; 6]);
        let mut rng = stream(3);
        assert_eq!(crossover_binomial(&x, &v, 1.0, 2, &mut rng), v);
        let u = crossover_binomial(&x, &v, 0.0, 4, &mut rng);
        assert_eq!(u.as_slice(), &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let a = crossover_binomial(&x, &v, 0.5, 0, &mut stream(9));
        let b = crossover_binomial(&x, &v, 0.5, 0, &mut stream(9));
        assert_eq!(a, b);
    }

    fn evaluated(fitness: FitnessVector<f64>, tag: f64) -> Evaluated<f64> {
        Evaluated {
            genome: g(&[tag]),
            fitness,
            plan: None,
        }
    }

    fn fv(u: f64, g: f64, objective: f64) -> FitnessVector<f64> {
        FitnessVector {
            u,
            v: 0.0,
            w: 0.0,
            q: 0.0,
            g,
            objective,
        }
    }

    #[test]
    fn selection_rules() {
        let target = evaluated(fv(5.0, 0.0, 9e9), 0.0);
        let trial = evaluated(fv(3.0, 0.0, 1.0), 1.0);
        assert_eq!(select(target, trial.clone()), trial);
        let same = evaluated(fv(3.0, 0.0, 1.0), 0.0);
        assert_eq!(select(same, trial.clone()).genome, trial.genome);
        let richer = evaluated(fv(3.0, 0.0, 2.0), 2.0);
        assert_eq!(select(trial.clone(), richer.clone()), richer);
        let feasible = evaluated(fv(3.0, 0.0, 1.0), 0.0);
        let worse = evaluated(fv(3.0, 0.5, 1e12), 1.0);
        assert_eq!(select(feasible.clone(), worse), feasible);
    }

    #[test]
    fn zero_generations_returns_initial_best() {
        let inst: Instance<f64> = golden::instance(1);
        let cfg = small_config(0, 5);
        let res = run(&inst, &cfg).unwrap();
        let pop = init_population(&inst, &cfg).unwrap();
        assert_eq!(&res.best, pop.best());
        assert_eq!(res.history.len(), 1);
        assert_eq!(res.feasible, res.best.fitness.is_feasible(3));
    }

    struct Recorder {
        parents: Vec<(usize, usize, usize)>,
        bests: Vec<FitnessVector<f64>>,
        normalized: bool,
    }

    impl RunObserver<f64> for Recorder {
        fn on_parents(&mut self, _generation: usize, target: usize, r1: usize, r2: usize) {
            self.parents.push((target, r1, r2));
        }

        fn on_generation(&mut self, _generation: usize, population: &Population<f64>) {
            self.bests.push(population.best().fitness);
            for m in &population.members {
                for row in m.genome.rows() {
                    let sum: f64 = row.iter().sum();
                    self.normalized &= (sum - 1.0).abs() <= 1e-12;
                }
            }
        }
    }

    #[test]
    fn runs_are_elitist_disciplined_and_reproducible() {
        let inst: Instance<f64> = golden::instance(1);
        let cfg = small_config(60, 17);
        let mut rec = Recorder {
            parents: vec![],
            bests: vec![],
            normalized: true,
        };
        let res = run_observed(&inst, &cfg, &mut rec).unwrap();
        assert_eq!(rec.parents.len(), 60 * 10);
        assert!(rec
            .parents
            .iter()
            .all(|&(i, a, b)| a != b && a != i && b != i));
        assert!(rec.normalized);
        for pair in rec.bests.windows(2) {
            assert_ne!(lex_compare(&pair[1], &pair[0]), Preference::BPreferred);
        }
        assert_eq!(res.history.len(), 61);
        assert_eq!(res, run(&inst, &cfg).unwrap());
    }

    #[test]
    fn f32_runs_work() {
        let inst: Instance<f32> = golden::instance(1);
        let cfg = DeConfig::<f32> {
            generations: 20,
            seed: 3,
            ..DeConfig::default()
        };
        let res = run(&inst, &cfg).unwrap();
        assert!(res.best.fitness.objective.is_finite());
    }

    proptest! {
        #[test]
        fn parents_are_distinct(seed in any::<u64>(), np in 4usize..20, target_frac in 0.0f64..1.0) {
            let target = ((np as f64) * target_frac) as usize % np;
            let mut rng = stream(seed);
            for _ in 0..20 {
                let (a, b) = sample_parents(&mut rng, np, target);
                prop_assert!(a != b && a != target && b != target && a < np && b < np);
            }
        }
    }
}
