//! Stochastic stockpile grades.
//!
//! Hauled Cu and Fl grades are random with known mean and variance. Their
//! moments are pushed through the stockpile blending recursion, mixed into
//! parcel moments under independence, and turned into one-sided Cantelli
//! bounds on the probability that a parcel breaks its Cu floor or Fl ceiling.
//! [`mc_estimate`] samples the same model to check those bounds empirically.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ModelError};
use crate::model::{blend_grade, Genome, Instance, PlanEvaluation};
use crate::repair::repair_plan;
use crate::rng::{stream, StreamRng};
use crate::scalar::Scalar;

/// Mean and variance of one stockpile grade.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GradeMoments<T> {
    pub mean: T,
    pub variance: T,
}

/// Moments of the two materials that carry chance constraints.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StockpileMoments<T> {
    pub cu: GradeMoments<T>,
    pub fl: GradeMoments<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ParcelMoments<T> {
    pub mean_cu: T,
    pub var_cu: T,
    pub mean_fl: T,
    pub var_fl: T,
}

/// Required confidence levels of the Cu-grade and Fl-recovery constraints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ChanceConfig<T> {
    pub alpha_cu: T,
    pub alpha_fl: T,
}

impl<T: Scalar> ChanceConfig<T> {
    pub fn new(alpha_cu: T, alpha_fl: T) -> Result<Self, ConfigError> {
        let config = ChanceConfig { alpha_cu, alpha_fl };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [("alpha_cu", self.alpha_cu), ("alpha_fl", self.alpha_fl)] {
            if !(value > T::zero() && value < T::one()) {
                return Err(ConfigError::Confidence {
                    name,
                    value: value.as_f64(),
                });
            }
        }
        Ok(())
    }
}

impl<T: Scalar> Default for ChanceConfig<T> {
    fn default() -> Self {
        ChanceConfig {
            alpha_cu: T::lit(0.9),
            alpha_fl: T::lit(0.9),
        }
    }
}

/// Moments of a stockpile grade after the parcel that may trigger a haul.
///
/// Without a month start the moments pass through. Otherwise the mean is the
/// tonnage-weighted blend and the variance combines the squared weights,
/// treating the stockpile and the haul as independent.
pub fn propagate_moments<T: Scalar>(
    prev: GradeMoments<T>,
    prev_tonnage: T,
    haul_mean: T,
    haul_var: T,
    haul_tonnage: T,
    month_start: bool,
) -> Result<GradeMoments<T>, ModelError> {
    if !month_start {
        return Ok(prev);
    }
    let mean = blend_grade(prev.mean, prev_tonnage, haul_mean, haul_tonnage)?;
    if prev_tonnage == T::zero() {
        return Ok(GradeMoments {
            mean,
            variance: haul_var,
        });
    }
    let total = prev_tonnage + haul_tonnage;
    let keep = prev_tonnage / total;
    let fresh = haul_tonnage / total;
    Ok(GradeMoments {
        mean,
        variance: keep * keep * prev.variance + fresh * fresh * haul_var,
    })
}

/// Parcel moments from claim fractions, assuming independent stockpiles.
pub fn parcel_moments<T: Scalar>(x_row: &[T], moments: &[StockpileMoments<T>]) -> ParcelMoments<T> {
    let mut pm = ParcelMoments {
        mean_cu: T::zero(),
        var_cu: T::zero(),
        mean_fl: T::zero(),
        var_fl: T::zero(),
    };
    for (&x, m) in x_row.iter().zip(moments) {
        if x == T::zero() {
            continue;
        }
        pm.mean_cu = pm.mean_cu + x * m.cu.mean;
        pm.mean_fl = pm.mean_fl + x * m.fl.mean;
        pm.var_cu = pm.var_cu + x * x * m.cu.variance;
        pm.var_fl = pm.var_fl + x * x * m.fl.variance;
    }
    pm
}

/// Cantelli upper bound on `Pr{Cu grade <= cu_min}`.
///
/// A mean at or below the floor gives no usable bound and is scored as 1.
pub fn cantelli_bound_cu<T: Scalar>(pm: &ParcelMoments<T>, cu_min: T) -> T {
    let gap = pm.mean_cu - cu_min;
    if !(gap > T::zero()) {
        return T::one();
    }
    pm.var_cu / (pm.var_cu + gap * gap)
}

pub fn cantelli_violation_cu<T: Scalar>(pm: &ParcelMoments<T>, cu_min: T, alpha_cu: T) -> T {
    (cantelli_bound_cu(pm, cu_min) - (T::one() - alpha_cu)).max(T::zero())
}

/// Cantelli upper bound on `Pr{mu_fl * Fl grade >= r_fl_max}`, in recovery
/// units: mean `mu_fl * E` and variance `mu_fl^2 * Var`.
pub fn cantelli_bound_fl<T: Scalar>(pm: &ParcelMoments<T>, mu_fl: T, r_fl_max: T) -> T {
    let mean = mu_fl * pm.mean_fl;
    let var = mu_fl * mu_fl * pm.var_fl;
    let gap = r_fl_max - mean;
    if !(gap > T::zero()) {
        return T::one();
    }
    var / (var + gap * gap)
}

pub fn cantelli_violation_fl<T: Scalar>(
    pm: &ParcelMoments<T>,
    mu_fl: T,
    r_fl_max: T,
    alpha_fl: T,
) -> T {
    (cantelli_bound_fl(pm, mu_fl, r_fl_max) - (T::one() - alpha_fl)).max(T::zero())
}

/// Per-parcel moments of a simulated plan.
///
/// Hauled grades have mean equal to the file grade and standard deviation
/// `rel_std` times it. Blending weights are the plan's inventories.
pub fn plan_moments<T: Scalar>(
    instance: &Instance<T>,
    genome: &Genome<T>,
    plan: &PlanEvaluation<T>,
) -> Result<Vec<ParcelMoments<T>>, ModelError> {
    genome.check_shape(instance)?;
    let s_count = instance.stockpile_count;
    let rho = instance.rel_std;
    let mut moments = vec![StockpileMoments::<T>::default(); s_count];
    let mut out = Vec::with_capacity(instance.parcel_count());
    for (p, parcel) in instance.parcels.iter().enumerate() {
        if parcel.is_month_first {
            let before = plan.inventory_before(p);
            let month = &instance.months[parcel.month_index];
            for (s, haul) in month.haul.iter().enumerate() {
                if haul.tonnage > T::zero() {
                    let weight = before[s].max(T::zero());
                    let (a_cu, a_fl) = (haul.grades.cu, haul.grades.fl);
                    let sd_cu = rho * a_cu;
                    let sd_fl = rho * a_fl;
                    moments[s].cu = propagate_moments(
                        moments[s].cu,
                        weight,
                        a_cu,
                        sd_cu * sd_cu,
                        haul.tonnage,
                        true,
                    )?;
                    moments[s].fl = propagate_moments(
                        moments[s].fl,
                        weight,
                        a_fl,
                        sd_fl * sd_fl,
                        haul.tonnage,
                        true,
                    )?;
                }
            }
        }
        out.push(parcel_moments(genome.row(p), &moments));
    }
    Ok(out)
}

/// Empirical probabilities that a parcel meets its Cu floor and Fl ceiling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub p_cu_ok: f64,
    pub p_fl_ok: f64,
}

/// Smallest sample count accepted by the Monte Carlo routines.
pub const MIN_MC_SAMPLES: usize = 1000;

fn truncated_normal(rng: &mut StreamRng, mean: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return mean;
    }
    let law = Normal::new(mean, sd).expect("finite non-negative standard deviation");
    for _ in 0..10_000 {
        let x = law.sample(rng);
        if x >= 0.0 {
            return x;
        }
    }
    0.0
}

/// Monte Carlo check of every parcel of a plan.
///
/// The genome is repaired first; the repaired inventories fix the blending
/// weights. Each sample redraws every hauled Cu and Fl grade from a normal law
/// with mean `a` and deviation `rel_std * a`, truncated at zero, replays the
/// stockpile blending and mixes parcel grades.
pub fn mc_estimate_all<T: Scalar>(
    instance: &Instance<T>,
    genome: &Genome<T>,
    samples: usize,
    seed: u64,
) -> Result<Vec<McEstimate>, ModelError> {
    assert!(
        samples >= MIN_MC_SAMPLES,
        "at least {MIN_MC_SAMPLES} samples are required"
    );
    let repaired = repair_plan(instance, genome)?;
    let genome = &repaired.genome;
    let plan = &repaired.plan;
    let s_count = instance.stockpile_count;
    let p_count = instance.parcel_count();
    let rho = instance.rel_std.as_f64();
    let mu_fl = instance.factors.mu_fl;

    let mut rng = stream(seed);
    let mut cu_ok = vec![0usize; p_count];
    let mut fl_ok = vec![0usize; p_count];
    let mut cu: Vec<Option<T>> = vec![None; s_count];
    let mut fl: Vec<Option<T>> = vec![None; s_count];
    for _ in 0..samples {
        cu.iter_mut().for_each(|g| *g = None);
        fl.iter_mut().for_each(|g| *g = None);
        for (p, parcel) in instance.parcels.iter().enumerate() {
            if parcel.is_month_first {
                let before = plan.inventory_before(p);
                let month = &instance.months[parcel.month_index];
                for (s, haul) in month.haul.iter().enumerate() {
                    let a_cu = haul.grades.cu.as_f64();
                    let a_fl = haul.grades.fl.as_f64();
                    let draw_cu = T::lit(truncated_normal(&mut rng, a_cu, rho * a_cu));
                    let draw_fl = T::lit(truncated_normal(&mut rng, a_fl, rho * a_fl));
                    if haul.tonnage > T::zero() {
                        let weight = before[s].max(T::zero());
                        cu[s] = Some(blend_grade(
                            cu[s].unwrap_or(draw_cu),
                            weight,
                            draw_cu,
                            haul.tonnage,
                        )?);
                        fl[s] = Some(blend_grade(
                            fl[s].unwrap_or(draw_fl),
                            weight,
                            draw_fl,
                            haul.tonnage,
                        )?);
                    }
                }
            }
            let (mut g_cu, mut g_fl) = (T::zero(), T::zero());
            for (s, &x) in genome.row(p).iter().enumerate() {
                match (cu[s], fl[s]) {
                    (Some(c), Some(f)) => {
                        g_cu = g_cu + x * c;
                        g_fl = g_fl + x * f;
                    }
                    _ if x == T::zero() => {}
                    _ => {
                        return Err(ModelError::EmptyStockpile {
                            parcel: p,
                            stockpile: s,
                        })
                    }
                }
            }
            let spec = &instance.parcels[p];
            if g_cu >= spec.cu_min {
                cu_ok[p] += 1;
            }
            if mu_fl * g_fl <= spec.r_fl_max {
                fl_ok[p] += 1;
            }
        }
    }
    let n = samples as f64;
    Ok(cu_ok
        .into_iter()
        .zip(fl_ok)
        .map(|(c, f)| McEstimate {
            p_cu_ok: c as f64 / n,
            p_fl_ok: f as f64 / n,
        })
        .collect())
}

/// Monte Carlo estimate for one parcel. See [`mc_estimate_all`].
pub fn mc_estimate<T: Scalar>(
    instance: &Instance<T>,
    genome: &Genome<T>,
    parcel_index: usize,
    samples: usize,
    seed: u64,
) -> Result<McEstimate, ModelError> {
    assert!(
        parcel_index < instance.parcel_count(),
        "parcel index out of range"
    );
    Ok(mc_estimate_all(instance, genome, samples, seed)?[parcel_index])
}

/// Three-sigma binomial margin below `alpha` for `samples` draws.
pub fn binomial_margin(alpha: f64, samples: usize) -> f64 {
    3.0 * (alpha * (1.0 - alpha) / samples as f64).sqrt()
}
