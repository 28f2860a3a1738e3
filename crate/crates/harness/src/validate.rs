//! Monte Carlo validation of a plan's chance constraints.

use serde::{Deserialize, Serialize};
use stockblend_core::repair::repair_plan;
use stockblend_core::uncertainty::{
    binomial_margin, cantelli_bound_cu, cantelli_bound_fl, mc_estimate_all, plan_moments,
    MIN_MC_SAMPLES,
};
use stockblend_core::{ChanceConfig64, Genome64, Instance64};

use crate::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParcelCheck {
    pub parcel: usize,
    /// Cantelli upper bounds on the violation probabilities.
    pub bound_cu: f64,
    pub bound_fl: f64,
    /// Empirical probabilities of meeting each constraint.
    pub p_cu_ok: f64,
    pub p_fl_ok: f64,
    /// Lowest acceptable empirical probabilities.
    pub threshold_cu: f64,
    pub threshold_fl: f64,
    pub pass_cu: bool,
    pub pass_fl: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub seed: u64,
    pub alpha_cu: f64,
    pub alpha_fl: f64,
    pub parcels: Vec<ParcelCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.parcels.iter().all(|p| p.pass_cu && p.pass_fl)
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "samples={} seed={} alpha_cu={} alpha_fl={}\n",
            self.samples, self.seed, self.alpha_cu, self.alpha_fl
        );
        out.push_str("parcel  bound_cu  P(Cu ok)  need     bound_fl  P(Fl ok)  need     result\n");
        for p in &self.parcels {
            out.push_str(&format!(
                "{:<6}  {:<8.4}  {:<8.4}  {:<7.4}  {:<8.4}  {:<8.4}  {:<7.4}  {}\n",
                p.parcel,
                p.bound_cu,
                p.p_cu_ok,
                p.threshold_cu,
                p.bound_fl,
                p.p_fl_ok,
                p.threshold_fl,
                if p.pass_cu && p.pass_fl {
                    "pass"
                } else {
                    "FAIL"
                }
            ));
        }
        out
    }
}

/// Repairs the genome, then compares Monte Carlo success frequencies with
/// the confidence levels, allowing a three-sigma binomial margin.
pub fn validate_solution(
    instance: &Instance64,
    genome: &Genome64,
    chance: ChanceConfig64,
    samples: usize,
    seed: u64,
) -> Result<ValidationReport> {
    chance.validate()?;
    if samples < MIN_MC_SAMPLES {
        return Err(HarnessError::Spec(format!(
            "at least {MIN_MC_SAMPLES} samples are required"
        )));
    }
    genome.check_shape(instance)?;
    let repaired = repair_plan(instance, genome)?;
    let moments = plan_moments(instance, &repaired.genome, &repaired.plan)?;
    let estimates = mc_estimate_all(instance, genome, samples, seed)?;
    let threshold_cu = chance.alpha_cu - binomial_margin(chance.alpha_cu, samples);
    let threshold_fl = chance.alpha_fl - binomial_margin(chance.alpha_fl, samples);
    let parcels = instance
        .parcels
        .iter()
        .zip(moments.iter().zip(&estimates))
        .enumerate()
        .map(|(p, (spec, (m, e)))| ParcelCheck {
            parcel: p,
            bound_cu: cantelli_bound_cu(m, spec.cu_min),
            bound_fl: cantelli_bound_fl(m, instance.factors.mu_fl, spec.r_fl_max),
            p_cu_ok: e.p_cu_ok,
            p_fl_ok: e.p_fl_ok,
            threshold_cu,
            threshold_fl,
            pass_cu: e.p_cu_ok >= threshold_cu,
            pass_fl: e.p_fl_ok >= threshold_fl,
        })
        .collect();
    Ok(ValidationReport {
        samples,
        seed,
        alpha_cu: chance.alpha_cu,
        alpha_fl: chance.alpha_fl,
        parcels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use stockblend_core::golden;

    #[test]
    fn report_shape_and_sample_floor() {
        let inst: Instance64 = golden::instance(1);
        let genome = Genome64::filled(inst.parcel_count(), inst.stockpile_count, 1.0);
        let chance = ChanceConfig64::new(0.9, 0.9).unwrap();
        let r = validate_solution(&inst, &genome, chance, 1000, 5).unwrap();
        assert_eq!(r.parcels.len(), 3);
        for p in &r.parcels {
            assert!((0.0..=1.0).contains(&p.p_cu_ok) && (0.0..=1.0).contains(&p.p_fl_ok));
            assert!(p.threshold_cu < 0.9);
        }
        assert!(r.render().lines().count() == 5);
        assert!(validate_solution(&inst, &genome, chance, 999, 5).is_err());
        let bad = Genome64::filled(2, 7, 1.0);
        assert!(validate_solution(&inst, &bad, chance, 1000, 5).is_err());
    }
}
