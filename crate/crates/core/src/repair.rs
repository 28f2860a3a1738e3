//! Constraint repair: row normalization of claim fractions and bisection of
//! parcel durations into the concentrate band.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{
    concentrate, cu_recovery, parcel_tonnage, simulate_with, Genome, GradeMap, Instance,
    PlanEvaluation, ProcessingFactors,
};
use crate::scalar::Scalar;

/// Iteration cap for [`repair_duration`]; enough for month lengths up to 31
/// days and concentrate rates down to 1e-3 tonnes per day.
pub const MAX_BISECTIONS: usize = 200;

/// Scales a row onto the unit simplex. Negative or NaN entries count as zero;
/// a row with nothing left becomes uniform.
pub fn normalize_row<T: Scalar>(row: &mut [T]) {
    for x in row.iter_mut() {
        if !(*x > T::zero()) {
            *x = T::zero();
        }
    }
    let sum: T = row.iter().copied().sum();
    if !(sum > T::zero()) || !sum.is_finite() {
        let uniform = T::one() / T::from_count(row.len());
        row.iter_mut().for_each(|x| *x = uniform);
        return;
    }
    row.iter_mut().for_each(|x| *x = *x / sum);
}

pub fn normalize_rows<T: Scalar>(genome: &Genome<T>) -> Genome<T> {
    let mut out = genome.clone();
    for p in 0..out.parcels() {
        normalize_row(out.row_mut(p));
    }
    out
}

/// Concentrate produced per day at fixed parcel grades.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ConcentrateRate<T> {
    pub zeta: T,
}

impl<T: Scalar> ConcentrateRate<T> {
    pub fn at(&self, days: T) -> T {
        self.zeta * days
    }
}

/// Concentrate after one day. Concentrate is linear in duration, so this
/// slope determines the whole curve. A non-positive rate means no duration
/// can reach a positive target.
pub fn concentrate_rate<T: Scalar>(
    grades: &GradeMap<T>,
    factors: &ProcessingFactors<T>,
) -> Result<ConcentrateRate<T>, ModelError> {
    let w = parcel_tonnage(T::one(), grades, factors)?;
    let r = cu_recovery(grades.cu, grades.s, factors)?;
    let zeta = concentrate(w * grades.cu * r, grades.cu, grades.s, factors)?;
    Ok(ConcentrateRate { zeta })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DurationRepairResult<T> {
    pub duration: T,
    pub concentrate: T,
    /// Concentrate within one tonne of the target.
    pub feasible: bool,
    /// Midpoints evaluated.
    pub iterations: usize,
}

/// Bisects the duration in `[0, d_max]` until `zeta * d` lies within one
/// tonne of `k_target`.
///
/// Unreachable targets are reported, not raised: a non-positive rate gives
/// `d = 0` and a rate too small for the month gives `d = d_max`, both with
/// `feasible = false`.
pub fn repair_duration<T: Scalar>(
    rate: ConcentrateRate<T>,
    k_target: T,
    d_max: T,
    max_iters: usize,
) -> DurationRepairResult<T> {
    let one = T::one();
    let lower = k_target - one;
    let upper = k_target + one;
    let in_band = |k: T| k >= lower && k <= upper;
    let result = |duration: T, feasible: bool, iterations: usize| DurationRepairResult {
        duration,
        concentrate: rate.at(duration),
        feasible,
        iterations,
    };

    if in_band(T::zero()) {
        return result(T::zero(), true, 0);
    }
    if !(rate.zeta > T::zero()) {
        return result(T::zero(), false, 0);
    }
    if rate.at(d_max) < lower {
        return result(d_max, false, 0);
    }

    let two = one + one;
    let (mut lo, mut hi) = (T::zero(), d_max);
    let mut d = d_max / two;
    for iter in 1..=max_iters {
        let k = rate.at(d);
        if k > upper {
            hi = d;
        } else if k < lower {
            lo = d;
        } else {
            return result(d, true, iter);
        }
        d = (lo + hi) / two;
    }
    result(d, in_band(rate.at(d)), max_iters)
}

/// A genome after both repairs, with the simulated plan.
#[derive(Clone, Debug, PartialEq)]
pub struct RepairedPlan<T> {
    pub genome: Genome<T>,
    pub plan: PlanEvaluation<T>,
    pub repairs: Vec<DurationRepairResult<T>>,
}

/// Normalizes the genome, then simulates the plan parcel by parcel, choosing
/// each duration by bisection against the grades the parcel actually sees.
pub fn repair_plan<T: Scalar>(
    instance: &Instance<T>,
    genome: &Genome<T>,
) -> Result<RepairedPlan<T>, ModelError> {
    let genome = normalize_rows(genome);
    let mut repairs = Vec::with_capacity(instance.parcel_count());
    let plan = simulate_with(instance, &genome, |p, grades| {
        let parcel = &instance.parcels[p];
        let d_max = instance.months[parcel.month_index].duration_days;
        let rate = concentrate_rate(grades, &instance.factors)?;
        let fix = repair_duration(rate, parcel.k_target, d_max, MAX_BISECTIONS);
        repairs.push(fix);
        Ok((fix.duration, fix.feasible))
    })?;
    Ok(RepairedPlan {
        genome,
        plan,
        repairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden;
    use crate::model::simulate;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn normalizes_by_row_sum() {
        let g = Genome::new(1, 3, vec![2.0, 2.0, 4.0]);
        assert_eq!(normalize_rows(&g).row(0), &[0.25, 0.25, 0.5]);
    }

    #[test]
    fn normalized_row_is_unchanged() {
        let g: Genome<f64> = Genome::new(1, 4, vec![0.125, 0.375, 0.25, 0.25]);
        let n = normalize_rows(&g);
        for (a, b) in n.row(0).iter().zip(g.row(0)) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn zero_row_becomes_uniform() {
        let g = Genome::new(2, 7, [vec![0.0; 7], vec![1.0; 7]].concat());
        let n = normalize_rows(&g);
        assert!(n.row(0).iter().all(|&x| x == 1.0 / 7.0));
        let mut neg = vec![-1.0, f64::NAN, 0.0];
        normalize_row(&mut neg);
        assert_eq!(neg, vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn bisection_hits_the_band() {
        let fix: DurationRepairResult<f64> = repair_duration(
            ConcentrateRate { zeta: 50000.0 },
            750000.0,
            30.0,
            MAX_BISECTIONS,
        );
        assert!(fix.feasible);
        assert!((fix.concentrate - 750000.0).abs() <= 1.0);
        assert!((fix.duration - 15.0).abs() <= 1.0 / 50000.0);
        // 15 is the first midpoint.
        assert_eq!(fix.iterations, 1);
    }

    #[test]
    fn bisection_reports_short_month() {
        let fix = repair_duration(
            ConcentrateRate { zeta: 10000.0 },
            750000.0,
            30.0,
            MAX_BISECTIONS,
        );
        assert_eq!(
            (fix.duration, fix.concentrate, fix.feasible),
            (30.0, 300000.0, false)
        );
    }

    #[test]
    fn bisection_edge_cases() {
        let fix = repair_duration(ConcentrateRate { zeta: 123.0 }, 0.0, 30.0, MAX_BISECTIONS);
        assert_eq!((fix.duration, fix.feasible, fix.iterations), (0.0, true, 0));
        let fix = repair_duration(ConcentrateRate { zeta: -5.0 }, 1000.0, 30.0, MAX_BISECTIONS);
        assert_eq!((fix.duration, fix.feasible), (0.0, false));
        let fix = repair_duration(ConcentrateRate { zeta: 0.0 }, 1000.0, 30.0, MAX_BISECTIONS);
        assert_eq!((fix.duration, fix.feasible), (0.0, false));
    }

    #[test]
    fn rate_is_zero_when_tonnage_vanishes() {
        let f = golden::instance::<f64>(1).factors;
        let mut g = GradeMap {
            cu: 1.0,
            ag: 1.0,
            fe: 1.0,
            au: 1.0,
            u: 1.0,
            fl: 1.0,
            s: 0.5,
        };
        let mut f0 = f.clone();
        f0.phi_base = 0.0;
        assert_eq!(concentrate_rate(&g, &f0).unwrap().zeta, 0.0);
        g.cu = 1.5;
        let rate = concentrate_rate(&g, &f).unwrap();
        for d in [0.5, 1.0, 7.0] {
            let w = parcel_tonnage(d, &g, &f).unwrap();
            let c = w * g.cu * cu_recovery(g.cu, g.s, &f).unwrap();
            let k = concentrate(c, g.cu, g.s, &f).unwrap();
            assert_relative_eq!(k, rate.at(d), max_relative = 1e-12);
        }
    }

    #[test]
    fn stockpile_seven_rate_matches_hand_evaluation() {
        // Stockpile 7 of instance 1 as the sole source: ln-based tonnage rate,
        // Cu recovery 2.5 * 1.61 / 0.15 and share 7 * 1.61 / 0.15 + 36,
        // evaluated independently of the crate.
        let inst: Instance<f64> = golden::instance(1);
        let g = inst.months[0].haul[6].grades;
        let bracket = 1100.0 + 270.0 * 0.61f64.ln() + 340.0 * 31f64.ln() - 564000.0 * 16.5f64.ln()
            + 6050000.0 * 1.61f64.ln();
        let expected = 0.98 * bracket * 1.61 * (2.5 * 1.61 / 0.15) / (7.0 * 1.61 / 0.15 + 36.0);
        let rate = concentrate_rate(&g, &inst.factors).unwrap();
        assert_relative_eq!(rate.zeta, expected, max_relative = 1e-12);
    }

    #[test]
    fn repaired_plan_lands_every_reachable_parcel() {
        let inst: Instance<f64> = golden::instance(1);
        let mut genome = Genome::filled(3, 7, 0.0);
        for p in 0..3 {
            genome.row_mut(p)[6] = 3.0;
        }
        let fixed = repair_plan(&inst, &genome).unwrap();
        assert!(fixed.genome.rows().all(|r| r[6] == 1.0));
        for (o, parcel) in fixed.plan.parcels.iter().zip(&inst.parcels) {
            assert!(o.duration_feasible);
            assert!((o.concentrate - parcel.k_target).abs() <= 1.0);
        }
        let again = simulate(&inst, &fixed.genome, &fixed.plan.durations()).unwrap();
        assert_eq!(again, fixed.plan);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent_and_scale_free(row in prop::collection::vec(0.0f64..1.0, 7), alpha in 0.001f64..1000.0) {
            let g = Genome::new(1, 7, row.clone());
            let once = normalize_rows(&g);
            let sum: f64 = once.row(0).iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            let twice = normalize_rows(&once);
            for (a, b) in once.row(0).iter().zip(twice.row(0)) {
                prop_assert!((a - b).abs() <= 1e-15);
            }
            let scaled = Genome::new(1, 7, row.iter().map(|x| x * alpha).collect());
            for (a, b) in normalize_rows(&scaled).row(0).iter().zip(once.row(0)) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn bisection_is_fast_and_exact(zeta in 1e-3f64..1e7, k in 2.0f64..1e6, d_max in 1.0f64..31.0) {
            let rate = ConcentrateRate { zeta };
            let fix = repair_duration(rate, k, d_max, MAX_BISECTIONS);
            prop_assert!(fix.duration >= 0.0 && fix.duration <= d_max);
            let root = k / zeta;
            if root > 0.0 && zeta * d_max > k + 1.0 {
                prop_assert!(fix.feasible);
                let bound = (d_max * zeta / 2.0).log2().ceil().max(1.0) as usize;
                prop_assert!(fix.iterations <= bound, "{} > {}", fix.iterations, bound);
            }
            if fix.feasible {
                prop_assert!(k - 1.0 <= zeta * fix.duration && zeta * fix.duration <= k + 1.0);
            } else {
                prop_assert!(zeta * d_max < k - 1.0);
                prop_assert_eq!(fix.duration, d_max);
            }
        }
    }
}
