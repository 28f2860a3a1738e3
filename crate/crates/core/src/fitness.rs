//! Lexicographic fitness of blending plans.
//!
//! A plan is scored by the vector `(u, v, w, q, g, O)`: concentrate
//! deviation, duration overrun, inventory shortfall, Cu-grade violation,
//! Fl-recovery violation and Cu tonnes. Violations come first so any feasible
//! plan beats any infeasible one; the objective only breaks ties between
//! plans with identical violations.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{Genome, Instance, PlanEvaluation};
use crate::repair::repair_plan;
use crate::scalar::Scalar;
use crate::uncertainty::{
    cantelli_violation_cu, cantelli_violation_fl, plan_moments, ChanceConfig,
};

/// Which of the two quality constraints are scored as chance constraints.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum FitnessMode {
    #[default]
    #[serde(rename = "det")]
    Deterministic,
    #[serde(rename = "cu")]
    ChanceCu,
    #[serde(rename = "fl")]
    ChanceFl,
    #[serde(rename = "both")]
    ChanceBoth,
}

impl FitnessMode {
    pub const ALL: [FitnessMode; 4] = [
        FitnessMode::Deterministic,
        FitnessMode::ChanceCu,
        FitnessMode::ChanceFl,
        FitnessMode::ChanceBoth,
    ];

    pub fn chance_cu(self) -> bool {
        matches!(self, FitnessMode::ChanceCu | FitnessMode::ChanceBoth)
    }

    pub fn chance_fl(self) -> bool {
        matches!(self, FitnessMode::ChanceFl | FitnessMode::ChanceBoth)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FitnessMode::Deterministic => "det",
            FitnessMode::ChanceCu => "cu",
            FitnessMode::ChanceFl => "fl",
            FitnessMode::ChanceBoth => "both",
        }
    }
}

impl fmt::Display for FitnessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FitnessMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "det" | "deterministic" => Ok(FitnessMode::Deterministic),
            "cu" => Ok(FitnessMode::ChanceCu),
            "fl" => Ok(FitnessMode::ChanceFl),
            "both" => Ok(FitnessMode::ChanceBoth),
            other => Err(format!(
                "unknown fitness mode `{other}` (expected det, cu, fl or both)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FitnessVector<T> {
    /// Sum over parcels of `max(|K - k|, 1)`; at least the parcel count.
    pub u: T,
    /// Days over the month budgets.
    pub v: T,
    /// Inventory score, `<= 0`.
    pub w: T,
    pub q: T,
    pub g: T,
    /// Total Cu tonnes.
    pub objective: T,
}

impl<T: Scalar> FitnessVector<T> {
    /// Score of a plan that could not be evaluated. Ranks below every finite
    /// vector.
    pub fn worst() -> Self {
        FitnessVector {
            u: T::infinity(),
            v: T::infinity(),
            w: T::neg_infinity(),
            q: T::infinity(),
            g: T::infinity(),
            objective: T::neg_infinity(),
        }
    }

    pub fn is_worst(&self) -> bool {
        self.u == T::infinity()
    }

    pub fn is_feasible(&self, parcels: usize) -> bool {
        self.u == T::from_count(parcels)
            && self.v == T::zero()
            && self.w == T::zero()
            && self.q == T::zero()
            && self.g == T::zero()
    }

    fn keys(&self) -> [(T, bool); 6] {
        // (value, higher is better)
        [
            (self.u, false),
            (self.v, false),
            (self.w, true),
            (self.q, false),
            (self.g, false),
            (self.objective, true),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preference {
    APreferred,
    BPreferred,
    Tie,
}

/// Lexicographic comparison of two fitness vectors.
pub fn lex_compare<T: Scalar>(a: &FitnessVector<T>, b: &FitnessVector<T>) -> Preference {
    for ((x, higher), (y, _)) in a.keys().into_iter().zip(b.keys()) {
        let ord = x.partial_cmp(&y).unwrap_or(Ordering::Equal);
        let ord = if higher { ord } else { ord.reverse() };
        match ord {
            Ordering::Greater => return Preference::APreferred,
            Ordering::Less => return Preference::BPreferred,
            Ordering::Equal => {}
        }
    }
    Preference::Tie
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FitnessConfig<T> {
    pub mode: FitnessMode,
    pub chance: ChanceConfig<T>,
    /// Score inventory as `sum min(theta, 0)` per stockpile instead of
    /// clamping the grand total.
    #[serde(default)]
    pub strict_inventory: bool,
}

impl<T: Scalar> FitnessConfig<T> {
    pub fn new(mode: FitnessMode, chance: ChanceConfig<T>) -> Self {
        FitnessConfig {
            mode,
            chance,
            strict_inventory: false,
        }
    }

    pub fn deterministic() -> Self {
        Self::new(FitnessMode::Deterministic, ChanceConfig::default())
    }
}

/// A repaired genome with its score.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluated<T> {
    /// Genome with normalized rows, as scored.
    pub genome: Genome<T>,
    pub fitness: FitnessVector<T>,
    /// `None` when the plan could not be simulated.
    pub plan: Option<PlanEvaluation<T>>,
}

/// Repairs a genome and scores the resulting plan.
///
/// Model errors do not propagate: the plan is scored [`FitnessVector::worst`].
pub fn eval_fitness<T: Scalar>(
    instance: &Instance<T>,
    genome: &Genome<T>,
    config: &FitnessConfig<T>,
) -> Evaluated<T> {
    let repaired = match repair_plan(instance, genome) {
        Ok(r) => r,
        Err(_) => {
            return Evaluated {
                genome: crate::repair::normalize_rows(genome),
                fitness: FitnessVector::worst(),
                plan: None,
            }
        }
    };
    let fitness = score_plan(instance, &repaired.genome, &repaired.plan, config)
        .unwrap_or_else(FitnessVector::worst);
    Evaluated {
        genome: repaired.genome,
        fitness,
        plan: Some(repaired.plan),
    }
}

/// Fitness of an already simulated plan; `None` if any component is NaN or
/// the moments cannot be computed.
pub fn score_plan<T: Scalar>(
    instance: &Instance<T>,
    genome: &Genome<T>,
    plan: &PlanEvaluation<T>,
    config: &FitnessConfig<T>,
) -> Option<FitnessVector<T>> {
    let one = T::one();
    let zero = T::zero();

    let u = instance
        .parcels
        .iter()
        .zip(&plan.parcels)
        .map(|(spec, o)| (spec.k_target - o.concentrate).abs().max(one))
        .sum();

    let v = (0..instance.months.len())
        .map(|m| {
            let used: T = instance
                .month_parcels(m)
                .map(|p| plan.parcels[p].duration)
                .sum();
            (used - instance.months[m].duration_days).max(zero)
        })
        .sum();

    let w = if config.strict_inventory {
        plan.inventory.iter().map(|&theta| theta.min(zero)).sum()
    } else {
        plan.inventory.iter().copied().sum::<T>().min(zero)
    };

    let moments = if config.mode == FitnessMode::Deterministic {
        None
    } else {
        Some(plan_moments(instance, genome, plan).ok()?)
    };

    let mut q = zero;
    let mut g = zero;
    for (p, (spec, o)) in instance.parcels.iter().zip(&plan.parcels).enumerate() {
        let det_q = (spec.cu_min - o.grades.cu).max(zero);
        let det_g = (o.fl_recovery - spec.r_fl_max).max(zero);
        // A zero-variance grade is not random: its chance constraint is the
        // deterministic one.
        q = q + match &moments {
            Some(ms) if config.mode.chance_cu() && ms[p].var_cu > zero => {
                cantelli_violation_cu(&ms[p], spec.cu_min, config.chance.alpha_cu)
            }
            _ => det_q,
        };
        g = g + match &moments {
            Some(ms) if config.mode.chance_fl() && ms[p].var_fl > zero => cantelli_violation_fl(
                &ms[p],
                instance.factors.mu_fl,
                spec.r_fl_max,
                config.chance.alpha_fl,
            ),
            _ => det_g,
        };
    }

    let fv = FitnessVector {
        u,
        v,
        w,
        q,
        g,
        objective: plan.objective,
    };
    let finite = fv.keys().iter().all(|(x, _)| !x.is_nan());
    finite.then_some(fv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden;
    use crate::model::simulate;
    use proptest::prelude::*;

    fn fv(u: f64, v: f64, w: f64, q: f64, g: f64, o: f64) -> FitnessVector<f64> {
        FitnessVector {
            u,
            v,
            w,
            q,
            g,
            objective: o,
        }
    }

    #[test]
    fn first_key_dominates() {
        let a = fv(3.0, 0.0, 0.0, 0.0, 0.0, 10.0);
        let b = fv(4.0, 0.0, 0.0, 0.0, 0.0, 99.0);
        assert_eq!(lex_compare(&a, &b), Preference::APreferred);
        assert_eq!(lex_compare(&b, &a), Preference::BPreferred);
    }

    #[test]
    fn objective_breaks_ties() {
        let a = fv(3.0, 1.0, -2.0, 0.5, 0.1, 5.0);
        let b = fv(3.0, 1.0, -2.0, 0.5, 0.1, 4.0);
        assert_eq!(lex_compare(&a, &b), Preference::APreferred);
        assert_eq!(lex_compare(&a, &a), Preference::Tie);
    }

    #[test]
    fn inventory_prefers_higher() {
        let a = fv(3.0, 0.0, -1.0, 0.0, 0.0, 10.0);
        let b = fv(3.0, 0.0, -5.0, 0.0, 0.0, 99.0);
        assert_eq!(lex_compare(&a, &b), Preference::APreferred);
    }

    #[test]
    fn worst_ranks_last() {
        let bad = fv(1e300, 1e300, -1e300, 1e300, 1e300, -1e300);
        assert_eq!(
            lex_compare(&bad, &FitnessVector::worst()),
            Preference::APreferred
        );
        assert_eq!(
            lex_compare(&FitnessVector::<f64>::worst(), &FitnessVector::worst()),
            Preference::Tie
        );
        assert!(!FitnessVector::<f64>::worst().is_feasible(3));
    }

    fn stockpile_seven_genome() -> Genome<f64> {
        let mut genome = Genome::filled(3, 7, 0.0);
        for p in 0..3 {
            genome.row_mut(p)[6] = 1.0;
        }
        genome
    }

    #[test]
    fn feasible_plan_has_canonical_vector() {
        let inst: Instance<f64> = golden::instance(1);
        let e = eval_fitness(
            &inst,
            &stockpile_seven_genome(),
            &FitnessConfig::deterministic(),
        );
        let f = e.fitness;
        assert_eq!((f.u, f.v, f.w, f.q, f.g), (3.0, 0.0, 0.0, 0.0, 0.0));
        assert!(f.is_feasible(3));
        assert_eq!(f.objective, e.plan.unwrap().objective);
    }

    #[test]
    fn overrun_counts_days() {
        let inst: Instance<f64> = golden::instance(1);
        let genome = stockpile_seven_genome();
        let plan = simulate(&inst, &genome, &[10.0, 10.0, 11.0]).unwrap();
        let f = score_plan(&inst, &genome, &plan, &FitnessConfig::deterministic()).unwrap();
        assert_eq!(f.v, 1.0);
        assert!(f.u > 3.0);
    }

    #[test]
    fn strict_inventory_sees_single_negative_stockpile() {
        let inst: Instance<f64> = golden::instance(1);
        let genome = stockpile_seven_genome();
        // Seven days on stockpile 7 alone claims more than it holds.
        let plan = simulate(&inst, &genome, &[7.0, 0.0, 0.0]).unwrap();
        assert!(plan.inventory_after(0)[6] < 0.0);
        let loose = score_plan(&inst, &genome, &plan, &FitnessConfig::deterministic()).unwrap();
        let mut strict_cfg = FitnessConfig::deterministic();
        strict_cfg.strict_inventory = true;
        let strict = score_plan(&inst, &genome, &plan, &strict_cfg).unwrap();
        assert_eq!(loose.w, 0.0);
        assert!(strict.w < 0.0);
    }

    #[test]
    fn modes_differ_only_in_their_slot() {
        let inst: Instance<f64> = golden::instance(2);
        let genome = Genome::new(
            3,
            7,
            (0..21).map(|i| ((i * 37 % 11) as f64) / 11.0).collect(),
        );
        let chance = ChanceConfig::new(0.99, 0.99).unwrap();
        let score = |mode| eval_fitness(&inst, &genome, &FitnessConfig::new(mode, chance)).fitness;
        let det = score(FitnessMode::Deterministic);
        let cu = score(FitnessMode::ChanceCu);
        let fl = score(FitnessMode::ChanceFl);
        let both = score(FitnessMode::ChanceBoth);
        assert_eq!(FitnessVector { q: det.q, ..cu }, det);
        assert_eq!(FitnessVector { g: det.g, ..fl }, det);
        assert_eq!(
            FitnessVector {
                q: cu.q,
                g: fl.g,
                ..det
            },
            both
        );
    }

    #[test]
    fn zero_deviation_chance_equals_deterministic() {
        let mut inst: Instance<f64> = golden::instance(2);
        inst.rel_std = 0.0;
        let genome = Genome::new(
            3,
            7,
            (0..21).map(|i| ((i * 53 % 13) as f64) / 13.0).collect(),
        );
        let chance = ChanceConfig::new(0.999, 0.999).unwrap();
        let det = eval_fitness(
            &inst,
            &genome,
            &FitnessConfig::new(FitnessMode::Deterministic, chance),
        );
        let both = eval_fitness(
            &inst,
            &genome,
            &FitnessConfig::new(FitnessMode::ChanceBoth, chance),
        );
        assert_eq!(det.fitness, both.fitness);
    }

    #[test]
    fn unsimulable_genome_scores_worst() {
        let mut inst: Instance<f64> = golden::instance(1);
        inst.months[0].haul[0].tonnage = 0.0;
        let mut genome = Genome::filled(3, 7, 0.0);
        genome.row_mut(0)[0] = 1.0;
        let e = eval_fitness(&inst, &genome, &FitnessConfig::deterministic());
        assert!(e.fitness.is_worst());
        assert!(e.plan.is_none());
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in FitnessMode::ALL {
            assert_eq!(mode.as_str().parse::<FitnessMode>().unwrap(), mode);
            let json = serde_json::to_string(&mode).unwrap();
            assert_eq!(json, format!("\"{mode}\""));
        }
        assert!("nope".parse::<FitnessMode>().is_err());
    }

    fn arb_vector() -> impl Strategy<Value = FitnessVector<f64>> {
        // Small integer grids make ties on leading keys common.
        (0u8..4, 0u8..3, 0u8..3, 0u8..3, 0u8..3, 0u8..5).prop_map(|(u, v, w, q, g, o)| {
            fv(
                3.0 + u as f64,
                v as f64,
                -(w as f64),
                q as f64 * 0.1,
                g as f64,
                o as f64 * 1e6,
            )
        })
    }

    proptest! {
        #[test]
        fn comparison_is_a_total_preorder(a in arb_vector(), b in arb_vector(), c in arb_vector()) {
            let ab = lex_compare(&a, &b);
            let ba = lex_compare(&b, &a);
            let flipped = match ab {
                Preference::APreferred => Preference::BPreferred,
                Preference::BPreferred => Preference::APreferred,
                Preference::Tie => Preference::Tie,
            };
            prop_assert_eq!(ba, flipped);
            let geq = |x: &FitnessVector<f64>, y: &FitnessVector<f64>| lex_compare(x, y) != Preference::BPreferred;
            if geq(&a, &b) && geq(&b, &c) {
                prop_assert!(geq(&a, &c));
            }
        }

        #[test]
        fn lowering_a_violation_never_hurts(a in arb_vector(), b in arb_vector(), key in 0usize..5, cut in 0.1f64..2.0) {
            let mut better = a;
            match key {
                0 => better.u = (a.u - cut).max(3.0),
                1 => better.v = (a.v - cut).max(0.0),
                2 => better.w = (a.w + cut).min(0.0),
                3 => better.q = (a.q - cut).max(0.0),
                _ => better.g = (a.g - cut).max(0.0),
            }
            prop_assert_ne!(lex_compare(&better, &a), Preference::BPreferred);
            if lex_compare(&a, &b) == Preference::APreferred {
                prop_assert_eq!(lex_compare(&better, &b), Preference::APreferred);
            }
        }

        #[test]
        fn feasible_beats_infeasible(a in arb_vector(), o in 0.0f64..1e9) {
            let feasible = fv(3.0, 0.0, 0.0, 0.0, 0.0, o);
            if !a.is_feasible(3) {
                prop_assert_eq!(lex_compare(&feasible, &a), Preference::APreferred);
            }
        }
    }
}
