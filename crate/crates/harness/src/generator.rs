//! Random benchmark instances drawn from fixed parameter ranges.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use stockblend_core::model::{
    GradeMap, Haul, InstanceRecord, MonthSpec, ParcelRecord, ProcessingFactors,
};
use stockblend_core::rng::{stream, StreamRng};
use stockblend_core::{Instance64, Material};

/// Closed interval `[lo, hi]`, written as a two-element array.
pub type Interval = (f64, f64);

/// Sampling ranges for every instance parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRanges {
    pub parcel_counts: Vec<usize>,
    pub stockpiles: usize,
    pub month_days: Vec<u32>,
    pub delta: f64,
    pub phi_base: Interval,
    pub phi_au: Interval,
    pub phi_u: Interval,
    pub phi_fe: Interval,
    pub phi_cu: Interval,
    pub gamma1: Interval,
    pub gamma2: Interval,
    pub mu_fl: Interval,
    pub mu_u: Interval,
    pub mu_cu1: Interval,
    pub mu_cu2: Interval,
    pub haul_tonnage: Interval,
    pub grades: GradeMap<Interval>,
    /// Targets have no natural upper bound; 800 000 tonnes keeps them
    /// on the scale of the bundled instances.
    pub k_target: Interval,
    pub r_fl_max: Interval,
    pub cu_min: Interval,
    pub rel_std: f64,
}

impl Default for GeneratorRanges {
    fn default() -> Self {
        GeneratorRanges {
            parcel_counts: vec![3, 4, 5],
            stockpiles: 7,
            month_days: vec![29, 30, 31],
            delta: 0.98,
            phi_base: (1000.0, 2000.0),
            phi_au: (200.0, 300.0),
            phi_u: (300.0, 400.0),
            phi_fe: (560000.0, 570000.0),
            phi_cu: (6000000.0, 7000000.0),
            gamma1: (5.0, 10.0),
            gamma2: (30.0, 40.0),
            mu_fl: (0.05, 0.15),
            mu_u: (0.5, 0.9),
            mu_cu1: (1.5, 3.5),
            mu_cu2: (0.0, 10.0),
            haul_tonnage: (5000.0, 1000000.0),
            grades: GradeMap {
                cu: (0.05, 2.5),
                ag: (1.0, 4.0),
                fe: (10.0, 30.0),
                au: (0.3, 2.0),
                u: (30.0, 400.0),
                fl: (1200.0, 4500.0),
                s: (0.15, 1.0),
            },
            k_target: (10000.0, 800000.0),
            r_fl_max: (1300.0, 1500.0),
            cu_min: (0.5, 1.5),
            rel_std: 0.01,
        }
    }
}

fn draw(rng: &mut StreamRng, (lo, hi): Interval) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Samples a single-month instance. `parcels` fixes the parcel count instead
/// of drawing it from `ranges.parcel_counts`.
pub fn generate_instance(
    ranges: &GeneratorRanges,
    seed: u64,
    parcels: Option<usize>,
) -> Instance64 {
    let mut rng = stream(seed);
    let parcel_count = match parcels {
        Some(n) => n,
        None => *ranges
            .parcel_counts
            .choose(&mut rng)
            .expect("parcel_counts is non-empty"),
    };
    let days = *ranges
        .month_days
        .choose(&mut rng)
        .expect("month_days is non-empty");
    let factors = ProcessingFactors {
        delta: ranges.delta,
        phi_base: draw(&mut rng, ranges.phi_base),
        phi_au: draw(&mut rng, ranges.phi_au),
        phi_u: draw(&mut rng, ranges.phi_u),
        phi_fe: draw(&mut rng, ranges.phi_fe),
        phi_cu: draw(&mut rng, ranges.phi_cu),
        gamma1: draw(&mut rng, ranges.gamma1),
        gamma2: draw(&mut rng, ranges.gamma2),
        mu_fl: draw(&mut rng, ranges.mu_fl),
        mu_u: draw(&mut rng, ranges.mu_u),
        mu_cu1: draw(&mut rng, ranges.mu_cu1),
        mu_cu2: draw(&mut rng, ranges.mu_cu2),
        log_base: Default::default(),
    };
    let haul = (0..ranges.stockpiles)
        .map(|_| {
            let tonnage = draw(&mut rng, ranges.haul_tonnage);
            let mut grades = GradeMap::uniform(0.0);
            for m in Material::ALL {
                grades[m] = draw(&mut rng, ranges.grades[m]);
            }
            Haul { tonnage, grades }
        })
        .collect();
    let parcel_records = (0..parcel_count)
        .map(|_| ParcelRecord {
            k_target: draw(&mut rng, ranges.k_target),
            r_fl_max: draw(&mut rng, ranges.r_fl_max),
            cu_min: draw(&mut rng, ranges.cu_min),
        })
        .collect();
    let record = InstanceRecord {
        name: format!("generated-{seed}"),
        stockpile_count: ranges.stockpiles,
        rel_std: ranges.rel_std,
        factors,
        months: vec![MonthSpec {
            duration_days: f64::from(days),
            num_parcels: parcel_count,
            haul,
        }],
        parcels: parcel_records,
    };
    Instance64::try_from(record).expect("generator ranges produce valid instances")
}
