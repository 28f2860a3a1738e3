use serde::{Deserialize, Serialize};

use super::instance::{GradeMap, Instance, Material, ProcessingFactors};
use crate::error::ModelError;
use crate::scalar::Scalar;

/// Claim fractions: one row per parcel, one column per stockpile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Genome<T> {
    parcels: usize,
    stockpiles: usize,
    data: Vec<T>,
}

impl<T: Scalar> Genome<T> {
    pub fn new(parcels: usize, stockpiles: usize, data: Vec<T>) -> Self {
        assert_eq!(
            data.len(),
            parcels * stockpiles,
            "genome data has wrong length"
        );
        Genome {
            parcels,
            stockpiles,
            data,
        }
    }

    pub fn filled(parcels: usize, stockpiles: usize, value: T) -> Self {
        Self::new(parcels, stockpiles, vec![value; parcels * stockpiles])
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let stockpiles = rows.first().map_or(0, Vec::len);
        assert!(
            rows.iter().all(|r| r.len() == stockpiles),
            "ragged genome rows"
        );
        Self::new(rows.len(), stockpiles, rows.concat())
    }

    pub fn parcels(&self) -> usize {
        self.parcels
    }

    pub fn stockpiles(&self) -> usize {
        self.stockpiles
    }

    pub fn row(&self, p: usize) -> &[T] {
        &self.data[p * self.stockpiles..(p + 1) * self.stockpiles]
    }

    pub fn row_mut(&mut self, p: usize) -> &mut [T] {
        &mut self.data[p * self.stockpiles..(p + 1) * self.stockpiles]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.stockpiles.max(1)).take(self.parcels)
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.rows().map(<[T]>::to_vec).collect()
    }

    /// Flat row-major view, used by the DE operators.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Errors unless the genome has one row per parcel and one column per stockpile.
    pub fn check_shape(&self, instance: &Instance<T>) -> Result<(), ModelError> {
        if self.parcels != instance.parcel_count() || self.stockpiles != instance.stockpile_count {
            return Err(ModelError::Shape {
                rows: self.parcels,
                cols: self.stockpiles,
                parcels: instance.parcel_count(),
                stockpiles: instance.stockpile_count,
            });
        }
        Ok(())
    }
}

/// Everything the simulation derives for one parcel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ParcelOutcome<T> {
    pub grades: GradeMap<T>,
    /// Days.
    pub duration: T,
    /// Tonnes of ore claimed.
    pub tonnage: T,
    pub cu_recovery: T,
    pub fl_recovery: T,
    /// Tonnes of concentrate.
    pub concentrate: T,
    /// Tonnes of Cu.
    pub cu_volume: T,
    /// Whether the duration landed the concentrate in its target band.
    pub duration_feasible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PlanEvaluation<T> {
    pub parcels: Vec<ParcelOutcome<T>>,
    /// Row-major `P x S` inventory after each parcel's claim. Not clamped.
    pub inventory: Vec<T>,
    /// Row-major `P x S` stockpile grades seen by each parcel; `None` for a
    /// stockpile that has never received material.
    pub stockpile_grades: Vec<Option<GradeMap<T>>>,
    pub stockpiles: usize,
    /// Total Cu tonnes over all parcels.
    pub objective: T,
}

impl<T: Scalar> PlanEvaluation<T> {
    pub fn inventory_after(&self, p: usize) -> &[T] {
        &self.inventory[p * self.stockpiles..(p + 1) * self.stockpiles]
    }

    /// Inventory before parcel `p` claims (and before any haul it triggers).
    pub fn inventory_before(&self, p: usize) -> Vec<T> {
        if p == 0 {
            vec![T::zero(); self.stockpiles]
        } else {
            self.inventory_after(p - 1).to_vec()
        }
    }

    pub fn durations(&self) -> Vec<T> {
        self.parcels.iter().map(|o| o.duration).collect()
    }
}

/// Tonnage-weighted mix of a stockpile with a fresh haul.
pub fn blend_grade<T: Scalar>(
    prev_grade: T,
    prev_tonnage: T,
    haul_grade: T,
    haul_tonnage: T,
) -> Result<T, ModelError> {
    let total = prev_tonnage + haul_tonnage;
    if total <= T::zero() {
        return Err(ModelError::DegenerateBlend);
    }
    // An empty stockpile takes the hauled grade exactly, whatever it held before.
    if prev_tonnage == T::zero() {
        return Ok(haul_grade);
    }
    Ok((prev_grade * prev_tonnage + haul_grade * haul_tonnage) / total)
}

/// Stockpile inventory after a claim; negative results are kept.
pub fn update_inventory<T: Scalar>(prev: T, haul: T, claimed: T, month_start: bool) -> T {
    if month_start {
        prev + haul - claimed
    } else {
        prev - claimed
    }
}

/// Parcel grades as the claim-weighted mix of stockpile grades.
pub fn parcel_grades<T: Scalar>(x_row: &[T], stockpile_grades: &[GradeMap<T>]) -> GradeMap<T> {
    debug_assert_eq!(x_row.len(), stockpile_grades.len());
    GradeMap::from_fn(|m| {
        x_row
            .iter()
            .zip(stockpile_grades)
            .fold(T::zero(), |acc, (&x, g)| acc + x * g[m])
    })
}

fn mixed_grades<T: Scalar>(
    parcel: usize,
    x_row: &[T],
    stockpile_grades: &[Option<GradeMap<T>>],
) -> Result<GradeMap<T>, ModelError> {
    let mut out = GradeMap::uniform(T::zero());
    for (s, (&x, grade)) in x_row.iter().zip(stockpile_grades).enumerate() {
        match grade {
            Some(g) => {
                for m in Material::ALL {
                    out[m] = out[m] + x * g[m];
                }
            }
            None if x == T::zero() => {}
            None => {
                return Err(ModelError::EmptyStockpile {
                    parcel,
                    stockpile: s,
                })
            }
        }
    }
    Ok(out)
}

/// Cu recovery, `mu_cu1 * Cu/S + mu_cu2`. Not clamped to `[0, 1]`.
pub fn cu_recovery<T: Scalar>(
    g_cu: T,
    g_s: T,
    factors: &ProcessingFactors<T>,
) -> Result<T, ModelError> {
    if !(g_s > T::zero()) {
        return Err(ModelError::Domain {
            quantity: "S grade",
            value: g_s.as_f64(),
        });
    }
    Ok(factors.mu_cu1 * g_cu / g_s + factors.mu_cu2)
}

/// Ore tonnes produced per day of processing at the given grades.
///
/// Negative when the Fe term outweighs the rest; callers see this through a
/// non-positive concentrate rate.
pub fn tonnage_rate<T: Scalar>(
    grades: &GradeMap<T>,
    factors: &ProcessingFactors<T>,
) -> Result<T, ModelError> {
    for (quantity, value) in [
        ("Au grade", grades.au),
        ("U grade", grades.u),
        ("Fe grade", grades.fe),
        ("Cu grade", grades.cu),
    ] {
        if !(value > T::zero()) {
            return Err(ModelError::Domain {
                quantity,
                value: value.as_f64(),
            });
        }
    }
    let log = |x: T| factors.log_base.apply(x);
    Ok(
        factors.phi_base + factors.phi_au * log(grades.au) + factors.phi_u * log(grades.u)
            - factors.phi_fe * log(grades.fe)
            + factors.phi_cu * log(grades.cu),
    )
}

/// Parcel tonnage after `t` days, `delta * t * rate`.
pub fn parcel_tonnage<T: Scalar>(
    t: T,
    grades: &GradeMap<T>,
    factors: &ProcessingFactors<T>,
) -> Result<T, ModelError> {
    let bracket = tonnage_rate(grades, factors)?;
    Ok(factors.delta * t * bracket)
}

/// Concentrate tonnes holding `c` tonnes of Cu.
pub fn concentrate<T: Scalar>(
    c: T,
    g_cu: T,
    g_s: T,
    factors: &ProcessingFactors<T>,
) -> Result<T, ModelError> {
    if !(g_s > T::zero()) {
        return Err(ModelError::Domain {
            quantity: "S grade",
            value: g_s.as_f64(),
        });
    }
    let share = factors.gamma1 * g_cu / g_s + factors.gamma2;
    if !(share > T::zero()) {
        return Err(ModelError::Domain {
            quantity: "concentrate Cu share",
            value: share.as_f64(),
        });
    }
    Ok(c / share)
}

/// Runs the plan forward with caller-supplied durations.
///
/// Rows of `genome` are used as given; normalize them first.
pub fn simulate<T: Scalar>(
    instance: &Instance<T>,
    genome: &Genome<T>,
    durations: &[T],
) -> Result<PlanEvaluation<T>, ModelError> {
    assert_eq!(
        durations.len(),
        instance.parcel_count(),
        "one duration per parcel"
    );
    simulate_with(instance, genome, |p, _| Ok((durations[p], true)))
}

/// Forward simulation where each parcel's duration is chosen from its grades
/// just before it is claimed. `pick` returns the duration and whether it is
/// considered feasible.
pub(crate) fn simulate_with<T, F>(
    instance: &Instance<T>,
    genome: &Genome<T>,
    mut pick: F,
) -> Result<PlanEvaluation<T>, ModelError>
where
    T: Scalar,
    F: FnMut(usize, &GradeMap<T>) -> Result<(T, bool), ModelError>,
{
    genome.check_shape(instance)?;
    let s_count = instance.stockpile_count;
    let p_count = instance.parcel_count();
    let factors = &instance.factors;

    let mut theta = vec![T::zero(); s_count];
    let mut grades: Vec<Option<GradeMap<T>>> = vec![None; s_count];
    let mut outcomes = Vec::with_capacity(p_count);
    let mut inventory = Vec::with_capacity(p_count * s_count);
    let mut seen = Vec::with_capacity(p_count * s_count);

    for (p, parcel) in instance.parcels.iter().enumerate() {
        let month = &instance.months[parcel.month_index];
        if parcel.is_month_first {
            for (s, haul) in month.haul.iter().enumerate() {
                if haul.tonnage > T::zero() {
                    // Negative inventory carries no material into the blend.
                    let weight = theta[s].max(T::zero());
                    let prev = grades[s].unwrap_or(haul.grades);
                    let mut blended = GradeMap::uniform(T::zero());
                    for m in Material::ALL {
                        blended[m] = blend_grade(prev[m], weight, haul.grades[m], haul.tonnage)?;
                    }
                    grades[s] = Some(blended);
                }
            }
        }
        seen.extend_from_slice(&grades);

        let x_row = genome.row(p);
        let g = mixed_grades(p, x_row, &grades)?;
        let (duration, duration_feasible) = pick(p, &g)?;
        let tonnage = parcel_tonnage(duration, &g, factors)?;
        let cu_rec = cu_recovery(g.cu, g.s, factors)?;
        let cu_volume = tonnage * g.cu * cu_rec;
        let conc = concentrate(cu_volume, g.cu, g.s, factors)?;

        for s in 0..s_count {
            let claimed = x_row[s] * tonnage;
            theta[s] = update_inventory(
                theta[s],
                month.haul[s].tonnage,
                claimed,
                parcel.is_month_first,
            );
        }
        inventory.extend_from_slice(&theta);
        outcomes.push(ParcelOutcome {
            grades: g,
            duration,
            tonnage,
            cu_recovery: cu_rec,
            fl_recovery: factors.mu_fl * g.fl,
            concentrate: conc,
            cu_volume,
            duration_feasible,
        });
    }

    let objective = outcomes.iter().map(|o| o.cu_volume).sum();
    Ok(PlanEvaluation {
        parcels: outcomes,
        inventory,
        stockpile_grades: seen,
        stockpiles: s_count,
        objective,
    })
}
