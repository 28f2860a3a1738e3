use std::fmt;
use std::ops::{Index, IndexMut};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::scalar::Scalar;

/// Materials tracked in every grade map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Material {
    Cu,
    Ag,
    Fe,
    Au,
    U,
    Fl,
    S,
}

impl Material {
    pub const ALL: [Material; 7] = [
        Material::Cu,
        Material::Ag,
        Material::Fe,
        Material::Au,
        Material::U,
        Material::Fl,
        Material::S,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Material::Cu => "Cu",
            Material::Ag => "Ag",
            Material::Fe => "Fe",
            Material::Au => "Au",
            Material::U => "U",
            Material::Fl => "Fl",
            Material::S => "S",
        }
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A grade for each of the seven materials, in the units of the instance file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GradeMap<T> {
    #[serde(rename = "Cu")]
    pub cu: T,
    #[serde(rename = "Ag")]
    pub ag: T,
    #[serde(rename = "Fe")]
    pub fe: T,
    #[serde(rename = "Au")]
    pub au: T,
    #[serde(rename = "U")]
    pub u: T,
    #[serde(rename = "Fl")]
    pub fl: T,
    #[serde(rename = "S")]
    pub s: T,
}

impl<T: Scalar> GradeMap<T> {
    pub fn from_fn(mut f: impl FnMut(Material) -> T) -> Self {
        GradeMap {
            cu: f(Material::Cu),
            ag: f(Material::Ag),
            fe: f(Material::Fe),
            au: f(Material::Au),
            u: f(Material::U),
            fl: f(Material::Fl),
            s: f(Material::S),
        }
    }

    pub fn uniform(value: T) -> Self {
        Self::from_fn(|_| value)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Material, T)> + '_ {
        Material::ALL.into_iter().map(move |m| (m, self[m]))
    }
}

impl<T> Index<Material> for GradeMap<T> {
    type Output = T;

    fn index(&self, m: Material) -> &T {
        match m {
            Material::Cu => &self.cu,
            Material::Ag => &self.ag,
            Material::Fe => &self.fe,
            Material::Au => &self.au,
            Material::U => &self.u,
            Material::Fl => &self.fl,
            Material::S => &self.s,
        }
    }
}

impl<T> IndexMut<Material> for GradeMap<T> {
    fn index_mut(&mut self, m: Material) -> &mut T {
        match m {
            Material::Cu => &mut self.cu,
            Material::Ag => &mut self.ag,
            Material::Fe => &mut self.fe,
            Material::Au => &mut self.au,
            Material::U => &mut self.u,
            Material::Fl => &mut self.fl,
            Material::S => &mut self.s,
        }
    }
}

/// Logarithm used by the parcel tonnage formula.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    #[serde(rename = "e")]
    Natural,
    #[serde(rename = "10")]
    Ten,
}

impl LogBase {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Ten => x.log10(),
        }
    }

    fn is_natural(&self) -> bool {
        *self == LogBase::Natural
    }
}

/// Chemical processing coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ProcessingFactors<T> {
    /// Time discount.
    pub delta: T,
    pub phi_base: T,
    pub phi_au: T,
    pub phi_u: T,
    pub phi_fe: T,
    pub phi_cu: T,
    /// Cu share of the concentrate, `gamma1 * Cu/S + gamma2`.
    pub gamma1: T,
    pub gamma2: T,
    pub mu_fl: T,
    /// U recovery factor. Carried through files; no formula reads it.
    pub mu_u: T,
    pub mu_cu1: T,
    pub mu_cu2: T,
    #[serde(default, skip_serializing_if = "LogBase::is_natural")]
    pub log_base: LogBase,
}

impl<T: Scalar> ProcessingFactors<T> {
    fn validate(&self) -> Result<(), ModelError> {
        let finite = [
            ("delta", self.delta),
            ("phi_base", self.phi_base),
            ("phi_au", self.phi_au),
            ("phi_u", self.phi_u),
            ("phi_fe", self.phi_fe),
            ("phi_cu", self.phi_cu),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("mu_fl", self.mu_fl),
            ("mu_u", self.mu_u),
            ("mu_cu1", self.mu_cu1),
            ("mu_cu2", self.mu_cu2),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(ModelError::invalid(
                    format!("factors.{name}"),
                    "must be finite",
                ));
            }
        }
        if !(self.delta > T::zero() && self.delta <= T::one()) {
            return Err(ModelError::invalid("factors.delta", "must lie in (0, 1]"));
        }
        for (name, value) in &finite[1..6] {
            if *value < T::zero() {
                return Err(ModelError::invalid(
                    format!("factors.{name}"),
                    "must be non-negative",
                ));
            }
        }
        for (name, value) in [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("mu_fl", self.mu_fl),
        ] {
            if value <= T::zero() {
                return Err(ModelError::invalid(
                    format!("factors.{name}"),
                    "must be positive",
                ));
            }
        }
        Ok(())
    }
}

/// Material hauled to one stockpile at the start of a month.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Haul<T> {
    pub tonnage: T,
    pub grades: GradeMap<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MonthSpec<T> {
    pub duration_days: T,
    pub num_parcels: usize,
    /// One entry per stockpile.
    pub haul: Vec<Haul<T>>,
}

/// A customer parcel as written in instance files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ParcelRecord<T> {
    pub k_target: T,
    pub r_fl_max: T,
    pub cu_min: T,
}

/// A customer parcel with its position in the month structure.
#[derive(Clone, Debug, PartialEq)]
pub struct ParcelSpec<T> {
    /// Target concentrate tonnage; the plan must land within one tonne of it.
    pub k_target: T,
    /// Upper bound on Fl recovery.
    pub r_fl_max: T,
    /// Lower bound on Cu grade.
    pub cu_min: T,
    pub month_index: usize,
    /// The month's hauls arrive just before this parcel is prepared.
    pub is_month_first: bool,
}

/// Instance file layout, before validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct InstanceRecord<T> {
    pub name: String,
    pub stockpile_count: usize,
    #[serde(default = "default_rel_std")]
    pub rel_std: T,
    pub factors: ProcessingFactors<T>,
    pub months: Vec<MonthSpec<T>>,
    pub parcels: Vec<ParcelRecord<T>>,
}

fn default_rel_std<T: Scalar>() -> T {
    T::lit(0.01)
}

/// A validated blending problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    bound = "T: Scalar",
    try_from = "InstanceRecord<T>",
    into = "InstanceRecord<T>"
)]
pub struct Instance<T> {
    pub name: String,
    pub stockpile_count: usize,
    /// Grade standard deviation as a fraction of the expected grade.
    pub rel_std: T,
    pub factors: ProcessingFactors<T>,
    pub months: Vec<MonthSpec<T>>,
    pub parcels: Vec<ParcelSpec<T>>,
}

impl<T: Scalar> Instance<T> {
    pub fn parcel_count(&self) -> usize {
        self.parcels.len()
    }

    /// Global parcel indices belonging to month `m`.
    pub fn month_parcels(&self, m: usize) -> std::ops::Range<usize> {
        let start: usize = self.months[..m].iter().map(|mo| mo.num_parcels).sum();
        start..start + self.months[m].num_parcels
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let record: InstanceRecord<T> = serde_json::from_str(text)?;
        Instance::try_from(record)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&InstanceRecord::from(self.clone()))
            .expect("instance records always serialize");
        text.push('\n');
        text
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let s_count = self.stockpile_count;
        if s_count == 0 {
            return Err(ModelError::invalid("stockpile_count", "must be at least 1"));
        }
        if !(self.rel_std >= T::zero() && self.rel_std.is_finite()) {
            return Err(ModelError::invalid(
                "rel_std",
                "must be finite and non-negative",
            ));
        }
        self.factors.validate()?;
        if self.months.is_empty() {
            return Err(ModelError::invalid(
                "months",
                "at least one month is required",
            ));
        }
        for (m, month) in self.months.iter().enumerate() {
            if !(month.duration_days > T::zero() && month.duration_days.is_finite()) {
                return Err(ModelError::invalid(
                    format!("months[{m}].duration_days"),
                    "must be positive",
                ));
            }
            if month.num_parcels == 0 {
                return Err(ModelError::invalid(
                    format!("months[{m}].num_parcels"),
                    "must be at least 1",
                ));
            }
            if month.haul.len() != s_count {
                return Err(ModelError::invalid(
                    format!("months[{m}].haul"),
                    format!(
                        "expected {s_count} stockpile entries, found {}",
                        month.haul.len()
                    ),
                ));
            }
            for (s, haul) in month.haul.iter().enumerate() {
                if !(haul.tonnage >= T::zero() && haul.tonnage.is_finite()) {
                    return Err(ModelError::invalid(
                        format!("months[{m}].haul[{s}].tonnage"),
                        "must be finite and non-negative",
                    ));
                }
                for (material, grade) in haul.grades.iter() {
                    if !(grade > T::zero() && grade.is_finite()) {
                        return Err(ModelError::invalid(
                            format!("months[{m}].haul[{s}].grades.{material}"),
                            "must be positive",
                        ));
                    }
                }
            }
        }
        let declared: usize = self.months.iter().map(|m| m.num_parcels).sum();
        if declared != self.parcels.len() {
            return Err(ModelError::invalid(
                "parcels",
                format!(
                    "months declare {declared} parcels but {} are listed",
                    self.parcels.len()
                ),
            ));
        }
        for (p, parcel) in self.parcels.iter().enumerate() {
            if !(parcel.k_target >= T::zero() && parcel.k_target.is_finite()) {
                return Err(ModelError::invalid(
                    format!("parcels[{p}].k_target"),
                    "must be finite and non-negative",
                ));
            }
            if !parcel.r_fl_max.is_finite() || !parcel.cu_min.is_finite() {
                return Err(ModelError::invalid(
                    format!("parcels[{p}]"),
                    "bounds must be finite",
                ));
            }
        }
        for m in 0..self.months.len() {
            let range = self.month_parcels(m);
            for p in range.clone() {
                let parcel = &self.parcels[p];
                if parcel.month_index != m || parcel.is_month_first != (p == range.start) {
                    return Err(ModelError::invalid(
                        format!("parcels[{p}]"),
                        "month assignment disagrees with months[].num_parcels",
                    ));
                }
            }
        }
        Ok(())
    }
}

impl<T: Scalar> TryFrom<InstanceRecord<T>> for Instance<T> {
    type Error = ModelError;

    fn try_from(record: InstanceRecord<T>) -> Result<Self, ModelError> {
        let mut month_of = Vec::with_capacity(record.parcels.len());
        for (m, month) in record.months.iter().enumerate() {
            for j in 0..month.num_parcels {
                month_of.push((m, j == 0));
            }
        }
        if month_of.len() != record.parcels.len() {
            return Err(ModelError::invalid(
                "parcels",
                format!(
                    "months declare {} parcels but {} are listed",
                    month_of.len(),
                    record.parcels.len()
                ),
            ));
        }
        let parcels = record
            .parcels
            .into_iter()
            .zip(month_of)
            .map(|(p, (month_index, is_month_first))| ParcelSpec {
                k_target: p.k_target,
                r_fl_max: p.r_fl_max,
                cu_min: p.cu_min,
                month_index,
                is_month_first,
            })
            .collect();
        let instance = Instance {
            name: record.name,
            stockpile_count: record.stockpile_count,
            rel_std: record.rel_std,
            factors: record.factors,
            months: record.months,
            parcels,
        };
        instance.validate()?;
        Ok(instance)
    }
}

impl<T: Scalar> From<Instance<T>> for InstanceRecord<T> {
    fn from(instance: Instance<T>) -> Self {
        InstanceRecord {
            name: instance.name,
            stockpile_count: instance.stockpile_count,
            rel_std: instance.rel_std,
            factors: instance.factors,
            months: instance.months,
            parcels: instance
                .parcels
                .into_iter()
                .map(|p| ParcelRecord {
                    k_target: p.k_target,
                    r_fl_max: p.r_fl_max,
                    cu_min: p.cu_min,
                })
                .collect(),
        }
    }
}

/// Reads and validates an instance file.
pub fn load_instance<T: Scalar>(path: impl AsRef<Path>) -> Result<Instance<T>, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Instance::from_json(&text)
}
