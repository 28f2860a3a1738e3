//! Blending plan model: domain types, instance files and the deterministic
//! forward simulation of stockpile inventories, parcel grades, tonnage,
//! recoveries and concentrate.

mod instance;
mod simulate;

pub use instance::{
    load_instance, GradeMap, Haul, Instance, InstanceRecord, LogBase, Material, MonthSpec,
    ParcelRecord, ParcelSpec, ProcessingFactors,
};
pub use simulate::{
    blend_grade, concentrate, cu_recovery, parcel_grades, parcel_tonnage, simulate, tonnage_rate,
    update_inventory, Genome, ParcelOutcome, PlanEvaluation,
};

pub(crate) use simulate::simulate_with;
