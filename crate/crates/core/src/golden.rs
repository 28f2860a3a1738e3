//! The three bundled benchmark instances.

use crate::model::Instance;
use crate::scalar::Scalar;

pub const INSTANCE1_JSON: &str = include_str!("../instances/instance1.json");
pub const INSTANCE2_JSON: &str = include_str!("../instances/instance2.json");
pub const INSTANCE3_JSON: &str = include_str!("../instances/instance3.json");

/// Bundled instance `n` (1, 2 or 3).
///
/// # Panics
///
/// On any other `n`.
pub fn instance<T: Scalar>(n: usize) -> Instance<T> {
    let text = match n {
        1 => INSTANCE1_JSON,
        2 => INSTANCE2_JSON,
        3 => INSTANCE3_JSON,
        _ => panic!("there is no bundled instance {n}"),
    };
    Instance::from_json(text).expect("bundled instances are valid")
}

pub fn all<T: Scalar>() -> Vec<Instance<T>> {
    (1..=3).map(instance).collect()
}
