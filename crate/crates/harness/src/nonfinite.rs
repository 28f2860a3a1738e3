//! JSON has no infinities; fitness sentinels are written as strings.

use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else if x.is_nan() {
        s.serialize_str("nan")
    } else if *x > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

struct NumberOrSentinel;

impl de::Visitor<'_> for NumberOrSentinel {
    type Value = f64;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
    }

    fn visit_f64<E: de::Error>(self, x: f64) -> Result<f64, E> {
        Ok(x)
    }

    fn visit_i64<E: de::Error>(self, x: i64) -> Result<f64, E> {
        Ok(x as f64)
    }

    fn visit_u64<E: de::Error>(self, x: u64) -> Result<f64, E> {
        Ok(x as f64)
    }

    fn visit_str<E: de::Error>(self, t: &str) -> Result<f64, E> {
        match t {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            other => Err(E::custom(format!("not a number: {other}"))),
        }
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    d.deserialize_any(NumberOrSentinel)
}

/// Fitness vector as written to logs and solution files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoggedFitness {
    #[serde(with = "self")]
    pub u: f64,
    #[serde(with = "self")]
    pub v: f64,
    #[serde(with = "self")]
    pub w: f64,
    #[serde(with = "self")]
    pub q: f64,
    #[serde(with = "self")]
    pub g: f64,
    #[serde(with = "self")]
    pub objective: f64,
}

impl From<stockblend_core::FitnessVector64> for LoggedFitness {
    fn from(f: stockblend_core::FitnessVector64) -> Self {
        LoggedFitness {
            u: f.u,
            v: f.v,
            w: f.w,
            q: f.q,
            g: f.g,
            objective: f.objective,
        }
    }
}

impl From<LoggedFitness> for stockblend_core::FitnessVector64 {
    fn from(f: LoggedFitness) -> Self {
        stockblend_core::FitnessVector {
            u: f.u,
            v: f.v,
            w: f.w,
            q: f.q,
            g: f.g,
            objective: f.objective,
        }
    }
}
