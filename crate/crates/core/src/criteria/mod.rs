//! Stabilizing-class checks, their thresholds, and the density quantities
//! `ψ(t)` and `Ψ(t) = ψ(t) / t`.
//!
//! Interval-quantified conditions are checked exactly: each objective is
//! piecewise linear in the interval endpoints with breakpoints at switching
//! instants, so its supremum is a maximum over finitely many candidate pairs.
//! Asymptotic conditions are finite-horizon estimates over a tail window and
//! every report says so.

mod density;
mod implication;
mod interval;
mod thresholds;

pub use density::{
    check_asymptotic, check_unified, composite_density, composite_series, estimate_limits, psi,
    psi_series, sample_times, Bounds, EstimatorOptions, LimitEstimates,
};
pub use implication::{implication_report, ClassParams, ImplicationReport};
pub use interval::{
    adt_supremum, budget_supremum, chatter_reserve_trace, check_adt, check_dwell_time, check_mdadt,
    check_unstable_budget, mdadt_supremum, ChatterReserve, IntervalSup,
};
pub use thresholds::{adt_threshold, mdadt_thresholds, mixed_adt_threshold};

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Where the worst case of a criterion is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Witness {
    /// Interval `]s, t]`.
    Interval {
        s: f64,
        t: f64,
    },
    Instant {
        t: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimator {
    pub window: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion: String,
    pub satisfied: bool,
    /// Signed slack; positive when the condition holds with room to spare.
    #[serde(with = "ext_f64")]
    pub margin: f64,
    /// Strict conditions need `margin > 0`, the others `margin >= 0`.
    #[serde(default)]
    pub strict: bool,
    pub witness: Option<Witness>,
    pub parameters: Value,
    pub estimator: Option<Estimator>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CriterionReport {
    pub fn new(
        criterion: &str,
        margin: f64,
        strict: bool,
        witness: Option<Witness>,
        parameters: Value,
    ) -> Self {
        let satisfied = if strict { margin > 0.0 } else { margin >= 0.0 };
        Self {
            criterion: criterion.to_string(),
            satisfied,
            margin,
            strict,
            witness,
            parameters,
            estimator: None,
            notes: Vec::new(),
        }
    }

    pub fn with_estimator(mut self, opts: &EstimatorOptions) -> Self {
        self.estimator = Some(Estimator {
            window: opts.window,
            samples: opts.samples,
        });
        self.notes
            .push("finite-horizon estimate over the tail window, not a true limit".into());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

/// JSON value for a float; non-finite values become the strings `inf`, `-inf`, `nan`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::String(ext_f64::label(x).to_string())
    }
}

/// Serde adapter writing non-finite floats as strings.
pub mod ext_f64 {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub(crate) fn label(x: f64) -> &'static str {
        if x.is_nan() {
            "nan"
        } else if x > 0.0 {
            "inf"
        } else {
            "-inf"
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(label(*x))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(D::Error::custom(format!(
                    "expected a number, found {other:?}"
                ))),
            },
        }
    }
}
