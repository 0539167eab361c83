//! Missing-value policies applied to a record before serialization: either
//! reserve the gaps (they render as `nan`/`unknown`) or forward-fill each
//! feature series with the last observation carried forward.

use serde::{Deserialize, Serialize};

use crate::ehr::{FeatureValue, PatientRecord};

/// Exactly one policy applies per experiment run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Keep Missing cells; the renderer emits `nan` (numeric) or `unknown`
    /// (categorical) for them.
    Reserve,
    /// Forward-fill each feature series independently across visits.
    /// Leading gaps have no prior observation and stay Missing.
    #[serde(rename = "locf")]
    ImputeLocf,
}

/// Forward-fill one feature series: element `i` becomes the last non-Missing
/// element at index `<= i`, else stays Missing. Length is preserved.
pub fn locf_series(values: &[FeatureValue]) -> Vec<FeatureValue> {
    let mut last: Option<&FeatureValue> = None;
    values
        .iter()
        .map(|v| {
            if v.is_missing() {
                last.cloned().unwrap_or(FeatureValue::Missing)
            } else {
                last = Some(v);
                v.clone()
            }
        })
        .collect()
}

/// Apply the missing-value policy to a normalized record. `Reserve` is the
/// identity; `ImputeLocf` forward-fills every feature series.
pub fn apply_policy(rec: &PatientRecord, policy: MissingPolicy) -> PatientRecord {
    match policy {
        MissingPolicy::Reserve => rec.clone(),
        MissingPolicy::ImputeLocf => {
            let mut out = rec.clone();
            let n_features = rec.visits.first().map_or(0, |v| v.values.len());
            for fi in 0..n_features {
                let series: Vec<FeatureValue> =
                    rec.visits.iter().map(|v| v.values[fi].clone()).collect();
                for (vi, filled) in locf_series(&series).into_iter().enumerate() {
                    out.visits[vi].values[fi] = filled;
                }
            }
            out
        }
    }
}
