//! Domain model for longitudinal EHR data: feature schemas, patient records,
//! dataset ingestion, cohort statistics, and per-visit expansion.
//!
//! A [`Dataset`] couples an ordered feature schema with normalized patient
//! records. Normalization (done at load time) guarantees that every visit
//! carries a value slot for every schema feature, in schema order, so all
//! downstream rendering is deterministic.

mod load;
mod stats;

pub use load::{load_dataset, load_records, load_schema};
pub use stats::{cohort_stats, CohortStats, FeatureAggregate, GroupStats, NumericStats};

use std::collections::HashMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Patient ids starting with this prefix are reserved for simulated records
/// (in-context example patients) and rejected at ingestion, so synthetic ids
/// can never collide with real ones.
pub const SYNTHETIC_ID_PREFIX: &str = "sim-";

#[derive(Debug, Error)]
pub enum EhrError {
    /// Malformed file content, with the offending location.
    #[error("parse error in {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    /// Structurally valid input that violates the dataset contract.
    #[error("schema error at {locus}: {message}")]
    Schema { locus: String, message: String },
    /// An outcome group is empty (or too small) after sampling.
    #[error("insufficient cohort: {0}")]
    InsufficientCohort(String),
}

impl EhrError {
    fn schema(locus: impl Into<String>, message: impl Into<String>) -> Self {
        EhrError::Schema {
            locus: locus.into(),
            message: message.into(),
        }
    }
}

/// Whether a feature holds numbers or category labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

/// One feature of the dataset schema: its name, kind, and the optional unit
/// and reference range used as clinical context in prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    pub kind: FeatureKind,
    pub unit: Option<String>,
    pub reference_range: Option<String>,
}

/// A single cell value. Missingness is explicit; stored numerics are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureValue {
    Numeric(f64),
    Categorical(String),
    Missing,
}

impl FeatureValue {
    pub fn is_missing(&self) -> bool {
        matches!(self, FeatureValue::Missing)
    }
}

/// Timestamp kind is fixed per dataset; mixing dates and indices is rejected
/// at load time because the prompt grammar differs between the two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimestampKind {
    Date,
    Index,
}

/// A visit timestamp: a calendar date or a non-negative ordinal index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Timestamp {
    Index(u64),
    Date(NaiveDate),
}

impl Timestamp {
    pub fn kind(&self) -> TimestampKind {
        match self {
            Timestamp::Date(_) => TimestampKind::Date,
            Timestamp::Index(_) => TimestampKind::Index,
        }
    }

    /// Render for prompt text: ISO date or bare integer.
    pub fn render(&self) -> String {
        match self {
            Timestamp::Date(d) => d.format("%Y-%m-%d").to_string(),
            Timestamp::Index(i) => i.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sex {
    Male,
    Female,
    Unknown,
}

/// One timestamped observation row. `values` is aligned to the dataset
/// schema: index `i` holds the value of schema feature `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub timestamp: Timestamp,
    pub values: Vec<FeatureValue>,
}

/// Gold outcomes for a record. `length_of_stay_days`, when present, has one
/// entry per visit (remaining stay as of that visit).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutcomeLabels {
    pub mortality: Option<u8>,
    pub readmission_30d: Option<u8>,
    pub length_of_stay_days: Option<Vec<f64>>,
}

/// One patient: demographics plus an ordered, strictly increasing sequence
/// of visits sharing the schema's feature set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub patient_id: String,
    pub sex: Sex,
    pub age_years: f64,
    pub visits: Vec<Visit>,
    pub labels: Option<OutcomeLabels>,
}

/// Ordered feature schema. The ordering here defines rendering order
/// everywhere downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    features: Vec<FeatureDef>,
    #[serde(skip)]
    by_name: HashMap<String, usize>,
}

impl DatasetSchema {
    pub fn new(features: Vec<FeatureDef>) -> Result<Self, EhrError> {
        if features.is_empty() {
            return Err(EhrError::schema("schema", "schema has no features"));
        }
        let mut by_name = HashMap::with_capacity(features.len());
        for (i, def) in features.iter().enumerate() {
            if def.name.is_empty() {
                return Err(EhrError::schema(format!("feature {i}"), "empty feature name"));
            }
            if by_name.insert(def.name.clone(), i).is_some() {
                return Err(EhrError::schema(
                    &def.name,
                    "duplicate feature name in schema",
                ));
            }
            if def.kind == FeatureKind::Categorical
                && (def.unit.is_some() || def.reference_range.is_some())
            {
                return Err(EhrError::schema(
                    &def.name,
                    "categorical features carry no unit or reference range",
                ));
            }
        }
        Ok(DatasetSchema { features, by_name })
    }

    pub fn features(&self) -> &[FeatureDef] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }
}

/// A named dataset: schema, normalized records, and the (uniform) timestamp
/// kind of its visits.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub schema: DatasetSchema,
    pub records: Vec<PatientRecord>,
    pub timestamp_kind: TimestampKind,
}

/// Per-record diagnostics produced by [`validate_dataset`].
#[derive(Debug, Clone, Serialize)]
pub struct RecordCheck {
    pub patient_id: String,
    pub visit_count: usize,
    /// Fraction of Missing cells over all (visit, feature) slots.
    pub missing_fraction: f64,
    pub mortality_available: bool,
    pub readmission_available: bool,
    pub length_of_stay_available: bool,
}

/// Diagnostics-only report; never mutates the dataset.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub dataset: String,
    pub records: Vec<RecordCheck>,
}

impl ValidationReport {
    pub fn mean_missing_fraction(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.missing_fraction).sum::<f64>() / self.records.len() as f64
    }

    pub fn label_counts(&self) -> (usize, usize, usize) {
        let m = self.records.iter().filter(|r| r.mortality_available).count();
        let r = self.records.iter().filter(|r| r.readmission_available).count();
        let l = self
            .records
            .iter()
            .filter(|r| r.length_of_stay_available)
            .count();
        (m, r, l)
    }
}

/// Compute per-record diagnostics: missing-value fraction, visit count, and
/// label availability per task.
pub fn validate_dataset(ds: &Dataset) -> ValidationReport {
    let n_features = ds.schema.len();
    let records = ds
        .records
        .iter()
        .map(|rec| {
            let cells = rec.visits.len() * n_features;
            let missing: usize = rec
                .visits
                .iter()
                .map(|v| v.values.iter().filter(|c| c.is_missing()).count())
                .sum();
            let labels = rec.labels.as_ref();
            RecordCheck {
                patient_id: rec.patient_id.clone(),
                visit_count: rec.visits.len(),
                missing_fraction: if cells == 0 {
                    0.0
                } else {
                    missing as f64 / cells as f64
                },
                mortality_available: labels.is_some_and(|l| l.mortality.is_some()),
                readmission_available: labels.is_some_and(|l| l.readmission_30d.is_some()),
                length_of_stay_available: labels.is_some_and(|l| l.length_of_stay_days.is_some()),
            }
        })
        .collect();
    ValidationReport {
        dataset: ds.name.clone(),
        records,
    }
}

/// Expand a k-visit record into k visit prefixes for per-visit prediction.
///
/// Prefix `i` (1-based) carries visits `1..=i`; when length-of-stay labels
/// exist it carries the first `i` of them, so the last entry is the gold
/// target for that prefix. Demographics and other labels are copied.
pub fn expand_per_visit(rec: &PatientRecord) -> Vec<PatientRecord> {
    (1..=rec.visits.len())
        .map(|i| {
            let labels = rec.labels.as_ref().map(|l| OutcomeLabels {
                mortality: l.mortality,
                readmission_30d: l.readmission_30d,
                length_of_stay_days: l
                    .length_of_stay_days
                    .as_ref()
                    .map(|days| days[..i].to_vec()),
            });
            PatientRecord {
                patient_id: rec.patient_id.clone(),
                sex: rec.sex,
                age_years: rec.age_years,
                visits: rec.visits[..i].to_vec(),
                labels,
            }
        })
        .collect()
}
