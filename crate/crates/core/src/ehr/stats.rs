//! Cohort statistics for in-context example synthesis: sample labeled
//! patients, split them by mortality outcome, and pool feature statistics
//! over all their visits.

use std::collections::{BTreeMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, EhrError, FeatureKind, FeatureValue, PatientRecord, TimestampKind};

/// Population mean/variance (divide by n) over pooled samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericStats {
    pub mean: f64,
    pub variance: f64,
    pub sample_count: usize,
}

/// Per-feature aggregate within one outcome group. Numeric features get
/// mean/variance; categorical features get the group's modal value.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureAggregate {
    Numeric(NumericStats),
    Categorical {
        mode: Option<String>,
        sample_count: usize,
    },
}

/// Statistics for one outcome group, feature-aligned to the dataset schema.
#[derive(Debug, Clone)]
pub struct GroupStats {
    pub features: Vec<FeatureAggregate>,
    pub mean_visit_count: f64,
    pub patient_count: usize,
    /// Per-patient age statistics; simulated example patients draw their
    /// demographics from these.
    pub age: NumericStats,
    /// Pooled length-of-stay values (when the sampled patients carry them);
    /// used to draw example answers for stay-length tasks.
    pub stay_length: Option<NumericStats>,
}

/// Survivor/deceased statistics derived from a sampled sub-cohort.
#[derive(Debug, Clone)]
pub struct CohortStats {
    pub survivor: GroupStats,
    pub deceased: GroupStats,
    /// Carried along so synthesized example patients render timestamps the
    /// same way the source dataset does.
    pub timestamp_kind: TimestampKind,
}

fn numeric_stats(values: &[f64]) -> NumericStats {
    let n = values.len();
    if n == 0 {
        return NumericStats {
            mean: 0.0,
            variance: 0.0,
            sample_count: 0,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    NumericStats {
        mean,
        variance,
        sample_count: n,
    }
}

fn group_stats(patients: &[&PatientRecord], schema_kinds: &[FeatureKind]) -> GroupStats {
    let mut numeric_pool: Vec<Vec<f64>> = vec![Vec::new(); schema_kinds.len()];
    let mut categorical_pool: Vec<BTreeMap<String, usize>> =
        vec![BTreeMap::new(); schema_kinds.len()];
    let mut stay_values: Vec<f64> = Vec::new();
    let mut has_stay_labels = false;

    for rec in patients {
        for visit in &rec.visits {
            for (i, value) in visit.values.iter().enumerate() {
                match value {
                    FeatureValue::Numeric(x) => numeric_pool[i].push(*x),
                    FeatureValue::Categorical(s) => {
                        *categorical_pool[i].entry(s.clone()).or_insert(0) += 1
                    }
                    FeatureValue::Missing => {}
                }
            }
        }
        if let Some(days) = rec.labels.as_ref().and_then(|l| l.length_of_stay_days.as_ref()) {
            has_stay_labels = true;
            stay_values.extend_from_slice(days);
        }
    }

    let features = schema_kinds
        .iter()
        .enumerate()
        .map(|(i, kind)| match kind {
            FeatureKind::Numeric => FeatureAggregate::Numeric(numeric_stats(&numeric_pool[i])),
            FeatureKind::Categorical => {
                let counts = &categorical_pool[i];
                let total: usize = counts.values().sum();
                // highest count wins; BTreeMap iteration breaks ties toward
                // the lexicographically smallest value
                let mode = counts
                    .iter()
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                    .map(|(v, _)| v.clone());
                FeatureAggregate::Categorical {
                    mode,
                    sample_count: total,
                }
            }
        })
        .collect();

    let mean_visit_count = if patients.is_empty() {
        0.0
    } else {
        patients.iter().map(|r| r.visits.len()).sum::<usize>() as f64 / patients.len() as f64
    };
    let ages: Vec<f64> = patients.iter().map(|r| r.age_years).collect();

    GroupStats {
        features,
        mean_visit_count,
        patient_count: patients.len(),
        age: numeric_stats(&ages),
        stay_length: has_stay_labels.then(|| numeric_stats(&stay_values)),
    }
}

/// Sample `sample_size` mortality-labeled patients (deterministically for a
/// fixed seed, after removing `exclude_ids`), split them by outcome, and pool
/// per-feature statistics over all their visits.
pub fn cohort_stats(
    ds: &Dataset,
    exclude_ids: &HashSet<String>,
    rng_seed: u64,
    sample_size: usize,
) -> Result<CohortStats, EhrError> {
    let mut eligible: Vec<&PatientRecord> = ds
        .records
        .iter()
        .filter(|r| {
            r.labels.as_ref().is_some_and(|l| l.mortality.is_some())
                && !exclude_ids.contains(&r.patient_id)
        })
        .collect();
    // sort so sampling is a function of (content, seed), not file order
    eligible.sort_by(|a, b| a.patient_id.cmp(&b.patient_id));

    if eligible.len() < sample_size {
        return Err(EhrError::InsufficientCohort(format!(
            "{} labeled patients available, sample_size is {}",
            eligible.len(),
            sample_size
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut picked = rand::seq::index::sample(&mut rng, eligible.len(), sample_size).into_vec();
    picked.sort_unstable();

    let mut survivors: Vec<&PatientRecord> = Vec::new();
    let mut deceased: Vec<&PatientRecord> = Vec::new();
    for idx in picked {
        let rec = eligible[idx];
        match rec.labels.as_ref().and_then(|l| l.mortality) {
            Some(0) => survivors.push(rec),
            Some(_) => deceased.push(rec),
            None => unreachable!("eligibility filter keeps only labeled records"),
        }
    }
    if survivors.is_empty() {
        return Err(EhrError::InsufficientCohort(
            "no survivors in the sampled cohort".into(),
        ));
    }
    if deceased.is_empty() {
        return Err(EhrError::InsufficientCohort(
            "no deceased patients in the sampled cohort".into(),
        ));
    }

    let kinds: Vec<FeatureKind> = ds.schema.features().iter().map(|f| f.kind).collect();
    Ok(CohortStats {
        survivor: group_stats(&survivors, &kinds),
        deceased: group_stats(&deceased, &kinds),
        timestamp_kind: ds.timestamp_kind,
    })
}
