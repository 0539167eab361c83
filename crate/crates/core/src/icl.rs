//! Synthesis of simulated in-context example patients from cohort statistics,
//! and their rendering as `Example #k: ... RESPONSE: ...` blocks.
//!
//! Example patients are entirely simulated: numeric features are Gaussian
//! draws from the outcome group's pooled mean/variance, categorical features
//! take the group mode, and the example answer is drawn from the group's
//! answer range (risk in [0, 0.5) for survivors, (0.5, 1.0] for deceased).
//! Ids use the reserved `sim-` prefix, which ingestion rejects for real
//! records, so simulated ids can never collide with dataset ids.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::ehr::{
    CohortStats, DatasetSchema, EhrError, FeatureAggregate, FeatureValue, GroupStats,
    NumericStats, PatientRecord, Sex, Timestamp, TimestampKind, Visit, SYNTHETIC_ID_PREFIX,
};
use crate::numfmt::format_f64;
use crate::prompt::{
    render_demographics, serialize_feature_wise, serialize_visit_wise, SerializationFormat,
    TaskKind, INPUT_HEADER,
};

/// The example answer, matching the task's output indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExampleAnswer {
    /// Risk value in [0, 1]; survivors draw from [0, 0.5), deceased from
    /// (0.5, 1.0].
    Risk(f64),
    /// Remaining stay in days, drawn from the group's stay-length stats.
    Days(f64),
    /// Mortality and 30-day readmission risks, in indicator order.
    Pair { mortality: f64, readmission: f64 },
}

impl ExampleAnswer {
    /// Render the way the output indicator asks for the real answer.
    pub fn render(&self) -> String {
        match self {
            ExampleAnswer::Risk(v) => format!("{v:.2}"),
            ExampleAnswer::Days(d) => format_f64(*d),
            ExampleAnswer::Pair {
                mortality,
                readmission,
            } => format!("{mortality:.2}, {readmission:.2}"),
        }
    }
}

/// One simulated input/answer pair for in-context learning.
#[derive(Debug, Clone, PartialEq)]
pub struct IclExample {
    pub record: PatientRecord,
    pub answer: ExampleAnswer,
}

impl IclExample {
    /// The serialized input block of this example (everything after the
    /// `Input information of a patient:` header).
    pub fn input_text(&self, schema: &DatasetSchema, format: SerializationFormat) -> String {
        let serialized = match format {
            SerializationFormat::FeatureWise => serialize_feature_wise(schema, &self.record),
            SerializationFormat::VisitWise => serialize_visit_wise(schema, &self.record),
        };
        format!("{}\n{serialized}", render_demographics(&self.record))
    }
}

/// Epoch for simulated calendar timestamps: examples get consecutive dates
/// starting here.
const SYNTHETIC_DATE_EPOCH: (i32, u32, u32) = (2020, 2, 1);

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn draw_gaussian(rng: &mut ChaCha8Rng, stats: &NumericStats) -> f64 {
    let normal = Normal::new(stats.mean, stats.variance.sqrt())
        .expect("variance is non-negative and finite");
    normal.sample(rng)
}

/// Risk values are drawn on a hundredths grid so the stored value equals its
/// two-decimal rendering; 0.50 itself is excluded from both ranges.
fn draw_risk(rng: &mut ChaCha8Rng, deceased: bool) -> f64 {
    if deceased {
        rng.random_range(51..=100) as f64 / 100.0
    } else {
        rng.random_range(0..=49) as f64 / 100.0
    }
}

fn synthesize_record(
    rng: &mut ChaCha8Rng,
    group: &GroupStats,
    schema: &DatasetSchema,
    timestamp_kind: TimestampKind,
    ordinal: usize,
) -> PatientRecord {
    let sex = if rng.random_bool(0.5) {
        Sex::Female
    } else {
        Sex::Male
    };
    let age_years = round1(draw_gaussian(rng, &group.age).max(0.0));
    let n_visits = (group.mean_visit_count.round() as usize).max(1);

    let timestamps: Vec<Timestamp> = match timestamp_kind {
        TimestampKind::Index => (0..n_visits as u64).map(Timestamp::Index).collect(),
        TimestampKind::Date => {
            let (y, m, d) = SYNTHETIC_DATE_EPOCH;
            let epoch = NaiveDate::from_ymd_opt(y, m, d).expect("valid epoch");
            (0..n_visits)
                .map(|i| Timestamp::Date(epoch + chrono::Days::new(i as u64)))
                .collect()
        }
    };

    let visits = timestamps
        .into_iter()
        .map(|timestamp| {
            let values = group
                .features
                .iter()
                .map(|agg| match agg {
                    FeatureAggregate::Numeric(stats) => {
                        if stats.sample_count == 0 {
                            FeatureValue::Missing
                        } else {
                            // lab values cannot go negative; clamp at zero
                            FeatureValue::Numeric(round2(draw_gaussian(rng, stats).max(0.0)))
                        }
                    }
                    FeatureAggregate::Categorical { mode, .. } => match mode {
                        Some(v) => FeatureValue::Categorical(v.clone()),
                        None => FeatureValue::Missing,
                    },
                })
                .collect();
            Visit { timestamp, values }
        })
        .collect();

    debug_assert_eq!(schema.len(), group.features.len());
    PatientRecord {
        patient_id: format!("{SYNTHETIC_ID_PREFIX}{ordinal}"),
        sex,
        age_years,
        visits,
        labels: None,
    }
}

/// Synthesize `n` simulated examples, alternating outcome groups starting
/// with a survivor. Deterministic for a fixed seed.
pub fn synthesize_examples(
    stats: &CohortStats,
    schema: &DatasetSchema,
    n: usize,
    task: TaskKind,
    rng_seed: u64,
) -> Result<Vec<IclExample>, EhrError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut examples = Vec::with_capacity(n);
    for i in 0..n {
        let deceased = i % 2 == 1;
        let group = if deceased {
            &stats.deceased
        } else {
            &stats.survivor
        };
        if group.patient_count == 0 {
            return Err(EhrError::InsufficientCohort(format!(
                "no {} patients behind the cohort statistics",
                if deceased { "deceased" } else { "survivor" }
            )));
        }
        let record = synthesize_record(&mut rng, group, schema, stats.timestamp_kind, i + 1);
        let answer = match task {
            TaskKind::Mortality | TaskKind::Readmission30d => {
                ExampleAnswer::Risk(draw_risk(&mut rng, deceased))
            }
            TaskKind::MultiTask => ExampleAnswer::Pair {
                mortality: draw_risk(&mut rng, deceased),
                readmission: draw_risk(&mut rng, deceased),
            },
            TaskKind::LengthOfStay => {
                let stay = group.stay_length.as_ref().ok_or_else(|| {
                    EhrError::InsufficientCohort(
                        "no stay-length labels behind the cohort statistics".into(),
                    )
                })?;
                ExampleAnswer::Days(round1(draw_gaussian(&mut rng, stay).max(0.0)))
            }
        };
        examples.push(IclExample { record, answer });
    }
    Ok(examples)
}

/// Render one example block: header, input, then the answer after a blank
/// line and `RESPONSE:`.
pub fn render_example(
    ex: &IclExample,
    schema: &DatasetSchema,
    format: SerializationFormat,
    index: usize,
) -> String {
    debug_assert!(index >= 1, "example indices are 1-based");
    format!(
        "Example #{index}:\n{INPUT_HEADER}\n{}\n\nRESPONSE:\n{}",
        ex.input_text(schema, format),
        ex.answer.render()
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ehr::{DatasetSchema, FeatureDef, FeatureKind};

    fn schema() -> DatasetSchema {
        DatasetSchema::new(vec![
            FeatureDef {
                name: "Glucose".into(),
                kind: FeatureKind::Numeric,
                unit: None,
                reference_range: None,
            },
            FeatureDef {
                name: "GCS".into(),
                kind: FeatureKind::Categorical,
                unit: None,
                reference_range: None,
            },
        ])
        .unwrap()
    }

    fn stats(variance: f64) -> CohortStats {
        let group = |mean: f64, mode: &str, visits: f64| GroupStats {
            features: vec![
                FeatureAggregate::Numeric(NumericStats {
                    mean,
                    variance,
                    sample_count: 8,
                }),
                FeatureAggregate::Categorical {
                    mode: Some(mode.into()),
                    sample_count: 8,
                },
            ],
            mean_visit_count: visits,
            patient_count: 4,
            age: NumericStats {
                mean: 60.0,
                variance,
                sample_count: 4,
            },
            stay_length: Some(NumericStats {
                mean: 6.0,
                variance,
                sample_count: 4,
            }),
        };
        CohortStats {
            survivor: group(95.0, "Spontaneously", 2.4),
            deceased: group(160.0, "None", 3.6),
            timestamp_kind: TimestampKind::Index,
        }
    }

    #[test]
    fn zero_examples_is_empty() {
        let out = synthesize_examples(&stats(4.0), &schema(), 0, TaskKind::Mortality, 1).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn groups_alternate_and_risks_partition() {
        let out = synthesize_examples(&stats(4.0), &schema(), 4, TaskKind::Mortality, 7).unwrap();
        for (i, ex) in out.iter().enumerate() {
            let ExampleAnswer::Risk(v) = ex.answer else {
                panic!("expected risk answer");
            };
            if i % 2 == 0 {
                assert!((0.0..0.5).contains(&v), "survivor risk {v}");
            } else {
                assert!(v > 0.5 && v <= 1.0, "deceased risk {v}");
            }
        }
        // visit counts come from the rounded group means
        assert_eq!(out[0].record.visits.len(), 2);
        assert_eq!(out[1].record.visits.len(), 4);
    }

    #[test]
    fn zero_variance_reproduces_the_group_values() {
        let out = synthesize_examples(&stats(0.0), &schema(), 2, TaskKind::Mortality, 3).unwrap();
        for visit in &out[0].record.visits {
            assert_eq!(visit.values[0], FeatureValue::Numeric(95.0));
            assert_eq!(
                visit.values[1],
                FeatureValue::Categorical("Spontaneously".into())
            );
        }
        for visit in &out[1].record.visits {
            assert_eq!(visit.values[0], FeatureValue::Numeric(160.0));
        }
        assert_eq!(out[0].record.age_years, 60.0);
    }

    #[test]
    fn same_seed_renders_byte_identical_examples() {
        let schema = schema();
        let render_all = |seed: u64| -> String {
            synthesize_examples(&stats(9.0), &schema, 3, TaskKind::Mortality, seed)
                .unwrap()
                .iter()
                .enumerate()
                .map(|(i, ex)| render_example(ex, &schema, SerializationFormat::FeatureWise, i + 1))
                .collect::<Vec<_>>()
                .join("\n\n")
        };
        assert_eq!(render_all(5), render_all(5));
        assert_ne!(render_all(5), render_all(6));
    }

    #[test]
    fn rendering_matches_the_block_grammar() {
        let ex = IclExample {
            record: synthesize_examples(&stats(0.0), &schema(), 1, TaskKind::Mortality, 1)
                .unwrap()
                .remove(0)
                .record,
            answer: ExampleAnswer::Risk(0.25),
        };
        let block = render_example(&ex, &schema(), SerializationFormat::FeatureWise, 3);
        assert!(block.starts_with("Example #3:\nInput information of a patient:\n"));
        assert!(block.ends_with("\n\nRESPONSE:\n0.25"));

        let deceased = IclExample {
            answer: ExampleAnswer::Risk(0.85),
            ..ex
        };
        assert!(render_example(&deceased, &schema(), SerializationFormat::FeatureWise, 2)
            .ends_with("RESPONSE:\n0.85"));
    }

    #[test]
    fn synthetic_ids_use_the_reserved_prefix() {
        let out = synthesize_examples(&stats(1.0), &schema(), 3, TaskKind::Mortality, 2).unwrap();
        for (i, ex) in out.iter().enumerate() {
            assert_eq!(ex.record.patient_id, format!("sim-{}", i + 1));
        }
    }

    #[test]
    fn multi_task_and_stay_length_answers() {
        let out = synthesize_examples(&stats(1.0), &schema(), 2, TaskKind::MultiTask, 4).unwrap();
        match out[1].answer {
            ExampleAnswer::Pair {
                mortality,
                readmission,
            } => {
                assert!(mortality > 0.5 && readmission > 0.5);
                assert_eq!(out[1].answer.render(), format!("{mortality:.2}, {readmission:.2}"));
            }
            _ => panic!("expected pair answer"),
        }

        let out = synthesize_examples(&stats(1.0), &schema(), 2, TaskKind::LengthOfStay, 4).unwrap();
        match out[0].answer {
            ExampleAnswer::Days(d) => assert!(d >= 0.0),
            _ => panic!("expected days answer"),
        }
    }

    #[test]
    fn gaussian_sample_mean_stays_near_the_group_mean() {
        // 10,000 draws from Normal(mu, sigma^2): sample mean within
        // 5 sigma / sqrt(n) of mu
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let stats = NumericStats {
            mean: 42.0,
            variance: 9.0,
            sample_count: 100,
        };
        let n = 10_000;
        let sum: f64 = (0..n).map(|_| draw_gaussian(&mut rng, &stats)).sum();
        let sample_mean = sum / n as f64;
        let bound = 5.0 * 3.0 / (n as f64).sqrt();
        assert!(
            (sample_mean - 42.0).abs() < bound,
            "sample mean {sample_mean} off by more than {bound}"
        );
    }
}
