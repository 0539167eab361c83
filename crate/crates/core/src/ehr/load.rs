//! Ingestion of the canonical on-disk dataset format.
//!
//! A dataset is two files, both BOM-free UTF-8 with LF line endings:
//!
//! * a schema file: one feature per line,
//!   `name<TAB>kind<TAB>unit<TAB>reference_range` with `kind` one of
//!   `numeric`/`categorical` and empty fields for absent unit/range;
//! * a records file: one JSON object per line with fields `patient_id`,
//!   `sex`, `age_years`, `timestamps`, `features` (feature name -> array of
//!   values aligned to `timestamps`, `null` for missing), and optional
//!   `labels`.
//!
//! Loading normalizes every record so each visit carries every schema
//! feature in schema order, and rejects unknown features, mixed or
//! non-monotone timestamps, and type mismatches.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::{
    Dataset, DatasetSchema, EhrError, FeatureDef, FeatureKind, FeatureValue, OutcomeLabels,
    PatientRecord, Sex, Timestamp, TimestampKind, Visit, SYNTHETIC_ID_PREFIX,
};

fn read_text(path: &Path) -> Result<String, EhrError> {
    let text = fs::read_to_string(path).map_err(|e| EhrError::Parse {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    if text.starts_with('\u{feff}') {
        return Err(EhrError::Parse {
            path: path.display().to_string(),
            line: 1,
            message: "file carries a byte-order mark; expected BOM-free UTF-8".into(),
        });
    }
    Ok(text)
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> EhrError {
    EhrError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Load and validate a schema file.
pub fn load_schema(path: impl AsRef<Path>) -> Result<DatasetSchema, EhrError> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut features = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.ends_with('\r') {
            return Err(parse_err(path, lineno, "CRLF line ending; expected LF"));
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected 4 tab-separated fields, got {}", fields.len()),
            ));
        }
        let kind = match fields[1] {
            "numeric" => FeatureKind::Numeric,
            "categorical" => FeatureKind::Categorical,
            other => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("unknown feature kind `{other}`"),
                ))
            }
        };
        let opt = |s: &str| {
            if s.is_empty() {
                None
            } else {
                Some(s.to_owned())
            }
        };
        features.push(FeatureDef {
            name: fields[0].to_owned(),
            kind,
            unit: opt(fields[2]),
            reference_range: opt(fields[3]),
        });
    }
    DatasetSchema::new(features)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TimestampJson {
    Index(u64),
    Date(String),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ValueJson {
    Num(f64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelsJson {
    #[serde(default)]
    mortality: Option<u8>,
    #[serde(default)]
    readmission_30d: Option<u8>,
    #[serde(default)]
    length_of_stay_days: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordJson {
    patient_id: String,
    sex: String,
    age_years: f64,
    timestamps: Vec<TimestampJson>,
    features: BTreeMap<String, Vec<Option<ValueJson>>>,
    #[serde(default)]
    labels: Option<LabelsJson>,
}

fn parse_timestamp(ts: &TimestampJson, locus: &str) -> Result<Timestamp, EhrError> {
    match ts {
        TimestampJson::Index(i) => Ok(Timestamp::Index(*i)),
        TimestampJson::Date(s) => s
            .parse()
            .map(Timestamp::Date)
            .map_err(|_| EhrError::schema(locus, format!("invalid date `{s}` (expected YYYY-MM-DD)"))),
    }
}

fn parse_record(
    raw: RecordJson,
    schema: &DatasetSchema,
    locus: &str,
) -> Result<PatientRecord, EhrError> {
    if raw.patient_id.is_empty() {
        return Err(EhrError::schema(locus, "empty patient_id"));
    }
    if raw.patient_id.starts_with(SYNTHETIC_ID_PREFIX) {
        return Err(EhrError::schema(
            locus,
            format!("patient_id prefix `{SYNTHETIC_ID_PREFIX}` is reserved for simulated patients"),
        ));
    }
    let sex = match raw.sex.as_str() {
        "male" => Sex::Male,
        "female" => Sex::Female,
        "unknown" => Sex::Unknown,
        other => return Err(EhrError::schema(locus, format!("unknown sex `{other}`"))),
    };
    if !raw.age_years.is_finite() || raw.age_years < 0.0 {
        return Err(EhrError::schema(locus, "age_years must be a non-negative real"));
    }
    if raw.timestamps.is_empty() {
        return Err(EhrError::schema(locus, "record has no visits"));
    }

    let timestamps = raw
        .timestamps
        .iter()
        .map(|t| parse_timestamp(t, locus))
        .collect::<Result<Vec<_>, _>>()?;
    let kind = timestamps[0].kind();
    for pair in timestamps.windows(2) {
        if pair[1].kind() != kind {
            return Err(EhrError::schema(locus, "mixed timestamp kinds within a record"));
        }
        if pair[1] <= pair[0] {
            return Err(EhrError::schema(
                locus,
                format!(
                    "timestamps must be strictly increasing ({} then {})",
                    pair[0].render(),
                    pair[1].render()
                ),
            ));
        }
    }

    let n_visits = timestamps.len();
    // Normalize: one column per schema feature, Missing where absent.
    let mut columns: Vec<Vec<FeatureValue>> =
        vec![vec![FeatureValue::Missing; n_visits]; schema.len()];
    for (name, series) in &raw.features {
        let idx = schema.index_of(name).ok_or_else(|| {
            EhrError::schema(locus, format!("feature `{name}` is not in the schema"))
        })?;
        if series.len() != n_visits {
            return Err(EhrError::schema(
                locus,
                format!(
                    "feature `{name}` has {} values for {} visits",
                    series.len(),
                    n_visits
                ),
            ));
        }
        let kind = schema.features()[idx].kind;
        for (vi, cell) in series.iter().enumerate() {
            columns[idx][vi] = match (kind, cell) {
                (_, None) => FeatureValue::Missing,
                (FeatureKind::Numeric, Some(ValueJson::Num(x))) => {
                    if !x.is_finite() {
                        return Err(EhrError::schema(
                            locus,
                            format!("feature `{name}` has a non-finite value"),
                        ));
                    }
                    FeatureValue::Numeric(*x)
                }
                (FeatureKind::Categorical, Some(ValueJson::Text(s))) => {
                    FeatureValue::Categorical(s.clone())
                }
                (FeatureKind::Numeric, Some(ValueJson::Text(_))) => {
                    return Err(EhrError::schema(
                        locus,
                        format!("numeric feature `{name}` has a text value"),
                    ))
                }
                (FeatureKind::Categorical, Some(ValueJson::Num(_))) => {
                    return Err(EhrError::schema(
                        locus,
                        format!("categorical feature `{name}` has a numeric value"),
                    ))
                }
            };
        }
    }

    let visits = timestamps
        .into_iter()
        .enumerate()
        .map(|(vi, timestamp)| Visit {
            timestamp,
            values: columns.iter().map(|col| col[vi].clone()).collect(),
        })
        .collect();

    let labels = match raw.labels {
        None => None,
        Some(l) => {
            for (field, v) in [("mortality", l.mortality), ("readmission_30d", l.readmission_30d)] {
                if let Some(v) = v {
                    if v > 1 {
                        return Err(EhrError::schema(locus, format!("{field} must be 0 or 1")));
                    }
                }
            }
            if let Some(days) = &l.length_of_stay_days {
                if days.len() != n_visits {
                    return Err(EhrError::schema(
                        locus,
                        format!(
                            "length_of_stay_days has {} entries for {} visits",
                            days.len(),
                            n_visits
                        ),
                    ));
                }
                if days.iter().any(|d| !d.is_finite() || *d < 0.0) {
                    return Err(EhrError::schema(
                        locus,
                        "length_of_stay_days entries must be non-negative reals",
                    ));
                }
            }
            Some(OutcomeLabels {
                mortality: l.mortality,
                readmission_30d: l.readmission_30d,
                length_of_stay_days: l.length_of_stay_days,
            })
        }
    };

    Ok(PatientRecord {
        patient_id: raw.patient_id,
        sex,
        age_years: raw.age_years,
        visits,
        labels,
    })
}

/// Load a records file against an already-loaded schema. Returns the records
/// plus the dataset-wide timestamp kind.
pub fn load_records(
    path: impl AsRef<Path>,
    schema: &DatasetSchema,
) -> Result<(Vec<PatientRecord>, TimestampKind), EhrError> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut records: Vec<PatientRecord> = Vec::new();
    let mut kind: Option<TimestampKind> = None;
    let mut seen_ids = std::collections::HashSet::new();

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.ends_with('\r') {
            return Err(parse_err(path, lineno, "CRLF line ending; expected LF"));
        }
        if line.is_empty() {
            continue;
        }
        let raw: RecordJson = serde_json::from_str(line)
            .map_err(|e| parse_err(path, lineno, e.to_string()))?;
        let locus = format!("{}:{} (record {})", path.display(), lineno, raw.patient_id);
        let record = parse_record(raw, schema, &locus)?;
        if !seen_ids.insert(record.patient_id.clone()) {
            return Err(EhrError::schema(&locus, "duplicate patient_id"));
        }
        let record_kind = record.visits[0].timestamp.kind();
        match kind {
            None => kind = Some(record_kind),
            Some(k) if k != record_kind => {
                return Err(EhrError::schema(
                    &locus,
                    "mixed timestamp kinds within the dataset",
                ))
            }
            _ => {}
        }
        records.push(record);
    }

    Ok((records, kind.unwrap_or(TimestampKind::Index)))
}

/// Load schema + records into a normalized [`Dataset`].
pub fn load_dataset(
    schema_path: impl AsRef<Path>,
    records_path: impl AsRef<Path>,
    name: impl Into<String>,
) -> Result<Dataset, EhrError> {
    let schema = load_schema(schema_path)?;
    let (records, timestamp_kind) = load_records(records_path, &schema)?;
    Ok(Dataset {
        name: name.into(),
        schema,
        records,
        timestamp_kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    const SCHEMA: &str = "Glucose\tnumeric\tmg/dL\t70 - 100\nGCS eye opening\tcategorical\t\t\n";

    #[test]
    fn absent_features_normalize_to_missing() {
        let dir = tempfile::tempdir().unwrap();
        let schema = write_file(&dir, "schema.tsv", SCHEMA);
        let records = write_file(
            &dir,
            "records.jsonl",
            r#"{"patient_id":"p1","sex":"male","age_years":60.0,"timestamps":[0,1],"features":{"Glucose":[101.0,null]}}
"#,
        );
        let ds = load_dataset(&schema, &records, "toy").unwrap();
        assert_eq!(ds.records.len(), 1);
        let rec = &ds.records[0];
        assert_eq!(rec.visits[0].values[0], FeatureValue::Numeric(101.0));
        assert_eq!(rec.visits[1].values[0], FeatureValue::Missing);
        // the categorical feature was absent entirely
        assert_eq!(rec.visits[0].values[1], FeatureValue::Missing);
        assert_eq!(ds.timestamp_kind, TimestampKind::Index);
    }

    #[test]
    fn non_monotone_timestamps_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let schema = write_file(&dir, "schema.tsv", SCHEMA);
        let records = write_file(
            &dir,
            "records.jsonl",
            r#"{"patient_id":"p1","sex":"male","age_years":60.0,"timestamps":[2,1],"features":{"Glucose":[1.0,2.0]}}
"#,
        );
        let err = load_dataset(&schema, &records, "toy").unwrap_err();
        assert!(matches!(err, EhrError::Schema { .. }), "{err}");
    }

    #[test]
    fn unknown_features_and_mixed_kinds_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let schema = write_file(&dir, "schema.tsv", SCHEMA);
        let unknown = write_file(
            &dir,
            "r1.jsonl",
            r#"{"patient_id":"p1","sex":"male","age_years":60.0,"timestamps":[0],"features":{"Lactate":[1.0]}}
"#,
        );
        assert!(load_dataset(&schema, &unknown, "toy").is_err());

        let mixed = write_file(
            &dir,
            "r2.jsonl",
            concat!(
                r#"{"patient_id":"p1","sex":"male","age_years":60.0,"timestamps":[0],"features":{}}"#,
                "\n",
                r#"{"patient_id":"p2","sex":"female","age_years":50.0,"timestamps":["2020-01-01"],"features":{}}"#,
                "\n"
            ),
        );
        let err = load_dataset(&schema, &mixed, "toy").unwrap_err();
        assert!(err.to_string().contains("mixed timestamp kinds"), "{err}");
    }

    #[test]
    fn dates_parse_and_sort_strictly() {
        let dir = tempfile::tempdir().unwrap();
        let schema = write_file(&dir, "schema.tsv", SCHEMA);
        let records = write_file(
            &dir,
            "records.jsonl",
            r#"{"patient_id":"p1","sex":"female","age_years":71.0,"timestamps":["2020-02-01","2020-02-01"],"features":{}}
"#,
        );
        assert!(load_dataset(&schema, &records, "toy").is_err());
    }

    #[test]
    fn label_length_must_match_visits() {
        let dir = tempfile::tempdir().unwrap();
        let schema = write_file(&dir, "schema.tsv", SCHEMA);
        let records = write_file(
            &dir,
            "records.jsonl",
            r#"{"patient_id":"p1","sex":"male","age_years":60.0,"timestamps":[0,1],"features":{},"labels":{"length_of_stay_days":[3.0]}}
"#,
        );
        assert!(load_dataset(&schema, &records, "toy").is_err());
    }

    #[test]
    fn reserved_patient_id_prefix_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let schema = write_file(&dir, "schema.tsv", SCHEMA);
        let records = write_file(
            &dir,
            "records.jsonl",
            r#"{"patient_id":"sim-1","sex":"male","age_years":60.0,"timestamps":[0],"features":{}}
"#,
        );
        assert!(load_dataset(&schema, &records, "toy").is_err());
    }

    #[test]
    fn reloading_normalized_output_stays_clean() {
        let dir = tempfile::tempdir().unwrap();
        let schema = write_file(&dir, "schema.tsv", SCHEMA);
        let records = write_file(
            &dir,
            "records.jsonl",
            r#"{"patient_id":"p1","sex":"male","age_years":60.0,"timestamps":[0,1],"features":{"Glucose":[101.0,null],"GCS eye opening":["Spontaneously",null]},"labels":{"mortality":1}}
"#,
        );
        let ds = load_dataset(&schema, &records, "toy").unwrap();
        let report = super::super::validate_dataset(&ds);
        assert_eq!(report.records.len(), 1);
        // normalization is idempotent: every visit has every feature slot
        for rec in &ds.records {
            for visit in &rec.visits {
                assert_eq!(visit.values.len(), ds.schema.len());
            }
        }
    }
}
