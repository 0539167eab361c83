//! Text rendering of records: demographics sentences, feature-wise and
//! visit-wise serialization, the clinical-context block, and token counting.

use crate::ehr::{DatasetSchema, FeatureDef, FeatureKind, FeatureValue, PatientRecord, Sex};
use crate::numfmt::format_f64;

use super::ContextOptions;

/// Fixed grammar of the input section.
pub const INPUT_HEADER: &str = "Input information of a patient:";
pub const FEATURES_HEADER: &str = "Details of the features for each visit are as follows:";
pub const EXAMPLES_PREAMBLE: &str = "Here is an example of input information:";

/// Missing cells render `nan` for numeric features and `unknown` for
/// categorical ones.
pub fn render_cell(value: &FeatureValue, kind: FeatureKind) -> String {
    match value {
        FeatureValue::Numeric(x) => format_f64(*x),
        FeatureValue::Categorical(s) => s.clone(),
        FeatureValue::Missing => match kind {
            FeatureKind::Numeric => "nan".to_owned(),
            FeatureKind::Categorical => "unknown".to_owned(),
        },
    }
}

/// The two demographics sentences heading every serialized record. The
/// visit-count grammar is kept verbatim even for one visit ("had 1 visits")
/// to match the fixture prompts.
pub fn render_demographics(rec: &PatientRecord) -> String {
    let first = match rec.sex {
        Sex::Male => format!(
            "The patient is a male, aged {} years.",
            format_f64(rec.age_years)
        ),
        Sex::Female => format!(
            "The patient is a female, aged {} years.",
            format_f64(rec.age_years)
        ),
        Sex::Unknown => format!("The patient is aged {} years.", format_f64(rec.age_years)),
    };
    let times: Vec<String> = rec.visits.iter().map(|v| v.timestamp.render()).collect();
    format!(
        "{first}\nThe patient had {} visits that occurred at {}.",
        rec.visits.len(),
        times.join(", ")
    )
}

/// One line per schema feature, all visits joined by commas:
/// `- {name}: "{v1, v2, ...}"`.
pub fn serialize_feature_wise(schema: &DatasetSchema, rec: &PatientRecord) -> String {
    let mut out = String::from(FEATURES_HEADER);
    for (fi, def) in schema.features().iter().enumerate() {
        let values: Vec<String> = rec
            .visits
            .iter()
            .map(|v| render_cell(&v.values[fi], def.kind))
            .collect();
        out.push_str(&format!("\n- {}: \"{}\"", def.name, values.join(", ")));
    }
    out
}

/// One block per visit, headed by its timestamp, one `- {name}: {value}`
/// line per schema feature.
pub fn serialize_visit_wise(schema: &DatasetSchema, rec: &PatientRecord) -> String {
    let mut blocks = Vec::with_capacity(rec.visits.len());
    for visit in &rec.visits {
        let mut block = format!("Visit occurred at {}:", visit.timestamp.render());
        for (fi, def) in schema.features().iter().enumerate() {
            block.push_str(&format!(
                "\n- {}: {}",
                def.name,
                render_cell(&visit.values[fi], def.kind)
            ));
        }
        blocks.push(block);
    }
    format!("{FEATURES_HEADER}\n{}", blocks.join("\n\n"))
}

/// The clinical-context block: one `- {name}: Unit: .. Reference range: ..`
/// line per feature. With `slash_placeholders` (the curated-registry
/// convention) absent parts render `/`; otherwise they are omitted. Returns
/// empty text when both parts are disabled or `defs` is empty.
pub fn context_block(defs: &[FeatureDef], opts: ContextOptions) -> String {
    if !opts.include_units && !opts.include_ranges {
        return String::new();
    }
    let mut lines = Vec::with_capacity(defs.len());
    for def in defs {
        let mut line = format!("- {}:", def.name);
        let part = |value: &Option<String>| -> Option<String> {
            match (value, opts.slash_placeholders) {
                (Some(v), _) => Some(v.clone()),
                (None, true) => Some("/".to_owned()),
                (None, false) => None,
            }
        };
        if opts.include_units {
            if let Some(unit) = part(&def.unit) {
                line.push_str(&format!(" Unit: {unit}."));
            }
        }
        if opts.include_ranges {
            if let Some(range) = part(&def.reference_range) {
                line.push_str(&format!(" Reference range: {range}."));
            }
        }
        lines.push(line);
    }
    lines.join("\n")
}

/// A tokenizer maps text to a token count.
pub type Tokenizer = dyn Fn(&str) -> usize + Send + Sync;

/// The default, deliberately approximate tokenizer: whitespace-delimited
/// chunk count.
pub fn whitespace_token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Count tokens with the given tokenizer, or the whitespace default.
pub fn estimate_tokens(text: &str, tokenizer: Option<&Tokenizer>) -> usize {
    match tokenizer {
        Some(f) => f(text),
        None => whitespace_token_count(text),
    }
}
