//! Prompt assembly: compose role, instruction, clinical context, in-context
//! examples, serialized input, and output indicator into one deterministic
//! prompt.
//!
//! The concatenated prompt is exactly the non-empty sections joined by single
//! blank lines, in that fixed order. Assembly is a pure function of its
//! inputs, so identical inputs yield byte-identical prompts.

mod render;
mod templates;

pub use render::{
    context_block, estimate_tokens, render_cell, render_demographics, serialize_feature_wise,
    serialize_visit_wise, whitespace_token_count, Tokenizer, EXAMPLES_PREAMBLE, FEATURES_HEADER,
    INPUT_HEADER,
};
pub use templates::{fill_placeholders, TemplateSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ehr::{DatasetSchema, PatientRecord};
use crate::icl::{render_example, IclExample};
use crate::impute::{apply_policy, MissingPolicy};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("time span {span:?} is only defined for mortality, not {task:?}")]
    UnsupportedCombination { task: TaskKind, span: TimeSpan },
    #[error("template error: {0}")]
    Template(String),
}

/// How the longitudinal record is laid out in text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SerializationFormat {
    FeatureWise,
    VisitWise,
}

/// The prediction task a prompt asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Mortality,
    Readmission30d,
    LengthOfStay,
    /// Simultaneous mortality + readmission prediction.
    MultiTask,
}

impl TaskKind {
    /// Tasks whose answers are a single risk value in [0, 1].
    pub fn is_binary(self) -> bool {
        matches!(self, TaskKind::Mortality | TaskKind::Readmission30d)
    }
}

/// Prediction horizon; applies to mortality only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeSpan {
    UponDischarge,
    OneMonthPost,
    SixMonthsPost,
}

/// Which clinical-context parts to render, and how to mark absent data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextOptions {
    pub include_units: bool,
    pub include_ranges: bool,
    /// Curated-registry convention: absent unit/range renders `/`. When
    /// false, absent parts are omitted instead.
    pub slash_placeholders: bool,
}

impl Default for ContextOptions {
    fn default() -> Self {
        ContextOptions {
            include_units: true,
            include_ranges: true,
            slash_placeholders: true,
        }
    }
}

/// Where a prompt came from; carried through to run artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptMeta {
    pub dataset: String,
    pub patient_id: String,
    pub task: TaskKind,
    pub span: TimeSpan,
    pub format: SerializationFormat,
    pub policy: MissingPolicy,
    pub n_examples: usize,
    pub visit_count: usize,
}

/// A fully assembled prompt plus its parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub role_text: String,
    pub instruction_text: String,
    pub context_text: String,
    pub example_texts: Vec<String>,
    pub input_text: String,
    pub output_indicator_text: String,
    /// The exact bytes sent to the model.
    pub concatenated: String,
    pub meta: PromptMeta,
}

impl PromptBundle {
    /// Re-derive the concatenated prompt from the parts. Holds by
    /// construction; exposed so tests can assert the invariant.
    pub fn concatenate_parts(&self) -> String {
        join_sections(
            &self.role_text,
            &self.instruction_text,
            &self.context_text,
            &self.example_texts,
            &self.input_text,
            &self.output_indicator_text,
        )
    }

    /// Hex SHA-256 of the concatenated prompt; the row/cache identity.
    pub fn prompt_sha256(&self) -> String {
        crate::gateway::sha256_hex(self.concatenated.as_bytes())
    }
}

fn join_sections(
    role: &str,
    instruction: &str,
    context: &str,
    examples: &[String],
    input: &str,
    indicator: &str,
) -> String {
    let examples_section = if examples.is_empty() {
        String::new()
    } else {
        format!("{EXAMPLES_PREAMBLE}\n{}", examples.join("\n\n"))
    };
    [role, instruction, context, &examples_section, input, indicator]
        .iter()
        .filter(|s| !s.is_empty())
        .copied()
        .map(str::to_owned)
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Everything needed to assemble one prompt.
pub struct PromptRequest<'a> {
    pub dataset_name: &'a str,
    pub schema: &'a DatasetSchema,
    pub record: &'a PatientRecord,
    pub task: TaskKind,
    pub span: TimeSpan,
    pub format: SerializationFormat,
    pub policy: MissingPolicy,
    pub context: ContextOptions,
    pub examples: &'a [IclExample],
}

/// Build the five-part prompt for one record. Applies the missing-value
/// policy, renders every section, and concatenates them with single
/// blank-line separators.
pub fn assemble_prompt(
    req: &PromptRequest<'_>,
    templates: &TemplateSet,
) -> Result<PromptBundle, PromptError> {
    let task_paragraph = templates.task_instruction(req.task, req.span)?;

    let mut instruction = format!(
        "{}\n\n{}",
        templates.intro(),
        templates.format_description(req.format)
    );
    if req.policy == MissingPolicy::Reserve {
        instruction.push_str(&format!("\n\n{}", templates.missing_note()));
    }
    instruction.push_str(&format!("\n\n{task_paragraph}\n\n{}", templates.escape_clause()));

    let context_text = context_block(req.schema.features(), req.context);

    let imputed = apply_policy(req.record, req.policy);
    let serialized = match req.format {
        SerializationFormat::FeatureWise => serialize_feature_wise(req.schema, &imputed),
        SerializationFormat::VisitWise => serialize_visit_wise(req.schema, &imputed),
    };
    let input_text = format!(
        "{INPUT_HEADER}\n{}\n{serialized}",
        render_demographics(&imputed)
    );

    let example_texts: Vec<String> = req
        .examples
        .iter()
        .enumerate()
        .map(|(i, ex)| render_example(ex, req.schema, req.format, i + 1))
        .collect();

    let role_text = templates.role().to_owned();
    let output_indicator_text = templates.output_indicator(req.task).to_owned();
    let concatenated = join_sections(
        &role_text,
        &instruction,
        &context_text,
        &example_texts,
        &input_text,
        &output_indicator_text,
    );

    Ok(PromptBundle {
        role_text,
        instruction_text: instruction,
        context_text,
        example_texts,
        input_text,
        output_indicator_text,
        concatenated,
        meta: PromptMeta {
            dataset: req.dataset_name.to_owned(),
            patient_id: req.record.patient_id.clone(),
            task: req.task,
            span: req.span,
            format: req.format,
            policy: req.policy,
            n_examples: req.examples.len(),
            visit_count: req.record.visits.len(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ehr::{FeatureDef, FeatureKind, FeatureValue, Sex, Timestamp, Visit};

    fn schema() -> DatasetSchema {
        DatasetSchema::new(vec![FeatureDef {
            name: "Glucose".into(),
            kind: FeatureKind::Numeric,
            unit: Some("mg/dL".into()),
            reference_range: Some("70 - 100".into()),
        }])
        .unwrap()
    }

    fn record() -> PatientRecord {
        PatientRecord {
            patient_id: "p9".into(),
            sex: Sex::Male,
            age_years: 61.0,
            visits: vec![Visit {
                timestamp: Timestamp::Index(0),
                values: vec![FeatureValue::Numeric(101.0)],
            }],
            labels: None,
        }
    }

    fn request<'a>(schema: &'a DatasetSchema, record: &'a PatientRecord) -> PromptRequest<'a> {
        PromptRequest {
            dataset_name: "toy",
            schema,
            record,
            task: TaskKind::Mortality,
            span: TimeSpan::UponDischarge,
            format: SerializationFormat::FeatureWise,
            policy: MissingPolicy::ImputeLocf,
            context: ContextOptions::default(),
            examples: &[],
        }
    }

    #[test]
    fn section_order_and_separators() {
        let schema = schema();
        let record = record();
        let bundle = assemble_prompt(&request(&schema, &record), TemplateSet::builtin()).unwrap();

        assert!(bundle
            .concatenated
            .starts_with("You are an experienced doctor in Intensive Care Unit (ICU) treatment.\n\n"));
        assert!(bundle.concatenated.ends_with("RESPONSE:"));
        assert_eq!(bundle.concatenated, bundle.concatenate_parts());
        // zero examples: no preamble, sections still in order
        assert!(!bundle.concatenated.contains(EXAMPLES_PREAMBLE));
        assert!(!bundle.concatenated.contains("\n\n\n"));
        assert_eq!(bundle.meta.patient_id, "p9");
    }

    #[test]
    fn binary_prompts_carry_indicator_and_escape_clause() {
        let schema = schema();
        let record = record();
        for task in [TaskKind::Mortality, TaskKind::Readmission30d] {
            let mut req = request(&schema, &record);
            req.task = task;
            let bundle = assemble_prompt(&req, TemplateSet::builtin()).unwrap();
            assert!(bundle
                .concatenated
                .contains("floating-point number between 0 and 1"));
            assert!(bundle.concatenated.contains("I do not know"));
        }
    }

    #[test]
    fn reserve_policy_adds_the_missing_note() {
        let schema = schema();
        let record = record();
        let mut req = request(&schema, &record);
        req.policy = MissingPolicy::Reserve;
        let bundle = assemble_prompt(&req, TemplateSet::builtin()).unwrap();
        assert!(bundle.instruction_text.contains("`nan`"));

        req.policy = MissingPolicy::ImputeLocf;
        let bundle = assemble_prompt(&req, TemplateSet::builtin()).unwrap();
        assert!(!bundle.instruction_text.contains("`nan`"));
    }

    #[test]
    fn assembly_is_deterministic() {
        let schema = schema();
        let record = record();
        let a = assemble_prompt(&request(&schema, &record), TemplateSet::builtin()).unwrap();
        let b = assemble_prompt(&request(&schema, &record), TemplateSet::builtin()).unwrap();
        assert_eq!(a.concatenated, b.concatenated);
    }

    #[test]
    fn unsupported_span_propagates() {
        let schema = schema();
        let record = record();
        let mut req = request(&schema, &record);
        req.task = TaskKind::LengthOfStay;
        req.span = TimeSpan::SixMonthsPost;
        assert!(matches!(
            assemble_prompt(&req, TemplateSet::builtin()),
            Err(PromptError::UnsupportedCombination { .. })
        ));
    }
}
