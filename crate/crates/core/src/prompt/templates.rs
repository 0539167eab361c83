//! Prompt template data: role, instruction paragraphs, and output indicators.
//!
//! Task wording lives in editable text files (one per task/time-span
//! instruction, one per task output indicator) under `data/templates/`. The
//! same files are compiled into [`TemplateSet::builtin`], and a custom
//! directory with the same file names can be loaded at runtime. Files may use
//! `{name}` placeholders; substitution happens at load time from the
//! engine-provided variable map (currently empty for the shipped files).

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use super::{PromptError, TaskKind, TimeSpan};

/// Substitute `{name}` placeholders from `vars`; unmatched braces pass
/// through untouched.
pub fn fill_placeholders(text: &str, vars: &[(&str, &str)]) -> String {
    let mut out = text.to_owned();
    for (name, value) in vars {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}

/// The full template text for one experiment: fixed paragraphs plus the
/// per-(task, span) instruction and per-task indicator variants.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    role: String,
    intro: String,
    format_feature_wise: String,
    format_visit_wise: String,
    missing_note: String,
    escape_clause: String,
    instructions: HashMap<(TaskKind, TimeSpan), String>,
    indicators: HashMap<TaskKind, String>,
}

/// (task, span) combinations that have an instruction file. Time spans other
/// than `UponDischarge` exist for mortality only.
const INSTRUCTION_FILES: &[(TaskKind, TimeSpan, &str)] = &[
    (
        TaskKind::Mortality,
        TimeSpan::UponDischarge,
        "instruction_mortality_upon_discharge.txt",
    ),
    (
        TaskKind::Mortality,
        TimeSpan::OneMonthPost,
        "instruction_mortality_one_month_post.txt",
    ),
    (
        TaskKind::Mortality,
        TimeSpan::SixMonthsPost,
        "instruction_mortality_six_months_post.txt",
    ),
    (
        TaskKind::Readmission30d,
        TimeSpan::UponDischarge,
        "instruction_readmission_30d.txt",
    ),
    (
        TaskKind::LengthOfStay,
        TimeSpan::UponDischarge,
        "instruction_length_of_stay.txt",
    ),
    (
        TaskKind::MultiTask,
        TimeSpan::UponDischarge,
        "instruction_multi_task.txt",
    ),
];

const INDICATOR_FILES: &[(TaskKind, &str)] = &[
    (TaskKind::Mortality, "indicator_mortality.txt"),
    (TaskKind::Readmission30d, "indicator_readmission_30d.txt"),
    (TaskKind::LengthOfStay, "indicator_length_of_stay.txt"),
    (TaskKind::MultiTask, "indicator_multi_task.txt"),
];

/// Files end with an editor-friendly trailing newline that is not part of
/// the template text.
fn normalize(text: &str) -> String {
    let text = text.strip_suffix('\n').unwrap_or(text);
    fill_placeholders(text, &[])
}

macro_rules! builtin {
    ($file:literal) => {
        include_str!(concat!("../../../../data/templates/", $file))
    };
}

impl TemplateSet {
    /// The templates compiled into the library (the files under
    /// `data/templates/`).
    pub fn builtin() -> &'static TemplateSet {
        static BUILTIN: OnceLock<TemplateSet> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            let mut instructions = HashMap::new();
            for ((task, span, _), text) in INSTRUCTION_FILES.iter().zip([
                builtin!("instruction_mortality_upon_discharge.txt"),
                builtin!("instruction_mortality_one_month_post.txt"),
                builtin!("instruction_mortality_six_months_post.txt"),
                builtin!("instruction_readmission_30d.txt"),
                builtin!("instruction_length_of_stay.txt"),
                builtin!("instruction_multi_task.txt"),
            ]) {
                instructions.insert((*task, *span), normalize(text));
            }
            let mut indicators = HashMap::new();
            for ((task, _), text) in INDICATOR_FILES.iter().zip([
                builtin!("indicator_mortality.txt"),
                builtin!("indicator_readmission_30d.txt"),
                builtin!("indicator_length_of_stay.txt"),
                builtin!("indicator_multi_task.txt"),
            ]) {
                indicators.insert(*task, normalize(text));
            }
            TemplateSet {
                role: normalize(builtin!("role.txt")),
                intro: normalize(builtin!("intro.txt")),
                format_feature_wise: normalize(builtin!("format_feature_wise.txt")),
                format_visit_wise: normalize(builtin!("format_visit_wise.txt")),
                missing_note: normalize(builtin!("missing_note.txt")),
                escape_clause: normalize(builtin!("escape_clause.txt")),
                instructions,
                indicators,
            }
        })
    }

    /// Load a template directory laid out like `data/templates/`.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<TemplateSet, PromptError> {
        let dir = dir.as_ref();
        let read = |file: &str| -> Result<String, PromptError> {
            fs::read_to_string(dir.join(file))
                .map(|t| normalize(&t))
                .map_err(|e| PromptError::Template(format!("{}: {e}", dir.join(file).display())))
        };
        let mut instructions = HashMap::new();
        for (task, span, file) in INSTRUCTION_FILES {
            instructions.insert((*task, *span), read(file)?);
        }
        let mut indicators = HashMap::new();
        for (task, file) in INDICATOR_FILES {
            indicators.insert(*task, read(file)?);
        }
        Ok(TemplateSet {
            role: read("role.txt")?,
            intro: read("intro.txt")?,
            format_feature_wise: read("format_feature_wise.txt")?,
            format_visit_wise: read("format_visit_wise.txt")?,
            missing_note: read("missing_note.txt")?,
            escape_clause: read("escape_clause.txt")?,
            instructions,
            indicators,
        })
    }

    pub fn role(&self) -> &str {
        &self.role
    }

    pub fn intro(&self) -> &str {
        &self.intro
    }

    pub fn format_description(&self, format: super::SerializationFormat) -> &str {
        match format {
            super::SerializationFormat::FeatureWise => &self.format_feature_wise,
            super::SerializationFormat::VisitWise => &self.format_visit_wise,
        }
    }

    pub fn missing_note(&self) -> &str {
        &self.missing_note
    }

    pub fn escape_clause(&self) -> &str {
        &self.escape_clause
    }

    /// The task paragraph for a (task, span) pair. Spans other than
    /// `UponDischarge` are defined for mortality only.
    pub fn task_instruction(&self, task: TaskKind, span: TimeSpan) -> Result<&str, PromptError> {
        self.instructions
            .get(&(task, span))
            .map(String::as_str)
            .ok_or(PromptError::UnsupportedCombination { task, span })
    }

    pub fn output_indicator(&self, task: TaskKind) -> &str {
        &self.indicators[&task]
    }
}
