//! Turn structured longitudinal EHR records into zero-shot clinical-prediction
//! prompts, run them against a chat-completion model (or a deterministic mock),
//! decode the answers, and score them.
//!
//! The pipeline is a chain of pure stages:
//!
//! ```text
//! dataset files -> ehr (load/validate) -> impute -> prompt (serialize/assemble)
//!               -> gateway (model call) -> decode -> metrics
//! ```
//!
//! [`icl`] sits beside the prompt stage: it synthesizes simulated example
//! patients from cohort statistics so prompts can carry in-context examples
//! without leaking real records.

pub mod decode;
pub mod ehr;
pub mod gateway;
pub mod icl;
pub mod impute;
pub mod metrics;
pub mod numfmt;
pub mod prompt;

pub use decode::{DecodeStatus, Prediction, PredictedValue};
pub use ehr::{
    CohortStats, Dataset, DatasetSchema, EhrError, FeatureDef, FeatureKind, FeatureValue,
    OutcomeLabels, PatientRecord, Sex, Timestamp, TimestampKind, ValidationReport, Visit,
};
pub use gateway::{Gateway, GatewayError, ModelConfig, Provider, RawResponse, ResponseCache};
pub use icl::IclExample;
pub use impute::MissingPolicy;
pub use metrics::{MetricReport, MetricsError, TokenTotals};
pub use prompt::{
    ContextOptions, PromptBundle, PromptMeta, SerializationFormat, TaskKind, TemplateSet, TimeSpan,
};
