//! Command text → structured task parameters.
//!
//! The pipeline is `normalize → build_prompt → translate → parse_directive →
//! landmark lookup`. The translator is treated as a formatting layer only: it
//! rewrites free text into three `KEY: value` lines, and every location it
//! names must already exist in the landmark dictionary.

mod command;
mod directive;
mod grammar;
mod interpret;
mod prompt;
mod translator;

pub use command::{normalize, CommandSource, CommandText, MAX_COMMAND_CHARS};
pub use directive::{clean_value, parse_directive, StructuredDirective};
pub use grammar::{directive_for as mock_directive, extract as mock_extract, Extraction};
pub use interpret::{directive_for, interpret, CommandId, Interpreter, Issue, TaskSpec};
pub use prompt::{build_prompt, Prompt, SYSTEM_PROMPT};
pub use translator::{
    translate, translator_from_config, Backend, HttpTranslator, MockTranslator, Translator,
    TranslatorConfig, DEFAULT_API_KEY_ENV, DEFAULT_ENDPOINT, DEFAULT_MODEL, ENDPOINT_ENV,
    MODEL_ENV,
};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The three directive lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectiveField {
    PickupLocation,
    DeliveryLocation,
    Item,
}

impl fmt::Display for DirectiveField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DirectiveField::PickupLocation => "pickup_location",
            DirectiveField::DeliveryLocation => "delivery_location",
            DirectiveField::Item => "item",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationField {
    Pickup,
    Delivery,
}

impl fmt::Display for LocationField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LocationField::Pickup => "pickup",
            LocationField::Delivery => "delivery",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NluError {
    #[error("command is empty")]
    EmptyCommand,
    #[error("command is {len} characters; the limit is {MAX_COMMAND_CHARS}")]
    CommandTooLong { len: usize },
    #[error("translator timed out")]
    TranslatorTimeout,
    #[error("translator request failed: {message}")]
    TranslatorHttpError {
        status: Option<u16>,
        message: String,
    },
    #[error("translator returned an unusable completion: {0}")]
    MalformedCompletion(String),
    #[error("directive has no {0} line")]
    MissingField(DirectiveField),
    #[error("directive leaves {0} as UNKNOWN")]
    FieldIsUnknown(DirectiveField),
    #[error("{field} location {value:?} is not in the landmark dictionary")]
    UnknownLocation { field: LocationField, value: String },
    #[error("{field} location {value:?} is ambiguous: {candidates:?}")]
    AmbiguousLocation {
        field: LocationField,
        value: String,
        candidates: Vec<String>,
    },
    #[error("translator unavailable and the rule grammar found no task ({cause})")]
    TranslatorUnavailable { cause: String },
    #[error("landmark dictionary is empty")]
    EmptyDictionary,
    #[error("invalid translator config: {0}")]
    InvalidConfig(String),
    #[error("environment variable {0} holding the API key is not set")]
    MissingApiKey(String),
}

impl NluError {
    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            NluError::EmptyCommand => "EmptyCommand",
            NluError::CommandTooLong { .. } => "CommandTooLong",
            NluError::TranslatorTimeout => "TranslatorTimeout",
            NluError::TranslatorHttpError { .. } => "TranslatorHttpError",
            NluError::MalformedCompletion(_) => "MalformedCompletion",
            NluError::MissingField(_) => "MissingField",
            NluError::FieldIsUnknown(_) => "FieldIsUnknown",
            NluError::UnknownLocation { .. } => "UnknownLocation",
            NluError::AmbiguousLocation { .. } => "AmbiguousLocation",
            NluError::TranslatorUnavailable { .. } => "TranslatorUnavailable",
            NluError::EmptyDictionary => "EmptyDictionary",
            NluError::InvalidConfig(_) => "InvalidConfig",
            NluError::MissingApiKey(_) => "MissingApiKey",
        }
    }
}
