use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::world::{LandmarkDictionary, LandmarkRef, WorldError};

use super::command::{normalize, CommandText};
use super::directive::{parse_directive, StructuredDirective};
use super::grammar;
use super::prompt::build_prompt;
use super::translator::Translator;
use super::{LocationField, NluError};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CommandId(pub String);

impl CommandId {
    /// `cmd-000042`.
    pub fn sequential(n: u64) -> Self {
        CommandId(format!("cmd-{n:06}"))
    }
}

impl fmt::Display for CommandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Identity and time stamp the caller assigns to a command. Kept outside the
/// parse so that interpretation stays a pure function of text and dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub command_id: CommandId,
    /// Simulation seconds.
    pub issued_at: f64,
}

impl Issue {
    pub fn new(command_id: CommandId, issued_at: f64) -> Self {
        Self {
            command_id,
            issued_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub command_id: CommandId,
    pub pickup: LandmarkRef,
    pub delivery: LandmarkRef,
    pub item: String,
    pub issued_at: f64,
}

fn resolve(
    dictionary: &LandmarkDictionary,
    field: LocationField,
    value: &str,
) -> Result<LandmarkRef, NluError> {
    dictionary.lookup(value).map_err(|e| match e {
        WorldError::AmbiguousLocation { candidates, .. } => NluError::AmbiguousLocation {
            field,
            value: value.to_string(),
            candidates,
        },
        _ => NluError::UnknownLocation {
            field,
            value: value.to_string(),
        },
    })
}

/// Runs the full pipeline: normalize, prompt, translate (one retry on
/// timeout, grammar fallback when the backend is unreachable), parse, and
/// resolve both locations against the dictionary.
pub fn interpret(
    text: &CommandText,
    translator: &dyn Translator,
    dictionary: &LandmarkDictionary,
    issue: Issue,
) -> Result<TaskSpec, NluError> {
    if dictionary.is_empty() {
        return Err(NluError::EmptyDictionary);
    }
    let directive = directive_for(text, translator)?;
    Ok(TaskSpec {
        pickup: resolve(
            dictionary,
            LocationField::Pickup,
            &directive.pickup_location,
        )?,
        delivery: resolve(
            dictionary,
            LocationField::Delivery,
            &directive.delivery_location,
        )?,
        item: directive.item,
        command_id: issue.command_id,
        issued_at: issue.issued_at,
    })
}

/// The parse half of [`interpret`], stopping before landmark resolution.
pub fn directive_for(
    text: &CommandText,
    translator: &dyn Translator,
) -> Result<StructuredDirective, NluError> {
    let normalized = normalize(text)?;
    let prompt = build_prompt(&normalized)?;
    let completion = match translator.complete(&prompt) {
        Err(NluError::TranslatorTimeout) => translator.complete(&prompt),
        other => other,
    };
    match completion {
        Ok(raw) => parse_directive(&raw),
        Err(cause @ (NluError::TranslatorTimeout | NluError::TranslatorHttpError { .. })) => {
            log::warn!("translator unavailable ({cause}); using rule grammar");
            parse_directive(&grammar::directive_for(&normalized)).map_err(|_| {
                NluError::TranslatorUnavailable {
                    cause: cause.to_string(),
                }
            })
        }
        Err(other) => Err(other),
    }
}

/// A translator and dictionary bundled for repeated use.
#[derive(Clone)]
pub struct Interpreter {
    translator: Arc<dyn Translator>,
    dictionary: Arc<LandmarkDictionary>,
}

impl Interpreter {
    pub fn new(translator: Arc<dyn Translator>, dictionary: Arc<LandmarkDictionary>) -> Self {
        Self {
            translator,
            dictionary,
        }
    }

    pub fn dictionary(&self) -> &LandmarkDictionary {
        &self.dictionary
    }

    pub fn interpret(&self, text: &CommandText, issue: Issue) -> Result<TaskSpec, NluError> {
        interpret(text, self.translator.as_ref(), &self.dictionary, issue)
    }
}

impl fmt::Debug for Interpreter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Interpreter")
            .field("landmarks", &self.dictionary.len())
            .finish_non_exhaustive()
    }
}
