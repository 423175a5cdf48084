use serde::{Deserialize, Serialize};

use super::NluError;

pub const MAX_COMMAND_CHARS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandSource {
    #[default]
    Api,
    Cli,
    Ui,
}

/// A raw user command: non-blank and at most 2000 characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandText {
    raw: String,
    source: CommandSource,
}

impl CommandText {
    pub fn new(raw: impl Into<String>, source: CommandSource) -> Result<Self, NluError> {
        let raw = raw.into();
        if raw.trim().is_empty() {
            return Err(NluError::EmptyCommand);
        }
        let len = raw.chars().count();
        if len > MAX_COMMAND_CHARS {
            return Err(NluError::CommandTooLong { len });
        }
        Ok(Self { raw, source })
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn source(&self) -> CommandSource {
        self.source
    }
}

/// Lowercases, drops commas and word-final `.`/`!`/`?`, and collapses whitespace.
pub fn normalize(text: &CommandText) -> Result<String, NluError> {
    normalize_str(text.raw())
}

pub(crate) fn normalize_str(raw: &str) -> Result<String, NluError> {
    let lowered = raw.to_lowercase();
    let tokens: Vec<String> = lowered
        .split_whitespace()
        .map(|tok| {
            tok.replace(',', "")
                .trim_end_matches(['.', '!', '?'])
                .to_string()
        })
        .filter(|tok| !tok.is_empty())
        .collect();
    if tokens.is_empty() {
        return Err(NluError::EmptyCommand);
    }
    Ok(tokens.join(" "))
}
