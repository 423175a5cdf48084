use serde::{Deserialize, Serialize};

use super::NluError;

/// System instruction sent with every translation request.
pub const SYSTEM_PROMPT: &str =
    "You convert an errand command into exactly three lines and nothing else:\n\
PICKUP_LOCATION: <place to collect from>\n\
DELIVERY_LOCATION: <place to deliver to>\n\
ITEM: <object to carry>\n\
Copy place and object names verbatim from the command. If a field is not stated, write UNKNOWN.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

pub fn build_prompt(normalized: &str) -> Result<Prompt, NluError> {
    if normalized.trim().is_empty() {
        return Err(NluError::EmptyCommand);
    }
    Ok(Prompt {
        system: SYSTEM_PROMPT.to_string(),
        user: normalized.to_string(),
    })
}
