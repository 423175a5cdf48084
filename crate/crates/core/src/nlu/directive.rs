//! The three-line `KEY: value` directive exchanged with the translator.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{DirectiveField, NluError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredDirective {
    pub pickup_location: String,
    pub delivery_location: String,
    pub item: String,
    /// Verbatim translator output.
    pub raw_directive: String,
}

impl StructuredDirective {
    /// Canonical three-line form.
    pub fn render(&self) -> String {
        render_fields(&self.pickup_location, &self.delivery_location, &self.item)
    }
}

pub(crate) fn render_fields(pickup: &str, delivery: &str, item: &str) -> String {
    format!("PICKUP_LOCATION: {pickup}\nDELIVERY_LOCATION: {delivery}\nITEM: {item}")
}

static PICKUP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?im)^\s*pickup[_ ]location\s*:\s*(.+)$").expect("valid regex"));
static DELIVERY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?im)^\s*delivery[_ ]location\s*:\s*(.+)$").expect("valid regex")
});
static ITEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?im)^\s*item\s*:\s*(.+)$").expect("valid regex"));

const QUOTES: &[char] = &['"', '\'', '`'];

/// Lowercases, strips surrounding quotes and leading articles, and collapses
/// whitespace. Repeats until stable so cleaning is idempotent.
pub fn clean_value(raw: &str) -> String {
    let mut value = raw
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");
    loop {
        let before = value.clone();
        for q in QUOTES {
            if value.len() >= 2 && value.starts_with(*q) && value.ends_with(*q) {
                value = value[1..value.len() - 1].trim().to_string();
            }
        }
        for article in ["the ", "a ", "an "] {
            if let Some(rest) = value.strip_prefix(article) {
                value = rest.trim_start().to_string();
            }
        }
        if value == before {
            return value;
        }
    }
}

fn capture(re: &Regex, text: &str, field: DirectiveField) -> Result<String, NluError> {
    let raw = re
        .captures(text)
        .and_then(|c| c.get(1))
        .ok_or(NluError::MissingField(field))?;
    let value = clean_value(raw.as_str());
    if value.is_empty() {
        return Err(NluError::MissingField(field));
    }
    if value == "unknown" {
        return Err(NluError::FieldIsUnknown(field));
    }
    Ok(value)
}

/// Extracts the three fields from translator output. The first matching line
/// of each kind wins; other lines are ignored.
pub fn parse_directive(raw: &str) -> Result<StructuredDirective, NluError> {
    Ok(StructuredDirective {
        pickup_location: capture(&PICKUP, raw, DirectiveField::PickupLocation)?,
        delivery_location: capture(&DELIVERY, raw, DirectiveField::DeliveryLocation)?,
        item: capture(&ITEM, raw, DirectiveField::Item)?,
        raw_directive: raw.to_string(),
    })
}
