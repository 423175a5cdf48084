//! Gold-labelled command corpus and exact-match evaluation.
//!
//! The `.corpus` format is CSV with the columns `command,pickup,delivery,item`.
//! A header row is optional, `#` starts a comment line, and commands that
//! contain commas are double-quoted.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nlu::{interpret, CommandId, CommandSource, CommandText, Issue, Translator};
use crate::world::{canonical_name, LandmarkDictionary};

const HEADER: [&str; 4] = ["command", "pickup", "delivery", "item"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub command: String,
    pub pickup: String,
    pub delivery: String,
    pub item: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("corpus format error on line {line}: {reason}")]
    Format { line: u64, reason: String },
    #[error("entry {index}: gold {field} {value:?} is not in the landmark dictionary")]
    UnknownGold {
        index: usize,
        field: &'static str,
        value: String,
    },
}

pub fn parse_corpus(contents: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(contents.as_bytes());
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CorpusError::Format {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if i == 0 && record.iter().eq(HEADER) {
            continue;
        }
        if record.len() != 4 {
            return Err(CorpusError::Format {
                line,
                reason: format!("expected 4 fields, found {}", record.len()),
            });
        }
        if let Some(col) = record.iter().position(str::is_empty) {
            return Err(CorpusError::Format {
                line,
                reason: format!("{} is empty", HEADER[col]),
            });
        }
        out.push(CorpusEntry {
            command: record[0].to_string(),
            pickup: record[1].to_string(),
            delivery: record[2].to_string(),
            item: record[3].to_string(),
        });
    }
    Ok(out)
}

/// Canonical text: a header row, then one quoted-as-needed row per entry.
pub fn corpus_to_text(entries: &[CorpusEntry]) -> String {
    let mut writer = csv::WriterBuilder::new()
        .comment(Some(b'#'))
        .from_writer(Vec::new());
    writer
        .write_record(HEADER)
        .expect("writing to a Vec cannot fail");
    for e in entries {
        writer
            .write_record([&e.command, &e.pickup, &e.delivery, &e.item])
            .expect("writing to a Vec cannot fail");
    }
    String::from_utf8(writer.into_inner().expect("flushing a Vec cannot fail"))
        .expect("csv output is utf-8")
}

/// Checks that every gold location resolves in `dictionary`.
pub fn validate_corpus(
    entries: &[CorpusEntry],
    dictionary: &LandmarkDictionary,
) -> Result<(), CorpusError> {
    for (index, e) in entries.iter().enumerate() {
        for (field, value) in [("pickup", &e.pickup), ("delivery", &e.delivery)] {
            if dictionary.lookup(&canonical_name(value)).is_err() {
                return Err(CorpusError::UnknownGold {
                    index,
                    field,
                    value: value.clone(),
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub pickup: String,
    pub delivery: String,
    pub item: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryResult {
    pub command: String,
    /// Gold labels with locations resolved to canonical landmark names.
    pub gold: Labels,
    pub predicted: Option<Labels>,
    pub error: Option<String>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub entries: Vec<EntryResult>,
    pub correct: usize,
    pub total: usize,
    /// `correct / total`; zero for an empty corpus.
    pub accuracy: f64,
}

fn resolve_gold(dictionary: &LandmarkDictionary, value: &str) -> String {
    let name = canonical_name(value);
    dictionary
        .lookup(&name)
        .map(|r| r.name().to_string())
        .unwrap_or(name)
}

/// Interprets every entry and scores exact matches on all three fields.
pub fn evaluate(
    entries: &[CorpusEntry],
    translator: &dyn Translator,
    dictionary: &LandmarkDictionary,
) -> EvalReport {
    let results: Vec<EntryResult> = entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let gold = Labels {
                pickup: resolve_gold(dictionary, &e.pickup),
                delivery: resolve_gold(dictionary, &e.delivery),
                item: canonical_name(&e.item),
            };
            let issue = Issue::new(CommandId::sequential(i as u64 + 1), 0.0);
            let outcome = CommandText::new(&e.command, CommandSource::Cli)
                .and_then(|text| interpret(&text, translator, dictionary, issue));
            let (predicted, error) = match outcome {
                Ok(t) => (
                    Some(Labels {
                        pickup: t.pickup.name().to_string(),
                        delivery: t.delivery.name().to_string(),
                        item: t.item,
                    }),
                    None,
                ),
                Err(err) => (None, Some(err.to_string())),
            };
            EntryResult {
                command: e.command.clone(),
                correct: predicted.as_ref() == Some(&gold),
                gold,
                predicted,
                error,
            }
        })
        .collect();
    let correct = results.iter().filter(|r| r.correct).count();
    let total = results.len();
    EvalReport {
        entries: results,
        correct,
        total,
        accuracy: if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        },
    }
}
