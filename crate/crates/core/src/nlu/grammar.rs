//! Deterministic rule grammar used by the offline mock translator and as the
//! fallback when a remote translator is unreachable.
//!
//! Rules are tried in order on normalized text; the first that matches at
//! the earliest position wins:
//!
//! 1. `(bring|take|deliver|carry|get|fetch|pick up) ITEM from X to Y`
//! 2. `from X … (bring|take|deliver) ITEM to Y`
//! 3. `go to X (and)? (pick up|grab|collect) ITEM (and)? (bring|take|deliver) (it|them)? to Y`
//!
//! `ITEM`, `X` and `Y` are maximal runs of non-keyword tokens, with leading
//! articles removed.

/// Fields extracted by a grammar rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub pickup: String,
    pub delivery: String,
    pub item: String,
}

const KEYWORDS: &[&str] = &[
    "from", "to", "bring", "take", "deliver", "carry", "get", "fetch", "pick", "grab", "collect",
    "go", "and", "it", "them", "please",
];

const ARTICLES: &[&str] = &["the", "a", "an"];

const CARRY_VERBS: &[&[&str]] = &[
    &["bring"],
    &["take"],
    &["deliver"],
    &["carry"],
    &["get"],
    &["fetch"],
    &["pick", "up"],
];
const HANDOFF_VERBS: &[&[&str]] = &[&["bring"], &["take"], &["deliver"]];
const COLLECT_VERBS: &[&[&str]] = &[&["pick", "up"], &["grab"], &["collect"]];

fn is_keyword(tok: &str) -> bool {
    KEYWORDS.contains(&tok)
}

/// Matches one of `verbs` at `pos`; returns the position after it.
fn verb_at(tokens: &[&str], pos: usize, verbs: &[&[&str]]) -> Option<usize> {
    verbs
        .iter()
        .find(|v| tokens.get(pos..pos + v.len()) == Some(v))
        .map(|v| pos + v.len())
}

fn word_at(tokens: &[&str], pos: usize, word: &str) -> Option<usize> {
    (tokens.get(pos) == Some(&word)).then_some(pos + 1)
}

fn optional_word(tokens: &[&str], pos: usize, words: &[&str]) -> usize {
    match tokens.get(pos) {
        Some(t) if words.contains(t) => pos + 1,
        _ => pos,
    }
}

/// Maximal non-keyword span starting at `pos`, articles stripped. Returns the
/// phrase and the position after the span; `None` if nothing remains.
fn phrase_at(tokens: &[&str], pos: usize) -> Option<(String, usize)> {
    let end = tokens[pos.min(tokens.len())..]
        .iter()
        .position(|t| is_keyword(t))
        .map_or(tokens.len(), |off| pos + off);
    if end <= pos {
        return None;
    }
    let mut words = &tokens[pos..end];
    while let [first, rest @ ..] = words {
        if ARTICLES.contains(first) {
            words = rest;
        } else {
            break;
        }
    }
    (!words.is_empty()).then(|| (words.join(" "), end))
}

fn carry_rule(tokens: &[&str], pos: usize) -> Option<Extraction> {
    let p = verb_at(tokens, pos, CARRY_VERBS)?;
    let (item, p) = phrase_at(tokens, p)?;
    let p = word_at(tokens, p, "from")?;
    let (pickup, p) = phrase_at(tokens, p)?;
    let p = word_at(tokens, p, "to")?;
    let (delivery, _) = phrase_at(tokens, p)?;
    Some(Extraction {
        pickup,
        delivery,
        item,
    })
}

fn from_first_rule(tokens: &[&str], pos: usize) -> Option<Extraction> {
    let p = word_at(tokens, pos, "from")?;
    let (pickup, after_pickup) = phrase_at(tokens, p)?;
    (after_pickup..tokens.len()).find_map(|v| {
        let p = verb_at(tokens, v, HANDOFF_VERBS)?;
        let (item, p) = phrase_at(tokens, p)?;
        let p = word_at(tokens, p, "to")?;
        let (delivery, _) = phrase_at(tokens, p)?;
        Some(Extraction {
            pickup: pickup.clone(),
            delivery,
            item,
        })
    })
}

fn errand_rule(tokens: &[&str], pos: usize) -> Option<Extraction> {
    let p = word_at(tokens, pos, "go")?;
    let p = word_at(tokens, p, "to")?;
    let (pickup, p) = phrase_at(tokens, p)?;
    let p = optional_word(tokens, p, &["and"]);
    let p = verb_at(tokens, p, COLLECT_VERBS)?;
    let (item, p) = phrase_at(tokens, p)?;
    let p = optional_word(tokens, p, &["and"]);
    let p = verb_at(tokens, p, HANDOFF_VERBS)?;
    let p = optional_word(tokens, p, &["it", "them"]);
    let p = word_at(tokens, p, "to")?;
    let (delivery, _) = phrase_at(tokens, p)?;
    Some(Extraction {
        pickup,
        delivery,
        item,
    })
}

/// Applies the rules to normalized text.
pub fn extract(normalized: &str) -> Option<Extraction> {
    let tokens: Vec<&str> = normalized.split_whitespace().collect();
    let rules: [fn(&[&str], usize) -> Option<Extraction>; 3] =
        [carry_rule, from_first_rule, errand_rule];
    rules
        .iter()
        .find_map(|rule| (0..tokens.len()).find_map(|pos| rule(&tokens, pos)))
}

/// The three-line directive the grammar produces, with `UNKNOWN` for every
/// field when no rule matches.
pub fn directive_for(normalized: &str) -> String {
    match extract(normalized) {
        Some(e) => super::directive::render_fields(&e.pickup, &e.delivery, &e.item),
        None => super::directive::render_fields("UNKNOWN", "UNKNOWN", "UNKNOWN"),
    }
}
