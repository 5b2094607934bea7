//! JSON Lines datasets of [`KnowledgeItem`]s.
//!
//! Required keys: `id`, `prompt`, `target`, `old`. Optional: `new`,
//! `rephrases` (`[{prompt, answer}]`), `locality_probes`
//! (`[{prompt, old_answer, new_answer}]`). Unknown keys are ignored.
//! Blank lines are skipped; line numbers in errors are 1-based.

use std::collections::HashMap;
use std::path::Path;

use serde_json::Value;

use super::types::KnowledgeItem;
use crate::error::{Error, Result};

const REQUIRED: [&str; 4] = ["id", "prompt", "target", "old"];

fn parse_line(line: &str, lineno: usize) -> Result<KnowledgeItem> {
    let value: Value = serde_json::from_str(line).map_err(|e| Error::ParseError {
        line: lineno,
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| Error::ParseError {
        line: lineno,
        message: "expected a JSON object".into(),
    })?;
    for field in REQUIRED {
        if !obj.contains_key(field) {
            return Err(Error::MissingField {
                line: lineno,
                field,
            });
        }
    }
    let item: KnowledgeItem = serde_json::from_value(value).map_err(|e| Error::ParseError {
        line: lineno,
        message: e.to_string(),
    })?;
    for (field, text) in [
        ("id", &item.id),
        ("target", &item.target),
        ("old", &item.old),
    ] {
        if text.is_empty() {
            return Err(Error::EmptyField {
                line: lineno,
                field,
            });
        }
    }
    Ok(item)
}

pub fn decode_dataset(text: &str) -> Result<Vec<KnowledgeItem>> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut items = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let item = parse_line(line, lineno)?;
        if let Some(first) = seen.insert(item.id.clone(), lineno) {
            return Err(Error::DuplicateId {
                id: item.id,
                location: format!("lines {first} and {lineno}"),
            });
        }
        items.push(item);
    }
    Ok(items)
}

/// One compact JSON object per line, each terminated by `\n`.
pub fn encode_dataset(items: &[KnowledgeItem]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("knowledge items always serialize"));
        out.push('\n');
    }
    out
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<KnowledgeItem>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&text)
}

pub fn write_dataset(items: &[KnowledgeItem], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_dataset(items)).map_err(|e| Error::io(path, e))
}
