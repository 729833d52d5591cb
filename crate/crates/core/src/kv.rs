//! Flat `key = value` text, shared by run configs and generator specs.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Blank lines and `#` comments are skipped; line numbers are 1-based.
pub fn parse(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("line {}: expected `key = value`, got `{line}`", i + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Usage(format!("line {}: empty key", i + 1)));
        }
        out.push(Entry {
            line: i + 1,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

pub fn value<T: std::str::FromStr>(entry: &Entry) -> Result<T> {
    entry.value.parse().map_err(|_| bad_value(entry))
}

/// Usage error naming the key, and the line when the entry came from a file.
pub fn bad_value(entry: &Entry) -> Error {
    let at = if entry.line > 0 { format!("line {}: ", entry.line) } else { String::new() };
    Error::Usage(format!("{at}cannot parse value `{}` for key `{}`", entry.value, entry.key))
}

pub fn list<T: std::str::FromStr>(entry: &Entry) -> Result<Vec<T>> {
    if entry.value.is_empty() {
        return Ok(Vec::new());
    }
    entry
        .value
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| bad_value(entry)))
        .collect()
}
