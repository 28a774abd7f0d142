//! Flat `key = value` configuration documents.
//!
//! One assignment per line, `=` or `:` as separator, `#` starts a comment.
//! Later assignments override earlier ones, which is how command-line
//! `--set key=value` overrides are layered on top of a file.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn new() -> Self {
        KeyValues::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = split_assignment(line).ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            kv.insert(key, value);
        }
        Ok(kv)
    }

    pub fn insert(&mut self, key: &str, value: &str) {
        self.entries.insert(normalize(key), value.trim().to_string());
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = split_assignment(assignment)
            .ok_or_else(|| Error::invalid(format!("override must look like key=value, got '{assignment}'")))?;
        self.insert(key, value);
        Ok(())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(&normalize(key))
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(&normalize(key)).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| Error::invalid(format!("bad value for '{key}': '{v}' ({e})"))))
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| Error::invalid(format!("missing required key '{key}'")))
    }

    /// Comma-separated list; `a..b` expands to the half-open integer range.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(v) = self.raw(key) else { return Ok(None) };
        let mut out = Vec::new();
        for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if let Some((a, b)) = item.split_once("..") {
                let (a, b): (u64, u64) = (
                    a.trim().parse().map_err(|e| Error::invalid(format!("bad range in '{key}': {e}")))?,
                    b.trim().parse().map_err(|e| Error::invalid(format!("bad range in '{key}': {e}")))?,
                );
                for x in a..b {
                    out.push(parse_item(key, &x.to_string())?);
                }
            } else {
                out.push(parse_item(key, item)?);
            }
        }
        Ok(Some(out))
    }

    /// Rejects keys outside `known`.
    pub fn check_known(&self, known: &[&str]) -> Result<()> {
        let known: BTreeSet<String> = known.iter().map(|k| normalize(k)).collect();
        match self.entries.keys().find(|k| !known.contains(*k)) {
            Some(k) => Err(Error::invalid(format!("unknown configuration key '{k}'"))),
            None => Ok(()),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

fn parse_item<T: FromStr>(key: &str, item: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    item.parse::<T>().map_err(|e| Error::invalid(format!("bad list item for '{key}': '{item}' ({e})")))
}

fn split_assignment(line: &str) -> Option<(&str, &str)> {
    let idx = line.find(['=', ':'])?;
    let key = line[..idx].trim();
    if key.is_empty() {
        return None;
    }
    Some((key, line[idx + 1..].trim()))
}

/// Keys are case-insensitive and `-` and `_` are interchangeable.
fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}
