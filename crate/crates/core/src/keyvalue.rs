//! Line-oriented `key = value` documents with optional `[section]` headers.
//!
//! Used by both the synthetic scene files and the pipeline configuration.
//! `#` starts a comment. Every entry remembers its line so that validation
//! errors can point back at the source.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    /// Empty for the top-level block before the first header.
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ParseError> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| ParseError {
                line: e.line,
                message: format!("invalid value for `{}`: `{}`", e.key, e.value),
            }),
        }
    }

    pub fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T, ParseError> {
        self.parse(key)?.ok_or_else(|| ParseError {
            line: self.line,
            message: format!("missing key `{key}` in {}", self.label()),
        })
    }

    /// Rejects keys outside `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<(), ParseError> {
        for e in &self.entries {
            if !known.contains(&e.key.as_str()) {
                return Err(ParseError {
                    line: e.line,
                    message: format!("unknown key `{}` in {}", e.key, self.label()),
                });
            }
        }
        Ok(())
    }

    fn label(&self) -> String {
        if self.name.is_empty() {
            "top-level block".to_string()
        } else {
            format!("[{}] section", self.name)
        }
    }
}

/// Splits `text` into sections. Duplicate keys within a section are errors.
pub fn parse_document(text: &str) -> Result<Vec<Section>, ParseError> {
    let mut sections = vec![Section {
        name: String::new(),
        line: 1,
        entries: Vec::new(),
    }];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ParseError {
                line,
                message: format!("unterminated section header `{content}`"),
            })?;
            let name = name.trim();
            if name.is_empty() {
                return Err(ParseError {
                    line,
                    message: "empty section name".into(),
                });
            }
            sections.push(Section {
                name: name.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ParseError {
            line,
            message: format!("expected `key = value`, found `{content}`"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ParseError {
                line,
                message: "empty key".into(),
            });
        }
        let current = sections.last_mut().expect("at least one section");
        if current.get(key).is_some() {
            return Err(ParseError {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        current.entries.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(sections)
}

/// Parses a comma-separated list of numbers.
pub fn parse_list<T: std::str::FromStr>(entry: &Entry) -> Result<Vec<T>, ParseError> {
    entry
        .value
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>().map_err(|_| ParseError {
                line: entry.line,
                message: format!("invalid list item `{s}` for `{}`", entry.key),
            })
        })
        .collect()
}
