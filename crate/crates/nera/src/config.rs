//! Flat `key = value` configuration documents.
//!
//! Grammar: UTF-8 text, one entry per line. Blank lines and lines starting
//! with `#` are ignored. An entry is `key = value` where the key matches
//! `[A-Za-z0-9_]+` and the value is any non-empty token sequence with
//! surrounding whitespace trimmed. Duplicate keys are errors. There are no
//! inline comments.
//!
//! Errors carry the offending line number so the CLI can point at the exact
//! field.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: invalid key `{key}` (allowed: letters, digits, underscore)")]
    BadKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key `{key}`")]
    MissingKey { key: String },
    #[error("line {line}: key `{key}`: {msg}")]
    BadValue {
        line: usize,
        key: String,
        msg: String,
    },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("invalid configuration: {msg}")]
    Invalid { msg: String },
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// A parsed flat key-value document.
#[derive(Clone, Debug, Default)]
pub struct ConfigDoc {
    entries: Vec<Entry>,
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<Entry> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some(eq) = trimmed.find('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: trimmed.to_string(),
                });
            };
            let key = trimmed[..eq].trim();
            let value = trimmed[eq + 1..].trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ConfigError::BadKey {
                    line,
                    key: key.to_string(),
                });
            }
            if value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    text: trimmed.to_string(),
                });
            }
            if entries.iter().any(|e| e.key == key) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            entries.push(Entry {
                key: key.to_string(),
                value: value.to_string(),
                line,
            });
        }
        Ok(ConfigDoc { entries })
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    /// Reject any key outside `known`, pointing at its line.
    pub fn require_known(&self, known: &[&str]) -> Result<(), ConfigError> {
        for e in &self.entries {
            if !known.iter().any(|&k| k == e.key) {
                return Err(ConfigError::UnknownKey {
                    line: e.line,
                    key: e.key.clone(),
                });
            }
        }
        Ok(())
    }

    fn parse_with<T, F>(&self, key: &str, what: &str, f: F) -> Result<T, ConfigError>
    where
        F: FnOnce(&str) -> Option<T>,
    {
        let e = self
            .entry(key)
            .ok_or_else(|| ConfigError::MissingKey {
                key: key.to_string(),
            })?;
        f(&e.value).ok_or_else(|| ConfigError::BadValue {
            line: e.line,
            key: key.to_string(),
            msg: format!("expected {what}, got `{}`", e.value),
        })
    }

    pub fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.parse_with(key, "a number", |v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some(_) => self.f64(key).map(Some),
        }
    }

    pub fn usize_opt(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some(_) => self
                .parse_with(key, "a nonnegative integer", |v| v.parse::<usize>().ok())
                .map(Some),
        }
    }

    pub fn u64_opt(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some(_) => self
                .parse_with(key, "a nonnegative integer", |v| v.parse::<u64>().ok())
                .map(Some),
        }
    }

    pub fn str_opt(&self, key: &str) -> Option<&str> {
        self.entry(key).map(|e| e.value.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let doc = ConfigDoc::parse("# heading\n\n a = 1.5 \nb = two\n").unwrap();
        assert_eq!(doc.entries().len(), 2);
        assert_eq!(doc.f64("a").unwrap(), 1.5);
        assert_eq!(doc.str_opt("b"), Some("two"));
    }

    #[test]
    fn syntax_error_carries_line() {
        let err = ConfigDoc::parse("a = 1\nnot an entry\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }), "{err}");
    }

    #[test]
    fn duplicate_key_rejected() {
        let err = ConfigDoc::parse("a = 1\na = 2\n").unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { line: 2, .. }));
    }

    #[test]
    fn non_finite_numbers_rejected() {
        let doc = ConfigDoc::parse("a = nan\nb = inf\n").unwrap();
        assert!(doc.f64("a").is_err());
        assert!(doc.f64("b").is_err());
    }

    #[test]
    fn missing_key_reported() {
        let doc = ConfigDoc::parse("a = 1\n").unwrap();
        assert!(matches!(doc.f64("z"), Err(ConfigError::MissingKey { .. })));
    }
}
