//! Model parameter tables and the plain-text `key=value` config format.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// A parameter value: integer or real. Numbers keep their written form so
/// counts stay exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
}

impl ParamValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            ParamValue::Int(n) => *n as f64,
            ParamValue::Real(x) => *x,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(n) => write!(f, "{n}"),
            ParamValue::Real(x) => write!(f, "{x}"),
        }
    }
}

/// Ordered name -> value table. Ordering is lexicographic by name so any
/// serialization of the table is canonical.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(BTreeMap<String, ParamValue>);

#[derive(Debug, Error)]
pub enum ParamParseError {
    #[error("line {line}: expected `key=value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: `{value}` is not a number")]
    NotANumber { line: usize, value: String },
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: &str, value: ParamValue) {
        self.0.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<ParamValue> {
        self.0.get(name).copied()
    }

    pub fn get_number(&self, name: &str) -> Option<f64> {
        self.get(name).map(|v| v.as_f64())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ParamValue)> {
        self.0.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Merge `other` on top of `self`; values in `other` win.
    pub fn overlaid_with(&self, other: &Params) -> Params {
        let mut merged = self.clone();
        for (k, v) in other.iter() {
            merged.set(k, *v);
        }
        merged
    }

    /// Parse one value the way the config file does: integers stay exact,
    /// anything else numeric becomes a real.
    pub fn parse_value(text: &str) -> Option<ParamValue> {
        let text = text.trim();
        if let Ok(n) = text.parse::<i64>() {
            return Some(ParamValue::Int(n));
        }
        text.parse::<f64>().ok().filter(|x| x.is_finite()).map(ParamValue::Real)
    }

    /// Parse a plain-text config: one `key=value` pair per line, `#` starts
    /// a comment, blank lines ignored.
    pub fn parse_config(text: &str) -> Result<Params, ParamParseError> {
        let mut params = Params::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ParamParseError::Malformed {
                line,
                text: content.to_string(),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ParamParseError::Malformed {
                    line,
                    text: content.to_string(),
                });
            }
            let parsed = Self::parse_value(value).ok_or(ParamParseError::NotANumber {
                line,
                value: value.trim().to_string(),
            })?;
            params.set(key, parsed);
        }
        Ok(params)
    }
}
