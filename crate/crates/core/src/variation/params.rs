use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            // Debug formatting is the shortest round-tripping form and always
            // carries a decimal point or exponent.
            Value::Real(v) => write!(f, "{v:?}"),
        }
    }
}

/// Named generation parameters of one variation. The text form lists
/// `key=value` lines sorted by key.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params(BTreeMap<String, Value>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_int(&mut self, key: &str, v: i64) -> &mut Self {
        self.0.insert(key.to_string(), Value::Int(v));
        self
    }

    pub fn set_real(&mut self, key: &str, v: f64) -> &mut Self {
        self.0.insert(key.to_string(), Value::Real(v));
        self
    }

    pub fn get(&self, key: &str) -> Option<Value> {
        self.0.get(key).copied()
    }

    pub fn real(&self, key: &str) -> Result<f64> {
        match self.get(key) {
            Some(Value::Real(v)) => Ok(v),
            Some(Value::Int(v)) => Ok(v as f64),
            None => Err(Error::Format(format!("missing parameter `{key}`"))),
        }
    }

    pub fn int(&self, key: &str) -> Result<i64> {
        match self.get(key) {
            Some(Value::Int(v)) => Ok(v),
            Some(Value::Real(_)) => Err(Error::Format(format!(
                "parameter `{key}` is not an integer"
            ))),
            None => Err(Error::Format(format!("missing parameter `{key}`"))),
        }
    }

    pub fn count(&self, key: &str) -> Result<usize> {
        usize::try_from(self.int(key)?)
            .map_err(|_| Error::Format(format!("parameter `{key}` is negative")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Value)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn to_text(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn from_text(text: &str) -> Result<Params> {
        let mut p = Params::new();
        for line in text.lines().filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("parameter line `{line}` has no `=`")))?;
            let bad = || Error::Format(format!("parameter `{k}` has malformed value `{v}`"));
            if v.contains(['.', 'e', 'E', 'n', 'N', 'i']) {
                p.set_real(k, v.parse().map_err(|_| bad())?);
            } else {
                p.set_int(k, v.parse().map_err(|_| bad())?);
            }
        }
        Ok(p)
    }
}
