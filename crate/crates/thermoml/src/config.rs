//! Config documents: TOML restricted to scalars and arrays, flattened to
//! lowercase dotted keys.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
    List(Vec<Value>),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Real(_) => "real",
            Value::Str(_) => "string",
            Value::List(_) => "list",
        }
    }

    fn as_real(&self) -> Option<f64> {
        match *self {
            Value::Int(i) => Some(i as f64),
            Value::Real(r) => Some(r),
            _ => None,
        }
    }

    fn from_toml(v: toml::Value) -> Result<Value, String> {
        Ok(match v {
            toml::Value::Boolean(b) => Value::Bool(b),
            toml::Value::Integer(i) => Value::Int(i),
            toml::Value::Float(f) => Value::Real(f),
            toml::Value::String(s) => Value::Str(s),
            toml::Value::Array(a) => Value::List(a.into_iter().map(Value::from_toml).collect::<Result<_, _>>()?),
            toml::Value::Datetime(_) => return Err("dates are not supported".into()),
            toml::Value::Table(_) => return Err("tables inside lists are not supported".into()),
        })
    }
}

/// A key plus what is wrong with it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Diagnostic {
    pub key: String,
    pub reason: String,
}

impl Diagnostic {
    pub fn new(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Diagnostic {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.reason)
    }
}

/// Flat key-value configuration. Relative paths inside it resolve against
/// `base_dir`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigDocument {
    entries: BTreeMap<String, Value>,
    base_dir: PathBuf,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k.split('.').all(|part| {
            !part.is_empty() && part.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        })
}

fn flatten(prefix: &str, table: toml::Table, out: &mut BTreeMap<String, Value>, errors: &mut Vec<Diagnostic>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out, errors),
            other => {
                if !valid_key(&key) {
                    errors.push(Diagnostic::new(&key, "keys must be lowercase dotted paths"));
                    continue;
                }
                match Value::from_toml(other) {
                    Ok(v) => {
                        out.insert(key, v);
                    }
                    Err(e) => errors.push(Diagnostic::new(&key, e)),
                }
            }
        }
    }
}

impl ConfigDocument {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, Vec<Diagnostic>> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| vec![Diagnostic::new("<document>", e.message().to_string())])?;
        let mut entries = BTreeMap::new();
        let mut errors = Vec::new();
        flatten("", table, &mut entries, &mut errors);
        if !errors.is_empty() {
            return Err(errors);
        }
        Ok(ConfigDocument {
            entries,
            base_dir: base_dir.into(),
        })
    }

    pub fn from_entries(entries: BTreeMap<String, Value>, base_dir: impl Into<PathBuf>) -> Self {
        ConfigDocument {
            entries,
            base_dir: base_dir.into(),
        }
    }

    pub fn entries(&self) -> &BTreeMap<String, Value> {
        &self.entries
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key)
    }

    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// Typed access to a document that collects diagnostics instead of failing
/// on the first problem.
pub struct Reader<'a> {
    doc: &'a ConfigDocument,
    allowed: &'a [&'a str],
    diagnostics: Vec<Diagnostic>,
}

impl<'a> Reader<'a> {
    pub fn new(doc: &'a ConfigDocument, allowed: &'a [&'a str]) -> Self {
        let mut diagnostics = Vec::new();
        let allowed_set: BTreeSet<&str> = allowed.iter().copied().collect();
        for key in doc.entries.keys() {
            if !allowed_set.contains(key.as_str()) {
                diagnostics.push(Diagnostic::new(key, "unknown key"));
            }
        }
        Reader {
            doc,
            allowed,
            diagnostics,
        }
    }

    pub fn doc(&self) -> &ConfigDocument {
        self.doc
    }

    pub fn error(&mut self, key: &str, reason: impl Into<String>) {
        self.diagnostics.push(Diagnostic::new(key, reason));
    }

    pub fn has(&self, key: &str) -> bool {
        self.doc.entries.contains_key(key)
    }

    pub fn finish(mut self) -> Vec<Diagnostic> {
        self.diagnostics.sort();
        self.diagnostics.dedup();
        self.diagnostics
    }

    pub fn ok(&self) -> bool {
        self.diagnostics.is_empty()
    }

    fn lookup(&mut self, key: &str, required: bool) -> Option<&'a Value> {
        debug_assert!(self.allowed.contains(&key), "key {key} read but not declared");
        let v = self.doc.entries.get(key);
        if v.is_none() && required {
            self.error(key, "missing required key");
        }
        v
    }

    fn type_error(&mut self, key: &str, want: &str, got: &Value) {
        self.error(key, format!("expected {want}, found {}", got.kind()));
    }

    pub fn int(&mut self, key: &str, default: Option<i64>, min: i64) -> Option<i64> {
        let v = match self.lookup(key, default.is_none()) {
            None => return default,
            Some(v) => v,
        };
        match *v {
            Value::Int(i) if i >= min => Some(i),
            Value::Int(i) => {
                self.error(key, format!("must be >= {min}, got {i}"));
                None
            }
            _ => {
                self.type_error(key, "int", v);
                None
            }
        }
    }

    pub fn count(&mut self, key: &str, default: Option<u64>, min: u64) -> Option<u64> {
        self.int(key, default.map(|d| d as i64), min as i64).map(|i| i as u64)
    }

    /// A real in the interval described by `check`, whose message is used on failure.
    pub fn real(&mut self, key: &str, default: Option<f64>, check: impl Fn(f64) -> bool, requirement: &str) -> Option<f64> {
        let v = match self.lookup(key, default.is_none()) {
            None => return default,
            Some(v) => v,
        };
        match v.as_real() {
            Some(r) if r.is_finite() && check(r) => Some(r),
            Some(r) => {
                self.error(key, format!("{requirement}, got {r}"));
                None
            }
            None => {
                self.type_error(key, "real", v);
                None
            }
        }
    }

    pub fn any_real(&mut self, key: &str, default: Option<f64>) -> Option<f64> {
        self.real(key, default, |_| true, "must be finite")
    }

    pub fn boolean(&mut self, key: &str, default: bool) -> Option<bool> {
        match self.lookup(key, false) {
            None => Some(default),
            Some(Value::Bool(b)) => Some(*b),
            Some(v) => {
                self.type_error(key, "bool", v);
                None
            }
        }
    }

    pub fn string(&mut self, key: &str, default: Option<&str>) -> Option<String> {
        match self.lookup(key, default.is_none()) {
            None => default.map(str::to_string),
            Some(Value::Str(s)) => Some(s.clone()),
            Some(v) => {
                self.type_error(key, "string", v);
                None
            }
        }
    }

    pub fn choice(&mut self, key: &str, default: Option<&str>, options: &[&str]) -> Option<String> {
        let s = self.string(key, default)?;
        if options.contains(&s.as_str()) {
            Some(s)
        } else {
            self.error(key, format!("must be one of {}, got {s:?}", options.join(", ")));
            None
        }
    }

    pub fn optional_string(&mut self, key: &str) -> Option<String> {
        if self.has(key) {
            self.string(key, None)
        } else {
            None
        }
    }

    pub fn real_list(&mut self, key: &str, required: bool) -> Option<Vec<f64>> {
        let v = self.lookup(key, required)?;
        self.reals_of(key, v)
    }

    fn reals_of(&mut self, key: &str, v: &Value) -> Option<Vec<f64>> {
        match v {
            Value::List(items) => {
                let out: Option<Vec<f64>> = items.iter().map(|x| x.as_real().filter(|r| r.is_finite())).collect();
                if out.is_none() {
                    self.error(key, "expected a list of finite reals");
                }
                out
            }
            other => {
                self.type_error(key, "list of reals", other);
                None
            }
        }
    }

    pub fn int_list(&mut self, key: &str, required: bool, min: i64) -> Option<Vec<i64>> {
        match self.lookup(key, required)? {
            Value::List(items) => {
                let out: Option<Vec<i64>> = items
                    .iter()
                    .map(|x| match x {
                        Value::Int(i) if *i >= min => Some(*i),
                        _ => None,
                    })
                    .collect();
                if out.is_none() {
                    self.error(key, format!("expected a list of ints >= {min}"));
                }
                out
            }
            other => {
                let other = other.clone();
                self.type_error(key, "list of ints", &other);
                None
            }
        }
    }

    pub fn real_matrix(&mut self, key: &str, required: bool) -> Option<Vec<Vec<f64>>> {
        match self.lookup(key, required)? {
            Value::List(rows) => {
                let mut out = Vec::with_capacity(rows.len());
                for row in rows {
                    out.push(self.reals_of(key, row)?);
                }
                Some(out)
            }
            other => {
                let other = other.clone();
                self.type_error(key, "list of lists of reals", &other);
                None
            }
        }
    }

    /// Either an inline list of reals or a path to a file holding them.
    pub fn reals_or_path(&mut self, key: &str) -> Option<RealsSource> {
        match self.lookup(key, true)? {
            Value::Str(p) => Some(RealsSource::Path(self.doc.resolve(p))),
            v @ Value::List(_) => self.reals_of(key, v).map(RealsSource::Inline),
            other => {
                let other = other.clone();
                self.type_error(key, "list of reals or a file path", &other);
                None
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RealsSource {
    Inline(Vec<f64>),
    Path(PathBuf),
}
