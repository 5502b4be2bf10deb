use serde_json::{Map, Value};

use treeshift::{Alphabets, Block, TruncatedTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

/// Exit statuses.
pub const PASS: u8 = 0;
pub const VIOLATION: u8 = 1;
pub const INCONCLUSIVE: u8 = 2;
pub const USAGE: u8 = 3;

/// Ordered `key=value` scalars followed by rows of fields.
///
/// Text output prints one scalar per line and one row per line
/// (`kind key=value ...`); structured output is a single JSON object with the
/// rows of each kind collected in an array.
#[derive(Debug, Default)]
pub struct Report {
    scalars: Vec<(String, Value)>,
    rows: Vec<(String, Vec<(String, Value)>)>,
    pub status: u8,
}

pub fn count(c: u128) -> Value {
    u64::try_from(c)
        .map(Value::from)
        .unwrap_or_else(|_| Value::String(c.to_string()))
}

/// Blocks print as comma-separated symbols in canonical node order.
pub fn block(alph: &Alphabets, b: &Block) -> Value {
    let parts: Vec<&str> = b.labels().iter().map(|&l| alph.symbol(l)).collect();
    Value::String(parts.join(","))
}

pub fn tree(alph: &Alphabets, t: &TruncatedTree) -> Value {
    block(alph, t.body())
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.scalars.push((key.to_string(), value.into()));
        self
    }

    pub fn row(&mut self, kind: &str, fields: Vec<(&str, Value)>) -> &mut Self {
        self.rows.push((
            kind.to_string(),
            fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        ));
        self
    }

    /// Raises the exit status; the worst outcome wins.
    pub fn escalate(&mut self, status: u8) {
        self.status = self.status.max(status);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => {
                let mut out = String::new();
                for (k, v) in &self.scalars {
                    out.push_str(&format!("{k}={}\n", plain(v)));
                }
                for (kind, fields) in &self.rows {
                    out.push_str(kind);
                    for (k, v) in fields {
                        out.push_str(&format!(" {k}={}", plain(v)));
                    }
                    out.push('\n');
                }
                out
            }
            Format::Structured => {
                let mut obj = Map::new();
                for (k, v) in &self.scalars {
                    obj.insert(k.clone(), v.clone());
                }
                for (kind, fields) in &self.rows {
                    let row: Map<String, Value> = fields.iter().cloned().collect();
                    match obj.entry(kind.clone()).or_insert_with(|| Value::Array(vec![])) {
                        Value::Array(items) => items.push(Value::Object(row)),
                        other => *other = Value::Array(vec![Value::Object(row)]),
                    }
                }
                obj.insert("status".into(), Value::from(self.status));
                format!("{}\n", Value::Object(obj))
            }
        }
    }
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
