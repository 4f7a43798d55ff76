//! The report every command emits, as JSON or CSV.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{Format, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// One asserted comparison; `pass` is `|value − reference| ≤ tolerance`
/// unless the command says otherwise.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn within(name: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            reference,
            tolerance,
            pass: (value - reference).abs() <= tolerance,
        }
    }

    /// Passes when `value ≤ reference + tolerance`.
    pub fn at_most(name: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        Self {
            pass: value <= reference + tolerance,
            ..Self::within(name, value, reference, tolerance)
        }
    }
}

/// Rows for CSV output when a command produces a natural table.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub config: RunConfig,
    pub results: Value,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    #[serde(skip)]
    pub table: Option<Table>,
    /// Exploration runs report checks without failing on them.
    #[serde(skip)]
    pub asserted: bool,
}

impl Report {
    pub fn new(config: &RunConfig, results: Value, checks: Vec<Check>) -> Self {
        let timestamp = config.timestamp.then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Self {
            schema: SCHEMA_VERSION,
            command: config.command.clone(),
            config: config.clone(),
            results,
            checks,
            timestamp,
            table: None,
            asserted: !config.explore,
        }
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn failures(&self) -> Vec<&Check> {
        if !self.asserted {
            return Vec::new();
        }
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Csv => self.to_csv(),
        }
    }

    /// The command's table if it has one, otherwise `metric,value` rows for
    /// every scalar in `results` followed by the checks.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.table {
            Some(t) => {
                out.push_str(&t.header.join(","));
                out.push('\n');
                for row in &t.rows {
                    let cells: Vec<String> = row.iter().map(csv_cell).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
            }
            None => {
                out.push_str("metric,value\n");
                let mut rows = Vec::new();
                flatten("", &self.results, &mut rows);
                for c in &self.checks {
                    rows.push((format!("check.{}.value", c.name), Value::from(c.value)));
                    rows.push((format!("check.{}.pass", c.name), Value::from(c.pass)));
                }
                for (k, v) in rows {
                    out.push_str(&csv_escape(&k));
                    out.push(',');
                    out.push_str(&csv_cell(&v));
                    out.push('\n');
                }
            }
        }
        out
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&key(&i.to_string()), x, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => csv_escape(s),
        other => other.to_string(),
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Builds a JSON object from key/value pairs.
pub fn object<const N: usize>(pairs: [(&str, Value); N]) -> Value {
    Value::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect::<Map<_, _>>())
}
