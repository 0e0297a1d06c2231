//! Tabular experiment reports and their CSV / JSON encodings.
//!
//! CSV output is a header row followed by data rows, comma separated, dot
//! decimals, LF line endings. JSON output is one object with `metadata` and
//! `rows`, where every row is an object keyed by column name. Floats are
//! printed with six significant digits unless [`Precision::Full`] is chosen.

use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Epsilon,
    Simulate,
    Table1,
    Table2,
    MinGen,
    Hypothesis,
    RandomRate,
    RandomVsCyclic,
    AzumaTail,
    AikpsBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    /// Six significant digits.
    #[default]
    Short,
    /// Shortest representation that round-trips.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

/// Rounds to `digits` significant digits.
pub fn round_significant(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

pub fn format_float(x: f64, precision: Precision) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let x = match precision {
        Precision::Short => round_significant(x, 6),
        Precision::Full => x,
    };
    // Avoid "-0".
    if x == 0.0 {
        return "0".into();
    }
    format!("{x}")
}

impl Cell {
    fn to_text(&self, precision: Precision) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v, precision),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self, precision: Precision) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => {
                let v = match precision {
                    Precision::Short => round_significant(*v, 6),
                    Precision::Full => *v,
                };
                serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
            }
            Cell::Bool(v) => Value::Bool(*v),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

/// Provenance carried by every report.
#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub command: String,
    pub seed: Option<u64>,
    pub version: String,
    /// Wall time; only filled in when timing is requested so that reports stay reproducible.
    pub elapsed_ms: Option<u64>,
    /// Exact input parameters.
    pub params: Map<String, Value>,
    /// Aggregates computed over all rows.
    pub summary: Map<String, Value>,
}

impl Metadata {
    pub fn new(command: impl Into<String>, seed: Option<u64>) -> Self {
        Self {
            command: command.into(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            elapsed_ms: None,
            params: Map::new(),
            summary: Map::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_owned(), value.into());
        self
    }

    fn to_json(&self, kind: ExperimentKind) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), self.command.clone().into());
        m.insert("kind".into(), serde_json::to_value(kind).expect("enum serializes"));
        m.insert("seed".into(), self.seed.map_or(Value::Null, Value::from));
        m.insert("version".into(), self.version.clone().into());
        m.insert("elapsed_ms".into(), self.elapsed_ms.map_or(Value::Null, Value::from));
        m.insert("params".into(), Value::Object(self.params.clone()));
        m.insert("summary".into(), Value::Object(self.summary.clone()));
        Value::Object(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub kind: ExperimentKind,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: Metadata,
}

impl Report {
    pub fn new(kind: ExperimentKind, columns: Vec<&'static str>, metadata: Metadata) -> Self {
        Self { kind, columns, rows: Vec::new(), metadata }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn summary(&mut self, key: &str, value: impl Into<Value>) {
        self.metadata.summary.insert(key.to_owned(), value.into());
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn write_csv<W: Write>(&self, out: W, precision: Precision) -> csv::Result<()> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        writer.write_record(&self.columns)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(|c| c.to_text(precision)))?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, precision: Precision) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, precision).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn to_json_value(&self, precision: Precision) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(k, v)| ((*k).to_owned(), v.to_json(precision)))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut top = Map::new();
        top.insert("metadata".into(), self.metadata.to_json(self.kind));
        top.insert("rows".into(), Value::Array(rows));
        Value::Object(top)
    }

    pub fn to_json_string(&self, precision: Precision) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value(precision)).expect("json values serialize");
        s.push('\n');
        s
    }

    /// Metadata alone, for a sidecar next to CSV output.
    pub fn metadata_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.metadata.to_json(self.kind)).expect("json values serialize");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let meta = Metadata::new("mingen", None).param("p", 1523u64).param("eps", 0.1);
        let mut r = Report::new(ExperimentKind::MinGen, vec!["p", "eps", "d", "g_min", "eps_g_min"], meta);
        r.push(vec![1523u64.into(), 0.1.into(), 161usize.into(), 624u64.into(), 0.009187269845686847.into()]);
        r
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv_string(Precision::Short);
        assert_eq!(csv, "p,eps,d,g_min,eps_g_min\n1523,0.1,161,624,0.00918727\n");
        let full = sample().to_csv_string(Precision::Full);
        assert!(full.ends_with("0.009187269845686847\n"));
    }

    #[test]
    fn csv_quotes_text_with_commas() {
        let mut r = Report::new(ExperimentKind::Simulate, vec!["ks", "n"], Metadata::new("simulate", None));
        r.push(vec!["1,2".into(), 3u64.into()]);
        assert_eq!(r.to_csv_string(Precision::Short), "ks,n\n\"1,2\",3\n");
    }

    #[test]
    fn json_layout() {
        let v = sample().to_json_value(Precision::Short);
        assert_eq!(v["metadata"]["command"], "mingen");
        assert_eq!(v["metadata"]["kind"], "min_gen");
        assert_eq!(v["metadata"]["seed"], Value::Null);
        assert_eq!(v["metadata"]["params"]["p"], 1523);
        assert_eq!(v["rows"][0]["g_min"], 624);
        assert_eq!(v["rows"][0]["eps_g_min"], 0.00918727);
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["metadata", "rows"]);
    }

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(0.0, Precision::Short), "0");
        assert_eq!(format_float(-0.0, Precision::Short), "0");
        assert_eq!(format_float(62.0101221453601, Precision::Short), "62.0101");
        assert_eq!(format_float(62.0101221453601, Precision::Full), "62.0101221453601");
        assert_eq!(format_float(1234567.0, Precision::Short), "1234570");
        assert_eq!(format_float(f64::NAN, Precision::Short), "NaN");
        assert_eq!(round_significant(0.0151695655, 4), 0.01517);
    }
}
