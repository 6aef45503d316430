//! Report rendering as pretty JSON or `label,block,value` CSV.

use serde_json::Value;

use crate::Format;

/// CSV rows in insertion order.
#[derive(Debug, Default)]
pub struct Rows(Vec<(String, String, f64)>);

impl Rows {
    pub fn push(&mut self, label: impl Into<String>, block: impl Into<String>, value: f64) {
        self.0.push((label.into(), block.into(), value));
    }
}

#[derive(Debug)]
pub struct Report {
    pub json: Value,
    pub rows: Rows,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => format!("{}\n", serde_json::to_string_pretty(&self.json).expect("values serialise")),
            Format::Csv => {
                let mut out = String::from("label,block,value\n");
                for (l, b, v) in &self.rows.0 {
                    out.push_str(&format!("{},{},{v:?}\n", csv_field(l), csv_field(b)));
                }
                out
            }
        }
    }
}
