//! Report rendering: aligned plain-text tables and flat key-value documents.
//!
//! A key-value document is valid TOML made only of `key = value` lines with
//! dotted bare keys. Undefined metrics are written as the string
//! `"undefined"`. Each document starts with its format tag, kind, config hash
//! and seeds.

use std::fmt::Write as _;

use crate::container::Provenance;
use crate::error::{Error, Result};
use crate::ingest::ParentGroup;
use crate::metrics::{BlockTable, BootstrapInterval, ConfusionMatrix, MetricsReport};

pub const REPORT_FORMAT: &str = "hharnet-report";

/// Reduces a display name to a bare TOML key segment.
pub fn key(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    let trimmed = out.trim_matches('_');
    if trimmed.is_empty() {
        "_".into()
    } else {
        trimmed.into()
    }
}

fn float_literal(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = v.to_string();
    if s.contains(['.', 'e']) {
        s
    } else {
        s + ".0"
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Flat, ordered key-value document.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KvDoc {
    entries: Vec<(String, String)>,
}

impl KvDoc {
    pub fn new(kind: &str, provenance: &Provenance) -> Self {
        let mut doc = KvDoc::default();
        doc.text("format", REPORT_FORMAT);
        doc.text("kind", kind);
        doc.text("config_hash", &provenance.config_hash);
        for (name, seed) in &provenance.seeds {
            doc.int(&format!("seeds.{}", key(name)), *seed);
        }
        doc
    }

    pub fn text(&mut self, k: &str, v: &str) {
        self.entries.push((k.into(), quote(v)));
    }

    pub fn int(&mut self, k: &str, v: u64) {
        self.entries.push((k.into(), v.to_string()));
    }

    pub fn float(&mut self, k: &str, v: f64) {
        self.entries.push((k.into(), float_literal(v)));
    }

    pub fn flag(&mut self, k: &str, v: bool) {
        self.entries.push((k.into(), v.to_string()));
    }

    pub fn metric(&mut self, k: &str, v: Option<f64>) {
        match v {
            Some(v) => self.float(k, v),
            None => self.text(k, "undefined"),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Parses a document written by [`KvDoc::render`].
pub fn parse_kv(text: &str) -> Result<toml::Table> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Format(e.to_string()))?;
    match table.get("format").and_then(|v| v.as_str()) {
        Some(REPORT_FORMAT) => Ok(table),
        _ => Err(Error::Format("not a report document".into())),
    }
}

/// Looks up a dotted key in a parsed document.
pub fn kv_get<'a>(table: &'a toml::Table, dotted: &str) -> Option<&'a toml::Value> {
    let mut parts = dotted.split('.');
    let mut value = table.get(parts.next()?)?;
    for p in parts {
        value = value.as_table()?.get(p)?;
    }
    Some(value)
}

/// Reads a metric value written by [`KvDoc::metric`]; `None` means undefined.
pub fn kv_metric(table: &toml::Table, dotted: &str) -> Result<Option<f64>> {
    match kv_get(table, dotted) {
        Some(toml::Value::Float(v)) => Ok(Some(*v)),
        Some(toml::Value::String(s)) if s == "undefined" => Ok(None),
        _ => Err(Error::Format(format!("report lacks `{dotted}`"))),
    }
}

/// Columns after the first are right-aligned.
#[derive(Clone, Debug, Default)]
pub struct TextTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl TextTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        TextTable {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) {
        self.rows.push(cells.into_iter().map(Into::into).collect());
    }

    pub fn render(&self) -> String {
        let cols = self
            .rows
            .iter()
            .map(Vec::len)
            .chain([self.header.len()])
            .max()
            .unwrap_or(0);
        let mut widths = vec![0; cols];
        for line in self.rows.iter().chain([&self.header]) {
            for (w, cell) in widths.iter_mut().zip(line) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let fmt_line = |line: &[String]| {
            let mut s = String::new();
            for (i, w) in widths.iter().enumerate() {
                let cell = line.get(i).map(String::as_str).unwrap_or("");
                if i == 0 {
                    let _ = write!(s, "{cell:<w$}");
                } else {
                    let _ = write!(s, "  {cell:>w$}");
                }
            }
            s.trim_end().to_string() + "\n"
        };
        let mut out = fmt_line(&self.header);
        let total: usize = widths.iter().sum::<usize>() + 2 * cols.saturating_sub(1);
        out.push_str(&"-".repeat(total));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&fmt_line(r));
        }
        out
    }
}

/// `0.9234` becomes `92.34`.
pub fn pct(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{:.2}", 100.0 * v),
        None => "undefined".into(),
    }
}

fn pct_interval(v: Option<f64>, interval: Option<&BootstrapInterval>) -> String {
    match (v, interval) {
        (Some(_), Some(i)) => format!("{} ± {:.2}", pct(v), 100.0 * i.half_width),
        _ => pct(v),
    }
}

/// Rows are true classes, columns predicted classes.
pub fn render_confusion(cm: &ConfusionMatrix) -> String {
    let names: Vec<String> = (0..cm.n())
        .map(|i| cm.class_names().get(i).cloned().unwrap_or_else(|| i.to_string()))
        .collect();
    let mut t = TextTable::new(std::iter::once("true \\ predicted".to_string()).chain(names.iter().cloned()));
    for (i, name) in names.iter().enumerate() {
        t.row(std::iter::once(name.clone()).chain((0..cm.n()).map(|j| cm.get(i, j).to_string())));
    }
    t.render()
}

/// Misclassification counts within and between the two parent blocks.
pub fn render_blocks(blocks: &BlockTable, names: [&str; 2]) -> String {
    let mut t = TextTable::new(["true \\ predicted", names[0], names[1]]);
    t.row([
        names[0].to_string(),
        blocks.within_first.to_string(),
        blocks.first_to_second.to_string(),
    ]);
    t.row([
        names[1].to_string(),
        blocks.second_to_first.to_string(),
        blocks.within_second.to_string(),
    ]);
    let mut out = t.render();
    let _ = writeln!(out, "Total misclassifications: {}", blocks.total());
    let _ = writeln!(out, "Cross-block misclassifications: {}", blocks.cross());
    out
}

/// Per-class bootstrap intervals, indexed by class.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassIntervals {
    pub precision: Vec<Option<BootstrapInterval>>,
    pub sensitivity: Vec<Option<BootstrapInterval>>,
    pub specificity: Vec<Option<BootstrapInterval>>,
    pub f1: Vec<Option<BootstrapInterval>>,
}

/// Per-class precision, sensitivity, specificity and F1 in percent, grouped by
/// parent. Intervals, when given, are bootstrap half-widths.
pub fn render_class_metrics(report: &MetricsReport, groups: &[ParentGroup], intervals: Option<&ClassIntervals>) -> String {
    let mut t = TextTable::new(["Group", "Class", "Precision", "Sensitivity", "Specificity", "F1-score"]);
    let at = |v: &Vec<Option<BootstrapInterval>>, c: usize| v.get(c).copied().flatten();
    for g in groups {
        for (k, &c) in g.leaves.iter().enumerate() {
            let m = &report.classes[c];
            let iv = |f: fn(&ClassIntervals) -> &Vec<Option<BootstrapInterval>>| intervals.and_then(|i| at(f(i), c));
            t.row([
                if k == 0 { g.name.clone() } else { String::new() },
                report.class_names.get(c).cloned().unwrap_or_else(|| c.to_string()),
                pct_interval(m.precision, iv(|i| &i.precision).as_ref()),
                pct_interval(m.sensitivity, iv(|i| &i.sensitivity).as_ref()),
                pct_interval(m.specificity, iv(|i| &i.specificity).as_ref()),
                pct_interval(m.f1, iv(|i| &i.f1).as_ref()),
            ]);
        }
    }
    let mut out = t.render();
    if intervals.is_some() {
        out.push_str("± is 1.96 bootstrap standard deviations over test-set resamples\n");
    }
    out
}

/// A row of the benchmark table. `model` is the CLI model name, `None` for
/// rows kept only as a reference point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reference {
    pub label: &'static str,
    pub model: Option<&'static str>,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
}

/// Published accuracy and balanced accuracy (percent) on the full dataset.
pub const REFERENCE: [Reference; 7] = [
    Reference { label: "Decision Tree", model: Some("dt"), accuracy: 84.3, balanced_accuracy: 75.9 },
    Reference { label: "k-NN", model: Some("knn"), accuracy: 87.5, balanced_accuracy: 78.8 },
    Reference { label: "SVM", model: None, accuracy: 87.7, balanced_accuracy: 79.2 },
    Reference { label: "Random Forest", model: Some("rf"), accuracy: 83.5, balanced_accuracy: 70.9 },
    Reference { label: "MLP", model: Some("mlp64"), accuracy: 87.8, balanced_accuracy: 81.4 },
    Reference { label: "Flat DNN", model: Some("flat"), accuracy: 89.8, balanced_accuracy: 84.1 },
    Reference { label: "HHAR-Net", model: Some("hhar"), accuracy: 92.8, balanced_accuracy: 85.2 },
];

/// Our numbers for one benchmark row.
#[derive(Clone, Debug, PartialEq)]
pub enum RowResult {
    Measured { accuracy: f64, balanced_accuracy: Option<f64> },
    Missing(String),
    OutOfScope,
}

pub fn render_benchmark(rows: &[(Reference, RowResult)]) -> String {
    let mut t = TextTable::new(["Classifier", "Accuracy", "reference", "Balanced accuracy", "reference"]);
    for (r, result) in rows {
        let (acc, bal) = match result {
            RowResult::Measured {
                accuracy,
                balanced_accuracy,
            } => (pct(Some(*accuracy)), pct(*balanced_accuracy)),
            RowResult::Missing(why) => (format!("missing ({why})"), "-".into()),
            RowResult::OutOfScope => (
                format!("out of scope (reference: {:.1})", r.accuracy),
                format!("out of scope (reference: {:.1})", r.balanced_accuracy),
            ),
        };
        t.row([
            r.label.to_string(),
            acc,
            format!("{:.1}", r.accuracy),
            bal,
            format!("{:.1}", r.balanced_accuracy),
        ]);
    }
    t.render()
}
