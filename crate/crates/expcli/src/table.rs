//! Result tables and their CSV, JSON and SVG renderings.

use std::fmt::Write as _;

use serde_json::{json, Value as Json};

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(x) => Some(*x),
            _ => None,
        }
    }

    fn to_csv(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Float(x) => format_sig(*x, 9),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => s.clone(),
            Value::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Json {
        match self {
            Value::Int(i) => json!(i),
            Value::Float(x) if x.is_finite() => {
                // Round-trip through the 9-digit text so JSON and CSV agree.
                json!(format_sig(*x, 9).parse::<f64>().unwrap_or(*x))
            }
            Value::Float(x) => json!(x.to_string()),
            Value::Bool(b) => json!(b),
            Value::Text(s) => json!(s),
            Value::Empty => Json::Null,
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as i64)
    }
}

impl From<u64> for Value {
    fn from(i: u64) -> Self {
        Value::Int(i as i64)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Empty, Into::into)
    }
}

/// Formats `x` with `sig` significant digits, switching to scientific
/// notation for very large or very small magnitudes.
pub fn format_sig(x: f64, sig: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    // log10 can land one off near powers of ten; let the e-format decide.
    let sci = format!("{:.*e}", sig - 1, x);
    let exp = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse::<i32>().ok())
        .unwrap_or(exp);
    if (-5..15).contains(&exp) {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        sci
    }
}

/// Which columns to draw when the table is rendered as a line chart.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub x: String,
    pub y: String,
    pub series: Option<String>,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub seed: u64,
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
    pub plot: Option<PlotSpec>,
}

impl Table {
    /// `columns` are the experiment-specific keys; `schema_version` and
    /// `seed` are prepended and `wall_time_ms` appended automatically.
    pub fn new(name: &str, seed: u64, columns: &[&str]) -> Self {
        let mut cols = vec!["schema_version".to_string(), "seed".to_string()];
        cols.extend(columns.iter().map(|c| c.to_string()));
        cols.push("wall_time_ms".to_string());
        Self {
            name: name.to_string(),
            seed,
            columns: cols,
            rows: Vec::new(),
            plot: None,
        }
    }

    pub fn with_plot(mut self, x: &str, y: &str, series: Option<&str>, title: &str) -> Self {
        self.plot = Some(PlotSpec {
            x: x.to_string(),
            y: y.to_string(),
            series: series.map(str::to_string),
            title: title.to_string(),
        });
        self
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends a row of experiment-specific values.
    ///
    /// Panics if the number of values does not match the declared columns.
    pub fn push(&mut self, values: Vec<Value>, wall_time_ms: f64) {
        assert_eq!(
            values.len() + 3,
            self.columns.len(),
            "row width mismatch in table {}",
            self.name
        );
        let mut row = Vec::with_capacity(self.columns.len());
        row.push(Value::Int(SCHEMA_VERSION as i64));
        row.push(Value::Int(self.seed as i64));
        row.extend(values);
        row.push(Value::Int(wall_time_ms.round() as i64));
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn get(&self, row: usize, column: &str) -> Option<&Value> {
        self.column_index(column).map(|i| &self.rows[row][i])
    }

    /// Numeric column, skipping empty cells.
    pub fn floats(&self, column: &str) -> Vec<f64> {
        match self.column_index(column) {
            Some(i) => self.rows.iter().filter_map(|r| r[i].as_f64()).collect(),
            None => Vec::new(),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        self.to_csv_excluding(&[])
    }

    /// CSV without the named columns, e.g. `wall_time_ms` for comparisons.
    pub fn to_csv_excluding(&self, skip: &[&str]) -> Result<String> {
        let keep: Vec<usize> = (0..self.columns.len())
            .filter(|&i| !skip.contains(&self.columns[i].as_str()))
            .collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(keep.iter().map(|&i| &self.columns[i]))?;
        for row in &self.rows {
            w.write_record(keep.iter().map(|&i| row[i].to_csv()))?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Json {
        let rows: Vec<Json> = self
            .rows
            .iter()
            .map(|r| Json::Array(r.iter().map(Value::to_json).collect()))
            .collect();
        json!({
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "seed": self.seed,
            "columns": self.columns,
            "rows": rows,
        })
    }

    /// Renders the plot spec as a poly-line chart, one line per series.
    pub fn to_svg(&self) -> Option<String> {
        let spec = self.plot.as_ref()?;
        let xi = self.column_index(&spec.x)?;
        let yi = self.column_index(&spec.y)?;
        let si = spec.series.as_deref().and_then(|s| self.column_index(s));

        let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for row in &self.rows {
            let (Some(x), Some(y)) = (row[xi].as_f64(), row[yi].as_f64()) else {
                continue;
            };
            let key = si.map(|i| row[i].to_csv()).unwrap_or_default();
            match series.iter_mut().find(|(k, _)| *k == key) {
                Some((_, pts)) => pts.push((x, y)),
                None => series.push((key, vec![(x, y)])),
            }
        }
        Some(line_chart(&spec.title, &spec.x, &spec.y, &series))
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{m} {} L{} {} M{m} {} L{m} {m}" stroke="black" fill="none"/>"#,
        h - m,
        w - m,
        h - m,
        h - m
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, sx(xv), h - m + 16.0, format_sig(xv, 3));
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, m - 6.0, sy(yv) + 4.0, format_sig(yv, 4));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 16.0, escape(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(ylabel)
    );
    for (i, (name, p)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, path.join(" "));
        if !name.is_empty() {
            let ly = m + 16.0 * i as f64;
            let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#, w - m + 4.0, escape(name));
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
