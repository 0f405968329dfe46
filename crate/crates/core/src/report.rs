//! Check records, distance tables and the bundle written by the CLI.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Reported value with no pass/fail claim attached.
    Info,
}

impl Status {
    pub fn from_bool(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// Exact strings longer than this are left out of reports (the float value
/// is still reported).
pub const MAX_EXACT_LEN: usize = 1000;

/// One verified (or merely reported) quantity.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub offending: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// The underlying value for in-process comparisons.
    #[serde(skip)]
    pub scalar: Option<Scalar>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, status: Status) -> Self {
        CheckRecord {
            name: name.into(),
            status,
            exact: None,
            value: None,
            bound: None,
            slack: None,
            window: None,
            offending: Vec::new(),
            note: None,
            scalar: None,
        }
    }

    /// Attaches an exact-or-float value. Approximate scalars only fill `value`.
    pub fn with_scalar(mut self, s: &Scalar) -> Self {
        if s.is_exact() {
            self.exact = Some(s.exact_string()).filter(|e| e.len() <= MAX_EXACT_LEN);
        }
        self.value = Some(s.to_f64());
        self.scalar = Some(s.clone());
        self
    }

    pub fn with_value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }

    pub fn with_bound(mut self, b: f64) -> Self {
        self.bound = Some(b);
        self
    }

    pub fn with_slack(mut self, s: f64) -> Self {
        self.slack = Some(s);
        self
    }

    pub fn with_window(mut self, w: impl Into<String>) -> Self {
        self.window = Some(w.into());
        self
    }

    pub fn with_offending(mut self, o: Vec<String>) -> Self {
        if !o.is_empty() {
            self.status = Status::Fail;
        }
        self.offending = o;
        self
    }

    pub fn with_note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Section {
    pub name: String,
    pub records: Vec<CheckRecord>,
}

impl Section {
    pub fn new(name: impl Into<String>) -> Self {
        Section {
            name: name.into(),
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, r: CheckRecord) {
        self.records.push(r);
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| r.status == Status::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.name == name)
    }
}

/// A row of a distance table: `||T - f||` (or a span distance) with its
/// certified lower bound and the slack lost to truncation.
#[derive(Debug, Clone, Serialize)]
pub struct DistanceRow {
    pub method: String,
    pub level: String,
    /// Exact squared distance, when available.
    pub exact: Option<String>,
    pub value: f64,
    pub bound: Option<f64>,
    pub slack: f64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub const DISTANCE_COLUMNS: [&str; 7] = ["method", "level", "dist_sq_exact", "dist", "bound", "slack", "status"];

#[derive(Debug, Clone, Serialize)]
pub struct DistanceTable {
    pub name: String,
    pub rows: Vec<DistanceRow>,
}

impl DistanceTable {
    pub fn new(name: impl Into<String>) -> Self {
        DistanceTable {
            name: name.into(),
            rows: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.status != Status::Fail)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(DISTANCE_COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.method.clone(),
                r.level.clone(),
                r.exact.clone().unwrap_or_default(),
                format!("{:?}", r.value),
                r.bound.map(|b| format!("{b:?}")).unwrap_or_default(),
                format!("{:?}", r.slack),
                serde_json::to_value(r.status)?.as_str().unwrap_or_default().to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Two-column `x,y` data per method, for external plotting.
    pub fn plot_data(&self) -> Vec<(String, String)> {
        let mut methods: Vec<&str> = self.rows.iter().map(|r| r.method.as_str()).collect();
        methods.dedup();
        methods
            .into_iter()
            .map(|m| {
                let mut s = String::from("x,y\n");
                for r in self.rows.iter().filter(|r| r.method == m) {
                    let _ = writeln!(s, "{},{:?}", r.level, r.value);
                }
                (m.to_string(), s)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub crate_version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            crate_version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub command: String,
    pub passed: bool,
    pub environment: Environment,
    pub config: serde_json::Value,
    pub sections: Vec<Section>,
    pub tables: Vec<DistanceTable>,
}

impl ReportBundle {
    pub fn new(command: impl Into<String>, config: serde_json::Value) -> Self {
        ReportBundle {
            command: command.into(),
            passed: true,
            environment: Environment::current(),
            config,
            sections: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn add_section(&mut self, s: Section) {
        self.passed &= s.passed();
        self.sections.push(s);
    }

    pub fn add_table(&mut self, t: DistanceTable) {
        self.passed &= t.passed();
        self.tables.push(t);
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&DistanceTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// All records as `(section, record)` pairs.
    pub fn records(&self) -> impl Iterator<Item = (&str, &CheckRecord)> {
        self.sections
            .iter()
            .flat_map(|s| s.records.iter().map(move |r| (s.name.as_str(), r)))
    }

    /// Writes `<command>.json`, one CSV per table and optionally plot data.
    /// Returns the paths written.
    pub fn write(&self, dir: &Path, json: bool, csv: bool, plot_data: bool) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut emit = |name: String, body: &str| -> Result<()> {
            let path = dir.join(name);
            let mut f = std::fs::File::create(&path)?;
            f.write_all(body.as_bytes())?;
            written.push(path);
            Ok(())
        };
        if json {
            emit(format!("{}.json", self.command), &self.to_json()?)?;
        }
        if csv {
            let mut checks = csv::Writer::from_writer(Vec::new());
            checks.write_record(["section", "name", "status", "exact", "value", "bound", "slack", "window"])?;
            for (section, r) in self.records() {
                checks.write_record([
                    section.to_string(),
                    r.name.clone(),
                    serde_json::to_value(r.status)?.as_str().unwrap_or_default().to_string(),
                    r.exact.clone().unwrap_or_default(),
                    r.value.map(|v| format!("{v:?}")).unwrap_or_default(),
                    r.bound.map(|v| format!("{v:?}")).unwrap_or_default(),
                    r.slack.map(|v| format!("{v:?}")).unwrap_or_default(),
                    r.window.clone().unwrap_or_default(),
                ])?;
            }
            let bytes = checks.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
            emit(format!("{}_checks.csv", self.command), &String::from_utf8_lossy(&bytes))?;
            for t in &self.tables {
                emit(format!("{}_{}.csv", self.command, t.name), &t.to_csv()?)?;
            }
        }
        if plot_data {
            for t in &self.tables {
                for (method, data) in t.plot_data() {
                    let slug: String = method
                        .chars()
                        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
                        .collect();
                    emit(format!("plot_{}_{}.csv", t.name, slug), &data)?;
                }
            }
        }
        Ok(written)
    }
}
