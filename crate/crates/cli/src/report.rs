//! Run reports and their serialization.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use infocap::verify::Check;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ScenarioConfig;
use crate::scenario::{FieldOutput, Outcome, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub timestamp: u64,
}

impl Provenance {
    pub fn now(seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: ScenarioConfig,
    pub provenance: Provenance,
    pub result: Value,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl RunReport {
    pub fn new(scenario: ScenarioConfig, outcome: &Outcome) -> Self {
        let seed = scenario.seed();
        Self {
            pass: outcome.checks.iter().all(|c| c.pass),
            scenario,
            provenance: Provenance::now(seed),
            result: outcome.result.clone(),
            checks: outcome.checks.clone(),
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize to JSON") + "\n"
    }
}

pub fn check_line(c: &Check) -> String {
    format!(
        "[{}] {}: lhs {:.6e} rhs {:.6e} tol {:.1e}",
        if c.pass { "PASS" } else { "FAIL" },
        c.label,
        c.lhs,
        c.rhs,
        c.tolerance
    )
}

pub fn write_checks_csv<W: Write>(w: W, checks: &[Check]) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "label",
        "relation",
        "lhs",
        "rhs",
        "tolerance",
        "margin",
        "pass",
    ])?;
    for c in checks {
        let relation = serde_json::to_value(c.relation)?;
        out.write_record([
            c.label.clone(),
            relation.as_str().unwrap_or_default().to_string(),
            c.lhs.to_string(),
            c.rhs.to_string(),
            c.tolerance.to_string(),
            c.margin.to_string(),
            c.pass.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Blank for padding, exponent form outside `[1e-4, 1e15)`.
fn number(v: f64) -> String {
    let a = v.abs();
    if v.is_nan() {
        String::new()
    } else if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

pub fn write_table<W: Write>(w: W, t: &Table) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(&t.headers)?;
    for row in &t.rows {
        out.write_record(row.iter().map(|v| number(*v)))?;
    }
    out.flush()?;
    Ok(())
}

/// Write the report, CSV tables (for the csv format) and field files into
/// `dir`; returns the paths written.
pub fn write_outputs(
    dir: &Path,
    stem: &str,
    report: &RunReport,
    outcome: &Outcome,
    csv: bool,
) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let json = dir.join(format!("{stem}.report.json"));
    std::fs::write(&json, report.to_json())?;
    written.push(json);
    if csv {
        let path = dir.join(format!("{stem}.checks.csv"));
        write_checks_csv(std::fs::File::create(&path)?, &report.checks)?;
        written.push(path);
        for t in &outcome.tables {
            let path = dir.join(format!("{stem}.{}.csv", t.name));
            write_table(std::fs::File::create(&path)?, t)?;
            written.push(path);
        }
    }
    for f in &outcome.fields {
        let path = match f {
            FieldOutput::Amplitude(name, field) => {
                let p = dir.join(format!("{stem}.{name}.bin"));
                infocap::io::save_amplitude(&p, field)?;
                p
            }
            FieldOutput::Momentum(name, field) => {
                let p = dir.join(format!("{stem}.{name}.bin"));
                infocap::io::save_momentum(&p, field)?;
                p
            }
        };
        written.push(path);
    }
    Ok(written)
}
