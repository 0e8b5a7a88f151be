//! Parameter sweeps and constrained search over architecture configs.

mod search;
mod sweep;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use serde::Serialize;

use crate::config::{resolve_key, ArchitectureConfig};
use crate::error::{Error, Result};
use crate::report::{full_report, lookup, ResourceReport};

pub use search::{
    run_search, Constraint, Method, Objective, Op, ParamRange, SearchOutcome, SearchSpec, TraceRow,
};
pub use sweep::{run_sweep, sweep_to_csv, Axis, Linked, SweepRow, SweepSpec, ValueSpec};

/// Outcome class of one evaluated point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// Report produced, but with a feasibility violation.
    Infeasible,
    /// A purification target could not be reached.
    Saturated,
    Error,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Ok => "ok",
            Status::Infeasible => "infeasible",
            Status::Saturated => "saturated",
            Status::Error => "error",
        })
    }
}

/// A config evaluated through the full pipeline.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub config: ArchitectureConfig,
    pub status: Status,
    pub report: Option<ResourceReport>,
    pub message: String,
    json: Option<serde_json::Value>,
}

impl Evaluation {
    pub fn run(config: ArchitectureConfig) -> Self {
        match full_report(&config) {
            Ok(report) => {
                let status = if report.has_violation() {
                    Status::Infeasible
                } else {
                    Status::Ok
                };
                let message = report
                    .diagnostics
                    .iter()
                    .map(|d| d.code)
                    .collect::<Vec<_>>()
                    .join(";");
                let json = Some(report.to_json_value());
                Self {
                    config,
                    status,
                    report: Some(report),
                    message,
                    json,
                }
            }
            Err(e) => Self {
                config,
                status: match e.root() {
                    Error::Saturation { .. } => Status::Saturated,
                    _ => Status::Error,
                },
                report: None,
                message: e.to_string(),
                json: None,
            },
        }
    }

    /// Value of a resolved field, if the report has it.
    pub fn value(&self, field: &Field) -> Option<f64> {
        match field {
            Field::Report(path) => self.json.as_ref().and_then(|j| lookup(j, path)),
            Field::Config(key) => self.config.get(key).ok().flatten(),
        }
    }
}

/// A report field or a config key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Field {
    Report(String),
    Config(&'static str),
}

impl Field {
    /// Resolve a dotted report path, falling back to a config key.
    pub fn resolve(name: &str) -> Result<Self> {
        if report_field_paths().contains(name) {
            return Ok(Field::Report(name.to_string()));
        }
        resolve_key(name)
            .map(|(path, _)| Field::Config(path))
            .map_err(|_| Error::Spec(format!("unknown report field or config key `{name}`")))
    }
}

/// Every numeric or boolean leaf path of a report.
pub fn report_field_paths() -> &'static BTreeSet<String> {
    static PATHS: OnceLock<BTreeSet<String>> = OnceLock::new();
    PATHS.get_or_init(|| {
        let cfg = ArchitectureConfig::baseline()
            .with_overrides(&["p_W=1", "p_X=1", "p_X1=1", "p_lat=1", "capacity=100000"])
            .expect("baseline overrides are valid");
        let report = full_report(&cfg).expect("baseline evaluates");
        let mut out = BTreeSet::new();
        collect_paths(&report.to_json_value(), String::new(), &mut out);
        out
    })
}

fn collect_paths(value: &serde_json::Value, prefix: String, out: &mut BTreeSet<String>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                collect_paths(v, path, out);
            }
        }
        serde_json::Value::Number(_) | serde_json::Value::Bool(_) | serde_json::Value::Null
            if !prefix.is_empty() =>
        {
            out.insert(prefix);
        }
        _ => {}
    }
}

/// Plain decimal form used in every CSV cell.
/// Shortest round-trip form, in exponent notation for very small or large magnitudes.
pub(crate) fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}
