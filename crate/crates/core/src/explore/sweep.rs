use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{resolve_key, ArchitectureConfig};
use crate::error::{Error, Result};

use super::{fmt_num, fmt_opt, Evaluation, Field, Status};

/// Explicit values, or `"start:stop:steps"` with an optional `:log` suffix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueSpec {
    List(Vec<f64>),
    Range(String),
}

impl ValueSpec {
    pub fn expand(&self) -> Result<Vec<f64>> {
        let values = match self {
            ValueSpec::List(v) => v.clone(),
            ValueSpec::Range(text) => parse_range(text)?,
        };
        if values.is_empty() {
            return Err(Error::Spec("empty value list".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Spec("sweep values must be finite".into()));
        }
        Ok(values)
    }
}

fn parse_range(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Spec(format!("range `{text}` is not start:stop:steps[:log]"));
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let log = match parts.len() {
        3 => false,
        4 if parts[3] == "log" => true,
        _ => return Err(bad()),
    };
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].parse().map_err(|_| bad())?;
    let steps: usize = parts[2].parse().map_err(|_| bad())?;
    if steps == 0 {
        return Err(Error::Spec("empty value list".into()));
    }
    if log && !(start > 0.0 && stop > 0.0) {
        return Err(Error::Spec(format!("log range `{text}` needs positive bounds")));
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    Ok((0..steps)
        .map(|i| {
            let t = i as f64 / (steps - 1) as f64;
            if i == steps - 1 {
                stop
            } else if log {
                (start.ln() + t * (stop.ln() - start.ln())).exp()
            } else {
                start + t * (stop - start)
            }
        })
        .collect())
}

/// A parameter that moves in lockstep with its axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Linked {
    pub param: String,
    pub values: ValueSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: String,
    pub values: ValueSpec,
    #[serde(default)]
    pub linked: Vec<Linked>,
}

/// One- or two-axis sweep. The first axis varies slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(rename = "axis")]
    pub axes: Vec<Axis>,
    pub record: Vec<String>,
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub index: usize,
    /// `(config key, value)` for every axis and linked parameter.
    pub params: Vec<(String, f64)>,
    pub status: Status,
    pub message: String,
    pub values: Vec<Option<f64>>,
}

struct Column {
    key: &'static str,
    values: Vec<f64>,
}

struct Plan {
    /// Per axis, the columns that move together.
    axes: Vec<Vec<Column>>,
    record: Vec<(String, Field)>,
}

fn plan(spec: &SweepSpec) -> Result<Plan> {
    if spec.axes.is_empty() || spec.axes.len() > 2 {
        return Err(Error::Spec("a sweep takes one or two axes".into()));
    }
    let mut axes = Vec::new();
    for axis in &spec.axes {
        let values = axis.values.expand()?;
        let mut cols = vec![Column {
            key: resolve_key(&axis.param)?.0,
            values,
        }];
        for link in &axis.linked {
            let values = link.values.expand()?;
            if values.len() != cols[0].values.len() {
                return Err(Error::Spec(format!(
                    "linked `{}` has {} values, axis `{}` has {}",
                    link.param,
                    values.len(),
                    axis.param,
                    cols[0].values.len()
                )));
            }
            cols.push(Column {
                key: resolve_key(&link.param)?.0,
                values,
            });
        }
        axes.push(cols);
    }
    let record = spec
        .record
        .iter()
        .map(|name| Field::resolve(name).map(|f| (name.clone(), f)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Plan { axes, record })
}

/// Evaluate every grid point. Rows come back in grid order, one per point.
pub fn run_sweep(base: &ArchitectureConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let plan = plan(spec)?;
    let sizes: Vec<usize> = plan.axes.iter().map(|a| a[0].values.len()).collect();
    let total: usize = sizes.iter().product();

    let rows = (0..total)
        .into_par_iter()
        .map(|index| {
            let mut rem = index;
            let mut picks = vec![0; sizes.len()];
            for (slot, &n) in picks.iter_mut().zip(&sizes).rev() {
                *slot = rem % n;
                rem /= n;
            }
            let params: Vec<(String, f64)> = plan
                .axes
                .iter()
                .zip(&picks)
                .flat_map(|(cols, &i)| cols.iter().map(move |c| (c.key.to_string(), c.values[i])))
                .collect();
            let cfg = params
                .iter()
                .try_fold(base.clone(), |cfg, (k, v)| cfg.with_value(k, *v));
            match cfg {
                Ok(cfg) => {
                    let eval = Evaluation::run(cfg);
                    SweepRow {
                        index,
                        params,
                        status: eval.status,
                        message: eval.message.clone(),
                        values: plan.record.iter().map(|(_, f)| eval.value(f)).collect(),
                    }
                }
                Err(e) => SweepRow {
                    index,
                    params,
                    status: Status::Error,
                    message: e.to_string(),
                    values: vec![None; plan.record.len()],
                },
            }
        })
        .collect();
    Ok(rows)
}

/// CSV with columns `index, <params>, status, <record>, message`.
pub fn sweep_to_csv(spec: &SweepSpec, rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Spec(e.to_string());
    let mut header = vec!["index".to_string()];
    if let Some(first) = rows.first() {
        header.extend(first.params.iter().map(|(k, _)| k.clone()));
    } else {
        for axis in &spec.axes {
            header.push(axis.param.clone());
            header.extend(axis.linked.iter().map(|l| l.param.clone()));
        }
    }
    header.push("status".into());
    header.extend(spec.record.iter().cloned());
    header.push("message".into());
    w.write_record(&header).map_err(csv_err)?;
    for row in rows {
        let mut rec = vec![row.index.to_string()];
        rec.extend(row.params.iter().map(|(_, v)| fmt_num(*v)));
        rec.push(row.status.to_string());
        rec.extend(row.values.iter().map(|v| fmt_opt(*v)));
        rec.push(row.message.clone());
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Spec(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_point() -> ArchitectureConfig {
        ArchitectureConfig::baseline()
            .with_overrides(&["p_lat=4.9e5", "capacity=119836"])
            .unwrap()
    }

    fn spec(axes: Vec<Axis>, record: &[&str]) -> SweepSpec {
        SweepSpec {
            axes,
            record: record.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn axis(param: &str, values: ValueSpec) -> Axis {
        Axis {
            param: param.into(),
            values,
            linked: vec![],
        }
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_range("2:2:1").unwrap(), vec![2.0]);
        let v = parse_range("1:100:3:log").unwrap();
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert_eq!(v[2], 100.0);
        assert!(parse_range("0:1:0").is_err());
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("0:1:3:log").is_err());
        assert!(ValueSpec::List(vec![]).expand().is_err());
    }

    #[test]
    fn grid_order_and_size() {
        let s = spec(
            vec![
                axis("t_pulse", ValueSpec::List(vec![1e-10, 2e-10])),
                axis("d", ValueSpec::List(vec![13.0, 14.0, 15.0])),
            ],
            &["timing.t_lat_s"],
        );
        let rows = run_sweep(&reference_point(), &s).unwrap();
        assert_eq!(rows.len(), 6);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.index, i);
        }
        assert_eq!(rows[1].params, vec![("t_pulse".into(), 1e-10), ("d".into(), 14.0)]);
        assert_eq!(rows[3].params[0].1, 2e-10);
        // d = 15 breaks the lattice-height rule but still reports.
        assert_eq!(rows[2].status, Status::Infeasible);
        assert!(rows[2].values[0].is_some());
    }

    #[test]
    fn failures_keep_their_row() {
        let s = spec(
            vec![axis("loss_local_roundtrip", ValueSpec::List(vec![0.0002, 0.002]))],
            &["workload.t_total_days"],
        );
        let rows = run_sweep(&ArchitectureConfig::baseline(), &s).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].status, Status::Ok);
        assert_eq!(rows[1].status, Status::Saturated);
        assert_eq!(rows[1].values, vec![None]);
    }

    #[test]
    fn unknown_paths_rejected_up_front() {
        let s = spec(vec![axis("nope", ValueSpec::List(vec![1.0]))], &[]);
        assert!(matches!(run_sweep(&reference_point(), &s), Err(Error::Spec(_))));
        let s = spec(vec![axis("d", ValueSpec::List(vec![14.0]))], &["workload.nope"]);
        assert!(matches!(run_sweep(&reference_point(), &s), Err(Error::Spec(_))));
        let s = spec(vec![axis("d", ValueSpec::List(vec![]))], &[]);
        assert!(matches!(run_sweep(&reference_point(), &s), Err(Error::Spec(_))));
    }

    #[test]
    fn linked_lengths_must_match() {
        let mut a = axis("H", ValueSpec::List(vec![1.0, 2.0]));
        a.linked.push(Linked {
            param: "parallel_adders".into(),
            values: ValueSpec::List(vec![1.0]),
        });
        assert!(run_sweep(&reference_point(), &spec(vec![a], &[])).is_err());
    }

    #[test]
    fn csv_layout() {
        let s = SweepSpec::from_toml_str(
            r#"
            record = ["workload.t_total_days", "d"]
            [[axis]]
            param = "capacity"
            values = [119836, 1198360]
            linked = [{ param = "parallel_adders", values = [1, 100] }]
            "#,
        )
        .unwrap();
        let rows = run_sweep(&reference_point(), &s).unwrap();
        let text = sweep_to_csv(&s, &rows).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "index,costs.capacity,workload.parallel_adders,status,workload.t_total_days,d,message"
        );
        assert!(lines.next().unwrap().starts_with("0,119836,1,ok,"));
        assert_eq!(text.lines().count(), 3);
        assert!(!text.contains('\r'));
    }
}
