use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{resolve_key, ArchitectureConfig, FieldKind};
use crate::error::{Error, Result};
use crate::report::ResourceReport;

use super::{fmt_num, fmt_opt, Evaluation, Field, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MinimizeTotalTime,
    MinimizeQubits,
}

impl Objective {
    pub fn field(self) -> &'static str {
        match self {
            Objective::MinimizeTotalTime => "workload.t_total_s",
            Objective::MinimizeQubits => "system.physical_lattice_qubits",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    /// Report path or config key.
    pub field: String,
    pub op: Op,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRange {
    pub param: String,
    pub min: f64,
    pub max: f64,
    #[serde(default)]
    pub log: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Grid,
    CoordinateDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    pub objective: Objective,
    #[serde(default)]
    pub method: Method,
    /// Maximum number of distinct evaluations.
    pub budget: usize,
    /// Points per line for coordinate descent.
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(rename = "range")]
    pub ranges: Vec<ParamRange>,
    #[serde(rename = "constraint", default)]
    pub constraints: Vec<Constraint>,
}

fn default_steps() -> usize {
    5
}

impl SearchSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub eval: usize,
    pub params: Vec<(String, f64)>,
    pub status: Status,
    pub objective: Option<f64>,
    pub feasible: bool,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Index into `trace` of the best feasible point.
    pub best: Option<usize>,
    pub best_config: Option<ArchitectureConfig>,
    pub best_report: Option<ResourceReport>,
    pub trace: Vec<TraceRow>,
}

impl SearchOutcome {
    pub fn best_row(&self) -> Option<&TraceRow> {
        self.best.map(|i| &self.trace[i])
    }

    /// One line: the best point, or `no feasible point`.
    pub fn summary(&self) -> String {
        match self.best_row() {
            None => format!("no feasible point in {} evaluations", self.trace.len()),
            Some(row) => {
                let params: Vec<String> =
                    row.params.iter().map(|(k, v)| format!("{k}={}", fmt_num(*v))).collect();
                format!(
                    "best {} objective={} after {} evaluations",
                    params.join(" "),
                    fmt_opt(row.objective),
                    self.trace.len()
                )
            }
        }
    }

    pub fn trace_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Spec(e.to_string());
        let mut header = vec!["eval".to_string()];
        if let Some(first) = self.trace.first() {
            header.extend(first.params.iter().map(|(k, _)| k.clone()));
        }
        header.extend(["status", "objective", "feasible"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        for row in &self.trace {
            let mut rec = vec![row.eval.to_string()];
            rec.extend(row.params.iter().map(|(_, v)| fmt_num(*v)));
            rec.push(row.status.to_string());
            rec.push(fmt_opt(row.objective));
            rec.push(row.feasible.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Spec(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

struct Dim {
    key: &'static str,
    kind: FieldKind,
    range: ParamRange,
}

impl Dim {
    fn points(&self, k: usize) -> Vec<f64> {
        let (lo, hi) = (self.range.min, self.range.max);
        let at = |t: f64| {
            let v = if self.range.log {
                (lo.ln() + t * (hi.ln() - lo.ln())).exp()
            } else {
                lo + t * (hi - lo)
            };
            match self.kind {
                FieldKind::Integer => v.round(),
                FieldKind::Float => v,
            }
        };
        if k <= 1 {
            return vec![at(0.5)];
        }
        (0..k)
            .map(|i| match i {
                0 => at(0.0),
                i if i == k - 1 => at(1.0),
                i => at(i as f64 / (k - 1) as f64),
            })
            .collect()
    }
}

struct Searcher<'a> {
    base: &'a ArchitectureConfig,
    dims: Vec<Dim>,
    constraints: Vec<(Field, Op, f64)>,
    objective: Field,
}

struct Scored {
    row: TraceRow,
    eval: Evaluation,
}

impl Searcher<'_> {
    fn evaluate(&self, x: &[f64]) -> Scored {
        let params: Vec<(String, f64)> =
            self.dims.iter().zip(x).map(|(d, v)| (d.key.to_string(), *v)).collect();
        let cfg = params
            .iter()
            .try_fold(self.base.clone(), |cfg, (k, v)| cfg.with_value(k, *v));
        let eval = match cfg {
            Ok(cfg) => Evaluation::run(cfg),
            Err(e) => Evaluation {
                config: self.base.clone(),
                status: Status::Error,
                report: None,
                message: e.to_string(),
                json: None,
            },
        };
        let objective = eval.value(&self.objective);
        let feasible = eval.status == Status::Ok
            && objective.is_some()
            && self.constraints.iter().all(|(f, op, bound)| match (eval.value(f), op) {
                (Some(v), Op::Ge) => v >= *bound,
                (Some(v), Op::Le) => v <= *bound,
                (None, _) => false,
            });
        Scored {
            row: TraceRow {
                eval: 0,
                params,
                status: eval.status,
                objective,
                feasible,
            },
            eval,
        }
    }
}

fn better(a: &TraceRow, b: &TraceRow) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => true,
        (true, true) => a.objective < b.objective,
        _ => false,
    }
}

/// Largest `k` with `k^dims <= budget`.
fn points_per_axis(budget: usize, dims: usize) -> usize {
    let mut k = 1usize;
    while (k + 1).checked_pow(dims as u32).is_some_and(|n| n <= budget) {
        k += 1;
    }
    k
}

/// Deterministic search for the best feasible point within the budget.
pub fn run_search(base: &ArchitectureConfig, spec: &SearchSpec) -> Result<SearchOutcome> {
    if spec.ranges.is_empty() {
        return Err(Error::Spec("search needs at least one range".into()));
    }
    if spec.budget == 0 {
        return Err(Error::Spec("budget must be at least 1".into()));
    }
    let dims = spec
        .ranges
        .iter()
        .map(|r| {
            let (key, kind) = resolve_key(&r.param)?;
            if !(r.min.is_finite() && r.max.is_finite() && r.min <= r.max) {
                return Err(Error::Spec(format!("range for `{}` needs min <= max", r.param)));
            }
            if r.log && r.min <= 0.0 {
                return Err(Error::Spec(format!("log range for `{}` needs min > 0", r.param)));
            }
            Ok(Dim {
                key,
                kind,
                range: r.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let constraints = spec
        .constraints
        .iter()
        .map(|c| Field::resolve(&c.field).map(|f| (f, c.op, c.value)))
        .collect::<Result<Vec<_>>>()?;
    let searcher = Searcher {
        base,
        dims,
        constraints,
        objective: Field::Report(spec.objective.field().to_string()),
    };

    let scored = match spec.method {
        Method::Grid => grid_search(&searcher, spec.budget),
        Method::CoordinateDescent => coordinate_descent(&searcher, spec.budget, spec.steps.max(1)),
    };

    let mut best: Option<usize> = None;
    for (i, s) in scored.iter().enumerate() {
        if s.row.feasible && best.is_none_or(|b| better(&s.row, &scored[b].row)) {
            best = Some(i);
        }
    }
    let (best_config, best_report) = match best {
        Some(i) => (Some(scored[i].eval.config.clone()), scored[i].eval.report.clone()),
        None => (None, None),
    };
    let trace = scored
        .into_iter()
        .enumerate()
        .map(|(i, s)| TraceRow { eval: i, ..s.row })
        .collect();
    Ok(SearchOutcome {
        best,
        best_config,
        best_report,
        trace,
    })
}

fn grid_search(s: &Searcher, budget: usize) -> Vec<Scored> {
    let k = points_per_axis(budget, s.dims.len());
    let axes: Vec<Vec<f64>> = s.dims.iter().map(|d| d.points(k)).collect();
    let total: usize = axes.iter().map(Vec::len).product();
    (0..total)
        .into_par_iter()
        .map(|index| {
            let mut rem = index;
            let mut x = vec![0.0; axes.len()];
            for (slot, values) in x.iter_mut().zip(&axes).rev() {
                *slot = values[rem % values.len()];
                rem /= values.len();
            }
            s.evaluate(&x)
        })
        .collect()
}

fn coordinate_descent(s: &Searcher, budget: usize, steps: usize) -> Vec<Scored> {
    let lines: Vec<Vec<f64>> = s.dims.iter().map(|d| d.points(steps)).collect();
    let mut x: Vec<f64> = s.dims.iter().map(|d| d.points(1)[0]).collect();
    let mut out: Vec<Scored> = Vec::new();
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let key = |x: &[f64]| x.iter().map(|v| v.to_bits()).collect::<Vec<_>>();

    let mut visit = |x: &[f64], out: &mut Vec<Scored>| -> Option<usize> {
        if let Some(&i) = seen.get(&key(x)) {
            return Some(i);
        }
        if out.len() >= budget {
            return None;
        }
        out.push(s.evaluate(x));
        seen.insert(key(x), out.len() - 1);
        Some(out.len() - 1)
    };

    let Some(mut current) = visit(&x, &mut out) else {
        return out;
    };
    loop {
        let mut moved = false;
        for d in 0..x.len() {
            for &v in &lines[d] {
                let mut y = x.clone();
                y[d] = v;
                let Some(i) = visit(&y, &mut out) else {
                    return out;
                };
                if better(&out[i].row, &out[current].row) {
                    current = i;
                    x = y;
                    moved = true;
                }
            }
        }
        if !moved {
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_point() -> ArchitectureConfig {
        ArchitectureConfig::baseline()
            .with_overrides(&["p_lat=4.9e5", "capacity=119836"])
            .unwrap()
    }

    fn range(param: &str, min: f64, max: f64) -> ParamRange {
        ParamRange {
            param: param.into(),
            min,
            max,
            log: false,
        }
    }

    fn spec(ranges: Vec<ParamRange>, budget: usize) -> SearchSpec {
        SearchSpec {
            objective: Objective::MinimizeTotalTime,
            method: Method::Grid,
            budget,
            steps: 5,
            ranges,
            constraints: vec![],
        }
    }

    #[test]
    fn axis_points() {
        assert_eq!(points_per_axis(1, 3), 1);
        assert_eq!(points_per_axis(27, 3), 3);
        assert_eq!(points_per_axis(26, 3), 2);
        assert_eq!(points_per_axis(100, 1), 100);
    }

    #[test]
    fn budget_one_is_midpoint() {
        let out = run_search(&reference_point(), &spec(vec![range("t_pulse", 1e-10, 3e-10), range("toffoli_braid_depth", 12.0, 14.0)], 1)).unwrap();
        assert_eq!(out.trace.len(), 1);
        let p = &out.trace[0].params;
        assert!((p[0].1 - 2e-10).abs() < 1e-24);
        assert_eq!(p[1], ("factory.toffoli_braid_depth".into(), 13.0));
        assert_eq!(out.best, Some(0));
    }

    #[test]
    fn monotone_objective_picks_corner() {
        let mut s = spec(vec![range("t_pulse", 1e-10, 4e-10), range("toffoli_braid_depth", 10.0, 14.0)], 9);
        s.constraints.push(Constraint {
            field: "t_pulse".into(),
            op: Op::Ge,
            value: 1e-10,
        });
        let out = run_search(&reference_point(), &s).unwrap();
        assert_eq!(out.trace.len(), 9);
        let best = out.best_row().unwrap();
        assert_eq!(best.params, vec![("t_pulse".into(), 1e-10), ("factory.toffoli_braid_depth".into(), 10.0)]);
        let rep = out.best_report.as_ref().unwrap();
        assert_eq!(Some(rep.workload.t_total_s), best.objective);
    }

    #[test]
    fn unsatisfiable_reports_no_feasible_point() {
        let mut s = spec(vec![range("t_pulse", 1e-10, 2e-10)], 4);
        s.constraints.push(Constraint {
            field: "workload.t_total_days".into(),
            op: Op::Le,
            value: 1.0,
        });
        let out = run_search(&reference_point(), &s).unwrap();
        assert!(out.best.is_none());
        assert!(out.summary().starts_with("no feasible point"));
        assert_eq!(out.trace.len(), 4);
    }

    #[test]
    fn coordinate_descent_respects_budget_and_finds_corner() {
        let mut s = spec(vec![range("t_pulse", 1e-10, 4e-10), range("toffoli_braid_depth", 10.0, 14.0)], 40);
        s.method = Method::CoordinateDescent;
        let out = run_search(&reference_point(), &s).unwrap();
        assert!(out.trace.len() <= 40);
        let best = out.best_row().unwrap();
        assert_eq!(best.params, vec![("t_pulse".into(), 1e-10), ("factory.toffoli_braid_depth".into(), 10.0)]);
        s.budget = 3;
        assert_eq!(run_search(&reference_point(), &s).unwrap().trace.len(), 3);
    }

    #[test]
    fn deterministic_trace() {
        let s = spec(vec![range("y_p", 0.4, 1.0), range("loss_W_dB", 0.05, 0.2)], 9);
        let a = run_search(&ArchitectureConfig::baseline(), &s).unwrap();
        let b = run_search(&ArchitectureConfig::baseline(), &s).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.trace_csv().unwrap(), b.trace_csv().unwrap());
    }

    #[test]
    fn bad_specs() {
        assert!(run_search(&reference_point(), &spec(vec![], 3)).is_err());
        assert!(run_search(&reference_point(), &spec(vec![range("nope", 0.0, 1.0)], 3)).is_err());
        assert!(run_search(&reference_point(), &spec(vec![range("d", 14.0, 10.0)], 3)).is_err());
        assert!(run_search(&reference_point(), &spec(vec![range("d", 10.0, 14.0)], 0)).is_err());
    }
}
