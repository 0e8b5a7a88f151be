//! End-to-end resource derivation: yields, connection counts, purification
//! costs, lattice timing, capacity split, factory and workload times.

use std::fmt::Write as _;

use serde::Serialize;

use crate::arch::{
    connection_counts, loss_budget, validate_config, ConnectionClass, ConnectionCounts,
    Diagnostic, Severity,
};
use crate::config::ArchitectureConfig;
use crate::error::Result;
use crate::lattice::{kq_check, logical_capacity, logical_error_per_gate, pulses_per_cycle, CapacityReport, LatticeTiming};
use crate::magic::{distill_error, factory_time, levels_required, toffoli_time, DistillationCode, FactoryModel};
use crate::purification::{absorption_stats, build_markov_chain, BasePairModel, ModelParams, PurificationPolicy};
use crate::shor::{adder_time, algorithm_time, shor_counts, total_time};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Where a pulse cost came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Computed,
    Override,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PurificationBlock {
    /// Loss seen by purified waveguide connections, including cavity terms.
    #[serde(rename = "loss_W_dB")]
    pub loss_w_db: f64,
    #[serde(rename = "loss_X_dB")]
    pub loss_x_db: f64,
    #[serde(rename = "p_W_pulses")]
    pub p_w: Option<f64>,
    #[serde(rename = "p_X_pulses")]
    pub p_x: Option<f64>,
    #[serde(rename = "p_X1_pulses")]
    pub p_x1: Option<f64>,
    #[serde(rename = "p_W_source")]
    pub p_w_source: Source,
    #[serde(rename = "p_X_source")]
    pub p_x_source: Source,
    pub eps_local: f64,
    pub f_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingBlock {
    pub p_lat_pulses: f64,
    pub p_lat_source: Source,
    pub t_lat_s: f64,
    pub t_move_s: f64,
    pub t_braid_s: f64,
    pub cycles_per_move: u64,
    pub t_mem_required_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactoryBlock {
    pub s_states_per_toffoli: f64,
    pub braidings_per_toffoli: f64,
    pub s_states_total: f64,
    pub toffoli_braid_depth: u64,
    pub t_tof_s: f64,
    pub t_factory_s: f64,
    pub t_factory_days: f64,
    pub code: &'static str,
    pub injection_error: f64,
    /// Per-S-state error budget used to size the cascade.
    pub s_state_error_budget: f64,
    pub distillation_levels: Option<u32>,
    pub distilled_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkloadBlock {
    pub n_bits: u64,
    pub n_add: u64,
    pub n_tof: u64,
    pub app_qubits: u64,
    pub parallel_adders: u64,
    pub t_add_s: f64,
    pub t_algorithm_s: f64,
    pub t_algorithm_days: f64,
    pub t_total_s: f64,
    pub t_total_days: f64,
    pub sequential_total: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBlock {
    pub p_err: f64,
    pub p_th: f64,
    pub p_logical_per_gate: f64,
    /// Application depth in Toffoli gates times logical qubits.
    pub kq: f64,
    pub kq_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemBlock {
    pub physical_lattice_qubits: u64,
    pub pulse_rate_hz: f64,
}

/// The full derivation chain with every intermediate value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResourceReport {
    pub config: ArchitectureConfig,
    pub system: SystemBlock,
    pub connections: ConnectionCounts,
    pub purification: PurificationBlock,
    pub timing: TimingBlock,
    pub capacity: CapacityReport,
    pub factory: FactoryBlock,
    pub workload: WorkloadBlock,
    pub error: ErrorBlock,
    pub diagnostics: Vec<Diagnostic>,
}

fn mean_pulses(
    policy: &PurificationPolicy,
    model: &BasePairModel,
    loss_db: f64,
    f_target: f64,
) -> Result<f64> {
    let policy = PurificationPolicy {
        pulse_cap: 0,
        ..*policy
    };
    let chain = build_markov_chain(&policy, model, loss_db, f_target)?;
    Ok(absorption_stats(&chain)?.mean)
}

/// Policy described by the `[purification]` table.
pub fn policy_from_config(cfg: &ArchitectureConfig) -> PurificationPolicy {
    let p = &cfg.purification;
    PurificationPolicy {
        max_level: p.max_level,
        buffer: p.buffer,
        salvage: false,
        p_gate: p.p_gate,
        pulses_per_round: p.pulses_per_round,
        pulse_cap: p.pulse_cap,
    }
}

/// Base-pair model described by the config.
pub fn model_from_config(cfg: &ArchitectureConfig) -> Result<BasePairModel> {
    let p = &cfg.purification;
    BasePairModel::new(
        ModelParams {
            kappa: p.kappa,
            gamma: p.gamma,
            p_e: p.p_e,
        },
        cfg.loss_local_roundtrip,
    )
}

fn pulse_cost(
    override_value: Option<f64>,
    needed: bool,
    compute: impl FnOnce() -> Result<f64>,
    name: &str,
    diagnostics: &mut Vec<Diagnostic>,
) -> Result<(Option<f64>, Source)> {
    if let Some(v) = override_value {
        return Ok((Some(v), Source::Override));
    }
    match compute() {
        Ok(v) => Ok((Some(v), Source::Computed)),
        Err(e) if !needed => {
            diagnostics.push(Diagnostic {
                severity: Severity::Warning,
                code: "pulse-cost-unavailable",
                message: format!("{name}: {e}"),
            });
            Ok((None, Source::Computed))
        }
        Err(e) => Err(e),
    }
}

/// Run the whole pipeline on `cfg`, honouring its `[costs]` overrides.
pub fn full_report(cfg: &ArchitectureConfig) -> Result<ResourceReport> {
    cfg.check_invariants().map_err(|e| e.in_stage("config"))?;
    let mut diagnostics = validate_config(cfg);

    let counts = connection_counts(cfg).map_err(|e| e.in_stage("connections"))?;

    // Purification costs.
    let loss_w = loss_budget(ConnectionClass::PurifiedWaveguide, cfg)
        .map_err(|e| e.in_stage("loss budget"))?;
    let loss_x = loss_budget(ConnectionClass::PurifiedSwitched, cfg)
        .map_err(|e| e.in_stage("loss budget"))?;
    let policy = policy_from_config(cfg);
    let model = model_from_config(cfg).map_err(|e| e.in_stage("purification"))?;
    let needed = cfg.costs.p_lat.is_none();
    let (p_w, p_w_source) = pulse_cost(
        cfg.costs.p_w,
        needed && counts.n_w > 0,
        || mean_pulses(&policy, &model, loss_w, cfg.f_target),
        "p_W",
        &mut diagnostics,
    )
    .map_err(|e| e.in_stage("purification (W)"))?;
    let (p_x, p_x_source) = pulse_cost(
        cfg.costs.p_x,
        needed && (counts.n_x2 > 0 || counts.n_x1 > 0),
        || mean_pulses(&policy, &model, loss_x, cfg.f_target),
        "p_X",
        &mut diagnostics,
    )
    .map_err(|e| e.in_stage("purification (X)"))?;
    let p_x1 = cfg.costs.p_x1.or(p_x);

    // Lattice timing.
    let (p_lat, p_lat_source) = match cfg.costs.p_lat {
        Some(v) => (v, Source::Override),
        None => (
            pulses_per_cycle(
                &counts,
                p_w.unwrap_or(0.0),
                p_x.unwrap_or(0.0),
                p_x1.unwrap_or(0.0),
            ),
            Source::Computed,
        ),
    };
    let timing = LatticeTiming::new(p_lat, cfg.t_pulse, cfg.hole_side);

    // Capacity.
    let work = shor_counts(cfg.workload.n);
    let lattice_w = cfg.chips_per_row * cfg.columns_per_chip * cfg.sublattice;
    let lattice_h = cfg.chip_rows * counts.r_f / cfg.sublattice;
    let capacity = logical_capacity(
        lattice_w,
        lattice_h,
        cfg.hole_side,
        cfg.packing,
        cfg.costs.capacity,
        work.app_qubits,
    )
    .map_err(|e| e.in_stage("capacity"))?;

    // Error model.
    let p_logical = logical_error_per_gate(cfg.p_err, cfg.p_th, cfg.alpha, cfg.hole_side)
        .map_err(|e| e.in_stage("error model"))?;
    let kq = work.n_tof as f64 * work.app_qubits as f64;
    let kq_ok = kq_check(p_logical, kq);
    if !kq_ok {
        diagnostics.push(Diagnostic {
            severity: Severity::Violation,
            code: "kq-budget",
            message: format!("logical error {p_logical:.3e} is not well below 1/KQ = {:.3e}", 1.0 / kq),
        });
    }

    // Factory.
    let fs = &cfg.factory;
    let t_tof = toffoli_time(timing.t_braid_s, fs.toffoli_braid_depth);
    let fm = FactoryModel {
        s_states_per_toffoli: fs.s_states_per_toffoli,
        braidings_per_toffoli: fs.braidings_per_toffoli,
        factory_qubits: capacity.factory_qubits,
        t_braid_s: timing.t_braid_s,
    };
    let t_factory = factory_time(work.n_tof as f64, &fm).map_err(|e| e.in_stage("factory"))?;
    let code = DistillationCode::from(fs.code);
    let s_budget = 1.0 / (crate::lattice::KQ_MARGIN * kq * fs.s_states_per_toffoli);
    let (levels, distilled) = match levels_required(fs.injection_error, s_budget, code) {
        Ok(l) => {
            let out = (0..l).fold(fs.injection_error, |p, _| distill_error(p, code));
            (Some(l), Some(out))
        }
        Err(e) => {
            diagnostics.push(Diagnostic {
                severity: Severity::Warning,
                code: "distillation-diverges",
                message: e.to_string(),
            });
            (None, None)
        }
    };

    // Workload.
    let t_add = adder_time(cfg.workload.n, t_tof);
    let t_algorithm = algorithm_time(work.n_add, t_add, cfg.workload.parallel_adders);
    let t_total = if cfg.workload.sequential_total {
        t_algorithm + t_factory
    } else {
        total_time(t_algorithm, t_factory)
    };

    Ok(ResourceReport {
        config: cfg.clone(),
        system: SystemBlock {
            physical_lattice_qubits: cfg.chips_per_row
                * cfg.chip_rows
                * cfg.columns_per_chip
                * cfg.rows_per_column,
            pulse_rate_hz: 1.0 / cfg.t_pulse,
        },
        connections: counts,
        purification: PurificationBlock {
            loss_w_db: loss_w,
            loss_x_db: loss_x,
            p_w,
            p_x,
            p_x1,
            p_w_source,
            p_x_source,
            eps_local: cfg.loss_local_roundtrip,
            f_target: cfg.f_target,
        },
        timing: TimingBlock {
            p_lat_pulses: p_lat,
            p_lat_source,
            t_lat_s: timing.t_lat_s,
            t_move_s: timing.t_move_s,
            t_braid_s: timing.t_braid_s,
            cycles_per_move: timing.cycles_per_move,
            t_mem_required_s: timing.t_mem_required_s,
        },
        capacity,
        factory: FactoryBlock {
            s_states_per_toffoli: fs.s_states_per_toffoli,
            braidings_per_toffoli: fs.braidings_per_toffoli,
            s_states_total: fs.s_states_per_toffoli * work.n_tof as f64,
            toffoli_braid_depth: fs.toffoli_braid_depth,
            t_tof_s: t_tof,
            t_factory_s: t_factory,
            t_factory_days: t_factory / SECONDS_PER_DAY,
            code: code.label(),
            injection_error: fs.injection_error,
            s_state_error_budget: s_budget,
            distillation_levels: levels,
            distilled_error: distilled,
        },
        workload: WorkloadBlock {
            n_bits: cfg.workload.n,
            n_add: work.n_add,
            n_tof: work.n_tof,
            app_qubits: work.app_qubits,
            parallel_adders: cfg.workload.parallel_adders,
            t_add_s: t_add,
            t_algorithm_s: t_algorithm,
            t_algorithm_days: t_algorithm / SECONDS_PER_DAY,
            t_total_s: t_total,
            t_total_days: t_total / SECONDS_PER_DAY,
            sequential_total: cfg.workload.sequential_total,
        },
        error: ErrorBlock {
            p_err: cfg.p_err,
            p_th: cfg.p_th,
            p_logical_per_gate: p_logical,
            kq,
            kq_ok,
        },
        diagnostics,
    })
}

/// JSON paths of every time-valued field.
pub const TIME_FIELDS: &[&str] = &[
    "timing.t_lat_s",
    "timing.t_move_s",
    "timing.t_braid_s",
    "timing.t_mem_required_s",
    "factory.t_tof_s",
    "factory.t_factory_s",
    "factory.t_factory_days",
    "workload.t_add_s",
    "workload.t_algorithm_s",
    "workload.t_algorithm_days",
    "workload.t_total_s",
    "workload.t_total_days",
];

impl ResourceReport {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Numeric field at a dotted path such as `workload.t_total_days`.
    pub fn field(&self, path: &str) -> Option<f64> {
        lookup(&self.to_json_value(), path)
    }

    pub fn has_violation(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.severity == Severity::Violation)
    }

    /// Aligned text table following the usual summary row order.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut rows: Vec<(String, String)> = Vec::new();
        let section = |rows: &mut Vec<(String, String)>, name: &str| {
            rows.push((String::new(), String::new()));
            rows.push((format!("[{name}]"), String::new()));
        };
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.1}"));
        let row = |rows: &mut Vec<(String, String)>, k: &str, v: String| rows.push((k.to_string(), v));

        section(&mut rows, "System hardware");
        row(&mut rows, "Chip lattice, C x R", format!("{} x {}", c.columns_per_chip, c.rows_per_column));
        row(&mut rows, "Multicomputer setup, H x V", format!("{} x {}", c.chips_per_row, c.chip_rows));
        row(&mut rows, "Physical lattice size (qubits)", format!("{:.3e}", self.system.physical_lattice_qubits as f64));
        row(&mut rows, "Laser ports", c.laser_ports.to_string());
        row(&mut rows, "Measurement devices", c.measurement_devices.to_string());
        row(&mut rows, "Pulse rate", format!("{:.3} GHz", self.system.pulse_rate_hz / 1e9));
        row(&mut rows, "Physical yield y_p", format!("{:.1}%", c.y_p * 100.0));
        row(&mut rows, "Effective yield y_e", format!("{:.1}%", self.connections.y_e * 100.0));
        row(&mut rows, "Functional column height R_f", self.connections.r_f.to_string());
        row(&mut rows, "Local optical loss", format!("{}%", c.loss_local_roundtrip * 100.0));
        row(&mut rows, "Adjusted gate error p_err", format!("{}%", c.p_err * 100.0));
        row(&mut rows, "Required memory time 1000 t_lat", format!("{:.3} ms", self.timing.t_mem_required_s * 1e3));

        section(&mut rows, "Communication costs");
        let p = &self.purification;
        row(&mut rows, "W, P_W connection", format!("{:.3} dB, p_W = {} pulses", p.loss_w_db, opt(p.p_w)));
        row(&mut rows, "X, P_X connection", format!("{:.3} dB, p_X = {} pulses", p.loss_x_db, opt(p.p_x)));
        row(
            &mut rows,
            "Connections n_C / n_W / n_X1 / n_X2",
            format!("{} / {} / {} / {}", self.connections.n_c, self.connections.n_w, self.connections.n_x1, self.connections.n_x2),
        );

        section(&mut rows, "Lattice operations");
        row(&mut rows, "Sub-lattice factor s", c.sublattice.to_string());
        row(&mut rows, "Logical lattice", format!("{} x {}", self.capacity.logical_lattice_w, self.capacity.logical_lattice_h));
        row(&mut rows, "Pulses per lattice cycle p_lat", format!("{:.4e}", self.timing.p_lat_pulses));
        row(&mut rows, "Lattice cycle time t_lat", format!("{:.3} us", self.timing.t_lat_s * 1e6));

        section(&mut rows, "Logical qubit operations");
        row(&mut rows, "Hole separation constant d", c.hole_side.to_string());
        row(&mut rows, "Area per qubit (loose)", self.capacity.area_per_qubit_loose.to_string());
        row(&mut rows, "Area per qubit (tight)", self.capacity.area_per_qubit_tight.to_string());
        row(&mut rows, "Hole movement time t_move", format!("{:.3} ms", self.timing.t_move_s * 1e3));
        row(&mut rows, "Hole braiding time t_braid", format!("{:.3} ms", self.timing.t_braid_s * 1e3));
        row(&mut rows, "S states per Toffoli (avg.)", self.factory.s_states_per_toffoli.to_string());
        row(&mut rows, "S-state braidings per Toffoli", self.factory.braidings_per_toffoli.to_string());
        row(&mut rows, "Toffoli gate time t_tof", format!("{:.3} ms", self.factory.t_tof_s * 1e3));

        section(&mut rows, "Application operations");
        row(&mut rows, "Maximum capacity (logical qubits)", self.capacity.capacity.to_string());
        row(&mut rows, "Application logical qubits", self.capacity.app_qubits.to_string());
        row(&mut rows, "S factory space", self.capacity.factory_qubits.to_string());
        row(&mut rows, "Wiring space (25%)", self.capacity.wiring.to_string());

        section(&mut rows, "Shor");
        let w = &self.workload;
        row(&mut rows, "Length of number n", w.n_bits.to_string());
        row(&mut rows, "Adder time t_add", format!("{:.4} s", w.t_add_s));
        row(&mut rows, "Adder calls n_add", format!("{:.4e}", w.n_add as f64));
        row(&mut rows, "Adders executed in parallel", w.parallel_adders.to_string());
        row(&mut rows, "Toffoli gates n_tof", format!("{:.4e}", w.n_tof as f64));
        row(&mut rows, "Algorithm time", format!("{:.4e} s ({:.1} days)", w.t_algorithm_s, w.t_algorithm_days));
        row(&mut rows, "S-state creation time", format!("{:.4e} s ({:.1} days)", self.factory.t_factory_s, self.factory.t_factory_days));
        row(&mut rows, "Final execution time", format!("{:.4e} s ({:.1} days)", w.t_total_s, w.t_total_days));

        section(&mut rows, "Error budget");
        row(&mut rows, "Logical error per gate", format!("{:.3e}", self.error.p_logical_per_gate));
        row(&mut rows, "KQ", format!("{:.3e}", self.error.kq));
        row(&mut rows, "p_L << 1/KQ", if self.error.kq_ok { "yes" } else { "no" }.to_string());
        row(
            &mut rows,
            "Distillation levels",
            self.factory.distillation_levels.map_or("n/a".into(), |l| l.to_string()),
        );

        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows.iter().skip(1) {
            if v.is_empty() {
                let _ = writeln!(out, "{k}");
            } else {
                let _ = writeln!(out, "{k:<width$}  {v}");
            }
        }
        out.push_str("\n[Diagnostics]\n");
        if self.diagnostics.is_empty() {
            out.push_str("none\n");
        }
        for d in &self.diagnostics {
            let sev = match d.severity {
                Severity::Warning => "warning",
                Severity::Violation => "violation",
            };
            let _ = writeln!(out, "{sev}: {} ({})", d.message, d.code);
        }
        out
    }
}

pub(crate) fn lookup(value: &serde_json::Value, path: &str) -> Option<f64> {
    let mut cur = value;
    for seg in path.split('.') {
        cur = cur.get(seg)?;
    }
    match cur {
        serde_json::Value::Number(n) => n.as_f64(),
        serde_json::Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
        _ => None,
    }
}
