//! Architecture configuration and its TOML representation.
//!
//! Top-level keys use the conventional symbols of the architecture
//! (`H`, `V`, `C`, `R`, `s`, `d`, `y_p`, ...). Auxiliary inputs live in the
//! `[purification]`, `[factory]`, `[workload]` and `[costs]` tables.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice packing density used when capacity is derived from the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Packing {
    /// 14d x 9d cells per logical qubit.
    #[default]
    Loose,
    /// 10d x 5d cells per logical qubit.
    Tight,
}

/// Physical and layout parameters of the multicomputer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureConfig {
    /// Chips per multicomputer row.
    #[serde(rename = "H")]
    pub chips_per_row: u64,
    /// Rows of chips.
    #[serde(rename = "V")]
    pub chip_rows: u64,
    /// Columns of lattice qubits per chip.
    #[serde(rename = "C")]
    pub columns_per_chip: u64,
    /// Lattice qubits per column.
    #[serde(rename = "R")]
    pub rows_per_column: u64,
    /// Sub-lattice factor.
    #[serde(rename = "s")]
    pub sublattice: u64,
    /// Hole side length in lattice cells.
    #[serde(rename = "d")]
    pub hole_side: u64,
    /// Physical qubit yield, 0..=1.
    pub y_p: f64,
    /// Seconds per entangling/purification pulse slot.
    pub t_pulse: f64,
    /// Qubit-to-qubit loss of W connections, dB.
    #[serde(rename = "loss_W_dB")]
    pub loss_w_db: f64,
    /// Loss of X connections through switches, dB.
    #[serde(rename = "loss_X_dB")]
    pub loss_x_db: f64,
    /// Fractional round-trip loss in the racetrack waveguides.
    pub loss_local_roundtrip: f64,
    /// Cavity cooperativity. Absent means an ideal cavity (no interface loss).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cooperativity: Option<f64>,
    /// Surface-code threshold error rate.
    pub p_th: f64,
    /// Error-suppression exponent coefficient.
    pub alpha: f64,
    /// Adjusted physical gate error rate fed to the logical error model.
    pub p_err: f64,
    /// Laser input ports (reported only).
    pub laser_ports: u64,
    /// Measurement devices (reported only).
    pub measurement_devices: u64,
    /// Purification target fidelity.
    #[serde(rename = "F_target")]
    pub f_target: f64,
    #[serde(default)]
    pub packing: Packing,
    #[serde(default)]
    pub purification: PurificationSettings,
    #[serde(default)]
    pub factory: FactorySettings,
    #[serde(default)]
    pub workload: WorkloadSettings,
    #[serde(default)]
    pub costs: CostOverrides,
}

/// Base-pair model constants and purification policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PurificationSettings {
    /// Fidelity-decay constant of the base-pair model.
    pub kappa: f64,
    /// Shape exponent applied to the absorbed fraction (1 = plain exponential).
    pub gamma: f64,
    /// Herald success probability per generation pulse.
    pub p_e: f64,
    pub max_level: usize,
    pub buffer: usize,
    pub p_gate: f64,
    pub pulses_per_round: usize,
    /// Horizon for completion-time distributions, pulses.
    pub pulse_cap: usize,
}

impl Default for PurificationSettings {
    fn default() -> Self {
        let model = crate::purification::ModelParams::default();
        let policy = crate::purification::PurificationPolicy::default();
        Self {
            kappa: model.kappa,
            gamma: model.gamma,
            p_e: model.p_e,
            max_level: policy.max_level,
            buffer: policy.buffer,
            p_gate: policy.p_gate,
            pulses_per_round: policy.pulses_per_round,
            pulse_cap: policy.pulse_cap,
        }
    }
}

/// Distillation code selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CodeName {
    Steane7,
    #[default]
    ReedMuller15,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactorySettings {
    pub s_states_per_toffoli: f64,
    pub braidings_per_toffoli: f64,
    /// Sequential braids per Toffoli gate.
    pub toffoli_braid_depth: u64,
    /// Error of injected S states entering the distillation cascade.
    pub injection_error: f64,
    pub code: CodeName,
}

impl Default for FactorySettings {
    fn default() -> Self {
        Self {
            s_states_per_toffoli: 11.5,
            braidings_per_toffoli: 1795.0,
            toffoli_braid_depth: 14,
            injection_error: 0.002,
            code: CodeName::ReedMuller15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSettings {
    /// Bits of the number to factor.
    pub n: u64,
    pub parallel_adders: u64,
    /// Sum algorithm and factory time instead of taking the larger.
    pub sequential_total: bool,
}

impl Default for WorkloadSettings {
    fn default() -> Self {
        Self {
            n: 2048,
            parallel_adders: 1,
            sequential_total: false,
        }
    }
}

/// Values that replace computed intermediates when present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CostOverrides {
    /// Pulses per purified W connection.
    #[serde(rename = "p_W", skip_serializing_if = "Option::is_none")]
    pub p_w: Option<f64>,
    /// Pulses per purified X connection.
    #[serde(rename = "p_X", skip_serializing_if = "Option::is_none")]
    pub p_x: Option<f64>,
    /// Pulses per purified vertical (X_{1,1}) connection.
    #[serde(rename = "p_X1", skip_serializing_if = "Option::is_none")]
    pub p_x1: Option<f64>,
    /// Pulses per lattice cycle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_lat: Option<f64>,
    /// Logical-qubit capacity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity: Option<u64>,
}

/// Kind of a numeric config field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Integer,
    Float,
}

/// Every numeric config key, as a dotted path.
pub const NUMERIC_KEYS: &[(&str, FieldKind)] = &[
    ("H", FieldKind::Integer),
    ("V", FieldKind::Integer),
    ("C", FieldKind::Integer),
    ("R", FieldKind::Integer),
    ("s", FieldKind::Integer),
    ("d", FieldKind::Integer),
    ("y_p", FieldKind::Float),
    ("t_pulse", FieldKind::Float),
    ("loss_W_dB", FieldKind::Float),
    ("loss_X_dB", FieldKind::Float),
    ("loss_local_roundtrip", FieldKind::Float),
    ("cooperativity", FieldKind::Float),
    ("p_th", FieldKind::Float),
    ("alpha", FieldKind::Float),
    ("p_err", FieldKind::Float),
    ("laser_ports", FieldKind::Integer),
    ("measurement_devices", FieldKind::Integer),
    ("F_target", FieldKind::Float),
    ("purification.kappa", FieldKind::Float),
    ("purification.gamma", FieldKind::Float),
    ("purification.p_e", FieldKind::Float),
    ("purification.max_level", FieldKind::Integer),
    ("purification.buffer", FieldKind::Integer),
    ("purification.p_gate", FieldKind::Float),
    ("purification.pulses_per_round", FieldKind::Integer),
    ("purification.pulse_cap", FieldKind::Integer),
    ("factory.s_states_per_toffoli", FieldKind::Float),
    ("factory.braidings_per_toffoli", FieldKind::Float),
    ("factory.toffoli_braid_depth", FieldKind::Integer),
    ("factory.injection_error", FieldKind::Float),
    ("workload.n", FieldKind::Integer),
    ("workload.parallel_adders", FieldKind::Integer),
    ("costs.p_W", FieldKind::Float),
    ("costs.p_X", FieldKind::Float),
    ("costs.p_X1", FieldKind::Float),
    ("costs.p_lat", FieldKind::Float),
    ("costs.capacity", FieldKind::Integer),
];

/// Resolve a key to its full dotted path. Bare keys match the unique path
/// ending in that segment (`p_lat` -> `costs.p_lat`).
pub fn resolve_key(key: &str) -> Result<(&'static str, FieldKind)> {
    if let Some(&(path, kind)) = NUMERIC_KEYS.iter().find(|(p, _)| *p == key) {
        return Ok((path, kind));
    }
    let mut matches = NUMERIC_KEYS
        .iter()
        .filter(|(p, _)| p.rsplit('.').next() == Some(key));
    match (matches.next(), matches.next()) {
        (Some(&(path, kind)), None) => Ok((path, kind)),
        (Some(_), Some(_)) => Err(Error::Spec(format!("ambiguous config key `{key}`"))),
        _ => Err(Error::Spec(format!("unknown numeric config key `{key}`"))),
    }
}

impl ArchitectureConfig {
    /// Strawman design: 65536 x 1 chips of 128 x 770 qubits, 40% yield.
    pub fn baseline() -> Self {
        Self::from_toml_str(BASELINE_TOML).expect("bundled baseline config parses")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check_invariants()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hard type-level invariants. Soft constraints are reported by
    /// [`crate::arch::validate_config`] instead.
    pub fn check_invariants(&self) -> Result<()> {
        let counts = [
            ("H", self.chips_per_row),
            ("V", self.chip_rows),
            ("C", self.columns_per_chip),
            ("R", self.rows_per_column),
            ("s", self.sublattice),
            ("d", self.hole_side),
        ];
        for (name, v) in counts {
            if v < 1 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        };
        check((0.0..=1.0).contains(&self.y_p), "y_p must lie in [0, 1]")?;
        check(self.t_pulse > 0.0, "t_pulse must be positive")?;
        check(
            self.loss_w_db >= 0.0 && self.loss_x_db >= 0.0 && self.loss_local_roundtrip >= 0.0,
            "losses must be non-negative",
        )?;
        check(
            self.f_target > 0.5 && self.f_target <= 1.0,
            "F_target must lie in (0.5, 1]",
        )?;
        check(self.p_th > 0.0 && self.alpha > 0.0, "p_th and alpha must be positive")?;
        check(self.workload.n >= 2, "workload.n must be at least 2")?;
        check(
            self.workload.parallel_adders >= 1,
            "workload.parallel_adders must be at least 1",
        )?;
        check(
            self.factory.toffoli_braid_depth >= 1,
            "factory.toffoli_braid_depth must be at least 1",
        )?;
        Ok(())
    }

    /// Read a numeric field by key. Unset optional fields read as `None`.
    pub fn get(&self, key: &str) -> Result<Option<f64>> {
        let (path, _) = resolve_key(key)?;
        let value = toml::Value::try_from(self).expect("config serializes");
        let mut cur = &value;
        for seg in path.split('.') {
            match cur.get(seg) {
                Some(v) => cur = v,
                None => return Ok(None),
            }
        }
        Ok(match cur {
            toml::Value::Integer(i) => Some(*i as f64),
            toml::Value::Float(f) => Some(*f),
            _ => None,
        })
    }

    /// Return a copy with one numeric field replaced.
    pub fn with_value(&self, key: &str, value: f64) -> Result<Self> {
        let (path, kind) = resolve_key(key)?;
        let mut root = toml::Value::try_from(self).expect("config serializes");
        let segs: Vec<&str> = path.split('.').collect();
        let mut table = root.as_table_mut().expect("config is a table");
        for seg in &segs[..segs.len() - 1] {
            table = table
                .entry(seg.to_string())
                .or_insert_with(|| toml::Value::Table(Default::default()))
                .as_table_mut()
                .expect("config section is a table");
        }
        let leaf = match kind {
            FieldKind::Float => toml::Value::Float(value),
            FieldKind::Integer => {
                if value.fract() != 0.0 || value < 0.0 || !value.is_finite() {
                    return Err(Error::Config(format!(
                        "`{path}` takes a non-negative integer, got {value}"
                    )));
                }
                toml::Value::Integer(value as i64)
            }
        };
        table.insert(segs[segs.len() - 1].to_string(), leaf);
        let cfg: Self = root
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.check_invariants()?;
        Ok(cfg)
    }

    /// Apply `key=value` override strings in order.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut cfg = self.clone();
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
            let value: f64 = raw
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("override `{item}` has a non-numeric value")))?;
            cfg = cfg.with_value(key.trim(), value)?;
        }
        Ok(cfg)
    }
}

/// Contents of `configs/baseline-2048.toml`.
pub const BASELINE_TOML: &str = include_str!("../configs/baseline-2048.toml");
