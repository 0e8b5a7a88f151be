//! Yield algebra, connection classification, loss budgets and per-waveguide
//! connection counts for the lattice-building operations.

use serde::Serialize;

use crate::config::ArchitectureConfig;
use crate::error::{Error, Result};

/// Slack applied before flooring so that products such as `770 * 0.256`
/// are not pushed below an integer by rounding.
const FLOOR_SLACK: f64 = 1e-9;

fn floor_count(x: f64) -> u64 {
    if x <= 0.0 {
        0
    } else {
        (x + FLOOR_SLACK).floor() as u64
    }
}

/// Probability that a lattice qubit and the partner it needs are both good:
/// `y_p * (1 - (1 - y_p)^2)`.
pub fn effective_yield(y_p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y_p) {
        return Err(Error::domain("y_p", y_p, "yield must lie in [0, 1]"));
    }
    let miss = 1.0 - y_p;
    Ok(y_p * (1.0 - miss * miss))
}

/// Functional qubits per column, `floor(R * y_e)`.
pub fn functional_column_height(rows: u64, y_e: f64) -> u64 {
    floor_count(rows as f64 * y_e)
}

/// Connection classes of the interconnect hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConnectionClass {
    /// Same cavity, deterministic.
    Cavity,
    /// Same purification waveguide.
    Waveguide,
    /// Purified waveguide connection.
    PurifiedWaveguide,
    /// Two ancillae or transceivers on the same racetrack.
    Racetrack,
    /// Lattice qubits joined through a racetrack pair.
    Indirect,
    /// Through `switches` switches and `ports` I/O ports.
    Switched { switches: u32, ports: u32 },
    /// Purified switched connection.
    PurifiedSwitched,
}

/// Connections per lattice refresh on one physical waveguide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConnectionCounts {
    pub n_c: u64,
    pub n_w: u64,
    /// Vertical neighbours across chip rows (X_{1,1}).
    pub n_x1: u64,
    /// Horizontal neighbours in the adjacent column (X_{2,1}).
    pub n_x2: u64,
    /// Functional column height.
    pub r_f: u64,
    pub y_e: f64,
    /// Set when `R_f < s` forced every count to zero.
    pub clamped: bool,
}

/// Yield below which cavity (C) connections are abandoned and every lattice
/// operation goes through purified waveguide connections.
pub const CAVITY_YIELD_CUTOFF: f64 = 0.8;

/// Per-waveguide connection counts at physical yield `y_p`.
pub fn connection_counts(cfg: &ArchitectureConfig) -> Result<ConnectionCounts> {
    let y_p = cfg.y_p;
    let y_e = effective_yield(y_p)?;
    let v = cfg.chip_rows;
    let s = cfg.sublattice;
    let r_f = functional_column_height(cfg.rows_per_column, y_e);

    if r_f < s {
        return Ok(ConnectionCounts {
            n_c: 0,
            n_w: 0,
            n_x1: 0,
            n_x2: 0,
            r_f,
            y_e,
            clamped: true,
        });
    }

    let pairs_in_column = 2 * v * (r_f - s);
    let n_c = if y_p >= CAVITY_YIELD_CUTOFF {
        floor_count(pairs_in_column as f64 * y_p * y_p)
    } else {
        0
    };
    let per_sub = r_f / s;
    let n_w = v * (2 * r_f - per_sub) + pairs_in_column - n_c;
    let n_x1 = 2 * s * (v - 1);
    let n_x2 = v * r_f / s;

    Ok(ConnectionCounts {
        n_c,
        n_w,
        n_x1,
        n_x2,
        r_f,
        y_e,
        clamped: false,
    })
}

/// `10^(-dB/10)`.
pub fn db_to_transmittance(loss_db: f64) -> Result<f64> {
    if loss_db < 0.0 || loss_db.is_nan() {
        return Err(Error::domain("loss_dB", loss_db, "loss must be non-negative"));
    }
    Ok(10f64.powf(-loss_db / 10.0))
}

/// Loss in dB of a fractional power loss.
pub fn fraction_to_db(fraction_lost: f64) -> f64 {
    -10.0 * (1.0 - fraction_lost).log10()
}

/// Cavity-induced loss at one qubit interface, `10 log10(1 / (1 - 1/C))`.
pub fn cavity_interface_db(cooperativity: Option<f64>) -> Result<f64> {
    match cooperativity {
        None => Ok(0.0),
        Some(c) if c.is_infinite() && c > 0.0 => Ok(0.0),
        Some(c) if c > 1.0 => Ok(fraction_to_db(1.0 / c)),
        Some(c) => Err(Error::domain(
            "cooperativity",
            c,
            "cooperativity must exceed 1",
        )),
    }
}

/// Qubit-to-qubit loss of a connection: linear loss of its class plus the
/// cavity term at both interfaces.
pub fn loss_budget(class: ConnectionClass, cfg: &ArchitectureConfig) -> Result<f64> {
    let linear = match class {
        ConnectionClass::Cavity => 0.0,
        ConnectionClass::Waveguide | ConnectionClass::PurifiedWaveguide => cfg.loss_w_db,
        ConnectionClass::Racetrack | ConnectionClass::Indirect => {
            fraction_to_db(cfg.loss_local_roundtrip)
        }
        ConnectionClass::Switched { .. } | ConnectionClass::PurifiedSwitched => cfg.loss_x_db,
    };
    Ok(linear + 2.0 * cavity_interface_db(cfg.cooperativity)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Violation,
}

/// A soft-constraint finding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    fn new(severity: Severity, code: &'static str, message: String) -> Self {
        Self {
            severity,
            code,
            message,
        }
    }
}

/// Below this yield a tQEC-capable lattice is hard to build.
pub const LOW_YIELD_WARNING: f64 = 0.4;

/// Soft constraints on a configuration. Never fails.
pub fn validate_config(cfg: &ArchitectureConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let y_e = effective_yield(cfg.y_p.clamp(0.0, 1.0)).unwrap_or(0.0);
    let r_f = functional_column_height(cfg.rows_per_column, y_e);
    let s = cfg.sublattice.max(1);
    let height = cfg.chip_rows * r_f / s;
    let need = 14 * cfg.hole_side;

    if need > height {
        out.push(Diagnostic::new(
            Severity::Violation,
            "lattice-too-short",
            format!("14d = {need} exceeds logical lattice height V*R_f/s = {height}"),
        ));
    }
    if r_f < s {
        out.push(Diagnostic::new(
            Severity::Violation,
            "rf-below-s",
            format!("functional column height {r_f} is below s = {s}; connection counts clamped to 0"),
        ));
    }
    if cfg.y_p < LOW_YIELD_WARNING {
        out.push(Diagnostic::new(
            Severity::Warning,
            "low-yield",
            format!("physical yield {} is below {LOW_YIELD_WARNING}", cfg.y_p),
        ));
    }
    if !cfg.rows_per_column.is_multiple_of(s) {
        out.push(Diagnostic::new(
            Severity::Warning,
            "r-not-multiple-of-s",
            format!(
                "R = {} is not a multiple of s = {s}; counts assume R mod s = 0",
                cfg.rows_per_column
            ),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(v: u64, r: u64, s: u64, y_p: f64) -> ArchitectureConfig {
        let mut c = ArchitectureConfig::baseline();
        c.chip_rows = v;
        c.rows_per_column = r;
        c.sublattice = s;
        c.y_p = y_p;
        c
    }

    #[test]
    fn effective_yield_examples() {
        assert_relative_eq!(effective_yield(0.4).unwrap(), 0.256, epsilon = 1e-15);
        assert_eq!(effective_yield(1.0).unwrap(), 1.0);
        assert_eq!(effective_yield(0.0).unwrap(), 0.0);
        assert!(effective_yield(1.01).is_err());
        assert!(effective_yield(-0.1).is_err());
    }

    #[test]
    fn functional_height_examples() {
        assert_eq!(functional_column_height(770, 0.256), 197);
        assert_eq!(functional_column_height(770, effective_yield(0.4).unwrap()), 197);
        assert_eq!(functional_column_height(100, 1.0), 100);
        assert_eq!(functional_column_height(10, 0.0), 0);
    }

    #[test]
    fn counts_full_yield() {
        let c = connection_counts(&cfg(1, 770, 1, 1.0)).unwrap();
        assert_eq!((c.n_c, c.n_w, c.n_x1, c.n_x2), (1538, 770, 0, 770));
    }

    #[test]
    fn counts_low_yield() {
        let c = connection_counts(&cfg(1, 770, 1, 0.4)).unwrap();
        assert_eq!(c.r_f, 197);
        assert_eq!((c.n_c, c.n_w, c.n_x1, c.n_x2), (0, 589, 0, 197));
    }

    #[test]
    fn counts_column_equal_to_s() {
        let c = connection_counts(&cfg(1, 4, 4, 1.0)).unwrap();
        assert_eq!(c.n_c, 0);
    }

    #[test]
    fn counts_clamp_when_rf_below_s() {
        let c = connection_counts(&cfg(2, 10, 5, 0.4)).unwrap();
        assert!(c.clamped);
        assert_eq!((c.n_c, c.n_w, c.n_x1, c.n_x2), (0, 0, 0, 0));
        assert!(validate_config(&cfg(2, 10, 5, 0.4))
            .iter()
            .any(|d| d.code == "rf-below-s"));
    }

    #[test]
    fn transmittance_examples() {
        assert_eq!(db_to_transmittance(0.0).unwrap(), 1.0);
        assert_relative_eq!(db_to_transmittance(10.0).unwrap(), 0.1, epsilon = 1e-15);
        assert_relative_eq!(db_to_transmittance(0.4).unwrap(), 0.9120, epsilon = 5e-5);
        assert!(db_to_transmittance(-1.0).is_err());
    }

    #[test]
    fn loss_budget_examples() {
        let mut c = ArchitectureConfig::baseline();
        c.loss_w_db = 0.0;
        c.cooperativity = Some(100.0);
        let per_interface = -10.0 * 0.99f64.log10();
        assert_relative_eq!(per_interface, 0.0436, epsilon = 1e-4);
        let total = loss_budget(ConnectionClass::Waveguide, &c).unwrap();
        assert_relative_eq!(total, 2.0 * per_interface, epsilon = 1e-12);
        assert_relative_eq!(total, 0.087, epsilon = 5e-4);

        c.cooperativity = Some(f64::INFINITY);
        c.loss_w_db = 0.1;
        assert_relative_eq!(
            loss_budget(ConnectionClass::PurifiedWaveguide, &c).unwrap(),
            0.1,
            epsilon = 1e-15
        );
        c.cooperativity = None;
        assert_eq!(loss_budget(ConnectionClass::Waveguide, &c).unwrap(), 0.1);
        assert_eq!(
            loss_budget(ConnectionClass::Switched { switches: 0, ports: 0 }, &c).unwrap(),
            c.loss_x_db
        );

        c.cooperativity = Some(1.0);
        assert!(loss_budget(ConnectionClass::Waveguide, &c).is_err());
    }

    #[test]
    fn validation_boundary() {
        // R = 770 at y_p = 0.4 gives R_f = 197; pick R so that R_f lands on 196 and 195.
        let mut c = cfg(1, 766, 1, 0.4);
        assert_eq!(functional_column_height(766, effective_yield(0.4).unwrap()), 196);
        assert!(!validate_config(&c)
            .iter()
            .any(|d| d.severity == Severity::Violation));
        c.rows_per_column = 762;
        assert_eq!(functional_column_height(762, effective_yield(0.4).unwrap()), 195);
        assert!(validate_config(&c)
            .iter()
            .any(|d| d.code == "lattice-too-short"));
    }

    #[test]
    fn validation_warnings() {
        let d = validate_config(&cfg(1, 770, 3, 0.35));
        assert!(d.iter().any(|d| d.code == "r-not-multiple-of-s"));
        assert!(d.iter().any(|d| d.code == "low-yield"));
        assert!(validate_config(&cfg(1, 770, 1, 0.4)).is_empty());
    }
}
