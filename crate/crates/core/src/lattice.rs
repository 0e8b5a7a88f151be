//! Lattice refresh timing, hole movement, logical error rate and logical
//! capacity accounting.

use serde::{Deserialize, Serialize};

use crate::arch::ConnectionCounts;
use crate::config::Packing;
use crate::error::{Error, Result};

/// Lattice refresh cycles per hole movement, per unit of hole side `d`.
pub const CYCLES_PER_MOVE_PER_D: u64 = 5;

/// Memory coherence needed, in lattice cycles.
pub const MEMORY_CYCLES: f64 = 1000.0;

/// Fraction of logical capacity reserved for braid routing.
pub const WIRING_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeTiming {
    /// Pulse slots per lattice refresh cycle.
    pub p_lat: f64,
    pub t_lat_s: f64,
    pub t_move_s: f64,
    pub t_braid_s: f64,
    pub cycles_per_move: u64,
    pub t_mem_required_s: f64,
}

impl LatticeTiming {
    pub fn new(p_lat: f64, t_pulse: f64, hole_side: u64) -> Self {
        let t_lat = p_lat * t_pulse;
        let (t_move, t_braid, cycles) = hole_timings(hole_side, t_lat);
        Self {
            p_lat,
            t_lat_s: t_lat,
            t_move_s: t_move,
            t_braid_s: t_braid,
            cycles_per_move: cycles,
            t_mem_required_s: MEMORY_CYCLES * t_lat,
        }
    }
}

/// `n_W p_W + n_X2 p_X + n_X1 p_X1`.
pub fn pulses_per_cycle(counts: &ConnectionCounts, p_w: f64, p_x: f64, p_x1: f64) -> f64 {
    counts.n_w as f64 * p_w + counts.n_x2 as f64 * p_x + counts.n_x1 as f64 * p_x1
}

/// Movement time, braid time and cycle count for one hole move.
pub fn hole_timings(hole_side: u64, t_lat: f64) -> (f64, f64, u64) {
    let cycles = CYCLES_PER_MOVE_PER_D * hole_side;
    let t = cycles as f64 * t_lat;
    (t, t, cycles)
}

/// `(p / p_th)^(alpha d)`.
pub fn logical_error_per_gate(p: f64, p_th: f64, alpha: f64, hole_side: u64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::domain("p", p, "physical error rate must be positive"));
    }
    if p >= p_th {
        return Err(Error::AboveThreshold { p, p_th });
    }
    Ok((p / p_th).powf(alpha * hole_side as f64))
}

/// Margin by which the logical error must undercut `1/KQ`.
pub const KQ_MARGIN: f64 = 10.0;

/// Whether `p_l` is at least an order of magnitude below `1/KQ`.
pub fn kq_check(p_l: f64, kq: f64) -> bool {
    p_l * kq * KQ_MARGIN <= 1.0
}

/// Lattice cells per logical qubit at rest.
pub fn area_per_qubit(hole_side: u64, packing: Packing) -> u64 {
    match packing {
        Packing::Loose => (14 * hole_side) * (9 * hole_side),
        Packing::Tight => (10 * hole_side) * (5 * hole_side),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub logical_lattice_w: u64,
    pub logical_lattice_h: u64,
    pub area_per_qubit_loose: u64,
    pub area_per_qubit_tight: u64,
    pub capacity: u64,
    pub wiring: u64,
    pub app_qubits: u64,
    pub factory_qubits: u64,
}

/// Split logical capacity into wiring, application and factory space.
pub fn logical_capacity(
    lattice_w: u64,
    lattice_h: u64,
    hole_side: u64,
    packing: Packing,
    capacity_override: Option<u64>,
    app_qubits: u64,
) -> Result<CapacityReport> {
    let capacity = match capacity_override {
        Some(c) => c,
        None => {
            if lattice_w == 0 || lattice_h == 0 {
                return Err(Error::Config("logical lattice has zero extent".into()));
            }
            let cells = lattice_w as u128 * lattice_h as u128;
            (cells / area_per_qubit(hole_side, packing) as u128) as u64
        }
    };
    let wiring = (capacity as f64 * WIRING_FRACTION).floor() as u64;
    let factory = capacity as i64 - wiring as i64 - app_qubits as i64;
    if factory < 0 {
        return Err(Error::InsufficientCapacity { capacity, factory });
    }
    Ok(CapacityReport {
        logical_lattice_w: lattice_w,
        logical_lattice_h: lattice_h,
        area_per_qubit_loose: area_per_qubit(hole_side, Packing::Loose),
        area_per_qubit_tight: area_per_qubit(hole_side, Packing::Tight),
        capacity,
        wiring,
        app_qubits,
        factory_qubits: factory as u64,
    })
}
