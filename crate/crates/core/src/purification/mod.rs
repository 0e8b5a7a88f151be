//! Heralded pair generation and symmetric purification, as an absorbing
//! Markov chain over pulse slots and as a seeded Monte Carlo simulation.

mod calibrate;
mod chain;
mod curve;
mod model;
mod monte_carlo;
mod protocol;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use calibrate::{calibrate, Anchor, Calibration, CalibrationSpec, FitSet, Residual};
pub use chain::{absorption_stats, build_markov_chain, ChainState, PulseStats, PurificationChain};
pub use curve::{curve_to_csv, pulses_vs_loss_curve, CurvePoint, CURVE_CSV_HEADER};
pub use model::{base_pair_model, BasePair, BasePairModel, ModelParams};
pub use monte_carlo::{monte_carlo, MonteCarloStats};
pub use protocol::{
    apply_gate_noise, purify_map, saturation_fidelity, FidelityLadder, GATES_PER_ROUND,
    WERNER_FLOOR,
};

/// Scheduling and accounting rules for symmetric purification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurificationPolicy {
    /// Maximum purification rounds.
    pub max_level: usize,
    /// Pairs that may wait at each level for a partner.
    pub buffer: usize,
    /// Keep the surviving pair when exactly one parity gate fails
    /// (Monte Carlo only).
    pub salvage: bool,
    /// Parity-gate herald probability.
    pub p_gate: f64,
    /// Pulse slots charged per purification attempt.
    pub pulses_per_round: usize,
    /// Horizon of completion-time distributions, pulses.
    pub pulse_cap: usize,
}

impl Default for PurificationPolicy {
    fn default() -> Self {
        Self {
            max_level: 8,
            buffer: 1,
            salvage: false,
            p_gate: 0.5,
            pulses_per_round: 2,
            pulse_cap: 200_000,
        }
    }
}

impl PurificationPolicy {
    pub fn check(&self) -> Result<()> {
        if self.buffer < 1 {
            return Err(Error::domain("buffer", self.buffer as f64, "must be at least 1"));
        }
        if !(self.p_gate > 0.0 && self.p_gate <= 1.0) {
            return Err(Error::domain("p_gate", self.p_gate, "must lie in (0, 1]"));
        }
        if self.pulses_per_round < 1 {
            return Err(Error::domain(
                "pulses_per_round",
                self.pulses_per_round as f64,
                "must be at least 1",
            ));
        }
        Ok(())
    }
}
