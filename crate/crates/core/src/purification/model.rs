//! Loss-to-base-pair mapping.
//!
//! The default model is a placeholder, not device physics: the initial pair
//! fidelity decays exponentially in a power of the absorbed fraction of the
//! probe,
//!
//! ```text
//! F0 = 0.25 + 0.75 * exp(-kappa * (1 - 10^(-loss/10))^gamma)
//! ```
//!
//! and the herald probability is constant. `kappa`, `gamma` and `p_e` are
//! meant to be fitted with [`super::calibrate`].

use serde::{Deserialize, Serialize};

use crate::arch::db_to_transmittance;
use crate::error::{Error, Result};

use super::protocol::{apply_gate_noise, GATES_PER_ROUND, WERNER_FLOOR};

/// Constants of the base-pair model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub kappa: f64,
    pub gamma: f64,
    pub p_e: f64,
}

impl Default for ModelParams {
    /// Fitted to 111 pulses at 0.1 dB and 1068 pulses at 0.4 dB
    /// (F_target 0.995, 0.02% local loss, default policy).
    fn default() -> Self {
        Self {
            kappa: 0.040_085_488_486_255_37,
            gamma: 0.464_285_714_285_714_25,
            p_e: 0.072_569_180_392_102_97,
        }
    }
}

impl ModelParams {
    pub fn check(&self) -> Result<()> {
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::domain("kappa", self.kappa, "must be finite and >= 0"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::domain("gamma", self.gamma, "must be finite and > 0"));
        }
        if !(self.p_e > 0.0 && self.p_e <= 1.0) {
            return Err(Error::domain("p_e", self.p_e, "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Initial fidelity and herald probability of one raw pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasePair {
    pub f0: f64,
    pub p_e: f64,
}

/// Base-pair model plus the local gate infidelity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasePairModel {
    pub params: ModelParams,
    /// Per-parity-gate infidelity from racetrack round-trip loss.
    pub eps_local: f64,
}

impl BasePairModel {
    pub fn new(params: ModelParams, eps_local: f64) -> Result<Self> {
        params.check()?;
        if !(0.0..1.0).contains(&eps_local) {
            return Err(Error::domain("eps_local", eps_local, "must lie in [0, 1)"));
        }
        Ok(Self { params, eps_local })
    }

    /// Raw pair after the two local parity gates that herald it.
    pub fn base_pair(&self, loss_db: f64) -> Result<BasePair> {
        let raw = base_pair_model(loss_db, &self.params)?;
        Ok(BasePair {
            f0: apply_gate_noise(raw.f0, self.eps_local, GATES_PER_ROUND),
            ..raw
        })
    }
}

/// Initial fidelity and herald probability at `loss_db`.
pub fn base_pair_model(loss_db: f64, params: &ModelParams) -> Result<BasePair> {
    params.check()?;
    let absorbed = 1.0 - db_to_transmittance(loss_db)?;
    let f0 = WERNER_FLOOR + (1.0 - WERNER_FLOOR) * (-params.kappa * absorbed.powf(params.gamma)).exp();
    Ok(BasePair {
        f0,
        p_e: params.p_e,
    })
}
