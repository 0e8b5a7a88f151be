//! S-state distillation and factory throughput.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::Serialize;

use crate::config::CodeName;
use crate::error::{Error, Result};

/// A distillation code and its cubic error map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DistillationCode {
    pub name: CodeName,
}

impl DistillationCode {
    pub const STEANE7: Self = Self { name: CodeName::Steane7 };
    pub const REED_MULLER15: Self = Self { name: CodeName::ReedMuller15 };

    /// Output error is `coefficient * p^3`.
    pub fn coefficient(&self) -> f64 {
        match self.name {
            CodeName::Steane7 => 7.0,
            CodeName::ReedMuller15 => 35.0,
        }
    }

    /// Phase of the distilled S state.
    pub fn theta(&self) -> f64 {
        match self.name {
            CodeName::Steane7 => FRAC_PI_2,
            CodeName::ReedMuller15 => FRAC_PI_4,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.name {
            CodeName::Steane7 => "Steane7",
            CodeName::ReedMuller15 => "ReedMuller15",
        }
    }

    /// Non-trivial fixed point `1/sqrt(coefficient)` of the error map.
    pub fn fixed_point(&self) -> f64 {
        self.coefficient().sqrt().recip()
    }
}

impl From<CodeName> for DistillationCode {
    fn from(name: CodeName) -> Self {
        Self { name }
    }
}

/// One distillation round: `min(1, c p^3)`.
pub fn distill_error(p: f64, code: DistillationCode) -> f64 {
    (code.coefficient() * p * p * p).min(1.0)
}

/// Rounds needed to bring `p_in` to `p_target` or below.
pub fn levels_required(p_in: f64, p_target: f64, code: DistillationCode) -> Result<u32> {
    if p_in <= p_target {
        return Ok(0);
    }
    if code.coefficient() * p_in * p_in >= 1.0 {
        return Err(Error::NonConverging {
            p_in,
            code: code.label(),
        });
    }
    let mut p = p_in;
    let mut levels = 0;
    while p > p_target {
        p = distill_error(p, code);
        levels += 1;
    }
    Ok(levels)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactoryModel {
    pub s_states_per_toffoli: f64,
    pub braidings_per_toffoli: f64,
    pub factory_qubits: u64,
    pub t_braid_s: f64,
}

/// Braid-limited time to produce the S states for `n_tof` Toffoli gates,
/// with every factory qubit braiding in parallel.
pub fn factory_time(n_tof: f64, fm: &FactoryModel) -> Result<f64> {
    if fm.factory_qubits < 1 {
        return Err(Error::domain(
            "factory_qubits",
            fm.factory_qubits as f64,
            "factory needs at least one logical qubit",
        ));
    }
    Ok(n_tof * fm.braidings_per_toffoli * fm.t_braid_s / fm.factory_qubits as f64)
}

/// `braid_depth * t_braid`.
pub fn toffoli_time(t_braid: f64, braid_depth: u64) -> f64 {
    braid_depth as f64 * t_braid
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn distill_examples() {
        assert_relative_eq!(distill_error(0.1, DistillationCode::STEANE7), 0.007, max_relative = 1e-12);
        assert_eq!(distill_error(0.0, DistillationCode::STEANE7), 0.0);
        assert_eq!(distill_error(0.0, DistillationCode::REED_MULLER15), 0.0);
        assert_relative_eq!(distill_error(0.01, DistillationCode::REED_MULLER15), 3.5e-5, max_relative = 1e-12);
        assert_eq!(distill_error(1.0, DistillationCode::REED_MULLER15), 1.0);
    }

    #[test]
    fn levels_examples() {
        assert_eq!(levels_required(0.01, 1e-10, DistillationCode::REED_MULLER15).unwrap(), 2);
        assert_eq!(levels_required(1e-11, 1e-10, DistillationCode::REED_MULLER15).unwrap(), 0);
        assert!(matches!(
            levels_required(0.3, 1e-10, DistillationCode::REED_MULLER15),
            Err(Error::NonConverging { .. })
        ));
    }

    #[test]
    fn monotone_below_fixed_point() {
        let code = DistillationCode::REED_MULLER15;
        let top = code.fixed_point();
        let mut last = 0.0;
        for i in 1..1000 {
            let p = top * i as f64 / 1000.0;
            let out = distill_error(p, code);
            assert!(out > last);
            last = out;
        }
    }

    #[test]
    fn code_constants() {
        assert_eq!(DistillationCode::STEANE7.theta(), FRAC_PI_2);
        assert_eq!(DistillationCode::REED_MULLER15.theta(), FRAC_PI_4);
    }

    #[test]
    fn factory_examples() {
        let fm = FactoryModel {
            s_states_per_toffoli: 11.5,
            braidings_per_toffoli: 1795.0,
            factory_qubits: 77_589,
            t_braid_s: 3.43e-3,
        };
        let n_tof = 40.0 * 2048f64.powi(3);
        let t = factory_time(n_tof, &fm).unwrap();
        assert_relative_eq!(t, 2.73e7, max_relative = 2e-3);
        assert!((t - 2.7e7).abs() / 2.7e7 < 0.02);
        assert_eq!(factory_time(0.0, &fm).unwrap(), 0.0);
        let double = FactoryModel { factory_qubits: 2 * 77_589, ..fm };
        assert_eq!(factory_time(n_tof, &double).unwrap(), t / 2.0);
        assert!(factory_time(1.0, &FactoryModel { factory_qubits: 0, ..fm }).is_err());
    }

    #[test]
    fn toffoli_examples() {
        assert_relative_eq!(toffoli_time(3.43e-3, 14), 48.02e-3, max_relative = 1e-12);
        assert_eq!(toffoli_time(0.0, 14), 0.0);
        assert_eq!(toffoli_time(2.5, 1), 2.5);
    }
}
