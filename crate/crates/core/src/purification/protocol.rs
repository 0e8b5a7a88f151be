//! Werner-state purification recurrence and local gate noise.

use crate::error::{Error, Result};

/// Fidelity of a fully depolarized (Werner) pair.
pub const WERNER_FLOOR: f64 = 0.25;

/// One symmetric purification round on two pairs of fidelity `f`.
///
/// Returns the output fidelity and the probability that the protocol
/// keeps the pair.
pub fn purify_map(f: f64) -> Result<(f64, f64)> {
    if !(WERNER_FLOOR..=1.0).contains(&f) {
        return Err(Error::domain(
            "F",
            f,
            "purification input must lie in [0.25, 1]",
        ));
    }
    Ok(purify_pair(f, f))
}

/// Recurrence for two Werner pairs of possibly different fidelity.
pub(crate) fn purify_pair(f1: f64, f2: f64) -> (f64, f64) {
    let e1 = (1.0 - f1) / 3.0;
    let e2 = (1.0 - f2) / 3.0;
    let keep = f1 * f2 + f1 * e2 + e1 * f2 + 5.0 * e1 * e2;
    let good = f1 * f2 + e1 * e2;
    (good / keep, keep)
}

/// Depolarize toward the Werner floor once per noisy gate.
pub fn apply_gate_noise(f: f64, eps_local: f64, n_gates: u32) -> f64 {
    let survive = (1.0 - eps_local).powi(n_gates as i32);
    f * survive + (1.0 - survive) * WERNER_FLOOR
}

/// Parity gates per purification round.
pub const GATES_PER_ROUND: u32 = 2;

/// Fidelity after one round including local gate noise.
pub(crate) fn next_level(f: f64, eps_local: f64) -> (f64, f64) {
    let (out, keep) = purify_pair(f, f);
    (apply_gate_noise(out, eps_local, GATES_PER_ROUND), keep)
}

/// Fidelity reached at each purification level, starting from `f0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityLadder {
    /// `fidelity[l]` is the fidelity of a level-`l` pair.
    pub fidelity: Vec<f64>,
    /// `keep[l]` is the protocol success probability when purifying level `l`.
    pub keep: Vec<f64>,
}

impl FidelityLadder {
    /// Climb until `target` is met. Fails with the saturated fidelity when
    /// `max_level` rounds do not suffice or the ladder stops improving.
    pub fn climb(f0: f64, eps_local: f64, target: f64, max_level: usize) -> Result<Self> {
        let mut fidelity = vec![f0];
        let mut keep = Vec::new();
        let mut f = f0;
        while f < target {
            let level = fidelity.len() - 1;
            let (next, p) = next_level(f, eps_local);
            if level >= max_level || next <= f {
                let best = fidelity.iter().copied().fold(f64::MIN, f64::max);
                return Err(Error::Saturation {
                    target,
                    saturated: best,
                    levels: level,
                });
            }
            keep.push(p);
            fidelity.push(next);
            f = next;
        }
        Ok(Self { fidelity, keep })
    }

    /// Rounds needed to reach the target.
    pub fn levels(&self) -> usize {
        self.fidelity.len() - 1
    }

    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity.last().expect("ladder is never empty")
    }
}

/// Fixed point of the noisy ladder, found by iterating from `f0`.
pub fn saturation_fidelity(f0: f64, eps_local: f64) -> f64 {
    let mut f = f0;
    for _ in 0..100_000 {
        let (next, _) = next_level(f, eps_local);
        if (next - f).abs() < 1e-15 || next < f {
            return f.max(next);
        }
        f = next;
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn purify_map_examples() {
        assert_eq!(purify_map(1.0).unwrap(), (1.0, 1.0));
        let (f, p) = purify_map(0.25).unwrap();
        assert_relative_eq!(f, 0.25, epsilon = 1e-15);
        assert_relative_eq!(p, 0.5, epsilon = 1e-15);
        let (f, p) = purify_map(0.9).unwrap();
        assert!((f - 0.9264).abs() < 5e-5, "{f}");
        assert!((p - 0.8756).abs() < 5e-5, "{p}");
        assert!(purify_map(0.2).is_err());
        assert!(purify_map(1.1).is_err());
    }

    #[test]
    fn purify_map_fixed_points_and_direction() {
        for f in [0.25, 0.5, 1.0] {
            assert_relative_eq!(purify_map(f).unwrap().0, f, epsilon = 1e-15);
        }
        for i in 1..10_000 {
            let f = 0.25 + 0.75 * i as f64 / 10_000.0;
            let (out, _) = purify_map(f).unwrap();
            if f > 0.5 {
                assert!(out > f, "F={f} -> {out}");
            } else if f < 0.5 {
                assert!(out < f, "F={f} -> {out}");
            }
        }
    }

    #[test]
    fn gate_noise_examples() {
        assert_eq!(apply_gate_noise(0.93, 0.0, 5), 0.93);
        assert_relative_eq!(apply_gate_noise(1.0, 0.002, 1), 0.9985, epsilon = 1e-15);
        assert_relative_eq!(apply_gate_noise(0.25, 0.3, 4), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn ladder_zero_levels_when_already_good() {
        let l = FidelityLadder::climb(0.999, 0.0002, 0.995, 8).unwrap();
        assert_eq!(l.levels(), 0);
    }

    #[test]
    fn ladder_saturates_with_lossy_gates() {
        // Near F = 1 each round keeps about 2/3 of the infidelity while two
        // gates at 0.2% add about 0.3%, so the ladder stalls near 0.991.
        let err = FidelityLadder::climb(0.99, 0.002, 0.995, 50).unwrap_err();
        match err {
            Error::Saturation { saturated, .. } => assert!(saturated < 0.995),
            e => panic!("{e}"),
        }
        let sat = saturation_fidelity(0.99, 0.002);
        assert!(sat > 0.99 && sat < 0.992, "{sat}");
    }

    #[test]
    fn ladder_no_purification_allowed() {
        assert!(matches!(
            FidelityLadder::climb(0.99, 0.0, 0.995, 0),
            Err(Error::Saturation { levels: 0, .. })
        ));
    }
}
