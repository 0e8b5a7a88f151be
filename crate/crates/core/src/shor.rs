//! Shor's-algorithm resource counts and execution time.

use serde::Serialize;

/// Logical qubits per bit of the number being factored.
pub const APP_QUBITS_PER_BIT: u64 = 6;

/// Resource counts for factoring an `n`-bit number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ShorCounts {
    /// Adder calls, `4 n^2`.
    pub n_add: u64,
    /// Toffoli gates, `40 n^3` (each adder costs `10 n`).
    pub n_tof: u64,
    pub app_qubits: u64,
}

pub fn shor_counts(n: u64) -> ShorCounts {
    let n_add = 4 * n * n;
    ShorCounts {
        n_add,
        n_tof: 10 * n * n_add,
        app_qubits: APP_QUBITS_PER_BIT * n,
    }
}

/// `log2 n`, exact for powers of two and rounded up otherwise.
pub fn log2_ceil(n: u64) -> u32 {
    assert!(n >= 1, "log2 of zero");
    if n.is_power_of_two() {
        n.trailing_zeros()
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Carry-lookahead adder: `4 log2(n) t_tof`.
pub fn adder_time(n: u64, t_tof: f64) -> f64 {
    4.0 * log2_ceil(n) as f64 * t_tof
}

pub fn algorithm_time(n_add: u64, t_add: f64, parallel_adders: u64) -> f64 {
    n_add as f64 * t_add / parallel_adders.max(1) as f64
}

/// Algorithm and factory overlap; the slower one sets the pace.
pub fn total_time(t_algorithm: f64, t_factory: f64) -> f64 {
    t_algorithm.max(t_factory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn counts_examples() {
        let c = shor_counts(2048);
        assert_eq!(c.n_add, 16_777_216);
        assert_relative_eq!(c.n_add as f64, 1.68e7, max_relative = 2e-3);
        assert_eq!(c.n_tof, 40 * 2048u64.pow(3));
        assert_relative_eq!(c.n_tof as f64, 3.436e11, max_relative = 1e-3);
        assert_eq!(c.app_qubits, 12_288);
        let small = shor_counts(2);
        assert_eq!((small.n_add, small.n_tof, small.app_qubits), (16, 320, 12));
    }

    #[test]
    fn toffolis_per_adder() {
        for n in 2..300 {
            let c = shor_counts(n);
            assert_eq!(c.n_tof, 10 * n * c.n_add);
        }
    }

    #[test]
    fn log2_rounding() {
        assert_eq!(log2_ceil(2048), 11);
        assert_eq!(log2_ceil(2), 1);
        assert_eq!(log2_ceil(3), 2);
        assert_eq!(log2_ceil(2000), 11);
        assert_eq!(log2_ceil(2049), 12);
    }

    #[test]
    fn adder_examples() {
        assert_relative_eq!(adder_time(2048, 0.048), 2.112, max_relative = 1e-12);
        assert_eq!(adder_time(2048, 0.0), 0.0);
        assert_eq!(adder_time(2, 0.5), 2.0);
    }

    #[test]
    fn algorithm_examples() {
        let t = algorithm_time(16_777_216, 2.112, 1);
        assert_relative_eq!(t, 3.543e7, max_relative = 1e-3);
        assert_relative_eq!(t / 86_400.0, 410.0, max_relative = 2e-3);
        assert_eq!(algorithm_time(16_777_216, 2.112, 2), t / 2.0);
        assert_eq!(algorithm_time(0, 2.112, 1), 0.0);
    }

    #[test]
    fn total_examples() {
        assert_eq!(total_time(3.54e7, 2.73e7), 3.54e7);
        assert_eq!(total_time(5.0, 5.0), 5.0);
        assert_eq!(total_time(0.0, 7.0), 7.0);
    }
}
