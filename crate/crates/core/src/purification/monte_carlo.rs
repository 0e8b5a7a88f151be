//! Seeded Monte Carlo simulation of the purification event process.
//!
//! Trial `i` draws from ChaCha8 stream `i` of the master seed, so results do
//! not depend on how trials are spread over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;

use super::chain::PulseStats;
use super::model::BasePairModel;
use super::protocol::{apply_gate_noise, purify_pair, FidelityLadder, GATES_PER_ROUND};
use super::PurificationPolicy;

/// Monte Carlo estimate of the completion-time statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloStats {
    #[serde(flatten)]
    pub stats: PulseStats,
    pub trials: usize,
    /// Standard error of the mean.
    pub std_error: f64,
    /// Trials that ran past the distribution horizon.
    pub beyond_cap: usize,
}

struct Trial {
    pulses: u64,
    fidelity: f64,
}

fn run_trial(
    policy: &PurificationPolicy,
    f0: f64,
    p_e: f64,
    eps_local: f64,
    f_target: f64,
    rng: &mut ChaCha8Rng,
) -> Trial {
    let ppr = policy.pulses_per_round as u64;
    // levels[l] holds the fidelities of pairs waiting at level l.
    let mut levels: Vec<Vec<f64>> = vec![Vec::new(); policy.max_level + 1];
    let mut pulses = 0u64;
    loop {
        let Some(level) = levels.iter().rposition(|pairs| pairs.len() >= 2) else {
            pulses += 1;
            if rng.random::<f64>() < p_e {
                if f0 >= f_target {
                    return Trial { pulses, fidelity: f0 };
                }
                levels[0].push(f0);
            }
            continue;
        };

        pulses += ppr;
        let a = levels[level].pop().expect("two pairs present");
        let b = levels[level].pop().expect("two pairs present");
        let first = rng.random::<f64>() < policy.p_gate;
        let second = rng.random::<f64>() < policy.p_gate;
        match (first, second) {
            (true, true) => {
                let (out, keep) = purify_pair(a, b);
                if rng.random::<f64>() < keep {
                    let f = apply_gate_noise(out, eps_local, GATES_PER_ROUND);
                    if f >= f_target {
                        return Trial { pulses, fidelity: f };
                    }
                    if level < policy.max_level {
                        levels[level + 1].push(f);
                    }
                }
            }
            (true, false) | (false, true) if policy.salvage => {
                levels[level].push(apply_gate_noise(a.max(b), eps_local, 1));
            }
            _ => {}
        }
    }
}

/// Simulate `trials` independent purification runs.
pub fn monte_carlo(
    policy: &PurificationPolicy,
    model: &BasePairModel,
    loss_db: f64,
    f_target: f64,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloStats> {
    policy.check()?;
    if trials == 0 {
        return Err(crate::error::Error::domain("trials", 0.0, "must be at least 1"));
    }
    let base = model.base_pair(loss_db)?;
    // Same reachability contract as the chain builder.
    FidelityLadder::climb(base.f0, model.eps_local, f_target, policy.max_level)?;

    let results: Vec<Trial> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            run_trial(policy, base.f0, base.p_e, model.eps_local, f_target, &mut rng)
        })
        .collect();

    let n = trials as f64;
    let cap = policy.pulse_cap;
    let mut hist = vec![0u64; cap + 1];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut fid = 0.0;
    let mut beyond_cap = 0;
    for t in &results {
        let x = t.pulses as f64;
        sum += x;
        sum_sq += x * x;
        fid += t.fidelity;
        match hist.get_mut(t.pulses as usize) {
            Some(h) => *h += 1,
            None => beyond_cap += 1,
        }
    }
    let mean = sum / n;
    let second = sum_sq / n;
    let var = if trials > 1 {
        (sum_sq - sum * sum / n) / (n - 1.0)
    } else {
        0.0
    };
    // Trim the histogram after its last occupied bin.
    let used = hist.iter().rposition(|&c| c > 0).map_or(1, |k| k + 1);
    let pdf = hist[..used].iter().map(|&c| c as f64 / n).collect();

    Ok(MonteCarloStats {
        stats: PulseStats {
            mean,
            rms: second.sqrt(),
            pdf,
            final_fidelity: fid / n,
        },
        trials,
        std_error: (var.max(0.0) / n).sqrt(),
        beyond_cap,
    })
}

#[cfg(test)]
mod tests {
    use super::super::chain::{absorption_stats, build_markov_chain};
    use super::super::model::ModelParams;
    use super::*;

    fn model() -> BasePairModel {
        BasePairModel::new(ModelParams::default(), 0.0002).unwrap()
    }

    #[test]
    fn deterministic_per_seed() {
        let p = PurificationPolicy::default();
        let a = monte_carlo(&p, &model(), 0.1, 0.995, 2000, 7).unwrap();
        let b = monte_carlo(&p, &model(), 0.1, 0.995, 2000, 7).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo(&p, &model(), 0.1, 0.995, 2000, 8).unwrap();
        assert_ne!(a.stats.mean, c.stats.mean);
    }

    #[test]
    fn agrees_with_chain() {
        let p = PurificationPolicy::default();
        let m = model();
        let exact = absorption_stats(&build_markov_chain(&p, &m, 0.25, 0.995).unwrap()).unwrap();
        let mc = monte_carlo(&p, &m, 0.25, 0.995, 20_000, 11).unwrap();
        assert!((mc.stats.mean - exact.mean).abs() < 4.0 * mc.std_error);
        assert!((mc.stats.final_fidelity - exact.final_fidelity).abs() < 1e-12);
    }

    #[test]
    fn salvage_runs_reach_target() {
        let m = model();
        let salvage = PurificationPolicy { salvage: true, ..Default::default() };
        let a = monte_carlo(&salvage, &m, 0.4, 0.995, 5_000, 3).unwrap();
        let b = monte_carlo(&salvage, &m, 0.4, 0.995, 5_000, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.stats.final_fidelity >= 0.995);
        assert_eq!(a.beyond_cap, 0);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(monte_carlo(&PurificationPolicy::default(), &model(), 0.1, 0.995, 0, 1).is_err());
    }
}
