//! Absorbing Markov chain over purification buffer states.
//!
//! One transition is one pulse slot. In each slot the scheduler performs a
//! single event: if some level holds two pairs, the highest such level is
//! purified; otherwise a raw pair generation is attempted. A purification
//! attempt occupies `pulses_per_round` consecutive slots, which the chain
//! represents with deterministic intermediate stages.

use std::collections::{HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

use super::model::BasePairModel;
use super::protocol::FidelityLadder;
use super::PurificationPolicy;

/// Remaining mass below which completion-time iteration stops early.
const PDF_TAIL: f64 = 1e-14;

/// A transient state: pairs held at each level, and how many slots of an
/// in-progress purification have elapsed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ChainState {
    pub occupancy: Vec<u8>,
    pub stage: u8,
}

impl ChainState {
    fn highest_pair(&self) -> Option<usize> {
        self.occupancy.iter().rposition(|&c| c >= 2)
    }
}

/// Row-stochastic transition structure. The absorbing state is the last row.
#[derive(Debug, Clone, PartialEq)]
pub struct PurificationChain {
    /// Labels of the transient states; empty for hand-built chains.
    pub states: Vec<ChainState>,
    /// Sparse rows `(target, probability)`, one per state including the
    /// absorbing one.
    pub transitions: Vec<Vec<(usize, f64)>>,
    /// Fidelity of a pair at each purification level.
    pub fidelity_at_level: Vec<f64>,
    pub pulse_index_cap: usize,
    pub start: usize,
}

impl PurificationChain {
    /// Wrap explicit transition rows. The last row must be the absorbing
    /// state.
    pub fn from_rows(
        transitions: Vec<Vec<(usize, f64)>>,
        start: usize,
        pulse_index_cap: usize,
    ) -> Result<Self> {
        let n = transitions.len();
        if n == 0 || start >= n {
            return Err(Error::Spec("chain needs an absorbing row and a valid start".into()));
        }
        let chain = Self {
            states: Vec::new(),
            transitions,
            fidelity_at_level: Vec::new(),
            pulse_index_cap,
            start,
        };
        for (i, row) in chain.transitions.iter().enumerate() {
            if row.iter().any(|&(j, p)| j >= n || !(0.0..=1.0).contains(&p)) {
                return Err(Error::Spec(format!("row {i} has an invalid entry")));
            }
            let sum: f64 = row.iter().map(|&(_, p)| p).sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Spec(format!("row {i} sums to {sum}")));
            }
        }
        if chain.transitions[n - 1] != [(n - 1, 1.0)] {
            return Err(Error::Spec("last row must be absorbing".into()));
        }
        Ok(chain)
    }

    pub fn absorbing(&self) -> usize {
        self.transitions.len() - 1
    }

    pub fn transient_count(&self) -> usize {
        self.transitions.len() - 1
    }

    pub fn levels(&self) -> usize {
        self.fidelity_at_level.len().saturating_sub(1)
    }

    /// Dense copy of the full transition matrix.
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.transitions.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in self.transitions.iter().enumerate() {
            for &(j, p) in row {
                m[(i, j)] += p;
            }
        }
        m
    }
}

/// Enumerate the buffer states and transition probabilities for purifying
/// pairs at `loss_db` up to `f_target`.
pub fn build_markov_chain(
    policy: &PurificationPolicy,
    model: &BasePairModel,
    loss_db: f64,
    f_target: f64,
) -> Result<PurificationChain> {
    policy.check()?;
    let base = model.base_pair(loss_db)?;
    let ladder = FidelityLadder::climb(base.f0, model.eps_local, f_target, policy.max_level)?;
    let levels = ladder.levels();
    let gate_ok = policy.p_gate * policy.p_gate;
    let success: Vec<f64> = ladder.keep.iter().map(|k| gate_ok * k).collect();
    let last_stage = (policy.pulses_per_round - 1) as u8;

    let start = ChainState {
        occupancy: vec![0; levels],
        stage: 0,
    };
    let mut index: HashMap<ChainState, usize> = HashMap::new();
    let mut states = Vec::new();
    let mut queue = VecDeque::new();
    index.insert(start.clone(), 0);
    states.push(start.clone());
    queue.push_back(start);

    // Targets are `None` for the absorbing state until its index is known.
    let mut edges: Vec<Vec<(Option<ChainState>, f64)>> = Vec::new();
    while let Some(state) = queue.pop_front() {
        let mut out: Vec<(Option<ChainState>, f64)> = Vec::with_capacity(2);
        match state.highest_pair() {
            Some(_) if state.stage < last_stage => {
                let mut next = state.clone();
                next.stage += 1;
                out.push((Some(next), 1.0));
            }
            Some(level) => {
                let q = success[level];
                let mut fail = state.clone();
                fail.stage = 0;
                fail.occupancy[level] -= 2;
                if level + 1 == levels {
                    out.push((None, q));
                } else {
                    let mut up = fail.clone();
                    up.occupancy[level + 1] += 1;
                    out.push((Some(up), q));
                }
                out.push((Some(fail), 1.0 - q));
            }
            None => {
                if levels == 0 {
                    out.push((None, base.p_e));
                } else {
                    let mut next = state.clone();
                    next.occupancy[0] += 1;
                    out.push((Some(next), base.p_e));
                }
                out.push((Some(state.clone()), 1.0 - base.p_e));
            }
        }
        out.retain(|&(_, p)| p > 0.0);
        for (target, _) in &out {
            if let Some(t) = target {
                if !index.contains_key(t) {
                    index.insert(t.clone(), states.len());
                    states.push(t.clone());
                    queue.push_back(t.clone());
                }
            }
        }
        edges.push(out);
    }

    let absorbing = states.len();
    let mut transitions: Vec<Vec<(usize, f64)>> = edges
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|(t, p)| (t.map_or(absorbing, |s| index[&s]), p))
                .collect()
        })
        .collect();
    transitions.push(vec![(absorbing, 1.0)]);

    Ok(PurificationChain {
        states,
        transitions,
        fidelity_at_level: ladder.fidelity,
        pulse_index_cap: policy.pulse_cap,
        start: 0,
    })
}

/// Completion-time statistics in pulses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseStats {
    pub mean: f64,
    /// Root of the second moment, `sqrt(E[T^2])`.
    pub rms: f64,
    /// `pdf[k]` is the probability of completing at exactly pulse `k`,
    /// up to the horizon.
    #[serde(skip)]
    pub pdf: Vec<f64>,
    pub final_fidelity: f64,
}

impl PulseStats {
    pub fn second_moment(&self) -> f64 {
        self.rms * self.rms
    }

    pub fn std_dev(&self) -> f64 {
        (self.second_moment() - self.mean * self.mean).max(0.0).sqrt()
    }

    /// Probability of completion within `k` pulses.
    pub fn cdf(&self, k: usize) -> f64 {
        let end = (k + 1).min(self.pdf.len());
        self.pdf[..end].iter().sum()
    }

    /// Smallest pulse count whose completion probability reaches `q`.
    pub fn quantile(&self, q: f64) -> Option<usize> {
        let mut acc = 0.0;
        for (k, p) in self.pdf.iter().enumerate() {
            acc += p;
            if acc >= q {
                return Some(k);
            }
        }
        None
    }
}

fn can_absorb(chain: &PurificationChain) -> bool {
    let n = chain.transitions.len();
    let absorbing = chain.absorbing();
    let mut reverse = vec![Vec::new(); n];
    for (i, row) in chain.transitions.iter().enumerate() {
        for &(j, p) in row {
            if p > 0.0 {
                reverse[j].push(i);
            }
        }
    }
    let mut reaches = vec![false; n];
    reaches[absorbing] = true;
    let mut stack = vec![absorbing];
    while let Some(j) = stack.pop() {
        for &i in &reverse[j] {
            if !reaches[i] {
                reaches[i] = true;
                stack.push(i);
            }
        }
    }
    let mut seen = vec![false; n];
    seen[chain.start] = true;
    let mut stack = vec![chain.start];
    while let Some(i) = stack.pop() {
        if !reaches[i] {
            return false;
        }
        for &(j, p) in &chain.transitions[i] {
            if p > 0.0 && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    true
}

/// Mean and second moment of the absorption time from the fundamental
/// matrix `N = (I - Q)^-1`: `t = N 1` and `E[T^2] = (2N - I) t`. The
/// completion-time distribution comes from iterating the chain.
pub fn absorption_stats(chain: &PurificationChain) -> Result<PulseStats> {
    let final_fidelity = chain.fidelity_at_level.last().copied().unwrap_or(f64::NAN);
    let absorbing = chain.absorbing();
    if chain.start == absorbing {
        return Ok(PulseStats {
            mean: 0.0,
            rms: 0.0,
            pdf: vec![1.0],
            final_fidelity,
        });
    }
    if !can_absorb(chain) {
        return Err(Error::NoAbsorptionPath);
    }

    let n = chain.transient_count();
    let mut a = DMatrix::<f64>::identity(n, n);
    for (i, row) in chain.transitions[..n].iter().enumerate() {
        for &(j, p) in row {
            if j < n {
                a[(i, j)] -= p;
            }
        }
    }
    let lu = a.lu();
    let t = lu
        .solve(&DVector::from_element(n, 1.0))
        .ok_or(Error::NoAbsorptionPath)?;
    let y = lu.solve(&t).ok_or(Error::NoAbsorptionPath)?;
    let mean = t[chain.start];
    let second = 2.0 * y[chain.start] - mean;
    if !(mean.is_finite() && second.is_finite() && mean >= 0.0) {
        return Err(Error::NoAbsorptionPath);
    }

    Ok(PulseStats {
        mean,
        rms: second.max(0.0).sqrt(),
        pdf: completion_pdf(chain),
        final_fidelity,
    })
}

fn completion_pdf(chain: &PurificationChain) -> Vec<f64> {
    let n = chain.transient_count();
    let absorbing = chain.absorbing();
    let mut pdf = vec![0.0];
    let mut dist = vec![0.0; n];
    dist[chain.start] = 1.0;
    let mut next = vec![0.0; n];
    let mut done = 0.0;
    for _ in 0..chain.pulse_index_cap {
        next.iter_mut().for_each(|x| *x = 0.0);
        let mut absorbed = 0.0;
        for (i, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for &(j, p) in &chain.transitions[i] {
                if j == absorbing {
                    absorbed += mass * p;
                } else {
                    next[j] += mass * p;
                }
            }
        }
        std::mem::swap(&mut dist, &mut next);
        pdf.push(absorbed);
        done += absorbed;
        if 1.0 - done < PDF_TAIL {
            break;
        }
    }
    pdf
}
