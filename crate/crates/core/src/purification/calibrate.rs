//! Fit base-pair model constants to known pulse costs.
//!
//! The mean pulse count is piecewise smooth in the model constants, with
//! jumps wherever an extra purification level becomes necessary, so the fit
//! is a coarse grid scan followed by a compass search around the best
//! grid points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::chain::{absorption_stats, build_markov_chain};
use super::model::{BasePairModel, ModelParams};
use super::protocol::FidelityLadder;
use super::PurificationPolicy;

/// A known (loss, mean pulses) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub loss_db: f64,
    pub mean_pulses: f64,
}

/// Which constants are free. `kappa` is always fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitSet {
    pub gamma: bool,
    pub p_e: bool,
    pub eps_local: bool,
}

impl FitSet {
    pub const KAPPA_ONLY: Self = Self {
        gamma: false,
        p_e: false,
        eps_local: false,
    };
}

impl Default for FitSet {
    fn default() -> Self {
        Self {
            gamma: true,
            p_e: true,
            eps_local: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSpec {
    pub anchors: Vec<Anchor>,
    pub f_target: f64,
    pub eps_local: f64,
    pub policy: PurificationPolicy,
    /// Values of the constants that are not fitted.
    pub start: ModelParams,
    pub fit: FitSet,
    /// Purification rounds each anchor must need. The anchors are costs of
    /// purified connections, so the default is 1.
    pub min_levels: usize,
}

impl CalibrationSpec {
    pub fn new(anchors: Vec<Anchor>, f_target: f64, eps_local: f64) -> Self {
        Self {
            anchors,
            f_target,
            eps_local,
            policy: PurificationPolicy::default(),
            start: ModelParams::default(),
            fit: FitSet::default(),
            min_levels: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub loss_db: f64,
    pub target: f64,
    /// `None` when the fitted model cannot reach the target fidelity here.
    pub fitted: Option<f64>,
    /// `fitted / target - 1`.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub kappa: f64,
    pub gamma: f64,
    pub p_e: f64,
    pub eps_local: f64,
    /// Sum of squared relative errors.
    pub cost: f64,
    pub residuals: Vec<Residual>,
}

impl Calibration {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            kappa: self.kappa,
            gamma: self.gamma,
            p_e: self.p_e,
        }
    }

    pub fn model(&self) -> Result<BasePairModel> {
        BasePairModel::new(self.params(), self.eps_local)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("calibration serializes")
    }
}

/// Free coordinates and their bounds, in search space.
#[derive(Debug, Clone, Copy)]
enum Axis {
    LogKappa,
    Gamma,
    LogHerald,
    LogEps,
}

impl Axis {
    fn bounds(self) -> (f64, f64) {
        match self {
            Axis::LogKappa => (1e-4f64.ln(), 1e3f64.ln()),
            Axis::Gamma => (0.05, 1.5),
            Axis::LogHerald => (1e-3f64.ln(), 0.0),
            Axis::LogEps => (1e-6f64.ln(), 1e-2f64.ln()),
        }
    }

    fn grid_points(self) -> usize {
        match self {
            Axis::LogKappa => 36,
            Axis::Gamma => 15,
            Axis::LogHerald => 13,
            Axis::LogEps => 9,
        }
    }
}

struct Problem<'a> {
    spec: &'a CalibrationSpec,
    axes: Vec<Axis>,
}

impl Problem<'_> {
    fn decode(&self, x: &[f64]) -> (ModelParams, f64) {
        let mut params = self.spec.start;
        let mut eps = self.spec.eps_local;
        for (axis, &v) in self.axes.iter().zip(x) {
            match axis {
                Axis::LogKappa => params.kappa = v.exp(),
                Axis::Gamma => params.gamma = v,
                Axis::LogHerald => params.p_e = v.exp().min(1.0),
                Axis::LogEps => eps = v.exp(),
            }
        }
        (params, eps)
    }

    fn clamp(&self, x: &mut [f64]) {
        for (axis, v) in self.axes.iter().zip(x.iter_mut()) {
            let (lo, hi) = axis.bounds();
            *v = v.clamp(lo, hi);
        }
    }

    /// Squared relative error, with far-off points scored by a cheap lower
    /// bound on the mean instead of a full chain solve.
    fn cost(&self, x: &[f64]) -> f64 {
        let (params, eps) = self.decode(x);
        let Ok(model) = BasePairModel::new(params, eps) else {
            return f64::INFINITY;
        };
        let mut total = 0.0;
        for a in &self.spec.anchors {
            let Ok(base) = model.base_pair(a.loss_db) else {
                return f64::INFINITY;
            };
            let Ok(ladder) = FidelityLadder::climb(
                base.f0,
                eps,
                self.spec.f_target,
                self.spec.policy.max_level,
            ) else {
                return f64::INFINITY;
            };
            if ladder.levels() < self.spec.min_levels {
                return f64::INFINITY;
            }
            // Completing level L needs 2^L raw pairs at 1/p_e pulses each.
            let lower = 2f64.powi(ladder.levels() as i32) / base.p_e;
            let mean = if lower > 20.0 * a.mean_pulses {
                lower
            } else {
                match chain_mean(&self.spec.policy, &model, a.loss_db, self.spec.f_target) {
                    Some(m) => m,
                    None => return f64::INFINITY,
                }
            };
            total += (mean / a.mean_pulses - 1.0).powi(2);
        }
        total
    }
}

fn chain_mean(
    policy: &PurificationPolicy,
    model: &BasePairModel,
    loss_db: f64,
    f_target: f64,
) -> Option<f64> {
    let policy = PurificationPolicy {
        pulse_cap: 0,
        ..*policy
    };
    let chain = build_markov_chain(&policy, model, loss_db, f_target).ok()?;
    absorption_stats(&chain).ok().map(|s| s.mean)
}

fn grid(axes: &[Axis]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        let (lo, hi) = axis.bounds();
        let k = axis.grid_points();
        let values: Vec<f64> = (0..k)
            .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
            .collect();
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
}

fn compass_search(problem: &Problem, mut x: Vec<f64>, mut fx: f64) -> (Vec<f64>, f64) {
    let mut step = 0.25;
    while step > 1e-10 && fx > 1e-20 {
        let mut improved = false;
        for d in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[d] += sign * step;
                problem.clamp(&mut y);
                let fy = problem.cost(&y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

/// Fit the model constants selected by `spec.fit` to the anchors.
pub fn calibrate(spec: &CalibrationSpec) -> Result<Calibration> {
    if spec.anchors.is_empty() {
        return Err(Error::Calibration("no anchors given".into()));
    }
    if spec.anchors.iter().any(|a| !(a.mean_pulses > 0.0) || a.loss_db < 0.0) {
        return Err(Error::Calibration(
            "anchors need non-negative loss and positive pulse counts".into(),
        ));
    }
    spec.policy.check()?;

    let mut axes = vec![Axis::LogKappa];
    if spec.fit.gamma {
        axes.push(Axis::Gamma);
    }
    if spec.fit.p_e {
        axes.push(Axis::LogHerald);
    }
    if spec.fit.eps_local {
        axes.push(Axis::LogEps);
    }
    let problem = Problem { spec, axes };

    let mut scored: Vec<(f64, Vec<f64>)> = grid(&problem.axes)
        .into_par_iter()
        .map(|x| (problem.cost(&x), x))
        .collect();
    scored.retain(|(c, _)| c.is_finite());
    if scored.is_empty() {
        return Err(Error::Calibration(format!(
            "target fidelity {} is unreachable for every model in the search bracket",
            spec.f_target
        )));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (best_x, _) = scored
        .into_iter()
        .take(6)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, x)| compass_search(&problem, x, c))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one start point");

    let (params, eps_local) = problem.decode(&best_x);
    let model = BasePairModel::new(params, eps_local)?;
    let residuals: Vec<Residual> = spec
        .anchors
        .iter()
        .map(|a| {
            let fitted = chain_mean(&spec.policy, &model, a.loss_db, spec.f_target);
            Residual {
                loss_db: a.loss_db,
                target: a.mean_pulses,
                fitted,
                relative: fitted.map_or(f64::INFINITY, |m| m / a.mean_pulses - 1.0),
            }
        })
        .collect();
    let cost = residuals.iter().map(|r| r.relative.powi(2)).sum();

    Ok(Calibration {
        kappa: params.kappa,
        gamma: params.gamma,
        p_e: params.p_e,
        eps_local,
        cost,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_anchor_list_fails() {
        let spec = CalibrationSpec::new(vec![], 0.995, 0.0002);
        assert!(matches!(calibrate(&spec), Err(Error::Calibration(_))));
    }

    #[test]
    fn exact_single_anchor_has_zero_residual() {
        let model = BasePairModel::new(ModelParams::default(), 0.0002).unwrap();
        let truth = chain_mean(&PurificationPolicy::default(), &model, 0.25, 0.995).unwrap();
        let mut spec = CalibrationSpec::new(
            vec![Anchor { loss_db: 0.25, mean_pulses: truth }],
            0.995,
            0.0002,
        );
        spec.fit = FitSet::KAPPA_ONLY;
        spec.min_levels = 0;
        let cal = calibrate(&spec).unwrap();
        assert!(cal.residuals[0].relative.abs() < 1e-6, "{:?}", cal.residuals);
    }

    #[test]
    fn unreachable_target_fails() {
        // Lossy pairs never reach fidelity 1 once local gates add noise.
        let spec = CalibrationSpec::new(
            vec![Anchor { loss_db: 0.1, mean_pulses: 100.0 }],
            1.0,
            0.001,
        );
        assert!(matches!(calibrate(&spec), Err(Error::Calibration(_))));
    }
}
