use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

use super::chain::{absorption_stats, build_markov_chain};
use super::model::BasePairModel;
use super::PurificationPolicy;

pub const CURVE_CSV_HEADER: &str = "loss_db,mean_pulses,rms_pulses,final_fidelity";

/// One loss point of a pulse-cost curve. Saturated points carry the
/// saturated fidelity and no pulse statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub loss_db: f64,
    pub mean: Option<f64>,
    pub rms: Option<f64>,
    pub final_fidelity: f64,
    pub saturated: bool,
}

/// Mean/RMS pulses and final fidelity across a loss grid.
pub fn pulses_vs_loss_curve(
    loss_grid: &[f64],
    model: &BasePairModel,
    policy: &PurificationPolicy,
    f_target: f64,
) -> Result<Vec<CurvePoint>> {
    if loss_grid.is_empty() {
        return Err(Error::Spec("loss grid is empty".into()));
    }
    let policy = PurificationPolicy {
        pulse_cap: 0,
        ..*policy
    };
    loss_grid
        .iter()
        .map(|&loss_db| {
            let chain = match build_markov_chain(&policy, model, loss_db, f_target) {
                Ok(c) => c,
                Err(Error::Saturation { saturated, .. }) => {
                    return Ok(CurvePoint {
                        loss_db,
                        mean: None,
                        rms: None,
                        final_fidelity: saturated,
                        saturated: true,
                    })
                }
                Err(e) => return Err(e),
            };
            let stats = absorption_stats(&chain)?;
            Ok(CurvePoint {
                loss_db,
                mean: Some(stats.mean),
                rms: Some(stats.rms),
                final_fidelity: stats.final_fidelity,
                saturated: false,
            })
        })
        .collect()
}

/// CSV with [`CURVE_CSV_HEADER`]; saturated points leave the pulse columns
/// empty.
pub fn curve_to_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from(CURVE_CSV_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.loss_db,
            opt(p.mean),
            opt(p.rms),
            p.final_fidelity
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::model::ModelParams;
    use super::*;

    #[test]
    fn empty_grid_rejected() {
        let m = BasePairModel::new(ModelParams::default(), 0.0002).unwrap();
        assert!(pulses_vs_loss_curve(&[], &m, &PurificationPolicy::default(), 0.995).is_err());
    }

    #[test]
    fn csv_layout() {
        let pts = [
            CurvePoint { loss_db: 0.1, mean: Some(2.5), rms: Some(3.0), final_fidelity: 0.996, saturated: false },
            CurvePoint { loss_db: 0.2, mean: None, rms: None, final_fidelity: 0.99, saturated: true },
        ];
        assert_eq!(
            curve_to_csv(&pts),
            "loss_db,mean_pulses,rms_pulses,final_fidelity\n0.1,2.5,3,0.996\n0.2,,,0.99\n"
        );
    }
}
