//! Hill-climbing phase stabilisation of the interferometer.
//!
//! Each feedback period the controller probes the correlation at its current
//! correction `φ` and at `φ ± gain`, then keeps whichever setting correlates
//! best. The correlation estimator is supplied by the caller; the controller
//! never observes the drifting phase directly.

use super::DriftModel;
use crate::error::{Error, Result};

/// Piecewise-constant phase correction, one value per feedback period.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSchedule {
    period_s: f64,
    corrections: Vec<f64>,
    lock_quality: Vec<f64>,
    degraded: bool,
}

impl PhaseSchedule {
    /// A schedule that applies no correction at all.
    pub fn constant(period_s: f64, periods: usize) -> Self {
        Self {
            period_s,
            corrections: vec![0.0; periods.max(1)],
            lock_quality: vec![1.0; periods.max(1)],
            degraded: false,
        }
    }

    pub fn period_s(&self) -> f64 {
        self.period_s
    }

    pub fn corrections(&self) -> &[f64] {
        &self.corrections
    }

    /// `|correlation|` reported by the estimator after each period's update.
    pub fn lock_quality(&self) -> &[f64] {
        &self.lock_quality
    }

    pub fn mean_lock_quality(&self) -> f64 {
        self.lock_quality.iter().sum::<f64>() / self.lock_quality.len() as f64
    }

    /// Set when the drift outruns the controller's step budget or the lock
    /// quality falls outside the configured tolerance.
    pub fn is_degraded(&self) -> bool {
        self.degraded
    }

    pub fn correction_at(&self, t: f64) -> f64 {
        let k = if t <= 0.0 {
            0
        } else {
            ((t / self.period_s) as usize).min(self.corrections.len() - 1)
        };
        self.corrections[k]
    }
}

/// Runs the controller over `duration_s`.
///
/// `estimator(t, correction)` returns the normalised correlation (in
/// `[-1, 1]`) that would be measured at time `t` with the given correction
/// applied. `tolerance` bounds the acceptable mean `1 − |correlation|`.
pub fn stabilize_phase<F>(
    dm: &DriftModel,
    duration_s: f64,
    tolerance: f64,
    mut estimator: F,
) -> Result<PhaseSchedule>
where
    F: FnMut(f64, f64) -> f64,
{
    if !(dm.feedback_period_s > 0.0) {
        return Err(Error::Argument("feedback period must be positive".into()));
    }
    if !(duration_s >= 0.0 && duration_s.is_finite()) {
        return Err(Error::Argument(format!("invalid duration {duration_s}")));
    }
    let periods = ((duration_s / dm.feedback_period_s).ceil() as usize).max(1);
    let step = dm.feedback_gain;

    let mut phi = 0.0;
    let mut corrections = Vec::with_capacity(periods);
    let mut lock_quality = Vec::with_capacity(periods);
    for k in 0..periods {
        let t = k as f64 * dm.feedback_period_s;
        if k > 0 && step > 0.0 {
            let stay = estimator(t, phi);
            let up = estimator(t, phi + step);
            let down = estimator(t, phi - step);
            if up > stay && up >= down {
                phi += step;
            } else if down > stay {
                phi -= step;
            }
        }
        corrections.push(phi);
        lock_quality.push(estimator(t, phi).abs());
    }

    let budget_exceeded = dm.drift_per_period() > step;
    let mean = lock_quality.iter().sum::<f64>() / periods as f64;
    Ok(PhaseSchedule {
        period_s: dm.feedback_period_s,
        corrections,
        lock_quality,
        degraded: budget_exceeded || mean < 1.0 - tolerance,
    })
}
