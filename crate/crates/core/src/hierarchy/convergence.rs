use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::SimulationConfig;

use super::{estimate_group_velocity, simulate, GroupVelocityEstimate};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceOptions {
    /// Largest allowed change between successive orders, in paper units.
    pub tolerance: f64,
    /// Number of trailing orders that must stay within `tolerance`.
    pub window: usize,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            tolerance: 0.01,
            window: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    /// One entry per scheduled order; the error is kept when no forward pulse
    /// could be tracked.
    pub curve: Vec<(usize, Result<GroupVelocityEstimate, String>)>,
    /// Mean over the trailing window, when it is flat.
    pub plateau: Option<f64>,
    pub converged: bool,
}

/// Group velocity against truncation order, with all runs sharing `base`
/// except for `ell`.
pub fn converge_in_order(
    base: &SimulationConfig,
    schedule: &[usize],
    options: &ConvergenceOptions,
) -> Result<ConvergenceReport> {
    converge_in_order_with(schedule, options, |ell| {
        let mut cfg = base.clone();
        cfg.ell = ell;
        cfg.validate()?;
        Ok(cfg)
    })
}

/// Like [`converge_in_order`] with a per-order configuration, e.g. to size
/// the domain by the expected pulse speed. Orders run concurrently.
pub fn converge_in_order_with<F>(
    schedule: &[usize],
    options: &ConvergenceOptions,
    configure: F,
) -> Result<ConvergenceReport>
where
    F: Fn(usize) -> Result<SimulationConfig> + Sync,
{
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("ell_schedule", "must be strictly increasing"));
    }
    if options.window < 2 || options.tolerance.is_nan() || options.tolerance <= 0.0 {
        return Err(Error::invalid(
            "convergence",
            "window must be >= 2 and tolerance > 0",
        ));
    }
    let runs: Vec<Result<(usize, Result<GroupVelocityEstimate, String>)>> = schedule
        .par_iter()
        .map(|&ell| {
            let traj = simulate(&configure(ell)?)?;
            Ok(match estimate_group_velocity(&traj) {
                Ok(v) => (ell, Ok(v)),
                Err(e @ Error::NoForwardPulse(_)) => (ell, Err(e.to_string())),
                Err(e) => return Err(e),
            })
        })
        .collect();
    let curve = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let plateau = plateau(&curve, options);
    Ok(ConvergenceReport {
        converged: plateau.is_some(),
        plateau,
        curve,
    })
}

fn plateau(
    curve: &[(usize, Result<GroupVelocityEstimate, String>)],
    options: &ConvergenceOptions,
) -> Option<f64> {
    if curve.len() < options.window {
        return None;
    }
    let tail: Option<Vec<f64>> = curve[curve.len() - options.window..]
        .iter()
        .map(|(_, v)| v.as_ref().ok().map(|v| v.value))
        .collect();
    let tail = tail?;
    let flat = tail
        .windows(2)
        .all(|w| (w[1] - w[0]).abs() < options.tolerance);
    flat.then(|| tail.iter().sum::<f64>() / tail.len() as f64)
}
