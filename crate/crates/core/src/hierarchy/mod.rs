//! Time-domain integration of the truncated mode hierarchy and the
//! diagnostics derived from it.

mod convergence;
mod diagnostics;
mod kernel;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{decay_table, gaussian_initial_state, FieldState, Grid, SimulationConfig};

pub use convergence::{
    converge_in_order, converge_in_order_with, ConvergenceOptions, ConvergenceReport,
};
pub use diagnostics::{
    classify_behavior, estimate_group_velocity, find_backward_peak, find_forward_peak, intensity,
    peak_separation, remaining_strength, window_integral, Behavior, BehaviorClass,
    GroupVelocityEstimate, Peak,
    MAXIMUM_FLOOR,
};
pub use kernel::{Integrator, Symmetry};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Local part of the equations of motion.
///
/// For the atomic harmonics this is the full time derivative. For the probe
/// envelopes only the source `i g√N P_{±1}` is returned; advection is left to
/// the stepper.
pub fn rhs(state: &FieldState, config: &SimulationConfig) -> Result<FieldState> {
    let ell = config.ell;
    let n_z = config.grid.n_z();
    state.check_layout(ell, n_z)?;
    let params = &config.params;
    let rates = decay_table(&config.decay, 2 * ell, params)?;
    let omega = params.omega_c();
    let g = params.coupling();
    let zero = Complex64::new(0.0, 0.0);

    let mut d = FieldState::zeros(ell, n_z);
    d.time = state.time;
    let np = 2 * ell;
    for m in 0..np {
        let label = 2 * m as i64 - 2 * ell as i64 + 1;
        let kappa = params.gamma() + rates[label.unsigned_abs() as usize];
        let probe = match label {
            1 => Some(&state.ep_plus),
            -1 => Some(&state.ep_minus),
            _ => None,
        };
        for j in 0..n_z {
            let e = probe.map_or(zero, |f| f[j]);
            d.p[m][j] = -kappa * state.p[m][j]
                + I * g * e
                + I * omega * (state.s[m][j] + state.s[m + 1][j]);
        }
    }
    for m in 0..=np {
        let label = 2 * m as i64 - 2 * ell as i64;
        let gamma = rates[label.unsigned_abs() as usize];
        for j in 0..n_z {
            let below = if m > 0 { state.p[m - 1][j] } else { zero };
            let above = if m < np { state.p[m][j] } else { zero };
            d.s[m][j] = -gamma * state.s[m][j] + I * omega * (below + above);
        }
    }
    if let (Some(p1), Some(pm1)) = (state.optical(1), state.optical(-1)) {
        for j in 0..n_z {
            d.ep_plus[j] = I * g * p1[j];
            d.ep_minus[j] = I * g * pm1[j];
        }
    }
    Ok(d)
}

/// Advances `state` by one time step of `config.grid`.
pub fn step(state: &FieldState, config: &SimulationConfig) -> Result<FieldState> {
    let mut it = Integrator::new(config, state)?;
    it.advance(1)?;
    Ok(it.state())
}

/// Recorded diagnostics of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub config: SimulationConfig,
    pub positions: Vec<f64>,
    pub times: Vec<f64>,
    /// `|E_s|² + |E_d|²` per snapshot.
    pub intensity_maps: Vec<Vec<f64>>,
    /// Light strength inside `[-3 L0, 3 L0]` per snapshot.
    pub strength_series: Vec<f64>,
    pub forward_peaks: Vec<Option<Peak>>,
    pub backward_peaks: Vec<Option<Peak>>,
}

impl Trajectory {
    pub fn new(config: SimulationConfig) -> Self {
        Self {
            positions: config.grid.positions(),
            config,
            times: Vec::new(),
            intensity_maps: Vec::new(),
            strength_series: Vec::new(),
            forward_peaks: Vec::new(),
            backward_peaks: Vec::new(),
        }
    }

    /// Appends a snapshot; times must be strictly increasing.
    pub fn push(&mut self, time: f64, map: Vec<f64>) -> Result<()> {
        let grid = &self.config.grid;
        if map.len() != grid.n_z() {
            return Err(Error::ShapeMismatch(format!(
                "snapshot has {} points, grid has {}",
                map.len(),
                grid.n_z()
            )));
        }
        if let Some(&last) = self.times.last() {
            if time <= last {
                return Err(Error::invalid(
                    "time",
                    format!("snapshot time {time} does not follow {last}"),
                ));
            }
        }
        self.strength_series
            .push(window_integral(&map, grid, self.config.l0)?);
        self.forward_peaks.push(find_forward_peak(&map, grid));
        self.backward_peaks.push(find_backward_peak(&map, grid));
        self.times.push(time);
        self.intensity_maps.push(map);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn forward_peak_positions(&self) -> Vec<Option<f64>> {
        self.forward_peaks.iter().map(|p| p.map(|p| p.z)).collect()
    }

    pub fn backward_peak_positions(&self) -> Vec<Option<f64>> {
        self.backward_peaks.iter().map(|p| p.map(|p| p.z)).collect()
    }
}

/// Retrieval from the stored Gaussian spin wave.
pub fn simulate(config: &SimulationConfig) -> Result<Trajectory> {
    let initial = gaussian_initial_state(config)?;
    simulate_from(config, &initial)
}

/// Runs from arbitrary initial data, recording a snapshot at the start,
/// every `snapshot_stride` steps, and at the final time.
pub fn simulate_from(config: &SimulationConfig, initial: &FieldState) -> Result<Trajectory> {
    let mut it = Integrator::new(config, initial)?;
    let mut traj = Trajectory::new(config.clone());
    traj.push(it.time(), it.intensity())?;
    let grid: &Grid = &config.grid;
    let mut remaining = grid.n_steps();
    while remaining > 0 {
        let chunk = grid.snapshot_stride().min(remaining);
        it.advance(chunk)?;
        remaining -= chunk;
        traj.push(it.time(), it.intensity())?;
    }
    Ok(traj)
}
