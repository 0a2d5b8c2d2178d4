use crate::error::{Error, Result};
use crate::model::{vg_to_paper_units, FieldState, Grid};

use super::Trajectory;

/// Local maxima weaker than this fraction of the snapshot maximum are not
/// counted as pulses. Split pulses are of equal height, while the weak side
/// lobes shed by the light front in the first time unit reach about 8%.
pub const MAXIMUM_FLOOR: f64 = 0.5;

/// `|E^+ + E^-|² + |E^+ - E^-|²` pointwise.
pub fn intensity(state: &FieldState) -> Vec<f64> {
    state
        .ep_plus
        .iter()
        .zip(&state.ep_minus)
        .map(|(&p, &m)| (p + m).norm_sqr() + (p - m).norm_sqr())
        .collect()
}

/// Light strength `∫ (|E_s|² + |E_d|²) dz` over `[-3 L0, 3 L0]`.
pub fn remaining_strength(state: &FieldState, l0: f64, grid: &Grid) -> Result<f64> {
    if state.n_z() != grid.n_z() {
        return Err(Error::ShapeMismatch(format!(
            "state has {} points, grid has {}",
            state.n_z(),
            grid.n_z()
        )));
    }
    window_integral(&intensity(state), grid, l0)
}

/// Trapezoidal integral of `values` over `[-3 L0, 3 L0]`. Window edges that
/// fall inside a cell are handled by linear interpolation.
pub fn window_integral(values: &[f64], grid: &Grid, l0: f64) -> Result<f64> {
    let (lo, hi) = (-3.0 * l0, 3.0 * l0);
    if l0.is_nan() || l0 <= 0.0 || lo < grid.z_min() || hi > grid.z_max() {
        return Err(Error::WindowOutsideDomain {
            lo,
            hi,
            z_min: grid.z_min(),
            z_max: grid.z_max(),
        });
    }
    let mut total = 0.0;
    for j in 0..values.len() - 1 {
        let (z0, z1) = (grid.z(j), grid.z(j + 1));
        let a = z0.max(lo);
        let b = z1.min(hi);
        if b <= a {
            continue;
        }
        let at = |z: f64| values[j] + (values[j + 1] - values[j]) * (z - z0) / (z1 - z0);
        total += 0.5 * (b - a) * (at(a) + at(b));
    }
    Ok(total)
}

/// Location of an intensity maximum on one half-line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    /// Refined position.
    pub z: f64,
    pub index: usize,
    pub value: f64,
    /// False when the maximum sits at either end of the half-line, i.e. the
    /// profile is monotone there and no separate pulse has formed.
    pub interior: bool,
}

fn refine(values: &[f64], grid: &Grid, j: usize, interior: bool) -> Peak {
    let mut z = grid.z(j);
    if interior {
        let (ym, y0, yp) = (values[j - 1], values[j], values[j + 1]);
        let curvature = ym - 2.0 * y0 + yp;
        if curvature < 0.0 {
            let offset = (0.5 * (ym - yp) / curvature).clamp(-0.5, 0.5);
            z += offset * grid.dz();
        }
    }
    Peak {
        z,
        index: j,
        value: values[j],
        interior,
    }
}

/// Argmax over `z > 0` with three-point parabolic refinement.
pub fn find_forward_peak(values: &[f64], grid: &Grid) -> Option<Peak> {
    let first = grid.center() + 1;
    let last = values.len() - 1;
    let j = argmax(values, first..=last)?;
    Some(refine(values, grid, j, j > first && j < last))
}

/// Argmax over `z < 0`, mirror of [`find_forward_peak`].
pub fn find_backward_peak(values: &[f64], grid: &Grid) -> Option<Peak> {
    let last = grid.center() - 1;
    let j = argmax(values, 0..=last)?;
    Some(refine(values, grid, j, j > 0 && j < last))
}

/// First index of the largest positive value; `None` for an empty profile.
fn argmax(values: &[f64], range: std::ops::RangeInclusive<usize>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for j in range {
        let v = values[j];
        if v > best.map_or(0.0, |b| b.1) {
            best = Some((j, v));
        }
    }
    best.map(|b| b.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupVelocityEstimate {
    /// In units of `c Ω_c² / g²N`.
    pub value: f64,
    pub stderr: f64,
    /// In `l_abs Γ`.
    pub raw_value: f64,
    pub fit_window: (f64, f64),
    pub n_points: usize,
}

/// Least-squares speed of the forward pulse over the second half of the run.
///
/// Returns [`Error::NoForwardPulse`] when any snapshot in the fit window lacks
/// an interior forward maximum or the maxima fail to advance.
pub fn estimate_group_velocity(traj: &Trajectory) -> Result<GroupVelocityEstimate> {
    let t_end = *traj
        .times
        .last()
        .ok_or_else(|| Error::NoForwardPulse("empty trajectory".into()))?;
    let t_start = 0.5 * t_end;
    let mut ts = Vec::new();
    let mut zs = Vec::new();
    for (&t, peak) in traj.times.iter().zip(&traj.forward_peaks) {
        if t < t_start || t <= 0.0 {
            continue;
        }
        match peak {
            Some(p) if p.interior => {
                ts.push(t);
                zs.push(p.z);
            }
            _ => {
                return Err(Error::NoForwardPulse(format!(
                    "no interior forward maximum at t = {t}"
                )))
            }
        }
    }
    if ts.len() < 3 {
        return Err(Error::NoForwardPulse(format!(
            "only {} snapshots in the fit window",
            ts.len()
        )));
    }
    if zs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NoForwardPulse(
            "forward maximum does not advance monotonically".into(),
        ));
    }
    let (slope, stderr) = linear_fit(&ts, &zs);
    let params = &traj.config.params;
    Ok(GroupVelocityEstimate {
        value: vg_to_paper_units(slope, params),
        stderr: vg_to_paper_units(stderr, params),
        raw_value: slope,
        fit_window: (ts[0], ts[ts.len() - 1]),
        n_points: ts.len(),
    })
}

/// Ordinary least squares slope and its standard error.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let stderr = if x.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, stderr)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Behavior {
    Stationary,
    Splitting,
    Undecided,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BehaviorClass {
    pub kind: Behavior,
    /// Separation of the two largest maxima in the final snapshot.
    pub evidence: f64,
    pub max_separation: f64,
    pub threshold: f64,
    /// First snapshot time at which the separation exceeded the threshold.
    pub onset: Option<f64>,
}

/// Distance between the two largest local maxima above
/// [`MAXIMUM_FLOOR`] of the profile maximum; zero with fewer than two.
pub fn peak_separation(values: &[f64], grid: &Grid) -> f64 {
    let top = values.iter().cloned().fold(0.0, f64::max);
    if top <= 0.0 {
        return 0.0;
    }
    let floor = MAXIMUM_FLOOR * top;
    let mut first: Option<(usize, f64)> = None;
    let mut second: Option<(usize, f64)> = None;
    for j in 1..values.len() - 1 {
        let v = values[j];
        if v < floor || v <= values[j - 1] || v < values[j + 1] {
            continue;
        }
        if first.is_none_or(|f| v > f.1) {
            second = first;
            first = Some((j, v));
        } else if second.is_none_or(|s| v > s.1) {
            second = Some((j, v));
        }
    }
    match (first, second) {
        (Some(a), Some(b)) => (grid.z(a.0) - grid.z(b.0)).abs(),
        _ => 0.0,
    }
}

/// Splitting if the two dominant maxima ever separate by more than
/// `threshold` (default `2 L0`); Stationary if they never do and light
/// remains in the window at the end; Undecided otherwise.
pub fn classify_behavior(traj: &Trajectory, threshold: Option<f64>) -> BehaviorClass {
    let grid = &traj.config.grid;
    let threshold = threshold.unwrap_or(2.0 * traj.config.l0);
    let mut onset = None;
    let mut max_separation: f64 = 0.0;
    let mut evidence = 0.0;
    for (&t, map) in traj.times.iter().zip(&traj.intensity_maps) {
        let sep = peak_separation(map, grid);
        if sep > threshold && onset.is_none() {
            onset = Some(t);
        }
        max_separation = max_separation.max(sep);
        evidence = sep;
    }
    let final_strength = traj.strength_series.last().copied().unwrap_or(0.0);
    let kind = if onset.is_some() {
        Behavior::Splitting
    } else if final_strength > 0.0 {
        Behavior::Stationary
    } else {
        Behavior::Undecided
    };
    BehaviorClass {
        kind,
        evidence,
        max_separation,
        threshold,
        onset,
    }
}
