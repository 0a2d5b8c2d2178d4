//! Units, physical parameters, decay models, grids and the initial stored
//! spin wave.
//!
//! Simulation units: time in `1/Γ`, length in the absorption length
//! `l_abs = Γ c / g²N`. With `Γ = 1` and `l_abs = 1` the vacuum light speed is
//! numerically equal to `g²N`.

use num_complex::Complex64;

use crate::analytic;
use crate::error::{Error, Result};

/// Optical decay, control Rabi frequency and collective coupling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    gamma: f64,
    omega_c: f64,
    g2n: f64,
    l_abs: f64,
}

impl PhysicalParams {
    /// `Γ`, `Ω_c` (units of Γ) and `g²N` (units of Γ²), with `l_abs = 1`.
    pub fn new(gamma: f64, omega_c: f64, g2n: f64) -> Result<Self> {
        Self::with_absorption_length(gamma, omega_c, g2n, 1.0)
    }

    pub fn with_absorption_length(gamma: f64, omega_c: f64, g2n: f64, l_abs: f64) -> Result<Self> {
        for (name, v) in [
            ("gamma", gamma),
            ("omega_c", omega_c),
            ("g2n", g2n),
            ("l_abs", l_abs),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(Self {
            gamma,
            omega_c,
            g2n,
            l_abs,
        })
    }

    /// `Γ = 1`, `Ω_c = 0.69 Γ`, `g²N = 138 Γ²`.
    pub fn paper() -> Self {
        Self {
            gamma: 1.0,
            omega_c: 0.69,
            g2n: 138.0,
            l_abs: 1.0,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn g2n(&self) -> f64 {
        self.g2n
    }

    /// Collective coupling `g√N`.
    pub fn coupling(&self) -> f64 {
        self.g2n.sqrt()
    }

    pub fn l_abs(&self) -> f64 {
        self.l_abs
    }

    /// Vacuum light speed in simulation units, `g²N l_abs / Γ`.
    pub fn c(&self) -> f64 {
        self.g2n * self.l_abs / self.gamma
    }

    /// Velocity unit `c Ω_c² / g²N` used to report group velocities.
    pub fn vg_unit(&self) -> f64 {
        self.c() * self.omega_c * self.omega_c / self.g2n
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::paper()
    }
}

/// Converts a velocity in `l_abs Γ` to units of `c Ω_c² / g²N`.
pub fn vg_to_paper_units(v: f64, params: &PhysicalParams) -> f64 {
    v / params.vg_unit()
}

/// Decay rule `γ_n` for the order-`n` spatial harmonic of the coherences.
#[derive(Clone, Debug, PartialEq)]
pub enum DecayModel {
    Zero,
    /// `γ_n = |n| a Γ`.
    ColdLinear { a: f64 },
    /// Atoms crossing one grating period: `γ_n = |n| |k_c v_s / 2π|`.
    LaserCooledEstimate { k_c: f64, v_s: f64 },
    /// Excitations with momentum `|n| ħ k_c` leaving a condensate of length `L`.
    BecEstimate { k_c: f64, hbar_over_m: f64, length: f64 },
    /// Explicit `γ_{|n|}`, indexed from `n = 0`; entry 0 must be 0.
    CustomTable(Vec<f64>),
}

impl DecayModel {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")))
            }
        };
        match self {
            DecayModel::Zero => Ok(()),
            DecayModel::ColdLinear { a } => nonneg("decay.a", *a),
            DecayModel::LaserCooledEstimate { k_c, v_s } => {
                if !k_c.is_finite() || !v_s.is_finite() {
                    return Err(Error::invalid("decay.k_c", "k_c and v_s must be finite"));
                }
                Ok(())
            }
            DecayModel::BecEstimate {
                k_c,
                hbar_over_m,
                length,
            } => {
                nonneg("decay.k_c", *k_c)?;
                nonneg("decay.hbar_over_m", *hbar_over_m)?;
                if !(length.is_finite() && *length > 0.0) {
                    return Err(Error::invalid("decay.length", "must be finite and > 0"));
                }
                Ok(())
            }
            DecayModel::CustomTable(table) => {
                match table.first() {
                    None => return Err(Error::invalid("decay.table", "table is empty")),
                    Some(&g0) if g0 != 0.0 => {
                        return Err(Error::invalid("decay.table", "gamma_0 must be 0"))
                    }
                    _ => {}
                }
                table.iter().try_for_each(|&g| nonneg("decay.table", g))
            }
        }
    }
}

/// `γ_n` for coherence order `n`, in the same rate units as `Γ`.
pub fn decay_rate(model: &DecayModel, n: i64, params: &PhysicalParams) -> Result<f64> {
    let order = n.unsigned_abs() as f64;
    let rate = match model {
        DecayModel::Zero => 0.0,
        DecayModel::ColdLinear { a } => order * a * params.gamma(),
        DecayModel::LaserCooledEstimate { k_c, v_s } => {
            order * (k_c * v_s / std::f64::consts::TAU).abs()
        }
        DecayModel::BecEstimate {
            k_c,
            hbar_over_m,
            length,
        } => order * k_c * hbar_over_m / length,
        DecayModel::CustomTable(table) => {
            let idx = n.unsigned_abs() as usize;
            *table.get(idx).ok_or(Error::DecayOrderOutOfRange {
                order: n,
                max: table.len().saturating_sub(1),
            })?
        }
    };
    Ok(rate)
}

/// Rates `γ_0 ..= γ_max` gathered once for the hot loops.
pub(crate) fn decay_table(
    model: &DecayModel,
    max_order: usize,
    params: &PhysicalParams,
) -> Result<Vec<f64>> {
    (0..=max_order as i64)
        .map(|n| decay_rate(model, n, params))
        .collect()
}

/// Uniform grid on `[-z_max, z_max]` and the time stepping.
///
/// `n_z` is always odd so that `z = 0` is a grid point and the grid is
/// exactly mirror symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    z_max: f64,
    n_z: usize,
    dz: f64,
    dt: f64,
    n_steps: usize,
    snapshot_stride: usize,
    total_time: f64,
}

/// Relative slack when converting a continuous request into a step count.
const ROUNDING_SLACK: f64 = 1e-9;

/// Courant numbers this close above 1 are rounding noise, not violations.
const COURANT_SLACK: f64 = 1e-12;

impl Grid {
    /// Resolves a grid from target spacings. The spacing is shrunk so that an
    /// even number of cells spans the domain, and `dt` is shrunk so that an
    /// integer number of steps reaches `total_time` exactly.
    pub fn resolve(
        params: &PhysicalParams,
        z_max: f64,
        dz_target: f64,
        cfl: f64,
        total_time: f64,
        snapshot_stride: usize,
    ) -> Result<Self> {
        positive("z_max", z_max)?;
        positive("dz", dz_target)?;
        positive("cfl", cfl)?;
        positive("total_time", total_time)?;
        if cfl > 1.0 + COURANT_SLACK {
            return Err(Error::Cfl { courant: cfl });
        }
        let cfl = cfl.min(1.0);
        let mut cells = ((2.0 * z_max / dz_target) * (1.0 - ROUNDING_SLACK)).ceil() as usize;
        cells = cells.max(2);
        if cells % 2 == 1 {
            cells += 1;
        }
        let dz = 2.0 * z_max / cells as f64;
        let dt_target = cfl * dz / params.c();
        let n_steps = ((total_time / dt_target) * (1.0 - ROUNDING_SLACK)).ceil().max(1.0) as usize;
        let dt = total_time / n_steps as f64;
        let mut grid = Self::new(params, z_max, cells + 1, dt, n_steps, snapshot_stride)?;
        grid.total_time = total_time;
        Ok(grid)
    }

    pub fn new(
        params: &PhysicalParams,
        z_max: f64,
        n_z: usize,
        dt: f64,
        n_steps: usize,
        snapshot_stride: usize,
    ) -> Result<Self> {
        positive("z_max", z_max)?;
        positive("dt", dt)?;
        if n_z < 3 || n_z.is_multiple_of(2) {
            return Err(Error::invalid("n_z", format!("must be odd and >= 3, got {n_z}")));
        }
        if snapshot_stride == 0 {
            return Err(Error::invalid("snapshot_stride", "must be >= 1"));
        }
        let dz = 2.0 * z_max / (n_z - 1) as f64;
        let grid = Self {
            z_max,
            n_z,
            dz,
            dt,
            n_steps,
            snapshot_stride,
            total_time: dt * n_steps as f64,
        };
        let courant = grid.courant(params);
        if courant > 1.0 + COURANT_SLACK {
            return Err(Error::Cfl { courant });
        }
        Ok(grid)
    }

    pub fn z_min(&self) -> f64 {
        -self.z_max
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn dz(&self) -> f64 {
        self.dz
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn snapshot_stride(&self) -> usize {
        self.snapshot_stride
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn courant(&self, params: &PhysicalParams) -> f64 {
        params.c() * self.dt / self.dz
    }

    /// Index of the `z = 0` point.
    pub fn center(&self) -> usize {
        (self.n_z - 1) / 2
    }

    /// Position of point `j`; `z(center - i) == -z(center + i)` exactly.
    pub fn z(&self, j: usize) -> f64 {
        (j as f64 - self.center() as f64) * self.dz
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_z).map(|j| self.z(j)).collect()
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

/// Conservative bound on the retrieved-pulse speed, used to size domains:
/// the `ℓ = 1` adiabatic speed (the fastest of the hierarchy) with 10% slack.
pub fn pulse_speed_bound(params: &PhysicalParams) -> f64 {
    let c0 = analytic::c0_exact(1, params).expect("ell = 1 is in the analytic domain");
    (1.1 * c0).min(params.c())
}

/// Distance the medium must extend beyond a retrieved pulse before its end
/// stops affecting the pulse speed. Without spin decay the slow pulse is
/// slowed down measurably when the boundary is within about 20 `l_abs`.
pub const BOUNDARY_MARGIN: f64 = 25.0;

/// Half-width keeping both pulses [`BOUNDARY_MARGIN`] absorption lengths
/// away from the boundaries up to `total_time`.
pub fn default_z_max(params: &PhysicalParams, l0: f64, total_time: f64) -> f64 {
    let reach = l0 + pulse_speed_bound(params) * total_time + BOUNDARY_MARGIN * params.l_abs();
    reach.max(3.0 * l0)
}

/// Everything needed to run one retrieval simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub params: PhysicalParams,
    pub decay: DecayModel,
    pub l0: f64,
    pub ell: usize,
    pub grid: Grid,
}

impl SimulationConfig {
    pub fn new(
        params: PhysicalParams,
        decay: DecayModel,
        l0: f64,
        ell: usize,
        grid: Grid,
    ) -> Result<Self> {
        let cfg = Self {
            params,
            decay,
            l0,
            ell,
            grid,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        positive("l0", self.l0)?;
        self.decay.validate()?;
        if self.grid.z_max() < 3.0 * self.l0 {
            return Err(Error::invalid(
                "z_max",
                format!(
                    "domain half-width {} is smaller than 3*l0 = {}",
                    self.grid.z_max(),
                    3.0 * self.l0
                ),
            ));
        }
        let courant = self.grid.courant(&self.params);
        if courant > 1.0 + COURANT_SLACK {
            return Err(Error::Cfl { courant });
        }
        // Every order present in the hierarchy must have a rate.
        decay_table(&self.decay, 2 * self.ell, &self.params)?;
        Ok(())
    }

    pub fn total_time(&self) -> f64 {
        self.grid.total_time()
    }

    /// Number of complex field arrays: both probe envelopes, `2ℓ+1` spin and
    /// `2ℓ` optical harmonics.
    pub fn field_count(&self) -> usize {
        4 * self.ell + 3
    }
}

/// Complex envelopes on the grid at a fixed truncation order.
///
/// Spin harmonics `S_{2n}` for `n = -ℓ..=ℓ` are stored at index `n + ℓ`;
/// optical harmonics `P_{2n+1}` for `|2n+1| <= 2ℓ-1` at index `n + ℓ`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub ep_plus: Vec<Complex64>,
    pub ep_minus: Vec<Complex64>,
    pub s: Vec<Vec<Complex64>>,
    pub p: Vec<Vec<Complex64>>,
    pub time: f64,
}

impl FieldState {
    pub fn zeros(ell: usize, n_z: usize) -> Self {
        let zero = vec![Complex64::new(0.0, 0.0); n_z];
        Self {
            ep_plus: zero.clone(),
            ep_minus: zero.clone(),
            s: vec![zero.clone(); 2 * ell + 1],
            p: vec![zero; 2 * ell],
            time: 0.0,
        }
    }

    /// Truncation order implied by the layout.
    pub fn ell(&self) -> usize {
        self.p.len() / 2
    }

    pub fn n_z(&self) -> usize {
        self.ep_plus.len()
    }

    pub fn field_count(&self) -> usize {
        2 + self.s.len() + self.p.len()
    }

    /// `S_label` for an even label in `[-2ℓ, 2ℓ]`.
    pub fn spin(&self, label: i64) -> Option<&[Complex64]> {
        if label.rem_euclid(2) != 0 {
            return None;
        }
        let idx = label / 2 + self.ell() as i64;
        usize::try_from(idx).ok().and_then(|i| self.s.get(i)).map(Vec::as_slice)
    }

    /// `P_label` for an odd label in `[-(2ℓ-1), 2ℓ-1]`.
    pub fn optical(&self, label: i64) -> Option<&[Complex64]> {
        if label.rem_euclid(2) != 1 {
            return None;
        }
        let idx = (label - 1) / 2 + self.ell() as i64;
        usize::try_from(idx).ok().and_then(|i| self.p.get(i)).map(Vec::as_slice)
    }

    pub(crate) fn check_layout(&self, ell: usize, n_z: usize) -> Result<()> {
        if self.s.len() != 2 * ell + 1 || self.p.len() != 2 * ell {
            return Err(Error::ShapeMismatch(format!(
                "expected {} spin and {} optical harmonics for ell = {ell}, got {} and {}",
                2 * ell + 1,
                2 * ell,
                self.s.len(),
                self.p.len()
            )));
        }
        let bad = [&self.ep_plus, &self.ep_minus]
            .into_iter()
            .chain(self.s.iter())
            .chain(self.p.iter())
            .any(|f| f.len() != n_z);
        if bad {
            return Err(Error::ShapeMismatch(format!("every field must have {n_z} points")));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        [&self.ep_plus, &self.ep_minus]
            .into_iter()
            .chain(self.s.iter())
            .chain(self.p.iter())
            .flatten()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Stored spin wave `S_0(z) = exp(-(z/L0)^2)` with every other field empty.
pub fn gaussian_initial_state(config: &SimulationConfig) -> Result<FieldState> {
    config.validate()?;
    let grid = &config.grid;
    let mut state = FieldState::zeros(config.ell, grid.n_z());
    for (j, s0) in state.s[config.ell].iter_mut().enumerate() {
        let x = grid.z(j) / config.l0;
        *s0 = Complex64::new((-x * x).exp(), 0.0);
    }
    Ok(state)
}
