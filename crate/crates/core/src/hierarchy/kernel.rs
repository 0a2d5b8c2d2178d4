//! Packed time stepper.
//!
//! Fields are stored point-major with real and imaginary parts split, so the
//! per-point chain update runs over contiguous `f64` slices:
//! `p_re[i * 2ℓ + m]`, `s_re[i * (2ℓ+1) + m]`.
//!
//! One step of length `dt`:
//!
//! 1. optical kick over `dt/2` with `S^n`, `E^n` frozen,
//! 2. spin kick over `dt` with the kicked optical harmonics,
//! 3. Lax-Friedrichs update of `E^±` with source `i g√N P_{±1}`, taken at
//!    mid-step and interpolated to the midpoint of the characteristic,
//! 4. optical kick over `dt/2` with `S^{n+1}`, `E^{n+1}`.
//!
//! Each kick integrates `x' = -κ x + f` exactly for frozen `f`. Kicks 4 and 1
//! of consecutive steps see the same inputs and are fused into one full kick.
//!
//! Mirror-symmetric data (`E^+(z) = E^-(-z)`, `S_{2n}(z) = S_{-2n}(-z)`,
//! `P_{2n+1}(z) = P_{-2n-1}(-z)`) stays exactly symmetric under this update,
//! so only `z >= 0` is stored and the left neighbours of `z = 0` are read
//! from the mirror image. The result is bitwise identical to the full grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{decay_table, FieldState, SimulationConfig};

/// `(1 - e^{-κτ}) / κ`, continuous at `κ = 0`.
fn phi(kappa: f64, tau: f64) -> f64 {
    if kappa == 0.0 {
        tau
    } else {
        -(-kappa * tau).exp_m1() / kappa
    }
}

/// Whether the stepper may exploit mirror symmetry of the data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Symmetry {
    /// Use the half grid when the initial data is exactly mirror symmetric.
    #[default]
    Auto,
    /// Always integrate the full grid.
    Off,
}

#[derive(Clone, Debug)]
struct OpticalKick {
    decay: Vec<f64>,
    weight: Vec<f64>,
    /// Drive weight of the probe on `P_{±1}`; zero at `ℓ = 0`.
    source: f64,
}

impl OpticalKick {
    fn new(kappa: &[f64], tau: f64, omega_c: f64, coupling: f64, ell: usize) -> Self {
        Self {
            decay: kappa.iter().map(|k| (-k * tau).exp()).collect(),
            weight: kappa.iter().map(|&k| phi(k, tau) * omega_c).collect(),
            source: if ell > 0 { phi(kappa[ell], tau) * coupling } else { 0.0 },
        }
    }
}

#[derive(Clone, Debug)]
struct Coefficients {
    half: OpticalKick,
    full: OpticalKick,
    spin_decay: Vec<f64>,
    spin_weight: Vec<f64>,
    /// `dt g√N`.
    light_source: f64,
    /// Lax-Friedrichs weights of the upwind and downwind neighbours.
    upwind: f64,
    downwind: f64,
    /// Interpolation weights placing the source at the midpoint of the
    /// characteristic, `ν/2` and `1 - ν/2`.
    source_upwind: f64,
    source_local: f64,
}

#[derive(Clone, Debug)]
struct Atoms {
    p_re: Vec<f64>,
    p_im: Vec<f64>,
    s_re: Vec<f64>,
    s_im: Vec<f64>,
}

#[derive(Clone, Debug)]
struct Light {
    ep_re: Vec<f64>,
    ep_im: Vec<f64>,
    em_re: Vec<f64>,
    em_im: Vec<f64>,
}

impl Light {
    fn zeros(n: usize) -> Self {
        Self {
            ep_re: vec![0.0; n],
            ep_im: vec![0.0; n],
            em_re: vec![0.0; n],
            em_im: vec![0.0; n],
        }
    }
}

/// Time integrator owning the packed state.
#[derive(Clone, Debug)]
pub struct Integrator {
    ell: usize,
    n_z: usize,
    /// Grid index of stored point 0: the centre when mirrored, else 0.
    offset: usize,
    mirrored: bool,
    dt: f64,
    start_time: f64,
    steps_done: u64,
    wide: bool,
    coef: Coefficients,
    atoms: Atoms,
    light: Light,
    next: Light,
    /// Mid-step `P_{+1}` (in the `ep` slots) and `P_{-1}` (in `em`).
    mid: Light,
}

impl Integrator {
    pub fn new(config: &SimulationConfig, state: &FieldState) -> Result<Self> {
        Self::with_symmetry(config, state, Symmetry::Auto)
    }

    pub fn with_symmetry(
        config: &SimulationConfig,
        state: &FieldState,
        symmetry: Symmetry,
    ) -> Result<Self> {
        config.validate()?;
        let ell = config.ell;
        let grid = &config.grid;
        let n_z = grid.n_z();
        state.check_layout(ell, n_z)?;

        let params = &config.params;
        let rates = decay_table(&config.decay, 2 * ell, params)?;
        let dt = grid.dt();
        let omega_c = params.omega_c();
        let coupling = params.coupling();
        let np = 2 * ell;
        let ns = np + 1;
        let rate = |label: i64| rates[label.unsigned_abs() as usize];
        // P index m carries label 2m - 2ℓ + 1, S index m carries 2m - 2ℓ.
        let kappa: Vec<f64> = (0..np)
            .map(|m| params.gamma() + rate(2 * m as i64 - 2 * ell as i64 + 1))
            .collect();
        let spin_rates: Vec<f64> = (0..ns)
            .map(|m| rate(2 * m as i64 - 2 * ell as i64))
            .collect();
        let nu = grid.courant(params).min(1.0);
        let coef = Coefficients {
            half: OpticalKick::new(&kappa, 0.5 * dt, omega_c, coupling, ell),
            full: OpticalKick::new(&kappa, dt, omega_c, coupling, ell),
            spin_decay: spin_rates.iter().map(|g| (-g * dt).exp()).collect(),
            spin_weight: spin_rates.iter().map(|&g| phi(g, dt) * omega_c).collect(),
            light_source: dt * coupling,
            upwind: 0.5 * (1.0 + nu),
            downwind: 0.5 * (1.0 - nu),
            source_upwind: 0.5 * nu,
            source_local: 1.0 - 0.5 * nu,
        };

        let mirrored = symmetry == Symmetry::Auto && is_mirror_symmetric(state);
        let offset = if mirrored { grid.center() } else { 0 };
        let n_pts = n_z - offset;
        let mut atoms = Atoms {
            p_re: vec![0.0; n_pts * np],
            p_im: vec![0.0; n_pts * np],
            s_re: vec![0.0; n_pts * ns],
            s_im: vec![0.0; n_pts * ns],
        };
        let mut light = Light::zeros(n_pts);
        for i in 0..n_pts {
            let j = i + offset;
            for (m, field) in state.p.iter().enumerate() {
                atoms.p_re[i * np + m] = field[j].re;
                atoms.p_im[i * np + m] = field[j].im;
            }
            for (m, field) in state.s.iter().enumerate() {
                atoms.s_re[i * ns + m] = field[j].re;
                atoms.s_im[i * ns + m] = field[j].im;
            }
            light.ep_re[i] = state.ep_plus[j].re;
            light.ep_im[i] = state.ep_plus[j].im;
            light.em_re[i] = state.ep_minus[j].re;
            light.em_im[i] = state.ep_minus[j].im;
        }

        Ok(Self {
            ell,
            n_z,
            offset,
            mirrored,
            dt,
            start_time: state.time,
            steps_done: 0,
            wide: wide_available(),
            coef,
            atoms,
            next: Light::zeros(n_pts),
            mid: Light::zeros(n_pts),
            light,
        })
    }

    pub fn time(&self) -> f64 {
        self.start_time + self.steps_done as f64 * self.dt
    }

    pub fn steps_done(&self) -> u64 {
        self.steps_done
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    /// True when only the `z >= 0` half is integrated.
    pub fn is_mirrored(&self) -> bool {
        self.mirrored
    }

    /// Stored index and mirror flag of grid point `j`.
    fn locate(&self, j: usize) -> (usize, bool) {
        if j >= self.offset {
            (j - self.offset, false)
        } else {
            (2 * self.offset - j - self.offset, true)
        }
    }

    pub fn state(&self) -> FieldState {
        let np = 2 * self.ell;
        let ns = np + 1;
        let a = &self.atoms;
        let l = &self.light;
        let mut st = FieldState::zeros(self.ell, self.n_z);
        for j in 0..self.n_z {
            let (i, flip) = self.locate(j);
            for (m, field) in st.p.iter_mut().enumerate() {
                let k = if flip { np - 1 - m } else { m };
                field[j] = Complex64::new(a.p_re[i * np + k], a.p_im[i * np + k]);
            }
            for (m, field) in st.s.iter_mut().enumerate() {
                let k = if flip { ns - 1 - m } else { m };
                field[j] = Complex64::new(a.s_re[i * ns + k], a.s_im[i * ns + k]);
            }
            let ep = Complex64::new(l.ep_re[i], l.ep_im[i]);
            let em = Complex64::new(l.em_re[i], l.em_im[i]);
            (st.ep_plus[j], st.ep_minus[j]) = if flip { (em, ep) } else { (ep, em) };
        }
        st.time = self.time();
        st
    }

    /// `|E_s|² + |E_d|² = 2(|E^+|² + |E^-|²)` on the grid.
    pub fn intensity(&self) -> Vec<f64> {
        let l = &self.light;
        (0..self.n_z)
            .map(|j| {
                let (i, _) = self.locate(j);
                let ep = l.ep_re[i] * l.ep_re[i] + l.ep_im[i] * l.ep_im[i];
                let em = l.em_re[i] * l.em_re[i] + l.em_im[i] * l.em_im[i];
                2.0 * (ep + em)
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        let a = &self.atoms;
        let l = &self.light;
        [
            &a.p_re, &a.p_im, &a.s_re, &a.s_im, &l.ep_re, &l.ep_im, &l.em_re, &l.em_im,
        ]
        .iter()
        .all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Advances `n` steps; all fields refer to the same time on return.
    pub fn advance(&mut self, n: usize) -> Result<()> {
        for k in 0..n {
            let light = self.sweep(k == 0, k + 1 == n);
            self.steps_done += 1;
            if !light.is_finite() {
                return Err(Error::Diverged { time: self.time() });
            }
        }
        if n > 0 && !self.is_finite() {
            return Err(Error::Diverged { time: self.time() });
        }
        Ok(())
    }

    /// One pass over the grid; returns the summed magnitude of the new probe
    /// field as a cheap divergence check.
    fn sweep(&mut self, opening: bool, closing: bool) -> f64 {
        let pass = Pass {
            coef: &self.coef,
            ell: self.ell,
            mirrored: self.mirrored,
            opening,
            closing,
        };
        #[cfg(target_arch = "x86_64")]
        let acc = if self.wide {
            // SAFETY: `wide` is only set after runtime detection of AVX2.
            unsafe {
                sweep_avx2(
                    &pass,
                    &mut self.atoms,
                    &self.light,
                    &mut self.next,
                    &mut self.mid,
                )
            }
        } else {
            sweep_impl(&pass, &mut self.atoms, &self.light, &mut self.next, &mut self.mid)
        };
        #[cfg(not(target_arch = "x86_64"))]
        let acc = sweep_impl(&pass, &mut self.atoms, &self.light, &mut self.next, &mut self.mid);
        std::mem::swap(&mut self.light, &mut self.next);
        acc
    }
}

fn is_mirror_symmetric(state: &FieldState) -> bool {
    let n = state.n_z();
    let rev = |j: usize| n - 1 - j;
    (0..n).all(|j| state.ep_plus[j] == state.ep_minus[rev(j)])
        && state
            .s
            .iter()
            .zip(state.s.iter().rev())
            .all(|(a, b)| (0..n).all(|j| a[j] == b[rev(j)]))
        && state
            .p
            .iter()
            .zip(state.p.iter().rev())
            .all(|(a, b)| (0..n).all(|j| a[j] == b[rev(j)]))
}

#[cfg(target_arch = "x86_64")]
fn wide_available() -> bool {
    std::arch::is_x86_feature_detected!("avx2")
}

#[cfg(not(target_arch = "x86_64"))]
fn wide_available() -> bool {
    false
}

struct Pass<'a> {
    coef: &'a Coefficients,
    ell: usize,
    mirrored: bool,
    opening: bool,
    closing: bool,
}

/// Same arithmetic as [`sweep_impl`] compiled for 256-bit vectors. No fused
/// multiply-add is enabled, so results are bitwise identical.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn sweep_avx2(
    pass: &Pass,
    atoms: &mut Atoms,
    cur: &Light,
    next: &mut Light,
    mid: &mut Light,
) -> f64 {
    sweep_impl(pass, atoms, cur, next, mid)
}

#[inline(always)]
fn sweep_impl(pass: &Pass, atoms: &mut Atoms, cur: &Light, next: &mut Light, mid: &mut Light) -> f64 {
    let n = cur.ep_re.len();
    for i in 0..n {
        kick_point(pass, atoms, cur, mid, i);
    }

    // Left neighbours of point 0: the mirror image, or zero inflow for E^+
    // with the local source and a copy for outgoing E^-.
    let (ep_left, p1_left, em_left) = if pass.mirrored {
        (
            (cur.em_re[1], cur.em_im[1]),
            (mid.em_re[1], mid.em_im[1]),
            (cur.ep_re[1], cur.ep_im[1]),
        )
    } else {
        (
            (0.0, 0.0),
            (mid.ep_re[0], mid.ep_im[0]),
            (cur.em_re[0], cur.em_im[0]),
        )
    };
    let mut acc = light_point(
        pass,
        atoms,
        next,
        mid,
        0,
        Neighbours {
            ep_left,
            ep_right: (cur.ep_re[1], cur.ep_im[1]),
            em_left,
            em_right: (cur.em_re[1], cur.em_im[1]),
            p1_left,
            pm1_right: (mid.em_re[1], mid.em_im[1]),
        },
    );
    for i in 1..n - 1 {
        acc += light_point(
            pass,
            atoms,
            next,
            mid,
            i,
            Neighbours {
                ep_left: (cur.ep_re[i - 1], cur.ep_im[i - 1]),
                ep_right: (cur.ep_re[i + 1], cur.ep_im[i + 1]),
                em_left: (cur.em_re[i - 1], cur.em_im[i - 1]),
                em_right: (cur.em_re[i + 1], cur.em_im[i + 1]),
                p1_left: (mid.ep_re[i - 1], mid.ep_im[i - 1]),
                pm1_right: (mid.em_re[i + 1], mid.em_im[i + 1]),
            },
        );
    }
    // Zero inflow for E^- on the right, copy extrapolation for outgoing E^+.
    let last = n - 1;
    acc += light_point(
        pass,
        atoms,
        next,
        mid,
        last,
        Neighbours {
            ep_left: (cur.ep_re[last - 1], cur.ep_im[last - 1]),
            ep_right: (cur.ep_re[last], cur.ep_im[last]),
            em_left: (cur.em_re[last - 1], cur.em_im[last - 1]),
            em_right: (0.0, 0.0),
            p1_left: (mid.ep_re[last - 1], mid.ep_im[last - 1]),
            pm1_right: (mid.em_re[last], mid.em_im[last]),
        },
    );
    acc
}

struct Neighbours {
    ep_left: (f64, f64),
    ep_right: (f64, f64),
    em_left: (f64, f64),
    em_right: (f64, f64),
    /// Mid-step `P_{+1}` upwind of `E^+` and `P_{-1}` upwind of `E^-`.
    p1_left: (f64, f64),
    pm1_right: (f64, f64),
}

/// Steps 1 and 2 at point `i`; records the mid-step `P_{±1}` in `mid`.
#[inline(always)]
fn kick_point(pass: &Pass, atoms: &mut Atoms, cur: &Light, mid: &mut Light, i: usize) {
    let ell = pass.ell;
    let coef = pass.coef;
    let np = 2 * ell;
    let ns = np + 1;
    let p_re = &mut atoms.p_re[i * np..(i + 1) * np];
    let p_im = &mut atoms.p_im[i * np..(i + 1) * np];
    let s_re = &mut atoms.s_re[i * ns..(i + 1) * ns];
    let s_im = &mut atoms.s_im[i * ns..(i + 1) * ns];

    let kick = if pass.opening { &coef.half } else { &coef.full };
    kick_optical(p_re, p_im, s_re, s_im, &kick.decay, &kick.weight);
    if ell > 0 {
        drive(p_re, p_im, ell, kick.source, cur.ep_re[i], cur.ep_im[i]);
        drive(p_re, p_im, ell - 1, kick.source, cur.em_re[i], cur.em_im[i]);
    }
    kick_spin(s_re, s_im, p_re, p_im, &coef.spin_decay, &coef.spin_weight);

    if ell > 0 {
        mid.ep_re[i] = p_re[ell];
        mid.ep_im[i] = p_im[ell];
        mid.em_re[i] = p_re[ell - 1];
        mid.em_im[i] = p_im[ell - 1];
    }
}

/// Step 3 at point `i`, then step 4 on the closing pass.
#[inline(always)]
fn light_point(
    pass: &Pass,
    atoms: &mut Atoms,
    next: &mut Light,
    mid: &Light,
    i: usize,
    nb: Neighbours,
) -> f64 {
    let ell = pass.ell;
    let coef = pass.coef;
    let (a, b, src) = (coef.upwind, coef.downwind, coef.light_source);
    let (su, sl) = (coef.source_upwind, coef.source_local);
    // Mid-step polarisation at the midpoint of the characteristic.
    let p1_re = su * nb.p1_left.0 + sl * mid.ep_re[i];
    let p1_im = su * nb.p1_left.1 + sl * mid.ep_im[i];
    let pm1_re = su * nb.pm1_right.0 + sl * mid.em_re[i];
    let pm1_im = su * nb.pm1_right.1 + sl * mid.em_im[i];
    let ep_re = a * nb.ep_left.0 + b * nb.ep_right.0 - src * p1_im;
    let ep_im = a * nb.ep_left.1 + b * nb.ep_right.1 + src * p1_re;
    let em_re = a * nb.em_right.0 + b * nb.em_left.0 - src * pm1_im;
    let em_im = a * nb.em_right.1 + b * nb.em_left.1 + src * pm1_re;
    next.ep_re[i] = ep_re;
    next.ep_im[i] = ep_im;
    next.em_re[i] = em_re;
    next.em_im[i] = em_im;

    if pass.closing {
        let np = 2 * ell;
        let ns = np + 1;
        let p_re = &mut atoms.p_re[i * np..(i + 1) * np];
        let p_im = &mut atoms.p_im[i * np..(i + 1) * np];
        let s_re = &atoms.s_re[i * ns..(i + 1) * ns];
        let s_im = &atoms.s_im[i * ns..(i + 1) * ns];
        let half = &coef.half;
        kick_optical(p_re, p_im, s_re, s_im, &half.decay, &half.weight);
        if ell > 0 {
            drive(p_re, p_im, ell, half.source, ep_re, ep_im);
            drive(p_re, p_im, ell - 1, half.source, em_re, em_im);
        }
    }
    ep_re.abs() + ep_im.abs() + em_re.abs() + em_im.abs()
}

/// `P_m <- e_m P_m + w_m i (S_m + S_{m+1})`.
#[inline(always)]
fn kick_optical(
    p_re: &mut [f64],
    p_im: &mut [f64],
    s_re: &[f64],
    s_im: &[f64],
    decay: &[f64],
    weight: &[f64],
) {
    let n = p_re.len();
    let p_im = &mut p_im[..n];
    let s_re = &s_re[..n + 1];
    let s_im = &s_im[..n + 1];
    let decay = &decay[..n];
    let weight = &weight[..n];
    for m in 0..n {
        let sr = s_re[m] + s_re[m + 1];
        let si = s_im[m] + s_im[m + 1];
        let r = decay[m] * p_re[m] - weight[m] * si;
        let q = decay[m] * p_im[m] + weight[m] * sr;
        p_re[m] = r;
        p_im[m] = q;
    }
}

/// `P_m += v i E`.
#[inline(always)]
fn drive(p_re: &mut [f64], p_im: &mut [f64], m: usize, v: f64, e_re: f64, e_im: f64) {
    p_re[m] -= v * e_im;
    p_im[m] += v * e_re;
}

/// `S_m <- e_m S_m + w_m i (P_{m-1} + P_m)` with the chain ends open.
#[inline(always)]
fn kick_spin(
    s_re: &mut [f64],
    s_im: &mut [f64],
    p_re: &[f64],
    p_im: &[f64],
    decay: &[f64],
    weight: &[f64],
) {
    let np = p_re.len();
    let ns = np + 1;
    let s_re = &mut s_re[..ns];
    let s_im = &mut s_im[..ns];
    let p_im = &p_im[..np];
    let decay = &decay[..ns];
    let weight = &weight[..ns];
    if np == 0 {
        s_re[0] *= decay[0];
        s_im[0] *= decay[0];
        return;
    }
    let r = decay[0] * s_re[0] - weight[0] * p_im[0];
    let q = decay[0] * s_im[0] + weight[0] * p_re[0];
    s_re[0] = r;
    s_im[0] = q;
    for m in 1..np {
        let pr = p_re[m - 1] + p_re[m];
        let pi = p_im[m - 1] + p_im[m];
        let r = decay[m] * s_re[m] - weight[m] * pi;
        let q = decay[m] * s_im[m] + weight[m] * pr;
        s_re[m] = r;
        s_im[m] = q;
    }
    let r = decay[np] * s_re[np] - weight[np] * p_im[np - 1];
    let q = decay[np] * s_im[np] + weight[np] * p_re[np - 1];
    s_re[np] = r;
    s_im[np] = q;
}
