//! Closed-form results of the adiabatic elimination at `γ_n = 0`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::PhysicalParams;

/// Splitting speed of the adiabatic solution at truncation order `ℓ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticVelocity {
    pub ell: usize,
    /// In `l_abs Γ`.
    pub c0_exact: f64,
    /// In `l_abs Γ`.
    pub c0_slowlight: f64,
    /// In units of `c Ω_c² / g²N`.
    pub c0_exact_paper: f64,
    pub c0_slowlight_paper: f64,
}

fn require_order(ell: usize) -> Result<f64> {
    if ell == 0 {
        return Err(Error::invalid(
            "ell",
            "the adiabatic solution is only defined for ell >= 1",
        ));
    }
    Ok(ell as f64)
}

/// `(α, β)` with `α = 1 + ℓ g²N / ((2ℓ+1) Ω_c²)` and `β = 1 + ℓ g²N / Ω_c²`.
fn sum_difference_factors(ell: f64, params: &PhysicalParams) -> (f64, f64) {
    let ratio = params.g2n() / (params.omega_c() * params.omega_c());
    (1.0 + ell * ratio / (2.0 * ell + 1.0), 1.0 + ell * ratio)
}

pub fn c0_exact(ell: usize, params: &PhysicalParams) -> Result<f64> {
    let l = require_order(ell)?;
    let (alpha, beta) = sum_difference_factors(l, params);
    Ok(params.c() / (alpha * beta).sqrt())
}

/// Low group-velocity limit `c √(2ℓ+1) Ω_c² / (ℓ g²N)`.
pub fn c0_slowlight(ell: usize, params: &PhysicalParams) -> Result<f64> {
    let l = require_order(ell)?;
    Ok(params.vg_unit() * (2.0 * l + 1.0).sqrt() / l)
}

pub fn analytic_velocity(ell: usize, params: &PhysicalParams) -> Result<AnalyticVelocity> {
    let exact = c0_exact(ell, params)?;
    let slow = c0_slowlight(ell, params)?;
    Ok(AnalyticVelocity {
        ell,
        c0_exact: exact,
        c0_slowlight: slow,
        c0_exact_paper: exact / params.vg_unit(),
        c0_slowlight_paper: slow / params.vg_unit(),
    })
}

/// Amplitude of the difference mode relative to the sum mode in the rigid
/// two-copy solution, `α c0 / c = √(α/β)`.
pub fn default_difference_prefactor(ell: usize, params: &PhysicalParams) -> Result<f64> {
    let l = require_order(ell)?;
    let (alpha, beta) = sum_difference_factors(l, params);
    Ok((alpha / beta).sqrt())
}

/// Sum and difference probe modes of the adiabatic solution,
///
/// `E_s = -(Ω_c/g√N) [S0(z - c0 t) + S0(z + c0 t)]`,
/// `E_d = -A (Ω_c/g√N) [S0(z - c0 t) - S0(z + c0 t)]`.
pub fn traveling_wave<F>(
    s0: F,
    z: &[f64],
    t: f64,
    ell: usize,
    params: &PhysicalParams,
    prefactor: Option<f64>,
) -> Result<(Vec<Complex64>, Vec<Complex64>)>
where
    F: Fn(f64) -> Complex64,
{
    let c0 = c0_exact(ell, params)?;
    let a = match prefactor {
        Some(a) => a,
        None => default_difference_prefactor(ell, params)?,
    };
    let scale = -params.omega_c() / params.coupling();
    let (es, ed) = z
        .iter()
        .map(|&x| {
            let fwd = s0(x - c0 * t);
            let bwd = s0(x + c0 * t);
            ((fwd + bwd) * scale, (fwd - bwd) * (a * scale))
        })
        .unzip();
    Ok((es, ed))
}

/// `P_{2n+1}` in the s or d mode written as
/// `(-1)^n (p1 * P_1 - n (ig/Ω_c²) ∂E/∂t)`: `p1_coeff` and `de_coeff` hold the
/// signed integer coefficients of `P_1` and of `(ig/Ω_c²) ∂E/∂t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeRow {
    pub n: usize,
    pub p1_coeff: i64,
    pub de_coeff: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdiabaticModeChain {
    pub ell: usize,
    pub sum_rows: Vec<ModeRow>,
    pub difference_rows: Vec<ModeRow>,
    /// `P_{s,1} = sum_cutoff (ig/Ω_c²) ∂E_s/∂t` once `P_{s,2ℓ+1}` is dropped.
    pub sum_cutoff: f64,
    /// `P_{d,1} = difference_cutoff (ig/Ω_c²) ∂E_d/∂t`.
    pub difference_cutoff: f64,
}

pub fn adiabatic_mode_chain(ell: usize) -> Result<AdiabaticModeChain> {
    let l = require_order(ell)?;
    let sign = |n: usize| if n.is_multiple_of(2) { 1 } else { -1 };
    let row = |n: usize, p1: i64| ModeRow {
        n,
        p1_coeff: sign(n) * p1,
        de_coeff: -sign(n) * n as i64,
    };
    Ok(AdiabaticModeChain {
        ell,
        sum_rows: (0..ell).map(|n| row(n, 2 * n as i64 + 1)).collect(),
        difference_rows: (0..ell).map(|n| row(n, 1)).collect(),
        sum_cutoff: l / (2.0 * l + 1.0),
        difference_cutoff: l,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_speed() {
        let p = PhysicalParams::paper();
        let ratio = p.g2n() / (p.omega_c() * p.omega_c());
        assert!((ratio - 289.855).abs() < 1e-3);
        let c0 = c0_exact(1, &p).unwrap();
        // c / c0 = sqrt((1 + ratio/3)(1 + ratio))
        let divisor = ((1.0 + ratio / 3.0) * (1.0 + ratio)).sqrt();
        assert!((p.c() / c0 - divisor).abs() < 1e-9);
        assert!((divisor - 168.5).abs() < 0.1);
        let v = analytic_velocity(1, &p).unwrap();
        assert!((v.c0_exact_paper - 1.72).abs() < 0.005, "{}", v.c0_exact_paper);
        assert!((v.c0_slowlight_paper - 3f64.sqrt()).abs() < 1e-12);
        assert!(c0_exact(0, &p).is_err());
    }

    #[test]
    fn limits() {
        let p = PhysicalParams::paper();
        assert!(c0_exact(100_000, &p).unwrap() < 1e-3 * p.c());
        let strong = PhysicalParams::new(1.0, 1e6, 138.0).unwrap();
        assert!((c0_exact(3, &strong).unwrap() / strong.c() - 1.0).abs() < 1e-8);
        let deep = PhysicalParams::new(1.0, 0.01, 1e6).unwrap();
        let r = c0_slowlight(4, &deep).unwrap() / c0_exact(4, &deep).unwrap();
        assert!((r - 1.0).abs() < 1e-6);
    }

    #[test]
    fn exact_speed_is_decreasing_and_bounded() {
        let p = PhysicalParams::paper();
        let mut prev = p.c();
        for ell in 1..300 {
            let c0 = c0_exact(ell, &p).unwrap();
            assert!(c0 > 0.0 && c0 < prev);
            prev = c0;
        }
    }

    #[test]
    fn slowlight_scaling_identity() {
        let p = PhysicalParams::paper();
        let first = c0_slowlight(1, &p).unwrap() / 3f64.sqrt();
        for ell in 1..50usize {
            let l = ell as f64;
            let v = c0_slowlight(ell, &p).unwrap() * l / (2.0 * l + 1.0).sqrt();
            assert!((v - first).abs() < 1e-14);
        }
    }

    #[test]
    fn traveling_wave_shapes() {
        let p = PhysicalParams::paper();
        let s0 = |z: f64| Complex64::new((-(z / 5.0) * (z / 5.0)).exp(), 0.0);
        let z: Vec<f64> = (-200..=200).map(|j| j as f64 * 0.25).collect();
        let (es, ed) = traveling_wave(s0, &z, 0.0, 1, &p, None).unwrap();
        let scale = p.omega_c() / p.coupling();
        for (k, &x) in z.iter().enumerate() {
            assert!((es[k] + 2.0 * scale * s0(x)).norm() < 1e-15);
            assert_eq!(ed[k].norm(), 0.0);
        }
        let (es, ed) = traveling_wave(s0, &z, 7.5, 2, &p, Some(0.4)).unwrap();
        let n = z.len();
        for k in 0..n {
            assert!((es[k] - es[n - 1 - k]).norm() < 1e-15);
            assert!((ed[k] + ed[n - 1 - k]).norm() < 1e-15);
        }
    }

    #[test]
    fn traveling_wave_peaks_move_at_c0() {
        let p = PhysicalParams::paper();
        let s0 = |z: f64| Complex64::new((-(z / 5.0) * (z / 5.0)).exp(), 0.0);
        let z: Vec<f64> = (0..=8000).map(|j| j as f64 * 0.01).collect();
        let t = 40.0;
        let (es, _) = traveling_wave(s0, &z, t, 1, &p, None).unwrap();
        let (j, _) = es
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        let c0 = c0_exact(1, &p).unwrap();
        assert!((z[j] - c0 * t).abs() <= 0.01);
    }

    #[test]
    fn rigid_copies_conserve_sum_mode_norm() {
        let p = PhysicalParams::paper();
        let s0 = |z: f64| Complex64::new((-(z / 2.0) * (z / 2.0)).exp(), 0.0);
        let z: Vec<f64> = (-40000..=40000).map(|j| j as f64 * 0.005).collect();
        let norm = |t: f64| {
            let (es, _) = traveling_wave(s0, &z, t, 1, &p, None).unwrap();
            es.iter().map(|v| v.norm_sqr()).sum::<f64>() * 0.005
        };
        // Separated copies: overlap of exp(-2(z/2)^2) at distance >= 30 is far below 1e-12.
        let a = norm(40.0);
        let b = norm(80.0);
        assert!((a - b).abs() / a < 1e-12, "{a} {b}");
    }

    #[test]
    fn mode_chain_rows() {
        let chain = adiabatic_mode_chain(4).unwrap();
        assert_eq!(
            chain.sum_rows[0],
            ModeRow {
                n: 0,
                p1_coeff: 1,
                de_coeff: 0
            }
        );
        for (n, r) in chain.sum_rows.iter().enumerate() {
            let sign = if n % 2 == 0 { 1 } else { -1 };
            assert_eq!(r.p1_coeff, sign * (2 * n as i64 + 1));
            assert_eq!(r.de_coeff, -sign * n as i64);
        }
        for (n, r) in chain.difference_rows.iter().enumerate() {
            let sign = if n % 2 == 0 { 1 } else { -1 };
            assert_eq!(r.p1_coeff, sign);
            assert_eq!(r.de_coeff, -sign * n as i64);
        }
        let one = adiabatic_mode_chain(1).unwrap();
        assert!((one.sum_cutoff - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(one.difference_cutoff, 1.0);
        assert!(adiabatic_mode_chain(0).is_err());
    }

    /// Substituting the rows into the steady recursion
    /// `0 = δ_{n0} (ig)∂E - Ω² (P_{2n-1} + 2P_{2n+1} + P_{2n+3})`, written per
    /// mode, must cancel exactly; the cutoff relation makes the row `n = ℓ`
    /// vanish.
    #[test]
    fn mode_chain_satisfies_steady_recursion() {
        for ell in 1..12usize {
            let chain = adiabatic_mode_chain(ell).unwrap();
            // (P1 coeff, dE coeff) for n = 0..=ℓ with the ℓ row extrapolated.
            let extend = |rows: &[ModeRow], p1: i64| -> Vec<(i64, i64)> {
                let mut v: Vec<_> = rows.iter().map(|r| (r.p1_coeff, r.de_coeff)).collect();
                let sign = if ell % 2 == 0 { 1 } else { -1 };
                v.push((sign * p1, -sign * ell as i64));
                v
            };
            let s = extend(&chain.sum_rows, 2 * ell as i64 + 1);
            let d = extend(&chain.difference_rows, 1);
            // Interior rows, no probe source.
            for n in 1..ell {
                for rows in [&s, &d] {
                    let p = rows[n - 1].0 + 2 * rows[n].0 + rows[n + 1].0;
                    let e = rows[n - 1].1 + 2 * rows[n].1 + rows[n + 1].1;
                    assert_eq!((p, e), (0, 0), "ell {ell} n {n}");
                }
            }
            // n = 0 couples P_1 and P_-1: s-mode 3 P_s1 + P_s3 = b, d-mode P_d1 + P_d3 = b.
            assert_eq!((3 * s[0].0 + s[1].0, 3 * s[0].1 + s[1].1), (0, 1));
            assert_eq!((d[0].0 + d[1].0, d[0].1 + d[1].1), (0, 1));
            // Dropping row ℓ fixes P_1 in terms of ∂E.
            let (p, e) = s[ell];
            assert!((chain.sum_cutoff - (-e as f64 / p as f64)).abs() < 1e-15);
            let (p, e) = d[ell];
            assert!((chain.difference_cutoff - (-e as f64 / p as f64)).abs() < 1e-15);
        }
    }
}
