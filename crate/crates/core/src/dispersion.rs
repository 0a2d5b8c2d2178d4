//! Frequency-domain response of the truncated hierarchy.
//!
//! With fields `∝ e^{i(kz - ωt)}` the atomic chain is eliminated into a
//! continued fraction `R(ω)`, which fixes two effective decays and the
//! complex momentum `k(ω)`. [`truncated_matrix_oracle`] solves the same
//! problem by brute-force linear algebra as an independent check.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{decay_table, DecayModel, PhysicalParams};

/// Truncation depth matching the steady value of `R` quoted for the paper's
/// parameters.
pub const DEFAULT_DEPTH: usize = 1000;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveDecays {
    pub gamma_s: Complex64,
    pub gamma_d: Complex64,
    pub r_value: Complex64,
    pub ell_used: usize,
    /// `|R_ℓ - R_{ℓ-1}| / |R_ℓ|`; zero when `R_ℓ = 0`.
    pub convergence: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionPoint {
    pub omega: f64,
    pub k_plus: Complex64,
    pub k_minus: Complex64,
}

/// `R = Ω²/(γ_2 - iω + Ω²/(Γ + γ_3 - iω + … + Ω²/(γ_{2ℓ} - iω)))`, evaluated
/// from the innermost level outwards. Empty (zero) for `ℓ = 0`.
pub fn continued_fraction_r(
    omega: f64,
    params: &PhysicalParams,
    decay: &DecayModel,
    ell: usize,
) -> Result<Complex64> {
    if !omega.is_finite() {
        return Err(Error::invalid("omega", "must be finite"));
    }
    if ell == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let rates = decay_table(decay, 2 * ell, params)?;
    let w2 = params.omega_c() * params.omega_c();
    let mut tail = Complex64::new(0.0, 0.0);
    for level in (2..=2 * ell).rev() {
        let base = if level % 2 == 0 { 0.0 } else { params.gamma() };
        let denom = Complex64::new(base + rates[level], -omega) + tail;
        if denom == Complex64::new(0.0, 0.0) {
            return Err(Error::Pole(format!(
                "continued-fraction level {level} at omega = {omega}"
            )));
        }
        tail = w2 / denom;
    }
    Ok(tail)
}

/// `Γ_s = Γ + γ_1 - iω + 2iΩ²/ω + R` and `Γ_d = Γ + γ_1 - iω + R`.
pub fn effective_decays(
    omega: f64,
    params: &PhysicalParams,
    decay: &DecayModel,
    ell: usize,
) -> Result<EffectiveDecays> {
    if omega == 0.0 {
        return Err(Error::Pole("Gamma_s diverges at omega = 0".into()));
    }
    let r = continued_fraction_r(omega, params, decay, ell)?;
    let convergence = if ell == 0 || r == Complex64::new(0.0, 0.0) {
        0.0
    } else {
        let prev = continued_fraction_r(omega, params, decay, ell - 1)?;
        (r - prev).norm() / r.norm()
    };
    let gamma_1 = decay_table(decay, 1, params)?[1];
    let gamma_d = Complex64::new(params.gamma() + gamma_1, -omega) + r;
    let gamma_s = gamma_d + 2.0 * I * params.omega_c() * params.omega_c() / omega;
    Ok(EffectiveDecays {
        gamma_s,
        gamma_d,
        r_value: r,
        ell_used: ell,
        convergence,
    })
}

/// Chooses the root with non-negative imaginary part (non-negative real part
/// on the real axis).
fn upper_branch(k: Complex64) -> Complex64 {
    if k.im < 0.0 || (k.im == 0.0 && k.re < 0.0) {
        -k
    } else {
        k
    }
}

/// `k = ±(i/c) √((g²N/Γ_s - iω)(g²N/Γ_d - iω))`; `k = 0` at `ω = 0`.
pub fn dispersion_k(
    omega: f64,
    params: &PhysicalParams,
    decay: &DecayModel,
    ell: usize,
) -> Result<DispersionPoint> {
    if omega == 0.0 {
        decay.validate()?;
        let zero = Complex64::new(0.0, 0.0);
        return Ok(DispersionPoint {
            omega,
            k_plus: zero,
            k_minus: zero,
        });
    }
    let d = effective_decays(omega, params, decay, ell)?;
    let g2n = params.g2n();
    let iw = I * omega;
    let k = I / params.c() * ((g2n / d.gamma_s - iw) * (g2n / d.gamma_d - iw)).sqrt();
    let k_plus = upper_branch(k);
    Ok(DispersionPoint {
        omega,
        k_plus,
        k_minus: -k_plus,
    })
}

/// Evaluates every frequency (in parallel) and then flips branches so that
/// `k_plus` varies continuously between successive successful points.
pub fn scan_dispersion(
    omegas: &[f64],
    params: &PhysicalParams,
    decay: &DecayModel,
    ell: usize,
) -> Vec<Result<DispersionPoint>> {
    let mut points: Vec<Result<DispersionPoint>> = omegas
        .par_iter()
        .map(|&w| dispersion_k(w, params, decay, ell))
        .collect();
    let mut prev: Option<Complex64> = None;
    for p in points.iter_mut().flatten() {
        if let Some(q) = prev {
            if (p.k_minus - q).norm() < (p.k_plus - q).norm() {
                std::mem::swap(&mut p.k_plus, &mut p.k_minus);
            }
        }
        prev = Some(p.k_plus);
    }
    points
}

/// Result of the explicit truncated linear-algebra solve.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixOracle {
    pub k_plus: Complex64,
    pub k_minus: Complex64,
    /// `P_{±1}` response: `[P_1, P_{-1}] = chi · [E^+, E^-]`.
    pub chi: [[Complex64; 2]; 2],
    /// Eigenvector `(E^+, E^-)` of `k_plus`.
    pub mode: [Complex64; 2],
}

/// Dense atomic system `M x = b` for the `4ℓ + 1` unknowns ordered as
/// `P` indices `0..2ℓ` followed by `S` indices `0..=2ℓ`.
struct AtomicSystem {
    ell: usize,
    matrix: Vec<Vec<Complex64>>,
    coupling: f64,
}

impl AtomicSystem {
    fn new(omega: f64, params: &PhysicalParams, decay: &DecayModel, ell: usize) -> Result<Self> {
        let rates = decay_table(decay, 2 * ell, params)?;
        let np = 2 * ell;
        let n = 4 * ell + 1;
        let w = params.omega_c();
        let mut matrix = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        let rate = |label: i64| rates[label.unsigned_abs() as usize];
        for m in 0..np {
            let label = 2 * m as i64 - 2 * ell as i64 + 1;
            matrix[m][m] = Complex64::new(params.gamma() + rate(label), -omega);
            matrix[m][np + m] = -I * w;
            matrix[m][np + m + 1] = -I * w;
        }
        for m in 0..=np {
            let row = np + m;
            let label = 2 * m as i64 - 2 * ell as i64;
            matrix[row][row] = Complex64::new(rate(label), -omega);
            if m > 0 {
                matrix[row][m - 1] = -I * w;
            }
            if m < np {
                matrix[row][m] = -I * w;
            }
        }
        Ok(Self {
            ell,
            matrix,
            coupling: params.coupling(),
        })
    }

    fn rhs(&self, e_plus: Complex64, e_minus: Complex64) -> Vec<Complex64> {
        let mut b = vec![Complex64::new(0.0, 0.0); self.matrix.len()];
        b[self.ell] = I * self.coupling * e_plus;
        b[self.ell - 1] = I * self.coupling * e_minus;
        b
    }

    /// Gaussian elimination with partial pivoting for several right-hand
    /// sides at once.
    fn solve(&self, rhs: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
        let n = self.matrix.len();
        let mut a = self.matrix.clone();
        let mut b: Vec<Vec<Complex64>> = rhs.to_vec();
        let scale = a
            .iter()
            .flatten()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
                .unwrap();
            let size = a[pivot][col].norm();
            if size <= 1e-14 * scale {
                return Err(Error::SingularSystem {
                    estimate: size / scale,
                });
            }
            a.swap(col, pivot);
            for rb in b.iter_mut() {
                rb.swap(col, pivot);
            }
            let inv = 1.0 / a[col][col];
            for row in col + 1..n {
                let f = a[row][col] * inv;
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let (upper, lower) = a.split_at_mut(row);
                let src = &upper[col];
                for (dst, s) in lower[0][col..].iter_mut().zip(&src[col..]) {
                    *dst -= f * s;
                }
                for rb in b.iter_mut() {
                    let v = rb[col];
                    rb[row] -= f * v;
                }
            }
        }
        for rb in b.iter_mut() {
            for row in (0..n).rev() {
                let mut acc = rb[row];
                for c in row + 1..n {
                    acc -= a[row][c] * rb[c];
                }
                rb[row] = acc / a[row][row];
            }
        }
        Ok(b)
    }

    fn residual(&self, x: &[Complex64], b: &[Complex64]) -> f64 {
        let mut worst: f64 = 0.0;
        let mut size: f64 = 0.0;
        for (row, &bi) in self.matrix.iter().zip(b) {
            let ax: Complex64 = row.iter().zip(x).map(|(m, v)| m * v).sum();
            worst = worst.max((ax - bi).norm());
            size = size.max(bi.norm());
        }
        worst / size.max(f64::MIN_POSITIVE)
    }
}

fn require_oracle_domain(omega: f64, ell: usize) -> Result<()> {
    if omega == 0.0 {
        return Err(Error::Pole("the matrix oracle needs omega != 0".into()));
    }
    if !omega.is_finite() {
        return Err(Error::invalid("omega", "must be finite"));
    }
    if ell == 0 {
        return Err(Error::invalid("ell", "the matrix oracle needs ell >= 1"));
    }
    Ok(())
}

/// Eliminates the atomic amplitudes for unit `E^+` and unit `E^-`, reduces
/// the two Maxwell equations to `K (E^+, E^-) = k (E^+, E^-)`, and returns
/// the eigenvalues of `K`.
pub fn truncated_matrix_oracle(
    omega: f64,
    params: &PhysicalParams,
    decay: &DecayModel,
    ell: usize,
) -> Result<MatrixOracle> {
    require_oracle_domain(omega, ell)?;
    let sys = AtomicSystem::new(omega, params, decay, ell)?;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let sols = sys.solve(&[sys.rhs(one, zero), sys.rhs(zero, one)])?;
    let chi = [
        [sols[0][ell], sols[1][ell]],
        [sols[0][ell - 1], sols[1][ell - 1]],
    ];
    let g = params.coupling();
    let c = params.c();
    let k = [
        [(omega + g * chi[0][0]) / c, g * chi[0][1] / c],
        [-g * chi[1][0] / c, -(omega + g * chi[1][1]) / c],
    ];
    let half_trace = 0.5 * (k[0][0] + k[1][1]);
    let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
    let root = (half_trace * half_trace - det).sqrt();
    let (l1, l2) = (half_trace + root, half_trace - root);
    let (k_plus, k_minus) = if upper_branch(l1) == l1 { (l1, l2) } else { (l2, l1) };
    // Null vector of K - k_plus from whichever row is better conditioned.
    let mode = if k[0][1].norm() >= (k[1][0]).norm() {
        [k[0][1], k_plus - k[0][0]]
    } else {
        [k_plus - k[1][1], k[1][0]]
    };
    let norm = (mode[0].norm_sqr() + mode[1].norm_sqr()).sqrt();
    Ok(MatrixOracle {
        k_plus,
        k_minus,
        chi,
        mode: [mode[0] / norm, mode[1] / norm],
    })
}

/// Largest relative violation of the full Fourier-space system (atomic chain
/// and both Maxwell equations) at `(ω, k)` with probe amplitudes `mode`.
pub fn plug_back_residual(
    omega: f64,
    k: Complex64,
    mode: [Complex64; 2],
    params: &PhysicalParams,
    decay: &DecayModel,
    ell: usize,
) -> Result<f64> {
    require_oracle_domain(omega, ell)?;
    let sys = AtomicSystem::new(omega, params, decay, ell)?;
    let b = sys.rhs(mode[0], mode[1]);
    let x = sys.solve(std::slice::from_ref(&b))?.remove(0);
    let atomic = sys.residual(&x, &b);
    // (-iω ± ick) E^± = i g√N P_{±1}
    let g = params.coupling();
    let c = params.c();
    let iw = I * omega;
    let plus = (-iw + I * c * k) * mode[0] - I * g * x[ell];
    let minus = (-iw - I * c * k) * mode[1] - I * g * x[ell - 1];
    let scale = (c * k.norm() + omega) * (mode[0].norm() + mode[1].norm());
    let maxwell = plus.norm().max(minus.norm()) / scale;
    Ok(atomic.max(maxwell))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper() -> PhysicalParams {
        PhysicalParams::paper()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    /// Thomas elimination of the label-ordered chain
    /// `S_{-2ℓ}, P_{-2ℓ+1}, …, P_{2ℓ-1}, S_{2ℓ}` driven by `(E^+, E^-)`;
    /// returns `P_1`.
    fn thomas_p1(
        omega: f64,
        params: &PhysicalParams,
        a: f64,
        ell: usize,
        e_plus: f64,
        e_minus: f64,
    ) -> Complex64 {
        let n = 4 * ell + 1;
        let w = params.omega_c();
        let g = params.coupling();
        let label = |i: usize| i as i64 - 2 * ell as i64;
        let diag: Vec<Complex64> = (0..n)
            .map(|i| {
                let l = label(i);
                let base = if l % 2 == 0 { 0.0 } else { params.gamma() };
                Complex64::new(base + l.unsigned_abs() as f64 * a, -omega)
            })
            .collect();
        let off = -I * w;
        let mut rhs = vec![Complex64::new(0.0, 0.0); n];
        rhs[2 * ell + 1] = I * g * e_plus;
        rhs[2 * ell - 1] = I * g * e_minus;
        let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
        let mut d_prime = vec![Complex64::new(0.0, 0.0); n];
        c_prime[0] = off / diag[0];
        d_prime[0] = rhs[0] / diag[0];
        for i in 1..n {
            let m = diag[i] - off * c_prime[i - 1];
            c_prime[i] = off / m;
            d_prime[i] = (rhs[i] - off * d_prime[i - 1]) / m;
        }
        let mut x = d_prime.clone();
        for i in (0..n - 1).rev() {
            x[i] = d_prime[i] - c_prime[i] * x[i + 1];
        }
        x[2 * ell + 1]
    }

    #[test]
    fn empty_fraction_is_zero() {
        let r = continued_fraction_r(0.7, &paper(), &DecayModel::ColdLinear { a: 0.1 }, 0).unwrap();
        assert_eq!(r, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn single_level_closed_form() {
        let p = paper();
        let r = continued_fraction_r(1.0, &p, &DecayModel::ColdLinear { a: 0.2 }, 1).unwrap();
        let expect = 0.69 * 0.69 / Complex64::new(0.4, -1.0);
        assert!(rel(r, expect) < 1e-15);
    }

    #[test]
    fn zero_denominator_reports_level() {
        let err = continued_fraction_r(0.0, &paper(), &DecayModel::Zero, 1).unwrap_err();
        match err {
            Error::Pole(msg) => assert!(msg.contains("level 2"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fraction_converges_at_depth_1000() {
        let p = paper();
        let m = DecayModel::ColdLinear { a: 0.001 };
        for w in [0.01, 0.1, 1.0] {
            let r1 = continued_fraction_r(w, &p, &m, 1000).unwrap();
            let r2 = continued_fraction_r(w, &p, &m, 2000).unwrap();
            assert!(rel(r1, r2) < 1e-8, "omega {w}: {r1} vs {r2}");
        }
    }

    #[test]
    fn fraction_is_cauchy_in_depth() {
        let p = paper();
        for a in [0.001, 0.01, 0.2] {
            let m = DecayModel::ColdLinear { a };
            for w in [0.02, 0.3, 1.0, 3.0] {
                let seq: Vec<Complex64> = [25, 50, 100, 200, 400, 800, 1600]
                    .iter()
                    .map(|&depth| continued_fraction_r(w, &p, &m, depth).unwrap())
                    .collect();
                let diffs: Vec<f64> = seq.windows(2).map(|s| (s[1] - s[0]).norm()).collect();
                let tail = &diffs[2..];
                assert!(tail.windows(2).all(|d| d[1] <= d[0]), "a {a} w {w}: {diffs:?}");
                assert!(*tail.last().unwrap() < 1e-9 * seq.last().unwrap().norm());
            }
        }
    }

    #[test]
    fn effective_decays_identity_and_tridiagonal_oracle() {
        let p = paper();
        let m = DecayModel::ColdLinear { a: 0.2 };
        let w = 0.5;
        let d = effective_decays(w, &p, &m, DEFAULT_DEPTH).unwrap();
        let diff = d.gamma_s - d.gamma_d;
        let expect = 2.0 * I * 0.69 * 0.69 / w;
        assert!(rel(diff, expect) < 1e-14);
        assert!(d.convergence < 1e-12);

        let g = p.coupling();
        let chi_s = thomas_p1(w, &p, 0.2, DEFAULT_DEPTH, 1.0, 1.0);
        let chi_d = thomas_p1(w, &p, 0.2, DEFAULT_DEPTH, 1.0, -1.0);
        assert!(rel(d.gamma_s, I * g / chi_s) < 1e-10);
        assert!(rel(d.gamma_d, I * g / chi_d) < 1e-10);
    }

    #[test]
    fn effective_decays_pole_at_zero() {
        assert!(matches!(
            effective_decays(0.0, &paper(), &DecayModel::ColdLinear { a: 0.1 }, 10),
            Err(Error::Pole(_))
        ));
    }

    #[test]
    fn high_frequency_limit() {
        let p = paper();
        let m = DecayModel::ColdLinear { a: 0.01 };
        let w = 1e6;
        let d = effective_decays(w, &p, &m, 100).unwrap();
        for v in [d.gamma_s, d.gamma_d] {
            assert!((v - Complex64::new(0.0, -w)).norm() < 2.0);
        }
    }

    #[test]
    fn zero_frequency_limit() {
        let p = paper();
        let m = DecayModel::ColdLinear { a: 0.01 };
        let at0 = dispersion_k(0.0, &p, &m, 100).unwrap();
        assert_eq!(at0.k_plus, Complex64::new(0.0, 0.0));
        // Only the first factor vanishes (linearly in ω), so |k| ~ √ω.
        let k4 = dispersion_k(1e-4, &p, &m, 100).unwrap().k_plus.norm();
        let k6 = dispersion_k(1e-6, &p, &m, 100).unwrap().k_plus.norm();
        assert!((k6 / k4 - 0.1).abs() < 1e-3);
        assert!(k6 < 1e-3);
    }

    #[test]
    fn dissipation_versus_dispersion() {
        let p = paper();
        let strong = dispersion_k(0.5, &p, &DecayModel::ColdLinear { a: 0.2 }, 1000).unwrap();
        assert!(strong.k_plus.im.abs() > strong.k_plus.re.abs());
        let weak = dispersion_k(0.1, &p, &DecayModel::ColdLinear { a: 0.001 }, 1000).unwrap();
        assert!(weak.k_plus.re.abs() > weak.k_plus.im.abs());
    }

    #[test]
    fn branches_pair_and_scan_is_continuous() {
        let p = paper();
        let m = DecayModel::ColdLinear { a: 0.01 };
        let omegas: Vec<f64> = (1..=200).map(|i| -2.0 + 4.0 * i as f64 / 201.0).collect();
        let scan = scan_dispersion(&omegas, &p, &m, 300);
        let pts: Vec<DispersionPoint> = scan.into_iter().map(|r| r.unwrap()).collect();
        for pair in pts.windows(2) {
            assert_eq!(pair[0].k_minus, -pair[0].k_plus);
            let step = (pair[1].k_plus - pair[0].k_plus).norm();
            let flip = (pair[1].k_minus - pair[0].k_plus).norm();
            assert!(step <= flip);
        }
    }

    #[test]
    fn matrix_oracle_matches_continued_fraction() {
        let p = paper();
        for a in [0.0, 0.01, 0.2] {
            let m = DecayModel::ColdLinear { a };
            for w in [0.05, 0.69, 2.5] {
                let o = truncated_matrix_oracle(w, &p, &m, 30).unwrap();
                let k = dispersion_k(w, &p, &m, 30).unwrap();
                assert!(rel(o.k_plus, k.k_plus) < 1e-10, "a {a} w {w}");
                assert!((o.k_plus + o.k_minus).norm() < 1e-10 * o.k_plus.norm());
                let res = plug_back_residual(w, o.k_plus, o.mode, &p, &m, 30).unwrap();
                assert!(res < 1e-8, "residual {res}");
            }
        }
    }

    #[test]
    fn oracle_rejects_zero_frequency() {
        assert!(matches!(
            truncated_matrix_oracle(0.0, &paper(), &DecayModel::Zero, 3),
            Err(Error::Pole(_))
        ));
    }
}
