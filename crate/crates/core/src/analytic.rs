//! Closed-form solution of the dispersive master equation.
//!
//! Splitting the generator into the commuting pieces `R + L_A + L_F`
//! (diagonal in the joint basis) and the jump parts `J_A`, `J_F` factorizes
//! the propagator exactly; with `J_A^2 = 0` the evolved state collapses to
//! two terms,
//!
//! ```text
//! rho(t) = rho_1(t) + rho_2(t),
//! ```
//!
//! where `rho_1` carries the field-jump series acting on the initial atomic
//! operators and `rho_2` is the single-atomic-jump branch, supported
//! entirely on the ground-ground block.
//!
//! All superoperator functions are evaluated spectrally on number-basis
//! matrix units (`R_F + 2 Gamma` has eigenvalue `2 Gamma + 2 i chi (n - n')`
//! on `|n><n'|`), so every sum here is finite and exact on the truncated
//! space: the field-jump series terminates at `m = N - 1` because
//! `a^N = 0`. The printed-series route [`rho2_series`] is retained purely
//! as a small-dimension cross-check of the spectral evaluation.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{self, FieldDensityMatrix, JointDensityMatrix};
use crate::linalg;
use crate::lindblad::ModelParams;

/// Below `gamma < GAMMA_BRANCH * chi` the degenerate weight
/// `(1 - e^{-2 gamma t})/(2 gamma)` is replaced by its analytic limit `t`.
const GAMMA_BRANCH: f64 = 1e-12;

/// Damped trigonometric integrals entering the coherence weights.
#[derive(Debug, Clone, Copy)]
pub struct ZetaCoefficients {
    /// `C(chi, gamma, t) = int_0^t e^{-2 gamma t'} cos(2 chi t') dt'`.
    pub damped_cos: f64,
    /// `S(chi, gamma, t) = int_0^t e^{-2 gamma t'} sin(2 chi t') dt'`.
    pub damped_sin: f64,
    /// `zeta = C + iS`.
    pub zeta: C64,
    /// `eta = gamma + i chi`.
    pub eta: C64,
}

/// Evaluate the damped-cosine and damped-sine integrals in closed form.
///
/// Satisfies `2 gamma zeta* = (gamma/eta)(1 - e^{-2 eta t})` identically.
pub fn zeta(params: &ModelParams, t: f64) -> ZetaCoefficients {
    let chi = params.chi();
    let gamma = params.gamma();
    let denom = 4.0 * (chi * chi + gamma * gamma);
    let decay = (-2.0 * gamma * t).exp();
    let (sin2, cos2) = (2.0 * chi * t).sin_cos();
    let damped_cos = ((-2.0 * gamma * cos2 + 2.0 * chi * sin2) * decay + 2.0 * gamma) / denom;
    let damped_sin = ((-2.0 * gamma * sin2 - 2.0 * chi * cos2) * decay + 2.0 * chi) / denom;
    ZetaCoefficients {
        damped_cos,
        damped_sin,
        zeta: C64::new(damped_cos, damped_sin),
        eta: C64::new(gamma, chi),
    }
}

/// Degenerate-safe jump weight `w = (1 - e^{-2 gamma t})/(2 gamma)`,
/// with the `gamma -> 0` limit `w = t` taken analytically.
fn jump_weight(params: &ModelParams, t: f64) -> f64 {
    let gamma = params.gamma();
    if gamma < GAMMA_BRANCH * params.chi() {
        t
    } else {
        (-(-2.0 * gamma * t).exp_m1()) / (2.0 * gamma)
    }
}

fn check_inputs(params: &ModelParams, field: &FieldDensityMatrix, t: f64) -> Result<()> {
    if field.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: field.dim(),
        });
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "time must be finite and >= 0, got {t}"
        )));
    }
    Ok(())
}

/// The field-jump branch `rho_1(t)`.
///
/// `prepared` must already be the displaced field matrix
/// `D^dag(alpha) rho_F(0) D(alpha)`; displacement is owned by
/// [`crate::protocol::prepare_field`] so one initial state serves a whole
/// phase-space grid.
///
/// The jump series is accumulated with the per-order weights folded into
/// the `a^m rho a^dag m` recursion, which keeps every intermediate bounded
/// even at large truncations.
pub fn rho1(
    params: &ModelParams,
    prepared: &FieldDensityMatrix,
    t: f64,
) -> Result<JointDensityMatrix> {
    check_inputs(params, prepared, t)?;
    let n = params.dim();
    let theta = params.theta();
    let zc = zeta(params, t);

    let gamma2 = 2.0 * params.gamma();
    let diag_base = C64::new(gamma2 * jump_weight(params, t), 0.0);
    let coh_base = zc.zeta.conj() * gamma2; // sigma_+ side; sigma_- is the conjugate

    let (sum_diag, sum_plus) = jump_series(prepared.matrix(), diag_base, coh_base);

    // Diagonal conjugating exponentials, applied as entrywise scaling:
    // v[n] = e^{-eta n t} collects both the damping and the dispersive phase.
    let v: Vec<C64> = (0..n).map(|k| (-zc.eta * (k as f64) * t).exp()).collect();
    let atom_decay = (-params.gamma_atom() * t).exp();
    let sin_sq = theta.sin().powi(2);
    let cos_sq = theta.cos().powi(2);
    let half_sin2t = 0.5 * (2.0 * theta).sin();

    let mut out = Array2::<C64>::zeros((2 * n, 2 * n));
    for row in 0..n {
        for col in 0..n {
            let d = sum_diag[(row, col)];
            let p = sum_plus[(row, col)];
            let ee = v[row] * v[col].conj() * (atom_decay * atom_decay);
            let gg = v[row].conj() * v[col];
            let eg = v[row] * v[col] * atom_decay;
            out[(row, col)] = d * ee * sin_sq;
            out[(n + row, n + col)] = d * gg * cos_sq;
            out[(row, n + col)] = p * eg * half_sin2t;
        }
    }
    // ground-excited block is fixed by Hermiticity
    for row in 0..n {
        for col in 0..n {
            out[(n + row, col)] = out[(col, n + row)].conj();
        }
    }
    JointDensityMatrix::new(out)
}

/// Special-case evaluator for an undamped atom prepared in the balanced
/// superposition (`Gamma = 0`, `theta = pi/4`): the diagonal and coherence
/// weights collapse to a single zeta-form series with all four atomic
/// blocks carrying weight 1/2. The general [`rho1`] must reduce to this
/// path exactly.
pub fn rho1_reduced(
    params: &ModelParams,
    prepared: &FieldDensityMatrix,
    t: f64,
) -> Result<JointDensityMatrix> {
    if params.gamma_atom() != 0.0 {
        return Err(Error::InvalidParam(format!(
            "reduced evaluator requires an undamped atom, got atomic decay {}",
            params.gamma_atom()
        )));
    }
    if (params.theta() - std::f64::consts::FRAC_PI_4).abs() > 1e-12 {
        return Err(Error::InvalidParam(format!(
            "reduced evaluator requires theta = pi/4, got {}",
            params.theta()
        )));
    }
    check_inputs(params, prepared, t)?;

    let n = params.dim();
    let zc = zeta(params, t);
    let gamma2 = 2.0 * params.gamma();
    let diag_base = C64::new(gamma2 * jump_weight(params, t), 0.0);
    let coh_base = zc.zeta.conj() * gamma2;
    let (sum_diag, sum_plus) = jump_series(prepared.matrix(), diag_base, coh_base);

    let v: Vec<C64> = (0..n).map(|k| (-zc.eta * (k as f64) * t).exp()).collect();
    let mut out = Array2::<C64>::zeros((2 * n, 2 * n));
    for row in 0..n {
        for col in 0..n {
            let d = sum_diag[(row, col)] * 0.5;
            let p = sum_plus[(row, col)] * 0.5;
            out[(row, col)] = d * (v[row] * v[col].conj());
            out[(n + row, n + col)] = d * (v[row].conj() * v[col]);
            out[(row, n + col)] = p * (v[row] * v[col]);
        }
    }
    for row in 0..n {
        for col in 0..n {
            out[(n + row, col)] = out[(col, n + row)].conj();
        }
    }
    JointDensityMatrix::new(out)
}

/// Accumulate the two weighted jump series
/// `sum_m base^m/m! a^m rho a^dag m` (diagonal and coherence weights) in a
/// single pass over the recursion. The series terminates exactly at
/// `m = N - 1`.
fn jump_series(
    prepared: &Array2<C64>,
    diag_base: C64,
    coh_base: C64,
) -> (Array2<C64>, Array2<C64>) {
    let mut sum_diag = prepared.clone();
    let mut sum_plus = prepared.clone();
    let mut w_diag = prepared.clone();
    let mut w_plus = prepared.clone();
    let n = prepared.nrows();
    for m in 1..n {
        let inv = 1.0 / m as f64;
        let sandwich_d = fock::lower_sandwich(&w_diag);
        w_diag = sandwich_d.mapv(|z| z * diag_base * inv);
        let sandwich_p = fock::lower_sandwich(&w_plus);
        w_plus = sandwich_p.mapv(|z| z * coh_base * inv);
        if linalg::max_abs(&w_diag) == 0.0 && linalg::max_abs(&w_plus) == 0.0 {
            break;
        }
        sum_diag += &w_diag;
        sum_plus += &w_plus;
    }
    (sum_diag, sum_plus)
}

/// The atomic-jump branch `rho_2(t)`, proportional to
/// `2 Gamma sin^2(theta)` and supported on the ground-ground block.
///
/// The superoperator function `(1 - e^{-(R_F + 2 Gamma)t})/(R_F + 2 Gamma)`
/// acts on `|n><n'|` as multiplication by
/// `(1 - e^{-lambda t})/lambda` with `lambda = 2 Gamma + 2 i chi (n - n')`.
pub fn rho2(
    params: &ModelParams,
    prepared: &FieldDensityMatrix,
    t: f64,
) -> Result<JointDensityMatrix> {
    check_inputs(params, prepared, t)?;
    let n = params.dim();
    let big_gamma = params.gamma_atom();
    let strength = 2.0 * big_gamma * params.theta().sin().powi(2);
    if strength == 0.0 {
        return JointDensityMatrix::new(Array2::zeros((2 * n, 2 * n)));
    }

    let jump_base = C64::new(2.0 * params.gamma() * jump_weight(params, t), 0.0);
    let m_sum = single_base_jump_series(prepared.matrix(), jump_base);

    let chi = params.chi();
    let gamma = params.gamma();
    // outer diagonal factor e^{(i chi - gamma) n t} ... e^{(-i chi - gamma) n' t}
    let u: Vec<C64> = (0..n)
        .map(|k| (C64::new(-gamma, chi) * (k as f64) * t).exp())
        .collect();

    let mut out = Array2::<C64>::zeros((2 * n, 2 * n));
    for row in 0..n {
        for col in 0..n {
            let lambda = C64::new(2.0 * big_gamma, 2.0 * chi * (row as f64 - col as f64));
            // Re(lambda) = 2 Gamma > 0 here, so the resolvent is regular
            let phi = (1.0 - (-lambda * t).exp()) / lambda;
            out[(n + row, n + col)] =
                m_sum[(row, col)] * u[row] * u[col].conj() * phi * strength;
        }
    }
    JointDensityMatrix::new(out)
}

fn single_base_jump_series(prepared: &Array2<C64>, base: C64) -> Array2<C64> {
    let mut sum = prepared.clone();
    let mut w = prepared.clone();
    let n = prepared.nrows();
    for m in 1..n {
        let sandwich = fock::lower_sandwich(&w);
        w = sandwich.mapv(|z| z * base / m as f64);
        if linalg::max_abs(&w) == 0.0 {
            break;
        }
        sum += &w;
    }
    sum
}

/// The printed-series route to `rho_2`: binomial expansion of the
/// superoperator resolvent,
///
/// ```text
/// (1 - e^{-x t})/x = sum_l (-x)^l t^{l+1}/(l+1)!,
/// x^l = sum_k C(l,k) (2 Gamma)^{l-k} R_F^k,
/// R_F^k rho = (2 i chi)^k sum_j (-1)^j C(k,j) n^{k-j} rho n^j,
/// ```
///
/// truncated at `l = l_max`. Slowly convergent and cancellation-prone at
/// large `chi t (n - n')`; kept only as a small-dimension cross-check of
/// the spectral path in [`rho2`], including its operator ordering
/// (left powers `n^{k-j}`, right powers `n^j`).
pub fn rho2_series(
    params: &ModelParams,
    prepared: &FieldDensityMatrix,
    t: f64,
    l_max: usize,
) -> Result<JointDensityMatrix> {
    check_inputs(params, prepared, t)?;
    let n = params.dim();
    let big_gamma = params.gamma_atom();
    let strength = 2.0 * big_gamma * params.theta().sin().powi(2);
    if strength == 0.0 {
        return JointDensityMatrix::new(Array2::zeros((2 * n, 2 * n)));
    }

    let jump_base = C64::new(2.0 * params.gamma() * jump_weight(params, t), 0.0);
    let m_sum = single_base_jump_series(prepared.matrix(), jump_base);

    let chi = params.chi();
    let gamma = params.gamma();
    let u: Vec<C64> = (0..n)
        .map(|k| (C64::new(-gamma, chi) * (k as f64) * t).exp())
        .collect();

    // binomial table up to l_max
    let mut binom = vec![vec![0.0_f64; l_max + 1]; l_max + 1];
    for l in 0..=l_max {
        binom[l][0] = 1.0;
        for k in 1..=l {
            binom[l][k] = binom[l - 1][k - 1] + if k <= l - 1 { binom[l - 1][k] } else { 0.0 };
        }
    }
    let mut factorial = vec![1.0_f64; l_max + 2];
    for k in 1..=l_max + 1 {
        factorial[k] = factorial[k - 1] * k as f64;
    }

    let mut out = Array2::<C64>::zeros((2 * n, 2 * n));
    for row in 0..n {
        for col in 0..n {
            let mut resolvent = C64::new(0.0, 0.0);
            for l in 0..=l_max {
                let sign_l = if l % 2 == 0 { 1.0 } else { -1.0 };
                let t_weight = t.powi(l as i32 + 1) / factorial[l + 1];
                let mut x_power = C64::new(0.0, 0.0);
                for k in 0..=l {
                    // R_F^k on |row><col|, expanded literally over j
                    let mut rf_k = C64::new(0.0, 0.0);
                    for j in 0..=k {
                        let sign_j = if j % 2 == 0 { 1.0 } else { -1.0 };
                        rf_k += C64::new(
                            sign_j
                                * binom[k][j]
                                * (row as f64).powi((k - j) as i32)
                                * (col as f64).powi(j as i32),
                            0.0,
                        );
                    }
                    let two_i_chi_k = C64::new(0.0, 2.0 * chi).powi(k as i32);
                    x_power += rf_k
                        * two_i_chi_k
                        * binom[l][k]
                        * (2.0 * big_gamma).powi((l - k) as i32);
                }
                resolvent += x_power * sign_l * t_weight;
            }
            out[(n + row, n + col)] =
                m_sum[(row, col)] * u[row] * u[col].conj() * resolvent * strength;
        }
    }
    JointDensityMatrix::new(out)
}

/// Full closed-form state `rho(t) = rho_1(t) + rho_2(t)`.
pub fn evolve_closed_form(
    params: &ModelParams,
    prepared: &FieldDensityMatrix,
    t: f64,
) -> Result<JointDensityMatrix> {
    rho1(params, prepared, t)?.add(&rho2(params, prepared, t)?)
}

/// Complex coherence weight `z(t) = (gamma + i chi e^{-2 eta t})/eta`,
/// `eta = gamma + i chi`: the single number through which the initial field
/// diagonal enters the polarization.
pub(crate) fn z_weight(params: &ModelParams, t: f64) -> C64 {
    let eta = C64::new(params.gamma(), params.chi());
    (C64::new(params.gamma(), 0.0)
        + C64::new(0.0, params.chi()) * (-2.0 * eta * t).exp())
        / eta
}

/// Closed-form atomic polarization
///
/// ```text
/// <sigma_x>(t) = 1/2 sin(2 theta) e^{-Gamma t}
///                Re sum_k z(t)^k <k| D^dag(alpha) rho_F(0) D(alpha) |k>,
/// ```
///
/// with the `k`-sum running over the full truncated basis. The atomic-jump
/// branch contributes nothing: `rho_2` lives in the ground-ground block
/// where `sigma_x` has no diagonal.
pub fn sigma_x_closed(
    params: &ModelParams,
    rho_f0: &FieldDensityMatrix,
    alpha: C64,
    t: f64,
) -> Result<f64> {
    check_inputs(params, rho_f0, t)?;
    let n = params.dim();
    let d = fock::displacement(alpha, n)?;
    let diag = linalg::conjugated_diagonal(rho_f0.matrix(), d.matrix());

    let z = z_weight(params, t);
    let mut z_pow = C64::new(1.0, 0.0);
    let mut sum = C64::new(0.0, 0.0);
    for dk in diag.iter().take(n) {
        sum += z_pow * dk;
        z_pow *= z;
    }
    Ok(0.5 * (2.0 * params.theta()).sin() * (-params.gamma_atom() * t).exp() * sum.re)
}
