//! The measurement protocol: pick the interaction time at which the
//! coherence weight `z(t) = (gamma + i chi e^{-2 eta t})/eta` turns
//! real-negative (phase `pi`), read off `mu = |z|` and the reconstructed
//! order `s = (mu - 1)/(mu + 1)`, then invert the measured polarization
//! into a quasiprobability value,
//!
//! ```text
//! <sigma_x> = prefactor . F(alpha, s),
//! prefactor = (1 - s) pi/2 sin(2 theta) e^{-Gamma t*}   (paper convention,
//!                                                        halved when normalized).
//! ```
//!
//! At `phi = pi` the series factor is `(-mu)^k` and `(s+1)/(s-1) = -mu`
//! forces the mapping above; an ideal cavity (`gamma = 0`) gives `mu = 1`,
//! `s = 0`, i.e. the Wigner function.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::analytic;
use crate::error::{Error, Result};
use crate::fock::{
    self, atom_superposition, displacement_guideline_ok, FieldDensityMatrix, JointDensityMatrix,
};
use crate::linalg;
use crate::lindblad::{self, IntegratorConfig, ModelParams};
use crate::qpd::{self, PhaseGrid, QpdConvention};

/// Relative bisection tolerance on the crossing time.
const T_STAR_REL_TOL: f64 = 1e-12;

/// Evolution engine for a reconstruction run.
#[derive(Debug, Clone, Copy)]
pub enum Engine {
    /// Closed-form `rho_1 + rho_2`.
    Analytic,
    /// Brute-force RK4 integration of the master equation.
    Oracle(IntegratorConfig),
}

impl Engine {
    pub fn label(&self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Oracle(_) => "oracle",
        }
    }
}

/// Everything fixed once the interaction time is chosen.
#[derive(Debug, Clone, Copy)]
pub struct MeasurementSchedule {
    /// First time with `Im z = 0`, `Re z < 0`.
    pub t_star: f64,
    /// `mu = |z(t_star)|`, in `(0, 1]`.
    pub mu: f64,
    /// Phase of `z(t_star)`; `pi` by construction of the crossing.
    pub phi: f64,
    /// Reconstructed order `s = (mu - 1)/(mu + 1)`, in `(-1, 0]`.
    pub s: f64,
    /// Divisor mapping the measured polarization to `F(alpha, s)`.
    pub prefactor: f64,
    /// Quasiprobability convention the prefactor is paired with.
    pub convention: QpdConvention,
}

/// One reconstructed phase-space point.
#[derive(Debug, Clone, Copy)]
pub struct ReconstructionRecord {
    pub alpha: C64,
    /// Measured (simulated) atomic polarization at `t_star`.
    pub sigma_x: f64,
    /// Reconstructed quasiprobability `<sigma_x>/prefactor`.
    pub f_hat: f64,
    /// Directly computed `F(alpha, s)` of the true initial field.
    pub f_direct: f64,
    pub abs_error: f64,
    /// Set when the displacement guideline or the series tail monitor
    /// indicates truncation artifacts at this point.
    pub truncation_warning: bool,
}

/// Small-angle variant of a reconstruction, reporting both inversions.
#[derive(Debug, Clone, Copy)]
pub struct SmallThetaRecord {
    /// Exact-inversion record.
    pub record: ReconstructionRecord,
    /// Reconstruction through the linearized prefactor `(1-s) pi theta e^{-Gamma t}`.
    pub f_hat_approx: f64,
    /// `|approx - exact| / |exact|`.
    pub relative_gap: f64,
}

/// Complex coherence weight `z(t) = (gamma + i chi e^{-2 eta t})/eta`.
pub fn z_factor(params: &ModelParams, t: f64) -> C64 {
    analytic::z_weight(params, t)
}

/// Which form of the zero-crossing function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingVariant {
    /// `epsilon + e^{-2 gamma t}(sin 2 chi t - epsilon cos 2 chi t)`,
    /// proportional to `-Im z(t) |eta|^2 / chi^2`; the schedule search
    /// uses this one.
    Derived,
    /// `epsilon + e^{-2 gamma t}(sin chi t - epsilon cos chi t)`: the same
    /// expression with halved trigonometric arguments, matching the
    /// published curve; kept solely for bit-faithful figure reproduction.
    FigureLiteral,
}

/// Zero-crossing function whose sign changes locate candidate measurement
/// times.
pub fn crossing_function(params: &ModelParams, t: f64, variant: CrossingVariant) -> f64 {
    let eps = params.epsilon();
    let decay = (-2.0 * params.gamma() * t).exp();
    let arg = match variant {
        CrossingVariant::Derived => 2.0 * params.chi() * t,
        CrossingVariant::FigureLiteral => params.chi() * t,
    };
    eps + decay * (arg.sin() - eps * arg.cos())
}

/// Default search horizon, four dispersive periods.
pub fn default_horizon(params: &ModelParams) -> f64 {
    4.0 * std::f64::consts::PI / params.chi()
}

/// Find the first `t* in (0, horizon]` with `Im z(t*) = 0` and
/// `Re z(t*) < 0`, and fix the full measurement schedule from it.
///
/// Scan-then-bisect on the derived crossing function with a fixed step
/// `pi/(50 chi)`; the search starts one step in because `g(0) = 0` exactly.
/// Crossings whose `Re z > 0` (phase 0 rather than pi) are skipped. When no
/// usable crossing exists within the horizon — large `epsilon = gamma/chi` —
/// the protocol is inapplicable at these rates and [`Error::NoCrossing`]
/// says so.
pub fn find_measurement_time(
    params: &ModelParams,
    horizon: f64,
    convention: QpdConvention,
) -> Result<MeasurementSchedule> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParam(format!(
            "search horizon must be finite and > 0, got {horizon}"
        )));
    }
    let g = |t: f64| crossing_function(params, t, CrossingVariant::Derived);
    let step = std::f64::consts::PI / (50.0 * params.chi());

    let mut prev_t = step;
    let mut prev_g = g(step);
    let mut k = 2usize;
    loop {
        let t = (k as f64) * step;
        if prev_t >= horizon {
            return Err(Error::NoCrossing { horizon });
        }
        let t = t.min(horizon);
        let cur_g = g(t);
        if prev_g == 0.0 || prev_g * cur_g < 0.0 {
            let root = if prev_g == 0.0 {
                prev_t
            } else {
                bisect(&g, prev_t, t)
            };
            let z = z_factor(params, root);
            if z.re < 0.0 {
                return Ok(schedule_at(params, root, convention));
            }
        }
        prev_t = t;
        prev_g = cur_g;
        k += 1;
    }
}

fn bisect(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut g_lo = g(lo);
    while hi - lo > T_STAR_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return mid;
        }
        if g_lo * g_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            g_lo = g_mid;
        }
    }
    0.5 * (lo + hi)
}

fn schedule_at(params: &ModelParams, t_star: f64, convention: QpdConvention) -> MeasurementSchedule {
    let mu = z_factor(params, t_star).norm();
    let s = (mu - 1.0) / (mu + 1.0);
    let base = (1.0 - s) * std::f64::consts::PI / 2.0
        * (2.0 * params.theta()).sin()
        * (-params.gamma_atom() * t_star).exp();
    let prefactor = match convention {
        QpdConvention::PaperLiteral => base,
        QpdConvention::Normalized => base / 2.0,
    };
    MeasurementSchedule {
        t_star,
        mu,
        phi: std::f64::consts::PI,
        s,
        prefactor,
        convention,
    }
}

/// Displaced field matrix `D^dag(alpha) rho_F(0) D(alpha)`.
///
/// Kept separate from the joint preparation so one initial state serves a
/// whole grid of displacements.
pub fn prepare_field(
    params: &ModelParams,
    rho_f0: &FieldDensityMatrix,
    alpha: C64,
) -> Result<FieldDensityMatrix> {
    if rho_f0.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: rho_f0.dim(),
        });
    }
    let d = fock::displacement(alpha, params.dim())?;
    let displaced = linalg::mm(
        &linalg::mm(&linalg::dagger(d.matrix()), rho_f0.matrix()),
        d.matrix(),
    );
    // the truncated displacement is exactly unitary, so the spectrum is
    // untouched; hermitize only sweeps rounding
    FieldDensityMatrix::new(linalg::hermitize(&displaced))
}

/// Full initial state
/// `|psi_A(theta)><psi_A(theta)| (x) D^dag(alpha) rho_F(0) D(alpha)`.
pub fn prepare_initial(
    params: &ModelParams,
    rho_f0: &FieldDensityMatrix,
    alpha: C64,
) -> Result<JointDensityMatrix> {
    let field = prepare_field(params, rho_f0, alpha)?;
    JointDensityMatrix::new(fock::tensor_raw(
        atom_superposition(params.theta()).matrix(),
        field.matrix(),
    ))
}

/// Simulate one measurement at `alpha` and invert it.
///
/// Evolves the prepared state to `t_star` with the chosen engine, computes
/// `<sigma_x>`, divides by the schedule prefactor, and compares against the
/// directly evaluated `F(alpha, s)` of the undisplaced initial field.
pub fn reconstruct_point(
    params: &ModelParams,
    rho_f0: &FieldDensityMatrix,
    alpha: C64,
    schedule: &MeasurementSchedule,
    engine: &Engine,
) -> Result<ReconstructionRecord> {
    if schedule.prefactor == 0.0 {
        return Err(Error::InvalidParam(
            "schedule prefactor is zero (sin 2 theta = 0): no polarization signal to invert"
                .into(),
        ));
    }
    let sigma_x = match engine {
        Engine::Analytic => {
            let prepared = prepare_field(params, rho_f0, alpha)?;
            let evolved = analytic::evolve_closed_form(params, &prepared, schedule.t_star)?;
            lindblad::sigma_x_trace(&evolved)
        }
        Engine::Oracle(cfg) => {
            let rho0 = prepare_initial(params, rho_f0, alpha)?;
            let out = lindblad::evolve_rk4(&rho0, params, schedule.t_star, cfg)?;
            lindblad::sigma_x_trace(&out.state)
        }
    };
    let f_hat = sigma_x / schedule.prefactor;
    let direct = qpd::qpd_direct(rho_f0, alpha, schedule.s, schedule.convention)?;
    Ok(ReconstructionRecord {
        alpha,
        sigma_x,
        f_hat,
        f_direct: direct.value,
        abs_error: (f_hat - direct.value).abs(),
        truncation_warning: !displacement_guideline_ok(alpha, params.dim())
            || direct.tail_suspect(),
    })
}

/// Reconstruct every grid point, row-major; points run in parallel with
/// deterministic assembly.
pub fn reconstruct_grid(
    params: &ModelParams,
    rho_f0: &FieldDensityMatrix,
    grid: &PhaseGrid,
    schedule: &MeasurementSchedule,
    engine: &Engine,
) -> Result<Vec<ReconstructionRecord>> {
    let points: Vec<(usize, usize, C64)> = grid.points().collect();
    points
        .par_iter()
        .map(|&(_, _, alpha)| {
            reconstruct_point(params, rho_f0, alpha, schedule, engine).map_err(|e| {
                Error::AtGridPoint {
                    re: alpha.re,
                    im: alpha.im,
                    source: Box::new(e),
                }
            })
        })
        .collect()
}

/// Largest admissible angle for the small-angle inversion.
pub const SMALL_THETA_MAX: f64 = 0.05;

/// Reconstruction in the small-`theta` regime (atom almost entirely in the
/// ground state), using the linearized inversion `sin 2 theta -> 2 theta`.
/// Reports the approximate inversion next to the exact one.
///
/// Rejects `theta > 0.05` (linearization no longer controlled) and
/// `theta = 0` (no signal at all).
pub fn small_theta_estimate(
    params: &ModelParams,
    rho_f0: &FieldDensityMatrix,
    alpha: C64,
    schedule: &MeasurementSchedule,
    engine: &Engine,
) -> Result<SmallThetaRecord> {
    let theta = params.theta();
    if !(theta > 0.0 && theta <= SMALL_THETA_MAX) {
        return Err(Error::ThetaOutOfRange {
            theta,
            max: SMALL_THETA_MAX,
        });
    }
    let record = reconstruct_point(params, rho_f0, alpha, schedule, engine)?;
    // exact prefactor carries sin(2 theta)/2; the approximation replaces it
    // by theta
    let approx_prefactor = schedule.prefactor * (2.0 * theta) / (2.0 * theta).sin();
    let f_hat_approx = record.sigma_x / approx_prefactor;
    let relative_gap = (f_hat_approx - record.f_hat).abs() / record.f_hat.abs().max(f64::MIN_POSITIVE);
    Ok(SmallThetaRecord {
        record,
        f_hat_approx,
        relative_gap,
    })
}

/// Dense `sigma_x (x) 1` on the joint space; mostly for tests and examples.
pub fn sigma_x_joint(dim: usize) -> Result<Array2<C64>> {
    let eye = fock::FockOperator::new(linalg::identity(dim))?;
    Ok(fock::tensor_atom_field(&fock::AtomOperator::sigma_x(), &eye))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, vacuum_state};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn params(chi: f64, gamma: f64, gamma_atom: f64, theta: f64, dim: usize) -> ModelParams {
        ModelParams::new(chi, gamma, gamma_atom, theta, dim).unwrap()
    }

    #[test]
    fn z_factor_limits() {
        let p = params(1.3, 0.2, 0.0, 0.3, 4);
        assert!((z_factor(&p, 0.0) - C64::new(1.0, 0.0)).norm() < 1e-15);

        let ideal = params(1.3, 0.0, 0.0, 0.3, 4);
        for t in [0.1, 0.7, 2.0] {
            let expect = (C64::new(0.0, -2.0 * 1.3 * t)).exp();
            assert!((z_factor(&ideal, t) - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn z_modulus_matches_printed_mu_with_doubled_argument() {
        // |z(t)|^2 = (eps^2 + e^{-4 gamma t} + 2 eps sin(2 chi t) e^{-2 gamma t})/(1 + eps^2):
        // the printed closed form holds only with the doubled argument.
        let p = params(1.0, 0.05, 0.0, 0.3, 4);
        let eps = p.epsilon();
        let mu_printed = |arg: f64, t: f64| {
            ((eps * eps + (-4.0 * p.gamma() * t).exp()
                + 2.0 * eps * arg.sin() * (-2.0 * p.gamma() * t).exp())
                / (1.0 + eps * eps))
                .sqrt()
        };
        for t in [0.3, 0.7, 1.2] {
            let mu = z_factor(&p, t).norm();
            assert_abs_diff_eq!(mu, mu_printed(2.0 * t, t), epsilon = 1e-12);
            assert!((mu - mu_printed(t, t)).abs() > 1e-6);
        }
    }

    #[test]
    fn crossing_function_starts_at_zero() {
        let p = params(1.0, 0.05, 0.0, 0.3, 4);
        assert_eq!(crossing_function(&p, 0.0, CrossingVariant::Derived), 0.0);
        assert_eq!(
            crossing_function(&p, 0.0, CrossingVariant::FigureLiteral),
            0.0
        );
    }

    #[test]
    fn figure_literal_bracketing() {
        let p = params(1.0, 0.05, 0.0, 0.3, 4);
        let eps = 0.05;
        let at_pi = crossing_function(&p, PI, CrossingVariant::FigureLiteral);
        assert_abs_diff_eq!(at_pi, eps * (1.0 + (-2.0 * eps * PI).exp()), epsilon = 1e-15);
        assert!(at_pi > 0.0);
        let at_3pi2 = crossing_function(&p, 1.5 * PI, CrossingVariant::FigureLiteral);
        assert_abs_diff_eq!(at_3pi2, eps - (-3.0 * eps * PI).exp(), epsilon = 1e-15);
        assert!(at_3pi2 < 0.0);
    }

    #[test]
    fn derived_crossing_tracks_im_z() {
        let p = params(0.8, 0.12, 0.0, 0.3, 4);
        let scale = (p.chi() * p.chi() + p.gamma() * p.gamma()) / (p.chi() * p.chi());
        let mut t = 0.013_f64;
        for _ in 0..100 {
            let g = crossing_function(&p, t, CrossingVariant::Derived);
            let im_z = z_factor(&p, t).im;
            assert!((g + im_z * scale).abs() <= 1e-12);
            t += 0.11;
        }
    }

    #[test]
    fn ideal_cavity_schedule() {
        let p = params(2.0, 0.0, 0.0, FRAC_PI_4, 4);
        let sched =
            find_measurement_time(&p, default_horizon(&p), QpdConvention::PaperLiteral).unwrap();
        assert_abs_diff_eq!(sched.t_star, PI / (2.0 * p.chi()), epsilon = 1e-9);
        assert_abs_diff_eq!(sched.mu, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sched.s, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sched.phi, PI, epsilon = 0.0);
    }

    #[test]
    fn lossy_schedule_brackets_and_invariants() {
        let p = params(1.0, 0.05, 0.1, PI / 5.0, 4);
        let sched =
            find_measurement_time(&p, default_horizon(&p), QpdConvention::Normalized).unwrap();
        assert!(sched.t_star > FRAC_PI_2 && sched.t_star < 0.75 * PI);
        let z = z_factor(&p, sched.t_star);
        assert!(z.im.abs() <= 1e-10, "Im z = {:.3e}", z.im);
        assert!(z.re < 0.0);
        assert!(sched.mu > 0.0 && sched.mu <= 1.0);
        assert!(sched.s > -1.0 && sched.s <= 0.0);
    }

    #[test]
    fn overdamped_regime_has_no_crossing() {
        let p = params(1.0, 5.0, 0.0, 0.3, 4);
        assert!(matches!(
            find_measurement_time(&p, default_horizon(&p), QpdConvention::Normalized),
            Err(Error::NoCrossing { .. })
        ));
    }

    #[test]
    fn loss_is_monotone_in_gamma() {
        let mut last_mu = 1.0_f64;
        let mut last_s = 0.0_f64;
        for gamma in [0.01, 0.05, 0.1, 0.2] {
            let p = params(1.0, gamma, 0.0, FRAC_PI_4, 4);
            let sched =
                find_measurement_time(&p, default_horizon(&p), QpdConvention::Normalized).unwrap();
            assert!(sched.mu <= last_mu + 1e-12);
            assert!(sched.s <= last_s + 1e-12);
            last_mu = sched.mu;
            last_s = sched.s;
        }
    }

    #[test]
    fn preparation_at_zero_displacement_is_plain_tensor() {
        let p = params(1.0, 0.05, 0.1, 0.4, 8);
        let field = coherent_state(C64::new(0.5, 0.1), 8).unwrap();
        let joint = prepare_initial(&p, &field, C64::new(0.0, 0.0)).unwrap();
        let expect = fock::tensor_raw(atom_superposition(0.4).matrix(), field.matrix());
        assert!(linalg::max_abs_diff(joint.matrix(), &expect) < 1e-15);
    }

    #[test]
    fn ground_atom_preparation() {
        let p = params(1.0, 0.05, 0.1, 0.0, 6);
        let field = vacuum_state(6).unwrap();
        let joint = prepare_initial(&p, &field, C64::new(0.3, 0.0)).unwrap();
        // everything in the ground-ground block
        assert_eq!(linalg::max_abs(&joint.block(0, 0).to_owned()), 0.0);
        assert_eq!(linalg::max_abs(&joint.block(0, 1).to_owned()), 0.0);
        assert_abs_diff_eq!(joint.trace(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn prepared_diagonal_is_displaced_number_expectation() {
        // <k| D^dag rho D |k> = <alpha,k| rho |alpha,k> with |alpha,k> = D|k>
        let dim = 24;
        let p = params(1.0, 0.05, 0.1, 0.4, dim);
        let field = coherent_state(C64::new(0.6, -0.2), dim).unwrap();
        let alpha = C64::new(0.4, 0.3);
        let prepared = prepare_field(&p, &field, alpha).unwrap();
        let d = fock::displacement(alpha, dim).unwrap();
        for k in 0..dim {
            // u = D|k> is the k-th column of D
            let mut braket = C64::new(0.0, 0.0);
            for i in 0..dim {
                for j in 0..dim {
                    braket += d.matrix()[(i, k)].conj() * field.matrix()[(i, j)]
                        * d.matrix()[(j, k)];
                }
            }
            assert!((prepared.matrix()[(k, k)] - braket).norm() < 1e-12);
        }
    }

    #[test]
    fn near_ideal_cavity_reconstructs_vacuum_wigner() {
        let dim = 16;
        let p = params(1.0, 1e-9, 0.0, FRAC_PI_4, dim);
        let field = vacuum_state(dim).unwrap();
        let sched =
            find_measurement_time(&p, default_horizon(&p), QpdConvention::PaperLiteral).unwrap();
        assert!(sched.s.abs() <= 1e-6);
        let rec = reconstruct_point(&p, &field, C64::new(0.0, 0.0), &sched, &Engine::Analytic)
            .unwrap();
        assert_abs_diff_eq!(rec.f_hat, 1.0 / PI, epsilon = 1e-6);
        // cross-check: half the parity-form Wigner value
        let w = qpd::wigner_parity(&field, C64::new(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(rec.f_hat, w / 2.0, epsilon = 1e-6);
    }

    #[test]
    fn prefactor_absorbs_angle_and_atomic_decay() {
        let dim = 24;
        let field = coherent_state(C64::new(0.5, 0.0), dim).unwrap();
        let alpha = C64::new(0.4, -0.2);
        let reference = {
            let p = params(1.0, 0.05, 0.0, FRAC_PI_4, dim);
            let sched =
                find_measurement_time(&p, default_horizon(&p), QpdConvention::Normalized).unwrap();
            reconstruct_point(&p, &field, alpha, &sched, &Engine::Analytic).unwrap()
        };
        let damped = {
            let p = params(1.0, 0.05, 0.1, PI / 5.0, dim);
            let sched =
                find_measurement_time(&p, default_horizon(&p), QpdConvention::Normalized).unwrap();
            reconstruct_point(&p, &field, alpha, &sched, &Engine::Analytic).unwrap()
        };
        assert_abs_diff_eq!(reference.f_hat, damped.f_hat, epsilon = 1e-6);
        // the raw polarizations do differ
        assert!((reference.sigma_x - damped.sigma_x).abs() > 1e-3);
    }

    #[test]
    fn end_to_end_identity_on_a_small_grid() {
        let dim = 32;
        let p = params(1.0, 0.05, 0.1, PI / 5.0, dim);
        let field = coherent_state(C64::new(0.5, 0.3), dim).unwrap();
        let sched =
            find_measurement_time(&p, default_horizon(&p), QpdConvention::Normalized).unwrap();
        let grid = PhaseGrid::centered_square(1.5, 5).unwrap();
        let records =
            reconstruct_grid(&p, &field, &grid, &sched, &Engine::Analytic).unwrap();
        assert_eq!(records.len(), 25);
        let worst = records.iter().map(|r| r.abs_error).fold(0.0_f64, f64::max);
        assert!(worst <= 1e-5, "max |f_hat - f_direct| = {worst:.3e}");
    }

    #[test]
    fn single_point_grid_reduces_to_point() {
        let dim = 16;
        let p = params(1.0, 0.05, 0.1, PI / 5.0, dim);
        let field = vacuum_state(dim).unwrap();
        let sched =
            find_measurement_time(&p, default_horizon(&p), QpdConvention::Normalized).unwrap();
        let grid = PhaseGrid::new(0.2, 0.2, -0.1, -0.1, 1, 1).unwrap();
        let from_grid =
            reconstruct_grid(&p, &field, &grid, &sched, &Engine::Analytic).unwrap();
        let direct = reconstruct_point(&p, &field, C64::new(0.2, -0.1), &sched, &Engine::Analytic)
            .unwrap();
        assert_eq!(from_grid.len(), 1);
        assert_eq!(from_grid[0].f_hat, direct.f_hat);
    }

    #[test]
    fn small_theta_gap_follows_the_expansion() {
        let dim = 16;
        let field = vacuum_state(dim).unwrap();
        let alpha = C64::new(0.0, 0.0);
        // relative gap approx (2 theta)^2 / 6
        for (theta, expect, tol) in [(0.01, 6.7e-5, 4e-5), (0.05, 1.7e-3, 2e-4)] {
            let p = params(1.0, 0.05, 0.1, theta, dim);
            let sched =
                find_measurement_time(&p, default_horizon(&p), QpdConvention::Normalized).unwrap();
            let out =
                small_theta_estimate(&p, &field, alpha, &sched, &Engine::Analytic).unwrap();
            assert!(
                (out.relative_gap - expect).abs() <= tol,
                "theta {theta}: gap {:.3e}",
                out.relative_gap
            );
        }
        assert!(matches!(
            {
                let p = params(1.0, 0.05, 0.1, 0.06, dim);
                let sched = find_measurement_time(&p, default_horizon(&p), QpdConvention::Normalized)
                    .unwrap();
                small_theta_estimate(&p, &field, alpha, &sched, &Engine::Analytic)
            },
            Err(Error::ThetaOutOfRange { .. })
        ));
        assert!(matches!(
            {
                let p = params(1.0, 0.05, 0.1, 0.0, dim);
                let sched = schedule_at(&p, 1.5, QpdConvention::Normalized);
                small_theta_estimate(&p, &field, alpha, &sched, &Engine::Analytic)
            },
            Err(Error::ThetaOutOfRange { .. })
        ));
    }

    #[test]
    fn oracle_engine_agrees_with_analytic() {
        let dim = 12;
        let p = params(1.0, 0.05, 0.1, PI / 5.0, dim);
        let field = coherent_state(C64::new(0.4, 0.0), dim).unwrap();
        let sched =
            find_measurement_time(&p, default_horizon(&p), QpdConvention::Normalized).unwrap();
        let alpha = C64::new(0.3, 0.2);
        let analytic_rec =
            reconstruct_point(&p, &field, alpha, &sched, &Engine::Analytic).unwrap();
        let cfg = IntegratorConfig::new(1e-3, false, 1e-6).unwrap();
        let oracle_rec =
            reconstruct_point(&p, &field, alpha, &sched, &Engine::Oracle(cfg)).unwrap();
        assert_abs_diff_eq!(analytic_rec.f_hat, oracle_rec.f_hat, epsilon = 1e-4);
        assert!(analytic_rec.abs_error <= 1e-10);
        assert!(oracle_rec.abs_error <= 1e-3);
    }
}
