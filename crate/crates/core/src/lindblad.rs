//! Brute-force numerical integration of the dispersive master equation
//!
//! ```text
//! drho/dt = -i chi [n sigma_z, rho]
//!           + 2 gamma a rho adag - gamma (n rho + rho n)
//!           + 2 Gamma sigma_- rho sigma_+ - Gamma (sigma_+ sigma_- rho + rho sigma_+ sigma_-)
//! ```
//!
//! (Lindblad form; see Breuer & Petruccione, "The Theory of Open Quantum
//! Systems", ch. 3). This module is the independent oracle for every
//! closed-form result in [`crate::analytic`]: a fixed-step classic RK4,
//! deterministic and reproducible, with its accuracy established by
//! step-halving rather than adaptivity.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::JointDensityMatrix;
use crate::linalg;

/// Physical rates and truncation of the model.
///
/// `chi` is the dispersive coupling, `gamma` the field decay rate, and
/// `gamma_atom` the atomic decay rate (the capital Gamma of the usual
/// notation). `theta` parametrizes the initial atomic superposition
/// `sin(theta)|e> + cos(theta)|g>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    chi: f64,
    gamma: f64,
    gamma_atom: f64,
    theta: f64,
    dim: usize,
}

impl ModelParams {
    pub const MAX_DIM: usize = 256;

    pub fn new(chi: f64, gamma: f64, gamma_atom: f64, theta: f64, dim: usize) -> Result<Self> {
        if !(chi.is_finite() && chi > 0.0) {
            return Err(Error::InvalidParam(format!(
                "dispersive coupling chi must be finite and > 0, got {chi}"
            )));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "field decay rate gamma must be finite and >= 0, got {gamma}"
            )));
        }
        if !(gamma_atom.is_finite() && gamma_atom >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "atomic decay rate must be finite and >= 0, got {gamma_atom}"
            )));
        }
        if !(theta.is_finite() && (0.0..=std::f64::consts::FRAC_PI_2).contains(&theta)) {
            return Err(Error::InvalidParam(format!(
                "superposition angle theta must lie in [0, pi/2], got {theta}"
            )));
        }
        if !(2..=Self::MAX_DIM).contains(&dim) {
            return Err(Error::InvalidParam(format!(
                "Fock truncation must lie in [2, {}], got {dim}",
                Self::MAX_DIM
            )));
        }
        Ok(Self {
            chi,
            gamma,
            gamma_atom,
            theta,
            dim,
        })
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// Field decay rate.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Atomic decay rate.
    pub fn gamma_atom(&self) -> f64 {
        self.gamma_atom
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Fock truncation.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Decay-to-coupling ratio `epsilon = gamma / chi`.
    pub fn epsilon(&self) -> f64 {
        self.gamma / self.chi
    }

    /// Same rates at a different superposition angle.
    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::new(self.chi, self.gamma, self.gamma_atom, theta, self.dim)
    }

    /// Same model with different decay rates.
    pub fn with_rates(&self, gamma: f64, gamma_atom: f64) -> Result<Self> {
        Self::new(self.chi, gamma, gamma_atom, self.theta, self.dim)
    }
}

/// Fixed-step integrator settings.
///
/// No mid-run renormalization by default: trace drift is a diagnostic, not
/// noise to hide.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    dt: f64,
    renormalize: bool,
    drift_tolerance: f64,
}

impl IntegratorConfig {
    pub fn new(dt: f64, renormalize: bool, drift_tolerance: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParam(format!(
                "integrator step dt must be finite and > 0, got {dt}"
            )));
        }
        if !(drift_tolerance.is_finite() && drift_tolerance > 0.0) {
            return Err(Error::InvalidParam(format!(
                "drift tolerance must be finite and > 0, got {drift_tolerance}"
            )));
        }
        Ok(Self {
            dt,
            renormalize,
            drift_tolerance,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn renormalize(&self) -> bool {
        self.renormalize
    }

    pub fn drift_tolerance(&self) -> f64 {
        self.drift_tolerance
    }

    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Self::new(dt, self.renormalize, self.drift_tolerance)
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            renormalize: false,
            drift_tolerance: 1e-6,
        }
    }
}

/// Right-hand side of the master equation, `drho/dt = L(rho)`.
///
/// The generator is applied as operator-level products written out against
/// the atom-major block structure (no superoperator vectorization): the
/// dispersive commutator and both damping anticommutators are diagonal
/// scalings, the field jump is a one-step shift, and the atomic jump moves
/// the excited-excited block into the ground-ground block. A dense
/// tensor-product evaluation of the same products backs this in the tests.
///
/// `rho` need not be Hermitian; the map is linear.
pub fn liouvillian_apply(rho: &Array2<C64>, params: &ModelParams) -> Result<Array2<C64>> {
    let nf = params.dim;
    if rho.dim() != (2 * nf, 2 * nf) {
        return Err(Error::DimensionMismatch {
            expected: 2 * nf,
            got: rho.nrows(),
        });
    }
    let mut out = Array2::zeros(rho.raw_dim());
    liouvillian_apply_into(rho, params, &mut out);
    Ok(out)
}

fn liouvillian_apply_into(rho: &Array2<C64>, params: &ModelParams, out: &mut Array2<C64>) {
    let nf = params.dim;
    let chi = params.chi;
    let gamma = params.gamma;
    let big_gamma = params.gamma_atom;

    for a in 0..2 {
        let sz_a = if a == 0 { 1.0 } else { -1.0 };
        let exc_a = if a == 0 { 1.0 } else { 0.0 };
        for b in 0..2 {
            let sz_b = if b == 0 { 1.0 } else { -1.0 };
            let exc_b = if b == 0 { 1.0 } else { 0.0 };
            for n in 0..nf {
                let row = a * nf + n;
                for np in 0..nf {
                    let col = b * nf + np;
                    // -i chi [n sigma_z, .] and both anticommutators are
                    // diagonal in this basis
                    let damp = -gamma * (n + np) as f64 - big_gamma * (exc_a + exc_b);
                    let phase = -chi * (sz_a * n as f64 - sz_b * np as f64);
                    let mut acc = rho[(row, col)] * C64::new(damp, phase);
                    // 2 gamma a rho adag: one-step shift toward lower n
                    if n + 1 < nf && np + 1 < nf {
                        let w = 2.0 * gamma * (((n + 1) * (np + 1)) as f64).sqrt();
                        acc += rho[(a * nf + n + 1, b * nf + np + 1)] * w;
                    }
                    // 2 Gamma sigma_- rho sigma_+: (e,e) block feeds (g,g)
                    if a == 1 && b == 1 {
                        acc += rho[(n, np)] * (2.0 * big_gamma);
                    }
                    out[(row, col)] = acc;
                }
            }
        }
    }
}

/// Result of an RK4 evolution.
#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    /// Final state, re-symmetrized as `(rho + rho^dag)/2` once at the end.
    pub state: JointDensityMatrix,
    /// Largest `|Tr rho - 1|` observed along the trajectory.
    pub trace_drift: f64,
    /// `max |rho - rho^dag|` at the final time, measured before the final
    /// symmetrization.
    pub hermiticity_drift: f64,
    /// Number of RK4 steps taken (including the shortened final step).
    pub steps: usize,
}

/// Classic fixed-step RK4 on the matrix master equation.
///
/// The final partial step is shortened to land exactly on `t_final`.
/// Aborts with [`Error::TraceDrift`] if `|Tr rho - 1|` exceeds the
/// configured tolerance mid-run, which signals a step too large or a
/// truncation too small.
pub fn evolve_rk4(
    rho0: &JointDensityMatrix,
    params: &ModelParams,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<EvolveOutcome> {
    evolve_rk4_observed(rho0, params, t_final, cfg, |_, _| {})
}

/// [`evolve_rk4`] with a per-step observer `(t, rho)`, called once at `t = 0`
/// and after every accepted step. Useful for sampling diagnostics along the
/// trajectory without re-running segments.
pub fn evolve_rk4_observed(
    rho0: &JointDensityMatrix,
    params: &ModelParams,
    t_final: f64,
    cfg: &IntegratorConfig,
    mut observer: impl FnMut(f64, &Array2<C64>),
) -> Result<EvolveOutcome> {
    if rho0.field_dim() != params.dim {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            got: rho0.field_dim(),
        });
    }
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "t_final must be finite and >= 0, got {t_final}"
        )));
    }
    if t_final == 0.0 {
        observer(0.0, rho0.matrix());
        return Ok(EvolveOutcome {
            state: rho0.clone(),
            trace_drift: (rho0.trace() - 1.0).abs(),
            hermiticity_drift: 0.0,
            steps: 0,
        });
    }
    if cfg.dt > t_final {
        return Err(Error::InvalidParam(format!(
            "dt = {} exceeds t_final = {}",
            cfg.dt, t_final
        )));
    }

    let mut rho = rho0.matrix().clone();
    observer(0.0, &rho);

    let n_full = (t_final / cfg.dt).floor() as usize;
    let remainder = t_final - n_full as f64 * cfg.dt;
    let has_partial = remainder > 1e-12 * cfg.dt;

    let dim = rho.nrows();
    let mut k1 = Array2::zeros((dim, dim));
    let mut k2 = Array2::zeros((dim, dim));
    let mut k3 = Array2::zeros((dim, dim));
    let mut k4 = Array2::zeros((dim, dim));
    let mut stage = Array2::zeros((dim, dim));

    let mut worst_drift = (linalg::trace(&rho).re - 1.0).abs();
    let mut steps = 0usize;
    let total_steps = n_full + usize::from(has_partial);

    for step in 0..total_steps {
        let h = if step < n_full { cfg.dt } else { remainder };
        let t = step as f64 * cfg.dt;

        liouvillian_apply_into(&rho, params, &mut k1);
        stage.assign(&rho);
        stage.scaled_add(C64::new(h / 2.0, 0.0), &k1);
        liouvillian_apply_into(&stage, params, &mut k2);
        stage.assign(&rho);
        stage.scaled_add(C64::new(h / 2.0, 0.0), &k2);
        liouvillian_apply_into(&stage, params, &mut k3);
        stage.assign(&rho);
        stage.scaled_add(C64::new(h, 0.0), &k3);
        liouvillian_apply_into(&stage, params, &mut k4);

        let w1 = C64::new(h / 6.0, 0.0);
        let w2 = C64::new(h / 3.0, 0.0);
        rho.scaled_add(w1, &k1);
        rho.scaled_add(w2, &k2);
        rho.scaled_add(w2, &k3);
        rho.scaled_add(w1, &k4);
        steps += 1;

        let trace = linalg::trace(&rho).re;
        let drift = (trace - 1.0).abs();
        worst_drift = worst_drift.max(drift);
        if drift > cfg.drift_tolerance {
            return Err(Error::TraceDrift {
                time: t + h,
                drift,
                tolerance: cfg.drift_tolerance,
            });
        }
        if cfg.renormalize {
            rho.mapv_inplace(|z| z / trace);
        }
        observer(t + h, &rho);
    }

    let hermiticity_drift = linalg::hermiticity_deviation(&rho);
    let symmetrized = linalg::hermitize(&rho);
    Ok(EvolveOutcome {
        state: JointDensityMatrix::new(symmetrized)?,
        trace_drift: worst_drift,
        hermiticity_drift,
        steps,
    })
}

/// Atomic polarization `Tr(rho (sigma_x (x) 1))` with the halved
/// `sigma_x = (sigma_+ + sigma_-)/2`; the rounding-level imaginary residue
/// is discarded.
pub fn sigma_x_trace(rho: &JointDensityMatrix) -> f64 {
    let n = rho.field_dim();
    let m = rho.matrix();
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..n {
        acc += m[(k, n + k)] + m[(n + k, k)];
    }
    0.5 * acc.re
}
