//! Reconstruction of s-parametrized quasiprobability distributions of a
//! lossy cavity field from dispersive atomic-polarization measurements.
//!
//! A two-level atom crosses a cavity under the dispersive coupling
//! `chi n sigma_z` while both the field (rate `gamma`) and the atom
//! (rate `Gamma`) decay. The crate provides:
//!
//! - [`fock`] — dense operators and states on the truncated Fock space;
//! - [`lindblad`] — a fixed-step RK4 integrator for the full master
//!   equation, used as the brute-force oracle;
//! - [`analytic`] — the closed-form evolved density matrix
//!   `rho(t) = rho_1(t) + rho_2(t)` obtained by superoperator splitting,
//!   evaluated with finite sums and spectral superoperator functions;
//! - [`qpd`] — direct evaluation of `F(alpha, s)` from displaced number
//!   states, with the displaced-parity Wigner form as a cross-check;
//! - [`protocol`] — the measurement schedule (interaction time, `mu`, `s`)
//!   and the inversion from measured polarization to `F(alpha, s)`;
//! - [`scenario`] / [`batch`] — config parsing and the deterministic batch
//!   commands behind the `cavity-qpd` binary.
//!
//! Every closed-form path is validated against the RK4 oracle; see the
//! `acceptance` integration test for the end-to-end identities.

pub mod analytic;
pub mod batch;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod lindblad;
pub mod protocol;
pub mod qpd;
pub mod scenario;

pub use error::{Error, Result};
pub use fock::{
    coherent_state, displacement, expectation, fock_state, hermitian_min_eigenvalue, ladder_ops,
    tensor_atom_field, thermal_state, vacuum_state, AtomOperator, FieldDensityMatrix,
    FockOperator, JointDensityMatrix,
};
pub use lindblad::{evolve_rk4, liouvillian_apply, sigma_x_trace, IntegratorConfig, ModelParams};
pub use protocol::{
    find_measurement_time, prepare_initial, reconstruct_grid, reconstruct_point, z_factor, Engine,
    MeasurementSchedule, ReconstructionRecord,
};
pub use qpd::{grid_integral, qpd_direct, qpd_grid, wigner_parity, PhaseGrid, QpdConvention};
