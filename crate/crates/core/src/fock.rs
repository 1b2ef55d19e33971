//! Dense complex linear algebra on the truncated Fock space and the
//! two-level atomic space.
//!
//! Conventions, fixed across the crate and for all file output:
//!
//! - Field basis `|0>, ..., |N-1>` (photon number), dimension `N >= 2`.
//! - Atomic basis `{|e>, |g>}` with `|e>` first, so `sigma_z |e> = +|e>`.
//! - Joint indices are atom-major: `(a, n) -> a*N + n`, i.e. the 2N x 2N
//!   joint matrix splits into four N x N field blocks `(e,e)`, `(e,g)`,
//!   `(g,e)`, `(g,g)`.
//! - `sigma_x = (sigma_+ + sigma_-) / 2` (halved convention; every
//!   polarization prefactor downstream is consistent with it).

use ndarray::{s, Array1, Array2, ArrayView2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;

/// Hermiticity tolerance for density-matrix validation.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Smallest admissible eigenvalue in the positivity check.
pub const PSD_TOL: f64 = -1e-8;
/// Largest pre-normalization probability mass allowed beyond the truncation.
pub const TAIL_LIMIT: f64 = 1e-6;
/// Off-diagonal Frobenius norm at which the Jacobi sweep stops.
pub const JACOBI_OFF_TOL: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// Dense operator on the truncated field space.
#[derive(Debug, Clone)]
pub struct FockOperator {
    mat: Array2<C64>,
}

impl FockOperator {
    /// Wrap a matrix, checking shape and finiteness.
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        if mat.nrows() < 2 {
            return Err(Error::DimensionTooSmall { dim: mat.nrows() });
        }
        if !linalg::all_finite(&mat) {
            return Err(Error::NonFinite);
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.mat
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self {
            mat: linalg::dagger(&self.mat),
        }
    }
}

/// Annihilation, creation and number operators on the `dim`-dimensional
/// truncated space: `a|n> = sqrt(n)|n-1>`, `adag = a^T*`, `n = adag a`.
///
/// On the truncated space `[n, a] = -a` holds exactly; `[a, adag] = 1` holds
/// everywhere except the corner entry `(N-1, N-1)`, which is `1 - N`.
pub fn ladder_ops(dim: usize) -> Result<(FockOperator, FockOperator, FockOperator)> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall { dim });
    }
    let mut a = Array2::<C64>::zeros((dim, dim));
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let adag = linalg::dagger(&a);
    let number = Array2::from_diag(&Array1::from_iter(
        (0..dim).map(|n| C64::new(n as f64, 0.0)),
    ));
    Ok((
        FockOperator { mat: a },
        FockOperator { mat: adag },
        FockOperator { mat: number },
    ))
}

/// Soft truncation guideline for displacements: `|alpha|^2 <= dim/4`.
///
/// Beyond this the displaced state presses against the truncation wall and
/// corner artifacts are expected; callers surface it as a warning flag.
pub fn displacement_guideline_ok(alpha: C64, dim: usize) -> bool {
    alpha.norm_sqr() <= dim as f64 / 4.0
}

/// Glauber displacement operator `D(alpha) = exp(alpha adag - alpha* a)` on
/// the truncated space.
///
/// Evaluated by scaling-and-squaring with a Taylor series run to machine
/// convergence. The truncated generator is still anti-Hermitian, so the
/// result is unitary on the truncated space; it deviates from the projection
/// of the true `D(alpha)` only in the high-`n` corner.
pub fn displacement(alpha: C64, dim: usize) -> Result<FockOperator> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall { dim });
    }
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::NonFinite);
    }
    if alpha == ZERO {
        return Ok(FockOperator {
            mat: linalg::identity(dim),
        });
    }

    // 1-norm of the tridiagonal generator: column j holds -alpha* sqrt(j)
    // above and alpha sqrt(j+1) below the diagonal.
    let amp = alpha.norm();
    let norm1 = (0..dim)
        .map(|j| {
            let upper = if j >= 1 { (j as f64).sqrt() } else { 0.0 };
            let lower = if j + 1 < dim { ((j + 1) as f64).sqrt() } else { 0.0 };
            amp * (upper + lower)
        })
        .fold(0.0_f64, f64::max);

    const THETA: f64 = 4.0;
    let squarings = if norm1 > THETA {
        (norm1 / THETA).log2().ceil() as u32
    } else {
        0
    };
    let scale = (2.0_f64).powi(squarings as i32);
    let a_scaled = alpha / scale;

    // Taylor series of exp(G/2^s); G applications use the tridiagonal
    // structure, O(dim^2) per term.
    let mut result = linalg::identity(dim);
    let mut term = linalg::identity(dim);
    for k in 1..200u32 {
        term = apply_ladder_generator(a_scaled, &term);
        term.mapv_inplace(|z| z / k as f64);
        result += &term;
        if linalg::max_abs(&term) < 1e-17 * linalg::max_abs(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = linalg::mm(&result, &result);
    }
    Ok(FockOperator { mat: result })
}

/// `(alpha adag - alpha* a) . M` exploiting the tridiagonal generator.
fn apply_ladder_generator(alpha: C64, m: &Array2<C64>) -> Array2<C64> {
    let dim = m.nrows();
    let mut out = Array2::<C64>::zeros(m.raw_dim());
    for i in 0..dim {
        // row i of G: -alpha* sqrt(i+1) at column i+1, alpha sqrt(i) at i-1
        if i + 1 < dim {
            let c = -alpha.conj() * (i as f64 + 1.0).sqrt();
            let src = m.row(i + 1);
            let mut dst = out.row_mut(i);
            dst.zip_mut_with(&src, |d, &v| *d += c * v);
        }
        if i >= 1 {
            let c = alpha * (i as f64).sqrt();
            let src = m.row(i - 1);
            let mut dst = out.row_mut(i);
            dst.zip_mut_with(&src, |d, &v| *d += c * v);
        }
    }
    out
}

/// `a M adag` for the truncated annihilation operator: a one-step
/// shift-and-scale, `out[n, n'] = sqrt((n+1)(n'+1)) M[n+1, n'+1]`.
pub(crate) fn lower_sandwich(m: &Array2<C64>) -> Array2<C64> {
    let dim = m.nrows();
    let mut out = Array2::<C64>::zeros(m.raw_dim());
    for n in 0..dim - 1 {
        let sn = ((n + 1) as f64).sqrt();
        for np in 0..dim - 1 {
            let snp = ((np + 1) as f64).sqrt();
            out[(n, np)] = m[(n + 1, np + 1)] * (sn * snp);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Field states
// ---------------------------------------------------------------------------

/// Validated density matrix of the cavity field.
///
/// Guarantees at construction: Hermitian to `1e-10`, trace in `(0, 1+1e-10]`
/// (strictly below one is allowed: truncation tail), smallest eigenvalue
/// `>= -1e-8`. `tail_mass` records the pre-normalization probability mass
/// that fell outside the truncated basis.
#[derive(Debug, Clone)]
pub struct FieldDensityMatrix {
    mat: Array2<C64>,
    tail_mass: f64,
}

impl FieldDensityMatrix {
    /// Validate an arbitrary matrix as a field density matrix.
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        if mat.nrows() < 2 {
            return Err(Error::DimensionTooSmall { dim: mat.nrows() });
        }
        if !linalg::all_finite(&mat) {
            return Err(Error::NonFinite);
        }
        let dev = linalg::hermiticity_deviation(&mat);
        if dev > HERMITICITY_TOL {
            return Err(Error::NonHermitian {
                deviation: dev,
                limit: HERMITICITY_TOL,
            });
        }
        let tr = linalg::trace(&mat).re;
        if !(tr > 0.0 && tr <= 1.0 + 1e-10) {
            return Err(Error::InvalidTrace { trace: tr });
        }
        let min_eig = hermitian_min_eigenvalue(&mat)?;
        if min_eig < PSD_TOL {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min_eig,
            });
        }
        Ok(Self { mat, tail_mass: 0.0 })
    }

    /// Build from pure-state amplitudes; positivity holds by construction.
    fn from_amplitudes(amps: &Array1<C64>, tail_mass: f64) -> Self {
        let dim = amps.len();
        let mut mat = Array2::zeros((dim, dim));
        for n in 0..dim {
            for np in 0..dim {
                mat[(n, np)] = amps[n] * amps[np].conj();
            }
        }
        Self { mat, tail_mass }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    /// Pre-normalization probability mass beyond the truncation.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.mat).re
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        linalg::trace_of_product(&self.mat, &self.mat).re
    }

    /// `<n> = sum_n n rho_nn`.
    pub fn mean_photon_number(&self) -> f64 {
        self.mat
            .diag()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p.re)
            .sum()
    }
}

/// Truncated coherent state `|beta>`, renormalized on the truncated basis.
///
/// Rejects the requested dimension when the pre-normalization tail mass
/// exceeds [`TAIL_LIMIT`].
pub fn coherent_state(beta: C64, dim: usize) -> Result<FieldDensityMatrix> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall { dim });
    }
    if !beta.re.is_finite() || !beta.im.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut amps = Array1::<C64>::zeros(dim);
    amps[0] = C64::new((-beta.norm_sqr() / 2.0).exp(), 0.0);
    for n in 1..dim {
        amps[n] = amps[n - 1] * beta / (n as f64).sqrt();
    }
    let mass: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    let tail = (1.0 - mass).max(0.0);
    if tail > TAIL_LIMIT {
        return Err(Error::TailMass {
            tail,
            limit: TAIL_LIMIT,
        });
    }
    let norm = mass.sqrt();
    amps.mapv_inplace(|c| c / norm);
    Ok(FieldDensityMatrix::from_amplitudes(&amps, tail))
}

/// Number-state projector `|n><n|`.
pub fn fock_state(n: usize, dim: usize) -> Result<FieldDensityMatrix> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall { dim });
    }
    if n >= dim {
        return Err(Error::IndexOutOfRange { index: n, dim });
    }
    let mut mat = Array2::zeros((dim, dim));
    mat[(n, n)] = ONE;
    Ok(FieldDensityMatrix {
        mat,
        tail_mass: 0.0,
    })
}

/// Vacuum projector `|0><0|`.
pub fn vacuum_state(dim: usize) -> Result<FieldDensityMatrix> {
    fock_state(0, dim)
}

/// Thermal state with mean occupation `nbar`, renormalized on the truncated
/// basis. Geometric tail mass `(nbar/(1+nbar))^dim` must stay below
/// [`TAIL_LIMIT`].
pub fn thermal_state(nbar: f64, dim: usize) -> Result<FieldDensityMatrix> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall { dim });
    }
    if !nbar.is_finite() || nbar < 0.0 {
        return Err(Error::InvalidParam(format!(
            "thermal occupation must be finite and >= 0, got {nbar}"
        )));
    }
    let ratio = nbar / (1.0 + nbar);
    let tail = ratio.powi(dim as i32);
    if tail > TAIL_LIMIT {
        return Err(Error::TailMass {
            tail,
            limit: TAIL_LIMIT,
        });
    }
    let mut probs: Vec<f64> = Vec::with_capacity(dim);
    let mut p = 1.0 / (1.0 + nbar);
    for _ in 0..dim {
        probs.push(p);
        p *= ratio;
    }
    let mass: f64 = probs.iter().sum();
    let mut mat = Array2::zeros((dim, dim));
    for (n, &pn) in probs.iter().enumerate() {
        mat[(n, n)] = C64::new(pn / mass, 0.0);
    }
    Ok(FieldDensityMatrix {
        mat,
        tail_mass: tail,
    })
}

// ---------------------------------------------------------------------------
// Atomic operators
// ---------------------------------------------------------------------------

/// 2 x 2 operator on the atomic space, basis `{|e>, |g>}` with `|e>` first.
#[derive(Debug, Clone)]
pub struct AtomOperator {
    mat: Array2<C64>,
}

impl AtomOperator {
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        if mat.dim() != (2, 2) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: mat.nrows(),
            });
        }
        if !linalg::all_finite(&mat) {
            return Err(Error::NonFinite);
        }
        Ok(Self { mat })
    }

    fn from_rows(rows: [[C64; 2]; 2]) -> Self {
        let mut mat = Array2::zeros((2, 2));
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                mat[(i, j)] = *v;
            }
        }
        Self { mat }
    }

    pub fn identity() -> Self {
        Self::from_rows([[ONE, ZERO], [ZERO, ONE]])
    }

    /// `sigma_z = |e><e| - |g><g|`.
    pub fn sigma_z() -> Self {
        Self::from_rows([[ONE, ZERO], [ZERO, -ONE]])
    }

    /// `sigma_+ = |e><g|`.
    pub fn sigma_plus() -> Self {
        Self::from_rows([[ZERO, ONE], [ZERO, ZERO]])
    }

    /// `sigma_- = |g><e|`.
    pub fn sigma_minus() -> Self {
        Self::from_rows([[ZERO, ZERO], [ONE, ZERO]])
    }

    /// `sigma_x = (sigma_+ + sigma_-)/2` — note the halved convention.
    pub fn sigma_x() -> Self {
        let h = C64::new(0.5, 0.0);
        Self::from_rows([[ZERO, h], [h, ZERO]])
    }

    /// `sigma_y = (sigma_+ - sigma_-)/2i`, halved like `sigma_x`.
    pub fn sigma_y() -> Self {
        let h = C64::new(0.0, 0.5);
        Self::from_rows([[ZERO, -h], [h, ZERO]])
    }

    /// Excited-state projector `sigma_+ sigma_- = |e><e|`.
    pub fn excited_projector() -> Self {
        Self::from_rows([[ONE, ZERO], [ZERO, ZERO]])
    }

    /// Ground-state projector `sigma_- sigma_+ = |g><g|`.
    pub fn ground_projector() -> Self {
        Self::from_rows([[ZERO, ZERO], [ZERO, ONE]])
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }
}

/// Projector onto `|psi_A(theta)> = sin(theta)|e> + cos(theta)|g>`.
pub fn atom_superposition(theta: f64) -> AtomOperator {
    let (sin, cos) = theta.sin_cos();
    let mut mat = Array2::zeros((2, 2));
    mat[(0, 0)] = C64::new(sin * sin, 0.0);
    mat[(0, 1)] = C64::new(sin * cos, 0.0);
    mat[(1, 0)] = C64::new(sin * cos, 0.0);
    mat[(1, 1)] = C64::new(cos * cos, 0.0);
    AtomOperator { mat }
}

// ---------------------------------------------------------------------------
// Joint space
// ---------------------------------------------------------------------------

/// Validated 2N x 2N atom (x) field density matrix, atom-major ordering.
#[derive(Debug, Clone)]
pub struct JointDensityMatrix {
    mat: Array2<C64>,
}

impl JointDensityMatrix {
    /// Validate shape, finiteness and Hermiticity (trace is contextual:
    /// partial contributions such as individual evolution branches are
    /// legitimately sub-unit).
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        if mat.nrows() < 4 || mat.nrows() % 2 != 0 {
            return Err(Error::DimensionTooSmall { dim: mat.nrows() });
        }
        if !linalg::all_finite(&mat) {
            return Err(Error::NonFinite);
        }
        let dev = linalg::hermiticity_deviation(&mat);
        if dev > HERMITICITY_TOL {
            return Err(Error::NonHermitian {
                deviation: dev,
                limit: HERMITICITY_TOL,
            });
        }
        Ok(Self { mat })
    }

    pub fn field_dim(&self) -> usize {
        self.mat.nrows() / 2
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.mat).re
    }

    /// N x N field block at atomic indices `(row, col)`, 0 = excited,
    /// 1 = ground.
    pub fn block(&self, row: usize, col: usize) -> ArrayView2<'_, C64> {
        assert!(row < 2 && col < 2);
        let n = self.field_dim();
        self.mat
            .slice(s![row * n..(row + 1) * n, col * n..(col + 1) * n])
    }

    /// Sum of a joint matrix and another, revalidated.
    pub fn add(&self, other: &JointDensityMatrix) -> Result<JointDensityMatrix> {
        if self.mat.dim() != other.mat.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.mat.nrows(),
                got: other.mat.nrows(),
            });
        }
        JointDensityMatrix::new(&self.mat + &other.mat)
    }
}

/// Atom-major Kronecker product:
/// `(A (x) F)[(a,n), (a',n')] = A[a,a'] F[n,n']`.
pub fn tensor_atom_field(atom: &AtomOperator, field: &FockOperator) -> Array2<C64> {
    tensor_raw(atom.matrix(), field.matrix())
}

pub(crate) fn tensor_raw(atom: &Array2<C64>, field: &Array2<C64>) -> Array2<C64> {
    let n = field.nrows();
    let mut out = Array2::zeros((2 * n, 2 * n));
    for a in 0..2 {
        for b in 0..2 {
            let w = atom[(a, b)];
            if w == ZERO {
                continue;
            }
            let mut block = out.slice_mut(s![a * n..(a + 1) * n, b * n..(b + 1) * n]);
            block.zip_mut_with(field, |o, &f| *o = w * f);
        }
    }
    out
}

/// `Tr(rho O)` on the joint space.
pub fn expectation(rho: &JointDensityMatrix, op: &Array2<C64>) -> Result<C64> {
    if op.dim() != rho.matrix().dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.matrix().nrows(),
            got: op.nrows(),
        });
    }
    Ok(linalg::trace_of_product(rho.matrix(), op))
}

// ---------------------------------------------------------------------------
// Eigenvalues
// ---------------------------------------------------------------------------

/// Smallest eigenvalue of a Hermitian matrix via cyclic complex Jacobi
/// rotations, run until the off-diagonal Frobenius norm drops below
/// [`JACOBI_OFF_TOL`].
///
/// Dimensions in this crate stay small (<= a few hundred), where the
/// quadratically convergent sweep is accurate and dependency-free.
/// See Golub & Van Loan, "Matrix Computations", sec. 8.5.
pub fn hermitian_min_eigenvalue(h: &Array2<C64>) -> Result<f64> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            got: h.ncols(),
        });
    }
    let dev = linalg::hermiticity_deviation(h);
    if dev > 1e-8 {
        return Err(Error::NonHermitian {
            deviation: dev,
            limit: 1e-8,
        });
    }
    let mut a = linalg::hermitize(h);
    let n = a.nrows();
    if n == 1 {
        return Ok(a[(0, 0)].re);
    }

    const MAX_SWEEPS: usize = 60;
    for _sweep in 0..MAX_SWEEPS {
        let mut off2 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off2 += 2.0 * a[(p, q)].norm_sqr();
            }
        }
        if off2.sqrt() <= JACOBI_OFF_TOL {
            let mut min = f64::INFINITY;
            for i in 0..n {
                min = min.min(a[(i, i)].re);
            }
            return Ok(min);
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                jacobi_rotate(&mut a, p, q);
            }
        }
    }
    Err(Error::JacobiNoConvergence { sweeps: MAX_SWEEPS })
}

/// One complex Jacobi rotation zeroing `a[(p, q)]`.
///
/// The pivot is factored as a phase times a real symmetric Schur rotation:
/// with `a_pq = m e^{i beta}`, `tau = (a_qq - a_pp)/(2m)` and
/// `t = sign(tau)/(|tau| + sqrt(1 + tau^2))`, the unitary acting on columns
/// `(p, q)` is `[[c, s], [-s e^{-i beta}, c e^{-i beta}]]`.
fn jacobi_rotate(a: &mut Array2<C64>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let m = apq.norm();
    if m < 1e-300 {
        return;
    }
    let phase = apq / m;
    let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * m);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let n = a.nrows();
    let phase_conj = phase.conj();
    for i in 0..n {
        let cp = a[(i, p)];
        let cq = a[(i, q)];
        a[(i, p)] = cp * c - cq * phase_conj * s;
        a[(i, q)] = cp * s + cq * phase_conj * c;
    }
    for j in 0..n {
        let rp = a[(p, j)];
        let rq = a[(q, j)];
        a[(p, j)] = rp * c - rq * phase * s;
        a[(q, j)] = rp * s + rq * phase * c;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
}
