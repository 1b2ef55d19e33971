//! Direct evaluation of s-parametrized quasiprobability distributions from
//! displaced number states,
//!
//! ```text
//! F(alpha, s) = prefactor(s) sum_k ((s+1)/(s-1))^k <k| D^dag(alpha) rho D(alpha) |k>,
//! ```
//!
//! covering Husimi (`s = -1`), Wigner (`s = 0`) and everything in between
//! (see Cahill & Glauber, Phys. Rev. 177, 1857 & 1882 (1969)). `s = +1` is
//! excluded: the Glauber-Sudarshan P function is distributional.
//!
//! Two prefactor conventions ship. `PaperLiteral` uses `1/(pi (1 - s))`,
//! whose phase-space integral is 1/2; `Normalized` doubles it so the
//! distribution integrates to one and the `s = 0` case lands on the
//! standard Wigner normalization (vacuum peak `2/pi`). `Normalized` is the
//! default everywhere; the inversion prefactor in [`crate::protocol`]
//! carries the matching factor so either convention is consistent end to
//! end.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{self, FieldDensityMatrix};
use crate::linalg;

/// A tail carrying more than this fraction of the series is flagged.
pub const TAIL_WARN_THRESHOLD: f64 = 1e-8;

const IM_RESIDUE_LIMIT: f64 = 1e-9;

/// Prefactor convention for `F(alpha, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QpdConvention {
    /// `1/(pi (1 - s))`; grid integral tends to 1/2.
    PaperLiteral,
    /// `2/(pi (1 - s))`; grid integral tends to 1.
    #[default]
    Normalized,
}

impl QpdConvention {
    pub fn prefactor(&self, s: f64) -> f64 {
        match self {
            QpdConvention::PaperLiteral => 1.0 / (std::f64::consts::PI * (1.0 - s)),
            QpdConvention::Normalized => 2.0 / (std::f64::consts::PI * (1.0 - s)),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            QpdConvention::PaperLiteral => "paper",
            QpdConvention::Normalized => "normalized",
        }
    }
}

/// One evaluated quasiprobability point.
#[derive(Debug, Clone, Copy)]
pub struct QpdValue {
    pub value: f64,
    /// Magnitude of the last three series terms relative to the sum; large
    /// values mean the truncation is too small for this `(alpha, s)`.
    pub tail_fraction: f64,
}

impl QpdValue {
    pub fn tail_suspect(&self) -> bool {
        self.tail_fraction > TAIL_WARN_THRESHOLD
    }
}

/// Uniform rectangular grid in the complex-amplitude plane.
///
/// Values and traversal are row-major with the imaginary axis as the slow
/// (row) index: `(i_im, i_re)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    n_re: usize,
    n_im: usize,
}

impl PhaseGrid {
    /// A degenerate single-count axis must have coinciding bounds; with two
    /// or more points the bounds must be strictly ordered.
    pub fn new(
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
        n_re: usize,
        n_im: usize,
    ) -> Result<Self> {
        for v in [re_min, re_max, im_min, im_max] {
            if !v.is_finite() {
                return Err(Error::InvalidParam("grid bounds must be finite".into()));
            }
        }
        let axis_ok = |min: f64, max: f64, n: usize| match n {
            0 => false,
            1 => min == max,
            _ => min < max,
        };
        if !axis_ok(re_min, re_max, n_re) || !axis_ok(im_min, im_max, n_im) {
            return Err(Error::InvalidParam(format!(
                "grid axes must be ordered (min < max for >= 2 points): \
                 re [{re_min}, {re_max}] x {n_re}, im [{im_min}, {im_max}] x {n_im}"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
            n_re,
            n_im,
        })
    }

    /// Square grid centered like `[-half, half]^2` with `n x n` points.
    pub fn centered_square(half: f64, n: usize) -> Result<Self> {
        Self::new(-half, half, -half, half, n, n)
    }

    pub fn n_re(&self) -> usize {
        self.n_re
    }

    pub fn n_im(&self) -> usize {
        self.n_im
    }

    pub fn re_bounds(&self) -> (f64, f64) {
        (self.re_min, self.re_max)
    }

    pub fn im_bounds(&self) -> (f64, f64) {
        (self.im_min, self.im_max)
    }

    /// Grid spacing along the real axis (0 for a degenerate axis).
    pub fn d_re(&self) -> f64 {
        if self.n_re < 2 {
            0.0
        } else {
            (self.re_max - self.re_min) / (self.n_re - 1) as f64
        }
    }

    pub fn d_im(&self) -> f64 {
        if self.n_im < 2 {
            0.0
        } else {
            (self.im_max - self.im_min) / (self.n_im - 1) as f64
        }
    }

    pub fn len(&self) -> usize {
        self.n_re * self.n_im
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn alpha(&self, i_re: usize, i_im: usize) -> C64 {
        debug_assert!(i_re < self.n_re && i_im < self.n_im);
        C64::new(
            self.re_min + i_re as f64 * self.d_re(),
            self.im_min + i_im as f64 * self.d_im(),
        )
    }

    /// Row-major traversal `(i_im, i_re, alpha)`.
    pub fn points(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n_im)
            .flat_map(move |i_im| (0..self.n_re).map(move |i_re| (i_im, i_re, self.alpha(i_re, i_im))))
    }
}

/// Evaluate `F(alpha, s)` for `s < 1` by the displaced-number-state series.
///
/// The last-three-terms tail monitor is mandatory: for `s` near zero the
/// series ratio has unit modulus and convergence rests entirely on the
/// decay of the displaced diagonal, i.e. on the truncation being large
/// enough for this displacement.
pub fn qpd_direct(
    rho: &FieldDensityMatrix,
    alpha: C64,
    s: f64,
    convention: QpdConvention,
) -> Result<QpdValue> {
    if !s.is_finite() || s >= 1.0 {
        return Err(Error::InvalidS { s });
    }
    let dim = rho.dim();
    let d = fock::displacement(alpha, dim)?;
    let diag = linalg::conjugated_diagonal(rho.matrix(), d.matrix());

    let ratio = (s + 1.0) / (s - 1.0);
    let mut term = C64::new(1.0, 0.0); // ratio^0, covering s = -1 exactly
    let mut sum = C64::new(0.0, 0.0);
    let mut tail = C64::new(0.0, 0.0);
    for (k, dk) in diag.iter().enumerate() {
        let contribution = dk * term;
        sum += contribution;
        if k + 3 >= dim {
            tail += contribution;
        }
        term *= ratio;
    }

    let prefactor = convention.prefactor(s);
    let residue = (prefactor * sum.im).abs();
    if residue > IM_RESIDUE_LIMIT {
        return Err(Error::ImaginaryResidue {
            residue,
            limit: IM_RESIDUE_LIMIT,
        });
    }
    Ok(QpdValue {
        value: prefactor * sum.re,
        tail_fraction: tail.norm() / (sum.norm() + f64::MIN_POSITIVE),
    })
}

/// Wigner function via the displaced-parity expectation,
/// `W(alpha) = (2/pi) sum_k (-1)^k <k| D^dag rho D |k>`.
///
/// Identical series to `qpd_direct(.., s = 0, Normalized)` through a
/// separate code path; serves as the independent `s = 0` oracle.
pub fn wigner_parity(rho: &FieldDensityMatrix, alpha: C64) -> Result<f64> {
    let d = fock::displacement(alpha, rho.dim())?;
    let diag = linalg::conjugated_diagonal(rho.matrix(), d.matrix());
    let mut acc = 0.0;
    for (k, dk) in diag.iter().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * dk.re;
    }
    Ok(2.0 / std::f64::consts::PI * acc)
}

/// Evaluate `F(alpha, s)` over a grid, row-major `(n_im, n_re)`.
///
/// Points are independent and evaluated in parallel; assembly order is
/// fixed by the grid, so the output is deterministic regardless of the
/// degree of parallelism. Point-level failures carry their grid
/// coordinates.
pub fn qpd_grid(
    rho: &FieldDensityMatrix,
    grid: &PhaseGrid,
    s: f64,
    convention: QpdConvention,
) -> Result<Array2<f64>> {
    let points: Vec<(usize, usize, C64)> = grid.points().collect();
    let values: Vec<f64> = points
        .par_iter()
        .map(|&(_, _, alpha)| {
            qpd_direct(rho, alpha, s, convention)
                .map(|v| v.value)
                .map_err(|e| Error::AtGridPoint {
                    re: alpha.re,
                    im: alpha.im,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    Ok(Array2::from_shape_vec((grid.n_im(), grid.n_re()), values)
        .expect("grid shape matches point count"))
}

/// 2-D trapezoidal rule over grid values, `d^2 alpha = dRe dIm`.
///
/// Meaningful only when the grid covers the state's support (bounds
/// at least `|beta| + 3` beyond the state's center).
pub fn grid_integral(values: &Array2<f64>, grid: &PhaseGrid) -> Result<f64> {
    if values.dim() != (grid.n_im(), grid.n_re()) {
        return Err(Error::DimensionMismatch {
            expected: grid.n_im() * grid.n_re(),
            got: values.len(),
        });
    }
    let w = |i: usize, n: usize| {
        if i == 0 || i + 1 == n {
            0.5
        } else {
            1.0
        }
    };
    let mut acc = 0.0;
    for ((i_im, i_re), v) in values.indexed_iter() {
        acc += w(i_im, grid.n_im()) * w(i_re, grid.n_re()) * v;
    }
    Ok(acc * grid.d_re() * grid.d_im())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, fock_state, vacuum_state, FieldDensityMatrix};
    use crate::linalg::{dagger, mm};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn vacuum_wigner_peak_both_conventions() {
        let vac = vacuum_state(16).unwrap();
        let literal = qpd_direct(&vac, C64::new(0.0, 0.0), 0.0, QpdConvention::PaperLiteral)
            .unwrap();
        assert_abs_diff_eq!(literal.value, 1.0 / PI, epsilon = 1e-12);
        let norm = qpd_direct(&vac, C64::new(0.0, 0.0), 0.0, QpdConvention::Normalized).unwrap();
        assert_abs_diff_eq!(norm.value, 2.0 / PI, epsilon = 1e-12);
    }

    #[test]
    fn husimi_of_vacuum_is_gaussian() {
        // oracle: <alpha|rho|alpha> with an explicit coherent vector
        let vac = vacuum_state(32).unwrap();
        let v = qpd_direct(&vac, C64::new(1.0, 0.0), -1.0, QpdConvention::Normalized).unwrap();
        assert_abs_diff_eq!(v.value, (-1.0_f64).exp() / PI, epsilon = 1e-9);
        assert!(!v.tail_suspect());
    }

    #[test]
    fn displaced_coherent_peak_is_vacuum_peak() {
        let beta = C64::new(0.6, 0.0);
        let rho = coherent_state(beta, 32).unwrap();
        let v = qpd_direct(&rho, beta, 0.0, QpdConvention::Normalized).unwrap();
        assert_abs_diff_eq!(v.value, 2.0 / PI, epsilon = 1e-6);
        // parity-form oracle
        let w = wigner_parity(&rho, beta).unwrap();
        assert_abs_diff_eq!(v.value, w, epsilon = 1e-12);
    }

    #[test]
    fn rejects_glauber_sudarshan_edge() {
        let vac = vacuum_state(8).unwrap();
        assert!(matches!(
            qpd_direct(&vac, C64::new(0.0, 0.0), 1.0, QpdConvention::Normalized),
            Err(Error::InvalidS { .. })
        ));
    }

    #[test]
    fn parity_form_basics() {
        let vac = vacuum_state(12).unwrap();
        assert_abs_diff_eq!(
            wigner_parity(&vac, C64::new(0.0, 0.0)).unwrap(),
            2.0 / PI,
            epsilon = 1e-14
        );
        let one = fock_state(1, 12).unwrap();
        assert_abs_diff_eq!(
            wigner_parity(&one, C64::new(0.0, 0.0)).unwrap(),
            -2.0 / PI,
            epsilon = 1e-14
        );
    }

    #[test]
    fn parity_and_series_agree_on_grid() {
        let rho = coherent_state(C64::new(0.5, 0.0), 32).unwrap();
        let grid = PhaseGrid::centered_square(1.5, 9).unwrap();
        for (_, _, alpha) in grid.points() {
            let series = qpd_direct(&rho, alpha, 0.0, QpdConvention::Normalized)
                .unwrap()
                .value;
            let parity = wigner_parity(&rho, alpha).unwrap();
            assert!((series - parity).abs() <= 1e-12);
        }
    }

    #[test]
    fn husimi_nonnegative_everywhere() {
        let rho = coherent_state(C64::new(0.8, 0.3), 32).unwrap();
        let grid = PhaseGrid::centered_square(2.0, 7).unwrap();
        let values = qpd_grid(&rho, &grid, -1.0, QpdConvention::Normalized).unwrap();
        for v in values.iter() {
            assert!(*v >= -1e-12);
        }
    }

    #[test]
    fn grid_values_match_pointwise_calls() {
        let vac = vacuum_state(16).unwrap();
        let grid = PhaseGrid::new(-0.5, 0.5, -0.5, 0.5, 2, 2).unwrap();
        let values = qpd_grid(&vac, &grid, 0.0, QpdConvention::Normalized).unwrap();
        for (i_im, i_re, alpha) in grid.points() {
            let direct = qpd_direct(&vac, alpha, 0.0, QpdConvention::Normalized)
                .unwrap()
                .value;
            assert_eq!(values[(i_im, i_re)], direct);
        }
    }

    #[test]
    fn vacuum_grid_symmetric_under_negation() {
        let vac = vacuum_state(24).unwrap();
        let grid = PhaseGrid::centered_square(1.0, 5).unwrap();
        let values = qpd_grid(&vac, &grid, 0.0, QpdConvention::Normalized).unwrap();
        let (n_im, n_re) = values.dim();
        for i_im in 0..n_im {
            for i_re in 0..n_re {
                let mirrored = values[(n_im - 1 - i_im, n_re - 1 - i_re)];
                assert!((values[(i_im, i_re)] - mirrored).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn coherent_peak_location_on_grid() {
        let beta = C64::new(0.5, 0.3);
        let rho = coherent_state(beta, 32).unwrap();
        let grid = PhaseGrid::centered_square(1.5, 9).unwrap();
        let values = qpd_grid(&rho, &grid, 0.0, QpdConvention::Normalized).unwrap();
        let mut best = (0usize, 0usize);
        let mut best_v = f64::NEG_INFINITY;
        for ((i_im, i_re), v) in values.indexed_iter() {
            if *v > best_v {
                best_v = *v;
                best = (i_im, i_re);
            }
        }
        // nearest grid point to beta
        let mut nearest = (0usize, 0usize);
        let mut nearest_d = f64::INFINITY;
        for (i_im, i_re, alpha) in grid.points() {
            let d = (alpha - beta).norm();
            if d < nearest_d {
                nearest_d = d;
                nearest = (i_im, i_re);
            }
        }
        assert_eq!(best, nearest);
    }

    #[test]
    fn constant_integral_over_unit_box() {
        let grid = PhaseGrid::new(0.0, 1.0, 0.0, 1.0, 5, 9).unwrap();
        let values = Array2::from_elem((9, 5), 1.0);
        assert_abs_diff_eq!(grid_integral(&values, &grid).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn displacement_covariance() {
        let rho = coherent_state(C64::new(0.4, 0.2), 32).unwrap();
        let delta = C64::new(0.7, -0.5);
        let d = crate::fock::displacement(delta, 32).unwrap();
        let moved = mm(&mm(d.matrix(), rho.matrix()), &dagger(d.matrix()));
        let moved = FieldDensityMatrix::new(crate::linalg::hermitize(&moved)).unwrap();
        for alpha in [C64::new(0.0, 0.0), C64::new(1.0, 0.5), C64::new(-0.8, 1.1)] {
            let lhs = qpd_direct(&moved, alpha, 0.0, QpdConvention::Normalized)
                .unwrap()
                .value;
            let rhs = qpd_direct(&rho, alpha - delta, 0.0, QpdConvention::Normalized)
                .unwrap()
                .value;
            assert!((lhs - rhs).abs() <= 1e-8, "covariance gap {:.3e}", lhs - rhs);
        }
    }

    #[test]
    fn degenerate_single_point_grid() {
        let grid = PhaseGrid::new(0.3, 0.3, -0.2, -0.2, 1, 1).unwrap();
        let pts: Vec<_> = grid.points().collect();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].2, C64::new(0.3, -0.2));
        assert!(PhaseGrid::new(0.3, 0.2, 0.0, 1.0, 2, 2).is_err());
    }
}
