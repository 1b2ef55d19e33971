//! Small dense complex-matrix helpers shared across the crate.
//!
//! Everything here operates on `ndarray::Array2<Complex64>`. Matrix products
//! are routed through three real `f64` GEMMs (the 3M split), which hits
//! ndarray's fast real kernel instead of the generic complex fallback.

use ndarray::{Array2, ArrayView2, Zip};
use num_complex::Complex64 as C64;

/// Complex matrix product using the 3M real-GEMM split:
/// `AB = (Ar Br - Ai Bi) + i[(Ar + Ai)(Br + Bi) - Ar Br - Ai Bi]`.
pub fn matmul(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    let ar = a.mapv(|z| z.re);
    let ai = a.mapv(|z| z.im);
    let br = b.mapv(|z| z.re);
    let bi = b.mapv(|z| z.im);

    let rr = ar.dot(&br);
    let ii = ai.dot(&bi);
    let mixed = (&ar + &ai).dot(&(&br + &bi));

    let mut out = Array2::<C64>::zeros((a.nrows(), b.ncols()));
    Zip::from(&mut out)
        .and(&rr)
        .and(&ii)
        .and(&mixed)
        .for_each(|o, &p, &q, &m| *o = C64::new(p - q, m - p - q));
    out
}

/// Convenience wrapper multiplying owned/borrowed arrays.
pub fn mm(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    matmul(&a.view(), &b.view())
}

/// Conjugate transpose.
pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    let mut out = Array2::zeros((a.ncols(), a.nrows()));
    for ((i, j), v) in a.indexed_iter() {
        out[(j, i)] = v.conj();
    }
    out
}

/// Complex identity matrix.
pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

/// Trace.
pub fn trace(a: &Array2<C64>) -> C64 {
    a.diag().sum()
}

/// Trace of a product, `Tr(AB)`, without forming the product.
pub fn trace_of_product(a: &Array2<C64>, b: &Array2<C64>) -> C64 {
    assert_eq!(a.ncols(), b.nrows());
    assert_eq!(a.nrows(), b.ncols());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Largest entrywise deviation from Hermiticity, `max |A - A^dag|`.
pub fn hermiticity_deviation(a: &Array2<C64>) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Hermitian part `(A + A^dag)/2`.
pub fn hermitize(a: &Array2<C64>) -> Array2<C64> {
    let half = C64::new(0.5, 0.0);
    let mut out = a.clone();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out[(i, j)] = (a[(i, j)] + a[(j, i)].conj()) * half;
        }
    }
    out
}

/// Largest entry magnitude.
pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// Largest entrywise difference `max |A - B|`.
pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    let mut dev: f64 = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        dev = dev.max((x - y).norm());
    }
    dev
}

/// True when every entry is finite.
pub fn all_finite(a: &Array2<C64>) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Diagonal of `U^dag rho U` without forming the full conjugation:
/// one product `rho U`, then columnwise inner products with `U`.
pub fn conjugated_diagonal(rho: &Array2<C64>, u: &Array2<C64>) -> Vec<C64> {
    assert_eq!(rho.dim(), u.dim());
    let ru = mm(rho, u);
    let n = u.nrows();
    (0..n)
        .map(|k| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                acc += u[(i, k)].conj() * ru[(i, k)];
            }
            acc
        })
        .collect()
}
