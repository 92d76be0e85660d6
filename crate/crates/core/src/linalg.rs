//! Truncated SVD and orthonormal-basis helpers.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Relative floor below which singular values count as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Leading singular triplets of a matrix.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Left singular vectors, one per column.
    pub u: Matrix,
    /// Singular values, non-increasing.
    pub s: Vec<f64>,
    /// Right singular vectors, one per column. Empty when not requested.
    pub v: Matrix,
}

impl SvdResult {
    /// Number of singular values above `RANK_TOLERANCE * s[0]`.
    pub fn effective_rank(&self) -> usize {
        let max = self.s.first().copied().unwrap_or(0.0);
        self.s.iter().filter(|&&x| x > RANK_TOLERANCE * max).count()
    }

    /// `U · diag(S) · Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let (m, r) = self.u.shape();
        let n = self.v.rows();
        Matrix::from_fn(m, n, |i, j| {
            (0..r).map(|k| self.u.get(i, k) * self.s[k] * self.v.get(j, k)).sum()
        })
    }
}

fn to_nalgebra(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn from_nalgebra_columns(m: &DMatrix<f64>, cols: &[usize]) -> Matrix {
    Matrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

fn decompose(m: &Matrix, r: usize, want_v: bool) -> Result<SvdResult> {
    let k = m.rows().min(m.cols());
    if r == 0 || r > k {
        return Err(Error::Rank {
            what: format!("truncated SVD of {}x{} matrix", m.rows(), m.cols()),
            rank: r,
            max: k,
        });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let svd = nalgebra::SVD::new(to_nalgebra(m), true, want_v);
    let u_full = svd.u.expect("u requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    // stable sort keeps the factorization's order among exact ties
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order.truncate(r);

    let mut u = from_nalgebra_columns(&u_full, &order);
    let s: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = match svd.v_t {
        Some(v_t) => Matrix::from_fn(v_t.ncols(), r, |i, j| v_t[(order[j], i)]),
        None => Matrix::zeros(0, r),
    };

    for j in 0..r {
        if leading_entry_sign(&u, j) < 0.0 {
            for i in 0..u.rows() {
                u.set(i, j, -u.get(i, j));
            }
            for i in 0..v.rows() {
                v.set(i, j, -v.get(i, j));
            }
        }
    }
    Ok(SvdResult { u, s, v })
}

/// Sign of the largest-magnitude entry of column `j` (earliest index wins ties).
fn leading_entry_sign(u: &Matrix, j: usize) -> f64 {
    let mut best = 0.0f64;
    for i in 0..u.rows() {
        let x = u.get(i, j);
        if x.abs() > best.abs() {
            best = x;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Top-`r` singular triplets of `m`.
///
/// Each left singular vector is scaled so its largest-magnitude entry is
/// positive, which makes the output deterministic for a given input.
pub fn truncated_svd(m: &Matrix, r: usize) -> Result<SvdResult> {
    decompose(m, r, true)
}

/// Top-`r` left singular vectors only.
pub fn leading_left_singular_vectors(m: &Matrix, r: usize) -> Result<Matrix> {
    Ok(decompose(m, r, false)?.u)
}

/// `‖UᵀU − I‖_F`.
pub fn orthonormality_defect(u: &Matrix) -> f64 {
    let gram = u.tr_matmul(u).expect("square gram");
    gram.sub(&Matrix::identity(u.cols()))
        .expect("same shape")
        .frobenius_norm()
}

/// Random matrix with `cols` orthonormal columns (Q factor of a Gaussian matrix).
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Result<Matrix> {
    if cols == 0 || cols > rows {
        return Err(Error::Rank {
            what: format!("orthonormal basis in R^{rows}"),
            rank: cols,
            max: rows,
        });
    }
    let g = Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal));
    let qr = to_nalgebra(&g).qr();
    let q = qr.q();
    let r = qr.r();
    // fix column signs so the factor is a function of the Gaussian draw alone
    Ok(Matrix::from_fn(rows, cols, |i, j| {
        let sign = if r[(j, j)] < 0.0 { -1.0 } else { 1.0 };
        q[(i, j)] * sign
    }))
}
