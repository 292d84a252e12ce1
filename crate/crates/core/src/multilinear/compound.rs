use crate::combinatorics::{binom, combinations};
use crate::error::{CpdError, Result};
use crate::linalg::Mat;

/// Determinant of a small dense matrix by Gaussian elimination with partial
/// pivoting. Two identical rows always produce an exact zero.
pub fn small_det(m: &Mat) -> f64 {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    let mut buf: Vec<f64> = (0..n * n).map(|x| m[(x / n, x % n)]).collect();
    det_in_place(&mut buf, n)
}

/// Determinant of the row-major `n x n` matrix in `a`, which is overwritten.
pub fn det_in_place(a: &mut [f64], n: usize) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    let mut det = 1.0;
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            if f != 0.0 {
                for c in col..n {
                    a[r * n + c] -= f * a[col * n + c];
                }
            }
        }
    }
    det
}

/// `m`-th compound matrix: all `m x m` minors, row and column index sets in
/// lexicographic order.
pub fn compound(x: &Mat, m: usize) -> Result<Mat> {
    let (rows, cols) = x.shape();
    if m == 0 || m > rows.min(cols) {
        return Err(CpdError::InvalidArgument(format!(
            "compound order {m} out of range for a {rows}x{cols} matrix"
        )));
    }
    let row_sets = combinations(rows, m);
    let col_sets = combinations(cols, m);
    let mut out = Mat::zeros(binom(rows, m), binom(cols, m));
    for (ri, rs) in row_sets.iter().enumerate() {
        for (ci, cs) in col_sets.iter().enumerate() {
            let sub = Mat::from_fn(m, m, |a, b| x[(rs[a], cs[b])]);
            out[(ri, ci)] = small_det(&sub);
        }
    }
    Ok(out)
}
