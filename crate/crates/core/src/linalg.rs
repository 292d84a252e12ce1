//! Dense matrix helpers: nalgebra storage, LAPACK factorizations.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{CpdError, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Default relative threshold below which singular values count as zero.
pub const TAU_RANK: f64 = 1e-9;

/// Singular value decomposition with singular values sorted in decreasing
/// order. `u` is `rows x p`, `v` is `cols x p` with `p = min(rows, cols)`.
pub struct Svd {
    pub u: Mat,
    pub s: Vec<f64>,
    pub v: Mat,
}

pub fn svd(m: &Mat) -> Svd {
    let (rows, cols) = m.shape();
    let p = rows.min(cols);
    if p == 0 {
        return Svd {
            u: Mat::zeros(rows, 0),
            s: vec![],
            v: Mat::zeros(cols, 0),
        };
    }
    let (u, s, vt) = lapack::gesdd(m).unwrap_or_else(|| lapack::gesvd(m));
    Svd {
        u,
        s,
        v: vt.transpose(),
    }
}

/// Number of singular values above `tau * sigma_max`.
pub fn rank_from_singular(s: &[f64], tau: f64) -> usize {
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&x| x > tau * smax).count(),
        _ => 0,
    }
}

pub fn numerical_rank(m: &Mat, tau: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    rank_from_singular(&svd(m).s, tau)
}

/// Symmetric eigendecomposition with eigenvalues in increasing order.
/// Only the lower triangle of `q` is read.
pub fn sym_eigen(q: &Mat) -> (Vec<f64>, Mat) {
    lapack::syevd(q)
}

/// Eigenvalues `(re, im)` and right eigenvectors of a general square matrix.
/// For a complex pair at `j, j+1` the vectors are `v_j ± i v_{j+1}`.
pub fn eig_general(z: &Mat) -> Result<(Vec<f64>, Vec<f64>, Mat)> {
    lapack::geev(z).ok_or_else(|| CpdError::RankDeficiency("nonsymmetric eigensolver did not converge".into()))
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub struct Cholesky {
    factor: Mat,
}

impl Cholesky {
    pub fn new(m: &Mat) -> Option<Self> {
        lapack::potrf(m).map(|factor| Self { factor })
    }

    pub fn solve(&self, rhs: &Mat) -> Mat {
        lapack::potrs(&self.factor, rhs)
    }
}

/// Unit vector spanning the (numerical) left null space of a `K x (K-1)`
/// matrix, i.e. the normal of the hyperplane spanned by its columns.
pub fn hyperplane_normal(cols: &Mat) -> (Vector, f64) {
    let k = cols.nrows();
    let mut padded = Mat::zeros(k, k);
    padded.columns_mut(0, cols.ncols()).copy_from(cols);
    let dec = svd(&padded);
    let ratio = if dec.s[0] > 0.0 {
        dec.s[k.saturating_sub(2)] / dec.s[0]
    } else {
        0.0
    };
    (dec.u.column(k - 1).into_owned(), ratio)
}

/// Unit right singular vector for the smallest singular value of a square matrix.
pub fn null_vector(m: &Mat) -> Vector {
    let dec = svd(m);
    dec.v.column(dec.s.len() - 1).into_owned()
}

/// Moore-Penrose pseudo-inverse with relative cutoff `tau`.
pub fn pinv(m: &Mat, tau: f64) -> Mat {
    let dec = svd(m);
    let r = rank_from_singular(&dec.s, tau);
    let mut out = Mat::zeros(m.ncols(), m.nrows());
    for i in 0..r {
        let vi = dec.v.column(i);
        let ui = dec.u.column(i);
        out += (vi * ui.transpose()) / dec.s[i];
    }
    out
}

/// Orthonormal basis for the leading `n`-dimensional column space of `m`,
/// plus the singular values of the projected matrix (for a rank check).
///
/// Wide or large matrices go through a Gaussian sketch first so only a small
/// SVD is ever formed.
pub fn range_basis<R: Rng>(m: &Mat, n: usize, rng: &mut R) -> (Mat, Vec<f64>) {
    let (rows, cols) = m.shape();
    let sketch = n + 10;
    if cols <= sketch || rows <= sketch {
        let dec = svd(m);
        let take = n.min(dec.s.len());
        return (dec.u.columns(0, take).into_owned(), dec.s);
    }
    let omega = gaussian_matrix(cols, sketch, rng);
    let y = m * omega;
    let q = y.qr().q();
    let small = q.transpose() * m;
    let dec = svd(&small);
    let take = n.min(dec.s.len());
    let basis = &q * dec.u.columns(0, take);
    (basis, dec.s)
}

pub fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vector<R: Rng>(len: usize, rng: &mut R) -> Vector {
    Vector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Flips `v` so that its entry of largest magnitude is positive; returns the sign used.
pub fn fix_sign(v: &mut Vector) -> f64 {
    let mut best = 0usize;
    for i in 0..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
        -1.0
    } else {
        1.0
    }
}

pub fn relative_diff(a: &Mat, b: &Mat) -> f64 {
    let denom = b.norm();
    let diff = (a - b).norm();
    if denom == 0.0 {
        diff
    } else {
        diff / denom
    }
}

/// Solve the square system `m x = rhs`, rejecting numerically singular `m`.
pub fn solve(m: &Mat, rhs: &Mat, what: &str) -> Result<Mat> {
    let dec = svd(m);
    let smax = dec.s.first().copied().unwrap_or(0.0);
    let smin = dec.s.last().copied().unwrap_or(0.0);
    if smax == 0.0 || smin <= 1e-13 * smax {
        return Err(CpdError::RankDeficiency(format!(
            "{what} is singular (condition {:.3e})",
            if smin > 0.0 { smax / smin } else { f64::INFINITY }
        )));
    }
    let mut out = Mat::zeros(m.ncols(), rhs.ncols());
    let utb = dec.u.transpose() * rhs;
    for i in 0..dec.s.len() {
        let row = utb.row(i) / dec.s[i];
        out += dec.v.column(i) * row;
    }
    Ok(out)
}

mod lapack {
    //! Safe wrappers over the LAPACK routines in use. nalgebra stores
    //! matrices column-major, which is what LAPACK expects.

    use std::os::raw::{c_char, c_int};

    use super::Mat;

    fn dim(n: usize) -> c_int {
        c_int::try_from(n).expect("matrix dimension exceeds LAPACK integer range")
    }

    /// Thin SVD by divide and conquer; `None` when it fails to converge.
    pub fn gesdd(m: &Mat) -> Option<(Mat, Vec<f64>, Mat)> {
        let (rows, cols) = m.shape();
        let p = rows.min(cols);
        let mut a = m.clone();
        let mut s = vec![0.0; p];
        let mut u = Mat::zeros(rows, p);
        let mut vt = Mat::zeros(p, cols);
        let mut iwork = vec![0 as c_int; 8 * p];
        let (mr, nc, pp) = (dim(rows), dim(cols), dim(p));
        let mut info = 0;
        let mut query = 0.0;
        let job = b'S' as c_char;
        unsafe {
            lapack_sys::dgesdd_(
                &job,
                &mr,
                &nc,
                a.as_mut_ptr(),
                &mr,
                s.as_mut_ptr(),
                u.as_mut_ptr(),
                &mr,
                vt.as_mut_ptr(),
                &pp,
                &mut query,
                &-1,
                iwork.as_mut_ptr(),
                &mut info,
            );
        }
        if info != 0 {
            return None;
        }
        let lwork = query as usize + 1;
        let mut work = vec![0.0; lwork];
        unsafe {
            lapack_sys::dgesdd_(
                &job,
                &mr,
                &nc,
                a.as_mut_ptr(),
                &mr,
                s.as_mut_ptr(),
                u.as_mut_ptr(),
                &mr,
                vt.as_mut_ptr(),
                &pp,
                work.as_mut_ptr(),
                &dim(lwork),
                iwork.as_mut_ptr(),
                &mut info,
            );
        }
        (info == 0).then_some((u, s, vt))
    }

    /// Thin SVD by QR iteration, the slower fallback.
    pub fn gesvd(m: &Mat) -> (Mat, Vec<f64>, Mat) {
        let (rows, cols) = m.shape();
        let p = rows.min(cols);
        let mut a = m.clone();
        let mut s = vec![0.0; p];
        let mut u = Mat::zeros(rows, p);
        let mut vt = Mat::zeros(p, cols);
        let (mr, nc, pp) = (dim(rows), dim(cols), dim(p));
        let mut info = 0;
        let mut query = 0.0;
        let job = b'S' as c_char;
        unsafe {
            lapack_sys::dgesvd_(
                &job,
                &job,
                &mr,
                &nc,
                a.as_mut_ptr(),
                &mr,
                s.as_mut_ptr(),
                u.as_mut_ptr(),
                &mr,
                vt.as_mut_ptr(),
                &pp,
                &mut query,
                &-1,
                &mut info,
            );
        }
        let lwork = query as usize + 1;
        let mut work = vec![0.0; lwork];
        unsafe {
            lapack_sys::dgesvd_(
                &job,
                &job,
                &mr,
                &nc,
                a.as_mut_ptr(),
                &mr,
                s.as_mut_ptr(),
                u.as_mut_ptr(),
                &mr,
                vt.as_mut_ptr(),
                &pp,
                work.as_mut_ptr(),
                &dim(lwork),
                &mut info,
            );
        }
        assert!(info >= 0, "dgesvd rejected argument {}", -info);
        (u, s, vt)
    }

    pub fn syevd(q: &Mat) -> (Vec<f64>, Mat) {
        let n = q.nrows();
        if n == 0 {
            return (vec![], Mat::zeros(0, 0));
        }
        let mut a = q.clone();
        let mut w = vec![0.0; n];
        let nn = dim(n);
        let (jobz, uplo) = (b'V' as c_char, b'L' as c_char);
        let mut info = 0;
        let mut query = 0.0;
        let mut iquery: c_int = 0;
        unsafe {
            lapack_sys::dsyevd_(
                &jobz,
                &uplo,
                &nn,
                a.as_mut_ptr(),
                &nn,
                w.as_mut_ptr(),
                &mut query,
                &-1,
                &mut iquery,
                &-1,
                &mut info,
            );
        }
        let lwork = query as usize + 1;
        let liwork = iquery.max(1) as usize;
        let mut work = vec![0.0; lwork];
        let mut iwork = vec![0 as c_int; liwork];
        unsafe {
            lapack_sys::dsyevd_(
                &jobz,
                &uplo,
                &nn,
                a.as_mut_ptr(),
                &nn,
                w.as_mut_ptr(),
                work.as_mut_ptr(),
                &dim(lwork),
                iwork.as_mut_ptr(),
                &dim(liwork),
                &mut info,
            );
        }
        assert_eq!(info, 0, "dsyevd failed with info {info}");
        (w, a)
    }

    pub fn geev(z: &Mat) -> Option<(Vec<f64>, Vec<f64>, Mat)> {
        let n = z.nrows();
        let mut a = z.clone();
        let mut wr = vec![0.0; n];
        let mut wi = vec![0.0; n];
        let mut vl = [0.0f64; 1];
        let mut vr = Mat::zeros(n, n);
        let nn = dim(n);
        let (jl, jr) = (b'N' as c_char, b'V' as c_char);
        let mut info = 0;
        let mut query = 0.0;
        unsafe {
            lapack_sys::dgeev_(
                &jl,
                &jr,
                &nn,
                a.as_mut_ptr(),
                &nn,
                wr.as_mut_ptr(),
                wi.as_mut_ptr(),
                vl.as_mut_ptr(),
                &1,
                vr.as_mut_ptr(),
                &nn,
                &mut query,
                &-1,
                &mut info,
            );
        }
        let lwork = query as usize + 1;
        let mut work = vec![0.0; lwork];
        unsafe {
            lapack_sys::dgeev_(
                &jl,
                &jr,
                &nn,
                a.as_mut_ptr(),
                &nn,
                wr.as_mut_ptr(),
                wi.as_mut_ptr(),
                vl.as_mut_ptr(),
                &1,
                vr.as_mut_ptr(),
                &nn,
                work.as_mut_ptr(),
                &dim(lwork),
                &mut info,
            );
        }
        (info == 0).then_some((wr, wi, vr))
    }

    pub fn potrf(m: &Mat) -> Option<Mat> {
        let n = m.nrows();
        let mut a = m.clone();
        let nn = dim(n);
        let uplo = b'L' as c_char;
        let mut info = 0;
        unsafe {
            lapack_sys::dpotrf_(&uplo, &nn, a.as_mut_ptr(), &nn, &mut info);
        }
        (info == 0).then_some(a)
    }

    pub fn potrs(factor: &Mat, rhs: &Mat) -> Mat {
        let n = factor.nrows();
        let mut b = rhs.clone();
        let nn = dim(n);
        let uplo = b'L' as c_char;
        let mut info = 0;
        unsafe {
            lapack_sys::dpotrs_(
                &uplo,
                &nn,
                &dim(rhs.ncols()),
                factor.as_ptr(),
                &nn,
                b.as_mut_ptr(),
                &nn,
                &mut info,
            );
        }
        assert_eq!(info, 0, "dpotrs rejected argument {}", -info);
        b
    }
}
