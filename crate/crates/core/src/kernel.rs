//! Null space of the Gram operator: `ker(R_{m,l}(T)) ∩ S^{m+l}` in
//! compressed symmetric coordinates, and its reshaping into the auxiliary
//! tensor fed to the pencil solver.

use crate::error::{CpdError, Result};
use crate::linalg::{svd, sym_eigen, Cholesky, Mat, Vector};
use crate::multilinear::Tensor3;
use crate::structured::{expand_symmetric, GramOperator};

#[derive(Debug, Clone, Copy)]
pub struct KernelConfig {
    /// Eigenvalues of `Q` below `tau_kernel * lambda_max` count as zero; on the
    /// row path the same ratio applies to singular values of `G`.
    pub tau_kernel: f64,
    /// Required ratio between the first nonzero and the last zero eigenvalue.
    pub gap_min: f64,
    /// Largest `D` handled by a full dense eigendecomposition.
    pub dense_max: usize,
    pub max_iterations: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            tau_kernel: 1e-9,
            gap_min: 1e3,
            dense_max: 3000,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KernelBasis {
    /// `D x n`, orthonormal columns.
    pub w: Mat,
    pub n: usize,
    /// `lambda_{n+1} / lambda_n` (infinite when the kernel is everything).
    pub gap: f64,
    pub expected_n: usize,
    /// Smallest computed eigenvalues divided by `lambda_max`.
    pub spectrum: Vec<f64>,
}

pub fn sym_kernel(q: &GramOperator, expected_n: usize) -> Result<KernelBasis> {
    sym_kernel_with(&q.q, expected_n, &KernelConfig::default())
}

pub fn sym_kernel_with(q: &Mat, expected_n: usize, cfg: &KernelConfig) -> Result<KernelBasis> {
    let dim = q.nrows();
    if q.ncols() != dim || dim == 0 {
        return Err(CpdError::InvalidArgument(
            "Gram matrix must be square and nonempty".into(),
        ));
    }
    if expected_n == 0 {
        return Err(CpdError::InvalidArgument(
            "expected kernel dimension must be positive".into(),
        ));
    }
    let (values, vectors, lambda_max) = if dim <= cfg.dense_max {
        let (vals, vecs) = sym_eigen(q);
        let lmax = vals.last().copied().unwrap_or(0.0).max(0.0);
        (vals, vecs, lmax)
    } else {
        smallest_eigenpairs(q, (expected_n + 5).min(dim), cfg)?
    };

    classify(values, vectors, lambda_max, expected_n, false, cfg)
}

/// Same contract as [`sym_kernel_with`], computed from the rows of `G`
/// (`Q = G^T G`) by an SVD. Avoids squaring the conditioning, so the basis is
/// accurate to working precision instead of its square root.
pub fn sym_kernel_rows(g: &Mat, expected_n: usize, cfg: &KernelConfig) -> Result<KernelBasis> {
    let dim = g.ncols();
    if dim == 0 {
        return Err(CpdError::InvalidArgument(
            "Gram rows must have at least one column".into(),
        ));
    }
    if expected_n == 0 {
        return Err(CpdError::InvalidArgument(
            "expected kernel dimension must be positive".into(),
        ));
    }
    // pad so that the SVD returns a full right basis
    let padded = if g.nrows() < dim {
        let mut p = Mat::zeros(dim, dim);
        p.rows_mut(0, g.nrows()).copy_from(g);
        p
    } else {
        g.clone()
    };
    let dec = svd(&padded);
    let values: Vec<f64> = dec.s.iter().rev().map(|x| x * x).collect();
    let vectors = Mat::from_fn(dim, dim, |i, j| dec.v[(i, dim - 1 - j)]);
    let lambda_max = dec.s.first().map_or(0.0, |x| x * x);
    classify(values, vectors, lambda_max, expected_n, true, cfg)
}

/// `values` ascending. With `from_rows` the threshold applies to singular
/// values of `G`, otherwise to eigenvalues of `Q`.
fn classify(
    values: Vec<f64>,
    vectors: Mat,
    lambda_max: f64,
    expected_n: usize,
    from_rows: bool,
    cfg: &KernelConfig,
) -> Result<KernelBasis> {
    let dim = vectors.nrows();
    if lambda_max <= 0.0 {
        // zero operator: the whole space is the kernel
        return accept_or_reject(
            Mat::identity(dim, dim),
            dim,
            expected_n,
            f64::INFINITY,
            vec![0.0; dim],
            cfg,
        );
    }
    let rel: Vec<f64> = values.iter().map(|v| v / lambda_max).collect();
    let level = if from_rows {
        cfg.tau_kernel * cfg.tau_kernel
    } else {
        cfg.tau_kernel
    };
    let found = rel.iter().take_while(|&&v| v < level).count();
    let gap = if found == 0 || found >= values.len() {
        f64::INFINITY
    } else {
        // numerical zeros sit at machine precision of the quantity decomposed
        let floor = if from_rows {
            f64::EPSILON * f64::EPSILON
        } else {
            f64::EPSILON
        };
        let last_zero = rel[found - 1].abs().max(floor);
        rel[found] / last_zero
    };
    let tail: Vec<f64> = rel
        .iter()
        .take((found.max(expected_n) + 3).min(rel.len()))
        .copied()
        .collect();
    let w = vectors.columns(0, found.min(vectors.ncols())).into_owned();
    accept_or_reject(w, found, expected_n, gap, tail, cfg)
}

fn accept_or_reject(
    w: Mat,
    found: usize,
    expected_n: usize,
    gap: f64,
    spectrum: Vec<f64>,
    cfg: &KernelConfig,
) -> Result<KernelBasis> {
    if found != expected_n || gap <= cfg.gap_min {
        return Err(CpdError::KernelDimension {
            found,
            expected: expected_n,
            tail: spectrum,
        });
    }
    Ok(KernelBasis {
        w,
        n: found,
        gap,
        expected_n,
        spectrum,
    })
}

/// Lowest `p` eigenpairs of a PSD matrix by shifted-inverse block subspace
/// iteration with Rayleigh-Ritz. Returns ascending eigenvalues, their
/// vectors, and an estimate of `lambda_max`.
fn smallest_eigenpairs(q: &Mat, p: usize, cfg: &KernelConfig) -> Result<(Vec<f64>, Mat, f64)> {
    let dim = q.nrows();
    let lambda_max = largest_eigenvalue(q);
    if lambda_max <= 0.0 {
        return Ok((vec![0.0; p], Mat::identity(dim, p), 0.0));
    }
    let shift = 1e-10 * lambda_max;
    let mut shifted = q.clone();
    for i in 0..dim {
        shifted[(i, i)] += shift;
    }
    let chol = Cholesky::new(&shifted)
        .ok_or_else(|| CpdError::RankDeficiency("shifted Gram matrix is not positive definite".into()))?;

    let mut x = Mat::from_fn(dim, p, |i, j| {
        (((i * 7 + j * 13) % 17) as f64 - 8.0) / 8.0 + if i == j { 1.0 } else { 0.0 }
    });
    let mut values = vec![0.0; p];
    for _ in 0..cfg.max_iterations {
        let y = chol.solve(&x);
        let basis = y.qr().q();
        let h = basis.transpose() * q * &basis;
        let h = (&h + h.transpose()) * 0.5;
        let (vals, vecs) = sym_eigen(&h);
        x = &basis * vecs;
        values = vals;
        let resid = q * &x - &x * Mat::from_diagonal(&Vector::from_vec(values.clone()));
        let worst = resid.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
        if worst <= 1e-10 * lambda_max {
            break;
        }
    }
    Ok((values, x, lambda_max))
}

fn largest_eigenvalue(q: &Mat) -> f64 {
    let dim = q.nrows();
    let mut v = Vector::from_fn(dim, |i, _| 1.0 + (i % 7) as f64 / 7.0);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..300 {
        let w = q * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (next - lambda).abs() <= 1e-12 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // the Rayleigh quotient underestimates; the last norm is a tight upper bound
    (q * &v).norm().max(lambda)
}

/// Residual `||R P z|| / (sqrt(lambda_max) ||z||)` of each kernel column,
/// evaluated through `Q` without touching `R_{m,l}(T)`.
pub fn kernel_residuals(q: &GramOperator, w: &Mat) -> Vec<f64> {
    let lmax = largest_eigenvalue(&q.q).max(f64::MIN_POSITIVE);
    w.column_iter()
        .map(|z| {
            let qz = &q.q * z;
            (z.dot(&qz).max(0.0) / lmax).sqrt() / z.norm()
        })
        .collect()
}

/// Expands each kernel column to its full `K^{m+l}` symmetric tensor and
/// stacks them as the `K x K^{m+l-1} x n` tensor whose slice `s` is the
/// first-index matricization of `w_s`.
pub fn expand_and_fold(w: &KernelBasis, k: usize, m: usize, l: usize) -> Result<Tensor3> {
    let d = m + l;
    if d < 2 {
        return Err(CpdError::InvalidArgument("folding needs m + l >= 2".into()));
    }
    let n = w.w.ncols();
    let full = k.pow(d as u32);
    let mut data = vec![0.0; full * n];
    for col in 0..n {
        let z: Vec<f64> = w.w.column(col).iter().copied().collect();
        let x = expand_symmetric(&z, k, d);
        for (s, v) in x.into_iter().enumerate() {
            data[s * n + col] = v;
        }
    }
    Tensor3::new((k, full / k, n), data)
}
