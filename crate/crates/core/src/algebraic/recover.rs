use crate::algebraic::FMatrix;
use crate::combinatorics::binomial;
use crate::error::{CpdError, Result};
use crate::linalg::{fix_sign, pinv, svd, sym_eigen, Mat, Vector};
use crate::multilinear::{khatri_rao, Tensor3};

/// Largest accepted mean projector defect of a recovered column direction.
pub const INTERSECTION_DEFECT_MAX: f64 = 1e-6;

/// Relative size below which an entry of `C^T F` counts as zero.
const ZERO_PATTERN_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct AbRecovery {
    /// Unit-norm columns.
    pub a: Mat,
    /// Unit-norm columns.
    pub b: Mat,
    /// Re-solved third factor carrying all magnitudes.
    pub c: Mat,
    /// Worst intersection defect over both modes (zero for exact data).
    pub defect: f64,
}

/// Recovers `A` and `B` given `C` (up to column scaling) and `F`.
///
/// Contracting the tensor with `f_S` leaves the `R - K + 1` terms outside
/// `S`, so `T x_3 f_S` has column space `span{a_s : s ∉ S}`. For fixed `r`,
/// the intersection of these spaces over every `S` not containing `r` is
/// the line of `a_r`; rows give `b_r` the same way. `C` is then re-solved by
/// least squares against the unfolding.
pub fn recover_ab(t: &Tensor3, c: &Mat, f: &FMatrix) -> Result<AbRecovery> {
    let (ni, nj, nk) = t.dims();
    let r = c.ncols();
    if c.nrows() != nk || f.f.nrows() != nk {
        return Err(CpdError::InvalidArgument(format!(
            "C is {}x{r} and F has {} rows for a tensor with K = {nk}",
            c.nrows(),
            f.f.nrows()
        )));
    }
    let n = f.ncols();
    let terms = r + 1 - nk.min(r);
    if terms > ni.min(nj) {
        return Err(CpdError::Condition(format!(
            "contractions keep {terms} terms, more than min(I, J) = {}",
            ni.min(nj)
        )));
    }
    let unfolded = t.unfold_r10();
    let contracted = &unfolded * &f.f;
    // orthonormal bases of the column and row spaces of every contraction
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for s in 0..n {
        let m = Mat::from_fn(ni, nj, |i, j| contracted[(i * nj + j, s)]);
        let dec = svd(&m);
        left.push(dec.u.columns(0, terms).into_owned());
        right.push(dec.v.columns(0, terms).into_owned());
    }
    let outside = outside_sets(c, f, r)?;
    let mut a = Mat::zeros(ni, r);
    let mut b = Mat::zeros(nj, r);
    let mut defect = 0.0f64;
    for (col, set) in outside.iter().enumerate() {
        let (va, da) = common_direction(&left, set, ni);
        let (vb, db) = common_direction(&right, set, nj);
        defect = defect.max(da).max(db);
        a.set_column(col, &va);
        b.set_column(col, &vb);
    }
    if defect > INTERSECTION_DEFECT_MAX {
        return Err(CpdError::VerificationFailure {
            what: "subspace intersection defect",
            value: defect,
            limit: INTERSECTION_DEFECT_MAX,
        });
    }
    let kr = khatri_rao(&a, &b)?;
    let c_new = (pinv(&kr, 1e-13) * unfolded).transpose();
    Ok(AbRecovery { a, b, c: c_new, defect })
}

/// For each `r`, the columns `S` of `F` with `r ∉ S`, read off the nonzero
/// pattern of `C^T F`.
fn outside_sets(c: &Mat, f: &FMatrix, r: usize) -> Result<Vec<Vec<usize>>> {
    let k = c.nrows();
    let lambda = c.transpose() * &f.f;
    let want = binomial(r - 1, k - 1) as usize;
    let mut sets = Vec::with_capacity(r);
    for row in 0..r {
        let cn = c.column(row).norm();
        let set: Vec<usize> = (0..f.ncols())
            .filter(|&s| lambda[(row, s)].abs() > ZERO_PATTERN_TOL * cn * f.f.column(s).norm())
            .collect();
        if set.len() != want {
            return Err(CpdError::RankDeficiency(format!(
                "column {row} of C meets {} columns of F outside its hyperplanes, expected {want}",
                set.len()
            )));
        }
        sets.push(set);
    }
    Ok(sets)
}

/// Unit vector closest to every subspace in `set`: the bottom eigenvector of
/// the summed complement projectors, with its eigenvalue per subspace.
fn common_direction(bases: &[Mat], set: &[usize], dim: usize) -> (Vector, f64) {
    let mut p = Mat::identity(dim, dim) * set.len() as f64;
    for &s in set {
        let u = &bases[s];
        p -= u * u.transpose();
    }
    let (vals, vecs) = sym_eigen(&p);
    let mut v: Vector = vecs.column(0).into_owned();
    fix_sign(&mut v);
    (v, vals[0].max(0.0) / set.len() as f64)
}
