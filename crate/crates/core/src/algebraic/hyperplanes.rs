use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::combinatorics::{binomial, combinations};
use crate::error::{CpdError, Result};
use crate::linalg::{hyperplane_normal, solve, svd, Mat, Vector};

/// `K x C(R, K-1)` matrix whose column `S` (lexicographic over
/// `(K-1)`-subsets of `0..R`) is orthogonal to the columns of `C` indexed by `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct FMatrix {
    pub f: Mat,
}

impl FMatrix {
    pub fn ncols(&self) -> usize {
        self.f.ncols()
    }
}

/// Builds `F` from `C` by definition: unit normals of the hyperplanes
/// spanned by every `K-1` columns, sign fixed by largest entry.
pub fn f_from_c(c: &Mat) -> Result<FMatrix> {
    let (k, r) = c.shape();
    if k < 2 || r < k - 1 {
        return Err(CpdError::InvalidArgument(format!(
            "cannot form hyperplanes from a {k}x{r} matrix"
        )));
    }
    let subsets = combinations(r, k - 1);
    let mut f = Mat::zeros(k, subsets.len());
    for (col, s) in subsets.iter().enumerate() {
        let cols = Mat::from_fn(k, k - 1, |i, j| c[(i, s[j])]);
        let (mut n, ratio) = hyperplane_normal(&cols);
        if ratio < 1e-12 {
            return Err(CpdError::RankDeficiency(format!(
                "columns {s:?} do not span a hyperplane"
            )));
        }
        crate::linalg::fix_sign(&mut n);
        f.set_column(col, &n);
    }
    Ok(FMatrix { f })
}

/// Number of random `(K-1)`-subsets drawn before giving up.
pub fn sample_budget(r: usize, k: usize) -> usize {
    let p = r as f64 * ((k as f64 - 1.0) / r as f64).powi(k as i32 - 1);
    let per = (1.0 / p.min(1.0)).ceil();
    (200.0 * per).min(1e6) as usize
}

/// Recovers the `K x R` matrix `C` (unit columns, arbitrary order) from
/// `F`. Returns `C` and the number of subsets examined.
///
/// Each column `c_r` is the normal of the hyperplane spanned by the
/// `C(R-1, K-2)` columns of `F` whose index set contains `r`. Candidate
/// normals come from `K-1` columns of `F` at a time: all of them when that
/// is within the sample budget, random draws otherwise.
pub fn recover_c_from_f(f: &FMatrix, r: usize, k: usize, tol: f64, seed: u64) -> Result<(Mat, usize)> {
    let n = f.ncols();
    if f.f.nrows() != k || binomial(r, k - 1) != n as u128 {
        return Err(CpdError::InvalidArgument(format!(
            "F is {}x{n}, expected {k}x{}",
            f.f.nrows(),
            binomial(r, k - 1)
        )));
    }
    if k == r {
        let c = solve(&f.f.transpose(), &Mat::identity(k, k), "F")?;
        return Ok((unit_columns(c), 0));
    }
    let fu = unit_columns(f.f.clone());
    let need = binomial(r - 1, k - 2) as usize;
    let budget = sample_budget(r, k);
    let mut found: Vec<(Vec<usize>, Vector)> = Vec::new();
    let mut samples = 0usize;

    let try_subset = |subset: &[usize], found: &mut Vec<(Vec<usize>, Vector)>| {
        let cols = Mat::from_fn(k, k - 1, |i, j| fu[(i, subset[j])]);
        let (normal, ratio) = hyperplane_normal(&cols);
        if ratio < 1e-8 {
            return;
        }
        let members = orthogonal_members(&fu, &normal, tol);
        if members.len() != need || found.iter().any(|(m, _)| *m == members) {
            return;
        }
        // refit the normal on every member
        let all = Mat::from_fn(k, members.len(), |i, j| fu[(i, members[j])]);
        let dec = svd(&all);
        let refined: Vector = dec.u.column(k - 1).into_owned();
        if orthogonal_members(&fu, &refined, tol) == members {
            found.push((members, refined));
        }
    };

    if binomial(n, k - 1) <= budget as u128 {
        for subset in combinations(n, k - 1) {
            samples += 1;
            try_subset(&subset, &mut found);
            if found.len() == r {
                break;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while samples < budget && found.len() < r {
            samples += 1;
            let mut subset = sample(&mut rng, n, k - 1).into_vec();
            subset.sort_unstable();
            try_subset(&subset, &mut found);
        }
    }
    if found.len() != r {
        return Err(CpdError::RecoveryFailure {
            found: found.len(),
            expected: r,
            samples,
        });
    }
    let mut c = Mat::zeros(k, r);
    for (j, (_, v)) in found.iter().enumerate() {
        c.set_column(j, v);
    }
    Ok((c, samples))
}

fn orthogonal_members(fu: &Mat, normal: &Vector, tol: f64) -> Vec<usize> {
    let nn = normal.norm();
    (0..fu.ncols())
        .filter(|&j| fu.column(j).dot(normal).abs() <= tol * nn)
        .collect()
}

fn unit_columns(mut m: Mat) -> Mat {
    for mut col in m.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
    m
}
