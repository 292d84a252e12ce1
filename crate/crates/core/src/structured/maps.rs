//! Explicit construction of `R_{m,l}(T)`, `Phi_{m,l}(A, B)` and `S_{m+l}(C)`
//! straight from their entrywise definitions. These are reference
//! implementations for small sizes; the decomposition itself only needs the
//! Gram restriction in [`crate::structured::gram`].

use rayon::prelude::*;

use crate::combinatorics::{
    combination_rank, combinations, distinct_permutations, factorial, flat_index, multiplicity_factor, multisets,
    unflatten,
};
use crate::error::{CpdError, Result};
use crate::linalg::Mat;
use crate::multilinear::{compound, det_in_place, Tensor3};
use crate::structured::tuples::enumerate_tuples;

/// Largest number of stored entries any explicit structured matrix may have.
pub const MAX_DENSE_ENTRIES: u128 = 60_000_000;

fn guard(what: &'static str, rows: u128, cols: u128) -> Result<()> {
    let size = rows * cols;
    if size > MAX_DENSE_ENTRIES {
        return Err(CpdError::ResourceLimit {
            what,
            size,
            limit: MAX_DENSE_ENTRIES,
        });
    }
    Ok(())
}

fn check_order(m: usize, i: usize, j: usize) -> Result<()> {
    if m == 0 || m > i.min(j) {
        return Err(CpdError::InvalidArgument(format!(
            "m = {m} must lie in 1..={} for dimensions {i}x{j}",
            i.min(j)
        )));
    }
    Ok(())
}

fn has_repeat(xs: &[usize]) -> bool {
    (0..xs.len()).any(|a| (a + 1..xs.len()).any(|b| xs[a] == xs[b]))
}

/// Rows of `R_{m,l}(T)` that are not identically zero, i.e. whose first `m`
/// row indices and first `m` column indices are pairwise distinct.
#[derive(Debug, Clone)]
pub struct CompactRml {
    /// Zero-based row index into the full `I^{m+l} J^{m+l}` row range, increasing.
    pub rows: Vec<usize>,
    /// One row of values per entry of `rows`, `K^{m+l}` columns.
    pub values: Mat,
    pub full_rows: usize,
}

impl CompactRml {
    pub fn to_full(&self) -> Mat {
        let mut out = Mat::zeros(self.full_rows, self.values.ncols());
        for (p, &r) in self.rows.iter().enumerate() {
            out.row_mut(r).copy_from(&self.values.row(p));
        }
        out
    }
}

/// Entries of `R_{m,l}(T)` by the symmetrized determinant formula, nonzero
/// rows only.
pub fn build_rml_compact(t: &Tensor3, m: usize, l: usize) -> Result<CompactRml> {
    let (ni, nj, nk) = t.dims();
    check_order(m, ni, nj)?;
    let d = m + l;
    let ri = (ni as u128).pow(d as u32);
    let rj = (nj as u128).pow(d as u32);
    let cols = (nk as u128).pow(d as u32);
    guard("R_{m,l} entries", ri * rj, cols)?;
    let (ri, rj, cols) = (ri as usize, rj as usize, cols as usize);

    let live = |n: usize, count: usize| -> Vec<Vec<usize>> {
        (0..count)
            .map(|x| unflatten(x, n, d))
            .filter(|tup| !has_repeat(&tup[..m]))
            .collect()
    };
    let i_tuples = live(ni, ri);
    let j_tuples = live(nj, rj);
    guard(
        "R_{m,l} entries",
        (i_tuples.len() * j_tuples.len()) as u128,
        cols as u128,
    )?;

    // entries depend on the column only through its multiset
    let monos = multisets(nk, d);
    let mono_perms: Vec<(f64, Vec<Vec<usize>>)> = monos
        .iter()
        .map(|mu| (multiplicity_factor(mu) as f64, distinct_permutations(mu)))
        .collect();
    let col_mono: Vec<usize> = (0..cols)
        .map(|c| {
            let mut digits = unflatten(c, nk, d);
            digits.sort_unstable();
            monos.binary_search(&digits).expect("every sorted tuple is a monomial")
        })
        .collect();
    let prefactor = 1.0 / (factorial(m) as f64 * factorial(d) as f64);

    let pairs: Vec<(usize, usize)> = i_tuples
        .iter()
        .enumerate()
        .flat_map(|(a, _)| (0..j_tuples.len()).map(move |b| (a, b)))
        .collect();
    let rows_vals: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let it = &i_tuples[a];
            let jt = &j_tuples[b];
            let mut buf = vec![0.0; m * m];
            let per_mono: Vec<f64> = mono_perms
                .iter()
                .map(|(mult, perms)| {
                    let mut acc = 0.0;
                    for s in perms {
                        for x in 0..m {
                            for y in 0..m {
                                buf[x * m + y] = t.get(it[x], jt[y], s[y]);
                            }
                        }
                        let mut term = det_in_place(&mut buf, m);
                        for p in m..d {
                            term *= t.get(it[p], jt[p], s[p]);
                        }
                        acc += term;
                    }
                    acc * mult * prefactor
                })
                .collect();
            col_mono.iter().map(|&mu| per_mono[mu]).collect()
        })
        .collect();

    let mut values = Mat::zeros(pairs.len(), cols);
    let mut rows = Vec::with_capacity(pairs.len());
    for (p, (&(a, b), vals)) in pairs.iter().zip(&rows_vals).enumerate() {
        rows.push(flat_index(&i_tuples[a], ni) * rj + flat_index(&j_tuples[b], nj));
        for (c, v) in vals.iter().enumerate() {
            values[(p, c)] = *v;
        }
    }
    Ok(CompactRml {
        rows,
        values,
        full_rows: ri * rj,
    })
}

/// The full `I^{m+l} J^{m+l} x K^{m+l}` matrix `R_{m,l}(T)`.
pub fn build_rml(t: &Tensor3, m: usize, l: usize) -> Result<Mat> {
    Ok(build_rml_compact(t, m, l)?.to_full())
}

/// `Phi_{m,l}(A, B)` with all `I^{m+l} J^{m+l}` rows; columns follow
/// [`enumerate_tuples`].
///
/// The permutation sum of each column runs over the *distinct* orderings of
/// its tuple. Counting repeated orderings with multiplicity would scale the
/// column of a tuple with repeated values by `prod(alpha_i!)` and break
/// `R_{m,l}(T) = Phi_{m,l}(A, B) S_{m+l}(C)^T` for `l > 0`.
pub fn phi(a: &Mat, b: &Mat, m: usize, l: usize) -> Result<Mat> {
    let r = a.ncols();
    if b.ncols() != r {
        return Err(CpdError::InvalidArgument("A and B column counts differ".into()));
    }
    let (ni, nj) = (a.nrows(), b.nrows());
    check_order(m, ni.min(r), nj)?;
    let d = m + l;
    let ri = (ni as u128).pow(d as u32);
    let rj = (nj as u128).pow(d as u32);
    let tuples = enumerate_tuples(m, l, r)?;
    guard("Phi_{m,l} entries", ri * rj, tuples.len() as u128)?;
    let (ri, rj) = (ri as usize, rj as usize);
    let scale = 1.0 / (factorial(m) as f64).powi(2);
    let col_perms: Vec<Vec<Vec<usize>>> = tuples.iter().map(|t| distinct_permutations(&t.tuple)).collect();

    let rows: Vec<Vec<f64>> = (0..ri * rj)
        .into_par_iter()
        .map(|row| {
            let it = unflatten(row / rj, ni, d);
            let jt = unflatten(row % rj, nj, d);
            if has_repeat(&it[..m]) || has_repeat(&jt[..m]) {
                return vec![0.0; col_perms.len()];
            }
            let mut ba = vec![0.0; m * m];
            let mut bb = vec![0.0; m * m];
            col_perms
                .iter()
                .map(|perms| {
                    let mut acc = 0.0;
                    for s in perms {
                        for x in 0..m {
                            for y in 0..m {
                                ba[x * m + y] = a[(it[x], s[y])];
                                bb[x * m + y] = b[(jt[x], s[y])];
                            }
                        }
                        let mut term = det_in_place(&mut ba, m) * det_in_place(&mut bb, m);
                        for p in m..d {
                            term *= a[(it[p], s[p])] * b[(jt[p], s[p])];
                        }
                        acc += term;
                    }
                    acc * scale
                })
                .collect()
        })
        .collect();
    Ok(Mat::from_fn(ri * rj, col_perms.len(), |x, y| rows[x][y]))
}

/// Rows of `Phi_{m,l}(A, B)` up to sign and duplication: strictly increasing
/// `m`-subsets of row indices of `A` and of `B`, times multisets of `l` free
/// `(i, j)` pairs. Has the same column rank as [`phi`] and is computed from
/// compound matrices.
pub fn phi_compact(a: &Mat, b: &Mat, m: usize, l: usize) -> Result<Mat> {
    let r = a.ncols();
    if b.ncols() != r {
        return Err(CpdError::InvalidArgument("A and B column counts differ".into()));
    }
    let (ni, nj) = (a.nrows(), b.nrows());
    check_order(m, ni.min(r), nj)?;
    let tuples = enumerate_tuples(m, l, r)?;
    let isets = combinations(ni, m).len();
    let jsets = combinations(nj, m).len();
    let free = multisets(ni * nj, l);
    guard(
        "compact Phi_{m,l} entries",
        (isets * jsets) as u128 * free.len() as u128,
        tuples.len() as u128,
    )?;
    let ca = compound(a, m)?;
    let cb = compound(b, m)?;

    // per column: (subset rank of the determinant slots, tail) for each
    // ordering; both determinants share the column order, so signs cancel
    let col_terms: Vec<Vec<(usize, Vec<usize>)>> = tuples
        .iter()
        .map(|t| {
            distinct_permutations(&t.tuple)
                .into_iter()
                .filter(|s| !has_repeat(&s[..m]))
                .map(|s| {
                    let mut head = s[..m].to_vec();
                    head.sort_unstable();
                    (combination_rank(&head, r), s[m..].to_vec())
                })
                .collect()
        })
        .collect();
    let scale = 1.0 / (factorial(m) as f64).powi(2);

    let n_rows = isets * jsets * free.len();
    let rows: Vec<Vec<f64>> = (0..n_rows)
        .into_par_iter()
        .map(|row| {
            let f = &free[row % free.len()];
            let ij = row / free.len();
            let (ia, jb) = (ij / jsets, ij % jsets);
            col_terms
                .iter()
                .map(|terms| {
                    let mut acc = 0.0;
                    for (rank, tail) in terms {
                        let mut term = ca[(ia, *rank)] * cb[(jb, *rank)];
                        for (pair, &s) in f.iter().zip(tail) {
                            term *= a[(pair / nj, s)] * b[(pair % nj, s)];
                        }
                        acc += term;
                    }
                    acc * scale
                })
                .collect()
        })
        .collect();
    Ok(Mat::from_fn(n_rows, col_terms.len(), |x, y| rows[x][y]))
}

/// `S_{m+l}(C)`: column `(r_1..r_{m+l})` is the symmetrized Kronecker product
/// `1/(m+l)! sum_{perms} c_{s_1} ⊗ ... ⊗ c_{s_{m+l}}`.
pub fn s_matrix(c: &Mat, m: usize, l: usize) -> Result<Mat> {
    let (nk, r) = c.shape();
    let d = m + l;
    let tuples = enumerate_tuples(m, l, r)?;
    let rows = (nk as u128).pow(d as u32);
    guard("S_{m+l} entries", rows, tuples.len() as u128)?;
    let rows = rows as usize;
    let inv = 1.0 / factorial(d) as f64;
    let mut out = Mat::zeros(rows, tuples.len());
    for (col, t) in tuples.iter().enumerate() {
        let mult = multiplicity_factor(&t.tuple) as f64;
        for s in distinct_permutations(&t.tuple) {
            let mut v = vec![1.0];
            for &idx in &s {
                let cv: Vec<f64> = c.column(idx).iter().copied().collect();
                v = crate::multilinear::kron_vec(&v, &cv);
            }
            for (x, val) in v.iter().enumerate() {
                out[(x, col)] += mult * inv * val;
            }
        }
    }
    Ok(out)
}

/// `S_{m+l}(C)` in normalized symmetric coordinates (`P^T S`, `D` rows).
pub fn s_matrix_sym(c: &Mat, m: usize, l: usize) -> Result<Mat> {
    let (nk, r) = c.shape();
    let d = m + l;
    let tuples = enumerate_tuples(m, l, r)?;
    let monos = multisets(nk, d);
    guard("symmetric S_{m+l} entries", monos.len() as u128, tuples.len() as u128)?;
    let inv = 1.0 / factorial(d) as f64;
    let col_perms: Vec<(f64, Vec<Vec<usize>>)> = tuples
        .iter()
        .map(|t| (multiplicity_factor(&t.tuple) as f64, distinct_permutations(&t.tuple)))
        .collect();
    let rows: Vec<Vec<f64>> = monos
        .par_iter()
        .map(|mu| {
            let root = (crate::combinatorics::distinct_orderings(mu) as f64).sqrt();
            col_perms
                .iter()
                .map(|(mult, perms)| {
                    let sum: f64 = perms
                        .iter()
                        .map(|s| mu.iter().zip(s).map(|(&k, &q)| c[(k, q)]).product::<f64>())
                        .sum();
                    sum * mult * inv * root
                })
                .collect()
        })
        .collect();
    Ok(Mat::from_fn(monos.len(), col_perms.len(), |x, y| rows[x][y]))
}
