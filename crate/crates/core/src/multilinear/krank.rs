use crate::combinatorics::{binomial, combinations};
use crate::error::{CpdError, Result};
use crate::linalg::{numerical_rank, Mat, TAU_RANK};

/// Largest number of column subsets a single k-rank level may enumerate.
pub const MAX_KRANK_SUBSETS: u128 = 10_000_000;

/// Kruskal rank: the largest `k` such that every `k` columns are linearly
/// independent, by exhaustive subset enumeration.
pub fn k_rank(x: &Mat) -> Result<usize> {
    k_rank_with(x, TAU_RANK, MAX_KRANK_SUBSETS)
}

pub fn k_rank_with(x: &Mat, tau: f64, max_subsets: u128) -> Result<usize> {
    let (rows, cols) = x.shape();
    if cols == 0 {
        return Err(CpdError::InvalidArgument("k-rank of a matrix without columns".into()));
    }
    // unit columns make the result independent of column scaling
    let mut unit = x.clone();
    for mut c in unit.column_iter_mut() {
        let n = c.norm();
        if n == 0.0 {
            return Ok(0);
        }
        c /= n;
    }
    let mut k = 0;
    for size in 1..=rows.min(cols) {
        let count = binomial(cols, size);
        if count > max_subsets {
            return Err(CpdError::ResourceLimit {
                what: "k-rank subsets",
                size: count,
                limit: max_subsets,
            });
        }
        let all_independent = combinations(cols, size).into_iter().all(|subset| {
            let sub = unit.select_columns(&subset);
            numerical_rank(&sub, tau) == size
        });
        if !all_independent {
            break;
        }
        k = size;
    }
    Ok(k)
}
