//! Streaming assembly of `Q = G^T G`, where `G = R_{m,l}(T) P` and `P` holds
//! the normalized symmetric basis.
//!
//! On a symmetric argument `x = y^{⊗(m+l)}` a row of `R_{m,l}(T)` evaluates to
//! `det[U_ab(y)] * prod_p V_p(y) / m!`, with linear forms
//! `U_ab(y) = sum_k t[i_a, j_b, k] y_k` and `V_p(y) = sum_k t[i_{m+p}, j_{m+p}, k] y_k`.
//! So each row of `G` is the coefficient vector of that polynomial, divided by
//! `sqrt(n_mu)` per monomial. Rows that differ by a permutation of the
//! determinant indices only flip sign, and rows that differ by a permutation
//! of the free `(i, j)` pairs coincide, so one representative per class is
//! formed and weighted by its class size.

use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{binomial, combinations, distinct_orderings, multisets, MonomialTables};
use crate::error::{CpdError, Result};
use crate::linalg::Mat;
use crate::multilinear::Tensor3;
use crate::structured::tuples::{inverse_weights, sym_dim};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GramMeta {
    pub m: usize,
    pub l: usize,
    pub k: usize,
    /// Number of representative rows accumulated.
    pub row_groups: usize,
}

/// Symmetric positive semidefinite `D x D` restriction of `R_{m,l}(T)^T R_{m,l}(T)`
/// to the symmetric subspace, `D = C(K+m+l-1, m+l)`.
#[derive(Debug, Clone)]
pub struct GramOperator {
    pub dim: usize,
    pub q: Mat,
    pub meta: GramMeta,
}

#[derive(Debug, Clone, Copy)]
pub struct GramConfig {
    pub max_dim: usize,
    /// Upper bound on the entries of one row block of `G` held in memory.
    pub block_entries: usize,
}

impl Default for GramConfig {
    fn default() -> Self {
        Self {
            max_dim: 20_000,
            block_entries: 1 << 23,
        }
    }
}

struct RowPlan<'a> {
    t: &'a Tensor3,
    m: usize,
    isets: Vec<Vec<usize>>,
    jsets: Vec<Vec<usize>>,
    free: Vec<Vec<usize>>,
    free_weight: Vec<f64>,
    tables: MonomialTables,
    inv_w: Vec<f64>,
}

impl<'a> RowPlan<'a> {
    fn new(t: &'a Tensor3, m: usize, l: usize, max_dim: usize) -> Result<Self> {
        let (ni, nj, nk) = t.dims();
        if m == 0 || m > ni.min(nj) {
            return Err(CpdError::InvalidArgument(format!(
                "m = {m} must lie in 1..={} for a {ni}x{nj}x{nk} tensor",
                ni.min(nj)
            )));
        }
        let d = m + l;
        let dim = sym_dim(nk, d);
        if dim > max_dim as u128 {
            return Err(CpdError::ResourceLimit {
                what: "Gram dimension D",
                size: dim,
                limit: max_dim as u128,
            });
        }
        let free = multisets(ni * nj, l);
        let free_weight = free.iter().map(|f| (distinct_orderings(f) as f64).sqrt()).collect();
        Ok(Self {
            t,
            m,
            isets: combinations(ni, m),
            jsets: combinations(nj, m),
            free,
            free_weight,
            tables: MonomialTables::new(nk, d),
            inv_w: inverse_weights(nk, d),
        })
    }

    fn dim(&self) -> usize {
        self.inv_w.len()
    }

    fn rows(&self) -> usize {
        self.isets.len() * self.jsets.len() * self.free.len()
    }

    fn lin(&self, i: usize, j: usize) -> &[f64] {
        let (_, nj, nk) = self.t.dims();
        let at = (i * nj + j) * nk;
        &self.t.data()[at..at + nk]
    }

    /// Weighted row `g` of representative `index`, written into `out`.
    fn row(&self, index: usize, out: &mut [f64]) {
        let nf = self.free.len();
        let f = &self.free[index % nf];
        let ij = index / nf;
        let iset = &self.isets[ij / self.jsets.len()];
        let jset = &self.jsets[ij % self.jsets.len()];
        let m = self.m;
        let nj = self.t.dims().1;

        // determinant of the m x m matrix of linear forms, expanded column by
        // column over the set of rows already used
        let mut dp: Vec<Vec<f64>> = vec![Vec::new(); 1 << m];
        dp[0] = vec![1.0];
        for mask in 1usize..(1 << m) {
            let b = mask.count_ones() as usize - 1;
            let mut acc = vec![0.0; self.tables.len(b + 1)];
            for a in 0..m {
                if mask & (1 << a) == 0 {
                    continue;
                }
                let rest = mask & !(1 << a);
                let sign = if (rest >> (a + 1)).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                self.tables
                    .mul_linear_into(&dp[rest], b, self.lin(iset[a], jset[b]), sign, &mut acc);
            }
            dp[mask] = acc;
        }
        let mut poly = std::mem::take(&mut dp[(1 << m) - 1]);
        for (p, &pair) in f.iter().enumerate() {
            let mut next = vec![0.0; self.tables.len(m + p + 1)];
            self.tables
                .mul_linear_into(&poly, m + p, self.lin(pair / nj, pair % nj), 1.0, &mut next);
            poly = next;
        }
        let w = self.free_weight[index % nf];
        for ((o, c), iw) in out.iter_mut().zip(&poly).zip(&self.inv_w) {
            *o = c * iw * w;
        }
        debug_assert_eq!(poly.len(), out.len());
    }

    fn block(&self, start: usize, end: usize) -> Mat {
        let dim = self.dim();
        let rows: Vec<Vec<f64>> = (start..end)
            .into_par_iter()
            .map(|idx| {
                let mut v = vec![0.0; dim];
                self.row(idx, &mut v);
                v
            })
            .collect();
        Mat::from_fn(end - start, dim, |r, c| rows[r][c])
    }
}

pub fn build_sym_gram(t: &Tensor3, m: usize, l: usize) -> Result<GramOperator> {
    build_sym_gram_with(t, m, l, &GramConfig::default())
}

pub fn build_sym_gram_with(t: &Tensor3, m: usize, l: usize, cfg: &GramConfig) -> Result<GramOperator> {
    let plan = RowPlan::new(t, m, l, cfg.max_dim)?;
    let dim = plan.dim();
    let n = plan.rows();
    let step = (cfg.block_entries / dim).max(16);
    let mut q = Mat::zeros(dim, dim);
    let stripes = stripe_bounds(dim, rayon::current_num_threads() * 2);
    let mut start = 0;
    while start < n {
        let end = (start + step).min(n);
        let g = plan.block(start, end);
        if stripes.len() == 1 {
            q.gemm_tr(1.0, &g, &g, 1.0);
        } else {
            let parts: Vec<Mat> = stripes.par_iter().map(|&(s, w)| g.tr_mul(&g.columns(s, w))).collect();
            for (&(s, w), part) in stripes.iter().zip(parts) {
                let mut view = q.columns_mut(s, w);
                view += part;
            }
        }
        start = end;
    }
    let q = (&q + q.transpose()) * 0.5;
    Ok(GramOperator {
        dim,
        q,
        meta: GramMeta {
            m,
            l,
            k: t.dims().2,
            row_groups: n,
        },
    })
}

fn stripe_bounds(dim: usize, parts: usize) -> Vec<(usize, usize)> {
    if dim < 256 || parts <= 2 {
        return vec![(0, dim)];
    }
    let w = dim.div_ceil(parts);
    (0..dim).step_by(w).map(|s| (s, w.min(dim - s))).collect()
}

/// All weighted representative rows, so that `Q = G^T G`. Intended for
/// checks on small instances.
pub fn gram_rows(t: &Tensor3, m: usize, l: usize) -> Result<Mat> {
    let plan = RowPlan::new(t, m, l, GramConfig::default().max_dim)?;
    let size = plan.rows() as u128 * plan.dim() as u128;
    if size > crate::structured::maps::MAX_DENSE_ENTRIES {
        return Err(CpdError::ResourceLimit {
            what: "Gram row entries",
            size,
            limit: crate::structured::maps::MAX_DENSE_ENTRIES,
        });
    }
    Ok(plan.block(0, plan.rows()))
}

/// Number of representative rows for a tensor with row dimensions `I x J`.
pub fn row_group_count(i: usize, j: usize, m: usize, l: usize) -> u128 {
    binomial(i, m) * binomial(j, m) * binomial(i * j + l - 1, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, relative_diff};
    use crate::multilinear::{synthesize, FactorTriple};
    use crate::structured::maps::build_rml;
    use crate::structured::tuples::sym_basis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(dims: (usize, usize, usize), r: usize, seed: u64) -> Tensor3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        synthesize(
            &FactorTriple::new(
                gaussian_matrix(dims.0, r, &mut rng),
                gaussian_matrix(dims.1, r, &mut rng),
                gaussian_matrix(dims.2, r, &mut rng),
            )
            .unwrap(),
        )
    }

    #[test]
    fn gram_equals_explicit_restriction() {
        // oracle: R_{m,l}(T) built from its definition times the symmetric basis
        for (dims, r, m, l) in [
            ((3, 3, 3), 3, 2, 0),
            ((3, 4, 3), 3, 2, 1),
            ((3, 3, 3), 4, 3, 0),
            ((2, 3, 2), 2, 1, 2),
        ] {
            let t = random_tensor(dims, r, 17);
            let g = build_rml(&t, m, l).unwrap() * sym_basis(dims.2, m + l);
            let want = g.transpose() * &g;
            let got = build_sym_gram(&t, m, l).unwrap();
            assert_eq!(got.dim, want.nrows());
            assert!(relative_diff(&got.q, &want) < 1e-12, "{dims:?} m={m} l={l}");
        }
    }

    #[test]
    fn table_sizes() {
        let t = Tensor3::zeros((3, 3, 4));
        assert_eq!(build_sym_gram(&t, 2, 0).unwrap().dim, 10);
        let t = Tensor3::zeros((3, 7, 12));
        assert_eq!(build_sym_gram(&t, 2, 1).unwrap().dim, 364);
    }

    #[test]
    fn blocked_assembly_matches_single_block() {
        let t = random_tensor((4, 4, 9), 9, 3);
        let small = GramConfig {
            block_entries: 1,
            ..GramConfig::default()
        };
        let a = build_sym_gram_with(&t, 2, 1, &small).unwrap();
        let b = build_sym_gram(&t, 2, 1).unwrap();
        assert!(relative_diff(&a.q, &b.q) < 1e-13);
        let rows = gram_rows(&t, 2, 1).unwrap();
        assert!(relative_diff(&(rows.transpose() * &rows), &b.q) < 1e-13);
    }

    #[test]
    fn memory_guard_names_dimension() {
        let t = Tensor3::zeros((3, 3, 30));
        let cfg = GramConfig {
            max_dim: 100,
            ..GramConfig::default()
        };
        match build_sym_gram_with(&t, 2, 1, &cfg) {
            Err(CpdError::ResourceLimit { what, size, .. }) => {
                assert_eq!(what, "Gram dimension D");
                assert_eq!(size, 4960);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(build_sym_gram(&t, 4, 0).is_err());
    }
}
