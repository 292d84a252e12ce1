use serde::Serialize;

use crate::combinatorics::{
    binom, binomial, distinct_count, distinct_orderings, distinct_permutations, flat_index, multiplicities, multisets,
};
use crate::error::{CpdError, Result};
use crate::linalg::Mat;

/// Column index of `Phi_{m,l}` and `S_{m+l}`: a nondecreasing `(m+l)`-tuple
/// over `0..R` with at least `m` distinct values. Zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymTupleIndex {
    pub tuple: Vec<usize>,
    pub distinct_count: usize,
}

/// Nondecreasing `d`-tuple over `0..K` labelling one vector of the
/// normalized symmetric basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymMultiset {
    pub multiset: Vec<usize>,
    pub multiplicity_vector: Vec<usize>,
    /// Square root of the number of distinct orderings.
    pub weight: f64,
}

/// `M(m, l, R) = sum_{k=0..l} C(R, m+k) C(m+l-1, m+k-1)`.
pub fn tuple_count(m: usize, l: usize, r: usize) -> u128 {
    (0..=l)
        .map(|k| binomial(r, m + k) * binomial(m + l - 1, m + k - 1))
        .sum()
}

pub fn enumerate_tuples(m: usize, l: usize, r: usize) -> Result<Vec<SymTupleIndex>> {
    if m == 0 {
        return Err(CpdError::InvalidArgument("m must be at least 1".into()));
    }
    if r < m {
        return Err(CpdError::InvalidArgument(format!(
            "no tuple with {m} distinct values exists over {r} symbols"
        )));
    }
    Ok(multisets(r, m + l)
        .into_iter()
        .filter_map(|tuple| {
            let distinct_count = distinct_count(&tuple);
            (distinct_count >= m).then_some(SymTupleIndex { tuple, distinct_count })
        })
        .collect())
}

/// Dimension of the space of symmetric order-`d` tensors over `R^K`.
pub fn sym_dim(k: usize, d: usize) -> u128 {
    binomial(k + d - 1, d)
}

pub fn enumerate_multisets(k: usize, d: usize) -> Vec<SymMultiset> {
    multisets(k, d)
        .into_iter()
        .map(|multiset| {
            let weight = (distinct_orderings(&multiset) as f64).sqrt();
            SymMultiset {
                multiplicity_vector: multiplicities(&multiset),
                multiset,
                weight,
            }
        })
        .collect()
}

/// `1 / sqrt(#orderings)` for every degree-`d` monomial over `K` variables.
pub fn inverse_weights(k: usize, d: usize) -> Vec<f64> {
    multisets(k, d)
        .iter()
        .map(|mu| 1.0 / (distinct_orderings(mu) as f64).sqrt())
        .collect()
}

/// Maps compressed symmetric coordinates to the full `K^d` vector:
/// coordinate `mu` contributes `z_mu / sqrt(n_mu)` at every ordering of `mu`.
pub fn expand_symmetric(z: &[f64], k: usize, d: usize) -> Vec<f64> {
    let monos = multisets(k, d);
    debug_assert_eq!(z.len(), monos.len());
    let mut out = vec![0.0; k.pow(d as u32)];
    for (mu, &zv) in monos.iter().zip(z) {
        let perms = distinct_permutations(mu);
        let v = zv / (perms.len() as f64).sqrt();
        for p in perms {
            out[flat_index(&p, k)] = v;
        }
    }
    out
}

/// Orthogonal projection of a full `K^d` vector onto compressed symmetric
/// coordinates (the transpose of [`expand_symmetric`]).
pub fn compress_symmetric(x: &[f64], k: usize, d: usize) -> Vec<f64> {
    multisets(k, d)
        .iter()
        .map(|mu| {
            let perms = distinct_permutations(mu);
            let s: f64 = perms.iter().map(|p| x[flat_index(p, k)]).sum();
            s / (perms.len() as f64).sqrt()
        })
        .collect()
}

/// The `K^d x D` matrix with orthonormal columns spanning the symmetric subspace.
pub fn sym_basis(k: usize, d: usize) -> Mat {
    let dim = binom(k + d - 1, d);
    let mut p = Mat::zeros(k.pow(d as u32), dim);
    let mut z = vec![0.0; dim];
    for mu in 0..dim {
        z[mu] = 1.0;
        p.set_column(mu, &crate::linalg::Vector::from_vec(expand_symmetric(&z, k, d)));
        z[mu] = 0.0;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_formula() {
        assert_eq!(enumerate_tuples(2, 0, 4).unwrap().len(), 6);
        assert_eq!(enumerate_tuples(2, 1, 4).unwrap().len(), 16);
        assert_eq!(tuple_count(2, 1, 4), 16);
        assert_eq!(tuple_count(3, 1, 7), 140);
        for m in 1..4 {
            for l in 0..3 {
                for r in m..7 {
                    let n = enumerate_tuples(m, l, r).unwrap().len() as u128;
                    assert_eq!(n, tuple_count(m, l, r), "m={m} l={l} r={r}");
                }
            }
        }
        assert!(enumerate_tuples(3, 0, 2).is_err());
    }

    #[test]
    fn tuples_are_lexicographic() {
        let t = enumerate_tuples(2, 1, 3).unwrap();
        let raw: Vec<_> = t.iter().map(|x| x.tuple.clone()).collect();
        let mut sorted = raw.clone();
        sorted.sort();
        assert_eq!(raw, sorted);
        assert!(t.iter().all(|x| x.distinct_count >= 2));
    }

    #[test]
    fn symmetric_basis_is_orthonormal() {
        let p = sym_basis(3, 3);
        assert_eq!(p.shape(), (27, 10));
        let g = p.transpose() * &p;
        assert!((g - Mat::identity(10, 10)).norm() < 1e-14);
    }

    #[test]
    fn expansion_values() {
        // mu = (0, 1) over K = 2: entries 1/sqrt(2) at (0,1) and (1,0)
        let x = expand_symmetric(&[0.0, 1.0, 0.0], 2, 2);
        let h = 1.0 / 2f64.sqrt();
        assert_eq!(x, vec![0.0, h, h, 0.0]);
        let back = compress_symmetric(&x, 2, 2);
        assert!((back[1] - 1.0).abs() < 1e-15 && back[0] == 0.0 && back[2] == 0.0);
        let ms = enumerate_multisets(2, 2);
        assert_eq!(ms[1].multiplicity_vector, vec![1, 1]);
        assert!((ms[1].weight - 2f64.sqrt()).abs() < 1e-15);
    }
}
