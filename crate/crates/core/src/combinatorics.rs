//! Index machinery: binomials, lexicographic combinations, multisets
//! (nondecreasing tuples) and their distinct orderings.

/// Binomial coefficient `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// `binomial` narrowed to `usize`; panics only on values no caller could allocate.
pub fn binom(n: usize, k: usize) -> usize {
    usize::try_from(binomial(n, k)).expect("binomial overflows usize")
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// All strictly increasing `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binom(n, k));
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // rightmost position that can still advance
        let mut p = k;
        while p > 0 && cur[p - 1] == n - k + p - 1 {
            p -= 1;
        }
        if p == 0 {
            break;
        }
        cur[p - 1] += 1;
        for q in p..k {
            cur[q] = cur[q - 1] + 1;
        }
    }
    out
}

/// Lexicographic rank of a strictly increasing subset of `0..n` among all
/// subsets of the same size.
pub fn combination_rank(set: &[usize], n: usize) -> usize {
    let k = set.len();
    let mut rank = 0usize;
    let mut lo = 0usize;
    for (p, &a) in set.iter().enumerate() {
        for v in lo..a {
            rank += binom(n - v - 1, k - p - 1);
        }
        lo = a + 1;
    }
    rank
}

/// All nondecreasing `d`-tuples over `0..n` in lexicographic order.
pub fn multisets(n: usize, d: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return if d == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::with_capacity(binom(n + d - 1, d));
    let mut cur = vec![0usize; d];
    loop {
        out.push(cur.clone());
        let mut p = d;
        while p > 0 && cur[p - 1] == n - 1 {
            p -= 1;
        }
        if p == 0 {
            break;
        }
        cur[p - 1] += 1;
        for q in p..d {
            cur[q] = cur[p - 1];
        }
    }
    out
}

/// Lexicographic rank of a nondecreasing tuple among all nondecreasing
/// tuples of the same length over `0..n`.
pub fn multiset_rank(tuple: &[usize], n: usize) -> usize {
    let d = tuple.len();
    let mut rank = 0usize;
    let mut lo = 0usize;
    for (p, &a) in tuple.iter().enumerate() {
        let rest = d - p - 1;
        for v in lo..a {
            // tuples whose p-th entry is v and the tail is nondecreasing in v..n
            rank += binom(n - v + rest - 1, rest);
        }
        lo = a;
    }
    rank
}

/// Multiplicity counts of a nondecreasing tuple, one entry per distinct value.
pub fn multiplicities(tuple: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for (p, v) in tuple.iter().enumerate() {
        if p > 0 && tuple[p - 1] == *v {
            *out.last_mut().unwrap() += 1;
        } else {
            out.push(1);
        }
    }
    out
}

pub fn distinct_count(tuple: &[usize]) -> usize {
    multiplicities(tuple).len()
}

/// Number of distinct orderings of a multiset: `d! / prod(alpha_i!)`.
pub fn distinct_orderings(tuple: &[usize]) -> u128 {
    let denom: u128 = multiplicities(tuple).iter().map(|&a| factorial(a)).product();
    factorial(tuple.len()) / denom
}

/// Product of multiplicity factorials `prod(alpha_i!)`.
pub fn multiplicity_factor(tuple: &[usize]) -> u128 {
    multiplicities(tuple).iter().map(|&a| factorial(a)).product()
}

/// Every distinct ordering of the multiset given as a sorted tuple, in
/// lexicographic order.
pub fn distinct_permutations(sorted: &[usize]) -> Vec<Vec<usize>> {
    let mut cur = sorted.to_vec();
    cur.sort_unstable();
    let mut out = vec![cur.clone()];
    // standard next-permutation walk, which skips duplicates
    loop {
        let n = cur.len();
        if n < 2 {
            break;
        }
        let mut i = n - 1;
        while i > 0 && cur[i - 1] >= cur[i] {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        let mut j = n - 1;
        while cur[j] <= cur[i - 1] {
            j -= 1;
        }
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
    out
}

/// All `n!` permutations of `0..n` (Heap's algorithm order is irrelevant to callers).
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    distinct_permutations(&(0..n).collect::<Vec<_>>())
}

/// Sign of a permutation given as a sequence of distinct values.
pub fn permutation_sign(perm: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Mixed-radix flat index with the first digit most significant.
pub fn flat_index(digits: &[usize], radix: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * radix + d)
}

/// Inverse of [`flat_index`] for a fixed number of digits.
pub fn unflatten(mut index: usize, radix: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for p in (0..len).rev() {
        out[p] = index % radix;
        index /= radix;
    }
    out
}

/// Precomputed lookup tables for dense homogeneous polynomials in `vars`
/// variables, up to `max_degree`. Monomials of degree `d` are identified with
/// nondecreasing `d`-tuples of variable indices in lexicographic order.
#[derive(Debug, Clone)]
pub struct MonomialTables {
    pub vars: usize,
    pub max_degree: usize,
    /// `succ[d][idx * vars + k]` = index in degree `d+1` of monomial `idx * x_k`.
    succ: Vec<Vec<u32>>,
}

impl MonomialTables {
    pub fn new(vars: usize, max_degree: usize) -> Self {
        let mut succ = Vec::with_capacity(max_degree);
        for d in 0..max_degree {
            let monos = multisets(vars, d);
            let mut table = Vec::with_capacity(monos.len() * vars);
            let mut buf = Vec::with_capacity(d + 1);
            for mono in &monos {
                for k in 0..vars {
                    buf.clear();
                    buf.extend_from_slice(mono);
                    let pos = buf.partition_point(|&v| v <= k);
                    buf.insert(pos, k);
                    table.push(multiset_rank(&buf, vars) as u32);
                }
            }
            succ.push(table);
        }
        Self { vars, max_degree, succ }
    }

    pub fn len(&self, degree: usize) -> usize {
        binom(self.vars + degree - 1, degree)
    }

    /// `out += p * (sum_k lin[k] x_k)` where `p` has degree `degree`.
    pub fn mul_linear_into(&self, p: &[f64], degree: usize, lin: &[f64], scale: f64, out: &mut [f64]) {
        debug_assert_eq!(p.len(), self.len(degree));
        debug_assert_eq!(out.len(), self.len(degree + 1));
        let table = &self.succ[degree];
        let k = self.vars;
        for (idx, &c) in p.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let c = c * scale;
            let row = &table[idx * k..(idx + 1) * k];
            for (t, &l) in row.iter().zip(lin) {
                out[*t as usize] += c * l;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(14, 3), 364);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(0, 0), 1);
    }

    #[test]
    fn combinations_lexicographic() {
        let c = combinations(4, 2);
        assert_eq!(
            c,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert!(combinations(2, 3).is_empty());
    }

    #[test]
    fn combination_rank_agrees() {
        for n in 1..7 {
            for k in 0..=n {
                for (i, c) in combinations(n, k).iter().enumerate() {
                    assert_eq!(combination_rank(c, n), i);
                }
            }
        }
    }

    #[test]
    fn multisets_and_rank_agree() {
        for n in 1..5 {
            for d in 0..4 {
                let all = multisets(n, d);
                assert_eq!(all.len(), binom(n + d - 1, d));
                for (i, m) in all.iter().enumerate() {
                    assert_eq!(multiset_rank(m, n), i);
                }
            }
        }
    }

    #[test]
    fn distinct_permutation_counts() {
        assert_eq!(distinct_permutations(&[0, 0, 1]).len(), 3);
        assert_eq!(distinct_orderings(&[0, 0, 1]), 3);
        assert_eq!(distinct_permutations(&[2, 1, 0]).len(), 6);
        assert_eq!(distinct_permutations(&[1, 1, 1]).len(), 1);
        assert_eq!(multiplicity_factor(&[0, 0, 1, 1, 1]), 12);
    }

    #[test]
    fn signs() {
        assert_eq!(permutation_sign(&[0, 1, 2]), 1.0);
        assert_eq!(permutation_sign(&[1, 0, 2]), -1.0);
        assert_eq!(permutation_sign(&[2, 0, 1]), 1.0);
    }

    #[test]
    fn polynomial_product_matches_expansion() {
        // (x0 + 2 x1) * (3 x0 - x1) = 3 x0^2 + 5 x0 x1 - 2 x1^2
        let t = MonomialTables::new(2, 2);
        let mut out = vec![0.0; 3];
        t.mul_linear_into(&[1.0, 2.0], 1, &[3.0, -1.0], 1.0, &mut out);
        assert_eq!(out, vec![3.0, 5.0, -2.0]);
    }
}
