//! Checkable uniqueness certificates and generic identifiability bounds.
//!
//! The underlying conditions quantify over every vector in the row space of
//! `C` and cannot be decided directly. What is checked here are their matrix
//! rank surrogates: if a check passes the corresponding uniqueness statement
//! holds, but a failed check proves nothing.

use serde::Serialize;

use crate::combinatorics::binomial;
use crate::error::{CpdError, Result};
use crate::linalg::{numerical_rank, rank_from_singular, svd, Mat, TAU_RANK};
use crate::multilinear::{compound, k_rank, khatri_rao, FactorTriple};
use crate::structured::{phi_compact, s_matrix_sym};

/// `2R + 2 <= k_A + k_B + k_C` with numerically computed k-ranks.
pub fn check_kruskal(f: &FactorTriple) -> Result<bool> {
    let sum = k_rank(&f.a)? + k_rank(&f.b)? + k_rank(&f.c)?;
    Ok(2 * f.rank() + 2 <= sum)
}

/// Full column rank of `Phi_{k,l}(A, B) U`, where the columns of `U` span
/// `range(S_{k+l}(C)^T)`.
///
/// `k` may not exceed `R - K + 2`, with `K` the numerical rank of `C`.
pub fn check_phi_u(f: &FactorTriple, k: usize, l: usize) -> Result<bool> {
    let r = f.rank();
    let kc = numerical_rank(&f.c, TAU_RANK);
    let m = r + 2 - kc.min(r + 1);
    if k == 0 || k > m {
        return Err(CpdError::InvalidArgument(format!("order {k} outside 1..={m}")));
    }
    let s = s_matrix_sym(&f.c, k, l)?;
    let dec = svd(&s);
    let rank = rank_from_singular(&dec.s, TAU_RANK);
    if rank == 0 {
        return Ok(true);
    }
    let (ni, nj) = (f.a.nrows(), f.b.nrows());
    if k > ni.min(nj).min(r) {
        // every k x k minor is empty, so Phi vanishes
        return Ok(false);
    }
    let u = dec.v.columns(0, rank).into_owned();
    let phi = phi_compact(&f.a, &f.b, k, l)?;
    Ok(numerical_rank(&(phi * u), TAU_RANK) == rank)
}

/// `C_2(A) ⊙ C_2(B)` and `C` both have full column rank.
pub fn check_compound_condition(f: &FactorTriple) -> Result<bool> {
    let r = f.rank();
    if numerical_rank(&f.c, TAU_RANK) < r {
        return Ok(false);
    }
    if r < 2 {
        return Ok(true);
    }
    if f.a.nrows() < 2 || f.b.nrows() < 2 {
        return Ok(false);
    }
    let kr = khatri_rao(&compound(&f.a, 2)?, &compound(&f.b, 2)?)?;
    Ok(numerical_rank(&kr, TAU_RANK) == kr.ncols())
}

/// Lifting values `l_1..l_m`: zero everywhere except `l_m`.
pub fn l_schedule(m: usize, l_m: usize) -> Vec<usize> {
    let mut s = vec![0; m];
    if let Some(last) = s.last_mut() {
        *last = l_m;
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Kruskal's k-rank inequality holds.
    UniqueByKruskal,
    /// A single `Phi_{m,l} U_m` check plus the k-rank requirement
    /// `min(k_A, k_B) >= m - 1`, and the one-factor upgrade inequality.
    UniqueBySingleOrder,
    /// Every `Phi_{k,l_k} U_k`, `k = 1..m`, has full column rank, plus the
    /// one-factor upgrade inequality.
    UniqueByAllOrders,
    /// The third factor is unique but the upgrade inequality fails.
    OneFactorUnique,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiUCheck {
    pub k: usize,
    pub l: usize,
    pub full_rank: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub rank: usize,
    pub k_a: usize,
    pub k_b: usize,
    pub k_c: usize,
    /// `R - K + 2` with `K` the rank of `C`.
    pub m: usize,
    pub kruskal_holds: bool,
    pub compound_condition_holds: bool,
    pub khatri_rao_full_rank: bool,
    pub phi_u_full_rank: Vec<PhiUCheck>,
    pub min_k_rank_ok: bool,
    pub uniq_via_one_fm: bool,
    pub verdict: Verdict,
    /// Checks that could not run (size limits) and were counted as failed.
    pub skipped: Vec<String>,
}

/// Assembles every certificate. `l_schedule[k-1]` is the lifting used for
/// order `k`; missing entries default to zero.
///
/// The verdict is the first certificate that holds, in the order Kruskal,
/// single order, all orders; failing those, one-factor uniqueness.
pub fn check_uniqueness(f: &FactorTriple, l_schedule: &[usize]) -> UniquenessReport {
    let r = f.rank();
    let mut skipped = Vec::new();
    let mut krank = |x: &Mat, name: &str| {
        k_rank(x).unwrap_or_else(|e| {
            skipped.push(format!("k-rank of {name}: {e}"));
            0
        })
    };
    let (k_a, k_b, k_c) = (krank(&f.a, "A"), krank(&f.b, "B"), krank(&f.c, "C"));
    let kc_rank = numerical_rank(&f.c, TAU_RANK);
    let m = r + 2 - kc_rank.min(r + 1);
    let kruskal_holds = k_a + k_b + k_c >= 2 * r + 2;
    let compound_condition_holds = check_compound_condition(f).unwrap_or_else(|e| {
        skipped.push(format!("compound condition: {e}"));
        false
    });
    let khatri_rao_full_rank = khatri_rao(&f.a, &f.b).is_ok_and(|kr| numerical_rank(&kr, TAU_RANK) == r);

    let phi_u_full_rank: Vec<PhiUCheck> = (1..=m)
        .map(|k| {
            let l = l_schedule.get(k - 1).copied().unwrap_or(0);
            let full_rank = check_phi_u(f, k, l).unwrap_or_else(|e| {
                skipped.push(format!("Phi U at k = {k}, l = {l}: {e}"));
                false
            });
            PhiUCheck { k, l, full_rank }
        })
        .collect();
    let min_k_rank_ok = k_a.min(k_b) + 1 >= m;
    let uniq_via_one_fm = (k_a.min(k_b.saturating_sub(1))).max(k_a.saturating_sub(1).min(k_b)) + k_c > r;

    let base = k_c >= 1 && khatri_rao_full_rank;
    let all_orders = base && phi_u_full_rank.iter().all(|c| c.full_rank);
    let single_order = base && min_k_rank_ok && phi_u_full_rank.last().is_some_and(|c| c.full_rank);
    let verdict = if kruskal_holds {
        Verdict::UniqueByKruskal
    } else if single_order && uniq_via_one_fm {
        Verdict::UniqueBySingleOrder
    } else if all_orders && uniq_via_one_fm {
        Verdict::UniqueByAllOrders
    } else if single_order || all_orders {
        Verdict::OneFactorUnique
    } else {
        Verdict::Inconclusive
    };
    UniquenessReport {
        rank: r,
        k_a,
        k_b,
        k_c,
        m,
        kruskal_holds,
        compound_condition_holds,
        khatri_rao_full_rank,
        phi_u_full_rank,
        min_k_rank_ok,
        uniq_via_one_fm,
        verdict,
        skipped,
    }
}

/// Runs [`check_uniqueness`] with `l_m` raised from 0 to `l_max` until the
/// order-`m` check passes (other orders keep `l = 0`).
pub fn check_uniqueness_auto(f: &FactorTriple, l_max: usize) -> UniquenessReport {
    let m = f.rank() + 2 - numerical_rank(&f.c, TAU_RANK).min(f.rank() + 1);
    let mut report = check_uniqueness(f, &l_schedule(m, 0));
    for l in 1..=l_max {
        if report.phi_u_full_rank.last().is_some_and(|c| c.full_rank) || report.kruskal_holds {
            break;
        }
        report = check_uniqueness(f, &l_schedule(m, l));
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bound {
    /// Largest rank `R` allowed by the bound (real-valued for closed forms).
    pub max_rank: f64,
    pub applicable: bool,
    pub note: &'static str,
}

/// Generic uniqueness bounds for an `I x J x K` format, dimensions sorted
/// ascending first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenericBounds {
    pub dims: (usize, usize, usize),
    /// `(I + J + 2K - 2 - sqrt((I - J)^2 + 4K)) / 2`.
    pub sqrt_bound: Bound,
    /// `IJK / (I + J + K - 2) - K`.
    pub ratio_bound: Bound,
    /// `2^(alpha + beta - 2)` with `2^alpha <= I`, `2^beta <= J` maximal.
    pub power_of_two_bound: Bound,
    /// `(I - 1)(J - 1)`.
    pub full_rank_c_bound: Bound,
    /// Largest `R <= K` with `C(R, 2) <= C(I, 2) C(J, 2)`.
    pub compound2_bound: Bound,
    /// Largest `R` with `2R + 2 <= I + J + K`.
    pub kruskal_bound: Bound,
    /// Largest `R >= K` with `C(R, m) <= C(I, m) C(J, m)`, `m = R - K + 2`.
    pub compound_m_bound: Bound,
}

pub fn generic_bounds(i: usize, j: usize, k: usize) -> Result<GenericBounds> {
    let mut d = [i, j, k];
    d.sort_unstable();
    let [i, j, k] = d;
    if i < 2 {
        return Err(CpdError::InvalidArgument(format!(
            "dimensions must be at least 2, got {d:?}"
        )));
    }
    let (fi, fj, fk) = (i as f64, j as f64, k as f64);
    let sqrt_bound = (fi + fj + 2.0 * fk - 2.0 - ((fi - fj).powi(2) + 4.0 * fk).sqrt()) / 2.0;
    let ratio_bound = fi * fj * fk / (fi + fj + fk - 2.0) - fk;
    let alpha = usize::BITS - 1 - i.leading_zeros();
    let beta = usize::BITS - 1 - j.leading_zeros();
    let pow2 = 2f64.powi(alpha as i32 + beta as i32 - 2);

    let compound2 = (1..=k)
        .rev()
        .find(|&r| binomial(r, 2) <= binomial(i, 2) * binomial(j, 2))
        .unwrap_or(0);
    let kruskal = (i + j + k).saturating_sub(2) / 2;
    // m grows with R and the right side vanishes once m > I, so the search is finite
    let compound_m = (k..=k + i)
        .filter(|&r| {
            let m = r + 2 - k;
            m <= i && binomial(r, m) <= binomial(i, m) * binomial(j, m)
        })
        .max()
        .unwrap_or(0);

    let needs_r_at_least_k = "valid for K <= R";
    Ok(GenericBounds {
        dims: (i, j, k),
        sqrt_bound: Bound {
            max_rank: sqrt_bound,
            applicable: true,
            note: needs_r_at_least_k,
        },
        ratio_bound: Bound {
            max_rank: ratio_bound,
            applicable: i >= 3,
            note: "needs I >= 3; stated over the complex field",
        },
        power_of_two_bound: Bound {
            max_rank: pow2,
            applicable: pow2 <= fi * fj / 4.0,
            note: "needs 2^(alpha+beta-2) <= IJ/4",
        },
        full_rank_c_bound: Bound {
            max_rank: ((i - 1) * (j - 1)) as f64,
            applicable: true,
            note: "equivalent to the sqrt bound when R = K; also necessary over the complex field",
        },
        compound2_bound: Bound {
            max_rank: compound2 as f64,
            applicable: true,
            note: "generic compound condition, requires R <= K",
        },
        kruskal_bound: Bound {
            max_rank: kruskal as f64,
            applicable: true,
            note: "generic Kruskal bound",
        },
        compound_m_bound: Bound {
            max_rank: compound_m as f64,
            applicable: compound_m > 0,
            note: "necessary for the order-m compound condition, m = R - K + 2",
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(dims: (usize, usize, usize), r: usize, seed: u64) -> FactorTriple {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FactorTriple::new(
            gaussian_matrix(dims.0, r, &mut rng),
            gaussian_matrix(dims.1, r, &mut rng),
            gaussian_matrix(dims.2, r, &mut rng),
        )
        .unwrap()
    }

    #[test]
    fn kruskal_arithmetic() {
        assert!(check_kruskal(&random((3, 3, 3), 3, 1)).unwrap());
        assert!(!check_kruskal(&random((3, 3, 3), 5, 2)).unwrap());
        let mut f = random((3, 3, 4), 4, 3);
        assert!(check_kruskal(&f).unwrap());
        let col = f.a.column(0).into_owned();
        f.a.set_column(1, &col);
        // k_A drops to 1: 10 > 1 + 3 + 4
        assert!(!check_kruskal(&f).unwrap());
    }

    #[test]
    fn order_one_is_khatri_rao_rank() {
        let f = random((3, 3, 4), 4, 4);
        assert!(check_phi_u(&f, 1, 0).unwrap());
        let mut g = f.clone();
        let col = g.a.column(0).into_owned();
        g.a.set_column(1, &col);
        let colb = g.b.column(0).into_owned();
        g.b.set_column(1, &colb);
        assert!(!check_phi_u(&g, 1, 0).unwrap());
    }

    #[test]
    fn repeated_column_breaks_order_two() {
        let mut f = random((3, 3, 4), 4, 5);
        assert!(check_phi_u(&f, 2, 0).unwrap());
        let col = f.a.column(0).into_owned();
        f.a.set_column(1, &col);
        assert!(!check_phi_u(&f, 2, 0).unwrap());
    }

    #[test]
    fn order_above_m_is_rejected() {
        let f = random((3, 3, 4), 4, 6);
        assert!(matches!(check_phi_u(&f, 3, 0), Err(CpdError::InvalidArgument(_))));
    }

    #[test]
    fn square_case_verdicts() {
        let report = check_uniqueness(&random((3, 3, 4), 4, 7), &[0, 0]);
        assert!(report.kruskal_holds);
        assert_eq!(report.verdict, Verdict::UniqueByKruskal);

        let mut f = random((3, 3, 4), 4, 8);
        f.a.column_mut(3).fill(0.0);
        let report = check_uniqueness(&f, &[0, 0]);
        assert!(!report.khatri_rao_full_rank);
        assert_eq!(report.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn non_square_case_needs_phi_u() {
        let report = check_uniqueness_auto(&random((4, 5, 6), 7, 9), 2);
        assert!(!report.kruskal_holds);
        assert_eq!(report.m, 3);
        assert!(matches!(
            report.verdict,
            Verdict::UniqueBySingleOrder | Verdict::UniqueByAllOrders
        ));
    }

    #[test]
    fn schedule_shape() {
        assert_eq!(l_schedule(3, 1), vec![0, 0, 1]);
        assert!(l_schedule(0, 1).is_empty());
    }

    #[test]
    fn bound_values() {
        let b = generic_bounds(12, 3, 7).unwrap();
        assert_eq!(b.dims, (3, 7, 12));
        assert!((b.sqrt_bound.max_rank - 12.0).abs() < 1e-12);
        assert_eq!(b.full_rank_c_bound.max_rank, 12.0);
        assert_eq!(generic_bounds(2, 2, 2).unwrap().full_rank_c_bound.max_rank, 1.0);
        let b = generic_bounds(4, 5, 6).unwrap();
        assert_eq!(b.power_of_two_bound.max_rank, 4.0);
        assert!(b.power_of_two_bound.applicable);
        assert_eq!(b.kruskal_bound.max_rank, 6.0);
        assert!(generic_bounds(1, 3, 3).is_err());
    }

    #[test]
    fn sqrt_bound_reaches_full_rank_c_bound() {
        for (i, j) in [(3, 3), (3, 4), (3, 5), (3, 6), (3, 7), (4, 4), (4, 5), (5, 5)] {
            let r = (i - 1) * (j - 1);
            let b = generic_bounds(i, j, r.max(j)).unwrap();
            assert!(b.sqrt_bound.max_rank + 1e-9 >= r as f64, "{i}x{j}");
        }
    }
}
