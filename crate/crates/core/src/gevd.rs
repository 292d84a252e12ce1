//! Base-case CPD when the second and third factors have full column rank:
//! generalized eigendecomposition of two random mixtures of the mode-1
//! slices, after compressing modes 2 and 3 to `R` dimensions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CpdError, Result};
use crate::linalg::{eig_general, gaussian_vector, range_basis, relative_diff, solve, Mat, Vector};
use crate::multilinear::{best_rank1, synthesize, FactorTriple, Tensor3};

#[derive(Debug, Clone, Copy)]
pub struct PencilConfig {
    pub mixing_seed: u64,
    /// Fresh mixing vectors tried after the first attempt fails.
    pub max_retries: usize,
    /// Minimum chordal distance between any two pencil eigenvalues.
    pub eig_sep_min: f64,
    /// Largest relative residual of the recovered decomposition.
    pub residual_max: f64,
}

impl Default for PencilConfig {
    fn default() -> Self {
        Self {
            mixing_seed: 0x5eed,
            max_retries: 5,
            eig_sep_min: 1e-6,
            residual_max: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PencilReport {
    /// Attempts that were discarded before the accepted one.
    pub retries: usize,
    pub separation: f64,
    pub residual: f64,
    /// Smallest fit of the rank-1 splits of the recovered `A ⊙ C` columns.
    pub split_fit: f64,
}

pub fn gevd_cpd(w: &Tensor3, r: usize, cfg: &PencilConfig) -> Result<FactorTriple> {
    gevd_cpd_report(w, r, cfg).map(|(f, _)| f)
}

pub fn gevd_cpd_report(w: &Tensor3, r: usize, cfg: &PencilConfig) -> Result<(FactorTriple, PencilReport)> {
    let (p, q, n) = w.dims();
    if r == 0 {
        return Err(CpdError::InvalidArgument("rank must be positive".into()));
    }
    if p < 2 && r > 1 {
        return Err(CpdError::InvalidArgument(
            "the pencil needs at least two mode-1 slices".into(),
        ));
    }
    if q < r || n < r {
        return Err(CpdError::RankDeficiency(format!(
            "a {p}x{q}x{n} tensor cannot have full-rank mode-2 and mode-3 factors of rank {r}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.mixing_seed);
    let w2 = w.unfold_mode2();
    let (ub, sb) = range_basis(&w2, r, &mut rng);
    let (uc, sc) = range_basis(&mode3_unfolding(w), r, &mut rng);
    for (s, mode) in [(&sb, "mode-2"), (&sc, "mode-3")] {
        if s.len() < r || s[r - 1] <= 1e-12 * s[0] {
            return Err(CpdError::RankDeficiency(format!(
                "{mode} factor of the pencil tensor has rank below {r}"
            )));
        }
    }
    let slices: Vec<Mat> = (0..p).map(|i| ub.transpose() * w.horizontal_slice(i) * &uc).collect();

    let mut last = None;
    for attempt in 0..=cfg.max_retries {
        let x = gaussian_vector(p, &mut rng);
        let y = gaussian_vector(p, &mut rng);
        match pencil_directions(&slices, &x, &y, r, cfg.eig_sep_min) {
            Ok((dirs, separation)) => {
                let bfull = &ub * &dirs;
                let (f, split_fit) = finish(w, &w2, &ub, &dirs, bfull)?;
                let residual = relative_diff(&synthesize(&f).unfold_r10(), &w.unfold_r10());
                if residual > cfg.residual_max {
                    return Err(CpdError::VerificationFailure {
                        what: "pencil reconstruction residual",
                        value: residual,
                        limit: cfg.residual_max,
                    });
                }
                let report = PencilReport {
                    retries: attempt,
                    separation,
                    residual,
                    split_fit,
                };
                return Ok((f, report));
            }
            Err(e) => last = Some(e),
        }
    }
    Err(match last.expect("at least one attempt") {
        Attempt::Singular => CpdError::RankDeficiency("mixed slice stays singular for every mixture".into()),
        Attempt::Complex => CpdError::ComplexPencil {
            retries: cfg.max_retries,
        },
        Attempt::Collision(separation) => CpdError::Degeneracy {
            retries: cfg.max_retries,
            separation,
        },
    })
}

enum Attempt {
    Singular,
    Complex,
    Collision(f64),
}

/// Mode-3 unfolding `N x (P Q)`.
fn mode3_unfolding(w: &Tensor3) -> Mat {
    w.unfold_mode3()
}

/// Eigenvectors of `X Y^{-1}` (columns, unit norm) and the minimum
/// chordal separation of its eigenvalues.
fn pencil_directions(
    slices: &[Mat],
    x: &Vector,
    y: &Vector,
    r: usize,
    sep_min: f64,
) -> std::result::Result<(Mat, f64), Attempt> {
    let mix = |c: &Vector| {
        slices
            .iter()
            .zip(c.iter())
            .fold(Mat::zeros(r, r), |acc, (s, &w)| acc + s * w)
    };
    let xm = mix(x);
    let ym = mix(y);
    // Z = X Y^{-1}  <=>  Y^T Z^T = X^T
    let zt = solve(&ym.transpose(), &xm.transpose(), "mixed slice").map_err(|_| Attempt::Singular)?;
    let z = zt.transpose();
    let scale = z.norm().max(f64::MIN_POSITIVE);
    let (re, im, vr) = eig_general(&z).map_err(|_| Attempt::Complex)?;
    let mut lambda = Vec::with_capacity(r);
    for (&lr, &li) in re.iter().zip(&im) {
        if li.abs() > 1e-8 * (scale + lr.abs()) {
            // a complex pair of tiny imaginary part is a collision in disguise
            if li.abs() < sep_min * (1.0 + lr * lr) {
                return Err(Attempt::Collision(li.abs() / (1.0 + lr * lr)));
            }
            return Err(Attempt::Complex);
        }
        lambda.push(lr);
    }
    if im.iter().any(|&x| x != 0.0) {
        // numerically real but reported as a pair: eigenvectors are not usable
        return Err(Attempt::Collision(0.0));
    }
    let mut separation = f64::INFINITY;
    for i in 0..r {
        for j in i + 1..r {
            let d =
                (lambda[i] - lambda[j]).abs() / ((1.0 + lambda[i] * lambda[i]) * (1.0 + lambda[j] * lambda[j])).sqrt();
            separation = separation.min(d);
        }
    }
    if separation < sep_min {
        return Err(Attempt::Collision(separation));
    }
    let mut dirs = vr;
    for mut col in dirs.column_iter_mut() {
        let n = col.norm();
        col /= n;
    }
    Ok((dirs, separation))
}

/// Given the mode-2 factor, solves for the Khatri-Rao product of the other
/// two and splits it column by column.
fn finish(w: &Tensor3, w2: &Mat, ub: &Mat, dirs: &Mat, bfull: Mat) -> Result<(FactorTriple, f64)> {
    let (p, _, n) = w.dims();
    let r = dirs.ncols();
    // W_(2) = B (A ⊙ C)^T and U_b^T B = dirs
    let act = solve(dirs, &(ub.transpose() * w2), "pencil eigenvector matrix")?;
    let mut a = Mat::zeros(p, r);
    let mut c = Mat::zeros(n, r);
    let mut fit = 1.0f64;
    for t in 0..r {
        let block = Mat::from_fn(p, n, |i, k| act[(t, i * n + k)]);
        let split = best_rank1(&block)?;
        fit = fit.min(split.fit);
        a.set_column(t, &split.u);
        c.set_column(t, &(&split.v * split.sigma));
    }
    Ok((FactorTriple::new(a, bfull, c)?, fit))
}

/// Extracts `f` from `v ≈ f^{⊗n}` (first index most significant).
///
/// For odd `n` the sign of `f` is fixed by `v`; for even `n` the entry of
/// largest magnitude is made positive.
pub fn power_root(v: &[f64], k: usize, n: usize) -> Result<(Vector, f64)> {
    if n < 2 {
        return Err(CpdError::InvalidArgument("power order must be at least 2".into()));
    }
    let len = k.checked_pow(n as u32).unwrap_or(usize::MAX);
    if k == 0 || v.len() != len {
        return Err(CpdError::InvalidArgument(format!(
            "vector of length {} is not a power of order {n} over {k} entries",
            v.len()
        )));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(CpdError::NotAPower { fit: 0.0 });
    }
    let m = Mat::from_row_slice(k, len / k, v);
    let lead = best_rank1(&m)?;
    let fit = lead.sigma / norm;
    if fit < 0.99 {
        return Err(CpdError::NotAPower { fit });
    }
    let mut f = lead.u * norm.powf(1.0 / n as f64);
    if n % 2 == 1 {
        // sign of <f^{⊗n}, v> decides
        let mut p = f.iter().copied().collect::<Vec<_>>();
        for _ in 1..n {
            p = crate::multilinear::kron_vec(&p, f.as_slice());
        }
        let dot: f64 = p.iter().zip(v).map(|(a, b)| a * b).sum();
        if dot < 0.0 {
            f.neg_mut();
        }
    }
    Ok((f, fit.min(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_matrix;
    use crate::multilinear::{kron_vec, match_factors};

    fn tensor(a: Mat, b: Mat, c: Mat) -> (FactorTriple, Tensor3) {
        let f = FactorTriple::new(a, b, c).unwrap();
        let t = synthesize(&f);
        (f, t)
    }

    #[test]
    fn two_by_two_exact() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]);
        let (truth, t) = tensor(a, Mat::identity(2, 2), Mat::identity(2, 2));
        let (f, rep) = gevd_cpd_report(&t, 2, &PencilConfig::default()).unwrap();
        assert!(rep.residual <= 1e-12);
        assert!(match_factors(&f, &truth).unwrap().max_column_angle < 1e-10);
    }

    #[test]
    fn random_slices_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = 5;
        let (truth, t) = tensor(
            gaussian_matrix(2, r, &mut rng),
            gaussian_matrix(r, r, &mut rng),
            gaussian_matrix(r, r, &mut rng),
        );
        let f = gevd_cpd(&t, r, &PencilConfig::default()).unwrap();
        assert!(match_factors(&f, &truth).unwrap().max_column_angle <= 1e-8);
    }

    #[test]
    fn tall_modes_are_compressed() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (truth, t) = tensor(
            gaussian_matrix(3, 4, &mut rng),
            gaussian_matrix(9, 4, &mut rng),
            gaussian_matrix(6, 4, &mut rng),
        );
        let f = gevd_cpd(&t, 4, &PencilConfig::default()).unwrap();
        assert!(match_factors(&f, &truth).unwrap().max_column_angle <= 1e-8);
    }

    #[test]
    fn equal_mode1_columns_collide() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let (_, t) = tensor(a, Mat::identity(2, 2), Mat::identity(2, 2));
        match gevd_cpd(&t, 2, &PencilConfig::default()) {
            Err(CpdError::Degeneracy { retries, .. }) => assert_eq!(retries, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deficient_mode_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut b = gaussian_matrix(4, 3, &mut rng);
        let col = b.column(0).into_owned();
        b.set_column(2, &col);
        let (_, t) = tensor(gaussian_matrix(3, 3, &mut rng), b, gaussian_matrix(4, 3, &mut rng));
        assert!(matches!(
            gevd_cpd(&t, 3, &PencilConfig::default()),
            Err(CpdError::RankDeficiency(_))
        ));
    }

    #[test]
    fn deterministic_for_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let (_, t) = tensor(
            gaussian_matrix(3, 3, &mut rng),
            gaussian_matrix(3, 3, &mut rng),
            gaussian_matrix(3, 3, &mut rng),
        );
        let cfg = PencilConfig::default();
        assert_eq!(gevd_cpd(&t, 3, &cfg).unwrap(), gevd_cpd(&t, 3, &cfg).unwrap());
    }

    #[test]
    fn power_roots() {
        let (f, fit) = power_root(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 2, 3).unwrap();
        assert!((f[0] - 1.0).abs() < 1e-15 && f[1].abs() < 1e-15 && (fit - 1.0).abs() < 1e-15);

        let g = [0.6, 0.8];
        let (f, fit) = power_root(&kron_vec(&g, &g), 2, 2).unwrap();
        assert!((f[0].abs() - 0.6).abs() < 1e-14 && (f[1].abs() - 0.8).abs() < 1e-14);
        assert!((fit - 1.0).abs() < 1e-14);

        // odd power of a vector whose largest entry is negative keeps its sign
        let g = [0.3, -1.2, 0.5];
        let v = kron_vec(&kron_vec(&g, &g), &g);
        let (f, _) = power_root(&v, 3, 3).unwrap();
        for i in 0..3 {
            assert!((f[i] - g[i]).abs() < 1e-13);
        }
        let mut noisy = v.clone();
        for (i, x) in noisy.iter_mut().enumerate() {
            *x += 1e-10 * ((i % 5) as f64 - 2.0);
        }
        let (f, _) = power_root(&noisy, 3, 3).unwrap();
        assert!((0..3).map(|i| (f[i] - g[i]).powi(2)).sum::<f64>().sqrt() <= 1e-8);

        let e = [1.0, 0.0, 0.0, 1.0];
        assert!(matches!(power_root(&e, 2, 2), Err(CpdError::NotAPower { .. })));
    }
}
