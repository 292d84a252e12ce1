use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::linalg::{gaussian_matrix, pinv, Mat};
use crate::multilinear::{khatri_rao, FactorTriple, Tensor3};

/// Alternating least squares from `n_inits` Gaussian starts, keeping the
/// run with the smallest relative residual. A plain reference point for
/// the algebraic solver, not a tuned optimizer.
pub fn als_baseline(t: &Tensor3, r: usize, n_inits: usize, n_iters: usize, seed: u64) -> (FactorTriple, f64) {
    let (ni, nj, nk) = t.dims();
    let t1 = Mat::from_row_slice(ni, nj * nk, t.data());
    let t2 = t.unfold_mode2();
    let t3 = t.unfold_mode3();
    let norm = t.norm().max(f64::MIN_POSITIVE);
    (0..n_inits.max(1) as u64)
        .into_par_iter()
        .map(|init| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(init);
            let mut a = gaussian_matrix(ni, r, &mut rng);
            let mut b = gaussian_matrix(nj, r, &mut rng);
            let mut c = gaussian_matrix(nk, r, &mut rng);
            let mut residual = f64::INFINITY;
            for _ in 0..n_iters {
                a = update(&t1, &b, &c);
                b = update(&t2, &a, &c);
                c = update(&t3, &a, &b);
                let fit = &t3 - &c * khatri_rao(&a, &b).expect("same rank").transpose();
                let next = fit.norm() / norm;
                let done = next < 1e-15 || (residual.is_finite() && (residual - next).abs() <= 1e-15 * residual);
                residual = next;
                if done || !residual.is_finite() {
                    break;
                }
            }
            (a, b, c, residual)
        })
        .filter(|run| run.3.is_finite())
        .min_by(|x, y| x.3.total_cmp(&y.3))
        .and_then(|(a, b, c, res)| FactorTriple::new(a, b, c).ok().map(|f| (f.normalized(), res)))
        .unwrap_or_else(|| {
            let ones = |n| Mat::from_element(n, r, 1.0);
            (
                FactorTriple::new(ones(ni), ones(nj), ones(nk)).expect("nonzero"),
                f64::INFINITY,
            )
        })
}

/// Least-squares update of the factor unfolded as `m = X (Y ⊙ Z)^T`.
fn update(m: &Mat, y: &Mat, z: &Mat) -> Mat {
    let gram = (y.transpose() * y).component_mul(&(z.transpose() * z));
    m * khatri_rao(y, z).expect("same rank") * pinv(&gram, 1e-14)
}
