//! Seeded test instances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{gaussian_matrix, Mat};
use crate::multilinear::{synthesize, FactorTriple, Tensor3};

/// Gaussian factors for an `I x J x K` tensor of rank `r`.
pub fn random_factors(dims: (usize, usize, usize), r: usize, seed: u64) -> FactorTriple {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(dims.0, r, &mut rng);
    let b = gaussian_matrix(dims.1, r, &mut rng);
    let c = gaussian_matrix(dims.2, r, &mut rng);
    FactorTriple::new(a, b, c).expect("matching column counts")
}

pub fn random_instance(dims: (usize, usize, usize), r: usize, seed: u64) -> (FactorTriple, Tensor3) {
    let f = random_factors(dims, r, seed);
    let t = synthesize(&f);
    (f, t)
}

/// Hankel matrix with first column `c` and last row `r`. Where the two
/// overlap (the bottom-left entry) the value from `c` wins.
pub fn hankel(c: &[f64], r: &[f64]) -> Mat {
    let rows = c.len();
    Mat::from_fn(
        rows,
        r.len(),
        |i, j| {
            if i + j < rows {
                c[i + j]
            } else {
                r[i + j + 1 - rows]
            }
        },
    )
}

/// A `3 x 7 x 12` rank-12 instance with structured factors on which the
/// square algorithm needs `l = 1`.
pub fn hankel_instance() -> FactorTriple {
    let a = hankel(
        &[1.0, 2.0, 3.0],
        &[3.0, 5.0, 7.0, 0.0, 6.0, 6.0, 7.0, 9.0, 0.0, 8.0, 2.0, 1.0],
    );
    let tail = hankel(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0], &[7.0, 0.0, 1.0, 2.0, 3.0]);
    let mut b = Mat::zeros(7, 12);
    b.view_mut((0, 0), (7, 7)).fill_with_identity();
    b.view_mut((0, 7), (7, 5)).copy_from(&tail);
    FactorTriple::new(a, b, Mat::identity(12, 12)).expect("twelve columns each")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hankel_layout() {
        let h = hankel(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0, 0.0]);
        let want = Mat::from_row_slice(3, 4, &[1.0, 2.0, 3.0, 5.0, 2.0, 3.0, 5.0, 7.0, 3.0, 5.0, 7.0, 0.0]);
        assert_eq!(h, want);
    }

    #[test]
    fn hankel_instance_shape() {
        let f = hankel_instance();
        assert_eq!(f.dims(), (3, 7, 12));
        assert_eq!(
            f.a.row(2).iter().copied().collect::<Vec<_>>(),
            vec![3.0, 5.0, 7.0, 0.0, 6.0, 6.0, 7.0, 9.0, 0.0, 8.0, 2.0, 1.0]
        );
        assert_eq!(f.b[(6, 11)], 3.0);
        assert_eq!(f.b[(0, 7)], 1.0);
        assert_eq!(f.b[(6, 7)], 7.0);
    }

    #[test]
    fn seeds_repeat() {
        assert_eq!(random_factors((2, 3, 4), 2, 5), random_factors((2, 3, 4), 2, 5));
        assert_ne!(random_factors((2, 3, 4), 2, 5), random_factors((2, 3, 4), 2, 6));
    }
}
