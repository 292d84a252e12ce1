use crate::error::{CpdError, Result};
use crate::linalg::{fix_sign, svd, Mat, Vector};

/// Leading singular triplet of a matrix.
#[derive(Debug, Clone)]
pub struct Rank1 {
    pub u: Vector,
    pub v: Vector,
    pub sigma: f64,
    /// `sigma / ||M||_F`; equals one exactly for rank-1 input.
    pub fit: f64,
}

/// Best rank-1 approximation `sigma * u * v^T`, with `u`'s largest-magnitude
/// entry made positive.
pub fn best_rank1(m: &Mat) -> Result<Rank1> {
    let norm = m.norm();
    if norm == 0.0 || m.nrows() == 0 || m.ncols() == 0 {
        return Err(CpdError::DegenerateInput(
            "best rank-1 approximation of a zero matrix".into(),
        ));
    }
    let dec = svd(m);
    let mut u: Vector = dec.u.column(0).into_owned();
    let mut v: Vector = dec.v.column(0).into_owned();
    if fix_sign(&mut u) < 0.0 {
        v.neg_mut();
    }
    let sigma = dec.s[0];
    Ok(Rank1 {
        u,
        v,
        sigma,
        fit: (sigma / norm).min(1.0),
    })
}
