use serde::Serialize;

use crate::error::{CpdError, Result};
use crate::linalg::{Mat, Vector};
use crate::multilinear::tensor::{synthesize, FactorTriple};

/// How well a computed decomposition matches a reference one, modulo term
/// permutation and per-column scaling.
#[derive(Debug, Clone, Serialize)]
pub struct MatchReport {
    /// `permutation[r]` is the found term matched to reference term `r`.
    pub permutation: Vec<usize>,
    /// Per reference term, scalars `(alpha, beta, gamma)` with
    /// `found ≈ alpha * a_r`, `beta * b_r`, `gamma * c_r`.
    pub column_scales: Vec<[f64; 3]>,
    /// Worst principal angle (radians) between matched columns over all modes.
    pub max_column_angle: f64,
    /// `||T_found - T_truth|| / ||T_truth||`.
    pub relative_residual: f64,
}

/// Principal angle between the lines spanned by two nonzero vectors,
/// accurate for tiny angles.
pub fn line_angle(x: &Vector, y: &Vector) -> f64 {
    let xu = x / x.norm();
    let mut yu = y / y.norm();
    if xu.dot(&yu) < 0.0 {
        yu.neg_mut();
    }
    2.0 * ((&xu - &yu).norm() / 2.0).min(1.0).asin()
}

fn abs_cos(x: &Vector, y: &Vector) -> f64 {
    (x.dot(y) / (x.norm() * y.norm())).abs()
}

pub fn match_factors(found: &FactorTriple, truth: &FactorTriple) -> Result<MatchReport> {
    let r = truth.rank();
    if found.rank() != r || found.dims() != truth.dims() {
        return Err(CpdError::InvalidArgument(format!(
            "cannot match rank {} {:?} against rank {r} {:?}",
            found.rank(),
            found.dims(),
            truth.dims()
        )));
    }
    let cols = |m: &Mat| -> Vec<Vector> { (0..r).map(|c| m.column(c).into_owned()).collect() };
    let (fa, fb, fc) = (cols(&found.a), cols(&found.b), cols(&found.c));
    let (ta, tb, tc) = (cols(&truth.a), cols(&truth.b), cols(&truth.c));

    let mut pairs = Vec::with_capacity(r * r);
    for t in 0..r {
        for f in 0..r {
            let cong = abs_cos(&fa[f], &ta[t]) * abs_cos(&fb[f], &tb[t]) * abs_cos(&fc[f], &tc[t]);
            pairs.push((cong, t, f));
        }
    }
    // highest congruence first; ties resolved by lowest truth then found index
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut permutation = vec![usize::MAX; r];
    let mut used = vec![false; r];
    for (_, t, f) in pairs {
        if permutation[t] == usize::MAX && !used[f] {
            permutation[t] = f;
            used[f] = true;
        }
    }
    debug_assert!(used.iter().all(|&u| u));

    let mut max_angle: f64 = 0.0;
    let mut column_scales = Vec::with_capacity(r);
    for t in 0..r {
        let f = permutation[t];
        let mut scales = [0.0; 3];
        for (mode, (fv, tv)) in [(&fa, &ta), (&fb, &tb), (&fc, &tc)].into_iter().enumerate() {
            max_angle = max_angle.max(line_angle(&fv[f], &tv[t]));
            scales[mode] = fv[f].dot(&tv[t]) / tv[t].norm_squared();
        }
        column_scales.push(scales);
    }

    let tt = synthesize(truth);
    let diff = synthesize(found).add_scaled(&tt, -1.0)?;
    let relative_residual = diff.norm() / tt.norm();

    Ok(MatchReport {
        permutation,
        column_scales,
        max_column_angle: max_angle,
        relative_residual,
    })
}
