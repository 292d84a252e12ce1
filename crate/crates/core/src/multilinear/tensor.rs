use serde::{Deserialize, Serialize};

use crate::error::{CpdError, Result};
use crate::linalg::{self, fix_sign, Mat, Vector, TAU_RANK};

/// Dense real `I x J x K` tensor. Element `(i, j, k)` lives at flat index
/// `(i * J + j) * K + k`, so the `IJ x K` unfolding is a plain reshape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: (usize, usize, usize),
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn new(dims: (usize, usize, usize), data: Vec<f64>) -> Result<Self> {
        let (i, j, k) = dims;
        if i == 0 || j == 0 || k == 0 {
            return Err(CpdError::InvalidArgument(format!(
                "tensor dimensions must be positive, got {i}x{j}x{k}"
            )));
        }
        let len = i
            .checked_mul(j)
            .and_then(|x| x.checked_mul(k))
            .ok_or_else(|| CpdError::InvalidArgument("tensor size overflows".into()))?;
        if data.len() != len {
            return Err(CpdError::InvalidArgument(format!(
                "expected {len} entries for {i}x{j}x{k}, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(CpdError::InvalidArgument(format!(
                "non-finite entry at flat index {pos}"
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: (usize, usize, usize)) -> Self {
        Self::new(dims, vec![0.0; dims.0 * dims.1 * dims.2]).expect("positive dims")
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let (_, nj, nk) = self.dims;
        self.data[(i * nj + j) * nk + k]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `IJ x K` matrix with row `i * J + j` and column `k`.
    pub fn unfold_r10(&self) -> Mat {
        let (i, j, k) = self.dims;
        Mat::from_row_slice(i * j, k, &self.data)
    }

    /// Inverse of [`Tensor3::unfold_r10`].
    pub fn from_unfolding(i: usize, j: usize, m: &Mat) -> Result<Self> {
        if m.nrows() != i * j {
            return Err(CpdError::InvalidArgument(format!(
                "unfolding has {} rows, expected {}",
                m.nrows(),
                i * j
            )));
        }
        let k = m.ncols();
        let mut data = Vec::with_capacity(i * j * k);
        for r in 0..i * j {
            data.extend(m.row(r).iter());
        }
        Self::new((i, j, k), data)
    }

    /// Frontal slice `T[:, :, k]` as an `I x J` matrix.
    pub fn frontal_slice(&self, k: usize) -> Mat {
        let (ni, nj, _) = self.dims;
        Mat::from_fn(ni, nj, |i, j| self.get(i, j, k))
    }

    /// Horizontal slice `T[i, :, :]` as a `J x K` matrix.
    pub fn horizontal_slice(&self, i: usize) -> Mat {
        let (_, nj, nk) = self.dims;
        Mat::from_fn(nj, nk, |j, k| self.get(i, j, k))
    }

    /// Mode-2 unfolding, `J x (I K)` with column index `i * K + k`.
    pub fn unfold_mode2(&self) -> Mat {
        let (ni, nj, nk) = self.dims;
        Mat::from_fn(nj, ni * nk, |j, c| self.get(c / nk, j, c % nk))
    }

    /// Mode-3 unfolding, `K x (I J)`: the transpose of the `IJ x K` unfolding.
    pub fn unfold_mode3(&self) -> Mat {
        self.unfold_r10().transpose()
    }

    pub fn add_scaled(&self, other: &Tensor3, scale: f64) -> Result<Tensor3> {
        if self.dims != other.dims {
            return Err(CpdError::InvalidArgument("tensor dimension mismatch".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + scale * b).collect();
        Tensor3::new(self.dims, data)
    }
}

/// Factor matrices `(A, B, C)` of a polyadic decomposition with `R` terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::FactorTripleJson", into = "crate::io::FactorTripleJson")]
pub struct FactorTriple {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
}

impl FactorTriple {
    pub fn new(a: Mat, b: Mat, c: Mat) -> Result<Self> {
        let r = a.ncols();
        if r == 0 || b.ncols() != r || c.ncols() != r {
            return Err(CpdError::InvalidArgument(format!(
                "factor column counts differ or are zero: {}, {}, {}",
                a.ncols(),
                b.ncols(),
                c.ncols()
            )));
        }
        if a.nrows() == 0 || b.nrows() == 0 || c.nrows() == 0 {
            return Err(CpdError::InvalidArgument("factor with zero rows".into()));
        }
        for (name, m) in [("A", &a), ("B", &b), ("C", &c)] {
            if m.iter().any(|x| !x.is_finite()) {
                return Err(CpdError::InvalidArgument(format!(
                    "factor {name} has non-finite entries"
                )));
            }
            if let Some(col) = (0..r).find(|&col| m.column(col).iter().all(|&x| x == 0.0)) {
                return Err(CpdError::InvalidArgument(format!(
                    "factor {name} has a zero column at {col}"
                )));
            }
        }
        Ok(Self { a, b, c })
    }

    pub fn rank(&self) -> usize {
        self.a.ncols()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.a.nrows(), self.b.nrows(), self.c.nrows())
    }

    /// Unit-norm columns in `A` and `B` with their largest-magnitude entry
    /// positive; all magnitude and sign moves into `C`.
    pub fn normalized(&self) -> FactorTriple {
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        let mut c = self.c.clone();
        for r in 0..self.rank() {
            let mut ar: Vector = a.column(r).into_owned();
            let mut br: Vector = b.column(r).into_owned();
            let na = ar.norm();
            let nb = br.norm();
            ar /= na;
            br /= nb;
            let sa = fix_sign(&mut ar);
            let sb = fix_sign(&mut br);
            a.set_column(r, &ar);
            b.set_column(r, &br);
            let scale = na * nb * sa * sb;
            c.column_mut(r).scale_mut(scale);
        }
        FactorTriple { a, b, c }
    }

    /// Terms reordered by `perm`: column `r` of the result is column `perm[r]`.
    pub fn permuted(&self, perm: &[usize]) -> FactorTriple {
        let pick = |m: &Mat| Mat::from_fn(m.nrows(), perm.len(), |i, r| m[(i, perm[r])]);
        FactorTriple {
            a: pick(&self.a),
            b: pick(&self.b),
            c: pick(&self.c),
        }
    }
}

/// `t_ijk = sum_r A[i,r] B[j,r] C[k,r]`.
pub fn synthesize(f: &FactorTriple) -> Tensor3 {
    let (i, j, _) = f.dims();
    let unfolded = khatri_rao(&f.a, &f.b).expect("validated factors") * f.c.transpose();
    Tensor3::from_unfolding(i, j, &unfolded).expect("consistent shape")
}

pub fn unfold_r10(t: &Tensor3) -> Mat {
    t.unfold_r10()
}

/// Column-wise Kronecker product; column `r` is `x_r ⊗ y_r` with row index `i * J + j`.
pub fn khatri_rao(x: &Mat, y: &Mat) -> Result<Mat> {
    if x.ncols() != y.ncols() {
        return Err(CpdError::InvalidArgument(format!(
            "Khatri-Rao column mismatch: {} vs {}",
            x.ncols(),
            y.ncols()
        )));
    }
    let (ni, nj) = (x.nrows(), y.nrows());
    Ok(Mat::from_fn(ni * nj, x.ncols(), |row, r| {
        x[(row / nj, r)] * y[(row % nj, r)]
    }))
}

/// Kronecker product of two vectors, first argument most significant.
pub fn kron_vec(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() * y.len());
    for &a in x {
        out.extend(y.iter().map(|&b| a * b));
    }
    out
}

/// `M[i, j] = sum_k t_ijk x_k`.
pub fn contract_mode3(t: &Tensor3, x: &[f64]) -> Result<Mat> {
    let (ni, nj, nk) = t.dims();
    if x.len() != nk {
        return Err(CpdError::InvalidArgument(format!(
            "contraction vector has length {}, expected {nk}",
            x.len()
        )));
    }
    Ok(Mat::from_fn(ni, nj, |i, j| {
        (0..nk).map(|k| t.get(i, j, k) * x[k]).sum()
    }))
}

/// Mode-3 compression to the numerical rank of the `IJ x K` unfolding.
#[derive(Debug, Clone)]
pub struct Mode3Compression {
    pub tensor: Tensor3,
    /// `K x K'` matrix with orthonormal columns.
    pub basis: Mat,
    /// Relative residual of the projection.
    pub residual: f64,
}

impl Mode3Compression {
    /// Maps a third factor of the compressed tensor back to the original space.
    pub fn expand_c(&self, c_compressed: &Mat) -> Mat {
        &self.basis * c_compressed
    }
}

pub fn mode3_compress(t: &Tensor3) -> Mode3Compression {
    mode3_compress_tol(t, TAU_RANK)
}

pub fn mode3_compress_tol(t: &Tensor3, tau: f64) -> Mode3Compression {
    let (ni, nj, _) = t.dims();
    let unfolded = t.unfold_r10();
    let dec = linalg::svd(&unfolded);
    let rank = linalg::rank_from_singular(&dec.s, tau).max(1);
    let basis = dec.v.columns(0, rank).into_owned();
    let compressed = &unfolded * &basis;
    let back = &compressed * basis.transpose();
    let residual = linalg::relative_diff(&back, &unfolded);
    Mode3Compression {
        tensor: Tensor3::from_unfolding(ni, nj, &compressed).expect("consistent shape"),
        basis,
        residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_product_tensor() {
        let f = FactorTriple::new(
            Mat::from_element(1, 1, 2.0),
            Mat::from_element(1, 1, 3.0),
            Mat::from_element(1, 1, 5.0),
        )
        .unwrap();
        let t = synthesize(&f);
        assert_eq!(t.dims(), (1, 1, 1));
        assert_eq!(t.data(), &[30.0]);
        assert_eq!(t.unfold_r10(), Mat::from_element(1, 1, 30.0));
    }

    #[test]
    fn diagonal_tensor_and_unfolding() {
        let id = Mat::identity(2, 2);
        let t = synthesize(&FactorTriple::new(id.clone(), id.clone(), id).unwrap());
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let want = if i == j && j == k { 1.0 } else { 0.0 };
                    assert_eq!(t.get(i, j, k), want);
                }
            }
        }
        let u = t.unfold_r10();
        let want = Mat::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(u, want);
    }

    #[test]
    fn khatri_rao_examples() {
        let x = Mat::from_column_slice(2, 1, &[1.0, 0.0]);
        let y = Mat::from_column_slice(2, 1, &[0.0, 1.0]);
        assert_eq!(
            khatri_rao(&x, &y).unwrap(),
            Mat::from_column_slice(4, 1, &[0.0, 1.0, 0.0, 0.0])
        );
        let id = Mat::identity(2, 2);
        let kr = khatri_rao(&id, &id).unwrap();
        assert_eq!(kr, Mat::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]));
        let x = Mat::from_row_slice(1, 2, &[1.0, 2.0]);
        let y = Mat::from_row_slice(1, 2, &[3.0, 4.0]);
        assert_eq!(khatri_rao(&x, &y).unwrap(), Mat::from_row_slice(1, 2, &[3.0, 8.0]));
        assert!(khatri_rao(&x, &Mat::zeros(1, 3)).is_err());
    }

    #[test]
    fn contraction_edge_cases() {
        let id = Mat::identity(2, 2);
        let t = synthesize(&FactorTriple::new(id.clone(), id.clone(), id).unwrap());
        assert_eq!(contract_mode3(&t, &[0.0, 1.0]).unwrap(), t.frontal_slice(1));
        assert_eq!(contract_mode3(&t, &[0.0, 0.0]).unwrap(), Mat::zeros(2, 2));
        assert!(contract_mode3(&t, &[1.0]).is_err());
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(Tensor3::new((0, 1, 1), vec![]).is_err());
        assert!(Tensor3::new((1, 1, 2), vec![1.0]).is_err());
        assert!(Tensor3::new((1, 1, 1), vec![f64::NAN]).is_err());
        let z = Mat::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert!(FactorTriple::new(z, Mat::identity(2, 2), Mat::identity(2, 2)).is_err());
        assert!(FactorTriple::new(Mat::identity(2, 2), Mat::identity(2, 3), Mat::identity(2, 2)).is_err());
    }

    #[test]
    fn compression_of_repeated_slices() {
        let base = [1.0, -2.0, 0.5, 3.0];
        let mut data = Vec::new();
        for v in base {
            for k in 0..5 {
                data.push(v * (k as f64 + 1.0));
            }
        }
        let t = Tensor3::new((2, 2, 5), data).unwrap();
        let c = mode3_compress(&t);
        assert_eq!(c.tensor.dims(), (2, 2, 1));
        assert!(c.residual < 1e-14);
    }

    #[test]
    fn normalization_preserves_tensor() {
        let f = FactorTriple::new(
            Mat::from_row_slice(2, 2, &[1.0, -3.0, 2.0, 1.0]),
            Mat::from_row_slice(2, 2, &[-4.0, 1.0, 1.0, 2.0]),
            Mat::from_row_slice(2, 2, &[1.0, 1.0, 0.5, -1.0]),
        )
        .unwrap();
        let n = f.normalized();
        for r in 0..2 {
            assert!((n.a.column(r).norm() - 1.0).abs() < 1e-15);
            assert!((n.b.column(r).norm() - 1.0).abs() < 1e-15);
        }
        let diff = synthesize(&n).add_scaled(&synthesize(&f), -1.0).unwrap();
        assert!(diff.norm() < 1e-13);
    }
}
