//! On-disk formats: the `CPD3` binary tensor container and JSON factor matrices.
//!
//! `CPD3` layout: magic `b"CPD3"`, a `u8` version (1), three little-endian
//! `u32` dimensions `I, J, K`, then `I*J*K` little-endian `f64` values in the
//! flat order of [`Tensor3`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CpdError, Result};
use crate::linalg::Mat;
use crate::multilinear::{FactorTriple, Tensor3};

pub const MAGIC: [u8; 4] = *b"CPD3";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 12;

pub fn encode_cpd3(t: &Tensor3) -> Result<Vec<u8>> {
    let (i, j, k) = t.dims();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * t.data().len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    for d in [i, j, k] {
        let d = u32::try_from(d).map_err(|_| CpdError::Format(format!("dimension {d} does not fit in u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    for x in t.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_cpd3(bytes: &[u8]) -> Result<Tensor3> {
    if bytes.len() < HEADER_LEN {
        return Err(CpdError::Format(format!(
            "file too short for a CPD3 header ({} bytes)",
            bytes.len()
        )));
    }
    if bytes[..4] != MAGIC {
        return Err(CpdError::Format("bad magic, not a CPD3 file".into()));
    }
    if bytes[4] != VERSION {
        return Err(CpdError::Format(format!("unsupported CPD3 version {}", bytes[4])));
    }
    let dim = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let dims = (dim(5), dim(9), dim(13));
    if dims.0 == 0 || dims.1 == 0 || dims.2 == 0 {
        return Err(CpdError::Format(format!("zero dimension in {dims:?}")));
    }
    let payload = dims
        .0
        .checked_mul(dims.1)
        .and_then(|x| x.checked_mul(dims.2))
        .and_then(|x| x.checked_mul(8))
        .ok_or_else(|| CpdError::Format(format!("dimensions {dims:?} overflow")))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != payload {
        return Err(CpdError::Format(format!(
            "expected {payload} payload bytes for {dims:?}, found {}",
            body.len()
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Tensor3::new(dims, data).map_err(|e| CpdError::Format(e.to_string()))
}

pub fn read_cpd3(path: impl AsRef<Path>) -> Result<Tensor3> {
    decode_cpd3(&std::fs::read(path)?)
}

pub fn write_cpd3(path: impl AsRef<Path>, t: &Tensor3) -> Result<()> {
    std::fs::write(path, encode_cpd3(t)?)?;
    Ok(())
}

/// A square symmetric matrix packaged as a `D x D x 1` CPD3 tensor.
pub fn encode_matrix_cpd3(q: &Mat) -> Result<Vec<u8>> {
    let (r, c) = q.shape();
    let data: Vec<f64> = (0..r * c).map(|n| q[(n / c, n % c)]).collect();
    encode_cpd3(&Tensor3::new((r, c, 1), data)?)
}

/// JSON form of a single matrix: `{"rows": n, "cols": r, "data": [row-major]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorMatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&Mat> for FactorMatrixJson {
    fn from(m: &Mat) -> Self {
        let (rows, cols) = m.shape();
        Self {
            rows,
            cols,
            data: (0..rows * cols).map(|n| m[(n / cols, n % cols)]).collect(),
        }
    }
}

impl TryFrom<FactorMatrixJson> for Mat {
    type Error = CpdError;

    fn try_from(j: FactorMatrixJson) -> Result<Mat> {
        let len = j
            .rows
            .checked_mul(j.cols)
            .ok_or_else(|| CpdError::Format("matrix size overflows".into()))?;
        if j.data.len() != len {
            return Err(CpdError::Format(format!(
                "matrix {}x{} needs {len} entries, got {}",
                j.rows,
                j.cols,
                j.data.len()
            )));
        }
        if j.data.iter().any(|x| !x.is_finite()) {
            return Err(CpdError::Format("non-finite matrix entry".into()));
        }
        Ok(Mat::from_row_slice(j.rows, j.cols, &j.data))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorTripleJson {
    #[serde(rename = "A")]
    pub a: FactorMatrixJson,
    #[serde(rename = "B")]
    pub b: FactorMatrixJson,
    #[serde(rename = "C")]
    pub c: FactorMatrixJson,
}

impl From<FactorTriple> for FactorTripleJson {
    fn from(f: FactorTriple) -> Self {
        Self {
            a: (&f.a).into(),
            b: (&f.b).into(),
            c: (&f.c).into(),
        }
    }
}

impl TryFrom<FactorTripleJson> for FactorTriple {
    type Error = CpdError;

    fn try_from(j: FactorTripleJson) -> Result<FactorTriple> {
        FactorTriple::new(j.a.try_into()?, j.b.try_into()?, j.c.try_into()?)
            .map_err(|e| CpdError::Format(e.to_string()))
    }
}

pub fn parse_matrix_json(text: &str) -> Result<Mat> {
    let j: FactorMatrixJson = serde_json::from_str(text).map_err(|e| CpdError::Format(e.to_string()))?;
    j.try_into()
}

pub fn parse_factors_json(text: &str) -> Result<FactorTriple> {
    serde_json::from_str(text).map_err(|e| CpdError::Format(e.to_string()))
}

pub fn factors_to_json(f: &FactorTriple) -> String {
    serde_json::to_string_pretty(f).expect("factor matrices serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpd3_round_trip() {
        let t = Tensor3::new((2, 1, 3), vec![1.0, -2.5, 0.0, 3.25, 1e-300, -0.0]).unwrap();
        let bytes = encode_cpd3(&t).unwrap();
        assert_eq!(&bytes[..5], b"CPD3\x01");
        assert_eq!(bytes.len(), 17 + 48);
        assert_eq!(decode_cpd3(&bytes).unwrap(), t);
    }

    #[test]
    fn cpd3_rejects_malformed() {
        let t = Tensor3::new((1, 1, 2), vec![1.0, 2.0]).unwrap();
        let good = encode_cpd3(&t).unwrap();
        assert!(decode_cpd3(&good[..good.len() - 1]).is_err());
        assert!(decode_cpd3(&good[..10]).is_err());
        let mut extra = good.clone();
        extra.push(0);
        assert!(decode_cpd3(&extra).is_err());
        let mut magic = good.clone();
        magic[0] = b'X';
        assert!(decode_cpd3(&magic).is_err());
        let mut version = good.clone();
        version[4] = 2;
        assert!(decode_cpd3(&version).is_err());
        let mut nan = good.clone();
        nan[17..25].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode_cpd3(&nan).is_err());
        let mut huge = good;
        huge[5..17].copy_from_slice(&[0xff; 12]);
        assert!(decode_cpd3(&huge).is_err());
    }

    #[test]
    fn factor_json_round_trip() {
        let f = FactorTriple::new(
            Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
            Mat::from_row_slice(1, 2, &[5.0, 6.0]),
            Mat::from_row_slice(3, 2, &[7.0, 8.0, 9.0, 10.0, 11.0, 12.0]),
        )
        .unwrap();
        let text = factors_to_json(&f);
        assert!(text.contains("\"A\""));
        assert_eq!(parse_factors_json(&text).unwrap(), f);
        let m = parse_matrix_json(r#"{"rows":2,"cols":1,"data":[1,2]}"#).unwrap();
        assert_eq!(m, Mat::from_column_slice(2, 1, &[1.0, 2.0]));
    }

    #[test]
    fn factor_json_rejects_malformed() {
        assert!(parse_matrix_json(r#"{"rows":2,"cols":2,"data":[1,2,3]}"#).is_err());
        assert!(parse_matrix_json(r#"{"rows":2,"cols":2}"#).is_err());
        let zero_col = r#"{"A":{"rows":1,"cols":1,"data":[0]},"B":{"rows":1,"cols":1,"data":[1]},"C":{"rows":1,"cols":1,"data":[1]}}"#;
        assert!(parse_factors_json(zero_col).is_err());
        let mismatch = r#"{"A":{"rows":1,"cols":2,"data":[1,1]},"B":{"rows":1,"cols":1,"data":[1]},"C":{"rows":1,"cols":1,"data":[1]}}"#;
        assert!(parse_factors_json(mismatch).is_err());
    }
}
