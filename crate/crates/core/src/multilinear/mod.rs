//! Dense tensor and matrix primitives.

pub mod compound;
pub mod krank;
pub mod matching;
pub mod rank1;
pub mod tensor;

pub use compound::{compound, det_in_place, small_det};
pub use krank::{k_rank, k_rank_with};
pub use matching::{line_angle, match_factors, MatchReport};
pub use rank1::{best_rank1, Rank1};
pub use tensor::{
    contract_mode3, khatri_rao, kron_vec, mode3_compress, mode3_compress_tol, synthesize, unfold_r10, FactorTriple,
    Mode3Compression, Tensor3,
};
