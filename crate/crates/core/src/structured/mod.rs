//! Combinatorial index sets and the structured matrices built on them.

pub mod gram;
pub mod maps;
pub mod tuples;

pub use gram::{build_sym_gram, build_sym_gram_with, gram_rows, row_group_count, GramConfig, GramMeta, GramOperator};
pub use maps::{build_rml, build_rml_compact, phi, phi_compact, s_matrix, s_matrix_sym, CompactRml};
pub use tuples::{
    compress_symmetric, enumerate_multisets, enumerate_tuples, expand_symmetric, sym_basis, sym_dim, tuple_count,
    SymMultiset, SymTupleIndex,
};
