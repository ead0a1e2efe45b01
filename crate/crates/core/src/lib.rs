//! Deterministic sparse convolution.
//!
//! Two long, mostly-zero integer vectors are convolved in time governed by
//! their non-zero counts rather than their lengths. Indices of the longer
//! vector are hashed into a short vector of prime length `q` by writing each
//! index in base `(q - 1) / 2`, reading the digits as a polynomial over
//! `F_q` and evaluating it at a handful of greedily selected points. Every
//! carry pattern of the digit sum gets its own duplicate polynomial, so
//! alignments survive the hashing exactly. Indices too large for that
//! encoding are first compacted modulo a prime found by product-tree and GCD
//! search.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, timing and
//! the command line live in the `sparse-conv` crate.

#![no_std]

extern crate alloc;

pub mod compaction;
pub mod engine;
pub mod ntt;
pub mod poly;
pub mod prime;
pub mod scheme;
pub mod sparse;

mod bitset;

pub use poly::{encode_base, evaluate, make_variants, EncodingParams, IndexPolynomial};
pub use scheme::{build_scheme, ReducedBundle, ReductionScheme, SchemeConfig, SchemeError};
pub use sparse::{SparseError, SparseVector};
pub use compaction::{compact, find_good_prime, CompactionError, CompactionResult, PrimePool};
pub use engine::{
    brute_convolution, fast_sparse_convolution, verified_convolution, ConvolutionOutcome, EngineConfig,
    EngineError, Mode, RecoveryReport,
};
