//! File formats, instance generation, timed runs, reports and the
//! `sparse-conv` command line around [`sparse_conv_core`].

pub mod bench;
pub mod format;
pub mod gen;
pub mod report;
pub mod run;
pub mod selftest;

pub use format::{parse_sparse_vector, read_sparse_vector, serialize_sparse_vector, write_atomic, FormatError};
