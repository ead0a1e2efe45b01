//! Seeded random instances.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_conv_core::SparseVector;

/// Range of generated values; zero is never produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValueRange {
    pub lo: i64,
    pub hi: i64,
}

impl ValueRange {
    pub const fn signed(bound: i64) -> Self {
        Self { lo: -bound, hi: bound }
    }

    pub const fn positive(bound: i64) -> Self {
        Self { lo: 1, hi: bound }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` indices drawn uniformly without replacement from `[0, length)`,
/// each with a uniform non-zero value from `values`.
///
/// # Panics
///
/// If `n > length` or `values` holds no non-zero value.
pub fn random_sparse(rng: &mut impl Rng, length: u64, n: usize, values: ValueRange) -> SparseVector {
    assert!(n as u64 <= length, "{n} non-zeros do not fit length {length}");
    assert!(
        values.lo <= values.hi && (values.lo, values.hi) != (0, 0),
        "value range holds no non-zero value"
    );
    let indices: Vec<u64> = if length <= usize::MAX as u64 {
        sample(rng, length as usize, n).into_iter().map(|i| i as u64).collect()
    } else {
        let mut set = std::collections::BTreeSet::new();
        while set.len() < n {
            set.insert(rng.gen_range(0..length));
        }
        set.into_iter().collect()
    };
    let entries = indices
        .into_iter()
        .map(|i| {
            let v = loop {
                let v = rng.gen_range(values.lo..=values.hi);
                if v != 0 {
                    break v;
                }
            };
            (i, v)
        })
        .collect();
    SparseVector::new(length, entries).expect("distinct in-range indices")
}

/// An instance pair for the convolution engine.
#[derive(Debug, Clone)]
pub struct InstanceSpec {
    pub len1: u64,
    pub n1: usize,
    pub len2: u64,
    pub n2: usize,
    pub values: ValueRange,
}

pub fn instance(seed: u64, spec: &InstanceSpec) -> (SparseVector, SparseVector) {
    let mut rng = rng(seed);
    let v1 = random_sparse(&mut rng, spec.len1, spec.n1, spec.values);
    let v2 = random_sparse(&mut rng, spec.len2, spec.n2, spec.values);
    (v1, v2)
}
