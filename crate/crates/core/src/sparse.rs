//! The sparse vector model shared by every stage.

use alloc::vec::Vec;

/// Index type. Indices may span the whole 64-bit range.
pub type Index = u64;
/// Stored value type.
pub type Value = i64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SparseError {
    #[error("index {index} is not below the declared length {length}")]
    IndexOutOfRange { index: Index, length: u64 },
    #[error("index {index} appears with conflicting values {first} and {second}")]
    ConflictingDuplicate {
        index: Index,
        first: Value,
        second: Value,
    },
}

/// A vector of declared `length` given by its non-zero entries.
///
/// Invariants: entries are strictly ascending by index, every index is below
/// `length` and no stored value is zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseVector {
    length: u64,
    entries: Vec<(Index, Value)>,
}

impl SparseVector {
    /// Builds a validated vector from entries in any order.
    ///
    /// Zero values are dropped. Repeated indices are merged when they carry
    /// the same value and rejected otherwise.
    pub fn new(length: u64, mut entries: Vec<(Index, Value)>) -> Result<Self, SparseError> {
        if let Some(&(index, _)) = entries.iter().find(|&&(i, _)| i >= length) {
            return Err(SparseError::IndexOutOfRange { index, length });
        }
        entries.sort_by_key(|&(i, _)| i);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 != w[1].1 {
                return Err(SparseError::ConflictingDuplicate {
                    index: w[0].0,
                    first: w[0].1,
                    second: w[1].1,
                });
            }
        }
        entries.dedup_by_key(|e| e.0);
        entries.retain(|&(_, v)| v != 0);
        Ok(Self { length, entries })
    }

    /// An all-zero vector of the given length.
    pub fn zeros(length: u64) -> Self {
        Self {
            length,
            entries: Vec::new(),
        }
    }

    /// Trusted constructor for entries already sorted, unique, non-zero and in range.
    pub(crate) fn from_sorted_unchecked(length: u64, entries: Vec<(Index, Value)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(i, v)| i < length && v != 0));
        Self { length, entries }
    }

    pub fn length(&self) -> u64 {
        self.length
    }

    pub fn entries(&self) -> &[(Index, Value)] {
        &self.entries
    }

    /// Number of non-zero entries.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = Index> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }

    pub fn max_index(&self) -> Option<Index> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn max_abs_value(&self) -> u64 {
        self.entries
            .iter()
            .map(|&(_, v)| v.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// Value at `index`, zero when absent.
    pub fn get(&self, index: Index) -> Value {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn new_sorts_and_drops_zeros() {
        let v = SparseVector::new(8, vec![(3, 1), (0, 2), (5, 0)]).unwrap();
        assert_eq!(v.entries(), &[(0, 2), (3, 1)]);
        assert_eq!(v.length(), 8);
        assert_eq!(v.nnz(), 2);
        assert_eq!(v.get(3), 1);
        assert_eq!(v.get(4), 0);
    }

    #[test]
    fn empty_vector() {
        let v = SparseVector::new(4, vec![]).unwrap();
        assert!(v.is_empty());
        assert_eq!(v.max_index(), None);
    }

    #[test]
    fn rejects_out_of_range() {
        assert_eq!(
            SparseVector::new(4, vec![(4, 1)]),
            Err(SparseError::IndexOutOfRange {
                index: 4,
                length: 4
            })
        );
    }

    #[test]
    fn duplicates() {
        let v = SparseVector::new(10, vec![(2, 5), (2, 5)]).unwrap();
        assert_eq!(v.entries(), &[(2, 5)]);
        assert!(matches!(
            SparseVector::new(10, vec![(2, 5), (2, 6)]),
            Err(SparseError::ConflictingDuplicate { index: 2, .. })
        ));
        // a zero is still a conflicting value
        assert!(SparseVector::new(10, vec![(2, 5), (2, 0)]).is_err());
    }
}
