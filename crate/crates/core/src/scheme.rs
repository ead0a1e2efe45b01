//! Deterministic length reduction.
//!
//! Chooses `(q, c)`, lists the usable assignment values, builds the
//! singleton table over every variant polynomial of the first vector and
//! greedily picks rows until each polynomial is a singleton under at least
//! one picked assignment. The picked assignments then map each input vector
//! onto dense vectors of length `q`.

use alloc::vec;
use alloc::vec::Vec;

use crate::bitset::Bitset;
use crate::poly::{
    digits, eval_coefficients, make_variants, variant_offsets, encode_base, EncodeError,
    EncodingParams, IndexPolynomial,
};
use crate::prime::next_prime;
use crate::sparse::{Index, SparseVector};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemeError {
    #[error("no (q, c) with c <= {max_degree} and q <= {max_q} encodes index {max_index} for n1 = {n1}; compact the indices first")]
    NoParameters {
        max_index: Index,
        n1: usize,
        max_degree: u32,
        max_q: u64,
    },
    #[error("only {found} sibling-free assignments exist, {required} required")]
    TooFewCandidates { found: usize, required: usize },
    #[error("best row covers {best} of {surviving} surviving columns, below half")]
    NotHalfFull { best: usize, surviving: usize },
    #[error("the vector has no non-zeros")]
    EmptyInput,
    #[error("assignment ordinal {ordinal} out of range ({count} selected)")]
    AssignmentOutOfRange { ordinal: usize, count: usize },
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// Knobs for parameter selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeConfig {
    /// Largest degree bound `c` tried before giving up.
    pub max_degree: u32,
    /// Hard cap on the reduced length `q`.
    pub max_q: u64,
    /// `q` may grow to this multiple of its row-count floor `2·c·2^(c+1)·n1`
    /// to make room for large indices; beyond that `c` is raised instead.
    pub q_slack: u64,
    /// Debug override for `(q, c)`.
    pub forced: Option<(u64, u32)>,
    /// Extra index that must stay encodable, e.g. the largest index of the
    /// second vector.
    pub index_bound: Option<Index>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            max_degree: 4,
            max_q: 1 << 26,
            q_slack: 8,
            forced: None,
            index_bound: None,
        }
    }
}

/// Row count of the singleton table, `c · 2^(c+1) · n1`.
pub fn required_rows(c: u32, n1: usize) -> Option<usize> {
    (c as usize)
        .checked_mul(1usize.checked_shl(c + 1)?)?
        .checked_mul(n1)
}

/// Smallest `r` with `r^(exp) > max_index`.
fn min_radix(max_index: Index, exp: u32) -> u64 {
    let exceeds = |r: u64| {
        let mut acc: u128 = 1;
        for _ in 0..exp {
            acc = acc.saturating_mul(r as u128);
        }
        acc > max_index as u128
    };
    let (mut lo, mut hi) = (1u64, 1u64 << 32);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if exceeds(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Picks the smallest degree bound `c` and then the smallest prime `q` that
/// encodes `max_index`, leaves room for `2·c·2^(c+1)·n1` table rows, and has
/// at least `c·2^(c+1)·n1` sibling-free assignment values.
pub fn choose_parameters(
    max_index: Index,
    n1: usize,
    config: &SchemeConfig,
) -> Result<EncodingParams, SchemeError> {
    let n1 = n1.max(1);
    if let Some((q, c)) = config.forced {
        let params = EncodingParams::new(q, c)?;
        digits(max_index, &params)?;
        return Ok(params);
    }
    let no_params = SchemeError::NoParameters {
        max_index,
        n1,
        max_degree: config.max_degree,
        max_q: config.max_q,
    };
    for c in 1..=config.max_degree.min(crate::poly::MAX_DEGREE) {
        let Some(rows) = required_rows(c, n1) else {
            break;
        };
        let floor = (rows as u64).saturating_mul(2);
        let limit = floor
            .saturating_mul(config.q_slack.max(1))
            .min(config.max_q)
            .min((1 << 32) - 1);
        let radix = min_radix(max_index, c + 1);
        let start = floor.max(radix.saturating_mul(2).saturating_add(1)).max(5);
        let mut q = match next_prime(start) {
            Some(q) => q,
            None => continue,
        };
        while q <= limit {
            let params = EncodingParams::new(q, c)?;
            if count_sibling_free(&params, rows) >= rows {
                return Ok(params);
            }
            q = match next_prime(q + 1) {
                Some(q) => q,
                None => break,
            };
        }
    }
    Err(no_params)
}

/// True when no two variants of one index land on the same position at `a`.
///
/// Variant shifts do not depend on the index, so checking the `2^c` shifts
/// covers every origin index at once.
pub fn is_sibling_free(a: u64, params: &EncodingParams) -> bool {
    let mut offsets = variant_offsets(a, params);
    offsets.sort_unstable();
    offsets.windows(2).all(|w| w[0] != w[1])
}

fn count_sibling_free(params: &EncodingParams, stop_at: usize) -> usize {
    (0..params.q())
        .filter(|&a| is_sibling_free(a, params))
        .take(stop_at)
        .count()
}

/// The first `required` sibling-free values of `F_q`, ascending.
pub fn candidate_assignments(
    params: &EncodingParams,
    required: usize,
) -> Result<Vec<u64>, SchemeError> {
    let found: Vec<u64> = (0..params.q())
        .filter(|&a| is_sibling_free(a, params))
        .take(required)
        .collect();
    if found.len() < required {
        return Err(SchemeError::TooFewCandidates {
            found: found.len(),
            required,
        });
    }
    Ok(found)
}

/// Every variant of every index, in index order and then mask order.
pub fn all_variants(
    indices: impl IntoIterator<Item = Index>,
    params: &EncodingParams,
) -> Result<Vec<IndexPolynomial>, EncodeError> {
    let mut out = Vec::new();
    for i in indices {
        out.extend(make_variants(&encode_base(i, params)?, params));
    }
    Ok(out)
}

/// Boolean table: row per candidate assignment, column per polynomial; a
/// cell is set when the polynomial is alone at its position under that row's
/// assignment.
#[derive(Debug, Clone)]
pub struct SingletonTable {
    assignments: Vec<u64>,
    rows: Vec<Bitset>,
    columns: usize,
}

impl SingletonTable {
    pub fn assignments(&self) -> &[u64] {
        &self.assignments
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_count(&self) -> usize {
        self.columns
    }

    pub fn cell(&self, row: usize, column: usize) -> bool {
        self.rows[row].get(column)
    }

    pub fn row_true_count(&self, row: usize) -> usize {
        self.rows[row].count_ones()
    }

    /// Number of rows where `column` is a multiple.
    pub fn column_false_count(&self, column: usize) -> usize {
        self.rows.iter().filter(|r| !r.get(column)).count()
    }

    /// Builds a table directly from boolean rows.
    pub fn from_rows(assignments: Vec<u64>, rows: &[Vec<bool>]) -> Self {
        assert_eq!(assignments.len(), rows.len());
        let columns = rows.first().map_or(0, |r| r.len());
        let rows = rows
            .iter()
            .map(|r| {
                assert_eq!(r.len(), columns);
                let mut b = Bitset::new(columns);
                r.iter().enumerate().filter(|(_, &x)| x).for_each(|(j, _)| b.set(j));
                b
            })
            .collect();
        Self {
            assignments,
            rows,
            columns,
        }
    }
}

pub fn build_singleton_table(
    polys: &[IndexPolynomial],
    candidates: &[u64],
    params: &EncodingParams,
) -> SingletonTable {
    let q = params.q();
    let mut counts = vec![0u32; q as usize];
    let mut positions = vec![0usize; polys.len()];
    let rows = candidates
        .iter()
        .map(|&a| {
            for (pos, p) in positions.iter_mut().zip(polys) {
                *pos = eval_coefficients(&p.coefficients, a, q) as usize;
                counts[*pos] += 1;
            }
            let mut row = Bitset::new(polys.len());
            for (j, &pos) in positions.iter().enumerate() {
                if counts[pos] == 1 {
                    row.set(j);
                }
            }
            for &pos in &positions {
                counts[pos] = 0;
            }
            row
        })
        .collect();
    SingletonTable {
        assignments: candidates.to_vec(),
        rows,
        columns: polys.len(),
    }
}

/// Output of greedy row selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    /// Picked assignment values in pick order.
    pub assignments: Vec<u64>,
    /// Per column, the ordinal of the first picked assignment covering it.
    pub coverage: Vec<usize>,
}

/// Repeatedly picks the row covering the most surviving columns (ties go to
/// the earlier row) and deletes what it covers.
pub fn select_assignments(table: &SingletonTable) -> Result<Selection, SchemeError> {
    let mut surviving = Bitset::full(table.columns);
    let mut remaining = table.columns;
    let mut assignments = Vec::new();
    let mut coverage = vec![usize::MAX; table.columns];
    while remaining > 0 {
        let mut best = (0usize, 0usize);
        for (r, row) in table.rows.iter().enumerate() {
            let hits = row.count_and(&surviving);
            if hits > best.1 {
                best = (r, hits);
            }
        }
        if best.1 == 0 || 2 * best.1 < remaining {
            return Err(SchemeError::NotHalfFull {
                best: best.1,
                surviving: remaining,
            });
        }
        let row = &table.rows[best.0];
        let ordinal = assignments.len();
        for j in row.ones() {
            if surviving.get(j) {
                coverage[j] = ordinal;
            }
        }
        surviving.subtract(row);
        remaining -= best.1;
        assignments.push(table.assignments[best.0]);
    }
    Ok(Selection {
        assignments,
        coverage,
    })
}

/// A built length-reduction scheme for one index set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionScheme {
    pub params: EncodingParams,
    pub assignments: Vec<u64>,
    /// Per polynomial of `polynomials`, the ordinal of a covering assignment.
    pub coverage: Vec<usize>,
    /// Every variant of every index of the first vector.
    pub polynomials: Vec<IndexPolynomial>,
}

impl ReductionScheme {
    /// `ceil(log2(2^c · n1))`, the most assignments greedy halving can need.
    pub fn assignment_bound(&self) -> usize {
        ceil_log2(self.polynomials.len())
    }
}

pub(crate) fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Builds the scheme for the index set of `v1`. Pure function of the index
/// set and `config`.
pub fn build_scheme(v1: &SparseVector, config: &SchemeConfig) -> Result<ReductionScheme, SchemeError> {
    let max_index = v1.max_index().ok_or(SchemeError::EmptyInput)?;
    let max_index = max_index.max(config.index_bound.unwrap_or(0));
    let n1 = v1.nnz();
    let params = choose_parameters(max_index, n1, config)?;
    let polynomials = all_variants(v1.indices(), &params)?;
    let rows = required_rows(params.c(), n1).unwrap_or(usize::MAX);
    let candidates = if config.forced.is_some() {
        // forced moduli may be too small for the full row count
        let found: Vec<u64> = (0..params.q())
            .filter(|&a| is_sibling_free(a, &params))
            .take(rows)
            .collect();
        if found.is_empty() {
            return Err(SchemeError::TooFewCandidates { found: 0, required: rows });
        }
        found
    } else {
        candidate_assignments(&params, rows)?
    };
    let table = build_singleton_table(&polynomials, &candidates, &params);
    let selection = select_assignments(&table)?;
    Ok(ReductionScheme {
        params,
        assignments: selection.assignments,
        coverage: selection.coverage,
        polynomials,
    })
}

/// Dense length-`q` images of one vector under one assignment.
///
/// Index moments are weighted by occurrence, not by value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedBundle {
    pub assignment: u64,
    pub value: Vec<i128>,
    pub count: Vec<i128>,
    pub idx: Vec<i128>,
    pub idx2: Vec<i128>,
}

impl ReducedBundle {
    fn zeros(assignment: u64, q: u64) -> Self {
        let z = vec![0i128; q as usize];
        Self {
            assignment,
            value: z.clone(),
            count: z.clone(),
            idx: z.clone(),
            idx2: z,
        }
    }

    #[inline]
    fn add(&mut self, pos: usize, index: Index, value: i64) {
        let i = index as i128;
        self.value[pos] += value as i128;
        self.count[pos] += 1;
        self.idx[pos] += i;
        self.idx2[pos] += i * i;
    }
}

fn assignment_at(scheme: &ReductionScheme, t: usize) -> Result<u64, SchemeError> {
    scheme
        .assignments
        .get(t)
        .copied()
        .ok_or(SchemeError::AssignmentOutOfRange {
            ordinal: t,
            count: scheme.assignments.len(),
        })
}

/// Maps every variant of every non-zero of `v1` through assignment `a`.
pub fn reduce_v1_at(
    v1: &SparseVector,
    params: &EncodingParams,
    a: u64,
) -> Result<ReducedBundle, SchemeError> {
    let q = params.q();
    let offsets = variant_offsets(a, params);
    let mut bundle = ReducedBundle::zeros(a, q);
    for &(i, v) in v1.entries() {
        let base = eval_coefficients(&digits(i, params)?, a, q);
        for &off in &offsets {
            bundle.add(((base + off) % q) as usize, i, v);
        }
    }
    Ok(bundle)
}

/// Maps the base polynomial of every non-zero of `v2` through assignment `a`.
pub fn reduce_v2_at(
    v2: &SparseVector,
    params: &EncodingParams,
    a: u64,
) -> Result<ReducedBundle, SchemeError> {
    let q = params.q();
    let mut bundle = ReducedBundle::zeros(a, q);
    for &(i, v) in v2.entries() {
        let pos = eval_coefficients(&digits(i, params)?, a, q);
        bundle.add(pos as usize, i, v);
    }
    Ok(bundle)
}

pub fn reduce_v1(v1: &SparseVector, scheme: &ReductionScheme, t: usize) -> Result<ReducedBundle, SchemeError> {
    reduce_v1_at(v1, &scheme.params, assignment_at(scheme, t)?)
}

pub fn reduce_v2(v2: &SparseVector, scheme: &ReductionScheme, t: usize) -> Result<ReducedBundle, SchemeError> {
    reduce_v2_at(v2, &scheme.params, assignment_at(scheme, t)?)
}
