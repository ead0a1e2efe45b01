//! Convolution engine: the brute-force reference and the reduced-vector
//! pipeline.
//!
//! For every selected assignment both vectors are mapped to length `q`
//! (every variant for the first vector, the base polynomial for the second)
//! and four cyclic correlations are taken: values, pair counts, and the first
//! and second moments of the pair output index `i1 - i2`. An offset whose
//! moments have zero variance carries pairs of a single output index `k`;
//! when `k`'s own base polynomial also lands on that offset, the value
//! correlation there is exactly `W[k]`. Pairs not explained by any accepted
//! offset are summed directly.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::compaction::{compact_auto, union_support, CompactionError, CompactionResult};
use crate::ntt::{primes_for_bound, CorrelationError, Correlator};
use crate::poly::{evaluate_index, EncodingParams};
use crate::scheme::{
    build_scheme, reduce_v1, reduce_v2, ReducedBundle, ReductionScheme, SchemeConfig, SchemeError,
};
use crate::sparse::{Index, SparseVector, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error(transparent)]
    Compaction(#[from] CompactionError),
    #[error("value {value} at index {index} exceeds the magnitude bound {bound}")]
    ValueBound { index: Index, value: Value, bound: u64 },
    #[error("second vector has {n2} non-zeros, at most {max} supported")]
    TooManyNonzeros { n2: usize, max: usize },
    #[error("reduced length {q} exceeds the cap {max}")]
    ModulusTooLarge { q: u64, max: u64 },
    #[error("scheme was not built for this index set")]
    SchemeMismatch,
    #[error("output value at index {index} does not fit 64 bits")]
    OutputOverflow { index: Index },
    #[error("pair accounting overshoot: {accounted} of {total} pairs")]
    Accounting { accounted: u64, total: u64 },
    #[error("compaction of {support} indices exceeds the cap {cap}")]
    CompactionTooLarge { support: usize, cap: usize },
    #[error("fast and naive results differ at index {index}: fast {fast}, naive {naive}")]
    VerifyMismatch { index: Index, fast: Value, naive: Value },
}

impl EngineError {
    /// Errors caused by inputs outside the engine's exact-arithmetic or size envelope.
    pub fn is_bound_violation(&self) -> bool {
        matches!(
            self,
            EngineError::ValueBound { .. }
                | EngineError::TooManyNonzeros { .. }
                | EngineError::ModulusTooLarge { .. }
                | EngineError::OutputOverflow { .. }
                | EngineError::CompactionTooLarge { .. }
                | EngineError::Correlation(CorrelationError::MagnitudeExceeded(_))
                | EngineError::Scheme(SchemeError::NoParameters { .. })
                | EngineError::Compaction(CompactionError::PoolTooLarge(_))
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineConfig {
    /// Largest accepted `|value|` in either input.
    pub value_bound: u64,
    /// Largest accepted non-zero count of the second vector.
    pub max_n2: usize,
    /// Largest union support that may go through compaction.
    pub max_compaction_support: usize,
    pub scheme: SchemeConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            value_bound: 1 << 20,
            max_n2: 1 << 16,
            max_compaction_support: 128,
            scheme: SchemeConfig::default(),
        }
    }
}

/// Pipeline stages, reported to a [`PhaseObserver`] as they start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Preprocess,
    Reduce,
    Correlate,
    Recover,
    Fallback,
}

impl Phase {
    pub const ALL: [Phase; 5] = [
        Phase::Preprocess,
        Phase::Reduce,
        Phase::Correlate,
        Phase::Recover,
        Phase::Fallback,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Preprocess => "preprocess",
            Phase::Reduce => "reduce",
            Phase::Correlate => "correlate",
            Phase::Recover => "recover",
            Phase::Fallback => "fallback",
        }
    }
}

/// Hook for timing pipeline stages. Each `enter` closes the previous stage.
pub trait PhaseObserver {
    fn enter(&mut self, phase: Phase);
    fn finish(&mut self) {}
}

impl PhaseObserver for () {
    fn enter(&mut self, _: Phase) {}
}

/// `W[k] = Σ_i V1[k+i]·V2[i]` by direct pair enumeration. Output length is
/// the length of `v1`.
///
/// # Panics
///
/// If an output value does not fit in 64 bits.
pub fn brute_convolution(v1: &SparseVector, v2: &SparseVector) -> SparseVector {
    let mut terms = Vec::new();
    for &(i2, b) in v2.entries() {
        let start = v1.entries().partition_point(|&(i, _)| i < i2);
        terms.extend(
            v1.entries()[start..]
                .iter()
                .map(|&(i1, a)| (i1 - i2, a as i128 * b as i128)),
        );
    }
    let sums = sum_by_index(terms);
    let entries = sums
        .into_iter()
        .filter(|&(_, v)| v != 0)
        .map(|(k, v)| (k, Value::try_from(v).expect("output value exceeds 64 bits")))
        .collect();
    SparseVector::from_sorted_unchecked(v1.length(), entries)
}

fn sum_by_index(mut terms: Vec<(Index, i128)>) -> Vec<(Index, i128)> {
    terms.sort_unstable_by_key(|&(k, _)| k);
    let mut out: Vec<(Index, i128)> = Vec::new();
    for (k, v) in terms {
        match out.last_mut() {
            Some(last) if last.0 == k => last.1 += v,
            _ => out.push((k, v)),
        }
    }
    out
}

/// Number of support pairs `(i1, i2)` with `i1 >= i2`.
pub fn pair_count(v1: &SparseVector, v2: &SparseVector) -> u64 {
    v2.indices()
        .map(|i2| (v1.nnz() - v1.entries().partition_point(|&(i, _)| i < i2)) as u64)
        .sum()
}

/// Correlations of one assignment, indexed by reduced offset `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentCorrelations {
    pub ordinal: usize,
    pub assignment: u64,
    /// `Σ v1·v2` over contributions at `s`.
    pub r_val: Vec<i128>,
    /// Number of contributions at `s`.
    pub r_cnt: Vec<i128>,
    /// `Σ (i1 - i2)` over contributions at `s`.
    pub r_k1: Vec<i128>,
    /// `Σ (i1 - i2)^2` over contributions at `s`.
    pub r_k2: Vec<i128>,
}

/// Correlates the two bundles of one assignment.
pub fn correlate_bundles(
    ordinal: usize,
    b1: &ReducedBundle,
    b2: &ReducedBundle,
) -> Result<AssignmentCorrelations, EngineError> {
    let q = b1.value.len();
    if b2.value.len() != q {
        return Err(CorrelationError::LengthMismatch(q, b2.value.len()).into());
    }
    let bound = moment_bound(
        [&b1.value, &b1.count, &b1.idx, &b1.idx2].map(|v| crate::ntt::l1_norm(v)),
        [&b2.value, &b2.count, &b2.idx, &b2.idx2].map(|v| crate::ntt::l1_norm(v)),
    );
    let primes = primes_for_bound(bound).ok_or(CorrelationError::MagnitudeExceeded(bound))?;
    let plan = Correlator::new(q, q, primes)?;
    let [val1, cnt1, idx1, sq1] =
        [&b1.value, &b1.count, &b1.idx, &b1.idx2].map(|v| plan.spectrum_a(v));
    let [val2, cnt2, idx2, sq2] =
        [&b2.value, &b2.count, &b2.idx, &b2.idx2].map(|v| plan.spectrum_b(v));
    let (val1, cnt1, idx1, sq1) = (val1?, cnt1?, idx1?, sq1?);
    let (val2, cnt2, idx2, sq2) = (val2?, cnt2?, idx2?, sq2?);
    Ok(AssignmentCorrelations {
        ordinal,
        assignment: b1.assignment,
        r_val: plan.cyclic(&[(1, &val1, &val2)])?,
        r_cnt: plan.cyclic(&[(1, &cnt1, &cnt2)])?,
        r_k1: plan.cyclic(&[(1, &idx1, &cnt2), (-1, &cnt1, &idx2)])?,
        r_k2: plan.cyclic(&[
            (1, &sq1, &cnt2),
            (-1, &idx1, &idx2),
            (-1, &idx1, &idx2),
            (1, &cnt1, &sq2),
        ])?,
    })
}

/// Largest of the four channel bounds, each a sum of `l1·l1` products.
/// Arguments are the norms of the (value, count, idx, idx²) channels.
fn moment_bound(a: [u128; 4], b: [u128; 4]) -> u128 {
    let m = |x: u128, y: u128| x.saturating_mul(y);
    let val = m(a[0], b[0]);
    let cnt = m(a[1], b[1]);
    let k1 = m(a[2], b[1]).saturating_add(m(a[1], b[2]));
    let k2 = m(a[3], b[1])
        .saturating_add(m(a[2], b[2]).saturating_mul(2))
        .saturating_add(m(a[1], b[3]));
    val.max(cnt).max(k1).max(k2)
}

/// Upper bound on every correlation channel, computed from the inputs alone.
pub fn input_moment_bound(v1: &SparseVector, v2: &SparseVector, c: u32) -> u128 {
    let norms = |v: &SparseVector, copies: u128| {
        let mut acc = [0u128; 4];
        for &(i, x) in v.entries() {
            let i = i as u128;
            acc[0] = acc[0].saturating_add(x.unsigned_abs() as u128);
            acc[1] = acc[1].saturating_add(1);
            acc[2] = acc[2].saturating_add(i);
            acc[3] = acc[3].saturating_add(i.saturating_mul(i));
        }
        acc.map(|x| x.saturating_mul(copies))
    };
    moment_bound(norms(v1, 1u128 << c), norms(v2, 1))
}

/// Reduces both vectors under assignment `t` and correlates them.
pub fn correlate_assignment(
    v1: &SparseVector,
    v2: &SparseVector,
    scheme: &ReductionScheme,
    t: usize,
) -> Result<AssignmentCorrelations, EngineError> {
    let b1 = reduce_v1(v1, scheme, t)?;
    let b2 = reduce_v2(v2, scheme, t)?;
    correlate_bundles(t, &b1, &b2)
}

/// An output index certified by a zero-variance offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub k: Index,
    pub value: i128,
    pub pairs: u64,
}

/// Offsets whose contributions all share one output index `k` with
/// `base(k)` landing on the same offset.
pub fn extract_pure_offsets(
    corr: &AssignmentCorrelations,
    params: &EncodingParams,
    output_length: u64,
) -> Vec<Candidate> {
    let mut out = Vec::new();
    for s in 0..corr.r_cnt.len() {
        let cnt = corr.r_cnt[s];
        if cnt <= 0 {
            continue;
        }
        let k1 = corr.r_k1[s];
        if k1 < 0 || k1 % cnt != 0 {
            continue;
        }
        let k = k1 / cnt;
        // zero variance: Σk² · cnt == (Σk)², i.e. Σk² == k · Σk
        if k.checked_mul(k1) != Some(corr.r_k2[s]) {
            continue;
        }
        let Ok(k) = Index::try_from(k) else { continue };
        if k >= output_length {
            continue;
        }
        match evaluate_index(k, corr.assignment, params) {
            Ok(pos) if pos as usize == s => {}
            _ => continue,
        }
        out.push(Candidate {
            k,
            value: corr.r_val[s],
            pairs: cnt as u64,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecoveredOutput {
    pub value: i128,
    /// Ordinal of the assignment that certified the output.
    pub assignment: usize,
    pub pairs: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecoveryReport {
    pub recovered: BTreeMap<Index, RecoveredOutput>,
    pub fallback_outputs: BTreeSet<Index>,
    /// Support pairs with `i1 >= i2`.
    pub total_pairs: u64,
    pub recovered_pairs: u64,
    pub fallback_pairs: u64,
}

impl RecoveryReport {
    pub fn total_pairs_accounted(&self) -> u64 {
        self.recovered_pairs + self.fallback_pairs
    }

    /// Share of touched output indices that needed direct summation.
    pub fn fallback_fraction(&self) -> f64 {
        let total = self.recovered.len() + self.fallback_outputs.len();
        if total == 0 {
            0.0
        } else {
            self.fallback_outputs.len() as f64 / total as f64
        }
    }
}

/// Merges per-assignment candidates (lowest ordinal wins per output index),
/// sums the unexplained pairs directly and assembles the output.
pub fn finish_recovery(
    v1: &SparseVector,
    v2: &SparseVector,
    per_assignment: &[Vec<Candidate>],
    observer: &mut dyn PhaseObserver,
) -> Result<(SparseVector, RecoveryReport), EngineError> {
    observer.enter(Phase::Recover);
    let mut report = RecoveryReport {
        total_pairs: pair_count(v1, v2),
        ..RecoveryReport::default()
    };
    for (ordinal, candidates) in per_assignment.iter().enumerate() {
        for c in candidates {
            report.recovered.entry(c.k).or_insert(RecoveredOutput {
                value: c.value,
                assignment: ordinal,
                pairs: c.pairs,
            });
        }
    }
    report.recovered_pairs = report.recovered.values().map(|r| r.pairs).sum();
    if report.recovered_pairs > report.total_pairs {
        return Err(EngineError::Accounting {
            accounted: report.recovered_pairs,
            total: report.total_pairs,
        });
    }

    observer.enter(Phase::Fallback);
    let mut fallback = Vec::new();
    if report.recovered_pairs < report.total_pairs {
        for &(i2, b) in v2.entries() {
            let start = v1.entries().partition_point(|&(i, _)| i < i2);
            for &(i1, a) in &v1.entries()[start..] {
                let k = i1 - i2;
                if !report.recovered.contains_key(&k) {
                    fallback.push((k, a as i128 * b as i128));
                }
            }
        }
        report.fallback_pairs = fallback.len() as u64;
    }
    let fallback = sum_by_index(fallback);
    report.fallback_outputs = fallback.iter().map(|&(k, _)| k).collect();
    if report.total_pairs_accounted() != report.total_pairs {
        return Err(EngineError::Accounting {
            accounted: report.total_pairs_accounted(),
            total: report.total_pairs,
        });
    }

    let mut entries: Vec<(Index, i128)> = report
        .recovered
        .iter()
        .map(|(&k, r)| (k, r.value))
        .chain(fallback)
        .filter(|&(_, v)| v != 0)
        .collect();
    entries.sort_unstable_by_key(|&(k, _)| k);
    let entries = entries
        .into_iter()
        .map(|(index, v)| {
            Value::try_from(v)
                .map(|v| (index, v))
                .map_err(|_| EngineError::OutputOverflow { index })
        })
        .collect::<Result<Vec<_>, _>>()?;
    observer.finish();
    Ok((SparseVector::from_sorted_unchecked(v1.length(), entries), report))
}

/// Checks the value and size envelope for the reduced pipeline.
pub fn check_bounds(
    v1: &SparseVector,
    v2: &SparseVector,
    config: &EngineConfig,
) -> Result<(), EngineError> {
    for v in [v1, v2] {
        if let Some(&(index, value)) = v
            .entries()
            .iter()
            .find(|&&(_, x)| x.unsigned_abs() > config.value_bound)
        {
            return Err(EngineError::ValueBound {
                index,
                value,
                bound: config.value_bound,
            });
        }
    }
    if v2.nnz() > config.max_n2 {
        return Err(EngineError::TooManyNonzeros {
            n2: v2.nnz(),
            max: config.max_n2,
        });
    }
    Ok(())
}

/// Checks that `scheme` was built for `v1`'s index set and within the length cap.
pub fn check_scheme(
    v1: &SparseVector,
    scheme: &ReductionScheme,
    config: &EngineConfig,
) -> Result<(), EngineError> {
    let params = &scheme.params;
    if config.scheme.forced.is_none() && params.q() > config.scheme.max_q {
        return Err(EngineError::ModulusTooLarge {
            q: params.q(),
            max: config.scheme.max_q,
        });
    }
    let per = params.variant_count();
    let matches = scheme.polynomials.len() == v1.nnz() * per
        && v1
            .indices()
            .zip(scheme.polynomials.chunks(per))
            .all(|(i, chunk)| chunk.iter().all(|p| p.origin_index == i));
    if matches {
        Ok(())
    } else {
        Err(EngineError::SchemeMismatch)
    }
}

/// The reduced-vector pipeline; output equals [`brute_convolution`].
pub fn fast_sparse_convolution(
    v1: &SparseVector,
    v2: &SparseVector,
    scheme: &ReductionScheme,
    config: &EngineConfig,
) -> Result<(SparseVector, RecoveryReport), EngineError> {
    fast_sparse_convolution_observed(v1, v2, scheme, config, &mut ())
}

pub fn fast_sparse_convolution_observed(
    v1: &SparseVector,
    v2: &SparseVector,
    scheme: &ReductionScheme,
    config: &EngineConfig,
    observer: &mut dyn PhaseObserver,
) -> Result<(SparseVector, RecoveryReport), EngineError> {
    check_bounds(v1, v2, config)?;
    check_scheme(v1, scheme, config)?;
    let per_assignment = (0..scheme.assignments.len())
        .map(|t| assignment_candidates(v1, v2, scheme, t, observer))
        .collect::<Result<Vec<_>, _>>()?;
    finish_recovery(v1, v2, &per_assignment, observer)
}

/// Reduction, correlation and candidate extraction for assignment ordinal
/// `t`. Independent across ordinals; merge the results with
/// [`finish_recovery`] in ordinal order.
pub fn assignment_candidates(
    v1: &SparseVector,
    v2: &SparseVector,
    scheme: &ReductionScheme,
    t: usize,
    observer: &mut dyn PhaseObserver,
) -> Result<Vec<Candidate>, EngineError> {
    observer.enter(Phase::Reduce);
    let b1 = reduce_v1(v1, scheme, t)?;
    let b2 = reduce_v2(v2, scheme, t)?;
    observer.enter(Phase::Correlate);
    let corr = correlate_bundles(t, &b1, &b2)?;
    observer.enter(Phase::Recover);
    Ok(extract_pure_offsets(&corr, &scheme.params, v1.length()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Naive,
    Fast,
    Verify,
}

/// Vectors and scheme ready for the reduced pipeline, compacted if needed.
#[derive(Debug, Clone)]
pub struct PreparedInstance {
    pub v1: SparseVector,
    pub v2: SparseVector,
    pub scheme: ReductionScheme,
    /// Present when indices were reduced modulo a prime first; the vectors
    /// above then live in the compacted index space.
    pub compaction: Option<CompactionResult>,
}

fn scheme_config_for(v2: &SparseVector, config: &EngineConfig) -> SchemeConfig {
    SchemeConfig {
        index_bound: v2.max_index(),
        ..config.scheme.clone()
    }
}

fn try_polynomial_case(
    v1: &SparseVector,
    v2: &SparseVector,
    config: &EngineConfig,
) -> Result<Option<ReductionScheme>, EngineError> {
    let scheme = match build_scheme(v1, &scheme_config_for(v2, config)) {
        Ok(s) => s,
        Err(SchemeError::NoParameters { .. }) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    if primes_for_bound(input_moment_bound(v1, v2, scheme.params.c())).is_none() {
        return Ok(None);
    }
    Ok(Some(scheme))
}

/// Builds the scheme for `v1` (with `v2`'s indices kept encodable), first
/// compacting both vectors when their indices exceed the polynomial case or
/// the exact moment range. `v1` must be non-empty.
pub fn prepare(
    v1: &SparseVector,
    v2: &SparseVector,
    config: &EngineConfig,
    observer: &mut dyn PhaseObserver,
) -> Result<PreparedInstance, EngineError> {
    observer.enter(Phase::Preprocess);
    check_bounds(v1, v2, config)?;
    if let Some(scheme) = try_polynomial_case(v1, v2, config)? {
        return Ok(PreparedInstance {
            v1: v1.clone(),
            v2: v2.clone(),
            scheme,
            compaction: None,
        });
    }
    let support = union_support(v1, v2).len();
    if support > config.max_compaction_support {
        return Err(EngineError::CompactionTooLarge {
            support,
            cap: config.max_compaction_support,
        });
    }
    let (c1, c2, result) = compact_auto(v1, v2)?;
    let scheme = try_polynomial_case(&c1, &c2, config)?.ok_or(SchemeError::NoParameters {
        max_index: result.p,
        n1: c1.nnz(),
        max_degree: config.scheme.max_degree,
        max_q: config.scheme.max_q,
    })?;
    Ok(PreparedInstance {
        v1: c1,
        v2: c2,
        scheme,
        compaction: Some(result),
    })
}

/// Result of [`verified_convolution`].
#[derive(Debug, Clone)]
pub struct ConvolutionOutcome {
    pub output: SparseVector,
    pub mode: Mode,
    pub report: Option<RecoveryReport>,
    pub scheme: Option<ReductionScheme>,
    /// Present when the output is in the compacted index space.
    pub compaction: Option<CompactionResult>,
    /// Verify mode only: the reduced pipeline matched the reference.
    pub verified: bool,
}

/// Runs the reference, the reduced pipeline, or both with a cross-check.
pub fn verified_convolution(
    v1: &SparseVector,
    v2: &SparseVector,
    mode: Mode,
    config: &EngineConfig,
) -> Result<ConvolutionOutcome, EngineError> {
    verified_convolution_observed(v1, v2, mode, config, &mut ())
}

pub fn verified_convolution_observed(
    v1: &SparseVector,
    v2: &SparseVector,
    mode: Mode,
    config: &EngineConfig,
    observer: &mut dyn PhaseObserver,
) -> Result<ConvolutionOutcome, EngineError> {
    let mut outcome = ConvolutionOutcome {
        output: SparseVector::zeros(v1.length()),
        mode,
        report: None,
        scheme: None,
        compaction: None,
        verified: false,
    };
    if mode == Mode::Naive {
        outcome.output = brute_convolution(v1, v2);
        return Ok(outcome);
    }
    if v1.is_empty() || v2.is_empty() {
        check_bounds(v1, v2, config)?;
        outcome.report = Some(RecoveryReport::default());
        outcome.verified = mode == Mode::Verify;
        return Ok(outcome);
    }
    let prepared = prepare(v1, v2, config, observer)?;
    let (fast, report) =
        fast_sparse_convolution_observed(&prepared.v1, &prepared.v2, &prepared.scheme, config, observer)?;
    if mode == Mode::Verify {
        let naive = brute_convolution(&prepared.v1, &prepared.v2);
        if let Some((index, f, n)) = first_difference(&fast, &naive) {
            return Err(EngineError::VerifyMismatch {
                index,
                fast: f,
                naive: n,
            });
        }
        outcome.verified = true;
    }
    outcome.output = fast;
    outcome.report = Some(report);
    outcome.scheme = Some(prepared.scheme);
    outcome.compaction = prepared.compaction;
    Ok(outcome)
}

/// First index where two vectors disagree, with both values.
pub fn first_difference(a: &SparseVector, b: &SparseVector) -> Option<(Index, Value, Value)> {
    let mut keys: Vec<Index> = a.indices().chain(b.indices()).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter()
        .map(|k| (k, a.get(k), b.get(k)))
        .find(|&(_, x, y)| x != y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(length: u64, e: &[(u64, i64)]) -> SparseVector {
        SparseVector::new(length, e.to_vec()).unwrap()
    }

    fn cfg() -> EngineConfig {
        EngineConfig::default()
    }

    #[test]
    fn brute_examples() {
        assert_eq!(brute_convolution(&sv(1, &[(0, 1)]), &sv(1, &[(0, 1)])), sv(1, &[(0, 1)]));
        let v1 = sv(8, &[(0, 2), (3, 1)]);
        let v2 = sv(2, &[(0, 3), (1, 4)]);
        assert_eq!(brute_convolution(&v1, &v2), sv(8, &[(0, 6), (2, 4), (3, 3)]));
        assert!(brute_convolution(&v1, &SparseVector::zeros(4)).is_empty());
        assert_eq!(pair_count(&v1, &v2), 3);
    }

    #[test]
    fn fast_single_pair() {
        let v = sv(1, &[(0, 1)]);
        let scheme = build_scheme(&v, &cfg().scheme).unwrap();
        let (w, report) = fast_sparse_convolution(&v, &v, &scheme, &cfg()).unwrap();
        assert_eq!(w, sv(1, &[(0, 1)]));
        assert!(report.fallback_outputs.is_empty());
        assert_eq!(report.total_pairs_accounted(), 1);
    }

    #[test]
    fn fast_worked_example() {
        let v1 = sv(8, &[(0, 2), (3, 1)]);
        let v2 = sv(2, &[(0, 3), (1, 4)]);
        let scheme = build_scheme(&v1, &scheme_config_for(&v2, &cfg())).unwrap();
        let (w, report) = fast_sparse_convolution(&v1, &v2, &scheme, &cfg()).unwrap();
        assert_eq!(w, sv(8, &[(0, 6), (2, 4), (3, 3)]));
        assert_eq!(report.total_pairs, 3);
        assert_eq!(report.total_pairs_accounted(), 3);
    }

    #[test]
    fn cancellation_is_exact() {
        // pairs (5,0) and (7,2) both give k = 5 and cancel
        let v1 = sv(10, &[(5, 1), (7, 1)]);
        let v2 = sv(10, &[(0, 2), (2, -2)]);
        let scheme = build_scheme(&v1, &scheme_config_for(&v2, &cfg())).unwrap();
        let (w, _) = fast_sparse_convolution(&v1, &v2, &scheme, &cfg()).unwrap();
        assert_eq!(w, brute_convolution(&v1, &v2));
        assert_eq!(w.get(5), 0);
    }

    #[test]
    fn correlation_identities() {
        let v1 = sv(200, &[(3, 5), (17, -2), (64, 7), (150, 1), (199, -9)]);
        let v2 = sv(40, &[(0, 1), (9, 3), (33, -4)]);
        let scheme = build_scheme(&v1, &scheme_config_for(&v2, &cfg())).unwrap();
        let per = scheme.params.variant_count() as i128;
        let s1: i128 = v1.entries().iter().map(|e| e.1 as i128).sum();
        let s2: i128 = v2.entries().iter().map(|e| e.1 as i128).sum();
        for t in 0..scheme.assignments.len() {
            let c = correlate_assignment(&v1, &v2, &scheme, t).unwrap();
            assert_eq!(c.r_val.iter().sum::<i128>(), per * s1 * s2);
            assert_eq!(c.r_cnt.iter().sum::<i128>(), per * 5 * 3);
            for s in 0..c.r_cnt.len() {
                assert!(c.r_cnt[s] >= 0);
                if c.r_cnt[s] > 0 {
                    assert!(c.r_k2[s] * c.r_cnt[s] >= c.r_k1[s] * c.r_k1[s]);
                }
            }
        }
    }

    #[test]
    fn bounds_are_enforced() {
        let big = sv(4, &[(0, 1 << 21)]);
        let small = sv(4, &[(0, 1)]);
        let err = verified_convolution(&big, &small, Mode::Fast, &cfg()).unwrap_err();
        assert!(matches!(err, EngineError::ValueBound { index: 0, .. }));
        assert!(err.is_bound_violation());
        let limited = EngineConfig {
            max_n2: 1,
            ..cfg()
        };
        let two = sv(4, &[(0, 1), (1, 1)]);
        assert!(matches!(
            verified_convolution(&two, &two, Mode::Fast, &limited),
            Err(EngineError::TooManyNonzeros { n2: 2, max: 1 })
        ));
    }

    #[test]
    fn scheme_mismatch_detected() {
        let v1 = sv(100, &[(1, 1), (50, 1)]);
        let other = sv(100, &[(2, 1), (50, 1)]);
        let scheme = build_scheme(&other, &cfg().scheme).unwrap();
        assert_eq!(
            fast_sparse_convolution(&v1, &v1, &scheme, &cfg()).unwrap_err(),
            EngineError::SchemeMismatch
        );
    }

    #[test]
    fn modes() {
        let v1 = sv(8, &[(0, 2), (3, 1)]);
        let v2 = sv(2, &[(0, 3), (1, 4)]);
        let out = verified_convolution(&v1, &v2, Mode::Verify, &cfg()).unwrap();
        assert!(out.verified);
        assert_eq!(out.output, sv(8, &[(0, 6), (2, 4), (3, 3)]));
        let naive = verified_convolution(&SparseVector::zeros(3), &SparseVector::zeros(3), Mode::Naive, &cfg())
            .unwrap();
        assert!(naive.output.is_empty());
        let fast = verified_convolution(&v1, &SparseVector::zeros(5), Mode::Fast, &cfg()).unwrap();
        assert_eq!(fast.output, SparseVector::zeros(8));
    }

    #[test]
    fn huge_indices_are_compacted() {
        let v1 = sv(u64::MAX, &[(1 << 62, 3), ((1 << 62) + 12345, -1), (u64::MAX - 7, 2)]);
        let v2 = sv(u64::MAX, &[(5, 1), (1 << 61, 4)]);
        let out = verified_convolution(&v1, &v2, Mode::Verify, &cfg()).unwrap();
        let comp = out.compaction.as_ref().expect("compaction expected");
        assert!(out.verified);
        assert_eq!(out.output.length(), comp.p);
        let prepared_v1 = SparseVector::new(
            comp.p,
            v1.entries().iter().map(|&(i, x)| (i % comp.p, x)).collect(),
        )
        .unwrap();
        let prepared_v2 = SparseVector::new(
            comp.p,
            v2.entries().iter().map(|&(i, x)| (i % comp.p, x)).collect(),
        )
        .unwrap();
        assert_eq!(out.output, brute_convolution(&prepared_v1, &prepared_v2));
    }

    #[test]
    fn first_difference_finds_lowest() {
        let a = sv(10, &[(1, 1), (4, 2), (6, 3)]);
        let b = sv(10, &[(1, 1), (4, 5), (5, 1)]);
        assert_eq!(first_difference(&a, &b), Some((4, 2, 5)));
        assert_eq!(first_difference(&a, &a), None);
    }

    #[test]
    fn moment_bound_matches_bundles() {
        let v1 = sv(1000, &[(10, 4), (999, -3), (500, 1)]);
        let v2 = sv(100, &[(0, 2), (99, 9)]);
        let scheme = build_scheme(&v1, &scheme_config_for(&v2, &cfg())).unwrap();
        let b1 = reduce_v1(&v1, &scheme, 0).unwrap();
        let b2 = reduce_v2(&v2, &scheme, 0).unwrap();
        let from_bundles = moment_bound(
            [&b1.value, &b1.count, &b1.idx, &b1.idx2].map(|v| crate::ntt::l1_norm(v)),
            [&b2.value, &b2.count, &b2.idx, &b2.idx2].map(|v| crate::ntt::l1_norm(v)),
        );
        assert!(from_bundles <= input_moment_bound(&v1, &v2, scheme.params.c()));
    }
}
