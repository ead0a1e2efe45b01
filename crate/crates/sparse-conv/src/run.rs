//! Timed convolution runs, optionally spread over a thread pool.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use sparse_conv_core::compaction::CompactionResult;
use sparse_conv_core::engine::{
    assignment_candidates, check_bounds, check_scheme, finish_recovery, first_difference, prepare, Phase,
    PhaseObserver,
};
use sparse_conv_core::{brute_convolution, EngineConfig, EngineError, Mode, RecoveryReport, ReductionScheme, SparseVector};

/// Wall time per pipeline phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimes {
    pub per_phase: [Duration; 5],
}

impl PhaseTimes {
    pub fn get(&self, phase: Phase) -> Duration {
        self.per_phase[phase as usize]
    }

    pub fn add(&mut self, other: &PhaseTimes) {
        for (a, b) in self.per_phase.iter_mut().zip(other.per_phase) {
            *a += b;
        }
    }
}

/// Observer that charges elapsed time to the phase last entered.
#[derive(Debug, Default)]
pub struct PhaseTimer {
    times: PhaseTimes,
    current: Option<(Phase, Instant)>,
}

impl PhaseTimer {
    pub fn new() -> Self {
        Self::default()
    }

    fn close(&mut self) {
        if let Some((phase, start)) = self.current.take() {
            self.times.per_phase[phase as usize] += start.elapsed();
        }
    }

    pub fn into_times(mut self) -> PhaseTimes {
        self.close();
        self.times
    }
}

impl PhaseObserver for PhaseTimer {
    fn enter(&mut self, phase: Phase) {
        self.close();
        self.current = Some((phase, Instant::now()));
    }

    fn finish(&mut self) {
        self.close();
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub mode: Mode,
    pub output: SparseVector,
    pub report: Option<RecoveryReport>,
    pub scheme: Option<ReductionScheme>,
    /// Present when the output is in the compacted index space.
    pub compaction: Option<CompactionResult>,
    pub verified: bool,
    /// Phase times; with several threads the per-assignment phases are summed
    /// over workers.
    pub times: PhaseTimes,
    pub verify_time: Duration,
    pub total_time: Duration,
    pub threads: usize,
}

/// Runs `mode` on the two vectors. `threads` above one spreads the
/// per-assignment work over a pool; the output does not depend on it.
pub fn run_convolution(
    v1: &SparseVector,
    v2: &SparseVector,
    mode: Mode,
    config: &EngineConfig,
    threads: usize,
) -> Result<RunOutcome, EngineError> {
    let start = Instant::now();
    let threads = threads.max(1);
    let mut outcome = RunOutcome {
        mode,
        output: SparseVector::zeros(v1.length()),
        report: None,
        scheme: None,
        compaction: None,
        verified: false,
        times: PhaseTimes::default(),
        verify_time: Duration::ZERO,
        total_time: Duration::ZERO,
        threads,
    };
    if mode == Mode::Naive {
        outcome.output = brute_convolution(v1, v2);
        outcome.total_time = start.elapsed();
        return Ok(outcome);
    }
    check_bounds(v1, v2, config)?;
    if v1.is_empty() || v2.is_empty() {
        outcome.report = Some(RecoveryReport::default());
        outcome.verified = mode == Mode::Verify;
        outcome.total_time = start.elapsed();
        return Ok(outcome);
    }

    let mut timer = PhaseTimer::new();
    let prepared = prepare(v1, v2, config, &mut timer)?;
    let (w1, w2, scheme) = (&prepared.v1, &prepared.v2, &prepared.scheme);
    check_scheme(w1, scheme, config)?;
    let ordinals = 0..scheme.assignments.len();
    let per_assignment = if threads == 1 {
        ordinals
            .map(|t| assignment_candidates(w1, w2, scheme, t, &mut timer))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool");
        let results: Vec<_> = pool.install(|| {
            ordinals
                .into_par_iter()
                .map(|t| {
                    let mut local = PhaseTimer::new();
                    let r = assignment_candidates(w1, w2, scheme, t, &mut local);
                    (r, local.into_times())
                })
                .collect()
        });
        timer.close();
        let mut list = Vec::with_capacity(results.len());
        for (r, times) in results {
            timer.times.add(&times);
            list.push(r?);
        }
        list
    };
    let (fast, report) = finish_recovery(w1, w2, &per_assignment, &mut timer)?;
    outcome.times = timer.into_times();

    if mode == Mode::Verify {
        let t = Instant::now();
        let naive = brute_convolution(w1, w2);
        outcome.verify_time = t.elapsed();
        if let Some((index, fast, naive)) = first_difference(&fast, &naive) {
            return Err(EngineError::VerifyMismatch { index, fast, naive });
        }
        outcome.verified = true;
    }
    outcome.output = fast;
    outcome.report = Some(report);
    outcome.scheme = Some(prepared.scheme);
    outcome.compaction = prepared.compaction;
    outcome.total_time = start.elapsed();
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{instance, InstanceSpec, ValueRange};

    #[test]
    fn threads_do_not_change_output() {
        let spec = InstanceSpec {
            len1: 1 << 16,
            n1: 200,
            len2: 1 << 10,
            n2: 40,
            values: ValueRange::signed(100),
        };
        let (v1, v2) = instance(3, &spec);
        let config = EngineConfig::default();
        let one = run_convolution(&v1, &v2, Mode::Verify, &config, 1).unwrap();
        let four = run_convolution(&v1, &v2, Mode::Verify, &config, 4).unwrap();
        assert!(one.verified && four.verified);
        assert_eq!(one.output, four.output);
        assert_eq!(one.report, four.report);
        assert_eq!(one.output, brute_convolution(&v1, &v2));
    }

    #[test]
    fn timer_charges_phases() {
        let mut timer = PhaseTimer::new();
        timer.enter(Phase::Reduce);
        std::thread::sleep(Duration::from_millis(5));
        timer.enter(Phase::Fallback);
        let times = timer.into_times();
        assert!(times.get(Phase::Reduce) >= Duration::from_millis(5));
        assert_eq!(times.get(Phase::Correlate), Duration::ZERO);
    }
}
