//! Naive, dense-transform and fast paths timed on the same instances.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use sparse_conv_core::engine::first_difference;
use sparse_conv_core::ntt::{linear_correlation, CorrelationError};
use sparse_conv_core::{brute_convolution, EngineConfig, EngineError, Mode, SparseVector};

use crate::gen::{instance, InstanceSpec, ValueRange};
use crate::report::{run_report, Report};
use crate::run::{run_convolution, RunOutcome};

/// Dense vectors longer than this are not materialized.
pub const DENSE_LIMIT: u64 = 1 << 26;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n1: usize,
    pub len1: u64,
    pub n2: usize,
    pub len2: u64,
    pub values: ValueRange,
    pub repetitions: usize,
    pub seed: u64,
    pub threads: usize,
    pub engine: EngineConfig,
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub naive: Vec<Duration>,
    /// Empty when the dense vectors exceed [`DENSE_LIMIT`].
    pub dense: Vec<Duration>,
    pub fast: Vec<Duration>,
    /// All paths produced the same output on every repetition.
    pub agree: bool,
    /// Whether the fast path ran in a compacted index space, where it is
    /// compared against the naive path on the compacted vectors.
    pub compacted: bool,
    pub last_instance: (SparseVector, SparseVector),
    pub last_outcome: RunOutcome,
}

pub fn median(samples: &[Duration]) -> Option<Duration> {
    let mut s = samples.to_vec();
    s.sort_unstable();
    match s.len() {
        0 => None,
        n if n % 2 == 1 => Some(s[n / 2]),
        n => Some((s[n / 2 - 1] + s[n / 2]) / 2),
    }
}

fn to_dense(v: &SparseVector) -> Vec<i128> {
    let mut d = vec![0i128; v.length() as usize];
    for &(i, x) in v.entries() {
        d[i as usize] = x as i128;
    }
    d
}

/// Full-length dense correlation of the two vectors.
pub fn dense_convolution(v1: &SparseVector, v2: &SparseVector) -> Result<SparseVector, CorrelationError> {
    let w = linear_correlation(&to_dense(v1), &to_dense(v2))?;
    let entries = w
        .into_iter()
        .enumerate()
        .filter(|&(_, x)| x != 0)
        .map(|(k, x)| (k as u64, i64::try_from(x).expect("output fits 64 bits")))
        .collect();
    Ok(SparseVector::new(v1.length(), entries).expect("dense output is valid"))
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchResult, EngineError> {
    let spec = InstanceSpec {
        len1: config.len1,
        n1: config.n1,
        len2: config.len2,
        n2: config.n2,
        values: config.values,
    };
    let dense_ok = config.len1 <= DENSE_LIMIT && config.len2 <= DENSE_LIMIT;
    let mut result = None::<BenchResult>;
    for rep in 0..config.repetitions.max(1) {
        let (v1, v2) = instance(config.seed.wrapping_add(rep as u64), &spec);

        let t = Instant::now();
        let naive = brute_convolution(&v1, &v2);
        let naive_time = t.elapsed();

        let dense = if dense_ok {
            let t = Instant::now();
            let w = dense_convolution(&v1, &v2)?;
            Some((w, t.elapsed()))
        } else {
            None
        };

        let outcome = run_convolution(&v1, &v2, Mode::Fast, &config.engine, config.threads)?;
        let compacted = outcome.compaction.is_some();
        let mut agree = dense.as_ref().is_none_or(|(w, _)| *w == naive);
        agree &= if let Some(c) = &outcome.compaction {
            let remap = |v: &SparseVector| {
                SparseVector::new(c.p, v.entries().iter().map(|&(i, x)| (i % c.p, x)).collect()).unwrap()
            };
            first_difference(&outcome.output, &brute_convolution(&remap(&v1), &remap(&v2))).is_none()
        } else {
            outcome.output == naive
        };

        let r = result.get_or_insert_with(|| BenchResult {
            naive: Vec::new(),
            dense: Vec::new(),
            fast: Vec::new(),
            agree: true,
            compacted,
            last_instance: (v1.clone(), v2.clone()),
            last_outcome: outcome.clone(),
        });
        r.naive.push(naive_time);
        if let Some((_, d)) = dense {
            r.dense.push(d);
        }
        r.fast.push(outcome.total_time);
        r.agree &= agree;
        r.compacted |= compacted;
        r.last_instance = (v1, v2);
        r.last_outcome = outcome;
    }
    Ok(result.expect("at least one repetition"))
}

impl BenchResult {
    pub fn samples(&self) -> usize {
        self.fast.len()
    }

    /// Dense median over fast median, when the dense path ran.
    pub fn dense_over_fast(&self) -> Option<f64> {
        let d = median(&self.dense)?;
        let f = median(&self.fast)?;
        Some(d.as_secs_f64() / f.as_secs_f64().max(1e-9))
    }

    pub fn summary(&self) -> Report {
        let (v1, v2) = &self.last_instance;
        let mut r = run_report(v1, v2, &self.last_outcome);
        r.push("repetitions", self.samples());
        r.push(
            "statistic",
            if self.samples() > 1 { "median" } else { "single-sample (not a median)" },
        );
        r.push("paths_agree", self.agree);
        let secs = |s: &[Duration]| {
            median(s).map_or_else(|| "skipped".to_string(), |d| format!("{:.6}", d.as_secs_f64()))
        };
        r.push("naive_s", secs(&self.naive));
        r.push("dense_fft_s", secs(&self.dense));
        r.push("fast_s", secs(&self.fast));
        r.push(
            "dense_over_fast",
            self.dense_over_fast()
                .map_or_else(|| "skipped".to_string(), |x| format!("{x:.2}")),
        );
        r
    }

    pub fn table(&self) -> String {
        let fast = median(&self.fast).unwrap().as_secs_f64().max(1e-9);
        let mut out = format!("{:<10} {:>12} {:>10}\n", "path", "seconds", "vs_fast");
        for (name, s) in [("naive", &self.naive), ("dense_fft", &self.dense), ("fast", &self.fast)] {
            match median(s) {
                Some(d) => writeln!(
                    out,
                    "{name:<10} {:>12.6} {:>10.2}",
                    d.as_secs_f64(),
                    d.as_secs_f64() / fast
                )
                .unwrap(),
                None => writeln!(out, "{name:<10} {:>12} {:>10}", "skipped", "-").unwrap(),
            }
        }
        out
    }
}
