//! Line-oriented `key: value` reports.

use std::fmt::Write as _;
use std::time::Duration;

use sparse_conv_core::compaction::CompactionResult;
use sparse_conv_core::engine::Phase;
use sparse_conv_core::{Mode, ReductionScheme, SparseVector};

use crate::run::RunOutcome;

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Naive => "naive",
        Mode::Fast => "fast",
        Mode::Verify => "verify",
    }
}

/// Ordered `key: value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub fields: Vec<(String, String)>,
}

impl Report {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.fields.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.fields {
            writeln!(out, "{k}: {v}").unwrap();
        }
        out
    }
}

fn seconds(d: Duration) -> String {
    format!("{:.6}", d.as_secs_f64())
}

fn or_none<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

/// Report for one convolution run. Only the `time_*` fields vary between
/// identical runs.
pub fn run_report(v1: &SparseVector, v2: &SparseVector, outcome: &RunOutcome) -> Report {
    let mut r = Report::default();
    r.push("mode", mode_name(outcome.mode));
    r.push("N1", v1.length());
    r.push("N2", v2.length());
    r.push("n1", v1.nnz());
    r.push("n2", v2.nnz());
    r.push("compacted", outcome.compaction.is_some());
    r.push("compaction_p", or_none(outcome.compaction.as_ref().map(|c| c.p)));
    let scheme = outcome.scheme.as_ref();
    r.push("c", or_none(scheme.map(|s| s.params.c())));
    r.push("q", or_none(scheme.map(|s| s.params.q())));
    r.push("assignments", or_none(scheme.map(|s| s.assignments.len())));
    r.push("assignment_bound", or_none(scheme.map(|s| s.assignment_bound())));
    let rec = outcome.report.as_ref();
    r.push("total_pairs", or_none(rec.map(|x| x.total_pairs)));
    r.push("recovered_pairs", or_none(rec.map(|x| x.recovered_pairs)));
    r.push("fallback_pairs", or_none(rec.map(|x| x.fallback_pairs)));
    r.push("recovered_outputs", or_none(rec.map(|x| x.recovered.len())));
    r.push("fallback_outputs", or_none(rec.map(|x| x.fallback_outputs.len())));
    r.push(
        "fallback_fraction",
        or_none(rec.map(|x| format!("{:.6}", x.fallback_fraction()))),
    );
    r.push("output_entries", outcome.output.nnz());
    r.push("verified", outcome.verified);
    r.push("threads", outcome.threads);
    for phase in Phase::ALL {
        r.push(&format!("time_{}_s", phase.name()), seconds(outcome.times.get(phase)));
    }
    r.push("time_verify_s", seconds(outcome.verify_time));
    r.push("time_total_s", seconds(outcome.total_time));
    r
}

/// Scheme summary followed by one `poly <origin> <mask> covered_by <a>` line
/// per polynomial and one `coeffs <origin> <mask> <c0> <c1> ...` line giving
/// its coefficients, constant term first.
pub fn scheme_dump(scheme: &ReductionScheme) -> String {
    let params = &scheme.params;
    let mut r = Report::default();
    r.push("q", params.q());
    r.push("c", params.c());
    r.push("radix", params.radix());
    r.push("polynomials", scheme.polynomials.len());
    r.push("assignments", scheme.assignments.len());
    r.push("assignment_bound", scheme.assignment_bound());
    let values: Vec<String> = scheme.assignments.iter().map(u64::to_string).collect();
    r.push("assignment_values", values.join(" "));
    let covered = scheme.coverage.iter().filter(|&&t| t < scheme.assignments.len()).count();
    r.push("covered", covered);
    let mut out = r.render();
    for (p, &t) in scheme.polynomials.iter().zip(&scheme.coverage) {
        writeln!(
            out,
            "poly {} {} covered_by {}",
            p.origin_index, p.variant_mask, scheme.assignments[t]
        )
        .unwrap();
    }
    for p in &scheme.polynomials {
        let coeffs: Vec<String> = p.coefficients.iter().map(u64::to_string).collect();
        writeln!(out, "coeffs {} {} {}", p.origin_index, p.variant_mask, coeffs.join(" ")).unwrap();
    }
    out
}

pub fn compaction_report(result: &CompactionResult, injective: bool) -> Report {
    let s = &result.search;
    let mut r = Report::default();
    r.push("p", result.p);
    r.push("support", result.index_map.len());
    r.push("pool_size", s.pool_size);
    r.push("rounds", s.rounds);
    r.push("q_bits", s.q_bits);
    r.push("d_bits", s.d_bits);
    r.push("p_product_bits", s.p_product_bits);
    r.push("N1", result.original_lengths.0);
    r.push("N2", result.original_lengths.1);
    r.push("injective", injective);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use sparse_conv_core::{build_scheme, EngineConfig, SchemeConfig};

    use crate::run::run_convolution;

    #[test]
    fn run_report_keys_are_stable() {
        let v1 = SparseVector::new(8, vec![(0, 2), (3, 1)]).unwrap();
        let v2 = SparseVector::new(2, vec![(0, 3), (1, 4)]).unwrap();
        let out = run_convolution(&v1, &v2, Mode::Verify, &EngineConfig::default(), 1).unwrap();
        let r = run_report(&v1, &v2, &out);
        let keys: Vec<&str> = r.fields.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys[..6], ["mode", "N1", "N2", "n1", "n2", "compacted"]);
        assert_eq!(r.get("total_pairs"), Some("3"));
        assert_eq!(r.get("output_entries"), Some("3"));
        assert_eq!(r.get("verified"), Some("true"));
        let naive = run_convolution(&v1, &v2, Mode::Naive, &EngineConfig::default(), 1).unwrap();
        let n = run_report(&v1, &v2, &naive);
        let nkeys: Vec<&str> = n.fields.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, nkeys);
        assert_eq!(n.get("q"), Some("none"));
        assert!(r.render().lines().all(|l| l.contains(": ")));
    }

    #[test]
    fn dump_lists_example_polynomials() {
        let v1 = SparseVector::new(96, vec![(95, 1)]).unwrap();
        let config = SchemeConfig {
            forced: Some((13, 2)),
            ..SchemeConfig::default()
        };
        let dump = scheme_dump(&build_scheme(&v1, &config).unwrap());
        assert!(dump.contains("poly 95 0 covered_by 2\n"));
        assert!(dump.contains("coeffs 95 0 5 3 2\n"));
        assert!(dump.contains("coeffs 95 1 11 2 2\n"));
        assert!(dump.contains("coeffs 95 2 5 9 1\n"));
        assert!(dump.contains("coeffs 95 3 11 8 1\n"));
        assert_eq!(dump.lines().filter(|l| l.starts_with("poly ")).count(), 4);
    }
}
