//! Acceptance run: one PASS/FAIL line per criterion. Soft criteria print
//! FLAG instead of failing the run.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use sparse_conv::bench::{run_bench, BenchConfig};
use sparse_conv::gen::{random_sparse, rng, ValueRange};
use sparse_conv_core::compaction::{
    big_gcd, find_good_prime, pairwise_diff_product, round_bound, PrimePool,
};
use sparse_conv_core::poly::digits;
use sparse_conv_core::scheme::{
    all_variants, build_singleton_table, candidate_assignments, choose_parameters, reduce_v1, required_rows,
};
use sparse_conv_core::{
    brute_convolution, build_scheme, encode_base, evaluate, make_variants, verified_convolution, EncodingParams,
    EngineConfig, Mode, SchemeConfig,
};

enum Verdict {
    Pass(String),
    Fail(String),
    /// Soft criterion outside its target: reported, not fatal.
    Flag(String),
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn criterion_1() -> Verdict {
    let params = EncodingParams::new(13, 2).unwrap();
    let mut times = Vec::new();
    let mut result = None;
    for _ in 0..11 {
        let start = Instant::now();
        let base = encode_base(95, &params).unwrap();
        let variants: Vec<Vec<u64>> = make_variants(&base, &params)
            .into_iter()
            .map(|p| p.coefficients)
            .collect();
        times.push(start.elapsed());
        result = Some((base.coefficients, variants));
    }
    times.sort_unstable();
    let (base, variants) = result.unwrap();
    let expected = vec![vec![5, 3, 2], vec![11, 2, 2], vec![5, 9, 1], vec![11, 8, 1]];
    check(
        base == [5, 3, 2] && variants == expected && times[5] < Duration::from_millis(1),
        format!("95 -> 2X^2+3X+5, variants {variants:?}, median {:?}", times[5]),
    )
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut rng = rng(2);
    let mut bad = 0;
    for c in 1..=3u32 {
        let params = EncodingParams::new(8191, c).unwrap();
        let cap = params.capacity().min(u64::MAX as u128) as u64;
        for _ in 0..10_000 {
            let i = rng.gen_range(0..cap);
            let j = rng.gen_range(0..cap - i);
            let (di, dj) = (digits(i, &params).unwrap(), digits(j, &params).unwrap());
            let hits = make_variants(&encode_base(i + j, &params).unwrap(), &params)
                .iter()
                .filter(|v| {
                    v.integer_coefficients(&params)
                        .iter()
                        .zip(di.iter().zip(&dj))
                        .all(|(&x, (&a, &b))| x == (a + b) as i64)
                })
                .count();
            bad += usize::from(hits != 1);
        }
    }
    let elapsed = start.elapsed();
    check(
        bad == 0 && elapsed < Duration::from_secs(5),
        format!("30000 pairs over c=1,2,3 at q=8191, {bad} misaligned, {elapsed:.2?}"),
    )
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut rng = rng(3);
    let mut worst = 0;
    let mut bad = 0;
    for (q, c) in [(65521u64, 1u32), (65521, 2), (65521, 3), (13, 2)] {
        let eval = |p: &[u64], a: u64| p.iter().rev().fold(0, |acc, &x| (acc * a + x) % q);
        for _ in 0..1000 {
            let p1: Vec<u64> = (0..=c).map(|_| rng.gen_range(0..q)).collect();
            let mut p2: Vec<u64> = (0..=c).map(|_| rng.gen_range(0..q)).collect();
            if p2 == p1 {
                p2[0] = (p2[0] + 1) % q;
            }
            let equal = (0..q).filter(|&a| eval(&p1, a) == eval(&p2, a)).count();
            worst = worst.max(equal);
            bad += usize::from(equal > c as usize);
        }
    }
    let elapsed = start.elapsed();
    check(
        bad == 0 && elapsed < Duration::from_secs(30),
        format!("4000 pairs, q<=65521, most equal points {worst}, {bad} over c, {elapsed:.2?}"),
    )
}

fn instance_v1(rng: &mut impl Rng, n1: usize) -> sparse_conv_core::SparseVector {
    let length = (n1 as u64).pow(3).min(1 << 22);
    random_sparse(rng, length, n1, ValueRange::signed(100))
}

fn criterion_4() -> Verdict {
    let mut rng = rng(4);
    let mut columns = 0;
    let mut bad = 0;
    for n1 in [16usize, 64, 256] {
        for _ in 0..5 {
            let v1 = instance_v1(&mut rng, n1);
            let params = choose_parameters(v1.max_index().unwrap(), n1, &SchemeConfig::default()).unwrap();
            let rows = required_rows(params.c(), n1).unwrap();
            let polys = all_variants(v1.indices(), &params).unwrap();
            let table = build_singleton_table(&polys, &candidate_assignments(&params, rows).unwrap(), &params);
            let bound = params.c() as usize * params.variant_count() * n1;
            for col in 0..table.column_count() {
                let f = table.column_false_count(col);
                bad += usize::from(f > bound || 2 * (table.row_count() - f) < table.row_count());
                columns += 1;
            }
        }
    }
    check(bad == 0, format!("{columns} columns over n1 in {{16,64,256}}, {bad} violations"))
}

fn criterion_5() -> Verdict {
    let mut rng = rng(5);
    let mut bad = 0;
    let mut most = 0.0f64;
    for n1 in [16usize, 64, 256] {
        for _ in 0..100 {
            let v1 = instance_v1(&mut rng, n1);
            let scheme = build_scheme(&v1, &SchemeConfig::default()).unwrap();
            most = most.max(scheme.assignments.len() as f64 / scheme.assignment_bound() as f64);
            let bundles: Vec<_> = (0..scheme.assignments.len())
                .map(|t| reduce_v1(&v1, &scheme, t).unwrap())
                .collect();
            let covered = scheme.polynomials.iter().zip(&scheme.coverage).all(|(p, &t)| {
                bundles[t].count[evaluate(p, scheme.assignments[t], &scheme.params) as usize] == 1
            });
            bad += usize::from(!covered || scheme.assignments.len() > scheme.assignment_bound());
        }
    }
    check(
        bad == 0,
        format!("300 schemes, {bad} violations, largest used/bound ratio {most:.2}"),
    )
}

fn criterion_6() -> Verdict {
    let mut rng = rng(6);
    let mut medians = Vec::new();
    for n1 in [128usize, 256, 512, 1024] {
        let v1 = instance_v1(&mut rng, n1);
        let mut times: Vec<Duration> = (0..5)
            .map(|_| {
                let t = Instant::now();
                build_scheme(&v1, &SchemeConfig::default()).unwrap();
                t.elapsed()
            })
            .collect();
        times.sort_unstable();
        medians.push((n1, times[2]));
    }
    let ratios: Vec<f64> = medians
        .windows(2)
        .map(|w| w[1].1.as_secs_f64() / w[0].1.as_secs_f64())
        .collect();
    let mut detail = String::new();
    for (n1, t) in &medians {
        write!(detail, "n1={n1}: {t:.2?}  ").unwrap();
    }
    write!(detail, "ratios {ratios:.2?}").unwrap();
    if ratios.iter().all(|&r| r <= 4.5) {
        Verdict::Pass(detail)
    } else {
        Verdict::Flag(detail)
    }
}

struct OracleRun {
    instances: usize,
    mismatches: usize,
    fallback: Vec<(u64, usize, usize, f64)>,
    elapsed: Duration,
}

fn oracle_suite() -> OracleRun {
    let start = Instant::now();
    let mut rng = rng(7);
    let mut run = OracleRun {
        instances: 0,
        mismatches: 0,
        fallback: Vec::new(),
        elapsed: Duration::ZERO,
    };
    let config = EngineConfig::default();
    for seed in 0..520u64 {
        let n1 = match seed % 4 {
            0 => rng.gen_range(1..=16),
            1 => rng.gen_range(17..=64),
            2 => rng.gen_range(65..=128),
            _ => rng.gen_range(129..=256),
        };
        let values = if seed % 2 == 0 {
            ValueRange::signed(100)
        } else {
            ValueRange::positive(100)
        };
        let len1 = rng.gen_range(n1 as u64..=(n1 as u64).pow(3).clamp(n1 as u64, 1 << 22));
        let n2 = rng.gen_range(1..=64usize.min(len1 as usize));
        let len2 = rng.gen_range(n2 as u64..=len1);
        let v1 = random_sparse(&mut rng, len1, n1, values);
        let v2 = random_sparse(&mut rng, len2, n2, values);
        let out = verified_convolution(&v1, &v2, Mode::Fast, &config).unwrap();
        assert!(out.compaction.is_none(), "seed {seed} left the polynomial case");
        run.instances += 1;
        run.mismatches += usize::from(out.output != brute_convolution(&v1, &v2));
        let report = out.report.unwrap();
        run.fallback.push((seed, n1, n2, report.fallback_fraction()));
    }
    run.elapsed = start.elapsed();
    run
}

fn criterion_7(run: &OracleRun) -> Verdict {
    check(
        run.instances >= 500 && run.mismatches == 0 && run.elapsed < Duration::from_secs(600),
        format!(
            "{} instances (n1<=256, n2<=64, N1<=min(n1^3, 2^22), signed and non-negative), {} mismatches, {:.2?}",
            run.instances, run.mismatches, run.elapsed
        ),
    )
}

fn criterion_8() -> Verdict {
    let start = Instant::now();
    let mut rng = rng(8);
    let mut bad = 0;
    let mut pools: Vec<(usize, PrimePool)> = Vec::new();
    for k in 0..100 {
        let n = [8usize, 16, 32, 64][k % 4];
        if !pools.iter().any(|(m, _)| *m == n) {
            pools.push((n, PrimePool::for_support(n).unwrap()));
        }
        let pool = &pools.iter().find(|(m, _)| *m == n).unwrap().1;
        let mut indices: Vec<u64> = (0..n).map(|_| rng.gen()).collect();
        indices.sort_unstable();
        indices.dedup();
        let found = find_good_prime(&indices, pool).unwrap();
        let residues: HashSet<u64> = indices.iter().map(|i| i % found.p).collect();
        let ok = residues.len() == indices.len()
            && pool.len() == n.pow(3) + 1
            && found.rounds <= round_bound(pool.len());
        bad += usize::from(!ok);
    }
    check(
        bad == 0,
        format!("100 instances, n in {{8,16,32,64}}, 64-bit indices, {bad} violations, {:.2?}", start.elapsed()),
    )
}

fn criterion_9() -> Verdict {
    let pool = PrimePool::from_primes(vec![2, 3, 11]).unwrap();
    let q = pool.tree().root_product();
    let d = pairwise_diff_product(&[0, 5, 12]).unwrap();
    let g = big_gcd(q, &d);
    let p_all = q / &g;
    let found = find_good_prime(&[0, 5, 12], &pool).unwrap();
    let text = |x: &dyn ToString| x.to_string();
    check(
        text(q) == "66" && text(&d) == "420" && text(&g) == "6" && text(&p_all) == "11" && found.p == 11,
        format!("Q={q}, D={d}, gcd={g}, P={p_all}, p={}", found.p),
    )
}

fn criterion_10() -> Verdict {
    let result = run_bench(&BenchConfig {
        n1: 1 << 10,
        len1: 1 << 22,
        n2: 1 << 8,
        len2: 1 << 22,
        values: ValueRange::positive(100),
        repetitions: 3,
        seed: 10,
        threads: 1,
        engine: EngineConfig::default(),
    })
    .unwrap();
    let ratio = result.dense_over_fast().unwrap_or(0.0);
    let detail = format!(
        "N1=2^22, n1=2^10, n2=2^8: dense/fast median ratio {ratio:.2}, outputs agree {}",
        result.agree
    );
    if !result.agree {
        Verdict::Fail(detail)
    } else if ratio >= 5.0 {
        Verdict::Pass(detail)
    } else {
        Verdict::Flag(detail)
    }
}

fn criterion_11(run: &OracleRun) -> Verdict {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("fallback_telemetry.txt");
    let mut text = String::from("seed n1 n2 fallback_fraction\n");
    for (seed, n1, n2, f) in &run.fallback {
        writeln!(text, "{seed} {n1} {n2} {f:.6}").unwrap();
    }
    let written = std::fs::write(&path, text).is_ok();
    let mut fractions: Vec<f64> = run.fallback.iter().map(|x| x.3).collect();
    fractions.sort_by(f64::total_cmp);
    let median = fractions.get(fractions.len() / 2).copied().unwrap_or(0.0);
    let zero = fractions.iter().filter(|&&f| f == 0.0).count();
    check(
        written && run.fallback.len() == run.instances,
        format!(
            "{} per-instance fractions in {}, median {median:.3}, max {:.3}, {zero} with no fallback",
            run.fallback.len(),
            path.display(),
            fractions.last().copied().unwrap_or(0.0)
        ),
    )
}

fn main() -> ExitCode {
    let mut verdicts = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3()),
        (4, criterion_4()),
        (5, criterion_5()),
        (6, criterion_6()),
    ];
    let oracle = oracle_suite();
    verdicts.extend([
        (7, criterion_7(&oracle)),
        (8, criterion_8()),
        (9, criterion_9()),
        (10, criterion_10()),
        (11, criterion_11(&oracle)),
    ]);
    let mut failed = false;
    for (n, v) in &verdicts {
        let (tag, detail) = match v {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed = true;
                ("FAIL", d)
            }
            Verdict::Flag(d) => ("FLAG", d),
        };
        println!("criterion {n:>2}: {tag} {detail}");
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
