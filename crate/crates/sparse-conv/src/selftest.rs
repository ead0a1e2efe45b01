//! Seeded invariant suites run by `sparse-conv selftest`.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sparse_conv_core::compaction::{find_good_prime, round_bound, PrimePool};
use sparse_conv_core::poly::{aligned_variant_of_sum, digits};
use sparse_conv_core::scheme::{
    all_variants, build_singleton_table, candidate_assignments, choose_parameters, reduce_v1, required_rows,
};
use sparse_conv_core::{
    brute_convolution, build_scheme, encode_base, evaluate, fast_sparse_convolution, make_variants, EncodingParams,
    EngineConfig, SchemeConfig, SparseVector,
};

use crate::gen::{random_sparse, rng, ValueRange};

#[derive(Debug, Clone)]
pub struct SelftestConfig {
    pub base_seed: u64,
    pub seeds: u64,
    pub sizes: Vec<usize>,
    /// Perturbs fast-path outputs before comparison, to exercise the failure path.
    pub inject_fault: bool,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self {
            base_seed: 0,
            seeds: 3,
            sizes: vec![16, 64],
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub property: String,
    pub seed: u64,
    pub size: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checks: u64,
    pub failure: Option<Failure>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn line(&self) -> String {
        match &self.failure {
            None => format!("PASS {} ({} checks)", self.name, self.checks),
            Some(f) => format!(
                "FAIL {}: {} (seed {}, size {}): {}",
                self.name, f.property, f.seed, f.size, f.detail
            ),
        }
    }
}

type Check = Result<u64, (&'static str, String)>;

fn fail<T>(property: &'static str, detail: impl Into<String>) -> Result<T, (&'static str, String)> {
    Err((property, detail.into()))
}

fn instance_rng(seed: u64, size: usize, suite: u64) -> ChaCha8Rng {
    rng(seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add((size as u64) << 8)
        .wrapping_add(suite))
}

fn encoding(rng: &mut ChaCha8Rng, size: usize) -> Check {
    let mut checks = 0;
    for c in 1..=3u32 {
        let q = sparse_conv_core::prime::next_prime(4 * size as u64 + 5).unwrap();
        let params = EncodingParams::new(q, c).unwrap();
        let cap = params.capacity().min(u64::MAX as u128) as u64;
        for _ in 0..200 {
            let i = rng.gen_range(0..cap);
            let j = rng.gen_range(0..cap - i);
            let (di, dj) = (digits(i, &params).unwrap(), digits(j, &params).unwrap());
            let variants = make_variants(&encode_base(i + j, &params).unwrap(), &params);
            let matching: Vec<u32> = variants
                .iter()
                .filter(|v| {
                    v.integer_coefficients(&params)
                        .iter()
                        .zip(di.iter().zip(&dj))
                        .all(|(&x, (&a, &b))| x == (a + b) as i64)
                })
                .map(|v| v.variant_mask)
                .collect();
            if matching.len() != 1 {
                return fail("alignment", format!("{i}+{j}: {} matching variants", matching.len()));
            }
            if aligned_variant_of_sum(i, j, &params) != Ok(matching[0]) {
                return fail("alignment", format!("{i}+{j}: carry mask disagrees"));
            }
            if variants.iter().any(|v| v.decode(&params) != (i + j) as i128) {
                return fail("decode invariance", format!("index {}", i + j));
            }
            checks += 1;
        }
    }
    Ok(checks)
}

fn collisions(rng: &mut ChaCha8Rng, size: usize) -> Check {
    let mut checks = 0;
    for c in 1..=3u32 {
        let q = sparse_conv_core::prime::next_prime(8 * size as u64 + 5).unwrap();
        for _ in 0..50 {
            let p1: Vec<u64> = (0..=c).map(|_| rng.gen_range(0..q)).collect();
            let mut p2 = p1.clone();
            let k = rng.gen_range(0..=c as usize);
            p2[k] = (p2[k] + rng.gen_range(1..q)) % q;
            let eval = |p: &[u64], a: u64| p.iter().rev().fold(0, |acc, &x| (acc * a + x) % q);
            let equal = (0..q).filter(|&a| eval(&p1, a) == eval(&p2, a)).count();
            if equal > c as usize {
                return fail("collision bound", format!("q={q} c={c}: {equal} equal points"));
            }
            checks += 1;
        }
    }
    Ok(checks)
}

fn index_set(rng: &mut ChaCha8Rng, size: usize) -> SparseVector {
    let length = (size as u64).saturating_pow(3).clamp(size as u64, 1 << 22);
    random_sparse(rng, length, size, ValueRange::signed(9))
}

fn table(rng: &mut ChaCha8Rng, size: usize) -> Check {
    let v1 = index_set(rng, size);
    let params = choose_parameters(v1.max_index().unwrap(), size, &SchemeConfig::default())
        .map_err(|e| ("parameters", e.to_string()))?;
    let rows = required_rows(params.c(), size).unwrap();
    let polys = all_variants(v1.indices(), &params).unwrap();
    let candidates = candidate_assignments(&params, rows).map_err(|e| ("candidates", e.to_string()))?;
    let table = build_singleton_table(&polys, &candidates, &params);
    let bound = params.c() as usize * params.variant_count() * size;
    for col in 0..table.column_count() {
        let f = table.column_false_count(col);
        if f > bound {
            return fail("column false-cell bound", format!("column {col}: {f} > {bound}"));
        }
        if 2 * (table.row_count() - f) < table.row_count() {
            return fail("column half-true", format!("column {col}: {f} false of {}", table.row_count()));
        }
    }
    Ok(table.column_count() as u64)
}

fn scheme(rng: &mut ChaCha8Rng, size: usize) -> Check {
    let v1 = index_set(rng, size);
    let scheme = build_scheme(&v1, &SchemeConfig::default()).map_err(|e| ("scheme", e.to_string()))?;
    if scheme.assignments.len() > scheme.assignment_bound() {
        return fail(
            "assignment bound",
            format!("{} > {}", scheme.assignments.len(), scheme.assignment_bound()),
        );
    }
    let bundles: Vec<_> = (0..scheme.assignments.len())
        .map(|t| reduce_v1(&v1, &scheme, t).unwrap())
        .collect();
    for (p, &t) in scheme.polynomials.iter().zip(&scheme.coverage) {
        let pos = evaluate(p, scheme.assignments[t], &scheme.params) as usize;
        if bundles[t].count[pos] != 1 {
            return fail("coverage", format!("poly {} {}", p.origin_index, p.variant_mask));
        }
    }
    for (t, &a) in scheme.assignments.iter().enumerate() {
        for chunk in scheme.polynomials.chunks(scheme.params.variant_count()) {
            let pos: HashSet<u64> = chunk.iter().map(|p| evaluate(p, a, &scheme.params)).collect();
            if pos.len() != chunk.len() {
                return fail("sibling freedom", format!("assignment ordinal {t}"));
            }
        }
    }
    Ok(scheme.polynomials.len() as u64)
}

fn oracle(rng: &mut ChaCha8Rng, size: usize, inject_fault: bool) -> Check {
    let mut checks = 0;
    for values in [ValueRange::signed(100), ValueRange::positive(100)] {
        let v1 = {
            let length = (size as u64).saturating_pow(3).clamp(size as u64, 1 << 22);
            random_sparse(rng, length, size, values)
        };
        let n2 = rng.gen_range(1..=size.min(64));
        let len2 = rng.gen_range(n2 as u64..=v1.length());
        let v2 = random_sparse(rng, len2, n2, values);
        let scheme_config = SchemeConfig {
            index_bound: v2.max_index(),
            ..SchemeConfig::default()
        };
        let scheme = build_scheme(&v1, &scheme_config).map_err(|e| ("scheme", e.to_string()))?;
        let (mut fast, report) = fast_sparse_convolution(&v1, &v2, &scheme, &EngineConfig::default())
            .map_err(|e| ("fast path", e.to_string()))?;
        if inject_fault {
            let mut entries = fast.entries().to_vec();
            match entries.first_mut() {
                Some(e) => e.1 += 1,
                None => entries.push((0, 1)),
            }
            fast = SparseVector::new(fast.length(), entries).unwrap();
        }
        let naive = brute_convolution(&v1, &v2);
        if let Some((k, f, n)) = sparse_conv_core::engine::first_difference(&fast, &naive) {
            return fail("oracle equivalence", format!("index {k}: fast {f}, naive {n}"));
        }
        if report.total_pairs_accounted() != report.total_pairs {
            return fail("pair accounting", format!("{report:?}"));
        }
        checks += 1;
    }
    Ok(checks)
}

fn compaction(rng: &mut ChaCha8Rng, size: usize, pools: &mut Vec<(usize, PrimePool)>) -> Check {
    let n = size.clamp(2, 64);
    if !pools.iter().any(|(k, _)| *k == n) {
        pools.push((n, PrimePool::for_support(n).map_err(|e| ("pool", e.to_string()))?));
    }
    let pool = &pools.iter().find(|(k, _)| *k == n).unwrap().1;
    let mut indices: Vec<u64> = (0..n).map(|_| rng.gen()).collect();
    indices.sort_unstable();
    indices.dedup();
    let found = find_good_prime(&indices, pool).map_err(|e| ("good prime", e.to_string()))?;
    if pool.len() != n.pow(3) + 1 {
        return fail("pool size", format!("{} primes for n={n}", pool.len()));
    }
    if found.rounds > round_bound(pool.len()) {
        return fail("round bound", format!("{} rounds", found.rounds));
    }
    let residues: HashSet<u64> = indices.iter().map(|i| i % found.p).collect();
    if residues.len() != indices.len() {
        return fail("compaction soundness", format!("p={} divides a difference", found.p));
    }
    Ok(1)
}

pub const SUITES: [&str; 6] = ["encoding", "collisions", "table", "scheme", "oracle", "compaction"];

pub fn run_selftest(config: &SelftestConfig) -> Vec<SuiteResult> {
    let mut pools = Vec::new();
    SUITES
        .iter()
        .enumerate()
        .map(|(tag, &name)| {
            let mut result = SuiteResult {
                name,
                checks: 0,
                failure: None,
            };
            'outer: for seed in config.base_seed..config.base_seed + config.seeds {
                for &size in &config.sizes {
                    let size = size.max(1);
                    let mut rng = instance_rng(seed, size, tag as u64);
                    let outcome = match name {
                        "encoding" => encoding(&mut rng, size),
                        "collisions" => collisions(&mut rng, size),
                        "table" => table(&mut rng, size),
                        "scheme" => scheme(&mut rng, size),
                        "oracle" => oracle(&mut rng, size, config.inject_fault),
                        _ => compaction(&mut rng, size, &mut pools),
                    };
                    match outcome {
                        Ok(n) => result.checks += n,
                        Err((property, detail)) => {
                            result.failure = Some(Failure {
                                property: property.to_string(),
                                seed,
                                size,
                                detail,
                            });
                            break 'outer;
                        }
                    }
                }
            }
            result
        })
        .collect()
}
