use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sparse_conv_core::compaction::{compact, union_support, PrimePool};
use sparse_conv_core::{build_scheme, EngineConfig, EngineError, Mode, SchemeConfig, SchemeError, SparseVector};

use sparse_conv::bench::{run_bench, BenchConfig};
use sparse_conv::format::{read_sparse_vector, serialize_sparse_vector, write_atomic};
use sparse_conv::gen::ValueRange;
use sparse_conv::report::{compaction_report, run_report, scheme_dump};
use sparse_conv::run::run_convolution;
use sparse_conv::selftest::{run_selftest, SelftestConfig};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  usage, I/O or parse error
  2  verify mode: fast and naive outputs differ
  3  engine error: input outside the supported bounds or no usable parameters
  4  selftest failure";

#[derive(Parser)]
#[command(name = "sparse-conv", version, about = "Deterministic sparse convolution", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Naive,
    Fast,
    Verify,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Naive => Mode::Naive,
            ModeArg::Fast => Mode::Fast,
            ModeArg::Verify => Mode::Verify,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ValuesArg {
    Signed,
    Positive,
}

#[derive(clap::Args)]
struct Forced {
    /// Debug: force the reduced length q (a prime, needs --force-c)
    #[arg(long, requires = "force_c")]
    force_q: Option<u64>,
    /// Debug: force the degree bound c (needs --force-q)
    #[arg(long, requires = "force_q")]
    force_c: Option<u32>,
}

impl Forced {
    fn scheme_config(&self) -> SchemeConfig {
        SchemeConfig {
            forced: self.force_q.zip(self.force_c),
            ..SchemeConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Convolve two vectors: W[k] = sum_i V1[k+i] * V2[i]
    #[command(after_help = EXIT_CODES)]
    Conv {
        #[arg(long)]
        v1: PathBuf,
        #[arg(long)]
        v2: PathBuf,
        /// Output vector (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run report as key: value lines
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "fast")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Largest accepted |value|
        #[arg(long, default_value_t = 1 << 20)]
        value_bound: u64,
        #[command(flatten)]
        forced: Forced,
    },
    /// Print the reduction scheme built for a vector
    #[command(after_help = EXIT_CODES)]
    Reduce {
        #[arg(long)]
        v1: PathBuf,
        /// Second vector whose indices must also be encodable
        #[arg(long)]
        v2: Option<PathBuf>,
        /// Dump destination (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        forced: Forced,
    },
    /// Reduce both vectors' indices modulo a prime that keeps them distinct
    #[command(after_help = EXIT_CODES)]
    Compact {
        #[arg(long)]
        v1: PathBuf,
        #[arg(long)]
        v2: PathBuf,
        /// Compacted first vector
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compacted second vector
        #[arg(long)]
        out_v2: Option<PathBuf>,
        /// Compaction report (stdout when absent)
        #[arg(long)]
        report: Option<PathBuf>,
        /// Debug: comma-separated prime pool instead of the computed one
        #[arg(long, value_delimiter = ',')]
        debug_pool: Option<Vec<u64>>,
        /// Largest union support accepted without --debug-pool
        #[arg(long, default_value_t = 128)]
        max_support: usize,
    },
    /// Run the seeded invariant suites
    #[command(after_help = EXIT_CODES)]
    Selftest {
        /// First seed of the stream
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of seeds
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        /// Comma-separated instance sizes (non-zero counts)
        #[arg(long, value_delimiter = ',', default_value = "16,64")]
        sizes: Vec<usize>,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Time the naive, dense-transform and fast paths on generated instances
    #[command(after_help = EXIT_CODES)]
    Bench {
        #[arg(long)]
        n1: usize,
        /// Length N1 of the first vector (or give --density)
        #[arg(long, conflicts_with = "density")]
        len1: Option<u64>,
        /// n1 / N1
        #[arg(long)]
        density: Option<f64>,
        #[arg(long)]
        n2: usize,
        /// Length N2 of the second vector (defaults to N1)
        #[arg(long)]
        len2: Option<u64>,
        #[arg(long, value_enum, default_value = "signed")]
        values: ValuesArg,
        /// Largest generated |value|
        #[arg(long, default_value_t = 100)]
        magnitude: i64,
        #[arg(long, default_value_t = 5)]
        repetitions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Engine(EngineError),
    Mismatch(String),
    Selftest(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Engine(EngineError::VerifyMismatch { .. }) | Failure::Mismatch(_) => 2,
            Failure::Engine(_) => 3,
            Failure::Selftest(_) => 4,
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        Failure::Engine(e)
    }
}

fn read_vector(path: &Path) -> Result<SparseVector, Failure> {
    let file = File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    read_sparse_vector(file).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write_atomic(p, contents.as_bytes())
            .map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn conv(
    v1: &Path,
    v2: &Path,
    out: Option<&Path>,
    report: Option<&Path>,
    mode: Mode,
    threads: usize,
    value_bound: u64,
    forced: &Forced,
) -> Result<(), Failure> {
    let (v1, v2) = (read_vector(v1)?, read_vector(v2)?);
    let config = EngineConfig {
        value_bound,
        scheme: forced.scheme_config(),
        ..EngineConfig::default()
    };
    let outcome = run_convolution(&v1, &v2, mode, &config, threads)?;
    if let Some(c) = &outcome.compaction {
        eprintln!(
            "note: indices were compacted modulo {}; output indices are in the compacted space",
            c.p
        );
    }
    if let Some(path) = report {
        write_output(Some(path), &run_report(&v1, &v2, &outcome).render())?;
    }
    write_output(out, &serialize_sparse_vector(&outcome.output))
}

fn reduce(v1: &Path, v2: Option<&Path>, out: Option<&Path>, forced: &Forced) -> Result<(), Failure> {
    let v1 = read_vector(v1)?;
    if v1.is_empty() {
        return Err(Failure::Usage("no non-zeros in --v1".into()));
    }
    let mut config = forced.scheme_config();
    if let Some(p) = v2 {
        config.index_bound = read_vector(p)?.max_index();
    }
    let scheme = build_scheme(&v1, &config).map_err(|e| match e {
        SchemeError::NoParameters { .. } => Failure::Engine(EngineError::Scheme(e)),
        e => Failure::Usage(e.to_string()),
    })?;
    write_output(out, &scheme_dump(&scheme))
}

#[allow(clippy::too_many_arguments)]
fn compact_cmd(
    v1: &Path,
    v2: &Path,
    out: Option<&Path>,
    out_v2: Option<&Path>,
    report: Option<&Path>,
    debug_pool: Option<Vec<u64>>,
    max_support: usize,
) -> Result<(), Failure> {
    let (v1, v2) = (read_vector(v1)?, read_vector(v2)?);
    let support = union_support(&v1, &v2).len();
    let pool = match debug_pool {
        Some(primes) => PrimePool::from_primes(primes).map_err(|e| Failure::Usage(e.to_string()))?,
        None if support > max_support => {
            return Err(EngineError::CompactionTooLarge {
                support,
                cap: max_support,
            }
            .into())
        }
        None => PrimePool::for_support(support.max(2)).map_err(EngineError::from)?,
    };
    let (c1, c2, result) = compact(&v1, &v2, &pool).map_err(EngineError::from)?;
    let mut residues: Vec<u64> = result.index_map.iter().map(|&(_, r)| r).collect();
    residues.sort_unstable();
    residues.dedup();
    let injective = residues.len() == result.index_map.len();
    if let Some(p) = out {
        write_output(Some(p), &serialize_sparse_vector(&c1))?;
    }
    if let Some(p) = out_v2 {
        write_output(Some(p), &serialize_sparse_vector(&c2))?;
    }
    write_output(report, &compaction_report(&result, injective).render())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Conv {
            v1,
            v2,
            out,
            report,
            mode,
            threads,
            value_bound,
            forced,
        } => conv(
            &v1,
            &v2,
            out.as_deref(),
            report.as_deref(),
            mode.into(),
            threads,
            value_bound,
            &forced,
        ),
        Command::Reduce { v1, v2, out, forced } => reduce(&v1, v2.as_deref(), out.as_deref(), &forced),
        Command::Compact {
            v1,
            v2,
            out,
            out_v2,
            report,
            debug_pool,
            max_support,
        } => compact_cmd(
            &v1,
            &v2,
            out.as_deref(),
            out_v2.as_deref(),
            report.as_deref(),
            debug_pool,
            max_support,
        ),
        Command::Selftest {
            seed,
            seeds,
            sizes,
            inject_fault,
        } => {
            let results = run_selftest(&SelftestConfig {
                base_seed: seed,
                seeds,
                sizes,
                inject_fault,
            });
            for r in &results {
                println!("{}", r.line());
            }
            match results.iter().find(|r| !r.passed()) {
                Some(r) => Err(Failure::Selftest(r.line())),
                None => Ok(()),
            }
        }
        Command::Bench {
            n1,
            len1,
            density,
            n2,
            len2,
            values,
            magnitude,
            repetitions,
            seed,
            threads,
            report,
        } => {
            let len1 = match (len1, density) {
                (Some(l), _) => l,
                (None, Some(d)) if d > 0.0 && d <= 1.0 => (n1 as f64 / d).ceil() as u64,
                (None, Some(d)) => return Err(Failure::Usage(format!("density {d} is not in (0, 1]"))),
                (None, None) => return Err(Failure::Usage("give --len1 or --density".into())),
            };
            let len2 = len2.unwrap_or(len1);
            if n1 as u64 > len1 || n2 as u64 > len2 || magnitude < 1 {
                return Err(Failure::Usage(
                    "non-zero counts must fit the lengths and --magnitude must be positive".into(),
                ));
            }
            let values = match values {
                ValuesArg::Signed => ValueRange::signed(magnitude),
                ValuesArg::Positive => ValueRange::positive(magnitude),
            };
            let result = run_bench(&BenchConfig {
                n1,
                len1,
                n2,
                len2,
                values,
                repetitions,
                seed,
                threads,
                engine: EngineConfig::default(),
            })?;
            let summary = result.summary().render();
            if let Some(p) = &report {
                write_output(Some(p), &summary)?;
            } else {
                print!("{summary}");
            }
            print!("{}", result.table());
            if result.agree {
                Ok(())
            } else {
                Err(Failure::Mismatch("bench paths produced different outputs".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) | Failure::Mismatch(m) => eprintln!("error: {m}"),
                Failure::Engine(e) => eprintln!("error: {e}"),
                Failure::Selftest(m) => eprintln!("selftest failed: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
