//! Command-line front end: certified bound tables, reproducible input
//! generation, single-norm evaluation, accuracy and timing campaigns, and
//! built-in verification suites.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 selftest
//! failure. Every command is deterministic given its flags, input files and
//! seed manifest, except for timing columns. The fork-join worker count
//! comes from the `FNORM_WORKERS` environment variable (default 1); results
//! are bitwise independent of it.

mod io;
mod selftest;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fnorm::bounds::{self, BoundModel, DEFAULT_BITS};
use fnorm::harness::{self, CampaignConfig, Dist, RunRecord};
use fnorm::scalar::AlgorithmKind;
use fnorm::vector::{self, Reduce};
use fnorm::{default_workers, AlgorithmId, HypotKind, Precision, Real, RealArray};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Print one line to stdout. A closed pipe ends the process quietly (so
/// `fnorm ... | head` works); any other write failure is a runtime error.
fn out_line(args: std::fmt::Arguments) {
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = stdout.write_fmt(args).and_then(|()| stdout.write_all(b"\n")) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: writing to stdout: {e}");
        std::process::exit(2);
    }
}

macro_rules! outln {
    ($($t:tt)*) => { crate::out_line(format_args!($($t)*)) };
}

#[derive(Parser)]
#[command(
    name = "fnorm",
    version,
    about = "Reproducible Frobenius-norm computation and verification toolkit",
    long_about = "Reproducible Frobenius-norm computation and verification toolkit.\n\n\
        Worker count is read from FNORM_WORKERS (default 1); computed norms\n\
        are bitwise identical for every worker count, alignment and lane\n\
        width, so reruns can be compared by their hexadecimal bit patterns.\n\n\
        Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 selftest\n\
        failure."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print certified relative-error bounds as CSV rows (lg n, lb, ub)
    Bounds {
        /// Error model: L (iterative fma), C (chained hypot), R (recursive)
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Hypot kernel for the recursive model (--model R only)
        #[arg(long, value_enum)]
        kernel: Option<KernelArg>,
        /// Working precision the bound applies to
        #[arg(long, value_enum)]
        prec: PrecArg,
        /// Emit one row per lg n = 1..=K (0 prints the header only)
        #[arg(long, value_name = "K")]
        max_lg_n: u32,
        /// Evaluation precision in bits
        #[arg(long, default_value_t = DEFAULT_BITS)]
        bits: u32,
    },
    /// Write a deterministic array file and print the seed used
    Gen {
        #[arg(long, value_enum)]
        dist: DistArg,
        /// Element count (at least 1)
        #[arg(long)]
        n: u64,
        /// RNG seed; drawn from the OS when omitted
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        prec: PrecArg,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Compute one norm; print its round-trip decimal and hex bit pattern
    Norm {
        /// Algorithm: L, C, A, B, H, X, Y or Z
        #[arg(long, value_parser = parse_alg)]
        alg: AlgorithmId,
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Lane width (lane algorithms only; must match the algorithm)
        #[arg(long)]
        lanes: Option<usize>,
        /// Cross-lane reduction (lane algorithms only)
        #[arg(long, value_enum)]
        reduce: Option<ReduceArg>,
    },
    /// Run an accuracy campaign against the exact oracle; emit CSV
    Accuracy {
        #[command(flatten)]
        campaign: CampaignArgs,
    },
    /// Time algorithms against the fma baseline L; emit CSV
    Bench {
        #[command(flatten)]
        campaign: CampaignArgs,
        /// Timing repeats per measurement (median is reported)
        #[arg(long, default_value_t = 5)]
        repeats: u32,
    },
    /// Run the built-in verification suites
    Selftest {
        /// Run only the named suites (repeatable); default is all of them
        #[arg(long = "suite", value_name = "NAME")]
        suites: Vec<String>,
        /// Random pairs per precision in the kernel suites
        #[arg(long, default_value_t = 1_000_000)]
        pairs: u64,
        /// Largest array length in the lane-equivalence sweep
        #[arg(long, default_value_t = 4096)]
        max_n: usize,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

#[derive(Args)]
struct CampaignArgs {
    /// Comma-separated algorithms, e.g. L,A,Z
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_alg)]
    algs: Vec<AlgorithmId>,
    /// Runs per distribution (t = 1..=T)
    #[arg(long, value_name = "T")]
    runs: u32,
    /// Elements per array
    #[arg(long)]
    n: u64,
    #[arg(long, value_enum)]
    dist: DistArg,
    #[arg(long, value_enum)]
    prec: PrecArg,
    /// Seed manifest; missing entries are drawn from the OS and appended
    #[arg(long, value_name = "FILE")]
    manifest: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    #[value(name = "L", alias = "l")]
    L,
    #[value(name = "C", alias = "c")]
    C,
    #[value(name = "R", alias = "r")]
    R,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    /// Correctly rounded hypot
    Cr,
    /// Branch-free hypot
    Bf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecArg {
    #[value(name = "s", alias = "single")]
    S,
    #[value(name = "d", alias = "double")]
    D,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    #[value(name = "uniform01", alias = "uniform")]
    Uniform01,
    #[value(name = "normal01", alias = "normal")]
    Normal01,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReduceArg {
    Scalar,
    Tree,
}

impl From<ModelArg> for BoundModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::L => BoundModel::L,
            ModelArg::C => BoundModel::C,
            ModelArg::R => BoundModel::R,
        }
    }
}

impl From<KernelArg> for HypotKind {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Cr => HypotKind::CorrectRounded,
            KernelArg::Bf => HypotKind::BranchFree,
        }
    }
}

impl From<PrecArg> for Precision {
    fn from(p: PrecArg) -> Self {
        match p {
            PrecArg::S => Precision::Single,
            PrecArg::D => Precision::Double,
        }
    }
}

impl From<DistArg> for Dist {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::Uniform01 => Dist::Uniform01,
            DistArg::Normal01 => Dist::Normal01,
        }
    }
}

impl From<ReduceArg> for Reduce {
    fn from(r: ReduceArg) -> Self {
        match r {
            ReduceArg::Scalar => Reduce::Scalar,
            ReduceArg::Tree => Reduce::Tree,
        }
    }
}

fn parse_alg(s: &str) -> Result<AlgorithmId, String> {
    s.parse()
}

enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
    Selftest(Vec<String>),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
        Err(CliError::Selftest(names)) => {
            eprintln!("selftest failed: {}", names.join(", "));
            std::process::exit(3);
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Bounds { model, kernel, prec, max_lg_n, bits } => {
            cmd_bounds(model.into(), kernel.map(Into::into), prec.into(), max_lg_n, bits)
        }
        Cmd::Gen { dist, n, seed, prec, out } => {
            cmd_gen(dist.into(), n, seed, prec.into(), &out)
        }
        Cmd::Norm { alg, input, lanes, reduce } => {
            cmd_norm(alg, &input, lanes, reduce.map(Into::into))
        }
        Cmd::Accuracy { campaign } => cmd_campaign(&campaign, None),
        Cmd::Bench { campaign, repeats } => cmd_campaign(&campaign, Some(repeats)),
        Cmd::Selftest { suites, pairs, max_n, inject_fault } => {
            cmd_selftest(&suites, pairs, max_n, inject_fault)
        }
    }
}

fn cmd_bounds(
    model: BoundModel,
    kernel: Option<HypotKind>,
    precision: Precision,
    max_lg_n: u32,
    bits: u32,
) -> Result<(), CliError> {
    if !(64..=65536).contains(&bits) {
        return Err(CliError::Usage(format!(
            "--bits {bits} is outside the supported range 64..=65536"
        )));
    }
    if max_lg_n > 62 {
        return Err(CliError::Usage("--max-lg-n must be at most 62".into()));
    }
    let kernel = match (model, kernel) {
        (BoundModel::R, k) => k.unwrap_or(HypotKind::CorrectRounded),
        (_, None) => HypotKind::CorrectRounded,
        (_, Some(_)) => {
            return Err(CliError::Usage(
                "--kernel applies only to --model R; the chained model is defined over the \
                 correctly rounded kernel and the fma model uses none"
                    .into(),
            ));
        }
    };
    let eps = bounds::eps_for(precision, bits);
    // The branch-free envelope is slightly asymmetric; its upper deviation
    // is the larger side, so using it for both directions keeps the lower
    // bound valid too.
    let eps_prime = match kernel {
        HypotKind::CorrectRounded => eps.clone(),
        HypotKind::BranchFree => {
            bounds::hypot_eps_envelope(HypotKind::BranchFree, &eps).unwrap().1
        }
        HypotKind::Native => unreachable!("no CLI flag maps to the native kernel"),
    };
    outln!("lg_n,lb,ub");
    for k in 1..=max_lg_n {
        let n = 1u64 << k;
        let pair = match model {
            BoundModel::L => bounds::bounds_l(n, &eps),
            BoundModel::C => bounds::bounds_c(n, &eps, &eps_prime),
            BoundModel::R => bounds::bounds_r(n, &eps, &eps_prime),
        };
        outln!(
            "{k},{},{}",
            pair.lb_relerr().to_decimal_sig18(),
            pair.ub_relerr().to_decimal_sig18()
        );
    }
    Ok(())
}

fn cmd_gen(
    dist: Dist,
    n: u64,
    seed: Option<u64>,
    precision: Precision,
    out: &Path,
) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let n = usize::try_from(n)
        .map_err(|_| CliError::Usage(format!("--n {n} does not fit this platform")))?;
    let seed = seed.unwrap_or_else(harness::os_seed);
    match precision {
        Precision::Single => io::write_array(out, &harness::gen_array::<f32>(dist, n, seed))?,
        Precision::Double => io::write_array(out, &harness::gen_array::<f64>(dist, n, seed))?,
    }
    outln!("seed {seed}");
    Ok(())
}

fn cmd_norm(
    alg: AlgorithmId,
    input: &Path,
    lanes: Option<usize>,
    reduce: Option<Reduce>,
) -> Result<(), CliError> {
    let workers = default_workers();
    match io::read_array(input)? {
        io::LoadedArray::Single(arr) => norm_line(alg, &arr, lanes, reduce, workers),
        io::LoadedArray::Double(arr) => norm_line(alg, &arr, lanes, reduce, workers),
    }
}

fn norm_line<R: Real>(
    alg: AlgorithmId,
    arr: &RealArray<R>,
    lanes: Option<usize>,
    reduce: Option<Reduce>,
    workers: usize,
) -> Result<(), CliError> {
    let result = if matches!(alg.kind(), AlgorithmKind::LaneParallel) {
        let native = alg.lanes(R::PRECISION);
        if let Some(l) = lanes {
            if l != native {
                return Err(CliError::Usage(format!(
                    "algorithm {alg} runs {native} lanes in {} precision, not {l}",
                    R::PRECISION
                )));
            }
        }
        vector::nrmf(arr, native, reduce.unwrap_or(Reduce::Scalar), workers)
    } else {
        if lanes.is_some() || reduce.is_some() {
            return Err(CliError::Usage(format!(
                "--lanes and --reduce apply only to the lane algorithms X, Y and Z \
                 (algorithm {alg} is scalar)"
            )));
        }
        fnorm::evaluate(alg, arr, workers)
    };
    outln!("{result} {}", result.hex_bits());
    Ok(())
}

fn dedup_algorithms(algs: &[AlgorithmId], force_baseline: bool) -> Vec<AlgorithmId> {
    let mut out = Vec::new();
    if force_baseline {
        out.push(AlgorithmId::L);
    }
    for &a in algs {
        if !out.contains(&a) {
            out.push(a);
        }
    }
    out
}

fn csv_prefix(rec: &RunRecord) -> String {
    format!(
        "{},{},{},{},{},{},{:.9},{},{}",
        rec.t,
        rec.dist,
        rec.alg,
        rec.precision,
        rec.n,
        rec.lanes,
        rec.seconds,
        rec.relerr_ulps,
        rec.result_hex()
    )
}

/// Shared body of `accuracy` and `bench`: `repeats` selects bench mode,
/// which adds the slowdown/speedup columns against the fma baseline `L`.
fn cmd_campaign(args: &CampaignArgs, repeats: Option<u32>) -> Result<(), CliError> {
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let n = usize::try_from(args.n)
        .map_err(|_| CliError::Usage(format!("--n {} does not fit this platform", args.n)))?;
    if let Some(r) = repeats {
        if r == 0 {
            return Err(CliError::Usage("--repeats must be at least 1".into()));
        }
    }
    let bench = repeats.is_some();
    let cfg = CampaignConfig {
        algorithms: dedup_algorithms(&args.algs, bench),
        runs: args.runs,
        n,
        dists: vec![args.dist.into()],
        workers: default_workers(),
        timing_repeats: repeats.unwrap_or(1),
    };
    let records = match args.prec.into() {
        Precision::Single => harness::run_campaign::<f32>(&cfg, &args.manifest),
        Precision::Double => harness::run_campaign::<f64>(&cfg, &args.manifest),
    }
    .map_err(anyhow::Error::from)?;
    if bench {
        outln!("t,dist,alg,prec,n,lanes,seconds,relerr_ulps,result_hex,slowdown,speedup");
        // The baseline record leads each (t, dist) group because L leads
        // the algorithm list.
        let mut l_seconds = f64::NAN;
        for rec in &records {
            if rec.alg == AlgorithmId::L {
                l_seconds = rec.seconds;
            }
            let (slowdown, speedup) = harness::speed_ratios(rec.seconds, l_seconds);
            outln!("{},{slowdown},{speedup}", csv_prefix(rec));
        }
    } else {
        outln!("t,dist,alg,prec,n,lanes,seconds,relerr_ulps,result_hex");
        for rec in &records {
            outln!("{}", csv_prefix(rec));
        }
    }
    Ok(())
}

fn cmd_selftest(
    suites: &[String],
    pairs: u64,
    max_n: usize,
    inject_fault: bool,
) -> Result<(), CliError> {
    for s in suites {
        if !selftest::SUITES.contains(&s.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown suite `{s}` (expected one of: {})",
                selftest::SUITES.join(", ")
            )));
        }
    }
    if pairs == 0 || max_n == 0 {
        return Err(CliError::Usage("--pairs and --max-n must be at least 1".into()));
    }
    let opts = selftest::Options { pairs, max_n, inject_fault, workers: default_workers() };
    let failed = selftest::run(suites, &opts, |line| outln!("{line}"));
    if failed.is_empty() {
        outln!("selftest: all suites passed");
        Ok(())
    } else {
        Err(CliError::Selftest(failed))
    }
}
