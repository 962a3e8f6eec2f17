use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::rngs::StdRng;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use fuzzylink::analysis::{
    linear_map_probability, log2, ratio_string, sphere_packing_density, to_f64, union_bound_linkage, BigRational,
    DensityQuery,
};
use fuzzylink::attacks::{attack_records, AttackOptions, ScanMode, DEFAULT_MAX_COSET};
use fuzzylink::commitment::{
    enroll, vector_from_json, vector_to_json, verify, EnrollOptions, HashAlg, Record, Verification,
};
use fuzzylink::experiments::{
    appendix_demo, run_table1, write_report, ExperimentConfig, RelatedSampling, ReportFormat, TrialMode,
};
use fuzzylink::transforms::{
    enumerate_distance_preserving_bijections, random_transform, TransformDescriptor, TransformKind,
};
use fuzzylink::{CodeDescriptor, Field, FieldVector};

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

/// `println!` that reports a closed stdout as an error instead of panicking.
macro_rules! emit {
    ($($arg:tt)*) => {
        writeln!(io::stdout().lock(), $($arg)*)?
    };
}

fn is_broken_pipe(e: &(dyn std::error::Error + 'static)) -> bool {
    e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
}

#[derive(Parser)]
#[command(name = "fuzzylink", version, about = "Fuzzy commitments with public transforms, and linkage attacks on them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect error-correcting codes.
    #[command(subcommand)]
    Code(CodeCommand),
    /// Commit to a feature vector and write the record.
    Enroll(EnrollArgs),
    /// Check a reading against a record. Exit 0 on accept, 1 on reject.
    Verify(VerifyArgs),
    /// Linkage attacks on published records.
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Monte Carlo experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Closed-form rates as exact rationals.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Enumerate the Hamming isometries of {0,1}^n and check that each is P v + s.
    VerifyTheorem {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        n: u8,
    },
    /// Walkthrough scenarios.
    #[command(subcommand)]
    Demo(DemoCommand),
}

#[derive(Subcommand)]
enum CodeCommand {
    /// Print n, k, d, the decoding radius and the sphere packing density.
    Info {
        spec: CodeDescriptor,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Args)]
struct EnrollArgs {
    #[arg(long)]
    code: CodeDescriptor,
    /// Feature vector: hex over GF(2), comma-separated or a JSON array
    /// otherwise; `@path` reads it from a file.
    #[arg(long, conflicts_with = "random_w", required_unless_present = "random_w")]
    w: Option<String>,
    /// Draw w uniformly at random instead.
    #[arg(long)]
    random_w: bool,
    /// Where to write a randomly drawn w.
    #[arg(long, requires = "random_w")]
    w_out: Option<PathBuf>,
    /// Transform family; its parameters are drawn at random.
    #[arg(long, default_value = "bit-permutation", conflicts_with = "transform_file")]
    transform: TransformKind,
    /// JSON transform descriptor to use instead of a random one.
    #[arg(long)]
    transform_file: Option<PathBuf>,
    /// Publish a hash of the codeword.
    #[arg(long)]
    hash: Option<HashAlg>,
    /// Random flips of T(w) before committing (GF(2) only).
    #[arg(long, default_value_t = 0)]
    noise: usize,
    #[command(flatten)]
    rng: RngArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RngArgs {
    /// Seed for the ChaCha8 generator; without it the OS supplies one.
    #[arg(long)]
    seed: Option<u64>,
}

impl RngArgs {
    fn rng(&self) -> Box<dyn RngCore> {
        match self.seed {
            Some(s) => Box::new(ChaCha8Rng::seed_from_u64(s)),
            None => Box::new(StdRng::from_os_rng()),
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    record: PathBuf,
    /// Reading, in the same encoding as `enroll --w`.
    #[arg(long)]
    w: String,
}

#[derive(Subcommand)]
enum AttackCommand {
    /// Run the strongest applicable attack on two records and print the
    /// outcome as JSON. Exit 0 when related, 1 when not.
    Pair {
        rec1: PathBuf,
        rec2: PathBuf,
        /// Weight bound on the error pattern.
        #[arg(long)]
        b: usize,
        /// Filter solutions with the records' codeword hashes.
        #[arg(long)]
        hash: bool,
        /// Count every passing pattern instead of stopping at the first.
        #[arg(long)]
        all_hits: bool,
        /// Solutions tried against the hashes per passing pattern.
        #[arg(long, default_value_t = DEFAULT_MAX_COSET)]
        max_coset: u128,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Linkage and recovery rates per (b, mode) cell.
    Table1(Table1Args),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Related,
    NonRelated,
    Both,
}

#[derive(Args)]
struct Table1Args {
    #[arg(long)]
    code: CodeDescriptor,
    /// Comma-separated weight bounds.
    #[arg(long, value_delimiter = ',', required = true)]
    b: Vec<usize>,
    #[arg(long, default_value_t = 5000)]
    trials: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
    /// Report path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    threads: Option<usize>,
    /// How related pairs are drawn: exact-weight or uniform-ball.
    #[arg(long, default_value = "exact-weight")]
    sampling: RelatedSampling,
    #[arg(long, default_value = "bit-permutation")]
    transform: TransformKind,
    /// Enroll with codeword hashes and let the attack use them.
    #[arg(long)]
    hash: bool,
    /// Enrollment noise flips per record.
    #[arg(long, default_value_t = 0)]
    noise: usize,
    /// Run cells above the pattern-count guardrail.
    #[arg(long)]
    force: bool,
    /// Leave out attack timings, making reports reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
    /// Draw every trial from OS randomness. Results are not reproducible.
    #[arg(long)]
    secure_rng: bool,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// q^(k-n) |B(radius)|: the chance a random offset decodes.
    Density {
        #[arg(long, default_value_t = 2)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Minimum distance; the radius is floor((d-1)/2).
        #[arg(long, required_unless_present = "radius", conflicts_with = "radius")]
        d: Option<usize>,
        #[arg(long)]
        radius: Option<usize>,
    },
    /// min(1, q^(rank-n) B): upper bound on false links at weight bound b.
    UnionBound {
        #[arg(long, default_value_t = 2)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        b: usize,
    },
    /// 1/(q-2)!: the chance a random bijection of GF(q) is affine.
    LinearProb {
        #[arg(long)]
        q: u32,
    },
}

#[derive(Subcommand)]
enum DemoCommand {
    /// Two records under bch:127:15 with random bit permutations, attacked
    /// with b = hw.
    Appendix {
        #[arg(long, default_value_t = 4)]
        hw: usize,
        /// Use independent feature vectors.
        #[arg(long)]
        non_related: bool,
        /// Skip the hash filter.
        #[arg(long)]
        no_hash: bool,
        #[arg(long, conflicts_with = "seed")]
        secure_rng: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) if is_broken_pipe(e.as_ref()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Code(CodeCommand::Info { spec, format }) => code_info(&spec, format),
        Command::Enroll(args) => enroll_cmd(args),
        Command::Verify(args) => verify_cmd(args),
        Command::Attack(AttackCommand::Pair { rec1, rec2, b, hash, all_hits, max_coset, threads }) => {
            let r1 = read_record(&rec1)?;
            let r2 = read_record(&rec2)?;
            if r1.code != r2.code {
                return Err(format!("records use different codes ({} and {})", r1.code, r2.code).into());
            }
            let code = r1.build_code()?;
            r1.check(&code)?;
            r2.check(&code)?;
            let mut opts = AttackOptions::new(b);
            opts.mode = if all_hits { ScanMode::AllHits } else { ScanMode::FirstHit };
            opts.max_coset = max_coset;
            opts.parallel = threads > 1;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build()?;
            let (strategy, outcome) = pool.install(|| attack_records(&code, &r1, &r2, hash, &opts))?;
            let mut value = outcome.to_json();
            value["strategy"] = serde_json::to_value(strategy)?;
            emit!("{}", serde_json::to_string_pretty(&value)?);
            Ok(if outcome.is_related() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Experiment(ExperimentCommand::Table1(args)) => table1(args),
        Command::Analyze(cmd) => analyze(cmd),
        Command::VerifyTheorem { n } => {
            let all = enumerate_distance_preserving_bijections(n.into())?;
            let failing = all.iter().filter(|iso| !iso.decomposes()).count();
            if failing == 0 {
                emit!("{} distance-preserving bijections; all decompose as P·v ⊕ s", all.len());
                Ok(ExitCode::SUCCESS)
            } else {
                emit!("{} distance-preserving bijections; {failing} do not decompose as P·v ⊕ s", all.len());
                Ok(ExitCode::from(1))
            }
        }
        Command::Demo(DemoCommand::Appendix { hw, non_related, no_hash, secure_rng, seed }) => {
            let mut rng: Box<dyn RngCore> =
                if secure_rng { Box::new(StdRng::from_os_rng()) } else { RngArgs { seed }.rng() };
            let result = appendix_demo(hw, !non_related, !no_hash, &mut rng)?;
            emit!("{result}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn code_info(spec: &CodeDescriptor, format: OutputFormat) -> Result<ExitCode> {
    let code = spec.build()?;
    let q = code.field().order();
    let density = sphere_packing_density(&DensityQuery::from_distance(q, code.n(), code.k(), code.d())?);
    match format {
        OutputFormat::Text => emit!(
            "n={} k={} d={} t={} density={} ({:.6})",
            code.n(),
            code.k(),
            code.d(),
            code.radius(),
            ratio_string(&density),
            to_f64(&density)
        ),
        OutputFormat::Json => emit!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "code": spec.to_string(),
                "q": q,
                "n": code.n(),
                "k": code.k(),
                "d": code.d(),
                "t": code.radius(),
                "density": rational_json(&density),
                "generator_polynomial": code.bch_params().map(|p| p.generator_polynomial.clone()),
            }))?
        ),
    }
    Ok(ExitCode::SUCCESS)
}

fn rational_json(x: &BigRational) -> serde_json::Value {
    json!({ "exact": ratio_string(x), "value": to_f64(x), "log2": log2(x) })
}

/// Parses a vector argument: hex over GF(2), a JSON array, or a
/// comma-separated list; `@path` reads the text from a file.
fn parse_vector(field: &Field, n: usize, text: &str) -> Result<FieldVector> {
    let owned;
    let text = match text.strip_prefix('@') {
        Some(path) => {
            owned = fs::read_to_string(path)?;
            owned.trim()
        }
        None => text.trim(),
    };
    // `--w-out` writes the record encoding, a JSON string over GF(2).
    let unquoted;
    let text = if text.starts_with('"') {
        unquoted = serde_json::from_str::<String>(text)?;
        unquoted.as_str()
    } else {
        text
    };
    let elems: Vec<u16> = if text.starts_with('[') {
        serde_json::from_str(text)?
    } else if text.contains(',') || (!field.is_binary() && !text.is_empty()) {
        text.split(',').map(|s| s.trim().parse::<u16>()).collect::<std::result::Result<_, _>>()?
    } else {
        return Ok(vector_from_json(field, n, &serde_json::Value::String(text.to_string()))?);
    };
    if elems.len() != n {
        return Err(format!("vector has {} entries, the code has length {n}", elems.len()).into());
    }
    Ok(FieldVector::from_elems(field, elems)?)
}

fn read_record(path: &Path) -> Result<Record> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Record::from_json(&text).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn enroll_cmd(args: EnrollArgs) -> Result<ExitCode> {
    let code = args.code.build()?;
    let field = code.field();
    let n = code.n();
    let mut rng = args.rng.rng();
    let w = match &args.w {
        Some(text) => parse_vector(field, n, text)?,
        None => {
            let w = FieldVector::random(field, n, &mut rng);
            if let Some(path) = &args.w_out {
                fs::write(path, format!("{}\n", vector_to_json(&w)))?;
            }
            w
        }
    };
    let transform = match &args.transform_file {
        Some(path) => {
            let t: TransformDescriptor = serde_json::from_str(&fs::read_to_string(path)?)?;
            t.validate(n, field)?;
            t
        }
        None => random_transform(args.transform, n, field, &mut rng),
    };
    let options = EnrollOptions { hash: args.hash, noise_flips: args.noise };
    let record = enroll(&w, &code, &transform, options, &mut rng)?;
    write_output(args.out.as_deref(), &format!("{}\n", record.to_json()))?;
    Ok(ExitCode::SUCCESS)
}

fn verify_cmd(args: VerifyArgs) -> Result<ExitCode> {
    let record = read_record(&args.record)?;
    let code = record.build_code()?;
    let w = parse_vector(code.field(), code.n(), &args.w)?;
    let (accepted, value) = match verify(&record, &code, &w)? {
        Verification::Accept { codeword, hash_checked } => {
            (true, json!({ "result": "accept", "hash_checked": hash_checked, "codeword": vector_to_json(&codeword) }))
        }
        Verification::Reject => (false, json!({ "result": "reject" })),
    };
    emit!("{value}");
    Ok(if accepted { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn table1(args: Table1Args) -> Result<ExitCode> {
    let modes = match args.mode {
        ModeArg::Related => vec![TrialMode::Related],
        ModeArg::NonRelated => vec![TrialMode::NonRelated],
        ModeArg::Both => vec![TrialMode::Related, TrialMode::NonRelated],
    };
    let mut config = ExperimentConfig::new(&args.code.to_string(), args.b, args.trials, modes, args.seed);
    config.related_sampling = args.sampling;
    config.transform = args.transform;
    config.with_hash = args.hash;
    config.noise_z = args.noise;
    config.force = args.force;
    config.timing = !args.no_timing;
    config.secure_rng = args.secure_rng;
    let threads = args.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
    let report = run_table1(&config, threads)?;
    let mut buf = Vec::new();
    write_report(&report, args.format, &mut buf)?;
    write_output(args.out.as_deref(), std::str::from_utf8(&buf)?)?;
    Ok(ExitCode::SUCCESS)
}

fn analyze(cmd: AnalyzeCommand) -> Result<ExitCode> {
    let value = match cmd {
        AnalyzeCommand::Density { q, n, k, d, radius } => {
            let query = match (d, radius) {
                (Some(d), _) => DensityQuery::from_distance(q, n, k, d)?,
                (None, Some(r)) => DensityQuery::with_radius(q, n, k, r)?,
                (None, None) => unreachable!("clap requires one of --d and --radius"),
            };
            let x = sphere_packing_density(&query);
            json!({ "q": q, "n": n, "k": k, "radius": query.radius, "density": rational_json(&x) })
        }
        AnalyzeCommand::UnionBound { q, n, rank, b } => {
            let x = union_bound_linkage(q, n, rank, b)?;
            json!({ "q": q, "n": n, "rank": rank, "b": b, "bound": rational_json(&x) })
        }
        AnalyzeCommand::LinearProb { q } => {
            let x = linear_map_probability(q)?;
            json!({ "q": q, "probability": rational_json(&x) })
        }
    };
    emit!("{}", serde_json::to_string_pretty(&value)?);
    Ok(ExitCode::SUCCESS)
}
