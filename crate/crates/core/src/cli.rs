//! Command-line front end. Exit codes: 0 success, 1 failed operation or
//! verification, 2 usage error or malformed input.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::bench::{self, ExperimentConfig, Suite};
use crate::bitstream::Message;
use crate::coders::{decode, CoderSpec, DEFAULT_PFR_MAX_STEPS};
use crate::distributions::{Distribution1D, PairSpec};
use crate::error::Error;
use crate::isokl::{self, BlockCodecConfig, BlockModel};

#[derive(Debug, Parser)]
#[command(
    name = "astar-rec",
    version,
    about = "A* coding for relative entropy coding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode samples of the model's targets into a binary message.
    Encode(EncodeArgs),
    /// Decode a binary message back into samples.
    Decode(DecodeArgs),
    /// Steps and codelength over a grid of pairs (CSV).
    BenchRuntime(BenchArgs),
    /// Bias and steps of the approximate coders against extra bits (CSV).
    BenchBias(BenchArgs),
    /// Steps against the number of target modes at fixed D_inf (CSV).
    BenchModes(BenchArgs),
    /// Run property checks; exits 1 if any fails.
    Verify(VerifyArgs),
    /// Build a target distribution from IsoKL parameters and print the pair JSON.
    Isokl(IsoklArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExactCoder {
    As,
    Ad,
    Pfr,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Pair JSON, a JSON array of pairs, or a block model.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Exact coder.
    #[arg(long, value_enum, conflicts_with_all = ["dad", "mrc"])]
    pub exact: Option<ExactCoder>,
    /// Depth-limited AD* with this many bits per sample.
    #[arg(long, conflicts_with = "mrc")]
    pub dad: Option<u32>,
    /// Minimal random coding with this many bits per sample.
    #[arg(long)]
    pub mrc: Option<u32>,
    /// Bits above each block's KL (block models only).
    #[arg(long, default_value_t = 2)]
    pub extra_bits: u32,
    /// Step limit for PFR.
    #[arg(long, default_value_t = DEFAULT_PFR_MAX_STEPS)]
    pub max_steps: u64,
    /// Message output file.
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the encoded samples as JSON (stdout if absent).
    #[arg(long)]
    pub samples: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Message file written by `encode`.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Where to write the decoded samples as JSON (stdout if absent).
    #[arg(long)]
    pub samples: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Experiment config JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// CSV output; overrides the config's `out`. Stdout if neither is set.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write per-cell means and quartiles as JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct IsoklArgs {
    /// Proposal mean (or centre for --uniform).
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<f64>,
    /// Proposal standard deviation (or width for --uniform).
    #[arg(long)]
    pub rho: Option<f64>,
    /// Target mean.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// KL from target to proposal, in nats.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Standardized mode: target KL in nats against N(0, 1).
    #[arg(long, requires = "r")]
    pub k: Option<f64>,
    /// Standardized mode: target D_inf in nats against N(0, 1).
    #[arg(long, requires = "k")]
    pub r: Option<f64>,
    /// Uniform target inside Uniform(nu, rho), offset by tanh(beta).
    #[arg(long)]
    pub uniform: bool,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub beta: f64,
}

/// Model file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelFile {
    Blocks(BlockModel),
    Pairs(Vec<PairSpec>),
    Pair(PairSpec),
}

/// Sample file contents, written identically by `encode` and `decode`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFile {
    pub samples: Vec<f64>,
}

enum Failure {
    Usage(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameters(_)
            | Error::Domain(_)
            | Error::Constraint(_)
            | Error::Infeasible(_) => Failure::Usage(e.to_string()),
            _ => Failure::Failed(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Failed(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<ModelFile, Failure> {
    let bytes = read(path)?;
    serde_json::from_slice(&bytes)
        .map_err(|e| Failure::Usage(format!("{}: not a valid model ({e})", path.display())))
}

fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), Failure> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Failure::Failed(e.to_string()))?;
    text.push('\n');
    match path {
        Some(p) => write(p, text.as_bytes()),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Failed(e.to_string())),
    }
}

fn pairs_of(model: ModelFile) -> Vec<PairSpec> {
    match model {
        ModelFile::Pairs(p) => p,
        ModelFile::Pair(p) => vec![p],
        ModelFile::Blocks(_) => unreachable!("handled by caller"),
    }
}

fn encode_cmd(args: &EncodeArgs) -> Result<(), Failure> {
    let model = load_model(&args.model)?;
    if let ModelFile::Blocks(blocks) = &model {
        if args.exact.is_some() || args.mrc.is_some() || args.dad.is_some() {
            return Err(Failure::Usage(
                "block models are coded with DAD*; use --extra-bits".into(),
            ));
        }
        let enc = isokl::encode_block_vector(
            &blocks.to_blocks()?,
            &BlockCodecConfig {
                extra_bits: args.extra_bits,
            },
            args.seed,
        )?;
        write(&args.out, &enc.bytes)?;
        let samples = blocks.scatter(&enc.samples)?;
        return emit_json(&SampleFile { samples }, args.samples.as_deref());
    }
    let coder = match (args.exact, args.dad, args.mrc) {
        (Some(ExactCoder::As), None, None) => CoderSpec::AsStar,
        (Some(ExactCoder::Ad), None, None) => CoderSpec::AdStar,
        (Some(ExactCoder::Pfr), None, None) => CoderSpec::Pfr {
            max_steps: args.max_steps,
        },
        (None, Some(budget), None) => CoderSpec::Dad { budget },
        (None, None, Some(budget)) => CoderSpec::Mrc { budget },
        _ => {
            return Err(Failure::Usage(
                "choose exactly one of --exact, --dad, --mrc".into(),
            ))
        }
    };
    let pairs = pairs_of(model);
    let mut codes = Vec::with_capacity(pairs.len());
    let mut samples = Vec::with_capacity(pairs.len());
    for (i, pair) in pairs.iter().enumerate() {
        let e = coder.encode(pair, crate::randomness::derive_seed(args.seed, i as u64))?;
        codes.push(e.code);
        samples.push(e.sample);
    }
    let variant = coder.variant();
    // fixed-length codewords share one length header
    let message = if variant.is_fixed_length() {
        Message::Blocks {
            variant,
            blocks: vec![codes],
        }
    } else {
        Message::PerSymbol { variant, codes }
    };
    write(&args.out, &message.to_bytes()?)?;
    emit_json(&SampleFile { samples }, args.samples.as_deref())
}

fn decode_cmd(args: &DecodeArgs) -> Result<(), Failure> {
    let model = load_model(&args.model)?;
    let bytes = read(&args.input)?;
    let samples = if let ModelFile::Blocks(blocks) = &model {
        let per_block = isokl::decode_block_vector(&blocks.priors()?, &bytes, args.seed)?;
        blocks.scatter(&per_block)?
    } else {
        let pairs = pairs_of(model);
        let codes = Message::from_bytes(&bytes)?.codes();
        if codes.len() != pairs.len() {
            return Err(Failure::Failed(format!(
                "message holds {} codes, model has {} pairs",
                codes.len(),
                pairs.len()
            )));
        }
        codes
            .iter()
            .zip(&pairs)
            .enumerate()
            .map(|(i, (code, pair))| {
                decode(
                    pair.proposal(),
                    code,
                    crate::randomness::derive_seed(args.seed, i as u64),
                )
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    emit_json(&SampleFile { samples }, args.samples.as_deref())
}

type Runner = fn(&ExperimentConfig) -> crate::Result<Vec<bench::ResultRow>>;

fn bench_cmd(args: &BenchArgs, run: Runner) -> Result<(), Failure> {
    let text = String::from_utf8(read(&args.config)?).map_err(|e| Failure::Usage(e.to_string()))?;
    let config = ExperimentConfig::from_json(&text)?;
    let rows = run(&config)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        log::warn!(
            "{failed} of {} trials failed; see the error column",
            rows.len()
        );
    }
    match args.out.as_ref().or(config.out.as_ref()) {
        Some(path) => {
            let file = fs::File::create(path)
                .map_err(|e| Failure::Failed(format!("{}: {e}", path.display())))?;
            bench::write_csv(&rows, std::io::BufWriter::new(file))?;
        }
        None => bench::write_csv(&rows, std::io::stdout().lock())?,
    }
    if let Some(path) = &args.summary {
        emit_json(&bench::summarize(&rows), Some(path))?;
    }
    Ok(())
}

fn verify_cmd(args: &VerifyArgs) -> Result<bool, Failure> {
    let outcomes = bench::run_suite(args.suite, args.trials, args.seed)?;
    let mut ok = true;
    for o in &outcomes {
        println!(
            "{} {}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
        ok &= o.passed;
    }
    Ok(ok)
}

fn isokl_cmd(args: &IsoklArgs) -> Result<(), Failure> {
    let pair = if let (Some(k), Some(r)) = (args.k, args.r) {
        let (mu, s2) = isokl::gaussian_from_kl_dinf(k, r)?;
        PairSpec::new(
            Distribution1D::gaussian(mu, s2)?,
            Distribution1D::standard_normal(),
        )?
    } else {
        let (Some(nu), Some(rho), Some(kappa)) = (args.nu, args.rho, args.kappa) else {
            return Err(Failure::Usage(
                "give --k and --r, or --nu, --rho and --kappa".into(),
            ));
        };
        if args.uniform {
            PairSpec::new(
                isokl::uniform_from_mean_kl(nu, rho, kappa, args.beta)?,
                Distribution1D::uniform(nu, rho)?,
            )?
        } else {
            let mu = args
                .mu
                .ok_or_else(|| Failure::Usage("gaussian targets need --mu".into()))?;
            let s2 = isokl::gaussian_from_mean_kl(nu, rho, mu, kappa)?;
            PairSpec::new(
                Distribution1D::gaussian(mu, s2)?,
                Distribution1D::gaussian(nu, rho * rho)?,
            )?
        }
    };
    emit_json(&pair, None)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Encode(a) => encode_cmd(a),
        Command::Decode(a) => decode_cmd(a),
        Command::BenchRuntime(a) => bench_cmd(a, bench::run_runtime_grid),
        Command::BenchBias(a) => bench_cmd(a, bench::run_bias_grid),
        Command::BenchModes(a) => bench_cmd(a, bench::run_mode_sweep),
        Command::Verify(a) => match verify_cmd(a) {
            Ok(true) => Ok(()),
            Ok(false) => return 1,
            Err(e) => Err(e),
        },
        Command::Isokl(a) => isokl_cmd(a),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Failed(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}
