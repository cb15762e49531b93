//! Command-line front end: commit a model, answer explanation queries with
//! certificates, verify them, and run the evaluation harness.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use expproof::eval::{
    eval_fidelity, load_csv, results_csv, summary_table, synthetic, timing_csv, timing_report, Dataset,
    DatasetShape, EvalSampling, FidelityOptions,
};
use expproof::lime::{KernelType, LimeConfig, SamplingType, Variant};
use expproof::model::{synthesize_model, Architecture, ModelWeights};
use expproof::numeric::{FieldElement, FixedPoint, FixedVec, DEFAULT_SCALE, FIELD_BYTES};
use expproof::protocol::{
    challenge_from_query, random_challenge, setup, verify, Certificate, ProverState, PublicBundle,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "expproof",
    version,
    about = "Verifiable LIME explanations for committed models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random model of the given architecture.
    GenModel {
        /// e.g. `mlp:14,16,16,2` or `forest:14,5,4`
        #[arg(long)]
        arch: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
    },
    /// Write a synthetic dataset shaped like a tabular benchmark.
    GenData {
        #[arg(long)]
        dataset: DatasetShape,
        #[arg(long, default_value_t = 1_000)]
        rows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "data.csv")]
        out: PathBuf,
    },
    /// Commit to a model; writes the public bundle and the prover's secret state.
    Setup {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Seed for the commitment randomness; fresh OS entropy if absent.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Answer one query and write its certificate.
    Prove {
        #[arg(long, default_value = "prover.json")]
        state: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value = "cert.json")]
        out: PathBuf,
    },
    /// Check a certificate against the bundle and the query. Exits 1 on reject.
    Verify {
        #[arg(long, default_value = "bundle.json")]
        bundle: PathBuf,
        #[arg(long, default_value = "cert.json")]
        cert: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Prediction similarity of every variant over a set of inputs.
    EvalFidelity {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Number of dataset rows explained.
        #[arg(long, default_value_t = 50)]
        inputs: usize,
        /// Comma-separated variants, e.g. `GE,B-UN`; all eight if absent.
        #[arg(long, value_delimiter = ',')]
        variants: Vec<Variant>,
        #[arg(long, value_enum, default_value_t = EvalKind::Uniform)]
        eval_sampling: EvalKind,
        /// Half-edge (uniform) or standard deviation (gaussian).
        #[arg(long, default_value_t = 0.2)]
        eval_width: f64,
        #[arg(long, default_value_t = 1_000)]
        eval_points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
    },
    /// Per-phase wall-clock times of prove + verify.
    Timing {
        #[arg(long, default_value = "prover.json")]
        state: PathBuf,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "timing.csv")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalKind {
    Uniform,
    Gaussian,
}

/// Configuration: the file is the source of truth, flags override it.
/// Flag names mirror the configuration fields.
#[derive(Args, Default)]
struct ConfigArgs {
    /// JSON configuration; defaults for the model's dimension if absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Shorthand for sampling, kernel and border, e.g. `B-GE`.
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    smpl_type: Option<Sampling>,
    #[arg(long)]
    krnl_type: Option<Kernel>,
    #[arg(long)]
    border_lime: Option<bool>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    half_edge: Option<f64>,
    #[arg(long)]
    gauss_std: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    max_sweeps: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sampling {
    Uniform,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kernel {
    Exponential,
    None,
}

impl ConfigArgs {
    fn resolve(&self, d: usize) -> Result<LimeConfig> {
        let mut cc = match &self.config {
            Some(p) => read_json::<LimeConfig>(p)?,
            None => LimeConfig::defaults(d),
        };
        let s = cc.scale;
        let q = |v: f64, name: &str| {
            FixedPoint::quantize(v, s).with_context(|| format!("--{name} {v} does not fit scale {s}"))
        };
        if let Some(v) = self.variant {
            cc = cc.with_variant(v);
        }
        if let Some(v) = self.smpl_type {
            cc.smpl_type = match v {
                Sampling::Uniform => SamplingType::Uniform,
                Sampling::Gaussian => SamplingType::Gaussian,
            };
        }
        if let Some(v) = self.krnl_type {
            cc.krnl_type = match v {
                Kernel::Exponential => KernelType::Exponential,
                Kernel::None => KernelType::None,
            };
        }
        if let Some(v) = self.border_lime {
            cc.border_lime = v;
        }
        if let Some(v) = self.n {
            cc.n = v;
        }
        if let Some(v) = self.k {
            cc.k = v;
        }
        if let Some(v) = self.max_sweeps {
            cc.max_sweeps = v;
        }
        for (flag, name, field) in [
            (self.sigma, "sigma", &mut cc.sigma),
            (self.alpha, "alpha", &mut cc.alpha),
            (self.epsilon, "epsilon", &mut cc.epsilon),
            (self.half_edge, "half-edge", &mut cc.half_edge),
            (self.gauss_std, "gauss-std", &mut cc.gauss_std),
        ] {
            if let Some(v) = flag {
                *field = q(v, name)?;
            }
        }
        // the border grid always follows T and delta
        if let Some(v) = self.delta {
            cc.border.delta = q(v, "delta")?;
            cc.border.step_size = cc.border.delta;
        }
        if let Some(v) = self.t {
            cc.border.t = v;
            cc.border.vector_length = v;
        }
        if let Some(v) = self.m {
            cc.border.m = v;
        }
        cc.validate(d).context("invalid configuration")?;
        Ok(cc)
    }
}

/// The verifier's input and challenge.
#[derive(Args)]
struct QueryArgs {
    /// Comma-separated decimal features.
    #[arg(long, allow_hyphen_values = true)]
    input: String,
    /// Verifier challenge as hex.
    #[arg(long, conflicts_with = "challenge_from_query")]
    r_v: Option<String>,
    /// Derive the challenge from the bundle and input instead of asking the
    /// verifier for one. The prover can grind over inputs in this mode.
    #[arg(long)]
    challenge_from_query: bool,
    /// Bundle used to derive the challenge when proving.
    #[arg(long)]
    query_bundle: Option<PathBuf>,
}

impl QueryArgs {
    fn input(&self, scale: i64) -> Result<FixedVec> {
        let vals = self
            .input
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .with_context(|| format!("--input: not a number: {t:?}"))
            })
            .collect::<Result<Vec<_>>>()?;
        FixedVec::quantize(&vals, scale).context("--input does not fit the fixed-point scale")
    }

    fn challenge(&self, bundle: &PublicBundle, x: &FixedVec) -> Result<FieldElement> {
        match (&self.r_v, self.challenge_from_query) {
            (Some(h), _) => parse_challenge(h),
            (None, true) => Ok(challenge_from_query(bundle, x)?),
            (None, false) => bail!("pass --r-v <hex> or --challenge-from-query"),
        }
    }
}

/// Hex challenge; shorter strings are left-padded to the full encoding.
fn parse_challenge(h: &str) -> Result<FieldElement> {
    let h = h.trim().trim_start_matches("0x");
    let width = 2 * FIELD_BYTES;
    if h.len() > width {
        bail!("--r-v has {} hex digits, at most {width} allowed", h.len());
    }
    FieldElement::from_hex(&format!("{h:0>width$}")).context("--r-v is not a field element in hex")
}

#[derive(Args)]
struct DataArgs {
    /// CSV with a header; the label column is the last unless named.
    #[arg(long, conflicts_with = "dataset")]
    data: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<String>,
    /// Synthetic dataset shape when no CSV is given.
    #[arg(long)]
    dataset: Option<DatasetShape>,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
}

impl DataArgs {
    fn load(&self, scale: i64, rows: usize) -> Result<Dataset> {
        match (&self.data, self.dataset) {
            (Some(p), _) => {
                let f = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
                let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
                Ok(load_csv(f, name, self.label_column.as_deref(), scale)
                    .with_context(|| format!("reading {}", p.display()))?)
            }
            (None, Some(shape)) => Ok(synthetic(shape, rows.max(1), self.data_seed, scale)?),
            (None, None) => bail!("pass --data <csv> or --dataset <adult|credit|german>"),
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = expproof::encoding::canonical_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_model(path: &Path) -> Result<ModelWeights> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ModelWeights::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_cert(path: &Path) -> Result<Certificate> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Certificate::from_bytes(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::GenModel { arch, seed, out } => {
            let arch: Architecture = arch.parse()?;
            let model = synthesize_model(&arch, seed, DEFAULT_SCALE)?;
            write_json(&out, &model)?;
            eprintln!("wrote {} ({arch})", out.display());
        }
        Command::GenData {
            dataset,
            rows,
            seed,
            out,
        } => {
            let ds = synthetic(dataset, rows, seed, DEFAULT_SCALE)?;
            write_text(&out, &ds.to_csv()?)?;
            eprintln!("wrote {} ({} rows, d = {})", out.display(), ds.len(), ds.d);
        }
        Command::Setup {
            model,
            config,
            seed,
            out_dir,
        } => {
            let model = read_model(&model)?;
            let cc = config.resolve(model.input_dim)?;
            let entropy: [u8; 32] = match seed {
                Some(s) => ChaCha20Rng::seed_from_u64(s).random(),
                None => rand::rng().random(),
            };
            let (state, bundle) = setup(model, cc, entropy)?;
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            write_json(&out_dir.join("bundle.json"), &bundle)?;
            write_json(&out_dir.join("prover.json"), &state)?;
            println!("com_w {}", bundle.com_w.to_hex());
            println!("com_r {}", bundle.com_r.to_hex());
        }
        Command::Prove { state, query, out } => {
            let state: ProverState = read_json(&state)?;
            let x = query.input(state.cc.scale)?;
            let r_v = match (&query.query_bundle, query.challenge_from_query) {
                (Some(p), true) => query.challenge(&read_json(p)?, &x)?,
                (None, true) => bail!("--challenge-from-query needs --query-bundle when proving"),
                _ => {
                    let h = query
                        .r_v
                        .as_deref()
                        .context("pass --r-v <hex> or --challenge-from-query")?;
                    parse_challenge(h)?
                }
            };
            let proof = state.prove(&x, &r_v)?;
            write_text(&out, &String::from_utf8(proof.certificate.to_bytes()?)?)?;
            let answer = serde_json::json!({ "o": proof.o, "e": proof.e });
            println!("{}", serde_json::to_string_pretty(&answer)?);
            eprintln!("wrote {}", out.display());
        }
        Command::Verify { bundle, cert, query } => {
            let bundle: PublicBundle = read_json(&bundle)?;
            let cert = read_cert(&cert)?;
            let x = query.input(bundle.cc.scale)?;
            let r_v = query.challenge(&bundle, &x)?;
            let report = verify(&bundle, &x, &r_v, cert.statement.o, &cert.statement.e, &cert);
            println!("{}", serde_json::to_string_pretty(&report)?);
            if !report.accepted {
                let names: Vec<String> = report.failed_checks().iter().map(|c| c.to_string()).collect();
                eprintln!("rejected: {}", names.join(", "));
                return Ok(ExitCode::from(1));
            }
            eprintln!("accepted");
        }
        Command::EvalFidelity {
            model,
            data,
            config,
            inputs,
            variants,
            eval_sampling,
            eval_width,
            eval_points,
            seed,
            out,
        } => {
            let model = read_model(&model)?;
            let cc = config.resolve(model.input_dim)?;
            let ds = data.load(cc.scale, inputs)?;
            if ds.d != model.input_dim {
                bail!("dataset has {} features, model expects {}", ds.d, model.input_dim);
            }
            let rows: Vec<Vec<i64>> = ds.rows.into_iter().take(inputs).collect();
            let opts = FidelityOptions {
                variants: if variants.is_empty() {
                    Variant::all()
                } else {
                    variants
                },
                eval_points,
                sampling: match eval_sampling {
                    EvalKind::Uniform => EvalSampling::Uniform {
                        half_edge: eval_width,
                    },
                    EvalKind::Gaussian => EvalSampling::Gaussian { std: eval_width },
                },
                seed,
            };
            let results = eval_fidelity(&model, &cc, &rows, &opts)?;
            write_text(&out, &results_csv(&results))?;
            print!("{}", summary_table(&results));
        }
        Command::Timing {
            state,
            runs,
            seed,
            out,
        } => {
            let state: ProverState = read_json(&state)?;
            let d = state.model.input_dim;
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let inputs: Vec<FixedVec> = (0..runs)
                .map(|_| {
                    FixedVec::new(
                        (0..d)
                            .map(|_| rng.random_range(-state.cc.scale..=state.cc.scale))
                            .collect(),
                        state.cc.scale,
                    )
                })
                .collect();
            let rows = timing_report(&state, &inputs, &random_challenge(&mut rng))?;
            let csv = timing_csv(&rows);
            write_text(&out, &csv)?;
            print!("{csv}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
