use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use markov_quant::antichain::{series_to_csv, theorem_ratio_series, DEFAULT_CAP};
use markov_quant::geometry::{curve_to_csv, error_curve, CurveOptions};
use markov_quant::verify::{run_suite, Outcome, VerifyConfig};
use markov_quant::{analyze, load_model, validate_system, Error, MarkovSystem};

#[derive(Parser)]
#[command(name = "markov-quant", version, about = "Quantization asymptotics for Markov-type measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the model invariants.
    Validate { model: PathBuf },
    /// Components, critical values and predicted exponents as JSON.
    Analyze {
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Antichain series (phi, depths, sums, R_k, U_k, chain sums) as CSV.
    Antichain {
        model: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: KRange,
    },
    /// Error brackets of antichain codebooks as CSV.
    Quantize {
        model: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: KRange,
        /// Lloyd-refine each codebook on the discretized measure.
        #[arg(long)]
        refine: bool,
        #[arg(long, default_value_t = 6)]
        depth_offset: u32,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
    },
    /// Run the verification suite and report pass/fail per check.
    Verify {
        model: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: KRange,
        #[arg(long, default_value_t = 6)]
        quantize_k_min: u32,
        #[arg(long, default_value_t = 12)]
        quantize_k_max: u32,
        #[arg(long, default_value_t = 6)]
        depth_offset: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        mc_samples: usize,
    },
}

#[derive(Args)]
struct Common {
    /// Orders r, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    r: Vec<f64>,
    /// Largest antichain that may be held in memory.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u64,
    /// Directory for report files; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KRange {
    #[arg(long, default_value_t = 6)]
    k_min: u32,
    #[arg(long, default_value_t = 16)]
    k_max: u32,
}

enum Failure {
    Check(String),
    Setup(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Json(_) | Error::Config(_) | Error::ParseNumber(_) | Error::Shape(_) => {
                Failure::Setup(e.to_string())
            }
            Error::VertexOutOfRange { .. } | Error::InvalidArgument(_) => Failure::Setup(e.to_string()),
            _ => Failure::Check(e.to_string()),
        }
    }
}

fn setup(msg: impl Into<String>) -> Failure {
    Failure::Setup(msg.into())
}

impl Common {
    fn check(&self) -> Result<(), Failure> {
        if self.r.is_empty() || self.r.iter().any(|&r| r.is_nan() || r <= 0.0 || r.is_infinite()) {
            return Err(setup("every --r must be positive"));
        }
        Ok(())
    }
}

impl KRange {
    fn ks(&self) -> Result<std::ops::RangeInclusive<u32>, Failure> {
        if self.k_min < 1 || self.k_min > self.k_max {
            return Err(setup(format!("empty k range {}..={}", self.k_min, self.k_max)));
        }
        Ok(self.k_min..=self.k_max)
    }
}

fn emit(out: Option<&Path>, file: &str, body: &str) -> Result<(), Failure> {
    match out {
        None => {
            print!("{body}");
            Ok(())
        }
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| setup(format!("{}: {e}", dir.display())))?;
            let path = dir.join(file);
            fs::write(&path, body).map_err(|e| setup(format!("{}: {e}", path.display())))
        }
    }
}

fn r_tag(r: f64) -> String {
    format!("r{r}").replace('.', "_")
}

fn load(path: &Path) -> Result<MarkovSystem, Failure> {
    load_model(path).map_err(|e| setup(format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { model } => {
            let sys = load(&model)?;
            let report = validate_system(&sys);
            if report.is_ok() {
                println!("ok: {} vertices, {} edges", sys.n_vertices(), sys.edges().count());
                Ok(())
            } else {
                for v in &report.violations {
                    println!("violation: {v}");
                }
                Err(Failure::Check(format!("{} violation(s)", report.violations.len())))
            }
        }
        Command::Analyze { model, common } => {
            common.check()?;
            let sys = validated(&model)?;
            for &r in &common.r {
                let report = analyze(&sys, r)?;
                emit(common.out.as_deref(), &format!("analyze_{}.json", r_tag(r)), &to_json(&report))?;
            }
            Ok(())
        }
        Command::Antichain { model, common, range } => {
            common.check()?;
            let ks = range.ks()?;
            let sys = validated(&model)?;
            for &r in &common.r {
                let report = analyze(&sys, r)?;
                let rows = theorem_ratio_series(&sys, &report.structure, ks.clone())?;
                emit(common.out.as_deref(), &format!("antichain_{}.csv", r_tag(r)), &series_to_csv(&rows))?;
            }
            Ok(())
        }
        Command::Quantize { model, common, range, refine, depth_offset, max_iter } => {
            common.check()?;
            let ks = range.ks()?;
            let sys = validated(&model)?;
            let options = CurveOptions { refine, depth_offset, cap: common.cap, max_iter };
            for &r in &common.r {
                let report = analyze(&sys, r)?;
                let rows = error_curve(&sys, &report.structure, ks.clone(), &options)?;
                emit(common.out.as_deref(), &format!("quantize_{}.csv", r_tag(r)), &curve_to_csv(&rows))?;
            }
            Ok(())
        }
        Command::Verify { model, common, range, quantize_k_min, quantize_k_max, depth_offset, seed, mc_samples } => {
            common.check()?;
            range.ks()?;
            if quantize_k_min < 1 || quantize_k_min > quantize_k_max {
                return Err(setup("empty quantize k range"));
            }
            let sys = validated(&model)?;
            let config = VerifyConfig {
                r: common.r.clone(),
                k_min: range.k_min,
                k_max: range.k_max,
                quantize_k_min,
                quantize_k_max,
                depth_offset,
                cap: common.cap,
                seed,
                mc_samples,
                ..VerifyConfig::default()
            };
            let result = run_suite(&sys, &config)?;
            for check in &result.checks {
                let status = match check.outcome {
                    Outcome::Pass => "PASS",
                    Outcome::Fail => "FAIL",
                    Outcome::Skip => "SKIP",
                };
                let detail = check.reason.as_deref().unwrap_or(&check.criterion);
                eprintln!("{status} r={} {} ({detail})", check.r, check.name);
            }
            emit(common.out.as_deref(), "verify.json", &to_json(&result))?;
            if result.passed() {
                Ok(())
            } else {
                Err(Failure::Check(format!("{} check(s) failed", result.count(Outcome::Fail))))
            }
        }
    }
}

fn validated(path: &Path) -> Result<MarkovSystem, Failure> {
    let sys = load(path)?;
    let report = validate_system(&sys);
    if let Some(v) = report.violations.first() {
        return Err(Failure::Check(format!("invalid model: {v}")));
    }
    Ok(sys)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Setup(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
