mod bench;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use cpd_core::algebraic::{auto_l, decompose, CpdConfig, CpdResult};
use cpd_core::conditions::check_uniqueness_auto;
use cpd_core::io::{parse_factors_json, read_cpd3, write_cpd3, FactorTripleJson};
use cpd_core::multilinear::synthesize;
use cpd_core::random::{hankel_instance, random_factors};
use cpd_core::CpdError;
use serde_json::json;

use bench::{run_config, Config, BIG_D, CSV_HEADER, TABLE1, TABLE2};

#[derive(Parser)]
#[command(
    name = "cpd",
    version,
    about = "Algebraic canonical polyadic decomposition of third-order tensors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a tensor stored in CPD3 format.
    Decompose {
        input: PathBuf,
        #[arg(long)]
        rank: usize,
        /// Lifting parameter, or `auto` to search 0..=l-max.
        #[arg(long, default_value = "auto")]
        l: LChoice,
        #[arg(long, default_value_t = 3)]
        l_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relative threshold below which kernel singular values count as zero.
        #[arg(long)]
        tol_kernel: Option<f64>,
        /// Write the factors here as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark suite on random Gaussian instances.
    Bench {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        l_max: usize,
        /// Include rows whose Gram matrix is larger than 6000.
        #[arg(long)]
        big: bool,
        /// Dimensions for the custom suite, as I,J,K.
        #[arg(long, value_parser = parse_dims)]
        dims: Option<(usize, usize, usize)>,
        /// Rank for the custom suite.
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Check uniqueness certificates for a factor triple stored as JSON.
    Certify {
        input: PathBuf,
        /// Largest lifting tried for the order-m check.
        #[arg(long, default_value_t = 2)]
        l_max: usize,
    },
    /// Write a synthetic tensor (and its factors) to disk.
    Synth {
        #[arg(long, value_parser = parse_dims)]
        dims: Option<(usize, usize, usize)>,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the fixed 3 x 7 x 12 Hankel-structured instance.
        #[arg(long, conflicts_with_all = ["dims", "rank"])]
        hankel: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        factors_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug)]
enum LChoice {
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for LChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(LChoice::Auto);
        }
        s.parse()
            .map(LChoice::Fixed)
            .map_err(|_| format!("expected `auto` or an integer, got `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Suite {
    Table1,
    Table2,
    Custom,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn parse_dims(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad dimension `{p}`: {e}"))
        })
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [i, j, k] if i > 0 && j > 0 && k > 0 => Ok((i, j, k)),
        _ => Err(format!("expected three positive integers I,J,K, got `{s}`")),
    }
}

/// 0 success, 1 bad input, 2 identifiability condition not met,
/// 3 numerical verification failed, 4 size limit.
fn exit_code(e: &CpdError) -> u8 {
    match e {
        CpdError::Format(_) | CpdError::Io(_) | CpdError::InvalidArgument(_) | CpdError::DegenerateInput(_) => 1,
        CpdError::ResourceLimit { .. } => 4,
        e if e.is_condition_violation() => 2,
        _ => 3,
    }
}

fn error_json(e: &CpdError) -> serde_json::Value {
    let attempts = match e {
        CpdError::AllRejected { attempts, .. } => serde_json::to_value(attempts).unwrap_or_default(),
        _ => serde_json::Value::Null,
    };
    json!({
        "status": match exit_code(e) {
            1 => "invalid-input",
            2 => "condition-violation",
            4 => "resource-limit",
            _ => "verification-failure",
        },
        "error": e.to_string(),
        "attempts": attempts,
    })
}

fn cmd_decompose(
    input: PathBuf,
    rank: usize,
    l: LChoice,
    l_max: usize,
    seed: u64,
    tol_kernel: Option<f64>,
    out: Option<PathBuf>,
) -> anyhow::Result<ExitCode> {
    let t = match read_cpd3(&input) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cpd: cannot read {}: {e}", input.display());
            return Ok(ExitCode::from(1));
        }
    };
    let mut cfg = CpdConfig::default().with_seed(seed);
    if let Some(tau) = tol_kernel {
        cfg.kernel.tau_kernel = tau;
    }
    let res: Result<CpdResult, CpdError> = match l {
        LChoice::Auto => auto_l(&t, rank, l_max, &cfg),
        LChoice::Fixed(l) => decompose(&t, rank, l, &cfg),
    };
    match res {
        Ok(res) => {
            if let Some(path) = out {
                let j = FactorTripleJson::from(res.factors.clone());
                fs::write(&path, serde_json::to_string_pretty(&j)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let mut value = serde_json::to_value(&res)?;
            value["status"] = json!("ok");
            emit(&serde_json::to_string_pretty(&value)?);
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            emit(&serde_json::to_string_pretty(&error_json(&e))?);
            eprintln!("cpd: {e}");
            Ok(ExitCode::from(exit_code(&e)))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    suite: Suite,
    trials: usize,
    seed: u64,
    l_max: usize,
    big: bool,
    dims: Option<(usize, usize, usize)>,
    rank: Option<usize>,
    format: Format,
) -> anyhow::Result<ExitCode> {
    let configs: Vec<Config> = match suite {
        Suite::Table1 => TABLE1.to_vec(),
        Suite::Table2 => TABLE2.to_vec(),
        Suite::Custom => {
            let (Some(dims), Some(rank)) = (dims, rank) else {
                bail!("the custom suite needs --dims and --rank");
            };
            vec![Config {
                dims,
                rank,
                expected: None,
            }]
        }
    };
    let (run, skipped): (Vec<Config>, Vec<Config>) = configs
        .into_iter()
        .partition(|c| big || c.expected_d().is_none_or(|d| d <= BIG_D));
    for c in &skipped {
        eprintln!(
            "cpd: skipping {}x{}x{} R={} (D = {}); pass --big to include it",
            c.dims.0,
            c.dims.1,
            c.dims.2,
            c.rank,
            c.expected_d().unwrap_or(0)
        );
    }
    if matches!(format, Format::Csv) {
        emit(CSV_HEADER);
    }
    let mut rows = Vec::new();
    for c in &run {
        let row = run_config(c, trials, seed, l_max);
        if matches!(format, Format::Csv) {
            emit(&row.csv());
        }
        rows.push(row);
    }
    if matches!(format, Format::Json) {
        emit(&serde_json::to_string_pretty(&rows)?);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_certify(input: PathBuf, l_max: usize) -> anyhow::Result<ExitCode> {
    let parsed = fs::read_to_string(&input)
        .map_err(CpdError::from)
        .and_then(|text| parse_factors_json(&text));
    let f = match parsed {
        Ok(f) => f,
        Err(e) => {
            eprintln!("cpd: cannot read {}: {e}", input.display());
            return Ok(ExitCode::from(1));
        }
    };
    let report = check_uniqueness_auto(&f, l_max);
    emit(&serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(
    dims: Option<(usize, usize, usize)>,
    rank: Option<usize>,
    seed: u64,
    hankel: bool,
    out: PathBuf,
    factors_out: Option<PathBuf>,
) -> anyhow::Result<ExitCode> {
    let f = if hankel {
        hankel_instance()
    } else {
        let (Some(dims), Some(rank)) = (dims, rank) else {
            bail!("synth needs --dims and --rank (or --hankel)");
        };
        if rank == 0 {
            bail!("rank must be positive");
        }
        random_factors(dims, rank, seed)
    };
    write_cpd3(&out, &synthesize(&f)).with_context(|| format!("writing {}", out.display()))?;
    if let Some(path) = factors_out {
        fs::write(&path, serde_json::to_string_pretty(&FactorTripleJson::from(f))?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

/// Prints a line to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("CPD_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("CPD_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which here means a condition violation
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = init_threads().and_then(|()| match cli.command {
        Command::Decompose {
            input,
            rank,
            l,
            l_max,
            seed,
            tol_kernel,
            out,
        } => cmd_decompose(input, rank, l, l_max, seed, tol_kernel, out),
        Command::Bench {
            suite,
            trials,
            seed,
            l_max,
            big,
            dims,
            rank,
            format,
        } => cmd_bench(suite, trials, seed, l_max, big, dims, rank, format),
        Command::Certify { input, l_max } => cmd_certify(input, l_max),
        Command::Synth {
            dims,
            rank,
            seed,
            hankel,
            out,
            factors_out,
        } => cmd_synth(dims, rank, seed, hankel, out, factors_out),
    });
    result.unwrap_or_else(|e| {
        eprintln!("cpd: {e:#}");
        ExitCode::from(1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_parsing() {
        assert_eq!(parse_dims("3,4,5"), Ok((3, 4, 5)));
        assert!(parse_dims("3,4").is_err());
        assert!(parse_dims("3,0,5").is_err());
        assert!(parse_dims("a,b,c").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&CpdError::Format("x".into())), 1);
        assert_eq!(exit_code(&CpdError::Condition("x".into())), 2);
        assert_eq!(
            exit_code(&CpdError::VerificationFailure {
                what: "x",
                value: 1.0,
                limit: 0.5
            }),
            3
        );
        assert_eq!(
            exit_code(&CpdError::ResourceLimit {
                what: "x",
                size: 2,
                limit: 1
            }),
            4
        );
    }

    #[test]
    fn l_choice() {
        assert!(matches!("auto".parse::<LChoice>(), Ok(LChoice::Auto)));
        assert!(matches!("2".parse::<LChoice>(), Ok(LChoice::Fixed(2))));
        assert!("x".parse::<LChoice>().is_err());
    }
}
