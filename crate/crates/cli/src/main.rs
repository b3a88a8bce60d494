mod config;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use sdpolar::oracle::{parse_suites, run_suite};
use sdpolar::polar_code::construct;
use sdpolar::sim::{parse_decoders, run_sweep, to_csv, SweepConfig};
use sdpolar::{CodeSpec, CrcConfig, DecodeOptions, KernelMode};

use config::FileConfig;
use report::{latency_rows, render_csv, render_text, ReportParams};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("{0} suite(s) failed")]
    SuiteFailed(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::SuiteFailed(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<sdpolar::Error> for CliError {
    fn from(e: sdpolar::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "sdpolar",
    version,
    about = "Polar-code decoder simulation, analytical models and oracle suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo BER/FER sweep over decoders and Eb/N0 points.
    Sweep(SweepArgs),
    /// Addition-count, memory and latency tables.
    Report(ReportArgs),
    /// Randomised equivalence suites.
    Oracle(OracleArgs),
    /// Write the frozen set of a constructed code.
    Construct(ConstructArgs),
}

#[derive(Args)]
struct CodeArgs {
    /// Code as `n,K`: length 2^n with K information bits (CRC included).
    #[arg(long, value_name = "n,K")]
    code: Option<String>,
    /// Append a CRC-32C to the payload.
    #[arg(long)]
    crc32c: bool,
    /// Frozen-set file (`N K` header, then 1-based frozen indices).
    #[arg(long, value_name = "PATH")]
    frozen_file: Option<PathBuf>,
    /// BEC design parameter of the Bhattacharyya construction.
    #[arg(long)]
    design: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Comma-separated decoders: sc, sdsc-M, scl-L, ca-scl-L, sdscl-M-L-q, ca-sdscl-M-L-q.
    #[arg(long, value_name = "LIST")]
    dec: Option<String>,
    /// Comma-separated Eb/N0 points in dB.
    #[arg(long, value_name = "LIST")]
    ebn0: Option<String>,
    /// Maximum trials per Eb/N0 point.
    #[arg(long)]
    trials: Option<u64>,
    /// Frame errors after which a decoder stops (0: never).
    #[arg(long)]
    target_fe: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// CSV output path; a JSON sidecar is written next to it.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Exact log-sum-exp check-node updates instead of max-log.
    #[arg(long)]
    exact: bool,
    /// Serve the first stage from the pre-computed table.
    #[arg(long)]
    pcms: bool,
    /// Key-value configuration file; flags take precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Take γ from this code instead of the published values.
    #[command(flatten)]
    code: CodeArgs,
    /// List size L.
    #[arg(long)]
    list: Option<i64>,
    /// Processing units P.
    #[arg(long)]
    units: Option<i64>,
    /// Channel quantisation bits.
    #[arg(long)]
    q_ch: Option<i64>,
    /// Emit the latency rows as CSV.
    #[arg(long)]
    csv: bool,
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// prop1, reduction-chain, pcms-equivalence, table-exactness or all.
    #[arg(long)]
    suite: Option<String>,
    /// Random cases per configuration.
    #[arg(long)]
    cases: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ConstructArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Output path; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse()
                .map_err(|_| CliError::Config(format!("bad {what} `{v}`")))
        })
        .collect()
}

/// Resolves the code from flags and configuration; `None` if neither names one.
fn resolve_code(args: CodeArgs, file: &FileConfig) -> Result<Option<CodeSpec>, CliError> {
    let code = file.pick(args.code, "code")?;
    let frozen: Option<PathBuf> = file.pick(args.frozen_file, "frozen-file")?;
    let design = file.pick(args.design, "design")?.unwrap_or(0.5);
    let crc = file.switch(args.crc32c, "crc32c")?;
    let spec = match (frozen, code) {
        (Some(path), code) => {
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let spec = CodeSpec::parse_frozen_file(&text)?;
            if let Some(c) = code {
                let (n, k) = parse_code(&c)?;
                if n != spec.n() || k != spec.info_len() {
                    return Err(CliError::Config(format!(
                        "--code {c} disagrees with {}",
                        path.display()
                    )));
                }
            }
            spec
        }
        (None, Some(c)) => {
            let (n, k) = parse_code(&c)?;
            construct(n, k, design)?
        }
        (None, None) => return Ok(None),
    };
    Ok(Some(if crc {
        spec.with_crc(CrcConfig::crc32c())?
    } else {
        spec
    }))
}

fn parse_code(s: &str) -> Result<(u32, usize), CliError> {
    let bad = || CliError::Config(format!("--code expects n,K, got `{s}`"));
    let (n, k) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        n.trim().parse().map_err(|_| bad())?,
        k.trim().parse().map_err(|_| bad())?,
    ))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn fingerprint(spec: &CodeSpec) -> String {
    Sha256::digest(spec.to_frozen_file().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let spec = resolve_code(args.code, &file)?
        .ok_or_else(|| CliError::Config("sweep needs --code or --frozen-file".into()))?;
    let dec: String = file
        .pick(args.dec, "dec")?
        .ok_or_else(|| CliError::Config("sweep needs --dec".into()))?;
    let ebn0: String = file
        .pick(args.ebn0, "ebn0")?
        .ok_or_else(|| CliError::Config("sweep needs --ebn0".into()))?;
    let opts = DecodeOptions {
        mode: if file.switch(args.exact, "exact")? {
            KernelMode::Exact
        } else {
            KernelMode::MaxLog
        },
        pcms: file.switch(args.pcms, "pcms")?,
    };
    let cfg = SweepConfig {
        spec,
        decoders: parse_decoders(&dec)?,
        ebn0_db: parse_list(&ebn0, "Eb/N0")?,
        trials: file.pick(args.trials, "trials")?.unwrap_or(10_000),
        target_fe: file.pick(args.target_fe, "target-fe")?.unwrap_or(100),
        seed: file.pick(args.seed, "seed")?.unwrap_or(1),
        workers: file.pick(args.workers, "workers")?.unwrap_or(0),
        opts,
    };
    cfg.validate()?;
    let out: Option<PathBuf> = file.pick(args.out, "out")?;
    // Fail on an unwritable destination before simulating.
    if let Some(path) = &out {
        write_file(path, "")?;
    }
    let cells = run_sweep(&cfg)?;
    let csv = to_csv(&cells);
    match out {
        None => print!("{csv}"),
        Some(path) => {
            write_file(&path, &csv)?;
            let meta = json!({
                "code": {
                    "N": cfg.spec.block_len(),
                    "K": cfg.spec.info_len(),
                    "payload_bits": cfg.spec.payload_len(),
                    "crc": cfg.spec.crc().map(|_| "crc32c"),
                    "construction": format!("{:?}", cfg.spec.construction()),
                    "frozen_sha256": fingerprint(&cfg.spec),
                },
                "decoders": cfg.decoders.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "ebn0_db": cfg.ebn0_db,
                "trials": cfg.trials,
                "target_fe": cfg.target_fe,
                "seed": cfg.seed,
                "workers": cfg.workers,
                "kernel": format!("{:?}", cfg.opts.mode),
                "pcms": cfg.opts.pcms,
            });
            let text = serde_json::to_string_pretty(&meta).expect("static JSON shape");
            write_file(&path.with_extension("json"), &(text + "\n"))?;
            eprintln!("wrote {} cells to {}", cells.len(), path.display());
        }
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let code = resolve_code(args.code, &file)?;
    let mut p = ReportParams {
        list_size: file.pick(args.list, "list")?.unwrap_or(4),
        units: file.pick(args.units, "units")?.unwrap_or(64),
        q_ch: file.pick(args.q_ch, "q-ch")?.unwrap_or(4),
        ..ReportParams::default()
    };
    if let Some(spec) = &code {
        p.block_len = spec.block_len() as i64;
    }
    let rows = latency_rows(p, code.as_ref())?;
    if args.csv {
        print!("{}", render_csv(&rows));
    } else {
        print!("{}", render_text(p, &rows)?);
    }
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let suites = parse_suites(
        &file
            .pick(args.suite, "suite")?
            .unwrap_or_else(|| "all".into()),
    )?;
    let cases = file.pick(args.cases, "cases")?.unwrap_or(1000);
    let seed = file.pick(args.seed, "seed")?.unwrap_or(1);
    let mut failed = 0;
    for suite in suites {
        let r = run_suite(suite, cases, seed)?;
        println!("{r}");
        if !r.passed() {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(CliError::SuiteFailed(failed));
    }
    Ok(())
}

fn construct_cmd(args: ConstructArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let spec = resolve_code(args.code, &file)?
        .ok_or_else(|| CliError::Config("construct needs --code".into()))?;
    let text = spec.to_frozen_file();
    match file.pick(args.out, "out")? {
        None => print!("{text}"),
        Some(path) => write_file(&path, &text)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Report(a) => report(a),
        Command::Oracle(a) => oracle(a),
        Command::Construct(a) => construct_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sdpolar: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
