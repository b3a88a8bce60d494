//! Monte Carlo BER/FER estimation over BPSK/AWGN.
//!
//! Trial `t` of a run seeded with `s` draws its payload and noise from its
//! own ChaCha stream, so every decoder in a sweep sees the same received
//! word for the same trial, and results do not depend on the worker count.
//! Trials run in fixed-size batches; a decoder stops accumulating after the
//! first batch that brings it to the frame-error target.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    channel_lls, modulate_with_noise, standard_normals, trial_rng, ChannelParams, LLPair,
};
use crate::error::{invalid, Error, Result};
use crate::list_decoder::{
    scl_decode_list, sdscl_decode_list, select_crc_valid, PruneConfig, Pruning,
};
use crate::polar_code::{attach_crc, encode, extract_info, place_info, CodeSpec};
use crate::sc_kernel::{sc_decode_with, DecodeOptions};
use crate::symbol_kernel::sdsc_decode_with;

/// Trials per batch. Fixed so that early stopping is reproducible.
pub const BATCH: u64 = 256;

/// z-score of a two-sided 95% interval.
pub const Z95: f64 = 1.959963984540054;

/// A decoder selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecoderId {
    /// `sc`
    Sc,
    /// `sdsc-M`
    Sdsc { m: usize },
    /// `scl-L`
    Scl { l: usize },
    /// `ca-scl-L`
    CaScl { l: usize },
    /// `sdscl-M-L-q`
    Sdscl { m: usize, l: usize, q: usize },
    /// `ca-sdscl-M-L-q`
    CaSdscl { m: usize, l: usize, q: usize },
}

fn parse_pow2(field: &str, what: &str, id: &str) -> Result<usize> {
    match field.parse::<usize>() {
        Ok(v) if v.is_power_of_two() => Ok(v),
        _ => invalid(format!(
            "decoder `{id}`: {what} `{field}` is not a power of two"
        )),
    }
}

impl FromStr for DecoderId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let id = s.trim();
        let (crc, rest) = match id.strip_prefix("ca-") {
            Some(r) => (true, r),
            None => (false, id),
        };
        let parts: Vec<&str> = rest.split('-').collect();
        let parsed = match (crc, parts.as_slice()) {
            (false, ["sc"]) => DecoderId::Sc,
            (false, ["sdsc", m]) => DecoderId::Sdsc {
                m: parse_pow2(m, "M", id)?,
            },
            (_, ["scl", l]) => {
                let l = parse_pow2(l, "L", id)?;
                if crc {
                    DecoderId::CaScl { l }
                } else {
                    DecoderId::Scl { l }
                }
            }
            (_, ["sdscl", m, l, q]) => {
                let m = parse_pow2(m, "M", id)?;
                let l = parse_pow2(l, "L", id)?;
                let q: usize = q
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("decoder `{id}`: bad q `{q}`")))?;
                if m > 16 {
                    return invalid(format!("decoder `{id}`: M above 16 is not supported"));
                }
                if q == 0 || q > 1 << m {
                    return invalid(format!("decoder `{id}`: q must lie in 1..=2^M"));
                }
                if crc {
                    DecoderId::CaSdscl { m, l, q }
                } else {
                    DecoderId::Sdscl { m, l, q }
                }
            }
            _ => return invalid(format!("unknown decoder `{id}`")),
        };
        Ok(parsed)
    }
}

impl fmt::Display for DecoderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DecoderId::Sc => write!(f, "sc"),
            DecoderId::Sdsc { m } => write!(f, "sdsc-{m}"),
            DecoderId::Scl { l } => write!(f, "scl-{l}"),
            DecoderId::CaScl { l } => write!(f, "ca-scl-{l}"),
            DecoderId::Sdscl { m, l, q } => write!(f, "sdscl-{m}-{l}-{q}"),
            DecoderId::CaSdscl { m, l, q } => write!(f, "ca-sdscl-{m}-{l}-{q}"),
        }
    }
}

impl DecoderId {
    pub fn needs_crc(&self) -> bool {
        matches!(self, DecoderId::CaScl { .. } | DecoderId::CaSdscl { .. })
    }

    /// Checks the decoder against a code.
    pub fn check(&self, spec: &CodeSpec) -> Result<()> {
        if self.needs_crc() && spec.crc().is_none() {
            return invalid(format!("decoder `{self}` needs a CRC-concatenated code"));
        }
        let m = match *self {
            DecoderId::Sdsc { m } | DecoderId::Sdscl { m, .. } | DecoderId::CaSdscl { m, .. } => m,
            _ => 1,
        };
        if m > spec.block_len() || m > 16 {
            return invalid(format!("decoder `{self}`: symbol size exceeds N or 16"));
        }
        Ok(())
    }

    /// Decodes one received word; the flag is the CRC verdict of CRC-aided
    /// decoders.
    pub fn decode(
        &self,
        spec: &CodeSpec,
        llr_in: &[LLPair],
        opts: DecodeOptions,
    ) -> Result<(Vec<u8>, Option<bool>)> {
        Ok(match *self {
            DecoderId::Sc => (sc_decode_with(spec, llr_in, opts)?, None),
            DecoderId::Sdsc { m } => (sdsc_decode_with(spec, llr_in, m, opts)?.0, None),
            DecoderId::Scl { l } => (
                scl_decode_list(spec, llr_in, l, opts)?.best().to_vec(),
                None,
            ),
            DecoderId::CaScl { l } => {
                let out = scl_decode_list(spec, llr_in, l, opts)?;
                let (u, ok) = select_crc_valid(spec, &out)?;
                (u, Some(ok))
            }
            DecoderId::Sdscl { m, l, q } => {
                let out = sdscl_decode_list(
                    spec,
                    llr_in,
                    l,
                    m,
                    Pruning::TwoStage(PruneConfig::new(q)),
                    opts,
                )?;
                (out.best().to_vec(), None)
            }
            DecoderId::CaSdscl { m, l, q } => {
                let out = sdscl_decode_list(
                    spec,
                    llr_in,
                    l,
                    m,
                    Pruning::TwoStage(PruneConfig::new(q)),
                    opts,
                )?;
                let (u, ok) = select_crc_valid(spec, &out)?;
                (u, Some(ok))
            }
        })
    }
}

/// Parses a comma-separated decoder list.
pub fn parse_decoders(list: &str) -> Result<Vec<DecoderId>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub spec: CodeSpec,
    pub decoders: Vec<DecoderId>,
    pub ebn0_db: Vec<f64>,
    /// Maximum trials per Eb/N0 point.
    pub trials: u64,
    /// Stop a decoder once it has this many frame errors; 0 disables stopping.
    pub target_fe: u64,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub opts: DecodeOptions,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.spec.payload_len() == 0 {
            return invalid("the code carries no payload bits");
        }
        if self.decoders.is_empty() {
            return invalid("no decoders selected");
        }
        if self.ebn0_db.is_empty() {
            return invalid("no Eb/N0 points");
        }
        if self.trials == 0 {
            return invalid("trial budget must be at least 1");
        }
        for d in &self.decoders {
            d.check(&self.spec)?;
        }
        for &e in &self.ebn0_db {
            ChannelParams::new(e, self.rate(), self.seed)?;
        }
        Ok(())
    }

    /// `K / N`, CRC bits included.
    pub fn rate(&self) -> f64 {
        self.spec.info_len() as f64 / self.spec.block_len() as f64
    }
}

/// Outcome of one decoder on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub ebn0_db: f64,
    pub decoder: DecoderId,
    /// Payload bit errors.
    pub bit_errors: u64,
    pub frame_error: bool,
    pub crc_pass: Option<bool>,
}

/// Transmitted data word and received channel messages of one trial.
pub struct TrialInput {
    pub payload: Vec<u8>,
    pub u: Vec<u8>,
    pub llr: Vec<LLPair>,
}

/// Draws the payload and the noise of trial `trial`. The noise depends only
/// on `(seed, trial)`; the Eb/N0 point only scales it.
pub fn trial_input(spec: &CodeSpec, ebn0_db: f64, seed: u64, trial: u64) -> Result<TrialInput> {
    let mut rng = trial_rng(seed, trial);
    let payload: Vec<u8> = (0..spec.payload_len())
        .map(|_| rng.random::<bool>() as u8)
        .collect();
    let info = if spec.crc().is_some() {
        attach_crc(spec, &payload)?
    } else {
        payload.clone()
    };
    let u = place_info(spec, &info)?;
    let x = encode(spec, &u)?;
    let rate = spec.info_len() as f64 / spec.block_len() as f64;
    let sigma2 = ChannelParams::new(ebn0_db, rate, seed)?.noise_variance();
    let noise = standard_normals(&mut rng, x.len());
    let y = modulate_with_noise(&x, &noise, sigma2);
    Ok(TrialInput {
        payload,
        u,
        llr: channel_lls(&y, sigma2)?,
    })
}

/// Runs every listed decoder on trial `trial`.
pub fn run_trial(
    cfg: &SweepConfig,
    decoders: &[DecoderId],
    ebn0_db: f64,
    trial: u64,
) -> Result<Vec<TrialRecord>> {
    let input = trial_input(&cfg.spec, ebn0_db, cfg.seed, trial)?;
    let k = cfg.spec.payload_len();
    decoders
        .iter()
        .map(|&decoder| {
            let (u_hat, crc_pass) = decoder.decode(&cfg.spec, &input.llr, cfg.opts)?;
            let decoded = extract_info(&cfg.spec, &u_hat)?;
            let bit_errors = decoded[..k]
                .iter()
                .zip(&input.payload)
                .filter(|(a, b)| a != b)
                .count() as u64;
            Ok(TrialRecord {
                trial,
                seed: cfg.seed,
                ebn0_db,
                decoder,
                bit_errors,
                frame_error: bit_errors > 0,
                crc_pass,
            })
        })
        .collect()
}

/// Aggregate of one (decoder, Eb/N0) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub decoder: DecoderId,
    pub ebn0_db: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    /// Payload bits per frame.
    pub payload_bits: u64,
}

impl CellResult {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / (self.payload_bits * self.trials) as f64
    }

    pub fn fer(&self) -> f64 {
        self.frame_errors as f64 / self.trials as f64
    }

    /// Binomial standard error of the FER estimate.
    pub fn fer_sigma(&self) -> f64 {
        let p = self.fer();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn fer_interval(&self) -> (f64, f64) {
        wilson_interval(self.frame_errors, self.trials, Z95)
    }
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// Simulates every (decoder, Eb/N0) cell. Cells are ordered by Eb/N0, then
/// by decoder as listed.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| {
        let mut out = Vec::new();
        for &ebn0 in &cfg.ebn0_db {
            out.extend(run_point(cfg, ebn0)?);
        }
        Ok(out)
    })
}

fn run_point(cfg: &SweepConfig, ebn0: f64) -> Result<Vec<CellResult>> {
    let payload_bits = cfg.spec.payload_len() as u64;
    let mut cells: Vec<CellResult> = cfg
        .decoders
        .iter()
        .map(|&decoder| CellResult {
            decoder,
            ebn0_db: ebn0,
            trials: 0,
            bit_errors: 0,
            frame_errors: 0,
            payload_bits,
        })
        .collect();
    let mut start = 0;
    while start < cfg.trials {
        let active: Vec<usize> = (0..cells.len())
            .filter(|&i| cfg.target_fe == 0 || cells[i].frame_errors < cfg.target_fe)
            .collect();
        if active.is_empty() {
            break;
        }
        let decoders: Vec<DecoderId> = active.iter().map(|&i| cfg.decoders[i]).collect();
        let end = (start + BATCH).min(cfg.trials);
        let zero = || vec![(0u64, 0u64); decoders.len()];
        let sums = (start..end)
            .into_par_iter()
            .map(|t| {
                run_trial(cfg, &decoders, ebn0, t).map(|recs| {
                    recs.iter()
                        .map(|r| (r.bit_errors, u64::from(r.frame_error)))
                        .collect::<Vec<_>>()
                })
            })
            .try_reduce(zero, |a, b| {
                Ok(a.iter()
                    .zip(&b)
                    .map(|(x, y)| (x.0 + y.0, x.1 + y.1))
                    .collect())
            })?;
        for (&i, (be, fe)) in active.iter().zip(sums) {
            cells[i].trials += end - start;
            cells[i].bit_errors += be;
            cells[i].frame_errors += fe;
        }
        start = end;
    }
    Ok(cells)
}

pub const CSV_HEADER: &str = "decoder,ebn0_db,trials,bit_errors,frame_errors,ber,fer,fer_lo,fer_hi";

/// One CSV line per cell, header first.
pub fn to_csv(cells: &[CellResult]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for c in cells {
        let (lo, hi) = c.fer_interval();
        s.push_str(&format!(
            "{},{},{},{},{},{:.6e},{:.6e},{:.6e},{:.6e}\n",
            c.decoder,
            c.ebn0_db,
            c.trials,
            c.bit_errors,
            c.frame_errors,
            c.ber(),
            c.fer(),
            lo,
            hi
        ));
    }
    s
}
