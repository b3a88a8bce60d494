//! Randomised equivalence suites run by the `oracle` subcommand.
//!
//! - `prop1`: the recursive symbol distribution against the direct-mapping
//!   product of bit channels.
//! - `reduction-chain`: decoders that must coincide for degenerate
//!   parameters (`M = 1`, `L = 1`).
//! - `pcms-equivalence`: every decoder with and without the stage-`S_1` table.
//! - `table-exactness`: the closed-form models on published values.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{channel_lls, modulate_with_noise, standard_normals, LLPair};
use crate::error::{invalid, Error, Result};
use crate::hw_model::{
    addition_count, latency, mem_bits_ll, mem_bits_pcms, pcms_saving, reference_presets,
    AdditionMode,
};
use crate::list_decoder::{scl_decode_list, sdscl_decode_list, PruneConfig, Pruning};
use crate::polar_code::{encode, CodeSpec};
use crate::sc_kernel::{sc_decode_with, DecodeOptions, KernelMode};
use crate::symbol_kernel::{direct_mapping_dist, sdsc_decode_with, symbol_dist, AdditionCounter};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Prop1,
    ReductionChain,
    PcmsEquivalence,
    TableExactness,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Prop1,
        Suite::ReductionChain,
        Suite::PcmsEquivalence,
        Suite::TableExactness,
    ];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Prop1 => "prop1",
            Suite::ReductionChain => "reduction-chain",
            Suite::PcmsEquivalence => "pcms-equivalence",
            Suite::TableExactness => "table-exactness",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.to_string() == s)
            .map_or_else(|| invalid(format!("unknown suite `{s}`")), Ok)
    }
}

/// Parses a suite name; `all` selects every suite.
pub fn parse_suites(s: &str) -> Result<Vec<Suite>> {
    if s == "all" {
        Ok(Suite::ALL.to_vec())
    } else {
        Ok(vec![s.parse()?])
    }
}

const MAX_REPORTED: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: u64,
    pub failed: u64,
    /// The first few failing cases.
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        SuiteReport {
            suite,
            cases: 0,
            failed: 0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < MAX_REPORTED {
                self.failures.push(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict} {} ({} cases, {} failed)",
            self.suite, self.cases, self.failed
        )?;
        for msg in &self.failures {
            write!(f, "\n  {msg}")?;
        }
        Ok(())
    }
}

/// Runs `suite` with `cases` random cases per configuration.
pub fn run_suite(suite: Suite, cases: u64, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match suite {
        Suite::Prop1 => prop1(cases, &mut rng),
        Suite::ReductionChain => reduction_chain(cases, &mut rng),
        Suite::PcmsEquivalence => pcms_equivalence(cases, &mut rng),
        Suite::TableExactness => Ok(table_exactness()),
    }
}

/// A random code of length `2^n` with a uniformly drawn frozen set.
pub fn random_code<R: Rng>(rng: &mut R, n: u32) -> CodeSpec {
    let len = 1usize << n;
    let k = rng.random_range(1..=len);
    let mut idx: Vec<usize> = (1..=len).collect();
    idx.shuffle(rng);
    let mut frozen = idx[..len - k].to_vec();
    frozen.sort_unstable();
    CodeSpec::from_frozen_set(n, k, &frozen).expect("valid random code")
}

/// Channel messages for a random data word of `spec` sent at noise
/// variance `sigma2`.
pub fn noisy_messages<R: Rng>(rng: &mut R, spec: &CodeSpec, sigma2: f64) -> Vec<LLPair> {
    let u: Vec<u8> = spec
        .frozen_mask()
        .iter()
        .map(|&f| if f { 0 } else { rng.random::<bool>() as u8 })
        .collect();
    let x = encode(spec, &u).expect("length matches");
    let noise = standard_normals(rng, x.len());
    let y = modulate_with_noise(&x, &noise, sigma2);
    channel_lls(&y, sigma2).expect("positive variance")
}

fn random_lls<R: Rng>(rng: &mut R, len: usize) -> Vec<LLPair> {
    (0..len)
        .map(|_| {
            let v: f64 = rng.random_range(-4.0..4.0);
            LLPair::new(v, -v)
        })
        .collect()
}

/// Largest deviation of `a − b` from its mean; zero when the two differ by a
/// constant.
pub fn offset_spread(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Indices within `tol` of the maximum.
pub fn argmax_set(v: &[f64], tol: f64) -> Vec<usize> {
    let best = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..v.len()).filter(|&i| v[i] >= best - tol).collect()
}

fn prop1<R: Rng>(cases: u64, rng: &mut R) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Prop1);
    for n in [3u32, 4, 5] {
        for m_bits in [2usize, 4, 8] {
            let len = 1usize << n;
            if m_bits > len {
                continue;
            }
            for _ in 0..cases {
                let llr = random_lls(rng, len);
                let j = rng.random_range(0..len / m_bits);
                let prefix: Vec<u8> = (0..j * m_bits)
                    .map(|_| rng.random::<bool>() as u8)
                    .collect();
                let mut c = AdditionCounter::default();
                let rec = symbol_dist(&llr, &prefix, m_bits, KernelMode::Exact, &mut c)?;
                let dir =
                    direct_mapping_dist(&llr, &prefix, m_bits, KernelMode::Exact, None, &mut c)?;
                let spread = offset_spread(rec.values(), dir.values());
                report.record(spread < 1e-9, || {
                    format!("N={len} M={m_bits} j={j}: exact spread {spread:e}")
                });
                let rec = symbol_dist(&llr, &prefix, m_bits, KernelMode::MaxLog, &mut c)?;
                let dir =
                    direct_mapping_dist(&llr, &prefix, m_bits, KernelMode::MaxLog, None, &mut c)?;
                let same = argmax_set(rec.values(), 1e-9) == argmax_set(dir.values(), 1e-9);
                report.record(same, || {
                    format!("N={len} M={m_bits} j={j}: max-log argmax differs")
                });
            }
        }
    }
    Ok(report)
}

fn reduction_chain<R: Rng>(cases: u64, rng: &mut R) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::ReductionChain);
    let opts = DecodeOptions::default();
    for _ in 0..cases {
        let n = rng.random_range(2..=6);
        let spec = random_code(rng, n);
        let sigma2 = rng.random_range(0.3..1.5);
        let llr = noisy_messages(rng, &spec, sigma2);
        let l = 1usize << rng.random_range(0..=3);
        let m_bits = 1usize << rng.random_range(1..=n.min(3));
        let q = rng.random_range(1..=1usize << m_bits);
        let tag = || {
            format!(
                "N={} K={} L={l} M={m_bits} q={q}",
                spec.block_len(),
                spec.info_len()
            )
        };

        let sc = sc_decode_with(&spec, &llr, opts)?;
        let scl = scl_decode_list(&spec, &llr, l, opts)?;
        let sdscl_m1 = sdscl_decode_list(
            &spec,
            &llr,
            l,
            1,
            Pruning::TwoStage(PruneConfig::new(2)),
            opts,
        )?;
        report.record(sdscl_m1.paths == scl.paths, || {
            format!("{}: sdscl(M=1) != scl", tag())
        });
        let scl1 = scl_decode_list(&spec, &llr, 1, opts)?;
        report.record(scl1.best() == sc, || format!("{}: scl(L=1) != sc", tag()));
        let sdsc1 = sdsc_decode_with(&spec, &llr, 1, opts)?.0;
        report.record(sdsc1 == sc, || format!("{}: sdsc(M=1) != sc", tag()));
        let sdsc = sdsc_decode_with(&spec, &llr, m_bits, opts)?.0;
        let sdscl1 = sdscl_decode_list(
            &spec,
            &llr,
            1,
            m_bits,
            Pruning::TwoStage(PruneConfig::new(q)),
            opts,
        )?;
        report.record(sdscl1.best() == sdsc, || {
            format!("{}: sdscl(L=1) != sdsc", tag())
        });
    }
    Ok(report)
}

fn pcms_equivalence<R: Rng>(cases: u64, rng: &mut R) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::PcmsEquivalence);
    for _ in 0..cases {
        let n = rng.random_range(2..=6);
        let spec = random_code(rng, n);
        let sigma2 = rng.random_range(0.3..1.5);
        let llr = noisy_messages(rng, &spec, sigma2);
        let mode = if rng.random::<bool>() {
            KernelMode::Exact
        } else {
            KernelMode::MaxLog
        };
        let plain = DecodeOptions { mode, pcms: false };
        let table = DecodeOptions { mode, pcms: true };
        // PCMS needs at least one B-TRANS stage above the symbol leaves.
        let m_bits = 1usize << rng.random_range(1..n.min(5));
        let l = 1usize << rng.random_range(0..=3);
        let tag = || {
            format!(
                "N={} K={} M={m_bits} L={l} {mode:?}",
                spec.block_len(),
                spec.info_len()
            )
        };
        report.record(
            sc_decode_with(&spec, &llr, plain)? == sc_decode_with(&spec, &llr, table)?,
            || format!("{}: sc", tag()),
        );
        report.record(
            sdsc_decode_with(&spec, &llr, m_bits, plain)?
                == sdsc_decode_with(&spec, &llr, m_bits, table)?,
            || format!("{}: sdsc", tag()),
        );
        report.record(
            scl_decode_list(&spec, &llr, l, plain)?.paths
                == scl_decode_list(&spec, &llr, l, table)?.paths,
            || format!("{}: scl", tag()),
        );
        let pr = Pruning::TwoStage(PruneConfig::new(2));
        report.record(
            sdscl_decode_list(&spec, &llr, l, m_bits, pr, plain)?.paths
                == sdscl_decode_list(&spec, &llr, l, m_bits, pr, table)?.paths,
            || format!("{}: sdscl", tag()),
        );
    }
    Ok(report)
}

fn table_exactness() -> SuiteReport {
    let mut report = SuiteReport::new(Suite::TableExactness);
    for (m, rec, dir) in [(2u32, 4u64, 4u64), (4, 24, 48), (8, 304, 1792)] {
        let got = (
            addition_count(m, AdditionMode::Recursive, m).ok(),
            addition_count(m, AdditionMode::Direct, m).ok(),
        );
        report.record(got == (Some(rec), Some(dir)), || {
            format!("additions M={m}: {got:?}, expected ({rec}, {dir})")
        });
    }
    let expected = [2069, 1634, 1540, 1288];
    for (p, want) in reference_presets().iter().zip(expected) {
        let got = latency(&p.params).map(|r| r.total).ok();
        report.record(got == Some(want), || {
            format!(
                "{} q={}: {got:?} cycles, expected {want}",
                p.name, p.params.q
            )
        });
    }
    let mem = (
        mem_bits_ll(1024, 4, 4).ok(),
        mem_bits_pcms(1024, 4, 4).ok(),
        pcms_saving(1024, 4, 4).ok(),
    );
    report.record(mem == (Some(57104), Some(43792), Some(13312)), || {
        format!("memory: {mem:?}")
    });
    report
}
