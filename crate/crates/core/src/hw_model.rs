//! Closed-form hardware models: LL memory with and without pre-computation
//! (PCMS), symbol-combination addition counts, clock-cycle latency of the
//! symbol-decision SCL architecture and its speed gain over bit decisions.
//!
//! Memory and cycle counts are integers. The only real-valued input is the
//! frozen-vector ratio `gamma`; the symbol phase `(1 − γ)(N/M)(T_S + T_N)`
//! is rounded up to whole cycles.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::polar_code::CodeSpec;

fn log2_exact(x: i64, what: &str) -> Result<i64> {
    if x <= 0 || x & (x - 1) != 0 {
        return invalid(format!("{what} = {x} is not a power of two"));
    }
    Ok(x.trailing_zeros() as i64)
}

/// Bits of LL storage in a list decoder of length `n` with `l` paths and
/// `q_ch`-bit channel messages.
pub fn mem_bits_ll(n: i64, l: i64, q_ch: i64) -> Result<i64> {
    let log_n = log2_exact(n, "N")?;
    if l <= 0 || q_ch <= 0 {
        return invalid("L and Q_ch must be positive");
    }
    Ok(2 * (l + 1) * n * q_ch + 4 * l * (n - log_n - q_ch - 1))
}

/// Bits of LL storage when stage `S_1` is pre-computed and the channel
/// messages are dropped.
pub fn mem_bits_pcms(n: i64, l: i64, q_ch: i64) -> Result<i64> {
    let log_n = log2_exact(n, "N")?;
    if l <= 0 || q_ch <= 0 {
        return invalid("L and Q_ch must be positive");
    }
    Ok(3 * n * (q_ch + 1) + l * n * (q_ch + 3) - 4 * l * (log_n + q_ch + 1))
}

/// `mem_bits_ll − mem_bits_pcms`.
pub fn pcms_saving(n: i64, l: i64, q_ch: i64) -> Result<i64> {
    log2_exact(n, "N")?;
    if l <= 0 || q_ch <= 0 {
        return invalid("L and Q_ch must be positive");
    }
    Ok(n * (l * q_ch + l - q_ch - 3))
}

/// How a symbol distribution is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdditionMode {
    /// Pairwise symbol combination.
    Recursive,
    /// Product of `M` bit-channel probabilities per candidate.
    Direct,
}

/// Additions needed for one `M`-bit symbol distribution with `info_bits`
/// unfrozen bits.
pub fn addition_count(m: u32, mode: AdditionMode, info_bits: u32) -> Result<u64> {
    if m < 2 || !m.is_power_of_two() || m > 32 {
        return invalid(format!("symbol size {m} must be a power of two in 2..=32"));
    }
    if info_bits > m {
        return invalid(format!("{info_bits} information bits in a {m}-bit symbol"));
    }
    let top = 1u64 << info_bits;
    Ok(match mode {
        AdditionMode::Recursive => {
            let levels = m.trailing_zeros();
            (1..levels).map(|i| (1u64 << i) << (m >> i)).sum::<u64>() + top
        }
        AdditionMode::Direct => top * u64::from(m - 1),
    })
}

/// How the LL adders are shared between S-COMBS stages and list pruning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheduling {
    /// All `2^M L` top-stage messages fit the `4P` adders in one cycle.
    Serial,
    /// The pruning network starts while top-stage messages are still being
    /// produced, `4P` per cycle.
    Overlapping,
}

/// Inputs of the latency model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HwParams {
    /// Code length `N`.
    pub block_len: i64,
    /// Symbol size `M`.
    pub symbol_len: i64,
    /// List size `L`.
    pub list_size: i64,
    /// Processing units `P`; each provides four adders.
    pub units: i64,
    pub q: i64,
    pub q_ch: i64,
    /// Fraction of the `N/M` symbols that are entirely frozen.
    pub gamma: f64,
    /// S-COMBS cycles per symbol; derived from the scheduling rule when absent.
    pub t_s: Option<i64>,
    /// Extra pruning cycles per symbol.
    pub t_n: i64,
    /// Derived from the adder budget when absent.
    pub scheduling: Option<Scheduling>,
    pub pcms: bool,
}

impl HwParams {
    /// `N = 1024`, `L = 4`, `P = 64`, `Q_ch = 4`, PCMS on.
    pub fn new(symbol_len: i64, gamma: f64, t_n: i64, q: i64) -> Self {
        HwParams {
            block_len: 1024,
            symbol_len,
            list_size: 4,
            units: 64,
            q,
            q_ch: 4,
            gamma,
            t_s: None,
            t_n,
            scheduling: None,
            pcms: true,
        }
    }

    pub fn with_t_s(mut self, t_s: i64) -> Self {
        self.t_s = Some(t_s);
        self
    }

    pub fn validate(&self) -> Result<()> {
        log2_exact(self.block_len, "N")?;
        log2_exact(self.symbol_len, "M")?;
        log2_exact(self.list_size, "L")?;
        log2_exact(self.units, "P")?;
        if self.symbol_len > self.block_len {
            return invalid("M exceeds N");
        }
        if self.symbol_len > 32 {
            return invalid("M above 32 is outside the model");
        }
        if self.q <= 0 || self.q_ch <= 0 || self.t_n < 0 || self.t_s.is_some_and(|t| t < 0) {
            return invalid("q and Q_ch must be positive, T_S and T_N non-negative");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return invalid(format!("gamma {} outside [0, 1]", self.gamma));
        }
        let nl = self.block_len * self.list_size;
        let floor = if self.pcms { 8 } else { 4 } * self.units;
        if nl < floor {
            return invalid(format!(
                "NL = {nl} below {floor}: the B-TRANS term would be negative"
            ));
        }
        Ok(())
    }

    fn symbol_messages(&self) -> i64 {
        self.list_size << self.symbol_len
    }

    fn adders(&self) -> i64 {
        4 * self.units
    }

    /// The scheduling implied by the adder budget.
    pub fn default_scheduling(&self) -> Scheduling {
        if self.symbol_messages() <= self.adders() {
            Scheduling::Serial
        } else {
            Scheduling::Overlapping
        }
    }

    /// `m` when the adders cover a whole symbol stage, one extra cycle per
    /// `4P` top-stage messages when only the lower stages fit, otherwise the
    /// general bound.
    pub fn default_t_s(&self) -> i64 {
        let m = self.symbol_len.trailing_zeros() as i64;
        let adders = self.adders();
        let top = self.symbol_messages();
        if top <= adders {
            m
        } else if (self.list_size << (self.symbol_len / 2)) <= adders {
            m - 1 + div_ceil(top, adders)
        } else {
            t_s_bound(self.symbol_len, self.list_size, self.units)
        }
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    (a + b - 1) / b
}

/// `Σ_{i=1}^{m} ⌈2^{2^i} L / 4P⌉`, an upper bound on the S-COMBS cycles.
pub fn t_s_bound(symbol_len: i64, list_size: i64, units: i64) -> i64 {
    let m = symbol_len.trailing_zeros();
    (1..=m)
        .map(|i| div_ceil(list_size << (1i64 << i), 4 * units))
        .sum()
}

/// Cycle breakdown of one decode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub t_b: i64,
    pub t_s: i64,
    pub t_n: i64,
    /// `⌈(1 − γ)(N/M)(T_S + T_N)⌉`.
    pub symbol_cycles: i64,
    /// Cycles trimmed from `t_b` by pre-computation.
    pub pcms_saving: i64,
    pub scheduling: Scheduling,
    pub total: i64,
}

/// `N/M`-length bit-decision SCL latency with `P/M` units. `M = 1` gives
/// the bit-decision baseline.
fn b_trans_cycles(h: &HwParams) -> Result<(i64, i64)> {
    let nl_p = h.block_len * h.list_size / h.units;
    let log = log2_exact(h.block_len * h.list_size / (4 * h.units), "NL/4P")?;
    let saving = if h.pcms { nl_p } else { 0 };
    Ok((2 * h.block_len / h.symbol_len + nl_p * log - saving, saving))
}

/// Clock cycles of an `M`-bit symbol-decision SCL decode.
pub fn latency(h: &HwParams) -> Result<LatencyReport> {
    h.validate()?;
    let (t_b, pcms_saving) = b_trans_cycles(h)?;
    if h.symbol_len == 1 {
        return Ok(LatencyReport {
            t_b,
            t_s: 0,
            t_n: 0,
            symbol_cycles: 0,
            pcms_saving,
            scheduling: Scheduling::Serial,
            total: t_b,
        });
    }
    let natural = h.default_scheduling();
    let scheduling = match h.scheduling {
        Some(s) if s != natural => {
            let (msgs, adders) = (h.symbol_messages(), h.adders());
            return invalid(match s {
                Scheduling::Serial => {
                    format!("serial scheduling needs 2^M L <= 4P, but 2^M L = {msgs} > {adders}")
                }
                Scheduling::Overlapping => format!(
                    "overlapping scheduling needs 2^M L > 4P, but 2^M L = {msgs} <= {adders}"
                ),
            });
        }
        _ => natural,
    };
    let t_s = h.t_s.unwrap_or_else(|| h.default_t_s());
    let symbols = h.block_len / h.symbol_len;
    let exact = (1.0 - h.gamma) * symbols as f64 * (t_s + h.t_n) as f64;
    // Guard against representation error pushing an integer product up.
    let symbol_cycles = (exact - 1e-9).ceil().max(0.0) as i64;
    Ok(LatencyReport {
        t_b,
        t_s,
        t_n: h.t_n,
        symbol_cycles,
        pcms_saving,
        scheduling,
        total: symbol_cycles + t_b,
    })
}

/// `2N + (NL/P) log2(NL/8P)`: bit-decision SCL with pre-computation.
pub fn baseline_cycles(block_len: i64, list_size: i64, units: i64) -> Result<i64> {
    let nl_p = block_len * list_size / units;
    let log = log2_exact(block_len * list_size / (8 * units), "NL/8P")?;
    Ok(2 * block_len + nl_p * log)
}

/// `T(1) / T(M)`.
pub fn speed_gain(h: &HwParams) -> Result<f64> {
    let t = latency(h)?;
    let base = baseline_cycles(h.block_len, h.list_size, h.units)?;
    if h.symbol_len == 1 {
        return Ok(1.0);
    }
    Ok(base as f64 / t.total as f64)
}

/// Fraction of `M`-bit symbols of `spec` with no information bit.
pub fn gamma_of(spec: &CodeSpec, symbol_len: usize) -> Result<f64> {
    let len = spec.block_len();
    if symbol_len == 0 || !symbol_len.is_power_of_two() || symbol_len > len {
        return invalid(format!(
            "symbol size {symbol_len} must be a power of two dividing N"
        ));
    }
    let symbols = len / symbol_len;
    let frozen = spec
        .frozen_mask()
        .chunks(symbol_len)
        .filter(|c| c.iter().all(|&f| f))
        .count();
    Ok(frozen as f64 / symbols as f64)
}

/// A named configuration of the (1024, 480) CRC-concatenated code with
/// `L = 4` and `P = 64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub params: HwParams,
}

/// The published SDSCL rows, with `T_S` left to the scheduling rule.
pub fn reference_presets() -> [Preset; 4] {
    [
        Preset {
            name: "SDSCL-2",
            params: HwParams::new(2, 0.445, 2, 4),
        },
        Preset {
            name: "SDSCL-4",
            params: HwParams::new(4, 0.395, 4, 4),
        },
        Preset {
            name: "SDSCL-8",
            params: HwParams::new(8, 0.344, 7, 4),
        },
        Preset {
            name: "SDSCL-8",
            params: HwParams::new(8, 0.344, 4, 2),
        },
    ]
}
