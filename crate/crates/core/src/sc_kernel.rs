//! Arikan's channel transformation in the log-likelihood domain and the
//! bit-decision SC decoder.
//!
//! Messages are kept per message-flow-graph stage in natural order: stage
//! `S_d` of the current node holds `N / 2^d` pairs. The node at depth `d`
//! containing leaf `j` (leaves at depth `D`) has index `j >> (D - d)`; an
//! even index is a left child (f-update), an odd one a right child
//! (g-update, conditioned on the left sibling's partial sums).
//!
//! Stage `S_1` is produced by a [`ChannelStage`], which either evaluates the
//! first transformation from the channel messages on demand or reads it from
//! a [`PcmsMemory`] table holding every possible outgoing value.

use serde::{Deserialize, Serialize};

use crate::channel::LLPair;
use crate::error::{invalid, Error, Result};
use crate::polar_code::{bit_reverse, CodeSpec};

/// Selects the max-log approximation or the exact log-sum-exp check-node update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum KernelMode {
    #[default]
    MaxLog,
    Exact,
}

/// Options shared by every decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DecodeOptions {
    pub mode: KernelMode,
    /// Serve stage `S_1` from the pre-computed table instead of channel messages.
    pub pcms: bool,
}

impl DecodeOptions {
    pub fn exact() -> Self {
        DecodeOptions {
            mode: KernelMode::Exact,
            pcms: false,
        }
    }

    pub fn with_pcms(mut self, pcms: bool) -> Self {
        self.pcms = pcms;
        self
    }
}

#[inline]
fn log_add(x: f64, y: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Check-node update with the max-log approximation:
/// `out(u) = max_v [a(u ⊕ v) + b(v)]`.
#[inline]
pub fn f_transform(a: LLPair, b: LLPair) -> LLPair {
    LLPair::new(
        (a.ll0 + b.ll0).max(a.ll1 + b.ll1),
        (a.ll1 + b.ll0).max(a.ll0 + b.ll1),
    )
}

/// Check-node update in the selected mode. The exact form drops the `log 1/2`
/// normalisation, which is common to every message of a stage.
#[inline]
pub fn f_transform_mode(a: LLPair, b: LLPair, mode: KernelMode) -> LLPair {
    match mode {
        KernelMode::MaxLog => f_transform(a, b),
        KernelMode::Exact => LLPair::new(
            log_add(a.ll0 + b.ll0, a.ll1 + b.ll1),
            log_add(a.ll1 + b.ll0, a.ll0 + b.ll1),
        ),
    }
}

/// Variable-node update: `out(u) = a(psum ⊕ u) + b(u)`.
#[inline]
pub fn g_transform(a: LLPair, b: LLPair, psum: u8) -> LLPair {
    if psum == 0 {
        LLPair::new(a.ll0 + b.ll0, a.ll1 + b.ll1)
    } else {
        LLPair::new(a.ll1 + b.ll0, a.ll0 + b.ll1)
    }
}

/// All possible outgoing messages of stage `S_1`: two values per f-node and
/// four per g-node (indexed by the conditioning partial sum). Once built, the
/// channel messages are no longer needed.
#[derive(Debug, Clone, PartialEq)]
pub struct PcmsMemory {
    f: Vec<LLPair>,
    g: Vec<[LLPair; 2]>,
}

impl PcmsMemory {
    /// Builds the table from natural-order channel messages.
    pub fn precompute(natural: &[LLPair], mode: KernelMode) -> Self {
        let half = natural.len() / 2;
        let (top, bot) = natural.split_at(half);
        let f = top
            .iter()
            .zip(bot)
            .map(|(&a, &b)| f_transform_mode(a, b, mode))
            .collect();
        let g = top
            .iter()
            .zip(bot)
            .map(|(&a, &b)| [g_transform(a, b, 0), g_transform(a, b, 1)])
            .collect();
        PcmsMemory { f, g }
    }

    /// Number of stored log-likelihood values.
    pub fn stored_values(&self) -> usize {
        2 * self.f.len() + 4 * self.g.len()
    }
}

#[derive(Debug, Clone)]
enum StageOne {
    Channel(Vec<LLPair>),
    Pcms(PcmsMemory),
}

/// Source of stage-`S_1` messages, shared read-only by every decoding path.
#[derive(Debug, Clone)]
pub struct ChannelStage {
    n: u32,
    mode: KernelMode,
    inner: StageOne,
}

impl ChannelStage {
    /// `llr_in` is in channel (codeword) order; it is re-indexed to natural order.
    pub fn new(llr_in: &[LLPair], mode: KernelMode, pcms: bool) -> Result<Self> {
        let len = llr_in.len();
        if !len.is_power_of_two() || len < 4 {
            return invalid(format!(
                "{len} channel messages; expected a power of two >= 4"
            ));
        }
        let n = len.trailing_zeros();
        let natural: Vec<LLPair> = (0..len).map(|k| llr_in[bit_reverse(k, n)]).collect();
        let inner = if pcms {
            StageOne::Pcms(PcmsMemory::precompute(&natural, mode))
        } else {
            StageOne::Channel(natural)
        };
        Ok(ChannelStage { n, mode, inner })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    pub fn is_pcms(&self) -> bool {
        matches!(self.inner, StageOne::Pcms(_))
    }

    /// Natural-order channel messages, unavailable under PCMS.
    pub fn natural(&self) -> Option<&[LLPair]> {
        match &self.inner {
            StageOne::Channel(ch) => Some(ch),
            StageOne::Pcms(_) => None,
        }
    }

    #[inline]
    fn f_out(&self, i: usize) -> LLPair {
        match &self.inner {
            StageOne::Channel(ch) => f_transform_mode(ch[i], ch[i + ch.len() / 2], self.mode),
            StageOne::Pcms(t) => t.f[i],
        }
    }

    #[inline]
    fn g_out(&self, i: usize, psum: u8) -> LLPair {
        match &self.inner {
            StageOne::Channel(ch) => g_transform(ch[i], ch[i + ch.len() / 2], psum),
            StageOne::Pcms(t) => t.g[i][psum as usize],
        }
    }

    /// Log-likelihood of a complete natural-order codeword, `Σ_k ll_k(x_k)`,
    /// accumulated pairwise through the stage-`S_1` g-values.
    pub fn codeword_ll(&self, natural_codeword: &[u8]) -> f64 {
        let half = natural_codeword.len() / 2;
        (0..half)
            .map(|i| {
                let top = natural_codeword[i];
                let bot = natural_codeword[i + half];
                self.g_out(i, top ^ bot).get(bot)
            })
            .sum()
    }
}

/// Per-path message memory for a tree whose leaves sit at depth `leaf_depth`.
#[derive(Debug, Clone)]
pub struct MessageMemory {
    leaf_depth: u32,
    /// `alpha[d]`, `1 <= d <= leaf_depth`, holds the `N >> d` messages of the current node.
    alpha: Vec<Vec<LLPair>>,
    /// `left[d]` holds the codeword of the last completed left child at depth `d`.
    left: Vec<Vec<u8>>,
    codeword: Vec<u8>,
    last_leaf: Option<usize>,
}

impl MessageMemory {
    pub fn new(n: u32, leaf_depth: u32) -> Self {
        assert!(leaf_depth <= n);
        let len = 1usize << n;
        let alpha = (0..=leaf_depth)
            .map(|d| {
                if d == 0 {
                    Vec::new()
                } else {
                    vec![LLPair::default(); len >> d]
                }
            })
            .collect();
        let left = (0..=leaf_depth)
            .map(|d| {
                if d == 0 {
                    Vec::new()
                } else {
                    vec![0u8; len >> d]
                }
            })
            .collect();
        MessageMemory {
            leaf_depth,
            alpha,
            left,
            codeword: Vec::new(),
            last_leaf: None,
        }
    }

    pub fn leaf_depth(&self) -> u32 {
        self.leaf_depth
    }

    /// Computes the messages of every stage on the way to leaf `j`.
    ///
    /// Ancestors shared with the previously visited leaf are reused; leaves
    /// must be visited in increasing order, but skipped leaves (frozen ones)
    /// only need to be committed.
    pub fn descend(&mut self, j: usize, stage: &ChannelStage) -> Result<()> {
        let depth = self.leaf_depth;
        if j >> depth != 0 {
            return invalid(format!("leaf {j} out of range"));
        }
        let first = match self.last_leaf {
            Some(prev) if prev == j => return Ok(()),
            Some(prev) if prev > j => {
                return Err(Error::Precondition(format!(
                    "leaf {j} visited after leaf {prev}"
                )))
            }
            Some(prev) => (1..=depth)
                .find(|&d| (j >> (depth - d)) != (prev >> (depth - d)))
                .unwrap_or(depth + 1),
            None => 1,
        };
        let mode = stage.mode();
        for d in first..=depth {
            let node = j >> (depth - d);
            let right = node & 1 == 1;
            let d = d as usize;
            if d == 1 {
                let out = &mut self.alpha[1];
                if right {
                    let psum = &self.left[1];
                    for (i, o) in out.iter_mut().enumerate() {
                        *o = stage.g_out(i, psum[i]);
                    }
                } else {
                    for (i, o) in out.iter_mut().enumerate() {
                        *o = stage.f_out(i);
                    }
                }
            } else {
                let (upper, lower) = self.alpha.split_at_mut(d);
                let parent = &upper[d - 1];
                let out = &mut lower[0];
                let half = out.len();
                if right {
                    let psum = &self.left[d];
                    for i in 0..half {
                        out[i] = g_transform(parent[i], parent[i + half], psum[i]);
                    }
                } else {
                    for i in 0..half {
                        out[i] = f_transform_mode(parent[i], parent[i + half], mode);
                    }
                }
            }
        }
        self.last_leaf = Some(j);
        Ok(())
    }

    /// Messages entering leaf `j` after [`descend`](Self::descend).
    pub fn leaf_messages<'a>(&'a self, stage: &'a ChannelStage) -> Result<&'a [LLPair]> {
        if self.leaf_depth == 0 {
            stage.natural().ok_or_else(|| {
                Error::Unsupported(
                    "a single-leaf tree reads the channel, which PCMS discards".into(),
                )
            })
        } else {
            Ok(&self.alpha[self.leaf_depth as usize])
        }
    }

    /// Records the natural-order codeword of leaf `j` and folds it into the
    /// partial sums of its ancestors.
    pub fn commit(&mut self, j: usize, leaf_codeword: &[u8]) {
        let mut depth = self.leaf_depth;
        let mut node = j;
        let mut cur = leaf_codeword.to_vec();
        loop {
            if depth == 0 {
                self.codeword = cur;
                return;
            }
            if node & 1 == 0 {
                self.left[depth as usize].copy_from_slice(&cur);
                return;
            }
            let left = &self.left[depth as usize];
            let mut parent = Vec::with_capacity(2 * cur.len());
            parent.extend(left.iter().zip(&cur).map(|(l, r)| l ^ r));
            parent.extend_from_slice(&cur);
            cur = parent;
            depth -= 1;
            node >>= 1;
        }
    }

    /// The natural-order codeword, complete once the last leaf is committed.
    pub fn codeword(&self) -> &[u8] {
        &self.codeword
    }
}

fn check_input(spec: &CodeSpec, llr_in: &[LLPair]) -> Result<()> {
    if llr_in.len() != spec.block_len() {
        return invalid(format!(
            "{} channel messages for a length-{} code",
            llr_in.len(),
            spec.block_len()
        ));
    }
    Ok(())
}

/// Bit-decision SC decoding with the default (max-log) kernel.
pub fn sc_decode(spec: &CodeSpec, llr_in: &[LLPair]) -> Result<Vec<u8>> {
    sc_decode_with(spec, llr_in, DecodeOptions::default())
}

/// Bit-decision SC decoding. An information bit is decided as 1 only when
/// its log-likelihood strictly exceeds that of 0.
pub fn sc_decode_with(spec: &CodeSpec, llr_in: &[LLPair], opts: DecodeOptions) -> Result<Vec<u8>> {
    check_input(spec, llr_in)?;
    let stage = ChannelStage::new(llr_in, opts.mode, opts.pcms)?;
    let n = spec.n();
    let mut mem = MessageMemory::new(n, n);
    let mut u_hat = vec![0u8; spec.block_len()];
    for (j, bit) in u_hat.iter_mut().enumerate() {
        if !spec.is_frozen(j) {
            mem.descend(j, &stage)?;
            let leaf = mem.alpha[n as usize][0];
            *bit = u8::from(leaf.ll1 > leaf.ll0);
        }
        mem.commit(j, &[*bit]);
    }
    Ok(u_hat)
}

/// The pair `LL(y, prefix | u_j)` for `j = prefix.len()`, computed through
/// the decoder's message memory.
pub fn bit_channel_ll(llr_in: &[LLPair], prefix: &[u8], mode: KernelMode) -> Result<LLPair> {
    let stage = ChannelStage::new(llr_in, mode, false)?;
    let n = stage.n();
    if prefix.len() >= llr_in.len() {
        return invalid("prefix covers the whole block");
    }
    let mut mem = MessageMemory::new(n, n);
    for (j, &b) in prefix.iter().enumerate() {
        mem.commit(j, &[b]);
    }
    mem.descend(prefix.len(), &stage)?;
    Ok(mem.alpha[n as usize][0])
}
