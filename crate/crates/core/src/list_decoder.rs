//! Successive-cancellation list decoding: bit-decision SCL, CRC-aided
//! selection, and `M`-bit symbol-decision SCL with two-stage list pruning.
//!
//! Path metrics are log-likelihoods of the decided prefix. All sorts use
//! one total order: higher score first, then lower parent index, then lower
//! symbol value.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::channel::LLPair;
use crate::error::{invalid, Error, Result};
use crate::polar_code::{check_crc, extract_info, natural_transform, CodeSpec};
use crate::sc_kernel::{ChannelStage, DecodeOptions, MessageMemory};
use crate::symbol_kernel::{
    candidate_symbol, masked_symbol_dist_from_node, symbol_bits, AdditionCounter,
};

/// One expansion of a parent path by a symbol value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredCandidate {
    pub score: f64,
    pub parent: usize,
    pub symbol: usize,
}

impl ScoredCandidate {
    pub fn new(score: f64, parent: usize, symbol: usize) -> Self {
        ScoredCandidate {
            score,
            parent,
            symbol,
        }
    }

    fn sentinel() -> Self {
        ScoredCandidate::new(f64::NEG_INFINITY, usize::MAX, usize::MAX)
    }

    fn is_sentinel(&self) -> bool {
        self.parent == usize::MAX
    }
}

/// `Less` when `a` is more reliable than `b`.
pub fn rank_cmp(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.parent.cmp(&b.parent))
        .then(a.symbol.cmp(&b.symbol))
}

/// BS_L: a bitonic network returning the `L` best of exactly `2L` items,
/// best first.
pub fn bs_sort(inputs: &[ScoredCandidate]) -> Result<Vec<ScoredCandidate>> {
    let n = inputs.len();
    if n < 2 || !n.is_power_of_two() {
        return invalid(format!(
            "BS_L needs 2L inputs with L a power of two, got {n}"
        ));
    }
    let mut a = inputs.to_vec();
    let mut k = 2;
    while k <= n {
        let mut j = k / 2;
        while j > 0 {
            for i in 0..n {
                let l = i ^ j;
                if l > i {
                    let best_first = i & k == 0;
                    let out_of_order = rank_cmp(&a[i], &a[l]) == Ordering::Greater;
                    if out_of_order == best_first {
                        a.swap(i, l);
                    }
                }
            }
            j /= 2;
        }
        k *= 2;
    }
    a.truncate(n / 2);
    Ok(a)
}

/// Arrangement of BS_L units in a list pruning network. Both produce the
/// same survivors; they differ in unit count and schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SorterKind {
    /// A bank of `G/2` units reused over `log2 G` passes.
    #[default]
    Folded,
    /// `G - 1` units in `log2 G` layers.
    Tree,
}

/// Structure of one network evaluation over `G` groups of `L` inputs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NetworkStats {
    pub units: usize,
    pub levels: usize,
    pub invocations: usize,
}

/// The `k` best of `items` through a network of BS units, best first.
pub fn select_top(
    items: &[ScoredCandidate],
    k: usize,
    sorter: SorterKind,
) -> (Vec<ScoredCandidate>, NetworkStats) {
    if items.len() <= k {
        let mut all = items.to_vec();
        all.sort_by(rank_cmp);
        return (all, NetworkStats::default());
    }
    let width = k.next_power_of_two();
    let groups = items.len().div_ceil(width).next_power_of_two().max(2);
    let mut padded = items.to_vec();
    padded.resize(groups * width, ScoredCandidate::sentinel());

    let levels = groups.trailing_zeros() as usize;
    let units = match sorter {
        SorterKind::Folded => groups / 2,
        SorterKind::Tree => groups - 1,
    };
    let mut invocations = 0;
    let mut layer: Vec<Vec<ScoredCandidate>> =
        padded.chunks(2 * width).map(<[_]>::to_vec).collect();
    let mut outputs;
    loop {
        outputs = Vec::with_capacity(layer.len());
        for pair in &layer {
            outputs.push(bs_sort(pair).expect("power-of-two inputs"));
            invocations += 1;
        }
        if outputs.len() == 1 {
            break;
        }
        match sorter {
            // Unit i of the next layer reads units 2i and 2i+1 of this one.
            SorterKind::Tree => {
                layer = outputs.chunks(2).map(|c| c.concat()).collect();
            }
            // The same bank is fed back through registers: unit i takes the
            // outputs previously produced by units 2i and 2i+1.
            SorterKind::Folded => {
                let mut bank = Vec::with_capacity(outputs.len() / 2);
                for i in 0..outputs.len() / 2 {
                    let mut joined = outputs[2 * i].clone();
                    joined.extend_from_slice(&outputs[2 * i + 1]);
                    bank.push(joined);
                }
                layer = bank;
            }
        }
    }
    let mut best = outputs.pop().unwrap_or_default();
    best.retain(|c| !c.is_sentinel());
    best.truncate(k);
    (
        best,
        NetworkStats {
            units,
            levels,
            invocations,
        },
    )
}

/// Two-stage list pruning parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneConfig {
    /// Survivors kept per parent by the first stage.
    pub q: usize,
    pub sorter: SorterKind,
}

impl PruneConfig {
    pub fn new(q: usize) -> Self {
        PruneConfig {
            q,
            sorter: SorterKind::default(),
        }
    }
}

/// Keeps the `q` best children of every parent, then the `list_size` best
/// of the remainder. With `q >= list_size` this is exactly the global top.
pub fn two_stage_prune(
    children: &[Vec<ScoredCandidate>],
    list_size: usize,
    q: usize,
    sorter: SorterKind,
) -> Result<Vec<ScoredCandidate>> {
    if q == 0 || list_size == 0 {
        return invalid("q and L must be positive");
    }
    let mut remaining = Vec::with_capacity(children.len() * q);
    for group in children {
        remaining.extend(select_top(group, q, sorter).0);
    }
    if remaining.iter().all(|c| c.score == f64::NEG_INFINITY) {
        return Err(Error::Internal("every candidate is masked".into()));
    }
    Ok(select_top(&remaining, list_size, sorter).0)
}

/// The `list_size` best candidates by a full comparison sort.
pub fn full_sort_top(children: &[Vec<ScoredCandidate>], list_size: usize) -> Vec<ScoredCandidate> {
    let mut all: Vec<ScoredCandidate> = children.iter().flatten().copied().collect();
    all.sort_by(rank_cmp);
    all.truncate(list_size);
    all
}

/// How the symbol-decision list decoder selects survivors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pruning {
    TwoStage(PruneConfig),
    /// Exact top-`L` by a full sort of every candidate.
    FullSort,
}

/// One list candidate.
#[derive(Debug, Clone)]
pub struct DecoderPath {
    mem: MessageMemory,
    decided: Vec<u8>,
    metric: f64,
}

impl DecoderPath {
    fn root(n: u32, leaf_depth: u32) -> Self {
        DecoderPath {
            mem: MessageMemory::new(n, leaf_depth),
            decided: vec![0u8; 1 << n],
            metric: 0.0,
        }
    }

    fn extend(&mut self, j: usize, bits: &[u8]) {
        let m = bits.len();
        self.decided[j * m..(j + 1) * m].copy_from_slice(bits);
        let mut c = bits.to_vec();
        natural_transform(&mut c);
        self.mem.commit(j, &c);
    }

    pub fn decided(&self) -> &[u8] {
        &self.decided
    }

    pub fn metric(&self) -> f64 {
        self.metric
    }
}

/// Final list, most reliable first.
#[derive(Debug, Clone)]
pub struct ListOutcome {
    /// `(û, log-likelihood of its codeword)`.
    pub paths: Vec<(Vec<u8>, f64)>,
    pub trace: ListTrace,
}

impl ListOutcome {
    pub fn best(&self) -> &[u8] {
        &self.paths[0].0
    }
}

/// Per-symbol bookkeeping of a list decode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ListTrace {
    /// Live paths after each symbol.
    pub alive: Vec<usize>,
    /// `(symbol index, information bits, additions per scored path)` for
    /// every symbol that went through pruning.
    pub scored: Vec<(usize, usize, Vec<u64>)>,
}

fn finish(paths: Vec<DecoderPath>, stage: &ChannelStage, trace: ListTrace) -> ListOutcome {
    let mut ranked: Vec<(usize, Vec<u8>, f64)> = paths
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let ll = stage.codeword_ll(p.mem.codeword());
            (i, p.decided, ll)
        })
        .collect();
    ranked.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    ListOutcome {
        paths: ranked.into_iter().map(|(_, u, ll)| (u, ll)).collect(),
        trace,
    }
}

fn check_list_args(spec: &CodeSpec, llr_in: &[LLPair], list_size: usize) -> Result<()> {
    if llr_in.len() != spec.block_len() {
        return invalid(format!(
            "{} channel messages for a length-{} code",
            llr_in.len(),
            spec.block_len()
        ));
    }
    if list_size == 0 || !list_size.is_power_of_two() {
        return invalid(format!("list size {list_size} is not a power of two"));
    }
    Ok(())
}

/// Bit-decision SCL decoding; returns the most reliable path.
pub fn scl_decode(spec: &CodeSpec, llr_in: &[LLPair], list_size: usize) -> Result<Vec<u8>> {
    Ok(
        scl_decode_list(spec, llr_in, list_size, DecodeOptions::default())?
            .best()
            .to_vec(),
    )
}

/// Bit-decision SCL decoding returning the whole final list.
///
/// Paths are duplicated while the list has room; afterwards the `2L`
/// extensions are reduced to `L` by a single BS_L unit.
pub fn scl_decode_list(
    spec: &CodeSpec,
    llr_in: &[LLPair],
    list_size: usize,
    opts: DecodeOptions,
) -> Result<ListOutcome> {
    check_list_args(spec, llr_in, list_size)?;
    let stage = ChannelStage::new(llr_in, opts.mode, opts.pcms)?;
    let n = spec.n();
    let mut paths = vec![DecoderPath::root(n, n)];
    let mut trace = ListTrace::default();
    for j in 0..spec.block_len() {
        if spec.is_frozen(j) {
            for p in &mut paths {
                p.extend(j, &[0]);
            }
        } else if 2 * paths.len() <= list_size {
            let mut ones = paths.clone();
            for p in &mut paths {
                p.extend(j, &[0]);
            }
            for p in &mut ones {
                p.extend(j, &[1]);
            }
            paths.extend(ones);
        } else {
            let mut s = Vec::with_capacity(2 * list_size);
            let mut ones = Vec::with_capacity(list_size);
            for (i, p) in paths.iter_mut().enumerate() {
                p.mem.descend(j, &stage)?;
                let leaf = p.mem.leaf_messages(&stage)?[0];
                s.push(ScoredCandidate::new(leaf.ll0, i, 0));
                ones.push(ScoredCandidate::new(leaf.ll1, i, 1));
            }
            s.extend(ones);
            let survivors = bs_sort(&s)?;
            paths = survivors
                .iter()
                .map(|c| {
                    let mut p = paths[c.parent].clone();
                    p.metric = c.score;
                    p.extend(j, &[c.symbol as u8]);
                    p
                })
                .collect();
        }
        trace.alive.push(paths.len());
    }
    Ok(finish(paths, &stage, trace))
}

/// Picks the most reliable CRC-valid path, falling back to the most
/// reliable one. Returns `(û, crc_pass)`.
pub fn select_crc_valid(spec: &CodeSpec, outcome: &ListOutcome) -> Result<(Vec<u8>, bool)> {
    if spec.crc().is_none() {
        return Err(Error::Unsupported("CRC-aided selection needs a CRC".into()));
    }
    for (u, _) in &outcome.paths {
        if check_crc(spec, &extract_info(spec, u)?)? {
            return Ok((u.clone(), true));
        }
    }
    Ok((outcome.best().to_vec(), false))
}

/// CA-SCL decoding: SCL followed by CRC-aided selection.
pub fn ca_scl_decode(
    spec: &CodeSpec,
    llr_in: &[LLPair],
    list_size: usize,
) -> Result<(Vec<u8>, bool)> {
    if spec.crc().is_none() {
        return Err(Error::Unsupported(
            "CA-SCL needs a CRC-concatenated code".into(),
        ));
    }
    let outcome = scl_decode_list(spec, llr_in, list_size, DecodeOptions::default())?;
    select_crc_valid(spec, &outcome)
}

/// `M`-bit symbol-decision SCL decoding with two-stage pruning; returns the
/// most reliable path.
pub fn sdscl_decode(
    spec: &CodeSpec,
    llr_in: &[LLPair],
    list_size: usize,
    m_bits: usize,
    prune: PruneConfig,
) -> Result<Vec<u8>> {
    Ok(sdscl_decode_list(
        spec,
        llr_in,
        list_size,
        m_bits,
        Pruning::TwoStage(prune),
        DecodeOptions::default(),
    )?
    .best()
    .to_vec())
}

/// `M`-bit symbol-decision SCL decoding returning the whole final list.
///
/// Per symbol with `β = 2^{|information bits|}` candidates: an all-frozen
/// symbol extends every path with zeros and skips scoring; if `αβ <= L`
/// every path is expanded by every candidate; otherwise all candidates are
/// scored and pruned back to `L`.
pub fn sdscl_decode_list(
    spec: &CodeSpec,
    llr_in: &[LLPair],
    list_size: usize,
    m_bits: usize,
    pruning: Pruning,
    opts: DecodeOptions,
) -> Result<ListOutcome> {
    check_list_args(spec, llr_in, list_size)?;
    let len = spec.block_len();
    if m_bits == 0 || !m_bits.is_power_of_two() || m_bits > len || m_bits > 16 {
        return invalid(format!(
            "symbol size {m_bits} must be a power of two dividing N, at most 16"
        ));
    }
    if let Pruning::TwoStage(cfg) = pruning {
        if cfg.q == 0 || cfg.q > 1 << m_bits {
            return invalid(format!("q = {} outside 1..=2^M", cfg.q));
        }
    }
    let stage = ChannelStage::new(llr_in, opts.mode, opts.pcms)?;
    let n = spec.n();
    let leaf_depth = n - m_bits.trailing_zeros();
    let mut paths = vec![DecoderPath::root(n, leaf_depth)];
    let mut trace = ListTrace::default();
    let zeros = vec![0u8; m_bits];
    for j in 0..len / m_bits {
        let frozen = &spec.frozen_mask()[j * m_bits..(j + 1) * m_bits];
        let info = frozen.iter().filter(|&&f| !f).count();
        let beta = 1usize << info;
        let alpha = paths.len();
        if beta == 1 {
            for p in &mut paths {
                p.extend(j, &zeros);
            }
        } else if alpha * beta <= list_size {
            let mut next = Vec::with_capacity(alpha * beta);
            for k in 0..beta {
                let bits = symbol_bits(candidate_symbol(k, frozen), m_bits as u32);
                for p in &paths {
                    let mut child = p.clone();
                    child.extend(j, &bits);
                    next.push(child);
                }
            }
            paths = next;
        } else {
            let mut children = Vec::with_capacity(alpha);
            let mut adds = Vec::with_capacity(alpha);
            for (i, p) in paths.iter_mut().enumerate() {
                p.mem.descend(j, &stage)?;
                let mut counter = AdditionCounter::default();
                let dist = masked_symbol_dist_from_node(
                    p.mem.leaf_messages(&stage)?,
                    frozen,
                    &mut counter,
                );
                adds.push(counter.0);
                children.push(
                    (0..beta)
                        .map(|k| {
                            let s = candidate_symbol(k, frozen);
                            ScoredCandidate::new(dist.get(s), i, s)
                        })
                        .collect::<Vec<_>>(),
                );
            }
            trace.scored.push((j, info, adds));
            let survivors = match pruning {
                Pruning::TwoStage(cfg) => two_stage_prune(&children, list_size, cfg.q, cfg.sorter)?,
                Pruning::FullSort => full_sort_top(&children, list_size),
            };
            paths = survivors
                .iter()
                .map(|c| {
                    let mut p = paths[c.parent].clone();
                    p.metric = c.score;
                    p.extend(j, &symbol_bits(c.symbol, m_bits as u32));
                    p
                })
                .collect();
        }
        trace.alive.push(paths.len());
    }
    Ok(finish(paths, &stage, trace))
}
