//! Symbol-wise channel transition probabilities and the `M`-bit
//! symbol-decision SC decoder.
//!
//! The distribution of an `M`-bit symbol is built from the `M` bit-channel
//! messages entering its subtree by repeated single-step combination
//! ([`combine`]): a `Φ`-bit distribution is the entrywise sum of two `Φ/2`-bit
//! ones, indexed by the odd/even split of the symbol. The last `m` stages of
//! the message flow graph perform these combinations; the remaining `n - m`
//! stages are ordinary f/g updates.
//!
//! [`direct_mapping_dist`] computes the same distribution independently, as
//! a sum of `M` per-substream bit-channel values, and serves as the oracle.

use crate::channel::LLPair;
use crate::error::{invalid, Error, Result};
use crate::polar_code::{bit_reverse, natural_transform, polar_transform, CodeSpec};
use crate::sc_kernel::{
    f_transform_mode, g_transform, ChannelStage, DecodeOptions, KernelMode, MessageMemory,
};

/// Log-likelihoods of every value of a `width`-bit symbol. Index bit
/// `width - 1` (the MSB) is the first bit of the symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolDist {
    width: u32,
    ll: Vec<f64>,
}

impl SymbolDist {
    pub fn new(width: u32, ll: Vec<f64>) -> Result<Self> {
        if width > 24 || ll.len() != 1usize << width {
            return invalid(format!(
                "{} entries do not describe a {width}-bit symbol",
                ll.len()
            ));
        }
        Ok(SymbolDist { width, ll })
    }

    fn from_pair(p: LLPair) -> Self {
        SymbolDist {
            width: 1,
            ll: vec![p.ll0, p.ll1],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.ll
    }

    pub fn get(&self, symbol: usize) -> f64 {
        self.ll[symbol]
    }

    /// Index of the largest entry; the lowest symbol value wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (s, &v) in self.ll.iter().enumerate().skip(1) {
            if v > self.ll[best] {
                best = s;
            }
        }
        best
    }
}

/// Counts the additions spent computing symbol distributions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AdditionCounter(pub u64);

impl AdditionCounter {
    #[inline]
    pub fn add(&mut self, n: u64) {
        self.0 += n;
    }
}

/// The bits of `symbol` as a `width`-bit vector, first bit = MSB.
pub fn symbol_bits(symbol: usize, width: u32) -> Vec<u8> {
    (0..width)
        .map(|t| ((symbol >> (width - 1 - t)) & 1) as u8)
        .collect()
}

/// Packs bits (first = MSB) into a symbol value.
pub fn bits_to_symbol(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
}

/// Operand indices of output entry `s` in a width-`phi` combination: the
/// first operand is read at `u_odd ⊕ u_even`, the second at `u_even`.
#[inline]
fn split_index(s: usize, phi: u32) -> (usize, usize) {
    let half = phi / 2;
    let mut ia = 0;
    let mut ib = 0;
    for k in 0..half {
        let odd = (s >> (phi - 1 - 2 * k)) & 1;
        let even = (s >> (phi - 2 - 2 * k)) & 1;
        ia = (ia << 1) | (odd ^ even);
        ib = (ib << 1) | even;
    }
    (ia, ib)
}

/// Single-step combination of two independent `Φ/2`-bit channels into a
/// `Φ`-bit one: `out(u) = a(u_odd ⊕ u_even) + b(u_even)`, one addition per entry.
pub fn combine(a: &SymbolDist, b: &SymbolDist) -> Result<SymbolDist> {
    let mut counter = AdditionCounter::default();
    combine_counted(a, b, None, &mut counter)
}

/// [`combine`] restricted to the entries allowed by `valid`; the others are
/// set to `-∞` without spending an addition.
pub fn combine_counted(
    a: &SymbolDist,
    b: &SymbolDist,
    valid: Option<&[bool]>,
    counter: &mut AdditionCounter,
) -> Result<SymbolDist> {
    if a.width != b.width {
        return invalid(format!("cannot combine widths {} and {}", a.width, b.width));
    }
    let phi = 2 * a.width;
    if phi > 24 {
        return invalid(format!("combined width {phi} too large"));
    }
    let size = 1usize << phi;
    let mut ll = vec![f64::NEG_INFINITY; size];
    let mut adds = 0u64;
    for (s, out) in ll.iter_mut().enumerate() {
        if valid.is_some_and(|v| !v[s]) {
            continue;
        }
        let (ia, ib) = split_index(s, phi);
        *out = a.ll[ia] + b.ll[ib];
        adds += 1;
    }
    counter.add(adds);
    Ok(SymbolDist { width: phi, ll })
}

fn combine_tree(
    leaves: &[LLPair],
    valid: Option<&[bool]>,
    counter: &mut AdditionCounter,
) -> SymbolDist {
    if leaves.len() == 1 {
        let mut d = SymbolDist::from_pair(leaves[0]);
        if let Some(v) = valid {
            for (x, &ok) in d.ll.iter_mut().zip(v) {
                if !ok {
                    *x = f64::NEG_INFINITY;
                }
            }
        }
        return d;
    }
    let half = leaves.len() / 2;
    let a = combine_tree(&leaves[..half], None, counter);
    let b = combine_tree(&leaves[half..], None, counter);
    combine_counted(&a, &b, valid, counter).expect("equal widths by construction")
}

/// Symbol distribution from the `M` natural-order messages entering a
/// symbol's subtree. All `2^M` entries are computed.
pub fn symbol_dist_from_node(node: &[LLPair], counter: &mut AdditionCounter) -> SymbolDist {
    masked_dist(node, None, counter)
}

/// As [`symbol_dist_from_node`], with symbols that violate `frozen`
/// (`frozen[t]` pins bit `t` of the symbol to zero) set to `-∞`.
/// Only the valid entries of the last combination cost additions.
pub fn masked_symbol_dist_from_node(
    node: &[LLPair],
    frozen: &[bool],
    counter: &mut AdditionCounter,
) -> SymbolDist {
    let valid = valid_symbols(frozen);
    masked_dist(node, Some(&valid), counter)
}

fn masked_dist(
    node: &[LLPair],
    valid: Option<&[bool]>,
    counter: &mut AdditionCounter,
) -> SymbolDist {
    let m = node.len();
    assert!(m.is_power_of_two(), "symbol size {m} is not a power of two");
    let bits = m.trailing_zeros();
    // Natural-order subtree messages, re-indexed so that the first half feeds
    // the first operand of each combination.
    let leaves: Vec<LLPair> = (0..m).map(|b| node[bit_reverse(b, bits)]).collect();
    combine_tree(&leaves, valid, counter)
}

/// Which symbol values keep every frozen position at zero.
pub fn valid_symbols(frozen: &[bool]) -> Vec<bool> {
    let width = frozen.len() as u32;
    let frozen_mask: usize = frozen
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(t, _)| 1usize << (width - 1 - t as u32))
        .sum();
    (0..1usize << width).map(|s| s & frozen_mask == 0).collect()
}

/// The `k`-th candidate of a symbol: `k` written MSB-first onto the
/// information positions, zeros on the frozen ones.
pub fn candidate_symbol(k: usize, frozen: &[bool]) -> usize {
    let width = frozen.len() as u32;
    let free: Vec<u32> = (0..width).filter(|&t| !frozen[t as usize]).collect();
    let count = free.len() as u32;
    free.iter().enumerate().fold(0, |acc, (i, &t)| {
        let bit = (k >> (count - 1 - i as u32)) & 1;
        acc | (bit << (width - 1 - t))
    })
}

fn check_symbol_size(len: usize, m_bits: usize) -> Result<u32> {
    if m_bits == 0 || !m_bits.is_power_of_two() {
        return invalid(format!("symbol size {m_bits} is not a power of two"));
    }
    if m_bits > len || !len.is_multiple_of(m_bits) {
        return invalid(format!("symbol size {m_bits} does not divide N = {len}"));
    }
    if m_bits > 16 {
        return invalid(format!("symbol size {m_bits} exceeds 16"));
    }
    Ok(m_bits.trailing_zeros())
}

/// `LL(y, prefix | u_{jM+1..jM+M})` for all `2^M` symbol values, with
/// `j = prefix.len() / M`, computed through the decoder's message memory.
pub fn symbol_dist(
    llr_in: &[LLPair],
    prefix: &[u8],
    m_bits: usize,
    mode: KernelMode,
    counter: &mut AdditionCounter,
) -> Result<SymbolDist> {
    let m = check_symbol_size(llr_in.len(), m_bits)?;
    if !prefix.len().is_multiple_of(m_bits) || prefix.len() >= llr_in.len() {
        return Err(Error::Precondition(format!(
            "prefix of {} bits does not end on a symbol boundary before N",
            prefix.len()
        )));
    }
    let stage = ChannelStage::new(llr_in, mode, false)?;
    let mut mem = MessageMemory::new(stage.n(), stage.n() - m);
    for (j, chunk) in prefix.chunks(m_bits).enumerate() {
        let mut c = chunk.to_vec();
        natural_transform(&mut c);
        mem.commit(j, &c);
    }
    let j = prefix.len() / m_bits;
    mem.descend(j, &stage)?;
    Ok(symbol_dist_from_node(mem.leaf_messages(&stage)?, counter))
}

/// Bit-channel `LL(y, prefix | u_i)`, `i = prefix.len()`, of a code whose
/// received messages are `block` (codeword order), evaluated straight from
/// the recursive definition of the transformation.
pub fn arikan_bit_channel(block: &[LLPair], prefix: &[u8], mode: KernelMode) -> LLPair {
    let len = block.len();
    debug_assert!(prefix.len() < len);
    if len == 1 {
        return block[0];
    }
    let half = len / 2;
    let i = prefix.len();
    let pairs = i / 2;
    let mut sums = Vec::with_capacity(pairs);
    let mut evens = Vec::with_capacity(pairs);
    for t in 0..pairs {
        sums.push(prefix[2 * t] ^ prefix[2 * t + 1]);
        evens.push(prefix[2 * t + 1]);
    }
    let a = arikan_bit_channel(&block[..half], &sums, mode);
    let b = arikan_bit_channel(&block[half..], &evens, mode);
    if i.is_multiple_of(2) {
        f_transform_mode(a, b, mode)
    } else {
        g_transform(a, b, prefix[i - 1])
    }
}

/// Symbol distribution by direct mapping: the received word is cut into `M`
/// blocks of `N/M`, each block contributes the bit-channel value of its own
/// substream bit, and a symbol costs `M - 1` additions.
///
/// The substream bits of symbol `u` are `w = u B_M F^{⊗m}`.
pub fn direct_mapping_dist(
    llr_in: &[LLPair],
    prefix: &[u8],
    m_bits: usize,
    mode: KernelMode,
    frozen: Option<&[bool]>,
    counter: &mut AdditionCounter,
) -> Result<SymbolDist> {
    check_symbol_size(llr_in.len(), m_bits)?;
    if !prefix.len().is_multiple_of(m_bits) || prefix.len() >= llr_in.len() {
        return Err(Error::Precondition(format!(
            "prefix of {} bits does not end on a symbol boundary before N",
            prefix.len()
        )));
    }
    let block_len = llr_in.len() / m_bits;
    let decided: Vec<Vec<u8>> = prefix.chunks(m_bits).map(polar_transform).collect();
    let per_block: Vec<LLPair> = (0..m_bits)
        .map(|b| {
            let sub_prefix: Vec<u8> = decided.iter().map(|w| w[b]).collect();
            arikan_bit_channel(
                &llr_in[b * block_len..(b + 1) * block_len],
                &sub_prefix,
                mode,
            )
        })
        .collect();
    let valid = frozen.map(valid_symbols);
    let mut ll = vec![f64::NEG_INFINITY; 1usize << m_bits];
    for (s, out) in ll.iter_mut().enumerate() {
        if valid.as_ref().is_some_and(|v| !v[s]) {
            continue;
        }
        let w = polar_transform(&symbol_bits(s, m_bits as u32));
        let mut acc = per_block[0].get(w[0]);
        for b in 1..m_bits {
            acc += per_block[b].get(w[b]);
        }
        counter.add(m_bits as u64 - 1);
        *out = acc;
    }
    SymbolDist::new(m_bits as u32, ll)
}

/// Per-symbol record of a symbol-decision decode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymbolTrace {
    /// `(symbol index, information bits, additions)` for every symbol whose
    /// distribution was computed; all-frozen symbols are bypassed.
    pub symbols: Vec<(usize, usize, u64)>,
}

/// `M`-bit symbol-decision SC decoding with the max-log kernel.
pub fn sdsc_decode(spec: &CodeSpec, llr_in: &[LLPair], m_bits: usize) -> Result<Vec<u8>> {
    sdsc_decode_with(spec, llr_in, m_bits, DecodeOptions::default()).map(|(u, _)| u)
}

/// `M`-bit symbol-decision SC decoding: each symbol maximises its
/// distribution over the values that keep frozen bits at zero.
pub fn sdsc_decode_with(
    spec: &CodeSpec,
    llr_in: &[LLPair],
    m_bits: usize,
    opts: DecodeOptions,
) -> Result<(Vec<u8>, SymbolTrace)> {
    let len = spec.block_len();
    if llr_in.len() != len {
        return invalid(format!(
            "{} channel messages for a length-{len} code",
            llr_in.len()
        ));
    }
    let m = check_symbol_size(len, m_bits)?;
    let stage = ChannelStage::new(llr_in, opts.mode, opts.pcms)?;
    let mut mem = MessageMemory::new(spec.n(), spec.n() - m);
    let mut u_hat = vec![0u8; len];
    let mut trace = SymbolTrace::default();
    for j in 0..len / m_bits {
        let range = j * m_bits..(j + 1) * m_bits;
        let frozen = &spec.frozen_mask()[range.clone()];
        let info = frozen.iter().filter(|&&f| !f).count();
        if info == 0 {
            mem.commit(j, &vec![0u8; m_bits]);
            continue;
        }
        mem.descend(j, &stage)?;
        let mut counter = AdditionCounter::default();
        let dist = masked_symbol_dist_from_node(mem.leaf_messages(&stage)?, frozen, &mut counter);
        trace.symbols.push((j, info, counter.0));
        let bits = symbol_bits(dist.argmax(), m_bits as u32);
        u_hat[range].copy_from_slice(&bits);
        let mut c = bits;
        natural_transform(&mut c);
        mem.commit(j, &c);
    }
    Ok((u_hat, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar_code::construct;
    use crate::sc_kernel::{bit_channel_ll, sc_decode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_lls(rng: &mut ChaCha8Rng, len: usize) -> Vec<LLPair> {
        (0..len)
            .map(|_| {
                let v: f64 = rng.random_range(-3.0..3.0);
                LLPair::new(v, -v)
            })
            .collect()
    }

    #[test]
    fn combine_phi2_transcribes_definition() {
        let a = SymbolDist::new(1, vec![1.0, 2.0]).unwrap();
        let b = SymbolDist::new(1, vec![10.0, 20.0]).unwrap();
        let out = combine(&a, &b).unwrap();
        // out(u1 u2) = a(u1 ^ u2) + b(u2)
        assert_eq!(out.values(), &[11.0, 22.0, 12.0, 21.0]);
        assert_eq!(out.get(0b10), 2.0 + 10.0);
    }

    #[test]
    fn combine_zero_and_mismatch() {
        let z = SymbolDist::new(2, vec![0.0; 4]).unwrap();
        assert_eq!(combine(&z, &z).unwrap().values(), &[0.0; 16]);
        let one = SymbolDist::new(1, vec![0.0; 2]).unwrap();
        assert!(combine(&z, &one).is_err());
    }

    #[test]
    fn candidate_enumeration_matches_mask() {
        let frozen = [true, false, true, false];
        let valid = valid_symbols(&frozen);
        let cands: Vec<usize> = (0..4).map(|k| candidate_symbol(k, &frozen)).collect();
        assert_eq!(cands, vec![0b0000, 0b0001, 0b0100, 0b0101]);
        assert_eq!(valid.iter().filter(|&&v| v).count(), 4);
        assert!(cands.iter().all(|&c| valid[c]));
    }

    #[test]
    fn width_one_bridges_to_bit_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let llr = random_lls(&mut rng, 16);
        let prefix = [1, 0, 0, 1, 1];
        let pair = bit_channel_ll(&llr, &prefix, KernelMode::MaxLog).unwrap();
        let mut c = AdditionCounter::default();
        let dist = symbol_dist(&llr, &prefix, 1, KernelMode::MaxLog, &mut c).unwrap();
        assert_eq!(dist.values(), &[pair.ll0, pair.ll1]);
        assert_eq!(c.0, 0);
        let direct =
            direct_mapping_dist(&llr, &prefix, 1, KernelMode::MaxLog, None, &mut c).unwrap();
        assert_eq!(direct.values(), dist.values());
    }

    #[test]
    fn n8_m4_recursive_and_direct_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let llr = random_lls(&mut rng, 8);
        let mut rec = AdditionCounter::default();
        let mut dir = AdditionCounter::default();
        let a = symbol_dist(&llr, &[], 4, KernelMode::Exact, &mut rec).unwrap();
        let b = direct_mapping_dist(&llr, &[], 4, KernelMode::Exact, None, &mut dir).unwrap();
        assert_eq!((rec.0, dir.0), (24, 48));
        let off = a.get(0) - b.get(0);
        for s in 0..16 {
            assert!((a.get(s) - b.get(s) - off).abs() < 1e-9);
        }
    }

    #[test]
    fn sdsc_m1_is_sc() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = construct(5, 16, 0.5).unwrap();
        for _ in 0..200 {
            let llr = random_lls(&mut rng, 32);
            assert_eq!(
                sdsc_decode(&spec, &llr, 1).unwrap(),
                sc_decode(&spec, &llr).unwrap()
            );
        }
    }

    #[test]
    fn all_frozen_symbols_are_bypassed() {
        let spec = construct(4, 4, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let llr = random_lls(&mut rng, 16);
        let (u, trace) = sdsc_decode_with(&spec, &llr, 4, DecodeOptions::default()).unwrap();
        for j in 0..4 {
            if spec.symbol_info_count(j, 4) == 0 {
                assert_eq!(&u[j * 4..j * 4 + 4], &[0, 0, 0, 0]);
                assert!(trace.symbols.iter().all(|&(s, _, _)| s != j));
            }
        }
    }

    #[test]
    fn bad_symbol_sizes() {
        let spec = construct(3, 4, 0.5).unwrap();
        let llr = vec![LLPair::default(); 8];
        assert!(sdsc_decode(&spec, &llr, 3).is_err());
        assert!(sdsc_decode(&spec, &llr, 16).is_err());
        let mut c = AdditionCounter::default();
        assert!(matches!(
            symbol_dist(&llr, &[0, 1], 4, KernelMode::MaxLog, &mut c),
            Err(Error::Precondition(_))
        ));
    }
}
