//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Reference values are computed here by brute force, independently
//! of the library's recursions.

use std::process::ExitCode;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdpolar::hw_model::{
    addition_count, latency, mem_bits_ll, mem_bits_pcms, pcms_saving, reference_presets,
    speed_gain, AdditionMode, HwParams,
};
use sdpolar::list_decoder::{
    full_sort_top, sdscl_decode_list, two_stage_prune, Pruning, ScoredCandidate, SorterKind,
};
use sdpolar::oracle::{noisy_messages, random_code, run_suite, Suite};
use sdpolar::polar_code::{attach_crc, check_crc, construct, encode, CodeSpec, CrcConfig};
use sdpolar::sc_kernel::{DecodeOptions, KernelMode};
use sdpolar::sim::{parse_decoders, run_sweep, CellResult, SweepConfig};
use sdpolar::symbol_kernel::{sdsc_decode_with, symbol_dist, AdditionCounter};
use sdpolar::LLPair;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `x = u G` with `G = B_N F^{⊗n}` via Arikan's split
/// `x = [(u_odd ⊕ u_even) G_{N/2}, u_even G_{N/2}]`.
fn encode_ref(u: &[u8]) -> Vec<u8> {
    if u.len() == 1 {
        return u.to_vec();
    }
    let odd: Vec<u8> = u.iter().step_by(2).copied().collect();
    let even: Vec<u8> = u.iter().skip(1).step_by(2).copied().collect();
    let mixed: Vec<u8> = odd.iter().zip(&even).map(|(a, b)| a ^ b).collect();
    let mut x = encode_ref(&mixed);
    x.extend(encode_ref(&even));
    x
}

fn to_bits(v: usize, width: usize) -> Vec<u8> {
    (0..width).rev().map(|k| ((v >> k) & 1) as u8).collect()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi + v.iter().map(|x| (x - hi).exp()).sum::<f64>().ln()
}

fn word_ll(llr: &[LLPair], x: &[u8]) -> f64 {
    llr.iter().zip(x).map(|(p, &b)| p.get(b)).sum()
}

/// Symbol log-likelihoods by enumerating every completion of the data word.
fn brute_symbol_ll(llr: &[LLPair], prefix: &[u8], m: usize) -> Vec<f64> {
    let future = llr.len() - prefix.len() - m;
    (0..1usize << m)
        .map(|s| {
            let terms: Vec<f64> = (0..1usize << future)
                .map(|f| {
                    let mut u = prefix.to_vec();
                    u.extend(to_bits(s, m));
                    u.extend(to_bits(f, future));
                    word_ll(llr, &encode_ref(&u))
                })
                .collect();
            log_sum_exp(&terms)
        })
        .collect()
}

fn spread(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    d.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - d.iter().copied().fold(f64::INFINITY, f64::min)
}

// Probability-domain channels over BPSK/AWGN.
fn density(y: f64, bit: u8, sigma2: f64) -> f64 {
    let s = 1.0 - 2.0 * f64::from(bit);
    (-(y - s) * (y - s) / (2.0 * sigma2)).exp() / (2.0 * std::f64::consts::PI * sigma2).sqrt()
}

fn w_word(y: &[f64], u: &[u8], sigma2: f64) -> f64 {
    encode_ref(u)
        .iter()
        .zip(y)
        .map(|(&b, &v)| density(v, b, sigma2))
        .product()
}

/// `W_{N,Φ}(y, prefix | sym)`: the joint law of `y` and the decided prefix
/// given the next `Φ` bits, marginalising uniform future bits.
fn w_symbol(y: &[f64], prefix: &[u8], sym: &[u8], sigma2: f64) -> f64 {
    let len = y.len();
    let future = len - prefix.len() - sym.len();
    let scale = 0.5f64.powi((len - sym.len()) as i32);
    (0..1usize << future)
        .map(|f| {
            let mut u = prefix.to_vec();
            u.extend_from_slice(sym);
            u.extend(to_bits(f, future));
            scale * w_word(y, &u, sigma2)
        })
        .sum()
}

fn odd_even(v: &[u8]) -> (Vec<u8>, Vec<u8>) {
    (
        v.iter().step_by(2).copied().collect(),
        v.iter().skip(1).step_by(2).copied().collect(),
    )
}

fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

fn criterion_1() -> Result<String, String> {
    for (m, rec, dir) in [(2u32, 4u64, 4u64), (4, 24, 48), (8, 304, 1792)] {
        let got = (
            addition_count(m, AdditionMode::Recursive, m).unwrap(),
            addition_count(m, AdditionMode::Direct, m).unwrap(),
        );
        ensure(got == (rec, dir), || {
            format!("M={m}: {got:?}, expected ({rec}, {dir})")
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut symbols = 0;
    for trial in 0..60 {
        let spec = if trial % 3 == 0 {
            construct(6, 64, 0.5).unwrap()
        } else {
            random_code(&mut rng, 6)
        };
        let llr = noisy_messages(&mut rng, &spec, 0.7);
        for m in [2usize, 4, 8] {
            let (_, trace) = sdsc_decode_with(&spec, &llr, m, DecodeOptions::default()).unwrap();
            for &(j, info, adds) in &trace.symbols {
                let want = addition_count(m as u32, AdditionMode::Recursive, info as u32).unwrap();
                ensure(adds == want, || {
                    format!("sdsc M={m} symbol {j}: {adds} additions, model {want}")
                })?;
                symbols += 1;
            }
            let out = sdscl_decode_list(
                &spec,
                &llr,
                4,
                m,
                Pruning::FullSort,
                DecodeOptions::default(),
            )
            .unwrap();
            for (j, info, adds) in &out.trace.scored {
                let want = addition_count(m as u32, AdditionMode::Recursive, *info as u32).unwrap();
                ensure(adds.iter().all(|&a| a == want), || {
                    format!("sdscl M={m} symbol {j}: {adds:?}, model {want}")
                })?;
                symbols += adds.len();
            }
        }
    }
    Ok(format!(
        "4/4, 24/48, 304/1792; counters agree on {symbols} decoded symbols"
    ))
}

fn criterion_2() -> Result<String, String> {
    let expected = [2069, 1634, 1540, 1288];
    let mut got = Vec::new();
    for (p, want) in reference_presets().iter().zip(expected) {
        let t = latency(&p.params).map_err(|e| e.to_string())?.total;
        ensure(t == want, || {
            format!("{} q={}: {t} cycles, expected {want}", p.name, p.params.q)
        })?;
        got.push(t.to_string());
    }
    Ok(got.join(" / "))
}

fn criterion_3() -> Result<String, String> {
    let ll = mem_bits_ll(1024, 4, 4).unwrap();
    let pc = mem_bits_pcms(1024, 4, 4).unwrap();
    let sv = pcms_saving(1024, 4, 4).unwrap();
    ensure((ll, pc, sv) == (57104, 43792, 13312), || {
        format!("({ll}, {pc}, {sv})")
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let n = 1i64 << rng.random_range(2..=20);
        let l = rng.random_range(1..=64);
        let q = rng.random_range(1..=16);
        let (a, b) = (
            mem_bits_ll(n, l, q).unwrap(),
            mem_bits_pcms(n, l, q).unwrap(),
        );
        let identity = n * (l * q + l - q - 3);
        ensure(a - b == identity, || {
            format!("N={n} L={l} Q={q}: {} != {identity}", a - b)
        })?;
    }
    Ok("57104, 43792, 13312; identity holds on 10^4 random (N, L, Q)".into())
}

fn criterion_4() -> Result<String, String> {
    let report = run_suite(Suite::Prop1, 1000, 4).map_err(|e| e.to_string())?;
    ensure(report.passed(), || report.to_string())?;

    // Recursion against full enumeration of the data word.
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut brute = 0;
    for (len, cases) in [(8usize, 1000), (16, 100)] {
        for m in [2usize, 4, 8] {
            for _ in 0..cases {
                let llr: Vec<LLPair> = (0..len)
                    .map(|_| {
                        let v: f64 = rng.random_range(-3.0..3.0);
                        LLPair::new(v, -v)
                    })
                    .collect();
                let j = rng.random_range(0..len / m);
                let prefix: Vec<u8> = (0..j * m).map(|_| rng.random::<bool>() as u8).collect();
                let mut c = AdditionCounter::default();
                let rec = symbol_dist(&llr, &prefix, m, KernelMode::Exact, &mut c).unwrap();
                let reference = brute_symbol_ll(&llr, &prefix, m);
                let s = spread(rec.values(), &reference);
                ensure(s < 1e-9, || {
                    format!("N={len} M={m} j={j}: spread {s:e} against enumeration")
                })?;
                brute += 1;
            }
        }
    }

    // Probability domain: the 2^{Φ−1} factor linking a Φ-bit channel to the
    // bit channel of its last bit, and one combination step.
    let sigma2 = 0.6;
    for (len, phi) in [(4usize, 2usize), (8, 2), (8, 4)] {
        for _ in 0..50 {
            let y: Vec<f64> = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
            let i = rng.random_range(0..len / phi);
            let prefix: Vec<u8> = (0..i * phi).map(|_| rng.random::<bool>() as u8).collect();
            let sym: Vec<u8> = (0..phi).map(|_| rng.random::<bool>() as u8).collect();
            let w = w_symbol(&y, &prefix, &sym, sigma2);

            let mut bit_prefix = prefix.clone();
            bit_prefix.extend_from_slice(&sym[..phi - 1]);
            let w_bit = w_symbol(&y, &bit_prefix, &sym[phi - 1..], sigma2);
            let scaled = 2f64.powi(phi as i32 - 1) * w_bit;
            ensure((w - scaled).abs() <= 1e-12 * w.abs().max(1e-300), || {
                format!("N={len} Φ={phi}: W = {w:e}, 2^(Φ-1) W_bit = {scaled:e}")
            })?;

            let half = len / 2;
            let (po, pe) = odd_even(&prefix);
            let (so, se) = odd_even(&sym);
            let combined = w_symbol(&y[..half], &xor(&po, &pe), &xor(&so, &se), sigma2)
                * w_symbol(&y[half..], &pe, &se, sigma2);
            ensure((w - combined).abs() <= 1e-12 * w.abs().max(1e-300), || {
                format!("N={len} Φ={phi}: W = {w:e}, combination {combined:e}")
            })?;
        }
    }
    Ok(format!(
        "{} direct-mapping cases, {brute} enumeration cases, normalisation checked",
        report.cases
    ))
}

fn criterion_5() -> Result<String, String> {
    let chain = run_suite(Suite::ReductionChain, 1000, 5).map_err(|e| e.to_string())?;
    ensure(chain.passed(), || chain.to_string())?;
    let pcms = run_suite(Suite::PcmsEquivalence, 1000, 55).map_err(|e| e.to_string())?;
    ensure(pcms.passed(), || pcms.to_string())?;
    Ok(format!(
        "{} chain checks, {} PCMS checks",
        chain.cases, pcms.cases
    ))
}

fn criterion_6() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut ties = 0;
    for t in 0..10_000 {
        let l = 1usize << rng.random_range(0..=4);
        let beta = 1usize << rng.random_range(1..=4);
        let parents = rng.random_range(1..=l.max(2));
        let levels = rng.random_range(2..=6);
        let children: Vec<Vec<ScoredCandidate>> = (0..parents)
            .map(|p| {
                (0..beta)
                    .map(|s| ScoredCandidate::new(f64::from(rng.random_range(0..levels)), p, s))
                    .collect()
            })
            .collect();
        let mut all: Vec<ScoredCandidate> = children.iter().flatten().copied().collect();
        let distinct = {
            let mut v: Vec<i64> = all.iter().map(|c| c.score as i64).collect();
            v.sort_unstable();
            v.dedup();
            v.len()
        };
        if distinct < all.len() {
            ties += 1;
        }
        all.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap()
                .then(a.parent.cmp(&b.parent))
                .then(a.symbol.cmp(&b.symbol))
        });
        all.truncate(l);
        let q = rng.random_range(l.min(beta)..=beta).max(l.min(beta));
        if q < l {
            // Only reachable when every parent contributes all its children.
            ensure(q == beta, || "q below L with spare children".into())?;
        }
        let sorter = if t % 2 == 0 {
            SorterKind::Folded
        } else {
            SorterKind::Tree
        };
        let pruned = two_stage_prune(&children, l, q, sorter).map_err(|e| e.to_string())?;
        ensure(pruned == all, || {
            format!("table {t}: L={l} q={q} {pruned:?} != {all:?}")
        })?;
        ensure(full_sort_top(&children, l) == all, || {
            format!("table {t}: full sort disagrees")
        })?;
    }
    Ok(format!("10^4 tables, {ties} with tied scores"))
}

fn criterion_7() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut draws = 0;
    for n in [2u32, 3, 4] {
        let len = 1usize << n;
        let mut spec = random_code(&mut rng, n);
        let mut book = codebook(&spec);
        for d in 0..1000 {
            if d % 50 == 0 {
                spec = random_code(&mut rng, n);
                book = codebook(&spec);
            }
            let sigma2 = rng.random_range(0.3..1.5);
            let llr = noisy_messages(&mut rng, &spec, sigma2);
            let (u_hat, _) = sdsc_decode_with(&spec, &llr, len, DecodeOptions::exact())
                .map_err(|e| e.to_string())?;
            let ml = book
                .iter()
                .max_by(|a, b| word_ll(&llr, &a.1).total_cmp(&word_ll(&llr, &b.1)))
                .unwrap();
            ensure(u_hat == ml.0, || {
                format!("N={len} K={} draw {d}: decoder != ML", spec.info_len())
            })?;
            draws += 1;
        }
    }
    Ok(format!("{draws} noise draws over N = 4, 8, 16"))
}

/// Every `(u, x)` pair of a code, `x` from the reference encoder.
fn codebook(spec: &CodeSpec) -> Vec<(Vec<u8>, Vec<u8>)> {
    let info = spec.info_positions();
    (0..1usize << info.len())
        .map(|w| {
            let mut u = vec![0u8; spec.block_len()];
            for (t, &p) in info.iter().enumerate() {
                u[p] = ((w >> t) & 1) as u8;
            }
            let x = encode_ref(&u);
            (u, x)
        })
        .collect()
}

fn criterion_8() -> Result<String, String> {
    let ids = "sc,sdsc-2,sdsc-4,sdsc-8,scl-4,sdscl-2-4-4,sdscl-4-4-4,sdscl-8-4-2,sdscl-8-4-8";
    let cfg = SweepConfig {
        spec: construct(6, 32, 0.5).unwrap(),
        decoders: parse_decoders(ids).unwrap(),
        ebn0_db: vec![2.5],
        trials: 20_000,
        target_fe: 0,
        seed: 2024,
        workers: 0,
        opts: DecodeOptions::default(),
    };
    let cells = run_sweep(&cfg).map_err(|e| e.to_string())?;
    let get = |id: &str| cells.iter().find(|c| c.decoder.to_string() == id).unwrap();
    let sigma =
        |a: &CellResult, b: &CellResult| (a.fer_sigma().powi(2) + b.fer_sigma().powi(2)).sqrt();
    let sc = get("sc");
    for m in ["sdsc-2", "sdsc-4", "sdsc-8"] {
        let c = get(m);
        ensure(c.fer() <= sc.fer() + 3.0 * sigma(c, sc), || {
            format!(
                "(a) FER({m}) = {} exceeds FER(sc) = {} + 3σ",
                c.fer(),
                sc.fer()
            )
        })?;
    }
    let scl = get("scl-4");
    let (sc_lo, _) = sc.fer_interval();
    let (_, scl_hi) = scl.fer_interval();
    ensure(scl.fer() < sc.fer() && scl_hi < sc_lo, || {
        format!(
            "(b) scl-4 {:?} vs sc {:?}",
            scl.fer_interval(),
            sc.fer_interval()
        )
    })?;
    for id in ["sdscl-2-4-4", "sdscl-4-4-4"] {
        let c = get(id);
        ensure((c.fer() - scl.fer()).abs() <= 3.0 * sigma(c, scl), || {
            format!("(c) FER({id}) = {} vs FER(scl-4) = {}", c.fer(), scl.fer())
        })?;
    }
    let (q2, q8) = (get("sdscl-8-4-2"), get("sdscl-8-4-8"));
    ensure(q2.fer() >= q8.fer() - 3.0 * sigma(q2, q8), || {
        format!(
            "(d) FER(q=2) = {} below FER(q=8) = {} - 3σ",
            q2.fer(),
            q8.fer()
        )
    })?;
    let summary: Vec<String> = cells
        .iter()
        .map(|c| format!("{}={:.4}", c.decoder, c.fer()))
        .collect();
    Ok(format!(
        "(64,32) at 2.5 dB, 2·10^4 trials: {}",
        summary.join(" ")
    ))
}

fn criterion_9() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut tested = 0;
    while tested < 10_000 {
        let n = 1i64 << rng.random_range(2..=16);
        let m = 1i64 << rng.random_range(1..=5);
        let l = 1i64 << rng.random_range(0..=6);
        let p = 1i64 << rng.random_range(0..=10);
        if m > n || n * l <= 8 * p {
            continue;
        }
        let h = HwParams {
            block_len: n,
            symbol_len: m,
            list_size: l,
            units: p,
            q: 1,
            q_ch: 4,
            gamma: rng.random_range(0.0..=1.0),
            t_s: rng.random::<bool>().then(|| rng.random_range(0..=8)),
            t_n: rng.random_range(0..=8),
            scheduling: None,
            pcms: rng.random(),
        };
        let t = latency(&h).map_err(|e| e.to_string())?;
        if t.t_s + t.t_n == 0 {
            continue;
        }
        let g = speed_gain(&h).map_err(|e| e.to_string())?;
        ensure(g < m as f64, || format!("{h:?}: gain {g} >= M"))?;
        tested += 1;
    }
    Ok("speed gain < M on 10^4 random parameter sets".into())
}

/// Remainder of `bits · x^w + init · x^len` modulo the generator, by long
/// division.
fn crc_long_division(bits: &[u8], width: u32, poly: u64, init: u64) -> u64 {
    let w = width as usize;
    let mut v: Vec<u8> = bits.to_vec();
    v.extend(std::iter::repeat_n(0, w));
    for (k, b) in v.iter_mut().take(w).enumerate() {
        *b ^= ((init >> (w - 1 - k)) & 1) as u8;
    }
    let mut g: Vec<u8> = vec![1];
    g.extend((0..w).rev().map(|k| ((poly >> k) & 1) as u8));
    for i in 0..bits.len() {
        if v[i] == 1 {
            for (k, &gb) in g.iter().enumerate() {
                v[i + k] ^= gb;
            }
        }
    }
    v[bits.len()..]
        .iter()
        .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
}

fn crc32c_reflected(data: &[u8]) -> u32 {
    let mut crc = !0u32;
    for &b in data {
        crc ^= u32::from(b);
        for _ in 0..8 {
            crc = if crc & 1 == 1 {
                (crc >> 1) ^ 0x82F6_3B78
            } else {
                crc >> 1
            };
        }
    }
    !crc
}

fn criterion_10() -> Result<String, String> {
    let crc = CrcConfig::crc32c();
    let check = crc.checksum_bytes(b"123456789");
    ensure(check == 0xE306_9283, || format!("check value {check:#x}"))?;
    ensure(crc32c_reflected(b"123456789") as u64 == check, || {
        "table-free oracle disagrees".into()
    })?;

    let spec = construct(8, 96, 0.5).unwrap().with_crc(crc).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..10_000 {
        let payload: Vec<u8> = (0..spec.payload_len())
            .map(|_| rng.random::<bool>() as u8)
            .collect();
        let block = attach_crc(&spec, &payload).unwrap();
        ensure(check_crc(&spec, &block).unwrap(), || {
            "round trip failed".into()
        })?;
        let mut reg = crc_long_division(&payload, 32, crc.polynomial, crc.init);
        if crc.reflect_out {
            reg = u64::from((reg as u32).reverse_bits());
        }
        reg ^= crc.xorout;
        ensure(crc.checksum_bits(&payload) == reg, || {
            "long division disagrees".into()
        })?;
        // Byte-aligned payloads also match the reflected byte-wise oracle.
        let bytes: Vec<u8> = payload
            .chunks(8)
            .map(|c| {
                c.iter()
                    .enumerate()
                    .fold(0u8, |acc, (k, &b)| acc | (b << k))
            })
            .collect();
        ensure(
            crc.checksum_bytes(&bytes) == u64::from(crc32c_reflected(&bytes)),
            || "byte oracle disagrees".into(),
        )?;
    }

    let spec64 = construct(7, 64, 0.5).unwrap().with_crc(crc).unwrap();
    let mut payloads: Vec<Vec<u8>> = vec![vec![0; 32], vec![1; 32]];
    for _ in 0..20 {
        let mut p: Vec<u8> = (0..32).map(|_| rng.random::<bool>() as u8).collect();
        p.shuffle(&mut rng);
        payloads.push(p);
    }
    for p in &payloads {
        let block = attach_crc(&spec64, p).unwrap();
        for i in 0..64 {
            let mut bad = block.clone();
            bad[i] ^= 1;
            ensure(!check_crc(&spec64, &bad).unwrap(), || {
                format!("flip at {i} undetected")
            })?;
        }
    }
    Ok(format!(
        "0xE3069283; 10^4 round trips; all 64 single flips caught on {} blocks",
        payloads.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Check); 10] = [
        (1, "addition counts", criterion_1),
        (2, "preset latencies", criterion_2),
        (3, "memory formulas", criterion_3),
        (4, "symbol combination vs direct mapping", criterion_4),
        (5, "reduction chain and PCMS", criterion_5),
        (6, "two-stage pruning exactness", criterion_6),
        (7, "ML equivalence at M = N", criterion_7),
        (8, "statistical FER properties", criterion_8),
        (9, "speed-gain bound", criterion_9),
        (10, "CRC layer", criterion_10),
    ];
    // Sanity check of the reference encoder before anything relies on it.
    let spec = construct(4, 16, 0.5).unwrap();
    for w in 0..1usize << 16 {
        let u = to_bits(w, 16);
        assert_eq!(encode(&spec, &u).unwrap(), encode_ref(&u));
    }

    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name} ({secs:.2} s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {id:>2} {name} ({secs:.2} s): {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
