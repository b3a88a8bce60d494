//! Analytical tables: addition counts, LL memory and decoder latencies.

use std::fmt::Write;

use sdpolar::hw_model::{
    addition_count, baseline_cycles, gamma_of, latency, mem_bits_ll, mem_bits_pcms, pcms_saving,
    reference_presets, speed_gain, AdditionMode, HwParams,
};
use sdpolar::CodeSpec;

/// Parameters shared by every row.
#[derive(Debug, Clone, Copy)]
pub struct ReportParams {
    pub block_len: i64,
    pub list_size: i64,
    pub units: i64,
    pub q_ch: i64,
}

impl Default for ReportParams {
    fn default() -> Self {
        ReportParams {
            block_len: 1024,
            list_size: 4,
            units: 64,
            q_ch: 4,
        }
    }
}

/// One latency row.
#[derive(Debug, Clone)]
pub struct LatencyRow {
    pub decoder: String,
    pub params: HwParams,
    pub t_b: i64,
    pub t_s: i64,
    pub total: i64,
    pub gain: f64,
}

/// The bit-decision baseline followed by the published SDSCL rows, with γ
/// taken from `code` when one is given.
pub fn latency_rows(p: ReportParams, code: Option<&CodeSpec>) -> sdpolar::Result<Vec<LatencyRow>> {
    let mut rows = Vec::new();
    let base = HwParams {
        block_len: p.block_len,
        symbol_len: 1,
        list_size: p.list_size,
        units: p.units,
        q: 2,
        q_ch: p.q_ch,
        gamma: 0.0,
        t_s: None,
        t_n: 0,
        scheduling: None,
        pcms: true,
    };
    let t1 = baseline_cycles(p.block_len, p.list_size, p.units)?;
    rows.push(LatencyRow {
        decoder: "SCL".into(),
        params: base,
        t_b: t1,
        t_s: 0,
        total: t1,
        gain: speed_gain(&base)?,
    });
    for preset in reference_presets() {
        let mut h = preset.params;
        h.block_len = p.block_len;
        h.list_size = p.list_size;
        h.units = p.units;
        h.q_ch = p.q_ch;
        if let Some(spec) = code {
            h.gamma = gamma_of(spec, h.symbol_len as usize)?;
        }
        let r = latency(&h)?;
        rows.push(LatencyRow {
            decoder: preset.name.into(),
            params: h,
            t_b: r.t_b,
            t_s: r.t_s,
            total: r.total,
            gain: speed_gain(&h)?,
        });
    }
    Ok(rows)
}

/// Key-value text with one line per table row.
pub fn render_text(p: ReportParams, rows: &[LatencyRow]) -> sdpolar::Result<String> {
    let mut s = String::new();
    s.push_str("[additions]\n");
    for m in [2u32, 4, 8] {
        let rec = addition_count(m, AdditionMode::Recursive, m)?;
        let dir = addition_count(m, AdditionMode::Direct, m)?;
        writeln!(s, "M={m} recursive={rec} direct={dir}").unwrap();
    }
    s.push_str("\n[memory]\n");
    writeln!(
        s,
        "N={} L={} Q_ch={} B_LL={} B_PCMS={} saving={}",
        p.block_len,
        p.list_size,
        p.q_ch,
        mem_bits_ll(p.block_len, p.list_size, p.q_ch)?,
        mem_bits_pcms(p.block_len, p.list_size, p.q_ch)?,
        pcms_saving(p.block_len, p.list_size, p.q_ch)?
    )
    .unwrap();
    writeln!(
        s,
        "\n[latency] N={} L={} P={}",
        p.block_len, p.list_size, p.units
    )
    .unwrap();
    for r in rows {
        writeln!(
            s,
            "decoder={} M={} gamma={} T_S={} T_N={} q={} T_B={} latency={} speed_gain={:.4}",
            r.decoder,
            r.params.symbol_len,
            r.params.gamma,
            r.t_s,
            r.params.t_n,
            r.params.q,
            r.t_b,
            r.total,
            r.gain
        )
        .unwrap();
    }
    Ok(s)
}

pub const CSV_HEADER: &str = "decoder,N,M,L,P,q,gamma,T_S,T_N,T_B,latency,speed_gain";

pub fn render_csv(rows: &[LatencyRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let h = &r.params;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{:.6}",
            r.decoder,
            h.block_len,
            h.symbol_len,
            h.list_size,
            h.units,
            h.q,
            h.gamma,
            r.t_s,
            h.t_n,
            r.t_b,
            r.total,
            r.gain
        )
        .unwrap();
    }
    s
}
