use std::io::Write;

use serde::Serialize;

use super::config::SweepConfig;
use super::sweep::ResultRow;

pub const CSV_HEADER: [&str; 8] = [
    "method",
    "axis",
    "axis_value",
    "success_rate",
    "nmse",
    "mean_iters",
    "trials",
    "failures",
];

/// Decimal rendering with 12 significant digits, trailing zeros trimmed.
pub fn format_sig12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{v:.11e}");
        let (mant, e) = s.split_once('e').expect("scientific format");
        let mant = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{mant}e{e}")
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.method.name().to_string(),
            r.axis.to_string(),
            r.axis_value.to_string(),
            format_sig12(r.success_rate),
            format_sig12(r.nmse),
            format_sig12(r.mean_iters),
            r.trials.to_string(),
            r.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Metadata<'a> {
    config: &'a SweepConfig,
    version: &'static str,
    timestamp: u64,
}

#[derive(Serialize)]
struct Report<'a> {
    metadata: Metadata<'a>,
    rows: &'a [ResultRow],
}

/// `{"metadata": {config, version, timestamp}, "rows": [...]}`
pub fn write_json<W: Write>(
    rows: &[ResultRow],
    cfg: &SweepConfig,
    timestamp: u64,
    out: W,
) -> serde_json::Result<()> {
    let report = Report {
        metadata: Metadata {
            config: cfg,
            version: env!("CARGO_PKG_VERSION"),
            timestamp,
        },
        rows,
    };
    serde_json::to_writer_pretty(out, &report)
}
