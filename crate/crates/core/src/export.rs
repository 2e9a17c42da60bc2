//! Ensemble and report serialization: RFC-4180 CSV with a metadata comment
//! line, and JSON with struct-ordered (stable) keys. Every artifact embeds
//! the configuration hash and version string supplied by the caller.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::girsanov::GirsanovWeight;

/// Provenance stamped into every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub version: String,
    pub config_hash: String,
}

impl Metadata {
    pub fn new(version: impl Into<String>, config_hash: impl Into<String>) -> Self {
        Metadata {
            version: version.into(),
            config_hash: config_hash.into(),
        }
    }

    fn comment_line(&self) -> String {
        format!(
            "# version={} config_hash={}\n",
            self.version, self.config_hash
        )
    }
}

/// `stream_id, t, value` rows of marginal observations.
pub fn write_ensemble_csv<W: Write>(
    mut out: W,
    meta: &Metadata,
    rows: impl Iterator<Item = (u64, f64, f64)>,
) -> Result<()> {
    out.write_all(meta.comment_line().as_bytes())?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["stream_id", "t", "value"])?;
    for (stream_id, t, value) in rows {
        writer.write_record(&[stream_id.to_string(), fmt(t), fmt(value)])?;
    }
    writer.flush()?;
    Ok(())
}

/// `stream_id, level, local_time` rows of profile observations.
pub fn write_profile_csv<W: Write>(
    mut out: W,
    meta: &Metadata,
    rows: impl Iterator<Item = (u64, f64, f64)>,
) -> Result<()> {
    out.write_all(meta.comment_line().as_bytes())?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["stream_id", "level", "local_time"])?;
    for (stream_id, level, local_time) in rows {
        writer.write_record(&[stream_id.to_string(), fmt(level), fmt(local_time)])?;
    }
    writer.flush()?;
    Ok(())
}

/// Weighted ensemble rows with the effective sample size in the header
/// comment.
pub fn write_weighted_csv<W: Write>(
    mut out: W,
    meta: &Metadata,
    effective_sample_size: f64,
    rows: impl Iterator<Item = (u64, f64, GirsanovWeight)>,
) -> Result<()> {
    out.write_all(meta.comment_line().as_bytes())?;
    out.write_all(format!("# effective_sample_size={}\n", fmt(effective_sample_size)).as_bytes())?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["stream_id", "value", "weight"])?;
    for (stream_id, value, w) in rows {
        writer.write_record(&[stream_id.to_string(), fmt(value), fmt(w.weight)])?;
    }
    writer.flush()?;
    Ok(())
}

/// Paired quantiles for QQ plotting.
pub fn write_qq_csv<W: Write>(
    mut out: W,
    meta: &Metadata,
    points: &[(f64, f64)],
) -> Result<()> {
    out.write_all(meta.comment_line().as_bytes())?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["quantile_a", "quantile_b"])?;
    for (a, b) in points {
        writer.write_record(&[fmt(*a), fmt(*b)])?;
    }
    writer.flush()?;
    Ok(())
}

/// JSON report wrapper: `{ "meta": ..., "report": ... }` with stable key
/// order (struct order).
pub fn write_json_report<W: Write, T: Serialize>(
    out: W,
    meta: &Metadata,
    report: &T,
) -> Result<()> {
    #[derive(Serialize)]
    struct Wrapper<'a, T: Serialize> {
        meta: &'a Metadata,
        report: &'a T,
    }
    serde_json::to_writer_pretty(out, &Wrapper { meta, report })?;
    Ok(())
}

/// Shortest round-trip float formatting, locale-free.
fn fmt(v: f64) -> String {
    let mut buf = ryu_like(v);
    if !buf.contains('.') && !buf.contains('e') && !buf.contains("inf") && !buf.contains("nan") {
        buf.push_str(".0");
    }
    buf
}

fn ryu_like(v: f64) -> String {
    // `{:?}` on f64 is the shortest representation that round-trips.
    format!("{v:?}")
}
