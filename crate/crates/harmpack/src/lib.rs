//! File formats, instance generators and experiment runners around
//! `harmpack-core`.

pub mod certify;
pub mod instance;
pub mod params_io;
pub mod runner;

use std::io::Write;

use harmpack_core::superharmonic::TraceRecord;
use harmpack_core::weighting::WeightFunctionSet;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] harmpack_core::Error),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Config(String),
    /// An invariant, geometry or weight-bound check failed.
    #[error("validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub const TRACE_HEADER: [&str; 8] =
    ["item_index", "size", "type", "color", "group_before", "group_after", "bin_id", "opened"];

pub fn write_trace<W: Write>(out: W, trace: &[TraceRecord]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        let p = &r.placement;
        w.write_record([
            r.item_index.to_string(),
            instance::render_exact(&r.size),
            p.ty.to_string(),
            p.color.to_string(),
            p.group_before.map(|g| g.to_string()).unwrap_or_default(),
            p.group_after.to_string(),
            p.bin.to_string(),
            u8::from(p.opened).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The `[case × type]` table: one row per case, one column per type `1..=k`
/// and a last column with the tail slope.
pub fn write_weights<W: Write>(out: W, set: &WeightFunctionSet, decimals: Option<u32>) -> Result<(), HarnessError> {
    let k = set.table().k();
    let render = |q: &harmpack_core::Q| match decimals {
        Some(d) => harmpack_core::rational::render_decimal(q, d),
        None => q.to_string(),
    };
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["case".to_string()];
    header.extend((1..=k).map(|i| format!("type_{i}")));
    header.push("tail_slope".into());
    w.write_record(&header)?;
    for c in 1..=set.cases() {
        let mut row = vec![c.to_string()];
        row.extend((1..=k).map(|i| render(set.value(c, i))));
        row.push(render(set.tail_slope()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
