//! Diagnostics CSV with a frozen header.

use crate::diagnostics::{DiagnosticsRecord, TrajectoryLog};
use crate::error::{Error, Result};
use std::path::Path;

pub const HEADER: &str = "t,l2,h1dot,linf,max_u,min_u,mean,wiener0,wiener1,wiener2,energy_residual,wiener_ineq_residual";

fn row(r: &DiagnosticsRecord) -> [f64; 12] {
    [
        r.t,
        r.l2,
        r.h1_dot,
        r.linf,
        r.max_u.value,
        r.min_u.value,
        r.mean,
        r.wiener0,
        r.wiener1,
        r.wiener2,
        r.energy_residual,
        r.wiener_ineq_residual,
    ]
}

/// CSV text; 17 significant digits so every value reads back bit-exactly.
pub fn diagnostics_csv(log: &TrajectoryLog) -> String {
    let mut w = ::csv::Writer::from_writer(Vec::with_capacity(220 * (log.records.len() + 1)));
    w.write_record(HEADER.split(',')).expect("in-memory write");
    for r in &log.records {
        // + 0.0 turns -0 into 0
        w.write_record(row(r).iter().map(|v| format!("{:.16e}", v + 0.0)))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn write_diagnostics_csv(log: &TrajectoryLog, path: &Path) -> Result<()> {
    if log.records.is_empty() {
        return Err(Error::Csv("refusing to write an empty log".into()));
    }
    std::fs::write(path, diagnostics_csv(log))?;
    Ok(())
}

/// Parses a diagnostics CSV back into rows of the twelve columns.
pub fn parse_diagnostics_csv(text: &str) -> Result<Vec<[f64; 12]>> {
    let mut rd = ::csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| Error::Csv(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != HEADER {
        return Err(Error::Csv(format!("unexpected header '{}'", header.iter().collect::<Vec<_>>().join(","))));
    }
    rd.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| Error::Csv(format!("row {}: {e}", i + 1)))?;
            let mut out = [0.0; 12];
            for (slot, f) in out.iter_mut().zip(rec.iter()) {
                *slot = f
                    .parse()
                    .map_err(|_| Error::Csv(format!("row {}: bad number '{f}'", i + 1)))?;
            }
            Ok(out)
        })
        .collect()
}
