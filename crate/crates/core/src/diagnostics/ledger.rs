//! Streaming CSV output of the record series.

use std::io::Write;

use super::{DiagnosticsRecord, EnvelopeRow};

/// Record columns, in order.
pub const CSV_COLUMNS: [&str; 16] = [
    "t",
    "E",
    "H",
    "Z",
    "Q",
    "P",
    "W",
    "C3",
    "sup_l2p",
    "inf_l2p",
    "sup_l2m_abs",
    "inf_l2m_abs",
    "min_l2",
    "max_l2",
    "inf_eps",
    "bkm_sup_vort",
];

/// Envelope columns appended after the record columns.
pub const ENVELOPE_COLUMNS: [&str; 5] = [
    "env_lower",
    "env_upper",
    "lambda2p_integral",
    "class_env_lower",
    "class_env_upper",
];

/// Shortest decimal that round-trips; NaN becomes an empty cell.
fn cell(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:?}")
    }
}

/// Writes one line per record and flushes it, so an interrupted run leaves
/// a readable prefix.
#[derive(Debug)]
pub struct CsvLedger<W: Write> {
    out: W,
    rows: usize,
}

impl<W: Write> CsvLedger<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        let header: Vec<&str> = CSV_COLUMNS
            .iter()
            .chain(&ENVELOPE_COLUMNS)
            .copied()
            .collect();
        writeln!(out, "{}", header.join(","))?;
        out.flush()?;
        Ok(Self { out, rows: 0 })
    }

    pub fn push(&mut self, r: &DiagnosticsRecord, env: &EnvelopeRow) -> std::io::Result<()> {
        let values = [
            r.t,
            r.energy,
            r.helicity,
            r.enstrophy,
            r.q,
            r.p,
            r.w,
            r.c3,
            r.sup_l2p,
            r.inf_l2p,
            r.sup_l2m_abs,
            r.inf_l2m_abs,
            r.min_l2,
            r.max_l2,
            r.inf_eps,
            r.bkm_sup_vort,
            env.lower,
            env.upper,
            env.lambda2p_integral,
            env.class_lower,
            env.class_upper,
        ];
        let line: Vec<String> = values.iter().map(|&x| cell(x)).collect();
        writeln!(self.out, "{}", line.join(","))?;
        self.out.flush()?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
