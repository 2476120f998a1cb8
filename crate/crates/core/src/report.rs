//! Plain-text serialisation of solve traces.
//!
//! Reals are written with Rust's shortest round-trip formatting, so a value
//! read back from the CSV is bit-identical to the one computed.

use std::io::Write;

use crate::solvers::SolveReport;

/// Shortest decimal string that parses back to exactly `v`.
pub fn format_real(v: f64) -> String {
    format!("{v:?}")
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_real).unwrap_or_default()
}

/// CSV header: `k, lambda, x_1..x_n, step_norm, dist_ref, interior_radius`.
pub fn trace_header(dim: usize) -> Vec<String> {
    let mut cols = vec!["k".to_string(), "lambda".to_string()];
    cols.extend((1..=dim).map(|i| format!("x_{i}")));
    cols.extend(["step_norm", "dist_ref", "interior_radius"].map(String::from));
    cols
}

/// Writes the iteration trace as CSV. Missing optional values are empty cells.
pub fn write_trace_csv<W: Write>(report: &SolveReport, out: W) -> std::io::Result<()> {
    let dim = report.final_point.dim();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_header(dim))?;
    for r in &report.iterates {
        let mut row = Vec::with_capacity(dim + 5);
        row.push(r.k.to_string());
        row.push(format_real(r.lambda));
        row.extend(r.x.as_slice().iter().map(|v| format_real(*v)));
        row.push(format_opt(r.step_norm));
        row.push(format_opt(r.dist_ref));
        row.push(format_opt(r.interior_radius));
        w.write_record(&row)?;
    }
    w.flush()
}
