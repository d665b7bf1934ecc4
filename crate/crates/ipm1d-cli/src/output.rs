//! File formats written by the driver: diagnostics CSV, field snapshots,
//! run summaries, and sweep summaries.
//!
//! All numeric text uses Rust's shortest-roundtrip float formatting, so a
//! written value parses back to the identical bits and repeated runs of a
//! deterministic simulation produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use ipm1d::diagnostics::{DiagnosticsRecord, RiccatiFit};
use ipm1d::grid::{PeriodicField, PeriodicGrid};
use ipm1d::solver::RunOutcome;
use ipm1d::{Error, Result};

/// Column order of the diagnostics CSV. Fixed; new columns append.
pub const CSV_HEADER: &str = "t,linf,l2,hs,mean,slope_max,slope_argmax,bkm,j_value,tail_fraction";

/// Format tag on the first line of a snapshot file.
pub const SNAPSHOT_HEADER: &str = "ipm1d-snapshot v1";

/// Format tag on the first line of a run summary.
pub const SUMMARY_HEADER: &str = "ipm1d-run-summary v1";

/// Header of the per-sweep combined summary CSV.
pub const SWEEP_HEADER: &str = "dir,a,g,n,status,reason,t_stop,bkm,c_hat";

/// Renders diagnostics records as CSV with the fixed column order.
pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut doc = String::with_capacity(64 * (records.len() + 1));
    doc.push_str(CSV_HEADER);
    doc.push('\n');
    for r in records {
        let _ = writeln!(
            doc,
            "{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.linf,
            r.l2,
            r.hs,
            r.mean,
            r.slope_max,
            r.slope_argmax,
            r.bkm,
            r.j_value,
            r.tail_fraction
        );
    }
    doc
}

/// Renders a field snapshot as versioned structured text.
///
/// Layout: header, `n`, `t`, a `values` section with one grid value per
/// line, and a `spectrum` section listing `k re im` for the nonnegative
/// half of the modes. The values section is authoritative; loading
/// recomputes the transform from it.
pub fn snapshot_text(field: &PeriodicField, t: f64) -> String {
    let n = field.grid().n();
    let mut doc = String::with_capacity(32 * n);
    let _ = writeln!(doc, "{SNAPSHOT_HEADER}");
    let _ = writeln!(doc, "n {n}");
    let _ = writeln!(doc, "t {t}");
    let _ = writeln!(doc, "values");
    for v in field.values() {
        let _ = writeln!(doc, "{v}");
    }
    let _ = writeln!(doc, "spectrum");
    for (k, c) in field.spectrum().iter().enumerate().take(n / 2 + 1) {
        let _ = writeln!(doc, "{k} {} {}", c.re, c.im);
    }
    doc.push_str("end\n");
    doc
}

/// Parses a snapshot produced by [`snapshot_text`], returning the sample
/// time and the reconstructed field. Grid values round-trip bit-exactly.
pub fn parse_snapshot(text: &str) -> Result<(f64, PeriodicField)> {
    let bad = |what: &str| Error::Config(format!("malformed snapshot: {what}"));
    let mut lines = text.lines();
    if lines.next() != Some(SNAPSHOT_HEADER) {
        return Err(bad("missing header"));
    }
    let n: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("n "))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad("missing grid size"))?;
    let t: f64 = lines
        .next()
        .and_then(|l| l.strip_prefix("t "))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad("missing sample time"))?;
    if lines.next() != Some("values") {
        return Err(bad("missing values section"));
    }
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let v: f64 = lines
            .next()
            .and_then(|l| l.parse().ok())
            .ok_or_else(|| bad("truncated values section"))?;
        values.push(v);
    }
    if lines.next() != Some("spectrum") {
        return Err(bad("missing spectrum section"));
    }
    for _ in 0..=n / 2 {
        lines.next().ok_or_else(|| bad("truncated spectrum section"))?;
    }
    if lines.next() != Some("end") {
        return Err(bad("missing end marker"));
    }
    let grid = PeriodicGrid::new(n)?;
    let field = PeriodicField::from_values(&grid, values)?;
    Ok((t, field))
}

/// Reads and parses a snapshot file.
pub fn load_snapshot(path: &Path) -> Result<(f64, PeriodicField)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_snapshot(&text)
}

/// Renders the end-of-run summary: stop reason, final diagnostics, and the
/// blow-up fit. Keys are stable; absent numeric values print as `NaN` or
/// `none` so the document always has the same lines.
pub fn run_summary(
    outcome: &RunOutcome,
    records: &[DiagnosticsRecord],
    fit: Option<&RiccatiFit>,
) -> String {
    let mut doc = String::new();
    let _ = writeln!(doc, "{SUMMARY_HEADER}");
    let _ = writeln!(doc, "reason {}", outcome.reason);
    let last = outcome.trajectory.last();
    let t_stop = last.map_or(f64::NAN, |s| s.t);
    let bkm = last.map_or(f64::NAN, |s| s.bkm);
    let _ = writeln!(doc, "t_stop {t_stop}");
    let _ = writeln!(doc, "steps {}", outcome.steps);
    let _ = writeln!(doc, "outputs {}", records.len());
    let _ = writeln!(doc, "bkm {bkm}");
    let linf = records.last().map_or(f64::NAN, |r| r.linf);
    let slope = records.last().map_or(f64::NAN, |r| r.slope_max);
    let _ = writeln!(doc, "linf_final {linf}");
    let _ = writeln!(doc, "slope_final {slope}");
    let j_samples = records.iter().filter(|r| r.j_value.is_finite()).count();
    let _ = writeln!(doc, "j_samples {j_samples}");
    match fit {
        Some(f) => {
            let _ = writeln!(doc, "c_hat {}", f.c_hat);
            let _ = writeln!(doc, "fit_conclusive {}", f.conclusive);
            match f.t_star_bound {
                Some(ts) => {
                    let _ = writeln!(doc, "t_star {ts}");
                }
                None => {
                    let _ = writeln!(doc, "t_star none");
                }
            }
            let _ = writeln!(doc, "fit_residual {}", f.residual);
        }
        None => {
            let _ = writeln!(doc, "c_hat NaN");
            let _ = writeln!(doc, "fit_conclusive false");
            let _ = writeln!(doc, "t_star none");
            let _ = writeln!(doc, "fit_residual NaN");
        }
    }
    doc
}

/// One row of the sweep summary CSV.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub dir: String,
    pub a: f64,
    pub g: f64,
    pub n: usize,
    /// `ok` for completed runs, `error` for failed ones.
    pub status: String,
    /// Stop reason, or the failure message with commas replaced.
    pub reason: String,
    pub t_stop: f64,
    pub bkm: f64,
    pub c_hat: f64,
}

/// Renders the combined sweep summary.
pub fn sweep_summary_csv(rows: &[SweepRow]) -> String {
    let mut doc = String::from(SWEEP_HEADER);
    doc.push('\n');
    for r in rows {
        let reason = r.reason.replace(',', ";").replace('\n', " ");
        let _ = writeln!(
            doc,
            "{},{},{},{},{},{},{},{},{}",
            r.dir, r.a, r.g, r.n, r.status, reason, r.t_stop, r.bkm, r.c_hat
        );
    }
    doc
}

/// Writes text to `path`, wrapping IO failures with the path.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field(n: usize) -> PeriodicField {
        let grid = PeriodicGrid::new(n).unwrap();
        PeriodicField::from_fn(&grid, |x| 1.0 - x.cos() + 0.125 * (2.0 * x).sin()).unwrap()
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let field = sample_field(64);
        let text = snapshot_text(&field, 0.3125);
        let (t, back) = parse_snapshot(&text).unwrap();
        assert_eq!(t, 0.3125);
        assert_eq!(back.values(), field.values());
        assert_eq!(snapshot_text(&back, t), text);
    }

    #[test]
    fn snapshot_rejects_damaged_documents() {
        let field = sample_field(16);
        let text = snapshot_text(&field, 0.0);
        assert!(parse_snapshot(&text.replace("v1", "v9")).is_err());
        let truncated: String = text.lines().take(6).collect::<Vec<_>>().join("\n");
        assert!(parse_snapshot(&truncated).is_err());
        assert!(parse_snapshot(&text.replace("end", "")).is_err());
    }

    #[test]
    fn csv_rows_match_the_header_arity() {
        let grid = PeriodicGrid::new(32).unwrap();
        let field = PeriodicField::from_fn(&grid, |x| 1.0 - x.cos()).unwrap();
        let state = ipm1d::solver::SimState {
            field,
            t: 0.0,
            bkm: 0.0,
        };
        let rec = ipm1d::diagnostics::record_for_state(&state, 3, 0.5).unwrap();
        let doc = diagnostics_csv(std::slice::from_ref(&rec));
        let mut lines = doc.lines();
        let header = lines.next().unwrap();
        let row = lines.next().unwrap();
        assert_eq!(header, CSV_HEADER);
        assert_eq!(
            row.split(',').count(),
            header.split(',').count(),
            "{row}"
        );
    }

    #[test]
    fn sweep_rows_escape_field_separators() {
        let rows = vec![SweepRow {
            dir: "a1_g1_n64".into(),
            a: 1.0,
            g: 1.0,
            n: 64,
            status: "error".into(),
            reason: "bad, worse".into(),
            t_stop: f64::NAN,
            bkm: f64::NAN,
            c_hat: f64::NAN,
        }];
        let doc = sweep_summary_csv(&rows);
        let row = doc.lines().nth(1).unwrap();
        assert_eq!(row.split(',').count(), SWEEP_HEADER.split(',').count());
        assert!(row.contains("bad; worse"));
    }
}
