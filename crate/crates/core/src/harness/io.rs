//! CSV files: writers for every artifact and checkers for their invariants.
//!
//! Reals are written with 17 significant digits, so every value reads back
//! bit-exact. Actions and learner indices are 1-based.

use std::fs::File;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::aggregate::{AggregateRow, ReplicateOutput};
use crate::harness::config::ExperimentConfig;
use crate::harness::diagnostics::{DeviationTable, SelectionRow};
use crate::harness::run::{RunOutput, TraceRow};

pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn trace_header(num_learners: usize, context_dim: Option<usize>) -> Vec<String> {
    let mut h: Vec<String> = [
        "policy",
        "run_id",
        "t",
        "d",
        "selected",
        "comparison_n",
        "action",
        "reward",
        "cum_reward",
        "avg_reward",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for j in 1..=num_learners {
        h.push(format!("n_{j}"));
        h.push(format!("nxplr_{j}"));
    }
    for i in 1..=context_dim.unwrap_or(0) {
        h.push(format!("x_{i}"));
    }
    h
}

pub fn write_trace<'a>(path: &Path, rows: impl IntoIterator<Item = &'a TraceRow>) -> Result<()> {
    let mut rows = rows.into_iter().peekable();
    let mut w = writer(path)?;
    let Some(first) = rows.peek() else {
        return Err(Error::domain("refusing to write an empty trace"));
    };
    w.write_record(trace_header(first.counts.len(), first.context.as_ref().map(Vec::len)))?;
    for r in rows {
        let mut rec = vec![
            r.policy.clone(),
            r.run_id.to_string(),
            r.t.to_string(),
            u8::from(r.exploration).to_string(),
            r.selected.to_string(),
            r.comparison_n.to_string(),
            r.action.to_string(),
            fmt_real(r.reward),
            fmt_real(r.cum_reward),
            fmt_real(r.avg_reward()),
        ];
        for (n, nx) in &r.counts {
            rec.push(n.to_string());
            rec.push(nx.to_string());
        }
        if let Some(x) = &r.context {
            rec.extend(x.iter().map(|v| fmt_real(*v)));
        }
        w.write_record(rec)?;
    }
    finish(w, path)
}

pub fn write_aggregate(path: &Path, rep: &ReplicateOutput) -> Result<()> {
    write_aggregate_rows(path, &rep.labels, &rep.rows)
}

pub fn write_aggregate_rows(path: &Path, labels: &[String], rows: &[AggregateRow]) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string()];
    for l in labels {
        header.extend([format!("{l}_mean"), format!("{l}_q10"), format!("{l}_q90")]);
    }
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.t.to_string()];
        for b in &row.bands {
            rec.extend([fmt_real(b.mean), fmt_real(b.q10), fmt_real(b.q90)]);
        }
        w.write_record(rec)?;
    }
    finish(w, path)
}

/// One file for all learners; every table must share the same thresholds.
pub fn write_deviation(path: &Path, tables: &[DeviationTable]) -> Result<()> {
    let Some(first) = tables.first() else {
        return Err(Error::domain("no deviation tables to write"));
    };
    if tables.iter().any(|t| t.thresholds != first.thresholds) {
        return Err(Error::domain("deviation tables disagree on thresholds"));
    }
    let mut w = writer(path)?;
    let mut header: Vec<String> = [
        "learner",
        "reference",
        "reference_value",
        "runs",
        "n",
        "mean_excess",
        "std_error",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for (c0, x) in &first.thresholds {
        header.push(format!("p_exceed_c0={c0}_x={x}"));
    }
    w.write_record(&header)?;
    for table in tables {
        for row in &table.rows {
            let mut rec = vec![
                table.learner.to_string(),
                table.reference.label().to_string(),
                fmt_real(table.reference.value()),
                table.runs.to_string(),
                row.n.to_string(),
                fmt_real(row.mean_excess),
                fmt_real(row.std_error),
            ];
            rec.extend(row.exceed.iter().map(|p| fmt_real(*p)));
            w.write_record(rec)?;
        }
    }
    finish(w, path)
}

pub fn write_selection(path: &Path, labels: &[String], rows: &[SelectionRow]) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["n".to_string(), "runs".to_string(), "p_suboptimal".to_string()];
    header.extend(labels.iter().map(|l| format!("p_{l}")));
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.n.to_string(), row.runs.to_string(), fmt_real(row.suboptimal)];
        rec.extend(row.per_learner.iter().map(|p| fmt_real(*p)));
        w.write_record(rec)?;
    }
    finish(w, path)
}

/// Writes `{name}_agg.csv`, and `{name}_trace.csv` when the replication
/// kept full run outputs. Returns the written paths.
pub fn write_replication(cfg: &ExperimentConfig, rep: &ReplicateOutput) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    if let Some(outputs) = &rep.outputs {
        let path = cfg.output_path("trace");
        let rows: Vec<TraceRow> = outputs.iter().flat_map(RunOutput::trace_rows).collect();
        write_trace(&path, &rows)?;
        paths.push(path);
    }
    let path = cfg.output_path("agg");
    write_aggregate(&path, rep)?;
    paths.push(path);
    Ok(paths)
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Reader::from_reader(file))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::domain(format!("line {line}: bad field {}", i + 1)))
}

/// Checks a trace file row by row: `cum_reward` is the running sum of
/// `reward` per `(policy, run_id)`, `sum_j n_j = t`, `nxplr_j <= n_j`, and
/// `t` counts up from 1. Returns the number of data rows.
pub fn check_trace_file(path: &Path) -> Result<usize> {
    let mut rdr = reader(path)?;
    let header = rdr.headers()?.clone();
    let j_count = header.iter().filter(|h| h.starts_with("n_")).count();
    let mut key: Option<(String, u64)> = None;
    let mut cum = 0.0;
    let mut expect_t = 1;
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let this = (rec[0].to_string(), field::<u64>(&rec, 1, line)?);
        if key.as_ref() != Some(&this) {
            key = Some(this);
            cum = 0.0;
            expect_t = 1;
        }
        let t: u64 = field(&rec, 2, line)?;
        if t != expect_t {
            return Err(Error::domain(format!("line {line}: t = {t}, expected {expect_t}")));
        }
        expect_t += 1;
        cum += field::<f64>(&rec, 7, line)?;
        if cum != field::<f64>(&rec, 8, line)? {
            return Err(Error::domain(format!("line {line}: cum_reward is not the running sum")));
        }
        let mut total = 0;
        for j in 0..j_count {
            let n: u64 = field(&rec, 10 + 2 * j, line)?;
            let nx: u64 = field(&rec, 11 + 2 * j, line)?;
            if nx > n {
                return Err(Error::domain(format!("line {line}: nxplr_{} > n_{}", j + 1, j + 1)));
            }
            total += n;
        }
        if total != t {
            return Err(Error::domain(format!("line {line}: counts sum to {total}, t = {t}")));
        }
        rows += 1;
    }
    Ok(rows)
}

/// Checks `q10 <= mean <= q90` for every policy on every row. Returns the
/// number of data rows.
pub fn check_aggregate_file(path: &Path) -> Result<usize> {
    let mut rdr = reader(path)?;
    let policies = (rdr.headers()?.len() - 1) / 3;
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        for p in 0..policies {
            let mean: f64 = field(&rec, 1 + 3 * p, line)?;
            let q10: f64 = field(&rec, 2 + 3 * p, line)?;
            let q90: f64 = field(&rec, 3 + 3 * p, line)?;
            if !(q10 <= mean && mean <= q90) {
                return Err(Error::domain(format!(
                    "line {line}: band order violated for policy {} ({q10}, {mean}, {q90})",
                    p + 1
                )));
            }
        }
        rows += 1;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for v in [0.65, 1.0 / 3.0, -2.5e-300, 123456.789, 0.0] {
            let s = fmt_real(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_real(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn header_layout() {
        let h = trace_header(2, Some(1));
        assert_eq!(h[10..], ["n_1", "nxplr_1", "n_2", "nxplr_2", "x_1"]);
    }
}
