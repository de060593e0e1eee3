//! Records CSV, per-group summaries, and the condensed results table.
//!
//! The records schema is stable:
//! `replicate,looks,filter,nel,line_pres,edge_grad,edge_var,q_index,beta_rho,flags`
//! with reals at 9 significant digits and flags joined by `;`.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use despeck_core::metrics::MetricsRecord;

pub const RECORDS_HEADER: &str =
    "replicate,looks,filter,nel,line_pres,edge_grad,edge_var,q_index,beta_rho,flags";

/// Metric column names in schema order.
pub const METRIC_NAMES: [&str; 6] =
    ["nel", "line_pres", "edge_grad", "edge_var", "q_index", "beta_rho"];

fn metric_values(record: &MetricsRecord) -> [f64; 6] {
    [
        record.nel,
        record.line_pres,
        record.edge_grad,
        record.edge_var,
        record.q_index,
        record.beta_rho,
    ]
}

/// Canonical record order: by looks, then filter name, then replicate.
pub fn sort_records(records: &mut [MetricsRecord]) {
    records.sort_by(|a, b| {
        a.looks
            .partial_cmp(&b.looks)
            .expect("looks levels are finite")
            .then_with(|| a.filter.cmp(&b.filter))
            .then_with(|| a.replicate.cmp(&b.replicate))
    });
}

pub fn records_to_csv(records: &[MetricsRecord]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(RECORDS_HEADER.split(','))?;
    for r in records {
        let m = metric_values(r);
        writer.write_record([
            r.replicate.to_string(),
            format!("{:.8e}", r.looks),
            r.filter.clone(),
            format!("{:.8e}", m[0]),
            format!("{:.8e}", m[1]),
            format!("{:.8e}", m[2]),
            format!("{:.8e}", m[3]),
            format!("{:.8e}", m[4]),
            format!("{:.8e}", m[5]),
            r.flags.join(";"),
        ])?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}

pub fn records_from_csv(text: &str) -> Result<Vec<MetricsRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    {
        let header = reader.headers().context("reading CSV header")?;
        let expected: Vec<&str> = RECORDS_HEADER.split(',').collect();
        if header.iter().collect::<Vec<_>>() != expected {
            bail!("unexpected CSV header {header:?}");
        }
    }
    let mut records = Vec::new();
    for (index, row) in reader.records().enumerate() {
        let row = row.with_context(|| format!("reading CSV record {}", index + 1))?;
        let context = |field: &str| format!("record {}: field {field}", index + 1);
        if row.len() != 10 {
            bail!("record {}: expected 10 fields, got {}", index + 1, row.len());
        }
        let real = |slot: usize, name: &str| -> Result<f64> {
            row[slot].parse::<f64>().with_context(|| context(name))
        };
        records.push(MetricsRecord {
            replicate: row[0].parse().with_context(|| context("replicate"))?,
            looks: real(1, "looks")?,
            filter: row[2].to_string(),
            nel: real(3, "nel")?,
            line_pres: real(4, "line_pres")?,
            edge_grad: real(5, "edge_grad")?,
            edge_var: real(6, "edge_var")?,
            q_index: real(7, "q_index")?,
            beta_rho: real(8, "beta_rho")?,
            flags: if row[9].is_empty() {
                Vec::new()
            } else {
                row[9].split(';').map(str::to_string).collect()
            },
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub looks: f64,
    pub filter: String,
    pub metric: &'static str,
    /// Finite values the statistics are computed from.
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub flags: Vec<String>,
}

/// Linear-interpolation quantile on sorted data (the convention where
/// the k-th of n order statistics sits at probability (k-1)/(n-1)).
pub(crate) fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 == n {
        return sorted[n - 1];
    }
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Per (looks, filter, metric) statistics over the finite values.
///
/// Order-independent: groups and their members are sorted internally, so
/// shuffled input summarizes identically. Non-finite values (the ENL
/// sentinel, failed-metric NaNs) are excluded and flagged; a group with
/// no finite values for a metric is omitted with a warning.
pub fn summarize(records: &[MetricsRecord]) -> (Vec<SummaryRow>, Vec<String>) {
    let mut sorted: Vec<&MetricsRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        a.looks
            .partial_cmp(&b.looks)
            .expect("looks levels are finite")
            .then_with(|| a.filter.cmp(&b.filter))
            .then_with(|| a.replicate.cmp(&b.replicate))
    });

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let looks = sorted[start].looks;
        let filter = sorted[start].filter.clone();
        let mut end = start;
        while end < sorted.len()
            && sorted[end].looks == looks
            && sorted[end].filter == filter
        {
            end += 1;
        }
        let group = &sorted[start..end];
        for (slot, metric) in METRIC_NAMES.iter().enumerate() {
            let mut values: Vec<f64> = group
                .iter()
                .map(|r| metric_values(r)[slot])
                .filter(|v| v.is_finite())
                .collect();
            let mut flags = Vec::new();
            let excluded = group.len() - values.len();
            if excluded > 0 {
                flags.push(format!("excluded_nonfinite:{excluded}"));
            }
            if values.is_empty() {
                warnings.push(format!(
                    "group looks={looks} filter={filter}: no finite {metric} values, omitted"
                ));
                continue;
            }
            let n = values.len();
            let mean = values.iter().sum::<f64>() / n as f64;
            let sd = if n > 1 {
                let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
                (ss / (n - 1) as f64).sqrt()
            } else {
                flags.push("single_sample".into());
                0.0
            };
            values.sort_by(|a, b| a.partial_cmp(b).expect("values are finite"));
            rows.push(SummaryRow {
                looks,
                filter: filter.clone(),
                metric,
                count: n,
                mean,
                sd,
                min: values[0],
                q1: quantile(&values, 0.25),
                median: quantile(&values, 0.5),
                q3: quantile(&values, 0.75),
                max: values[n - 1],
                flags,
            });
        }
        start = end;
    }
    (rows, warnings)
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record([
        "looks", "filter", "metric", "count", "mean", "sd", "min", "q1", "median", "q3", "max",
        "flags",
    ])?;
    for r in rows {
        writer.write_record([
            format!("{:.8e}", r.looks),
            r.filter.clone(),
            r.metric.to_string(),
            r.count.to_string(),
            format!("{:.8e}", r.mean),
            format!("{:.8e}", r.sd),
            format!("{:.8e}", r.min),
            format!("{:.8e}", r.q1),
            format!("{:.8e}", r.median),
            format!("{:.8e}", r.q3),
            format!("{:.8e}", r.max),
            r.flags.join(";"),
        ])?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}

/// Condensed per-(looks, filter) table with mean-and-sd columns per
/// metric, the shape results are usually quoted in.
pub fn format_table(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<6} {:<7} {:>20} {:>20} {:>20} {:>20} {:>20} {:>20}",
        "looks", "filter", "nel", "line_pres", "edge_grad", "edge_var", "q_index", "beta_rho"
    );
    let mut groups: Vec<(f64, String)> = Vec::new();
    for r in rows {
        let key = (r.looks, r.filter.clone());
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    for (looks, filter) in groups {
        let _ = write!(out, "{looks:<6} {filter:<7}");
        for metric in METRIC_NAMES {
            match rows
                .iter()
                .find(|r| r.looks == looks && r.filter == filter && r.metric == metric)
            {
                Some(r) => {
                    let _ = write!(out, " {:>11.4} ±{:>7.4}", r.mean, r.sd);
                }
                None => {
                    let _ = write!(out, " {:>20}", "-");
                }
            }
        }
        let _ = writeln!(out);
    }
    out
}
