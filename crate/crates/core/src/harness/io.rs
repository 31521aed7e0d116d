//! Result files: per-trial CSV, per-cell summary CSV, statistics JSON and
//! bar-chart series JSON.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::stats::{stats_report, success_ratio, CellStats};
use crate::harness::trial::TrialRecord;

pub const RESULTS_HEADER: [&str; 8] = [
    "trial_id",
    "method",
    "situation",
    "responded",
    "responding_action",
    "response_latency_s",
    "gaze_time_s",
    "seed",
];
pub const SUMMARY_HEADER: [&str; 5] = ["method", "situation", "n", "mean_success", "sd_success"];

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn write_results_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in records {
        w.write_record([
            r.trial_id.to_string(),
            r.method.to_string(),
            r.situation.to_string(),
            r.responded.to_string(),
            r.responding_action.map(|a| a.to_string()).unwrap_or_default(),
            opt_f64(r.response_latency),
            opt_f64(r.gaze_time),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = row.get(i).unwrap_or("");
    raw.parse().map_err(|_| {
        Error::MalformedRecord(format!(
            "line {}: bad {} '{raw}'",
            row.position().map_or(0, |p| p.line()),
            RESULTS_HEADER[i]
        ))
    })
}

fn parse_opt<T: std::str::FromStr>(row: &csv::StringRecord, i: usize) -> Result<Option<T>> {
    if row.get(i).unwrap_or("").is_empty() {
        Ok(None)
    } else {
        parse_field(row, i).map(Some)
    }
}

/// Reads a results file written by [`write_results_csv`].
pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(RESULTS_HEADER) {
        return Err(Error::MalformedRecord(format!(
            "unexpected header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let record = TrialRecord {
            trial_id: parse_field(&row, 0)?,
            method: parse_field(&row, 1)?,
            situation: parse_field(&row, 2)?,
            responded: parse_field(&row, 3)?,
            responding_action: parse_opt(&row, 4)?,
            response_latency: parse_opt(&row, 5)?,
            gaze_time: parse_opt(&row, 6)?,
            seed: parse_field(&row, 7)?,
        };
        if record.responded != record.responding_action.is_some() || record.responded != record.gaze_time.is_some() {
            return Err(Error::MalformedRecord(format!(
                "trial {}: responded disagrees with action/gaze columns",
                record.trial_id
            )));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn write_summary_csv<W: Write>(cells: &[CellStats], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for c in cells {
        w.write_record([
            c.method.to_string(),
            c.situation.to_string(),
            c.n.to_string(),
            format!("{:.6}", c.mean_success),
            format!("{:.6}", c.sd_success),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartSeries {
    pub method: String,
    pub situations: Vec<String>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Grouped bar chart data: one series per method, one bar per situation.
pub fn chart_series(cells: &[CellStats]) -> Vec<ChartSeries> {
    let mut out: Vec<ChartSeries> = Vec::new();
    for c in cells {
        let m = c.method.to_string();
        if out.last().is_none_or(|s| s.method != m) {
            out.push(ChartSeries {
                method: m,
                situations: Vec::new(),
                mean: Vec::new(),
                sd: Vec::new(),
            });
        }
        let s = out.last_mut().expect("pushed above");
        s.situations.push(c.situation.to_string());
        s.mean.push(c.mean_success);
        s.sd.push(c.sd_success);
    }
    out
}

/// Writes summary.csv, stats.json and chart.json for `records` into `dir`.
pub fn write_report(dir: &Path, records: &[TrialRecord]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let cells = success_ratio(records)?;
    write_summary_csv(&cells, fs::File::create(dir.join("summary.csv"))?)?;
    let stats = serde_json::to_string_pretty(&stats_report(records)).map_err(std::io::Error::from)?;
    fs::write(dir.join("stats.json"), stats + "\n")?;
    let chart = serde_json::to_string_pretty(&serde_json::json!({ "series": chart_series(&cells) })).map_err(std::io::Error::from)?;
    fs::write(dir.join("chart.json"), chart + "\n")?;
    Ok(())
}

/// Writes results.csv plus the report files.
pub fn write_outputs(dir: &Path, records: &[TrialRecord]) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_results_csv(records, fs::File::create(dir.join("results.csv"))?)?;
    write_report(dir, records)
}
