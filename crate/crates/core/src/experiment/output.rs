use std::path::Path;

use serde::Serialize;

use super::{ConditionSummary, Effect, ItemRecord};
use crate::error::{Error, Result};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(Error::from)
}

pub fn write_items_csv(path: impl AsRef<Path>, records: &[ItemRecord]) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record([
        "item_id",
        "set_id",
        "interference",
        "grammaticality",
        "subject_number",
        "layer",
        "head",
        "surprisal_bits",
        "attention_entropy_bits",
        "attention_to_target",
        "attention_to_distractor",
    ])?;
    for r in records {
        let m = &r.metrics;
        w.write_record([
            r.item_id.clone(),
            r.set_id.clone(),
            r.condition.interference.label().into(),
            r.condition.grammaticality.label().into(),
            r.condition.subject_number.label().into(),
            m.head_used.layer.to_string(),
            m.head_used.head.to_string(),
            m.surprisal_bits.to_string(),
            m.attention_entropy_bits.to_string(),
            opt(m.attention_to_target),
            opt(m.attention_to_distractor),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

const STAT_COLUMNS: [&str; 6] = ["n", "mean", "sd", "se", "ci95_low", "ci95_high"];

fn stat_fields(d: &crate::stats::Describe) -> [String; 6] {
    [
        d.n.to_string(),
        d.mean.to_string(),
        opt(d.sd),
        opt(d.se),
        opt(d.ci95_low),
        opt(d.ci95_high),
    ]
}

pub fn write_summary_csv(path: impl AsRef<Path>, summaries: &[ConditionSummary]) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    let mut header = vec!["metric", "interference", "grammaticality", "subject_number"];
    header.extend(STAT_COLUMNS);
    w.write_record(&header)?;
    for s in summaries {
        let mut row = vec![
            s.metric.name().to_string(),
            s.condition.interference.label().into(),
            s.condition.grammaticality.label().into(),
            s.condition.subject_number.label().into(),
        ];
        row.extend(stat_fields(&s.stats));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

pub fn write_effects_csv(path: impl AsRef<Path>, effects: &[Effect]) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    let mut header = vec!["metric", "grammaticality", "subject_number"];
    header.extend(STAT_COLUMNS.iter().map(|c| if *c == "n" { "n_sets" } else { c }));
    w.write_record(&header)?;
    for e in effects {
        let mut row = vec![
            e.metric.name().to_string(),
            e.grammaticality.label().into(),
            e.subject_number.label().into(),
        ];
        row.extend(stat_fields(&e.stats));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

#[derive(Debug, Serialize)]
pub struct PlotSeries {
    pub metric: &'static str,
    pub condition: String,
    pub points: Vec<f64>,
    pub mean: f64,
    pub ci95: Option<[f64; 2]>,
}

/// One series per (metric, condition): raw item values plus mean and interval.
pub fn plot_data(records: &[ItemRecord], summaries: &[ConditionSummary]) -> Vec<PlotSeries> {
    summaries
        .iter()
        .map(|s| {
            let mut points: Vec<f64> = records
                .iter()
                .filter(|r| r.condition == s.condition)
                .filter_map(|r| s.metric.value(&r.metrics))
                .collect();
            points.sort_by(f64::total_cmp);
            PlotSeries {
                metric: s.metric.name(),
                condition: s.condition.to_string(),
                points,
                mean: s.stats.mean,
                ci95: s.stats.ci95_low.zip(s.stats.ci95_high).map(|(a, b)| [a, b]),
            }
        })
        .collect()
}

pub fn write_plot_data(path: impl AsRef<Path>, series: &[PlotSeries]) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(series)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
