use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::SampleEvaluation;
use crate::error::{Error, Result};
use crate::labels::Attribute;
use crate::manifest::SampleRecord;

/// Mean of one metric over a group. `pct` is `mean * 100` at one decimal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub mean: f64,
    pub pct: f64,
}

impl Cell {
    fn from_values(values: impl IntoIterator<Item = f64>) -> Option<Cell> {
        let (n, sum) = values.into_iter().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
        (n > 0).then(|| {
            let mean = sum / n as f64;
            Cell { n, mean, pct: round1(mean * 100.0) }
        })
    }
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// Per-metric cells of one group of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCells {
    pub samples: usize,
    pub count: Cell,
    pub s_id: Cell,
    pub hps: Option<Cell>,
    pub action_simple: Option<Cell>,
    pub action_complex: Option<Cell>,
    pub s_align: Option<Cell>,
    pub s_unified: Option<Cell>,
}

impl MetricCells {
    fn from_samples(evals: &[&SampleEvaluation]) -> MetricCells {
        let s = |f: fn(&SampleEvaluation) -> Option<f64>| Cell::from_values(evals.iter().filter_map(|e| f(e)));
        MetricCells {
            samples: evals.len(),
            count: s(|e| Some(f64::from(e.scores.count))).expect("non-empty group"),
            s_id: s(|e| Some(e.scores.s_id)).expect("non-empty group"),
            hps: s(|e| e.scores.hps),
            action_simple: s(|e| e.scores.action_simple),
            action_complex: s(|e| e.scores.action_complex),
            s_align: s(|e| e.scores.s_align),
            s_unified: s(|e| e.scores.s_unified),
        }
    }

    /// `(name, cell)` pairs in table order.
    pub fn named(&self) -> [(&'static str, Option<Cell>); 7] {
        [
            ("count", Some(self.count)),
            ("s_id", Some(self.s_id)),
            ("hps", self.hps),
            ("action_simple", self.action_simple),
            ("action_complex", self.action_complex),
            ("s_align", self.s_align),
            ("s_unified", self.s_unified),
        ]
    }
}

/// Per-reference ID similarity of one bucket. `deviation` is in points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeCell {
    pub n: usize,
    pub mean: f64,
    pub pct: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeRow {
    pub n: usize,
    pub mean: f64,
    pub cells: BTreeMap<String, AttributeCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub sample_count: usize,
    pub overall: MetricCells,
    pub by_person_count: BTreeMap<usize, MetricCells>,
    pub by_attribute: BTreeMap<Attribute, AttributeRow>,
    /// Per-sample scores, sorted by `sample_id`.
    pub samples: Vec<SampleEvaluation>,
}

/// Folds per-sample scores into a report, in `sample_id` order.
pub fn aggregate_report(scores: &[(SampleRecord, SampleEvaluation)]) -> Result<BenchReport> {
    if scores.is_empty() {
        return Err(Error::Precondition("cannot aggregate an empty sample list".into()));
    }
    let mut sorted: Vec<&(SampleRecord, SampleEvaluation)> = scores.iter().collect();
    sorted.sort_by(|a, b| a.1.sample_id.cmp(&b.1.sample_id));
    if let Some(w) = sorted.windows(2).find(|w| w[0].1.sample_id == w[1].1.sample_id) {
        return Err(Error::DuplicateId(w[0].1.sample_id.clone()));
    }
    for (record, eval) in &sorted {
        if record.n_refs() != eval.per_reference.len() {
            return Err(Error::DimensionMismatch {
                expected: record.n_refs(),
                actual: eval.per_reference.len(),
            });
        }
    }

    let evals: Vec<&SampleEvaluation> = sorted.iter().map(|(_, e)| e).collect();
    let mut groups: BTreeMap<usize, Vec<&SampleEvaluation>> = BTreeMap::new();
    for e in &evals {
        groups.entry(e.n_refs).or_default().push(e);
    }

    let mut by_attribute = BTreeMap::new();
    for attr in Attribute::ALL {
        let mut buckets: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for (record, eval) in &sorted {
            for (label, &sim) in record.ref_attributes().iter().zip(&eval.per_reference) {
                buckets.entry(label.bucket(attr)).or_default().push(sim);
            }
        }
        let row = Cell::from_values(buckets.values().flatten().copied()).expect("refs are non-empty");
        let cells = buckets
            .into_iter()
            .map(|(bucket, sims)| {
                let c = Cell::from_values(sims).expect("bucket is non-empty");
                let cell = AttributeCell {
                    n: c.n,
                    mean: c.mean,
                    pct: c.pct,
                    deviation: (c.mean - row.mean) * 100.0,
                };
                (bucket.to_string(), cell)
            })
            .collect();
        by_attribute.insert(attr, AttributeRow { n: row.n, mean: row.mean, cells });
    }

    Ok(BenchReport {
        sample_count: evals.len(),
        overall: MetricCells::from_samples(&evals),
        by_person_count: groups.iter().map(|(&n, g)| (n, MetricCells::from_samples(g))).collect(),
        by_attribute,
        samples: evals.into_iter().cloned().collect(),
    })
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<BenchReport> {
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))
    }

    /// One row per cell: `section,group,metric,n,mean,pct,deviation`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Malformed(e.to_string());
        w.write_record(["section", "group", "metric", "n", "mean", "pct", "deviation"])
            .map_err(csv_err)?;
        let mut groups = vec![("overall".to_string(), "all".to_string(), &self.overall)];
        for (n, cells) in &self.by_person_count {
            groups.push(("person_count".into(), n.to_string(), cells));
        }
        for (section, group, cells) in groups {
            for (metric, cell) in cells.named() {
                if let Some(c) = cell {
                    w.write_record([
                        section.as_str(),
                        group.as_str(),
                        metric,
                        &c.n.to_string(),
                        &c.mean.to_string(),
                        &format!("{:.1}", c.pct),
                        "",
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
        for (attr, row) in &self.by_attribute {
            let section = format!("attribute:{attr}");
            for (bucket, c) in &row.cells {
                w.write_record([
                    section.as_str(),
                    bucket.as_str(),
                    "s_id",
                    &c.n.to_string(),
                    &c.mean.to_string(),
                    &format!("{:.1}", c.pct),
                    &c.deviation.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Malformed(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Plain-text tables: per-count metrics, then one deviation table per attribute.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let fmt = |c: Option<Cell>| c.map_or_else(|| "-".to_string(), |c| format!("{:.1}", c.pct));
        let _ = writeln!(
            out,
            "{:<8} {:>7} {:>7} {:>8} {:>7} {:>8} {:>8} {:>7} {:>7}",
            "group", "samples", "count", "multi-id", "hps", "act-s", "act-c", "align", "unified"
        );
        let mut rows = vec![("all".to_string(), &self.overall)];
        rows.extend(self.by_person_count.iter().map(|(n, c)| (format!("N={n}"), c)));
        for (name, c) in rows {
            let _ = writeln!(
                out,
                "{:<8} {:>7} {:>7} {:>8} {:>7} {:>8} {:>8} {:>7} {:>7}",
                name,
                c.samples,
                fmt(Some(c.count)),
                fmt(Some(c.s_id)),
                fmt(c.hps),
                fmt(c.action_simple),
                fmt(c.action_complex),
                fmt(c.s_align),
                fmt(c.s_unified)
            );
        }
        for (attr, row) in &self.by_attribute {
            let _ = writeln!(out, "\n{attr} (row mean {:.1})", row.mean * 100.0);
            for (bucket, c) in &row.cells {
                let _ = writeln!(out, "  {bucket:<16} n={:<5} {:>5.1} {:+.1}", c.n, c.pct, c.deviation);
            }
        }
        out
    }
}
