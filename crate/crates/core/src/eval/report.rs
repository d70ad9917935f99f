use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::timeline::IoUVector;
use super::EvalError;

pub const DEFAULT_HIST_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageStats {
    pub stage_index: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Histogram {
    /// `bins + 1` equally spaced edges over `[0, 1]`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(bins: usize) -> Self {
        let bins = bins.max(1);
        Histogram {
            edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
            counts: vec![0; bins],
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Bins are `[e_k, e_{k+1})` except the last, which also holds `1.0`.
    pub fn add(&mut self, value: f64) {
        let bins = self.bins();
        let k = ((value * bins as f64).floor().max(0.0) as usize).min(bins - 1);
        self.counts[k] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSummary {
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
    pub per_stage: Vec<StageStats>,
    pub histogram_counts: Vec<u64>,
}

/// Per-stage and aggregate IoU statistics over a set of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencyReport {
    pub stage_count: usize,
    pub runs: usize,
    pub samples: usize,
    pub per_stage: Vec<StageStats>,
    pub overall: Summary,
    pub cohorts: BTreeMap<String, CohortSummary>,
    pub histogram: Histogram,
}

/// Mean and population std. Values are sorted before summing so the result
/// does not depend on input order.
fn summarize(values: &mut [f64]) -> Summary {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    sq.sort_by(f64::total_cmp);
    let var = sq.iter().sum::<f64>() / n;
    Summary { mean: mean.clamp(0.0, 1.0), std: var.sqrt() }
}

fn per_stage(vectors: &[&IoUVector], stage_count: usize) -> Vec<StageStats> {
    (0..stage_count)
        .map(|stage| {
            let mut column: Vec<f64> = vectors.iter().map(|v| v.values[stage]).collect();
            let s = summarize(&mut column);
            StageStats { stage_index: stage, mean: s.mean, std: s.std }
        })
        .collect()
}

fn all_values(vectors: &[&IoUVector]) -> Vec<f64> {
    vectors.iter().flat_map(|v| v.values.iter().copied()).collect()
}

/// Aggregates IoU vectors into per-stage, overall and per-cohort statistics
/// plus a histogram of every (run, stage) sample.
pub fn aggregate(vectors: &[IoUVector], hist_bins: usize) -> Result<EfficiencyReport, EvalError> {
    let first = vectors.first().ok_or(EvalError::EmptyInput)?;
    let stage_count = first.values.len();
    if stage_count == 0 {
        return Err(EvalError::NoStages);
    }
    if let Some(v) = vectors.iter().find(|v| v.values.len() != stage_count) {
        return Err(EvalError::StageCountMismatch {
            run_id: v.run_id.clone(),
            predicted: v.values.len(),
            truth: stage_count,
        });
    }
    if let Some(v) = vectors
        .iter()
        .find(|v| v.values.iter().any(|x| !(0.0..=1.0).contains(x)))
    {
        return Err(EvalError::ValueOutOfRange { run_id: v.run_id.clone() });
    }

    let refs: Vec<&IoUVector> = vectors.iter().collect();
    let mut histogram = Histogram::new(hist_bins);
    let mut everything = all_values(&refs);
    for &v in &everything {
        histogram.add(v);
    }

    let mut groups: BTreeMap<&str, Vec<&IoUVector>> = BTreeMap::new();
    for v in vectors {
        groups.entry(v.cohort.as_str()).or_default().push(v);
    }
    let cohorts = groups
        .into_iter()
        .map(|(label, members)| {
            let mut values = all_values(&members);
            let mut hist = Histogram::new(hist_bins);
            for &v in &values {
                hist.add(v);
            }
            let s = summarize(&mut values);
            let summary = CohortSummary {
                runs: members.len(),
                mean: s.mean,
                std: s.std,
                per_stage: per_stage(&members, stage_count),
                histogram_counts: hist.counts,
            };
            (label.to_owned(), summary)
        })
        .collect();

    Ok(EfficiencyReport {
        stage_count,
        runs: vectors.len(),
        samples: everything.len(),
        per_stage: per_stage(&refs, stage_count),
        overall: summarize(&mut everything),
        cohorts,
        histogram,
    })
}

/// Numeric table ready for CSV or JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

impl EfficiencyReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Internal consistency checks applied to reports read from disk.
    pub fn check(&self) -> Result<(), EvalError> {
        let bad = |why: &str| Err(EvalError::InvalidReport(why.to_owned()));
        if self.per_stage.len() != self.stage_count {
            return bad("per_stage length differs from stage_count");
        }
        if self.histogram.edges.len() != self.histogram.counts.len() + 1 {
            return bad("histogram needs one more edge than bins");
        }
        if self.histogram.total() as usize != self.samples {
            return bad("histogram counts do not sum to samples");
        }
        if self.samples != self.runs * self.stage_count {
            return bad("samples differ from runs x stages");
        }
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        if !in_unit(self.overall.mean) || self.per_stage.iter().any(|s| !in_unit(s.mean)) {
            return bad("mean outside [0, 1]");
        }
        for (label, c) in &self.cohorts {
            if c.per_stage.len() != self.stage_count
                || c.histogram_counts.len() != self.histogram.counts.len()
            {
                return bad(&format!("cohort '{label}' has inconsistent shape"));
            }
        }
        Ok(())
    }

    /// Per-stage mean/std, overall and then each cohort side by side.
    pub fn stage_table(&self) -> Table {
        let mut columns = vec!["stage_index".to_owned(), "mean".to_owned(), "std".to_owned()];
        for label in self.cohorts.keys() {
            columns.push(format!("{label}_mean"));
            columns.push(format!("{label}_std"));
        }
        let rows = self
            .per_stage
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut row = vec![s.stage_index as f64, s.mean, s.std];
                for c in self.cohorts.values() {
                    row.push(c.per_stage[i].mean);
                    row.push(c.per_stage[i].std);
                }
                row
            })
            .collect();
        Table { columns, rows }
    }

    /// One row per histogram bin: edges, combined count, then per cohort.
    pub fn histogram_table(&self) -> Table {
        let mut columns = vec!["bin_start".to_owned(), "bin_end".to_owned(), "count".to_owned()];
        columns.extend(self.cohorts.keys().map(|label| format!("{label}_count")));
        let rows = (0..self.histogram.bins())
            .map(|k| {
                let mut row = vec![
                    self.histogram.edges[k],
                    self.histogram.edges[k + 1],
                    self.histogram.counts[k] as f64,
                ];
                row.extend(self.cohorts.values().map(|c| c.histogram_counts[k] as f64));
                row
            })
            .collect();
        Table { columns, rows }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vector(run: &str, cohort: &str, values: Vec<f64>) -> IoUVector {
        IoUVector { run_id: run.into(), cohort: cohort.into(), values }
    }

    #[test]
    fn perfect_runs() {
        let r = aggregate(&[vector("a", "fast", vec![1.0; 12])], 20).unwrap();
        assert_eq!(r.overall.mean, 1.0);
        assert!(r.per_stage.iter().all(|s| s.mean == 1.0 && s.std == 0.0));
        assert_eq!(r.histogram.counts[19], 12);
        r.check().unwrap();
    }

    #[test]
    fn two_runs_population_stats() {
        let r = aggregate(
            &[vector("a", "fast", vec![0.8; 12]), vector("b", "slow", vec![0.6; 12])],
            10,
        )
        .unwrap();
        for s in &r.per_stage {
            assert!((s.mean - 0.7).abs() < 1e-12);
            assert!((s.std - 0.1).abs() < 1e-12);
        }
        assert!((r.overall.mean - 0.7).abs() < 1e-12);
        assert!((r.cohorts["fast"].mean - 0.8).abs() < 1e-12);
        assert!((r.cohorts["slow"].mean - 0.6).abs() < 1e-12);
        assert!(r.cohorts["slow"].std < 1e-12);
        assert_eq!(r.histogram.counts[8], 12);
        assert_eq!(r.histogram.counts[6], 12);
        assert_eq!(r.samples, 24);
    }

    #[test]
    fn empty_and_ragged_inputs_fail() {
        assert!(matches!(aggregate(&[], 20), Err(EvalError::EmptyInput)));
        let ragged = [vector("a", "x", vec![1.0; 3]), vector("b", "x", vec![1.0; 2])];
        assert!(matches!(aggregate(&ragged, 20), Err(EvalError::StageCountMismatch { .. })));
        let wild = [vector("a", "x", vec![1.5])];
        assert!(matches!(aggregate(&wild, 20), Err(EvalError::ValueOutOfRange { .. })));
    }

    #[test]
    fn histogram_edges_and_binning() {
        let mut h = Histogram::new(4);
        assert_eq!(h.edges, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        for v in [0.0, 0.2499, 0.25, 0.99, 1.0] {
            h.add(v);
        }
        assert_eq!(h.counts, vec![2, 1, 0, 2]);
    }

    #[test]
    fn tables_follow_report() {
        let r = aggregate(
            &[vector("a", "fast", vec![0.8, 0.9]), vector("b", "slow", vec![0.6, 1.0])],
            5,
        )
        .unwrap();
        let t = r.stage_table();
        assert_eq!(t.columns, ["stage_index", "mean", "std", "fast_mean", "fast_std", "slow_mean", "slow_std"]);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[1][3], 0.9);
        let h = r.histogram_table();
        assert_eq!(h.rows.len(), 5);
        assert_eq!(h.rows.iter().map(|row| row[2]).sum::<f64>(), 4.0);
        assert!(t.to_csv().starts_with("stage_index,mean,std"));
    }

    proptest! {
        #[test]
        fn order_does_not_matter(
            values in prop::collection::vec(prop::collection::vec(0.0..=1.0f64, 4), 1..12),
            rotate in 0usize..12,
        ) {
            let vectors: Vec<IoUVector> = values
                .into_iter()
                .enumerate()
                .map(|(i, v)| vector(&i.to_string(), if i % 2 == 0 { "fast" } else { "slow" }, v))
                .collect();
            let mut shuffled = vectors.clone();
            let k = rotate % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let a = aggregate(&vectors, 7).unwrap();
            let b = aggregate(&shuffled, 7).unwrap();
            prop_assert_eq!(&a.per_stage, &b.per_stage);
            prop_assert_eq!(a.overall, b.overall);
            prop_assert_eq!(&a.cohorts, &b.cohorts);
            prop_assert_eq!(a.histogram.total() as usize, vectors.len() * 4);
            prop_assert!(a.check().is_ok());
        }
    }
}
