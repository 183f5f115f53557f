//! The benchmark protocol: content-disjoint random splits, per-split rank
//! and (logistic-mapped) linear correlation, and median reporting.
//!
//! Each split partitions *content ids* 80/20, never individual records, so
//! all versions of one source land on the same side. Anything trainable —
//! the generalized fusion's beta — is selected on the training side only;
//! correlations are computed on the test side. The logistic mapping for
//! PCC is likewise fitted per split on the test-side predictions only.
//! Runs are deterministic: per-split RNGs are ChaCha8 streams derived from
//! the user seed and the split counter, so a seed reproduces a report
//! byte for byte on any platform.

pub mod corr;
pub mod dataset;
pub mod logistic;

pub use corr::{average_ranks, pcc, srocc};
pub use dataset::{ingest_dataset, ScoredRecord};
pub use logistic::{fit_logistic, LogisticFit};

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fusion::{basic_2step, derive_rescale, general_2step, select_beta, FusionSample, MetricRanges};
use crate::par;

/// How a metric's predictions are produced from record scores.
#[derive(Debug, Clone)]
pub enum MetricKind {
    /// A raw score column used directly. Inverse-polarity metrics (lower
    /// is better, like NIQE) are negated before correlation so reported
    /// SROCC comes out positive.
    Column {
        column: String,
        higher_is_better: bool,
    },
    /// The basic product fusion of an FR column and an NR column at a
    /// fixed alpha; no per-split training.
    BasicTwoStep {
        fr_column: String,
        nr_column: String,
        alpha: f64,
    },
    /// The rescaled product fusion; beta is grid-searched on each split's
    /// training side.
    GeneralTwoStep {
        fr_column: String,
        nr_column: String,
        ranges: MetricRanges,
        grid_step: f64,
    },
}

/// A labelled metric to evaluate under the split protocol.
#[derive(Debug, Clone)]
pub struct MetricEval {
    pub label: String,
    pub kind: MetricKind,
}

impl MetricEval {
    pub fn column(label: impl Into<String>, column: impl Into<String>, higher_is_better: bool) -> Self {
        Self {
            label: label.into(),
            kind: MetricKind::Column {
                column: column.into(),
                higher_is_better,
            },
        }
    }

    pub fn basic_two_step(
        label: impl Into<String>,
        fr_column: impl Into<String>,
        nr_column: impl Into<String>,
        alpha: f64,
    ) -> Self {
        Self {
            label: label.into(),
            kind: MetricKind::BasicTwoStep {
                fr_column: fr_column.into(),
                nr_column: nr_column.into(),
                alpha,
            },
        }
    }
}

/// Content ids on each side of one split, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitDescriptor {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Per-metric results across all splits.
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub label: String,
    pub median_srocc: f64,
    pub median_pcc: f64,
    pub srocc_trace: Vec<f64>,
    pub pcc_trace: Vec<f64>,
}

/// Full protocol output.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub seed: u64,
    pub n_splits: usize,
    pub train_frac: f64,
    pub metrics: Vec<MetricReport>,
    pub splits: Vec<SplitDescriptor>,
}

/// One row of an alpha sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub median_srocc: f64,
    pub median_pcc: f64,
}

fn fetch_score(record: &ScoredRecord, column: &str) -> Result<f64> {
    let value = *record
        .scores
        .get(column)
        .ok_or_else(|| Error::MissingScore {
            metric: column.to_string(),
            dst: record.dst_path.clone(),
        })?;
    if !value.is_finite() {
        return Err(Error::NonFiniteScore(format!(
            "{column} for {}",
            record.dst_path.display()
        )));
    }
    Ok(value)
}

enum Prepared {
    Fixed(Vec<f64>),
    Trainable {
        q_r: Vec<f64>,
        q_nr: Vec<f64>,
        ranges: MetricRanges,
        grid_step: f64,
    },
}

fn prepare(records: &[ScoredRecord], metric: &MetricEval) -> Result<Prepared> {
    match &metric.kind {
        MetricKind::Column {
            column,
            higher_is_better,
        } => {
            let sign = if *higher_is_better { 1.0 } else { -1.0 };
            let preds = records
                .iter()
                .map(|r| fetch_score(r, column).map(|v| sign * v))
                .collect::<Result<Vec<f64>>>()?;
            Ok(Prepared::Fixed(preds))
        }
        MetricKind::BasicTwoStep {
            fr_column,
            nr_column,
            alpha,
        } => {
            let preds = records
                .iter()
                .map(|r| {
                    let fr = fetch_score(r, fr_column)?;
                    let nr = fetch_score(r, nr_column)?;
                    basic_2step(fr, nr, *alpha)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(Prepared::Fixed(preds))
        }
        MetricKind::GeneralTwoStep {
            fr_column,
            nr_column,
            ranges,
            grid_step,
        } => {
            let q_r = records
                .iter()
                .map(|r| fetch_score(r, fr_column))
                .collect::<Result<Vec<f64>>>()?;
            let q_nr = records
                .iter()
                .map(|r| fetch_score(r, nr_column))
                .collect::<Result<Vec<f64>>>()?;
            Ok(Prepared::Trainable {
                q_r,
                q_nr,
                ranges: *ranges,
                grid_step: *grid_step,
            })
        }
    }
}

fn median_of(trace: &[f64]) -> f64 {
    let mut sorted = trace.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn split_rng(seed: u64, split: usize) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&(split as u64).to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

/// Run the full split protocol over precomputed record scores.
pub fn run_splits(
    records: &[ScoredRecord],
    metrics: &[MetricEval],
    n_splits: usize,
    train_frac: f64,
    seed: u64,
) -> Result<EvalReport> {
    if metrics.is_empty() {
        return Err(Error::InvalidConfig("no metrics to evaluate".into()));
    }
    if n_splits == 0 {
        return Err(Error::InvalidConfig("n_splits must be >= 1".into()));
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction {train_frac} outside (0, 1)"
        )));
    }
    let contents: Vec<String> = records
        .iter()
        .map(|r| r.content_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if contents.len() < 5 {
        return Err(Error::Dataset(format!(
            "{} distinct contents, need at least 5",
            contents.len()
        )));
    }

    let prepared = metrics
        .iter()
        .map(|m| prepare(records, m))
        .collect::<Result<Vec<Prepared>>>()?;
    let mos: Vec<f64> = records.iter().map(|r| r.mos).collect();

    let train_count = ((contents.len() as f64 * train_frac).round() as usize)
        .clamp(1, contents.len() - 1);

    struct SplitOutcome {
        descriptor: SplitDescriptor,
        per_metric: Vec<(f64, f64)>,
    }

    let outcomes: Vec<SplitOutcome> = par::try_map_indexed(n_splits, |k| {
        let mut rng = split_rng(seed, k);
        let mut shuffled = contents.clone();
        shuffled.shuffle(&mut rng);
        let mut train: Vec<String> = shuffled[..train_count].to_vec();
        let mut test: Vec<String> = shuffled[train_count..].to_vec();
        train.sort();
        test.sort();

        let in_train: BTreeSet<&str> = train.iter().map(String::as_str).collect();
        let mut train_idx = Vec::new();
        let mut test_idx = Vec::new();
        for (i, r) in records.iter().enumerate() {
            if in_train.contains(r.content_id.as_str()) {
                train_idx.push(i);
            } else {
                test_idx.push(i);
            }
        }

        let mos_test: Vec<f64> = test_idx.iter().map(|&i| mos[i]).collect();
        let mut per_metric = Vec::with_capacity(prepared.len());
        for p in &prepared {
            let preds: Vec<f64> = match p {
                Prepared::Fixed(all) => test_idx.iter().map(|&i| all[i]).collect(),
                Prepared::Trainable {
                    q_r,
                    q_nr,
                    ranges,
                    grid_step,
                } => {
                    let samples: Vec<FusionSample> = train_idx
                        .iter()
                        .map(|&i| FusionSample {
                            q_r: q_r[i],
                            q_nr: q_nr[i],
                            mos: mos[i],
                        })
                        .collect();
                    let beta = select_beta(&samples, ranges, *grid_step)?;
                    let params = derive_rescale(
                        ranges.fr.hi,
                        ranges.fr.low,
                        ranges.nr.hi,
                        ranges.nr.low,
                        beta,
                    )?;
                    test_idx
                        .iter()
                        .map(|&i| general_2step(q_r[i], q_nr[i], &params))
                        .collect()
                }
            };
            let rho = srocc(&preds, &mos_test)?;
            let fit = fit_logistic(&preds, &mos_test)?;
            let mapped: Vec<f64> = preds.iter().map(|&x| fit.map(x)).collect();
            let r = pcc(&mapped, &mos_test)?;
            per_metric.push((rho, r));
        }
        Ok(SplitOutcome {
            descriptor: SplitDescriptor { train, test },
            per_metric,
        })
    })?;

    let mut metric_reports = Vec::with_capacity(metrics.len());
    for (m, metric) in metrics.iter().enumerate() {
        let srocc_trace: Vec<f64> = outcomes.iter().map(|o| o.per_metric[m].0).collect();
        let pcc_trace: Vec<f64> = outcomes.iter().map(|o| o.per_metric[m].1).collect();
        metric_reports.push(MetricReport {
            label: metric.label.clone(),
            median_srocc: median_of(&srocc_trace),
            median_pcc: median_of(&pcc_trace),
            srocc_trace,
            pcc_trace,
        });
    }

    Ok(EvalReport {
        seed,
        n_splits,
        train_frac,
        metrics: metric_reports,
        splits: outcomes.into_iter().map(|o| o.descriptor).collect(),
    })
}

/// Run the protocol once per alpha for the basic fusion of `fr_column`
/// and `nr_column`; all alphas share the same splits.
pub fn alpha_sweep(
    records: &[ScoredRecord],
    fr_column: &str,
    nr_column: &str,
    alphas: &[f64],
    n_splits: usize,
    train_frac: f64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if alphas.is_empty() {
        return Err(Error::InvalidConfig("empty alpha list".into()));
    }
    let metrics: Vec<MetricEval> = alphas
        .iter()
        .map(|&alpha| MetricEval::basic_two_step(format!("alpha={alpha}"), fr_column, nr_column, alpha))
        .collect();
    let report = run_splits(records, &metrics, n_splits, train_frac, seed)?;
    Ok(alphas
        .iter()
        .zip(&report.metrics)
        .map(|(&alpha, m)| SweepRow {
            alpha,
            median_srocc: m.median_srocc,
            median_pcc: m.median_pcc,
        })
        .collect())
}

/// Machine-readable summary: one row per metric.
pub fn report_csv(report: &EvalReport) -> String {
    let mut out = String::from("metric,median_srocc,median_pcc\n");
    for m in &report.metrics {
        out.push_str(&format!(
            "{},{:.6},{:.6}\n",
            m.label, m.median_srocc, m.median_pcc
        ));
    }
    out
}

/// Aligned human-readable table in the usual benchmark layout.
pub fn report_table(report: &EvalReport) -> String {
    let name_width = report
        .metrics
        .iter()
        .map(|m| m.label.len())
        .max()
        .unwrap_or(6)
        .max("metric".len());
    let mut out = format!(
        "{:<name_width$}  {:>8}  {:>8}\n",
        "metric", "SROCC", "PCC"
    );
    out.push_str(&format!(
        "{}  {}  {}\n",
        "-".repeat(name_width),
        "-".repeat(8),
        "-".repeat(8)
    ));
    for m in &report.metrics {
        out.push_str(&format!(
            "{:<name_width$}  {:>8.4}  {:>8.4}\n",
            m.label, m.median_srocc, m.median_pcc
        ));
    }
    out.push_str(&format!(
        "({} splits at {:.0}%/{:.0}%, seed {})\n",
        report.n_splits,
        report.train_frac * 100.0,
        (1.0 - report.train_frac) * 100.0,
        report.seed
    ));
    out
}

/// Per-split correlation traces.
pub fn traces_csv(report: &EvalReport) -> String {
    let mut out = String::from("split,metric,srocc,pcc\n");
    for (k, _) in report.splits.iter().enumerate() {
        for m in &report.metrics {
            out.push_str(&format!(
                "{},{},{:.6},{:.6}\n",
                k, m.label, m.srocc_trace[k], m.pcc_trace[k]
            ));
        }
    }
    out
}

/// Alpha-sweep rows as CSV.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("alpha,median_srocc,median_pcc\n");
    for row in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6}\n",
            row.alpha, row.median_srocc, row.median_pcc
        ));
    }
    out
}
