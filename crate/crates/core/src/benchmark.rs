//! Multi-sequence evaluation, cross-tracker ranking and report emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::assignment::{
    concatenate_timelines, evaluated_targets, match_sequence, preprocess_results, MatchConfig,
    MatchTimeline,
};
use crate::metrics::{
    compute_clear, compute_track_quality, detection_frame_evals, detection_metrics_from_evals,
    ClearMetrics, DetectionMetrics, MetricsError, TrackQualityMetrics,
};
use crate::types::{EntryRecord, SequenceMeta, Trajectory};

/// Ground truth plus metadata for one sequence.
#[derive(Debug, Clone)]
pub struct SequenceData {
    pub meta: SequenceMeta,
    pub ground_truth: BTreeMap<i64, Trajectory>,
}

/// All scalar metrics for one (tracker, sequence) pair or one aggregated
/// benchmark cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub name: String,
    pub frames: u32,
    pub gt_tracks: u64,
    pub gt_total: u64,
    #[serde(flatten)]
    pub clear: ClearMetrics,
    #[serde(flatten)]
    pub quality: TrackQualityMetrics,
}

/// Per-sequence rows, the concatenated overall row and the robustness
/// statistic, with the configuration echoed for auditability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub config: MatchConfig,
    pub sequences: Vec<MetricReport>,
    pub overall: MetricReport,
    /// Population standard deviation of the per-sequence MOTA values.
    pub mota_stddev: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchmarkError {
    #[error("result sequences do not match the ground truth: missing {missing:?}, unexpected {extra:?}")]
    SequenceSetMismatch { missing: Vec<String>, extra: Vec<String> },
    #[error("sequence '{0}': {1}")]
    Sequence(String, MetricsError),
}

fn check_sequence_sets<V>(
    gt: &BTreeMap<String, SequenceData>,
    results: &BTreeMap<String, V>,
) -> Result<(), BenchmarkError> {
    let missing: Vec<String> =
        gt.keys().filter(|k| !results.contains_key(*k)).cloned().collect();
    let extra: Vec<String> = results.keys().filter(|k| !gt.contains_key(*k)).cloned().collect();
    if missing.is_empty() && extra.is_empty() {
        Ok(())
    } else {
        Err(BenchmarkError::SequenceSetMismatch { missing, extra })
    }
}

fn population_stddev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

fn sum_quality(rows: &[&TrackQualityMetrics], overall_recall: f64) -> TrackQualityMetrics {
    let mostly_tracked: u64 = rows.iter().map(|q| q.mostly_tracked).sum();
    let partially_tracked: u64 = rows.iter().map(|q| q.partially_tracked).sum();
    let mostly_lost: u64 = rows.iter().map(|q| q.mostly_lost).sum();
    let fragmentations: u64 = rows.iter().map(|q| q.fragmentations).sum();
    let total = mostly_tracked + partially_tracked + mostly_lost;
    let ratio = |count: u64| if total == 0 { 0.0 } else { count as f64 / total as f64 };
    TrackQualityMetrics {
        mostly_tracked,
        partially_tracked,
        mostly_lost,
        total_trajectories: total,
        mostly_tracked_ratio: ratio(mostly_tracked),
        partially_tracked_ratio: ratio(partially_tracked),
        mostly_lost_ratio: ratio(mostly_lost),
        fragmentations,
        relative_fragmentations: if overall_recall > 0.0 {
            fragmentations as f64 / overall_recall
        } else if fragmentations == 0 {
            0.0
        } else {
            f64::INFINITY
        },
    }
}

/// Evaluates one tracker over every sequence of a benchmark.
///
/// Sequences are scored independently (in parallel) and then concatenated:
/// the overall row is computed from summed event counts and overlap sums,
/// not from averaged per-sequence scores.
pub fn evaluate_benchmark(
    gt: &BTreeMap<String, SequenceData>,
    results: &BTreeMap<String, BTreeMap<i64, Trajectory>>,
    config: &MatchConfig,
) -> Result<BenchmarkReport, BenchmarkError> {
    check_sequence_sets(gt, results)?;

    let names: Vec<&String> = gt.keys().collect();
    let evaluated: Vec<(MetricReport, MatchTimeline)> = names
        .par_iter()
        .map(|name| {
            let data = &gt[*name];
            let tracker = &results[*name];
            let (filtered, _) = preprocess_results(&data.ground_truth, tracker, config);
            let targets = evaluated_targets(&data.ground_truth, config);
            let timeline = match_sequence(&targets, &filtered, config);
            let clear = compute_clear(&timeline, timeline.gt_total, data.meta.frame_count)
                .map_err(|e| BenchmarkError::Sequence((*name).clone(), e))?;
            let quality = compute_track_quality(&targets, &timeline);
            let row = MetricReport {
                name: (*name).clone(),
                frames: data.meta.frame_count,
                gt_tracks: quality.total_trajectories,
                gt_total: timeline.gt_total,
                clear,
                quality,
            };
            Ok((row, timeline))
        })
        .collect::<Result<_, BenchmarkError>>()?;

    let (rows, timelines): (Vec<MetricReport>, Vec<MatchTimeline>) =
        evaluated.into_iter().unzip();

    let total_frames: u32 = rows.iter().map(|r| r.frames).sum();
    let merged = concatenate_timelines(&timelines);
    let overall_clear = compute_clear(&merged, merged.gt_total, total_frames)
        .map_err(|e| BenchmarkError::Sequence("OVERALL".into(), e))?;
    let overall_quality = sum_quality(
        &rows.iter().map(|r| &r.quality).collect::<Vec<_>>(),
        overall_clear.recall,
    );
    let overall = MetricReport {
        name: "OVERALL".into(),
        frames: total_frames,
        gt_tracks: overall_quality.total_trajectories,
        gt_total: merged.gt_total,
        clear: overall_clear,
        quality: overall_quality,
    };
    let mota_values: Vec<f64> = rows.iter().map(|r| r.clear.mota).collect();

    Ok(BenchmarkReport {
        config: config.clone(),
        sequences: rows,
        overall,
        mota_stddev: population_stddev(&mota_values),
    })
}

/// One sequence's detection scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionRow {
    pub name: String,
    pub frames: u32,
    #[serde(flatten)]
    pub metrics: DetectionMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub config: MatchConfig,
    pub operating_confidence: f64,
    pub sequences: Vec<DetectionRow>,
    pub overall: DetectionRow,
}

/// Evaluates detection files over every sequence; the overall row sweeps the
/// confidence threshold across all sequences at once.
pub fn evaluate_detection_benchmark(
    gt: &BTreeMap<String, SequenceData>,
    detections: &BTreeMap<String, Vec<EntryRecord>>,
    config: &MatchConfig,
    operating_confidence: f64,
) -> Result<DetectionReport, BenchmarkError> {
    check_sequence_sets(gt, detections)?;

    let names: Vec<&String> = gt.keys().collect();
    let evaluated: Vec<(DetectionRow, Vec<crate::metrics::DetectionFrameEval>, u64)> = names
        .par_iter()
        .map(|name| {
            let data = &gt[*name];
            let (frames, gt_total, max_frame) =
                detection_frame_evals(&data.ground_truth, &detections[*name], config);
            let frame_count = data.meta.frame_count.max(max_frame);
            let metrics =
                detection_metrics_from_evals(&frames, gt_total, frame_count, operating_confidence)
                    .map_err(|e| BenchmarkError::Sequence((*name).clone(), e))?;
            let row =
                DetectionRow { name: (*name).clone(), frames: frame_count, metrics };
            Ok((row, frames, gt_total))
        })
        .collect::<Result<_, BenchmarkError>>()?;

    let mut rows = Vec::new();
    let mut all_frames = Vec::new();
    let mut gt_total = 0u64;
    let mut total_frames = 0u32;
    for (row, frames, seq_gt) in evaluated {
        total_frames += row.frames;
        rows.push(row);
        all_frames.extend(frames);
        gt_total += seq_gt;
    }
    let overall_metrics =
        detection_metrics_from_evals(&all_frames, gt_total, total_frames, operating_confidence)
            .map_err(|e| BenchmarkError::Sequence("OVERALL".into(), e))?;
    let overall =
        DetectionRow { name: "OVERALL".into(), frames: total_frames, metrics: overall_metrics };

    Ok(DetectionReport {
        config: config.clone(),
        operating_confidence,
        sequences: rows,
        overall,
    })
}

/// A rankable metric with its orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMetric {
    Mota,
    Motp,
    MostlyTrackedRatio,
    MostlyLostRatio,
    FalsePositives,
    FalseNegatives,
    IdSwitches,
    Fragmentations,
    Recall,
    Precision,
    Faf,
}

impl RankMetric {
    /// The default ranking set: accuracy, precision, track quality and the
    /// error counts.
    pub fn default_set() -> Vec<RankMetric> {
        vec![
            RankMetric::Mota,
            RankMetric::Motp,
            RankMetric::MostlyTrackedRatio,
            RankMetric::MostlyLostRatio,
            RankMetric::FalsePositives,
            RankMetric::FalseNegatives,
            RankMetric::IdSwitches,
            RankMetric::Fragmentations,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            RankMetric::Mota => "MOTA",
            RankMetric::Motp => "MOTP",
            RankMetric::MostlyTrackedRatio => "MTR",
            RankMetric::MostlyLostRatio => "MLR",
            RankMetric::FalsePositives => "FP",
            RankMetric::FalseNegatives => "FN",
            RankMetric::IdSwitches => "IDSW",
            RankMetric::Fragmentations => "FM",
            RankMetric::Recall => "Rcll",
            RankMetric::Precision => "Prcn",
            RankMetric::Faf => "FAF",
        }
    }

    pub fn parse(text: &str) -> Option<RankMetric> {
        let all = [
            RankMetric::Mota,
            RankMetric::Motp,
            RankMetric::MostlyTrackedRatio,
            RankMetric::MostlyLostRatio,
            RankMetric::FalsePositives,
            RankMetric::FalseNegatives,
            RankMetric::IdSwitches,
            RankMetric::Fragmentations,
            RankMetric::Recall,
            RankMetric::Precision,
            RankMetric::Faf,
        ];
        all.into_iter().find(|m| m.name().eq_ignore_ascii_case(text))
    }

    pub fn higher_is_better(&self) -> bool {
        matches!(
            self,
            RankMetric::Mota
                | RankMetric::Motp
                | RankMetric::MostlyTrackedRatio
                | RankMetric::Recall
                | RankMetric::Precision
        )
    }

    pub fn value(&self, report: &MetricReport) -> f64 {
        match self {
            RankMetric::Mota => report.clear.mota,
            RankMetric::Motp => report.clear.motp,
            RankMetric::MostlyTrackedRatio => report.quality.mostly_tracked_ratio,
            RankMetric::MostlyLostRatio => report.quality.mostly_lost_ratio,
            RankMetric::FalsePositives => report.clear.false_positives as f64,
            RankMetric::FalseNegatives => report.clear.false_negatives as f64,
            RankMetric::IdSwitches => report.clear.id_switches as f64,
            RankMetric::Fragmentations => report.quality.fragmentations as f64,
            RankMetric::Recall => report.clear.recall,
            RankMetric::Precision => report.clear.precision,
            RankMetric::Faf => report.clear.faf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedTracker {
    pub tracker: String,
    /// Benchmark-level metric values, in table column order.
    pub values: Vec<f64>,
    /// Fractional rank per metric (ties share the mean rank).
    pub ranks: Vec<f64>,
    pub average_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingTable {
    pub metrics: Vec<String>,
    /// Sorted ascending by average rank.
    pub rows: Vec<RankedTracker>,
}

/// Fractional ranks (1-based) for one metric column; ties get the mean of
/// the positions they span.
fn fractional_ranks(values: &[f64], higher_is_better: bool) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let cmp = values[a].partial_cmp(&values[b]).expect("metric values are ordered");
        if higher_is_better {
            cmp.reverse()
        } else {
            cmp
        }
    });
    let mut ranks = vec![0.0; values.len()];
    let mut at = 0;
    while at < order.len() {
        let mut end = at + 1;
        while end < order.len() && values[order[end]] == values[order[at]] {
            end += 1;
        }
        // Positions at+1 ..= end share the mean rank.
        let rank = (at + 1 + end) as f64 / 2.0;
        for &index in &order[at..end] {
            ranks[index] = rank;
        }
        at = end;
    }
    ranks
}

/// Ranks trackers by each benchmark-level metric and averages the ranks.
pub fn rank_trackers(
    reports: &BTreeMap<String, BenchmarkReport>,
    metrics: &[RankMetric],
) -> RankingTable {
    let trackers: Vec<&String> = reports.keys().collect();
    let mut per_metric_ranks: Vec<Vec<f64>> = Vec::with_capacity(metrics.len());
    let mut per_metric_values: Vec<Vec<f64>> = Vec::with_capacity(metrics.len());
    for metric in metrics {
        let values: Vec<f64> =
            trackers.iter().map(|t| metric.value(&reports[*t].overall)).collect();
        per_metric_ranks.push(fractional_ranks(&values, metric.higher_is_better()));
        per_metric_values.push(values);
    }

    let mut rows: Vec<RankedTracker> = trackers
        .iter()
        .enumerate()
        .map(|(i, tracker)| {
            let ranks: Vec<f64> = per_metric_ranks.iter().map(|col| col[i]).collect();
            let average_rank = if ranks.is_empty() {
                1.0
            } else {
                ranks.iter().sum::<f64>() / ranks.len() as f64
            };
            RankedTracker {
                tracker: (*tracker).clone(),
                values: per_metric_values.iter().map(|col| col[i]).collect(),
                ranks,
                average_rank,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.average_rank
            .partial_cmp(&b.average_rank)
            .expect("average ranks are finite")
            .then_with(|| a.tracker.cmp(&b.tracker))
    });

    RankingTable { metrics: metrics.iter().map(|m| m.name().to_string()).collect(), rows }
}

/// Output format for report emission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
    Structured,
}

fn fmt_f64(value: f64) -> String {
    // Shortest exact representation, so CSV re-parses to identical numbers.
    format!("{value}")
}

const TRACKING_COLUMNS: [&str; 19] = [
    "Seq", "Rcll", "Prcn", "FAR", "GT", "TP", "FP", "FN", "MOTA", "MOTP", "IDSW", "IDSWR", "FM",
    "FMR", "MT", "PT", "ML", "MTR", "MLR",
];

fn tracking_row_fields(row: &MetricReport) -> Vec<String> {
    vec![
        row.name.clone(),
        fmt_f64(row.clear.recall),
        fmt_f64(row.clear.precision),
        fmt_f64(row.clear.faf),
        row.gt_total.to_string(),
        row.clear.true_positives.to_string(),
        row.clear.false_positives.to_string(),
        row.clear.false_negatives.to_string(),
        fmt_f64(row.clear.mota),
        fmt_f64(row.clear.motp),
        row.clear.id_switches.to_string(),
        fmt_f64(row.clear.relative_id_switches),
        row.quality.fragmentations.to_string(),
        fmt_f64(row.quality.relative_fragmentations),
        row.quality.mostly_tracked.to_string(),
        row.quality.partially_tracked.to_string(),
        row.quality.mostly_lost.to_string(),
        fmt_f64(row.quality.mostly_tracked_ratio),
        fmt_f64(row.quality.mostly_lost_ratio),
    ]
}

fn render_aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for (i, name) in header.iter().enumerate() {
        if i > 0 {
            out.push_str("  ");
        }
        let _ = write!(out, "{:>width$}", name, width = widths[i]);
    }
    out.push('\n');
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            let _ = write!(out, "{:>width$}", cell, width = widths[i]);
        }
        out.push('\n');
    }
    out
}

fn config_echo(config: &MatchConfig) -> String {
    format!(
        "# iou_threshold = {}, distractor_overlap_threshold = {}, distractor_overlap = {}{}\n",
        config.iou_threshold,
        config.distractor_overlap_threshold,
        config.distractor_overlap_kind,
        match config.min_visibility {
            Some(v) => format!(", min_visibility = {v}"),
            None => String::new(),
        }
    )
}

/// Renders a tracking report. Deterministic: equal reports produce equal
/// bytes in every format.
pub fn emit_report(report: &BenchmarkReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => {
            let mut text =
                serde_json::to_string_pretty(report).expect("report serialization cannot fail");
            text.push('\n');
            text
        }
        ReportFormat::Csv => {
            let mut out = TRACKING_COLUMNS.join(",");
            out.push('\n');
            for row in report.sequences.iter().chain([&report.overall]) {
                out.push_str(&tracking_row_fields(row).join(","));
                out.push('\n');
            }
            out
        }
        ReportFormat::Table => {
            let mut rows: Vec<Vec<String>> =
                report.sequences.iter().map(tracking_row_fields).collect();
            rows.push(tracking_row_fields(&report.overall));
            // Table cells round to fixed decimals for readability.
            for row in &mut rows {
                for cell in row.iter_mut() {
                    if let Ok(v) = cell.parse::<f64>() {
                        if cell.contains('.') || cell.contains("inf") {
                            *cell = format!("{v:.2}");
                        }
                    }
                }
            }
            let mut out = config_echo(&report.config);
            out.push_str(&render_aligned(&TRACKING_COLUMNS, &rows));
            let _ = writeln!(out, "mota_stddev = {:.2}", report.mota_stddev);
            out
        }
    }
}

const DETECTION_COLUMNS: [&str; 11] =
    ["Seq", "AP", "Rcll", "Prcn", "FAR", "GT", "TP", "FP", "FN", "MODA", "MODP"];

fn detection_row_fields(row: &DetectionRow) -> Vec<String> {
    let m = &row.metrics;
    vec![
        row.name.clone(),
        fmt_f64(m.ap),
        fmt_f64(m.recall),
        fmt_f64(m.precision),
        fmt_f64(m.far),
        m.gt_total.to_string(),
        m.true_positives.to_string(),
        m.false_positives.to_string(),
        m.false_negatives.to_string(),
        fmt_f64(m.moda),
        fmt_f64(m.modp),
    ]
}

/// Renders a detection report with the benchmark's canonical column order.
pub fn emit_detection_report(report: &DetectionReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => {
            let mut text =
                serde_json::to_string_pretty(report).expect("report serialization cannot fail");
            text.push('\n');
            text
        }
        ReportFormat::Csv => {
            let mut out = DETECTION_COLUMNS.join(",");
            out.push('\n');
            for row in report.sequences.iter().chain([&report.overall]) {
                out.push_str(&detection_row_fields(row).join(","));
                out.push('\n');
            }
            out
        }
        ReportFormat::Table => {
            let mut rows: Vec<Vec<String>> =
                report.sequences.iter().map(detection_row_fields).collect();
            rows.push(detection_row_fields(&report.overall));
            for row in &mut rows {
                for cell in row.iter_mut() {
                    if let Ok(v) = cell.parse::<f64>() {
                        if cell.contains('.') {
                            *cell = format!("{v:.2}");
                        }
                    }
                }
            }
            let mut out = config_echo(&report.config);
            let _ = writeln!(out, "# operating_confidence = {}", report.operating_confidence);
            out.push_str(&render_aligned(&DETECTION_COLUMNS, &rows));
            out
        }
    }
}

/// Renders a ranking table.
pub fn emit_ranking(table: &RankingTable, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => {
            let mut text =
                serde_json::to_string_pretty(table).expect("table serialization cannot fail");
            text.push('\n');
            text
        }
        ReportFormat::Csv | ReportFormat::Table => {
            let mut header: Vec<&str> = vec!["Tracker", "AvgRank"];
            let rank_names: Vec<String> =
                table.metrics.iter().map(|m| format!("rank({m})")).collect();
            header.extend(rank_names.iter().map(String::as_str));
            header.extend(table.metrics.iter().map(String::as_str));
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|row| {
                    let mut fields = vec![row.tracker.clone(), fmt_f64(row.average_rank)];
                    fields.extend(row.ranks.iter().map(|r| fmt_f64(*r)));
                    fields.extend(row.values.iter().map(|v| fmt_f64(*v)));
                    fields
                })
                .collect();
            if format == ReportFormat::Csv {
                let mut out = header.join(",");
                out.push('\n');
                for row in &rows {
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
                out
            } else {
                render_aligned(&header, &rows)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, random_scenario, RandomScenarioParams};
    use crate::types::build_trajectories;
    use approx::assert_abs_diff_eq;

    fn scenario_benchmark(
        seeds: &[u64],
    ) -> (BTreeMap<String, SequenceData>, BTreeMap<String, BTreeMap<i64, Trajectory>>) {
        let mut gt = BTreeMap::new();
        let mut results = BTreeMap::new();
        for &seed in seeds {
            let spec =
                random_scenario(&format!("seq-{seed}"), seed, &RandomScenarioParams::default());
            let scenario = generate(&spec).unwrap();
            gt.insert(
                scenario.name.clone(),
                SequenceData {
                    meta: scenario.meta(),
                    ground_truth: build_trajectories(&scenario.ground_truth).unwrap(),
                },
            );
            results
                .insert(scenario.name.clone(), build_trajectories(&scenario.results).unwrap());
        }
        (gt, results)
    }

    #[test]
    fn single_sequence_overall_equals_the_sequence_row() {
        let (gt, results) = scenario_benchmark(&[3]);
        let report = evaluate_benchmark(&gt, &results, &MatchConfig::default()).unwrap();
        assert_eq!(report.sequences.len(), 1);
        let row = &report.sequences[0];
        assert_eq!(report.overall.clear.mota, row.clear.mota);
        assert_eq!(report.overall.gt_total, row.gt_total);
        assert_eq!(report.mota_stddev, 0.0);
    }

    #[test]
    fn overall_counts_are_column_sums() {
        let (gt, results) = scenario_benchmark(&[1, 2, 3]);
        let report = evaluate_benchmark(&gt, &results, &MatchConfig::default()).unwrap();
        let sum = |f: fn(&MetricReport) -> u64| -> u64 { report.sequences.iter().map(f).sum() };
        assert_eq!(report.overall.clear.false_positives, sum(|r| r.clear.false_positives));
        assert_eq!(report.overall.clear.false_negatives, sum(|r| r.clear.false_negatives));
        assert_eq!(report.overall.clear.id_switches, sum(|r| r.clear.id_switches));
        assert_eq!(report.overall.gt_total, sum(|r| r.gt_total));
        assert_eq!(report.overall.quality.mostly_tracked, sum(|r| r.quality.mostly_tracked));
        assert_eq!(report.overall.quality.fragmentations, sum(|r| r.quality.fragmentations));

        // Overall MOTA comes from summed counts, not averaged sequence MOTAs.
        let errors = (report.overall.clear.false_negatives
            + report.overall.clear.false_positives
            + report.overall.clear.id_switches) as f64;
        assert_abs_diff_eq!(
            report.overall.clear.mota,
            100.0 * (1.0 - errors / report.overall.gt_total as f64),
            epsilon = 1e-12
        );
    }

    #[test]
    fn mota_stddev_of_two_sequences_is_half_their_spread() {
        let rows = [80.0f64, 60.0];
        assert_abs_diff_eq!(population_stddev(&rows), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn mismatched_sequence_sets_are_rejected() {
        let (gt, mut results) = scenario_benchmark(&[1, 2]);
        results.remove("seq-1");
        results.insert("bogus".into(), BTreeMap::new());
        let err = evaluate_benchmark(&gt, &results, &MatchConfig::default()).unwrap_err();
        assert_eq!(
            err,
            BenchmarkError::SequenceSetMismatch {
                missing: vec!["seq-1".into()],
                extra: vec!["bogus".into()],
            }
        );
    }

    #[test]
    fn fractional_ranks_share_mean_positions() {
        assert_eq!(fractional_ranks(&[10.0, 30.0, 20.0], true), vec![3.0, 1.0, 2.0]);
        assert_eq!(fractional_ranks(&[10.0, 30.0, 20.0], false), vec![1.0, 3.0, 2.0]);
        assert_eq!(fractional_ranks(&[5.0, 5.0], true), vec![1.5, 1.5]);
        assert_eq!(fractional_ranks(&[5.0, 5.0, 1.0], false), vec![2.5, 2.5, 1.0]);
    }

    fn toy_report(mota: f64, fp: u64) -> BenchmarkReport {
        let clear = ClearMetrics {
            mota,
            motp: 80.0,
            recall: 90.0,
            precision: 90.0,
            faf: 0.5,
            true_positives: 90,
            false_positives: fp,
            false_negatives: 10,
            id_switches: 1,
            relative_id_switches: 1.0 / 90.0,
        };
        let quality = TrackQualityMetrics {
            mostly_tracked: 1,
            partially_tracked: 0,
            mostly_lost: 0,
            total_trajectories: 1,
            mostly_tracked_ratio: 1.0,
            partially_tracked_ratio: 0.0,
            mostly_lost_ratio: 0.0,
            fragmentations: 0,
            relative_fragmentations: 0.0,
        };
        let row = MetricReport {
            name: "OVERALL".into(),
            frames: 100,
            gt_tracks: 1,
            gt_total: 100,
            clear,
            quality,
        };
        BenchmarkReport {
            config: MatchConfig::default(),
            sequences: vec![],
            overall: row,
            mota_stddev: 0.0,
        }
    }

    #[test]
    fn single_tracker_ranks_first() {
        let reports: BTreeMap<String, BenchmarkReport> =
            [("only".to_string(), toy_report(50.0, 5))].into();
        let table = rank_trackers(&reports, &RankMetric::default_set());
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].average_rank, 1.0);
    }

    #[test]
    fn dominant_tracker_ranks_strictly_first() {
        let better = toy_report(80.0, 2);
        let mut worse = toy_report(60.0, 9);
        worse.overall.clear.motp = 70.0;
        worse.overall.clear.false_negatives = 30;
        worse.overall.clear.id_switches = 4;
        worse.overall.quality.mostly_tracked_ratio = 0.5;
        worse.overall.quality.mostly_lost_ratio = 0.2;
        worse.overall.quality.fragmentations = 3;
        let reports: BTreeMap<String, BenchmarkReport> =
            [("a".to_string(), better), ("b".to_string(), worse)].into();
        let table = rank_trackers(&reports, &RankMetric::default_set());
        assert_eq!(table.rows[0].tracker, "a");
        assert_eq!(table.rows[0].average_rank, 1.0);
        assert_eq!(table.rows[1].average_rank, 2.0);
    }

    #[test]
    fn tied_metric_shares_rank() {
        let a = toy_report(80.0, 5);
        let b = toy_report(60.0, 5);
        let reports: BTreeMap<String, BenchmarkReport> =
            [("a".to_string(), a), ("b".to_string(), b)].into();
        let table = rank_trackers(&reports, &[RankMetric::Mota, RankMetric::FalsePositives]);
        let row_a = table.rows.iter().find(|r| r.tracker == "a").unwrap();
        let row_b = table.rows.iter().find(|r| r.tracker == "b").unwrap();
        assert_eq!(row_a.ranks, vec![1.0, 1.5]);
        assert_eq!(row_b.ranks, vec![2.0, 1.5]);
    }

    #[test]
    fn ranking_ignores_monotone_rescaling() {
        let mut a = toy_report(80.0, 5);
        let mut b = toy_report(60.0, 9);
        let reports: BTreeMap<String, BenchmarkReport> =
            [("a".to_string(), a.clone()), ("b".to_string(), b.clone())].into();
        let base = rank_trackers(&reports, &[RankMetric::Mota]);

        // Strictly monotone transformation of the MOTA column.
        a.overall.clear.mota = (a.overall.clear.mota / 10.0).exp();
        b.overall.clear.mota = (b.overall.clear.mota / 10.0).exp();
        let reports: BTreeMap<String, BenchmarkReport> =
            [("a".to_string(), a), ("b".to_string(), b)].into();
        let transformed = rank_trackers(&reports, &[RankMetric::Mota]);
        let ranks = |t: &RankingTable| -> Vec<(String, f64)> {
            t.rows.iter().map(|r| (r.tracker.clone(), r.average_rank)).collect()
        };
        assert_eq!(ranks(&base), ranks(&transformed));
    }

    #[test]
    fn permuting_sequence_order_leaves_the_report_unchanged() {
        // BTreeMap keys iterate sorted, so insertion order cannot leak in.
        let (gt, results) = scenario_benchmark(&[5, 6, 7]);
        let report_a = evaluate_benchmark(&gt, &results, &MatchConfig::default()).unwrap();

        let gt_rev: BTreeMap<String, SequenceData> =
            gt.into_iter().rev().collect();
        let results_rev: BTreeMap<String, BTreeMap<i64, Trajectory>> =
            results.into_iter().rev().collect();
        let report_b =
            evaluate_benchmark(&gt_rev, &results_rev, &MatchConfig::default()).unwrap();
        assert_eq!(report_a, report_b);
    }

    #[test]
    fn emission_is_deterministic_and_csv_reparses() {
        let (gt, results) = scenario_benchmark(&[11, 12]);
        let report = evaluate_benchmark(&gt, &results, &MatchConfig::default()).unwrap();

        for format in [ReportFormat::Table, ReportFormat::Csv, ReportFormat::Structured] {
            assert_eq!(emit_report(&report, format), emit_report(&report, format));
        }

        let csv = emit_report(&report, ReportFormat::Csv);
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(header, TRACKING_COLUMNS.to_vec());
        let all_rows: Vec<&MetricReport> =
            report.sequences.iter().chain([&report.overall]).collect();
        for (line, row) in lines.zip(all_rows) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[0], row.name);
            assert_eq!(fields[1].parse::<f64>().unwrap(), row.clear.recall);
            assert_eq!(fields[4].parse::<u64>().unwrap(), row.gt_total);
            assert_eq!(fields[8].parse::<f64>().unwrap(), row.clear.mota);
            assert_eq!(fields[9].parse::<f64>().unwrap(), row.clear.motp);
        }
    }

    #[test]
    fn empty_benchmark_emits_header_only_csv() {
        let report = BenchmarkReport {
            config: MatchConfig::default(),
            sequences: vec![],
            overall: toy_report(0.0, 0).overall,
            mota_stddev: 0.0,
        };
        let csv = emit_report(&report, ReportFormat::Csv);
        assert_eq!(csv.lines().count(), 2, "header plus the overall row");
        assert!(csv.starts_with("Seq,"));
    }
}
