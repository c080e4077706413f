//! Scalar metrics over matching timelines: CLEAR scores, track quality
//! measures and detection scoring.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::assignment::{
    frame_removals, index_frames, index_gt_frames, solve_min_cost_assignment, AssignmentProblem,
    MatchConfig, MatchTimeline,
};
use crate::assignment::evaluated_targets;
use crate::geometry::iou;
use crate::types::{BoundingBox, EntryRecord, Trajectory};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("ground truth contains no evaluated boxes; scores are undefined")]
    ZeroGroundTruth,
}

/// The CLEAR metric family plus detection-style rates for one timeline.
/// Percentages are on a 0–100 scale; MOTA may be negative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClearMetrics {
    pub mota: f64,
    pub motp: f64,
    pub recall: f64,
    pub precision: f64,
    /// False alarms per frame.
    pub faf: f64,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub id_switches: u64,
    /// IDSW / Recall; `inf` when switches occurred without recall.
    pub relative_id_switches: f64,
}

/// MT/PT/ML classification and fragmentation counts over the evaluated
/// ground-truth trajectories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackQualityMetrics {
    pub mostly_tracked: u64,
    pub partially_tracked: u64,
    pub mostly_lost: u64,
    pub total_trajectories: u64,
    pub mostly_tracked_ratio: f64,
    pub partially_tracked_ratio: f64,
    pub mostly_lost_ratio: f64,
    pub fragmentations: u64,
    /// FM / Recall; `inf` when fragmentations occurred without recall.
    pub relative_fragmentations: f64,
}

/// Detection scores at one operating confidence, plus the threshold-sweep AP.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionMetrics {
    /// Average precision in `[0, 1]` over the full confidence sweep.
    pub ap: f64,
    pub recall: f64,
    pub precision: f64,
    /// False alarms per frame at the operating confidence.
    pub far: f64,
    pub moda: f64,
    pub modp: f64,
    pub gt_total: u64,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
}

fn percent(numerator: f64, denominator: f64) -> f64 {
    100.0 * numerator / denominator
}

fn precision_percent(tp: u64, fp: u64) -> f64 {
    if tp + fp == 0 {
        100.0
    } else {
        percent(tp as f64, (tp + fp) as f64)
    }
}

/// Event count divided by recall (in percent). Zero recall reports 0 for a
/// zero count and infinity otherwise.
fn per_recall(count: u64, recall: f64) -> f64 {
    if recall > 0.0 {
        count as f64 / recall
    } else if count == 0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Multiple object tracking accuracy and friends from summed event counts.
///
/// MOTA = 100·(1 − (FN + FP + IDSW)/ΣGT); MOTP is the mean overlap of all
/// matched pairs (0 when nothing matched).
pub fn compute_clear(
    timeline: &MatchTimeline,
    gt_total: u64,
    frame_count: u32,
) -> Result<ClearMetrics, MetricsError> {
    if gt_total == 0 {
        return Err(MetricsError::ZeroGroundTruth);
    }
    let errors = (timeline.false_negatives + timeline.false_positives + timeline.id_switches) as f64;
    let recall = percent(timeline.true_positives as f64, gt_total as f64);
    Ok(ClearMetrics {
        mota: 100.0 * (1.0 - errors / gt_total as f64),
        motp: if timeline.true_positives == 0 {
            0.0
        } else {
            percent(timeline.overlap_sum, timeline.true_positives as f64)
        },
        recall,
        precision: precision_percent(timeline.true_positives, timeline.false_positives),
        faf: timeline.false_positives as f64 / frame_count.max(1) as f64,
        true_positives: timeline.true_positives,
        false_positives: timeline.false_positives,
        false_negatives: timeline.false_negatives,
        id_switches: timeline.id_switches,
        relative_id_switches: per_recall(timeline.id_switches, recall),
    })
}

/// Raw MOTP sums `(Σ overlap, Σ matches)`, so multi-sequence aggregation can
/// reweight as sum-of-sums instead of mean-of-means.
pub fn compute_motp_components(timeline: &MatchTimeline) -> (f64, u64) {
    (timeline.overlap_sum, timeline.true_positives)
}

/// Coverage of one trajectory and its fragmentation count: gaps between
/// consecutive matched frames, i.e. tracked→untracked transitions that are
/// later resumed. Untracked tails do not fragment.
fn coverage_and_fragmentations(matched: &[u32], length: usize) -> (f64, u64) {
    let fragmentations = matched.windows(2).filter(|w| w[1] - w[0] > 1).count() as u64;
    let coverage = if length == 0 { 0.0 } else { matched.len() as f64 / length as f64 };
    (coverage, fragmentations)
}

/// Classifies every evaluated trajectory as mostly tracked (coverage ≥ 0.8),
/// mostly lost (coverage < 0.2) or partially tracked, and counts
/// fragmentations. Which hypothesis covers a frame is irrelevant here.
pub fn compute_track_quality(
    gt_targets: &BTreeMap<i64, Trajectory>,
    timeline: &MatchTimeline,
) -> TrackQualityMetrics {
    let mut mostly_tracked = 0u64;
    let mut partially_tracked = 0u64;
    let mut mostly_lost = 0u64;
    let mut fragmentations = 0u64;
    let empty: Vec<u32> = Vec::new();

    for traj in gt_targets.values() {
        let length = traj.iter().filter(|(_, p)| p.considered).count();
        if length == 0 {
            continue;
        }
        let matched = timeline.matched_frames.get(&traj.identity).unwrap_or(&empty);
        let (coverage, frags) = coverage_and_fragmentations(matched, length);
        fragmentations += frags;
        if coverage >= 0.8 {
            mostly_tracked += 1;
        } else if coverage < 0.2 {
            mostly_lost += 1;
        } else {
            partially_tracked += 1;
        }
    }

    let total = mostly_tracked + partially_tracked + mostly_lost;
    let ratio = |count: u64| if total == 0 { 0.0 } else { count as f64 / total as f64 };
    let recall = if timeline.gt_total == 0 {
        0.0
    } else {
        percent(timeline.true_positives as f64, timeline.gt_total as f64)
    };
    TrackQualityMetrics {
        mostly_tracked,
        partially_tracked,
        mostly_lost,
        total_trajectories: total,
        mostly_tracked_ratio: ratio(mostly_tracked),
        partially_tracked_ratio: ratio(partially_tracked),
        mostly_lost_ratio: ratio(mostly_lost),
        fragmentations,
        relative_fragmentations: per_recall(fragmentations, recall),
    }
}

/// Per-frame detection evaluation at every local confidence cut, reusable
/// across operating points and the AP sweep.
#[derive(Debug, Clone)]
pub(crate) struct DetectionFrameEval {
    /// Distinct confidences present in the frame, descending.
    scores: Vec<f64>,
    /// counts[k]: (tp, fp, overlap_sum) using the k most confident score
    /// groups; counts[0] is the empty set.
    counts: Vec<(u64, u64, f64)>,
}

impl DetectionFrameEval {
    /// Index into `counts` for an operating confidence: detections with
    /// confidence ≥ `threshold` participate.
    fn cut(&self, threshold: f64) -> usize {
        self.scores.iter().take_while(|s| **s >= threshold).count()
    }
}

pub(crate) fn detection_frame_evals(
    gt: &BTreeMap<i64, Trajectory>,
    detections: &[EntryRecord],
    config: &MatchConfig,
) -> (Vec<DetectionFrameEval>, u64, u32) {
    let gt_all = index_gt_frames(gt, config);
    let target_index = index_frames(&evaluated_targets(gt, config));
    let gt_total: u64 = target_index.values().map(|v| v.len() as u64).sum();

    let mut per_frame: BTreeMap<u32, Vec<(f64, BoundingBox)>> = BTreeMap::new();
    for det in detections {
        per_frame.entry(det.frame).or_default().push((det.score_or_flag, det.bbox));
    }
    let mut frames: Vec<u32> = per_frame.keys().chain(target_index.keys()).copied().collect();
    frames.sort_unstable();
    frames.dedup();
    let max_frame = frames.last().copied().unwrap_or(0);

    let empty_gt = Vec::new();
    let empty_targets = Vec::new();
    let mut evals = Vec::with_capacity(frames.len());
    for frame in frames {
        let mut dets = per_frame.remove(&frame).unwrap_or_default();
        // Descending confidence; ties keep file order.
        dets.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite confidences"));
        let gt_boxes = gt_all.get(&frame).unwrap_or(&empty_gt);
        let targets = target_index.get(&frame).unwrap_or(&empty_targets);

        let mut scores: Vec<f64> = Vec::new();
        let mut counts = vec![(0u64, 0u64, 0.0f64)];
        let mut upto = 0usize;
        while upto < dets.len() {
            let score = dets[upto].0;
            while upto < dets.len() && dets[upto].0 == score {
                upto += 1;
            }
            scores.push(score);
            counts.push(evaluate_detection_frame(gt_boxes, targets, &dets[..upto], config));
        }
        evals.push(DetectionFrameEval { scores, counts });
    }
    (evals, gt_total, max_frame)
}

/// Scores one frame's detection subset: neutral-class suppression first,
/// then an independent minimum-cost match against the target boxes.
fn evaluate_detection_frame(
    gt_boxes: &[(i64, BoundingBox, crate::types::ClassRole, crate::types::ClassLabel)],
    targets: &[(i64, BoundingBox)],
    dets: &[(f64, BoundingBox)],
    config: &MatchConfig,
) -> (u64, u64, f64) {
    let as_hyps: Vec<(i64, BoundingBox)> =
        dets.iter().enumerate().map(|(i, (_, b))| (i as i64, *b)).collect();
    let mut keep = vec![true; dets.len()];
    for (hi, ..) in frame_removals(gt_boxes, &as_hyps, config) {
        keep[hi] = false;
    }
    let kept: Vec<BoundingBox> =
        dets.iter().zip(&keep).filter(|(_, k)| **k).map(|((_, b), _)| *b).collect();

    let mut problem = AssignmentProblem::new(targets.len(), kept.len());
    for (r, (_, tbox)) in targets.iter().enumerate() {
        for (c, dbox) in kept.iter().enumerate() {
            let overlap = iou(tbox, dbox);
            if overlap >= config.iou_threshold {
                problem.set(r, c, 1.0 - overlap);
            }
        }
    }
    let pairs = solve_min_cost_assignment(&problem);
    let overlap_sum: f64 = pairs.iter().map(|&(r, c)| iou(&targets[r].1, &kept[c])).sum();
    let tp = pairs.len() as u64;
    (tp, kept.len() as u64 - tp, overlap_sum)
}

/// One point of the precision/recall curve at a swept confidence threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// Sweeps the confidence threshold over every distinct score of all frames
/// and yields one precision/recall point per threshold (fractions in [0,1]).
pub(crate) fn pr_sweep(frames: &[DetectionFrameEval], gt_total: u64) -> Vec<PrPoint> {
    // (score, tp delta, fp delta) events; applying an event moves one frame
    // from cut k to k+1.
    let mut events: Vec<(f64, i64, i64)> = Vec::new();
    for frame in frames {
        for (k, &score) in frame.scores.iter().enumerate() {
            let (tp0, fp0, _) = frame.counts[k];
            let (tp1, fp1, _) = frame.counts[k + 1];
            events.push((score, tp1 as i64 - tp0 as i64, fp1 as i64 - fp0 as i64));
        }
    }
    events.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite confidences"));

    let mut points = Vec::new();
    let mut tp = 0i64;
    let mut fp = 0i64;
    let mut i = 0;
    while i < events.len() {
        let score = events[i].0;
        while i < events.len() && events[i].0 == score {
            tp += events[i].1;
            fp += events[i].2;
            i += 1;
        }
        let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if gt_total == 0 { 0.0 } else { tp as f64 / gt_total as f64 };
        points.push(PrPoint { recall, precision });
    }
    points
}

/// Eleven-point interpolated average precision: the mean over recall levels
/// 0.0, 0.1, …, 1.0 of the highest precision at recall at or above the level.
pub(crate) fn average_precision(points: &[PrPoint]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for level in 0..=10 {
        let level = level as f64 / 10.0;
        let best = points
            .iter()
            .filter(|p| p.recall >= level)
            .map(|p| p.precision)
            .fold(0.0f64, f64::max);
        sum += best;
    }
    sum / 11.0
}

pub(crate) fn detection_metrics_from_evals(
    frames: &[DetectionFrameEval],
    gt_total: u64,
    frame_count: u32,
    operating_confidence: f64,
) -> Result<DetectionMetrics, MetricsError> {
    if gt_total == 0 {
        return Err(MetricsError::ZeroGroundTruth);
    }
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut overlap_sum = 0.0;
    for frame in frames {
        let (t, f, d) = frame.counts[frame.cut(operating_confidence)];
        tp += t;
        fp += f;
        overlap_sum += d;
    }
    let false_negatives = gt_total - tp;
    let ap = average_precision(&pr_sweep(frames, gt_total));
    Ok(DetectionMetrics {
        ap,
        recall: percent(tp as f64, gt_total as f64),
        precision: precision_percent(tp, fp),
        far: fp as f64 / frame_count.max(1) as f64,
        moda: 100.0 * (1.0 - (false_negatives + fp) as f64 / gt_total as f64),
        modp: if tp == 0 { 0.0 } else { percent(overlap_sum, tp as f64) },
        gt_total,
        true_positives: tp,
        false_positives: fp,
        false_negatives,
    })
}

/// Evaluates a detection file against one sequence's annotations.
///
/// Rates (recall, precision, FAR, MODA, MODP) are taken at
/// `operating_confidence`; AP sweeps all distinct confidences. Matching is
/// independent per frame with the same feasibility threshold and
/// neutral-class suppression as the tracking evaluation.
pub fn compute_detection_metrics(
    gt: &BTreeMap<i64, Trajectory>,
    detections: &[EntryRecord],
    config: &MatchConfig,
    operating_confidence: f64,
    frame_count: u32,
) -> Result<DetectionMetrics, MetricsError> {
    let (frames, gt_total, max_frame) = detection_frame_evals(gt, detections, config);
    detection_metrics_from_evals(&frames, gt_total, frame_count.max(max_frame), operating_confidence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::match_sequence;
    use crate::types::{ClassLabel, TrajectoryPoint};
    use approx::assert_abs_diff_eq;

    fn bb(left: f64, top: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(left, top, w, h)
    }

    fn traj(identity: i64, class: Option<ClassLabel>, boxes: &[(u32, BoundingBox)]) -> Trajectory {
        let mut t = Trajectory::new(identity, class);
        for (frame, bbox) in boxes {
            t.insert(*frame, TrajectoryPoint { bbox: *bbox, considered: true, visibility: None })
                .unwrap();
        }
        t
    }

    fn counted_timeline(gt_total: u64, fn_: u64, fp: u64, idsw: u64) -> MatchTimeline {
        MatchTimeline {
            gt_total,
            true_positives: gt_total - fn_,
            false_negatives: fn_,
            false_positives: fp,
            id_switches: idsw,
            overlap_sum: (gt_total - fn_) as f64,
            ..MatchTimeline::default()
        }
    }

    #[test]
    fn clear_with_no_errors_scores_one_hundred() {
        let m = compute_clear(&counted_timeline(50, 0, 0, 0), 50, 10).unwrap();
        assert_eq!(m.mota, 100.0);
        assert_eq!(m.motp, 100.0);
        assert_eq!(m.recall, 100.0);
        assert_eq!(m.precision, 100.0);
        assert_eq!(m.faf, 0.0);
    }

    #[test]
    fn clear_example_arithmetic() {
        let m = compute_clear(&counted_timeline(100, 10, 5, 1), 100, 20).unwrap();
        assert_abs_diff_eq!(m.mota, 84.0, epsilon = 1e-12);
        assert_eq!(m.recall, 90.0);
        assert_eq!(m.faf, 0.25);
    }

    #[test]
    fn over_erroring_tracker_goes_negative() {
        let m = compute_clear(&counted_timeline(10, 8, 15, 0), 10, 5).unwrap();
        assert_abs_diff_eq!(m.mota, -130.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_ground_truth_is_an_error() {
        assert_eq!(
            compute_clear(&MatchTimeline::default(), 0, 1).unwrap_err(),
            MetricsError::ZeroGroundTruth
        );
    }

    #[test]
    fn one_extra_false_positive_costs_exactly_its_share() {
        let gt_total = 40;
        let base = compute_clear(&counted_timeline(gt_total, 3, 2, 1), gt_total, 10).unwrap();
        let bumped = compute_clear(&counted_timeline(gt_total, 3, 3, 1), gt_total, 10).unwrap();
        assert_abs_diff_eq!(base.mota - bumped.mota, 100.0 / gt_total as f64, epsilon = 1e-12);
    }

    #[test]
    fn relative_rates_handle_zero_recall() {
        let silent = compute_clear(&counted_timeline(10, 10, 0, 0), 10, 5).unwrap();
        assert_eq!(silent.relative_id_switches, 0.0);
        assert_eq!(silent.precision, 100.0, "no output means no false alarms");

        let noisy = MatchTimeline {
            gt_total: 10,
            false_negatives: 10,
            id_switches: 2,
            ..MatchTimeline::default()
        };
        assert!(compute_clear(&noisy, 10, 5).unwrap().relative_id_switches.is_infinite());
    }

    #[test]
    fn motp_components_are_raw_sums() {
        assert_eq!(compute_motp_components(&MatchTimeline::default()), (0.0, 0));
        let t = MatchTimeline {
            true_positives: 2,
            overlap_sum: 0.6 + 0.8,
            ..MatchTimeline::default()
        };
        let (d, c) = compute_motp_components(&t);
        assert_abs_diff_eq!(d, 1.4, epsilon = 1e-12);
        assert_eq!(c, 2);
    }

    /// Independent status-scan oracle: walk the trajectory lifespan frame by
    /// frame and count tracked→untracked→tracked patterns.
    fn scan_fragmentations(matched: &[u32], first: u32, last: u32) -> u64 {
        let mut frags = 0;
        let mut tracked_before = false;
        let mut pending_gap = false;
        for frame in first..=last {
            if matched.contains(&frame) {
                if tracked_before && pending_gap {
                    frags += 1;
                }
                tracked_before = true;
                pending_gap = false;
            } else if tracked_before {
                pending_gap = true;
            }
        }
        frags
    }

    #[test]
    fn fully_matched_trajectory_is_mostly_tracked_without_fragmentation() {
        let boxes: Vec<(u32, BoundingBox)> =
            (1..=10).map(|f| (f, bb(0.0, 0.0, 5.0, 5.0))).collect();
        let gt: BTreeMap<i64, Trajectory> =
            [(1, traj(1, Some(ClassLabel::Pedestrian), &boxes))].into();
        let timeline = MatchTimeline {
            matched_frames: [(1i64, (1..=10).collect::<Vec<u32>>())].into(),
            ..MatchTimeline::default()
        };
        let q = compute_track_quality(&gt, &timeline);
        assert_eq!(q.mostly_tracked, 1);
        assert_eq!(q.fragmentations, 0);
        assert_eq!(q.mostly_tracked_ratio, 1.0);
    }

    #[test]
    fn gap_in_coverage_fragments_once_and_stays_mostly_tracked() {
        let boxes: Vec<(u32, BoundingBox)> =
            (1..=10).map(|f| (f, bb(0.0, 0.0, 5.0, 5.0))).collect();
        let gt: BTreeMap<i64, Trajectory> =
            [(1, traj(1, Some(ClassLabel::Pedestrian), &boxes))].into();
        let matched: Vec<u32> = [1, 2].into_iter().chain(4..=10).collect();
        assert_eq!(scan_fragmentations(&matched, 1, 10), 1);
        let timeline = MatchTimeline {
            matched_frames: [(1i64, matched)].into(),
            ..MatchTimeline::default()
        };
        let q = compute_track_quality(&gt, &timeline);
        assert_eq!(q.mostly_tracked, 1, "coverage 0.9 is mostly tracked");
        assert_eq!(q.fragmentations, 1);
    }

    #[test]
    fn coverage_boundaries_are_inclusive_and_exclusive_as_specified() {
        let boxes: Vec<(u32, BoundingBox)> =
            (1..=10).map(|f| (f, bb(0.0, 0.0, 5.0, 5.0))).collect();
        let gt: BTreeMap<i64, Trajectory> = [
            (1, traj(1, Some(ClassLabel::Pedestrian), &boxes)),
            (2, traj(2, Some(ClassLabel::Pedestrian), &boxes)),
            (3, traj(3, Some(ClassLabel::Pedestrian), &boxes)),
        ]
        .into();
        let timeline = MatchTimeline {
            matched_frames: [
                (1i64, (1..=8).collect::<Vec<u32>>()), // exactly 80% -> MT
                (2, vec![1, 2]),                       // exactly 20% -> PT
                (3, vec![1]),                          // 10% -> ML
            ]
            .into(),
            ..MatchTimeline::default()
        };
        let q = compute_track_quality(&gt, &timeline);
        assert_eq!((q.mostly_tracked, q.partially_tracked, q.mostly_lost), (1, 1, 1));
        assert_eq!(q.total_trajectories, 3);
        assert_abs_diff_eq!(
            q.mostly_tracked_ratio + q.partially_tracked_ratio + q.mostly_lost_ratio,
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn untracked_tail_does_not_fragment() {
        let boxes: Vec<(u32, BoundingBox)> =
            (1..=6).map(|f| (f, bb(0.0, 0.0, 5.0, 5.0))).collect();
        let gt: BTreeMap<i64, Trajectory> =
            [(1, traj(1, Some(ClassLabel::Pedestrian), &boxes))].into();
        let matched = vec![1u32, 2, 3];
        assert_eq!(scan_fragmentations(&matched, 1, 6), 0);
        let timeline = MatchTimeline {
            matched_frames: [(1i64, matched)].into(),
            ..MatchTimeline::default()
        };
        assert_eq!(compute_track_quality(&gt, &timeline).fragmentations, 0);
    }

    #[test]
    fn quality_is_invariant_under_hypothesis_renaming() {
        // MT/PT/ML depend on coverage only; run the matcher with two namings.
        let path: Vec<(u32, BoundingBox)> =
            (1..=5).map(|f| (f, bb(0.0, 0.0, 10.0, 10.0))).collect();
        let gt: BTreeMap<i64, Trajectory> =
            [(1, traj(1, Some(ClassLabel::Pedestrian), &path))].into();
        let config = MatchConfig::default();
        for ids in [(10i64, 20i64), (900, 4)] {
            let results: BTreeMap<i64, Trajectory> = [
                (ids.0, traj(ids.0, None, &path[..3])),
                (ids.1, traj(ids.1, None, &path[3..])),
            ]
            .into();
            let timeline = match_sequence(&gt, &results, &config);
            let q = compute_track_quality(&gt, &timeline);
            assert_eq!(q.mostly_tracked, 1);
            assert_eq!(q.fragmentations, 0);
            assert_eq!(timeline.id_switches, 1);
        }
    }

    fn det(frame: u32, bbox: BoundingBox, conf: f64) -> EntryRecord {
        EntryRecord {
            frame,
            identity: -1,
            bbox,
            score_or_flag: conf,
            class: None,
            visibility: None,
        }
    }

    fn grid_gt(frames: u32, lanes: i64) -> BTreeMap<i64, Trajectory> {
        (1..=lanes)
            .map(|lane| {
                let boxes: Vec<(u32, BoundingBox)> = (1..=frames)
                    .map(|f| (f, bb(10.0 * f as f64, 100.0 * lane as f64, 8.0, 8.0)))
                    .collect();
                (lane, traj(lane, Some(ClassLabel::Pedestrian), &boxes))
            })
            .collect()
    }

    #[test]
    fn perfect_detector_scores_everything() {
        let gt = grid_gt(5, 10);
        let dets: Vec<EntryRecord> = gt
            .values()
            .flat_map(|t| t.iter().map(|(f, p)| det(f, p.bbox, 0.9)).collect::<Vec<_>>())
            .collect();
        let m =
            compute_detection_metrics(&gt, &dets, &MatchConfig::default(), 0.5, 5).unwrap();
        assert_eq!(m.recall, 100.0);
        assert_eq!(m.precision, 100.0);
        assert_eq!(m.moda, 100.0);
        assert_eq!(m.modp, 100.0);
        assert_eq!(m.ap, 1.0);
        assert_eq!(m.far, 0.0);
    }

    #[test]
    fn empty_detection_file_misses_everything() {
        let gt = grid_gt(5, 10);
        let m = compute_detection_metrics(&gt, &[], &MatchConfig::default(), 0.5, 5).unwrap();
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.false_positives, 0);
        assert_eq!(m.moda, 0.0, "all misses: MODA = 100·(1 - GT/GT) = 0");
        assert_eq!(m.ap, 0.0);
    }

    #[test]
    fn forty_hits_ten_spurious_give_the_textbook_rates() {
        // 50 gt boxes: 10 lanes x 5 frames. Detect 40 of them exactly and
        // add 10 far-away boxes.
        let gt = grid_gt(5, 10);
        let mut dets = Vec::new();
        let mut hits = 0;
        for t in gt.values() {
            for (f, p) in t.iter() {
                if hits < 40 {
                    dets.push(det(f, p.bbox, 0.8));
                    hits += 1;
                }
            }
        }
        for k in 0..10 {
            dets.push(det(1 + (k % 5), bb(5000.0 + 50.0 * k as f64, 0.0, 8.0, 8.0), 0.8));
        }
        let m =
            compute_detection_metrics(&gt, &dets, &MatchConfig::default(), 0.5, 5).unwrap();
        assert_eq!(m.true_positives, 40);
        assert_eq!(m.false_positives, 10);
        assert_eq!(m.recall, 80.0);
        assert_eq!(m.precision, 80.0);
        assert_abs_diff_eq!(m.moda, 60.0, epsilon = 1e-12);
    }

    #[test]
    fn operating_confidence_cuts_low_scores() {
        let gt = grid_gt(1, 2);
        let boxes: Vec<(u32, BoundingBox)> = gt
            .values()
            .flat_map(|t| t.iter().map(|(f, p)| (f, p.bbox)).collect::<Vec<_>>())
            .collect();
        let dets = vec![det(1, boxes[0].1, 0.9), det(1, boxes[1].1, 0.3)];
        let m = compute_detection_metrics(&gt, &dets, &MatchConfig::default(), 0.5, 1).unwrap();
        assert_eq!(m.true_positives, 1);
        assert_eq!(m.false_negatives, 1);
        // The sweep still sees both, so AP reflects full recall.
        assert_eq!(m.ap, 1.0);
    }

    #[test]
    fn static_person_detections_are_suppressed() {
        let spot = bb(0.0, 0.0, 10.0, 10.0);
        let target = bb(100.0, 0.0, 10.0, 10.0);
        let gt: BTreeMap<i64, Trajectory> = [
            (1, traj(1, Some(ClassLabel::StaticPerson), &[(1, spot)])),
            (2, traj(2, Some(ClassLabel::Pedestrian), &[(1, target)])),
        ]
        .into();
        let dets = vec![det(1, spot, 0.9), det(1, target, 0.9)];
        let m = compute_detection_metrics(&gt, &dets, &MatchConfig::default(), 0.5, 1).unwrap();
        assert_eq!(m.gt_total, 1, "static person is not a target");
        assert_eq!(m.true_positives, 1);
        assert_eq!(m.false_positives, 0, "suppressed detection is not a false alarm");
        assert_eq!(m.moda, 100.0);
    }

    #[test]
    fn ap_is_invariant_under_monotone_confidence_rescaling() {
        let gt = grid_gt(3, 4);
        let mut dets = Vec::new();
        let mut conf = 0.95;
        for t in gt.values() {
            for (f, p) in t.iter() {
                if dets.len() % 3 != 2 {
                    dets.push(det(f, p.bbox, conf));
                }
                conf -= 0.05;
            }
        }
        dets.push(det(1, bb(9000.0, 0.0, 8.0, 8.0), 0.6));
        let base =
            compute_detection_metrics(&gt, &dets, &MatchConfig::default(), 0.0, 3).unwrap();
        let rescaled: Vec<EntryRecord> = dets
            .iter()
            .map(|d| EntryRecord { score_or_flag: d.score_or_flag.exp() * 3.0 + 7.0, ..d.clone() })
            .collect();
        let transformed =
            compute_detection_metrics(&gt, &rescaled, &MatchConfig::default(), 0.0, 3).unwrap();
        assert_abs_diff_eq!(base.ap, transformed.ap, epsilon = 1e-12);
    }
}
