//! Tracker-to-target assignment: per-frame minimum-cost matching with
//! temporal carry-over, neutral-class suppression and event extraction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{intersection_over_first, iou};
use crate::types::{BoundingBox, ClassLabel, ClassRole, Trajectory};

/// Which overlap measure the neutral-class suppression rule uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapKind {
    /// Intersection over union (default).
    Iou,
    /// Intersection over the hypothesis box area.
    IntersectionOverFirst,
}

impl OverlapKind {
    pub fn measure(&self, hypothesis: &BoundingBox, annotation: &BoundingBox) -> f64 {
        match self {
            OverlapKind::Iou => iou(hypothesis, annotation),
            OverlapKind::IntersectionOverFirst => intersection_over_first(hypothesis, annotation),
        }
    }
}

impl std::fmt::Display for OverlapKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OverlapKind::Iou => write!(f, "iou"),
            OverlapKind::IntersectionOverFirst => write!(f, "ioa"),
        }
    }
}

/// Matching parameters. Defaults follow the benchmark protocol: matches need
/// IoU ≥ 0.5, hypotheses overlapping a neutral annotation strictly above 0.75
/// are suppressed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    /// Overlap feasibility threshold τ; a pair is matchable iff IoU ≥ τ.
    pub iou_threshold: f64,
    /// Strict lower bound for neutral-class suppression.
    pub distractor_overlap_threshold: f64,
    pub distractor_overlap_kind: OverlapKind,
    /// Optional: drop ground-truth boxes below this visibility. Off by default.
    pub min_visibility: Option<f64>,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            distractor_overlap_threshold: 0.75,
            distractor_overlap_kind: OverlapKind::Iou,
            min_visibility: None,
        }
    }
}

/// Rectangular min-cost assignment instance. Infeasible pairs are marked
/// [`AssignmentProblem::FORBIDDEN`]; internally the solver substitutes a
/// finite cost strictly exceeding any feasible total, so forbidden pairs are
/// only ever used when no feasible alternative exists and are dropped from
/// the returned matching.
#[derive(Debug, Clone)]
pub struct AssignmentProblem {
    rows: usize,
    cols: usize,
    cost: Vec<f64>,
}

impl AssignmentProblem {
    pub const FORBIDDEN: f64 = f64::INFINITY;

    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, cost: vec![Self::FORBIDDEN; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut problem = Self::new(r, c);
        for (i, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), c, "ragged cost matrix");
            for (j, cost) in row.into_iter().enumerate() {
                if cost.is_finite() {
                    problem.set(i, j, cost);
                }
            }
        }
        problem
    }

    pub fn set(&mut self, row: usize, col: usize, cost: f64) {
        assert!(cost.is_finite() && cost >= 0.0, "feasible costs must be finite and non-negative");
        self.cost[row * self.cols + col] = cost;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cost[row * self.cols + col]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn transposed(&self) -> Self {
        let mut t = Self::new(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.cost[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }
}

/// Minimum-cost maximum-cardinality matching over the feasible pairs of
/// `problem`, via the Jonker-Volgenant shortest augmenting path form of the
/// Hungarian algorithm. Returns `(row, column)` pairs sorted by row.
///
/// Deterministic: rows are processed in ascending order and ties resolved in
/// ascending column order, so equal-cost optima always resolve the same way.
pub fn solve_min_cost_assignment(problem: &AssignmentProblem) -> Vec<(usize, usize)> {
    if problem.rows == 0 || problem.cols == 0 {
        return Vec::new();
    }
    if problem.rows > problem.cols {
        let mut pairs: Vec<(usize, usize)> = solve_min_cost_assignment(&problem.transposed())
            .into_iter()
            .map(|(r, c)| (c, r))
            .collect();
        pairs.sort_unstable();
        return pairs;
    }

    let n = problem.rows;
    let m = problem.cols;
    // Finite stand-in for forbidden pairs: one more than the sum of all
    // feasible costs, so any matching avoiding forbidden pairs is cheaper.
    let big = problem.cost.iter().copied().filter(|c| c.is_finite()).sum::<f64>() + 1.0;
    let at = |i: usize, j: usize| {
        let c = problem.cost[i * m + j];
        if c.is_finite() {
            c
        } else {
            big
        }
    };

    // Row/column potentials with a virtual column 0; col_to_row[j] is the row
    // currently assigned to column j (1-based, 0 = unassigned).
    let mut row_pot = vec![0.0f64; n + 1];
    let mut col_pot = vec![0.0f64; m + 1];
    let mut col_to_row = vec![0usize; m + 1];
    let mut path = vec![0usize; m + 1];

    for row in 1..=n {
        col_to_row[0] = row;
        let mut j0 = 0usize;
        let mut min_to = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = col_to_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = at(i0 - 1, j - 1) - row_pot[i0] - col_pot[j];
                if cur < min_to[j] {
                    min_to[j] = cur;
                    path[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    row_pot[col_to_row[j]] += delta;
                    col_pot[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if col_to_row[j0] == 0 {
                break;
            }
        }
        // Unwind the augmenting path.
        while j0 != 0 {
            let j1 = path[j0];
            col_to_row[j0] = col_to_row[j1];
            j0 = j1;
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| col_to_row[j] != 0)
        .map(|j| (col_to_row[j] - 1, j - 1))
        .filter(|&(r, c)| problem.get(r, c).is_finite())
        .collect();
    pairs.sort_unstable();
    pairs
}

/// A hypothesis box dropped by preprocessing, with the annotation that
/// caused the drop.
#[derive(Debug, Clone, PartialEq)]
pub struct Removal {
    pub frame: u32,
    pub hypothesis: i64,
    pub cause_identity: i64,
    pub cause_class: ClassLabel,
    pub cause_bbox: BoundingBox,
    pub overlap: f64,
    /// True when removal came from the per-frame assignment step rather than
    /// the raw overlap threshold.
    pub via_match: bool,
}

pub(crate) type FrameBoxes = Vec<(i64, BoundingBox)>;
pub(crate) type FrameIndex = BTreeMap<u32, FrameBoxes>;
pub(crate) type GtFrameBoxes = Vec<(i64, BoundingBox, ClassRole, ClassLabel)>;
pub(crate) type GtFrameIndex = BTreeMap<u32, GtFrameBoxes>;

/// Frame-indexed view of considered boxes; vectors come out sorted by
/// identity because trajectories iterate in id order.
pub(crate) fn index_frames(trajectories: &BTreeMap<i64, Trajectory>) -> FrameIndex {
    let mut index = FrameIndex::new();
    for traj in trajectories.values() {
        for (frame, point) in traj.iter() {
            if point.considered {
                index.entry(frame).or_default().push((traj.identity, point.bbox));
            }
        }
    }
    index
}

/// Frame index over all considered ground-truth boxes of every class,
/// carrying the class role for the suppression rules.
pub(crate) fn index_gt_frames(
    gt: &BTreeMap<i64, Trajectory>,
    config: &MatchConfig,
) -> GtFrameIndex {
    let mut index = GtFrameIndex::new();
    for traj in gt.values() {
        let class = traj.class.unwrap_or(ClassLabel::Unknown(-1));
        let role = class.role();
        for (frame, point) in traj.iter() {
            if !point.considered {
                continue;
            }
            if let (Some(min), Some(vis)) = (config.min_visibility, point.visibility) {
                if vis < min {
                    continue;
                }
            }
            index.entry(frame).or_default().push((traj.identity, point.bbox, role, class));
        }
    }
    index
}

/// Restricts ground truth to what the tracking score is computed against:
/// target-class trajectories with only their considered (flag 1) boxes.
/// Trajectories left empty by the restriction are dropped.
pub fn evaluated_targets(
    gt: &BTreeMap<i64, Trajectory>,
    config: &MatchConfig,
) -> BTreeMap<i64, Trajectory> {
    let mut out = BTreeMap::new();
    for traj in gt.values() {
        if traj.class.map(|c| c.role()) != Some(ClassRole::Target) {
            continue;
        }
        let mut kept = Trajectory::new(traj.identity, traj.class);
        for (frame, point) in traj.iter() {
            if !point.considered {
                continue;
            }
            if let (Some(min), Some(vis)) = (config.min_visibility, point.visibility) {
                if vis < min {
                    continue;
                }
            }
            kept.insert(frame, *point).expect("source trajectory had unique frames");
        }
        if !kept.is_empty() {
            out.insert(kept.identity, kept);
        }
    }
    out
}

/// One frame of the suppression rule. Returns, per removed hypothesis index,
/// the cause annotation `(gt index, overlap, via_match)`.
pub(crate) fn frame_removals(
    gt: &[(i64, BoundingBox, ClassRole, ClassLabel)],
    hyps: &[(i64, BoundingBox)],
    config: &MatchConfig,
) -> Vec<(usize, usize, f64, bool)> {
    if hyps.is_empty() || !gt.iter().any(|(_, _, role, _)| *role == ClassRole::Neutral) {
        return Vec::new();
    }

    let mut removed: Vec<(usize, usize, f64, bool)> = Vec::new();
    let mut is_removed = vec![false; hyps.len()];

    // Step 1: match every hypothesis against the full annotation set; a match
    // landing on a neutral box removes the hypothesis.
    let mut problem = AssignmentProblem::new(gt.len(), hyps.len());
    for (gi, (_, gbox, _, _)) in gt.iter().enumerate() {
        for (hi, (_, hbox)) in hyps.iter().enumerate() {
            let overlap = iou(gbox, hbox);
            if overlap >= config.iou_threshold {
                problem.set(gi, hi, 1.0 - overlap);
            }
        }
    }
    for (gi, hi) in solve_min_cost_assignment(&problem) {
        if gt[gi].2 == ClassRole::Neutral {
            removed.push((hi, gi, iou(&gt[gi].1, &hyps[hi].1), true));
            is_removed[hi] = true;
        }
    }

    // Step 2: strict overlap rule against every neutral annotation.
    for (hi, (_, hbox)) in hyps.iter().enumerate() {
        if is_removed[hi] {
            continue;
        }
        for (gi, (_, gbox, role, _)) in gt.iter().enumerate() {
            if *role != ClassRole::Neutral {
                continue;
            }
            let overlap = config.distractor_overlap_kind.measure(hbox, gbox);
            if overlap > config.distractor_overlap_threshold {
                removed.push((hi, gi, overlap, false));
                is_removed[hi] = true;
                break;
            }
        }
    }

    removed.sort_unstable_by_key(|&(hi, ..)| hi);
    removed
}

/// Drops tracker boxes that cover neutral-class annotations, per frame:
/// boxes assigned to a neutral annotation by minimum-cost matching over the
/// full ground truth, plus boxes overlapping any neutral annotation strictly
/// above the configured threshold. Returns the filtered trajectories and a
/// log of every removal.
pub fn preprocess_results(
    gt: &BTreeMap<i64, Trajectory>,
    results: &BTreeMap<i64, Trajectory>,
    config: &MatchConfig,
) -> (BTreeMap<i64, Trajectory>, Vec<Removal>) {
    let gt_index = index_gt_frames(gt, config);
    let hyp_index = index_frames(results);

    let mut log: Vec<Removal> = Vec::new();
    let mut drop: std::collections::HashSet<(u32, i64)> = std::collections::HashSet::new();
    for (&frame, hyps) in &hyp_index {
        let Some(gt_boxes) = gt_index.get(&frame) else { continue };
        for (hi, gi, overlap, via_match) in frame_removals(gt_boxes, hyps, config) {
            let (cause_identity, cause_bbox, _, cause_class) = gt_boxes[gi];
            log.push(Removal {
                frame,
                hypothesis: hyps[hi].0,
                cause_identity,
                cause_class,
                cause_bbox,
                overlap,
                via_match,
            });
            drop.insert((frame, hyps[hi].0));
        }
    }

    let mut filtered = BTreeMap::new();
    for traj in results.values() {
        let mut kept = Trajectory::new(traj.identity, traj.class);
        for (frame, point) in traj.iter() {
            if !drop.contains(&(frame, traj.identity)) {
                kept.insert(frame, *point).expect("source trajectory had unique frames");
            }
        }
        if !kept.is_empty() {
            filtered.insert(kept.identity, kept);
        }
    }
    (filtered, log)
}

/// Event counts for one frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FrameCounts {
    pub gt: u32,
    pub matches: u32,
    pub false_negatives: u32,
    pub false_positives: u32,
    pub id_switches: u32,
}

/// Accumulated matching events of one sequence (or, after concatenation, of
/// a whole benchmark).
#[derive(Debug, Clone, Default)]
pub struct MatchTimeline {
    /// ΣGT_t: total evaluated ground-truth boxes.
    pub gt_total: u64,
    /// Σc_t: matched pairs (true positives).
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub id_switches: u64,
    /// Σd_{t,i}: overlap of every matched pair, for MOTP.
    pub overlap_sum: f64,
    /// Frames in which each ground-truth identity was matched, ascending.
    pub matched_frames: BTreeMap<i64, Vec<u32>>,
    /// Final carry-over state: last hypothesis assigned to each gt identity.
    pub last_assignment: BTreeMap<i64, i64>,
    /// Per-frame event counts. Empty on concatenated timelines, whose
    /// contract is the summed totals.
    pub per_frame: BTreeMap<u32, FrameCounts>,
}

/// Matches one sequence frame by frame.
///
/// `gt_targets` must already be restricted to evaluated target trajectories
/// (see [`evaluated_targets`]) and `results` already preprocessed. Per frame:
/// pairs matched in the previous frame persist while their overlap stays
/// feasible, even when a closer hypothesis exists; remaining boxes go through
/// minimum-cost assignment with cost 1 − IoU and pairs below τ forbidden;
/// leftovers count as misses and false positives. A match whose gt identity
/// was last assigned a different hypothesis (at any earlier frame) counts one
/// identity switch.
pub fn match_sequence(
    gt_targets: &BTreeMap<i64, Trajectory>,
    results: &BTreeMap<i64, Trajectory>,
    config: &MatchConfig,
) -> MatchTimeline {
    let gt_index = index_frames(gt_targets);
    let hyp_index = index_frames(results);

    let mut frames: Vec<u32> = gt_index.keys().chain(hyp_index.keys()).copied().collect();
    frames.sort_unstable();
    frames.dedup();

    let empty: FrameBoxes = Vec::new();
    let mut timeline = MatchTimeline::default();
    // (gt, hyp) pairs matched in the previous frame, keyed by gt identity.
    let mut prev: BTreeMap<i64, i64> = BTreeMap::new();
    let mut prev_frame: Option<u32> = None;

    for &frame in &frames {
        // Carry-over is defined against frame t-1; a silent frame in between
        // clears it (the last-known assignment below still persists).
        if prev_frame.is_some_and(|p| p + 1 != frame) {
            prev.clear();
        }
        prev_frame = Some(frame);

        let gt_boxes = gt_index.get(&frame).unwrap_or(&empty);
        let hyp_boxes = hyp_index.get(&frame).unwrap_or(&empty);

        let mut gt_used = vec![false; gt_boxes.len()];
        let mut hyp_used = vec![false; hyp_boxes.len()];
        let mut matches: Vec<(i64, i64, f64)> = Vec::new();

        for (&gi, &hj) in prev.iter() {
            let (Ok(g), Ok(h)) = (
                gt_boxes.binary_search_by_key(&gi, |(id, _)| *id),
                hyp_boxes.binary_search_by_key(&hj, |(id, _)| *id),
            ) else {
                continue;
            };
            let overlap = iou(&gt_boxes[g].1, &hyp_boxes[h].1);
            if overlap >= config.iou_threshold {
                gt_used[g] = true;
                hyp_used[h] = true;
                matches.push((gi, hj, overlap));
            }
        }

        let free_gt: Vec<usize> = (0..gt_boxes.len()).filter(|&g| !gt_used[g]).collect();
        let free_hyp: Vec<usize> = (0..hyp_boxes.len()).filter(|&h| !hyp_used[h]).collect();
        if !free_gt.is_empty() && !free_hyp.is_empty() {
            let mut problem = AssignmentProblem::new(free_gt.len(), free_hyp.len());
            for (r, &g) in free_gt.iter().enumerate() {
                for (c, &h) in free_hyp.iter().enumerate() {
                    let overlap = iou(&gt_boxes[g].1, &hyp_boxes[h].1);
                    if overlap >= config.iou_threshold {
                        problem.set(r, c, 1.0 - overlap);
                    }
                }
            }
            for (r, c) in solve_min_cost_assignment(&problem) {
                let (g, h) = (free_gt[r], free_hyp[c]);
                gt_used[g] = true;
                hyp_used[h] = true;
                matches.push((
                    gt_boxes[g].0,
                    hyp_boxes[h].0,
                    iou(&gt_boxes[g].1, &hyp_boxes[h].1),
                ));
            }
        }

        let mut counts = FrameCounts {
            gt: gt_boxes.len() as u32,
            matches: matches.len() as u32,
            false_negatives: gt_used.iter().filter(|used| !**used).count() as u32,
            false_positives: hyp_used.iter().filter(|used| !**used).count() as u32,
            id_switches: 0,
        };

        prev.clear();
        for &(gi, hj, overlap) in &matches {
            if timeline.last_assignment.get(&gi).is_some_and(|&k| k != hj) {
                counts.id_switches += 1;
            }
            timeline.last_assignment.insert(gi, hj);
            timeline.matched_frames.entry(gi).or_default().push(frame);
            timeline.overlap_sum += overlap;
            prev.insert(gi, hj);
        }

        timeline.gt_total += counts.gt as u64;
        timeline.true_positives += counts.matches as u64;
        timeline.false_negatives += counts.false_negatives as u64;
        timeline.false_positives += counts.false_positives as u64;
        timeline.id_switches += counts.id_switches as u64;
        timeline.per_frame.insert(frame, counts);
    }

    timeline
}

/// Sums event counts and overlap sums across sequence timelines, as if the
/// sequences were laid end to end. Carry-over state never crosses inputs;
/// per-identity data is kept under fresh ids so identical identities in
/// different sequences stay distinct.
pub fn concatenate_timelines(timelines: &[MatchTimeline]) -> MatchTimeline {
    let mut out = MatchTimeline::default();
    let mut next_id: i64 = 0;
    for t in timelines {
        out.gt_total += t.gt_total;
        out.true_positives += t.true_positives;
        out.false_positives += t.false_positives;
        out.false_negatives += t.false_negatives;
        out.id_switches += t.id_switches;
        out.overlap_sum += t.overlap_sum;
        for (id, frames) in &t.matched_frames {
            out.matched_frames.insert(next_id, frames.clone());
            if let Some(&hyp) = t.last_assignment.get(id) {
                out.last_assignment.insert(next_id, hyp);
            }
            next_id += 1;
        }
    }
    out
}
