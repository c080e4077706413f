//! Domain value types shared across the toolkit: boxes, records, class
//! labels, trajectories and sequence metadata.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Axis-aligned pixel rectangle given by its top-left corner plus extent.
///
/// Coordinates are 1-based (the top-left image pixel is `(1, 1)`) and may
/// extend beyond the image bounds, since annotations follow objects that are
/// partially outside the frame. Width and height must be positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl BoundingBox {
    pub fn new(left: f64, top: f64, width: f64, height: f64) -> Self {
        debug_assert!(width > 0.0 && height > 0.0, "degenerate bounding box");
        Self { left, top, width, height }
    }

    pub fn right(&self) -> f64 {
        self.left + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.top + self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// Annotation class of a ground-truth box. The twelve named classes carry
/// numeric ids 1–12 in the files; any other id is preserved as [`ClassLabel::Unknown`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    Pedestrian,
    PersonOnVehicle,
    Car,
    Bicycle,
    Motorbike,
    NonMotorizedVehicle,
    StaticPerson,
    Distractor,
    Occluder,
    OccluderOnGround,
    OccluderFull,
    Reflection,
    /// Class id outside 1–12 (e.g. crowd regions). Evaluated as neutral.
    Unknown(i32),
}

/// How a class participates in evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassRole {
    /// Tracked and scored: misses are penalized.
    Target,
    /// Neither penalized nor rewarded; hypotheses covering these are dropped.
    Neutral,
    /// Present in the annotations but plays no role in scoring.
    Other,
}

impl ClassLabel {
    pub fn from_id(id: i32) -> Self {
        match id {
            1 => ClassLabel::Pedestrian,
            2 => ClassLabel::PersonOnVehicle,
            3 => ClassLabel::Car,
            4 => ClassLabel::Bicycle,
            5 => ClassLabel::Motorbike,
            6 => ClassLabel::NonMotorizedVehicle,
            7 => ClassLabel::StaticPerson,
            8 => ClassLabel::Distractor,
            9 => ClassLabel::Occluder,
            10 => ClassLabel::OccluderOnGround,
            11 => ClassLabel::OccluderFull,
            12 => ClassLabel::Reflection,
            other => ClassLabel::Unknown(other),
        }
    }

    pub fn id(&self) -> i32 {
        match self {
            ClassLabel::Pedestrian => 1,
            ClassLabel::PersonOnVehicle => 2,
            ClassLabel::Car => 3,
            ClassLabel::Bicycle => 4,
            ClassLabel::Motorbike => 5,
            ClassLabel::NonMotorizedVehicle => 6,
            ClassLabel::StaticPerson => 7,
            ClassLabel::Distractor => 8,
            ClassLabel::Occluder => 9,
            ClassLabel::OccluderOnGround => 10,
            ClassLabel::OccluderFull => 11,
            ClassLabel::Reflection => 12,
            ClassLabel::Unknown(id) => *id,
        }
    }

    /// Evaluation role of the class. Pedestrians are the target class;
    /// person-like annotations (static persons, reflections, people on
    /// vehicles, distractors) are neutral, as are unknown ids; everything
    /// else (vehicles, occluders) is ignored by the scoring.
    pub fn role(&self) -> ClassRole {
        match self {
            ClassLabel::Pedestrian => ClassRole::Target,
            ClassLabel::PersonOnVehicle
            | ClassLabel::StaticPerson
            | ClassLabel::Distractor
            | ClassLabel::Reflection
            | ClassLabel::Unknown(_) => ClassRole::Neutral,
            _ => ClassRole::Other,
        }
    }
}

/// One parsed nine-column record line.
///
/// `score_or_flag` holds the detector confidence for detection files and the
/// 0/1 consideration flag for ground truth. `class` and `visibility` are
/// `None` where the file writes `-1` for them.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryRecord {
    pub frame: u32,
    pub identity: i64,
    pub bbox: BoundingBox,
    pub score_or_flag: f64,
    pub class: Option<ClassLabel>,
    pub visibility: Option<f64>,
}

/// Per-frame state of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub bbox: BoundingBox,
    /// Ground truth: consideration flag (false means ignored). Always true
    /// for tracker output.
    pub considered: bool,
    pub visibility: Option<f64>,
}

/// One identity's frame-indexed boxes. Frames iterate strictly increasing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub identity: i64,
    /// Annotation class; `None` for tracker output.
    pub class: Option<ClassLabel>,
    points: BTreeMap<u32, TrajectoryPoint>,
}

impl Trajectory {
    pub fn new(identity: i64, class: Option<ClassLabel>) -> Self {
        Self { identity, class, points: BTreeMap::new() }
    }

    /// Inserts a point; rejects a second box on the same frame.
    pub fn insert(&mut self, frame: u32, point: TrajectoryPoint) -> Result<(), TrajectoryError> {
        match self.points.entry(frame) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(point);
                Ok(())
            }
            std::collections::btree_map::Entry::Occupied(_) => {
                Err(TrajectoryError::DuplicateFramePerIdentity { identity: self.identity, frame })
            }
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, frame: u32) -> Option<&TrajectoryPoint> {
        self.points.get(&frame)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &TrajectoryPoint)> {
        self.points.iter().map(|(f, p)| (*f, p))
    }

    pub fn frames(&self) -> impl Iterator<Item = u32> + '_ {
        self.points.keys().copied()
    }

    pub fn first_frame(&self) -> Option<u32> {
        self.points.keys().next().copied()
    }

    pub fn last_frame(&self) -> Option<u32> {
        self.points.keys().next_back().copied()
    }
}

/// Static description of a sequence: its name, length and capture parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub name: String,
    pub frame_count: u32,
    pub fps: f64,
    /// (width, height) in pixels.
    pub resolution: (u32, u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrajectoryError {
    #[error("identity {identity} has two boxes in frame {frame}")]
    DuplicateFramePerIdentity { identity: i64, frame: u32 },
    #[error("entry in frame {frame} has negative identity; assign ids before grouping")]
    NegativeIdentity { frame: u32 },
}

/// Groups records by identity into trajectories.
///
/// Every record must carry a real identity (detections with id `-1` cannot be
/// grouped). The trajectory class is taken from the first record of each
/// identity; the ground-truth flag maps to [`TrajectoryPoint::considered`].
pub fn build_trajectories(
    entries: &[EntryRecord],
) -> Result<BTreeMap<i64, Trajectory>, TrajectoryError> {
    let mut out: BTreeMap<i64, Trajectory> = BTreeMap::new();
    for entry in entries {
        if entry.identity < 0 {
            return Err(TrajectoryError::NegativeIdentity { frame: entry.frame });
        }
        let traj = out
            .entry(entry.identity)
            .or_insert_with(|| Trajectory::new(entry.identity, entry.class));
        if traj.class.is_none() {
            traj.class = entry.class;
        }
        traj.insert(
            entry.frame,
            TrajectoryPoint {
                bbox: entry.bbox,
                considered: entry.score_or_flag != 0.0,
                visibility: entry.visibility,
            },
        )?;
    }
    Ok(out)
}
