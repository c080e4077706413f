//! Evaluation toolkit for multi-object tracking and pedestrian detection on
//! MOTChallenge-style data.
//!
//! The pipeline: parse nine-column CSV files ([`io`]), group records into
//! trajectories ([`types`]), suppress hypotheses covering neutral-class
//! annotations and match tracker output to targets frame by frame with
//! temporal carry-over ([`assignment`]), then score the resulting event
//! timeline ([`metrics`]) and aggregate across sequences and trackers
//! ([`benchmark`]). [`synth`] generates scenarios with exactly known
//! outcomes for testing and calibration.

pub mod assignment;
pub mod benchmark;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod synth;
pub mod types;

pub use assignment::{MatchConfig, MatchTimeline, OverlapKind};
pub use benchmark::{BenchmarkReport, MetricReport, RankingTable, ReportFormat, SequenceData};
pub use metrics::{ClearMetrics, DetectionMetrics, TrackQualityMetrics};
pub use types::{BoundingBox, ClassLabel, ClassRole, EntryRecord, SequenceMeta, Trajectory};
