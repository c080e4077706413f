//! Reading and writing of the nine-column CSV format, sequence metadata
//! files and submission archives.

mod zipfile;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Read, Seek};

use thiserror::Error;

use crate::types::{BoundingBox, ClassLabel, EntryRecord, SequenceMeta};

pub use zipfile::ZipError;

/// Which column semantics a file follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    /// Detector output: column 7 is a confidence, columns 2, 8, 9 are -1.
    Detection,
    /// Annotations: column 7 is the 0/1 consideration flag, column 8 the
    /// class id, column 9 the visibility ratio.
    GroundTruth,
    /// Tracker output: column 2 carries the track id; columns 7–9 are
    /// accepted but ignored by the tracking evaluation.
    TrackerResult,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LineError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: frame numbers start at 1")]
    NonPositiveFrame { line: usize },
    #[error("line {line}: bounding box width and height must be positive")]
    NonPositiveBoxDimension { line: usize },
}

/// Every defective line of one parse, so all problems surface in one pass.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseErrors {
    pub lines: Vec<LineError>,
}

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, err) in self.lines.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{err}")?;
        }
        Ok(())
    }
}

fn parse_number(field: &str, line: usize, name: &str) -> Result<f64, LineError> {
    let value: f64 = field.trim().parse().map_err(|_| LineError::MalformedLine {
        line,
        reason: format!("{name} '{}' is not a number", field.trim()),
    })?;
    if !value.is_finite() {
        return Err(LineError::MalformedLine { line, reason: format!("{name} must be finite") });
    }
    Ok(value)
}

fn parse_integer(field: &str, line: usize, name: &str) -> Result<i64, LineError> {
    let value = parse_number(field, line, name)?;
    if value.fract() != 0.0 || value.abs() > i64::MAX as f64 {
        return Err(LineError::MalformedLine {
            line,
            reason: format!("{name} must be an integer, got '{}'", field.trim()),
        });
    }
    Ok(value as i64)
}

fn parse_line(text: &str, line: usize, kind: FileKind) -> Result<EntryRecord, LineError> {
    let fields: Vec<&str> = text.split(',').collect();
    if fields.len() != 9 {
        return Err(LineError::MalformedLine {
            line,
            reason: format!("expected 9 comma-separated values, found {}", fields.len()),
        });
    }

    let frame = parse_integer(fields[0], line, "frame")?;
    if frame <= 0 {
        return Err(LineError::NonPositiveFrame { line });
    }
    if frame > u32::MAX as i64 {
        return Err(LineError::MalformedLine { line, reason: "frame number too large".into() });
    }
    let identity = parse_integer(fields[1], line, "identity")?;

    let left = parse_number(fields[2], line, "bb left")?;
    let top = parse_number(fields[3], line, "bb top")?;
    let width = parse_number(fields[4], line, "bb width")?;
    let height = parse_number(fields[5], line, "bb height")?;
    if width <= 0.0 || height <= 0.0 {
        return Err(LineError::NonPositiveBoxDimension { line });
    }

    let score_or_flag = parse_number(fields[6], line, "confidence/flag")?;
    if kind == FileKind::GroundTruth && score_or_flag != 0.0 && score_or_flag != 1.0 {
        return Err(LineError::MalformedLine {
            line,
            reason: format!("ground-truth flag must be 0 or 1, got {score_or_flag}"),
        });
    }

    let class_id = parse_integer(fields[7], line, "class")?;
    let class = if class_id == -1 {
        None
    } else {
        if class_id.abs() > i32::MAX as i64 {
            return Err(LineError::MalformedLine { line, reason: "class id too large".into() });
        }
        Some(ClassLabel::from_id(class_id as i32))
    };

    let visibility_raw = parse_number(fields[8], line, "visibility")?;
    let visibility = if visibility_raw == -1.0 {
        None
    } else {
        if !(0.0..=1.0).contains(&visibility_raw) {
            return Err(LineError::MalformedLine {
                line,
                reason: format!("visibility must lie in [0, 1], got {visibility_raw}"),
            });
        }
        Some(visibility_raw)
    };

    Ok(EntryRecord {
        frame: frame as u32,
        identity,
        bbox: BoundingBox::new(left, top, width, height),
        score_or_flag,
        class,
        visibility,
    })
}

/// Parses nine-column CSV records in file order, streaming line by line.
/// Blank lines are skipped; every defective line is reported.
pub fn parse_entries<R: BufRead>(mut reader: R, kind: FileKind) -> Result<Vec<EntryRecord>, ParseErrors> {
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    let mut buf = String::new();
    let mut line = 0usize;
    loop {
        buf.clear();
        match reader.read_line(&mut buf) {
            Ok(0) => break,
            Ok(_) => {}
            Err(e) => {
                errors.push(LineError::MalformedLine {
                    line: line + 1,
                    reason: format!("read failure: {e}"),
                });
                break;
            }
        }
        line += 1;
        let text = buf.trim();
        if text.is_empty() {
            continue;
        }
        match parse_line(text, line, kind) {
            Ok(entry) => entries.push(entry),
            Err(err) => errors.push(err),
        }
    }
    if errors.is_empty() {
        Ok(entries)
    } else {
        Err(ParseErrors { lines: errors })
    }
}

pub fn parse_entries_str(text: &str, kind: FileKind) -> Result<Vec<EntryRecord>, ParseErrors> {
    parse_entries(text.as_bytes(), kind)
}

fn push_f64(out: &mut String, value: f64) {
    use std::fmt::Write;
    // `{}` prints the shortest representation that parses back exactly.
    write!(out, "{value}").expect("writing to String cannot fail");
}

/// Serializes records to the nine-column format. Absent class/visibility
/// columns are written as -1; numbers round-trip exactly through
/// [`parse_entries`].
pub fn serialize_entries(entries: &[EntryRecord], _kind: FileKind) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for e in entries {
        write!(out, "{},{},", e.frame, e.identity).expect("writing to String cannot fail");
        push_f64(&mut out, e.bbox.left);
        out.push(',');
        push_f64(&mut out, e.bbox.top);
        out.push(',');
        push_f64(&mut out, e.bbox.width);
        out.push(',');
        push_f64(&mut out, e.bbox.height);
        out.push(',');
        push_f64(&mut out, e.score_or_flag);
        write!(out, ",{},", e.class.map_or(-1, |c| c.id())).expect("writing to String cannot fail");
        push_f64(&mut out, e.visibility.unwrap_or(-1.0));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeqInfoError {
    #[error("sequence metadata is missing the '{0}' key")]
    MissingKey(&'static str),
    #[error("sequence metadata key '{key}': {reason}")]
    BadValue { key: &'static str, reason: String },
}

/// Parses the per-sequence metadata file: `key = value` lines with keys
/// `name`, `frame_count`, `fps` and `resolution` (as `WIDTHxHEIGHT`).
/// Unknown keys and `#` comments are ignored.
pub fn parse_seqinfo(text: &str) -> Result<SequenceMeta, SeqInfoError> {
    let mut name = None;
    let mut frame_count = None;
    let mut fps = None;
    let mut resolution = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else { continue };
        let value = value.trim();
        match key.trim() {
            "name" => name = Some(value.to_string()),
            "frame_count" => {
                let n: u32 = value.parse().map_err(|_| SeqInfoError::BadValue {
                    key: "frame_count",
                    reason: format!("'{value}' is not a positive integer"),
                })?;
                if n == 0 {
                    return Err(SeqInfoError::BadValue {
                        key: "frame_count",
                        reason: "must be at least 1".into(),
                    });
                }
                frame_count = Some(n);
            }
            "fps" => {
                let f: f64 = value.parse().map_err(|_| SeqInfoError::BadValue {
                    key: "fps",
                    reason: format!("'{value}' is not a number"),
                })?;
                if !(f.is_finite() && f > 0.0) {
                    return Err(SeqInfoError::BadValue {
                        key: "fps",
                        reason: "must be positive".into(),
                    });
                }
                fps = Some(f);
            }
            "resolution" => {
                let parts: Option<(u32, u32)> = value.split_once('x').and_then(|(w, h)| {
                    Some((w.trim().parse().ok()?, h.trim().parse().ok()?))
                });
                resolution = Some(parts.ok_or_else(|| SeqInfoError::BadValue {
                    key: "resolution",
                    reason: format!("'{value}' is not WIDTHxHEIGHT"),
                })?);
            }
            _ => {}
        }
    }
    Ok(SequenceMeta {
        name: name.ok_or(SeqInfoError::MissingKey("name"))?,
        frame_count: frame_count.ok_or(SeqInfoError::MissingKey("frame_count"))?,
        fps: fps.ok_or(SeqInfoError::MissingKey("fps"))?,
        resolution: resolution.ok_or(SeqInfoError::MissingKey("resolution"))?,
    })
}

pub fn write_seqinfo(meta: &SequenceMeta) -> String {
    format!(
        "name = {}\nframe_count = {}\nfps = {}\nresolution = {}x{}\n",
        meta.name, meta.frame_count, meta.fps, meta.resolution.0, meta.resolution.1
    )
}

/// Parsed content of a submission archive: one record list per sequence.
#[derive(Debug, Clone, Default)]
pub struct SubmissionManifest {
    pub archive_name: String,
    pub sequences: BTreeMap<String, Vec<EntryRecord>>,
    /// Non-fatal findings, e.g. unexpected extra files.
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum SubmissionError {
    #[error("archive unreadable: {0}")]
    BadArchive(#[from] ZipError),
    #[error("no result file for sequence '{0}' (expected '{0}.txt')")]
    MissingSequenceFile(String),
    #[error("'{name}' does not parse:\n{cause}")]
    UnparseableFile { name: String, cause: String },
    #[error("'{name}' references frame {frame} but the sequence ends at frame {frame_count}")]
    FrameOutOfRange { name: String, frame: u32, frame_count: u32 },
    #[error("sequence '{0}' appears more than once in the archive")]
    DuplicateSequenceFile(String),
}

/// All problems found while validating one archive.
#[derive(Debug, Error)]
pub struct SubmissionErrors {
    pub problems: Vec<SubmissionError>,
}

impl fmt::Display for SubmissionErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, err) in self.problems.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{err}")?;
        }
        Ok(())
    }
}

/// Checks a submission ZIP against the expected sequences: every sequence
/// needs a parseable `<Sequence-Name>.txt` whose frames stay within the
/// sequence length. Files may sit at the archive root or under one shared
/// top-level folder. Extra files are warnings, not errors; all errors are
/// collected before returning.
pub fn validate_submission<R: Read + Seek>(
    mut archive: R,
    archive_name: &str,
    expected: &[SequenceMeta],
) -> Result<SubmissionManifest, SubmissionErrors> {
    let entries = match zipfile::read_directory(&mut archive) {
        Ok(entries) => entries,
        Err(e) => return Err(SubmissionErrors { problems: vec![e.into()] }),
    };

    let files: Vec<&zipfile::ZipEntry> = entries
        .iter()
        .filter(|e| !e.is_dir() && !e.name.starts_with("__MACOSX/"))
        .collect();

    // Accept one shared top-level folder by stripping it when every file
    // sits under the same first path segment.
    let shared_prefix: Option<String> = files
        .first()
        .and_then(|f| f.name.split_once('/'))
        .map(|(top, _)| format!("{top}/"))
        .filter(|prefix| files.iter().all(|f| f.name.starts_with(prefix.as_str())));
    let logical_name = |name: &str| -> String {
        match &shared_prefix {
            Some(prefix) => name[prefix.len()..].to_string(),
            None => name.to_string(),
        }
    };

    let mut manifest = SubmissionManifest {
        archive_name: archive_name.to_string(),
        ..SubmissionManifest::default()
    };
    let mut problems = Vec::new();

    let expected_by_file: BTreeMap<String, &SequenceMeta> =
        expected.iter().map(|m| (format!("{}.txt", m.name), m)).collect();

    for file in &files {
        let logical = logical_name(&file.name);
        let Some(meta) = expected_by_file.get(&logical) else {
            manifest.warnings.push(format!("unexpected extra file '{}'", file.name));
            continue;
        };
        if manifest.sequences.contains_key(&meta.name) {
            problems.push(SubmissionError::DuplicateSequenceFile(meta.name.clone()));
            continue;
        }
        let bytes = match zipfile::read_entry(&mut archive, file) {
            Ok(bytes) => bytes,
            Err(e) => {
                problems.push(SubmissionError::UnparseableFile {
                    name: file.name.clone(),
                    cause: e.to_string(),
                });
                continue;
            }
        };
        match parse_entries(bytes.as_slice(), FileKind::TrackerResult) {
            Ok(records) => {
                let out_of_range =
                    records.iter().map(|r| r.frame).filter(|f| *f > meta.frame_count).max();
                if let Some(frame) = out_of_range {
                    problems.push(SubmissionError::FrameOutOfRange {
                        name: file.name.clone(),
                        frame,
                        frame_count: meta.frame_count,
                    });
                } else {
                    manifest.sequences.insert(meta.name.clone(), records);
                }
            }
            Err(e) => problems.push(SubmissionError::UnparseableFile {
                name: file.name.clone(),
                cause: e.to_string(),
            }),
        }
    }

    for meta in expected {
        if !manifest.sequences.contains_key(&meta.name)
            && !problems.iter().any(|p| match p {
                SubmissionError::UnparseableFile { name, .. }
                | SubmissionError::FrameOutOfRange { name, .. } => {
                    logical_name(name) == format!("{}.txt", meta.name)
                }
                SubmissionError::DuplicateSequenceFile(seq) => *seq == meta.name,
                _ => false,
            })
        {
            problems.push(SubmissionError::MissingSequenceFile(meta.name.clone()));
        }
    }

    if problems.is_empty() {
        Ok(manifest)
    } else {
        Err(SubmissionErrors { problems })
    }
}

/// Packs `(file name, content)` pairs into a stored ZIP, the inverse of
/// [`validate_submission`]'s reading side. Deterministic bytes.
pub fn write_submission_archive(files: &[(&str, &[u8])]) -> Vec<u8> {
    zipfile::write_archive(files)
}
