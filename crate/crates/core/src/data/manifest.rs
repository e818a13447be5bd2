//! Dataset manifest: one CSV row per video.
//!
//! Format: a literal header line `subject_id,video_id,path,label` followed
//! by comma-separated rows. `path` points at the video's frame directory
//! or raw sequence file, relative to the manifest's directory (absolute
//! paths also work); `label` is a class name. Class indices are assigned
//! by sorting the distinct label names, so they do not depend on row
//! order. Fields must not themselves contain commas.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MANIFEST_HEADER: &str = "subject_id,video_id,path,label";

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub video_id: String,
    /// Resolved path of the frame source (directory or raw file).
    pub path: PathBuf,
    pub label: usize,
}

#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    /// Sorted distinct class names; `ManifestEntry::label` indexes these.
    pub label_names: Vec<String>,
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn distinct_subjects(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.entries.iter().map(|e| e.subject_id.as_str()).collect();
        set.into_iter().map(String::from).collect()
    }

    /// Deterministically permutes the labels across entries (marginal class
    /// counts are preserved). Used as a chance-level control: a model
    /// trained on shuffled labels should score near 1/Z on held-out
    /// subjects.
    pub fn with_shuffled_labels(&self, seed: u64) -> DatasetManifest {
        let mut labels: Vec<usize> = self.entries.iter().map(|e| e.label).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        labels.shuffle(&mut rng);
        let entries = self
            .entries
            .iter()
            .zip(labels)
            .map(|(e, label)| ManifestEntry { label, ..e.clone() })
            .collect();
        DatasetManifest {
            entries,
            label_names: self.label_names.clone(),
            root: self.root.clone(),
        }
    }
}

/// Parses and validates a manifest file. Every referenced frame source
/// must exist; violations report the offending 1-based line number.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot read manifest {}: {e}", path.display()),
        ))
    })?;
    let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();

    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == MANIFEST_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Manifest {
                line: 1,
                message: format!("expected header `{MANIFEST_HEADER}`, got `{}`", header.trim()),
            })
        }
        None => {
            return Err(Error::Manifest { line: 1, message: "manifest file is empty".into() })
        }
    }

    struct RawRow {
        line: usize,
        subject: String,
        video: String,
        path: PathBuf,
        label_name: String,
    }
    let mut rows: Vec<RawRow> = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 4 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Manifest {
                line: line_no,
                message: format!("expected 4 non-empty fields, got `{trimmed}`"),
            });
        }
        if !seen.insert((fields[0].to_string(), fields[1].to_string())) {
            return Err(Error::Manifest {
                line: line_no,
                message: format!("duplicate (subject_id, video_id) pair ({}, {})", fields[0], fields[1]),
            });
        }
        let raw_path = Path::new(fields[2]);
        let resolved = if raw_path.is_absolute() {
            raw_path.to_path_buf()
        } else {
            root.join(raw_path)
        };
        if !resolved.exists() {
            return Err(Error::Manifest {
                line: line_no,
                message: format!("referenced frame source {} does not exist", resolved.display()),
            });
        }
        rows.push(RawRow {
            line: line_no,
            subject: fields[0].to_string(),
            video: fields[1].to_string(),
            path: resolved,
            label_name: fields[3].to_string(),
        });
    }
    if rows.is_empty() {
        return Err(Error::Manifest { line: 1, message: "manifest contains no data rows".into() });
    }

    let label_names: Vec<String> = rows
        .iter()
        .map(|r| r.label_name.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let entries = rows
        .into_iter()
        .map(|r| {
            let label = label_names
                .binary_search(&r.label_name)
                .map_err(|_| Error::Manifest {
                    line: r.line,
                    message: format!("internal label lookup failed for `{}`", r.label_name),
                })?;
            Ok(ManifestEntry {
                subject_id: r.subject,
                video_id: r.video,
                path: r.path,
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(DatasetManifest { entries, label_names, root })
}

/// Writes a manifest CSV; `rows` give (subject, video, relative path,
/// label name).
pub fn write_manifest(path: &Path, rows: &[(String, String, String, String)]) -> Result<()> {
    let mut text = String::from(MANIFEST_HEADER);
    text.push('\n');
    for (s, v, p, l) in rows {
        text.push_str(&format!("{s},{v},{p},{l}\n"));
    }
    std::fs::write(path, text)?;
    Ok(())
}
