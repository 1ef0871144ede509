use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use crate::error::{Error, Result};
use crate::geometry::BBox;

pub const GROUND_TRUTH_FILE: &str = "groundtruth_rect.txt";
pub const ATTRIBUTES_FILE: &str = "attrs.txt";
/// Optional `key=value` file with `start_frame` / `end_frame` (inclusive,
/// numbered like the image files).
pub const SEQUENCE_CONFIG_FILE: &str = "sequence.cfg";

const IMAGE_EXTENSIONS: [&str; 5] = ["jpg", "jpeg", "png", "bmp", "pgm"];

/// One benchmark sequence on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub name: String,
    pub frames: Vec<PathBuf>,
    /// Per-frame truth, 0-indexed; `None` for NaN / empty boxes (target out of view).
    pub truth: Vec<Option<BBox>>,
    pub attributes: Vec<String>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Parses one ground-truth line: four numbers separated by commas, tabs or
/// spaces, 1-indexed. Returns `Ok(None)` for out-of-view (NaN / non-positive) boxes.
pub fn parse_truth_line(line: &str) -> std::result::Result<Option<BBox>, String> {
    let fields: Vec<&str> = line
        .split([',', '\t', ' ', ';'])
        .filter(|s| !s.is_empty())
        .collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 numbers, found {}", fields.len()));
    }
    let mut v = [0.0f64; 4];
    for (slot, f) in v.iter_mut().zip(&fields) {
        *slot = f.parse().map_err(|_| format!("not a number: {f:?}"))?;
    }
    let b = BBox::new(v[0] - 1.0, v[1] - 1.0, v[2], v[3]);
    Ok(b.is_valid().then_some(b))
}

fn frame_number(path: &Path) -> Option<u64> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    if !IMAGE_EXTENSIONS.contains(&ext.as_str()) {
        return None;
    }
    path.file_stem()?.to_str()?.parse().ok()
}

fn read_range(dir: &Path) -> Result<(u64, u64)> {
    let path = dir.join(SEQUENCE_CONFIG_FILE);
    let mut range = (0, u64::MAX);
    if !path.exists() {
        return Ok(range);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Parse {
            path: path.clone(),
            line: n + 1,
            msg,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad("expected key=value".into()))?;
        let v: u64 = v
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad number {v:?}")))?;
        match k.trim() {
            "start_frame" => range.0 = v,
            "end_frame" => range.1 = v,
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
    }
    Ok(range)
}

/// Loads `<dir>/img/*` (sorted by numeric file name) and `<dir>/groundtruth_rect.txt`.
///
/// When frame and truth counts differ, both are truncated to the shorter
/// length with a warning.
pub fn load_sequence(dir: &Path) -> Result<Sequence> {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let gt_path = dir.join(GROUND_TRUTH_FILE);
    if !gt_path.is_file() {
        return Err(Error::MissingGroundTruth(gt_path));
    }

    let (start, end) = read_range(dir)?;
    let img_dir = dir.join("img");
    let entries = fs::read_dir(&img_dir).map_err(|e| Error::io(&img_dir, e))?;
    let mut numbered: Vec<(u64, PathBuf)> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter_map(|p| frame_number(&p).map(|n| (n, p)))
        .filter(|(n, _)| (start..=end).contains(n))
        .collect();
    numbered.sort();
    let mut frames: Vec<PathBuf> = numbered.into_iter().map(|(_, p)| p).collect();
    if frames.is_empty() {
        return Err(Error::NoFrames(img_dir));
    }

    let text = fs::read_to_string(&gt_path).map_err(|e| Error::io(&gt_path, e))?;
    let mut truth = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let b = parse_truth_line(line.trim()).map_err(|msg| Error::Parse {
            path: gt_path.clone(),
            line: n + 1,
            msg,
        })?;
        truth.push(b);
    }

    if frames.len() != truth.len() {
        let n = frames.len().min(truth.len());
        warn!(
            "{name}: {} frames but {} ground-truth boxes; truncating to {n}",
            frames.len(),
            truth.len()
        );
        frames.truncate(n);
        truth.truncate(n);
    }

    let attr_path = dir.join(ATTRIBUTES_FILE);
    let attributes = if attr_path.is_file() {
        fs::read_to_string(&attr_path)
            .map_err(|e| Error::io(&attr_path, e))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect()
    } else {
        Vec::new()
    };

    Ok(Sequence {
        name,
        frames,
        truth,
        attributes,
    })
}

/// Sequence directories under `root` (those holding a ground-truth file), by name.
pub fn discover_sequences(root: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(GROUND_TRUTH_FILE).is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}
