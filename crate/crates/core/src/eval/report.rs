use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::metrics::{Aggregate, AggregateMode, PrecisionCurves};
use crate::error::{Error, Result};
use crate::geometry::BBox;

/// Per-sequence `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceMetrics {
    pub sequence: String,
    pub frames: usize,
    pub evaluated_frames: usize,
    pub dp_curve: Vec<f64>,
    pub op_curve: Vec<f64>,
    pub auc_dp: f64,
    pub auc_op: f64,
    pub dp_at_20: f64,
    pub op_at_05: f64,
    pub fps: f64,
}

impl SequenceMetrics {
    pub fn new(
        sequence: &str,
        frames: usize,
        evaluated: usize,
        curves: &PrecisionCurves,
        fps: f64,
    ) -> Self {
        Self {
            sequence: sequence.to_string(),
            frames,
            evaluated_frames: evaluated,
            dp_curve: curves.dp.values.clone(),
            op_curve: curves.op.values.clone(),
            auc_dp: curves.dp.auc,
            auc_op: curves.op.auc,
            dp_at_20: curves.dp_at_20(),
            op_at_05: curves.op_at_05(),
            fps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSummary {
    pub dp_curve: Vec<f64>,
    pub op_curve: Vec<f64>,
    pub auc_dp: f64,
    pub auc_op: f64,
    pub dp_at_20: f64,
    pub op_at_05: f64,
}

impl From<&PrecisionCurves> for CurveSummary {
    fn from(c: &PrecisionCurves) -> Self {
        Self {
            dp_curve: c.dp.values.clone(),
            op_curve: c.op.values.clone(),
            auc_dp: c.dp.auc,
            auc_op: c.op.auc,
            dp_at_20: c.dp_at_20(),
            op_at_05: c.op_at_05(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceEntry {
    pub name: String,
    pub attributes: Vec<String>,
    pub frames: usize,
    pub dp_at_20: f64,
    pub op_at_05: f64,
    pub auc_dp: f64,
    pub auc_op: f64,
    pub fps: f64,
}

impl From<&SequenceMetrics> for SequenceEntry {
    fn from(m: &SequenceMetrics) -> Self {
        Self {
            name: m.sequence.clone(),
            attributes: Vec::new(),
            frames: m.frames,
            dp_at_20: m.dp_at_20,
            op_at_05: m.op_at_05,
            auc_dp: m.auc_dp,
            auc_op: m.auc_op,
            fps: m.fps,
        }
    }
}

/// Aggregate `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub variant: String,
    pub mode: AggregateMode,
    pub sequences: Vec<SequenceEntry>,
    pub failed: Vec<String>,
    pub overall: CurveSummary,
    pub attributes: BTreeMap<String, CurveSummary>,
    /// Total tracked frames over total tracking time.
    pub fps: f64,
}

impl Summary {
    pub fn new(
        variant: &str,
        mode: AggregateMode,
        sequences: Vec<SequenceEntry>,
        failed: Vec<String>,
        agg: &Aggregate,
        fps: f64,
    ) -> Self {
        Self {
            variant: variant.to_string(),
            mode,
            sequences,
            failed,
            overall: (&agg.overall).into(),
            attributes: agg
                .per_attribute
                .iter()
                .map(|(k, v)| (k.clone(), v.into()))
                .collect(),
            fps,
        }
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `frame,x,y,w,h`; frames 1-indexed, boxes 0-indexed.
pub fn boxes_csv(boxes: &[BBox]) -> String {
    let mut out = String::from("frame,x,y,w,h\n");
    for (i, b) in boxes.iter().enumerate() {
        let _ = writeln!(out, "{},{:.4},{:.4},{:.4},{:.4}", i + 1, b.x, b.y, b.w, b.h);
    }
    out
}

pub fn write_boxes(path: &Path, boxes: &[BBox]) -> Result<()> {
    fs::write(path, boxes_csv(boxes)).map_err(|e| Error::io(path, e))
}
