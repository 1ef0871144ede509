//! OTB-style sequence loading, distance / overlap precision, aggregation.

mod metrics;
mod report;
mod sequence;

use std::path::Path;
use std::time::{Duration, Instant};

pub use metrics::{
    aggregate, center_error, dp_thresholds, evaluate, op_thresholds, overlap, precision_curves,
    Aggregate, AggregateMode, Curve, EvalRecord, PrecisionCurves, SequenceEval, DP_HEADLINE_PX,
    DP_STEPS, OP_HEADLINE_INDEX, OP_STEPS,
};
pub use report::{
    boxes_csv, write_boxes, write_json, CurveSummary, SequenceEntry, SequenceMetrics, Summary,
};
pub use sequence::{
    discover_sequences, load_sequence, parse_truth_line, Sequence, ATTRIBUTES_FILE,
    GROUND_TRUTH_FILE, SEQUENCE_CONFIG_FILE,
};

use crate::error::{Error, Result};
use crate::features::Frame;
use crate::geometry::BBox;
use crate::tracker::{Tracker, TrackerConfig};

pub fn load_frame(path: &Path) -> Result<Frame> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Frame::from_dynamic(&img)
}

/// Boxes predicted for one sequence and the time spent inside the tracker.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingRun {
    pub boxes: Vec<BBox>,
    pub tracking_time: Duration,
}

impl TrackingRun {
    pub fn fps(&self) -> f64 {
        let secs = self.tracking_time.as_secs_f64();
        if secs > 0.0 {
            self.boxes.len() as f64 / secs
        } else {
            0.0
        }
    }
}

/// Tracks `seq` from its first-frame truth box. Frames are decoded one at a
/// time; decode time is excluded from `tracking_time`.
pub fn run_tracker(seq: &Sequence, cfg: &TrackerConfig) -> Result<TrackingRun> {
    let init_box = seq.truth.first().copied().flatten().ok_or_else(|| {
        Error::InvalidConfig(format!("{}: first frame has no ground truth", seq.name))
    })?;
    let mut boxes = Vec::with_capacity(seq.len());
    let mut elapsed = Duration::ZERO;
    let mut tracker: Option<Tracker> = None;
    for path in &seq.frames {
        let frame = load_frame(path)?;
        let t0 = Instant::now();
        let b = match tracker.as_mut() {
            None => {
                let t = Tracker::init(&frame, init_box, cfg.clone())?;
                let b = t.bbox();
                tracker = Some(t);
                b
            }
            Some(t) => t.track(&frame).bbox,
        };
        elapsed += t0.elapsed();
        boxes.push(b);
    }
    Ok(TrackingRun {
        boxes,
        tracking_time: elapsed,
    })
}
