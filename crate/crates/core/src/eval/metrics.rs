use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;

/// DP thresholds: 0..=50 px, step 1.
pub const DP_STEPS: usize = 50;
/// OP thresholds: 0..=1, step 0.02.
pub const OP_STEPS: usize = 50;
pub const DP_HEADLINE_PX: usize = 20;
pub const OP_HEADLINE_INDEX: usize = 25;

/// One evaluated frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub frame: usize,
    pub predicted: BBox,
    pub truth: BBox,
    pub center_error: f64,
    pub overlap: f64,
}

impl EvalRecord {
    pub fn new(frame: usize, predicted: BBox, truth: BBox) -> Self {
        Self {
            frame,
            predicted,
            truth,
            center_error: center_error(&predicted, &truth),
            overlap: overlap(&predicted, &truth),
        }
    }
}

/// Intersection over union; 0 when either box is empty.
pub fn overlap(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let ih = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union > 0.0 {
        (inter / union).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

pub fn center_error(a: &BBox, b: &BBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}

/// Records for every frame with a valid truth box; out-of-view frames are skipped.
pub fn evaluate(predicted: &[BBox], truth: &[Option<BBox>]) -> Vec<EvalRecord> {
    predicted
        .iter()
        .zip(truth)
        .enumerate()
        .filter_map(|(i, (p, t))| t.map(|t| EvalRecord::new(i, *p, t)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
    pub auc: f64,
}

impl Curve {
    fn from_values(thresholds: Vec<f64>, values: Vec<f64>) -> Self {
        let auc = values.iter().sum::<f64>() / values.len() as f64;
        Self {
            thresholds,
            values,
            auc,
        }
    }

    fn mean(curves: &[&Curve]) -> Self {
        let n = curves.len() as f64;
        let values = (0..curves[0].values.len())
            .map(|i| curves.iter().map(|c| c.values[i]).sum::<f64>() / n)
            .collect();
        Self::from_values(curves[0].thresholds.clone(), values)
    }
}

pub fn dp_thresholds() -> Vec<f64> {
    (0..=DP_STEPS).map(|i| i as f64).collect()
}

pub fn op_thresholds() -> Vec<f64> {
    (0..=OP_STEPS).map(|i| i as f64 / OP_STEPS as f64).collect()
}

/// Distance- and overlap-precision curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionCurves {
    pub dp: Curve,
    pub op: Curve,
}

impl PrecisionCurves {
    /// Fraction of frames with center error below 20 px.
    pub fn dp_at_20(&self) -> f64 {
        self.dp.values[DP_HEADLINE_PX]
    }

    /// Fraction of frames with overlap above 0.5.
    pub fn op_at_05(&self) -> f64 {
        self.op.values[OP_HEADLINE_INDEX]
    }
}

/// DP counts `error < π`, OP counts `overlap > τ`.
pub fn precision_curves(records: &[EvalRecord]) -> Result<PrecisionCurves> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let n = records.len() as f64;
    let frac =
        |pass: &dyn Fn(&EvalRecord) -> bool| records.iter().filter(|r| pass(r)).count() as f64 / n;
    let dp_t = dp_thresholds();
    let op_t = op_thresholds();
    let dp = dp_t
        .iter()
        .map(|&t| frac(&|r| r.center_error < t))
        .collect();
    let op = op_t.iter().map(|&t| frac(&|r| r.overlap > t)).collect();
    Ok(PrecisionCurves {
        dp: Curve::from_values(dp_t, dp),
        op: Curve::from_values(op_t, op),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregateMode {
    /// Pool every frame of every sequence.
    #[default]
    PerFrame,
    /// Pointwise mean of per-sequence curves.
    PerSequenceMean,
}

impl std::str::FromStr for AggregateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-frame" => Ok(Self::PerFrame),
            "per-sequence-mean" => Ok(Self::PerSequenceMean),
            other => Err(Error::InvalidConfig(format!(
                "unknown aggregate mode {other:?}"
            ))),
        }
    }
}

/// Evaluated records of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceEval {
    pub name: String,
    pub attributes: Vec<String>,
    pub records: Vec<EvalRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub overall: PrecisionCurves,
    pub per_attribute: BTreeMap<String, PrecisionCurves>,
}

fn combine(seqs: &[&SequenceEval], mode: AggregateMode) -> Result<PrecisionCurves> {
    match mode {
        AggregateMode::PerFrame => {
            let pooled: Vec<EvalRecord> = seqs
                .iter()
                .flat_map(|s| s.records.iter().copied())
                .collect();
            precision_curves(&pooled)
        }
        AggregateMode::PerSequenceMean => {
            let per: Vec<PrecisionCurves> = seqs
                .iter()
                .filter(|s| !s.records.is_empty())
                .map(|s| precision_curves(&s.records))
                .collect::<Result<_>>()?;
            if per.is_empty() {
                return Err(Error::EmptyRecords);
            }
            Ok(PrecisionCurves {
                dp: Curve::mean(&per.iter().map(|p| &p.dp).collect::<Vec<_>>()),
                op: Curve::mean(&per.iter().map(|p| &p.op).collect::<Vec<_>>()),
            })
        }
    }
}

/// Overall curves plus one pair per attribute tag. Sequences without records
/// contribute nothing; fails only if no records remain at all.
pub fn aggregate(results: &[SequenceEval], mode: AggregateMode) -> Result<Aggregate> {
    let mut sorted: Vec<&SequenceEval> = results.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let overall = combine(&sorted, mode)?;

    let mut tags: Vec<&str> = sorted
        .iter()
        .flat_map(|s| s.attributes.iter().map(String::as_str))
        .collect();
    tags.sort_unstable();
    tags.dedup();
    let mut per_attribute = BTreeMap::new();
    for tag in tags {
        let subset: Vec<&SequenceEval> = sorted
            .iter()
            .copied()
            .filter(|s| s.attributes.iter().any(|a| a == tag))
            .collect();
        if let Ok(c) = combine(&subset, mode) {
            per_attribute.insert(tag.to_string(), c);
        }
    }
    Ok(Aggregate {
        overall,
        per_attribute,
    })
}
