//! Dataset runs and variant comparisons behind the `hkcf` binary.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{error, info};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{
    aggregate, discover_sequences, evaluate, load_sequence, precision_curves, run_tracker,
    write_boxes, write_json, AggregateMode, SequenceEntry, SequenceEval, SequenceMetrics, Summary,
};
use crate::tracker::{RegularizerKind, TrackerConfig};

/// The four tracker variants compared in the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Huber,
    HuberScale,
    Ridge,
    RidgeScale,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Huber,
        Variant::HuberScale,
        Variant::Ridge,
        Variant::RidgeScale,
    ];

    pub fn regularizer(self) -> RegularizerKind {
        match self {
            Variant::Huber | Variant::HuberScale => RegularizerKind::Huber,
            Variant::Ridge | Variant::RidgeScale => RegularizerKind::Ridge,
        }
    }

    pub fn estimates_scale(self) -> bool {
        matches!(self, Variant::HuberScale | Variant::RidgeScale)
    }

    pub fn apply(self, cfg: &mut TrackerConfig) {
        cfg.regularizer = self.regularizer();
        cfg.estimate_scale = self.estimates_scale();
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "huber" => Ok(Variant::Huber),
            "huber+scale" => Ok(Variant::HuberScale),
            "ridge" => Ok(Variant::Ridge),
            "ridge+scale" => Ok(Variant::RidgeScale),
            other => Err(Error::UnknownVariant(other.to_string())),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Huber => "huber",
            Variant::HuberScale => "huber+scale",
            Variant::Ridge => "ridge",
            Variant::RidgeScale => "ridge+scale",
        })
    }
}

/// One benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub dataset: PathBuf,
    /// Sequence names to run; empty means every sequence under `dataset`.
    pub sequences: Vec<String>,
    pub variant: Variant,
    pub config_file: Option<PathBuf>,
    /// `key=value` overrides, applied after the config file.
    pub overrides: Vec<(String, String)>,
    pub out: PathBuf,
    pub jobs: usize,
    pub mode: AggregateMode,
}

impl RunSpec {
    pub fn new(dataset: impl Into<PathBuf>, variant: Variant, out: impl Into<PathBuf>) -> Self {
        Self {
            dataset: dataset.into(),
            sequences: Vec::new(),
            variant,
            config_file: None,
            overrides: Vec::new(),
            out: out.into(),
            jobs: 1,
            mode: AggregateMode::default(),
        }
    }

    /// Defaults, then the variant, then the config file, then `--set` overrides.
    pub fn tracker_config(&self) -> Result<TrackerConfig> {
        let mut cfg = TrackerConfig::default();
        self.variant.apply(&mut cfg);
        if let Some(path) = &self.config_file {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            cfg.apply_text(&text)?;
        }
        for (k, v) in &self.overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sequence directories in name order.
    pub fn sequence_dirs(&self) -> Result<Vec<PathBuf>> {
        if !self.dataset.is_dir() {
            return Err(Error::io(
                &self.dataset,
                std::io::Error::new(std::io::ErrorKind::NotFound, "dataset root not found"),
            ));
        }
        if self.sequences.is_empty() {
            let dirs = discover_sequences(&self.dataset)?;
            if dirs.is_empty() {
                return Err(Error::NoFrames(self.dataset.clone()));
            }
            return Ok(dirs);
        }
        let mut names = self.sequences.clone();
        names.sort();
        names.dedup();
        Ok(names.iter().map(|n| self.dataset.join(n)).collect())
    }
}

/// Parses `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::InvalidConfig(format!("expected key=value, got {s:?}")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Outcome of [`run`]; artifacts are already on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub summary: Summary,
    pub failures: Vec<(String, String)>,
}

impl RunReport {
    pub fn all_succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

struct SequenceOutcome {
    metrics: SequenceMetrics,
    eval: SequenceEval,
    frames: usize,
    seconds: f64,
}

fn run_one(dir: &Path, cfg: &TrackerConfig, out: &Path) -> Result<SequenceOutcome> {
    let seq = load_sequence(dir)?;
    let run = run_tracker(&seq, cfg)?;
    let records = evaluate(&run.boxes, &seq.truth);
    let curves = precision_curves(&records)?;
    let metrics = SequenceMetrics::new(&seq.name, seq.len(), records.len(), &curves, run.fps());

    let seq_out = out.join(&seq.name);
    fs::create_dir_all(&seq_out).map_err(|e| Error::io(&seq_out, e))?;
    write_boxes(&seq_out.join("boxes.csv"), &run.boxes)?;
    write_json(&seq_out.join("metrics.json"), &metrics)?;

    Ok(SequenceOutcome {
        metrics,
        eval: SequenceEval {
            name: seq.name,
            attributes: seq.attributes,
            records,
        },
        frames: run.boxes.len(),
        seconds: run.tracking_time.as_secs_f64(),
    })
}

/// Tracks every selected sequence (in parallel over `jobs` workers), writes
/// `<out>/<seq>/{boxes.csv,metrics.json}` and `<out>/summary.json`.
///
/// Per-sequence failures are logged and reported; the call itself fails only
/// on setup errors or when no sequence succeeds.
pub fn run(spec: &RunSpec) -> Result<RunReport> {
    let cfg = spec.tracker_config()?;
    let dirs = spec.sequence_dirs()?;
    fs::create_dir_all(&spec.out).map_err(|e| Error::io(&spec.out, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let outcomes: Vec<(String, Result<SequenceOutcome>)> = pool.install(|| {
        dirs.par_iter()
            .map(|d| {
                let name = d
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                (name, run_one(d, &cfg, &spec.out))
            })
            .collect()
    });

    let mut entries = Vec::new();
    let mut evals = Vec::new();
    let mut failures = Vec::new();
    let (mut frames, mut seconds) = (0usize, 0.0f64);
    for (name, outcome) in outcomes {
        match outcome {
            Ok(o) => {
                info!(
                    "{name}: DP@20 {:.3} OP@0.5 {:.3} {:.1} fps",
                    o.metrics.dp_at_20, o.metrics.op_at_05, o.metrics.fps
                );
                let mut entry = SequenceEntry::from(&o.metrics);
                entry.attributes = o.eval.attributes.clone();
                entries.push(entry);
                evals.push(o.eval);
                frames += o.frames;
                seconds += o.seconds;
            }
            Err(e) => {
                error!("{name}: {e}");
                failures.push((name, e.to_string()));
            }
        }
    }

    let agg = aggregate(&evals, spec.mode)?;
    let fps = if seconds > 0.0 {
        frames as f64 / seconds
    } else {
        0.0
    };
    let summary = Summary::new(
        &spec.variant.to_string(),
        spec.mode,
        entries,
        failures.iter().map(|(n, _)| n.clone()).collect(),
        &agg,
        fps,
    );
    write_json(&spec.out.join("summary.json"), &summary)?;
    Ok(RunReport { summary, failures })
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub variant: String,
    pub op_at_05: f64,
    pub dp_at_20: f64,
    /// Mean of OP@0.5 and DP@20.
    pub mean: f64,
    pub fps: f64,
}

impl ComparisonRow {
    fn from_summary(s: &Summary) -> Self {
        Self {
            variant: s.variant.clone(),
            op_at_05: s.overall.op_at_05,
            dp_at_20: s.overall.dp_at_20,
            mean: (s.overall.op_at_05 + s.overall.dp_at_20) / 2.0,
            fps: s.fps,
        }
    }
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("variant,op_at_05,dp_at_20,mean,fps\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.4},{:.4},{:.4},{:.2}\n",
            r.variant, r.op_at_05, r.dp_at_20, r.mean, r.fps
        ));
    }
    out
}

/// Runs every spec and tabulates headline scores. All specs must select the
/// same sequence set.
pub fn compare(specs: &[RunSpec]) -> Result<Vec<ComparisonRow>> {
    let names = |s: &RunSpec| -> Result<Vec<String>> {
        Ok(s.sequence_dirs()?
            .iter()
            .filter_map(|d| d.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect())
    };
    if let Some(first) = specs.first() {
        let reference = names(first)?;
        for s in &specs[1..] {
            let other = names(s)?;
            if other != reference {
                return Err(Error::SequenceSetMismatch(reference, other));
            }
        }
    }
    let mut rows = Vec::with_capacity(specs.len());
    for s in specs {
        let report = run(s)?;
        rows.push(ComparisonRow::from_summary(&report.summary));
    }
    Ok(rows)
}
