//! Tracks synthetic translating, zooming and occluded targets and prints
//! per-sequence errors.
//!
//! ```text
//! cargo run --release --example track_synthetic
//! ```

use std::time::Instant;

use huber_kcf::synthetic::SyntheticSequence;
use huber_kcf::tracker::{Tracker, TrackerConfig};

fn report(name: &str, seq: &SyntheticSequence, cfg: TrackerConfig) {
    let mut tracker = Tracker::init(&seq.frames[0], seq.truth[0], cfg).expect("init");
    let mut worst: f64 = 0.0;
    let mut updates = 0;
    let t0 = Instant::now();
    for (frame, truth) in seq.frames.iter().zip(&seq.truth).skip(1) {
        let out = tracker.track(frame);
        let (px, py) = out.bbox.center();
        let (tx, ty) = truth.center();
        worst = worst.max((px - tx).hypot(py - ty));
        updates += out.updated as usize;
    }
    let fps = (seq.frames.len() - 1) as f64 / t0.elapsed().as_secs_f64();
    let scale = tracker.state().scale;
    let true_scale = seq.truth.last().unwrap().w / seq.truth[0].w;
    println!(
        "{name:<12} frames {:>3}  max error {worst:6.2} px  updates {updates:>3}  scale {scale:.3} (true {true_scale:.3})  {fps:7.1} fps",
        seq.frames.len()
    );
}

fn main() {
    let no_scale = TrackerConfig {
        estimate_scale: false,
        ..TrackerConfig::default()
    };
    let clean = SyntheticSequence::translating(50, (320, 240), 40, (60.0, 70.0), (3.0, 1.5), None);
    report("translate", &clean, no_scale.clone());
    let noisy = SyntheticSequence::translating(
        50,
        (320, 240),
        40,
        (60.0, 70.0),
        (3.0, 1.5),
        Some((5.0 / 255.0, 1)),
    );
    report("noisy", &noisy, no_scale.clone());
    let zoom = SyntheticSequence::zooming(40, (320, 240), 40, 1.02);
    report("zoom", &zoom, TrackerConfig::default());
    let occ = SyntheticSequence::occluded(30, (320, 240), 40, 10..20, 6.0);
    report("occlusion", &occ, no_scale);
}
