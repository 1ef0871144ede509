//! PSR per frame on a target that is covered by a uniform block for ten
//! frames; updates are skipped while the PSR stays under the threshold.
//!
//! ```text
//! cargo run --release --example psr_gating
//! ```

use huber_kcf::synthetic::SyntheticSequence;
use huber_kcf::tracker::{Tracker, TrackerConfig};

fn main() -> huber_kcf::Result<()> {
    let seq = SyntheticSequence::occluded(30, (240, 180), 40, 10..20, 6.0);
    let cfg = TrackerConfig {
        estimate_scale: false,
        ..TrackerConfig::default()
    };
    let threshold = cfg.psr_threshold;
    let mut tracker = Tracker::init(&seq.frames[0], seq.truth[0], cfg)?;
    println!("threshold {threshold}");
    for (i, frame) in seq.frames.iter().enumerate().skip(1) {
        let before = tracker.model().clone();
        let out = tracker.track(frame);
        let frozen = tracker.model().z_hat == before.z_hat && tracker.model().h_hat == before.h_hat;
        println!(
            "frame {i:>2} {:9} psr {:8.2}  updated {:5}  model frozen {frozen}",
            if (10..20).contains(&i) {
                "occluded"
            } else {
                ""
            },
            out.psr,
            out.updated,
        );
    }
    Ok(())
}
