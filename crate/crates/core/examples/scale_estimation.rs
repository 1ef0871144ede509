//! Scale filter on a zooming target: per-frame selected factor and the
//! running scale against the truth.
//!
//! ```text
//! cargo run --release --example scale_estimation
//! ```

use huber_kcf::synthetic::SyntheticSequence;
use huber_kcf::tracker::{Tracker, TrackerConfig};

fn main() -> huber_kcf::Result<()> {
    let rate = 1.02;
    let seq = SyntheticSequence::zooming(40, (320, 240), 40, rate);
    let mut tracker = Tracker::init(&seq.frames[0], seq.truth[0], TrackerConfig::default())?;
    println!("frame  factor   scale   truth");
    for (i, frame) in seq.frames.iter().enumerate().skip(1) {
        let out = tracker.track(frame);
        if i % 5 == 0 || i == seq.frames.len() - 1 {
            println!(
                "{i:>5}  {:.4}  {:.4}  {:.4}",
                out.scale_factor,
                tracker.state().scale,
                rate.powi(i as i32)
            );
        }
    }
    Ok(())
}
