//! 31-channel HOG of a synthetic edge image, dumped per cell.
//!
//! ```text
//! cargo run --example hog_features [image.png]
//! ```

use huber_kcf::features::{cosine_window, extract_patch, hog, ImagePatch, HOG_CHANNELS};
use huber_kcf::Frame;

fn main() -> huber_kcf::Result<()> {
    let patch = match std::env::args().nth(1) {
        Some(path) => {
            let frame = huber_kcf::eval::load_frame(path.as_ref())?;
            let center = (frame.width() as f64 / 2.0, frame.height() as f64 / 2.0);
            extract_patch(&frame, center, (64, 64))?
        }
        None => ImagePatch::from_frame(Frame::from_fn(32, 32, |x, y| {
            if x + y / 2 < 20 {
                0.1
            } else {
                0.9
            }
        })),
    };
    let map = hog(&patch)?;
    let (cw, ch) = map.dims();
    println!(
        "{}x{} px -> {cw}x{ch} cells x {HOG_CHANNELS} channels",
        patch.size().0,
        patch.size().1
    );
    for y in 0..ch {
        let row: Vec<String> = (0..cw)
            .map(|x| {
                let best = (0..18)
                    .max_by(|&a, &b| {
                        map.channels()[a]
                            .get(x, y)
                            .total_cmp(&map.channels()[b].get(x, y))
                    })
                    .unwrap_or(0);
                if map.channels()[best].get(x, y) > 0.0 {
                    format!("{:>3}°", best * 20)
                } else {
                    "   .".to_string()
                }
            })
            .collect();
        println!("{}", row.join(" "));
    }
    let windowed = cosine_window(map)?;
    println!(
        "energy after cosine window: {:.4}",
        windowed.sum_of_squares()
    );
    Ok(())
}
