//! Writes a small synthetic dataset in OTB layout, runs the huber and ridge
//! variants over it and prints the comparison table. Pass a dataset root to
//! evaluate real sequences instead.
//!
//! ```text
//! cargo run --release --example evaluate_otb [dataset-root] [out-dir]
//! ```

use std::path::PathBuf;

use huber_kcf::cli::{compare, comparison_csv, RunSpec, Variant};
use huber_kcf::synthetic::SyntheticSequence;

fn main() -> huber_kcf::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let out: PathBuf;
    let dataset = match args.next() {
        Some(root) => {
            out = args
                .next()
                .map_or_else(|| PathBuf::from("results"), PathBuf::from);
            PathBuf::from(root)
        }
        None => {
            let root = std::env::temp_dir().join("huber_kcf_synthetic_otb");
            SyntheticSequence::translating(
                60,
                (320, 240),
                40,
                (60.0, 60.0),
                (3.0, 1.5),
                Some((0.02, 1)),
            )
            .write_otb(&root, "Translate", &["FM"])?;
            SyntheticSequence::zooming(40, (320, 240), 40, 1.015).write_otb(
                &root,
                "Zoom",
                &["SV"],
            )?;
            SyntheticSequence::occluded(40, (320, 240), 40, 15..25, 6.0).write_otb(
                &root,
                "Occlusion",
                &["OCC"],
            )?;
            out = root.join("results");
            root
        }
    };

    let specs: Vec<RunSpec> = [
        Variant::Huber,
        Variant::HuberScale,
        Variant::Ridge,
        Variant::RidgeScale,
    ]
    .into_iter()
    .map(|v| RunSpec::new(&dataset, v, out.join(v.to_string())))
    .collect();
    let rows = compare(&specs)?;
    print!("{}", comparison_csv(&rows));
    println!("artifacts in {}", out.display());
    Ok(())
}
