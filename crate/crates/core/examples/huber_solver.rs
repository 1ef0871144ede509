//! Solves single frequency bins with the Huber and ridge regularizers and
//! prints the solution curve across the branch knees.
//!
//! ```text
//! cargo run --example huber_solver
//! ```

use huber_kcf::huber_solver::{solve_bin, BinCoefficients, HuberConfig};

fn main() -> huber_kcf::Result<()> {
    let cfg = HuberConfig::new(1.0, 1.0)?;
    for (g1, g2, g3) in [(2.0, 1.0, 0.0), (1.0, 10.0, 0.0), (1.0, -10.0, 3.0)] {
        let (e, f) = solve_bin(
            BinCoefficients {
                gamma1: g1,
                gamma2: g2,
                gamma3: g3,
            },
            cfg,
        )?;
        println!("γ₁={g1:5} γ₂={g2:6} γ₃={g3:4}  ->  e={e:8.4} f={f:8.4}");
    }

    // γ₂ sweep at γ₁=2, λ=1, c=50: knees at γ₂ = ±101
    let cfg = HuberConfig::new(1.0, 50.0)?;
    println!("\n   γ₂      huber      ridge(λ/c)");
    for g in (-150..=150).step_by(25) {
        let g = g as f64;
        let coef = BinCoefficients {
            gamma1: 2.0,
            gamma2: g,
            gamma3: 0.0,
        };
        let (e, _) = solve_bin(coef, cfg)?;
        let ridge = g / (2.0 + cfg.lambda / cfg.c);
        println!("{g:6} {e:10.4} {ridge:10.4}");
    }
    Ok(())
}
