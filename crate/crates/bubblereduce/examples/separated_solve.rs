//! Two distant maxima of the curvature: minimize the reduced energy over scales and centers.
//!
//! Slow in debug builds; use --release.

use bubblereduce::model::MaxPointModel;
use bubblereduce::reduction::{l_separation, solve_separated, SeparatedOptions};
use bubblereduce::SpaceDims;

fn main() -> bubblereduce::Result<()> {
    let dims = SpaceDims::new(3, 2, 1)?;
    let s: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(50.0);
    let model = MaxPointModel::new(
        dims,
        vec![vec![-s / 2.0], vec![s / 2.0]],
        vec![1.0, 1.0],
        vec![1.8, 1.8],
        0.5,
        2.0,
        vec![1.0, 1.0],
        0.5,
        0.5,
    )?;
    let (l1, l2) = l_separation(1.8, 1.8, dims.n, s)?;
    let sol = solve_separated(&model, (0, 1), &SeparatedOptions::default())?;
    println!("separation {s}: predicted scales ({l1:.4e}, {l2:.4e})");
    for (b, c) in sol.ansatz.bubbles.iter().zip(&model.centers) {
        println!("  lambda {:.6e}  eta {:?}  lambda*|eta - center| {:.3e}", b.lambda, b.eta, b.lambda * (b.eta[0] - c[0]).abs());
    }
    println!("  energy {:.12e} after {} evaluations", sol.energy, sol.evaluations);
    Ok(())
}
