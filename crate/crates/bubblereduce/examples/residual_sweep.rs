//! Energy, proxy norm, strong residual and dilation identity along ε → 0.

use bubblereduce::model::{PerturbativeLandscape, PerturbativeModel};
use bubblereduce::reduction::PerturbativeOptions;
use bubblereduce::residual::{epsilon_sweep, SweepOptions};
use bubblereduce::SpaceDims;

fn main() -> bubblereduce::Result<()> {
    let dims = SpaceDims::new(5, 4, 1)?;
    let eps = 1e-2;
    let point = |c: f64| PerturbativeModel::new(dims, vec![c], 0.0, 2.0, vec![-1.0; 4], vec![-1.0], 0.5, 0.4, eps);
    let land = PerturbativeLandscape::new(vec![point(-0.5)?, point(0.5)?], eps)?;
    let report = epsilon_sweep(&land, &[1e-2, 3e-3, 1e-3, 3e-4], &PerturbativeOptions::default(), &SweepOptions::default());
    print!("{}", report.to_csv());
    println!("# decreasing: {}", report.residual_decreasing());
    Ok(())
}
