//! Two flat points of a perturbed curvature: solve the reduced system and build the ansatz.

use bubblereduce::model::{PerturbativeLandscape, PerturbativeModel};
use bubblereduce::reduction::{solve_perturbative, PerturbativeOptions};
use bubblereduce::SpaceDims;

fn main() -> bubblereduce::Result<()> {
    let dims = SpaceDims::new(5, 4, 1)?;
    let opts = PerturbativeOptions::default();
    for eps in [1e-2, 1e-3, 1e-4] {
        let point = |c: f64, gamma: f64| {
            PerturbativeModel::new(dims, vec![c], 0.0, gamma, vec![-1.0; 4], vec![-1.0], 0.5, 0.4, eps)
        };
        let land = PerturbativeLandscape::new(vec![point(-0.5, 2.0)?, point(0.5, 2.3)?], eps)?;
        let sol = solve_perturbative(&land, eps, &opts)?;
        let l = sol.ansatz.lambdas();
        println!(
            "eps {eps:.0e}: degree {}  t = ({:.6e}, {:.6e})  lambda = ({:.6e}, {:.6e})  eps12 = {:.3e}",
            sol.degree,
            sol.t.0,
            sol.t.1,
            l[0],
            l[1],
            sol.ansatz.eps12()?
        );
    }
    Ok(())
}
