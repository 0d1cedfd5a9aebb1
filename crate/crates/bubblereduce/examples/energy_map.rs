//! Reduced energy on a log grid of scales around the reduced solution.

use bubblereduce::model::{PerturbativeLandscape, PerturbativeModel};
use bubblereduce::reduction::{solve_perturbative, PerturbativeOptions};
use bubblereduce::residual::{energy_map, log_grid};
use bubblereduce::{QuadratureSpec, SpaceDims};

fn main() -> bubblereduce::Result<()> {
    let dims = SpaceDims::new(5, 4, 1)?;
    let eps = 1e-2;
    let point = |c: f64| PerturbativeModel::new(dims, vec![c], 0.0, 2.0, vec![-1.0; 4], vec![-1.0], 0.5, 0.4, eps);
    let land = PerturbativeLandscape::new(vec![point(-0.5)?, point(0.5)?], eps)?;
    let l = solve_perturbative(&land, eps, &PerturbativeOptions::default())?.ansatz.lambdas();

    let g1 = log_grid(l[0] / 2.0, l[0] * 2.0, 7);
    let g2 = log_grid(l[1] / 2.0, l[1] * 2.0, 7);
    let centers = [land.patches[0].center.as_slice(), land.patches[1].center.as_slice()];
    let map = energy_map(&land, centers, [1.0, 1.0], &g1, &g2, &QuadratureSpec::with_rel_tol(1e-8))?;
    let e0 = map.values[3][3];
    println!("reduced scales ({:.4e}, {:.4e}); energy relative to the center cell", l[0], l[1]);
    for row in &map.values {
        println!("{}", row.iter().map(|v| format!("{:+.3e}", v - e0)).collect::<Vec<_>>().join(" "));
    }
    Ok(())
}
