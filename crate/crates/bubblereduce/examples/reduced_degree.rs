//! The reduced two-scale map: degree on a box, Newton root, and a box that misses it.

use bubblereduce::reduction::{newton_solve, reduced_residual, winding_degree, ReducedSystem};

fn main() -> bubblereduce::Result<()> {
    let sys = ReducedSystem::new(1.5, 2.5, 5, 0.1, 10.0)?;
    let (t1, t2) = newton_solve(&sys)?;
    let (r1, r2) = reduced_residual(&sys, t1, t2)?;
    println!("box [{:.3e}, {:.3e}]  degree {}", sys.m1, sys.m2, winding_degree(&sys)?);
    println!("root t = ({t1:.12e}, {t2:.12e})  residual ({r1:.1e}, {r2:.1e})");

    let far = sys.with_box(10.0 * t1.max(t2), 1e3 * t1.max(t2))?;
    println!("box [{:.3e}, {:.3e}]  degree {}", far.m1, far.m2, winding_degree(&far)?);

    let sym = ReducedSystem::new(1.2, 1.2, 5, 3.0, 3.0)?;
    let (s1, s2) = newton_solve(&sym)?;
    println!("symmetric: newton ({s1:.12e}, {s2:.12e}) closed form {:.12e}", sym.symmetric_root().unwrap());
    Ok(())
}
