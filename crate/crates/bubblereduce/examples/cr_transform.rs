//! Sphere → Heisenberg group → half-space: points and a bubble through the coordinate chain.

use bubblereduce::geometry::{
    cr_to_heisenberg, grushin_to_hs, heisenberg_to_cr, norm_identity_constant, norm_identity_ratio, BuiltinProfile,
};
use bubblereduce::{Bubble, QuadratureSpec, SpaceDims};
use num_complex::Complex64;

fn main() -> bubblereduce::Result<()> {
    let n = 1;
    let u = BuiltinProfile::Bubble.on_heisenberg(n)?;
    let v = grushin_to_hs(&u)?;
    let flat = Bubble::new(SpaceDims::cr(n)?, vec![0.0], 1.0)?;

    for (a, b) in [(0.6, 0.0), (0.3, 0.9), (-0.8, 0.5)] {
        let w = Complex64::new(a, b);
        let rest = (1.0 - w.norm_sqr()).sqrt();
        let theta = vec![Complex64::new(rest * 0.6, rest * 0.8), w];
        let (z, t) = cr_to_heisenberg(&theta)?;
        let back = heisenberg_to_cr(&z, t);
        let err = theta.iter().zip(&back).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        let r = z[0].norm();
        let y = r * r;
        println!(
            "w = {w:.2}: |z| {r:.6} t {t:+.6}  round trip {err:.1e}  u {:.12e}  v {:.12e}  2^n U {:.12e}",
            u.eval(r, &[t]),
            v.eval(y, &[t]),
            2f64.powi(n as i32) * flat.eval(y, &[t])
        );
    }

    let spec = QuadratureSpec::with_rel_tol(1e-9);
    for p in [BuiltinProfile::Bubble, BuiltinProfile::Power] {
        let ratio = norm_identity_ratio(&p.on_heisenberg(n)?, n, &spec)?;
        println!("{}: energy ratio {ratio:.12} (constant {:.12})", p.name(), norm_identity_constant(n));
    }
    Ok(())
}
