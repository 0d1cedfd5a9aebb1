//! Closed forms vs quadrature for the expansion constants at one (N, k, h, γ).
//!
//! cargo run --release --example constants_table -- 4,2,2 1.5

use bubblereduce::constants::{expansion_constants, rel_diff};
use bubblereduce::{QuadratureSpec, SpaceDims};

fn main() -> bubblereduce::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dims: SpaceDims = args.first().map(String::as_str).unwrap_or("4,2,2").parse()?;
    let gamma: f64 = args.get(1).and_then(|g| g.parse().ok()).unwrap_or(1.5);

    let c = expansion_constants(dims, gamma, &QuadratureSpec::with_rel_tol(1e-9))?;
    println!("{:>4} {:>22} {:>22} {:>10}", "name", "closed", "quadrature", "rel");
    for (name, e) in [("A", &c.a), ("Θ", &c.theta), ("b1", &c.b1), ("b2", &c.b2), ("b3", &c.b3), ("b4", &c.b4), ("D", &c.d)] {
        let (cl, qu) = (e.closed.unwrap_or(f64::NAN), e.quadrature.unwrap_or(f64::NAN));
        println!("{name:>4} {cl:>22.15e} {qu:>22.15e} {:>10.2e}", rel_diff(cl, qu));
    }
    for (name, v, sign, ok) in c.sign_ledger() {
        println!("sign {name}: {v:+.6e} expected {sign:+} {}", if ok { "ok" } else { "WRONG" });
    }
    Ok(())
}
