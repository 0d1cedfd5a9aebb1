//! Order of the bubble interaction integral on a doubling λ-ladder.

use bubblereduce::interaction::{ladder_check, LadderKind, LadderSetup};
use bubblereduce::SpaceDims;

fn main() -> bubblereduce::Result<()> {
    let dims = SpaceDims::new(5, 4, 1)?;
    for kind in [LadderKind::Interaction, LadderKind::DLambda] {
        let r = ladder_check(kind, dims, None, &LadderSetup::for_kind(kind))?;
        print!("{}", r.to_csv());
        println!("# {}: passed = {}\n", kind.name(), r.passed());
    }
    let gamma = 1.5;
    let kind = LadderKind::CurvatureDLambda;
    let r = ladder_check(kind, SpaceDims::new(4, 3, 1)?, Some(gamma), &LadderSetup::for_kind(kind))?;
    print!("{}", r.to_csv());
    Ok(())
}
