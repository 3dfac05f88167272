//! Distill entangled states from the embezzlement family by local sorting
//! and watch the fidelity climb with the resource dimension.

use cbnorm::states::{embezzle, SchmidtState};

fn main() -> cbnorm::Result<()> {
    let psi2 = SchmidtState::max_entangled(2)?;
    println!("target: maximally entangled pair (coeffs {:?})", psi2.coeffs());
    println!("{:>4} {:>10} {:>18}", "k", "resource", "fidelity");
    for k in 0..=14u32 {
        let out = embezzle(1usize << k, &psi2)?;
        println!("{:>4} {:>10} {:>18.12}", k, 1u64 << k, out.fidelity);
    }

    // A skewed three-level target distills the same way.
    let skewed = SchmidtState::new(vec![0.8, 0.5196152422706631, 0.3])?;
    println!("\ntarget: skewed 3-level state (coeffs {:?})", skewed.coeffs());
    println!("{:>4} {:>10} {:>18}", "k", "resource", "fidelity");
    for k in [2u32, 6, 10, 14] {
        let out = embezzle(1usize << k, &skewed)?;
        println!("{:>4} {:>10} {:>18.12}", k, 1u64 << k, out.fidelity);
    }

    // The permutation is the whole local operation: show a tiny instance.
    let out = embezzle(4, &psi2)?;
    println!(
        "\nresource 4, target pair: fidelity {:.6}, sorting permutation {:?}",
        out.fidelity, out.permutation
    );
    Ok(())
}
