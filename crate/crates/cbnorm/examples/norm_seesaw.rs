//! Estimate amplified norms by alternating closed-form maximization, and
//! compare the free pairing state against the maximally entangled one.

use cbnorm::forms::{norm_seesaw, tracial_seesaw, FormTensor};

fn main() -> cbnorm::Result<()> {
    for (name, u) in [
        ("scalar multiplication", FormTensor::scalar()),
        ("trace pairing on M_2", FormTensor::trace_form(2)),
        ("random form on M_2 x M_2", FormTensor::random(2, 2, 7)),
    ] {
        println!("{name}:");
        println!("{:>4} {:>16} {:>16} {:>10}", "d", "free state", "entangled state", "iters");
        for d in [1usize, 2, 4] {
            let free = norm_seesaw(&u, d, 16, 11)?;
            let tb = tracial_seesaw(&u, d, 16, 11)?;
            println!(
                "{d:>4} {:>16.10} {:>16.10} {:>10}",
                free.value, tb.value, free.iterations
            );
            // every estimate is a certificate: re-evaluate the maximizer
            assert!((free.re_evaluate(&u)? - free.value).abs() < 1e-9);
        }
        println!();
    }
    Ok(())
}
