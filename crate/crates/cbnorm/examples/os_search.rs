//! Search the constrained suprema over witness sequences: free weights
//! against unit weights, and the additive constraint against the looser
//! square-rooted one.

use cbnorm::forms::{os_search, FormTensor, OsSearchOptions};
use cbnorm::lifting::ConstraintFlavor;

fn main() -> cbnorm::Result<()> {
    for (name, u) in [
        ("scalar multiplication", FormTensor::scalar()),
        ("trace pairing on M_2", FormTensor::trace_form(2)),
        ("random form on M_2 x M_2", FormTensor::random(2, 2, 3)),
    ] {
        println!("{name}:");
        for (label, flavor, fixed_t) in [
            ("weighted, additive   ", ConstraintFlavor::Standard, None),
            ("unit weights, additive", ConstraintFlavor::Standard, Some(1.0)),
            ("weighted, square-root ", ConstraintFlavor::Loose, None),
        ] {
            let res = os_search(
                &u,
                &OsSearchOptions {
                    length: 2,
                    flavor,
                    fixed_t,
                    restarts: 8,
                    seed: 17,
                    ..OsSearchOptions::default()
                },
            )?;
            println!(
                "  {label}  value {:>12.8}  violation {:.1e}  weights {:?}",
                res.value,
                res.constraint.violation,
                res.witness
                    .ts()
                    .iter()
                    .map(|t| format!("{t:.3}"))
                    .collect::<Vec<_>>()
            );
        }
        println!();
    }
    Ok(())
}
