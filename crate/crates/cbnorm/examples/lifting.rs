//! Lift a weighted witness through the line families and verify everything
//! the lifting promises: the four operator-norm comparisons, the exact
//! value identity, and the deficit shrinking as the dimension grows.

use cbnorm::forms::FormTensor;
use cbnorm::lifting::{lift, random_feasible_witness, verify_lift};

fn main() -> cbnorm::Result<()> {
    let u = FormTensor::random(2, 2, 40);
    let w = random_feasible_witness(2, 2, 3, 1.5, 41)?;
    println!(
        "witness: length {}, weights {:?}",
        w.len(),
        w.ts().iter().map(|t| format!("{t:.3}")).collect::<Vec<_>>()
    );

    println!(
        "\n{:>5} {:>9} {:>12} {:>14} {:>14} {:>12}",
        "d", "elements", "min slack", "value", "identity err", "deficit"
    );
    for d in [8usize, 64, 512] {
        let lr = lift(&w, d)?;
        let rep = verify_lift(&u, &w, &lr)?;
        println!(
            "{d:>5} {:>9} {:>12.2e} {:>14.8} {:>14.2e} {:>12.4e}",
            lr.index_map.len(),
            rep.min_slack,
            rep.lifted_value.norm(),
            rep.identity_rel_err,
            rep.value_deficit,
        );
    }

    let lr = lift(&w, 64)?;
    let rep = verify_lift(&u, &w, &lr)?;
    println!("\nat d = 64:");
    println!("  |sum u(x_i, y_i)|      = {:.8}", rep.original_value.norm());
    println!("  lifted value           = {:.8}", rep.lifted_value.norm());
    println!("  measured line deficit  = {:.4e}", rep.max_line_deficit);
    println!("  deficit bound          = {:.4e}", rep.deficit_bound);
    println!(
        "  norm comparisons (lifted <= original): x-row {:.4} <= {:.4}, x-col {:.4} <= {:.4}",
        rep.x_row.lifted, rep.x_row.original, rep.x_col.lifted, rep.x_col.original
    );
    println!(
        "                                         y-row {:.4} <= {:.4}, y-col {:.4} <= {:.4}",
        rep.y_row.lifted, rep.y_row.original, rep.y_col.lifted, rep.y_col.original
    );
    Ok(())
}
