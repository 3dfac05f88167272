//! Build the interval-overlap line matrices, check their feasibility and
//! value bounds on a grid, estimate the deficit decay constant, and export
//! the two classic heatmaps.

use cbnorm::lines::{
    analytic_lower_bound_t2, fit_constant_t2, heatmap_export, line_matrix_t2, line_value_t2,
    LineFamily,
};

fn main() -> cbnorm::Result<()> {
    println!("{:>5} {:>8} {:>12} {:>12} {:>12} {:>10}", "d", "t^2", "lower", "value", "t", "deficit");
    for &d in &[8usize, 64, 512] {
        for &t2 in &[0.5f64, 1.0, 3.0] {
            let t = t2.sqrt();
            let value = line_value_t2(d, t2)?;
            let lower = analytic_lower_bound_t2(d, t2)?;
            println!(
                "{d:>5} {t2:>8.3} {lower:>12.6} {value:>12.6} {t:>12.6} {:>10.2e}",
                t - value
            );
        }
    }

    // Row sums stay below 1 and column sums below t^2 (exact interval math).
    let fam = LineFamily::from_t_squared(8, 3.0)?;
    println!("\nd=8, t^2=3: row sums {:?}", fam.row_sums());
    println!("            col sums {:?}", fam.col_sums());
    println!("            nonzero pieces: {}", fam.nonzero_pieces().count());

    let c = fit_constant_t2(&[1.0 / 3.0, 0.5, 1.0, 2.4, 3.0], &[8, 32, 128, 512, 2048])?;
    println!("\nfitted deficit constant over the grid: {c:.4}");

    let out_dir = std::path::Path::new("cbnorm-out");
    std::fs::create_dir_all(out_dir).ok();
    for t2 in [3.0f64, 2.4] {
        let l = line_matrix_t2(8, t2)?;
        let files = heatmap_export(&l, &out_dir.join(format!("line_d8_t2_{t2}")))?;
        println!("wrote {} and {}", files.pgm.display(), files.csv.display());
    }
    Ok(())
}
