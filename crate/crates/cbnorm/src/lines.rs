//! The line-matrix family: interval-overlap matrices `L(t)`, the weight
//! vector `z`, the rank-one decomposition into `d^2` single-entry pieces,
//! and the empirical constant governing how fast `<z, L(t) z>` approaches
//! `t` as the dimension grows.
//!
//! Entry `(i, j)` of `L(t)` (1-based) is the length of
//! `[i-1, i) /\ [(j-1) t^2, j t^2)`, computed in closed form so the matrices
//! are bit-stable. The sweep helpers (`line_value`, `fit_constant`) walk the
//! nonzero band directly and never materialize a dense matrix, which keeps
//! dimensions in the thousands cheap.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{C64, CMatrix};
use crate::states::{harmonic_number, SchmidtState};

fn check_positive_t2(t2: f64) -> Result<()> {
    if !(t2 > 0.0) || !t2.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "t^2 must be a positive real, got {t2}"
        )));
    }
    Ok(())
}

fn check_positive_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "t must be a positive real, got {t}"
        )));
    }
    Ok(())
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    Ok(())
}

/// Overlap length of `[i0, i0+1)` and `[j0 t^2, (j0+1) t^2)` (0-based).
fn entry(i0: usize, j0: usize, t2: f64) -> f64 {
    let lo = (i0 as f64).max(j0 as f64 * t2);
    let hi = ((i0 + 1) as f64).min((j0 + 1) as f64 * t2);
    (hi - lo).max(0.0)
}

/// Column window intersecting row `i0`; clamped to `[0, d)`.
fn column_window(i0: usize, d: usize, t2: f64) -> std::ops::Range<usize> {
    let lo = ((i0 as f64 / t2).floor() as isize - 1).max(0) as usize;
    let hi = (((i0 + 1) as f64 / t2).ceil() as usize + 1).min(d);
    lo..hi.max(lo)
}

/// Dense `L(t)` for `t = sqrt(t2)`.
pub fn line_matrix_t2(d: usize, t2: f64) -> Result<CMatrix> {
    check_dim(d)?;
    check_positive_t2(t2)?;
    Ok(CMatrix::from_fn(d, d, |i, j| {
        C64::new(entry(i, j, t2), 0.0)
    }))
}

/// Dense `L(t)`.
pub fn line_matrix(d: usize, t: f64) -> Result<CMatrix> {
    check_positive_t(t)?;
    line_matrix_t2(d, t * t)
}

/// `<z, L(t) z>` with `z = Z_d^{-1/2} (i^{-1/2})_i`, for `t = sqrt(t2)`.
pub fn line_value_t2(d: usize, t2: f64) -> Result<f64> {
    check_dim(d)?;
    check_positive_t2(t2)?;
    let mut sum = 0.0;
    for i0 in 0..d {
        for j0 in column_window(i0, d, t2) {
            let l = entry(i0, j0, t2);
            if l > 0.0 {
                sum += l / (((i0 + 1) * (j0 + 1)) as f64).sqrt();
            }
        }
    }
    Ok(sum / harmonic_number(d))
}

/// `<z, L(t) z>`.
pub fn line_value(d: usize, t: f64) -> Result<f64> {
    check_positive_t(t)?;
    line_value_t2(d, t * t)
}

/// Closed-form lower bound on `<z, L(t) z>`:
/// `(2t/Z_d) (ln(sqrt(X+1) + sqrt(X+t^2)) - ln(t+1))` with
/// `X = d min(1, t^2)`.
pub fn analytic_lower_bound_t2(d: usize, t2: f64) -> Result<f64> {
    check_dim(d)?;
    check_positive_t2(t2)?;
    let t = t2.sqrt();
    let x = d as f64 * t2.min(1.0);
    let value = (2.0 * t / harmonic_number(d))
        * (((x + 1.0).sqrt() + (x + t2).sqrt()).ln() - (t + 1.0).ln());
    Ok(value)
}

pub fn analytic_lower_bound(d: usize, t: f64) -> Result<f64> {
    check_positive_t(t)?;
    analytic_lower_bound_t2(d, t * t)
}

/// Relative deficit `(t - <z, L(t) z>) / t`, clamped at zero.
pub fn line_deficit_t2(d: usize, t2: f64) -> Result<f64> {
    let t = t2.sqrt();
    Ok(((t - line_value_t2(d, t2)?) / t).max(0.0))
}

/// Smallest constant `C` with
/// `t - <z, L(t) z> <= C t ln(1 + max(t, 1/t)) / (1 + ln d)`
/// over the whole grid; an empirical lower estimate of the universal one.
pub fn fit_constant(t_grid: &[f64], d_grid: &[usize]) -> Result<f64> {
    let t2_grid: Vec<f64> = t_grid.iter().map(|t| t * t).collect();
    fit_constant_t2(&t2_grid, d_grid)
}

/// Same fit, parametrized by `t^2` so grid points are exact.
pub fn fit_constant_t2(t2_grid: &[f64], d_grid: &[usize]) -> Result<f64> {
    if t2_grid.is_empty() || d_grid.is_empty() {
        return Err(Error::InvalidArgument("grids must be nonempty".into()));
    }
    let mut best = 0.0f64;
    for &t2 in t2_grid {
        check_positive_t2(t2)?;
        let t = t2.sqrt();
        let envelope_t = t * (1.0 + t.max(1.0 / t)).ln();
        for &d in d_grid {
            check_dim(d)?;
            let deficit = t - line_value_t2(d, t2)?;
            let ratio = deficit * (1.0 + (d as f64).ln()) / envelope_t;
            best = best.max(ratio);
        }
    }
    Ok(best)
}

/// One term of the rank-one decomposition: a `dim x dim` matrix whose only
/// (possibly zero) entry sits at `(row, col)` with value `sqrt(L[row, col])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinePiece {
    pub dim: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl LinePiece {
    pub fn to_matrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        m.set(self.row, self.col, C64::new(self.value, 0.0));
        m
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0.0
    }
}

/// `L(t)`, the vector `z`, and all `d^2` single-entry pieces for one `(d, t)`.
///
/// Piece `r` (0-based, column-major: `r = row + col * d`) carries
/// `sqrt(L[row, col])` at `(row, col)`; zero-valued pieces are kept in the
/// list so the count is exactly `d^2`, while the iteration helpers skip them.
#[derive(Debug, Clone)]
pub struct LineFamily {
    dim: usize,
    t_squared: f64,
    matrix: CMatrix,
    z: Vec<f64>,
    pieces: Vec<LinePiece>,
}

impl LineFamily {
    pub fn new(d: usize, t: f64) -> Result<Self> {
        check_positive_t(t)?;
        Self::from_t_squared(d, t * t)
    }

    pub fn from_t_squared(d: usize, t2: f64) -> Result<Self> {
        let matrix = line_matrix_t2(d, t2)?;
        let z = SchmidtState::embezzlement(d)?.coeffs().to_vec();
        let mut pieces = Vec::with_capacity(d * d);
        for col in 0..d {
            for row in 0..d {
                pieces.push(LinePiece {
                    dim: d,
                    row,
                    col,
                    value: matrix.get(row, col).re.sqrt(),
                });
            }
        }
        Ok(LineFamily {
            dim: d,
            t_squared: t2,
            matrix,
            z,
            pieces,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t(&self) -> f64 {
        self.t_squared.sqrt()
    }

    pub fn t_squared(&self) -> f64 {
        self.t_squared
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// All `d^2` pieces, zero entries included.
    pub fn pieces(&self) -> &[LinePiece] {
        &self.pieces
    }

    /// Pieces with a nonzero entry, with their index in the full list.
    pub fn nonzero_pieces(&self) -> impl Iterator<Item = (usize, &LinePiece)> {
        self.pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.matrix.get(i, j).re).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.matrix.get(i, j).re).sum())
            .collect()
    }

    /// `sum_r L^r (L^r)^*`: diagonal, entry `(i, i)` the `i`-th row sum.
    pub fn row_gram(&self) -> CMatrix {
        let mut g = CMatrix::zeros(self.dim, self.dim);
        for (_, p) in self.nonzero_pieces() {
            let cur = g.get(p.row, p.row);
            g.set(p.row, p.row, cur + C64::new(p.value * p.value, 0.0));
        }
        g
    }

    /// `sum_r (L^r)^* L^r`: diagonal, entry `(j, j)` the `j`-th column sum.
    pub fn col_gram(&self) -> CMatrix {
        let mut g = CMatrix::zeros(self.dim, self.dim);
        for (_, p) in self.nonzero_pieces() {
            let cur = g.get(p.col, p.col);
            g.set(p.col, p.col, cur + C64::new(p.value * p.value, 0.0));
        }
        g
    }

    /// `sum_r <s, (L^r (x) L^r) s>` contracted through the Schmidt form;
    /// for the embezzlement state this equals `<z, L(t) z>`.
    pub fn embedded_value(&self, state: &SchmidtState) -> Result<f64> {
        if state.dim() != self.dim {
            return Err(Error::DimMismatch {
                context: "LineFamily::embedded_value",
                expected: format!("{}", self.dim),
                got: format!("{}", state.dim()),
            });
        }
        if !state.is_canonical() {
            return Err(Error::InvalidArgument(
                "embedded_value expects a canonical-basis state".into(),
            ));
        }
        let coeffs = state.coeffs();
        let mut sum = 0.0;
        for (_, p) in self.nonzero_pieces() {
            sum += coeffs[p.row] * coeffs[p.col] * p.value * p.value;
        }
        Ok(sum)
    }

    /// `<z, L(t) z>` evaluated on the stored dense matrix.
    pub fn quadratic_form_value(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let l = self.matrix.get(i, j).re;
                if l != 0.0 {
                    sum += self.z[i] * l * self.z[j];
                }
            }
        }
        sum
    }

    /// Total entry mass; equals `min(d, d t^2)` by the interval covering.
    pub fn total_mass(&self) -> f64 {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.matrix.get(i, j).re).sum::<f64>())
            .sum()
    }
}

/// Paths written by [`heatmap_export`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatmapFiles {
    pub pgm: PathBuf,
    pub csv: PathBuf,
}

/// Write a matrix with nonnegative real entries as an 8-bit grayscale PGM
/// (P5, one pixel per entry, max entry mapped to 255) plus a sidecar CSV of
/// the raw entries.
pub fn heatmap_export(m: &CMatrix, stem: &Path) -> Result<HeatmapFiles> {
    let mut max = 0.0f64;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let z = m.get(i, j);
            if z.im != 0.0 || z.re < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "heatmap entries must be nonnegative reals, got {z} at ({i}, {j})"
                )));
            }
            max = max.max(z.re);
        }
    }
    let mut pgm_name = stem.as_os_str().to_owned();
    pgm_name.push(".pgm");
    let pgm_path = PathBuf::from(pgm_name);
    let mut csv_name = stem.as_os_str().to_owned();
    csv_name.push(".csv");
    let csv_path = PathBuf::from(csv_name);

    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    let mut pgm = BufWriter::new(
        File::create(&pgm_path).map_err(|e| Error::io(&pgm_path, e))?,
    );
    write!(pgm, "P5\n{} {}\n255\n", m.cols(), m.rows()).map_err(|e| Error::io(&pgm_path, e))?;
    for i in 0..m.rows() {
        let row: Vec<u8> = (0..m.cols())
            .map(|j| (m.get(i, j).re * scale).round().clamp(0.0, 255.0) as u8)
            .collect();
        pgm.write_all(&row).map_err(|e| Error::io(&pgm_path, e))?;
    }
    pgm.flush().map_err(|e| Error::io(&pgm_path, e))?;

    let mut csv = BufWriter::new(
        File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?,
    );
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format!("{}", m.get(i, j).re)).collect();
        writeln!(csv, "{}", row.join(",")).map_err(|e| Error::io(&csv_path, e))?;
    }
    csv.flush().map_err(|e| Error::io(&csv_path, e))?;

    Ok(HeatmapFiles {
        pgm: pgm_path,
        csv: csv_path,
    })
}

/// Parse a real matrix back from a sidecar CSV.
pub fn read_matrix_csv(path: &Path) -> Result<CMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut entries: Vec<C64> = Vec::new();
    let mut rows = 0usize;
    let mut cols: Option<usize> = None;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| Error::InvalidArgument(format!("bad CSV entry {tok:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::InvalidArgument("ragged CSV rows".into()));
            }
            _ => {}
        }
        entries.extend(row.into_iter().map(|x| C64::new(x, 0.0)));
        rows += 1;
    }
    CMatrix::new(rows, cols.unwrap_or(0), entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent interval-intersection oracle.
    fn oracle_entry(i: usize, j: usize, t2: f64) -> f64 {
        // length of [i-1, i) /\ [(j-1) t^2, j t^2), 1-based
        let a0 = (i - 1) as f64;
        let a1 = i as f64;
        let b0 = (j - 1) as f64 * t2;
        let b1 = j as f64 * t2;
        (a1.min(b1) - a0.max(b0)).max(0.0)
    }

    #[test]
    fn line_matrix_is_identity_at_t_one() {
        for d in [1usize, 2, 7, 32] {
            assert_eq!(line_matrix(d, 1.0).unwrap(), CMatrix::identity(d));
        }
    }

    #[test]
    fn line_matrix_block_pattern_d8_t2_3() {
        let l = line_matrix_t2(8, 3.0).unwrap();
        for i in 0..8usize {
            for j in 0..8usize {
                let expected = match j {
                    0 if i < 3 => 1.0,
                    1 if (3..6).contains(&i) => 1.0,
                    2 if (6..8).contains(&i) => 1.0,
                    _ => 0.0,
                };
                assert_eq!(l.get(i, j).re, expected, "({i},{j})");
            }
        }
    }

    #[test]
    fn line_matrix_small_halft2() {
        // Interval-intersection oracle at d=2, t^2 = 1/2:
        // row 1 splits into two half-length overlaps, row 2 sees nothing
        // (columns only cover [0, 1)).
        let l = line_matrix_t2(2, 0.5).unwrap();
        assert_eq!(l.get(0, 0).re, 0.5);
        assert_eq!(l.get(0, 1).re, 0.5);
        assert_eq!(l.get(1, 0).re, 0.0);
        assert_eq!(l.get(1, 1).re, 0.0);
        for i in 1..=2usize {
            for j in 1..=2usize {
                assert_eq!(l.get(i - 1, j - 1).re, oracle_entry(i, j, 0.5));
            }
        }
    }

    #[test]
    fn line_matrix_matches_oracle_on_grid() {
        for &d in &[1usize, 2, 5, 8, 16] {
            for &t2 in &[0.1f64, 1.0 / 3.0, 0.5, 1.0, 2.4, 3.0, 10.0] {
                let l = line_matrix_t2(d, t2).unwrap();
                for i in 1..=d {
                    for j in 1..=d {
                        assert_eq!(l.get(i - 1, j - 1).re, oracle_entry(i, j, t2));
                    }
                }
            }
        }
    }

    #[test]
    fn row_and_column_sums_bounded() {
        for &d in &[1usize, 3, 8, 32] {
            for &t2 in &[0.1f64, 1.0 / 3.0, 0.5, 1.0, 2.4, 3.0, 10.0] {
                let fam = LineFamily::from_t_squared(d, t2).unwrap();
                for s in fam.row_sums() {
                    assert!(s <= 1.0 + 1e-12);
                }
                for s in fam.col_sums() {
                    assert!(s <= t2 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn total_mass_is_interval_covering() {
        for &d in &[1usize, 2, 8, 33] {
            for &t2 in &[0.1, 0.5, 1.0, 2.4, 10.0] {
                let fam = LineFamily::from_t_squared(d, t2).unwrap();
                let expected = (d as f64).min(d as f64 * t2);
                assert!(
                    (fam.total_mass() - expected).abs() <= 1e-12 * expected.max(1.0),
                    "d={d} t2={t2}: {} vs {expected}",
                    fam.total_mass()
                );
            }
        }
    }

    #[test]
    fn line_value_is_one_at_t_one() {
        for d in [1usize, 2, 10, 100, 4096] {
            assert_eq!(line_value(d, 1.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn line_value_matches_double_sum_oracle() {
        let d = 8;
        let t2 = 3.0;
        let z = SchmidtState::embezzlement(d).unwrap().coeffs().to_vec();
        let l = line_matrix_t2(d, t2).unwrap();
        let mut oracle = 0.0;
        for i in 0..d {
            for j in 0..d {
                oracle += z[i] * l.get(i, j).re * z[j];
            }
        }
        let fast = line_value_t2(d, t2).unwrap();
        assert!((fast - oracle).abs() < 1e-13);
        let t = t2.sqrt();
        assert!(fast > 0.0 && fast <= t + 1e-12);
    }

    #[test]
    fn sandwich_bounds_on_grid() {
        for &d in &[1usize, 2, 8, 64] {
            for &t2 in &[0.1f64, 1.0 / 3.0, 0.5, 1.0, 2.4, 3.0, 10.0] {
                let t = t2.sqrt();
                let lv = line_value_t2(d, t2).unwrap();
                let lb = analytic_lower_bound_t2(d, t2).unwrap();
                assert!(lb <= lv + 1e-10, "d={d} t2={t2}: {lb} > {lv}");
                assert!(lv <= t + 1e-10, "d={d} t2={t2}: {lv} > {t}");
                assert!(lb <= t + 1e-10);
            }
        }
    }

    #[test]
    fn analytic_lower_bound_at_t_one() {
        for d in [1usize, 5, 100] {
            let expected = ((d as f64) + 1.0).ln() / harmonic_number(d);
            let got = analytic_lower_bound(d, 1.0).unwrap();
            assert!((got - expected).abs() < 1e-13);
            assert!(got <= 1.0 + 1e-13);
        }
    }

    #[test]
    fn line_value_approaches_t() {
        let t2 = 3.0f64;
        let t = t2.sqrt();
        let mut prev_deficit = f64::INFINITY;
        for k in [3usize, 5, 7, 9, 11] {
            let lv = line_value_t2(1 << k, t2).unwrap();
            let deficit = t - lv;
            assert!(deficit >= -1e-12);
            assert!(deficit < prev_deficit);
            prev_deficit = deficit;
        }
    }

    #[test]
    fn pieces_enumeration_and_placement() {
        let d = 5;
        let fam = LineFamily::from_t_squared(d, 2.4).unwrap();
        assert_eq!(fam.pieces().len(), d * d);
        for (r, p) in fam.pieces().iter().enumerate() {
            assert_eq!(r, p.row + p.col * d);
            let expected = fam.matrix().get(p.row, p.col).re.sqrt();
            assert_eq!(p.value, expected);
        }
    }

    #[test]
    fn pieces_at_t_one_are_diagonal_units() {
        let d = 4;
        let fam = LineFamily::from_t_squared(d, 1.0).unwrap();
        for (_, p) in fam.nonzero_pieces() {
            assert_eq!(p.row, p.col);
            assert_eq!(p.value, 1.0);
        }
        assert_eq!(fam.row_gram(), CMatrix::identity(d));
        assert_eq!(fam.col_gram(), CMatrix::identity(d));
    }

    #[test]
    fn grams_match_matrix_products() {
        let d = 6;
        let fam = LineFamily::from_t_squared(d, 2.4).unwrap();
        let mut row_dense = CMatrix::zeros(d, d);
        let mut col_dense = CMatrix::zeros(d, d);
        for p in fam.pieces() {
            let m = p.to_matrix();
            row_dense.add_assign(&m.matmul(&m.adjoint()).unwrap()).unwrap();
            col_dense.add_assign(&m.adjoint().matmul(&m).unwrap()).unwrap();
        }
        assert!(fam.row_gram().sub(&row_dense).unwrap().max_abs() < 1e-14);
        assert!(fam.col_gram().sub(&col_dense).unwrap().max_abs() < 1e-14);
        // Diagonal entries are exactly the row/column sums.
        for (i, s) in fam.row_sums().iter().enumerate() {
            assert!((fam.row_gram().get(i, i).re - s).abs() < 1e-13);
        }
        for (j, s) in fam.col_sums().iter().enumerate() {
            assert!((fam.col_gram().get(j, j).re - s).abs() < 1e-13);
        }
    }

    #[test]
    fn lemma_operator_bounds() {
        for &d in &[1usize, 4, 16] {
            for &t2 in &[0.1, 1.0, 3.0] {
                let fam = LineFamily::from_t_squared(d, t2).unwrap();
                let id = CMatrix::identity(d);
                let slack_row = id.sub(&fam.row_gram()).unwrap().min_eigenvalue().unwrap();
                let slack_col = id
                    .scale_real(t2)
                    .sub(&fam.col_gram())
                    .unwrap()
                    .min_eigenvalue()
                    .unwrap();
                assert!(slack_row >= -1e-10);
                assert!(slack_col >= -1e-10);
            }
        }
    }

    #[test]
    fn embedded_value_equals_quadratic_form() {
        for &d in &[2usize, 8, 32] {
            for &t2 in &[0.5, 1.0, 2.4] {
                let fam = LineFamily::from_t_squared(d, t2).unwrap();
                let phi = SchmidtState::embezzlement(d).unwrap();
                let through_state = fam.embedded_value(&phi).unwrap();
                let quad = fam.quadratic_form_value();
                assert!((through_state - quad).abs() < 1e-12);
                // and both agree with the banded sweep
                assert!((quad - line_value_t2(d, t2).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn embedded_value_matches_state_form_value_on_dense_pieces() {
        let d = 6;
        let fam = LineFamily::from_t_squared(d, 2.4).unwrap();
        let phi = SchmidtState::embezzlement(d).unwrap();
        let mut slow = 0.0;
        for p in fam.pieces() {
            let m = p.to_matrix();
            slow += phi.form_value(&m, &m).unwrap().re;
        }
        assert!((fam.embedded_value(&phi).unwrap() - slow).abs() < 1e-13);
    }

    #[test]
    fn fit_constant_basics() {
        // deficit is exactly zero at t = 1
        assert_eq!(fit_constant(&[1.0], &[2, 16, 128]).unwrap(), 0.0);

        let c1 = fit_constant(&[3.0f64.sqrt()], &[8, 64, 512]).unwrap();
        assert!(c1 > 0.0 && c1.is_finite());

        // enlarging the grid never decreases the fit
        let c2 = fit_constant(&[3.0f64.sqrt(), 0.5], &[8, 64, 512, 1024]).unwrap();
        assert!(c2 >= c1);

        // raising the minimum dimension does not increase the fit
        let c3 = fit_constant(&[3.0f64.sqrt()], &[64, 512]).unwrap();
        assert!(c3 <= c1 + 1e-12);

        assert!(fit_constant(&[], &[8]).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(line_matrix(4, 0.0).is_err());
        assert!(line_matrix(4, -1.0).is_err());
        assert!(line_matrix(0, 1.0).is_err());
        assert!(line_value(0, 1.0).is_err());
        assert!(analytic_lower_bound(4, -0.5).is_err());
    }

    #[test]
    fn heatmap_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let l = line_matrix_t2(8, 3.0).unwrap();
        let files = heatmap_export(&l, &dir.path().join("line_t2_3")).unwrap();
        let back = read_matrix_csv(&files.csv).unwrap();
        assert_eq!(l, back);

        let pgm = std::fs::read(&files.pgm).unwrap();
        assert!(pgm.starts_with(b"P5\n8 8\n255\n"));
        assert_eq!(pgm.len(), b"P5\n8 8\n255\n".len() + 64);
        // max entry 1 maps to 255, zeros stay 0
        let body = &pgm[b"P5\n8 8\n255\n".len()..];
        assert_eq!(body[0], 255);
        assert_eq!(body[1], 0);
    }

    #[test]
    fn heatmap_identity_pattern() {
        let dir = tempfile::tempdir().unwrap();
        let files = heatmap_export(&CMatrix::identity(8), &dir.path().join("id8")).unwrap();
        let pgm = std::fs::read(&files.pgm).unwrap();
        let body = &pgm[b"P5\n8 8\n255\n".len()..];
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(body[i * 8 + j], if i == j { 255 } else { 0 });
            }
        }
    }

    #[test]
    fn heatmap_rejects_complex_entries() {
        let dir = tempfile::tempdir().unwrap();
        let m = CMatrix::new(1, 1, vec![C64::new(0.0, 1.0)]).unwrap();
        assert!(heatmap_export(&m, &dir.path().join("bad")).is_err());
    }
}
