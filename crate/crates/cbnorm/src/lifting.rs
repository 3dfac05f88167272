//! Witness sequences, the constraint they must satisfy, the line-matrix
//! lifting and its verification, truncation of extreme weights, and the
//! witness extracted from an amplified pairing.
//!
//! The lifting sends a weighted witness `(x_i, y_i, t_i)` to the sequences
//! `x_i (x) L^r(t_i)` and `t_i^{-1} y_i (x) L^r(t_i)`. Elements whose piece
//! vanishes contribute nothing and are dropped, so costs scale with the
//! number of nonzero line-matrix entries. Lifted elements are kept in
//! factored form (base times single-entry piece); dense matrices are
//! materialized on demand.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::FormTensor;
use crate::lines::{LineFamily, LinePiece};
use crate::numerics::{c64_serde, C64, CMatrix};
use crate::states::SchmidtState;
use crate::tol;

/// Finite sequence `(x_i, y_i, t_i)` with all `x_i` square of one size, all
/// `y_i` square of one size, and strictly positive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WitnessWire", into = "WitnessWire")]
pub struct WitnessSequence {
    xs: Vec<CMatrix>,
    ys: Vec<CMatrix>,
    ts: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WitnessWire {
    xs: Vec<CMatrix>,
    ys: Vec<CMatrix>,
    ts: Vec<f64>,
}

impl From<WitnessSequence> for WitnessWire {
    fn from(w: WitnessSequence) -> Self {
        WitnessWire {
            xs: w.xs,
            ys: w.ys,
            ts: w.ts,
        }
    }
}

impl TryFrom<WitnessWire> for WitnessSequence {
    type Error = Error;

    fn try_from(w: WitnessWire) -> Result<Self> {
        WitnessSequence::new(w.xs, w.ys, w.ts)
    }
}

impl WitnessSequence {
    pub fn new(xs: Vec<CMatrix>, ys: Vec<CMatrix>, ts: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() != ts.len() {
            return Err(Error::DimMismatch {
                context: "WitnessSequence::new",
                expected: format!("three lists of equal length"),
                got: format!("{}, {}, {}", xs.len(), ys.len(), ts.len()),
            });
        }
        if ts.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidArgument(
                "witness weights must be strictly positive reals".into(),
            ));
        }
        for (name, list) in [("xs", &xs), ("ys", &ys)] {
            if let Some(first) = list.first() {
                if !first.is_square() {
                    return Err(Error::NotSquare {
                        rows: first.rows(),
                        cols: first.cols(),
                    });
                }
                if list.iter().any(|m| m.rows() != first.rows() || !m.is_square()) {
                    return Err(Error::DimMismatch {
                        context: "WitnessSequence::new",
                        expected: format!("all {name} of size {0}x{0}", first.rows()),
                        got: "inconsistent sizes".into(),
                    });
                }
            }
        }
        Ok(WitnessSequence { xs, ys, ts })
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    pub fn xs(&self) -> &[CMatrix] {
        &self.xs
    }

    pub fn ys(&self) -> &[CMatrix] {
        &self.ys
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn x_dim(&self) -> Option<usize> {
        self.xs.first().map(|m| m.rows())
    }

    pub fn y_dim(&self) -> Option<usize> {
        self.ys.first().map(|m| m.rows())
    }

    /// `max_i max(t_i, 1/t_i)`.
    pub fn max_weight_extreme(&self) -> f64 {
        self.ts
            .iter()
            .map(|&t| t.max(1.0 / t))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Restriction to the given indices.
    pub fn select(&self, indices: &[usize]) -> Result<WitnessSequence> {
        let xs = indices.iter().map(|&i| self.xs[i].clone()).collect();
        let ys = indices.iter().map(|&i| self.ys[i].clone()).collect();
        let ts = indices.iter().map(|&i| self.ts[i]).collect();
        WitnessSequence::new(xs, ys, ts)
    }
}

/// Which constraint the suprema range over: the additive one or the looser
/// square-rooted one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintFlavor {
    Standard,
    Loose,
}

/// Defect report for a witness sequence: the four basic norms, the two
/// combined side values, and the violation above the budget of 2.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub flavor: ConstraintFlavor,
    /// `||sum x_i x_i*||`
    pub norm_x_row: f64,
    /// `||sum t_i^2 x_i* x_i||`
    pub norm_x_col: f64,
    /// `||sum t_i^{-2} y_i y_i*||`
    pub norm_y_row: f64,
    /// `||sum y_i* y_i||`
    pub norm_y_col: f64,
    pub x_value: f64,
    pub y_value: f64,
    pub violation: f64,
}

/// Evaluate the four constraint norms of a witness and the violation of the
/// selected flavor.
pub fn check_constraint(w: &WitnessSequence, flavor: ConstraintFlavor) -> Result<ConstraintReport> {
    if w.is_empty() {
        return Err(Error::Precondition(
            "check_constraint needs a nonempty sequence".into(),
        ));
    }
    let n = w.x_dim().unwrap();
    let m = w.y_dim().unwrap();
    let mut x_row = CMatrix::zeros(n, n);
    let mut x_col = CMatrix::zeros(n, n);
    let mut y_row = CMatrix::zeros(m, m);
    let mut y_col = CMatrix::zeros(m, m);
    for i in 0..w.len() {
        let t = w.ts[i];
        let x = &w.xs[i];
        let y = &w.ys[i];
        x_row.add_assign(&x.matmul(&x.adjoint())?)?;
        x_col.add_scaled(C64::new(t * t, 0.0), &x.adjoint().matmul(x)?)?;
        y_row.add_scaled(C64::new(1.0 / (t * t), 0.0), &y.matmul(&y.adjoint())?)?;
        y_col.add_assign(&y.adjoint().matmul(y)?)?;
    }
    let norm_x_row = x_row.op_norm();
    let norm_x_col = x_col.op_norm();
    let norm_y_row = y_row.op_norm();
    let norm_y_col = y_col.op_norm();
    let (x_value, y_value) = match flavor {
        ConstraintFlavor::Standard => (norm_x_row + norm_x_col, norm_y_row + norm_y_col),
        ConstraintFlavor::Loose => (
            norm_x_row.sqrt() + norm_x_col.sqrt(),
            norm_y_row.sqrt() + norm_y_col.sqrt(),
        ),
    };
    Ok(ConstraintReport {
        flavor,
        norm_x_row,
        norm_x_col,
        norm_y_row,
        norm_y_col,
        x_value,
        y_value,
        violation: (x_value.max(y_value) - 2.0).max(0.0),
    })
}

/// One lifted operator `base (x) piece`, kept factored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiftedElement {
    /// `x_i` (or `t_i^{-1} y_i` on the y side).
    pub base: CMatrix,
    /// Single-entry line-matrix piece.
    pub piece: LinePiece,
}

impl LiftedElement {
    /// Materialize the full `(n d) x (n d)` matrix.
    pub fn dense(&self) -> CMatrix {
        self.base.kron(&self.piece.to_matrix())
    }
}

/// The lifted witness: factored elements, their `(witness, piece)` index
/// map, the embezzlement state pairing them, and the per-index line
/// families.
#[derive(Debug, Clone)]
pub struct LiftResult {
    pub xs_lifted: Vec<LiftedElement>,
    pub ys_lifted: Vec<LiftedElement>,
    pub d: usize,
    pub state: SchmidtState,
    /// `(i, r)`: witness index and piece index (`r = row + col * d`).
    pub index_map: Vec<(usize, usize)>,
    families: Vec<LineFamily>,
}

impl LiftResult {
    pub fn families(&self) -> &[LineFamily] {
        &self.families
    }

    /// Dense lifted sequences; intended for small `d` cross-checks.
    pub fn dense_pairs(&self) -> Vec<(CMatrix, CMatrix)> {
        self.xs_lifted
            .iter()
            .zip(&self.ys_lifted)
            .map(|(x, y)| (x.dense(), y.dense()))
            .collect()
    }
}

/// Lift a witness through the line families at dimension `d`:
/// `x_{i,r} = x_i (x) L^r(t_i)`, `y_{i,r} = t_i^{-1} y_i (x) L^r(t_i)`,
/// keeping only pieces with a nonzero entry.
pub fn lift(w: &WitnessSequence, d: usize) -> Result<LiftResult> {
    if w.is_empty() {
        return Err(Error::Precondition("lift needs a nonempty witness".into()));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("d must be positive".into()));
    }
    let state = SchmidtState::embezzlement(d)?;
    let mut xs_lifted = Vec::new();
    let mut ys_lifted = Vec::new();
    let mut index_map = Vec::new();
    let mut families = Vec::with_capacity(w.len());
    for i in 0..w.len() {
        let t = w.ts[i];
        let family = LineFamily::new(d, t)?;
        let y_scaled = w.ys[i].scale_real(1.0 / t);
        for (r, piece) in family.nonzero_pieces() {
            xs_lifted.push(LiftedElement {
                base: w.xs[i].clone(),
                piece: *piece,
            });
            ys_lifted.push(LiftedElement {
                base: y_scaled.clone(),
                piece: *piece,
            });
            index_map.push((i, r));
        }
        families.push(family);
    }
    Ok(LiftResult {
        xs_lifted,
        ys_lifted,
        d,
        state,
        index_map,
        families,
    })
}

/// `sum_j e_j e_j*` (or `sum_j e_j* e_j`) over factored lifted elements,
/// as the `d` diagonal blocks of the inner tensor grading.
///
/// For `e = b (x) p` with `p` carrying a single entry `v` at `(row, col)`,
/// `e e* = v^2 (b b*) (x) E_{row,row}`, so the sum is block-diagonal with
/// respect to the inner index and block `a` collects the base Grams of all
/// pieces with `row == a` (respectively `col == a` for the adjoint-first
/// order). The operator norm of the sum is the max over block norms;
/// the dense route is cross-checked in tests.
fn lifted_gram_blocks(elems: &[LiftedElement], adjoint_first: bool, d: usize) -> Result<Vec<CMatrix>> {
    let n = match elems.first() {
        Some(e) => e.base.rows(),
        None => return Ok(Vec::new()),
    };
    let mut blocks = vec![CMatrix::zeros(n, n); d];
    for e in elems {
        let v2 = e.piece.value * e.piece.value;
        if v2 == 0.0 {
            continue;
        }
        let (gram, slot) = if adjoint_first {
            (e.base.adjoint().matmul(&e.base)?, e.piece.col)
        } else {
            (e.base.matmul(&e.base.adjoint())?, e.piece.row)
        };
        blocks[slot].add_scaled(C64::new(v2, 0.0), &gram)?;
    }
    Ok(blocks)
}

fn max_block_norm(blocks: &[CMatrix]) -> f64 {
    blocks
        .iter()
        .map(|b| b.op_norm())
        .fold(0.0, f64::max)
}

/// One side of an operator-norm comparison: lifted vs original with slack.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormComparison {
    pub lifted: f64,
    pub original: f64,
    /// `original - lifted`; nonnegative up to rounding when the bound holds.
    pub slack: f64,
}

impl NormComparison {
    fn new(lifted: f64, original: f64) -> Self {
        NormComparison {
            lifted,
            original,
            slack: original - lifted,
        }
    }
}

/// Full verification report for one lifted witness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiftReport {
    pub d: usize,
    /// `||sum x~ x~*|| <= ||sum x x*||`
    pub x_row: NormComparison,
    /// `||sum x~* x~|| <= ||sum t^2 x* x||`
    pub x_col: NormComparison,
    /// `||sum y~ y~*|| <= ||sum t^{-2} y y*||`
    pub y_row: NormComparison,
    /// `||sum y~* y~|| <= ||sum y* y||`
    pub y_col: NormComparison,
    pub min_slack: f64,
    /// `V = sum_j (u (x) phi)(x~_j, y~_j)`.
    #[serde(with = "c64_serde")]
    pub lifted_value: C64,
    /// `sum_i t_i^{-1} u(x_i, y_i) <z, L(t_i) z>`.
    #[serde(with = "c64_serde")]
    pub identity_value: C64,
    pub identity_rel_err: f64,
    /// `sum_i u(x_i, y_i)`.
    #[serde(with = "c64_serde")]
    pub original_value: C64,
    pub original_abs_sum: f64,
    /// `|sum u(x_i, y_i)| - |V|`.
    pub value_deficit: f64,
    /// `max_i deficit(d, t_i) * sum |u(x_i, y_i)|` from the measured line
    /// values; bounds `value_deficit` without assuming a universal constant.
    pub deficit_bound: f64,
    pub max_line_deficit: f64,
}

/// Verify a lifted witness against its source: the four operator-norm
/// comparisons, the lifted value, and the exact value identity.
pub fn verify_lift(u: &FormTensor, w: &WitnessSequence, lr: &LiftResult) -> Result<LiftReport> {
    if lr.families.len() != w.len() {
        return Err(Error::DimMismatch {
            context: "verify_lift",
            expected: format!("{} families", w.len()),
            got: format!("{}", lr.families.len()),
        });
    }
    let base = check_constraint(w, ConstraintFlavor::Standard)?;

    let lifted_x_row = max_block_norm(&lifted_gram_blocks(&lr.xs_lifted, false, lr.d)?);
    let lifted_x_col = max_block_norm(&lifted_gram_blocks(&lr.xs_lifted, true, lr.d)?);
    let lifted_y_row = max_block_norm(&lifted_gram_blocks(&lr.ys_lifted, false, lr.d)?);
    let lifted_y_col = max_block_norm(&lifted_gram_blocks(&lr.ys_lifted, true, lr.d)?);

    let x_row = NormComparison::new(lifted_x_row, base.norm_x_row);
    let x_col = NormComparison::new(lifted_x_col, base.norm_x_col);
    let y_row = NormComparison::new(lifted_y_row, base.norm_y_row);
    let y_col = NormComparison::new(lifted_y_col, base.norm_y_col);
    let min_slack = x_row
        .slack
        .min(x_col.slack)
        .min(y_row.slack)
        .min(y_col.slack);

    // Per-witness evaluations and line values.
    let evals: Vec<C64> = (0..w.len())
        .map(|i| u.evaluate(&w.xs[i], &w.ys[i]))
        .collect::<Result<_>>()?;
    let coeffs = lr.state.coeffs();

    // V = sum over lifted pairs of u(x_i, t_i^{-1} y_i) <Phi, (L^r (x) L^r) Phi>.
    let mut lifted_value = C64::new(0.0, 0.0);
    for (j, &(i, r)) in lr.index_map.iter().enumerate() {
        let piece = &lr.xs_lifted[j].piece;
        debug_assert_eq!(r, piece.row + piece.col * lr.d);
        let weight = coeffs[piece.row] * coeffs[piece.col] * piece.value * piece.value;
        lifted_value += evals[i] / w.ts[i] * weight;
    }

    // Identity route: quadratic form of the dense line matrix.
    let mut identity_value = C64::new(0.0, 0.0);
    let mut max_line_deficit = 0.0f64;
    for i in 0..w.len() {
        let line_val = lr.families[i].quadratic_form_value();
        identity_value += evals[i] / w.ts[i] * line_val;
        max_line_deficit = max_line_deficit.max(((w.ts[i] - line_val) / w.ts[i]).max(0.0));
    }
    let identity_rel_err =
        (lifted_value - identity_value).norm() / identity_value.norm().max(f64::MIN_POSITIVE);

    let original_value: C64 = evals.iter().sum();
    let original_abs_sum: f64 = evals.iter().map(|z| z.norm()).sum();
    let value_deficit = original_value.norm() - lifted_value.norm();
    let deficit_bound = max_line_deficit * original_abs_sum;

    Ok(LiftReport {
        d: lr.d,
        x_row,
        x_col,
        y_row,
        y_col,
        min_slack,
        lifted_value,
        identity_value,
        identity_rel_err,
        original_value,
        original_abs_sum,
        value_deficit,
        deficit_bound,
        max_line_deficit,
    })
}

/// Truncation of extreme weights per the threshold `T = 8 eta_E eta_F / eps`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncationReport {
    pub threshold: f64,
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
    /// The dropped pairs rescaled to an unweighted feasible sequence
    /// (`x_i -> T x_i / (2 eta_E)` or `x_i / (2 eta_E)` depending on which
    /// weight was extreme; `t_i = 1`). Empty when nothing was dropped.
    pub rescaled_dropped: Option<WitnessSequence>,
    /// `sum_dropped u(x_i, y_i) = value_scale * sum u` over the rescaled
    /// pairs, for any bilinear form `u`; equals `eps / 2`.
    pub value_scale: f64,
}

/// Drop witness elements whose weight or inverse weight reaches
/// `T = 8 eta_E eta_F / eps`. The remaining sequence stays feasible and the
/// dropped part is reported through the rescaled sequences whose value is a
/// fraction `value_scale` of the dropped value.
pub fn truncate(
    w: &WitnessSequence,
    eta_e: f64,
    eta_f: f64,
    eps: f64,
) -> Result<(WitnessSequence, TruncationReport)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eps must lie in (0,1), got {eps}"
        )));
    }
    if eta_e < 1.0 || eta_f < 1.0 {
        return Err(Error::InvalidArgument(
            "eta bounds must be at least 1".into(),
        ));
    }
    let base = check_constraint(w, ConstraintFlavor::Standard)?;
    if base.violation > 1e-10 {
        return Err(Error::Precondition(format!(
            "witness violates the constraint by {:e}",
            base.violation
        )));
    }
    let threshold = 8.0 * eta_e * eta_f / eps;
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut resc_xs = Vec::new();
    let mut resc_ys = Vec::new();
    for i in 0..w.len() {
        let t = w.ts[i];
        if t >= threshold {
            dropped.push(i);
            resc_xs.push(w.xs[i].scale_real(threshold / (2.0 * eta_e)));
            resc_ys.push(w.ys[i].scale_real(1.0 / (2.0 * eta_f)));
        } else if 1.0 / t >= threshold {
            dropped.push(i);
            resc_xs.push(w.xs[i].scale_real(1.0 / (2.0 * eta_e)));
            resc_ys.push(w.ys[i].scale_real(threshold / (2.0 * eta_f)));
        } else {
            kept.push(i);
        }
    }
    let rescaled_dropped = if dropped.is_empty() {
        None
    } else {
        Some(WitnessSequence::new(
            resc_xs,
            resc_ys,
            vec![1.0; dropped.len()],
        )?)
    };
    let report = TruncationReport {
        threshold,
        kept: kept.clone(),
        dropped,
        rescaled_dropped,
        value_scale: 4.0 * eta_e * eta_f / threshold,
    };
    Ok((w.select(&kept)?, report))
}

/// Random witness on the standard constraint boundary: Gaussian matrices,
/// log-uniform weights in `[e^{-t_spread}, e^{t_spread}]`, rescaled exactly
/// onto `x_value = y_value = 2`.
pub fn random_feasible_witness(
    n: usize,
    m: usize,
    length: usize,
    t_spread: f64,
    seed: u64,
) -> Result<WitnessSequence> {
    if n == 0 || m == 0 || length == 0 {
        return Err(Error::InvalidArgument(
            "witness dimensions and length must be positive".into(),
        ));
    }
    let mut rng = crate::rng::rng_from_seed(seed);
    let xs: Vec<CMatrix> = (0..length)
        .map(|_| crate::rng::gaussian_complex_matrix(&mut rng, n, n, 1.0))
        .collect();
    let ys: Vec<CMatrix> = (0..length)
        .map(|_| crate::rng::gaussian_complex_matrix(&mut rng, m, m, 1.0))
        .collect();
    let ts: Vec<f64> = (0..length)
        .map(|_| ((2.0 * crate::rng::uniform_f64(&mut rng) - 1.0) * t_spread).exp())
        .collect();
    rescale_to_boundary(WitnessSequence::new(xs, ys, ts)?)
}

/// Rescale a witness exactly onto the standard constraint boundary.
pub fn rescale_to_boundary(w: WitnessSequence) -> Result<WitnessSequence> {
    let rep = check_constraint(&w, ConstraintFlavor::Standard)?;
    if rep.x_value == 0.0 || rep.y_value == 0.0 {
        return Err(Error::InvalidArgument(
            "cannot rescale a zero witness onto the constraint boundary".into(),
        ));
    }
    let sx = (rep.x_value / 2.0).sqrt();
    let sy = (rep.y_value / 2.0).sqrt();
    let xs = w.xs.iter().map(|x| x.scale_real(1.0 / sx)).collect();
    let ys = w.ys.iter().map(|y| y.scale_real(1.0 / sy)).collect();
    WitnessSequence::new(xs, ys, w.ts)
}

/// Build the witness realizing an amplified pairing value
/// `<Omega, u_d(a, b) Omega'>` as `sum u(x_{ij}, y_{ij})` with weights
/// `t_{ij} = mu_j / lambda_i` from the Schmidt data. Coefficients below the
/// cutoff are skipped (the construction divides by them).
pub fn witness_from_amplification(
    u: &FormTensor,
    a: &CMatrix,
    b: &CMatrix,
    omega: &SchmidtState,
    omega_p: &SchmidtState,
) -> Result<WitnessSequence> {
    let d = omega.dim();
    if omega_p.dim() != d {
        return Err(Error::DimMismatch {
            context: "witness_from_amplification states",
            expected: format!("{d}"),
            got: format!("{}", omega_p.dim()),
        });
    }
    let n = u.n();
    let m = u.m();
    if a.rows() != n * d || a.cols() != n * d {
        return Err(Error::DimMismatch {
            context: "witness_from_amplification (a)",
            expected: format!("{0}x{0}", n * d),
            got: format!("{}x{}", a.rows(), a.cols()),
        });
    }
    if b.rows() != m * d || b.cols() != m * d {
        return Err(Error::DimMismatch {
            context: "witness_from_amplification (b)",
            expected: format!("{0}x{0}", m * d),
            got: format!("{}x{}", b.rows(), b.cols()),
        });
    }
    for (name, mat) in [("a", a), ("b", b)] {
        let norm = mat.op_norm();
        if norm > 1.0 + 1e-10 {
            return Err(Error::Precondition(format!(
                "||{name}|| = {norm} exceeds 1"
            )));
        }
    }

    // Basis columns; canonical when absent.
    let omega_left = basis_columns(omega, true);
    let omega_right = basis_columns(omega, false);
    let omegap_left = basis_columns(omega_p, true);
    let omegap_right = basis_columns(omega_p, false);

    let lambdas = omega.coeffs();
    let mus = omega_p.coeffs();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ts = Vec::new();
    for (i, &lambda) in lambdas.iter().enumerate() {
        if lambda < tol::SCHMIDT_CUTOFF {
            continue;
        }
        for (j, &mu) in mus.iter().enumerate() {
            if mu < tol::SCHMIDT_CUTOFF {
                continue;
            }
            // x_{ij} = lambda_i (Id (x) <e_i|) a (Id (x) |g_j>)
            let x = contract_inner_leg(a, n, d, &omega_left[i], &omegap_left[j])?
                .scale_real(lambda);
            // y_{ij} = mu_j (Id (x) <f_i|) b (Id (x) |h_j>)
            let y = contract_inner_leg(b, m, d, &omega_right[i], &omegap_right[j])?
                .scale_real(mu);
            xs.push(x);
            ys.push(y);
            ts.push(mu / lambda);
        }
    }
    WitnessSequence::new(xs, ys, ts)
}

fn basis_columns(state: &SchmidtState, left: bool) -> Vec<Vec<C64>> {
    let d = state.dim();
    let basis = if left {
        state_basis_matrix(state, true)
    } else {
        state_basis_matrix(state, false)
    };
    match basis {
        Some(mat) => (0..d)
            .map(|col| (0..d).map(|row| mat.get(row, col)).collect())
            .collect(),
        None => (0..d)
            .map(|col| {
                (0..d)
                    .map(|row| {
                        if row == col {
                            C64::new(1.0, 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    })
                    .collect()
            })
            .collect(),
    }
}

fn state_basis_matrix(state: &SchmidtState, left: bool) -> Option<CMatrix> {
    if state.is_canonical() {
        None
    } else {
        // non-canonical states expose their bases through to_matrix algebra;
        // rebuild columns from the serialized form
        let json = serde_json::to_value(state).ok()?;
        let key = if left { "left_basis" } else { "right_basis" };
        json.get(key)
            .cloned()
            .and_then(|v| serde_json::from_value(v).ok())
    }
}

/// `(Id (x) <left|) M (Id (x) |right>)`: contract the inner `d`-leg of an
/// `(n d) x (n d)` matrix against two vectors.
fn contract_inner_leg(
    m: &CMatrix,
    n: usize,
    d: usize,
    left: &[C64],
    right: &[C64],
) -> Result<CMatrix> {
    let mut out = CMatrix::zeros(n, n);
    for s in 0..n {
        for t in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d {
                let lk = left[k].conj();
                if lk == C64::new(0.0, 0.0) {
                    continue;
                }
                for l in 0..d {
                    let r = right[l];
                    if r == C64::new(0.0, 0.0) {
                        continue;
                    }
                    acc += lk * m.get(s * d + k, t * d + l) * r;
                }
            }
            out.set(s, t, acc);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_complex_matrix, rng_from_seed};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scalar_witness(x: f64, y: f64, t: f64) -> WitnessSequence {
        WitnessSequence::new(
            vec![CMatrix::new(1, 1, vec![c(x, 0.0)]).unwrap()],
            vec![CMatrix::new(1, 1, vec![c(y, 0.0)]).unwrap()],
            vec![t],
        )
        .unwrap()
    }

    fn random_witness(n: usize, m: usize, len: usize, seed: u64) -> WitnessSequence {
        let mut rng = rng_from_seed(seed);
        let xs: Vec<CMatrix> = (0..len)
            .map(|_| gaussian_complex_matrix(&mut rng, n, n, 1.0))
            .collect();
        let ys: Vec<CMatrix> = (0..len)
            .map(|_| gaussian_complex_matrix(&mut rng, m, m, 1.0))
            .collect();
        let ts: Vec<f64> = (0..len)
            .map(|_| (2.0 * crate::rng::uniform_f64(&mut rng) - 1.0).exp())
            .collect();
        normalized(xs, ys, ts)
    }

    /// Rescale a raw witness onto the standard constraint boundary.
    fn normalized(xs: Vec<CMatrix>, ys: Vec<CMatrix>, ts: Vec<f64>) -> WitnessSequence {
        let w = WitnessSequence::new(xs, ys, ts).unwrap();
        let rep = check_constraint(&w, ConstraintFlavor::Standard).unwrap();
        let sx = (rep.x_value / 2.0).sqrt();
        let sy = (rep.y_value / 2.0).sqrt();
        let xs = w.xs().iter().map(|x| x.scale_real(1.0 / sx)).collect();
        let ys = w.ys().iter().map(|y| y.scale_real(1.0 / sy)).collect();
        WitnessSequence::new(xs, ys, w.ts().to_vec()).unwrap()
    }

    #[test]
    fn constraint_on_scalar_identity_witness() {
        let w = scalar_witness(1.0, 1.0, 1.0);
        let rep = check_constraint(&w, ConstraintFlavor::Standard).unwrap();
        assert_eq!(rep.x_value, 2.0);
        assert_eq!(rep.y_value, 2.0);
        assert_eq!(rep.violation, 0.0);
    }

    #[test]
    fn constraint_scaling_homogeneity() {
        let w = scalar_witness(2.0f64.sqrt(), 1.0, 1.0);
        let rep = check_constraint(&w, ConstraintFlavor::Standard).unwrap();
        assert!((rep.x_value - 4.0).abs() < 1e-12);
        assert!((rep.violation - 2.0).abs() < 1e-12);
    }

    #[test]
    fn standard_feasible_implies_loose_feasible() {
        for seed in 0..20 {
            let w = random_witness(2, 2, 3, 500 + seed);
            let std = check_constraint(&w, ConstraintFlavor::Standard).unwrap();
            assert!(std.violation <= 1e-12, "projection is exact");
            let loose = check_constraint(&w, ConstraintFlavor::Loose).unwrap();
            assert!(
                loose.violation <= 1e-12,
                "a + b <= 2 forces sqrt(a) + sqrt(b) <= 2: {loose:?}"
            );
        }
    }

    #[test]
    fn lift_at_t_one_d_one_is_identity() {
        let w = scalar_witness(0.9, 0.8, 1.0);
        let lr = lift(&w, 1).unwrap();
        assert_eq!(lr.xs_lifted.len(), 1);
        let x = lr.xs_lifted[0].dense();
        assert!((x.get(0, 0) - c(0.9, 0.0)).norm() < 1e-15);
        let y = lr.ys_lifted[0].dense();
        assert!((y.get(0, 0) - c(0.8, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn lift_piece_count_matches_nnz() {
        // exact t^2 = 3 has 8 nonzero entries at d = 8
        let fam = crate::lines::LineFamily::from_t_squared(8, 3.0).unwrap();
        assert_eq!(fam.nonzero_pieces().count(), 8);
        // the lift keeps exactly the nonzero entries of its own L(t)
        let t = 3.0f64.sqrt();
        let w = scalar_witness(1.0, 1.0, t);
        let lr = lift(&w, 8).unwrap();
        let nnz = (0..8usize)
            .flat_map(|i| (0..8usize).map(move |j| (i, j)))
            .filter(|&(i, j)| crate::lines::line_matrix(8, t).unwrap().get(i, j).re != 0.0)
            .count();
        assert_eq!(lr.xs_lifted.len(), nnz);
        // rounding of t*t can only add vanishing slivers beyond the 8
        assert!((8..=10).contains(&nnz));
    }

    #[test]
    fn lifted_gram_blocks_match_dense_assembly() {
        let w = random_witness(2, 3, 2, 901);
        let d = 6;
        let lr = lift(&w, d).unwrap();
        for (elems, adjoint_first) in [
            (&lr.xs_lifted, false),
            (&lr.xs_lifted, true),
            (&lr.ys_lifted, false),
            (&lr.ys_lifted, true),
        ] {
            let n = elems[0].base.rows();
            let mut dense_sum = CMatrix::zeros(n * d, n * d);
            for e in elems {
                let m = e.dense();
                let term = if adjoint_first {
                    m.adjoint().matmul(&m).unwrap()
                } else {
                    m.matmul(&m.adjoint()).unwrap()
                };
                dense_sum.add_assign(&term).unwrap();
            }
            let blocks = lifted_gram_blocks(elems, adjoint_first, d).unwrap();
            let fast = max_block_norm(&blocks);
            let slow = dense_sum.op_norm();
            assert!(
                (fast - slow).abs() < 1e-10 * slow.max(1.0),
                "adjoint_first={adjoint_first}: {fast} vs {slow}"
            );
        }
    }

    #[test]
    fn verify_lift_identity_witness() {
        let u = FormTensor::scalar();
        let w = scalar_witness(1.0, 1.0, 1.0);
        let lr = lift(&w, 4).unwrap();
        let rep = verify_lift(&u, &w, &lr).unwrap();
        // all t = 1: V = sum u(x_i, y_i) exactly
        assert!((rep.lifted_value - rep.original_value).norm() < 1e-14);
        assert!(rep.identity_rel_err < 1e-14);
        assert!(rep.min_slack >= -1e-10);
    }

    #[test]
    fn verify_lift_scalar_closed_form() {
        // single scalar witness (1, 1, t): V = t^{-1} <z, L(t) z>
        let u = FormTensor::scalar();
        let t = 2.2f64;
        let w = normalized(
            vec![CMatrix::identity(1)],
            vec![CMatrix::identity(1)],
            vec![t],
        );
        let d = 64;
        let lr = lift(&w, d).unwrap();
        let rep = verify_lift(&u, &w, &lr).unwrap();
        let expected = crate::lines::line_value(d, t).unwrap() / t
            * u.evaluate(&w.xs()[0], &w.ys()[0]).unwrap().re;
        assert!((rep.lifted_value.re - expected).abs() < 1e-12);
        assert!(rep.identity_rel_err < 1e-12);
    }

    #[test]
    fn verify_lift_constraints_and_identity_random() {
        for seed in 0..6 {
            let w = random_witness(2, 2, 3, 700 + seed);
            let u = FormTensor::random(2, 2, 800 + seed);
            for d in [2usize, 8, 32] {
                let lr = lift(&w, d).unwrap();
                let rep = verify_lift(&u, &w, &lr).unwrap();
                assert!(rep.min_slack >= -1e-10, "d={d}: {:?}", rep);
                assert!(rep.identity_rel_err <= 1e-10, "d={d}: {}", rep.identity_rel_err);
                assert!(rep.value_deficit <= rep.deficit_bound + 1e-10);
            }
        }
    }

    #[test]
    fn verify_lift_deficit_shrinks_with_dimension() {
        let w = random_witness(2, 2, 3, 777);
        let u = FormTensor::random(2, 2, 778);
        let mut prev = f64::INFINITY;
        for d in [8usize, 64, 512] {
            let lr = lift(&w, d).unwrap();
            let rep = verify_lift(&u, &w, &lr).unwrap();
            assert!(rep.max_line_deficit < prev);
            prev = rep.max_line_deficit;
        }
    }

    #[test]
    fn truncate_keeps_moderate_weights() {
        let w = random_witness(2, 2, 3, 910);
        let (kept, rep) = truncate(&w, 1.5, 1.5, 0.5).unwrap();
        assert_eq!(kept.len(), 3);
        assert!(rep.dropped.is_empty());
        assert!(rep.rescaled_dropped.is_none());
        assert_eq!(rep.threshold, 8.0 * 1.5 * 1.5 / 0.5);
    }

    #[test]
    fn truncate_drops_all_on_single_extreme() {
        let t_extreme = 2.0 * 8.0 * 1.0 * 1.0 / 0.5;
        let w = normalized(
            vec![CMatrix::identity(1)],
            vec![CMatrix::identity(1)],
            vec![t_extreme],
        );
        let (kept, rep) = truncate(&w, 1.0, 1.0, 0.5).unwrap();
        assert!(kept.is_empty());
        assert_eq!(rep.dropped, vec![0]);
    }

    #[test]
    fn truncate_rescaled_value_accounting() {
        // mixed witness with one extreme weight; n = m = 2
        let mut rng = rng_from_seed(911);
        let xs: Vec<CMatrix> = (0..3).map(|_| gaussian_complex_matrix(&mut rng, 2, 2, 1.0)).collect();
        let ys: Vec<CMatrix> = (0..3).map(|_| gaussian_complex_matrix(&mut rng, 2, 2, 1.0)).collect();
        let w = normalized(xs, ys, vec![1.0, 1000.0, 0.7]);
        let eta = 2.0f64.sqrt();
        let eps = 0.5;
        let (kept, rep) = truncate(&w, eta, eta, eps).unwrap();
        assert_eq!(rep.dropped, vec![1]);
        assert_eq!(kept.len(), 2);
        // kept part stays feasible
        let feas = check_constraint(&kept, ConstraintFlavor::Standard).unwrap();
        assert!(feas.violation <= 1e-10);
        // rescaled dropped part is feasible with t = 1
        let resc = rep.rescaled_dropped.as_ref().unwrap();
        let feas_dropped = check_constraint(resc, ConstraintFlavor::Standard).unwrap();
        assert!(feas_dropped.violation <= 1e-8, "{feas_dropped:?}");
        // exact value accounting under any form
        let u = FormTensor::random(2, 2, 912);
        let dropped_direct = u
            .evaluate(&w.xs()[1], &w.ys()[1])
            .unwrap();
        let via_rescale = u.witness_value(resc).unwrap() * rep.value_scale;
        assert!((dropped_direct - via_rescale).norm() < 1e-12 * dropped_direct.norm().max(1.0));
        assert!((rep.value_scale - eps / 2.0).abs() < 1e-15);
    }

    #[test]
    fn truncate_validates_inputs() {
        let w = scalar_witness(1.0, 1.0, 1.0);
        assert!(truncate(&w, 1.0, 1.0, 0.0).is_err());
        assert!(truncate(&w, 1.0, 1.0, 1.0).is_err());
        assert!(truncate(&w, 0.5, 1.0, 0.5).is_err());
        let infeasible = scalar_witness(10.0, 1.0, 1.0);
        assert!(truncate(&infeasible, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn amplification_witness_trivial_dimension() {
        let u = FormTensor::scalar();
        let a = CMatrix::new(1, 1, vec![c(0.7, 0.1)]).unwrap();
        let b = CMatrix::new(1, 1, vec![c(0.4, -0.2)]).unwrap();
        let omega = SchmidtState::max_entangled(1).unwrap();
        let w = witness_from_amplification(&u, &a, &b, &omega, &omega).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.ts()[0], 1.0);
        let value = u.witness_value(&w).unwrap();
        let direct = u.evaluate(&a, &b).unwrap();
        assert!((value - direct).norm() < 1e-15);
    }

    #[test]
    fn amplification_witness_psi_gives_unit_weights() {
        let d = 3;
        let u = FormTensor::random(2, 2, 913);
        let mut rng = rng_from_seed(914);
        let a = gaussian_complex_matrix(&mut rng, 2 * d, 2 * d, 1.0);
        let a = a.scale_real(1.0 / a.op_norm());
        let b = gaussian_complex_matrix(&mut rng, 2 * d, 2 * d, 1.0);
        let b = b.scale_real(1.0 / b.op_norm());
        let psi = SchmidtState::max_entangled(d).unwrap();
        let w = witness_from_amplification(&u, &a, &b, &psi, &psi).unwrap();
        assert_eq!(w.len(), d * d);
        assert!(w.ts().iter().all(|&t| (t - 1.0).abs() < 1e-15));
    }

    #[test]
    fn amplification_witness_value_and_feasibility() {
        let d = 2;
        for seed in 0..10 {
            let u = FormTensor::random(2, 2, 920 + seed);
            let mut rng = rng_from_seed(940 + seed);
            let a = gaussian_complex_matrix(&mut rng, 2 * d, 2 * d, 1.0);
            let a = a.scale_real(1.0 / a.op_norm());
            let b = gaussian_complex_matrix(&mut rng, 2 * d, 2 * d, 1.0);
            let b = b.scale_real(1.0 / b.op_norm());
            // random Schmidt states
            let r1 = crate::rng::uniform_f64(&mut rng) * 0.8 + 0.1;
            let omega = SchmidtState::new(vec![r1.sqrt(), (1.0 - r1).sqrt()]).unwrap();
            let r2 = crate::rng::uniform_f64(&mut rng) * 0.8 + 0.1;
            let omega_p = SchmidtState::new(vec![r2.sqrt(), (1.0 - r2).sqrt()]).unwrap();

            let w = witness_from_amplification(&u, &a, &b, &omega, &omega_p).unwrap();
            let witness_value = u.witness_value(&w).unwrap();
            let paired = u.pair_with_states(&a, &b, &omega, &omega_p).unwrap();
            assert!(
                (witness_value - paired).norm() <= 1e-10 * paired.norm().max(1.0),
                "seed {seed}: {witness_value} vs {paired}"
            );
            let feas = check_constraint(&w, ConstraintFlavor::Standard).unwrap();
            assert!(feas.violation <= 1e-8, "seed {seed}: {feas:?}");
        }
    }

    #[test]
    fn witness_serde_round_trip() {
        let w = random_witness(2, 2, 2, 999);
        let json = serde_json::to_string(&w).unwrap();
        assert!(json.contains("\"xs\""));
        assert!(json.contains("\"ts\""));
        let back: WitnessSequence = serde_json::from_str(&json).unwrap();
        assert_eq!(w, back);
    }

    #[test]
    fn witness_validation() {
        let x = CMatrix::identity(2);
        let y = CMatrix::identity(2);
        assert!(WitnessSequence::new(vec![x.clone()], vec![y.clone()], vec![0.0]).is_err());
        assert!(WitnessSequence::new(vec![x.clone()], vec![y.clone()], vec![-1.0]).is_err());
        assert!(WitnessSequence::new(vec![x.clone()], vec![], vec![1.0]).is_err());
        assert!(
            WitnessSequence::new(vec![x, CMatrix::identity(3)], vec![y.clone(), y], vec![1.0, 1.0])
                .is_err()
        );
    }
}
