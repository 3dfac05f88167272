//! Monte Carlo checks of the Gaussian operator-norm estimates: the expected
//! squared norm of `S_d = sum_j a_j (x) G_j` under row/column constraints,
//! and the identity `E[u_d^Psi(x, y)] = sum_i u(x_i, y_i)` behind the
//! tracially bounded reduction.
//!
//! Every sample stream is derived from a single master seed (see
//! [`crate::rng`]); identical configurations reproduce bit-identical
//! reports. Pass criteria use three standard errors, never a hard
//! inequality on a random quantity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::FormTensor;
use crate::lifting::{check_constraint, ConstraintFlavor, WitnessSequence};
use crate::numerics::{c64_serde, C64, CMatrix};
use crate::rng::{derive_seed, gaussian_complex_matrix, rng_from_seed};
use crate::states::SchmidtState;

/// Family of i.i.d. Gaussian matrices with entries `(g + i h)/sqrt(2)`,
/// `g, h` real normal with mean 0 and variance `1/d`.
#[derive(Debug, Clone)]
pub struct GaussianFamily {
    pub count: usize,
    pub dim: usize,
    pub seed: u64,
    pub matrices: Vec<CMatrix>,
}

/// Draw a family; deterministic given the seed.
pub fn sample_family(count: usize, dim: usize, seed: u64) -> Result<GaussianFamily> {
    if count == 0 || dim == 0 {
        return Err(Error::InvalidArgument(
            "family count and dimension must be positive".into(),
        ));
    }
    let sigma = 1.0 / (dim as f64).sqrt();
    let mut matrices = Vec::with_capacity(count);
    for j in 0..count {
        let mut rng = rng_from_seed(derive_seed(seed, "gaussian_family", j as u64));
        matrices.push(gaussian_complex_matrix(&mut rng, dim, dim, sigma));
    }
    Ok(GaussianFamily {
        count,
        dim,
        seed,
        matrices,
    })
}

/// `S_d = sum_j a_j (x) G_j`.
pub fn s_matrix(a_list: &[CMatrix], fam: &GaussianFamily) -> Result<CMatrix> {
    if a_list.len() != fam.count {
        return Err(Error::DimMismatch {
            context: "s_matrix",
            expected: format!("{} coefficients", fam.count),
            got: format!("{}", a_list.len()),
        });
    }
    let n = a_list
        .first()
        .map(|a| a.rows())
        .ok_or_else(|| Error::InvalidArgument("empty coefficient list".into()))?;
    let d = fam.dim;
    let mut s = CMatrix::zeros(n * d, n * d);
    for (a, g) in a_list.iter().zip(&fam.matrices) {
        s.add_assign(&a.kron(g))?;
    }
    Ok(s)
}

/// Monte Carlo report: sample mean against a bound at three standard errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MCReport {
    pub samples: usize,
    pub mean: f64,
    pub std_error: f64,
    pub bound: f64,
    pub pass: bool,
}

impl MCReport {
    fn from_samples(values: &[f64], bound: f64) -> Self {
        let samples = values.len();
        let mean = values.iter().sum::<f64>() / samples as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (samples.saturating_sub(1).max(1)) as f64;
        let std_error = (var / samples as f64).sqrt();
        MCReport {
            samples,
            mean,
            std_error,
            bound,
            pass: mean <= bound + 3.0 * std_error,
        }
    }
}

/// Full record of one expected-squared-norm experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HtReport {
    pub n: usize,
    pub family_size: usize,
    pub gamma: f64,
    pub eps: f64,
    /// `ceil(32 eps^{-2} ln(4 n / eps))`.
    pub d: usize,
    pub seed: u64,
    pub measured_col_norm: f64,
    pub measured_row_norm: f64,
    pub report: MCReport,
}

/// Estimate `E[||S_d||^2]` under `||sum a_j* a_j|| <= gamma`,
/// `||sum a_j a_j*|| <= 1`, at the dimension the tail bound prescribes, and
/// compare with `(1 + eps)(sqrt(gamma) + 1)^2`.
pub fn mc_ht(
    a_list: &[CMatrix],
    gamma: f64,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<HtReport> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eps must lie in (0, 1], got {eps}"
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let n = a_list
        .first()
        .map(|a| a.rows())
        .ok_or_else(|| Error::InvalidArgument("empty coefficient list".into()))?;
    let col = crate::numerics::gram_sum_norm(a_list, true)?;
    let row = crate::numerics::gram_sum_norm(a_list, false)?;
    if col > gamma + 1e-10 || row > 1.0 + 1e-10 {
        return Err(Error::Precondition(format!(
            "coefficient norms violated: ||sum a* a|| = {col}, ||sum a a*|| = {row} (need <= {gamma}, <= 1)"
        )));
    }
    let d = (32.0 * eps.powi(-2) * (4.0 * n as f64 / eps).ln()).ceil() as usize;
    let bound = (1.0 + eps) * (gamma.sqrt() + 1.0) * (gamma.sqrt() + 1.0);
    let mut values = Vec::with_capacity(samples);
    for sample in 0..samples {
        let fam = sample_family(
            a_list.len(),
            d,
            derive_seed(seed, "mc_ht_sample", sample as u64),
        )?;
        let s = s_matrix(a_list, &fam)?;
        let norm = s.op_norm();
        values.push(norm * norm);
    }
    Ok(HtReport {
        n,
        family_size: a_list.len(),
        gamma,
        eps,
        d,
        seed,
        measured_col_norm: col,
        measured_row_norm: row,
        report: MCReport::from_samples(&values, bound),
    })
}

/// Report of the Gaussian coupling experiment: the mean pairing value
/// against its exact target, and (optionally) the norm-product bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JpReport {
    pub d: usize,
    pub samples: usize,
    pub seed: u64,
    #[serde(with = "c64_serde")]
    pub mean_pairing: C64,
    #[serde(with = "c64_serde")]
    pub target: C64,
    pub pairing_abs_deviation: f64,
    pub pairing_std_error: f64,
    pub identity_pass: bool,
    pub mean_norm_product: f64,
    pub norm_product_std_error: f64,
    /// `4 (1 + eps/2)` when an `eps` was supplied and `d` meets the
    /// prescription `d >= 128 eps^{-2} ln(8 n / eps)`.
    pub norm_product_bound: Option<f64>,
    pub norm_product_pass: Option<bool>,
}

/// Monte Carlo check of the coupling `x = sum x_i (x) G_i`,
/// `y = sum y_i (x) conj(G_i)`: the mean of `u_d^Psi(x, y)` equals
/// `sum_i u(x_i, y_i)` (within three standard errors), and when `eps` is
/// supplied the mean of `||x|| ||y||` is compared against
/// `4 (1 + eps/2)`.
pub fn mc_jp(
    u: &FormTensor,
    w: &WitnessSequence,
    d: usize,
    eps: Option<f64>,
    samples: usize,
    seed: u64,
) -> Result<JpReport> {
    if d == 0 || samples == 0 {
        return Err(Error::InvalidArgument(
            "dimension and sample count must be positive".into(),
        ));
    }
    if w.ts().iter().any(|&t| (t - 1.0).abs() > 1e-12) {
        return Err(Error::Precondition(
            "mc_jp expects unit weights (t_i = 1)".into(),
        ));
    }
    let loose = check_constraint(w, ConstraintFlavor::Loose)?;
    if loose.violation > 1e-8 {
        return Err(Error::Precondition(format!(
            "witness violates the square-rooted constraint by {:e}",
            loose.violation
        )));
    }
    if let Some(e) = eps {
        if !(e > 0.0 && e <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "eps must lie in (0, 1], got {e}"
            )));
        }
        let n = w.x_dim().unwrap() as f64;
        let needed = (128.0 * e.powi(-2) * (8.0 * n / e).ln()).ceil() as usize;
        if d < needed {
            return Err(Error::Precondition(format!(
                "d = {d} below the prescribed {needed} for eps = {e}"
            )));
        }
    }
    let psi = SchmidtState::max_entangled(d)?;
    let target = u.witness_value(w)?;
    let mut pair_re = Vec::with_capacity(samples);
    let mut pair_im = Vec::with_capacity(samples);
    let mut norm_products = Vec::with_capacity(samples);
    for sample in 0..samples {
        let fam = sample_family(w.len(), d, derive_seed(seed, "mc_jp_sample", sample as u64))?;
        let x = s_matrix(w.xs(), &fam)?;
        let conj_fam = GaussianFamily {
            count: fam.count,
            dim: fam.dim,
            seed: fam.seed,
            matrices: fam.matrices.iter().map(|g| g.conj()).collect(),
        };
        let y = s_matrix(w.ys(), &conj_fam)?;
        let value = u.pair_with_states(&x, &y, &psi, &psi)?;
        pair_re.push(value.re);
        pair_im.push(value.im);
        norm_products.push(x.op_norm() * y.op_norm());
    }
    let s = samples as f64;
    let mean_re = pair_re.iter().sum::<f64>() / s;
    let mean_im = pair_im.iter().sum::<f64>() / s;
    let var_re = pair_re.iter().map(|v| (v - mean_re) * (v - mean_re)).sum::<f64>()
        / (samples.saturating_sub(1).max(1)) as f64;
    let var_im = pair_im.iter().map(|v| (v - mean_im) * (v - mean_im)).sum::<f64>()
        / (samples.saturating_sub(1).max(1)) as f64;
    let pairing_std_error = ((var_re + var_im) / s).sqrt();
    let mean_pairing = C64::new(mean_re, mean_im);
    let pairing_abs_deviation = (mean_pairing - target).norm();
    let identity_pass = pairing_abs_deviation <= 3.0 * pairing_std_error;

    let mean_np = norm_products.iter().sum::<f64>() / s;
    let var_np = norm_products.iter().map(|v| (v - mean_np) * (v - mean_np)).sum::<f64>()
        / (samples.saturating_sub(1).max(1)) as f64;
    let norm_product_std_error = (var_np / s).sqrt();
    let norm_product_bound = eps.map(|e| 4.0 * (1.0 + e / 2.0));
    let norm_product_pass =
        norm_product_bound.map(|b| mean_np <= b + 3.0 * norm_product_std_error);

    Ok(JpReport {
        d,
        samples,
        seed,
        mean_pairing,
        target,
        pairing_abs_deviation,
        pairing_std_error,
        identity_pass,
        mean_norm_product: mean_np,
        norm_product_std_error,
        norm_product_bound,
        norm_product_pass,
    })
}
