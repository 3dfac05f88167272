//! Bipartite states in Schmidt form: the embezzlement family, maximally
//! entangled states, bilinear pairings through them, and the sorting-based
//! distillation protocol.
//!
//! States are stored by Schmidt coefficients and (optional) bases, never as
//! dense `d^2` vectors, so large dimensions stay cheap; a dense expansion is
//! provided only for small cross-checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{C64, CMatrix};
use crate::tol;

/// Harmonic number `Z_d = sum_{i=1}^d 1/i`, accumulated in index order.
pub fn harmonic_number(d: usize) -> f64 {
    (1..=d).map(|i| 1.0 / i as f64).sum()
}

/// Unit vector in `C^d (x) C^d` stored by Schmidt data: coefficients
/// `lambda_i >= 0` with `sum lambda_i^2 = 1` and orthonormal bases
/// (canonical when omitted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtState {
    dim: usize,
    coeffs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    left_basis: Option<CMatrix>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    right_basis: Option<CMatrix>,
}

impl SchmidtState {
    /// State with canonical bases; checks positivity and unit norm.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument(
                "Schmidt state needs at least one coefficient".into(),
            ));
        }
        if coeffs.iter().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(Error::InvalidArgument(
                "Schmidt coefficients must be finite and nonnegative".into(),
            ));
        }
        let norm_sq: f64 = coeffs.iter().map(|c| c * c).sum();
        let defect = (norm_sq - 1.0).abs();
        if defect > tol::UNIT_NORM {
            return Err(Error::NotNormalized { defect });
        }
        Ok(SchmidtState {
            dim: coeffs.len(),
            coeffs,
            left_basis: None,
            right_basis: None,
        })
    }

    /// State with explicit orthonormal bases given as column matrices.
    pub fn with_bases(coeffs: Vec<f64>, left: CMatrix, right: CMatrix) -> Result<Self> {
        let mut s = Self::new(coeffs)?;
        for (name, basis) in [("left", &left), ("right", &right)] {
            if basis.rows() != s.dim || basis.cols() != s.dim {
                return Err(Error::DimMismatch {
                    context: "SchmidtState::with_bases",
                    expected: format!("{0}x{0}", s.dim),
                    got: format!("{}x{} ({name})", basis.rows(), basis.cols()),
                });
            }
            let gram = basis.adjoint().matmul(basis)?;
            let defect = gram.sub(&CMatrix::identity(s.dim))?.max_abs();
            if defect > 1e-10 {
                return Err(Error::InvalidArgument(format!(
                    "{name} basis is not orthonormal: defect {defect:e}"
                )));
            }
        }
        s.left_basis = Some(left);
        s.right_basis = Some(right);
        Ok(s)
    }

    /// Embezzlement state: coefficients `(i Z_d)^{-1/2}` for `i = 1..d`.
    pub fn embezzlement(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let z = harmonic_number(d);
        let coeffs: Vec<f64> = (1..=d).map(|i| 1.0 / (i as f64 * z).sqrt()).collect();
        Ok(SchmidtState {
            dim: d,
            coeffs,
            left_basis: None,
            right_basis: None,
        })
    }

    /// Maximally entangled state: all coefficients `d^{-1/2}`.
    pub fn max_entangled(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let c = 1.0 / (d as f64).sqrt();
        Ok(SchmidtState {
            dim: d,
            coeffs: vec![c; d],
            left_basis: None,
            right_basis: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_canonical(&self) -> bool {
        self.left_basis.is_none() && self.right_basis.is_none()
    }

    /// Overlap with another canonical-basis state of the same dimension.
    pub fn overlap(&self, other: &SchmidtState) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch {
                context: "SchmidtState::overlap",
                expected: format!("{}", self.dim),
                got: format!("{}", other.dim),
            });
        }
        if !self.is_canonical() || !other.is_canonical() {
            return Err(Error::InvalidArgument(
                "overlap requires canonical bases".into(),
            ));
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// `<self, (a (x) b) self>`, contracted through the Schmidt form without
    /// materializing the Kronecker product.
    pub fn form_value(&self, a: &CMatrix, b: &CMatrix) -> Result<C64> {
        pairing(self, self, a, b)
    }

    /// Dense `d^2` column vector; provided for cross-checks at small `d` only.
    pub fn to_dense(&self) -> Result<CMatrix> {
        if self.dim > 64 {
            return Err(Error::InvalidArgument(format!(
                "dense expansion is limited to d <= 64, got {}",
                self.dim
            )));
        }
        let d = self.dim;
        let mut v = CMatrix::zeros(d * d, 1);
        match (&self.left_basis, &self.right_basis) {
            (None, None) => {
                for (i, &l) in self.coeffs.iter().enumerate() {
                    v.set(i * d + i, 0, C64::new(l, 0.0));
                }
            }
            _ => {
                let left = self.left_matrix();
                let right = self.right_matrix();
                for k in 0..d {
                    for l in 0..d {
                        let mut acc = C64::new(0.0, 0.0);
                        for (i, &c) in self.coeffs.iter().enumerate() {
                            acc += C64::new(c, 0.0) * left.get(k, i) * right.get(l, i);
                        }
                        v.set(k * d + l, 0, acc);
                    }
                }
            }
        }
        Ok(v)
    }

    /// The state as a `d x d` coefficient matrix `O` with
    /// `Omega = sum_{ij} O[i,j] e_i (x) e_j`.
    pub fn to_matrix(&self) -> CMatrix {
        let d = self.dim;
        match (&self.left_basis, &self.right_basis) {
            (None, None) => {
                let mut m = CMatrix::zeros(d, d);
                for (i, &l) in self.coeffs.iter().enumerate() {
                    m.set(i, i, C64::new(l, 0.0));
                }
                m
            }
            _ => {
                // O = sum_i lambda_i l_i r_i^T = L diag(lambda) R^T
                let left = self.left_matrix();
                let right = self.right_matrix();
                let dm = CMatrix::diag_real(&self.coeffs);
                left.matmul(&dm)
                    .and_then(|m| m.matmul(&right.transpose()))
                    .expect("dimensions agree by construction")
            }
        }
    }

    fn left_matrix(&self) -> CMatrix {
        self.left_basis
            .clone()
            .unwrap_or_else(|| CMatrix::identity(self.dim))
    }

    fn right_matrix(&self) -> CMatrix {
        self.right_basis
            .clone()
            .unwrap_or_else(|| CMatrix::identity(self.dim))
    }
}

/// `<left, (a (x) b) right>` contracted through the Schmidt forms.
///
/// With `left = sum_i lambda_i e_i (x) f_i` and
/// `right = sum_j mu_j g_j (x) h_j` this is
/// `sum_{ij} lambda_i mu_j <e_i, a g_j> <f_i, b h_j>`.
pub fn pairing(
    left: &SchmidtState,
    right: &SchmidtState,
    a: &CMatrix,
    b: &CMatrix,
) -> Result<C64> {
    let d = left.dim;
    if right.dim != d {
        return Err(Error::DimMismatch {
            context: "pairing states",
            expected: format!("{d}"),
            got: format!("{}", right.dim),
        });
    }
    for (name, m) in [("a", a), ("b", b)] {
        if m.rows() != d || m.cols() != d {
            return Err(Error::DimMismatch {
                context: "pairing operators",
                expected: format!("{d}x{d}"),
                got: format!("{}x{} ({name})", m.rows(), m.cols()),
            });
        }
    }
    if left.is_canonical() && right.is_canonical() {
        let mut acc = C64::new(0.0, 0.0);
        for (i, &li) in left.coeffs.iter().enumerate() {
            for (j, &mj) in right.coeffs.iter().enumerate() {
                let prod = a.get(i, j) * b.get(i, j);
                if prod != C64::new(0.0, 0.0) {
                    acc += C64::new(li * mj, 0.0) * prod;
                }
            }
        }
        return Ok(acc);
    }
    let ea = left.left_matrix().adjoint().matmul(a)?.matmul(&right.left_matrix())?;
    let fb = left
        .right_matrix()
        .adjoint()
        .matmul(b)?
        .matmul(&right.right_matrix())?;
    let mut acc = C64::new(0.0, 0.0);
    for (i, &li) in left.coeffs.iter().enumerate() {
        for (j, &mj) in right.coeffs.iter().enumerate() {
            acc += C64::new(li * mj, 0.0) * ea.get(i, j) * fb.get(i, j);
        }
    }
    Ok(acc)
}

/// Result of the sorting-based distillation protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbezzleOutcome {
    /// Sorted-coefficient overlap of start and goal, in `[0, 1]`.
    pub fidelity: f64,
    /// The local permutation: position `k` of the sorted goal list holds the
    /// product-basis index `i * target_dim + j`.
    pub permutation: Vec<usize>,
}

/// Distill `target` from the embezzlement state of dimension `resource_dim`.
///
/// Start: `Phi_r (x) (e_1 (x) e_1)`, padded to the target dimension.
/// Goal: `Phi_r (x) target`. Both product coefficient lists are sorted
/// nonincreasing; the fidelity is their inner product and the sorting
/// permutation of the goal list is the local operation.
pub fn embezzle(resource_dim: usize, target: &SchmidtState) -> Result<EmbezzleOutcome> {
    if resource_dim == 0 {
        return Err(Error::InvalidArgument(
            "resource dimension must be positive".into(),
        ));
    }
    let phi = SchmidtState::embezzlement(resource_dim)?;
    let tdim = target.dim();

    // Goal list: products phi_i * tau_j indexed by i * tdim + j.
    let mut products: Vec<(f64, usize)> = Vec::with_capacity(resource_dim * tdim);
    for (i, &p) in phi.coeffs().iter().enumerate() {
        for (j, &t) in target.coeffs().iter().enumerate() {
            products.push((p * t, i * tdim + j));
        }
    }
    products.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));

    // Start list sorted: phi coefficients (already nonincreasing) then zeros.
    let mut start_sorted = phi.coeffs().to_vec();
    start_sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let fidelity: f64 = start_sorted
        .iter()
        .zip(products.iter())
        .map(|(s, (g, _))| s * g)
        .sum();

    Ok(EmbezzleOutcome {
        fidelity: fidelity.min(1.0),
        permutation: products.into_iter().map(|(_, idx)| idx).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn embezzlement_small_dims() {
        let s = SchmidtState::embezzlement(1).unwrap();
        assert_eq!(s.coeffs(), &[1.0]);

        // Z_2 = 3/2
        let s = SchmidtState::embezzlement(2).unwrap();
        assert!((s.coeffs()[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.coeffs()[1] - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);

        assert!(SchmidtState::embezzlement(0).is_err());
    }

    #[test]
    fn embezzlement_normalized_and_decreasing() {
        let s = SchmidtState::embezzlement(8).unwrap();
        let norm_sq: f64 = s.coeffs().iter().map(|c| c * c).sum();
        assert!((norm_sq - 1.0).abs() < 1e-14);
        for w in s.coeffs().windows(2) {
            assert!(w[0] > w[1]);
        }
    }

    #[test]
    fn max_entangled_cases() {
        let s = SchmidtState::max_entangled(1).unwrap();
        assert_eq!(s.coeffs(), &[1.0]);
        let s = SchmidtState::max_entangled(4).unwrap();
        assert_eq!(s.coeffs(), &[0.5, 0.5, 0.5, 0.5]);
        assert!(SchmidtState::max_entangled(0).is_err());
    }

    #[test]
    fn psi_phi_overlap_formula() {
        for d in [1usize, 2, 5, 16] {
            let psi = SchmidtState::max_entangled(d).unwrap();
            let phi = SchmidtState::embezzlement(d).unwrap();
            let expected = (1..=d).map(|i| 1.0 / (i as f64).sqrt()).sum::<f64>()
                / ((d as f64) * harmonic_number(d)).sqrt();
            assert!((psi.overlap(&phi).unwrap() - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn form_value_identity_is_one() {
        for d in [1usize, 3, 8] {
            let phi = SchmidtState::embezzlement(d).unwrap();
            let id = CMatrix::identity(d);
            let v = phi.form_value(&id, &id).unwrap();
            assert!((v - c(1.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn form_value_on_psi_is_normalized_trace() {
        let d = 4;
        let psi = SchmidtState::max_entangled(d).unwrap();
        let mut rng = crate::rng::rng_from_seed(5);
        let a = crate::rng::gaussian_complex_matrix(&mut rng, d, d, 1.0);
        let b = crate::rng::gaussian_complex_matrix(&mut rng, d, d, 1.0);
        let v = psi.form_value(&a, &b).unwrap();
        let expected = a.matmul(&b.transpose()).unwrap().trace() / d as f64;
        assert!((v - expected).norm() < 1e-13);
    }

    #[test]
    fn form_value_on_matrix_units() {
        let d = 5;
        let phi = SchmidtState::embezzlement(d).unwrap();
        for i in 0..d {
            for j in 0..d {
                let v = phi
                    .form_value(&CMatrix::matrix_unit(d, i, i), &CMatrix::matrix_unit(d, j, j))
                    .unwrap();
                let expected = if i == j {
                    phi.coeffs()[i] * phi.coeffs()[i]
                } else {
                    0.0
                };
                assert!((v - c(expected, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn form_value_matches_dense_kron() {
        let mut rng = crate::rng::rng_from_seed(6);
        for d in [2usize, 3, 5, 16] {
            let phi = SchmidtState::embezzlement(d).unwrap();
            let a = crate::rng::gaussian_complex_matrix(&mut rng, d, d, 1.0);
            let b = crate::rng::gaussian_complex_matrix(&mut rng, d, d, 1.0);
            let fast = phi.form_value(&a, &b).unwrap();
            let dense = phi.to_dense().unwrap();
            let big = a.kron(&b);
            let slow = dense.adjoint().matmul(&big).unwrap().matmul(&dense).unwrap();
            assert!((fast - slow.get(0, 0)).norm() < 1e-12);
        }
    }

    #[test]
    fn pairing_with_rotated_bases_matches_dense() {
        let d = 3;
        let mut rng = crate::rng::rng_from_seed(7);
        let g = crate::rng::gaussian_complex_matrix(&mut rng, d, d, 1.0);
        let (_, u) = g.hermitian_part().unwrap().eigh_hermitian(1e-9).unwrap();
        let coeffs = vec![(0.5f64).sqrt(), (0.3f64).sqrt(), (0.2f64).sqrt()];
        let s = SchmidtState::with_bases(coeffs, u.clone(), u.clone()).unwrap();
        let a = crate::rng::gaussian_complex_matrix(&mut rng, d, d, 1.0);
        let b = crate::rng::gaussian_complex_matrix(&mut rng, d, d, 1.0);
        let fast = s.form_value(&a, &b).unwrap();
        let dense = s.to_dense().unwrap();
        let slow = dense
            .adjoint()
            .matmul(&a.kron(&b))
            .unwrap()
            .matmul(&dense)
            .unwrap();
        assert!((fast - slow.get(0, 0)).norm() < 1e-12);
    }

    #[test]
    fn embezzle_base_cases() {
        // No resource: fidelity is the top Schmidt coefficient of the target.
        let psi2 = SchmidtState::max_entangled(2).unwrap();
        let out = embezzle(1, &psi2).unwrap();
        assert!((out.fidelity - 1.0 / 2.0f64.sqrt()).abs() < 1e-15);

        // Product-state target: perfect fidelity for any resource.
        let product = SchmidtState::new(vec![1.0, 0.0, 0.0]).unwrap();
        for r in [1usize, 2, 16] {
            let out = embezzle(r, &product).unwrap();
            assert!((out.fidelity - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn embezzle_fidelity_monotone_in_resource() {
        let psi2 = SchmidtState::max_entangled(2).unwrap();
        let mut prev = 0.0;
        for k in 0..=10 {
            let out = embezzle(1 << k, &psi2).unwrap();
            assert!(out.fidelity > prev, "k={k}: {} <= {prev}", out.fidelity);
            prev = out.fidelity;
        }
        // convergence is logarithmically slow; 0.9475.. at k = 10
        assert!(prev > 0.94);
    }

    #[test]
    fn embezzle_invariant_under_target_reordering() {
        let t1 = SchmidtState::new(vec![0.8, 0.6]).unwrap();
        let t2 = SchmidtState::new(vec![0.6, 0.8]).unwrap();
        let a = embezzle(16, &t1).unwrap();
        let b = embezzle(16, &t2).unwrap();
        assert_eq!(a.fidelity, b.fidelity);
    }

    #[test]
    fn state_constructors_validate() {
        assert!(SchmidtState::new(vec![0.5, 0.5]).is_err()); // norm 1/sqrt(2)
        assert!(SchmidtState::new(vec![-1.0]).is_err());
        assert!(SchmidtState::new(vec![]).is_err());
    }

    #[test]
    fn serde_omits_canonical_bases() {
        let s = SchmidtState::embezzlement(3).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"dim\":3"));
        assert!(!json.contains("left_basis"));
        let back: SchmidtState = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
    }
}
