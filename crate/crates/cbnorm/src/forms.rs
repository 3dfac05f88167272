//! Bilinear forms on matrix algebras as dense 4-index coefficient tensors,
//! their amplifications, and the norm estimators built on them:
//!
//! * [`norm_seesaw`] — alternating maximization of `|<Omega, u_d(A, B) Omega'>|`
//!   over contractions `A`, `B` and unit vectors, every block update a
//!   closed-form optimum (polar factor or top singular pair). Values are
//!   certified lower bounds on `||u_d||`.
//! * [`os_search`] / the `fixed_t` variant — projected local search for the
//!   constrained suprema over weighted witness sequences, with exact
//!   feasibility restoration by rescaling.
//! * [`eta_witness_search`] — row/column norm inflation in `M_n`.

use ndarray::Array4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifting::{check_constraint, ConstraintFlavor, ConstraintReport, WitnessSequence};
use crate::numerics::{C64, CMatrix};
use crate::rng::{derive_seed, gaussian_complex_matrix, rng_from_seed};
use crate::states::{pairing, SchmidtState};
use crate::tol;

/// Bilinear form `u: M_n x M_m -> C` stored as the dense coefficient tensor
/// `U[k,l,p,q]` with `u(a, b) = sum U[k,l,p,q] a[k,l] b[p,q]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FormTensorWire", into = "FormTensorWire")]
pub struct FormTensor {
    n: usize,
    m: usize,
    coeffs: Array4<C64>,
}

#[derive(Serialize, Deserialize)]
struct FormTensorWire {
    n: usize,
    m: usize,
    coeffs: Vec<Vec<Vec<Vec<[f64; 2]>>>>,
}

impl From<FormTensor> for FormTensorWire {
    fn from(u: FormTensor) -> Self {
        let (n, m) = (u.n, u.m);
        let coeffs = (0..n)
            .map(|k| {
                (0..n)
                    .map(|l| {
                        (0..m)
                            .map(|p| {
                                (0..m)
                                    .map(|q| {
                                        let z = u.coeffs[[k, l, p, q]];
                                        [z.re, z.im]
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        FormTensorWire { n, m, coeffs }
    }
}

impl TryFrom<FormTensorWire> for FormTensor {
    type Error = Error;

    fn try_from(w: FormTensorWire) -> Result<Self> {
        let (n, m) = (w.n, w.m);
        let mut coeffs = Array4::zeros((n, n, m, m));
        if w.coeffs.len() != n {
            return Err(Error::InvalidArgument("coeffs outer length != n".into()));
        }
        for (k, kk) in w.coeffs.iter().enumerate() {
            if kk.len() != n {
                return Err(Error::InvalidArgument("coeffs depth-2 length != n".into()));
            }
            for (l, ll) in kk.iter().enumerate() {
                if ll.len() != m {
                    return Err(Error::InvalidArgument("coeffs depth-3 length != m".into()));
                }
                for (p, pp) in ll.iter().enumerate() {
                    if pp.len() != m {
                        return Err(Error::InvalidArgument("coeffs depth-4 length != m".into()));
                    }
                    for (q, z) in pp.iter().enumerate() {
                        coeffs[[k, l, p, q]] = C64::new(z[0], z[1]);
                    }
                }
            }
        }
        FormTensor::new(n, m, coeffs)
    }
}

impl FormTensor {
    pub fn new(n: usize, m: usize, coeffs: Array4<C64>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidArgument("form dimensions must be positive".into()));
        }
        if coeffs.dim() != (n, n, m, m) {
            return Err(Error::DimMismatch {
                context: "FormTensor::new",
                expected: format!("{n}x{n}x{m}x{m}"),
                got: format!("{:?}", coeffs.dim()),
            });
        }
        if !coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(FormTensor { n, m, coeffs })
    }

    /// The `1 x 1` multiplication form `u(x, y) = x y`.
    pub fn scalar() -> Self {
        let mut coeffs = Array4::zeros((1, 1, 1, 1));
        coeffs[[0, 0, 0, 0]] = C64::new(1.0, 0.0);
        FormTensor { n: 1, m: 1, coeffs }
    }

    /// The trace pairing `u(a, b) = Tr(a b)` on `M_n x M_n`:
    /// `U[k,l,p,q] = delta_{k q} delta_{l p}`.
    pub fn trace_form(n: usize) -> Self {
        let mut coeffs = Array4::zeros((n, n, n, n));
        for k in 0..n {
            for l in 0..n {
                coeffs[[k, l, l, k]] = C64::new(1.0, 0.0);
            }
        }
        FormTensor { n, m: n, coeffs }
    }

    /// Form with independent standard complex Gaussian coefficients.
    pub fn random(n: usize, m: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let coeffs = Array4::from_shape_fn((n, n, m, m), |_| {
            let (g, h) = crate::rng::standard_normal_pair(&mut rng);
            C64::new(g * std::f64::consts::FRAC_1_SQRT_2, h * std::f64::consts::FRAC_1_SQRT_2)
        });
        FormTensor { n, m, coeffs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn coeff(&self, k: usize, l: usize, p: usize, q: usize) -> C64 {
        self.coeffs[[k, l, p, q]]
    }

    /// Pointwise evaluation `u(a, b)`.
    pub fn evaluate(&self, a: &CMatrix, b: &CMatrix) -> Result<C64> {
        if a.rows() != self.n || a.cols() != self.n {
            return Err(Error::DimMismatch {
                context: "FormTensor::evaluate (a)",
                expected: format!("{0}x{0}", self.n),
                got: format!("{}x{}", a.rows(), a.cols()),
            });
        }
        if b.rows() != self.m || b.cols() != self.m {
            return Err(Error::DimMismatch {
                context: "FormTensor::evaluate (b)",
                expected: format!("{0}x{0}", self.m),
                got: format!("{}x{}", b.rows(), b.cols()),
            });
        }
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..self.n {
            for l in 0..self.n {
                let akl = a.get(k, l);
                if akl == C64::new(0.0, 0.0) {
                    continue;
                }
                for p in 0..self.m {
                    for q in 0..self.m {
                        acc += self.coeffs[[k, l, p, q]] * akl * b.get(p, q);
                    }
                }
            }
        }
        Ok(acc)
    }

    /// `sum_i u(x_i, y_i)` over a witness sequence.
    pub fn witness_value(&self, w: &WitnessSequence) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..w.len() {
            acc += self.evaluate(&w.xs()[i], &w.ys()[i])?;
        }
        Ok(acc)
    }

    /// `sum_i |u(x_i, y_i)|`.
    pub fn witness_abs_sum(&self, w: &WitnessSequence) -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..w.len() {
            acc += self.evaluate(&w.xs()[i], &w.ys()[i])?.norm();
        }
        Ok(acc)
    }

    /// `sum_{pq} U[.,.,p,q] y[p,q]`, the `M_n`-valued contraction against `y`.
    pub fn contract_right(&self, y: &CMatrix) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |k, l| {
            let mut acc = C64::new(0.0, 0.0);
            for p in 0..self.m {
                for q in 0..self.m {
                    acc += self.coeffs[[k, l, p, q]] * y.get(p, q);
                }
            }
            acc
        })
    }

    /// `sum_{kl} U[k,l,.,.] x[k,l]`, the `M_m`-valued contraction against `x`.
    pub fn contract_left(&self, x: &CMatrix) -> CMatrix {
        CMatrix::from_fn(self.m, self.m, |p, q| {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..self.n {
                for l in 0..self.n {
                    acc += self.coeffs[[k, l, p, q]] * x.get(k, l);
                }
            }
            acc
        })
    }

    fn lift_dims(&self, a: &CMatrix, b: &CMatrix) -> Result<usize> {
        if a.rows() != a.cols() || b.rows() != b.cols() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        if a.rows() % self.n != 0 {
            return Err(Error::DimMismatch {
                context: "amplify (a)",
                expected: format!("multiple of {}", self.n),
                got: format!("{}", a.rows()),
            });
        }
        let d = a.rows() / self.n;
        if b.rows() != self.m * d {
            return Err(Error::DimMismatch {
                context: "amplify (b)",
                expected: format!("{}", self.m * d),
                got: format!("{}", b.rows()),
            });
        }
        Ok(d)
    }

    /// The amplification `u_d(A, B)` in `M_d (x) M_d`, obtained by
    /// contracting the `M_n` and `M_m` legs of `A` and `B` against the
    /// coefficient tensor.
    pub fn amplify(&self, a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
        let d = self.lift_dims(a, b)?;
        let mut out = CMatrix::zeros(d * d, d * d);
        for k in 0..self.n {
            for l in 0..self.n {
                let a_block = block_of(a, k, l, d);
                for p in 0..self.m {
                    for q in 0..self.m {
                        let c = self.coeffs[[k, l, p, q]];
                        if c == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let b_block = block_of(b, p, q, d);
                        out.add_scaled(c, &a_block.kron(&b_block))?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `<Omega, u_d(A, B) Omega'>` contracted through the Schmidt forms,
    /// without materializing `u_d`.
    pub fn pair_with_states(
        &self,
        a: &CMatrix,
        b: &CMatrix,
        omega: &SchmidtState,
        omega_p: &SchmidtState,
    ) -> Result<C64> {
        let d = self.lift_dims(a, b)?;
        if omega.dim() != d || omega_p.dim() != d {
            return Err(Error::DimMismatch {
                context: "pair_with_states",
                expected: format!("state dimension {d}"),
                got: format!("{} and {}", omega.dim(), omega_p.dim()),
            });
        }
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..self.n {
            for l in 0..self.n {
                let a_block = block_of(a, k, l, d);
                for p in 0..self.m {
                    for q in 0..self.m {
                        let c = self.coeffs[[k, l, p, q]];
                        if c == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let b_block = block_of(b, p, q, d);
                        acc += c * pairing(omega, omega_p, &a_block, &b_block)?;
                    }
                }
            }
        }
        Ok(acc)
    }

    /// The bilinear form `(A, B) -> <Omega, u_d(A, B) Omega>` on
    /// `M_{nd} x M_{md}` as a dense coefficient tensor. For a canonical
    /// state with coefficients `z`,
    /// `U'[(k,s),(l,t),(p,a),(q,b)] = U[k,l,p,q] z_s z_t delta_sa delta_tb`.
    pub fn amplify_with_state(&self, state: &SchmidtState) -> Result<FormTensor> {
        if !state.is_canonical() {
            return Err(Error::InvalidArgument(
                "amplify_with_state expects a canonical-basis state".into(),
            ));
        }
        let d = state.dim();
        let (np, mp) = (self.n * d, self.m * d);
        let entries = np * np * mp * mp;
        if entries > 20_000_000 {
            return Err(Error::InvalidArgument(format!(
                "amplified tensor would hold {entries} coefficients; \
                 reduce d or the base dimensions"
            )));
        }
        let z = state.coeffs();
        let mut coeffs = Array4::zeros((np, np, mp, mp));
        for k in 0..self.n {
            for l in 0..self.n {
                for p in 0..self.m {
                    for q in 0..self.m {
                        let c = self.coeffs[[k, l, p, q]];
                        if c == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for s in 0..d {
                            for t in 0..d {
                                coeffs[[k * d + s, l * d + t, p * d + s, q * d + t]] =
                                    c * (z[s] * z[t]);
                            }
                        }
                    }
                }
            }
        }
        FormTensor::new(np, mp, coeffs)
    }

    /// `<Omega, u_d(A, B) Omega'>` for dense states given as `d x d`
    /// coefficient matrices `O` (`Omega = sum O[i,j] e_i (x) e_j`).
    pub fn pair_dense(
        &self,
        a: &CMatrix,
        b: &CMatrix,
        omega: &CMatrix,
        omega_p: &CMatrix,
    ) -> Result<C64> {
        let d = self.lift_dims(a, b)?;
        if omega.rows() != d || omega.cols() != d || omega_p.rows() != d || omega_p.cols() != d {
            return Err(Error::DimMismatch {
                context: "pair_dense",
                expected: format!("{d}x{d}"),
                got: format!(
                    "{}x{} and {}x{}",
                    omega.rows(),
                    omega.cols(),
                    omega_p.rows(),
                    omega_p.cols()
                ),
            });
        }
        let o_conj = omega.conj();
        let op_t = omega_p.transpose();
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..self.n {
            for l in 0..self.n {
                let a_block = block_of(a, k, l, d);
                for p in 0..self.m {
                    for q in 0..self.m {
                        let c = self.coeffs[[k, l, p, q]];
                        if c == C64::new(0.0, 0.0) {
                            continue;
                        }
                        // <Omega, (x (x) y) Omega'> = sum_{i,i'} x[i,i'] (conj(O) y O'^T)[i,i']
                        let b_block = block_of(b, p, q, d);
                        let cmat = o_conj.matmul(&b_block)?.matmul(&op_t)?;
                        let mut inner = C64::new(0.0, 0.0);
                        for i in 0..d {
                            for i2 in 0..d {
                                inner += a_block.get(i, i2) * cmat.get(i, i2);
                            }
                        }
                        acc += c * inner;
                    }
                }
            }
        }
        Ok(acc)
    }
}

/// The `d x d` block of an `(n d) x (n d)` matrix at block position
/// `(outer_row, outer_col)` of the outer `n x n` grid.
pub fn block_of(m: &CMatrix, outer_row: usize, outer_col: usize, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |s, t| m.get(outer_row * d + s, outer_col * d + t))
}

/// Certified lower bound on an amplified norm, with the maximizer that
/// attains it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub d: usize,
    pub a: CMatrix,
    pub b: CMatrix,
    /// State coefficient matrices (`d x d`).
    pub omega: CMatrix,
    pub omega_p: CMatrix,
    pub restarts_used: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl NormEstimate {
    /// Recompute the objective at the stored maximizer.
    pub fn re_evaluate(&self, u: &FormTensor) -> Result<f64> {
        Ok(u.pair_dense(&self.a, &self.b, &self.omega, &self.omega_p)?.norm())
    }
}

#[derive(Debug, Clone)]
pub struct SeesawOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    /// Freeze the pairing states instead of optimizing them.
    pub frozen: Option<(CMatrix, CMatrix)>,
    /// Optional deterministic start, used for the first restart.
    pub warm_start: Option<(CMatrix, CMatrix)>,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        SeesawOptions {
            restarts: 32,
            max_iters: 500,
            rel_tol: tol::SEESAW_REL_IMPROVEMENT,
            seed: 0,
            frozen: None,
            warm_start: None,
        }
    }
}

/// See-saw estimate of `||u_d||`: alternating exact maximization of
/// `|<Omega, u_d(A, B) Omega'>|` over `||A|| <= 1`, `||B|| <= 1` and unit
/// `Omega, Omega'`. The returned value is a certified lower bound.
pub fn norm_seesaw(u: &FormTensor, d: usize, restarts: usize, seed: u64) -> Result<NormEstimate> {
    norm_seesaw_with(
        u,
        d,
        &SeesawOptions {
            restarts,
            seed,
            ..SeesawOptions::default()
        },
    )
}

/// See-saw with the pairing state frozen to the maximally entangled state,
/// estimating the tracially bounded norm at dimension `d`.
pub fn tracial_seesaw(u: &FormTensor, d: usize, restarts: usize, seed: u64) -> Result<NormEstimate> {
    let psi = SchmidtState::max_entangled(d)?.to_matrix();
    norm_seesaw_with(
        u,
        d,
        &SeesawOptions {
            restarts,
            seed,
            frozen: Some((psi.clone(), psi)),
            ..SeesawOptions::default()
        },
    )
}

pub fn norm_seesaw_with(u: &FormTensor, d: usize, opts: &SeesawOptions) -> Result<NormEstimate> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be positive".into()));
    }
    if let Some((o, op)) = &opts.frozen {
        if o.rows() != d || o.cols() != d || op.rows() != d || op.cols() != d {
            return Err(Error::DimMismatch {
                context: "norm_seesaw frozen states",
                expected: format!("{d}x{d}"),
                got: format!("{}x{} and {}x{}", o.rows(), o.cols(), op.rows(), op.cols()),
            });
        }
    }
    let restarts = opts.restarts.max(1);
    let mut best: Option<NormEstimate> = None;
    for restart in 0..restarts {
        let mut rng = rng_from_seed(derive_seed(opts.seed, "seesaw", restart as u64));
        let (mut a, mut b) = match (&opts.warm_start, restart) {
            (Some((a0, b0)), 0) => (a0.clone(), b0.clone()),
            _ => {
                let mut a = gaussian_complex_matrix(&mut rng, u.n * d, u.n * d, 1.0);
                let na = a.op_norm();
                if na > 0.0 {
                    a = a.scale_real(1.0 / na);
                }
                let mut b = gaussian_complex_matrix(&mut rng, u.m * d, u.m * d, 1.0);
                let nb = b.op_norm();
                if nb > 0.0 {
                    b = b.scale_real(1.0 / nb);
                }
                (a, b)
            }
        };
        let (mut omega, mut omega_p, dynamic_states) = match &opts.frozen {
            Some((o, op)) => (o.clone(), op.clone(), false),
            None => {
                // top singular pair of the first amplified value
                let amp = u.amplify(&a, &b)?;
                let (_, uvec, vvec) = amp.top_singular_triplet()?;
                (reshape_state(&uvec, d), reshape_state(&vvec, d), true)
            }
        };

        let mut value = u.pair_dense(&a, &b, &omega, &omega_p)?.norm();
        let mut iterations = 0usize;
        let mut converged = false;
        for _ in 0..opts.max_iters {
            iterations += 1;
            // A-step: V(A) = Tr(N_A A), maximized by the polar factor of N_A.
            let n_a = seesaw_target_a(u, &b, &omega, &omega_p)?;
            a = n_a.polar_maximizer()?;
            // B-step.
            let n_b = seesaw_target_b(u, &a, &omega, &omega_p)?;
            b = n_b.polar_maximizer()?;
            let mut new_value = u.pair_dense(&a, &b, &omega, &omega_p)?.norm();
            // State step: top singular pair of the amplified value.
            if dynamic_states {
                let amp = u.amplify(&a, &b)?;
                let (sigma, uvec, vvec) = amp.top_singular_triplet()?;
                omega = reshape_state(&uvec, d);
                omega_p = reshape_state(&vvec, d);
                new_value = sigma;
            }
            let improvement = new_value - value;
            value = value.max(new_value);
            if improvement.abs() <= opts.rel_tol * value.max(1.0) {
                converged = true;
                break;
            }
        }
        // Re-evaluate at the stored maximizer so the certificate is coherent.
        let value = u.pair_dense(&a, &b, &omega, &omega_p)?.norm();
        let candidate = NormEstimate {
            value,
            d,
            a,
            b,
            omega,
            omega_p,
            restarts_used: restart + 1,
            iterations,
            converged,
        };
        best = Some(match best {
            Some(prev) if prev.value >= candidate.value => {
                let mut prev = prev;
                prev.restarts_used = restart + 1;
                prev
            }
            _ => candidate,
        });
    }
    Ok(best.expect("at least one restart"))
}

fn reshape_state(v: &CMatrix, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| v.get(i * d + j, 0))
}

/// Assemble `N_A` with `V(A) = Tr(N_A A)` at fixed `B, Omega, Omega'`.
fn seesaw_target_a(
    u: &FormTensor,
    b: &CMatrix,
    omega: &CMatrix,
    omega_p: &CMatrix,
) -> Result<CMatrix> {
    let d = omega.rows();
    let o_conj = omega.conj();
    let op_t = omega_p.transpose();
    let mut n_a = CMatrix::zeros(u.n * d, u.n * d);
    for p in 0..u.m {
        for q in 0..u.m {
            let b_block = block_of(b, p, q, d);
            let cmat = o_conj.matmul(&b_block)?.matmul(&op_t)?;
            for k in 0..u.n {
                for l in 0..u.n {
                    let c = u.coeffs[[k, l, p, q]];
                    if c == C64::new(0.0, 0.0) {
                        continue;
                    }
                    // V(A) += sum_{s,t} A[(k,s),(l,t)] * c * cmat[s,t]
                    // so N_A[(l,t),(k,s)] += c * cmat[s,t]
                    for s in 0..d {
                        for t in 0..d {
                            let cur = n_a.get(l * d + t, k * d + s);
                            n_a.set(l * d + t, k * d + s, cur + c * cmat.get(s, t));
                        }
                    }
                }
            }
        }
    }
    Ok(n_a)
}

/// Assemble `N_B` with `V(B) = Tr(N_B B)` at fixed `A, Omega, Omega'`.
fn seesaw_target_b(
    u: &FormTensor,
    a: &CMatrix,
    omega: &CMatrix,
    omega_p: &CMatrix,
) -> Result<CMatrix> {
    let d = omega.rows();
    let o_adj = omega.adjoint();
    let mut n_b = CMatrix::zeros(u.m * d, u.m * d);
    for k in 0..u.n {
        for l in 0..u.n {
            let a_block = block_of(a, k, l, d);
            // <Omega, (x (x) y) Omega'> = sum_{j,j'} y[j,j'] (O^dag x O')[j,j']
            let rmat = o_adj.matmul(&a_block)?.matmul(omega_p)?;
            for p in 0..u.m {
                for q in 0..u.m {
                    let c = u.coeffs[[k, l, p, q]];
                    if c == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for j in 0..d {
                        for j2 in 0..d {
                            let cur = n_b.get(q * d + j2, p * d + j);
                            n_b.set(q * d + j2, p * d + j, cur + c * rmat.get(j, j2));
                        }
                    }
                }
            }
        }
    }
    Ok(n_b)
}

#[derive(Debug, Clone)]
pub struct OsSearchOptions {
    pub length: usize,
    pub flavor: ConstraintFlavor,
    /// Pin every `t_i` to this value; `Some(1.0)` searches the unweighted
    /// supremum.
    pub fixed_t: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
}

impl Default for OsSearchOptions {
    fn default() -> Self {
        OsSearchOptions {
            length: 1,
            flavor: ConstraintFlavor::Standard,
            fixed_t: None,
            restarts: 16,
            seed: 0,
            max_iters: 400,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OsSearchResult {
    pub value: f64,
    pub witness: WitnessSequence,
    pub constraint: ConstraintReport,
    pub restarts_used: usize,
}

/// Projected local search for the constrained supremum of
/// `|sum_i u(x_i, y_i)|`. The returned witness is feasible and its value is
/// a valid lower bound on the supremum.
pub fn os_search(u: &FormTensor, opts: &OsSearchOptions) -> Result<OsSearchResult> {
    if opts.length == 0 {
        return Err(Error::InvalidArgument("witness length must be positive".into()));
    }
    if let Some(t) = opts.fixed_t {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("fixed_t must be positive, got {t}")));
        }
    }
    let restarts = opts.restarts.max(1);
    let mut best: Option<(f64, Vec<CMatrix>, Vec<CMatrix>, Vec<f64>)> = None;
    for restart in 0..restarts {
        let mut rng = rng_from_seed(derive_seed(opts.seed, "os_search", restart as u64));
        let mut xs: Vec<CMatrix> = (0..opts.length)
            .map(|_| gaussian_complex_matrix(&mut rng, u.n, u.n, 1.0))
            .collect();
        let mut ys: Vec<CMatrix> = (0..opts.length)
            .map(|_| gaussian_complex_matrix(&mut rng, u.m, u.m, 1.0))
            .collect();
        let mut ts: Vec<f64> = vec![opts.fixed_t.unwrap_or(1.0); opts.length];
        project(&mut xs, &mut ys, &ts, opts.flavor)?;
        let mut value = objective(u, &xs, &ys)?;

        let mut eta_x = 0.5f64;
        let mut eta_y = 0.5f64;
        let mut eta_t = 0.5f64;
        for _ in 0..opts.max_iters {
            let mut any_improved = false;

            // x ascent with backtracking
            let theta = phase(u, &xs, &ys)?;
            let grads: Vec<CMatrix> = ys
                .iter()
                .map(|y| u.contract_right(y).scale(theta).conj())
                .collect();
            for _ in 0..10 {
                let mut trial = xs.clone();
                for (x, g) in trial.iter_mut().zip(&grads) {
                    x.add_scaled(C64::new(eta_x, 0.0), g)?;
                }
                let mut trial_ys = ys.clone();
                project(&mut trial, &mut trial_ys, &ts, opts.flavor)?;
                let trial_value = objective(u, &trial, &trial_ys)?;
                if trial_value > value {
                    xs = trial;
                    ys = trial_ys;
                    value = trial_value;
                    eta_x *= 1.5;
                    any_improved = true;
                    break;
                }
                eta_x *= 0.5;
            }

            // y ascent
            let theta = phase(u, &xs, &ys)?;
            let grads: Vec<CMatrix> = xs
                .iter()
                .map(|x| u.contract_left(x).scale(theta).conj())
                .collect();
            for _ in 0..10 {
                let mut trial = ys.clone();
                for (y, g) in trial.iter_mut().zip(&grads) {
                    y.add_scaled(C64::new(eta_y, 0.0), g)?;
                }
                let mut trial_xs = xs.clone();
                project(&mut trial_xs, &mut trial, &ts, opts.flavor)?;
                let trial_value = objective(u, &trial_xs, &trial)?;
                if trial_value > value {
                    ys = trial;
                    xs = trial_xs;
                    value = trial_value;
                    eta_y *= 1.5;
                    any_improved = true;
                    break;
                }
                eta_y *= 0.5;
            }

            // log-space coordinate moves on the weights
            if opts.fixed_t.is_none() {
                let mut t_improved = false;
                for i in 0..opts.length {
                    for dir in [1.0f64, -1.0] {
                        let mut trial_ts = ts.clone();
                        trial_ts[i] *= (dir * eta_t).exp();
                        let mut trial_xs = xs.clone();
                        let mut trial_ys = ys.clone();
                        project(&mut trial_xs, &mut trial_ys, &trial_ts, opts.flavor)?;
                        let trial_value = objective(u, &trial_xs, &trial_ys)?;
                        if trial_value > value {
                            ts = trial_ts;
                            xs = trial_xs;
                            ys = trial_ys;
                            value = trial_value;
                            t_improved = true;
                            break;
                        }
                    }
                }
                if t_improved {
                    eta_t *= 1.2;
                    any_improved = true;
                } else {
                    eta_t *= 0.5;
                }
            }

            if !any_improved && eta_x < 1e-12 && eta_y < 1e-12 && (opts.fixed_t.is_some() || eta_t < 1e-12)
            {
                break;
            }
        }

        project(&mut xs, &mut ys, &ts, opts.flavor)?;
        let value = objective(u, &xs, &ys)?;
        if best.as_ref().map_or(true, |(v, ..)| value > *v) {
            best = Some((value, xs, ys, ts));
        }
    }
    let (value, xs, ys, ts) = best.expect("at least one restart");
    let witness = WitnessSequence::new(xs, ys, ts)?;
    let constraint = check_constraint(&witness, opts.flavor)?;
    Ok(OsSearchResult {
        value,
        witness,
        constraint,
        restarts_used: restarts,
    })
}

fn objective(u: &FormTensor, xs: &[CMatrix], ys: &[CMatrix]) -> Result<f64> {
    let mut acc = C64::new(0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        acc += u.evaluate(x, y)?;
    }
    Ok(acc.norm())
}

/// `conj(e^{-i arg(sum u)})` as the multiplier turning the gradient of
/// `|sum u|` into a holomorphic one.
fn phase(u: &FormTensor, xs: &[CMatrix], ys: &[CMatrix]) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        acc += u.evaluate(x, y)?;
    }
    let norm = acc.norm();
    Ok(if norm > 0.0 {
        acc.conj() / norm
    } else {
        C64::new(1.0, 0.0)
    })
}

/// Exact feasibility restoration: rescale `xs` and `ys` so both sides of the
/// constraint sit on the boundary. Uses the homogeneity of the constraint
/// values (degree 2 for the standard flavor, degree 1 for the loose one).
fn project(
    xs: &mut [CMatrix],
    ys: &mut [CMatrix],
    ts: &[f64],
    flavor: ConstraintFlavor,
) -> Result<()> {
    let (vx, vy) = constraint_values(xs, ys, ts, flavor)?;
    if vx > 0.0 {
        let s = match flavor {
            ConstraintFlavor::Standard => (vx / 2.0).sqrt(),
            ConstraintFlavor::Loose => vx / 2.0,
        };
        for x in xs.iter_mut() {
            *x = x.scale_real(1.0 / s);
        }
    }
    if vy > 0.0 {
        let s = match flavor {
            ConstraintFlavor::Standard => (vy / 2.0).sqrt(),
            ConstraintFlavor::Loose => vy / 2.0,
        };
        for y in ys.iter_mut() {
            *y = y.scale_real(1.0 / s);
        }
    }
    Ok(())
}

fn constraint_values(
    xs: &[CMatrix],
    ys: &[CMatrix],
    ts: &[f64],
    flavor: ConstraintFlavor,
) -> Result<(f64, f64)> {
    let n = xs[0].rows();
    let m = ys[0].rows();
    let mut x_row = CMatrix::zeros(n, n);
    let mut x_col = CMatrix::zeros(n, n);
    let mut y_row = CMatrix::zeros(m, m);
    let mut y_col = CMatrix::zeros(m, m);
    for ((x, y), &t) in xs.iter().zip(ys).zip(ts) {
        x_row.add_assign(&x.matmul(&x.adjoint())?)?;
        x_col.add_scaled(C64::new(t * t, 0.0), &x.adjoint().matmul(x)?)?;
        y_row.add_scaled(C64::new(1.0 / (t * t), 0.0), &y.matmul(&y.adjoint())?)?;
        y_col.add_assign(&y.adjoint().matmul(y)?)?;
    }
    let (a, b, c, e) = (
        x_row.op_norm(),
        x_col.op_norm(),
        y_row.op_norm(),
        y_col.op_norm(),
    );
    Ok(match flavor {
        ConstraintFlavor::Standard => (a + b, c + e),
        ConstraintFlavor::Loose => (a.sqrt() + b.sqrt(), c.sqrt() + e.sqrt()),
    })
}

/// Lower-bound estimate of the row/column inflation `eta(M_n)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EtaEstimate {
    /// Best `||sum x x*||` found subject to `||sum x* x|| = 1`.
    pub best_ratio: f64,
    /// `sqrt(best_ratio)`, the lower bound on `eta(M_n)`.
    pub lower_bound: f64,
    /// Ratio attained by the matrix-unit witness `x_j = E_{1j}`; exactly `n`.
    pub matrix_unit_ratio: f64,
    pub witness: Vec<CMatrix>,
    pub restarts_used: usize,
}

/// Search sequences in `M_n` maximizing `||sum x x*||` subject to
/// `||sum x* x|| <= 1`; always includes the matrix-unit witness, whose ratio
/// is exactly `n`.
pub fn eta_witness_search(
    n: usize,
    length: usize,
    restarts: usize,
    seed: u64,
) -> Result<EtaEstimate> {
    if n == 0 || length == 0 {
        return Err(Error::InvalidArgument("n and length must be positive".into()));
    }
    // Matrix-unit witness: sum_j E_{1j}^* E_{1j} = Id, sum_j E_{1j} E_{1j}^* = n E_{11}.
    let unit_witness: Vec<CMatrix> = (0..n).map(|j| CMatrix::matrix_unit(n, 0, j)).collect();
    let unit_col = crate::numerics::gram_sum_norm(&unit_witness, true)?;
    let unit_row = crate::numerics::gram_sum_norm(&unit_witness, false)?;
    let matrix_unit_ratio = unit_row / unit_col;

    let mut best_ratio = matrix_unit_ratio;
    let mut best_witness = unit_witness;
    for restart in 0..restarts.max(1) {
        let mut rng = rng_from_seed(derive_seed(seed, "eta_search", restart as u64));
        let mut xs: Vec<CMatrix> = (0..length)
            .map(|_| gaussian_complex_matrix(&mut rng, n, n, 1.0))
            .collect();
        normalize_col(&mut xs)?;
        let mut ratio = crate::numerics::gram_sum_norm(&xs, false)?;
        let mut eta = 0.5f64;
        for _ in 0..200 {
            // ascent along the top eigenvector of sum x x*
            let mut row = CMatrix::zeros(n, n);
            for x in &xs {
                row.add_assign(&x.matmul(&x.adjoint())?)?;
            }
            let (vals, vecs) = row.eigh_hermitian(1e-9)?;
            let top = vals.len() - 1;
            let v = CMatrix::from_fn(n, 1, |i, _| vecs.get(i, top));
            let proj = v.matmul(&v.adjoint())?;
            let mut improved = false;
            for _ in 0..8 {
                let mut trial: Vec<CMatrix> = xs
                    .iter()
                    .map(|x| {
                        let step = proj.matmul(x)?.scale_real(eta);
                        x.add(&step)
                    })
                    .collect::<Result<_>>()?;
                normalize_col(&mut trial)?;
                let trial_ratio = crate::numerics::gram_sum_norm(&trial, false)?;
                if trial_ratio > ratio {
                    xs = trial;
                    ratio = trial_ratio;
                    eta *= 1.5;
                    improved = true;
                    break;
                }
                eta *= 0.5;
            }
            if !improved && eta < 1e-12 {
                break;
            }
        }
        if ratio > best_ratio {
            best_ratio = ratio;
            best_witness = xs;
        }
    }
    Ok(EtaEstimate {
        best_ratio,
        lower_bound: best_ratio.sqrt(),
        matrix_unit_ratio,
        witness: best_witness,
        restarts_used: restarts.max(1),
    })
}

fn normalize_col(xs: &mut [CMatrix]) -> Result<()> {
    let col = crate::numerics::gram_sum_norm(xs, true)?;
    if col > 0.0 {
        let s = 1.0 / col.sqrt();
        for x in xs.iter_mut() {
            *x = x.scale_real(s);
        }
    }
    Ok(())
}
