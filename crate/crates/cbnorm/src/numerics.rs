//! Dense complex matrix kernels shared by every other module.
//!
//! [`CMatrix`] is the universal numeric carrier: a dense, row-major complex
//! matrix with explicit dimensions. Spectral quantities (operator norm, trace
//! norm, extremal eigenvalues, polar factors) are computed through a full
//! Hermitian eigendecomposition of the Gram matrix `A*A` (or `AA*`, whichever
//! is smaller), which at desk-scale dimensions is cheaper than tuning
//! iterative methods. The eigendecomposition itself is delegated to LAPACK.
//!
//! All operations are pure functions on immutable inputs.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    data: Array2<C64>,
}

impl std::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CMatrix {}x{} {:?}", self.rows(), self.cols(), self.data)
    }
}

impl CMatrix {
    /// Build from row-major entries; checks the count and finiteness.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimMismatch {
                context: "CMatrix::new",
                expected: format!("{} entries", rows * cols),
                got: format!("{}", entries.len()),
            });
        }
        if !entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let data = Array2::from_shape_vec((rows, cols), entries)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(CMatrix { data })
    }

    /// Wrap an `ndarray` array; checks finiteness.
    pub fn from_array(data: Array2<C64>) -> Result<Self> {
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(CMatrix { data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            data: Array2::zeros((rows, cols)),
        }
    }

    pub fn identity(n: usize) -> Self {
        CMatrix {
            data: Array2::eye(n),
        }
    }

    /// Matrix unit `E_{ij}` of size `n` (zero-based indices).
    pub fn matrix_unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.data[[i, j]] = C64::new(1.0, 0.0);
        m
    }

    /// Square diagonal matrix from real entries.
    pub fn diag_real(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in entries.iter().enumerate() {
            m.data[[i, i]] = C64::new(v, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        CMatrix {
            data: Array2::from_shape_fn((rows, cols), |(i, j)| f(i, j)),
        }
    }

    /// Build from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            entries.iter().map(|&x| C64::new(x, 0.0)).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[[i, j]]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[[i, j]] = v;
    }

    pub fn as_array(&self) -> &Array2<C64> {
        &self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        let mut out = Array2::zeros((self.cols(), self.rows()));
        for ((i, j), z) in self.data.indexed_iter() {
            out[[j, i]] = z.conj();
        }
        CMatrix { data: out }
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix {
            data: self.data.t().to_owned(),
        }
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix {
            data: self.data.mapv(|z| z.conj()),
        }
    }

    /// Matrix product.
    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols() != rhs.rows() {
            return Err(Error::DimMismatch {
                context: "matmul",
                expected: format!("{} rows", self.cols()),
                got: format!("{}", rhs.rows()),
            });
        }
        Ok(CMatrix {
            data: self.data.dot(&rhs.data),
        })
    }

    pub fn add(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.check_same_shape(rhs, "add")?;
        Ok(CMatrix {
            data: &self.data + &rhs.data,
        })
    }

    pub fn sub(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.check_same_shape(rhs, "sub")?;
        Ok(CMatrix {
            data: &self.data - &rhs.data,
        })
    }

    pub fn add_assign(&mut self, rhs: &CMatrix) -> Result<()> {
        self.check_same_shape(rhs, "add_assign")?;
        self.data += &rhs.data;
        Ok(())
    }

    /// `self += c * rhs`.
    pub fn add_scaled(&mut self, c: C64, rhs: &CMatrix) -> Result<()> {
        self.check_same_shape(rhs, "add_scaled")?;
        self.data.zip_mut_with(&rhs.data, |a, &b| *a += c * b);
        Ok(())
    }

    pub fn scale(&self, c: C64) -> CMatrix {
        CMatrix {
            data: self.data.mapv(|z| c * z),
        }
    }

    pub fn scale_real(&self, c: f64) -> CMatrix {
        self.scale(C64::new(c, 0.0))
    }

    fn check_same_shape(&self, rhs: &CMatrix, context: &'static str) -> Result<()> {
        if self.rows() != rhs.rows() || self.cols() != rhs.cols() {
            return Err(Error::DimMismatch {
                context,
                expected: format!("{}x{}", self.rows(), self.cols()),
                got: format!("{}x{}", rhs.rows(), rhs.cols()),
            });
        }
        Ok(())
    }

    /// Kronecker product: entry `((i,k),(j,l)) = self[i,j] * other[k,l]`.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        CMatrix {
            data: ndarray::linalg::kron(&self.data, &other.data),
        }
    }

    pub fn trace(&self) -> C64 {
        self.data.diag().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max entrywise deviation from the conjugate transpose; 0 for Hermitian.
    pub fn hermitian_defect(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                dev = dev.max((self.data[[i, j]] - self.data[[j, i]].conj()).norm());
            }
        }
        dev
    }

    /// `(A + A*)/2`; requires a square input.
    pub fn hermitian_part(&self) -> Result<CMatrix> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows(),
                cols: self.cols(),
            });
        }
        let adj = self.adjoint();
        Ok(CMatrix {
            data: (&self.data + &adj.data).mapv(|z| 0.5 * z),
        })
    }

    /// Gram matrix `A* A` (cols x cols).
    pub fn gram(&self) -> CMatrix {
        CMatrix {
            data: self.adjoint().data.dot(&self.data),
        }
    }

    /// Eigendecomposition of a Hermitian matrix; eigenvalues ascending,
    /// eigenvectors as columns. The input is symmetrized when its deviation
    /// from Hermitian is within `herm_tol`, otherwise rejected.
    pub fn eigh_hermitian(&self, herm_tol: f64) -> Result<(Vec<f64>, CMatrix)> {
        let h = self.checked_hermitian(herm_tol)?;
        let (vals, mut vecs) = h
            .data
            .eigh(UPLO::Lower)
            .map_err(|e| Error::Linalg(e.to_string()))?;
        // Depending on the memory layout handed to LAPACK, the returned
        // columns can be eigenvectors of H or of conj(H) (= transpose for a
        // Hermitian input). Disambiguate by the residual of an extremal
        // eigenvector and conjugate if needed.
        let n = h.rows();
        if n > 0 {
            let idx = n - 1;
            let lambda = vals[idx];
            let v = vecs.column(idx).to_owned();
            let residual = |w: &Array1<C64>| -> f64 {
                let hw = h.data.dot(w);
                hw.iter()
                    .zip(w.iter())
                    .map(|(a, b)| (a - b * lambda).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            };
            let vc = v.mapv(|z| z.conj());
            if residual(&vc) < residual(&v) {
                vecs.mapv_inplace(|z| z.conj());
            }
        }
        Ok((vals.to_vec(), CMatrix { data: vecs }))
    }

    /// Eigenvalues only, ascending, of a Hermitian matrix.
    pub fn eigvalsh(&self, herm_tol: f64) -> Result<Vec<f64>> {
        let h = self.checked_hermitian(herm_tol)?;
        let (vals, _) = h
            .data
            .eigh(UPLO::Lower)
            .map_err(|e| Error::Linalg(e.to_string()))?;
        Ok(vals.to_vec())
    }

    fn checked_hermitian(&self, herm_tol: f64) -> Result<CMatrix> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows(),
                cols: self.cols(),
            });
        }
        let dev = self.hermitian_defect();
        if dev > herm_tol * self.max_abs().max(1.0) {
            return Err(Error::NotHermitian {
                tol: herm_tol,
                deviation: dev,
            });
        }
        self.hermitian_part()
    }

    /// Singular values, descending, via the Hermitian eigendecomposition of
    /// the smaller of `A*A` and `AA*`.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        if self.rows() == 0 || self.cols() == 0 {
            return Ok(Vec::new());
        }
        let gram = if self.cols() <= self.rows() {
            self.gram()
        } else {
            CMatrix {
                data: self.data.dot(&self.adjoint().data),
            }
        };
        // Products of finite matrices stay Hermitian up to rounding; a loose
        // multiple of machine epsilon absorbs it.
        let mut vals = gram.eigvalsh(1e-9)?;
        vals.reverse();
        Ok(vals.iter().map(|&l| l.max(0.0).sqrt()).collect())
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        self.singular_values()
            .map(|s| s.first().copied().unwrap_or(0.0))
            .unwrap_or(f64::NAN)
    }

    /// Sum of singular values.
    pub fn trace_norm(&self) -> f64 {
        self.singular_values()
            .map(|s| s.iter().sum())
            .unwrap_or(f64::NAN)
    }

    /// Smallest eigenvalue of the Hermitian part `(H + H*)/2`.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        self.min_eigenvalue_with_tol(tol::HERMITICITY)
    }

    pub fn min_eigenvalue_with_tol(&self, herm_tol: f64) -> Result<f64> {
        let vals = self.eigvalsh(herm_tol)?;
        Ok(vals.first().copied().unwrap_or(0.0))
    }

    /// Largest eigenvalue of the Hermitian part.
    pub fn max_eigenvalue(&self) -> Result<f64> {
        let vals = self.eigvalsh(tol::HERMITICITY)?;
        Ok(vals.last().copied().unwrap_or(0.0))
    }

    /// The contraction `a` with `||a|| <= 1` maximizing `Re Tr(M a)`:
    /// the adjoint of the polar unitary factor of `M`, restricted to its
    /// support. Satisfies `Tr(M a) = trace_norm(M)` up to rounding; returns
    /// the zero matrix for `M = 0`.
    pub fn polar_maximizer(&self) -> Result<CMatrix> {
        let m = self.rows();
        let n = self.cols();
        if m == 0 || n == 0 {
            return Ok(CMatrix::zeros(n, m));
        }
        // Eigendecompose A*A: columns of V are right singular vectors.
        let (vals, v) = self.gram().eigh_hermitian(1e-9)?;
        let sigma: Vec<f64> = vals.iter().map(|&l| l.max(0.0).sqrt()).collect();
        let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
        if sigma_max == 0.0 {
            return Ok(CMatrix::zeros(n, m));
        }
        let cut = tol::SUPPORT_CUTOFF * sigma_max;
        // Columns of W = A V are sigma_i * u_i.
        let w = self.data.dot(&v.data);
        // a = sum_{sigma_i > cut} v_i (w_i / sigma_i)^*  (n x m)
        let mut a = Array2::<C64>::zeros((n, m));
        for (idx, &s) in sigma.iter().enumerate() {
            if s > cut {
                let inv = 1.0 / s;
                for r in 0..n {
                    let vr = v.data[[r, idx]];
                    for c in 0..m {
                        a[[r, c]] += vr * (w[[c, idx]] * inv).conj();
                    }
                }
            }
        }
        Ok(CMatrix { data: a })
    }

    /// Top singular triplet `(sigma, u, v)` with `u, v` as column vectors,
    /// so that `self . v = sigma u`.
    pub fn top_singular_triplet(&self) -> Result<(f64, CMatrix, CMatrix)> {
        let (vals, vmat) = self.gram().eigh_hermitian(1e-9)?;
        let n = self.cols();
        let idx = n - 1; // ascending order: last is largest
        let sigma = vals[idx].max(0.0).sqrt();
        let v = CMatrix {
            data: vmat.data.column(idx).insert_axis(ndarray::Axis(1)).to_owned(),
        };
        let u = if sigma > 0.0 {
            let w = self.data.dot(&v.data);
            CMatrix {
                data: w.mapv(|z| z / C64::new(sigma, 0.0)),
            }
        } else {
            let mut u = CMatrix::zeros(self.rows(), 1);
            u.set(0, 0, C64::new(1.0, 0.0));
            u
        };
        Ok((sigma, u, v))
    }

    /// Inner product `<self, rhs> = Tr(self* rhs)` (conjugate-linear on the left).
    pub fn inner(&self, rhs: &CMatrix) -> Result<C64> {
        self.check_same_shape(rhs, "inner")?;
        let mut acc = C64::new(0.0, 0.0);
        for (a, b) in self.data.iter().zip(rhs.data.iter()) {
            acc += a.conj() * b;
        }
        Ok(acc)
    }
}

/// `sum_i c_i * m_i` over an iterator of (coefficient, matrix) pairs.
pub fn weighted_sum<'a>(
    rows: usize,
    cols: usize,
    terms: impl IntoIterator<Item = (C64, &'a CMatrix)>,
) -> Result<CMatrix> {
    let mut acc = CMatrix::zeros(rows, cols);
    for (c, m) in terms {
        acc.add_scaled(c, m)?;
    }
    Ok(acc)
}

/// `||sum_i m_i m_i*||` for a slice of equally sized square matrices.
pub fn gram_sum_norm(ms: &[CMatrix], adjoint_first: bool) -> Result<f64> {
    let n = match ms.first() {
        Some(m) => {
            if !m.is_square() {
                return Err(Error::NotSquare {
                    rows: m.rows(),
                    cols: m.cols(),
                });
            }
            if adjoint_first {
                m.cols()
            } else {
                m.rows()
            }
        }
        None => return Ok(0.0),
    };
    let mut acc = CMatrix::zeros(n, n);
    for m in ms {
        let term = if adjoint_first {
            m.adjoint().matmul(m)?
        } else {
            m.matmul(&m.adjoint())?
        };
        acc.add_assign(&term)?;
    }
    Ok(acc.op_norm())
}

// Wire format: a matrix is a nested array of rows, each entry a [re, im] pair.
impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut rows = serializer.serialize_seq(Some(self.rows()))?;
        for i in 0..self.rows() {
            let row: Vec<[f64; 2]> = (0..self.cols())
                .map(|j| {
                    let z = self.get(i, j);
                    [z.re, z.im]
                })
                .collect();
            rows.serialize_element(&row)?;
        }
        rows.end()
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct MatVisitor;

        impl<'de> Visitor<'de> for MatVisitor {
            type Value = CMatrix;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a nested array of [re, im] pairs")
            }

            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<CMatrix, A::Error> {
                let mut entries: Vec<C64> = Vec::new();
                let mut rows = 0usize;
                let mut cols: Option<usize> = None;
                while let Some(row) = seq.next_element::<Vec<[f64; 2]>>()? {
                    match cols {
                        None => cols = Some(row.len()),
                        Some(c) if c != row.len() => {
                            return Err(de::Error::custom("ragged matrix rows"));
                        }
                        _ => {}
                    }
                    entries.extend(row.iter().map(|p| C64::new(p[0], p[1])));
                    rows += 1;
                }
                let cols = cols.unwrap_or(0);
                CMatrix::new(rows, cols, entries).map_err(de::Error::custom)
            }
        }

        deserializer.deserialize_seq(MatVisitor)
    }
}

/// Serde adapter storing a complex scalar as a `[re, im]` pair.
pub mod c64_serde {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

/// Column vector helper: wraps a `Vec<C64>` as an `n x 1` matrix.
pub fn column(entries: Vec<C64>) -> CMatrix {
    CMatrix {
        data: Array1::from(entries).insert_axis(ndarray::Axis(1)).into(),
    }
}
