//! Independent spectral oracle: a hand-rolled cyclic Jacobi eigensolver for
//! Hermitian matrices, kept free of the library's LAPACK-backed path, used
//! to cross-check singular values, operator norms, trace norms, extremal
//! eigenvalues and polar factors at small dimension.

use cbnorm::numerics::{C64, CMatrix};
use cbnorm::rng::{gaussian_complex_matrix, rng_from_seed};

use proptest::prelude::*;

/// Dense multiply on raw nested vectors; no library code involved.
fn raw_mul(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    let mut out = vec![vec![C64::new(0.0, 0.0); m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..k {
                acc += a[i][l] * b[l][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

fn raw_adjoint(a: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = a.len();
    let m = a[0].len();
    let mut out = vec![vec![C64::new(0.0, 0.0); n]; m];
    for i in 0..n {
        for j in 0..m {
            out[j][i] = a[i][j].conj();
        }
    }
    out
}

fn to_raw(m: &CMatrix) -> Vec<Vec<C64>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.get(i, j)).collect())
        .collect()
}

/// Cyclic Jacobi for Hermitian matrices: eigenvalues ascending.
fn jacobi_eigvalsh(h: &[Vec<C64>]) -> Vec<f64> {
    let n = h.len();
    let mut a: Vec<Vec<C64>> = h.to_vec();
    let scale: f64 = a
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q].norm();
            }
        }
        if off <= 1e-14 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r; // e^{i phi}
                let alpha = a[p][p].re;
                let gamma = a[q][q].re;
                let tau = (gamma - alpha) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // R = [[c, s e^{i phi}], [-s e^{-i phi}, c]] on (p, q)
                let se_pos = phase * s;
                let se_neg = phase.conj() * s;
                // columns: M <- A R
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = akp * c - akq * se_neg;
                    a[k][q] = akp * se_pos + akq * c;
                }
                // rows: A <- R^dagger M
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = apk * c - aqk * se_pos;
                    a[q][k] = apk * se_neg + aqk * c;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| a[i][i].re).collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    vals
}

fn oracle_singular_values(m: &CMatrix) -> Vec<f64> {
    let raw = to_raw(m);
    let gram = raw_mul(&raw_adjoint(&raw), &raw);
    jacobi_eigvalsh(&gram)
        .into_iter()
        .rev()
        .map(|l| l.max(0.0).sqrt())
        .collect()
}

#[test]
fn jacobi_oracle_self_check() {
    // [[2, i], [-i, 2]] has eigenvalues 1 and 3
    let h = vec![
        vec![C64::new(2.0, 0.0), C64::new(0.0, 1.0)],
        vec![C64::new(0.0, -1.0), C64::new(2.0, 0.0)],
    ];
    let vals = jacobi_eigvalsh(&h);
    assert!((vals[0] - 1.0).abs() < 1e-12);
    assert!((vals[1] - 3.0).abs() < 1e-12);
}

#[test]
fn eigenvalues_match_oracle() {
    let mut rng = rng_from_seed(2001);
    for n in [1usize, 2, 3, 5, 8] {
        for _ in 0..4 {
            let g = gaussian_complex_matrix(&mut rng, n, n, 1.0);
            let h = g.hermitian_part().unwrap();
            let lib = h.eigvalsh(1e-9).unwrap();
            let oracle = jacobi_eigvalsh(&to_raw(&h));
            for (a, b) in lib.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn eigenvectors_satisfy_residual() {
    let mut rng = rng_from_seed(2002);
    for n in [2usize, 4, 7] {
        let g = gaussian_complex_matrix(&mut rng, n, n, 1.0);
        let h = g.hermitian_part().unwrap();
        let (vals, vecs) = h.eigh_hermitian(1e-9).unwrap();
        for idx in 0..n {
            let v = CMatrix::from_fn(n, 1, |i, _| vecs.get(i, idx));
            let hv = h.matmul(&v).unwrap();
            let lv = v.scale_real(vals[idx]);
            assert!(
                hv.sub(&lv).unwrap().max_abs() < 1e-10,
                "eigenpair {idx} of {n} fails the residual"
            );
        }
    }
}

#[test]
fn singular_values_match_oracle() {
    let mut rng = rng_from_seed(2003);
    for (r, c) in [(1usize, 1usize), (2, 2), (3, 5), (5, 3), (6, 6)] {
        let m = gaussian_complex_matrix(&mut rng, r, c, 1.0);
        let lib = m.singular_values().unwrap();
        let oracle = oracle_singular_values(&m);
        assert_eq!(lib.len(), r.min(c).max(lib.len().min(1)));
        for (a, b) in lib.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10, "{r}x{c}: {a} vs {b}");
        }
        assert!((m.op_norm() - oracle[0]).abs() < 1e-10);
        let oracle_tn: f64 = oracle.iter().take(r.min(c)).sum();
        assert!((m.trace_norm() - oracle_tn).abs() < 1e-9);
    }
}

#[test]
fn min_eigenvalue_matches_oracle() {
    let mut rng = rng_from_seed(2004);
    for _ in 0..6 {
        let g = gaussian_complex_matrix(&mut rng, 5, 5, 1.0);
        let h = g.hermitian_part().unwrap();
        let lib = h.min_eigenvalue().unwrap();
        let oracle = jacobi_eigvalsh(&to_raw(&h))[0];
        assert!((lib - oracle).abs() < 1e-10);
    }
}

#[test]
fn polar_maximizer_against_oracle_trace_norm() {
    let mut rng = rng_from_seed(2005);
    for _ in 0..6 {
        let m = gaussian_complex_matrix(&mut rng, 4, 4, 1.0);
        let a = m.polar_maximizer().unwrap();
        let attained = m.matmul(&a).unwrap().trace();
        let oracle_tn: f64 = oracle_singular_values(&m).iter().take(4).sum();
        assert!(attained.im.abs() < 1e-10);
        assert!((attained.re - oracle_tn).abs() < 1e-9);
        assert!(a.op_norm() <= 1.0 + 1e-10);
    }
}

// Property tests over small integer/real matrices.

fn small_matrix(max_dim: usize) -> impl Strategy<Value = CMatrix> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| {
        proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), r * c).prop_map(
            move |entries| {
                CMatrix::new(
                    r,
                    c,
                    entries.into_iter().map(|(re, im)| C64::new(re, im)).collect(),
                )
                .unwrap()
            },
        )
    })
}

fn small_integer_matrix(max_dim: usize) -> impl Strategy<Value = CMatrix> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| {
        proptest::collection::vec(-3i32..=3, r * c).prop_map(move |entries| {
            CMatrix::new(
                r,
                c,
                entries
                    .into_iter()
                    .map(|k| C64::new(k as f64, 0.0))
                    .collect(),
            )
            .unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_associative_on_integers(
        a in small_integer_matrix(3),
        b in small_integer_matrix(3),
        c in small_integer_matrix(2),
    ) {
        let left = a.kron(&b).kron(&c);
        let right = a.kron(&b.kron(&c));
        prop_assert_eq!(left, right);
    }

    #[test]
    fn op_norm_multiplicative_under_kron(a in small_matrix(3), b in small_matrix(3)) {
        let prod = a.kron(&b).op_norm();
        let expected = a.op_norm() * b.op_norm();
        prop_assert!((prod - expected).abs() <= 1e-10 * expected.max(1.0));
    }

    #[test]
    fn norm_chain(a in small_matrix(4)) {
        let op = a.op_norm();
        let tr = a.trace_norm();
        let rank = a
            .singular_values()
            .unwrap()
            .iter()
            .filter(|&&s| s > 1e-10 * op.max(1.0))
            .count();
        prop_assert!(op <= tr + 1e-10);
        prop_assert!(tr <= rank as f64 * op + 1e-9);
    }

    #[test]
    fn gram_matrices_are_psd(a in small_matrix(4)) {
        let aa = a.matmul(&a.adjoint()).unwrap();
        let floor = aa.min_eigenvalue_with_tol(1e-9).unwrap();
        prop_assert!(floor >= -1e-12 * aa.op_norm().max(1.0));
    }

    #[test]
    fn adjoint_is_involutive(a in small_matrix(4)) {
        prop_assert_eq!(a.adjoint().adjoint(), a);
    }
}
