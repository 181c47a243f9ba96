//! Dense complex linear algebra helpers: fast products, the matrix
//! exponential, and a checked Hermitian eigensolver.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::op::CMatrix;

/// C = A·B through the SIMD gemm kernel (column-major strides).
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (m, k) = a.shape();
    let (k2, n) = b.shape();
    assert_eq!(k, k2, "inner dimensions must agree");
    let mut c = CMatrix::zeros(m, n);
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_slice().as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_slice().as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_slice().as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

/// A·B·A* (unitary conjugation pattern).
pub fn conjugate(u: &CMatrix, h: &CMatrix) -> CMatrix {
    let uh = matmul(u, h);
    matmul(&uh, &u.adjoint())
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max-norm deviation from the identity.
pub fn identity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            dev = dev.max((m[(i, j)] - target).norm());
        }
    }
    dev
}

/// Matrix exponential by scaling-and-squaring with order control.
///
/// The scaled matrix is pushed below ‖X‖₁ ≤ 0.5 and evaluated with a
/// Paterson–Stockmeyer Taylor polynomial whose order (4/8/12/18) is chosen
/// from the scaled norm; truncation stays below 1e-22, far inside the
/// 1e-13 contract.
pub fn expm(x: &CMatrix) -> CMatrix {
    let n = x.nrows();
    let norm1 = one_norm(x);
    let s = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let a = x / Complex64::new(2f64.powi(s), 0.0);
    let na = one_norm(&a);
    let order = if na < 1e-3 {
        4
    } else if na < 0.05 {
        8
    } else if na < 0.25 {
        12
    } else {
        18
    };
    let mut e = taylor_ps(&a, order);
    for _ in 0..s {
        e = matmul(&e, &e);
    }
    let _ = n;
    e
}

/// Paterson–Stockmeyer evaluation of Σ_{k≤order} A^k/k! with chunk size 6.
fn taylor_ps(a: &CMatrix, order: usize) -> CMatrix {
    let n = a.nrows();
    let id = CMatrix::identity(n, n);
    // powers A^0..A^5 and A^6
    let mut pows: Vec<CMatrix> = vec![id.clone(), a.clone()];
    for k in 2..=6usize.min(order) {
        let p = matmul(&pows[k - 1], a);
        pows.push(p);
    }
    if order <= 6 {
        let mut acc = CMatrix::zeros(n, n);
        let mut fact = 1.0f64;
        for (k, p) in pows.iter().enumerate().take(order + 1) {
            if k > 0 {
                fact *= k as f64;
            }
            acc += p * Complex64::new(1.0 / fact, 0.0);
        }
        return acc;
    }
    let a6 = &pows[6];
    let chunk = |j0: usize| -> CMatrix {
        let mut acc = CMatrix::zeros(n, n);
        for r in 0..6 {
            let k = j0 + r;
            if k > order {
                break;
            }
            acc += &pows[r] * Complex64::new(1.0 / factorial(k), 0.0);
        }
        acc
    };
    let n_chunks = order / 6 + 1;
    let mut acc = chunk(6 * (n_chunks - 1));
    for j in (0..n_chunks - 1).rev() {
        acc = matmul(&acc, a6) + chunk(6 * j);
    }
    acc
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product::<f64>().max(1.0)
}

fn one_norm(m: &CMatrix) -> f64 {
    let (rows, cols) = m.shape();
    let mut best = 0.0f64;
    for j in 0..cols {
        let mut acc = 0.0;
        for i in 0..rows {
            acc += m[(i, j)].norm();
        }
        best = best.max(acc);
    }
    best
}

/// Eigendecomposition of a Hermitian matrix with post-hoc residual and
/// orthonormality checks. Returns eigenvalues ascending with matching
/// eigenvector columns.
pub fn eigh(matrix: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = matrix.nrows();
    if n == 0 {
        return Ok((vec![], CMatrix::zeros(0, 0)));
    }
    let se = matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(src));
    }
    let scale = values.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
    // residual ‖Av − λv‖ on a deterministic sample of columns
    let sample: Vec<usize> = if n <= 64 {
        (0..n).collect()
    } else {
        (0..64).map(|i| i * (n - 1) / 63).collect()
    };
    for &k in &sample {
        let v = vectors.column(k);
        let av = matrix * v;
        let lv = v * Complex64::new(values[k], 0.0);
        let resid = (av - lv).norm();
        if resid > 1e-9 * scale {
            return Err(Error::SolverFailure(format!(
                "eigenpair residual {resid:.3e} exceeds 1e-9·‖A‖ = {:.3e}",
                1e-9 * scale
            )));
        }
        for &k2 in sample.iter().take(8) {
            let dot = vectors.column(k2).adjoint() * vectors.column(k);
            let target = if k2 == k { 1.0 } else { 0.0 };
            if (dot[(0, 0)] - Complex64::new(target, 0.0)).norm() > 1e-9 {
                return Err(Error::SolverFailure(
                    "eigenvectors are not orthonormal to 1e-9".into(),
                ));
            }
        }
    }
    Ok((values, vectors))
}

/// Eigenvalues only, sorted ascending.
pub fn eigvalsh(matrix: &CMatrix) -> Result<Vec<f64>> {
    eigh(matrix).map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let z = Complex64::new(
                    rng.gen::<f64>() - 0.5,
                    if i == j { 0.0 } else { rng.gen::<f64>() - 0.5 },
                );
                a[(i, j)] = z;
                a[(j, i)] = z.conj();
            }
        }
        a
    }

    #[test]
    fn matmul_matches_nalgebra() {
        let a = random_hermitian(37, 1);
        let b = random_hermitian(37, 2);
        let c1 = matmul(&a, &b);
        let c2 = &a * &b;
        assert!(max_abs(&(c1 - c2)) < 1e-12);
    }

    #[test]
    fn eigh_two_by_two() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        let (vals, _) = eigh(&m).unwrap();
        assert_relative_eq!(vals[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(vals[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigh_diagonal_identity_vectors() {
        let mut m = CMatrix::zeros(4, 4);
        for (i, v) in [3.0, -1.0, 7.0, 0.5].iter().enumerate() {
            m[(i, i)] = Complex64::new(*v, 0.0);
        }
        let (vals, vecs) = eigh(&m).unwrap();
        assert_eq!(vals, vec![-1.0, 0.5, 3.0, 7.0]);
        for col in 0..4 {
            let mut nonzero = 0;
            for row in 0..4 {
                if vecs[(row, col)].norm() > 1e-12 {
                    nonzero += 1;
                }
            }
            assert_eq!(nonzero, 1);
        }
    }

    #[test]
    fn expm_unitary_for_antihermitian_exponent() {
        let g = random_hermitian(60, 5);
        let x = &g * Complex64::new(0.0, -1.0);
        let u = expm(&x);
        let uut = matmul(&u, &u.adjoint());
        assert!(identity_deviation(&uut) < 1e-12);
    }

    #[test]
    fn expm_matches_eigendecomposition_oracle() {
        // independent route: G = QΛQ*, exp(-iG) = Q e^{-iΛ} Q*
        let g = random_hermitian(40, 9) * Complex64::new(3.0, 0.0);
        let x = &g * Complex64::new(0.0, -1.0);
        let u = expm(&x);
        let (vals, q) = eigh(&g).unwrap();
        let mut d = CMatrix::zeros(40, 40);
        for (i, &l) in vals.iter().enumerate() {
            d[(i, i)] = Complex64::new(0.0, -l).exp();
        }
        let oracle = matmul(&matmul(&q, &d), &q.adjoint());
        assert!(max_abs(&(u - oracle)) < 1e-12);
    }

    #[test]
    fn expm_scalar_cases() {
        let mut x = CMatrix::zeros(1, 1);
        x[(0, 0)] = Complex64::new(0.0, 2.0);
        let u = expm(&x);
        assert_relative_eq!(u[(0, 0)].re, 2f64.cos(), epsilon = 1e-14);
        assert_relative_eq!(u[(0, 0)].im, 2f64.sin(), epsilon = 1e-14);
        let z = CMatrix::zeros(3, 3);
        assert!(identity_deviation(&expm(&z)) < 1e-15);
    }

    #[test]
    fn eigh_spectral_conservation_under_conjugation() {
        let h = random_hermitian(50, 12);
        let g = random_hermitian(50, 13);
        let u = expm(&(&g * Complex64::new(0.0, -1.0)));
        let h2 = conjugate(&u, &h);
        let v1 = eigvalsh(&h).unwrap();
        let v2 = eigvalsh(&h2).unwrap();
        for (a, b) in v1.iter().zip(&v2) {
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
    }
}
