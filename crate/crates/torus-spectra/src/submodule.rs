//! Exact integer algebra for saturated submodules of ℤ^d.
//!
//! A submodule here is always *saturated*: ℤ^d ∩ span_ℝ(M) = M. Saturation
//! is computed as a double integer kernel (the kernel of a kernel is the
//! saturation of the row space). The canonical representation is the row
//! Hermite normal form, so module equality is plain basis equality and
//! modules can key hash maps.
//!
//! Every module carries a unimodular completion: integer rows extending the
//! basis to a determinant ±1 matrix. Coordinates in that adapted basis
//! split a Fourier index into its coset label and its position along the
//! module, and split ξ+κ into an integer part, a reduced Floquet phase and
//! an invariant orthogonal shift ℓ².

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{IVec, Lattice};

/// Saturated integer submodule with a fixed adapted basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Submodule {
    /// Ambient dimension.
    pub dim: usize,
    /// Canonical (Hermite normal form) basis rows; length = rank.
    pub basis: Vec<IVec>,
    /// Completion rows; [basis; completion] is unimodular.
    pub completion: Vec<IVec>,
}

impl Submodule {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// The zero module {0}.
    pub fn zero(dim: usize) -> Self {
        Submodule {
            dim,
            basis: vec![],
            completion: identity_rows(dim),
        }
    }

    /// The full module ℤ^d.
    pub fn full(dim: usize) -> Self {
        Submodule {
            dim,
            basis: identity_rows(dim),
            completion: vec![],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.rank() == self.dim
    }

    /// Exact membership test (integer linear algebra on the HNF basis).
    pub fn contains(&self, v: &[i64]) -> bool {
        // reduce v by the HNF rows; membership iff the remainder vanishes
        let mut rem: Vec<i64> = v.to_vec();
        for row in &self.basis {
            let pivot_col = row.iter().position(|&x| x != 0).unwrap();
            let p = row[pivot_col];
            let q = rem[pivot_col].div_euclid(p);
            if q != 0 {
                for (r, &b) in rem.iter_mut().zip(row) {
                    *r -= q * b;
                }
            }
        }
        rem.iter().all(|&x| x == 0)
    }

    /// Whether `other ⊆ self`.
    pub fn contains_module(&self, other: &Submodule) -> bool {
        other.basis.iter().all(|v| self.contains(v))
    }

    /// Exact coordinates of a module element in the basis rows, or None.
    pub fn coordinates(&self, v: &[i64]) -> Option<Vec<i64>> {
        let mut rem: Vec<i64> = v.to_vec();
        let mut coords = vec![0i64; self.rank()];
        for (i, row) in self.basis.iter().enumerate() {
            let pivot_col = row.iter().position(|&x| x != 0).unwrap();
            let p = row[pivot_col];
            let q = rem[pivot_col].div_euclid(p);
            coords[i] = q;
            for (r, &b) in rem.iter_mut().zip(row) {
                *r -= q * b;
            }
        }
        if rem.iter().all(|&x| x == 0) {
            Some(coords)
        } else {
            None
        }
    }

    /// Coset key of ξ: the coefficients of ξ w.r.t. the completion rows in
    /// the adapted basis, identifying the affine plane ξ + M.
    pub fn coset_key(&self, xi: &[i64]) -> Vec<i64> {
        let coords = adapted_coordinates(self, xi);
        coords[self.rank()..].to_vec()
    }

    /// Canonical coset representative β ∈ M^(c) with ξ − β ∈ M.
    pub fn coset_representative(&self, xi: &[i64]) -> IVec {
        let key = self.coset_key(xi);
        let mut beta = vec![0i64; self.dim];
        for (c, row) in key.iter().zip(&self.completion) {
            for (b, &r) in beta.iter_mut().zip(row) {
                *b += c * r;
            }
        }
        beta
    }
}

/// Saturate the module generated by the given integer vectors.
///
/// The zero set of generators yields the zero module. The result contains
/// every generator and equals ℤ^d ∩ span_ℝ(generators).
pub fn saturate(dim: usize, generators: &[IVec]) -> Submodule {
    let gens: Vec<IVec> = generators
        .iter()
        .filter(|g| g.iter().any(|&x| x != 0))
        .cloned()
        .collect();
    if gens.is_empty() {
        return Submodule::zero(dim);
    }
    let ker = integer_kernel(dim, &gens);
    let sat = if ker.is_empty() {
        identity_rows(dim)
    } else {
        integer_kernel(dim, &ker)
    };
    let basis = hnf_rows(dim, &sat);
    let completion = unimodular_completion(dim, &basis)
        .expect("double-kernel saturation always yields a saturated basis");
    Submodule {
        dim,
        basis,
        completion,
    }
}

/// Module generated (and saturated) by a single vector.
pub fn span_one(dim: usize, k: &[i64]) -> Submodule {
    saturate(dim, &[k.to_vec()])
}

/// Unimodular completion of a saturated basis: rows v^{r+1}..v^d such that
/// [basis; completion] has determinant ±1. Errors with `NotSaturated` when
/// the rows generate a non-saturated module.
pub fn unimodular_completion(dim: usize, basis: &[IVec]) -> Result<Vec<IVec>> {
    let r = basis.len();
    if r == 0 {
        return Ok(identity_rows(dim));
    }
    if r == dim {
        // saturated full-rank module must be all of ℤ^d: |det| = 1
        let (pivots, _, _w_inv) = column_reduce(basis, dim);
        let det: BigInt = pivots.iter().product();
        if det.abs() != BigInt::one() {
            return Err(Error::NotSaturated {
                divisors: pivots.iter().map(big_to_i64).collect(),
            });
        }
        return Ok(vec![]);
    }
    let (pivots, _w, w_inv) = column_reduce(basis, dim);
    if pivots.len() != r {
        return Err(Error::DependentVectors);
    }
    let det: BigInt = pivots.iter().product();
    if det.abs() != BigInt::one() {
        return Err(Error::NotSaturated {
            divisors: pivots.iter().map(big_to_i64).collect(),
        });
    }
    // basis · W = [T | 0] with |det T| = 1, so the last rows of W^{-1}
    // complete the basis unimodularly.
    Ok(w_inv[r..]
        .iter()
        .map(|row| row.iter().map(big_to_i64).collect())
        .collect())
}

/// Exact integer coordinates of an arbitrary ξ ∈ ℤ^d in the adapted basis
/// [basis; completion] (unimodular, hence a ℤ-basis of ℤ^d).
pub fn adapted_coordinates(m: &Submodule, xi: &[i64]) -> Vec<i64> {
    let d = m.dim;
    let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(d);
    for b in m.basis.iter().chain(&m.completion) {
        rows.push(b.iter().map(|&x| BigInt::from(x)).collect());
    }
    // solve xᵀ · A = ξᵀ for the unimodular A by Cramer-free elimination:
    // A is small (d ≤ 4), use bigint Gauss with exact division on the
    // adjugate route: x = ξ · A^{-1}, A^{-1} = adj(A)/det(A), det = ±1.
    let det = big_det(&rows);
    let adj = big_adjugate(&rows);
    // x_i = Σ_j ξ_j · (A^{-1})_{ji} = Σ_j ξ_j adj_{ji}/det
    let mut out = vec![0i64; d];
    for i in 0..d {
        let mut acc = BigInt::zero();
        for (j, &xj) in xi.iter().enumerate() {
            acc += BigInt::from(xj) * &adj[j][i];
        }
        let val = if det == BigInt::from(-1) { -acc } else { acc };
        out[i] = big_to_i64(&val);
    }
    out
}

/// Floquet-compatible split of ξ+κ along a module.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloquetSplit {
    /// Integer part ζ = [(ξ+κ)_M] ∈ M.
    pub zeta: IVec,
    /// Reduced Floquet phase κ' = {(ξ+κ)_M} as a covector in span M.
    pub kappa_prime: Vec<f64>,
    /// Coefficients of κ' in the module basis, each in [0,1).
    pub kappa_prime_coeffs: Vec<f64>,
    /// ξ̃ = ξ − ζ.
    pub xi_tilde: IVec,
    /// ℓ² = ‖(ξ+κ)_{M⊥}‖²_{g*}, constant on the coset ξ + M.
    pub ell_sq: f64,
}

/// Split ξ+κ into integer/fractional parts along M and the orthogonal
/// shift, satisfying ‖ξ+κ‖² = ‖ζ+κ'‖² + ℓ² exactly.
pub fn floquet_split(lattice: &Lattice, xi: &[i64], m: &Submodule) -> FloquetSplit {
    let d = lattice.dim;
    let w = lattice.shifted(xi);
    if m.is_zero() {
        return FloquetSplit {
            zeta: vec![0; d],
            kappa_prime: vec![0.0; d],
            kappa_prime_coeffs: vec![],
            xi_tilde: xi.to_vec(),
            ell_sq: lattice.dual_norm_sq(&w),
        };
    }
    let coords = lattice.span_coordinates(&w, &m.basis);
    // snap near-integer coordinates so that floor/frac is stable under the
    // 1e-14 noise of the Gram solve
    let snapped: Vec<f64> = coords
        .iter()
        .map(|&c| {
            let r = c.round();
            if (c - r).abs() < 1e-9 {
                r
            } else {
                c
            }
        })
        .collect();
    let mut zeta = vec![0i64; d];
    let mut kp_coeffs = Vec::with_capacity(m.rank());
    let mut kappa_prime = vec![0.0; d];
    for (c, v) in snapped.iter().zip(&m.basis) {
        let fl = c.floor();
        let fr = c - fl;
        kp_coeffs.push(fr);
        for a in 0..d {
            zeta[a] += fl as i64 * v[a];
            kappa_prime[a] += fr * v[a] as f64;
        }
    }
    let (w_m, w_perp) = lattice.project_span(&w, &m.basis);
    let _ = w_m;
    let ell_sq = lattice.dual_norm_sq(&w_perp);
    let xi_tilde = xi.iter().zip(&zeta).map(|(&x, &z)| x - z).collect();
    FloquetSplit {
        zeta,
        kappa_prime,
        kappa_prime_coeffs: kp_coeffs,
        xi_tilde,
        ell_sq,
    }
}

// ---------------------------------------------------------------------------
// integer matrix kernels: bigint column reduction with transform tracking
// ---------------------------------------------------------------------------

fn identity_rows(d: usize) -> Vec<IVec> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1 } else { 0 }).collect())
        .collect()
}

fn big_to_i64(b: &BigInt) -> i64 {
    i64::try_from(b.clone()).expect("integer overflow: lattice data exceeds i64")
}

/// Column reduction A·W = [T | 0] with T lower-triangular; returns the
/// pivot diagonal of T, W and W^{-1} (all exact).
fn column_reduce(rows: &[IVec], dim: usize) -> (Vec<BigInt>, Vec<Vec<BigInt>>, Vec<Vec<BigInt>>) {
    let m = rows.len();
    let mut a: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut w: Vec<Vec<BigInt>> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect();
    let mut w_inv = w.clone();

    // elementary column ops on `a`, mirrored on w (columns) and w_inv (rows)
    let swap_cols = |a: &mut Vec<Vec<BigInt>>,
                         w: &mut Vec<Vec<BigInt>>,
                         w_inv: &mut Vec<Vec<BigInt>>,
                         j: usize,
                         k: usize| {
        for row in a.iter_mut() {
            row.swap(j, k);
        }
        for row in w.iter_mut() {
            row.swap(j, k);
        }
        w_inv.swap(j, k);
    };
    let negate_col = |a: &mut Vec<Vec<BigInt>>,
                          w: &mut Vec<Vec<BigInt>>,
                          w_inv: &mut Vec<Vec<BigInt>>,
                          j: usize| {
        for row in a.iter_mut() {
            let v = -row[j].clone();
            row[j] = v;
        }
        for row in w.iter_mut() {
            let v = -row[j].clone();
            row[j] = v;
        }
        for v in w_inv[j].iter_mut() {
            *v = -v.clone();
        }
    };
    // col_j += q * col_k  ⇒  row_k(W^{-1}) -= q * row_j(W^{-1})
    let add_col = |a: &mut Vec<Vec<BigInt>>,
                       w: &mut Vec<Vec<BigInt>>,
                       w_inv: &mut Vec<Vec<BigInt>>,
                       j: usize,
                       k: usize,
                       q: &BigInt| {
        for row in a.iter_mut() {
            let v = &row[j] + q * &row[k];
            row[j] = v;
        }
        for row in w.iter_mut() {
            let v = &row[j] + q * &row[k];
            row[j] = v;
        }
        for idx in 0..dim {
            let v = &w_inv[k][idx] - q * &w_inv[j][idx];
            w_inv[k][idx] = v;
        }
    };

    let mut pivots = Vec::new();
    let mut col = 0usize;
    for row_idx in 0..m {
        if col >= dim {
            break;
        }
        // gcd-reduce the active columns on this row
        loop {
            let mut best: Option<usize> = None;
            for j in col..dim {
                if !a[row_idx][j].is_zero() {
                    best = match best {
                        None => Some(j),
                        Some(b) if a[row_idx][j].abs() < a[row_idx][b].abs() => Some(j),
                        other => other,
                    };
                }
            }
            let Some(b) = best else { break };
            if b != col {
                swap_cols(&mut a, &mut w, &mut w_inv, col, b);
            }
            let mut done = true;
            for j in (col + 1)..dim {
                if !a[row_idx][j].is_zero() {
                    let q = -(&a[row_idx][j] / &a[row_idx][col]);
                    if !q.is_zero() {
                        add_col(&mut a, &mut w, &mut w_inv, j, col, &q);
                    }
                    if !a[row_idx][j].is_zero() {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if !a[row_idx][col].is_zero() {
            if a[row_idx][col].is_negative() {
                negate_col(&mut a, &mut w, &mut w_inv, col);
            }
            pivots.push(a[row_idx][col].clone());
            col += 1;
        }
    }
    (pivots, w, w_inv)
}

/// Basis of {x ∈ ℤ^d : ⟨x, row⟩ = 0 for all rows}; saturated by construction.
pub fn integer_kernel(dim: usize, rows: &[IVec]) -> Vec<IVec> {
    if rows.is_empty() {
        return identity_rows(dim);
    }
    let (pivots, w, _) = column_reduce(rows, dim);
    let rank = pivots.len();
    (rank..dim)
        .map(|j| (0..dim).map(|i| big_to_i64(&w[i][j])).collect())
        .collect()
}

/// Canonical row Hermite normal form (positive pivots, entries above each
/// pivot reduced into [0, pivot)).
pub fn hnf_rows(dim: usize, rows: &[IVec]) -> Vec<IVec> {
    let mut a: Vec<Vec<BigInt>> = rows
        .iter()
        .filter(|r| r.iter().any(|&x| x != 0))
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut r = 0usize;
    for col in 0..dim {
        if r >= a.len() {
            break;
        }
        loop {
            let mut best: Option<usize> = None;
            for i in r..a.len() {
                if !a[i][col].is_zero() {
                    best = match best {
                        None => Some(i),
                        Some(b) if a[i][col].abs() < a[b][col].abs() => Some(i),
                        other => other,
                    };
                }
            }
            let Some(b) = best else { break };
            a.swap(r, b);
            let mut done = true;
            for i in (r + 1)..a.len() {
                if !a[i][col].is_zero() {
                    let q = &a[i][col] / &a[r][col];
                    if !q.is_zero() {
                        for j in 0..dim {
                            let v = &a[i][j] - &q * &a[r][j];
                            a[i][j] = v;
                        }
                    }
                    if !a[i][col].is_zero() {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if !a[r][col].is_zero() {
            if a[r][col].is_negative() {
                for v in a[r].iter_mut() {
                    *v = -v.clone();
                }
            }
            // reduce entries above the pivot into [0, pivot)
            for i in 0..r {
                let q = num_integer::Integer::div_floor(&a[i][col], &a[r][col]);
                if !q.is_zero() {
                    for j in 0..dim {
                        let v = &a[i][j] - &q * &a[r][j];
                        a[i][j] = v;
                    }
                }
            }
            r += 1;
        }
    }
    a.truncate(r);
    a.iter()
        .map(|row| row.iter().map(big_to_i64).collect())
        .collect()
}

fn big_det(rows: &[Vec<BigInt>]) -> BigInt {
    let n = rows.len();
    match n {
        0 => BigInt::one(),
        1 => rows[0][0].clone(),
        _ => {
            let mut det = BigInt::zero();
            let mut sign = BigInt::one();
            for j in 0..n {
                let minor: Vec<Vec<BigInt>> = rows[1..]
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != j)
                            .map(|(_, v)| v.clone())
                            .collect()
                    })
                    .collect();
                det += &sign * &rows[0][j] * big_det(&minor);
                sign = -sign;
            }
            det
        }
    }
}

fn big_adjugate(rows: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = rows.len();
    let mut adj = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<BigInt>> = rows
                .iter()
                .enumerate()
                .filter(|(r, _)| *r != i)
                .map(|(_, row)| {
                    row.iter()
                        .enumerate()
                        .filter(|(c, _)| *c != j)
                        .map(|(_, v)| v.clone())
                        .collect()
                })
                .collect();
            let cof = big_det(&minor);
            adj[j][i] = if (i + j) % 2 == 0 { cof } else { -cof };
        }
    }
    adj
}
