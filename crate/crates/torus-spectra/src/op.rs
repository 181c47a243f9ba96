//! Truncated operators on finite Fourier boxes.
//!
//! A box is the set of ξ ∈ ℤ^d with ‖ξ+κ‖_{g*} ≤ R, ordered
//! lexicographically. Operators are dense Hermitian matrices indexed by the
//! box. Weyl quantization of a finite symbol fills matrix elements by the
//! midpoint rule A[ξ+h, ξ] = â_h(ξ + h/2).

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{incr, IVec, Lattice};
use crate::params::ResonanceParams;
use crate::symbol::{chi_range, chi_res, FourierSymbol};

pub type CMatrix = DMatrix<Complex64>;

/// Ordered finite set of Fourier indices with fast lookup.
#[derive(Debug, Clone)]
pub struct BoxSet {
    pub points: Vec<IVec>,
    pub radius: f64,
    index: HashMap<IVec, usize>,
}

impl BoxSet {
    /// Metric ball ‖ξ+κ‖_{g*} ≤ radius.
    pub fn ball(lattice: &Lattice, radius: f64) -> Self {
        let d = lattice.dim;
        let g_star = lattice.g_star();
        let lambda_min = g_star
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        let cube = (radius / lambda_min.sqrt()).ceil() as i64 + 2;
        let mut points = Vec::new();
        let mut k = vec![-cube; d];
        loop {
            let w = lattice.shifted(&k);
            if lattice.dual_norm(&w) <= radius {
                points.push(k.clone());
            }
            if !incr(&mut k, cube) {
                break;
            }
        }
        points.sort();
        Self::from_points(points, radius)
    }

    /// Explicit index set (reduced blocks, sub-boxes).
    pub fn from_points(points: Vec<IVec>, radius: f64) -> Self {
        let index = points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        BoxSet {
            points,
            radius,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn position(&self, xi: &[i64]) -> Option<usize> {
        self.index.get(xi).copied()
    }

    pub fn contains(&self, xi: &[i64]) -> bool {
        self.index.contains_key(xi)
    }
}

/// Hermitian matrix indexed by the points of a box.
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    pub box_set: Arc<BoxSet>,
    pub matrix: CMatrix,
    pub provenance: String,
}

impl TruncatedOperator {
    pub fn zeros(box_set: Arc<BoxSet>, provenance: &str) -> Self {
        let n = box_set.len();
        TruncatedOperator {
            box_set,
            matrix: CMatrix::zeros(n, n),
            provenance: provenance.to_string(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Max |A - A*| entry.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// ℓ² norm of the off-diagonal part of a row.
    pub fn row_offdiag_norm(&self, i: usize) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            if j != i {
                acc += self.matrix[(i, j)].norm_sqr();
            }
        }
        acc.sqrt()
    }
}

/// Weyl quantization of a finite symbol on a box.
///
/// Fails with `NotSelfAdjoint` when the assembled matrix is not Hermitian
/// (the symbol violates â_{-k} = conj â_k somewhere on the relevant
/// midpoints).
pub fn weyl_matrix(
    lattice: &Lattice,
    symbol: &FourierSymbol,
    box_set: Arc<BoxSet>,
) -> Result<TruncatedOperator> {
    let n = box_set.len();
    let d = lattice.dim;
    let mut m = CMatrix::zeros(n, n);
    for (j, xi) in box_set.points.iter().enumerate() {
        for (k, f) in symbol.terms() {
            let mut target = xi.clone();
            for a in 0..d {
                target[a] += k[a];
            }
            if let Some(i) = box_set.position(&target) {
                let mid: Vec<f64> = xi
                    .iter()
                    .zip(k)
                    .map(|(&x, &h)| x as f64 + h as f64 / 2.0)
                    .collect();
                m[(i, j)] += f(&mid);
            }
        }
    }
    let op = TruncatedOperator {
        box_set,
        matrix: m,
        provenance: "weyl".into(),
    };
    let dev = op.hermitian_deviation();
    if dev > 1e-12 * (1.0 + op.max_abs()) {
        return Err(Error::NotSelfAdjoint(format!(
            "assembled Weyl matrix deviates from Hermitian by {dev:.3e}"
        )));
    }
    Ok(op)
}

/// Diagonal matrix of free eigenvalues ‖ξ+κ‖²_{g*}.
pub fn laplacian_matrix(lattice: &Lattice, box_set: Arc<BoxSet>) -> TruncatedOperator {
    let n = box_set.len();
    let mut m = CMatrix::zeros(n, n);
    for (i, xi) in box_set.points.iter().enumerate() {
        m[(i, i)] = Complex64::new(lattice.free_eigenvalue(xi), 0.0);
    }
    TruncatedOperator {
        box_set,
        matrix: m,
        provenance: "laplacian".into(),
    }
}

/// Matrix-level resonance splitting of a Hermitian operator.
///
/// Entry (ξ+k, ξ) carries the cutoff factors evaluated at the Weyl midpoint
/// ξ+k/2, matching the quantization of the symbol-level splitting. Returns
/// (average, nonresonant, resonant, smoothing); the four parts sum to the
/// input exactly.
pub struct MatrixSplit {
    pub average: CMatrix,
    pub nonresonant: CMatrix,
    pub resonant: CMatrix,
    pub smoothing: CMatrix,
}

pub fn split_matrix(
    lattice: &Lattice,
    params: &ResonanceParams,
    op: &TruncatedOperator,
) -> MatrixSplit {
    let n = op.dim();
    let d = lattice.dim;
    let pts = &op.box_set.points;
    let mut average = CMatrix::zeros(n, n);
    let mut nonresonant = CMatrix::zeros(n, n);
    let mut resonant = CMatrix::zeros(n, n);
    let mut smoothing = CMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let a = op.matrix[(i, j)];
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            if i == j {
                average[(i, j)] = a;
                continue;
            }
            let mut k = vec![0i64; d];
            let mut mid = vec![0.0; d];
            for t in 0..d {
                k[t] = pts[i][t] - pts[j][t];
                mid[t] = pts[j][t] as f64 + k[t] as f64 / 2.0;
            }
            let c_res = chi_res(lattice, params, &k, &mid);
            let c_rng = chi_range(lattice, params, &k, &mid);
            resonant[(i, j)] = a * (c_res * c_rng);
            nonresonant[(i, j)] = a * ((1.0 - c_res) * c_rng);
            smoothing[(i, j)] = a * (1.0 - c_rng);
        }
    }
    MatrixSplit {
        average,
        nonresonant,
        resonant,
        smoothing,
    }
}
