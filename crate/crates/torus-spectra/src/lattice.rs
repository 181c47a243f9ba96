//! Flat-metric lattice geometry.
//!
//! A lattice Γ ⊂ ℝ^d with basis rows e_1,…,e_d induces the metric
//! g_{AB} = e_A·e_B on the standard torus and its inverse g* on covectors.
//! Fourier indices ξ ∈ ℤ^d are covectors; all resonance tests use the dual
//! quadratic form ‖ξ‖²_{g*} = ξᵀ g* ξ and the bracket ⟨ξ⟩ = (1+‖ξ‖²)^{1/2}.
//!
//! Two scalar constants of the metric control every quantitative bound
//! downstream:
//!
//! * the coercivity `c = min_{k ∈ ℤ^d \ 0} ‖k‖²_{g*}`,
//! * a positive lower bound `C` on the volume (Gram determinant square
//!   root) of any parallelepiped spanned by independent integer vectors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer lattice point / Fourier index.
pub type IVec = Vec<i64>;

/// Real covector given by its coordinates in the dual basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoVector(pub Vec<f64>);

impl CoVector {
    pub fn from_integer(k: &[i64]) -> Self {
        CoVector(k.iter().map(|&x| x as f64).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Flat torus lattice with precomputed metric data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lattice {
    /// Dimension d.
    pub dim: usize,
    /// Basis vectors as rows.
    pub basis: Vec<Vec<f64>>,
    /// Metric g_{AB} = e_A · e_B.
    pub metric_g: Vec<Vec<f64>>,
    /// Inverse metric g^{AB} acting on covectors.
    pub metric_g_star: Vec<Vec<f64>>,
    /// Floquet parameter, coordinates in the dual basis, entries in [0,1).
    pub kappa: Vec<f64>,
    /// Coercivity constant: min over nonzero integer covectors of ‖k‖²_{g*}.
    pub coercivity: f64,
    /// Witness attaining the coercivity minimum.
    pub coercivity_witness: Vec<i64>,
    /// Lower bound on parallelepiped volumes of integer tuples.
    pub min_volume: f64,
    /// Exact minimal volume when d ≤ 3 (enumerated), else None.
    pub min_volume_exact: Option<f64>,
}

const INV_TOL: f64 = 1e-12;

impl Lattice {
    /// Build a lattice from basis rows and a Floquet parameter.
    ///
    /// Fails with `DegenerateLattice` when the rows are (numerically)
    /// dependent: |det| ≤ 1e-10 after scaling by the row norms.
    pub fn new(basis: Vec<Vec<f64>>, kappa: Vec<f64>) -> Result<Self> {
        let d = basis.len();
        if d == 0 || basis.iter().any(|r| r.len() != d) || kappa.len() != d {
            return Err(Error::InvalidParams(format!(
                "basis must be square and kappa of matching dimension (d={d})"
            )));
        }
        let b = DMatrix::from_fn(d, d, |i, j| basis[i][j]);
        let scale: f64 = basis
            .iter()
            .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
            .product();
        let det = b.determinant();
        if det.abs() <= 1e-10 * scale.max(1e-300) {
            return Err(Error::DegenerateLattice { det });
        }
        let g = &b * b.transpose();
        let g_star = g
            .clone()
            .try_inverse()
            .ok_or(Error::DegenerateLattice { det })?;

        // g · g* must be the identity to 1e-12.
        let resid = (&g * &g_star - DMatrix::identity(d, d)).abs().max();
        if resid > INV_TOL {
            return Err(Error::InvalidParams(format!(
                "metric inversion residual {resid:.3e} exceeds {INV_TOL:.0e}"
            )));
        }

        let kappa: Vec<f64> = kappa.iter().map(|x| x.rem_euclid(1.0)).collect();

        let mut lat = Lattice {
            dim: d,
            basis,
            metric_g: mat_to_rows(&g),
            metric_g_star: mat_to_rows(&g_star),
            kappa,
            coercivity: 0.0,
            coercivity_witness: vec![0; d],
            min_volume: 0.0,
            min_volume_exact: None,
        };
        let (c, w) = lat.coercivity_constant();
        lat.coercivity = c;
        lat.coercivity_witness = w;
        let (bound, exact) = lat.min_parallelepiped_volume();
        lat.min_volume = bound;
        lat.min_volume_exact = exact;
        Ok(lat)
    }

    /// Euclidean ℤ^d with Floquet parameter κ.
    pub fn euclidean(d: usize, kappa: Vec<f64>) -> Result<Self> {
        let basis = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Lattice::new(basis, kappa)
    }

    /// Hexagonal lattice in the plane: e1 = (1,0), e2 = (1/2, √3/2).
    pub fn hexagonal(kappa: Vec<f64>) -> Result<Self> {
        Lattice::new(
            vec![vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]],
            kappa,
        )
    }

    /// Build a d'-dimensional lattice directly from a dual metric g*
    /// (used when restricting to a submodule: the restricted dual metric is
    /// the g*-Gram matrix of the module basis).
    pub fn from_dual_metric(g_star: &DMatrix<f64>, kappa: Vec<f64>) -> Result<Self> {
        let d = g_star.nrows();
        let g = g_star
            .clone()
            .try_inverse()
            .ok_or(Error::DegenerateLattice { det: 0.0 })?;
        // basis = Cholesky factor rows of g, so that e_A · e_B = g_AB
        let chol = nalgebra::Cholesky::new(g.clone()).ok_or_else(|| {
            Error::InvalidParams("restricted metric not positive definite".into())
        })?;
        let l = chol.l();
        let basis = (0..d)
            .map(|i| (0..d).map(|j| l[(i, j)]).collect())
            .collect();
        Lattice::new(basis, kappa)
    }

    pub fn g_star(&self) -> DMatrix<f64> {
        rows_to_mat(&self.metric_g_star)
    }

    pub fn g(&self) -> DMatrix<f64> {
        rows_to_mat(&self.metric_g)
    }

    /// ⟨ξ,η⟩_{g*} for real covectors.
    pub fn dual_inner(&self, xi: &[f64], eta: &[f64]) -> f64 {
        let mut acc = 0.0;
        for a in 0..self.dim {
            for b in 0..self.dim {
                acc += self.metric_g_star[a][b] * xi[a] * eta[b];
            }
        }
        acc
    }

    /// ‖ξ‖²_{g*}.
    pub fn dual_norm_sq(&self, xi: &[f64]) -> f64 {
        self.dual_inner(xi, xi)
    }

    /// ‖ξ‖_{g*}.
    pub fn dual_norm(&self, xi: &[f64]) -> f64 {
        self.dual_norm_sq(xi).max(0.0).sqrt()
    }

    /// Japanese bracket ⟨ξ⟩ = (1 + ‖ξ‖²_{g*})^{1/2}.
    pub fn bracket(&self, xi: &[f64]) -> f64 {
        (1.0 + self.dual_norm_sq(xi)).sqrt()
    }

    /// ξ + κ as a real covector.
    pub fn shifted(&self, xi: &[i64]) -> Vec<f64> {
        xi.iter()
            .zip(&self.kappa)
            .map(|(&x, &k)| x as f64 + k)
            .collect()
    }

    /// ‖ξ+κ‖²_{g*}: the free eigenvalue attached to the Fourier index ξ.
    pub fn free_eigenvalue(&self, xi: &[i64]) -> f64 {
        self.dual_norm_sq(&self.shifted(xi))
    }

    /// Minimum of ‖k‖²_{g*} over nonzero integer covectors, with a witness.
    ///
    /// The search first scans ‖k‖_∞ ≤ 2 for a candidate value c0, then
    /// enumerates the ball guaranteed to contain every k with
    /// ‖k‖²_{g*} ≤ c0: outside ‖k‖_∞ > R = ceil(√(c0/λ_min(g*))) every
    /// integer vector exceeds c0.
    pub fn coercivity_constant(&self) -> (f64, Vec<i64>) {
        let d = self.dim;
        let mut best = f64::INFINITY;
        let mut witness = vec![0i64; d];
        let scan = |radius: i64, best: &mut f64, witness: &mut Vec<i64>| {
            let mut k = vec![-radius; d];
            loop {
                if k.iter().any(|&x| x != 0) {
                    let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
                    let n = self.dual_norm_sq(&kf);
                    if n < *best - 1e-15
                        || (n < *best + 1e-15 && lex_less(&k, witness))
                    {
                        *best = n;
                        *witness = k.clone();
                    }
                }
                if !incr(&mut k, radius) {
                    break;
                }
            }
        };
        scan(2, &mut best, &mut witness);
        let lambda_min = smallest_eigenvalue(&self.g_star());
        let r = ((best / lambda_min.max(1e-300)).sqrt().ceil() as i64).max(2);
        if r > 2 {
            scan(r, &mut best, &mut witness);
        }
        (best, witness)
    }

    /// Lower bound (and, for d ≤ 3, the enumerated exact minimum) of the
    /// g-volume of parallelepipeds spanned by independent integer tuples.
    ///
    /// Bound: c2^{-d} · v with c2 = max_j ‖e_j‖_g over the standard basis
    /// of ℤ^d and v = √det g the unit-cell volume.
    pub fn min_parallelepiped_volume(&self) -> (f64, Option<f64>) {
        let d = self.dim;
        let g = self.g();
        let det_g = g.determinant().max(0.0);
        let v = det_g.sqrt();
        let c2 = (0..d)
            .map(|j| self.metric_g[j][j].max(0.0).sqrt())
            .fold(0.0f64, f64::max);
        let bound = c2.powi(-(d as i32)) * v;
        if d > 3 {
            return (bound, None);
        }

        // Exact minimum by enumerating primitive tuples in a small ball.
        let radius = 4i64;
        let mut vectors: Vec<Vec<i64>> = Vec::new();
        let mut k = vec![-radius; d];
        loop {
            if k.iter().any(|&x| x != 0) && is_primitive(&k) {
                vectors.push(k.clone());
            }
            if !incr(&mut k, radius) {
                break;
            }
        }
        let gram = |u: &[i64], w: &[i64]| -> f64 {
            let mut acc = 0.0;
            for a in 0..d {
                for b in 0..d {
                    acc += self.metric_g[a][b] * u[a] as f64 * w[b] as f64;
                }
            }
            acc
        };
        let mut exact = f64::INFINITY;
        for u in &vectors {
            exact = exact.min(gram(u, u).max(0.0).sqrt());
        }
        if d >= 2 {
            for (i, u) in vectors.iter().enumerate() {
                for w in vectors.iter().skip(i + 1) {
                    let g11 = gram(u, u);
                    let g12 = gram(u, w);
                    let g22 = gram(w, w);
                    let det2 = g11 * g22 - g12 * g12;
                    if det2 > 1e-12 {
                        exact = exact.min(det2.sqrt());
                    }
                }
            }
        }
        if d == 3 {
            // Full-rank tuples: volume = |det(u1|u2|u3)| · √det g, minimized
            // at |det| = 1.
            exact = exact.min(v);
        }
        (bound, Some(exact))
    }

    /// Bound of `‖w‖ ≤ s N^{s-1} α / Vol(u_1|…|u_s)` for w in the span of
    /// the u_j with ‖u_j‖_{g*} ≤ N and |⟨w,u_j⟩_{g*}| ≤ α.
    ///
    /// The volume is the square root of the g*-Gram determinant.
    pub fn volume_bound(&self, tuple: &[Vec<i64>], alpha: f64, n_cap: f64) -> Result<f64> {
        let s = tuple.len();
        if s == 0 {
            return Err(Error::DependentVectors);
        }
        let mut gram = DMatrix::<f64>::zeros(s, s);
        for i in 0..s {
            for j in 0..s {
                let ui: Vec<f64> = tuple[i].iter().map(|&x| x as f64).collect();
                let uj: Vec<f64> = tuple[j].iter().map(|&x| x as f64).collect();
                gram[(i, j)] = self.dual_inner(&ui, &uj);
            }
        }
        let det = gram.determinant();
        if det <= 1e-12 {
            return Err(Error::DependentVectors);
        }
        let vol = det.sqrt();
        Ok(s as f64 * n_cap.powi(s as i32 - 1) * alpha / vol)
    }

    /// Orthogonal projection of a real covector onto the span of the given
    /// integer vectors, w.r.t. g*. Returns (w_M, w_perp).
    pub fn project_span(&self, w: &[f64], span: &[Vec<i64>]) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let s = span.len();
        if s == 0 {
            return (vec![0.0; d], w.to_vec());
        }
        let coeffs = self.span_coordinates(w, span);
        let mut w_m = vec![0.0; d];
        for (c, v) in coeffs.iter().zip(span) {
            for a in 0..d {
                w_m[a] += c * v[a] as f64;
            }
        }
        let w_perp = w.iter().zip(&w_m).map(|(a, b)| a - b).collect();
        (w_m, w_perp)
    }

    /// Coordinates of the g*-orthogonal projection of w in the given basis
    /// of the span (normal equations).
    pub fn span_coordinates(&self, w: &[f64], span: &[Vec<i64>]) -> Vec<f64> {
        let s = span.len();
        let mut gram = DMatrix::<f64>::zeros(s, s);
        let mut rhs = DVector::<f64>::zeros(s);
        for i in 0..s {
            let vi: Vec<f64> = span[i].iter().map(|&x| x as f64).collect();
            rhs[i] = self.dual_inner(w, &vi);
            for j in 0..s {
                let vj: Vec<f64> = span[j].iter().map(|&x| x as f64).collect();
                gram[(i, j)] = self.dual_inner(&vi, &vj);
            }
        }
        let sol = gram
            .lu()
            .solve(&rhs)
            .expect("independent span vectors give invertible Gram matrix");
        sol.iter().copied().collect()
    }
}

fn mat_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn rows_to_mat(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let d = rows.len();
    DMatrix::from_fn(d, d, |i, j| rows[i][j])
}

fn smallest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

fn lex_less(a: &[i64], b: &[i64]) -> bool {
    a < b
}

/// Odometer increment over the cube [-radius, radius]^d.
pub(crate) fn incr(k: &mut [i64], radius: i64) -> bool {
    for x in k.iter_mut() {
        if *x < radius {
            *x += 1;
            return true;
        }
        *x = -radius;
    }
    false
}

pub(crate) fn is_primitive(k: &[i64]) -> bool {
    let mut g = 0i64;
    for &x in k {
        g = num_integer::gcd(g, x.abs());
    }
    g == 1
}
