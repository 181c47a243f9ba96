//! Finite-Fourier torus symbols and their resonance decomposition.
//!
//! A symbol is a finite sum a(x,ξ) = Σ_k â_k(ξ) e^{ik·x}; coefficients are
//! arbitrary evaluators ξ ↦ â_k(ξ) (constants for plain potentials). The
//! average/nonresonant/resonant/smoothing splitting uses a fixed smooth
//! transition function χ with χ(t)=1 for |t|≤1/2 and χ(t)=0 for |t|≥1:
//!
//! ```text
//! χ_k(ξ)  = χ( 2‖k‖^τ ⟨ξ+κ,k⟩ / ⟨ξ+κ⟩^δ )        resonance smallness
//! χ̃_k(ξ) = χ( ‖k‖ / ⟨ξ+κ⟩^ε )                     Fourier range
//! a = ⟨a⟩ + a^nr + a^res + a^S,
//! â^res_k = â_k χ_k χ̃_k,   â^nr_k = â_k (1-χ_k) χ̃_k,   â^S_k = â_k (1-χ̃_k)
//! ```

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{IVec, Lattice};
use crate::params::ResonanceParams;

/// The pinned transition function: χ(t) = 1 on |t| ≤ 1/2, 0 on |t| ≥ 1,
/// and f(2−2|t|)/(f(2−2|t|)+f(2|t|−1)) with f(s) = e^{−1/s} in between.
pub fn cutoff_chi(t: f64) -> f64 {
    let t = t.abs();
    if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
        let a = f(2.0 - 2.0 * t);
        let b = f(2.0 * t - 1.0);
        a / (a + b)
    }
}

/// Smallness cutoff χ_k(ξ) evaluated at a real dual point ξ (κ added inside).
pub fn chi_res(lattice: &Lattice, params: &ResonanceParams, k: &[i64], xi: &[f64]) -> f64 {
    let d = lattice.dim;
    let mut w = vec![0.0; d];
    for a in 0..d {
        w[a] = xi[a] + lattice.kappa[a];
    }
    let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
    let knorm = lattice.dual_norm(&kf);
    let pairing = lattice.dual_inner(&w, &kf);
    let bracket = (1.0 + lattice.dual_norm_sq(&w)).sqrt();
    cutoff_chi(2.0 * knorm.powf(params.tau) * pairing / bracket.powf(params.delta))
}

/// Range cutoff χ̃_k(ξ).
pub fn chi_range(lattice: &Lattice, params: &ResonanceParams, k: &[i64], xi: &[f64]) -> f64 {
    let d = lattice.dim;
    let mut w = vec![0.0; d];
    for a in 0..d {
        w[a] = xi[a] + lattice.kappa[a];
    }
    let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
    let knorm = lattice.dual_norm(&kf);
    let bracket = (1.0 + lattice.dual_norm_sq(&w)).sqrt();
    cutoff_chi(knorm / bracket.powf(params.epsilon))
}

pub type CoeffFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// Finite-Fourier symbol: map k ↦ evaluator ξ ↦ â_k(ξ).
#[derive(Clone)]
pub struct FourierSymbol {
    pub dim: usize,
    terms: Vec<(IVec, CoeffFn)>,
}

impl std::fmt::Debug for FourierSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierSymbol")
            .field("dim", &self.dim)
            .field("support", &self.support())
            .finish()
    }
}

impl FourierSymbol {
    pub fn new(dim: usize) -> Self {
        FourierSymbol { dim, terms: vec![] }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim)
    }

    /// Add a term with an arbitrary coefficient evaluator.
    pub fn push_term(&mut self, k: IVec, f: CoeffFn) {
        assert_eq!(k.len(), self.dim);
        self.terms.push((k, f));
    }

    /// Symbol with constant coefficients.
    pub fn from_constants(dim: usize, terms: &[(IVec, Complex64)]) -> Self {
        let mut s = Self::new(dim);
        for (k, c) in terms {
            let c = *c;
            s.push_term(k.clone(), Arc::new(move |_| c));
        }
        s
    }

    /// Real trig potential 2cos(k·x) = e^{ik·x} + e^{-ik·x}.
    pub fn two_cos(dim: usize, k: &[i64]) -> Self {
        let kneg: IVec = k.iter().map(|&x| -x).collect();
        Self::from_constants(
            dim,
            &[
                (k.to_vec(), Complex64::new(1.0, 0.0)),
                (kneg, Complex64::new(1.0, 0.0)),
            ],
        )
    }

    /// Sum of trig potentials along several wave vectors.
    pub fn cosine_sum(dim: usize, ks: &[IVec]) -> Self {
        let mut s = Self::new(dim);
        for k in ks {
            let kneg: IVec = k.iter().map(|&x| -x).collect();
            s.push_term(k.clone(), Arc::new(|_| Complex64::new(1.0, 0.0)));
            s.push_term(kneg, Arc::new(|_| Complex64::new(1.0, 0.0)));
        }
        s
    }

    pub fn support(&self) -> Vec<IVec> {
        let mut ks: Vec<IVec> = self.terms.iter().map(|(k, _)| k.clone()).collect();
        ks.sort();
        ks.dedup();
        ks
    }

    pub fn terms(&self) -> &[(IVec, CoeffFn)] {
        &self.terms
    }

    /// Largest g*-norm over the support (0 for multipliers).
    pub fn support_radius(&self, lattice: &Lattice) -> f64 {
        self.support()
            .iter()
            .filter(|k| k.iter().any(|&x| x != 0))
            .map(|k| {
                let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
                lattice.dual_norm(&kf)
            })
            .fold(0.0, f64::max)
    }

    /// â_k(ξ) summed over duplicate terms.
    pub fn coeff(&self, k: &[i64], xi: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .filter(|(kk, _)| kk.as_slice() == k)
            .map(|(_, f)| f(xi))
            .sum()
    }

    /// Projection onto the zero mode: ξ ↦ â_0(ξ).
    pub fn average(&self) -> FourierSymbol {
        let zero: IVec = vec![0; self.dim];
        let mut s = FourierSymbol::new(self.dim);
        for (k, f) in &self.terms {
            if *k == zero {
                s.push_term(k.clone(), f.clone());
            }
        }
        s
    }

    /// Check â_{-k}(ξ) = conj(â_k(ξ)) on sample points.
    pub fn check_hermitian(&self, sample: &[Vec<f64>]) -> Result<()> {
        for xi in sample {
            for k in self.support() {
                let kneg: IVec = k.iter().map(|&x| -x).collect();
                let a = self.coeff(&k, xi);
                let b = self.coeff(&kneg, xi);
                if (a - b.conj()).norm() > 1e-12 * (1.0 + a.norm()) {
                    return Err(Error::NotSelfAdjoint(format!(
                        "coefficient at k={k:?} is not the conjugate of the mirror term"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Result of the four-way resonance splitting.
pub struct SymbolDecomposition {
    pub average: FourierSymbol,
    pub nonresonant: FourierSymbol,
    pub resonant: FourierSymbol,
    pub smoothing: FourierSymbol,
}

/// Split a symbol into average + nonresonant + resonant + smoothing parts.
/// The four families sum back to the input coefficientwise.
pub fn decompose(
    lattice: &Lattice,
    symbol: &FourierSymbol,
    params: &ResonanceParams,
) -> SymbolDecomposition {
    let zero: IVec = vec![0; symbol.dim];
    let mut nr = FourierSymbol::new(symbol.dim);
    let mut res = FourierSymbol::new(symbol.dim);
    let mut sm = FourierSymbol::new(symbol.dim);
    for (k, f) in &symbol.terms {
        if *k == zero {
            continue;
        }
        let lat = lattice.clone();
        let par = params.clone();
        let kk = k.clone();
        let ff = f.clone();
        res.push_term(
            k.clone(),
            Arc::new(move |xi| {
                ff(xi) * chi_res(&lat, &par, &kk, xi) * chi_range(&lat, &par, &kk, xi)
            }),
        );
        let lat = lattice.clone();
        let par = params.clone();
        let kk = k.clone();
        let ff = f.clone();
        nr.push_term(
            k.clone(),
            Arc::new(move |xi| {
                ff(xi)
                    * (1.0 - chi_res(&lat, &par, &kk, xi))
                    * chi_range(&lat, &par, &kk, xi)
            }),
        );
        let lat = lattice.clone();
        let par = params.clone();
        let kk = k.clone();
        let ff = f.clone();
        sm.push_term(
            k.clone(),
            Arc::new(move |xi| ff(xi) * (1.0 - chi_range(&lat, &par, &kk, xi))),
        );
    }
    SymbolDecomposition {
        average: symbol.average(),
        nonresonant: nr,
        resonant: res,
        smoothing: sm,
    }
}

/// Grid lower bound of the weighted seminorm
/// sup ⟨ξ+κ⟩^{δN₂−m} ‖d_x^{N₁} d_ξ^{N₂} a(x,ξ)‖.
///
/// x-derivatives are exact (each term picks up (i k·h)^{N₁}); ξ-derivatives
/// are central differences with step 1e-4 along sampled unit-g* directions.
/// Supports N₁, N₂ ≤ 2; used for diagnostics and decay fits only.
pub fn seminorm_estimate(
    lattice: &Lattice,
    symbol: &FourierSymbol,
    n1: usize,
    n2: usize,
    order_m: f64,
    delta: f64,
    grid: &[Vec<f64>],
) -> f64 {
    assert!(n1 <= 2 && n2 <= 2, "derivative orders above 2 not supported");
    let d = lattice.dim;
    let x_dirs = unit_directions(lattice, true);
    let xi_dirs = unit_directions(lattice, false);
    let support = symbol.support();

    // include, per wave vector, the x-direction maximizing |k·h|
    let mut x_dirs_all = x_dirs;
    for k in &support {
        if k.iter().all(|&x| x == 0) {
            continue;
        }
        let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
        let mut h = vec![0.0; d];
        for a in 0..d {
            for b in 0..d {
                h[a] += lattice.metric_g_star[a][b] * kf[b];
            }
        }
        let norm = lattice.dual_norm(&kf);
        if norm > 0.0 {
            for v in h.iter_mut() {
                *v /= norm;
            }
            x_dirs_all.push(h);
        }
    }

    let x_samples: Vec<Vec<f64>> = x_grid(d);
    let step = 1e-4;
    let mut sup = 0.0f64;
    for xi in grid {
        let kappa_shift: Vec<f64> = xi
            .iter()
            .zip(&lattice.kappa)
            .map(|(&x, &k)| x + k)
            .collect();
        let weight = (1.0 + lattice.dual_norm_sq(&kappa_shift))
            .sqrt()
            .powf(delta * n2 as f64 - order_m);
        for h in &x_dirs_all {
            for u in &xi_dirs {
                // coefficient-level derivative of each term, then sup over x
                let coeff_at = |p: &[f64]| -> Vec<Complex64> {
                    symbol.terms.iter().map(|(_, f)| f(p)).collect()
                };
                let derivs: Vec<Complex64> = match n2 {
                    0 => coeff_at(xi),
                    1 => {
                        let plus = shift(xi, u, step);
                        let minus = shift(xi, u, -step);
                        coeff_at(&plus)
                            .iter()
                            .zip(coeff_at(&minus))
                            .map(|(p, m)| (p - m) / (2.0 * step))
                            .collect()
                    }
                    _ => {
                        let plus = shift(xi, u, step);
                        let minus = shift(xi, u, -step);
                        let mid = coeff_at(xi);
                        coeff_at(&plus)
                            .iter()
                            .zip(coeff_at(&minus))
                            .zip(mid)
                            .map(|((p, m), c)| (p + m - 2.0 * c) / (step * step))
                            .collect()
                    }
                };
                for x in &x_samples {
                    let mut val = Complex64::new(0.0, 0.0);
                    for ((k, _), dc) in symbol.terms.iter().zip(&derivs) {
                        let kh: f64 = k.iter().zip(h).map(|(&a, &b)| a as f64 * b).sum();
                        let phase: f64 = k.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum();
                        let xfac = Complex64::new(0.0, kh).powu(n1 as u32);
                        val += dc * xfac * Complex64::new(0.0, phase).exp();
                    }
                    sup = sup.max(weight * val.norm());
                }
            }
        }
    }
    sup
}

fn shift(xi: &[f64], u: &[f64], t: f64) -> Vec<f64> {
    xi.iter().zip(u).map(|(&a, &b)| a + t * b).collect()
}

fn x_grid(d: usize) -> Vec<Vec<f64>> {
    let n = match d {
        1 => 64,
        2 => 16,
        _ => 8,
    };
    let mut pts = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for p in &pts {
            for i in 0..n {
                let mut q = p.clone();
                q.push(2.0 * std::f64::consts::PI * i as f64 / n as f64);
                next.push(q);
            }
        }
        pts = next;
    }
    pts
}

/// Sampled unit directions; `primal` picks unit g-norm vectors (for x),
/// otherwise unit g*-norm covectors (for ξ).
fn unit_directions(lattice: &Lattice, primal: bool) -> Vec<Vec<f64>> {
    let d = lattice.dim;
    let norm = |v: &[f64]| -> f64 {
        if primal {
            let mut acc = 0.0;
            for a in 0..d {
                for b in 0..d {
                    acc += lattice.metric_g[a][b] * v[a] * v[b];
                }
            }
            acc.sqrt()
        } else {
            lattice.dual_norm(v)
        }
    };
    let raw: Vec<Vec<f64>> = match d {
        1 => vec![vec![1.0]],
        2 => (0..32)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / 16.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut v = Vec::new();
            for i in 0..d {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                v.push(e);
            }
            for i in 0..d {
                for j in (i + 1)..d {
                    for (si, sj) in [(1.0, 1.0), (1.0, -1.0)] {
                        let mut e = vec![0.0; d];
                        e[i] = si;
                        e[j] = sj;
                        v.push(e);
                    }
                }
            }
            v
        }
    };
    raw.into_iter()
        .map(|v| {
            let n = norm(&v);
            v.into_iter().map(|x| x / n).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn euclid2() -> Lattice {
        Lattice::euclidean(2, vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn chi_shape() {
        assert_eq!(cutoff_chi(0.3), 1.0);
        assert_eq!(cutoff_chi(-0.5), 1.0);
        assert_eq!(cutoff_chi(1.0), 0.0);
        assert_eq!(cutoff_chi(-1.3), 0.0);
        assert_relative_eq!(cutoff_chi(0.75), 0.5, epsilon = 1e-12);
        // monotone on [1/2, 1]
        let mut prev = 1.0;
        for i in 0..=40 {
            let t = 0.5 + 0.5 * i as f64 / 40.0;
            let v = cutoff_chi(t);
            assert!(v <= prev + 1e-15 && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn average_projection() {
        let s = FourierSymbol::from_constants(
            2,
            &[
                (vec![0, 0], Complex64::new(3.5, 0.0)),
                (vec![0, 1], Complex64::new(1.0, 0.0)),
                (vec![0, -1], Complex64::new(1.0, 0.0)),
            ],
        );
        let avg = s.average();
        assert_eq!(avg.support(), vec![vec![0, 0]]);
        assert_relative_eq!(avg.coeff(&[0, 0], &[7.0, 3.0]).re, 3.5);
        // zero-mean potential
        let zm = FourierSymbol::two_cos(2, &[1, 0]);
        assert!(zm.average().support().is_empty());
    }

    #[test]
    fn decompose_constant_symbol() {
        let l = euclid2();
        let p = ResonanceParams::defaults(2).unwrap();
        let s = FourierSymbol::from_constants(2, &[(vec![0, 0], Complex64::new(2.0, 0.0))]);
        let dec = decompose(&l, &s, &p);
        assert_relative_eq!(dec.average.coeff(&[0, 0], &[1.0, 2.0]).re, 2.0);
        assert!(dec.resonant.support().is_empty());
        assert!(dec.nonresonant.support().is_empty());
        assert!(dec.smoothing.support().is_empty());
    }

    #[test]
    fn decompose_resonant_coefficient_pinned() {
        // k = (0,1) at ξ = (10,0): χ_k argument is 0, so the resonant
        // coefficient equals χ̃ = χ(1/⟨ξ⟩^ε).
        let l = euclid2();
        let p = ResonanceParams::defaults(2).unwrap();
        let s = FourierSymbol::from_constants(2, &[(vec![0, 1], Complex64::new(1.0, 0.0))]);
        let dec = decompose(&l, &s, &p);
        let xi = [10.0, 0.0];
        let val = dec.resonant.coeff(&[0, 1], &xi);
        let bracket = (1.0 + l.dual_norm_sq(&xi)).sqrt(); // √101
        let expect = cutoff_chi(1.0 / bracket.powf(0.05));
        assert_relative_eq!(val.re, expect, epsilon = 1e-13);
        assert!(val.re > 0.0 && val.re < 1.0);
    }

    #[test]
    fn decompose_reconstructs() {
        use rand::{Rng, SeedableRng};
        let l = Lattice::euclidean(2, vec![0.3, 0.2]).unwrap();
        let p = ResonanceParams::defaults(2).unwrap();
        let mut s = FourierSymbol::cosine_sum(2, &[vec![1, 0], vec![0, 1], vec![1, 1]]);
        s.push_term(
            vec![1, -1],
            Arc::new(|xi| Complex64::new(0.0, 1.0 / (1.0 + xi[0] * xi[0] + xi[1] * xi[1]))),
        );
        s.push_term(
            vec![-1, 1],
            Arc::new(|xi| Complex64::new(0.0, -1.0 / (1.0 + xi[0] * xi[0] + xi[1] * xi[1]))),
        );
        let dec = decompose(&l, &s, &p);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let xi = [rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)];
            for k in s.support() {
                let total = dec.average.coeff(&k, &xi)
                    + dec.nonresonant.coeff(&k, &xi)
                    + dec.resonant.coeff(&k, &xi)
                    + dec.smoothing.coeff(&k, &xi);
                let orig = s.coeff(&k, &xi);
                assert!(
                    (total - orig).norm() <= 1e-14 * (1.0 + orig.norm()),
                    "reconstruction failed at k={k:?} xi={xi:?}"
                );
            }
        }
    }

    #[test]
    fn nonresonant_vanishes_when_pairing_large() {
        let l = Lattice::euclidean(1, vec![0.1]).unwrap();
        let p = ResonanceParams::defaults(1).unwrap();
        let s = FourierSymbol::from_constants(1, &[(vec![1], Complex64::new(1.0, 0.0))]);
        let dec = decompose(&l, &s, &p);
        // at large ξ the pairing ⟨ξ+κ,1⟩ is far above the smallness
        // threshold: χ_res = 0 and the non-smoothing weight sits in nr
        let xi = [25.0];
        assert_relative_eq!(dec.resonant.coeff(&[1], &xi).norm(), 0.0, epsilon = 1e-15);
        let range = chi_range(&l, &p, &[1], &xi);
        assert_relative_eq!(dec.nonresonant.coeff(&[1], &xi).re, range, epsilon = 1e-13);
    }

    #[test]
    fn hermitian_check() {
        let ok = FourierSymbol::two_cos(2, &[1, 0]);
        ok.check_hermitian(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        let bad = FourierSymbol::from_constants(2, &[(vec![1, 0], Complex64::new(1.0, 0.0))]);
        assert!(bad
            .check_hermitian(&[vec![0.0, 0.0]])
            .is_err());
    }

    #[test]
    fn seminorm_constant_symbol() {
        let l = euclid2();
        let s = FourierSymbol::from_constants(2, &[(vec![0, 0], Complex64::new(-2.5, 0.0))]);
        let grid: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![5.0, 1.0], vec![-9.0, 2.0]];
        let v = seminorm_estimate(&l, &s, 0, 0, 0.0, 0.5, &grid);
        assert_relative_eq!(v, 2.5, epsilon = 1e-12);
    }

    #[test]
    fn seminorm_decaying_multiplier() {
        // a(ξ) = ⟨ξ+κ⟩^{-1}, order m = -1, N2 = 0: the weighted sup is 1
        let l = euclid2();
        let lat = l.clone();
        let mut s = FourierSymbol::new(2);
        s.push_term(
            vec![0, 0],
            Arc::new(move |xi| {
                let w = [xi[0] + lat.kappa[0], xi[1] + lat.kappa[1]];
                Complex64::new(1.0 / (1.0 + lat.dual_norm_sq(&w)).sqrt(), 0.0)
            }),
        );
        let grid: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64 * 3.0, (i % 5) as f64])
            .collect();
        let v = seminorm_estimate(&l, &s, 0, 0, -1.0, 0.5, &grid);
        assert_relative_eq!(v, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn seminorm_x_derivative_is_dual_norm() {
        // pure e^{ik·x}: N1 = 1 seminorm is ‖k‖_{g*}
        let l = Lattice::hexagonal(vec![0.0, 0.0]).unwrap();
        let k = vec![1i64, 0];
        let s = FourierSymbol::from_constants(2, &[(k.clone(), Complex64::new(1.0, 0.0))]);
        let grid = vec![vec![0.0, 0.0]];
        let v = seminorm_estimate(&l, &s, 1, 0, 0.0, 0.5, &grid);
        let expect = l.dual_norm(&[1.0, 0.0]);
        assert_relative_eq!(v, expect, epsilon = 1e-9);
    }
}
