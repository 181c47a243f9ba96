//! Dimensional reduction of resonant blocks.
//!
//! A class W_{M,β} with 0 < rank M < d carries the restriction of
//! −Δ_{g,κ} + 𝒩. The gauge translation ξ ↦ ζ = ξ − β̃ identifies W with a
//! subset W^t of M; in coordinates adapted to M the restricted operator
//! becomes a rank-M Schrödinger operator
//!
//! ```text
//! −Δ_{g',κ'} + 𝒩' + ℓ²,   g' = g*-Gram of the M basis,  ℓ² = ‖(β̃+κ)_{M⊥}‖²
//! ```
//!
//! whose spectrum equals the block spectrum shifted by ℓ². The reduced
//! potential is the translated block of 𝒩 itself (finite Fourier support in
//! the adapted angles), not a re-derived symbol.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{IVec, Lattice};
use crate::linalg::eigvalsh;
use crate::normalform::{normal_form_step, NormalFormOutput};
use crate::op::{laplacian_matrix, BoxSet, CMatrix, TruncatedOperator};
use crate::params::ResonanceParams;
use crate::partition::{partition_subset, PartitionResult};
use crate::submodule::{floquet_split, Submodule};
use crate::symbol::FourierSymbol;

/// A block reduced to its own lower-dimensional frame.
#[derive(Debug, Clone)]
pub struct ReducedOperator {
    /// Rank-M lattice whose dual metric is the g*-Gram matrix of the
    /// module basis.
    pub sub_lattice: Lattice,
    /// Reduced Floquet phase (coefficients in the module basis).
    pub kappa_prime: Vec<f64>,
    /// Orthogonal energy shift, constant on the class.
    pub ell_sq: f64,
    /// Operator on the translated index set (coefficient vectors in ℤ^rank).
    pub operator: TruncatedOperator,
    pub module: Submodule,
    pub beta: IVec,
    /// Parent-frame indices aligned with the operator rows.
    pub parent_points: Vec<IVec>,
}

impl ReducedOperator {
    /// Eigenvalues in the reduced frame (add ℓ² to map to the parent).
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        eigvalsh(&self.operator.matrix)
    }
}

/// Restriction of −Δ+𝒩 to a class, in parent indexing.
pub fn block_operator(
    nf: &NormalFormOutput,
    lattice: &Lattice,
    points: &[IVec],
) -> Result<(Vec<IVec>, CMatrix)> {
    let mut idx = Vec::new();
    let mut kept = Vec::new();
    for p in points {
        if let Some(i) = nf.box_set.position(p) {
            idx.push(i);
            kept.push(p.clone());
        }
    }
    if kept.is_empty() {
        return Err(Error::NothingToReduce("class misses the box".into()));
    }
    let m = idx.len();
    let mut block = DMatrix::zeros(m, m);
    for (a, &ia) in idx.iter().enumerate() {
        for (b, &ib) in idx.iter().enumerate() {
            let mut v = nf.n_op.matrix[(ia, ib)];
            if a == b {
                v += Complex64::new(lattice.free_eigenvalue(&kept[a]), 0.0);
            }
            block[(a, b)] = v;
        }
    }
    Ok((kept, block))
}

/// Reduce one nontrivial class to its rank-M Schrödinger operator.
pub fn reduce_block(
    lattice: &Lattice,
    nf: &NormalFormOutput,
    partition: &PartitionResult,
    module: &Submodule,
    beta: &IVec,
) -> Result<ReducedOperator> {
    let rank = module.rank();
    if rank == 0 || rank == lattice.dim {
        return Err(Error::NothingToReduce(format!(
            "rank {rank} in dimension {}",
            lattice.dim
        )));
    }
    let key = (module.clone(), beta.clone());
    let Some(points) = partition.classes.get(&key) else {
        return Err(Error::NothingToReduce(format!(
            "no certain class for beta {beta:?}"
        )));
    };
    let (kept, block) = block_operator(nf, lattice, points)?;

    let split = floquet_split(lattice, beta, module);
    let beta_tilde = split.xi_tilde.clone();
    let ell_sq = split.ell_sq;

    // translated index set in module coordinates
    let mut coords = Vec::with_capacity(kept.len());
    for xi in &kept {
        let zeta: IVec = xi.iter().zip(&beta_tilde).map(|(&x, &b)| x - b).collect();
        let Some(c) = module.coordinates(&zeta) else {
            return Err(Error::NothingToReduce(format!(
                "translated point {zeta:?} escapes the module"
            )));
        };
        coords.push(c);
    }

    // restricted dual metric: g*-Gram of the module basis
    let g_prime = DMatrix::from_fn(rank, rank, |i, j| {
        let vi: Vec<f64> = module.basis[i].iter().map(|&x| x as f64).collect();
        let vj: Vec<f64> = module.basis[j].iter().map(|&x| x as f64).collect();
        lattice.dual_inner(&vi, &vj)
    });
    let sub_lattice = Lattice::from_dual_metric(&g_prime, split.kappa_prime_coeffs.clone())?;

    // reduced matrix: copy couplings, rebuild the diagonal from the
    // sub-lattice free eigenvalues (independent route; parent diagonal
    // equals this plus ℓ² by the orthogonal split identity)
    let m = kept.len();
    let mut reduced = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            if a == b {
                let free = sub_lattice.free_eigenvalue(&coords[a]);
                let n_diag = block[(a, a)]
                    - Complex64::new(lattice.free_eigenvalue(&kept[a]), 0.0);
                reduced[(a, a)] = Complex64::new(free, 0.0) + n_diag;
            } else {
                reduced[(a, b)] = block[(a, b)];
            }
        }
    }
    let radius = coords
        .iter()
        .map(|c| sub_lattice.dual_norm(&sub_lattice.shifted(c)))
        .fold(0.0f64, f64::max);
    let box_set = Arc::new(BoxSet::from_points(coords, radius));
    Ok(ReducedOperator {
        sub_lattice,
        kappa_prime: split.kappa_prime_coeffs,
        ell_sq,
        operator: TruncatedOperator {
            box_set,
            matrix: reduced,
            provenance: "reduced block".into(),
        },
        module: module.clone(),
        beta: beta.clone(),
        parent_points: kept,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    /// Singleton class: the operator acts as a Fourier multiplier.
    Multiplier,
    /// Full-rank block: finite, eigensolved directly.
    TopBlock,
    /// Proper block reduced to a lower-dimensional operator.
    Reduced,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionNode {
    pub module: Submodule,
    pub beta: IVec,
    pub ell_sq: f64,
    pub sub_dim: usize,
    pub kind: NodeKind,
    pub size: usize,
    /// Block eigenvalues in the parent frame.
    pub spectrum: Vec<f64>,
    pub children: Vec<ReductionNode>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionTree {
    pub dim: usize,
    pub nodes: Vec<ReductionNode>,
}

impl ReductionTree {
    pub fn depth(&self) -> usize {
        fn node_depth(n: &ReductionNode) -> usize {
            1 + n.children.iter().map(node_depth).max().unwrap_or(0)
        }
        self.nodes.iter().map(node_depth).max().unwrap_or(0)
    }

    pub fn count_kind(&self, kind: NodeKind) -> usize {
        fn walk(n: &ReductionNode, kind: NodeKind, acc: &mut usize) {
            if n.kind == kind {
                *acc += 1;
            }
            for c in &n.children {
                walk(c, kind, acc);
            }
        }
        let mut acc = 0;
        for n in &self.nodes {
            walk(n, kind, &mut acc);
        }
        acc
    }
}

/// Run partition → normal form → reduction recursively over the certain
/// classes, re-partitioning each reduced operator with the parameters
/// transplanted to the sub-dimension.
pub fn iterate_reduction(
    lattice: &Lattice,
    potential: &FourierSymbol,
    radius: f64,
    params: &ResonanceParams,
    steps: usize,
    depth: usize,
) -> Result<ReductionTree> {
    let partition = crate::partition::extended_partition(lattice, params, radius)?;
    let box_set = Arc::new(BoxSet::ball(lattice, radius));
    let nf = crate::normalform::normal_form(lattice, potential, box_set, params, steps)?;
    build_tree(lattice, &nf, &partition, params, steps, depth)
}

/// Assemble the reduction tree from an already-computed partition and
/// normal form.
pub fn build_tree(
    lattice: &Lattice,
    nf: &NormalFormOutput,
    partition: &PartitionResult,
    params: &ResonanceParams,
    steps: usize,
    depth: usize,
) -> Result<ReductionTree> {
    let mut nodes = Vec::new();
    for ((module, beta), points) in &partition.classes {
        nodes.push(class_node(
            lattice, nf, partition, module, beta, points, params, steps, depth,
        )?);
    }
    Ok(ReductionTree {
        dim: lattice.dim,
        nodes,
    })
}

#[allow(clippy::too_many_arguments)]
fn class_node(
    lattice: &Lattice,
    nf: &NormalFormOutput,
    partition: &PartitionResult,
    module: &Submodule,
    beta: &IVec,
    points: &[IVec],
    params: &ResonanceParams,
    steps: usize,
    depth: usize,
) -> Result<ReductionNode> {
    let d = lattice.dim;
    let rank = module.rank();
    let (kept, block) = block_operator(nf, lattice, points)?;
    let spectrum = eigvalsh(&block)?;
    if rank == 0 || kept.len() == 1 {
        return Ok(ReductionNode {
            module: module.clone(),
            beta: beta.clone(),
            ell_sq: floquet_split(lattice, beta, module).ell_sq,
            sub_dim: 0,
            kind: NodeKind::Multiplier,
            size: kept.len(),
            spectrum,
            children: vec![],
        });
    }
    if rank == d {
        return Ok(ReductionNode {
            module: module.clone(),
            beta: beta.clone(),
            ell_sq: 0.0,
            sub_dim: d,
            kind: NodeKind::TopBlock,
            size: kept.len(),
            spectrum,
            children: vec![],
        });
    }
    let reduced = reduce_block(lattice, nf, partition, module, beta)?;
    let children = if depth > 1 && reduced.sub_lattice.dim >= 1 && kept.len() > 1 {
        descend(&reduced, params, steps, depth - 1)?
    } else {
        vec![]
    };
    Ok(ReductionNode {
        module: module.clone(),
        beta: beta.clone(),
        ell_sq: reduced.ell_sq,
        sub_dim: reduced.sub_lattice.dim,
        kind: NodeKind::Reduced,
        size: kept.len(),
        spectrum,
        children,
    })
}

/// Re-partition a reduced operator and wrap its classes as child nodes.
fn descend(
    reduced: &ReducedOperator,
    params: &ResonanceParams,
    steps: usize,
    _depth: usize,
) -> Result<Vec<ReductionNode>> {
    let sub = &reduced.sub_lattice;
    let sub_params = params.for_dimension(sub.dim)?;
    let points = reduced.operator.box_set.points.clone();
    let labels = partition_subset(sub, &sub_params, &points)?;

    // normal-form the reduced operator on its own index set
    let lap = laplacian_matrix(sub, reduced.operator.box_set.clone());
    let mut n_mat = CMatrix::zeros(points.len(), points.len());
    let mut r_mat = &reduced.operator.matrix - &lap.matrix;
    for _ in 0..steps.min(1) {
        let (n2, r2, _u) =
            normal_form_step(sub, &sub_params, &reduced.operator.box_set, &n_mat, &r_mat)?;
        n_mat = n2;
        r_mat = r2;
    }
    let h_sub = &lap.matrix + &n_mat + &r_mat;

    // classes of the sub-partition
    let mut classes: BTreeMap<(Submodule, IVec), Vec<IVec>> = BTreeMap::new();
    for (xi, label) in &labels {
        classes
            .entry((label.module.clone(), label.beta.clone()))
            .or_default()
            .push(xi.clone());
    }
    let mut out = Vec::new();
    for ((module, beta), pts) in classes {
        let idx: Vec<usize> = pts
            .iter()
            .map(|p| reduced.operator.box_set.position(p).unwrap())
            .collect();
        let mut block = DMatrix::zeros(idx.len(), idx.len());
        for (a, &ia) in idx.iter().enumerate() {
            for (b, &ib) in idx.iter().enumerate() {
                block[(a, b)] = h_sub[(ia, ib)];
            }
        }
        let spectrum = eigvalsh(&block)?;
        let kind = if pts.len() == 1 || module.rank() == 0 {
            NodeKind::Multiplier
        } else if module.rank() == sub.dim {
            NodeKind::TopBlock
        } else {
            NodeKind::Reduced
        };
        out.push(ReductionNode {
            ell_sq: floquet_split(sub, &beta, &module).ell_sq,
            module,
            beta,
            sub_dim: sub.dim,
            kind,
            size: pts.len(),
            spectrum,
            children: vec![],
        });
    }
    Ok(out)
}
