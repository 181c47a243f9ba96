//! Resonance geometry: zones, blocks, extended blocks and the invariant
//! classes W_{M,β}.
//!
//! For a point ξ and a nonzero integer covector k, write ξ_k = ξ+κ+k/2.
//! The level-0 region collects the points with no short near-resonance:
//!
//! ```text
//! Z⁰ = { ξ : |⟨ξ_k,k⟩| > ⟨ξ_k⟩^δ ‖k‖^{-τ}  for all ‖k‖ ≤ ⟨ξ_k⟩^ε }
//! ```
//!
//! A rank-s zone membership ξ ∈ Z^s_M is witnessed by s independent vectors
//! k_1..k_s of M with |⟨ξ_{k₁},k_j⟩| ≤ C_{j-1}⟨ξ_{k₁}⟩^{δ_{j-1}}‖k_j‖^{-τ}
//! and ‖k_j‖ ≤ D_{j-1}⟨ξ_{k₁}⟩^ε. Blocks remove points that resonate at a
//! higher level, extended blocks close the blocks under M-translations
//! (intersected back with the zone and with the complements of the lower
//! extended levels), and the classes W_{M,β} cut the extended blocks along
//! the cosets β+M.
//!
//! Everything is computed on an enlarged box; inner points whose
//! membership could depend on data outside the enlarged box are flagged
//! boundary-uncertain instead of being silently labeled.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{incr, IVec, Lattice};
use crate::params::ResonanceParams;
use crate::submodule::{floquet_split, saturate, Submodule};

/// A level-0 resonance witness.
#[derive(Debug, Clone, Serialize)]
pub struct ResonantVector {
    pub k: IVec,
    /// ⟨ξ_k, k⟩.
    pub pairing: f64,
    /// ⟨ξ_k⟩^δ ‖k‖^{-τ}.
    pub smallness_threshold: f64,
    /// ‖k‖_{g*}.
    pub norm: f64,
    /// ⟨ξ_k⟩^ε.
    pub range_threshold: f64,
}

/// Label of a point in the partition.
#[derive(Debug, Clone, Serialize)]
pub struct BlockLabel {
    pub module: Submodule,
    /// Canonical coset representative in M^(c).
    pub beta: IVec,
    /// Resonance level s = rank M.
    pub level: usize,
    /// False when the decision could depend on out-of-box data.
    pub certain: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PartitionSummary {
    /// Number of inner points per level.
    pub level_counts: BTreeMap<usize, usize>,
    /// Number of certain classes W_{M,β}.
    pub class_count: usize,
    /// (radius, density of the level-0 set within that radius).
    pub e0_density_by_radius: Vec<(f64, f64)>,
    /// max ‖ξ+κ‖ over inner points of the top-level block, if any.
    pub top_block_max_norm: Option<f64>,
    pub uncertain_count: usize,
    pub escalations: usize,
}

/// Partition of an inner metric ball, computed on an enlarged box.
#[derive(Debug, Clone)]
pub struct PartitionResult {
    pub lattice: Lattice,
    /// Possibly escalated relative to the requested parameters.
    pub params: ResonanceParams,
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// Inner-point labels.
    pub labels: BTreeMap<IVec, BlockLabel>,
    /// Certain classes W_{M,β} over inner points.
    pub classes: BTreeMap<(Submodule, IVec), Vec<IVec>>,
    pub summary: PartitionSummary,
    /// Zone memberships of every enlarged-box point (level, module id).
    zone_data: HashMap<IVec, Vec<(usize, u32)>>,
    modules: Vec<Submodule>,
    /// Observed projection constants per level.
    fitted_k: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    /// Certain points sitting in a zone of a module not containing theirs.
    pub overlap_violations: usize,
    /// Certain points with a short translate landing in a foreign zone.
    pub separation_violations: usize,
    /// Observed K per level: max ‖(ξ+κ)_M‖ / ⟨ξ+κ⟩^{δ_{s-1}+dε}.
    pub fitted_k: Vec<(usize, f64)>,
    pub densities: Vec<(f64, f64)>,
    pub density_nondecreasing: bool,
    pub escalation_advice: Option<String>,
}

struct ZoneContext {
    lambda_min_sqrt: f64,
    d_max: f64,
}

impl ZoneContext {
    fn new(lattice: &Lattice, params: &ResonanceParams) -> Self {
        let lambda_min = lattice
            .g_star()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        let d_max = params
            .d_schedule
            .iter()
            .take(params.dim)
            .fold(1.0f64, |a, &b| a.max(b));
        ZoneContext {
            lambda_min_sqrt: lambda_min.sqrt(),
            d_max,
        }
    }
}

/// All k ≠ 0 with ‖k‖ ≤ ⟨ξ_k⟩^ε and |⟨ξ_k,k⟩| ≤ ⟨ξ_k⟩^δ ‖k‖^{-τ}.
pub fn resonant_vectors(
    lattice: &Lattice,
    xi: &[i64],
    params: &ResonanceParams,
) -> Vec<ResonantVector> {
    let ctx = ZoneContext::new(lattice, params);
    candidate_vectors(lattice, params, &ctx, xi)
        .into_iter()
        .filter_map(|k| level_zero_witness(lattice, params, xi, &k))
        .collect()
}

fn level_zero_witness(
    lattice: &Lattice,
    params: &ResonanceParams,
    xi: &[i64],
    k: &[i64],
) -> Option<ResonantVector> {
    let d = lattice.dim;
    let w = lattice.shifted(xi);
    let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
    let mut xik = vec![0.0; d];
    for a in 0..d {
        xik[a] = w[a] + kf[a] / 2.0;
    }
    let bracket = (1.0 + lattice.dual_norm_sq(&xik)).sqrt();
    let knorm = lattice.dual_norm(&kf);
    let range_threshold = bracket.powf(params.epsilon);
    if knorm > range_threshold {
        return None;
    }
    let pairing = lattice.dual_inner(&xik, &kf);
    let smallness_threshold = bracket.powf(params.delta) * knorm.powf(-params.tau);
    if pairing.abs() > smallness_threshold {
        return None;
    }
    Some(ResonantVector {
        k: k.to_vec(),
        pairing,
        smallness_threshold,
        norm: knorm,
        range_threshold,
    })
}

/// Enumeration ball covering every slot's range condition. Slot 1 is
/// self-referential (‖k‖ ≤ ⟨ξ+κ+k/2⟩^ε with D_0 = 1), absorbed by the
/// closed-form radius 2⟨ξ+κ⟩^ε + 2; slots j ≥ 2 anchor at ξ_{k₁} whose
/// bracket exceeds ⟨ξ+κ⟩ by at most ⟨ξ+κ⟩^ε + 1.
fn candidate_vectors(
    lattice: &Lattice,
    params: &ResonanceParams,
    ctx: &ZoneContext,
    xi: &[i64],
) -> Vec<IVec> {
    let d = lattice.dim;
    let w = lattice.shifted(xi);
    let bracket = (1.0 + lattice.dual_norm_sq(&w)).sqrt();
    let b_eps = bracket.powf(params.epsilon);
    let r_first = 2.0 * b_eps + 2.0;
    let r_higher = ctx.d_max * (bracket + b_eps + 1.0).powf(params.epsilon);
    let r_k = r_first.max(r_higher);
    let cube = (r_k / ctx.lambda_min_sqrt).ceil() as i64 + 1;
    let mut out = Vec::new();
    let mut k = vec![-cube; d];
    loop {
        if k.iter().any(|&x| x != 0) {
            let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
            if lattice.dual_norm(&kf) <= r_k {
                out.push(k.clone());
            }
        }
        if !incr(&mut k, cube) {
            break;
        }
    }
    out
}

/// Rank of a set of integer vectors (fraction-free elimination over i128).
fn int_rank(vecs: &[&IVec]) -> usize {
    if vecs.is_empty() {
        return 0;
    }
    let d = vecs[0].len();
    let mut m: Vec<Vec<i128>> = vecs
        .iter()
        .map(|v| v.iter().map(|&x| x as i128).collect())
        .collect();
    let mut rank = 0;
    for col in 0..d {
        let Some(p) = (rank..m.len()).find(|&i| m[i][col] != 0) else {
            continue;
        };
        m.swap(rank, p);
        for i in (rank + 1)..m.len() {
            if m[i][col] != 0 {
                let a = m[rank][col];
                let b = m[i][col];
                for c in 0..d {
                    m[i][c] = m[i][c] * a - m[rank][c] * b;
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// All zone memberships (level, module) of a point.
pub fn zone_membership(
    lattice: &Lattice,
    xi: &[i64],
    params: &ResonanceParams,
) -> Vec<(usize, Submodule)> {
    let ctx = ZoneContext::new(lattice, params);
    point_zone_memberships(lattice, params, &ctx, xi)
}

fn point_zone_memberships(
    lattice: &Lattice,
    params: &ResonanceParams,
    ctx: &ZoneContext,
    xi: &[i64],
) -> Vec<(usize, Submodule)> {
    let d = lattice.dim;
    let w = lattice.shifted(xi);
    let candidates = candidate_vectors(lattice, params, ctx, xi);
    let mut memberships: BTreeSet<(usize, Submodule)> = BTreeSet::new();

    for k1 in &candidates {
        if level_zero_witness(lattice, params, xi, k1).is_none() {
            continue;
        }
        let k1f: Vec<f64> = k1.iter().map(|&x| x as f64).collect();
        let mut xik1 = vec![0.0; d];
        for a in 0..d {
            xik1[a] = w[a] + k1f[a] / 2.0;
        }
        let bracket1 = (1.0 + lattice.dual_norm_sq(&xik1)).sqrt();
        memberships.insert((1, saturate(d, &[k1.clone()])));
        if d == 1 {
            continue;
        }

        // candidates admissible at slot j ≥ 2 (thresholds widen with j, all
        // tests anchored at ξ_{k₁})
        let admissible = |j: usize, k: &IVec| -> bool {
            let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
            let knorm = lattice.dual_norm(&kf);
            if knorm > params.d_level(j - 1) * bracket1.powf(params.epsilon) {
                return false;
            }
            lattice.dual_inner(&xik1, &kf).abs()
                <= params.c_level(j - 1)
                    * bracket1.powf(params.delta_level(j - 1))
                    * knorm.powf(-params.tau)
        };

        // depth-first tuple extension
        let mut stack: Vec<(Vec<&IVec>, usize)> = vec![(vec![k1], 2)];
        while let Some((tuple, j)) = stack.pop() {
            if j > d {
                continue;
            }
            for k in &candidates {
                if !admissible(j, k) {
                    continue;
                }
                let mut ext = tuple.clone();
                ext.push(k);
                if int_rank(&ext) != ext.len() {
                    continue;
                }
                let owned: Vec<IVec> = ext.iter().map(|v| (*v).clone()).collect();
                memberships.insert((ext.len(), saturate(d, &owned)));
                stack.push((ext, j + 1));
            }
        }
    }
    memberships.into_iter().collect()
}

/// Block label from the raw (non-extended) block decomposition: the maximal
/// witnessed level with the unique module there.
pub fn block_label_raw(
    lattice: &Lattice,
    xi: &[i64],
    params: &ResonanceParams,
) -> Result<(usize, Submodule)> {
    let memberships = zone_membership(lattice, xi, params);
    let max_level = memberships.iter().map(|(s, _)| *s).max().unwrap_or(0);
    if max_level == 0 {
        return Ok((0, Submodule::zero(lattice.dim)));
    }
    let at_top: Vec<&Submodule> = memberships
        .iter()
        .filter(|(s, _)| *s == max_level)
        .map(|(_, m)| m)
        .collect();
    if at_top.len() > 1 {
        return Err(Error::ConstantsTooSmall(format!(
            "point {xi:?} witnesses {} modules at level {max_level}; escalate C_s, D_s",
            at_top.len()
        )));
    }
    Ok((max_level, at_top[0].clone()))
}

/// Build the partition of the inner metric ball of the given radius,
/// escalating the C_s/D_s schedules (×2 above level 0) until the extended
/// blocks are conflict-free, then labeling every inner point.
pub fn extended_partition(
    lattice: &Lattice,
    params: &ResonanceParams,
    inner_radius: f64,
) -> Result<PartitionResult> {
    if inner_radius < 5.0 {
        return Err(Error::InvalidParams(
            "inner radius must be at least 5".into(),
        ));
    }
    let mut p = params.clone();
    const MAX_ROUNDS: usize = 6;
    for round in 0..MAX_ROUNDS {
        match build_partition(lattice, &p, inner_radius) {
            Ok(mut result) => {
                if count_overlap_violations(&result) == 0 {
                    result.summary.escalations = round;
                    return Ok(result);
                }
                p = p.escalated();
            }
            Err(Error::ConstantsTooSmall(_)) => p = p.escalated(),
            Err(e) => return Err(e),
        }
    }
    Err(Error::ConstantsTooSmall(format!(
        "no conflict-free schedule found after {MAX_ROUNDS} doublings"
    )))
}

const SAFETY: f64 = 1.5;

fn build_partition(
    lattice: &Lattice,
    params: &ResonanceParams,
    inner_radius: f64,
) -> Result<PartitionResult> {
    let d = lattice.dim;
    let ctx = ZoneContext::new(lattice, params);

    // Pass A: fit the projection constants on the inner ball.
    let inner_points = ball_points(lattice, inner_radius);
    let inner_zones: Vec<Vec<(usize, Submodule)>> = inner_points
        .par_iter()
        .map(|xi| point_zone_memberships(lattice, params, &ctx, xi))
        .collect();
    let mut k_fit = vec![0.0f64; d + 1];
    for (xi, zones) in inner_points.iter().zip(&inner_zones) {
        for (s, m) in zones {
            let r = projection_ratio(lattice, params, xi, m, *s);
            k_fit[*s] = k_fit[*s].max(r);
        }
    }
    for s in 1..=d {
        if k_fit[s] == 0.0 {
            k_fit[s] = k_fit[..s].iter().fold(1.0f64, |a, &b| a.max(b));
        }
    }

    // Margin from the fitted projection bound at levels whose extended
    // blocks need coset witnesses (s ≤ d-1); the top level is its own
    // witness. The margin is capped: a decision needing data beyond the
    // cap becomes a boundary-uncertain flag, never a silent label.
    let margin_cap = (0.75 * inner_radius).max(25.0);
    let mut margin = 4.0f64;
    for _ in 0..4 {
        let mut next = 4.0f64;
        for s in 1..d.max(2) {
            if s > d {
                break;
            }
            let e_s = params.delta_level(s.saturating_sub(1)) + d as f64 * params.epsilon;
            let b_in = (1.0 + inner_radius * inner_radius).sqrt().powf(e_s);
            let r_out = inner_radius + margin;
            let b_out = (1.0 + r_out * r_out).sqrt().powf(e_s);
            next = next.max(SAFETY * k_fit[s.min(d)] * (b_in + b_out));
        }
        margin = next.min(margin_cap);
    }
    let outer_radius = inner_radius + margin;

    // Pass B: zones on the enlarged box.
    let outer_points = ball_points(lattice, outer_radius);
    let outer_zones: Vec<Vec<(usize, Submodule)>> = outer_points
        .par_iter()
        .map(|xi| point_zone_memberships(lattice, params, &ctx, xi))
        .collect();

    // refit K on the enlarged box (used by the certainty predicate)
    for (xi, zones) in outer_points.iter().zip(&outer_zones) {
        for (s, m) in zones {
            let r = projection_ratio(lattice, params, xi, m, *s);
            k_fit[*s] = k_fit[*s].max(r);
        }
    }

    // intern modules
    let mut modules: Vec<Submodule> = Vec::new();
    let mut module_ids: HashMap<Submodule, u32> = HashMap::new();
    let mut zone_data: HashMap<IVec, Vec<(usize, u32)>> = HashMap::new();
    for (xi, zones) in outer_points.iter().zip(&outer_zones) {
        let entry: Vec<(usize, u32)> = zones
            .iter()
            .map(|(s, m)| {
                let id = *module_ids.entry(m.clone()).or_insert_with(|| {
                    modules.push(m.clone());
                    (modules.len() - 1) as u32
                });
                (*s, id)
            })
            .collect();
        zone_data.insert(xi.clone(), entry);
    }

    // level sweep over the enlarged box
    #[derive(Clone)]
    struct PointState {
        claim: Option<(usize, u32)>,
        claim_certain: bool,
        uncertain_excluded: bool,
    }
    let mut state: HashMap<IVec, PointState> = outer_points
        .iter()
        .map(|p| {
            (
                p.clone(),
                PointState {
                    claim: None,
                    claim_certain: true,
                    uncertain_excluded: false,
                },
            )
        })
        .collect();

    let max_level_of = |xi: &IVec| -> usize {
        zone_data[xi].iter().map(|(s, _)| *s).max().unwrap_or(0)
    };

    for level in 1..=d {
        let mut mods_at_level: BTreeSet<u32> = BTreeSet::new();
        for zones in zone_data.values() {
            for (s, id) in zones {
                if *s == level {
                    mods_at_level.insert(*id);
                }
            }
        }
        // claims of this level are committed after the whole level is done
        let mut claims: HashMap<IVec, Vec<(u32, bool)>> = HashMap::new();
        for m_id in mods_at_level {
            let module = modules[m_id as usize].clone();
            let members: Vec<&IVec> = outer_points
                .iter()
                .filter(|xi| zone_data[*xi].iter().any(|&(s, id)| s == level && id == m_id))
                .collect();
            // cosets with a block point (zone member with no higher level)
            let mut coset_has_block: HashMap<Vec<i64>, bool> = HashMap::new();
            for xi in &members {
                let key = module.coset_key(xi);
                let is_block = max_level_of(xi) == level;
                *coset_has_block.entry(key).or_insert(false) |= is_block;
            }
            for xi in &members {
                let st = &state[*xi];
                if st.claim.is_some() {
                    continue; // already in a lower extended level
                }
                let key = module.coset_key(xi);
                if coset_has_block[&key] {
                    claims.entry((*xi).clone()).or_default().push((m_id, true));
                } else {
                    // no in-box witness: either certainly absent outside
                    // the box too, or flag the exclusion as uncertain
                    let split = floquet_split(lattice, xi, &module);
                    if !no_outofbox_witness_possible(
                        params,
                        &k_fit,
                        level,
                        d,
                        split.ell_sq,
                        outer_radius,
                    ) {
                        state.get_mut(*xi).unwrap().uncertain_excluded = true;
                    }
                }
            }
        }
        for (xi, claimed) in claims {
            if claimed.len() > 1 {
                return Err(Error::ConstantsTooSmall(format!(
                    "point {xi:?} claimed by {} modules at level {level}",
                    claimed.len()
                )));
            }
            let st = state.get_mut(&xi).unwrap();
            st.claim = Some((level, claimed[0].0));
            st.claim_certain = !st.uncertain_excluded;
        }
    }

    // label inner points
    let mut labels: BTreeMap<IVec, BlockLabel> = BTreeMap::new();
    let mut classes: BTreeMap<(Submodule, IVec), Vec<IVec>> = BTreeMap::new();
    let mut summary = PartitionSummary::default();
    for xi in &inner_points {
        let st = &state[xi];
        let label = match st.claim {
            None => {
                // no zone membership at all: level-0 point, always certain
                debug_assert!(zone_data[xi].is_empty());
                if !zone_data[xi].is_empty() {
                    return Err(Error::ConstantsTooSmall(format!(
                        "point {xi:?} has zone memberships but no extended block claimed it"
                    )));
                }
                BlockLabel {
                    module: Submodule::zero(d),
                    beta: xi.clone(),
                    level: 0,
                    certain: true,
                }
            }
            Some((level, m_id)) => {
                let module = modules[m_id as usize].clone();
                let beta = module.coset_representative(xi);
                BlockLabel {
                    module,
                    beta,
                    level,
                    certain: st.claim_certain,
                }
            }
        };
        *summary.level_counts.entry(label.level).or_insert(0) += 1;
        if !label.certain {
            summary.uncertain_count += 1;
        }
        if label.certain {
            classes
                .entry((label.module.clone(), label.beta.clone()))
                .or_default()
                .push(xi.clone());
        }
        if label.level == d {
            let norm = lattice.dual_norm(&lattice.shifted(xi));
            summary.top_block_max_norm =
                Some(summary.top_block_max_norm.unwrap_or(0.0).max(norm));
        }
        labels.insert(xi.clone(), label);
    }
    summary.class_count = classes.len();

    let mut result = PartitionResult {
        lattice: lattice.clone(),
        params: params.clone(),
        inner_radius,
        outer_radius,
        labels,
        classes,
        summary,
        zone_data,
        modules,
        fitted_k: k_fit,
    };
    let radii: Vec<f64> = (1..=4).map(|i| inner_radius * i as f64 / 4.0).collect();
    result.summary.e0_density_by_radius = radii
        .iter()
        .map(|&r| (r, result.e0_density(r)))
        .collect();
    Ok(result)
}

/// ‖(ξ+κ)_M‖ / ⟨ξ+κ⟩^{δ_{s-1}+dε}.
fn projection_ratio(
    lattice: &Lattice,
    params: &ResonanceParams,
    xi: &[i64],
    module: &Submodule,
    level: usize,
) -> f64 {
    let w = lattice.shifted(xi);
    let (w_m, _) = lattice.project_span(&w, &module.basis);
    let e_s = params.delta_level(level.saturating_sub(1)) + lattice.dim as f64 * params.epsilon;
    let bracket = (1.0 + lattice.dual_norm_sq(&w)).sqrt();
    lattice.dual_norm(&w_m) / bracket.powf(e_s)
}

/// Whether a coset with orthogonal shift ℓ² certainly has no zone point of
/// the given level outside the enlarged box, under the fitted projection
/// bound ‖(ξ+κ)_M‖ ≤ safety·K·⟨2‖ξ+κ‖⟩^{e_s}.
fn no_outofbox_witness_possible(
    params: &ResonanceParams,
    k_fit: &[f64],
    level: usize,
    dim: usize,
    ell_sq: f64,
    outer_radius: f64,
) -> bool {
    let e_s = params.delta_level(level.saturating_sub(1)) + dim as f64 * params.epsilon;
    if e_s >= 1.0 {
        return false;
    }
    let c = SAFETY * k_fit[level];
    let bound = |r: f64| -> f64 { c * (1.0 + 4.0 * r * r).powf(e_s / 2.0) };
    // r² - bound(r)² - ℓ² is increasing past r*; check from max(N_out, r*)
    let r_star = 0.5 * (4.0 * e_s * c * c).powf(1.0 / (1.0 - e_s)).max(1.0);
    let check = |r: f64| -> bool { r * r > ell_sq + bound(r) * bound(r) * 1.1 };
    if outer_radius >= r_star {
        check(outer_radius)
    } else {
        check(outer_radius) && check(r_star) && check(2.0 * r_star)
    }
}

fn ball_points(lattice: &Lattice, radius: f64) -> Vec<IVec> {
    crate::op::BoxSet::ball(lattice, radius).points
}

/// Partition of an explicit finite index set E (restriction semantics: all
/// zones, blocks and Minkowski sums are taken within E). Used when
/// re-partitioning reduced blocks, where E is the whole problem and labels
/// carry no boundary uncertainty.
pub fn partition_subset(
    lattice: &Lattice,
    params: &ResonanceParams,
    points: &[IVec],
) -> Result<BTreeMap<IVec, BlockLabel>> {
    let d = lattice.dim;
    let ctx = ZoneContext::new(lattice, params);
    let zones: Vec<Vec<(usize, Submodule)>> = points
        .par_iter()
        .map(|xi| point_zone_memberships(lattice, params, &ctx, xi))
        .collect();
    let zone_of: HashMap<&IVec, &Vec<(usize, Submodule)>> =
        points.iter().zip(&zones).collect();
    let max_level_of =
        |xi: &IVec| -> usize { zone_of[xi].iter().map(|(s, _)| *s).max().unwrap_or(0) };

    let mut claim: HashMap<IVec, (usize, Submodule)> = HashMap::new();
    for level in 1..=d {
        let mut mods: BTreeSet<Submodule> = BTreeSet::new();
        for z in &zones {
            for (s, m) in z {
                if *s == level {
                    mods.insert(m.clone());
                }
            }
        }
        let mut level_claims: HashMap<IVec, Vec<Submodule>> = HashMap::new();
        for module in mods {
            let members: Vec<&IVec> = points
                .iter()
                .filter(|xi| {
                    zone_of[*xi]
                        .iter()
                        .any(|(s, m)| *s == level && *m == module)
                })
                .collect();
            let mut coset_has_block: HashMap<Vec<i64>, bool> = HashMap::new();
            for xi in &members {
                let key = module.coset_key(xi);
                *coset_has_block.entry(key).or_insert(false) |= max_level_of(xi) == level;
            }
            for xi in &members {
                if claim.contains_key(*xi) {
                    continue;
                }
                if coset_has_block[&module.coset_key(xi)] {
                    level_claims
                        .entry((*xi).clone())
                        .or_default()
                        .push(module.clone());
                }
            }
        }
        for (xi, mods) in level_claims {
            if mods.len() > 1 {
                return Err(Error::ConstantsTooSmall(format!(
                    "subset point {xi:?} claimed by {} modules at level {level}",
                    mods.len()
                )));
            }
            claim.insert(xi, (level, mods.into_iter().next().unwrap()));
        }
    }

    let mut labels = BTreeMap::new();
    for xi in points {
        let label = match claim.get(xi) {
            None => BlockLabel {
                module: Submodule::zero(d),
                beta: xi.clone(),
                level: 0,
                certain: true,
            },
            Some((level, module)) => BlockLabel {
                module: module.clone(),
                beta: module.coset_representative(xi),
                level: *level,
                certain: true,
            },
        };
        labels.insert(xi.clone(), label);
    }
    Ok(labels)
}

fn count_overlap_violations(result: &PartitionResult) -> usize {
    overlap_violations(result).len()
}

fn overlap_violations(result: &PartitionResult) -> Vec<(IVec, usize, usize)> {
    let mut v = Vec::new();
    for (xi, label) in &result.labels {
        if !label.certain || label.level == 0 {
            continue;
        }
        for &(s, id) in &result.zone_data[xi] {
            if s <= label.level {
                let other = &result.modules[id as usize];
                if !label.module.contains_module(other) {
                    v.push((xi.clone(), label.level, s));
                }
            }
        }
    }
    v
}

impl PartitionResult {
    pub fn label(&self, xi: &[i64]) -> Option<&BlockLabel> {
        self.labels.get(xi)
    }

    /// Inner points labeled at the given level.
    pub fn points_at_level(&self, level: usize) -> Vec<IVec> {
        self.labels
            .iter()
            .filter(|(_, l)| l.level == level)
            .map(|(p, _)| p.clone())
            .collect()
    }

    /// Density of the level-0 set among inner points within `radius`.
    pub fn e0_density(&self, radius: f64) -> f64 {
        let mut total = 0usize;
        let mut zero = 0usize;
        for (xi, label) in &self.labels {
            let norm = self.lattice.dual_norm(&self.lattice.shifted(xi));
            if norm <= radius {
                total += 1;
                if label.level == 0 {
                    zero += 1;
                }
            }
        }
        if total == 0 {
            0.0
        } else {
            zero as f64 / total as f64
        }
    }

    /// Exhaustive geometric verification on the computed box.
    pub fn verify_geometry(&self) -> GeometryReport {
        let lattice = &self.lattice;
        let params = &self.params;
        let d = lattice.dim;
        let overlaps = overlap_violations(self);

        // separation: short translates of certain points avoid foreign zones
        let ctx = ZoneContext::new(lattice, params);
        let mut separation = 0usize;
        for (xi, label) in &self.labels {
            if !label.certain || label.level == 0 {
                continue;
            }
            for kp in candidate_vectors(lattice, params, &ctx, xi) {
                // admissible translate: ‖k'‖ ≤ ⟨ξ+κ+k'/2⟩^ε
                let kf: Vec<f64> = kp.iter().map(|&x| x as f64).collect();
                let w = lattice.shifted(xi);
                let mid: Vec<f64> = (0..d).map(|a| w[a] + kf[a] / 2.0).collect();
                let bracket = (1.0 + lattice.dual_norm_sq(&mid)).sqrt();
                if lattice.dual_norm(&kf) > bracket.powf(params.epsilon) {
                    continue;
                }
                let target: IVec = xi.iter().zip(&kp).map(|(&a, &b)| a + b).collect();
                let Some(zones) = self.zone_data.get(&target) else {
                    continue;
                };
                for &(s, id) in zones {
                    if s <= label.level
                        && !label.module.contains_module(&self.modules[id as usize])
                    {
                        separation += 1;
                    }
                }
            }
        }

        let densities: Vec<(f64, f64)> = (1..=4)
            .map(|i| {
                let r = self.inner_radius * i as f64 / 4.0;
                (r, self.e0_density(r))
            })
            .collect();
        let nondecreasing = densities.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12);

        let advice = if !overlaps.is_empty() || separation > 0 {
            Some("multiply C_s and D_s by 2 and recompute".to_string())
        } else {
            None
        };
        GeometryReport {
            overlap_violations: overlaps.len(),
            separation_violations: separation,
            fitted_k: (1..=d).map(|s| (s, self.fitted_k[s])).collect(),
            densities,
            density_nondecreasing: nondecreasing,
            escalation_advice: advice,
        }
    }
}
