//! Hidden solution sparsification and heavy vertex removal.
//!
//! `sparsify` runs `T = ½·log₂ D` rounds. Round `t` solves the model on the
//! surviving edges inside `M`, carves heavy regions of the embedding off `M`
//! into Φ-feasible pieces, and cuts the edges of `M` that are `δ_t`-long.

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::embeddings::{build_model_on, solve_cached, Embedding, ModelKind, SolveOptions, SolverReport};
use crate::error::{domain, param, Result};
use crate::graph::{EdgeSet, Graph, VertexSet};
use crate::rng::{self, Rng};

/// Largest scale handed to the removal loop; larger requests run at this one.
pub const HVR_MAX_DELTA: f64 = 1.0 / 32.0;
pub const DEFAULT_D: u64 = 16;
pub const MAX_D: u64 = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    pub d: u64,
    pub t: usize,
    pub delta: Vec<f64>,
}

impl ScaleSchedule {
    /// `D` must be a power of 4 in `[4, 256]`.
    pub fn new(d: u64) -> Result<Self> {
        if d < 4 || d > MAX_D || !d.is_power_of_two() || d.trailing_zeros() % 2 != 0 {
            return param(format!("D = {d} is not a power of 4 in [4, {MAX_D}]"));
        }
        let t = (d.trailing_zeros() / 2) as usize;
        let delta = (1..=t).map(|i| 0.5f64.powi(i as i32)).collect();
        Ok(ScaleSchedule { d, t, delta })
    }
}

/// Heavy vertices of `M` with the ball population of every vertex of `M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeavySet {
    pub vertices: VertexSet,
    pub population: BTreeMap<usize, usize>,
}

impl HeavySet {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

fn check_embedded(phi: &Embedding, m: &VertexSet) -> Result<()> {
    match m.max() {
        Some(v) if v >= phi.n() => domain(format!("vertex {v} not embedded (n = {})", phi.n())),
        _ => Ok(()),
    }
}

fn populations(phi: &Embedding, m: &[usize], delta: f64) -> Vec<usize> {
    use rayon::prelude::*;
    let n = phi.n();
    let d = phi.distances();
    m.par_iter().map(|&u| m.iter().filter(|&&v| d[u * n + v] <= delta).count()).collect()
}

/// `u ∈ M` is heavy when `|{v ∈ M : d(u,v) ≤ δ}| ≥ δ²n` with the global `n`.
pub fn heavy_vertices(phi: &Embedding, m: &VertexSet, delta: f64) -> Result<HeavySet> {
    check_embedded(phi, m)?;
    if !(delta > 0.0 && delta <= 1.0) {
        return param(format!("δ = {delta} outside (0, 1]"));
    }
    let threshold = delta * delta * phi.n() as f64;
    let pops = populations(phi, m.as_slice(), delta);
    let vertices = m.iter().zip(&pops).filter(|(_, &p)| p as f64 >= threshold).map(|(u, _)| u).collect();
    let population = m.iter().zip(pops).collect();
    Ok(HeavySet { vertices, population })
}

/// One pass of the removal loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HvrPass {
    pub r: f64,
    pub heavy: usize,
    pub components: usize,
    pub small_components: usize,
    pub independent_set: usize,
    /// Sizes of the balls around independent-set vertices, in id order.
    pub ball_sizes: Vec<usize>,
    pub removed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HvrResult {
    /// The scale the loop ran at: `min(δ, 1/32)`.
    pub delta: f64,
    pub m_prime: VertexSet,
    pub dz: Vec<VertexSet>,
    pub passes: Vec<HvrPass>,
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Heavy vertex removal at scale `δ`.
///
/// The loop runs at `δ' = min(δ, 1/32)`. It keeps going while `M` has
/// `δ'`-heavy or `δ`-heavy vertices, so the returned `M'` is free of both.
/// Balls claimed earlier in a pass take precedence, which keeps the pieces
/// disjoint even when the triangle inequalities hold only up to rounding.
pub fn remove_heavy(phi: &Embedding, m: &VertexSet, delta: f64, rng: &mut Rng) -> Result<HvrResult> {
    check_embedded(phi, m)?;
    if !(delta > 0.0 && delta <= 1.0) {
        return param(format!("δ = {delta} outside (0, 1]"));
    }
    let n = phi.n();
    let de = delta.min(HVR_MAX_DELTA);
    let d = phi.distances();
    let mut alive = m.mask(n);
    let mut dz = Vec::new();
    let mut passes = Vec::new();
    loop {
        let current = VertexSet::from_mask(&alive);
        let mut heavy = heavy_vertices(phi, &current, de)?.vertices;
        if delta > de {
            heavy = heavy.union(&heavy_vertices(phi, &current, delta)?.vertices);
        }
        if heavy.is_empty() {
            break;
        }
        let h = heavy.as_slice();
        let mut parent: Vec<usize> = (0..h.len()).collect();
        for i in 0..h.len() {
            for j in i + 1..h.len() {
                if d[h[i] * n + h[j]] <= 4.0 * de {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..h.len() {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(h[i]);
        }
        let r = rng.gen_range(de..2.0 * de);
        let mut claimed = vec![false; n];
        let take = |centers: &[usize], claimed: &mut Vec<bool>| -> VertexSet {
            let ball: Vec<usize> = current
                .iter()
                .filter(|&v| !claimed[v] && centers.iter().any(|&c| d[c * n + v] <= r))
                .collect();
            for &v in &ball {
                claimed[v] = true;
            }
            ball.into_iter().collect()
        };
        let mut pass_sets = Vec::new();
        let mut rest = Vec::new();
        let mut small = 0;
        for comp in groups.values() {
            let set: VertexSet = comp.iter().copied().collect();
            if phi.diameter(&set) <= 0.125 {
                small += 1;
                pass_sets.push(take(comp, &mut claimed));
            } else {
                rest.extend_from_slice(comp);
            }
        }
        rest.sort_unstable();
        let mut independent: Vec<usize> = Vec::new();
        for &u in &rest {
            if independent.iter().all(|&s| d[s * n + u] > 4.0 * de) {
                independent.push(u);
            }
        }
        let mut ball_sizes = Vec::new();
        for &u in &independent {
            let ball = take(&[u], &mut claimed);
            ball_sizes.push(ball.len());
            pass_sets.push(ball);
        }
        let mut removed = 0;
        for set in pass_sets.into_iter().filter(|s| !s.is_empty()) {
            for v in set.iter() {
                alive[v] = false;
            }
            removed += set.len();
            dz.push(set);
        }
        passes.push(HvrPass {
            r,
            heavy: h.len(),
            components: groups.len(),
            small_components: small,
            independent_set: independent.len(),
            ball_sizes,
            removed,
        });
    }
    Ok(HvrResult { delta: de, m_prime: VertexSet::from_mask(&alive), dz, passes })
}

/// `max_{u,v∈Z} d(u,v) ≤ 1/4 + tol`.
pub fn is_phi_feasible(z: &VertexSet, phi: &Embedding, tol: f64) -> Result<bool> {
    check_embedded(phi, z)?;
    Ok(phi.diameter(z) <= 0.25 + tol)
}

/// A carved piece and the round whose embedding certifies it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZPiece {
    pub set: VertexSet,
    pub t: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub t: usize,
    pub delta: f64,
    pub phi: Embedding,
    pub report: SolverReport,
    /// `M_{t−1}`, the set the round started from.
    pub m_before: VertexSet,
    pub heavy_before: usize,
    pub hvr: HvrResult,
    pub m_after: VertexSet,
    pub hvr_cut: EdgeSet,
    pub long_edges: EdgeSet,
}

/// Per-round summary for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub t: usize,
    pub delta: f64,
    pub report: SolverReport,
    pub heavy: usize,
    pub m_size: usize,
    pub long_edges: usize,
    pub hvr_cut: usize,
    pub z_sizes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsifierOutput {
    pub n: usize,
    pub model: ModelKind,
    pub schedule: ScaleSchedule,
    pub m: VertexSet,
    pub z: Vec<ZPiece>,
    pub e_plus: EdgeSet,
    pub e_minus: EdgeSet,
    pub trace: Vec<IterationTrace>,
    pub tol_feas: f64,
    /// Some round's solve did not converge.
    pub degraded: bool,
}

impl SparsifierOutput {
    /// The embedding certifying piece `i`.
    pub fn certificate(&self, i: usize) -> &Embedding {
        &self.trace[self.z[i].t - 1].phi
    }

    /// Embedding of the last round.
    pub fn final_embedding(&self) -> Option<&Embedding> {
        self.trace.last().map(|it| &it.phi)
    }

    pub fn summary(&self) -> Vec<TraceSummary> {
        self.trace
            .iter()
            .map(|it| TraceSummary {
                t: it.t,
                delta: it.delta,
                report: it.report.clone(),
                heavy: it.heavy_before,
                m_size: it.m_after.len(),
                long_edges: it.long_edges.len(),
                hvr_cut: it.hvr_cut.len(),
                z_sizes: it.hvr.dz.iter().map(VertexSet::len).collect(),
            })
            .collect()
    }

    /// `{M} ∪ 𝒵` as a label per vertex: `0` for `M`, `i + 1` for piece `i`.
    pub fn labels(&self) -> Vec<usize> {
        let mut label = vec![0; self.n];
        for (i, piece) in self.z.iter().enumerate() {
            for v in piece.set.iter() {
                label[v] = i + 1;
            }
        }
        label
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsifyOptions {
    pub d: u64,
    pub solver: SolveOptions,
}

impl Default for SparsifyOptions {
    fn default() -> Self {
        SparsifyOptions { d: DEFAULT_D, solver: SolveOptions::default() }
    }
}

pub fn sparsify(g: &Graph, kind: &ModelKind, opts: &SparsifyOptions, seed: u64) -> Result<SparsifierOutput> {
    let schedule = ScaleSchedule::new(opts.d)?;
    let n = g.n();
    let mut m = VertexSet::range(n);
    let mut e_plus = g.edge_set();
    let mut e_minus = EdgeSet::new();
    let mut z: Vec<ZPiece> = Vec::new();
    let mut label = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut degraded = false;
    for (i, &delta) in schedule.delta.iter().enumerate() {
        let t = i + 1;
        let mask = m.mask(n);
        let edges = e_plus.inside(&mask);
        let model = build_model_on(kind.clone(), n, &edges)?;
        let solver = SolveOptions { seed: opts.solver.seed.wrapping_add(seed).wrapping_add(t as u64), ..opts.solver };
        let solved = solve_cached(&model, &solver)?;
        let (phi, report) = (&solved.0, &solved.1);
        degraded |= !report.converged;

        let heavy_before = heavy_vertices(phi, &m, delta)?.vertices.len();
        let mut hvr_rng = rng::child(seed, rng::HVR, t as u64);
        let hvr = remove_heavy(phi, &m, delta, &mut hvr_rng)?;
        let first_new = z.len();
        for set in &hvr.dz {
            for v in set.iter() {
                label[v] = z.len();
            }
            z.push(ZPiece { set: set.clone(), t });
        }
        let hvr_cut: EdgeSet = e_plus
            .iter()
            .filter(|e| {
                let (a, b) = (label[e.u()], label[e.v()]);
                let fresh = |l: usize| l != usize::MAX && l >= first_new;
                (fresh(a) || fresh(b)) && a != b
            })
            .collect();
        let m_after = hvr.m_prime.clone();
        let after_mask = m_after.mask(n);
        let long_edges: EdgeSet = e_plus
            .iter()
            .filter(|e| after_mask[e.u()] && after_mask[e.v()] && phi.dist(e.u(), e.v()) >= delta)
            .collect();
        for e in hvr_cut.iter().chain(long_edges.iter()) {
            e_plus.remove(&e);
            e_minus.insert(e);
        }
        trace.push(IterationTrace {
            t,
            delta,
            phi: phi.clone(),
            report: report.clone(),
            m_before: m,
            heavy_before,
            hvr,
            m_after: m_after.clone(),
            hvr_cut,
            long_edges,
        });
        m = m_after;
    }
    Ok(SparsifierOutput { n, model: kind.clone(), schedule, m, z, e_plus, e_minus, trace, tol_feas: opts.solver.tol_feas, degraded })
}

/// Edges of `edges` with endpoints in different parts of the label map.
pub fn cut_by_labels(edges: &EdgeSet, label: &[usize]) -> EdgeSet {
    edges.iter().filter(|e| label[e.u()] != label[e.v()]).collect()
}
