//! Exhaustive oracles, the geometric expansion checker and the structural
//! audit of sparsifier outputs.
//!
//! Each oracle has a second enumerator with a different iteration order;
//! tests compare the two on random graphs.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::embeddings::{Embedding, ModelKind};
use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeSet, Graph, Partition, VertexSet};
use crate::instances::MulticutDemands;
use crate::rng;
use crate::sparsify::{heavy_vertices, SparsifierOutput};

pub const BISECTION_MAX_N: usize = 20;
pub const SSE_MAX_N: usize = 20;
pub const MULTICUT_MAX_N: usize = 10;

fn adjacency_masks(g: &Graph) -> Vec<u32> {
    (0..g.n()).map(|u| g.neighbors(u).iter().fold(0u32, |m, &v| m | (1 << v))).collect()
}

fn mask_boundary(adj: &[u32], s: u32) -> usize {
    let mut cost = 0;
    let mut rest = s;
    while rest != 0 {
        let u = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        cost += (adj[u] & !s).count_ones() as usize;
    }
    cost
}

fn mask_set(s: u32) -> VertexSet {
    (0..32).filter(|&u| s >> u & 1 == 1).collect()
}

/// Next integer with the same popcount (Gosper's hack).
fn next_same_popcount(x: u32) -> u32 {
    let c = x & x.wrapping_neg();
    let r = x + c;
    (((r ^ x) >> 2) / c) | r
}

/// Minimum-boundary set of exactly `k` vertices among `0..n`; with
/// `pin_first` only sets containing vertex 0 are scanned.
fn best_of_size(adj: &[u32], n: usize, k: usize, pin_first: bool) -> (u32, usize) {
    if k == 0 {
        return (0, 0);
    }
    let limit = 1u64 << n;
    let mut s: u32 = (1u32 << k) - 1;
    let mut best = (s, usize::MAX);
    while (s as u64) < limit {
        if !pin_first || s & 1 == 1 {
            let c = mask_boundary(adj, s);
            if c < best.1 {
                best = (s, c);
            }
        }
        if k == n {
            break;
        }
        s = next_same_popcount(s);
    }
    best
}

/// Exact minimum bisection: `|S| = n/2`.
pub fn brute_force_balanced_cut(g: &Graph) -> Result<(VertexSet, usize)> {
    let n = g.n();
    if n > BISECTION_MAX_N {
        return Err(Error::Size(format!("bisection oracle needs n <= {BISECTION_MAX_N}, got {n}")));
    }
    if n % 2 != 0 {
        return Err(Error::Parameter(format!("bisection oracle needs even n, got {n}")));
    }
    if n == 0 {
        return Ok((VertexSet::new(), 0));
    }
    let (s, c) = best_of_size(&adjacency_masks(g), n, n / 2, true);
    Ok((mask_set(s), c))
}

/// Exact minimum boundary over sets of size exactly `ρn`.
pub fn brute_force_sse(g: &Graph, rho: f64) -> Result<(VertexSet, usize)> {
    let n = g.n();
    if n > SSE_MAX_N {
        return Err(Error::Size(format!("SSE oracle needs n <= {SSE_MAX_N}, got {n}")));
    }
    let k = sse_size(n, rho)?;
    let (s, c) = best_of_size(&adjacency_masks(g), n, k, false);
    Ok((mask_set(s), c))
}

fn sse_size(n: usize, rho: f64) -> Result<usize> {
    let target = rho * n as f64;
    let k = target.round();
    if !(rho > 0.0 && rho <= 1.0) || (target - k).abs() > 1e-9 || k < 1.0 {
        return Err(Error::Parameter(format!("ρn = {target} is not a positive integer")));
    }
    Ok(k as usize)
}

/// Depth-first enumeration from the last vertex down, tracking the boundary
/// incrementally. Returns the minimum cost over sets of size `k`.
fn recursive_best(g: &Graph, k: usize, pin_zero: bool) -> usize {
    fn go(g: &Graph, v: isize, left: usize, side: &mut Vec<Option<bool>>, cost: usize, best: &mut usize, pin_zero: bool) {
        if cost >= *best {
            return;
        }
        if v < 0 {
            if left == 0 {
                *best = cost;
            }
            return;
        }
        let u = v as usize;
        let remaining = u + 1;
        for choice in [true, false] {
            if choice && left == 0 {
                continue;
            }
            let left_after = if choice { left - 1 } else { left };
            if left_after > remaining - 1 {
                continue;
            }
            if pin_zero && u == 0 && !choice {
                continue;
            }
            let delta = g.neighbors(u).iter().filter(|&&w| side[w].is_some_and(|s| s != choice)).count();
            side[u] = Some(choice);
            go(g, v - 1, left_after, side, cost + delta, best, pin_zero);
            side[u] = None;
        }
    }
    let mut best = usize::MAX;
    let mut side = vec![None; g.n()];
    go(g, g.n() as isize - 1, k, &mut side, 0, &mut best, pin_zero);
    best
}

/// Second bisection enumerator (recursive, highest vertex first).
pub fn brute_force_balanced_cut_alt(g: &Graph) -> Result<usize> {
    let n = g.n();
    if n > BISECTION_MAX_N || n % 2 != 0 {
        return Err(Error::Size(format!("bisection oracle needs even n <= {BISECTION_MAX_N}")));
    }
    Ok(if n == 0 { 0 } else { recursive_best(g, n / 2, true) })
}

/// Second SSE enumerator (recursive, highest vertex first).
pub fn brute_force_sse_alt(g: &Graph, rho: f64) -> Result<usize> {
    if g.n() > SSE_MAX_N {
        return Err(Error::Size(format!("SSE oracle needs n <= {SSE_MAX_N}")));
    }
    let k = sse_size(g.n(), rho)?;
    Ok(recursive_best(g, k, false))
}

fn check_demands(g: &Graph, demands: &MulticutDemands) -> Result<()> {
    demands.check_range(g.n())
}

/// Exact multicut over all set partitions (restricted growth strings).
pub fn brute_force_multicut(g: &Graph, demands: &MulticutDemands) -> Result<(Partition, usize)> {
    let n = g.n();
    if n > MULTICUT_MAX_N {
        return Err(Error::Size(format!("multicut oracle needs n <= {MULTICUT_MAX_N}, got {n}")));
    }
    check_demands(g, demands)?;
    if n == 0 {
        return Ok((Partition::single(0), 0));
    }
    let mut labels = vec![0usize; n];
    let mut maxes = vec![0usize; n];
    let mut best: Option<(Vec<usize>, usize)> = None;
    loop {
        if demands.pairs.iter().all(|e| labels[e.u()] != labels[e.v()]) {
            let c = g.edges().iter().filter(|e| labels[e.u()] != labels[e.v()]).count();
            if best.as_ref().is_none_or(|b| c < b.1) {
                best = Some((labels.clone(), c));
            }
        }
        // next restricted growth string
        let mut i = n - 1;
        loop {
            if i == 0 {
                let (l, c) = best.ok_or_else(|| Error::Infeasible("no partition separates the demands".into()))?;
                return Ok((Partition::from_assignment(&l), c));
            }
            if labels[i] <= maxes[i - 1] {
                labels[i] += 1;
                maxes[i] = maxes[i - 1].max(labels[i]);
                for j in i + 1..n {
                    labels[j] = 0;
                    maxes[j] = maxes[i];
                }
                break;
            }
            i -= 1;
        }
    }
}

/// Second multicut enumerator: grows partitions recursively, placing the
/// highest vertex first and pruning on partial cost.
pub fn brute_force_multicut_alt(g: &Graph, demands: &MulticutDemands) -> Result<usize> {
    let n = g.n();
    if n > MULTICUT_MAX_N {
        return Err(Error::Size(format!("multicut oracle needs n <= {MULTICUT_MAX_N}, got {n}")));
    }
    check_demands(g, demands)?;
    fn go(g: &Graph, d: &MulticutDemands, order: &[usize], i: usize, label: &mut Vec<usize>, parts: usize, cost: usize, best: &mut usize) {
        if cost >= *best {
            return;
        }
        if i == order.len() {
            *best = cost;
            return;
        }
        let u = order[i];
        for l in 0..=parts {
            let clash = d.pairs.iter().any(|e| {
                let other = if e.u() == u { e.v() } else if e.v() == u { e.u() } else { return false };
                label[other] == l
            });
            if clash {
                continue;
            }
            let delta = g.neighbors(u).iter().filter(|&&w| label[w] != usize::MAX && label[w] != l).count();
            label[u] = l;
            go(g, d, order, i + 1, label, parts.max(l + 1), cost + delta, best);
            label[u] = usize::MAX;
        }
    }
    let order: Vec<usize> = (0..n).rev().collect();
    let mut best = usize::MAX;
    let mut label = vec![usize::MAX; n];
    go(g, demands, &order, 0, &mut label, 0, 0, &mut best);
    if best == usize::MAX {
        return Err(Error::Infeasible("no partition separates the demands".into()));
    }
    Ok(best)
}

/// Outcome of the geometric expansion test at one scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum GeoCheck {
    /// `M` has heavy vertices, so the property says nothing.
    NotApplicable { heavy: usize },
    Pass { short_edges: usize, bound: f64 },
    Violation { short_edges: usize, bound: f64 },
}

impl GeoCheck {
    pub fn passed(&self) -> bool {
        !matches!(self, GeoCheck::Violation { .. })
    }
}

/// Guard used when comparing distances against `δ/2`.
pub const DISTANCE_GUARD: f64 = 1e-12;

/// Counts edges of `e_cut` inside `M` of length `≤ δ/2` and compares the
/// count with `2δ²X`.
pub fn geometric_expansion_check(e_cut: &EdgeSet, phi: &Embedding, m: &VertexSet, delta: f64, x: f64) -> Result<GeoCheck> {
    if let Some(v) = e_cut.max_vertex().max(m.max()) {
        if v >= phi.n() {
            return Err(Error::Domain(format!("vertex {v} not embedded")));
        }
    }
    let heavy = heavy_vertices(phi, m, delta)?;
    if !heavy.is_empty() {
        return Ok(GeoCheck::NotApplicable { heavy: heavy.vertices.len() });
    }
    let mask = m.mask(phi.n());
    let short_edges = e_cut
        .iter()
        .filter(|e| mask[e.u()] && mask[e.v()] && phi.dist(e.u(), e.v()) <= delta / 2.0 + DISTANCE_GUARD)
        .count();
    let bound = 2.0 * delta * delta * x;
    Ok(if short_edges as f64 <= bound {
        GeoCheck::Pass { short_edges, bound }
    } else {
        GeoCheck::Violation { short_edges, bound }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub trials: usize,
    /// Largest short-edge count found on a heavy-free configuration.
    pub best_short_edges: usize,
    pub bound: f64,
    pub counterexample: bool,
}

/// Searches cluster embeddings for a heavy-free configuration with more than
/// `2δ²X` short cut edges.
///
/// Vertices are mapped to orthonormal cluster vectors, which is an exact
/// ℓ²₂ embedding with `d ∈ {0, 2}`. A cluster is heavy-free at scale `δ`
/// exactly when it has fewer than `δ²n` members, so short cut edges are the
/// cut edges inside clusters below that size. Random restarts are followed by
/// single-vertex moves that never decrease the count.
pub fn fuzz_geometric_expansion(g: &Graph, e_cut: &EdgeSet, delta: f64, x: f64, trials: usize, seed: u64) -> Result<FuzzReport> {
    let n = g.n();
    if let Some(v) = e_cut.max_vertex() {
        if v >= n {
            return Err(Error::Domain(format!("vertex {v} outside 0..{n}")));
        }
    }
    let bound = 2.0 * delta * delta * x;
    let cap = (delta * delta * n as f64).ceil().max(1.0) as usize - 1;
    let mut rng = rng::substream(seed, "geo-fuzz");
    let mut best = 0;
    let cut: Vec<Edge> = e_cut.iter().collect();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &cut {
        incident[e.u()].push(e.v());
        incident[e.v()].push(e.u());
    }
    if cap == 0 || cut.is_empty() {
        return Ok(FuzzReport { trials, best_short_edges: 0, bound, counterexample: false });
    }
    for _ in 0..trials {
        let clusters = n.div_ceil(cap);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut label = vec![0usize; n];
        let mut size = vec![0usize; clusters];
        for (i, &u) in order.iter().enumerate() {
            label[u] = i / cap;
            size[i / cap] += 1;
        }
        for _ in 0..4 * n {
            let u = rng.gen_range(0..n);
            let mut gain = vec![0isize; clusters];
            for &w in &incident[u] {
                gain[label[w]] += 1;
            }
            let here = gain[label[u]];
            if let Some((c, _)) = (0..clusters)
                .filter(|&c| c != label[u] && size[c] < cap)
                .map(|c| (c, gain[c]))
                .filter(|&(_, gc)| gc > here)
                .max_by_key(|&(c, gc)| (gc, std::cmp::Reverse(c)))
            {
                size[label[u]] -= 1;
                size[c] += 1;
                label[u] = c;
            }
        }
        let short = cut.iter().filter(|e| label[e.u()] == label[e.v()]).count();
        best = best.max(short);
    }
    Ok(FuzzReport { trials, best_short_edges: best, bound, counterexample: best as f64 > bound })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum AuditFailure {
    VertexOverlap { vertex: usize },
    VertexUncovered { vertex: usize },
    VertexOutOfRange { vertex: usize },
    EdgeInBoth { edge: Edge },
    EdgeMissing { edge: Edge },
    ForeignEdge { edge: Edge },
    CutEdgeKept { edge: Edge },
    NotPhiFeasible { piece: usize, diameter: f64 },
    HeavyAfterRound { t: usize, heavy: usize },
    LongEdgeKept { t: usize, edge: Edge, length: f64 },
    OversizedPiece { piece: usize, size: usize, cap: f64 },
    DemandInsidePiece { piece: usize, demand: Edge },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub failures: Vec<AuditFailure>,
    pub degraded: bool,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Every structural law of a sparsifier output, itemized.
pub fn invariant_audit(out: &SparsifierOutput, g: &Graph, kind: &ModelKind) -> AuditReport {
    let n = g.n();
    let mut failures = Vec::new();

    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut claim = |v: usize, who: usize, failures: &mut Vec<AuditFailure>| {
        if v >= n {
            failures.push(AuditFailure::VertexOutOfRange { vertex: v });
        } else if owner[v].is_some() {
            failures.push(AuditFailure::VertexOverlap { vertex: v });
        } else {
            owner[v] = Some(who);
        }
    };
    for v in out.m.iter() {
        claim(v, 0, &mut failures);
    }
    for (i, p) in out.z.iter().enumerate() {
        for v in p.set.iter() {
            claim(v, i + 1, &mut failures);
        }
    }
    for (v, o) in owner.iter().enumerate() {
        if o.is_none() {
            failures.push(AuditFailure::VertexUncovered { vertex: v });
        }
    }

    let all = g.edge_set();
    for e in out.e_plus.intersection(&out.e_minus).iter() {
        failures.push(AuditFailure::EdgeInBoth { edge: e });
    }
    let covered = out.e_plus.union(&out.e_minus);
    for e in all.difference(&covered).iter() {
        failures.push(AuditFailure::EdgeMissing { edge: e });
    }
    for e in covered.difference(&all).iter() {
        failures.push(AuditFailure::ForeignEdge { edge: e });
    }
    for e in out.e_plus.iter() {
        let (a, b) = (owner.get(e.u()).copied().flatten(), owner.get(e.v()).copied().flatten());
        if a != b {
            failures.push(AuditFailure::CutEdgeKept { edge: e });
        }
    }

    let tol = 2.0 * out.tol_feas;
    for (i, p) in out.z.iter().enumerate() {
        let Some(it) = p.t.checked_sub(1).and_then(|t| out.trace.get(t)) else {
            failures.push(AuditFailure::NotPhiFeasible { piece: i, diameter: f64::INFINITY });
            continue;
        };
        if p.set.max().is_some_and(|v| v >= it.phi.n()) {
            continue;
        }
        let diameter = it.phi.diameter(&p.set);
        if diameter > 0.25 + tol {
            failures.push(AuditFailure::NotPhiFeasible { piece: i, diameter });
        }
    }

    let mut later = out.e_plus.clone();
    for it in out.trace.iter().rev() {
        match heavy_vertices(&it.phi, &it.m_after, it.delta) {
            Ok(h) if !h.is_empty() => failures.push(AuditFailure::HeavyAfterRound { t: it.t, heavy: h.vertices.len() }),
            Ok(_) => {}
            Err(_) => failures.push(AuditFailure::HeavyAfterRound { t: it.t, heavy: usize::MAX }),
        }
        let mask = it.m_after.mask(n);
        for e in later.iter() {
            if e.v() < n && mask[e.u()] && mask[e.v()] {
                let length = it.phi.dist(e.u(), e.v());
                if length >= it.delta {
                    failures.push(AuditFailure::LongEdgeKept { t: it.t, edge: e, length });
                }
            }
        }
        later = later.union(&it.hvr_cut).union(&it.long_edges);
    }

    let cap = match kind {
        ModelKind::BalancedCut => Some(0.8 * n as f64),
        ModelKind::SseCrude { rho } => Some(8.0 / 7.0 * rho * n as f64),
        ModelKind::Multicut { .. } => None,
    };
    for (i, p) in out.z.iter().enumerate() {
        if let Some(cap) = cap {
            if p.set.len() as f64 > cap + 1e-9 {
                failures.push(AuditFailure::OversizedPiece { piece: i, size: p.set.len(), cap });
            }
        }
        if let ModelKind::Multicut { demands } = kind {
            for &d in &demands.pairs {
                if p.set.contains(d.u()) && p.set.contains(d.v()) {
                    failures.push(AuditFailure::DemandInsidePiece { piece: i, demand: d });
                }
            }
        }
    }
    AuditReport { failures, degraded: out.degraded }
}
