//! Rounding pipelines on top of the sparsifier: balanced cut, multicut,
//! small set expansion and sparsest cut.
//!
//! The worst-case subroutines are ball-sweep stand-ins over an SDP embedding
//! followed by local refinement. The extraction LP is solved exactly by a parametric
//! minimum cut.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::{build_model_on, solve_cached, Embedding, ModelKind, SolveOptions};
use crate::error::{param, Error, Result};
use crate::graph::{edge_boundary, edges_between, Edge, EdgeSet, Graph, Partition, VertexSet};
use crate::instances::MulticutDemands;
use crate::rng;
use crate::sparsify::{sparsify, SparsifierOutput, SparsifyOptions, TraceSummary};

pub const DEFAULT_C_SIDE: f64 = 10.0;
pub const DEFAULT_C_W: f64 = 8.0;
pub const DEFAULT_AMPLIFICATION: usize = 5;
/// Ball radii swept by the small-set stand-ins.
pub const BALL_WINDOW: (f64, f64) = (1.0 / 16.0, 0.25);
/// Demand tolerance for region growing, in units of the nominal demand distance.
pub const GVY_TOL: f64 = 1e-3;
const LP_TOL: f64 = 1e-9;
const FM_PASSES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub sparsify: SparsifyOptions,
    pub c_side: f64,
    pub c_w: f64,
    pub amplification: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            sparsify: SparsifyOptions::default(),
            c_side: DEFAULT_C_SIDE,
            c_w: DEFAULT_C_W,
            amplification: DEFAULT_AMPLIFICATION,
        }
    }
}

impl PipelineOptions {
    fn solver(&self, offset: u64) -> SolveOptions {
        SolveOptions { seed: self.sparsify.solver.seed.wrapping_add(offset), ..self.sparsify.solver }
    }
}

/// Numbers recorded by the Case II extraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Case2Report {
    pub lp_objective: f64,
    pub dual_bound: f64,
    pub r_star: f64,
    pub s_r_star: usize,
    pub f_s_r_star: f64,
    pub f_extracted: f64,
    pub extracted: usize,
    /// `f(S′) ≤ 16·LP*`.
    pub bound_16_holds: bool,
    /// `f(S_{r*}) ≤ 4·LP*/(ρn)·|S_{r*}|`.
    pub ratio_bound_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GvyReport {
    pub demands_inside: usize,
    pub balls: usize,
    pub cost: usize,
    /// `(1/2)Σ_E d` over the edges handed to region growing.
    pub fractional: f64,
    pub merges: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub sizes: Vec<usize>,
    pub case: Option<String>,
    pub rho: Option<f64>,
    pub e_plus_cost: Option<usize>,
    pub e_minus_cost: Option<usize>,
    pub sdp_objective: Option<f64>,
    pub sr_cost: Option<f64>,
    pub ratio: Option<f64>,
    pub sparsity: Option<f64>,
    pub case1_cost: Option<usize>,
    pub case2_cost: Option<usize>,
    pub case2: Option<Case2Report>,
    pub gvy: Option<GvyReport>,
    /// Ball center of ball-sweep results.
    pub center: Option<usize>,
    /// Proven upper bound on the boundary, when the algorithm has one.
    pub certificate_bound: Option<f64>,
    pub degraded: bool,
    pub trace: Vec<TraceSummary>,
}

/// A cut found by a pipeline. Bipartitions carry `side`; multicut carries the
/// partition and leaves `side` empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutResult {
    pub side: VertexSet,
    pub partition: Option<Partition>,
    pub boundary_cost: usize,
    pub diagnostics: Diagnostics,
}

impl CutResult {
    /// Records the planted solution's cost and the ratio against it.
    pub fn with_reference(mut self, sr_cost: f64) -> Self {
        let b = self.boundary_cost as f64;
        self.diagnostics.sr_cost = Some(sr_cost);
        self.diagnostics.ratio = if sr_cost > 0.0 {
            Some(b / sr_cost)
        } else if b == 0.0 {
            Some(0.0)
        } else {
            None
        };
        self
    }
}

fn lower(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

fn upper(x: f64) -> usize {
    (x + 1e-9).floor().max(0.0) as usize
}

// ---------------------------------------------------------------------------
// Ball sweeps

#[derive(Clone, Copy, Debug)]
pub(crate) struct BallCandidate {
    pub center: usize,
    pub len: usize,
    /// Boundary within the allowed set, one entry per scored graph.
    pub costs: [usize; 2],
    pub weight: u64,
}

pub(crate) struct BallScan<'a> {
    pub phi: &'a Embedding,
    pub allowed: &'a [bool],
    pub graphs: [&'a Graph; 2],
    pub weights: Option<&'a [u64]>,
    pub radii: (f64, f64),
    pub sizes: (usize, usize),
}

impl BallScan<'_> {
    fn order(&self, center: usize) -> Vec<(f64, usize)> {
        let mut order: Vec<(f64, usize)> = (0..self.allowed.len())
            .filter(|&v| self.allowed[v])
            .map(|v| (if v == center { 0.0 } else { self.phi.dist(center, v) }, v))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order
    }

    /// Every ball `Ball_d(u, r)` restricted to the allowed set, for allowed
    /// centers and radii in the window, whose size lies in the size window.
    pub fn candidates(&self) -> Vec<BallCandidate> {
        let n = self.allowed.len();
        let deg: Vec<Vec<usize>> = self
            .graphs
            .iter()
            .map(|g| (0..n).map(|v| g.neighbors(v).iter().filter(|&&w| self.allowed[w]).count()).collect())
            .collect();
        let (lo, hi) = self.radii;
        (0..n)
            .into_par_iter()
            .filter(|&c| self.allowed[c])
            .flat_map_iter(|c| {
                let order = self.order(c);
                let mut inside = vec![false; n];
                let mut costs = [0i64; 2];
                let mut weight = 0u64;
                let mut out = Vec::new();
                for (i, &(d, v)) in order.iter().enumerate() {
                    if d > hi {
                        break;
                    }
                    inside[v] = true;
                    for (k, g) in self.graphs.iter().enumerate() {
                        let into = g.neighbors(v).iter().filter(|&&w| inside[w]).count() as i64;
                        costs[k] += deg[k][v] as i64 - 2 * into;
                    }
                    weight += self.weights.map_or(0, |w| w[v]);
                    let next = order.get(i + 1).map(|p| p.0);
                    let closes = next.map_or(true, |x| x > d);
                    let in_window = d >= lo || next.map_or(true, |x| x > lo);
                    let len = i + 1;
                    if closes && in_window && len >= self.sizes.0 && len <= self.sizes.1 {
                        out.push(BallCandidate {
                            center: c,
                            len,
                            costs: [costs[0] as usize, costs[1] as usize],
                            weight,
                        });
                    }
                }
                out
            })
            .collect()
    }

    pub fn members(&self, cand: &BallCandidate) -> VertexSet {
        VertexSet::from(self.order(cand.center).into_iter().take(cand.len).map(|p| p.1).collect::<Vec<_>>())
    }
}

/// Smallest candidate under `key`, ties by center then size.
pub(crate) fn argmin_by<K: PartialOrd>(cands: &[BallCandidate], key: impl Fn(&BallCandidate) -> K) -> Option<&BallCandidate> {
    let mut best: Option<(&BallCandidate, K)> = None;
    for c in cands {
        let k = key(c);
        let better = match &best {
            None => true,
            Some((b, bk)) => match k.partial_cmp(bk) {
                Some(std::cmp::Ordering::Less) => true,
                Some(std::cmp::Ordering::Equal) => (c.center, c.len) < (b.center, b.len),
                _ => false,
            },
        };
        if better {
            best = Some((c, k));
        }
    }
    best.map(|b| b.0)
}

// ---------------------------------------------------------------------------
// Fiduccia–Mattheyses refinement

/// Weighted adjacency where each edge of `primary` weighs more than all edges
/// of `secondary` together, so costs compare lexicographically.
fn lex_adjacency(primary: &Graph, secondary: Option<&Graph>) -> Vec<Vec<(usize, i64)>> {
    let n = primary.n();
    let big = secondary.map_or(1, |s| s.m() as i64 + 1);
    let mut w: BTreeMap<Edge, i64> = BTreeMap::new();
    for &e in primary.edges() {
        *w.entry(e).or_default() += big;
    }
    if let Some(s) = secondary {
        for &e in s.edges() {
            *w.entry(e).or_default() += 1;
        }
    }
    let mut adj = vec![Vec::new(); n];
    for (e, c) in w {
        adj[e.u()].push((e.v(), c));
        adj[e.v()].push((e.u(), c));
    }
    adj
}

fn weighted_cut(adj: &[Vec<(usize, i64)>], side: &[bool]) -> i64 {
    adj.iter()
        .enumerate()
        .flat_map(|(u, l)| l.iter().filter(move |&&(v, _)| u < v && side[u] != side[v]).map(|p| p.1))
        .sum()
}

/// Moves single nodes between sides while the node weight of side `true`
/// stays in `[lo, hi]`, keeping the best prefix of each pass.
fn fm_refine(adj: &[Vec<(usize, i64)>], node_w: &[usize], side: &mut [bool], lo: usize, hi: usize) {
    let n = side.len();
    for _ in 0..FM_PASSES {
        let mut gain: Vec<i64> = (0..n)
            .map(|v| adj[v].iter().map(|&(w, c)| if side[w] != side[v] { c } else { -c }).sum())
            .collect();
        let mut locked = vec![false; n];
        let mut size: usize = (0..n).filter(|&v| side[v]).map(|v| node_w[v]).sum();
        let (mut cum, mut best, mut best_k) = (0i64, 0i64, 0usize);
        let mut moves = Vec::new();
        loop {
            let mut pick: Option<usize> = None;
            for v in 0..n {
                if locked[v] {
                    continue;
                }
                let new_size = if side[v] { size - node_w[v] } else { size + node_w[v] };
                if new_size < lo || new_size > hi {
                    continue;
                }
                if pick.map_or(true, |p| gain[v] > gain[p]) {
                    pick = Some(v);
                }
            }
            let Some(v) = pick else { break };
            size = if side[v] { size - node_w[v] } else { size + node_w[v] };
            side[v] = !side[v];
            locked[v] = true;
            cum += gain[v];
            for &(w, c) in &adj[v] {
                gain[w] += if side[w] == side[v] { -2 * c } else { 2 * c };
            }
            moves.push(v);
            if cum > best {
                best = cum;
                best_k = moves.len();
            }
        }
        for &v in &moves[best_k..] {
            side[v] = !side[v];
        }
        if best <= 0 {
            break;
        }
    }
}

// ---------------------------------------------------------------------------
// Balanced cut

fn bipartition_result(n: usize, side: &[bool], g: &Graph) -> Result<CutResult> {
    let set = VertexSet::from_mask(side);
    let boundary_cost = edge_boundary(&set, g)?;
    let sizes = vec![set.len(), n - set.len()];
    Ok(CutResult {
        side: set,
        partition: None,
        boundary_cost,
        diagnostics: Diagnostics { sizes, ..Diagnostics::default() },
    })
}

/// Balanced-cut stand-in: SDP ball sweeps and component groupings, each
/// refined by FM, keeping both sides at least `⌈n/5⌉`. With `tiebreak`, ties
/// in the boundary on `g` are broken by the boundary on `tiebreak`.
pub fn worst_case_balanced_cut(
    g: &Graph,
    phi_hint: Option<&Embedding>,
    tiebreak: Option<&Graph>,
    solver: &SolveOptions,
) -> Result<CutResult> {
    let n = g.n();
    if n < 2 {
        return Err(Error::Infeasible(format!("no balanced cut of {n} vertices")));
    }
    if let Some(t) = tiebreak {
        if t.n() != n {
            return param("tie-break graph has a different vertex count");
        }
    }
    let lo = lower(n as f64 / 5.0).max(1);
    let hi = n - lo;
    let solved;
    let phi = match phi_hint {
        Some(p) => p,
        None => {
            solved = solve_cached(&build_model_on(ModelKind::BalancedCut, n, &g.edge_set())?, solver)?;
            &solved.0
        }
    };
    if phi.n() != n {
        return param("embedding and graph sizes differ");
    }
    let adj = lex_adjacency(g, tiebreak);
    let unit = vec![1; n];
    let mut starts: Vec<Vec<bool>> = Vec::new();

    let allowed = vec![true; n];
    let second = tiebreak.unwrap_or(g);
    let scan = BallScan { phi, allowed: &allowed, graphs: [g, second], weights: None, radii: (0.0, f64::INFINITY), sizes: (lo, hi) };
    let cands = scan.candidates();
    if let Some(best) = argmin_by(&cands, |c| c.costs) {
        starts.push(scan.members(best).mask(n));
    }

    let comps = g.components();
    if comps.len() > 1 {
        if let Some(mask) = group_components(&comps, second, n, lo, hi) {
            starts.push(mask);
        }
    }
    starts.push((0..n).map(|v| v < n / 2).collect());

    let mut best: Option<(i64, Vec<bool>)> = None;
    for mut side in starts {
        fm_refine(&adj, &unit, &mut side, lo, hi);
        let cost = weighted_cut(&adj, &side);
        if best.as_ref().map_or(true, |b| cost < b.0) {
            best = Some((cost, side));
        }
    }
    let (_, side) = best.ok_or_else(|| Error::Infeasible("no balanced grouping".into()))?;
    bipartition_result(n, &side, g)
}

/// Groups whole components into two sides within the size window, refined at
/// component granularity on the edges of `g`.
fn group_components(comps: &[VertexSet], g: &Graph, n: usize, lo: usize, hi: usize) -> Option<Vec<bool>> {
    let k = comps.len();
    let sizes: Vec<usize> = comps.iter().map(VertexSet::len).collect();
    if sizes.iter().any(|&s| s > hi) {
        return None;
    }
    let mut of = vec![0; n];
    for (i, c) in comps.iter().enumerate() {
        for v in c.iter() {
            of[v] = i;
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut side = vec![false; k];
    let biggest = order[0];
    if sizes[biggest] * 5 > 3 * n {
        side[biggest] = true;
    } else {
        let (mut a, mut b) = (0, 0);
        for &c in &order {
            if a <= b {
                side[c] = true;
                a += sizes[c];
            } else {
                b += sizes[c];
            }
        }
    }
    let total: usize = (0..k).filter(|&c| side[c]).map(|c| sizes[c]).sum();
    if total < lo || total > hi {
        return None;
    }
    let mut w: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    for e in g.edges() {
        let (a, b) = (of[e.u()], of[e.v()]);
        if a != b {
            *w.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut adj = vec![Vec::new(); k];
    for ((a, b), c) in w {
        adj[a].push((b, c));
        adj[b].push((a, c));
    }
    fm_refine(&adj, &sizes, &mut side, lo, hi);
    Some((0..n).map(|v| side[of[v]]).collect())
}

fn trace_of(out: &SparsifierOutput) -> Vec<TraceSummary> {
    out.summary()
}

fn count_crossing(edges: &EdgeSet, mask: &[bool]) -> usize {
    edges.iter().filter(|e| mask[e.u()] != mask[e.v()]).count()
}

/// Solver seed for the embedding computed after sparsification.
fn post_offset(seed: u64, out: &SparsifierOutput) -> u64 {
    seed.wrapping_add(out.trace.len() as u64 + 1)
}

pub fn balanced_cut(g: &Graph, opts: &PipelineOptions, seed: u64) -> Result<CutResult> {
    let n = g.n();
    if n < 2 {
        return Err(Error::Infeasible(format!("no balanced cut of {n} vertices")));
    }
    let out = sparsify(g, &ModelKind::BalancedCut, &opts.sparsify, seed)?;
    let g_plus = g.with_edges(&out.e_plus)?;
    let solver = opts.solver(post_offset(seed, &out));
    let solved = solve_cached(&build_model_on(ModelKind::BalancedCut, n, &out.e_plus)?, &solver)?;
    let mut res = worst_case_balanced_cut(&g_plus, Some(&solved.0), Some(g), &solver)?;
    let mask = res.side.mask(n);
    let plus = count_crossing(&out.e_plus, &mask);
    let minus = count_crossing(&out.e_minus, &mask);
    res.boundary_cost = edge_boundary(&res.side, g)?;
    if plus + minus != res.boundary_cost {
        return Err(Error::Certificate(format!(
            "E⁺ cut {plus} + E⁻ cut {minus} differs from boundary {}",
            res.boundary_cost
        )));
    }
    let small = res.side.len().min(n - res.side.len());
    if (small as f64) < n as f64 / opts.c_side - 1e-9 {
        return Err(Error::Infeasible(format!("smaller side {small} below n/{}", opts.c_side)));
    }
    let d = &mut res.diagnostics;
    d.case = Some("hss+stand-in".into());
    d.e_plus_cost = Some(plus);
    d.e_minus_cost = Some(minus);
    d.sdp_objective = out.trace.first().map(|t| t.report.objective);
    d.degraded = out.degraded || !solved.1.converged;
    d.trace = trace_of(&out);
    Ok(res)
}

// ---------------------------------------------------------------------------
// Multicut

/// Region growing over `m`. `dist` must be a metric on `m`; `unit` is the
/// nominal demand distance (2 for unit-vector embeddings, 1 for LP metrics).
/// Returns a partition of `m` separating every demand pair inside it.
pub fn gvy_region_growing(
    dist: impl Fn(usize, usize) -> f64,
    m: &VertexSet,
    demands: &MulticutDemands,
    e_on_m: &EdgeSet,
    unit: f64,
    tol: f64,
) -> Result<(Vec<VertexSet>, GvyReport)> {
    if !(unit > 0.0) || !(0.0..0.5).contains(&tol) {
        return param(format!("unit {unit} and tolerance {tol} out of range"));
    }
    let n = m.max().map_or(0, |v| v + 1).max(e_on_m.max_vertex().map_or(0, |v| v + 1));
    let in_m = m.mask(n);
    if e_on_m.iter().any(|e| !in_m[e.u()] || !in_m[e.v()]) {
        return Err(Error::Domain("edge leaves the region-growing set".into()));
    }
    let len = |a: usize, b: usize| dist(a, b) / unit;
    let inside: Vec<Edge> =
        demands.pairs.iter().copied().filter(|e| e.v() < n && in_m[e.u()] && in_m[e.v()]).collect();
    for e in &inside {
        let l = len(e.u(), e.v());
        if l < 1.0 - tol {
            return Err(Error::Infeasible(format!(
                "demand ({}, {}) at normalized distance {l:.6} < 1 − {tol}",
                e.u(),
                e.v()
            )));
        }
    }
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut total = 0.0;
    for e in e_on_m.iter() {
        let l = len(e.u(), e.v());
        total += l;
        adj[e.u()].push((e.v(), l));
        adj[e.v()].push((e.u(), l));
    }
    let k = inside.len();
    let v0 = if k > 0 { total / k as f64 } else { 0.0 };
    let cap = (1.0 - tol) / 2.0 - 1e-9;
    let mut alive = in_m.clone();
    let mut pieces = Vec::new();
    for e in &inside {
        let s = e.u();
        if !(alive[s] && alive[e.v()]) {
            continue;
        }
        let mut order: Vec<(f64, usize)> =
            m.iter().filter(|&v| alive[v]).map(|v| (if v == s { 0.0 } else { len(s, v) }, v)).filter(|p| p.0 < cap).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut ball = vec![false; n];
        let (mut cut, mut vol_in, mut cross_r) = (0i64, 0.0, 0.0);
        let mut best: Option<(f64, usize)> = None;
        for (i, &(r, v)) in order.iter().enumerate() {
            ball[v] = true;
            for &(w, l) in &adj[v] {
                if !alive[w] {
                    continue;
                }
                if ball[w] {
                    cut -= 1;
                    vol_in += l;
                    cross_r -= len(s, w);
                } else {
                    cut += 1;
                    cross_r += r;
                }
            }
            let next = order.get(i + 1).map_or(cap, |p| p.0);
            if next <= r {
                continue;
            }
            let vol = v0 + vol_in + cut as f64 * next - cross_r;
            let ratio = if cut == 0 {
                0.0
            } else if vol > 0.0 {
                cut as f64 / vol
            } else {
                f64::INFINITY
            };
            if best.map_or(true, |b| ratio < b.0) {
                best = Some((ratio, i + 1));
            }
        }
        let take = best.map_or(1, |b| b.1);
        let piece: Vec<usize> = order[..take].iter().map(|p| p.1).collect();
        for &v in &piece {
            alive[v] = false;
        }
        pieces.push(VertexSet::from(piece));
    }
    let balls = pieces.len();
    let rest = VertexSet::from_mask(&alive);
    if !rest.is_empty() {
        pieces.push(rest);
    }
    let mut label = vec![usize::MAX; n];
    for (i, p) in pieces.iter().enumerate() {
        for v in p.iter() {
            label[v] = i;
        }
    }
    if let Some(e) = inside.iter().find(|e| label[e.u()] == label[e.v()]) {
        return Err(Error::Certificate(format!("region growing left demand ({}, {}) together", e.u(), e.v())));
    }
    let cost = e_on_m.iter().filter(|e| label[e.u()] != label[e.v()]).count();
    let fractional = unit / 2.0 * total;
    Ok((pieces, GvyReport { demands_inside: k, balls, cost, fractional, merges: 0 }))
}

/// Greedily merges parts joined by the most edges while no demand pair ends
/// up inside one part. Only lowers the cut.
fn merge_parts(labels: &mut [usize], parts: usize, g: &Graph, demands: &MulticutDemands) -> usize {
    let mut parent: Vec<usize> = (0..parts).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let mut merges = 0;
    loop {
        let mut between: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for e in g.edges() {
            let (a, b) = (find(&mut parent, labels[e.u()]), find(&mut parent, labels[e.v()]));
            if a != b {
                *between.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut conflict = std::collections::BTreeSet::new();
        for d in &demands.pairs {
            let (a, b) = (find(&mut parent, labels[d.u()]), find(&mut parent, labels[d.v()]));
            conflict.insert((a.min(b), a.max(b)));
        }
        let best = between
            .iter()
            .filter(|(k, _)| !conflict.contains(k))
            .max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(x.0)));
        let Some((&(a, b), _)) = best else { break };
        parent[b] = a;
        merges += 1;
    }
    for l in labels.iter_mut() {
        *l = find(&mut parent, *l);
    }
    merges
}

pub fn multicut(g: &Graph, demands: &MulticutDemands, opts: &PipelineOptions, seed: u64) -> Result<CutResult> {
    if demands.is_empty() {
        return param("multicut needs at least one demand");
    }
    let n = g.n();
    demands.check_range(n)?;
    let out = sparsify(g, &ModelKind::Multicut { demands: demands.clone() }, &opts.sparsify, seed)?;
    for (i, piece) in out.z.iter().enumerate() {
        if let Some(d) = demands.pairs.iter().find(|d| piece.set.contains(d.u()) && piece.set.contains(d.v())) {
            return Err(Error::Certificate(format!("piece {i} holds demand ({}, {})", d.u(), d.v())));
        }
    }
    let phi = out.final_embedding().ok_or_else(|| Error::Certificate("empty sparsifier trace".into()))?;
    let e_on_m = out.e_plus.inside(&out.m.mask(n));
    let (gvy_pieces, mut report) = gvy_region_growing(|a, b| phi.dist(a, b), &out.m, demands, &e_on_m, 2.0, GVY_TOL)?;
    let mut labels = vec![usize::MAX; n];
    let mut parts = 0;
    for p in gvy_pieces.iter().chain(out.z.iter().map(|z| &z.set)) {
        for v in p.iter() {
            labels[v] = parts;
        }
        parts += 1;
    }
    if labels.contains(&usize::MAX) {
        return Err(Error::Certificate("M and the pieces do not cover V".into()));
    }
    let plus_before = out.e_plus.iter().filter(|e| labels[e.u()] != labels[e.v()]).count();
    if plus_before != report.cost {
        return Err(Error::Certificate(format!("E⁺ cut {plus_before} differs from region-growing cost {}", report.cost)));
    }
    report.merges = merge_parts(&mut labels, parts, g, demands);
    let partition = Partition::from_assignment(&labels);
    if let Some(d) = demands.pairs.iter().find(|d| !partition.separates(d.u(), d.v())) {
        return Err(Error::Certificate(format!("demand ({}, {}) not separated", d.u(), d.v())));
    }
    let plus = out.e_plus.iter().filter(|e| partition.separates(e.u(), e.v())).count();
    let minus = out.e_minus.iter().filter(|e| partition.separates(e.u(), e.v())).count();
    let boundary_cost = crate::graph::cut_cost(&partition, &g.edge_set())?;
    if plus + minus != boundary_cost {
        return Err(Error::Certificate(format!("E⁺ cut {plus} + E⁻ cut {minus} differs from cost {boundary_cost}")));
    }
    let diagnostics = Diagnostics {
        sizes: partition.parts().iter().map(VertexSet::len).collect(),
        case: Some("hss+region-growing".into()),
        e_plus_cost: Some(plus),
        e_minus_cost: Some(minus),
        sdp_objective: out.trace.first().map(|t| t.report.objective),
        gvy: Some(report),
        degraded: out.degraded,
        trace: trace_of(&out),
        ..Diagnostics::default()
    };
    Ok(CutResult { side: VertexSet::new(), partition: Some(partition), boundary_cost, diagnostics })
}

// ---------------------------------------------------------------------------
// Small set expansion

/// Case I stand-in. Returns `None` when no ball passes the size window and
/// the weight cap.
#[allow(clippy::too_many_arguments)]
pub fn sse_case1(
    g: &Graph,
    e_plus: &EdgeSet,
    weights: &[u64],
    rho: f64,
    w_cap: f64,
    phi: Option<&Embedding>,
    opts: &PipelineOptions,
    seed: u64,
) -> Result<Option<CutResult>> {
    let n = g.n();
    if weights.len() != n {
        return param(format!("{} weights for {n} vertices", weights.len()));
    }
    if !(w_cap >= 0.0) {
        return param(format!("weight cap {w_cap} is negative"));
    }
    let g_plus = g.with_edges(e_plus)?;
    let solved;
    let phi = match phi {
        Some(p) => p,
        None => {
            solved = solve_cached(&build_model_on(ModelKind::SseCrude { rho }, n, e_plus)?, &opts.solver(seed))?;
            &solved.0
        }
    };
    let allowed = vec![true; n];
    let scan = case1_scan(phi, &allowed, &g_plus, g, weights, rho, n);
    let cands = scan.candidates();
    Ok(case1_pick(&cands, opts.c_w * w_cap).map(|c| case1_result(&scan, c, g, n)).transpose()?)
}

fn case1_scan<'a>(
    phi: &'a Embedding,
    allowed: &'a [bool],
    g_plus: &'a Graph,
    g: &'a Graph,
    weights: &'a [u64],
    rho: f64,
    n: usize,
) -> BallScan<'a> {
    let rn = rho * n as f64;
    BallScan {
        phi,
        allowed,
        graphs: [g_plus, g],
        weights: Some(weights),
        radii: BALL_WINDOW,
        sizes: (lower(rn / 4.0).max(1), upper(1.5 * rn)),
    }
}

fn case1_pick(cands: &[BallCandidate], limit: f64) -> Option<&BallCandidate> {
    let ok: Vec<BallCandidate> = cands.iter().copied().filter(|c| c.weight as f64 <= limit + 1e-9).collect();
    let best = argmin_by(&ok, |c| c.costs)?;
    cands.iter().find(|c| c.center == best.center && c.len == best.len)
}

fn case1_result(scan: &BallScan, c: &BallCandidate, g: &Graph, n: usize) -> Result<CutResult> {
    let set = scan.members(c);
    let boundary_cost = edge_boundary(&set, g)?;
    let diagnostics = Diagnostics {
        sizes: vec![set.len(), n - set.len()],
        case: Some("case-1".into()),
        e_plus_cost: Some(c.costs[0]),
        ..Diagnostics::default()
    };
    Ok(CutResult { side: set, partition: None, boundary_cost, diagnostics })
}

/// An optimal solution of the extraction LP over `V_rest`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub x: BTreeMap<usize, f64>,
    pub objective: f64,
    pub weights: BTreeMap<usize, u64>,
    /// Lagrangian lower bound; equals `objective` at optimality.
    pub dual_bound: f64,
    pub rho: f64,
    pub n: usize,
}

impl LpSolution {
    pub fn mass(&self) -> f64 {
        self.x.values().sum()
    }
}

struct Dinic {
    head: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<i64>,
    next: Vec<usize>,
    level: Vec<i32>,
    it: Vec<usize>,
}

impl Dinic {
    const NIL: usize = usize::MAX;

    fn new(n: usize) -> Self {
        Dinic { head: vec![Self::NIL; n], to: vec![], cap: vec![], next: vec![], level: vec![0; n], it: vec![0; n] }
    }

    fn add(&mut self, a: usize, b: usize, c_ab: i64, c_ba: i64) {
        for (x, y, c) in [(a, b, c_ab), (b, a, c_ba)] {
            self.to.push(y);
            self.cap.push(c);
            self.next.push(self.head[x]);
            self.head[x] = self.to.len() - 1;
        }
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            let mut e = self.head[u];
            while e != Self::NIL {
                let v = self.to[e];
                if self.cap[e] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    q.push_back(v);
                }
                e = self.next[e];
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, f: i64) -> i64 {
        if u == t {
            return f;
        }
        while self.it[u] != Self::NIL {
            let e = self.it[u];
            let v = self.to[e];
            if self.cap[e] > 0 && self.level[v] == self.level[u] + 1 {
                let d = self.dfs(v, t, f.min(self.cap[e]));
                if d > 0 {
                    self.cap[e] -= d;
                    self.cap[e ^ 1] += d;
                    return d;
                }
            }
            self.it[u] = self.next[e];
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut flow = 0;
        while self.bfs(s, t) {
            self.it.clone_from(&self.head);
            loop {
                let f = self.dfs(s, t, i64::MAX);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
        flow
    }

    /// Nodes reachable from `s` in the residual graph.
    fn source_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.head.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            let mut e = self.head[u];
            while e != Self::NIL {
                let v = self.to[e];
                if self.cap[e] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
                e = self.next[e];
            }
        }
        seen
    }
}

/// `f(S) = w(S) + |E(S, rest∖S)|` on the local graph.
struct LocalCut {
    w: Vec<i64>,
    edges: Vec<(usize, usize)>,
}

impl LocalCut {
    fn f(&self, s: &[bool]) -> i64 {
        let w: i64 = (0..s.len()).filter(|&v| s[v]).map(|v| self.w[v]).sum();
        w + self.edges.iter().filter(|&&(a, b)| s[a] != s[b]).count() as i64
    }

    /// Minimal minimizer of `q·f(S) − p·|S|`.
    fn minimize(&self, p: i64, q: i64) -> Vec<bool> {
        let r = self.w.len();
        let (s, t) = (r, r + 1);
        let mut net = Dinic::new(r + 2);
        for v in 0..r {
            let a = q * self.w[v] - p;
            if a > 0 {
                net.add(v, t, a, 0);
            } else if a < 0 {
                net.add(s, v, -a, 0);
            }
        }
        for &(a, b) in &self.edges {
            net.add(a, b, q, q);
        }
        net.max_flow(s, t);
        let mut side = net.source_side(s);
        side.truncate(r);
        side
    }
}

/// Solves the extraction LP: minimize `Σ w_u x_u + Σ_{E} |x_u − x_v|` subject to
/// `Σ x ≥ ρn/2` and `0 ≤ x ≤ 1` over `V_rest`. The optimum mixes two nested
/// minimizers of `f(S) − μ|S|` at the breakpoint `μ` where the size crosses
/// `ρn/2`; the breakpoint is found by Newton steps on parametric min cuts.
pub fn sse_case2_lp(v_rest: &VertexSet, e_plus_rest: &EdgeSet, weights: &[u64], rho: f64, n: usize) -> Result<LpSolution> {
    if !(rho > 0.0 && rho <= 0.5) {
        return param(format!("ρ = {rho} outside (0, 1/2]"));
    }
    v_rest.check_range(n)?;
    if weights.len() != n {
        return param(format!("{} weights for {n} vertices", weights.len()));
    }
    let mut local = vec![usize::MAX; n];
    for (i, v) in v_rest.iter().enumerate() {
        local[v] = i;
    }
    let mut edges = Vec::new();
    for e in e_plus_rest.iter() {
        if e.v() >= n || local[e.u()] == usize::MAX || local[e.v()] == usize::MAX {
            return Err(Error::Domain(format!("edge ({}, {}) leaves V_rest", e.u(), e.v())));
        }
        edges.push((local[e.u()], local[e.v()]));
    }
    let r = v_rest.len();
    let lc = LocalCut { w: v_rest.iter().map(|v| weights[v] as i64).collect(), edges };
    let k = rho * n as f64 / 2.0;
    if (r as f64) < k - LP_TOL {
        return Err(Error::Infeasible(format!("|V_rest| = {r} < ρn/2 = {k}")));
    }
    let mut a = vec![false; r];
    let mut b = vec![true; r];
    let size = |s: &[bool]| s.iter().filter(|&&x| x).count() as i64;
    let (mut lambda, mut dual) = (0.0, 0.0);
    if k > LP_TOL {
        let mut steps = 0;
        loop {
            steps += 1;
            if steps > 4 * r + 16 {
                return Err(Error::Certificate("parametric search did not terminate".into()));
            }
            let (fa, fb, sa, sb) = (lc.f(&a), lc.f(&b), size(&a), size(&b));
            let (p, q) = (fb - fa, sb - sa);
            let s = lc.minimize(p, q);
            let (fs, ss) = (lc.f(&s), size(&s));
            let line = q * fa - p * sa;
            let val = q * fs - p * ss;
            let mu = p as f64 / q as f64;
            if val >= line {
                lambda = (sb as f64 - k) / q as f64;
                dual = mu * k + line as f64 / q as f64;
                break;
            }
            if (ss as f64 - k).abs() <= LP_TOL {
                a = s.clone();
                b = s;
                lambda = 1.0;
                dual = mu * k + val as f64 / q as f64;
                break;
            }
            if ss as f64 >= k {
                b = s;
            } else {
                a = s;
            }
        }
    }
    let xs: Vec<f64> = (0..r)
        .map(|v| {
            let (ia, ib) = (f64::from(u8::from(a[v])), f64::from(u8::from(b[v])));
            if k <= LP_TOL {
                0.0
            } else {
                lambda * ia + (1.0 - lambda) * ib
            }
        })
        .collect();
    let objective: f64 = (0..r).map(|v| lc.w[v] as f64 * xs[v]).sum::<f64>()
        + lc.edges.iter().map(|&(p, q)| (xs[p] - xs[q]).abs()).sum::<f64>();
    let mixture = if k <= LP_TOL { 0.0 } else { lambda * lc.f(&a) as f64 + (1.0 - lambda) * lc.f(&b) as f64 };
    if (objective - mixture).abs() > 1e-6 * (1.0 + mixture) || (objective - dual).abs() > 1e-6 * (1.0 + objective) {
        return Err(Error::Certificate(format!("LP value {objective} vs mixture {mixture} vs dual {dual}")));
    }
    Ok(LpSolution {
        x: v_rest.iter().zip(xs).collect(),
        objective,
        weights: v_rest.iter().map(|v| (v, weights[v])).collect(),
        dual_bound: dual,
        rho,
        n,
    })
}

/// Integral set extracted from an LP solution, with the quantities its
/// guarantees are stated in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub set: VertexSet,
    pub f_value: f64,
    pub report: Case2Report,
}

/// `f(S) = Σ_S w + |E⁺(S, V∖S)|`.
fn f_value(set: &VertexSet, mask: &[bool], edges: &EdgeSet, weights: &[u64]) -> f64 {
    let w: u64 = set.iter().map(|v| weights[v]).sum();
    w as f64 + count_crossing(edges, mask) as f64
}

pub fn threshold_extract(
    lp: &LpSolution,
    pieces: &[VertexSet],
    e_plus_rest: &EdgeSet,
    weights: &[u64],
    rho: f64,
) -> Result<Extraction> {
    let n = lp.n;
    if weights.len() != n {
        return param(format!("{} weights for {n} vertices", weights.len()));
    }
    let mut piece_of = vec![usize::MAX; n];
    for (i, p) in pieces.iter().enumerate() {
        p.check_range(n)?;
        for v in p.iter() {
            if piece_of[v] != usize::MAX || !lp.x.contains_key(&v) {
                return Err(Error::Domain(format!("vertex {v} is repeated or outside the LP support")));
            }
            piece_of[v] = i;
        }
    }
    if lp.x.keys().any(|&v| piece_of[v] == usize::MAX) {
        return Err(Error::Domain("pieces do not cover V_rest".into()));
    }
    if let Some(e) = e_plus_rest.iter().find(|e| e.v() >= n || piece_of[e.u()] != piece_of[e.v()]) {
        return Err(Error::Domain(format!("edge ({}, {}) crosses pieces", e.u(), e.v())));
    }
    let rn = rho * n as f64;
    let mut levels: Vec<f64> = lp.x.values().copied().filter(|&x| x > 0.0).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    let mut best: Option<(f64, f64, VertexSet, f64)> = None;
    for &r in &levels {
        let s = VertexSet::from(lp.x.iter().filter(|p| *p.1 >= r).map(|p| *p.0).collect::<Vec<_>>());
        if (s.len() as f64) < rn / 4.0 - 1e-9 {
            continue;
        }
        let f = f_value(&s, &s.mask(n), e_plus_rest, weights);
        let ratio = f / s.len() as f64;
        if best.as_ref().map_or(true, |b| ratio < b.0) {
            best = Some((ratio, r, s, f));
        }
    }
    let (ratio, r_star, s_star, f_star) =
        best.ok_or_else(|| Error::Infeasible(format!("no threshold set reaches ρn/4 = {}", rn / 4.0)))?;
    let mut parts: Vec<(f64, usize, VertexSet)> = pieces
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p.intersection(&s_star)))
        .filter(|(_, s)| !s.is_empty())
        .map(|(i, s)| (f_value(&s, &s.mask(n), e_plus_rest, weights) / s.len() as f64, i, s))
        .collect();
    parts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut chosen = VertexSet::new();
    for (_, _, s) in &parts {
        chosen = chosen.union(s);
        if chosen.len() as f64 >= rn / 4.0 - 1e-9 {
            break;
        }
    }
    if (chosen.len() as f64) < rn / 4.0 - 1e-9 || chosen.len() as f64 > 2.0 * rn + 1e-9 {
        return Err(Error::Certificate(format!("extracted size {} outside [ρn/4, 2ρn]", chosen.len())));
    }
    let f = f_value(&chosen, &chosen.mask(n), e_plus_rest, weights);
    let tol = 1e-6 * (1.0 + lp.objective);
    let report = Case2Report {
        lp_objective: lp.objective,
        dual_bound: lp.dual_bound,
        r_star,
        s_r_star: s_star.len(),
        f_s_r_star: f_star,
        f_extracted: f,
        extracted: chosen.len(),
        bound_16_holds: f <= 16.0 * lp.objective + 16.0 * tol,
        ratio_bound_holds: ratio <= 4.0 * lp.objective / rn + tol,
    };
    if !(report.bound_16_holds && report.ratio_bound_holds) {
        return Err(Error::Certificate(format!("extraction bounds fail: {report:?}")));
    }
    Ok(Extraction { set: chosen, f_value: f, report })
}

/// Everything an SSE run produces, for callers that reuse its pieces.
struct SseRun {
    result: CutResult,
    phi: Embedding,
    g_plus: Graph,
}

fn in_size_window(size: usize, rho: f64, n: usize) -> bool {
    let rn = rho * n as f64;
    size as f64 >= rn / 4.0 - 1e-9 && size as f64 <= (2.0 * rn).max(n as f64 / 2.0) + 1e-9
}

fn sse_run(g: &Graph, rho: f64, opts: &PipelineOptions, seed: u64) -> Result<SseRun> {
    let n = g.n();
    if !(rho > 0.0 && rho <= 0.5) {
        return param(format!("ρ = {rho} outside (0, 1/2]"));
    }
    let kind = ModelKind::SseCrude { rho };
    let out = sparsify(g, &kind, &opts.sparsify, seed)?;
    let mut weights = vec![0u64; n];
    for e in out.e_minus.iter() {
        weights[e.u()] += 1;
        weights[e.v()] += 1;
    }
    let g_plus = g.with_edges(&out.e_plus)?;
    // Case I reuses the first-round embedding of G.
    let first = out.trace.first().ok_or_else(|| Error::Certificate("empty sparsifier trace".into()))?;
    let phi = first.phi.clone();

    let allowed = vec![true; n];
    let scan = case1_scan(&phi, &allowed, &g_plus, g, &weights, rho, n);
    let cands = scan.candidates();
    let total: u64 = weights.iter().sum();
    let mut caps = vec![0.0];
    let mut c = 1.0;
    while c < total as f64 {
        caps.push(c);
        c *= 2.0;
    }
    caps.push(total as f64);
    let mut case1: Option<CutResult> = None;
    for cap in caps {
        let Some(cand) = case1_pick(&cands, opts.c_w * cap) else { continue };
        let mut res = case1_result(&scan, cand, g, n)?;
        if rho > 1.0 / 3.0 && res.side.len() * 2 > n {
            res.side = res.side.complement(n);
            res.boundary_cost = edge_boundary(&res.side, g)?;
            res.diagnostics.sizes = vec![res.side.len(), n - res.side.len()];
            res.diagnostics.case = Some("case-1-complement".into());
        }
        if case1.as_ref().map_or(true, |b| res.boundary_cost < b.boundary_cost) {
            case1 = Some(res);
        }
    }

    let rest = out.m.complement(n);
    let e_rest = out.e_plus.inside(&rest.mask(n));
    let mut case2_err = None;
    let case2 = match sse_case2_lp(&rest, &e_rest, &weights, rho, n) {
        Ok(lp) => {
            let pieces: Vec<VertexSet> = out.z.iter().map(|z| z.set.clone()).collect();
            let ex = threshold_extract(&lp, &pieces, &e_rest, &weights, rho)?;
            let boundary_cost = edge_boundary(&ex.set, g)?;
            Some((ex, boundary_cost))
        }
        Err(Error::Infeasible(msg)) => {
            case2_err = Some(msg);
            None
        }
        Err(e) => return Err(e),
    };

    let case1_cost = case1.as_ref().map(|r| r.boundary_cost);
    let case2_cost = case2.as_ref().map(|c| c.1);
    let take_case2 = match (case1_cost, case2_cost) {
        (Some(a), Some(b)) => b < a,
        (None, Some(_)) => true,
        (Some(_), None) => false,
        (None, None) => {
            return Err(Error::Infeasible(format!(
                "both cases failed (case II: {}); trace: {}",
                case2_err.unwrap_or_default(),
                serde_json::to_string(&out.summary())?
            )))
        }
    };
    let case2_report = case2.as_ref().map(|c| c.0.report.clone());
    let mut result = if take_case2 {
        let (ex, boundary_cost) = case2.expect("checked");
        CutResult {
            side: ex.set,
            partition: None,
            boundary_cost,
            diagnostics: Diagnostics { case: Some("case-2".into()), ..Diagnostics::default() },
        }
    } else {
        case1.expect("checked")
    };
    let mask = result.side.mask(n);
    let plus = count_crossing(&out.e_plus, &mask);
    let minus = count_crossing(&out.e_minus, &mask);
    result.boundary_cost = edge_boundary(&result.side, g)?;
    if plus + minus != result.boundary_cost {
        return Err(Error::Certificate(format!(
            "E⁺ cut {plus} + E⁻ cut {minus} differs from boundary {}",
            result.boundary_cost
        )));
    }
    if !in_size_window(result.side.len(), rho, n) {
        return Err(Error::Certificate(format!("set size {} outside the SSE window", result.side.len())));
    }
    let d = &mut result.diagnostics;
    d.sizes = vec![result.side.len(), n - result.side.len()];
    d.rho = Some(rho);
    d.e_plus_cost = Some(plus);
    d.e_minus_cost = Some(minus);
    d.case1_cost = case1_cost;
    d.case2_cost = case2_cost;
    d.case2 = case2_report;
    d.sdp_objective = out.trace.first().map(|t| t.report.objective);
    d.degraded = out.degraded;
    d.trace = trace_of(&out);
    Ok(SseRun { result, phi, g_plus })
}

pub fn sse(g: &Graph, rho: f64, opts: &PipelineOptions, seed: u64) -> Result<CutResult> {
    sse_run(g, rho, opts, seed).map(|r| r.result)
}

// ---------------------------------------------------------------------------
// Sparsest cut

/// Smallest guess in the default grid.
pub const DEFAULT_MIN_RHO: f64 = 0.125;

/// `{1/2, 1/4, 1/8}`, truncated once `ρ·u < 4`.
pub fn default_rho_grid(u: usize) -> Vec<f64> {
    let mut grid = vec![0.5];
    let mut r = 0.25;
    while r >= DEFAULT_MIN_RHO && r * u as f64 >= 4.0 {
        grid.push(r);
        r /= 2.0;
    }
    grid
}

fn sparsity(h: &Graph, mask: &[bool]) -> f64 {
    let size = mask.iter().filter(|&&b| b).count();
    let rest: Vec<bool> = mask.iter().map(|&b| !b).collect();
    edges_between(h, mask, &rest) as f64 / size as f64
}

/// Disjoint sparse balls peeled off `U` on `E⁺`; returns the running unions.
fn repeated_balls(run: &SseRun, h: &Graph, target: usize) -> Vec<Vec<bool>> {
    let n = h.n();
    let mut alive = vec![true; n];
    let mut union = vec![false; n];
    let mut out = Vec::new();
    let mut taken = 0;
    while taken < target {
        let left = alive.iter().filter(|&&b| b).count();
        if left < 2 {
            break;
        }
        let scan = BallScan {
            phi: &run.phi,
            allowed: &alive,
            graphs: [&run.g_plus, h],
            weights: None,
            radii: (0.0, f64::INFINITY),
            sizes: (1, left / 2),
        };
        let cands = scan.candidates();
        let Some(best) = argmin_by(&cands, |c| (c.costs[0] as f64 / c.len as f64, c.costs[1] as f64 / c.len as f64))
        else {
            break;
        };
        for v in scan.members(best).iter() {
            alive[v] = false;
            union[v] = true;
        }
        taken += best.len;
        if taken * 2 > n {
            break;
        }
        out.push(union.clone());
    }
    out
}

/// Approximate sparsest cut of `G[U]`. `boundary_cost` is `|E(A, U∖A)|` and
/// `diagnostics.sparsity` is that over `|A|`, with `|A| ≤ |U|/2`.
pub fn sparsest_cut(
    g: &Graph,
    u: &VertexSet,
    rho_grid: Option<&[f64]>,
    opts: &PipelineOptions,
    seed: u64,
) -> Result<CutResult> {
    u.check_range(g.n())?;
    if u.len() < 4 {
        return param(format!("|U| = {} < 4", u.len()));
    }
    let (h, map) = g.induced(u);
    let nu = h.n();
    let grid = rho_grid.map_or_else(|| default_rho_grid(nu), <[f64]>::to_vec);
    if grid.iter().any(|&r| !(r > 0.0 && r <= 0.5)) {
        return param("grid values must lie in (0, 1/2]");
    }
    let min_rho = grid.iter().copied().fold(0.5, f64::min);
    let reps = opts.amplification.max(1);
    let mut best: Option<(f64, Vec<bool>, usize, String, bool)> = None;
    let mut consider = |mask: Vec<bool>, rep: usize, label: String, degraded: bool| {
        let size = mask.iter().filter(|&&b| b).count();
        if size == 0 || size == nu {
            return;
        }
        let mask = if size * 2 > nu { mask.iter().map(|&b| !b).collect() } else { mask };
        let s = sparsity(&h, &mask);
        if best.as_ref().map_or(true, |b| s < b.0) {
            best = Some((s, mask, rep, label, degraded));
        }
    };
    let mut errors = Vec::new();
    for rep in 0..reps {
        // Fresh rounding randomness; the solver seed sum stays fixed so that
        // repeated embeddings come from the cache.
        let s = if rep == 0 { seed } else { rng::child(seed, rng::AMPLIFICATION, rep as u64).gen::<u64>() };
        let mut o = *opts;
        o.sparsify.solver.seed = opts.sparsify.solver.seed.wrapping_add(seed).wrapping_sub(s);
        for &rho in &grid {
            if rho * (nu as f64) < 1.0 {
                continue;
            }
            match sse_run(&h, rho, &o, s) {
                Ok(run) => {
                    let degraded = run.result.diagnostics.degraded;
                    consider(run.result.side.mask(nu), rep, format!("sse rho={rho}"), degraded);
                    if rho == 0.5 {
                        let target = lower(min_rho * nu as f64 / 4.0).max(1);
                        for mask in repeated_balls(&run, &h, target.max(lower(nu as f64 / 8.0))) {
                            consider(mask, rep, "repeated".into(), degraded);
                        }
                    }
                }
                Err(Error::Infeasible(msg)) => errors.push(msg),
                Err(e) => return Err(e),
            }
        }
    }
    let (s, mask, _, label, degraded) =
        best.ok_or_else(|| Error::Infeasible(format!("no sparsest-cut candidate: {}", errors.join("; "))))?;
    let side_local = VertexSet::from_mask(&mask);
    let side = VertexSet::from(side_local.iter().map(|v| map[v]).collect::<Vec<_>>());
    let rest: Vec<bool> = mask.iter().map(|&b| !b).collect();
    let boundary_cost = edges_between(&h, &mask, &rest);
    let check = sparsity(&h, &mask);
    if check != s {
        return Err(Error::Certificate(format!("sparsity {check} differs from {s}")));
    }
    let diagnostics = Diagnostics {
        sizes: vec![side.len(), nu - side.len()],
        case: Some(label),
        sparsity: Some(s),
        degraded,
        ..Diagnostics::default()
    };
    Ok(CutResult { side, partition: None, boundary_cost, diagnostics })
}
