//! Vector embeddings, the three ℓ²₂ SDP models and their cost functionals.
//!
//! An embedding maps each vertex to a unit vector; `d(u, v) = ‖φ(u) − φ(v)‖²`.
//! Models:
//!
//! * `BalancedCut`: minimize `(1/4)Σ_E d` subject to
//!   `(1/4)Σ_{u,v} d(u,v) ≥ n²/2` over ordered pairs.
//! * `SseCrude(ρ)`: minimize `(1/2)Σ_E d` subject to `Σ_v ⟨φ(u), φ(v)⟩ ≤ ρn`
//!   for each `u` and `⟨φ(u), φ(v)⟩ ≥ 0`.
//! * `Multicut`: minimize `(1/2)Σ_E d` subject to `⟨φ(s_i), φ(t_i)⟩ = 0`.
//!
//! All three add unit norms and the ℓ²₂ triangle inequalities.

mod solver;

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, param, Result};
use crate::graph::{Edge, EdgeSet, Graph, VertexSet};
use crate::instances::MulticutDemands;

pub use solver::{family_maxima, solve, solve_cached, Budget, FamilyMaxima, SolveOptions, Solved, SolverReport, CROSS_CHECK_MAX_N};

/// Row-major `n × k` matrix of unit vectors with a lazily built distance table.
#[derive(Serialize, Deserialize)]
#[serde(try_from = "EmbeddingFile", into = "EmbeddingFile")]
pub struct Embedding {
    n: usize,
    k: usize,
    data: Vec<f64>,
    #[serde(skip)]
    dist: OnceLock<Arc<Vec<f64>>>,
}

#[derive(Serialize, Deserialize)]
struct EmbeddingFile {
    n: usize,
    k: usize,
    vectors: Vec<Vec<f64>>,
}

impl TryFrom<EmbeddingFile> for Embedding {
    type Error = String;

    fn try_from(f: EmbeddingFile) -> std::result::Result<Self, String> {
        if f.vectors.len() != f.n || f.vectors.iter().any(|r| r.len() != f.k) {
            return Err(format!("expected {} rows of length {}", f.n, f.k));
        }
        Ok(Embedding::from_rows(f.k, f.vectors.into_iter().flatten().collect()))
    }
}

impl From<Embedding> for EmbeddingFile {
    fn from(e: Embedding) -> Self {
        EmbeddingFile { n: e.n, k: e.k, vectors: (0..e.n).map(|u| e.row(u).to_vec()).collect() }
    }
}

impl Clone for Embedding {
    fn clone(&self) -> Self {
        let dist = OnceLock::new();
        if let Some(d) = self.dist.get() {
            let _ = dist.set(Arc::clone(d));
        }
        Embedding { n: self.n, k: self.k, data: self.data.clone(), dist }
    }
}

impl std::fmt::Debug for Embedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Embedding").field("n", &self.n).field("k", &self.k).finish_non_exhaustive()
    }
}

impl PartialEq for Embedding {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.k == other.k && self.data == other.data
    }
}

impl Embedding {
    /// `data` holds `n` rows of length `k`.
    pub fn from_rows(k: usize, data: Vec<f64>) -> Self {
        assert!(k > 0 && data.len() % k == 0, "row length mismatch");
        Embedding { n: data.len() / k, k, data, dist: OnceLock::new() }
    }

    pub fn from_vectors(vectors: &[Vec<f64>]) -> Result<Self> {
        let k = vectors.first().map_or(1, Vec::len);
        if k == 0 || vectors.iter().any(|v| v.len() != k) {
            return param("vectors must share a positive dimension");
        }
        Ok(Self::from_rows(k, vectors.iter().flatten().copied().collect()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.data[u * self.k..(u + 1) * self.k]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn inner(&self, u: usize, v: usize) -> f64 {
        dot(self.row(u), self.row(v))
    }

    /// `‖φ(u) − φ(v)‖²`, from the cached table when it exists.
    pub fn dist(&self, u: usize, v: usize) -> f64 {
        match self.dist.get() {
            Some(d) => d[u * self.n + v],
            None => self.row(u).iter().zip(self.row(v)).map(|(a, b)| (a - b) * (a - b)).sum(),
        }
    }

    /// Full `n × n` distance table, built once.
    pub fn distances(&self) -> &[f64] {
        self.dist.get_or_init(|| Arc::new(distance_table(self))).as_slice()
    }

    pub fn max_norm_error(&self) -> f64 {
        (0..self.n).map(|u| (dot(self.row(u), self.row(u)) - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Largest pairwise distance inside `set`.
    pub fn diameter(&self, set: &VertexSet) -> f64 {
        let ids = set.as_slice();
        let d = self.distances();
        ids.par_iter()
            .enumerate()
            .map(|(i, &u)| ids[i + 1..].iter().map(|&v| d[u * self.n + v]).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn distance_table(e: &Embedding) -> Vec<f64> {
    let n = e.n;
    let norms: Vec<f64> = (0..n).map(|u| dot(e.row(u), e.row(u))).collect();
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n.max(1)).enumerate().for_each(|(u, row)| {
        let ru = e.row(u);
        for (v, slot) in row.iter_mut().enumerate() {
            *slot = if u == v { 0.0 } else { (norms[u] + norms[v] - 2.0 * dot(ru, e.row(v))).max(0.0) };
        }
    });
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelKind {
    BalancedCut,
    SseCrude { rho: f64 },
    Multicut { demands: MulticutDemands },
}

impl ModelKind {
    /// Objective coefficient on `Σ_E d`.
    pub fn objective_scale(&self) -> f64 {
        match self {
            ModelKind::BalancedCut => 0.25,
            _ => 0.5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::BalancedCut => "balanced-cut",
            ModelKind::SseCrude { .. } => "sse-crude",
            ModelKind::Multicut { .. } => "multicut",
        }
    }
}

/// Constraint families carried by a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    UnitNorm,
    Triangle,
    GlobalSpreading,
    VertexSpreading,
    Nonnegativity,
    DemandOrthogonality,
}

/// An SDP instance: a model kind over vertices `0..n` and an edge list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpModel {
    pub kind: ModelKind,
    pub n: usize,
    pub edges: Vec<Edge>,
}

impl SdpModel {
    pub fn families(&self) -> Vec<Family> {
        let mut f = vec![Family::UnitNorm, Family::Triangle];
        match self.kind {
            ModelKind::BalancedCut => f.push(Family::GlobalSpreading),
            ModelKind::SseCrude { .. } => f.extend([Family::VertexSpreading, Family::Nonnegativity]),
            ModelKind::Multicut { .. } => f.push(Family::DemandOrthogonality),
        }
        f
    }

    pub fn objective(&self, phi: &Embedding) -> f64 {
        self.kind.objective_scale() * self.edges.iter().map(|e| phi.dist(e.u(), e.v())).sum::<f64>()
    }
}

pub fn build_model(kind: ModelKind, graph: &Graph) -> Result<SdpModel> {
    build_model_on(kind, graph.n(), &graph.edge_set())
}

/// Model over vertices `0..n` using only `edges`.
pub fn build_model_on(kind: ModelKind, n: usize, edges: &EdgeSet) -> Result<SdpModel> {
    if let Some(v) = edges.max_vertex() {
        if v >= n {
            return domain(format!("edge endpoint {v} outside 0..{n}"));
        }
    }
    match &kind {
        ModelKind::SseCrude { rho } => {
            if !(*rho > 0.0 && *rho <= 0.5) {
                return param(format!("ρ = {rho} outside (0, 1/2]"));
            }
            if rho * (n as f64) < 1.0 {
                return param(format!("ρn = {} < 1 leaves the spreading constraints infeasible", rho * n as f64));
            }
        }
        ModelKind::Multicut { demands } => demands.check_range(n)?,
        ModelKind::BalancedCut => {}
    }
    Ok(SdpModel { kind, n, edges: edges.iter().collect() })
}

/// `(1/2)Σ_{(u,v)∈E} d(u,v)`.
pub fn sdp_cost(phi: &Embedding, edges: &EdgeSet) -> Result<f64> {
    sdp_cost_restricted(phi, edges, &VertexSet::range(phi.n()))
}

/// `(1/2)Σ d(u,v)` over edges with an endpoint in `o`.
pub fn sdp_cost_restricted(phi: &Embedding, edges: &EdgeSet, o: &VertexSet) -> Result<f64> {
    if let Some(v) = edges.max_vertex().max(o.max()) {
        if v >= phi.n() {
            return domain(format!("vertex {v} not embedded (n = {})", phi.n()));
        }
    }
    let mask = o.mask(phi.n());
    Ok(0.5 * edges.iter().filter(|e| mask[e.u()] || mask[e.v()]).map(|e| phi.dist(e.u(), e.v())).sum::<f64>())
}

/// One violated constraint. Values are the amount by which the constraint
/// fails: spreading values are divided by `n` (per vertex) or `n²/2`
/// (global form), the rest are raw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Violation {
    UnitNorm { u: usize, value: f64 },
    /// `d(u, w) > d(u, v) + d(v, w)`.
    Triangle { u: usize, v: usize, w: usize, value: f64 },
    GlobalSpreading { value: f64 },
    VertexSpreading { u: usize, value: f64 },
    Nonnegativity { u: usize, v: usize, value: f64 },
    Demand { s: usize, t: usize, value: f64 },
}

impl Violation {
    pub fn value(&self) -> f64 {
        match *self {
            Violation::UnitNorm { value, .. }
            | Violation::Triangle { value, .. }
            | Violation::GlobalSpreading { value }
            | Violation::VertexSpreading { value, .. }
            | Violation::Nonnegativity { value, .. }
            | Violation::Demand { value, .. } => value,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum TriangleAudit {
    Full,
    Sampled { samples: usize },
}

/// Largest `n` for which triangle audits enumerate every triple.
pub const FULL_AUDIT_MAX_N: usize = 1024;
const AUDIT_SAMPLES: usize = 4_000_000;
const MAX_LISTED: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
    /// Violations found beyond the listing cap.
    pub unlisted: usize,
    pub triangle_audit: TriangleAudit,
    pub max_triangle_violation: f64,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every audited constraint violated by more than `tol`.
pub fn check_feasibility(phi: &Embedding, model: &SdpModel, tol: f64) -> FeasibilityReport {
    let n = phi.n();
    let mut out = Vec::new();
    for u in 0..n {
        let e = (phi.inner(u, u) - 1.0).abs();
        if e > tol {
            out.push(Violation::UnitNorm { u, value: e });
        }
    }
    let sums = row_sums(phi);
    match &model.kind {
        ModelKind::BalancedCut => {
            let v = global_spreading_violation(phi);
            if v > tol {
                out.push(Violation::GlobalSpreading { value: v });
            }
        }
        ModelKind::SseCrude { rho } => {
            for u in 0..n {
                let g = (dot(phi.row(u), &sums) - rho * n as f64) / n as f64;
                if g > tol {
                    out.push(Violation::VertexSpreading { u, value: g });
                }
            }
            for u in 0..n {
                for v in u + 1..n {
                    let ip = phi.inner(u, v);
                    if -ip > tol {
                        out.push(Violation::Nonnegativity { u, v, value: -ip });
                    }
                }
            }
        }
        ModelKind::Multicut { demands } => {
            for e in &demands.pairs {
                let ip = phi.inner(e.u(), e.v()).abs();
                if ip > tol {
                    out.push(Violation::Demand { s: e.u(), t: e.v(), value: ip });
                }
            }
        }
    }
    let (tri, audit, max_tri) = triangle_violations(phi, tol, MAX_LISTED);
    let unlisted = tri.1;
    out.extend(tri.0);
    FeasibilityReport { violations: out, unlisted, triangle_audit: audit, max_triangle_violation: max_tri }
}

fn row_sums(phi: &Embedding) -> Vec<f64> {
    let mut s = vec![0.0; phi.dim()];
    for u in 0..phi.n() {
        for (a, b) in s.iter_mut().zip(phi.row(u)) {
            *a += b;
        }
    }
    s
}

/// `(n²/2 − (1/4)Σ_{u,v} d(u,v)) / (n²/2)`, clamped at zero.
pub fn global_spreading_violation(phi: &Embedding) -> f64 {
    let n = phi.n() as f64;
    if phi.n() == 0 {
        return 0.0;
    }
    let s = row_sums(phi);
    let norms: f64 = (0..phi.n()).map(|u| phi.inner(u, u)).sum();
    let lhs = 0.25 * (2.0 * n * norms - 2.0 * dot(&s, &s));
    ((n * n / 2.0 - lhs) / (n * n / 2.0)).max(0.0)
}

type TriangleScan = ((Vec<Violation>, usize), TriangleAudit, f64);

fn triangle_violations(phi: &Embedding, tol: f64, cap: usize) -> TriangleScan {
    let n = phi.n();
    if n < 3 {
        return ((Vec::new(), 0), TriangleAudit::Full, 0.0);
    }
    if n > FULL_AUDIT_MAX_N {
        return sampled_triangles(phi, tol, cap);
    }
    let d = phi.distances();
    let per_u: Vec<(Vec<Violation>, usize, f64)> = (0..n)
        .into_par_iter()
        .map(|u| {
            let mut found = Vec::new();
            let mut count = 0;
            let mut worst: f64 = 0.0;
            for w in u + 1..n {
                let duw = d[u * n + w];
                for v in 0..n {
                    if v == u || v == w {
                        continue;
                    }
                    let viol = duw - d[u * n + v] - d[v * n + w];
                    worst = worst.max(viol);
                    if viol > tol {
                        count += 1;
                        if found.len() < cap {
                            found.push(Violation::Triangle { u, v, w, value: viol });
                        }
                    }
                }
            }
            (found, count, worst)
        })
        .collect();
    let mut listed = Vec::new();
    let mut total = 0;
    let mut worst: f64 = 0.0;
    for (f, c, w) in per_u {
        total += c;
        worst = worst.max(w);
        let room = cap.saturating_sub(listed.len());
        listed.extend(f.into_iter().take(room));
    }
    let unlisted = total - listed.len();
    ((listed, unlisted), TriangleAudit::Full, worst)
}

fn sampled_triangles(phi: &Embedding, tol: f64, cap: usize) -> TriangleScan {
    use rand::Rng as _;
    let n = phi.n();
    let mut rng = crate::rng::substream(0, "triangle-audit");
    let mut listed = Vec::new();
    let mut total = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..AUDIT_SAMPLES {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        let w = rng.gen_range(0..n);
        if u == v || v == w || u == w {
            continue;
        }
        let viol = phi.dist(u, w) - phi.dist(u, v) - phi.dist(v, w);
        worst = worst.max(viol);
        if viol > tol {
            total += 1;
            if listed.len() < cap {
                listed.push(Violation::Triangle { u: u.min(w), v, w: u.max(w), value: viol });
            }
        }
    }
    let unlisted = total - listed.len();
    ((listed, unlisted), TriangleAudit::Sampled { samples: AUDIT_SAMPLES }, worst)
}

/// Moves every vertex of `s` to a fresh unit vector orthogonal to all
/// existing ones (one appended coordinate); everything else keeps its vector
/// padded with a zero.
pub fn locality_transform(phi: &Embedding, s: &VertexSet, rho: f64) -> Result<Embedding> {
    let n = phi.n();
    if let Some(v) = s.max() {
        if v >= n {
            return domain(format!("vertex {v} not embedded"));
        }
    }
    if s.len() as f64 > rho * n as f64 + 1e-9 {
        return param(format!("|S| = {} exceeds ρn = {}", s.len(), rho * n as f64));
    }
    let k = phi.dim();
    let mask = s.mask(n);
    let mut data = Vec::with_capacity(n * (k + 1));
    for (u, &inside) in mask.iter().enumerate() {
        if inside {
            data.extend(std::iter::repeat(0.0).take(k));
            data.push(1.0);
        } else {
            data.extend_from_slice(phi.row(u));
            data.push(0.0);
        }
    }
    Ok(Embedding::from_rows(k + 1, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(rows: &[&[f64]]) -> Embedding {
        Embedding::from_vectors(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn costs_of_antipodal_pair() {
        let phi = emb(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let e: EdgeSet = [Edge::new(0, 1).unwrap()].into_iter().collect();
        assert_eq!(sdp_cost(&phi, &e).unwrap(), 2.0);
        assert_eq!(sdp_cost_restricted(&phi, &e, &VertexSet::new()).unwrap(), 0.0);
        assert_eq!(sdp_cost_restricted(&phi, &e, &VertexSet::range(2)).unwrap(), 2.0);
        let far: EdgeSet = [Edge::new(0, 2).unwrap()].into_iter().collect();
        assert!(sdp_cost(&phi, &far).is_err());
    }

    #[test]
    fn model_validation_and_families() {
        let g = Graph::path(4);
        assert!(build_model(ModelKind::SseCrude { rho: 0.6 }, &g).is_err());
        assert!(build_model(ModelKind::SseCrude { rho: 0.0 }, &g).is_err());
        let bad = MulticutDemands::new([(0, 9)]).unwrap();
        assert!(build_model(ModelKind::Multicut { demands: bad }, &g).is_err());
        let m = build_model(ModelKind::Multicut { demands: MulticutDemands::new([(0, 3)]).unwrap() }, &g).unwrap();
        assert!(m.families().contains(&Family::DemandOrthogonality));
        let s = build_model(ModelKind::SseCrude { rho: 0.5 }, &g).unwrap();
        assert_eq!(s.families(), vec![Family::UnitNorm, Family::Triangle, Family::VertexSpreading, Family::Nonnegativity]);
    }

    #[test]
    fn intended_balanced_solution_is_feasible() {
        let g = Graph::cycle(8);
        let rows: Vec<Vec<f64>> = (0..8).map(|u| vec![if u < 4 { 1.0 } else { -1.0 }, 0.0]).collect();
        let phi = Embedding::from_vectors(&rows).unwrap();
        let m = build_model(ModelKind::BalancedCut, &g).unwrap();
        assert!(check_feasibility(&phi, &m, 1e-9).is_feasible());
        assert!((m.objective(&phi) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constructed_triangle_violation_is_reported() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // a ⟂ c with b halfway: d(a,c) = 2 > d(a,b) + d(b,c) = 2(2 − √2)
        let phi = emb(&[&[1.0, 0.0], &[s, s], &[0.0, 1.0]]);
        let m = build_model(ModelKind::Multicut { demands: MulticutDemands::default() }, &Graph::empty(3)).unwrap();
        let r = check_feasibility(&phi, &m, 1e-9);
        let tri: Vec<_> = r.violations.iter().filter(|v| matches!(v, Violation::Triangle { .. })).collect();
        assert_eq!(tri.len(), 1);
        assert!(matches!(tri[0], Violation::Triangle { u: 0, v: 1, w: 2, .. }));
    }

    #[test]
    fn negative_inner_product_flagged_for_sse() {
        let phi = emb(&[&[1.0, 0.0], &[-0.1, (1.0f64 - 0.01).sqrt()]]);
        let m = build_model(ModelKind::SseCrude { rho: 0.5 }, &Graph::empty(2)).unwrap();
        let r = check_feasibility(&phi, &m, 1e-9);
        assert!(r.violations.iter().any(|v| matches!(v, Violation::Nonnegativity { u: 0, v: 1, .. })));
    }

    #[test]
    fn locality_transform_examples() {
        let phi = emb(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 0.0]]);
        let same = locality_transform(&phi, &VertexSet::new(), 0.5).unwrap();
        for u in 0..3 {
            assert_eq!(&same.row(u)[..2], phi.row(u));
            assert_eq!(same.row(u)[2], 0.0);
        }
        let moved = locality_transform(&phi, &[1].into_iter().collect(), 0.34).unwrap();
        assert_eq!(moved.dist(1, 0), 2.0);
        assert_eq!(moved.dist(1, 2), 2.0);
        assert!(locality_transform(&phi, &[0, 1].into_iter().collect(), 0.34).is_err());
    }

    #[test]
    fn embedding_json_round_trip() {
        let phi = emb(&[&[0.6, 0.8], &[1.0, 0.0]]);
        let back: Embedding = serde_json::from_str(&serde_json::to_string(&phi).unwrap()).unwrap();
        assert_eq!(back, phi);
        assert!((phi.dist(0, 1) - 0.8).abs() < 1e-12);
        assert!((phi.distances()[1] - 0.8).abs() < 1e-12);
    }
}
