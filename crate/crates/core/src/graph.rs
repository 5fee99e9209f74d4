//! Graph, vertex-set, edge-set and partition primitives plus cut accounting.
//!
//! Vertices are dense ids `0..n`. Edges are unordered and stored with the
//! smaller endpoint first, so every count in this crate is over unordered
//! pairs.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{domain, param, Error, Result};
use crate::spectral;

/// An unordered vertex pair `{u, v}` with `u < v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "(usize, usize)", into = "(usize, usize)")]
pub struct Edge(usize, usize);

impl Edge {
    /// Normalizes the endpoint order. Returns `None` for a loop.
    pub fn new(a: usize, b: usize) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Edge(a, b)),
            std::cmp::Ordering::Greater => Some(Edge(b, a)),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn u(self) -> usize {
        self.0
    }

    pub fn v(self) -> usize {
        self.1
    }

    pub fn endpoints(self) -> (usize, usize) {
        (self.0, self.1)
    }

    pub fn touches(self, x: usize) -> bool {
        self.0 == x || self.1 == x
    }
}

impl TryFrom<(usize, usize)> for Edge {
    type Error = String;

    fn try_from((a, b): (usize, usize)) -> std::result::Result<Self, String> {
        Edge::new(a, b).ok_or_else(|| format!("self-loop at vertex {a}"))
    }
}

impl From<Edge> for (usize, usize) {
    fn from(e: Edge) -> Self {
        (e.0, e.1)
    }
}

/// A set of unordered vertex pairs, iterated in lexicographic order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeSet(BTreeSet<Edge>);

impl EdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, e: Edge) -> bool {
        self.0.insert(e)
    }

    pub fn remove(&mut self, e: &Edge) -> bool {
        self.0.remove(e)
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.0.contains(e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Edge> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &EdgeSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn union(&self, other: &EdgeSet) -> EdgeSet {
        EdgeSet(self.0.union(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &EdgeSet) -> EdgeSet {
        EdgeSet(self.0.difference(&other.0).copied().collect())
    }

    pub fn intersection(&self, other: &EdgeSet) -> EdgeSet {
        EdgeSet(self.0.intersection(&other.0).copied().collect())
    }

    /// Largest endpoint id, if any.
    pub fn max_vertex(&self) -> Option<usize> {
        self.0.iter().map(|e| e.1).max()
    }

    /// Edges with both endpoints in the mask.
    pub fn inside(&self, mask: &[bool]) -> EdgeSet {
        self.iter().filter(|e| mask[e.0] && mask[e.1]).collect()
    }
}

impl FromIterator<Edge> for EdgeSet {
    fn from_iter<I: IntoIterator<Item = Edge>>(iter: I) -> Self {
        EdgeSet(iter.into_iter().collect())
    }
}

impl Extend<Edge> for EdgeSet {
    fn extend<I: IntoIterator<Item = Edge>>(&mut self, iter: I) {
        self.0.extend(iter)
    }
}

/// A sorted, duplicate-free list of vertex ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct VertexSet(Vec<usize>);

impl VertexSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn range(n: usize) -> Self {
        VertexSet((0..n).collect())
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        VertexSet(mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &v in &self.0 {
            m[v] = true;
        }
        m
    }

    pub fn complement(&self, n: usize) -> VertexSet {
        let m = self.mask(n);
        VertexSet((0..n).filter(|&v| !m[v]).collect())
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        self.iter().chain(other.iter()).collect()
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        self.iter().filter(|&v| other.contains(v)).collect()
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        self.iter().filter(|&v| !other.contains(v)).collect()
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.iter().all(|v| other.contains(v))
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.iter().all(|v| !other.contains(v))
    }

    pub fn check_range(&self, n: usize) -> Result<()> {
        match self.max() {
            Some(v) if v >= n => domain(format!("vertex {v} outside 0..{n}")),
            _ => Ok(()),
        }
    }
}

impl From<Vec<usize>> for VertexSet {
    fn from(mut v: Vec<usize>) -> Self {
        v.sort_unstable();
        v.dedup();
        VertexSet(v)
    }
}

impl From<VertexSet> for Vec<usize> {
    fn from(s: VertexSet) -> Self {
        s.0
    }
}

impl FromIterator<usize> for VertexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        VertexSet::from(iter.into_iter().collect::<Vec<_>>())
    }
}

/// Immutable undirected simple graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph, rejecting loops, duplicate edges and out-of-range ids.
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            if a >= n || b >= n {
                return domain(format!("edge ({a}, {b}) outside 0..{n}"));
            }
            let e = Edge::new(a, b).ok_or_else(|| Error::Domain(format!("self-loop at {a}")))?;
            if !set.insert(e) {
                return domain(format!("duplicate edge ({}, {})", e.0, e.1));
            }
        }
        Ok(Self::from_sorted(n, set.into_iter().collect()))
    }

    pub fn from_edge_set(n: usize, edges: &EdgeSet) -> Result<Self> {
        if let Some(v) = edges.max_vertex() {
            if v >= n {
                return domain(format!("edge endpoint {v} outside 0..{n}"));
            }
        }
        Ok(Self::from_sorted(n, edges.iter().collect()))
    }

    fn from_sorted(n: usize, edges: Vec<Edge>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for e in &edges {
            adj[e.0].push(e.1);
            adj[e.1].push(e.0);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Graph { n, edges, adj }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_sorted(n, Vec::new())
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| Edge(u, v))).collect();
        Self::from_sorted(n, edges)
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n))).expect("valid cycle")
    }

    pub fn path(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| (i - 1, i))).expect("valid path")
    }

    /// Vertex-disjoint union; the second graph's ids are shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let shift = self.n;
        let edges = self
            .edges
            .iter()
            .copied()
            .chain(other.edges.iter().map(|e| Edge(e.0 + shift, e.1 + shift)))
            .collect();
        Self::from_sorted(self.n + other.n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_set(&self) -> EdgeSet {
        self.edges.iter().copied().collect()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adj[u].binary_search(&v).is_ok()
    }

    pub fn is_regular(&self) -> Option<usize> {
        let d = self.adj.first().map(Vec::len)?;
        self.adj.iter().all(|a| a.len() == d).then_some(d)
    }

    /// Same vertex set, different edges.
    pub fn with_edges(&self, edges: &EdgeSet) -> Result<Graph> {
        Graph::from_edge_set(self.n, edges)
    }

    /// Induced subgraph on `set`, relabeled to `0..|set|`. The returned map
    /// sends local ids back to ids of `self`.
    pub fn induced(&self, set: &VertexSet) -> (Graph, Vec<usize>) {
        let mut local = vec![usize::MAX; self.n];
        for (i, v) in set.iter().enumerate() {
            local[v] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| local[e.0] != usize::MAX && local[e.1] != usize::MAX)
            .map(|e| Edge::new(local[e.0], local[e.1]).expect("distinct endpoints"))
            .collect::<BTreeSet<_>>();
        (Self::from_sorted(set.len(), edges.into_iter().collect()), set.as_slice().to_vec())
    }

    /// Connected components, each sorted, listed by smallest member.
    pub fn components(&self) -> Vec<VertexSet> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![s];
            let mut comp = Vec::new();
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            out.push(VertexSet::from(comp));
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.components().len() == 1
    }

    /// Parses the edge-list text format: a header line `n m`, then `m` lines
    /// `u v` with `u < v`.
    pub fn parse_edge_list(text: &str) -> Result<Graph> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hl, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
        let nums = parse_pair(hl, header)?;
        let (n, m) = nums;
        let mut seen = BTreeSet::new();
        for (ln, line) in lines.by_ref() {
            let (u, v) = parse_pair(ln, line)?;
            if u == v {
                return Err(Error::Parse { line: ln, msg: format!("self-loop at {u}") });
            }
            if u > v {
                return Err(Error::Parse { line: ln, msg: format!("expected u < v, got {u} {v}") });
            }
            if v >= n {
                return Err(Error::Parse { line: ln, msg: format!("vertex {v} outside 0..{n}") });
            }
            if !seen.insert(Edge(u, v)) {
                return Err(Error::Parse { line: ln, msg: format!("duplicate edge {u} {v}") });
            }
        }
        if seen.len() != m {
            return Err(Error::Parse { line: hl, msg: format!("header declares {m} edges, found {}", seen.len()) });
        }
        Ok(Self::from_sorted(n, seen.into_iter().collect()))
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.m());
        for e in &self.edges {
            let _ = writeln!(s, "{} {}", e.0, e.1);
        }
        s
    }
}

fn parse_pair(line: usize, text: &str) -> Result<(usize, usize)> {
    let mut it = text.split_whitespace();
    let mut next = || -> Result<usize> {
        it.next()
            .ok_or(Error::Parse { line, msg: "expected two integers".into() })?
            .parse()
            .map_err(|e| Error::Parse { line, msg: format!("{e}") })
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err(Error::Parse { line, msg: "trailing tokens".into() });
    }
    Ok((a, b))
}

/// A partition of `0..n` into nonempty disjoint parts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct Partition {
    assignment: Vec<usize>,
    parts: Vec<VertexSet>,
}

impl Partition {
    pub fn from_parts(n: usize, parts: Vec<VertexSet>) -> Result<Self> {
        let mut assignment = vec![usize::MAX; n];
        for (i, p) in parts.iter().enumerate() {
            if p.is_empty() {
                return param(format!("part {i} is empty"));
            }
            for v in p.iter() {
                if v >= n {
                    return domain(format!("vertex {v} outside 0..{n}"));
                }
                if assignment[v] != usize::MAX {
                    return domain(format!("vertex {v} in parts {} and {i}", assignment[v]));
                }
                assignment[v] = i;
            }
        }
        if let Some(v) = assignment.iter().position(|&a| a == usize::MAX) {
            return domain(format!("vertex {v} not covered"));
        }
        Ok(Partition { assignment, parts })
    }

    /// Builds a partition from per-vertex labels. Labels are relabeled densely
    /// in ascending order.
    pub fn from_assignment(labels: &[usize]) -> Self {
        let mut distinct: Vec<usize> = labels.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let assignment: Vec<usize> =
            labels.iter().map(|l| distinct.binary_search(l).expect("present")).collect();
        let mut parts = vec![Vec::new(); distinct.len()];
        for (v, &p) in assignment.iter().enumerate() {
            parts[p].push(v);
        }
        Partition { assignment, parts: parts.into_iter().map(VertexSet).collect() }
    }

    /// `{S, V \ S}`; a single part if `S` is empty or everything.
    pub fn bipartition(n: usize, side: &VertexSet) -> Result<Self> {
        side.check_range(n)?;
        let m = side.mask(n);
        Ok(Self::from_assignment(&m.iter().map(|&b| usize::from(!b)).collect::<Vec<_>>()))
    }

    pub fn single(n: usize) -> Self {
        Self::from_assignment(&vec![0; n])
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn parts(&self) -> &[VertexSet] {
        &self.parts
    }

    pub fn part(&self, i: usize) -> &VertexSet {
        &self.parts[i]
    }

    pub fn part_of(&self, u: usize) -> usize {
        self.assignment[u]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn separates(&self, u: usize, v: usize) -> bool {
        self.assignment[u] != self.assignment[v]
    }

    /// Number of unordered cross pairs `|E_K| = (n² − Σ|P_i|²)/2`.
    pub fn cross_pair_count(&self) -> u64 {
        let n = self.n() as u64;
        let sq: u64 = self.parts.iter().map(|p| (p.len() as u64).pow(2)).sum();
        (n * n - sq) / 2
    }

    fn check_edge(&self, e: Edge) -> Result<()> {
        if e.1 >= self.n() {
            return domain(format!("edge ({}, {}) has an endpoint not covered by the partition", e.0, e.1));
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<usize>>> for Partition {
    type Error = String;

    fn try_from(parts: Vec<Vec<usize>>) -> std::result::Result<Self, String> {
        let n = parts.iter().map(Vec::len).sum();
        Partition::from_parts(n, parts.into_iter().map(VertexSet::from).collect()).map_err(|e| e.to_string())
    }
}

impl From<Partition> for Vec<Vec<usize>> {
    fn from(p: Partition) -> Self {
        p.parts.into_iter().map(Vec::from).collect()
    }
}

/// Edges of `edges` whose endpoints lie in different parts.
pub fn cut_edges(p: &Partition, edges: &EdgeSet) -> Result<EdgeSet> {
    let mut out = EdgeSet::new();
    for e in edges.iter() {
        p.check_edge(e)?;
        if p.separates(e.0, e.1) {
            out.insert(e);
        }
    }
    Ok(out)
}

pub fn cut_cost(p: &Partition, edges: &EdgeSet) -> Result<usize> {
    cut_edges(p, edges).map(|c| c.len())
}

/// Cut edges with at least one endpoint in `o`.
pub fn cut_cost_restricted(p: &Partition, edges: &EdgeSet, o: &VertexSet) -> Result<usize> {
    o.check_range(p.n())?;
    let mask = o.mask(p.n());
    let mut count = 0;
    for e in edges.iter() {
        p.check_edge(e)?;
        if p.separates(e.0, e.1) && (mask[e.0] || mask[e.1]) {
            count += 1;
        }
    }
    Ok(count)
}

/// Number of edges with exactly one endpoint in `s`.
pub fn edge_boundary(s: &VertexSet, g: &Graph) -> Result<usize> {
    s.check_range(g.n())?;
    Ok(boundary_of_mask(g, &s.mask(g.n())))
}

pub(crate) fn boundary_of_mask(g: &Graph, mask: &[bool]) -> usize {
    g.edges().iter().filter(|e| mask[e.0] != mask[e.1]).count()
}

/// Edges of `g` leaving `s` toward `rest`, both given as masks.
pub(crate) fn edges_between(g: &Graph, s: &[bool], rest: &[bool]) -> usize {
    g.edges().iter().filter(|e| (s[e.0] && rest[e.1]) || (s[e.1] && rest[e.0])).count()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionMode {
    Exact,
    CertifiedLowerBound,
}

/// An expansion value tagged with whether it is `h(G)` itself or a bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionValue {
    pub value: f64,
    pub mode: ExpansionMode,
}

/// Largest graph accepted by exact expansion.
pub const EXACT_EXPANSION_MAX_N: usize = 22;

/// Edge expansion `h(G) = min_{0<|S|≤n/2} E(S, V∖S)/|S|`, exactly by subset
/// enumeration or as the spectral lower bound `λ₂·d_min/2`.
pub fn expansion(g: &Graph, mode: ExpansionMode) -> Result<ExpansionValue> {
    let value = match mode {
        ExpansionMode::Exact => exact_expansion(g)?,
        ExpansionMode::CertifiedLowerBound => {
            if g.n() < 2 || g.min_degree() == 0 {
                0.0
            } else {
                let lambda2 = spectral::normalized_laplacian_spectrum(g)[1].max(0.0);
                lambda2 * g.min_degree() as f64 / 2.0
            }
        }
    };
    Ok(ExpansionValue { value, mode })
}

fn exact_expansion(g: &Graph) -> Result<f64> {
    let n = g.n();
    if n > EXACT_EXPANSION_MAX_N {
        return Err(Error::Size(format!("exact expansion needs n <= {EXACT_EXPANSION_MAX_N}, got {n}")));
    }
    let adj: Vec<u32> = (0..n).map(|u| g.neighbors(u).iter().fold(0u32, |m, &v| m | (1 << v))).collect();
    let half = n / 2;
    let mut best = f64::INFINITY;
    for mask in 1u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size > half {
            continue;
        }
        let mut boundary = 0;
        let mut rest = mask;
        while rest != 0 {
            let u = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            boundary += (adj[u] & !mask).count_ones();
        }
        best = best.min(boundary as f64 / size as f64);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vs(v: &[usize]) -> VertexSet {
        v.iter().copied().collect()
    }

    fn parts(n: usize, p: &[&[usize]]) -> Partition {
        Partition::from_parts(n, p.iter().map(|x| vs(x)).collect()).unwrap()
    }

    #[test]
    fn cut_edges_of_four_cycle() {
        let g = Graph::cycle(4);
        let p = parts(4, &[&[0, 1], &[2, 3]]);
        let cut = cut_edges(&p, &g.edge_set()).unwrap();
        let expected: EdgeSet = [Edge::new(1, 2).unwrap(), Edge::new(0, 3).unwrap()].into_iter().collect();
        assert_eq!(cut, expected);
        assert_eq!(cut_cost(&p, &g.edge_set()).unwrap(), 2);
    }

    #[test]
    fn single_part_cuts_nothing_and_singletons_cut_everything() {
        let k4 = Graph::complete(4);
        assert_eq!(cut_cost(&Partition::single(4), &k4.edge_set()).unwrap(), 0);
        let p = parts(4, &[&[0], &[1], &[2], &[3]]);
        assert_eq!(cut_edges(&p, &k4.edge_set()).unwrap().len(), 6);
    }

    #[test]
    fn restricted_cost_examples() {
        let g = Graph::cycle(4);
        let p = parts(4, &[&[0, 1], &[2, 3]]);
        let e = g.edge_set();
        assert_eq!(cut_cost_restricted(&p, &e, &VertexSet::range(4)).unwrap(), 2);
        assert_eq!(cut_cost_restricted(&p, &e, &VertexSet::new()).unwrap(), 0);
        assert_eq!(cut_cost_restricted(&p, &e, &vs(&[1])).unwrap(), 1);
    }

    #[test]
    fn uncovered_endpoint_is_a_domain_error() {
        let p = Partition::single(3);
        let e: EdgeSet = [Edge::new(1, 5).unwrap()].into_iter().collect();
        assert!(matches!(cut_edges(&p, &e), Err(Error::Domain(_))));
    }

    #[test]
    fn boundary_examples() {
        let k4 = Graph::complete(4);
        assert_eq!(edge_boundary(&vs(&[0, 1]), &k4).unwrap(), 4);
        assert_eq!(edge_boundary(&VertexSet::range(4), &k4).unwrap(), 0);
        assert_eq!(edge_boundary(&VertexSet::new(), &k4).unwrap(), 0);
        assert_eq!(edge_boundary(&vs(&[0, 1]), &Graph::path(4)).unwrap(), 1);
        assert!(edge_boundary(&vs(&[9]), &k4).is_err());
    }

    #[test]
    fn exact_expansion_examples() {
        let k4 = expansion(&Graph::complete(4), ExpansionMode::Exact).unwrap();
        assert_eq!(k4.value, 2.0);
        let two = Graph::complete(3).disjoint_union(&Graph::complete(3));
        assert_eq!(expansion(&two, ExpansionMode::Exact).unwrap().value, 0.0);
        // brute force over C6: the arc of three cuts two edges
        let c6 = expansion(&Graph::cycle(6), ExpansionMode::Exact).unwrap();
        assert!((c6.value - 2.0 / 3.0).abs() < 1e-12);
        assert!(matches!(expansion(&Graph::empty(23), ExpansionMode::Exact), Err(Error::Size(_))));
    }

    #[test]
    fn spectral_bound_never_exceeds_exact() {
        for g in [Graph::complete(6), Graph::cycle(8), Graph::path(7)] {
            let exact = expansion(&g, ExpansionMode::Exact).unwrap().value;
            let bound = expansion(&g, ExpansionMode::CertifiedLowerBound).unwrap();
            assert_eq!(bound.mode, ExpansionMode::CertifiedLowerBound);
            assert!(bound.value <= exact + 1e-9, "{} > {}", bound.value, exact);
        }
    }

    #[test]
    fn edge_list_round_trip_and_rejections() {
        let g = Graph::cycle(5);
        let text = g.to_edge_list();
        assert_eq!(Graph::parse_edge_list(&text).unwrap(), g);
        assert!(Graph::parse_edge_list("3 1\n1 1\n").is_err());
        assert!(Graph::parse_edge_list("3 2\n0 1\n0 1\n").is_err());
        assert!(Graph::parse_edge_list("3 1\n2 1\n").is_err());
        assert!(Graph::parse_edge_list("3 2\n0 1\n").is_err());
        assert!(Graph::new(3, [(0, 0)]).is_err());
        assert!(Graph::new(3, [(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn partition_serde_and_validation() {
        let p = parts(5, &[&[0, 3], &[1, 2, 4]]);
        let json = serde_json::to_string(&p).unwrap();
        let back: Partition = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(Partition::from_parts(3, vec![vs(&[0, 1]), vs(&[1, 2])]).is_err());
        assert!(Partition::from_parts(3, vec![vs(&[0, 1])]).is_err());
        assert_eq!(p.cross_pair_count(), 6);
    }

    /// Independent oracle: recursive subset enumeration over an edge list.
    fn oracle_expansion(n: usize, edges: &[(usize, usize)]) -> f64 {
        fn rec(i: usize, n: usize, inside: &mut Vec<bool>, edges: &[(usize, usize)], best: &mut f64) {
            if i == n {
                let size = inside.iter().filter(|&&b| b).count();
                if size == 0 || 2 * size > n {
                    return;
                }
                let b = edges.iter().filter(|(a, c)| inside[*a] ^ inside[*c]).count();
                *best = best.min(b as f64 / size as f64);
                return;
            }
            inside[i] = true;
            rec(i + 1, n, inside, edges, best);
            inside[i] = false;
            rec(i + 1, n, inside, edges, best);
        }
        let mut best = f64::INFINITY;
        rec(0, n, &mut vec![false; n], edges, &mut best);
        best
    }

    fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
        (2..=max_n).prop_flat_map(|n| {
            proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
                let mut pairs = Vec::new();
                let mut k = 0;
                for u in 0..n {
                    for v in u + 1..n {
                        if bits[k] {
                            pairs.push((u, v));
                        }
                        k += 1;
                    }
                }
                Graph::new(n, pairs).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn exact_expansion_matches_oracle(g in arb_graph(10)) {
            let pairs: Vec<_> = g.edges().iter().map(|e| e.endpoints()).collect();
            let got = expansion(&g, ExpansionMode::Exact).unwrap().value;
            prop_assert!((got - oracle_expansion(g.n(), &pairs)).abs() < 1e-12);
        }

        #[test]
        fn cut_accounting_laws(g in arb_graph(12), labels in proptest::collection::vec(0usize..3, 12), o1 in proptest::collection::vec(any::<bool>(), 12), o2 in proptest::collection::vec(any::<bool>(), 12)) {
            let n = g.n();
            let p = Partition::from_assignment(&labels[..n]);
            let e = g.edge_set();
            let full = cut_cost(&p, &e).unwrap();
            prop_assert_eq!(full, cut_cost_restricted(&p, &e, &VertexSet::range(n)).unwrap());
            let small = VertexSet::from_mask(&o1[..n]);
            let big = small.union(&VertexSet::from_mask(&o2[..n]));
            prop_assert!(cut_cost_restricted(&p, &e, &small).unwrap() <= cut_cost_restricted(&p, &e, &big).unwrap());
            let s = VertexSet::from_mask(&o1[..n]);
            let bip = Partition::bipartition(n, &s).unwrap();
            prop_assert_eq!(edge_boundary(&s, &g).unwrap(), cut_cost(&bip, &e).unwrap());
        }
    }
}
