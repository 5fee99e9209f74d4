//! Semi-random and planted-expander instance generation.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::graph::{Edge, EdgeSet, Graph, Partition, VertexSet};
use crate::rng::{self, Rng};
use crate::spectral;

/// How the adversary fills each part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InsideStrategy {
    Empty,
    ErdosRenyi { p: f64 },
    Cliques,
    RegularExpander { d: usize },
    /// Arbitrary user edges; rejected if any crosses the partition.
    Custom { edges: Vec<(usize, usize)> },
}

/// Which random cross edges the adversary deletes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CrossDeletion {
    /// Delete exactly `round(f·|E_R|)` edges chosen uniformly.
    Fraction { f: f64 },
    /// Pick `count` vertices uniformly and delete every random cross edge at them.
    TargetedVertices { count: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryStrategy {
    pub inside: InsideStrategy,
    pub cross_deletion: CrossDeletion,
}

impl AdversaryStrategy {
    pub fn new(inside: InsideStrategy, deletion_fraction: f64) -> Self {
        AdversaryStrategy { inside, cross_deletion: CrossDeletion::Fraction { f: deletion_fraction } }
    }

    /// No inside edges, no deletions.
    pub fn passive() -> Self {
        Self::new(InsideStrategy::Empty, 0.0)
    }

    fn validate(&self) -> Result<()> {
        match self.inside {
            InsideStrategy::ErdosRenyi { p } if !(0.0..=1.0).contains(&p) => {
                return param(format!("inside edge probability {p} outside [0, 1]"))
            }
            _ => {}
        }
        match self.cross_deletion {
            CrossDeletion::Fraction { f } if !(0.0..=1.0).contains(&f) => param(format!("deletion fraction {f} outside [0, 1]")),
            _ => Ok(()),
        }
    }
}

/// Parameters recorded for planted algebraic-expander instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpanderInfo {
    pub rho: f64,
    pub degree: usize,
    pub cross_edges: usize,
    /// `|E₁|`, the edge count of the expander side.
    pub m: usize,
    pub lambda2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedInstance {
    pub graph: Graph,
    pub hidden: Partition,
    pub epsilon: f64,
    pub realized_cross: EdgeSet,
    pub kept_cross: EdgeSet,
    pub adversary: AdversaryStrategy,
    pub seed: u64,
    pub expander: Option<ExpanderInfo>,
}

impl PlantedInstance {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn sr_cost(&self) -> f64 {
        sr_cost(&self.hidden, self.epsilon)
    }

    /// Checks every structural invariant of a planted instance.
    pub fn validate(&self) -> Result<()> {
        let n = self.graph.n();
        if self.hidden.n() != n {
            return param(format!("partition covers {} vertices, graph has {n}", self.hidden.n()));
        }
        if !self.kept_cross.is_subset(&self.realized_cross) {
            return Err(Error::Domain("kept cross edges not a subset of realized cross edges".into()));
        }
        if let Some(e) = self.realized_cross.iter().find(|e| e.v() >= n || !self.hidden.separates(e.u(), e.v())) {
            return Err(Error::Domain(format!("realized edge ({}, {}) is not a cross pair", e.u(), e.v())));
        }
        for e in self.graph.edges() {
            if self.hidden.separates(e.u(), e.v()) && !self.kept_cross.contains(e) {
                return Err(Error::Domain(format!("cross edge ({}, {}) not among kept cross edges", e.u(), e.v())));
            }
        }
        if let Some(e) = self.kept_cross.iter().find(|e| !self.graph.has_edge(e.u(), e.v())) {
            return Err(Error::Domain(format!("kept edge ({}, {}) missing from graph", e.u(), e.v())));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&InstanceFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.try_into()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    n: usize,
    epsilon: f64,
    partition: Partition,
    adversary: AdversaryStrategy,
    seed: u64,
    edges: Vec<Edge>,
    realized_cross: EdgeSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expander: Option<ExpanderInfo>,
}

impl From<&PlantedInstance> for InstanceFile {
    fn from(inst: &PlantedInstance) -> Self {
        InstanceFile {
            n: inst.graph.n(),
            epsilon: inst.epsilon,
            partition: inst.hidden.clone(),
            adversary: inst.adversary.clone(),
            seed: inst.seed,
            edges: inst.graph.edges().to_vec(),
            realized_cross: inst.realized_cross.clone(),
            expander: inst.expander.clone(),
        }
    }
}

impl TryFrom<InstanceFile> for PlantedInstance {
    type Error = Error;

    fn try_from(f: InstanceFile) -> Result<Self> {
        let graph = Graph::new(f.n, f.edges.iter().map(|e| e.endpoints()))?;
        let kept_cross = graph.edges().iter().copied().filter(|e| f.partition.separates(e.u(), e.v())).collect();
        let inst = PlantedInstance {
            graph,
            hidden: f.partition,
            epsilon: f.epsilon,
            realized_cross: f.realized_cross,
            kept_cross,
            adversary: f.adversary,
            seed: f.seed,
            expander: f.expander,
        };
        inst.validate()?;
        Ok(inst)
    }
}

/// `ε·|E_K|` over unordered cross pairs.
pub fn sr_cost(p: &Partition, epsilon: f64) -> f64 {
    epsilon * p.cross_pair_count() as f64
}

/// A uniformly random partition of `0..n` into parts of the given sizes.
pub fn random_partition(sizes: &[usize], rng: &mut Rng) -> Result<Partition> {
    let n: usize = sizes.iter().sum();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut parts = Vec::with_capacity(sizes.len());
    let mut at = 0;
    for &s in sizes {
        parts.push(perm[at..at + s].iter().copied().collect::<VertexSet>());
        at += s;
    }
    Partition::from_parts(n, parts)
}

/// Partition with two parts of sizes `round(ρn)` and the rest, drawn from
/// the instance stream of `seed`.
pub fn random_bipartition(n: usize, rho: f64, seed: u64) -> Result<Partition> {
    let a = (rho * n as f64).round() as usize;
    if a == 0 || a >= n {
        return param(format!("ρ = {rho} gives an empty side at n = {n}"));
    }
    random_partition(&[a, n - a], &mut rng::substream(seed, "partition"))
}

pub fn generate_sr(p: &Partition, epsilon: f64, adversary: &AdversaryStrategy, seed: u64) -> Result<PlantedInstance> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return param(format!("ε = {epsilon} outside (0, 1)"));
    }
    adversary.validate()?;
    let n = p.n();
    let mut rng = rng::substream(seed, rng::INSTANCE);

    let mut realized = EdgeSet::new();
    for u in 0..n {
        for v in u + 1..n {
            if p.separates(u, v) && rng.gen_bool(epsilon) {
                realized.insert(Edge::new(u, v).expect("u < v"));
            }
        }
    }

    let mut inside = EdgeSet::new();
    for part in p.parts() {
        inside.extend(inside_edges(&adversary.inside, part, &mut rng)?);
    }
    if let InsideStrategy::Custom { edges } = &adversary.inside {
        for &(a, b) in edges {
            let e = Edge::new(a, b).ok_or_else(|| Error::Parameter(format!("custom self-loop at {a}")))?;
            if e.v() >= n || p.separates(a, b) {
                return param(format!("custom edge ({a}, {b}) crosses the partition or leaves 0..{n}"));
            }
            inside.insert(e);
        }
    }

    let kept = apply_deletion(&realized, &adversary.cross_deletion, n, &mut rng);
    let graph = Graph::from_edge_set(n, &inside.union(&kept))?;
    let inst = PlantedInstance {
        graph,
        hidden: p.clone(),
        epsilon,
        realized_cross: realized,
        kept_cross: kept,
        adversary: adversary.clone(),
        seed,
        expander: None,
    };
    debug_assert!(inst.validate().is_ok());
    Ok(inst)
}

fn inside_edges(strategy: &InsideStrategy, part: &VertexSet, rng: &mut Rng) -> Result<Vec<Edge>> {
    let ids = part.as_slice();
    let s = ids.len();
    let map = |(a, b): (usize, usize)| Edge::new(ids[a], ids[b]).expect("distinct");
    Ok(match *strategy {
        InsideStrategy::Empty | InsideStrategy::Custom { .. } => Vec::new(),
        InsideStrategy::Cliques => (0..s).flat_map(|a| (a + 1..s).map(move |b| (a, b))).map(map).collect(),
        InsideStrategy::ErdosRenyi { p } => {
            let mut out = Vec::new();
            for a in 0..s {
                for b in a + 1..s {
                    if rng.gen_bool(p) {
                        out.push(map((a, b)));
                    }
                }
            }
            out
        }
        InsideStrategy::RegularExpander { d } => random_regular(s, d, rng)?.into_iter().map(map).collect(),
    })
}

fn apply_deletion(realized: &EdgeSet, rule: &CrossDeletion, n: usize, rng: &mut Rng) -> EdgeSet {
    match *rule {
        CrossDeletion::Fraction { f } => {
            let mut edges: Vec<Edge> = realized.iter().collect();
            let del = ((f * edges.len() as f64).round() as usize).min(edges.len());
            let (removed, _) = edges.partial_shuffle(rng, del);
            let removed: BTreeSet<Edge> = removed.iter().copied().collect();
            realized.iter().filter(|e| !removed.contains(e)).collect()
        }
        CrossDeletion::TargetedVertices { count } => {
            let mut ids: Vec<usize> = (0..n).collect();
            let (chosen, _) = ids.partial_shuffle(rng, count.min(n));
            let mask = VertexSet::from(chosen.to_vec()).mask(n);
            realized.iter().filter(|e| !mask[e.u()] && !mask[e.v()]).collect()
        }
    }
}

/// Uniform-ish random `d`-regular simple graph on `m` vertices: configuration
/// model pairing followed by degree-preserving switches that remove loops and
/// parallel edges. Dense degrees go through the complement.
pub fn random_regular(m: usize, d: usize, rng: &mut Rng) -> Result<Vec<(usize, usize)>> {
    if d == 0 {
        return Ok(Vec::new());
    }
    if d >= m {
        return param(format!("degree {d} needs more than {m} vertices"));
    }
    if (m * d) % 2 == 1 {
        return param(format!("m·d = {m}·{d} is odd; no {d}-regular graph exists"));
    }
    if 2 * d > m - 1 {
        let sparse: BTreeSet<Edge> =
            random_regular(m, m - 1 - d, rng)?.into_iter().map(|(a, b)| Edge::new(a, b).expect("simple")).collect();
        return Ok((0..m)
            .flat_map(|a| (a + 1..m).map(move |b| (a, b)))
            .filter(|&(a, b)| !sparse.contains(&Edge::new(a, b).expect("a < b")))
            .collect());
    }
    const RESTARTS: usize = 20;
    for _ in 0..RESTARTS {
        if let Some(edges) = pairing_with_repair(m, d, rng) {
            return Ok(edges);
        }
    }
    Err(Error::Parameter(format!("no simple {d}-regular graph on {m} vertices after {RESTARTS} restarts")))
}

fn pairing_with_repair(m: usize, d: usize, rng: &mut Rng) -> Option<Vec<(usize, usize)>> {
    let mut points: Vec<usize> = (0..m).flat_map(|v| std::iter::repeat(v).take(d)).collect();
    points.shuffle(rng);
    let mut pairs: Vec<(usize, usize)> = points.chunks(2).map(|c| (c[0].min(c[1]), c[0].max(c[1]))).collect();
    let mut mult: HashMap<(usize, usize), usize> = HashMap::new();
    for &p in &pairs {
        *mult.entry(p).or_default() += 1;
    }
    let is_bad = |p: (usize, usize), mult: &HashMap<(usize, usize), usize>| p.0 == p.1 || mult[&p] > 1;
    let budget = 100 * pairs.len() + 1000;
    for _ in 0..budget {
        let Some(i) = (0..pairs.len()).find(|&i| is_bad(pairs[i], &mult)) else {
            return Some(pairs);
        };
        let j = rng.gen_range(0..pairs.len());
        if i == j {
            continue;
        }
        let (a, b) = pairs[i];
        let (c, e) = pairs[j];
        let (x, y) = if rng.gen_bool(0.5) { ((a, c), (b, e)) } else { ((a, e), (b, c)) };
        let x = (x.0.min(x.1), x.0.max(x.1));
        let y = (y.0.min(y.1), y.0.max(y.1));
        if x.0 == x.1 || y.0 == y.1 || x == y || mult.get(&x).copied().unwrap_or(0) > 0 || mult.get(&y).copied().unwrap_or(0) > 0 {
            continue;
        }
        for old in [pairs[i], pairs[j]] {
            *mult.get_mut(&old).expect("tracked") -= 1;
        }
        *mult.entry(x).or_default() += 1;
        *mult.entry(y).or_default() += 1;
        pairs[i] = x;
        pairs[j] = y;
    }
    None
}

/// Planted algebraic-expander instance: a random `d`-regular graph on a
/// hidden side of size `ρn`, the other side filled by `other_side`, and
/// exactly `c` uniformly sampled cross edges.
pub fn generate_planted_expander(
    n: usize,
    rho: f64,
    d: usize,
    c: usize,
    other_side: &InsideStrategy,
    seed: u64,
) -> Result<PlantedInstance> {
    let size = rho * n as f64;
    let a = size.round() as usize;
    if (size - a as f64).abs() > 1e-9 || a == 0 || a >= n {
        return param(format!("ρn = {size} must be an integer in 1..{n}"));
    }
    if d >= a {
        return param(format!("degree {d} must be below ρn = {a}"));
    }
    let mut rng = rng::substream(seed, rng::INSTANCE);
    let hidden = random_partition(&[a, n - a], &mut rng)?;
    let p1 = hidden.part(0).clone();
    let p2 = hidden.part(1).clone();

    let g1: Vec<Edge> = random_regular(a, d, &mut rng)?
        .into_iter()
        .map(|(x, y)| Edge::new(p1.as_slice()[x], p1.as_slice()[y]).expect("distinct"))
        .collect();
    let m1 = g1.len();
    let mut edges: EdgeSet = g1.into_iter().collect();
    edges.extend(inside_edges(other_side, &p2, &mut rng)?);

    let total = a * (n - a);
    if c > total {
        return param(format!("{c} cross edges requested, only {total} cross pairs"));
    }
    let mut cross = EdgeSet::new();
    if 2 * c > total {
        let mut all: Vec<usize> = (0..total).collect();
        let (chosen, _) = all.partial_shuffle(&mut rng, c);
        for &k in chosen.iter() {
            cross.insert(Edge::new(p1.as_slice()[k / (n - a)], p2.as_slice()[k % (n - a)]).expect("distinct"));
        }
    } else {
        while cross.len() < c {
            let x = p1.as_slice()[rng.gen_range(0..a)];
            let y = p2.as_slice()[rng.gen_range(0..n - a)];
            cross.insert(Edge::new(x, y).expect("distinct"));
        }
    }
    edges.extend(cross.iter());
    let graph = Graph::from_edge_set(n, &edges)?;
    let (side, _) = graph.induced(&p1);
    let lambda2 = spectral::lambda2(&side);

    let inst = PlantedInstance {
        graph,
        epsilon: c as f64 / total as f64,
        hidden,
        realized_cross: cross.clone(),
        kept_cross: cross,
        adversary: AdversaryStrategy::new(other_side.clone(), 0.0),
        seed,
        expander: Some(ExpanderInfo { rho, degree: d, cross_edges: c, m: m1, lambda2 }),
    };
    debug_assert!(inst.validate().is_ok());
    Ok(inst)
}

/// Terminal pairs `(s_i, t_i)`, stored with `s_i < t_i`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MulticutDemands {
    pub pairs: Vec<Edge>,
}

impl MulticutDemands {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let pairs = pairs
            .into_iter()
            .map(|(s, t)| Edge::new(s, t).ok_or_else(|| Error::Parameter(format!("demand ({s}, {t}) has equal endpoints"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(MulticutDemands { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn check_range(&self, n: usize) -> Result<()> {
        match self.pairs.iter().find(|e| e.v() >= n) {
            Some(e) => param(format!("demand ({}, {}) outside 0..{n}", e.u(), e.v())),
            None => Ok(()),
        }
    }
}

/// `k` distinct cross pairs of the hidden partition, uniformly at random.
pub fn generate_multicut_demands(inst: &PlantedInstance, k: usize, seed: u64) -> Result<MulticutDemands> {
    let p = &inst.hidden;
    if p.num_parts() < 2 {
        return param("demands need a partition with at least two parts");
    }
    if k == 0 {
        return param("k must be positive");
    }
    let total = p.cross_pair_count();
    if k as u64 > total {
        return param(format!("{k} demands requested, only {total} cross pairs"));
    }
    let mut rng = rng::substream(seed, "demands");
    let n = p.n();
    let pairs = if (k as u64) * 4 >= total {
        let mut all: Vec<Edge> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| p.separates(u, v))
            .map(|(u, v)| Edge::new(u, v).expect("u < v"))
            .collect();
        let (chosen, _) = all.partial_shuffle(&mut rng, k);
        chosen.to_vec()
    } else {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(k);
        while out.len() < k {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            if !p.separates(u, v) {
                continue;
            }
            let e = Edge::new(u, v).expect("different parts");
            if seen.insert(e) {
                out.push(e);
            }
        }
        out
    };
    Ok(MulticutDemands { pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cut_edges, edge_boundary};

    fn balanced(n: usize) -> Partition {
        Partition::from_parts(n, vec![(0..n / 2).collect(), (n / 2..n).collect()]).unwrap()
    }

    #[test]
    fn epsilon_must_be_open_unit() {
        let p = balanced(10);
        for eps in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(matches!(generate_sr(&p, eps, &AdversaryStrategy::passive(), 1), Err(Error::Parameter(_))));
        }
    }

    #[test]
    fn vanishing_epsilon_gives_inside_edges_only() {
        let p = balanced(100);
        let adv = AdversaryStrategy::new(InsideStrategy::Cliques, 0.0);
        let inst = generate_sr(&p, 1e-9, &adv, 3).unwrap();
        assert!(inst.realized_cross.is_empty());
        assert_eq!(inst.graph.m(), 2 * 50 * 49 / 2);
    }

    #[test]
    fn full_deletion_with_empty_inside_is_edgeless() {
        let inst = generate_sr(&balanced(40), 0.5, &AdversaryStrategy::new(InsideStrategy::Empty, 1.0), 9).unwrap();
        assert_eq!(inst.graph.m(), 0);
        assert!(!inst.realized_cross.is_empty());
    }

    #[test]
    fn realized_count_is_binomial() {
        let inst = generate_sr(&balanced(400), 0.1, &AdversaryStrategy::passive(), 11).unwrap();
        let mean = 0.1 * 40_000.0;
        let sd = (40_000.0f64 * 0.1 * 0.9).sqrt();
        assert!((inst.realized_cross.len() as f64 - mean).abs() <= 4.0 * sd);
    }

    #[test]
    fn sr_cost_examples() {
        assert!((sr_cost(&balanced(20), 0.3) - 0.3 * 100.0).abs() < 1e-12);
        let p = Partition::from_parts(20, vec![(0..5).collect(), (5..20).collect()]).unwrap();
        assert!((sr_cost(&p, 0.2) - 0.2 * 0.25 * 0.75 * 400.0).abs() < 1e-9);
        assert_eq!(sr_cost(&Partition::single(7), 0.5), 0.0);
    }

    #[test]
    fn invariants_hold_for_every_strategy() {
        let p = random_partition(&[12, 9, 9], &mut rng::substream(0, "t")).unwrap();
        let strategies = [
            InsideStrategy::Empty,
            InsideStrategy::ErdosRenyi { p: 0.4 },
            InsideStrategy::Cliques,
            InsideStrategy::RegularExpander { d: 4 },
        ];
        for (i, s) in strategies.into_iter().enumerate() {
            for del in [CrossDeletion::Fraction { f: 0.3 }, CrossDeletion::TargetedVertices { count: 5 }] {
                let adv = AdversaryStrategy { inside: s.clone(), cross_deletion: del };
                let inst = generate_sr(&p, 0.3, &adv, i as u64).unwrap();
                inst.validate().unwrap();
                let cut = cut_edges(&inst.hidden, &inst.graph.edge_set()).unwrap();
                assert!(cut.is_subset(&inst.realized_cross));
            }
        }
    }

    #[test]
    fn custom_edges_must_stay_inside() {
        let p = balanced(6);
        let ok = AdversaryStrategy::new(InsideStrategy::Custom { edges: vec![(0, 1), (4, 5)] }, 0.0);
        let inst = generate_sr(&p, 0.2, &ok, 1).unwrap();
        assert!(inst.graph.has_edge(0, 1) && inst.graph.has_edge(4, 5));
        let bad = AdversaryStrategy::new(InsideStrategy::Custom { edges: vec![(0, 5)] }, 0.0);
        assert!(generate_sr(&p, 0.2, &bad, 1).is_err());
    }

    #[test]
    fn exact_fraction_deletion() {
        let inst = generate_sr(&balanced(60), 0.4, &AdversaryStrategy::new(InsideStrategy::Empty, 0.3), 5).unwrap();
        let r = inst.realized_cross.len();
        assert_eq!(inst.kept_cross.len(), r - (0.3 * r as f64).round() as usize);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let adv = AdversaryStrategy { inside: InsideStrategy::ErdosRenyi { p: 0.37 }, cross_deletion: CrossDeletion::Fraction { f: 0.1 } };
        let inst = generate_sr(&balanced(30), 0.123456789, &adv, 77).unwrap();
        let text = inst.to_json().unwrap();
        let back = PlantedInstance::from_json(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.to_json().unwrap(), text);
        let exp = generate_planted_expander(40, 0.5, 4, 7, &InsideStrategy::Cliques, 2).unwrap();
        assert_eq!(PlantedInstance::from_json(&exp.to_json().unwrap()).unwrap(), exp);
    }

    #[test]
    fn regular_generator_is_simple_and_regular() {
        let mut r = rng::substream(4, "t");
        for (m, d) in [(10, 3), (30, 4), (300, 64), (20, 19), (20, 15), (7, 6)] {
            let g = Graph::new(m, random_regular(m, d, &mut r).unwrap()).unwrap();
            assert_eq!(g.is_regular(), Some(d), "m={m} d={d}");
        }
        assert!(random_regular(5, 3, &mut r).is_err());
        assert!(random_regular(5, 5, &mut r).is_err());
    }

    #[test]
    fn planted_expander_examples() {
        let k = generate_planted_expander(20, 0.5, 9, 0, &InsideStrategy::Cliques, 1).unwrap();
        let info = k.expander.as_ref().unwrap();
        assert!((info.lambda2 - 10.0 / 9.0).abs() < 1e-9);
        assert_eq!(edge_boundary(k.hidden.part(0), &k.graph).unwrap(), 0);
        assert!(cut_edges(&k.hidden, &k.graph.edge_set()).unwrap().is_empty());

        let a = generate_planted_expander(400, 0.5, 16, 50, &InsideStrategy::RegularExpander { d: 16 }, 8).unwrap();
        let b = generate_planted_expander(400, 0.5, 16, 50, &InsideStrategy::RegularExpander { d: 16 }, 8).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(cut_edges(&a.hidden, &a.graph.edge_set()).unwrap().len(), 50);
        assert!(generate_planted_expander(10, 0.35, 2, 0, &InsideStrategy::Empty, 1).is_err());
    }

    #[test]
    fn demands_cross_parts_without_repeats() {
        let inst = generate_sr(&balanced(6), 0.5, &AdversaryStrategy::passive(), 1).unwrap();
        let one = generate_multicut_demands(&inst, 1, 4).unwrap();
        assert!(inst.hidden.separates(one.pairs[0].u(), one.pairs[0].v()));
        let all = generate_multicut_demands(&inst, 9, 4).unwrap();
        let expected: BTreeSet<Edge> = (0..3).flat_map(|u| (3..6).map(move |v| Edge::new(u, v).unwrap())).collect();
        assert_eq!(all.pairs.iter().copied().collect::<BTreeSet<_>>(), expected);
        assert!(generate_multicut_demands(&inst, 10, 4).is_err());
        assert_eq!(generate_multicut_demands(&inst, 5, 4).unwrap(), generate_multicut_demands(&inst, 5, 4).unwrap());
    }
}
