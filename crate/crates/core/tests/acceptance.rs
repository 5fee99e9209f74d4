//! Acceptance campaign. Prints one line per criterion and exits nonzero when
//! an attainable criterion fails.
//!
//! `ACCEPTANCE_ONLY=3,5` runs a subset.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semicut::embeddings::*;
use semicut::expander::{algebraic_expansion, planted_expander_balanced_cut, planted_expander_sse};
use semicut::graph::cut_cost_restricted;
use semicut::instances::*;
use semicut::recover::{purify, recovery_error, RecoverOptions, MIN_GAIN};
use semicut::solvers::*;
use semicut::sparsify::{sparsify, SparsifyOptions, DEFAULT_D};
use semicut::verify::*;
use semicut::{Graph, Partition, VertexSet};

/// Fallback when criterion 6 runs without criterion 5.
const FROZEN_C_SC: f64 = 0.35;
const SEEDS: u64 = 10;

/// Criteria whose failure is reported without failing the run.
const KNOWN_UNATTAINABLE: &[usize] = &[];

struct Outcome {
    pass: bool,
    detail: String,
}

#[derive(Default)]
struct Shared {
    /// Triangle residuals of every solve with `n ≤ 200`.
    triangle: Vec<(usize, TriangleAudit, f64)>,
    c_sc: Option<f64>,
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn planted(n: usize, rho: f64, eps: f64, seed: u64) -> PlantedInstance {
    let p = random_bipartition(n, rho, seed).unwrap();
    generate_sr(&p, eps, &AdversaryStrategy::new(InsideStrategy::Cliques, 0.3), seed).unwrap()
}

fn random_graph(n: usize, rng: &mut ChaCha8Rng) -> Graph {
    let p = rng.gen_range(0.15..0.7);
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    Graph::new(n, pairs.into_iter().filter(|_| rng.gen_bool(p))).unwrap()
}

fn criterion1(shared: &mut Shared) -> Outcome {
    let mut runs = 0;
    let mut failures = Vec::new();
    let mut slowest = 0.0f64;
    for n in [50usize, 100, 200] {
        for seed in 0..SEEDS {
            let inst = planted(n, 0.5, 0.1, seed);
            let demands = generate_multicut_demands(&inst, 10, seed).unwrap();
            let kinds = [ModelKind::BalancedCut, ModelKind::SseCrude { rho: 0.25 }, ModelKind::Multicut { demands }];
            for kind in kinds {
                let t = Instant::now();
                let out = sparsify(&inst.graph, &kind, &SparsifyOptions::default(), seed).unwrap();
                let secs = t.elapsed().as_secs_f64();
                let audit = invariant_audit(&out, &inst.graph, &kind);
                runs += 1;
                if n == 200 {
                    slowest = slowest.max(secs);
                }
                for it in &out.trace {
                    shared.triangle.push((n, it.report.triangle_audit, it.report.max_violation.triangle));
                }
                if !audit.passed() || audit.degraded {
                    failures.push(format!("{} n={n} seed={seed}: degraded={} {:?}", kind.name(), audit.degraded, audit.failures.first()));
                }
            }
        }
    }
    let pass = failures.is_empty() && slowest <= 120.0;
    Outcome {
        pass,
        detail: format!("{}/{runs} audits clean, slowest n=200 run {slowest:.1}s (limit 120s){}", runs - failures.len(), fmt_fail(&failures)),
    }
}

fn fmt_fail(f: &[String]) -> String {
    if f.is_empty() {
        String::new()
    } else {
        format!("; first failures: {}", f.iter().take(3).cloned().collect::<Vec<_>>().join(" | "))
    }
}

fn criterion2() -> Outcome {
    let opts = PipelineOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = Vec::new();
    let (mut worst_bc, mut worst_mc, mut worst_sse) = (0.0f64, 0.0f64, 0.0f64);
    let ratio = |got: usize, opt: usize| if opt == 0 { if got == 0 { 1.0 } else { f64::INFINITY } } else { got as f64 / opt as f64 };
    for i in 0..200u64 {
        let n = [6, 8, 10, 12][i as usize % 4];
        let g = random_graph(n, &mut rng);
        let (_, opt) = brute_force_balanced_cut(&g).unwrap();
        let r = balanced_cut(&g, &opts, i).unwrap();
        let small = r.side.len().min(n - r.side.len());
        worst_bc = worst_bc.max(ratio(r.boundary_cost, opt));
        if r.boundary_cost > 10 * opt || 5 * small < n {
            failures.push(format!("balanced-cut #{i}: cost {} opt {opt} small side {small} of {n}", r.boundary_cost));
        }
    }
    for i in 0..200u64 {
        let n = 5 + i as usize % 6;
        let g = random_graph(n, &mut rng);
        let k = rng.gen_range(1..=3);
        let mut pairs = BTreeSet::new();
        while pairs.len() < k {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a != b {
                pairs.insert((a.min(b), a.max(b)));
            }
        }
        let demands = MulticutDemands::new(pairs).unwrap();
        let (_, opt) = brute_force_multicut(&g, &demands).unwrap();
        let r = multicut(&g, &demands, &opts, i).unwrap();
        let p = r.partition.as_ref().unwrap();
        let separated = demands.pairs.iter().all(|e| p.separates(e.u(), e.v()));
        worst_mc = worst_mc.max(ratio(r.boundary_cost, opt));
        if !separated || r.boundary_cost > 10 * opt {
            failures.push(format!("multicut #{i}: cost {} opt {opt} separated {separated}", r.boundary_cost));
        }
    }
    for i in 0..200u64 {
        let n = [8, 12][i as usize % 2];
        let g = random_graph(n, &mut rng);
        let (_, opt) = brute_force_sse(&g, 0.25).unwrap();
        let r = sse(&g, 0.25, &opts, i).unwrap();
        worst_sse = worst_sse.max(ratio(r.boundary_cost, opt));
        if r.boundary_cost > 10 * opt {
            failures.push(format!("sse #{i}: cost {} opt {opt}", r.boundary_cost));
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "{} of 600 outside 10x; worst ratios balanced-cut {worst_bc:.2}, multicut {worst_mc:.2}, sse {worst_sse:.2}{}",
            failures.len(),
            fmt_fail(&failures)
        ),
    }
}

fn criterion3() -> Outcome {
    let n = 400;
    let opts = PipelineOptions::default();
    let mut ratios = Vec::new();
    let mut failures = Vec::new();
    let mut slowest = 0.0f64;
    for seed in 0..SEEDS {
        let inst = planted(n, 0.5, 0.1, seed);
        let t = Instant::now();
        let r = balanced_cut(&inst.graph, &opts, seed).unwrap().with_reference(inst.sr_cost());
        slowest = slowest.max(t.elapsed().as_secs_f64());
        let small = r.side.len().min(n - r.side.len());
        ratios.push(r.diagnostics.ratio.unwrap());
        if 10 * small < n || r.diagnostics.degraded {
            failures.push(format!("seed {seed}: small side {small}, degraded {}", r.diagnostics.degraded));
        }
    }
    let (med, mx) = (median(&ratios), max(&ratios));
    Outcome {
        pass: med <= 3.0 && mx <= 6.0 && failures.is_empty() && slowest <= 300.0,
        detail: format!("boundary/sr_cost median {med:.3} (<= 3), max {mx:.3} (<= 6), slowest {slowest:.1}s{}", fmt_fail(&failures)),
    }
}

fn criterion4() -> Outcome {
    let (n, rho) = (400, 0.25);
    let rn = rho * n as f64;
    let opts = PipelineOptions::default();
    let mut ratios = Vec::new();
    let mut failures = Vec::new();
    let mut case2_runs = 0;
    let mut chosen2 = 0;
    for seed in 0..SEEDS {
        let inst = planted(n, rho, 0.15, seed);
        let r = sse(&inst.graph, rho, &opts, seed).unwrap().with_reference(inst.sr_cost());
        ratios.push(r.diagnostics.ratio.unwrap());
        chosen2 += (r.diagnostics.case.as_deref() == Some("case-2")) as usize;
        let size = r.side.len() as f64;
        if size < rn / 4.0 || size > 2.0 * rn || r.diagnostics.degraded {
            failures.push(format!("seed {seed}: size {size}, degraded {}", r.diagnostics.degraded));
        }
        if let Some(c2) = &r.diagnostics.case2 {
            case2_runs += 1;
            if !(c2.bound_16_holds && c2.ratio_bound_holds) {
                failures.push(format!("seed {seed}: Case II bounds {c2:?}"));
            }
        }
    }
    let med = median(&ratios);
    Outcome {
        pass: med <= 3.0 && failures.is_empty(),
        detail: format!("boundary/sr_cost median {med:.3} (<= 3), max {:.3}, Case II extractions checked {case2_runs}, chosen {chosen2}{}", max(&ratios), fmt_fail(&failures)),
    }
}

fn criterion5(shared: &mut Shared) -> Outcome {
    let (n, eps) = (400, 0.05);
    let opts = PipelineOptions::default();
    let mut scaled = Vec::new();
    let mut failures = Vec::new();
    for seed in 0..SEEDS {
        let inst = planted(n, 0.5, eps, seed);
        let r = sparsest_cut(&inst.graph, &VertexSet::range(n), None, &opts, seed).unwrap();
        scaled.push(r.diagnostics.sparsity.unwrap() / (eps * n as f64));
        if r.diagnostics.degraded {
            failures.push(format!("seed {seed}: degraded"));
        }
    }
    let (med, mx) = (median(&scaled), max(&scaled));
    shared.c_sc = Some(med);
    Outcome {
        pass: med <= 3.0 && mx <= 6.0 && failures.is_empty(),
        detail: format!("sparsity/(eps n) median {med:.4} (<= 3), max {mx:.4} (<= 6); calibrated C_sc = {med:.4}{}", fmt_fail(&failures)),
    }
}

fn criterion6(shared: &Shared) -> Outcome {
    let (n, eps, eta, d) = (600, 0.02, 0.05, 64);
    let c_sc = shared.c_sc.unwrap_or(FROZEN_C_SC);
    let need = 4.0 * c_sc * eps * n as f64;
    let mut recovered = 0;
    let mut failures = Vec::new();
    let mut min_h = f64::INFINITY;
    for seed in 0..SEEDS {
        let p = random_bipartition(n, 0.5, seed).unwrap();
        let inst = generate_sr(&p, eps, &AdversaryStrategy::new(InsideStrategy::RegularExpander { d }, 0.3), seed).unwrap();
        for side in inst.hidden.parts() {
            let (h, _) = inst.graph.induced(side);
            let profile = algebraic_expansion(&h, true).unwrap();
            min_h = min_h.min(profile.lambda2 * d as f64 / 2.0);
        }
        let st = purify(&inst.graph, eps, eta, c_sc, &RecoverOptions::default(), seed).unwrap();
        let err = recovery_error(&st.x, &inst.hidden).unwrap();
        if err as f64 <= eta * n as f64 {
            recovered += 1;
        }
        if st.moves.iter().any(|m| m.delta_f < MIN_GAIN) {
            failures.push(format!("seed {seed}: a move gained less than 1/4"));
        }
        if st.t as u64 > st.step_bound {
            failures.push(format!("seed {seed}: {} steps > bound {}", st.t, st.step_bound));
        }
    }
    Outcome {
        pass: recovered >= 8 && failures.is_empty() && min_h >= need,
        detail: format!(
            "recovered within eta n in {recovered}/10 (>= 8); C_sc {c_sc:.4}; certified h >= {min_h:.2} vs required {need:.2}{}",
            fmt_fail(&failures)
        ),
    }
}

fn criterion7() -> Outcome {
    let (n, c) = (400usize, 250usize);
    let mut bc_ok = 0;
    let mut sse_ok = 0;
    let mut eps_lambda = (0.0, 0.0);
    let mut failures = Vec::new();
    for seed in 0..SEEDS {
        let inst = generate_planted_expander(n, 0.5, 199, c, &InsideStrategy::Cliques, seed).unwrap();
        let info = inst.expander.clone().unwrap();
        eps_lambda = (c as f64 / info.m as f64, info.lambda2 / 64.0);
        let so = SolveOptions { seed, ..SolveOptions::default() };
        let bc = planted_expander_balanced_cut(&inst.graph, &so).unwrap();
        let s = bc.side.len() as f64;
        let bound = bc.diagnostics.certificate_bound.unwrap() + 1e-3;
        if s >= n as f64 / 8.0 && s <= 0.8 * n as f64 && bc.boundary_cost as f64 <= bound && !bc.diagnostics.degraded {
            bc_ok += 1;
        } else {
            failures.push(format!("balanced seed {seed}: |S| {s}, boundary {} vs {bound:.1}", bc.boundary_cost));
        }
        let rho = 0.5;
        let rn = rho * n as f64;
        match planted_expander_sse(&inst.graph, rho, &so) {
            Ok(r) => {
                let s = r.side.len() as f64;
                if s >= rn / 4.0 && s <= 2.0 * rn && r.boundary_cost <= 33 * c && !r.diagnostics.degraded {
                    sse_ok += 1;
                } else {
                    failures.push(format!("sse seed {seed}: |S| {s}, boundary {}", r.boundary_cost));
                }
            }
            Err(e) => failures.push(format!("sse seed {seed}: {e}")),
        }
    }
    let eps_ok = eps_lambda.0 < eps_lambda.1;
    Outcome {
        pass: bc_ok == 10 && sse_ok >= 9 && eps_ok,
        detail: format!(
            "eps = c/|E1| = {:.5} < lambda/64 = {:.5}; balanced {bc_ok}/10, sse {sse_ok}/10 (>= 9){}",
            eps_lambda.0,
            eps_lambda.1,
            fmt_fail(&failures)
        ),
    }
}

fn criterion8() -> Outcome {
    let (n, eps, d) = (256usize, 0.15, DEFAULT_D);
    let log_d = (d as f64).log2();
    let mut checked = 0;
    let mut not_applicable = 0;
    let mut nonempty = 0;
    let mut failures = Vec::new();
    let mut fuzz_hits = 0;
    let mut fuzz_best = 0usize;
    for seed in 0..SEEDS {
        let inst = planted(n, 0.5, eps, seed);
        let x = inst.sr_cost().max(n as f64 * d as f64 * log_d * log_d);
        let out = sparsify(&inst.graph, &ModelKind::BalancedCut, &SparsifyOptions { d, ..Default::default() }, seed).unwrap();
        for it in &out.trace {
            let r = geometric_expansion_check(&inst.realized_cross, &it.phi, &it.m_after, it.delta, x).unwrap();
            checked += 1;
            nonempty += !it.m_after.is_empty() as usize;
            match r {
                GeoCheck::NotApplicable { .. } => not_applicable += 1,
                GeoCheck::Violation { short_edges, bound } => {
                    failures.push(format!("seed {seed} t {}: {short_edges} short edges > {bound:.1}", it.t))
                }
                GeoCheck::Pass { .. } => {}
            }
            let fz = fuzz_geometric_expansion(&inst.graph, &inst.realized_cross, it.delta, x, 8, seed).unwrap();
            fuzz_best = fuzz_best.max(fz.best_short_edges);
            fuzz_hits += fz.counterexample as usize;
        }
    }
    Outcome {
        pass: failures.is_empty() && checked > 0,
        detail: format!(
            "{checked} triples checked ({not_applicable} not applicable, {nonempty} with nonempty M_t), {} violations; fuzzer (reported only): {fuzz_hits} counterexamples, best short-edge count {fuzz_best}{}",
            failures.len(),
            fmt_fail(&failures)
        ),
    }
}

fn locality_instances() -> usize {
    let mut passed = 0;
    for seed in 0..20u64 {
        let n = 12 + 3 * (seed as usize % 7);
        let rho = 1.0 / 3.0;
        let p = random_bipartition(n, rho, seed).unwrap();
        let eps = 0.1 + 0.02 * (seed % 5) as f64;
        let inst = generate_sr(&p, eps, &AdversaryStrategy::new(InsideStrategy::ErdosRenyi { p: 0.6 }, 0.2), seed).unwrap();
        let s = inst.hidden.part(0).clone();
        let model = build_model(ModelKind::SseCrude { rho }, &inst.graph).unwrap();
        let opts = SolveOptions { seed, ..SolveOptions::default() };
        let (phi, report) = solve(&model, &opts).unwrap();
        let edges = inst.graph.edge_set();
        let sdp_local = sdp_cost_restricted(&phi, &edges, &s).unwrap();
        let planted = Partition::bipartition(n, &s).unwrap();
        let cut_local = cut_cost_restricted(&planted, &edges, &s).unwrap() as f64;
        let moved = locality_transform(&phi, &s, rho).unwrap();
        let feasible = check_feasibility(&moved, &model, 1e-9).is_feasible();
        let slack = opts.tol_obj * report.objective.max(1.0)
            + if report.converged { 0.0 } else { report.repair_weight * edges.len() as f64 };
        if feasible && sdp_local <= cut_local + slack + 1e-6 {
            passed += 1;
        }
    }
    passed
}

fn criterion9(shared: &mut Shared) -> Outcome {
    let mut notes = Vec::new();
    let opts = SolveOptions::default();
    let pair = Graph::path(2);
    let (phi, rep) = solve(&build_model(ModelKind::BalancedCut, &pair).unwrap(), &opts).unwrap();
    let antipodal = (phi.dist(0, 1) - 4.0).abs() <= 1e-6 && (rep.objective - 1.0).abs() <= 1e-6;
    let (phi, rep) = solve(&build_model(ModelKind::SseCrude { rho: 0.5 }, &pair).unwrap(), &opts).unwrap();
    let orthogonal = phi.inner(0, 1).abs() <= 1e-6 && (rep.objective - 1.0).abs() <= 1e-6;
    if !antipodal || !orthogonal {
        notes.push(format!("forced cases antipodal {antipodal} orthogonal {orthogonal}"));
    }

    if shared.triangle.is_empty() {
        for seed in 0..3 {
            let inst = planted(200, 0.5, 0.1, seed);
            let out = sparsify(&inst.graph, &ModelKind::BalancedCut, &SparsifyOptions::default(), seed).unwrap();
            for it in &out.trace {
                shared.triangle.push((200, it.report.triangle_audit, it.report.max_violation.triangle));
            }
        }
    }
    let solves = shared.triangle.len();
    let full = shared.triangle.iter().all(|t| t.0 <= 200 && t.1 == TriangleAudit::Full);
    let worst = shared.triangle.iter().map(|t| t.2).fold(0.0, f64::max);
    if !full || worst > 1e-5 {
        notes.push(format!("triangle audit full {full}, worst {worst:.2e}"));
    }

    let local = locality_instances();
    if local != 20 {
        notes.push(format!("locality {local}/20"));
    }
    Outcome {
        pass: notes.is_empty(),
        detail: format!(
            "forced n=2 cases exact: {}; {solves} solves fully audited, worst triangle residual {worst:.2e} (<= 1e-5); locality {local}/20{}",
            antipodal && orthogonal,
            fmt_fail(&notes)
        ),
    }
}

fn main() {
    let only: Option<BTreeSet<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |i: usize| only.as_ref().map_or(true, |o| o.contains(&i));
    let mut shared = Shared::default();
    let mut hard_failures = 0;
    for id in 1..=9usize {
        if !wanted(id) {
            continue;
        }
        let t = Instant::now();
        let outcome = match id {
            1 => criterion1(&mut shared),
            2 => criterion2(),
            3 => criterion3(),
            4 => criterion4(),
            5 => criterion5(&mut shared),
            6 => criterion6(&shared),
            7 => criterion7(),
            8 => criterion8(),
            _ => criterion9(&mut shared),
        };
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {id}: {verdict} ({:.0}s) {}", t.elapsed().as_secs_f64(), outcome.detail);
        if !outcome.pass && !KNOWN_UNATTAINABLE.contains(&id) {
            hard_failures += 1;
        }
    }
    if hard_failures > 0 {
        std::process::exit(1);
    }
}
