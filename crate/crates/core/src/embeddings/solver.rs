//! Low-rank augmented-Lagrangian solver for the ℓ²₂ SDP models.
//!
//! The Gram matrix is factored as `Y Yᵀ` with `Y` an `n × k` matrix whose
//! rows live on the unit sphere, so unit norms hold by construction. The
//! remaining families enter an augmented Lagrangian; triangle inequalities
//! are separated lazily from a full scan of the current iterate. For the
//! crude SSE model the rows are additionally kept in the nonnegative
//! orthant, which makes every inner product nonnegative.
//!
//! The final iterate is repaired by mixing with a private orthonormal (or
//! regular-simplex) block: `φ'(u) = (√(1−α)·φ(u), √α·e_u)`. Distances become
//! `(1−α)d + αD`, which removes any residual triangle violation and, for the
//! crude SSE model, any residual spreading violation.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_feasibility, dot, global_spreading_violation, Embedding, ModelKind, SdpModel, TriangleAudit, FULL_AUDIT_MAX_N};
use crate::error::{param, Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_outer: 80, max_inner: 100 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol_feas: f64,
    pub tol_obj: f64,
    pub budget: Budget,
    pub seed: u64,
    /// Full rank and every triangle constraint from the start; `n ≤ 40` only.
    pub cross_check: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol_feas: 1e-5, tol_obj: 1e-4, budget: Budget::default(), seed: 0, cross_check: false }
    }
}

pub const CROSS_CHECK_MAX_N: usize = 40;

/// Largest violation per constraint family, in the units of
/// [`super::Violation`]. Families absent from the model are `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FamilyMaxima {
    pub unit_norm: f64,
    pub triangle: f64,
    pub spreading: Option<f64>,
    pub nonnegativity: Option<f64>,
    pub demand: Option<f64>,
}

impl FamilyMaxima {
    pub fn max(&self) -> f64 {
        [Some(self.unit_norm), Some(self.triangle), self.spreading, self.nonnegativity, self.demand]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub model: String,
    pub objective: f64,
    pub max_violation: FamilyMaxima,
    pub triangle_audit: TriangleAudit,
    pub iterations: usize,
    pub outer_iterations: usize,
    pub rank: usize,
    pub restarts: usize,
    pub active_triangles: usize,
    /// Mixing weight `α` of the final repair; zero when none was needed.
    pub repair_weight: f64,
    pub converged: bool,
}

/// Multiple of `⌈log₂ n⌉ + 4` used as the starting rank.
const RANK_FACTOR: usize = 4;
const MU_START: f64 = 10.0;
const MU_MAX: f64 = 1e7;
const MAX_REPAIR_FOR_CONVERGED: f64 = 0.01;

/// Per-vertex triangle candidates kept during one separation scan.
const PER_VERTEX_CANDIDATES: usize = 64;
/// Slack (Gram units) beyond which an unpriced triangle leaves the active set.
const PRUNE_SLACK: f64 = 1e-2;

struct Ctx<'a> {
    n: usize,
    kind: &'a ModelKind,
    adj: Vec<Vec<usize>>,
    /// Objective weight after normalizing by average degree.
    c: f64,
    nonneg: bool,
}

#[derive(Default)]
struct Duals {
    mean: Vec<f64>,
    spread: Vec<f64>,
    demand: Vec<f64>,
    tri: Vec<f64>,
}

#[derive(Default)]
struct Active {
    tris: Vec<[usize; 3]>,
    seen: HashSet<[usize; 3]>,
}

impl Active {
    fn add(&mut self, t: [usize; 3], duals: &mut Duals) -> bool {
        if self.seen.insert(t) {
            self.tris.push(t);
            duals.tri.push(0.0);
            true
        } else {
            false
        }
    }

    /// Drops triangles with a zero multiplier and slack above `slack`.
    fn prune(&mut self, y: &[f64], k: usize, duals: &mut Duals, slack: f64) {
        let mut keep_t = Vec::with_capacity(self.tris.len());
        let mut keep_d = Vec::with_capacity(self.tris.len());
        for (&t, &d) in self.tris.iter().zip(&duals.tri) {
            let [u, v, w] = t;
            let (yu, yv, yw) = (row(y, k, u), row(y, k, v), row(y, k, w));
            let g = dot(yu, yv) + dot(yv, yw) - dot(yu, yw) - 1.0;
            if d > 0.0 || g > -slack {
                keep_t.push(t);
                keep_d.push(d);
            } else {
                self.seen.remove(&t);
            }
        }
        self.tris = keep_t;
        duals.tri = keep_d;
    }
}

/// Solver-unit violations of the current iterate on its active constraints.
struct Residuals {
    spread: f64,
    demand: f64,
    tri: f64,
}

impl Residuals {
    fn max(&self) -> f64 {
        self.spread.max(self.demand).max(self.tri)
    }
}

fn row(y: &[f64], k: usize, u: usize) -> &[f64] {
    &y[u * k..(u + 1) * k]
}

fn column_sums(y: &[f64], k: usize, n: usize) -> Vec<f64> {
    let mut s = vec![0.0; k];
    for u in 0..n {
        for (a, b) in s.iter_mut().zip(row(y, k, u)) {
            *a += b;
        }
    }
    s
}

impl Ctx<'_> {
    /// Augmented Lagrangian value; writes the Euclidean gradient into `grad`.
    fn eval(&self, y: &[f64], k: usize, duals: &Duals, mu: f64, active: &Active, grad: &mut [f64]) -> f64 {
        let n = self.n;
        let c = self.c;
        let per_vertex: Vec<f64> = grad
            .par_chunks_mut(k)
            .enumerate()
            .map(|(u, g)| {
                g.iter_mut().for_each(|x| *x = 0.0);
                for &v in &self.adj[u] {
                    for (a, b) in g.iter_mut().zip(row(y, k, v)) {
                        *a += b;
                    }
                }
                let val = c * (self.adj[u].len() as f64 - dot(row(y, k, u), g));
                g.iter_mut().for_each(|x| *x *= -2.0 * c);
                val
            })
            .collect();
        let mut value: f64 = per_vertex.iter().sum();

        match self.kind {
            ModelKind::BalancedCut => {
                let s = column_sums(y, k, n);
                let h: Vec<f64> = s.iter().map(|x| x / n as f64).collect();
                let force: Vec<f64> = h.iter().zip(&duals.mean).map(|(h, l)| l + mu * h).collect();
                value += n as f64 * (dot(&duals.mean, &h) + 0.5 * mu * dot(&h, &h));
                for g in grad.chunks_mut(k) {
                    for (a, f) in g.iter_mut().zip(&force) {
                        *a += f;
                    }
                }
            }
            ModelKind::SseCrude { rho } => {
                let s = column_sums(y, k, n);
                let nf = n as f64;
                let mut q = vec![0.0; k];
                let mut p = vec![0.0; n];
                for u in 0..n {
                    let gu = dot(row(y, k, u), &s) / nf - rho;
                    let lam = duals.spread[u];
                    let pu = (lam + mu * gu).max(0.0);
                    value += (pu * pu - lam * lam) / (2.0 * mu);
                    p[u] = pu;
                    if pu > 0.0 {
                        for (a, b) in q.iter_mut().zip(row(y, k, u)) {
                            *a += pu * b;
                        }
                    }
                }
                for (u, g) in grad.chunks_mut(k).enumerate() {
                    for ((a, sv), qv) in g.iter_mut().zip(&s).zip(&q) {
                        *a += (p[u] * sv + qv) / nf;
                    }
                }
            }
            ModelKind::Multicut { demands } => {
                for (i, e) in demands.pairs.iter().enumerate() {
                    let (s, t) = (e.u(), e.v());
                    let h = dot(row(y, k, s), row(y, k, t));
                    let lam = duals.demand[i];
                    value += lam * h + 0.5 * mu * h * h;
                    let f = lam + mu * h;
                    for j in 0..k {
                        grad[s * k + j] += f * y[t * k + j];
                        grad[t * k + j] += f * y[s * k + j];
                    }
                }
            }
        }

        for (i, &[u, v, w]) in active.tris.iter().enumerate() {
            let (yu, yv, yw) = (row(y, k, u), row(y, k, v), row(y, k, w));
            let g = dot(yu, yv) + dot(yv, yw) - dot(yu, yw) - 1.0;
            let lam = duals.tri[i];
            let p = (lam + mu * g).max(0.0);
            value += (p * p - lam * lam) / (2.0 * mu);
            if p > 0.0 {
                for j in 0..k {
                    let (a, b, cc) = (y[u * k + j], y[v * k + j], y[w * k + j]);
                    grad[u * k + j] += p * (b - cc);
                    grad[v * k + j] += p * (a + cc);
                    grad[w * k + j] += p * (b - a);
                }
            }
        }
        value
    }

    /// Tangent (and, for the orthant, feasible) descent direction.
    fn project(&self, y: &[f64], k: usize, grad: &[f64], out: &mut [f64]) {
        out.par_chunks_mut(k).enumerate().for_each(|(u, o)| {
            let yu = row(y, k, u);
            let gu = &grad[u * k..(u + 1) * k];
            let r = dot(gu, yu);
            for j in 0..k {
                o[j] = gu[j] - r * yu[j];
                if self.nonneg && yu[j] <= 0.0 && o[j] > 0.0 {
                    o[j] = 0.0;
                }
            }
        });
    }

    fn retract(&self, y: &mut [f64], k: usize) {
        let nonneg = self.nonneg;
        y.par_chunks_mut(k).for_each(|r| normalize_row(r, nonneg));
    }

    fn residuals(&self, y: &[f64], k: usize, active: &Active) -> Residuals {
        let n = self.n;
        let spread = match self.kind {
            ModelKind::BalancedCut => {
                let s = column_sums(y, k, n);
                dot(&s, &s) / (n as f64 * n as f64)
            }
            ModelKind::SseCrude { rho } => {
                let s = column_sums(y, k, n);
                (0..n).map(|u| dot(row(y, k, u), &s) / n as f64 - rho).fold(0.0, f64::max)
            }
            ModelKind::Multicut { .. } => 0.0,
        };
        let demand = match self.kind {
            ModelKind::Multicut { demands } => {
                demands.pairs.iter().map(|e| dot(row(y, k, e.u()), row(y, k, e.v())).abs()).fold(0.0, f64::max)
            }
            _ => 0.0,
        };
        let tri = active
            .tris
            .iter()
            .map(|&[u, v, w]| {
                let (yu, yv, yw) = (row(y, k, u), row(y, k, v), row(y, k, w));
                2.0 * (dot(yu, yv) + dot(yv, yw) - dot(yu, yw) - 1.0)
            })
            .fold(0.0, f64::max);
        Residuals { spread, demand, tri }
    }

    fn update_duals(&self, y: &[f64], k: usize, duals: &mut Duals, mu: f64, active: &Active) {
        let n = self.n;
        match self.kind {
            ModelKind::BalancedCut => {
                let s = column_sums(y, k, n);
                for (l, x) in duals.mean.iter_mut().zip(&s) {
                    *l += mu * x / n as f64;
                }
            }
            ModelKind::SseCrude { rho } => {
                let s = column_sums(y, k, n);
                for u in 0..n {
                    let g = dot(row(y, k, u), &s) / n as f64 - rho;
                    duals.spread[u] = (duals.spread[u] + mu * g).max(0.0);
                }
            }
            ModelKind::Multicut { demands } => {
                for (i, e) in demands.pairs.iter().enumerate() {
                    duals.demand[i] += mu * dot(row(y, k, e.u()), row(y, k, e.v()));
                }
            }
        }
        for (i, &[u, v, w]) in active.tris.iter().enumerate() {
            let (yu, yv, yw) = (row(y, k, u), row(y, k, v), row(y, k, w));
            let g = dot(yu, yv) + dot(yv, yw) - dot(yu, yw) - 1.0;
            duals.tri[i] = (duals.tri[i] + mu * g).max(0.0);
        }
    }

    /// Projected gradient with Barzilai–Borwein steps and a nonmonotone
    /// Armijo test. Returns the number of iterations taken.
    fn inner(&self, y: &mut Vec<f64>, k: usize, duals: &Duals, mu: f64, active: &Active, max_iter: usize, tol: f64) -> usize {
        let len = y.len();
        let mut grad = vec![0.0; len];
        let mut dir = vec![0.0; len];
        let mut value = self.eval(y, k, duals, mu, active, &mut grad);
        self.project(y, k, &grad, &mut dir);
        let scale = (self.n as f64).sqrt().max(1.0);
        let mut step = {
            let worst = dir.chunks(k).map(|r| dot(r, r).sqrt()).fold(0.0, f64::max);
            if worst > 0.0 { 0.1 / worst } else { 1.0 }
        };
        let mut history = vec![value];
        let mut trial = vec![0.0; len];
        let mut trial_grad = vec![0.0; len];
        let mut trial_dir = vec![0.0; len];
        let mut iters = 0;
        while iters < max_iter {
            let norm = dot(&dir, &dir).sqrt() / scale;
            if norm < tol {
                break;
            }
            iters += 1;
            let reference = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut accepted = false;
            for _ in 0..40 {
                for ((t, a), d) in trial.iter_mut().zip(y.iter()).zip(&dir) {
                    *t = a - step * d;
                }
                self.retract(&mut trial, k);
                let moved: f64 = trial.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                let tv = self.eval(&trial, k, duals, mu, active, &mut trial_grad);
                if tv <= reference - 1e-4 * moved / step || moved == 0.0 {
                    value = tv;
                    accepted = moved > 0.0;
                    break;
                }
                step *= 0.3;
            }
            if !accepted {
                break;
            }
            self.project(&trial, k, &trial_grad, &mut trial_dir);
            let mut ss = 0.0;
            let mut sz = 0.0;
            for i in 0..len {
                let s = trial[i] - y[i];
                let z = trial_dir[i] - dir[i];
                ss += s * s;
                sz += s * z;
            }
            step = if sz > 0.0 { (ss / sz).clamp(1e-10, 1e6) } else { (step * 2.0).min(1e6) };
            std::mem::swap(y, &mut trial);
            std::mem::swap(&mut grad, &mut trial_grad);
            std::mem::swap(&mut dir, &mut trial_dir);
            history.push(value);
            if history.len() > 8 {
                history.remove(0);
            }
        }
        iters
    }
}

fn normalize_row(r: &mut [f64], nonneg: bool) {
    if nonneg {
        r.iter_mut().for_each(|x| *x = x.max(0.0));
    }
    let norm = dot(r, r).sqrt();
    if norm > 0.0 {
        r.iter_mut().for_each(|x| *x /= norm);
    } else {
        r.iter_mut().for_each(|x| *x = 0.0);
        r[0] = 1.0;
    }
}

fn gram(y: &[f64], k: usize, n: usize) -> Vec<f64> {
    let mut g = vec![0.0; n * n];
    g.par_chunks_mut(n.max(1)).enumerate().for_each(|(u, out)| {
        let yu = row(y, k, u);
        for (v, slot) in out.iter_mut().enumerate() {
            *slot = dot(yu, row(y, k, v));
        }
    });
    g
}

/// Most violated triangles of a Gram matrix, in distance units, plus the
/// overall worst violation.
fn separate(g: &[f64], n: usize, threshold: f64) -> (Vec<(f64, [usize; 3])>, f64) {
    if n < 3 {
        return (Vec::new(), 0.0);
    }
    let per_u: Vec<(Vec<(f64, [usize; 3])>, f64)> = (0..n)
        .into_par_iter()
        .map(|u| {
            let gu = &g[u * n..(u + 1) * n];
            let mut found: Vec<(f64, [usize; 3])> = Vec::new();
            let mut worst: f64 = 0.0;
            for w in u + 1..n {
                let gw = &g[w * n..(w + 1) * n];
                let base = -gu[w] - 1.0;
                for v in 0..n {
                    if v == u || v == w {
                        continue;
                    }
                    let viol = 2.0 * (gu[v] + gw[v] + base);
                    if viol > worst {
                        worst = viol;
                    }
                    if viol > threshold {
                        found.push((viol, [u, v, w]));
                    }
                }
                if found.len() > 4 * PER_VERTEX_CANDIDATES {
                    trim(&mut found, PER_VERTEX_CANDIDATES);
                }
            }
            trim(&mut found, PER_VERTEX_CANDIDATES);
            (found, worst)
        })
        .collect();
    let mut all = Vec::new();
    let mut worst: f64 = 0.0;
    for (f, w) in per_u {
        all.extend(f);
        worst = worst.max(w);
    }
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    (all, worst)
}

fn trim(v: &mut Vec<(f64, [usize; 3])>, keep: usize) {
    v.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    v.truncate(keep);
}

fn model_seed(model: &SdpModel, seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    let mut mix = |x: u64| h = (h ^ x).wrapping_mul(0x0100_0000_01b3);
    mix(model.n as u64);
    for b in model.kind.name().bytes() {
        mix(u64::from(b));
    }
    for e in &model.edges {
        mix(e.u() as u64);
        mix(e.v() as u64);
    }
    h
}

fn validate(model: &SdpModel, opts: &SolveOptions) -> Result<()> {
    if !(opts.tol_feas > 0.0) || !(opts.tol_obj > 0.0) {
        return param("tolerances must be positive");
    }
    if opts.budget.max_outer == 0 || opts.budget.max_inner == 0 {
        return param("budget caps must be positive");
    }
    if opts.cross_check && model.n > CROSS_CHECK_MAX_N {
        return Err(Error::Size(format!("cross-check mode needs n <= {CROSS_CHECK_MAX_N}, got {}", model.n)));
    }
    Ok(())
}

/// Solves `model`. Budget exhaustion is not an error: the best iterate is
/// repaired and returned with `converged = false`.
pub fn solve(model: &SdpModel, opts: &SolveOptions) -> Result<(Embedding, SolverReport)> {
    validate(model, opts)?;
    let n = model.n;
    if n == 0 {
        let phi = Embedding::from_rows(1, Vec::new());
        return Ok((phi, empty_report(model)));
    }
    let m = model.edges.len();
    let avg_deg = (2.0 * m as f64 / n as f64).max(1.0);
    let mut adj = vec![Vec::new(); n];
    for e in &model.edges {
        adj[e.u()].push(e.v());
        adj[e.v()].push(e.u());
    }
    let nonneg = matches!(model.kind, ModelKind::SseCrude { .. });
    let ctx = Ctx { n, kind: &model.kind, adj, c: model.kind.objective_scale() / avg_deg, nonneg };

    let mut rng = rng::child(model_seed(model, opts.seed), rng::SOLVER, 0);
    let mut k = if opts.cross_check {
        n
    } else {
        let log = (usize::BITS - (n.max(2) - 1).leading_zeros()) as usize;
        (RANK_FACTOR * (log + 4)).min(n).max(1)
    };
    let mut y: Vec<f64> = (0..n * k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    if nonneg {
        y.iter_mut().for_each(|x| *x = x.abs());
    }
    ctx.retract(&mut y, k);

    let mut duals = Duals {
        mean: vec![0.0; k],
        spread: vec![0.0; n],
        demand: vec![0.0; if let ModelKind::Multicut { demands } = &model.kind { demands.len() } else { 0 }],
        tri: Vec::new(),
    };
    let mut active = Active::default();
    if opts.cross_check {
        for u in 0..n {
            for w in u + 1..n {
                for v in (0..n).filter(|&v| v != u && v != w) {
                    active.add([u, v, w], &mut duals);
                }
            }
        }
    }

    let target = opts.tol_feas * 0.5;
    let add_cap = 20 * n + 100;
    let mut mu = MU_START;
    let mut prev_active = f64::INFINITY;
    let mut best_worst = f64::INFINITY;
    let mut inner_tol: f64 = 1e-3;
    let mut iterations = 0;
    let mut outer = 0;
    let mut restarts = 0;
    let mut stalled = 0;
    let mut reached = false;
    let mut cheap = false;
    while outer < opts.budget.max_outer {
        outer += 1;
        iterations += ctx.inner(&mut y, k, &duals, mu, &active, opts.budget.max_inner, inner_tol);
        let res = ctx.residuals(&y, k, &active);
        let active_viol = res.max();
        let g = gram(&y, k, n);
        let (cands, worst) = if n <= FULL_AUDIT_MAX_N { separate(&g, n, target) } else { (Vec::new(), 0.0) };
        if active_viol <= target && worst <= target {
            reached = true;
            break;
        }
        if cheap_repair(&ctx, model, &y, k, &g, &res, worst.max(res.tri), target, opts.tol_obj) {
            cheap = true;
            break;
        }
        ctx.update_duals(&y, k, &mut duals, mu, &active);
        if !opts.cross_check {
            active.prune(&y, k, &mut duals, PRUNE_SLACK);
        }
        let mut added = 0;
        for (_, t) in cands {
            if added >= add_cap {
                break;
            }
            if active.add(t, &mut duals) {
                added += 1;
            }
        }
        if active_viol > 0.25 * prev_active {
            mu = (mu * 2.0).min(MU_MAX);
        }
        prev_active = active_viol;
        if worst < 0.9 * best_worst {
            best_worst = worst;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if stalled >= 4 && k < n {
            let new_k = (2 * k).min(n);
            y = widen(&y, k, new_k, nonneg, &mut rng);
            duals.mean.resize(new_k, 0.0);
            k = new_k;
            ctx.retract(&mut y, k);
            restarts += 1;
            stalled = 0;
        }
        inner_tol = (inner_tol * 0.5).max(1e-7);
    }

    let (phi, alpha) = repair(&ctx, &y, k, model);
    let max_violation = family_maxima(&phi, model);
    let triangle_audit = if n <= FULL_AUDIT_MAX_N { TriangleAudit::Full } else { TriangleAudit::Sampled { samples: 0 } };
    let feasible = max_violation.max() <= opts.tol_feas;
    let report = SolverReport {
        model: model.kind.name().to_string(),
        objective: model.objective(&phi),
        max_violation,
        triangle_audit,
        iterations,
        outer_iterations: outer,
        rank: k,
        restarts,
        active_triangles: active.tris.len(),
        repair_weight: alpha,
        converged: feasible && (reached || cheap || alpha <= MAX_REPAIR_FOR_CONVERGED),
    };
    Ok((phi, report))
}

fn empty_report(model: &SdpModel) -> SolverReport {
    SolverReport {
        model: model.kind.name().to_string(),
        objective: 0.0,
        max_violation: FamilyMaxima::default(),
        triangle_audit: TriangleAudit::Full,
        iterations: 0,
        outer_iterations: 0,
        rank: 1,
        restarts: 0,
        active_triangles: 0,
        repair_weight: 0.0,
        converged: true,
    }
}

fn widen(y: &[f64], k: usize, new_k: usize, nonneg: bool, rng: &mut rng::Rng) -> Vec<f64> {
    let n = y.len() / k;
    let mut out = vec![0.0; n * new_k];
    for u in 0..n {
        out[u * new_k..u * new_k + k].copy_from_slice(row(y, k, u));
        for j in k..new_k {
            let x: f64 = 1e-2 * rng.sample::<f64, _>(StandardNormal);
            out[u * new_k + j] = if nonneg { x.abs() } else { x };
        }
    }
    out
}

/// Whether the mixing repair removes every remaining violation at an
/// objective increase within `tol_obj` (relative).
#[allow(clippy::too_many_arguments)]
fn cheap_repair(ctx: &Ctx<'_>, model: &SdpModel, y: &[f64], k: usize, g: &[f64], res: &Residuals, worst: f64, target: f64, tol_obj: f64) -> bool {
    let n = ctx.n;
    let fixed = match model.kind {
        ModelKind::SseCrude { .. } => true,
        ModelKind::BalancedCut => res.spread <= target,
        ModelKind::Multicut { .. } => res.demand <= target,
    };
    if !fixed {
        return false;
    }
    let alpha = repair_weight(&model.kind, g, n, worst);
    let scale = model.kind.objective_scale();
    let objective: f64 = scale * model.edges.iter().map(|e| 2.0 - 2.0 * dot(row(y, k, e.u()), row(y, k, e.v()))).sum::<f64>();
    let ceiling = scale * repair_spacing(&model.kind, n) * model.edges.len() as f64;
    alpha * (ceiling - objective).max(0.0) <= tol_obj * objective.max(1.0)
}

/// Distance every pair reaches under the private repair block.
fn repair_spacing(kind: &ModelKind, n: usize) -> f64 {
    if matches!(kind, ModelKind::BalancedCut) && n > 1 {
        2.0 * n as f64 / (n as f64 - 1.0)
    } else {
        2.0
    }
}

/// Smallest mixing weight that removes a triangle violation of `worst` and,
/// for the crude SSE model, every spreading excess of the Gram matrix `g`.
fn repair_weight(kind: &ModelKind, g: &[f64], n: usize, worst: f64) -> f64 {
    let spacing = repair_spacing(kind, n);
    let mut alpha: f64 = if worst > 0.0 { worst / (spacing + worst) } else { 0.0 };
    if let ModelKind::SseCrude { rho } = kind {
        let cap = rho * n as f64;
        for u in 0..n {
            let s: f64 = g[u * n..(u + 1) * n].iter().sum();
            if s > cap && s > 1.0 {
                alpha = alpha.max((s - cap) / (s - 1.0));
            }
        }
    }
    alpha
}

fn repair(ctx: &Ctx<'_>, y: &[f64], k: usize, model: &SdpModel) -> (Embedding, f64) {
    let n = ctx.n;
    let g = gram(y, k, n);
    let (_, worst) = if n <= FULL_AUDIT_MAX_N {
        separate(&g, n, f64::INFINITY)
    } else {
        let phi = Embedding::from_rows(k, y.to_vec());
        let rep = check_feasibility(&phi, model, f64::INFINITY);
        (Vec::new(), rep.max_triangle_violation)
    };
    let simplex = matches!(model.kind, ModelKind::BalancedCut);
    let alpha = repair_weight(&model.kind, &g, n, worst);
    if alpha <= 0.0 || n < 2 {
        return (Embedding::from_rows(k, y.to_vec()), 0.0);
    }
    let alpha = (alpha * (1.0 + 1e-6) + 1e-12).min(1.0);
    let a = (1.0 - alpha).sqrt();
    let b = alpha.sqrt();
    let wide = k + n;
    let mut data = vec![0.0; n * wide];
    let simplex_scale = (n as f64 / (n as f64 - 1.0)).sqrt();
    data.par_chunks_mut(wide).enumerate().for_each(|(u, out)| {
        for (o, x) in out[..k].iter_mut().zip(row(y, k, u)) {
            *o = a * x;
        }
        if simplex {
            for v in 0..n {
                let e = if u == v { 1.0 - 1.0 / n as f64 } else { -1.0 / n as f64 };
                out[k + v] = b * simplex_scale * e;
            }
        } else {
            out[k + u] = b;
        }
    });
    (Embedding::from_rows(wide, data), alpha)
}

/// Largest violation per family of `phi` under `model`.
pub fn family_maxima(phi: &Embedding, model: &SdpModel) -> FamilyMaxima {
    let n = phi.n();
    let rep = check_feasibility(phi, model, f64::INFINITY);
    let unit_norm = phi.max_norm_error();
    let mut out = FamilyMaxima { unit_norm, triangle: rep.max_triangle_violation, ..Default::default() };
    match &model.kind {
        ModelKind::BalancedCut => out.spreading = Some(global_spreading_violation(phi)),
        ModelKind::SseCrude { rho } => {
            let mut s = vec![0.0; phi.dim()];
            for u in 0..n {
                for (a, b) in s.iter_mut().zip(phi.row(u)) {
                    *a += b;
                }
            }
            out.spreading = Some((0..n).map(|u| (dot(phi.row(u), &s) - rho * n as f64) / n as f64).fold(0.0, f64::max));
            let neg = (0..n)
                .into_par_iter()
                .map(|u| (u + 1..n).map(|v| -phi.inner(u, v)).fold(0.0, f64::max))
                .reduce(|| 0.0, f64::max);
            out.nonnegativity = Some(neg);
        }
        ModelKind::Multicut { demands } => {
            out.demand = Some(demands.pairs.iter().map(|e| phi.inner(e.u(), e.v()).abs()).fold(0.0, f64::max));
        }
    }
    out
}

type CacheKey = (String, usize, Vec<(usize, usize)>, [u64; 5], bool);
pub type Solved = Arc<(Embedding, SolverReport)>;

fn cache() -> &'static Mutex<HashMap<CacheKey, Solved>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Solved>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

const CACHE_CAPACITY: usize = 64;

/// [`solve`] behind a process-wide memo keyed by the model and options, so
/// reruns on identical subproblems reuse the embedding.
pub fn solve_cached(model: &SdpModel, opts: &SolveOptions) -> Result<Solved> {
    let key: CacheKey = (
        serde_json::to_string(&model.kind)?,
        model.n,
        model.edges.iter().map(|e| e.endpoints()).collect(),
        [
            opts.tol_feas.to_bits(),
            opts.tol_obj.to_bits(),
            opts.budget.max_outer as u64,
            opts.budget.max_inner as u64,
            opts.seed,
        ],
        opts.cross_check,
    );
    if let Some(hit) = cache().lock().expect("cache lock").get(&key) {
        return Ok(Arc::clone(hit));
    }
    let solved = Arc::new(solve(model, opts)?);
    let mut map = cache().lock().expect("cache lock");
    if map.len() >= CACHE_CAPACITY {
        map.clear();
    }
    map.insert(key, Arc::clone(&solved));
    Ok(solved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::build_model;
    use crate::graph::Graph;
    use crate::instances::MulticutDemands;

    fn opts() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn forced_balanced_pair() {
        let m = build_model(ModelKind::BalancedCut, &Graph::path(2)).unwrap();
        let (phi, rep) = solve(&m, &opts()).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!((rep.objective - 1.0).abs() < 1e-6, "{}", rep.objective);
        assert!((phi.dist(0, 1) - 4.0).abs() < 1e-5);
    }

    #[test]
    fn forced_sse_pair() {
        let m = build_model(ModelKind::SseCrude { rho: 0.5 }, &Graph::path(2)).unwrap();
        let (phi, rep) = solve(&m, &opts()).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!((rep.objective - 1.0).abs() < 1e-6, "{}", rep.objective);
        assert!(phi.inner(0, 1).abs() < 1e-6);
    }

    #[test]
    fn two_cliques_have_zero_balanced_objective() {
        let g = Graph::complete(10).disjoint_union(&Graph::complete(10));
        let m = build_model(ModelKind::BalancedCut, &g).unwrap();
        let (_, rep) = solve(&m, &opts()).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(rep.objective <= 1e-4 * g.m() as f64, "{}", rep.objective);
    }

    #[test]
    fn multicut_demands_become_orthogonal() {
        let g = Graph::cycle(6);
        let demands = MulticutDemands::new([(0, 3), (1, 4)]).unwrap();
        let m = build_model(ModelKind::Multicut { demands }, &g).unwrap();
        let (phi, rep) = solve(&m, &opts()).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!((phi.dist(0, 3) - 2.0).abs() < 1e-4);
    }

    #[test]
    fn cross_check_mode_agrees_on_small_graph() {
        let g = Graph::cycle(8);
        let m = build_model(ModelKind::BalancedCut, &g).unwrap();
        let (_, lazy) = solve(&m, &opts()).unwrap();
        let (_, dense) = solve(&m, &SolveOptions { cross_check: true, ..opts() }).unwrap();
        assert!(lazy.converged && dense.converged);
        assert!((lazy.objective - dense.objective).abs() < 0.05 * dense.objective.max(1.0), "{} vs {}", lazy.objective, dense.objective);
        let big = build_model(ModelKind::BalancedCut, &Graph::empty(41)).unwrap();
        assert!(matches!(solve(&big, &SolveOptions { cross_check: true, ..opts() }), Err(Error::Size(_))));
    }

    #[test]
    fn solves_are_deterministic_and_cached() {
        let g = Graph::cycle(9);
        let m = build_model(ModelKind::SseCrude { rho: 1.0 / 3.0 }, &g).unwrap();
        let (a, _) = solve(&m, &opts()).unwrap();
        let (b, _) = solve(&m, &opts()).unwrap();
        assert_eq!(a, b);
        let c1 = solve_cached(&m, &opts()).unwrap();
        let c2 = solve_cached(&m, &opts()).unwrap();
        assert!(Arc::ptr_eq(&c1, &c2));
    }
}
