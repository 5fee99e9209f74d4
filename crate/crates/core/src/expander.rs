//! Algorithms for planted partitions whose small side carries a regular
//! algebraic expander.

use serde::{Deserialize, Serialize};

use crate::embeddings::{build_model, solve_cached, Embedding, ModelKind, SolveOptions};
use crate::error::{param, Error, Result};
use crate::graph::{edge_boundary, Graph, VertexSet};
use crate::solvers::{sse_case2_lp, threshold_extract, BallCandidate, BallScan, CutResult, Diagnostics, BALL_WINDOW};
use crate::spectral;

/// Distinct candidate balls handed to the LP extraction, cheapest first.
pub const SSE_BALL_LIMIT: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfile {
    pub lambda2: f64,
    pub degree: Option<usize>,
    pub m: usize,
}

/// `λ₂` of the normalized Laplacian.
pub fn algebraic_expansion(g1: &Graph, assume_regular: bool) -> Result<SpectralProfile> {
    let degree = g1.is_regular();
    if assume_regular && degree.is_none() {
        return param("graph is not regular");
    }
    Ok(SpectralProfile { lambda2: spectral::lambda2(g1), degree, m: g1.m() })
}

fn ball_result(scan: &BallScan, c: &BallCandidate, g: &Graph) -> Result<(VertexSet, usize)> {
    let set = scan.members(c);
    let b = edge_boundary(&set, g)?;
    Ok((set, b))
}

/// Best ball `Ball_d(u, r)`, `r ∈ [1/16, 1/4]`, with `n/8 ≤ |S| ≤ 4n/5` on the
/// BalancedCut embedding of `g`.
pub fn planted_expander_balanced_cut(g: &Graph, solver: &SolveOptions) -> Result<CutResult> {
    let n = g.n();
    if n < 2 || n % 2 == 1 {
        return param(format!("n = {n} must be even and positive"));
    }
    let solved = solve_cached(&build_model(ModelKind::BalancedCut, g)?, solver)?;
    let phi = &solved.0;
    let allowed = vec![true; n];
    let scan = BallScan {
        phi,
        allowed: &allowed,
        graphs: [g, g],
        weights: None,
        radii: BALL_WINDOW,
        sizes: ((n as f64 / 8.0).ceil() as usize, (4 * n) / 5),
    };
    let cands = scan.candidates();
    let best = crate::solvers::argmin_by(&cands, |c| c.costs[0])
        .ok_or_else(|| Error::Infeasible("no ball in the size window".into()))?;
    let (side, boundary_cost) = ball_result(&scan, best, g)?;
    let diagnostics = Diagnostics {
        sizes: vec![side.len(), n - side.len()],
        case: Some("ball".into()),
        sdp_objective: Some(solved.1.objective),
        center: Some(best.center),
        certificate_bound: Some(32.0 * solved.1.objective),
        degraded: !solved.1.converged,
        ..Diagnostics::default()
    };
    Ok(CutResult { side, partition: None, boundary_cost, diagnostics })
}

/// Ball guesses on the SseCrude embedding, each cleaned by the LP extraction
/// with weights `w_u = |E(u, V∖S)|`; the cheapest extracted set wins.
pub fn planted_expander_sse(g: &Graph, rho: f64, solver: &SolveOptions) -> Result<CutResult> {
    let n = g.n();
    if !(rho > 0.0 && rho <= 0.5) {
        return param(format!("ρ = {rho} outside (0, 1/2]"));
    }
    let rn = rho * n as f64;
    let solved = solve_cached(&build_model(ModelKind::SseCrude { rho }, g)?, solver)?;
    let phi = &solved.0;
    let allowed = vec![true; n];
    let scan = BallScan {
        phi,
        allowed: &allowed,
        graphs: [g, g],
        weights: None,
        radii: BALL_WINDOW,
        sizes: ((rn / 2.0 - 1e-9).ceil().max(1.0) as usize, (8.0 * rn / 7.0 + 1e-9).floor() as usize),
    };
    let mut cands = scan.candidates();
    cands.sort_by(|a, b| a.costs[0].cmp(&b.costs[0]).then(a.center.cmp(&b.center)).then(a.len.cmp(&b.len)));
    let mut seen = std::collections::BTreeSet::new();
    let mut best: Option<(usize, VertexSet, usize, f64)> = None;
    let mut tried = 0;
    for c in &cands {
        if tried >= SSE_BALL_LIMIT {
            break;
        }
        let ball = scan.members(c);
        if !seen.insert(ball.as_slice().to_vec()) {
            continue;
        }
        tried += 1;
        let mask = ball.mask(n);
        let weights: Vec<u64> =
            (0..n).map(|u| g.neighbors(u).iter().filter(|&&v| !mask[v]).count() as u64).collect();
        let inside = g.edge_set().inside(&mask);
        let lp = match sse_case2_lp(&ball, &inside, &weights, rho, n) {
            Ok(lp) => lp,
            Err(Error::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        };
        let ex = threshold_extract(&lp, std::slice::from_ref(&ball), &inside, &weights, rho)?;
        let cost = edge_boundary(&ex.set, g)?;
        if best.as_ref().map_or(true, |b| cost < b.0) {
            best = Some((cost, ex.set, c.center, lp.objective));
        }
    }
    let (boundary_cost, side, center, lp_value) =
        best.ok_or_else(|| Error::Infeasible("no ball candidate".into()))?;
    if (side.len() as f64) < rn / 4.0 - 1e-9 || side.len() as f64 > 2.0 * rn + 1e-9 {
        return Err(Error::Certificate(format!("set size {} outside [ρn/4, 2ρn]", side.len())));
    }
    let diagnostics = Diagnostics {
        sizes: vec![side.len(), n - side.len()],
        case: Some("ball+lp".into()),
        rho: Some(rho),
        sdp_objective: Some(solved.1.objective),
        center: Some(center),
        certificate_bound: Some(16.0 * lp_value),
        degraded: !solved.1.converged,
        ..Diagnostics::default()
    };
    Ok(CutResult { side, partition: None, boundary_cost, diagnostics })
}

/// `|Ball_d(u, 1/8) ∩ P₁| ≥ |P₁|/2`.
pub fn markov_ball_holds(phi: &Embedding, center: usize, p1: &VertexSet) -> bool {
    let inside = p1.iter().filter(|&v| v == center || phi.dist(center, v) <= 0.125).count();
    2 * inside >= p1.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectra() {
        for m in 3..=50 {
            let p = algebraic_expansion(&Graph::complete(m), true).unwrap();
            assert!((p.lambda2 - m as f64 / (m as f64 - 1.0)).abs() < 1e-9);
        }
        assert!((algebraic_expansion(&Graph::cycle(4), true).unwrap().lambda2 - 1.0).abs() < 1e-9);
        let two = Graph::cycle(4).disjoint_union(&Graph::cycle(5));
        assert!(algebraic_expansion(&two, true).unwrap().lambda2.abs() < 1e-9);
        assert!(algebraic_expansion(&Graph::path(4), true).is_err());
    }

    #[test]
    fn disjoint_cliques() {
        let g = Graph::complete(10).disjoint_union(&Graph::complete(10));
        let r = planted_expander_balanced_cut(&g, &SolveOptions::default()).unwrap();
        assert_eq!(r.boundary_cost, 0);

        let g = Graph::complete(5).disjoint_union(&Graph::complete(15));
        let r = planted_expander_sse(&g, 0.25, &SolveOptions::default()).unwrap();
        assert_eq!(r.boundary_cost, 0);
        assert_eq!(r.side, VertexSet::range(5));
    }
}
