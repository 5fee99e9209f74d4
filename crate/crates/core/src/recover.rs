//! Partition purification: potential-driven refinement of an approximate
//! sparsest cut when both planted sides are combinatorial expanders.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{domain, param, Error, Result};
use crate::graph::{edges_between, Graph, Partition, VertexSet};
use crate::rng;
use crate::solvers::{sparsest_cut, CutResult, PipelineOptions};

/// Required increase of the potential per move.
pub const MIN_GAIN: f64 = 0.25;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecoverOptions {
    pub pipeline: PipelineOptions,
    /// Sparsest-cut ρ-grid; `None` uses the default geometric grid.
    pub rho_grid: Option<Vec<f64>>,
    /// Planted side fraction, when known, for the `η` adjustment.
    pub rho: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveKind {
    /// `A ⊆ X` moved to `Y`.
    A,
    /// `B ⊆ Y` moved to `X`.
    B,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Move {
    pub kind: MoveKind,
    pub size: usize,
    pub sparsity: f64,
    pub delta_f: f64,
    pub f_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementState {
    pub x: VertexSet,
    pub y: VertexSet,
    pub f_value: f64,
    pub t: usize,
    pub moves: Vec<Move>,
    pub initial_sparsity: f64,
    pub initial_f: f64,
    pub step_bound: u64,
    /// `η` after the adjustment for large `η`.
    pub eta: f64,
}

fn check_split(x: &VertexSet, y: &VertexSet, n: usize) -> Result<()> {
    x.check_range(n)?;
    y.check_range(n)?;
    if !x.is_disjoint(y) {
        return domain("X and Y overlap");
    }
    if x.len() + y.len() != n {
        return domain("X and Y do not cover V");
    }
    Ok(())
}

/// `C_sc·ε·n·min(|X|, |Y|) − |E(X, Y)|`.
pub fn potential(g: &Graph, x: &VertexSet, y: &VertexSet, epsilon: f64, c_sc: f64) -> Result<f64> {
    let n = g.n();
    check_split(x, y, n)?;
    let cross = edges_between(g, &x.mask(n), &y.mask(n));
    Ok(c_sc * epsilon * n as f64 * x.len().min(y.len()) as f64 - cross as f64)
}

/// `4·(C_sc·ε·n² + |E|)`.
pub fn step_bound(g: &Graph, epsilon: f64, c_sc: f64) -> u64 {
    let n = g.n() as f64;
    (4.0 * (c_sc * epsilon * n * n + g.m() as f64)).ceil() as u64
}

fn cut_in(g: &Graph, u: &VertexSet, opts: &RecoverOptions, seed: u64) -> Result<Option<CutResult>> {
    if u.len() < 4 {
        return Ok(None);
    }
    match sparsest_cut(g, u, opts.rho_grid.as_deref(), &opts.pipeline, seed) {
        Ok(r) => Ok(Some(r)),
        Err(Error::Infeasible(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn purify(g: &Graph, epsilon: f64, eta: f64, c_sc: f64, opts: &RecoverOptions, seed: u64) -> Result<RefinementState> {
    let n = g.n();
    if !(epsilon > 0.0 && epsilon < 1.0) || !(eta > 0.0 && eta < 1.0) {
        return param(format!("ε = {epsilon} and η = {eta} must lie in (0, 1)"));
    }
    if !(c_sc > 0.0) {
        return param(format!("C_sc = {c_sc} must be positive"));
    }
    let bound = step_bound(g, epsilon, c_sc);
    let mut eta_eff = eta;
    if let Some(rho) = opts.rho {
        if rho <= eta {
            let x = VertexSet::new();
            let y = VertexSet::range(n);
            let f = potential(g, &x, &y, epsilon, c_sc)?;
            return Ok(RefinementState {
                x,
                y,
                f_value: f,
                t: 0,
                moves: Vec::new(),
                initial_sparsity: 0.0,
                initial_f: f,
                step_bound: bound,
                eta,
            });
        }
        eta_eff = eta.min(rho / 3.0);
    }
    let mut stream = rng::substream(seed, "purify");
    let first = cut_in(g, &VertexSet::range(n), opts, stream.gen())?
        .ok_or_else(|| Error::Infeasible("no initial sparsest cut".into()))?;
    let mut x = first.side.clone();
    let mut y = x.complement(n);
    let mut f = potential(g, &x, &y, epsilon, c_sc)?;
    let initial_f = f;
    let initial_sparsity = first.diagnostics.sparsity.unwrap_or(f64::NAN);
    let mut moves = Vec::new();
    let mut t = 0u64;
    loop {
        let (sa, sb): (u64, u64) = (stream.gen(), stream.gen());
        let (ra, rb) = rayon::join(|| cut_in(g, &x, opts, sa), || cut_in(g, &y, opts, sb));
        let mut applied = false;
        for (kind, found) in [(MoveKind::A, ra?), (MoveKind::B, rb?)] {
            let Some(cut) = found else { continue };
            let (nx, ny) = match kind {
                MoveKind::A => (x.difference(&cut.side), y.union(&cut.side)),
                MoveKind::B => (x.union(&cut.side), y.difference(&cut.side)),
            };
            let nf = potential(g, &nx, &ny, epsilon, c_sc)?;
            if nf - f >= MIN_GAIN - 1e-9 {
                moves.push(Move {
                    kind,
                    size: cut.side.len(),
                    sparsity: cut.diagnostics.sparsity.unwrap_or(f64::NAN),
                    delta_f: nf - f,
                    f_after: nf,
                });
                x = nx;
                y = ny;
                f = nf;
                applied = true;
                break;
            }
        }
        if !applied {
            break;
        }
        t += 1;
        if t > bound {
            return Err(Error::Certificate(format!("refinement exceeded the step bound {bound}")));
        }
    }
    Ok(RefinementState {
        x,
        y,
        f_value: f,
        t: t as usize,
        moves,
        initial_sparsity,
        initial_f,
        step_bound: bound,
        eta: eta_eff,
    })
}

/// `min(|X Δ S|, |X Δ T|)` against a planted bipartition.
pub fn recovery_error(x: &VertexSet, hidden: &Partition) -> Result<usize> {
    if hidden.num_parts() != 2 {
        return param("recovery error needs a bipartition");
    }
    let n = hidden.n();
    x.check_range(n)?;
    let s = hidden.part(0);
    let sym = |a: &VertexSet, b: &VertexSet| a.difference(b).len() + b.difference(a).len();
    Ok(sym(x, s).min(sym(x, &s.complement(n))))
}

/// Whether `X` or `Y` holds at least `ηn/2` vertices of each planted side.
pub fn mixed_side_dichotomy(x: &VertexSet, y: &VertexSet, hidden: &Partition, eta: f64) -> bool {
    let need = eta * hidden.n() as f64 / 2.0;
    let mixed = |z: &VertexSet| {
        hidden.parts().iter().all(|p| z.intersection(p).len() as f64 >= need - 1e-9)
    };
    mixed(x) || mixed(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_examples() {
        let g = Graph::complete(4);
        let x = VertexSet::from(vec![0, 1]);
        let y = VertexSet::from(vec![2, 3]);
        // all four cross pairs are edges
        assert!((potential(&g, &x, &y, 0.5, 1.0).unwrap() - (0.5 * 4.0 * 2.0 - 4.0)).abs() < 1e-12);
        let g = Graph::empty(5);
        assert_eq!(potential(&g, &VertexSet::new(), &VertexSet::range(5), 0.1, 2.0).unwrap(), 0.0);
        let big = VertexSet::from(vec![0, 1, 2]);
        let small = VertexSet::from(vec![3, 4]);
        let before = potential(&g, &small, &big, 0.1, 2.0).unwrap();
        let after = potential(&g, &VertexSet::from(vec![4]), &VertexSet::from(vec![0, 1, 2, 3]), 0.1, 2.0).unwrap();
        assert!((before - after - 2.0 * 0.1 * 5.0).abs() < 1e-12);
    }

    #[test]
    fn potential_rejects_bad_split() {
        let g = Graph::empty(3);
        let x = VertexSet::from(vec![0, 1]);
        assert!(potential(&g, &x, &VertexSet::from(vec![1, 2]), 0.1, 1.0).is_err());
        assert!(potential(&g, &x, &VertexSet::new(), 0.1, 1.0).is_err());
    }

    #[test]
    fn error_and_dichotomy() {
        let hidden = Partition::from_assignment(&[0, 0, 0, 0, 1, 1, 1, 1]);
        assert_eq!(recovery_error(&VertexSet::from(vec![4, 5, 6, 7]), &hidden).unwrap(), 0);
        assert_eq!(recovery_error(&VertexSet::from(vec![0, 1, 2, 7]), &hidden).unwrap(), 2);
        let x = VertexSet::from(vec![0, 1, 4, 5]);
        assert!(mixed_side_dichotomy(&x, &x.complement(8), &hidden, 0.5));
        let x = VertexSet::from(vec![0, 1, 2, 3]);
        assert!(!mixed_side_dichotomy(&x, &x.complement(8), &hidden, 0.5));
    }
}
