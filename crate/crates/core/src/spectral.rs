//! Normalized Laplacian spectra via dense symmetric eigensolves.

use nalgebra::DMatrix;

use crate::graph::Graph;

/// `L = I − D^{-1/2} A D^{-1/2}`; isolated vertices get a zero row.
pub fn normalized_laplacian(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|u| match g.degree(u) {
            0 => 0.0,
            d => 1.0 / (d as f64).sqrt(),
        })
        .collect();
    let mut l = DMatrix::zeros(n, n);
    for u in 0..n {
        if g.degree(u) > 0 {
            l[(u, u)] = 1.0;
        }
    }
    for e in g.edges() {
        let (u, v) = e.endpoints();
        let w = -inv_sqrt[u] * inv_sqrt[v];
        l[(u, v)] = w;
        l[(v, u)] = w;
    }
    l
}

/// Eigenvalues of the normalized Laplacian in ascending order.
pub fn normalized_laplacian_spectrum(g: &Graph) -> Vec<f64> {
    if g.n() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = normalized_laplacian(g).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Second-smallest normalized Laplacian eigenvalue, clamped at 0.
pub fn lambda2(g: &Graph) -> f64 {
    let ev = normalized_laplacian_spectrum(g);
    ev.get(1).copied().unwrap_or(0.0).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph_spectrum() {
        for m in 3..12 {
            let ev = normalized_laplacian_spectrum(&Graph::complete(m));
            assert!(ev[0].abs() < 1e-10);
            let expect = m as f64 / (m as f64 - 1.0);
            assert!(ev[1..].iter().all(|&x| (x - expect).abs() < 1e-10));
        }
    }

    #[test]
    fn four_cycle_spectrum() {
        let ev = normalized_laplacian_spectrum(&Graph::cycle(4));
        for (a, b) in ev.iter().zip([0.0, 1.0, 1.0, 2.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn disconnected_has_zero_gap() {
        let g = Graph::cycle(3).disjoint_union(&Graph::cycle(4));
        assert!(lambda2(&g) < 1e-10);
    }
}
