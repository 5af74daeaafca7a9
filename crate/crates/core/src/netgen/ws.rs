use rand::Rng;

use super::Graph;
use crate::error::{Error, Result};

fn check_params(n: usize, k: usize) -> Result<()> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::Parameter(format!("small-world k must be even and >= 2, got {k}")));
    }
    if n <= k {
        return Err(Error::Parameter(format!("small-world needs n > k (n={n}, k={k})")));
    }
    if n > u32::MAX as usize {
        return Err(Error::Parameter("too many nodes".into()));
    }
    Ok(())
}

fn lattice_lists(n: usize, k: usize) -> Vec<Vec<u32>> {
    let half = k / 2;
    (0..n)
        .map(|i| {
            (1..=half)
                .flat_map(|j| [((i + j) % n) as u32, ((i + n - j) % n) as u32])
                .collect()
        })
        .collect()
}

/// Ring lattice: node `i` joined to the `k/2` nearest nodes on each side.
pub fn ring_lattice(n: usize, k: usize) -> Result<Graph> {
    check_params(n, k)?;
    Ok(Graph::from_adjacency(lattice_lists(n, k)))
}

/// Watts-Strogatz small-world graph.
///
/// Edges `(i, i + j)` of the ring lattice are visited for `j = 1..=k/2` and
/// each node `i`; with probability `beta` the far end is replaced by a
/// uniformly random node that is neither `i` nor already adjacent to it.
/// The edge count stays `n * k / 2`.
pub fn watts_strogatz<R: Rng + ?Sized>(n: usize, k: usize, beta: f64, rng: &mut R) -> Result<Graph> {
    check_params(n, k)?;
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Parameter(format!("rewiring probability {beta} outside [0, 1]")));
    }
    let mut adj = lattice_lists(n, k);
    if beta > 0.0 {
        for j in 1..=k / 2 {
            for i in 0..n {
                if rng.random::<f64>() >= beta {
                    continue;
                }
                let old = ((i + j) % n) as u32;
                // the edge may already have been rewired away from i
                if !adj[i].contains(&old) || adj[i].len() >= n - 1 {
                    continue;
                }
                let new = loop {
                    let w = rng.random_range(0..n as u32);
                    if w as usize != i && !adj[i].contains(&w) {
                        break w;
                    }
                };
                remove(&mut adj[i], old);
                remove(&mut adj[old as usize], i as u32);
                adj[i].push(new);
                adj[new as usize].push(i as u32);
            }
        }
    }
    Ok(Graph::from_adjacency(adj))
}

fn remove(list: &mut Vec<u32>, x: u32) {
    if let Some(p) = list.iter().position(|&y| y == x) {
        list.swap_remove(p);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::graph_stats;
    use crate::rng::derive_rng_stream;

    #[test]
    fn zero_beta_is_ring_lattice() {
        let mut rng = derive_rng_stream(1, "test/ws", 0);
        let g = watts_strogatz(10, 4, 0.0, &mut rng).unwrap();
        assert_eq!(g, ring_lattice(10, 4).unwrap());
        for i in 0..10 {
            assert_eq!(g.degree(i), 4);
        }
        assert_eq!(g.neighbours(0), &[1, 2, 8, 9]);
    }

    #[test]
    fn lattice_clustering_matches_closed_form() {
        // 3(k-2) / (4(k-1))
        for k in [4usize, 6, 10] {
            let g = ring_lattice(60, k).unwrap();
            let expected = 3.0 * (k as f64 - 2.0) / (4.0 * (k as f64 - 1.0));
            let c = graph_stats(&g, 0, 0).mean_clustering;
            assert!((c - expected).abs() < 1e-12, "k={k}: {c} vs {expected}");
        }
    }

    #[test]
    fn edge_count_is_preserved() {
        for (seed, beta) in [(1, 0.1), (2, 0.5), (3, 1.0)] {
            let mut rng = derive_rng_stream(seed, "test/ws", 1);
            let g = watts_strogatz(500, 10, beta, &mut rng).unwrap();
            assert_eq!(g.edge_count(), 500 * 10 / 2);
            assert!(g.check().is_ok());
        }
    }

    #[test]
    fn dense_graph_cannot_over_rewire() {
        let mut rng = derive_rng_stream(9, "test/ws", 1);
        let g = watts_strogatz(5, 4, 1.0, &mut rng).unwrap();
        assert_eq!(g, super::super::Graph::complete(5));
    }

    #[test]
    fn parameter_violations() {
        let mut rng = derive_rng_stream(1, "test/ws", 2);
        assert!(watts_strogatz(10, 3, 0.1, &mut rng).is_err());
        assert!(watts_strogatz(10, 0, 0.1, &mut rng).is_err());
        assert!(watts_strogatz(4, 4, 0.1, &mut rng).is_err());
        assert!(watts_strogatz(10, 4, 1.5, &mut rng).is_err());
    }
}
