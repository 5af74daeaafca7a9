use rand::Rng;

use super::Graph;
use crate::error::{Error, Result};

/// Barabási-Albert preferential attachment.
///
/// Starts from a clique on `m0` nodes; every later node attaches `m`
/// distinct edges to existing nodes chosen with probability proportional to
/// their current degree. Final edge count is `C(m0, 2) + (n - m0) * m`.
pub fn barabasi_albert<R: Rng + ?Sized>(n: usize, m0: usize, m: usize, rng: &mut R) -> Result<Graph> {
    if !(m >= 1 && m <= m0 && m0 <= n) {
        return Err(Error::Parameter(format!("preferential attachment needs n >= m0 >= m >= 1 (n={n}, m0={m0}, m={m})")));
    }
    if n > u32::MAX as usize {
        return Err(Error::Parameter("too many nodes".into()));
    }
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    // every edge contributes both endpoints, so a uniform pick is degree-proportional
    let mut endpoints: Vec<u32> = Vec::with_capacity(m0 * m0 + 2 * (n - m0) * m);
    for i in 0..m0 {
        for j in i + 1..m0 {
            adj[i].push(j as u32);
            adj[j].push(i as u32);
            endpoints.push(i as u32);
            endpoints.push(j as u32);
        }
    }
    let mut chosen: Vec<u32> = Vec::with_capacity(m);
    for v in m0..n {
        chosen.clear();
        while chosen.len() < m {
            let t = if endpoints.is_empty() {
                rng.random_range(0..v as u32)
            } else {
                endpoints[rng.random_range(0..endpoints.len())]
            };
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            adj[v].push(t);
            adj[t as usize].push(v as u32);
            endpoints.push(v as u32);
            endpoints.push(t);
        }
    }
    Ok(Graph::from_adjacency(adj))
}
