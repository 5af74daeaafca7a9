//! Social network generation: a global small-world network and
//! neighbourhood-level scale-free neighbour networks.

mod ba;
pub mod io;
mod stats;
mod ws;

pub use ba::barabasi_albert;
pub use stats::{degree_tail_slope, graph_stats, GraphStats};
pub use ws::{ring_lattice, watts_strogatz};

use rayon::prelude::*;

use crate::config::{NeighbourScope, ScenarioConfig};
use crate::error::{Error, Result};
use crate::rng::derive_rng_stream;

/// Undirected simple graph in compressed sparse row form with strictly
/// sorted neighbour lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Graph {
    pub fn empty(n: usize) -> Graph {
        Graph { offsets: vec![0; n + 1], targets: Vec::new() }
    }

    pub fn complete(n: usize) -> Graph {
        let adj = (0..n as u32).map(|i| (0..n as u32).filter(|&j| j != i).collect()).collect();
        Graph::from_adjacency(adj)
    }

    /// Build from per-node neighbour lists. Lists are sorted here; symmetry
    /// and simplicity are the caller's responsibility (checked in debug builds).
    pub fn from_adjacency(mut adj: Vec<Vec<u32>>) -> Graph {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        offsets.push(0);
        let mut targets = Vec::with_capacity(adj.iter().map(Vec::len).sum());
        for list in &mut adj {
            list.sort_unstable();
            targets.extend_from_slice(list);
            offsets.push(targets.len());
        }
        let g = Graph { offsets, targets };
        debug_assert!(g.check().is_ok(), "{:?}", g.check());
        g
    }

    /// Build from an undirected edge list; rejects self-loops, duplicates and
    /// out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Graph> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::Parameter(format!("edge ({u}, {v}) out of range for {n} nodes")));
            }
            if u == v {
                return Err(Error::Parameter(format!("self-loop at {u}")));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        for list in &mut adj {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Parameter("duplicate edge".into()));
            }
            targets.extend_from_slice(list);
            offsets.push(targets.len());
        }
        Ok(Graph { offsets, targets })
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    #[inline]
    pub fn neighbours(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn has_edge(&self, i: usize, j: u32) -> bool {
        self.neighbours(i).binary_search(&j).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.node_count()).flat_map(move |i| {
            self.neighbours(i).iter().filter(move |&&j| j as usize > i).map(move |&j| (i as u32, j))
        })
    }

    /// Canonical-form check: symmetric, loop-free, strictly sorted lists.
    pub fn check(&self) -> std::result::Result<(), String> {
        let n = self.node_count();
        for i in 0..n {
            let ns = self.neighbours(i);
            if ns.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("neighbours of {i} not strictly sorted"));
            }
            for &j in ns {
                if j as usize == i {
                    return Err(format!("self-loop at {i}"));
                }
                if j as usize >= n {
                    return Err(format!("neighbour {j} of {i} out of range"));
                }
                if !self.has_edge(j as usize, i as u32) {
                    return Err(format!("edge {i}->{j} has no reverse"));
                }
            }
        }
        Ok(())
    }

    /// Relabel nodes through `ids` (local index -> global id) into a graph on `n` nodes.
    fn relabel_into(&self, ids: &[u32], adj: &mut [Vec<u32>]) {
        for (local, &global) in ids.iter().enumerate() {
            adj[global as usize].extend(self.neighbours(local).iter().map(|&j| ids[j as usize]));
        }
    }
}

/// A neighbourhood's neighbour network; node `i` of `graph` is agent `members[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighbourNetwork {
    pub members: Vec<u32>,
    pub graph: Graph,
}

/// One scale-free graph per group of agents. Groups smaller than `m0` get a
/// complete graph on their members.
pub fn build_neighbour_networks(
    groups: &[Vec<u32>],
    m0: u32,
    m: u32,
    master_seed: u64,
    replicate: u64,
) -> Result<Vec<NeighbourNetwork>> {
    groups
        .par_iter()
        .enumerate()
        .map(|(h, members)| {
            if members.is_empty() {
                return Err(Error::Parameter(format!("neighbourhood {h} has no residents")));
            }
            let graph = if members.len() < m0 as usize {
                Graph::complete(members.len())
            } else {
                let mut rng = derive_rng_stream(master_seed, &format!("net/neighbour/{h}"), replicate);
                barabasi_albert(members.len(), m0 as usize, m as usize, &mut rng)?
            };
            Ok(NeighbourNetwork { members: members.clone(), graph })
        })
        .collect()
}

/// Merge disjoint neighbour networks into one graph over agent ids.
pub fn union_graph(n: usize, parts: &[NeighbourNetwork]) -> Graph {
    let mut adj = vec![Vec::new(); n];
    for p in parts {
        p.graph.relabel_into(&p.members, &mut adj);
    }
    Graph::from_adjacency(adj)
}

/// The two networks an agent observes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialNetworks {
    pub global: Graph,
    pub neighbour: Graph,
}

/// Agent ids grouped by neighbourhood index.
pub fn group_by_neighbourhood(neighbourhood_of: &[u32], count: usize) -> Vec<Vec<u32>> {
    let mut groups = vec![Vec::new(); count];
    for (agent, &h) in neighbourhood_of.iter().enumerate() {
        groups[h as usize].push(agent as u32);
    }
    groups
}

/// Generate both networks for replicate `replicate`.
pub fn generate_networks(cfg: &ScenarioConfig, neighbourhood_of: &[u32], replicate: u64) -> Result<SocialNetworks> {
    let n = neighbourhood_of.len();
    let net = &cfg.network;
    let mut rng = derive_rng_stream(cfg.master_seed, "net", replicate);
    let global = watts_strogatz(n, net.small_world_k as usize, net.small_world_beta, &mut rng)?;
    let neighbour_replicate = if net.regenerate_neighbour_networks { replicate } else { 0 };
    let neighbour = match net.neighbour_scope {
        NeighbourScope::PerNeighbourhood => {
            let groups = group_by_neighbourhood(neighbourhood_of, cfg.neighbourhood_count as usize);
            let parts = build_neighbour_networks(
                &groups,
                net.ba_m0,
                net.ba_m,
                cfg.master_seed,
                neighbour_replicate,
            )?;
            union_graph(n, &parts)
        }
        NeighbourScope::WholePopulation => {
            let mut rng = derive_rng_stream(cfg.master_seed, "net/neighbour", neighbour_replicate);
            barabasi_albert(n, net.ba_m0 as usize, net.ba_m as usize, &mut rng)?
        }
    };
    Ok(SocialNetworks { global, neighbour })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_edges_rejects_bad_input() {
        assert!(Graph::from_edges(3, &[(0, 0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 3)]).is_err());
        let g = Graph::from_edges(3, &[(2, 0), (0, 1)]).unwrap();
        assert_eq!(g.neighbours(0), &[1, 2]);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn complete_graph() {
        let g = Graph::complete(5);
        assert_eq!(g.edge_count(), 10);
        assert!(g.check().is_ok());
        assert_eq!(Graph::complete(1).edge_count(), 0);
    }

    #[test]
    fn neighbour_networks_partition_agents() {
        let assignment: Vec<u32> = (0..400).map(|i| (i * 7 % 20) as u32).collect();
        let groups = group_by_neighbourhood(&assignment, 20);
        let parts = build_neighbour_networks(&groups, 3, 3, 1, 0).unwrap();
        assert_eq!(parts.len(), 20);
        let mut seen = vec![false; 400];
        for p in &parts {
            for &a in &p.members {
                assert!(!seen[a as usize]);
                seen[a as usize] = true;
            }
        }
        assert!(seen.iter().all(|s| *s));
        let g = union_graph(400, &parts);
        assert!(g.check().is_ok());
        for (u, v) in g.edges() {
            assert_eq!(assignment[u as usize], assignment[v as usize], "cross-neighbourhood edge");
        }
    }

    #[test]
    fn small_neighbourhood_falls_back_to_complete() {
        let parts = build_neighbour_networks(&[vec![4, 9]], 3, 3, 1, 0).unwrap();
        assert_eq!(parts[0].graph, Graph::complete(2));
        let g = union_graph(10, &parts);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(4, 9)]);
    }

    #[test]
    fn empty_neighbourhood_is_an_error() {
        assert!(build_neighbour_networks(&[vec![0, 1, 2, 3], vec![]], 3, 3, 1, 0).is_err());
    }

    #[test]
    fn replicates_differ_and_repeat() {
        let cfg = ScenarioConfig::desk();
        let assignment: Vec<u32> = (0..1000).map(|i| (i % 20) as u32).collect();
        let a = generate_networks(&cfg, &assignment, 0).unwrap();
        let b = generate_networks(&cfg, &assignment, 0).unwrap();
        let c = generate_networks(&cfg, &assignment, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.global, c.global);
        assert_ne!(a.neighbour, c.neighbour);

        let mut fixed = cfg.clone();
        fixed.network.regenerate_neighbour_networks = false;
        let d = generate_networks(&fixed, &assignment, 0).unwrap();
        let e = generate_networks(&fixed, &assignment, 1).unwrap();
        assert_eq!(d.neighbour, e.neighbour);
        assert_ne!(d.global, e.global);
    }
}
