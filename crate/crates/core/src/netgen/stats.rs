use std::collections::VecDeque;

use rand::seq::index::sample;

use super::Graph;
use crate::rng::derive_rng_stream;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphStats {
    /// `degree_histogram[d]` = number of nodes of degree `d`.
    pub degree_histogram: Vec<usize>,
    /// Mean local clustering; nodes of degree < 2 count as 0.
    pub mean_clustering: f64,
    /// Mean shortest path over reachable ordered pairs from the sampled
    /// sources; infinity when no pair is connected.
    pub mean_path_length: f64,
}

fn sorted_intersection(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn local_clustering(g: &Graph, i: usize) -> f64 {
    let ns = g.neighbours(i);
    let d = ns.len();
    if d < 2 {
        return 0.0;
    }
    let links: usize = ns.iter().map(|&u| sorted_intersection(ns, g.neighbours(u as usize))).sum();
    // each neighbour-neighbour link counted from both ends
    links as f64 / (d * (d - 1)) as f64
}

fn bfs_distance_sum(g: &Graph, source: usize, dist: &mut [u32]) -> (u64, u64) {
    dist.fill(u32::MAX);
    dist[source] = 0;
    let mut q = VecDeque::from([source]);
    let (mut sum, mut count) = (0u64, 0u64);
    while let Some(u) = q.pop_front() {
        for &v in g.neighbours(u) {
            let v = v as usize;
            if dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                sum += dist[v] as u64;
                count += 1;
                q.push_back(v);
            }
        }
    }
    (sum, count)
}

/// Degree histogram, clustering and path length. Path lengths use BFS from
/// every node when `n <= max_sources`, otherwise from `max_sources` nodes
/// sampled with a stream keyed by `seed`.
pub fn graph_stats(g: &Graph, max_sources: usize, seed: u64) -> GraphStats {
    let n = g.node_count();
    let max_degree = (0..n).map(|i| g.degree(i)).max().unwrap_or(0);
    let mut degree_histogram = vec![0; max_degree + 1];
    for i in 0..n {
        degree_histogram[g.degree(i)] += 1;
    }
    let mean_clustering = if n == 0 {
        0.0
    } else {
        (0..n).map(|i| local_clustering(g, i)).sum::<f64>() / n as f64
    };

    let sources: Vec<usize> = if n <= max_sources {
        (0..n).collect()
    } else {
        let mut rng = derive_rng_stream(seed, "netgen/stats", 0);
        let mut s = sample(&mut rng, n, max_sources).into_vec();
        s.sort_unstable();
        s
    };
    let mut dist = vec![u32::MAX; n];
    let (mut sum, mut count) = (0u64, 0u64);
    for s in sources {
        let (a, b) = bfs_distance_sum(g, s, &mut dist);
        sum += a;
        count += b;
    }
    let mean_path_length = if count == 0 { f64::INFINITY } else { sum as f64 / count as f64 };

    GraphStats { degree_histogram, mean_clustering, mean_path_length }
}

/// Least-squares slope of log CCDF against log degree for degrees
/// `>= k_min`, keeping points where at least `min_tail` nodes remain.
pub fn degree_tail_slope(g: &Graph, k_min: usize, min_tail: usize) -> f64 {
    let n = g.node_count();
    let mut degrees: Vec<usize> = (0..n).map(|i| g.degree(i)).collect();
    degrees.sort_unstable();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut i = 0;
    while i < n {
        let d = degrees[i];
        let tail = n - i;
        if d >= k_min && d > 0 && tail >= min_tail {
            xs.push((d as f64).ln());
            ys.push((tail as f64 / n as f64).ln());
        }
        while i < n && degrees[i] == d {
            i += 1;
        }
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
