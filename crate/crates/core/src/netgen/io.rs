//! Edge-list text files.
//!
//! ```text
//! # normshift edge list
//! # n=1000
//! # kind=global k=10 beta=0.1
//! # seed=42 replicate=3
//! 0 1
//! 0 2
//! ...
//! ```
//! Header lines start with `#` and carry `key=value` pairs; `n` is
//! required. Each body line is one undirected edge `u v` with `u < v`,
//! sorted, so identical graphs give identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::Graph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeListFile {
    /// Header metadata in insertion order (apart from `n`).
    pub header: Vec<(String, String)>,
    pub graph: Graph,
}

pub fn format_edge_list(graph: &Graph, header: &[(String, String)]) -> String {
    let mut out = String::from("# normshift edge list\n");
    let _ = writeln!(out, "# n={}", graph.node_count());
    for (k, v) in header {
        let _ = writeln!(out, "# {k}={v}");
    }
    for (u, v) in graph.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

pub fn parse_edge_list(text: &str) -> Result<EdgeListFile> {
    let mut meta = BTreeMap::new();
    let mut header = Vec::new();
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            for pair in rest.split_whitespace() {
                if let Some((k, v)) = pair.split_once('=') {
                    if k != "n" {
                        header.push((k.to_string(), v.to_string()));
                    }
                    meta.insert(k.to_string(), v.to_string());
                }
            }
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |s: Option<&str>| -> Result<u32> {
            s.ok_or_else(|| Error::parse("edge list", format!("line {}: missing endpoint", lineno + 1)))?
                .parse()
                .map_err(|e| Error::parse("edge list", format!("line {}: {e}", lineno + 1)))
        };
        let u = parse(it.next())?;
        let v = parse(it.next())?;
        edges.push((u, v));
    }
    let n: usize = meta
        .get("n")
        .ok_or_else(|| Error::parse("edge list", "header lacks n=<nodes>"))?
        .parse()
        .map_err(|e| Error::parse("edge list", e))?;
    let graph = Graph::from_edges(n, &edges)?;
    Ok(EdgeListFile { header, graph })
}

pub fn save_edge_list(path: &Path, graph: &Graph, header: &[(String, String)]) -> Result<()> {
    crate::io::write_atomic(path, format_edge_list(graph, header).as_bytes())
}

pub fn load_edge_list(path: &Path) -> Result<EdgeListFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::watts_strogatz;
    use crate::rng::derive_rng_stream;

    #[test]
    fn round_trip() {
        let g = watts_strogatz(200, 6, 0.2, &mut derive_rng_stream(1, "test/edges", 0)).unwrap();
        let header = vec![("kind".to_string(), "global".to_string()), ("seed".to_string(), "1".to_string())];
        let text = format_edge_list(&g, &header);
        let parsed = parse_edge_list(&text).unwrap();
        assert_eq!(parsed.graph, g);
        assert_eq!(parsed.header, header);
        assert_eq!(format_edge_list(&parsed.graph, &parsed.header), text);
    }

    #[test]
    fn isolated_nodes_survive() {
        let g = Graph::empty(4);
        let parsed = parse_edge_list(&format_edge_list(&g, &[])).unwrap();
        assert_eq!(parsed.graph.node_count(), 4);
    }

    #[test]
    fn missing_node_count_rejected() {
        assert!(parse_edge_list("0 1\n").is_err());
        assert!(parse_edge_list("# n=2\n0 x\n").is_err());
    }
}
