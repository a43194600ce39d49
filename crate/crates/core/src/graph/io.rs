//! `fpp-graph v1` edge-list text format.
//!
//! ```text
//! # fpp-graph v1 vertices=<V> base=<id>
//! v <id> <label>
//! e <id> <u> <v> <key>
//! ```

use std::fmt::Write as _;

use super::{Family, Graph, GraphError};

const HEADER: &str = "# fpp-graph v1";

pub fn export_graph(g: &Graph) -> String {
    let mut out = String::with_capacity(32 * (g.vertex_count() + g.edge_count()));
    let _ = writeln!(out, "{HEADER} vertices={} base={}", g.vertex_count(), g.base());
    for (id, label) in g.labels().iter().enumerate() {
        let _ = writeln!(out, "v {id} {label}");
    }
    for e in g.edges() {
        let _ = writeln!(out, "e {} {} {} {}", e.id, e.u, e.v, e.key);
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> GraphError {
    GraphError::Parse { line, msg: msg.into() }
}

fn header_field<'a>(tokens: &[&'a str], name: &str, line: usize) -> Result<&'a str, GraphError> {
    tokens
        .iter()
        .find_map(|t| t.strip_prefix(name).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| parse_err(line, format!("header missing {name}=")))
}

/// Parses the text written by [`export_graph`]. Ids must be dense and in
/// order, and stored keys must match the labels.
pub fn import_graph(text: &str) -> Result<Graph, GraphError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let rest = header
        .strip_prefix(HEADER)
        .ok_or_else(|| parse_err(1, "missing '# fpp-graph v1' header"))?;
    let tokens: Vec<&str> = rest.split_whitespace().collect();
    let vertex_count: usize = header_field(&tokens, "vertices", 1)?
        .parse()
        .map_err(|_| parse_err(1, "bad vertex count"))?;
    let base: usize = header_field(&tokens, "base", 1)?
        .parse()
        .map_err(|_| parse_err(1, "bad base"))?;

    let mut labels = Vec::with_capacity(vertex_count);
    let mut edges = Vec::new();
    let mut keys = Vec::new();
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(' ').collect();
        let num = |s: &str| s.parse::<usize>().map_err(|_| parse_err(no, format!("bad integer {s:?}")));
        match parts.as_slice() {
            ["v", id, label] => {
                if num(id)? != labels.len() {
                    return Err(parse_err(no, "vertex ids must be dense and ordered"));
                }
                if !edges.is_empty() {
                    return Err(parse_err(no, "vertex line after edge lines"));
                }
                labels.push(label.to_string());
            }
            ["e", id, u, v, key] => {
                if num(id)? != edges.len() {
                    return Err(parse_err(no, "edge ids must be dense and ordered"));
                }
                edges.push((num(u)?, num(v)?));
                keys.push((no, key.to_string()));
            }
            _ => return Err(parse_err(no, format!("unrecognised line {line:?}"))),
        }
    }
    if labels.len() != vertex_count {
        return Err(parse_err(1, format!("header says {vertex_count} vertices, found {}", labels.len())));
    }
    let g = Graph::from_edges("imported", Family::Imported, labels, &edges, base)?;
    for (e, (no, key)) in g.edges().iter().zip(keys) {
        if e.key != key {
            return Err(parse_err(no, format!("edge key {key:?} does not match labels ({})", e.key)));
        }
        if (e.u, e.v) != edges[e.id] {
            return Err(parse_err(no, "edge endpoints must be sorted"));
        }
    }
    Ok(g)
}
