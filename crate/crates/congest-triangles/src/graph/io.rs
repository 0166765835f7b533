//! Plain-text edge lists.
//!
//! Format: a header line `<n> <edge-count>` followed by one `j k` line per
//! edge, whitespace separated. Vertex ids must be below `n`; self-loops and
//! duplicates are rejected with the offending line number.

use super::{Graph, GraphError};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub fn save_edge_list(g: &Graph, path: &Path) -> Result<(), GraphError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{} {}", g.vertex_count(), g.edge_count())?;
    for (j, k) in g.edges() {
        writeln!(w, "{j} {k}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_edge_list(path: &Path) -> Result<Graph, GraphError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();

    let (n, declared) = match lines.next() {
        Some((_, line)) => parse_header(&line?)?,
        None => return Err(parse_err(1, "empty file, expected header")),
    };

    let mut edges = Vec::with_capacity(declared);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let j = parse_id(it.next(), lineno)?;
        let k = parse_id(it.next(), lineno)?;
        if it.next().is_some() {
            return Err(parse_err(lineno, "expected exactly two ids"));
        }
        if j == k {
            return Err(parse_err(lineno, &format!("self-loop at vertex {j}")));
        }
        for v in [j, k] {
            if v as usize >= n {
                return Err(parse_err(lineno, &format!("vertex id {v} >= n = {n}")));
            }
        }
        if edges.contains(&(j.min(k), j.max(k))) {
            return Err(parse_err(lineno, &format!("duplicate edge {{{j}, {k}}}")));
        }
        edges.push((j.min(k), j.max(k)));
    }
    if edges.len() != declared {
        return Err(parse_err(
            1,
            &format!("header declares {declared} edges, file has {}", edges.len()),
        ));
    }
    Graph::from_edges(n, edges)
}

fn parse_header(line: &str) -> Result<(usize, usize), GraphError> {
    let mut it = line.split_whitespace();
    let n = it
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| parse_err(1, "header must start with the vertex count"))?;
    let m = it
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| parse_err(1, "header must contain the edge count"))?;
    if n == 0 {
        return Err(parse_err(1, "vertex count must be positive"));
    }
    Ok((n, m))
}

fn parse_id(tok: Option<&str>, line: usize) -> Result<u32, GraphError> {
    tok.and_then(|s| s.parse::<u32>().ok())
        .ok_or_else(|| parse_err(line, "malformed vertex id"))
}

fn parse_err(line: usize, msg: &str) -> GraphError {
    GraphError::Parse { line, msg: msg.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_gnp;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn round_trip_k3() {
        let g = Graph::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_edge_list(&g, f.path()).unwrap();
        let back = load_edge_list(f.path()).unwrap();
        assert_eq!(back.vertex_count(), 3);
        for v in 0..3 {
            assert_eq!(back.neighbors(v), g.neighbors(v));
        }
    }

    #[test]
    fn round_trip_random_graph() {
        let g = gen_gnp(50, 0.5, 8);
        let f = tempfile::NamedTempFile::new().unwrap();
        save_edge_list(&g, f.path()).unwrap();
        let back = load_edge_list(f.path()).unwrap();
        assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }

    #[test]
    fn self_loop_is_a_parse_error() {
        let f = write_tmp("3 1\n0 0\n");
        match load_edge_list(f.path()) {
            Err(GraphError::Parse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("self-loop"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_ids_and_duplicates_carry_line_numbers() {
        let f = write_tmp("3 1\n0 9\n");
        assert!(matches!(load_edge_list(f.path()), Err(GraphError::Parse { line: 2, .. })));
        let f = write_tmp("4 2\n0 1\n1 0\n");
        assert!(matches!(load_edge_list(f.path()), Err(GraphError::Parse { line: 3, .. })));
        let f = write_tmp("4 3\n0 1\n");
        assert!(matches!(load_edge_list(f.path()), Err(GraphError::Parse { line: 1, .. })));
        let f = write_tmp("4 1\nx y\n");
        assert!(matches!(load_edge_list(f.path()), Err(GraphError::Parse { line: 2, .. })));
    }
}
