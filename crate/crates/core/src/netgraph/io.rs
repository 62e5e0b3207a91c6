//! Edge-list text format: a `# nodes <n>` header, then one `u v w` line per edge.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::Graph;
use crate::error::{Error, Result};
use crate::Scalar;

pub fn write_edge_list<T: Scalar>(g: &Graph<T>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "# nodes {}", g.n_nodes())?;
    for &(u, v, weight) in g.edges() {
        writeln!(w, "{u} {v} {weight}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_edge_list(path: &Path) -> Result<Graph<f64>> {
    let text = fs::read_to_string(path)?;
    let bad = |line: usize, msg: &str| Error::Format(format!("{}:{}: {msg}", path.display(), line + 1));
    let mut n_nodes = None;
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(n) = rest.trim().strip_prefix("nodes") {
                n_nodes = Some(n.trim().parse::<usize>().map_err(|_| bad(i, "bad node count"))?);
            }
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 2 && cols.len() != 3 {
            return Err(bad(i, "expected `u v [w]`"));
        }
        let u: usize = cols[0].parse().map_err(|_| bad(i, "bad node id"))?;
        let v: usize = cols[1].parse().map_err(|_| bad(i, "bad node id"))?;
        let w: f64 = match cols.get(2) {
            Some(c) => c.parse().map_err(|_| bad(i, "bad weight"))?,
            None => 1.0,
        };
        edges.push((u, v, w));
    }
    let n = n_nodes.unwrap_or_else(|| edges.iter().map(|e| e.0.max(e.1) + 1).max().unwrap_or(0));
    Graph::from_edges(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_roundtrip() {
        let g = Graph::from_edges(5, [(0, 1, 0.25), (3, 1, 2.0)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        write_edge_list(&g, &path).unwrap();
        assert_eq!(read_edge_list(&path).unwrap(), g);
    }

    #[test]
    fn malformed_lines_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        fs::write(&path, "0 1 1\n2\n").unwrap();
        assert!(read_edge_list(&path).is_err());
        fs::write(&path, "0 1\n1 2\n").unwrap();
        assert_eq!(read_edge_list(&path).unwrap().n_nodes(), 3);
    }
}
