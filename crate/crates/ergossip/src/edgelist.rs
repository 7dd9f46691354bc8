//! Plain-text edge lists: a header line `n m`, then `m` lines `i j w` with
//! 1-based endpoints. Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use ergossip_core::WeightedGraph;

use crate::{Error, Result};

pub fn parse_edgelist(text: &str, origin: &Path) -> Result<WeightedGraph> {
    let err = |line: usize, msg: String| Error::Format {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| err(1, "empty edge list".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(err(hline, format!("expected `n m`, got `{header}`")));
    }
    let n: usize = fields[0]
        .parse()
        .map_err(|e| err(hline, format!("node count: {e}")))?;
    let m: usize = fields[1]
        .parse()
        .map_err(|e| err(hline, format!("edge count: {e}")))?;

    let mut edges = Vec::with_capacity(m);
    for (ln, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(err(ln, format!("expected `i j w`, got `{line}`")));
        }
        let node = |s: &str| -> Result<usize> {
            let v: usize = s.parse().map_err(|e| err(ln, format!("node `{s}`: {e}")))?;
            if v == 0 || v > n {
                return Err(err(ln, format!("node {v} outside 1..={n}")));
            }
            Ok(v - 1)
        };
        let i = node(f[0])?;
        let j = node(f[1])?;
        let w: f64 = f[2]
            .parse()
            .map_err(|e| err(ln, format!("weight `{}`: {e}", f[2])))?;
        edges.push((i, j, w));
    }
    if edges.len() != m {
        return Err(err(hline, format!("header announces {m} edges, found {}", edges.len())));
    }
    Ok(WeightedGraph::new(n, edges)?)
}

pub fn read_edgelist(path: &Path) -> Result<WeightedGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edgelist(&text, path)
}

pub fn format_edgelist(g: &WeightedGraph) -> String {
    let mut s = format!("{} {}\n", g.n(), g.m());
    for &(i, j, w) in g.edges() {
        writeln!(s, "{} {} {}", i + 1, j + 1, w).unwrap();
    }
    s
}

pub fn write_edgelist(g: &WeightedGraph, path: &Path) -> Result<()> {
    std::fs::write(path, format_edgelist(g)).map_err(|e| Error::io(path, e))
}
