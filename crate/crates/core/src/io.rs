//! Edge-list text format.
//!
//! ```text
//! # comment
//! n 3
//! 0 1 1.0
//! 1 2 1.0
//! ```
//!
//! The header `n <count>` comes first; every other non-blank line is `u v w`.
//! Anything after `#` is ignored.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// A parsed edge list before it is turned into a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeList {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl EdgeList {
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|&(u, v, _)| (u, v)).collect()
    }

    pub fn to_graph(&self) -> Result<WeightedGraph> {
        WeightedGraph::new(self.n, self.edges.iter().copied())
    }
}

struct Token<'a> {
    text: &'a str,
    col: usize,
}

fn tokens(line: &str) -> Vec<Token<'_>> {
    let body = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in body.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &body[s..i],
                    col: body[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &body[s..],
            col: body[..s].chars().count() + 1,
        });
    }
    out
}

/// Parses edge-list text; `source` names the input in error messages.
pub fn parse_edge_list(text: &str, source: &str) -> Result<EdgeList> {
    let err = |line: usize, col: usize, msg: String| Error::Parse {
        path: source.to_string(),
        line,
        col,
        msg,
    };
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let toks = tokens(raw);
        if toks.is_empty() {
            continue;
        }
        let Some(count) = n else {
            if toks[0].text != "n" {
                return Err(err(line, toks[0].col, format!("expected header `n <count>`, found `{}`", toks[0].text)));
            }
            if toks.len() != 2 {
                let col = toks.get(2).map_or(toks[0].col, |t| t.col);
                return Err(err(line, col, "header must be exactly `n <count>`".into()));
            }
            let value = toks[1]
                .text
                .parse::<usize>()
                .map_err(|_| err(line, toks[1].col, format!("invalid vertex count `{}`", toks[1].text)))?;
            n = Some(value);
            continue;
        };
        if toks.len() != 3 {
            let col = toks.get(3).map_or(toks[toks.len() - 1].col, |t| t.col);
            return Err(err(line, col, format!("expected `u v w`, found {} fields", toks.len())));
        }
        let mut ends = [0usize; 2];
        for (slot, tok) in ends.iter_mut().zip(&toks[..2]) {
            let value = tok
                .text
                .parse::<usize>()
                .map_err(|_| err(line, tok.col, format!("invalid vertex `{}`", tok.text)))?;
            if value >= count {
                return Err(err(line, tok.col, format!("vertex {value} out of range 0..{count}")));
            }
            *slot = value;
        }
        let w = toks[2]
            .text
            .parse::<f64>()
            .map_err(|_| err(line, toks[2].col, format!("invalid weight `{}`", toks[2].text)))?;
        if !w.is_finite() {
            return Err(err(line, toks[2].col, format!("weight must be finite, got {w}")));
        }
        if w < 0.0 {
            return Err(err(line, toks[2].col, format!("weight must be nonnegative, got {w}")));
        }
        let (u, v) = (ends[0], ends[1]);
        if u == v {
            return Err(err(line, toks[1].col, format!("self-loop at vertex {u}")));
        }
        let key = (u.min(v), u.max(v));
        if let Some(first) = seen.insert(key, line) {
            return Err(err(
                line,
                toks[0].col,
                format!("duplicate edge ({}, {}), first given on line {first}", key.0, key.1),
            ));
        }
        edges.push((key.0, key.1, w));
    }
    let n = n.ok_or_else(|| err(last_line.max(1), 1, "missing header `n <count>`".into()))?;
    Ok(EdgeList { n, edges })
}

pub fn parse_graph_str(text: &str, source: &str) -> Result<WeightedGraph> {
    parse_edge_list(text, source)?.to_graph()
}

pub fn read_edge_list(path: &Path) -> Result<EdgeList> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_edge_list(&text, &path.display().to_string())
}

pub fn parse_graph_file(path: &Path) -> Result<WeightedGraph> {
    read_edge_list(path)?.to_graph()
}

/// Renders a graph in the edge-list format, weights at full precision.
pub fn format_graph(g: &WeightedGraph) -> String {
    let mut out = format!("n {}\n", g.n());
    for e in g.edges() {
        let _ = writeln!(out, "{} {} {:?}", e.u, e.v, e.w);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_err(text: &str) -> (usize, usize, String) {
        match parse_graph_str(text, "t") {
            Err(Error::Parse { line, col, msg, .. }) => (line, col, msg),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn reads_a_path() {
        let g = parse_graph_str("n 3\n0 1 1.0\n1 2 1.0\n", "t").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.m(), 2);
        assert_eq!(g.laplacian(), crate::graph::families::path(3).laplacian());
    }

    #[test]
    fn comments_and_blank_lines() {
        let g = parse_graph_str("# header next\n\nn 2 # two\n  1 0 2.5 # reversed\n", "t").unwrap();
        assert_eq!(g.weight(0, 1), Some(2.5));
    }

    #[test]
    fn duplicate_is_reported_at_the_second_line() {
        let (line, col, msg) = parse_err("n 3\n0 1 1\n1 2 1\n1 0 1\n");
        assert_eq!((line, col), (4, 1));
        assert!(msg.contains("duplicate edge (0, 1)"));
    }

    #[test]
    fn negative_weight() {
        let (line, col, msg) = parse_err("n 2\n0 1 -1\n");
        assert_eq!((line, col), (2, 5));
        assert!(msg.contains("weight must be nonnegative"));
    }

    #[test]
    fn vertex_out_of_range() {
        let (line, col, msg) = parse_err("n 2\n0  5 1\n");
        assert_eq!((line, col), (2, 4));
        assert!(msg.contains("out of range"));
    }

    #[test]
    fn malformed_lines() {
        assert_eq!(parse_err("0 1 1\n").0, 1);
        assert_eq!(parse_err("n 2\n0 1\n").0, 2);
        assert_eq!(parse_err("n 2\n0 x 1\n").1, 3);
        assert_eq!(parse_err("n 2\n0 1 abc\n").1, 5);
        assert!(parse_err("").2.contains("missing header"));
    }

    #[test]
    fn format_round_trips() {
        let g = WeightedGraph::new(4, [(0, 1, 0.1), (2, 3, 1.0 / 3.0), (1, 3, 7.0)]).unwrap();
        let back = parse_graph_str(&format_graph(&g), "t").unwrap();
        assert_eq!(back.laplacian(), g.laplacian());
    }
}
