//! Text interchange formats: labeled edge lists and 0/1 incidence matrices.
//!
//! Edge lists carry arbitrary string labels, one `top bottom` pair per line;
//! `#` starts a comment line. Labels are mapped to dense indices in order of
//! first appearance and kept for output. The matrix format is a `n m` header
//! followed by n rows of m space-separated 0/1 digits.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::graph::BipartiteGraph;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

/// A bipartite graph together with the external labels of its nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    graph: BipartiteGraph,
    top_labels: Vec<String>,
    bottom_labels: Vec<String>,
}

impl LabeledGraph {
    /// Attach plain index labels ("0", "1", ...) to a graph.
    pub fn with_index_labels(graph: BipartiteGraph) -> Self {
        let top_labels = (0..graph.top_count()).map(|i| i.to_string()).collect();
        let bottom_labels = (0..graph.bottom_count()).map(|j| j.to_string()).collect();
        Self {
            graph,
            top_labels,
            bottom_labels,
        }
    }

    /// Same labels, different structure; the replacement must have the same
    /// dimensions (it is typically a degree-preserving resample).
    pub fn with_structure(&self, graph: BipartiteGraph) -> Self {
        assert_eq!(graph.top_count(), self.graph.top_count());
        assert_eq!(graph.bottom_count(), self.graph.bottom_count());
        Self {
            graph,
            top_labels: self.top_labels.clone(),
            bottom_labels: self.bottom_labels.clone(),
        }
    }

    pub fn graph(&self) -> &BipartiteGraph {
        &self.graph
    }

    pub fn top_label(&self, i: usize) -> &str {
        &self.top_labels[i]
    }

    pub fn bottom_label(&self, j: usize) -> &str {
        &self.bottom_labels[j]
    }
}

/// Parse a labeled edge list. Duplicate edges and malformed lines are
/// reported with their 1-based line number. Nodes of degree zero cannot be
/// expressed in this format.
pub fn read_edge_list<R: BufRead>(reader: R) -> Result<LabeledGraph, FormatError> {
    let mut top_index: HashMap<String, u32> = HashMap::new();
    let mut bottom_index: HashMap<String, u32> = HashMap::new();
    let mut top_labels: Vec<String> = Vec::new();
    let mut bottom_labels: Vec<String> = Vec::new();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut seen: HashMap<(u32, u32), usize> = HashMap::new();

    for (number, line) in reader.lines().enumerate() {
        let number = number + 1;
        let line = line?;
        let content = line.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let (top, bottom) = match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(t), Some(b), None) => (t, b),
            _ => {
                return Err(parse_err(
                    number,
                    format!("expected `top_label bottom_label`, found `{content}`"),
                ))
            }
        };
        let ti = *top_index.entry(top.to_string()).or_insert_with(|| {
            top_labels.push(top.to_string());
            (top_labels.len() - 1) as u32
        });
        let bi = *bottom_index.entry(bottom.to_string()).or_insert_with(|| {
            bottom_labels.push(bottom.to_string());
            (bottom_labels.len() - 1) as u32
        });
        if let Some(first) = seen.insert((ti, bi), number) {
            return Err(parse_err(
                number,
                format!("duplicate edge `{top} {bottom}` (first seen on line {first})"),
            ));
        }
        edges.push((ti, bi));
    }

    let graph = BipartiteGraph::from_edge_list(&edges, top_labels.len(), bottom_labels.len())
        .expect("indices are dense and duplicates were rejected");
    Ok(LabeledGraph {
        graph,
        top_labels,
        bottom_labels,
    })
}

/// Write a labeled edge list, one edge per line in index order.
pub fn write_edge_list<W: Write>(mut writer: W, labeled: &LabeledGraph) -> io::Result<()> {
    for (i, j) in labeled.graph.edges() {
        writeln!(
            writer,
            "{} {}",
            labeled.top_label(i as usize),
            labeled.bottom_label(j as usize)
        )?;
    }
    Ok(())
}

/// Parse an incidence matrix: header `n m`, then n rows of m 0/1 digits.
pub fn read_incidence_matrix<R: BufRead>(reader: R) -> Result<BipartiteGraph, FormatError> {
    let mut rows: Vec<Vec<u8>> = Vec::new();
    let mut dims: Option<(usize, usize)> = None;
    let mut header_line = 0;

    for (number, line) in reader.lines().enumerate() {
        let number = number + 1;
        let line = line?;
        let content = line.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        match dims {
            None => {
                let mut tokens = content.split_whitespace();
                let parsed = match (tokens.next(), tokens.next(), tokens.next()) {
                    (Some(n), Some(m), None) => n.parse().ok().zip(m.parse().ok()),
                    _ => None,
                };
                dims = Some(parsed.ok_or_else(|| {
                    parse_err(number, format!("expected header `n m`, found `{content}`"))
                })?);
                header_line = number;
            }
            Some((n, m)) => {
                if rows.len() == n {
                    return Err(parse_err(
                        number,
                        format!("unexpected content after {n} matrix rows"),
                    ));
                }
                let mut row = Vec::with_capacity(m);
                for token in content.split_whitespace() {
                    match token {
                        "0" => row.push(0),
                        "1" => row.push(1),
                        other => {
                            return Err(parse_err(
                                number,
                                format!("matrix entry `{other}` is not 0 or 1"),
                            ))
                        }
                    }
                }
                if row.len() != m {
                    return Err(parse_err(
                        number,
                        format!("expected {m} entries, found {}", row.len()),
                    ));
                }
                rows.push(row);
            }
        }
    }

    let (n, _) = dims.ok_or_else(|| parse_err(0, "empty input, expected `n m` header"))?;
    if rows.len() != n {
        return Err(parse_err(
            header_line,
            format!("header promises {n} rows, found {}", rows.len()),
        ));
    }
    Ok(BipartiteGraph::from_incidence_matrix(&rows).expect("entries validated during parse"))
}

/// Write an incidence matrix with its `n m` header.
pub fn write_incidence_matrix<W: Write>(mut writer: W, graph: &BipartiteGraph) -> io::Result<()> {
    writeln!(writer, "{} {}", graph.top_count(), graph.bottom_count())?;
    for row in graph.to_incidence_matrix() {
        let digits: Vec<&str> = row
            .iter()
            .map(|&v| if v == 1 { "1" } else { "0" })
            .collect();
        writeln!(writer, "{}", digits.join(" "))?;
    }
    Ok(())
}
