//! Bipartite graph representation and degree bookkeeping.
//!
//! Graphs are stored as one sorted adjacency list per top node, the working
//! form both trade kernels operate on. The incidence matrix is a conversion,
//! not the internal representation.

use thiserror::Error;

/// Errors from graph construction and conversion.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error(
        "edge ({top}, {bottom}) out of range for {top_count} top / {bottom_count} bottom nodes"
    )]
    InvalidIndex {
        top: u32,
        bottom: u32,
        top_count: usize,
        bottom_count: usize,
    },
    #[error("duplicate edge ({top}, {bottom})")]
    DuplicateEdge { top: u32, bottom: u32 },
    #[error("incidence matrix entry {value} at ({row}, {col}) is not 0 or 1")]
    InvalidEntry { row: usize, col: usize, value: u8 },
    #[error("incidence matrix row {row} has {got} entries, expected {expected}")]
    RaggedMatrix {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("adjacency list {list} is not strictly increasing")]
    UnsortedAdjacency { list: usize },
    #[error("cannot enumerate a {top_count} x {bottom_count} space (guard: at most {max} cells)")]
    TooLarge {
        top_count: usize,
        bottom_count: usize,
        max: usize,
    },
}

/// Top and bottom degree sequences of a bipartite graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequences {
    pub top: Vec<usize>,
    pub bottom: Vec<usize>,
}

impl DegreeSequences {
    pub fn new(top: Vec<usize>, bottom: Vec<usize>) -> Self {
        Self { top, bottom }
    }

    /// Total edge count implied by the top side.
    pub fn edge_count(&self) -> usize {
        self.top.iter().sum()
    }

    /// True when the sequences could belong to some bipartite graph:
    /// equal sums and no degree exceeding the opposite side's size.
    pub fn is_consistent(&self) -> bool {
        let top_sum: usize = self.top.iter().sum();
        let bottom_sum: usize = self.bottom.iter().sum();
        top_sum == bottom_sum
            && self.top.iter().all(|&d| d <= self.bottom.len())
            && self.bottom.iter().all(|&d| d <= self.top.len())
    }
}

/// Order-independent, collision-free encoding of a graph's adjacency
/// structure. Two graphs with the same dimensions have equal keys iff their
/// adjacency lists are identical.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey(Box<[u32]>);

/// Separator between adjacency lists inside a [`CanonicalKey`]. Valid bottom
/// indices are always strictly below it.
const KEY_SEPARATOR: u32 = u32::MAX;

/// A bipartite graph with `top_count` top nodes and `bottom_count` bottom
/// nodes, held as per-top-node sorted lists of bottom indices.
///
/// Invariants maintained by every constructor and every mutation path:
/// each list is strictly increasing and every entry is below `bottom_count`.
#[derive(Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    top_count: usize,
    bottom_count: usize,
    adj: Vec<Vec<u32>>,
}

impl Clone for BipartiteGraph {
    fn clone(&self) -> Self {
        Self {
            top_count: self.top_count,
            bottom_count: self.bottom_count,
            adj: self.adj.clone(),
        }
    }

    // Reuses the destination's allocations; the sampler clones a fresh copy
    // of the observed graph for every sample.
    fn clone_from(&mut self, source: &Self) {
        self.top_count = source.top_count;
        self.bottom_count = source.bottom_count;
        self.adj.clone_from(&source.adj);
    }
}

impl BipartiteGraph {
    /// Graph with no edges.
    pub fn empty(top_count: usize, bottom_count: usize) -> Self {
        Self {
            top_count,
            bottom_count,
            adj: vec![Vec::new(); top_count],
        }
    }

    /// Build from an edge list. Rejects out-of-range indices and duplicate
    /// edges; the resulting adjacency lists are sorted.
    pub fn from_edge_list(
        edges: &[(u32, u32)],
        top_count: usize,
        bottom_count: usize,
    ) -> Result<Self, GraphError> {
        let mut graph = Self::empty(top_count, bottom_count);
        for &(top, bottom) in edges {
            if (top as usize) >= top_count || (bottom as usize) >= bottom_count {
                return Err(GraphError::InvalidIndex {
                    top,
                    bottom,
                    top_count,
                    bottom_count,
                });
            }
            graph.adj[top as usize].push(bottom);
        }
        for list in &mut graph.adj {
            list.sort_unstable();
        }
        for (top, list) in graph.adj.iter().enumerate() {
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge {
                    top: top as u32,
                    bottom: w[0],
                });
            }
        }
        Ok(graph)
    }

    /// Build from ready-made adjacency lists, validating the invariants.
    pub fn from_adjacency(adj: Vec<Vec<u32>>, bottom_count: usize) -> Result<Self, GraphError> {
        for (i, list) in adj.iter().enumerate() {
            if !list.windows(2).all(|w| w[0] < w[1]) {
                return Err(GraphError::UnsortedAdjacency { list: i });
            }
            if let Some(&v) = list.last() {
                if (v as usize) >= bottom_count {
                    return Err(GraphError::InvalidIndex {
                        top: i as u32,
                        bottom: v,
                        top_count: adj.len(),
                        bottom_count,
                    });
                }
            }
        }
        Ok(Self {
            top_count: adj.len(),
            bottom_count,
            adj,
        })
    }

    pub fn top_count(&self) -> usize {
        self.top_count
    }

    pub fn bottom_count(&self) -> usize {
        self.bottom_count
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    /// Sorted neighbors of top node `i`.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adj[i]
    }

    pub fn adjacency(&self) -> &[Vec<u32>] {
        &self.adj
    }

    /// All edges in (top, bottom) index order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().map(move |&v| (i as u32, v)))
    }

    /// Top and bottom degree sequences.
    pub fn degrees(&self) -> DegreeSequences {
        let top = self.adj.iter().map(Vec::len).collect();
        let mut bottom = vec![0usize; self.bottom_count];
        for list in &self.adj {
            for &v in list {
                bottom[v as usize] += 1;
            }
        }
        DegreeSequences { top, bottom }
    }

    /// Dense 0/1 incidence matrix, rows = top nodes.
    pub fn to_incidence_matrix(&self) -> Vec<Vec<u8>> {
        let mut rows = vec![vec![0u8; self.bottom_count]; self.top_count];
        for (i, list) in self.adj.iter().enumerate() {
            for &v in list {
                rows[i][v as usize] = 1;
            }
        }
        rows
    }

    /// Inverse of [`to_incidence_matrix`](Self::to_incidence_matrix).
    pub fn from_incidence_matrix(rows: &[Vec<u8>]) -> Result<Self, GraphError> {
        let top_count = rows.len();
        let bottom_count = rows.first().map_or(0, Vec::len);
        let mut adj = Vec::with_capacity(top_count);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != bottom_count {
                return Err(GraphError::RaggedMatrix {
                    row: i,
                    expected: bottom_count,
                    got: row.len(),
                });
            }
            let mut list = Vec::new();
            for (j, &value) in row.iter().enumerate() {
                match value {
                    0 => {}
                    1 => list.push(j as u32),
                    _ => {
                        return Err(GraphError::InvalidEntry {
                            row: i,
                            col: j,
                            value,
                        })
                    }
                }
            }
            adj.push(list);
        }
        Ok(Self {
            top_count,
            bottom_count,
            adj,
        })
    }

    /// Canonical key of the adjacency structure; see [`CanonicalKey`].
    pub fn canonical_key(&self) -> CanonicalKey {
        let mut encoded = Vec::with_capacity(self.edge_count() + self.top_count);
        for list in &self.adj {
            encoded.extend_from_slice(list);
            encoded.push(KEY_SEPARATOR);
        }
        CanonicalKey(encoded.into_boxed_slice())
    }

    /// Mutable access to the lists of two distinct top nodes. Callers must
    /// restore the sortedness invariant before the borrow ends; this is only
    /// exposed to the trade machinery inside the crate.
    pub(crate) fn lists_pair_mut(&mut self, i: usize, j: usize) -> (&mut Vec<u32>, &mut Vec<u32>) {
        assert_ne!(i, j, "a trade needs two distinct top nodes");
        if i < j {
            let (lo, hi) = self.adj.split_at_mut(j);
            (&mut lo[i], &mut hi[0])
        } else {
            let (lo, hi) = self.adj.split_at_mut(i);
            (&mut hi[0], &mut lo[j])
        }
    }

    #[cfg(debug_assertions)]
    pub(crate) fn debug_check_invariants(&self) {
        assert_eq!(self.adj.len(), self.top_count);
        for list in &self.adj {
            assert!(list.windows(2).all(|w| w[0] < w[1]));
            assert!(list.iter().all(|&v| (v as usize) < self.bottom_count));
        }
    }
}
