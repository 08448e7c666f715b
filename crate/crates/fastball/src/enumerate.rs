//! Exhaustive enumeration of the space of bipartite graphs with given degree
//! sequences. This is the test oracle the sampler and the FDSM null model are
//! checked against; it is deliberately guarded to small instances.

use crate::graph::{BipartiteGraph, DegreeSequences, GraphError};

/// Enumeration refuses instances with more than this many incidence-matrix
/// cells.
pub const MAX_ENUM_CELLS: usize = 30;

/// All distinct graphs whose degree sequences equal `seq`, in a deterministic
/// (row-lexicographic) order. Infeasible sequences yield an empty vector;
/// instances over the guard yield [`GraphError::TooLarge`].
pub fn enumerate_space(seq: &DegreeSequences) -> Result<Vec<BipartiteGraph>, GraphError> {
    let top_count = seq.top.len();
    let bottom_count = seq.bottom.len();
    if top_count * bottom_count > MAX_ENUM_CELLS {
        return Err(GraphError::TooLarge {
            top_count,
            bottom_count,
            max: MAX_ENUM_CELLS,
        });
    }
    if !seq.is_consistent() {
        return Ok(Vec::new());
    }

    let mut walker = Walker {
        top: &seq.top,
        caps: seq.bottom.clone(),
        rows: Vec::with_capacity(top_count),
        bottom_count,
        out: Vec::new(),
    };
    if walker.residual_feasible(0) {
        walker.fill_row(0);
    }
    Ok(walker.out)
}

struct Walker<'a> {
    top: &'a [usize],
    /// Remaining capacity of each bottom node.
    caps: Vec<usize>,
    rows: Vec<Vec<u32>>,
    bottom_count: usize,
    out: Vec<BipartiteGraph>,
}

impl Walker<'_> {
    fn fill_row(&mut self, row: usize) {
        if row == self.top.len() {
            debug_assert!(self.caps.iter().all(|&c| c == 0));
            let graph = BipartiteGraph::from_adjacency(self.rows.clone(), self.bottom_count)
                .expect("walker emits sorted in-range lists");
            self.out.push(graph);
            return;
        }
        self.rows.push(Vec::with_capacity(self.top[row]));
        self.choose(row, 0, self.top[row]);
        self.rows.pop();
    }

    /// Extend the current row with `remaining` more columns chosen from
    /// `start..`, in increasing order.
    fn choose(&mut self, row: usize, start: usize, remaining: usize) {
        if remaining == 0 {
            if self.residual_feasible(row + 1) {
                self.fill_row(row + 1);
            }
            return;
        }
        if self.caps.len().saturating_sub(start) < remaining {
            return;
        }
        for col in start..self.caps.len() {
            if self.caps[col] == 0 {
                continue;
            }
            self.caps[col] -= 1;
            self.rows[row].push(col as u32);
            self.choose(row, col + 1, remaining - 1);
            self.rows[row].pop();
            self.caps[col] += 1;
        }
    }

    /// Gale-Ryser feasibility of the space left after all rows before
    /// `next_row` have been placed.
    fn residual_feasible(&self, next_row: usize) -> bool {
        let mut rest: Vec<usize> = self.top[next_row..].to_vec();
        rest.sort_unstable_by(|a, b| b.cmp(a));
        gale_ryser_feasible(&rest, &self.caps)
    }
}

/// Gale-Ryser condition for 0/1 matrices: row sums `rows_desc` (sorted
/// descending) and column sums `cols` are realizable iff the sums match and
/// for every prefix length k, the first k row sums fit under the column
/// profile truncated at height k.
fn gale_ryser_feasible(rows_desc: &[usize], cols: &[usize]) -> bool {
    let row_total: usize = rows_desc.iter().sum();
    let col_total: usize = cols.iter().sum();
    if row_total != col_total {
        return false;
    }
    let mut prefix = 0usize;
    for k in 1..=rows_desc.len() {
        prefix += rows_desc[k - 1];
        let capacity: usize = cols.iter().map(|&c| c.min(k)).sum();
        if prefix > capacity {
            return false;
        }
    }
    true
}
