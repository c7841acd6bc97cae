//! Transportation simplex on the bipartite supply/demand graph.
//!
//! The basis is a spanning tree over `m + n` nodes (rows first, then
//! columns) with exactly `m + n - 1` basic cells, degenerate zeros
//! included. Node potentials are the MODI multipliers `u_r` and `v_c`
//! with `u_r + v_c = C[r][c]` on every basic cell and `u_0 = 0`.
//!
//! Pricing scans cells in fixed-size blocks and takes the most negative
//! reduced cost of the first block that has one. The tree is kept strongly
//! feasible (rooted at row 0, every zero-flow arc points from a row parent
//! to a column child), which rules out cycling under degenerate pivots.

use ndarray::{Array2, ArrayView2, CowArray, Ix2};

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

pub(crate) struct TransportSimplex<'a> {
    cost: CowArray<'a, f64, Ix2>,
    m: usize,
    n: usize,
    arc_row: Vec<usize>,
    arc_col: Vec<usize>,
    flow: Vec<f64>,
    adj: Vec<Vec<usize>>,
    parent: Vec<usize>,
    parent_arc: Vec<usize>,
    depth: Vec<usize>,
    pot: Vec<f64>,
    next_cell: usize,
    tol: f64,
}

impl<'a> TransportSimplex<'a> {
    /// Builds the north-west-corner basis. `supply` and `demand` must be
    /// strictly positive and have equal totals up to rounding.
    pub(crate) fn new(supply: &[f64], demand: &[f64], cost: ArrayView2<'a, f64>) -> Self {
        let (m, n) = (supply.len(), demand.len());
        debug_assert_eq!(cost.dim(), (m, n));
        let arcs = m + n - 1;
        let mut s = Self {
            cost: if cost.is_standard_layout() {
                CowArray::from(cost)
            } else {
                CowArray::from(cost.to_owned())
            },
            m,
            n,
            arc_row: Vec::with_capacity(arcs),
            arc_col: Vec::with_capacity(arcs),
            flow: Vec::with_capacity(arcs),
            adj: vec![Vec::new(); m + n],
            parent: vec![NONE; m + n],
            parent_arc: vec![NONE; m + n],
            depth: vec![0; m + n],
            pot: vec![0.0; m + n],
            next_cell: 0,
            tol: 0.0,
        };
        let cmax = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        s.tol = 1e-11 * cmax.max(f64::MIN_POSITIVE);

        let mut ra = supply.to_vec();
        let mut rb = demand.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let x = ra[i].min(rb[j]).max(0.0);
            ra[i] -= x;
            rb[j] -= x;
            s.push_arc(i, j, x);
            if i == m - 1 && j == n - 1 {
                break;
            }
            // On ties advance the column: the resulting zero-flow arc then
            // hangs a column below a row, which keeps the start tree strongly feasible.
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || ra[i] < rb[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        debug_assert_eq!(s.flow.len(), arcs);
        s.rebuild_tree();
        s
    }

    fn push_arc(&mut self, r: usize, c: usize, f: f64) {
        let id = self.flow.len();
        self.arc_row.push(r);
        self.arc_col.push(c);
        self.flow.push(f);
        self.adj[r].push(id);
        self.adj[self.m + c].push(id);
    }

    #[inline]
    fn arc_cost(&self, a: usize) -> f64 {
        self.cost[[self.arc_row[a], self.arc_col[a]]]
    }

    #[inline]
    fn other_end(&self, a: usize, node: usize) -> usize {
        let r = self.arc_row[a];
        if node == r {
            self.m + self.arc_col[a]
        } else {
            r
        }
    }

    fn rebuild_tree(&mut self) {
        self.parent[0] = NONE;
        self.parent_arc[0] = NONE;
        self.depth[0] = 0;
        self.pot[0] = 0.0;
        self.hang_subtree(0);
    }

    /// Recomputes parent, depth and potential for everything below `root`,
    /// whose own fields must already be set.
    fn hang_subtree(&mut self, root: usize) {
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            for k in 0..self.adj[x].len() {
                let a = self.adj[x][k];
                if a == self.parent_arc[x] {
                    continue;
                }
                let y = self.other_end(a, x);
                self.parent[y] = x;
                self.parent_arc[y] = a;
                self.depth[y] = self.depth[x] + 1;
                self.pot[y] = self.arc_cost(a) - self.pot[x];
                stack.push(y);
            }
        }
    }

    fn price_block(&mut self) -> Option<(usize, usize)> {
        let (m, n) = (self.m, self.n);
        let total = m * n;
        let block = ((total as f64).sqrt().ceil() as usize).max(16).min(total);
        let cost = self.cost.as_slice().expect("standard layout");
        let (u, v) = self.pot.split_at(m);
        let mut best = -self.tol;
        let mut best_cell = None;
        let (mut r, mut c) = (self.next_cell / n, self.next_cell % n);
        let (mut seen, mut scanned) = (0, 0);
        while scanned < total {
            let end = n.min(c + (block - seen)).min(c + (total - scanned));
            let row = &cost[r * n..(r + 1) * n];
            let ur = u[r];
            for j in c..end {
                let rc = row[j] - ur - v[j];
                if rc < best {
                    best = rc;
                    best_cell = Some((r, j));
                }
            }
            seen += end - c;
            scanned += end - c;
            c = end;
            if c == n {
                c = 0;
                r = if r + 1 == m { 0 } else { r + 1 };
            }
            if seen == block {
                if best_cell.is_some() {
                    break;
                }
                seen = 0;
            }
        }
        self.next_cell = r * n + c;
        best_cell
    }

    /// Performs one pivot on the entering cell and returns the amount of mass moved.
    ///
    /// Mass enters on `r -> c` and circulates `join -> .. -> r -> c -> .. -> join`.
    /// Among the blocking arcs the last one in that order leaves, which keeps
    /// every zero-flow tree arc pointing away from the root.
    fn pivot(&mut self, r: usize, c: usize) -> f64 {
        let m = self.m;
        let col = m + c;
        let (mut a, mut b) = (r, col);
        while a != b {
            if self.depth[a] >= self.depth[b] {
                a = self.parent[a];
            } else {
                b = self.parent[b];
            }
        }
        let join = a;

        // Row side: mass flows parent -> child, so arcs whose child is a row lose it.
        let mut theta = f64::INFINITY;
        let mut leave_node = NONE;
        let mut leaving_on_row_side = true;
        let mut x = r;
        while x != join {
            if x < m && self.flow[self.parent_arc[x]] < theta {
                theta = self.flow[self.parent_arc[x]];
                leave_node = x;
            }
            x = self.parent[x];
        }
        // Column side: mass flows child -> parent, so arcs whose child is a column lose it.
        let mut x = col;
        while x != join {
            if x >= m && self.flow[self.parent_arc[x]] <= theta {
                theta = self.flow[self.parent_arc[x]];
                leave_node = x;
                leaving_on_row_side = false;
            }
            x = self.parent[x];
        }
        debug_assert!(leave_node != NONE && theta.is_finite());

        let mut x = r;
        while x != join {
            let arc = self.parent_arc[x];
            self.flow[arc] += if x < m { -theta } else { theta };
            x = self.parent[x];
        }
        let mut x = col;
        while x != join {
            let arc = self.parent_arc[x];
            self.flow[arc] += if x >= m { -theta } else { theta };
            x = self.parent[x];
        }

        // Detach the subtree below the leaving arc and hang it from the entering one.
        let leave = self.parent_arc[leave_node];
        let (lr, lc) = (self.arc_row[leave], m + self.arc_col[leave]);
        let (inside, outside) = if leaving_on_row_side { (r, col) } else { (col, r) };
        self.adj[lr].retain(|&x| x != leave);
        self.adj[lc].retain(|&x| x != leave);

        // Reuse the leaving arc's slot for the entering cell.
        self.arc_row[leave] = r;
        self.arc_col[leave] = c;
        self.flow[leave] = theta;
        self.adj[r].push(leave);
        self.adj[col].push(leave);

        self.parent[inside] = outside;
        self.parent_arc[inside] = leave;
        self.depth[inside] = self.depth[outside] + 1;
        self.pot[inside] = self.arc_cost(leave) - self.pot[outside];
        self.hang_subtree(inside);
        theta
    }

    pub(crate) fn solve(mut self) -> Result<Array2<f64>> {
        let cap = 10 * (self.m + self.n) * (self.m + self.n);
        let mut iterations = 0usize;
        while let Some((r, c)) = self.price_block() {
            iterations += 1;
            if iterations > cap {
                return Err(Error::NumericalFailure(format!(
                    "transportation simplex exceeded {cap} pivots"
                )));
            }
            self.pivot(r, c);
        }
        let mut out = Array2::zeros((self.m, self.n));
        for a in 0..self.flow.len() {
            out[[self.arc_row[a], self.arc_col[a]]] += self.flow[a];
        }
        Ok(out)
    }
}
