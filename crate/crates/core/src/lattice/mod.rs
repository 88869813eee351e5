//! Crystal lattices encoded as finite quotient graphs with integer shifts.
//!
//! An oriented edge `tail -> head` with shift `s` stands for the lattice edge
//! from `(σ, tail)` to `(σ + s, head)` for every period `σ ∈ ℤ^d`. Edges are
//! stored in reverse pairs: edge `2k + 1` is the reverse of edge `2k`.

mod scaled;
mod word;

pub use scaled::{ScaledGraph, UnorientedEdge};
pub use word::{
    ball_offsets, cell_ball, cyclic_word_length, verify_ball_count_lemma, word_length,
    BallCountRow,
};

use std::collections::VecDeque;

use crate::error::LatticeError;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BaseEdge {
    pub tail: usize,
    pub head: usize,
    pub shift: Vec<i64>,
}

impl BaseEdge {
    pub fn new(tail: usize, head: usize, shift: Vec<i64>) -> Self {
        BaseEdge { tail, head, shift }
    }

    pub fn reversed(&self) -> BaseEdge {
        BaseEdge {
            tail: self.head,
            head: self.tail,
            shift: self.shift.iter().map(|s| -s).collect(),
        }
    }
}

/// Finite quotient `X₀ = (V₀, E₀)` of a `ℤ^d`-crystal lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientGraph {
    dim: usize,
    num_vertices: usize,
    edges: Vec<BaseEdge>,
    out_edges: Vec<Vec<usize>>,
}

impl QuotientGraph {
    /// Builds the graph from unoriented edges, adding each reverse.
    pub fn from_unoriented(
        dim: usize,
        num_vertices: usize,
        edges: impl IntoIterator<Item = BaseEdge>,
    ) -> Result<Self, LatticeError> {
        let mut oriented = Vec::new();
        for e in edges {
            let r = e.reversed();
            oriented.push(e);
            oriented.push(r);
        }
        Self::assemble(dim, num_vertices, oriented)
    }

    /// Builds the graph from oriented edges; every edge must have its reverse
    /// somewhere in the list.
    pub fn from_oriented(
        dim: usize,
        num_vertices: usize,
        edges: Vec<BaseEdge>,
    ) -> Result<Self, LatticeError> {
        check_edges(dim, num_vertices, &edges)?;
        let mut used = vec![false; edges.len()];
        let mut paired = Vec::with_capacity(edges.len());
        for i in 0..edges.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            let want = edges[i].reversed();
            let partner = (0..edges.len()).find(|&j| !used[j] && edges[j] == want);
            match partner {
                Some(j) => {
                    used[j] = true;
                    paired.push(edges[i].clone());
                    paired.push(edges[j].clone());
                }
                None => {
                    let e = &edges[i];
                    return Err(LatticeError::MissingReverse {
                        edge: i,
                        tail: e.tail,
                        head: e.head,
                        shift: e.shift.clone(),
                    });
                }
            }
        }
        Self::assemble(dim, num_vertices, paired)
    }

    fn assemble(
        dim: usize,
        num_vertices: usize,
        edges: Vec<BaseEdge>,
    ) -> Result<Self, LatticeError> {
        check_edges(dim, num_vertices, &edges)?;
        let mut out_edges = vec![Vec::new(); num_vertices];
        for (i, e) in edges.iter().enumerate() {
            out_edges[e.tail].push(i);
        }
        let graph = QuotientGraph {
            dim,
            num_vertices,
            edges,
            out_edges,
        };
        graph.check_connected()?;
        if !graph.fundamental_domain_connected() {
            log::warn!(
                "the cell-0 copy of V0 is not connected through zero-shift edges; \
                 block averages still use it as the fundamental domain"
            );
        }
        Ok(graph)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    /// Number of oriented edges `|E₀|`.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[BaseEdge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &BaseEdge {
        &self.edges[e]
    }

    pub fn reverse(&self, e: usize) -> usize {
        e ^ 1
    }

    /// `E_x`, the oriented edges leaving `x`.
    pub fn out_edges(&self, x: usize) -> &[usize] {
        &self.out_edges[x]
    }

    pub fn degree(&self, x: usize) -> usize {
        self.out_edges[x].len()
    }

    /// Lift potentials from a spanning tree rooted at vertex 0: the period
    /// cell each vertex lands in when the tree is lifted from cell 0.
    fn tree_potentials(&self) -> Result<Vec<Vec<i64>>, LatticeError> {
        let mut pot: Vec<Option<Vec<i64>>> = vec![None; self.num_vertices];
        pot[0] = Some(vec![0; self.dim]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            let px = pot[x].clone().expect("visited");
            for &e in &self.out_edges[x] {
                let edge = &self.edges[e];
                if pot[edge.head].is_none() {
                    pot[edge.head] = Some(px.iter().zip(&edge.shift).map(|(a, b)| a + b).collect());
                    queue.push_back(edge.head);
                }
            }
        }
        pot.into_iter()
            .enumerate()
            .map(|(v, p)| p.ok_or(LatticeError::Disconnected { vertex: v }))
            .collect()
    }

    /// Index of the subgroup of `ℤ^d` generated by cycle shifts; 1 means the
    /// lifted graph is connected.
    pub fn span_index(&self) -> Result<u64, LatticeError> {
        let pot = self.tree_potentials()?;
        let cycles: Vec<Vec<i64>> = self
            .edges
            .iter()
            .map(|e| {
                (0..self.dim)
                    .map(|i| pot[e.tail][i] + e.shift[i] - pot[e.head][i])
                    .collect()
            })
            .filter(|c: &Vec<i64>| c.iter().any(|&v| v != 0))
            .collect();
        Ok(lattice_index(cycles, self.dim).unwrap_or(0))
    }

    fn check_connected(&self) -> Result<(), LatticeError> {
        match self.span_index()? {
            1 => Ok(()),
            index => Err(LatticeError::ShiftsDoNotSpan { index }),
        }
    }

    /// Whether `V₀` placed in cell 0 is connected through zero-shift edges.
    pub fn fundamental_domain_connected(&self) -> bool {
        let mut seen = vec![false; self.num_vertices];
        seen[0] = true;
        let mut stack = vec![0usize];
        while let Some(x) = stack.pop() {
            for &e in &self.out_edges[x] {
                let edge = &self.edges[e];
                if edge.shift.iter().all(|&s| s == 0) && !seen[edge.head] {
                    seen[edge.head] = true;
                    stack.push(edge.head);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

fn check_edges(dim: usize, num_vertices: usize, edges: &[BaseEdge]) -> Result<(), LatticeError> {
    if dim == 0 {
        return Err(LatticeError::ZeroDimension);
    }
    if num_vertices == 0 {
        return Err(LatticeError::NoVertices);
    }
    for (i, e) in edges.iter().enumerate() {
        if e.shift.len() != dim {
            return Err(LatticeError::ShiftDimension {
                edge: i,
                expected: dim,
                found: e.shift.len(),
            });
        }
        for v in [e.tail, e.head] {
            if v >= num_vertices {
                return Err(LatticeError::VertexOutOfRange {
                    edge: i,
                    vertex: v,
                    count: num_vertices,
                });
            }
        }
        if e.tail == e.head && e.shift.iter().all(|&s| s == 0) {
            return Err(LatticeError::ZeroShiftLoop {
                edge: i,
                vertex: e.tail,
            });
        }
    }
    Ok(())
}

/// Index `[ℤ^d : L]` of the lattice spanned by `rows`, or `None` when the
/// rows do not have full rank. Integer row reduction keeps everything exact.
fn lattice_index(mut rows: Vec<Vec<i64>>, dim: usize) -> Option<u64> {
    let mut rows: Vec<Vec<i128>> = rows
        .drain(..)
        .map(|r| r.into_iter().map(i128::from).collect())
        .collect();
    let mut index: u128 = 1;
    let mut top = 0;
    for col in 0..dim {
        loop {
            let pivot = (top..rows.len())
                .filter(|&r| rows[r][col] != 0)
                .min_by_key(|&r| rows[r][col].abs())?;
            rows.swap(top, pivot);
            let mut done = true;
            for r in (top + 1)..rows.len() {
                if rows[r][col] != 0 {
                    let q = rows[r][col].div_euclid(rows[top][col]);
                    for c in col..dim {
                        rows[r][c] -= q * rows[top][c];
                    }
                    if rows[r][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        index *= rows[top][col].unsigned_abs();
        top += 1;
    }
    u64::try_from(index).ok()
}
