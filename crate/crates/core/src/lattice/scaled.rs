use crate::error::LatticeError;
use crate::lattice::QuotientGraph;

/// One unoriented edge of `X_N`, stored by its even-indexed base orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnorientedEdge {
    pub tail: u32,
    pub head: u32,
    /// Oriented edge index in the scaled graph for `tail -> head`.
    pub oriented: u32,
}

/// The `N`-scaling finite graph `X_N`, quotient of the lattice by `NΓ`.
///
/// Vertex `(σ, x)` has index `cell(σ)·|V₀| + x`, where cells are numbered in
/// mixed radix `N` with the first coordinate fastest. Oriented edge `(σ, e)`
/// has index `cell(σ)·|E₀| + e`, so the cell-0 block is the fundamental
/// edge set `E⁰`.
#[derive(Debug, Clone)]
pub struct ScaledGraph {
    base: QuotientGraph,
    n: usize,
    num_cells: usize,
    heads: Vec<u32>,
}

impl ScaledGraph {
    pub fn new(base: &QuotientGraph, n: usize) -> Result<Self, LatticeError> {
        if n == 0 {
            return Err(LatticeError::ZeroScale);
        }
        base.span_index().and_then(|i| {
            if i == 1 {
                Ok(())
            } else {
                Err(LatticeError::ShiftsDoNotSpan { index: i })
            }
        })?;
        let d = base.dim();
        let num_cells = n.pow(d as u32);
        let mut graph = ScaledGraph {
            base: base.clone(),
            n,
            num_cells,
            heads: Vec::with_capacity(num_cells * base.num_edges()),
        };
        for cell in 0..num_cells {
            for e in base.edges() {
                let target = graph.translate_cell(cell, &e.shift);
                graph.heads.push(graph.vertex(target, e.head) as u32);
            }
        }
        Ok(graph)
    }

    pub fn base(&self) -> &QuotientGraph {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// `|Γ_N| = N^d`.
    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn num_vertices(&self) -> usize {
        self.num_cells * self.base.num_vertices()
    }

    pub fn num_edges(&self) -> usize {
        self.heads.len()
    }

    pub fn vertex(&self, cell: usize, base_vertex: usize) -> usize {
        cell * self.base.num_vertices() + base_vertex
    }

    pub fn cell_of(&self, v: usize) -> usize {
        v / self.base.num_vertices()
    }

    pub fn base_vertex_of(&self, v: usize) -> usize {
        v % self.base.num_vertices()
    }

    pub fn cell_coords(&self, mut cell: usize) -> Vec<usize> {
        (0..self.dim())
            .map(|_| {
                let c = cell % self.n;
                cell /= self.n;
                c
            })
            .collect()
    }

    /// Cell index of a coordinate vector, reduced modulo `N`.
    pub fn cell_index(&self, coords: &[i64]) -> usize {
        let n = self.n as i64;
        coords
            .iter()
            .rev()
            .fold(0usize, |acc, &c| acc * self.n + c.rem_euclid(n) as usize)
    }

    /// `cell + offset` in `Γ_N`.
    pub fn translate_cell(&self, cell: usize, offset: &[i64]) -> usize {
        let n = self.n as i64;
        let mut rest = cell;
        let mut stride = 1usize;
        let mut out = 0usize;
        for &o in offset {
            let c = (rest % self.n) as i64;
            rest /= self.n;
            out += ((c + o).rem_euclid(n) as usize) * stride;
            stride *= self.n;
        }
        out
    }

    /// Action of `σ̲ ∈ Γ_N` on a vertex.
    pub fn translate_vertex(&self, v: usize, offset: &[i64]) -> usize {
        self.vertex(
            self.translate_cell(self.cell_of(v), offset),
            self.base_vertex_of(v),
        )
    }

    pub fn edge_base(&self, e: usize) -> usize {
        e % self.base.num_edges()
    }

    pub fn edge_tail(&self, e: usize) -> usize {
        let cell = e / self.base.num_edges();
        self.vertex(cell, self.base.edge(self.edge_base(e)).tail)
    }

    pub fn edge_head(&self, e: usize) -> usize {
        self.heads[e] as usize
    }

    /// `ē` for an oriented edge of `X_N`.
    pub fn edge_reverse(&self, e: usize) -> usize {
        let base_e = self.edge_base(e);
        let cell = e / self.base.num_edges();
        let target = self.translate_cell(cell, &self.base.edge(base_e).shift);
        target * self.base.num_edges() + self.base.reverse(base_e)
    }

    /// Oriented edges leaving `v`.
    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let cell = self.cell_of(v);
        let ne = self.base.num_edges();
        self.base
            .out_edges(self.base_vertex_of(v))
            .iter()
            .map(move |&e| cell * ne + e)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.base.degree(self.base_vertex_of(v))
    }

    /// Each geometric edge once, oriented as its even base edge.
    pub fn unoriented_edges(&self) -> Vec<UnorientedEdge> {
        let ne = self.base.num_edges();
        let mut out = Vec::with_capacity(self.num_edges() / 2);
        for cell in 0..self.num_cells {
            for e in (0..ne).step_by(2) {
                let idx = cell * ne + e;
                out.push(UnorientedEdge {
                    tail: self.edge_tail(idx) as u32,
                    head: self.heads[idx],
                    oriented: idx as u32,
                });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn rejects_zero_scale() {
        let g = catalog::builtin("line").unwrap().graph;
        assert_eq!(ScaledGraph::new(&g, 0).unwrap_err(), LatticeError::ZeroScale);
    }

    #[test]
    fn line_becomes_cycle() {
        let g = catalog::builtin("line").unwrap().graph;
        let s = ScaledGraph::new(&g, 4).unwrap();
        assert_eq!(s.num_vertices(), 4);
        assert_eq!(s.num_edges(), 8);
        for v in 0..4 {
            let mut heads: Vec<usize> = s.out_edges(v).map(|e| s.edge_head(e)).collect();
            heads.sort();
            let mut want = vec![(v + 1) % 4, (v + 3) % 4];
            want.sort();
            assert_eq!(heads, want);
        }
    }

    #[test]
    fn square_is_discrete_torus() {
        let g = catalog::builtin("square").unwrap().graph;
        let s = ScaledGraph::new(&g, 3).unwrap();
        assert_eq!(s.num_vertices(), 9);
        assert_eq!(s.num_edges(), 36);
        assert!((0..9).all(|v| s.degree(v) == 4));
    }

    #[test]
    fn hexagonal_counts_by_enumeration() {
        let g = catalog::builtin("hexagonal").unwrap().graph;
        let s = ScaledGraph::new(&g, 5).unwrap();
        let vertices: std::collections::HashSet<usize> = (0..s.num_edges())
            .flat_map(|e| [s.edge_tail(e), s.edge_head(e)])
            .collect();
        assert_eq!(vertices.len(), 50);
        assert_eq!(s.num_edges(), 150);
    }

    #[test]
    fn reverse_edges_swap_endpoints() {
        for name in ["line", "line2", "square", "hexagonal", "kagome"] {
            let g = catalog::builtin(name).unwrap().graph;
            for n in [1, 2, 3, 5] {
                let s = ScaledGraph::new(&g, n).unwrap();
                for e in 0..s.num_edges() {
                    let r = s.edge_reverse(e);
                    assert_ne!(r, e);
                    assert_eq!(s.edge_reverse(r), e);
                    assert_eq!(s.edge_tail(r), s.edge_head(e));
                    assert_eq!(s.edge_head(r), s.edge_tail(e));
                }
            }
        }
    }

    #[test]
    fn translation_action_is_free() {
        let g = catalog::builtin("kagome").unwrap().graph;
        let s = ScaledGraph::new(&g, 4).unwrap();
        for cell in 1..s.num_cells() {
            let offset: Vec<i64> = s.cell_coords(cell).iter().map(|&c| c as i64).collect();
            for v in 0..s.num_vertices() {
                assert_ne!(s.translate_vertex(v, &offset), v);
            }
        }
        // orbits have size N^d
        let orbit: std::collections::HashSet<usize> = (0..s.num_cells())
            .map(|c| {
                let off: Vec<i64> = s.cell_coords(c).iter().map(|&x| x as i64).collect();
                s.translate_vertex(2, &off)
            })
            .collect();
        assert_eq!(orbit.len(), 16);
    }
}
