//! Periodic harmonic realizations, edge vectors, and the diffusion matrix.
//!
//! Positions solve `Σ_{e∈E_x} (p(te) + U·shift(e) − p(oe)) = 0` at every base
//! vertex, with one vertex pinned at the origin. When the basis is given
//! exactly (rationals and a single square root) the whole computation runs in
//! `Q(√r)`, so the published matrices come out as exact fractions.

use serde::Serialize;

use crate::catalog::{common_radicand, Basis, RealMatrix};
use crate::error::HarmonicError;
use crate::exact::{invert, solve_linear, Scalar, Surd};
use crate::fourier::FourierField;
use crate::lattice::{QuotientGraph, ScaledGraph};

/// Largest quotient solved in exact arithmetic; beyond this `i128` fractions
/// may overflow during elimination.
const EXACT_VERTEX_LIMIT: usize = 24;

const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PositionSource {
    /// Solved harmonic positions with the given vertex at the origin.
    Solved { pinned: usize },
    /// Positions supplied by the caller.
    Override,
}

/// The exact counterpart of every derived quantity.
#[derive(Debug, Clone)]
pub struct ExactRealization {
    pub positions: Vec<Vec<Surd>>,
    pub edge_vectors: Vec<Vec<Surd>>,
    pub residuals: Vec<Vec<Surd>>,
    pub diffusion: Vec<Vec<Surd>>,
    pub lattice_diffusion: Vec<Vec<Surd>>,
}

#[derive(Debug, Clone)]
pub struct HarmonicRealization {
    graph: QuotientGraph,
    basis: Basis,
    basis_inverse: Vec<Vec<f64>>,
    positions: Vec<Vec<f64>>,
    edge_vectors: Vec<Vec<f64>>,
    lattice_edge_vectors: Vec<Vec<f64>>,
    residuals: Vec<Vec<f64>>,
    diffusion: Vec<Vec<f64>>,
    lattice_diffusion: Vec<Vec<f64>>,
    source: PositionSource,
    harmonic: bool,
    exact: Option<ExactRealization>,
}

struct Derived<S> {
    basis_inverse: Vec<Vec<S>>,
    edge_vectors: Vec<Vec<S>>,
    lattice_edge_vectors: Vec<Vec<S>>,
    residuals: Vec<Vec<S>>,
    diffusion: Vec<Vec<S>>,
    lattice_diffusion: Vec<Vec<S>>,
}

fn mat_vec<S: Scalar>(m: &[Vec<S>], v: &[S]) -> Vec<S> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
        })
        .collect()
}

fn shift_image<S: Scalar>(u: &[Vec<S>], shift: &[i64]) -> Vec<S> {
    let s: Vec<S> = shift.iter().map(|&k| S::from_i64(k)).collect();
    mat_vec(u, &s)
}

fn edge_vector<S: Scalar>(
    graph: &QuotientGraph,
    u: &[Vec<S>],
    positions: &[Vec<S>],
    e: usize,
) -> Vec<S> {
    let edge = graph.edge(e);
    let image = shift_image(u, &edge.shift);
    (0..graph.dim())
        .map(|i| {
            positions[edge.head][i].clone() + image[i].clone() - positions[edge.tail][i].clone()
        })
        .collect()
}

fn residuals_of<S: Scalar>(
    graph: &QuotientGraph,
    edge_vectors: &[Vec<S>],
) -> Vec<Vec<S>> {
    let d = graph.dim();
    (0..graph.num_vertices())
        .map(|x| {
            let mut r = vec![S::zero(); d];
            for &e in graph.out_edges(x) {
                for i in 0..d {
                    r[i] = r[i].clone() + edge_vectors[e][i].clone();
                }
            }
            r
        })
        .collect()
}

fn outer_sum<S: Scalar>(vectors: &[Vec<S>], d: usize, divisor: i64) -> Vec<Vec<S>> {
    let mut m = vec![vec![S::zero(); d]; d];
    for v in vectors {
        for i in 0..d {
            for j in 0..d {
                m[i][j] = m[i][j].clone() + v[i].clone() * v[j].clone();
            }
        }
    }
    let div = S::from_i64(divisor);
    m.into_iter()
        .map(|r| r.into_iter().map(|x| x / div.clone()).collect())
        .collect()
}

fn derive<S: Scalar>(
    graph: &QuotientGraph,
    u: &[Vec<S>],
    positions: &[Vec<S>],
) -> Result<Derived<S>, HarmonicError> {
    let d = graph.dim();
    let basis_inverse = invert(u).map_err(|_| HarmonicError::SingularBasis)?;
    let edge_vectors: Vec<Vec<S>> = (0..graph.num_edges())
        .map(|e| edge_vector(graph, u, positions, e))
        .collect();
    let lattice_edge_vectors: Vec<Vec<S>> = edge_vectors
        .iter()
        .map(|v| mat_vec(&basis_inverse, v))
        .collect();
    let denom = 4 * graph.num_vertices() as i64;
    Ok(Derived {
        residuals: residuals_of(graph, &edge_vectors),
        diffusion: outer_sum(&edge_vectors, d, denom),
        lattice_diffusion: outer_sum(&lattice_edge_vectors, d, denom),
        basis_inverse,
        edge_vectors,
        lattice_edge_vectors,
    })
}

/// Pinned Laplacian solve, one right-hand side per coordinate.
fn solve_positions<S: Scalar>(
    graph: &QuotientGraph,
    u: &[Vec<S>],
    pin: usize,
) -> Result<Vec<Vec<S>>, HarmonicError> {
    let nv = graph.num_vertices();
    let d = graph.dim();
    let unknown = |x: usize| if x < pin { x } else { x - 1 };
    let n = nv - 1;
    let mut matrix = vec![vec![S::zero(); n]; n];
    let mut rhs = vec![vec![S::zero(); n]; d];
    for x in (0..nv).filter(|&x| x != pin) {
        let row = unknown(x);
        for &e in graph.out_edges(x) {
            let edge = graph.edge(e);
            matrix[row][row] = matrix[row][row].clone() + S::one();
            if edge.head != pin {
                let col = unknown(edge.head);
                matrix[row][col] = matrix[row][col].clone() - S::one();
            }
            let image = shift_image(u, &edge.shift);
            for i in 0..d {
                rhs[i][row] = rhs[i][row].clone() + image[i].clone();
            }
        }
    }
    let solution = solve_linear(matrix, rhs)
        .map_err(|s| HarmonicError::SingularSystem { column: s.column })?;
    if solution.conditioning < 1e-12 {
        log::warn!(
            "harmonic system is near-singular (pivot ratio {:e})",
            solution.conditioning
        );
    }
    Ok((0..nv)
        .map(|x| {
            if x == pin {
                vec![S::zero(); d]
            } else {
                (0..d).map(|i| solution.columns[i][unknown(x)].clone()).collect()
            }
        })
        .collect())
}

/// The basis in exact form when it and `extra` share one radicand.
fn exact_inputs<'a>(
    graph: &QuotientGraph,
    basis: &'a Basis,
    extra: Option<&'a [Vec<Surd>]>,
) -> Option<&'a [Vec<Surd>]> {
    if graph.num_vertices() > EXACT_VERTEX_LIMIT {
        return None;
    }
    let u = basis.exact_matrix()?;
    let all = u.iter().flatten().chain(extra.into_iter().flatten().flatten());
    common_radicand(all).map(|_| u)
}

fn to_f64(m: &[Vec<Surd>]) -> Vec<Vec<f64>> {
    m.iter()
        .map(|r| r.iter().map(Scalar::to_f64).collect())
        .collect()
}

fn check_basis(graph: &QuotientGraph, basis: &Basis) -> Result<(), HarmonicError> {
    let d = graph.dim();
    if basis.dim() != d || basis.matrix().iter().any(|r| r.len() != d) {
        return Err(HarmonicError::BasisShape { dim: d });
    }
    Ok(())
}

impl HarmonicRealization {
    fn assemble_exact(
        graph: &QuotientGraph,
        basis: &Basis,
        u: &[Vec<Surd>],
        positions: Vec<Vec<Surd>>,
        source: PositionSource,
    ) -> Result<Self, HarmonicError> {
        let derived = derive(graph, u, &positions)?;
        let harmonic = derived
            .residuals
            .iter()
            .flatten()
            .all(|r| *r == Surd::zero());
        Ok(HarmonicRealization {
            graph: graph.clone(),
            basis: basis.clone(),
            basis_inverse: to_f64(&derived.basis_inverse),
            positions: to_f64(&positions),
            edge_vectors: to_f64(&derived.edge_vectors),
            lattice_edge_vectors: to_f64(&derived.lattice_edge_vectors),
            residuals: to_f64(&derived.residuals),
            diffusion: to_f64(&derived.diffusion),
            lattice_diffusion: to_f64(&derived.lattice_diffusion),
            source,
            harmonic,
            exact: Some(ExactRealization {
                positions,
                edge_vectors: derived.edge_vectors,
                residuals: derived.residuals,
                diffusion: derived.diffusion,
                lattice_diffusion: derived.lattice_diffusion,
            }),
        })
    }

    fn assemble_float(
        graph: &QuotientGraph,
        basis: &Basis,
        positions: Vec<Vec<f64>>,
        source: PositionSource,
    ) -> Result<Self, HarmonicError> {
        let derived = derive(graph, basis.matrix(), &positions)?;
        let harmonic = derived
            .residuals
            .iter()
            .all(|r| norm(r) <= RESIDUAL_TOLERANCE);
        Ok(HarmonicRealization {
            graph: graph.clone(),
            basis: basis.clone(),
            basis_inverse: derived.basis_inverse,
            positions,
            edge_vectors: derived.edge_vectors,
            lattice_edge_vectors: derived.lattice_edge_vectors,
            residuals: derived.residuals,
            diffusion: derived.diffusion,
            lattice_diffusion: derived.lattice_diffusion,
            source,
            harmonic,
            exact: None,
        })
    }

    /// A realization from caller-supplied positions, harmonic or not.
    pub fn from_positions(
        graph: &QuotientGraph,
        basis: &Basis,
        positions: &RealMatrix,
    ) -> Result<Self, HarmonicError> {
        check_basis(graph, basis)?;
        let d = graph.dim();
        let values = positions.values();
        if values.len() != graph.num_vertices() || values.iter().any(|r| r.len() != d) {
            return Err(HarmonicError::PositionShape {
                expected: graph.num_vertices(),
                dim: d,
                found: values.len(),
            });
        }
        if let Some(p) = positions.exact() {
            if let Some(u) = exact_inputs(graph, basis, Some(p)) {
                return Self::assemble_exact(graph, basis, u, p.to_vec(), PositionSource::Override);
            }
        }
        Self::assemble_float(graph, basis, values.to_vec(), PositionSource::Override)
    }

    pub fn graph(&self) -> &QuotientGraph {
        &self.graph
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.graph.dim()
    }

    /// `U⁻¹`, mapping ambient vectors to lattice coordinates.
    pub fn basis_inverse(&self) -> &[Vec<f64>] {
        &self.basis_inverse
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    /// `v(e)` for every oriented base edge.
    pub fn edge_vectors(&self) -> &[Vec<f64>] {
        &self.edge_vectors
    }

    /// `U⁻¹v(e)`: edge vectors in lattice coordinates.
    pub fn lattice_edge_vectors(&self) -> &[Vec<f64>] {
        &self.lattice_edge_vectors
    }

    /// `Σ_{e∈E_x} v(e)` per base vertex.
    pub fn residuals(&self) -> &[Vec<f64>] {
        &self.residuals
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| norm(r)).fold(0.0, f64::max)
    }

    /// `𝔻 = (1/4|V₀|) Σ_{e∈E₀} v(e)v(e)ᵀ`.
    pub fn diffusion_matrix(&self) -> &[Vec<f64>] {
        &self.diffusion
    }

    /// `D̃ = U⁻¹𝔻U⁻ᵀ`, the diffusion tensor in lattice coordinates.
    pub fn lattice_diffusion(&self) -> &[Vec<f64>] {
        &self.lattice_diffusion
    }

    pub fn source(&self) -> PositionSource {
        self.source
    }

    pub fn is_harmonic(&self) -> bool {
        self.harmonic
    }

    pub fn exact(&self) -> Option<&ExactRealization> {
        self.exact.as_ref()
    }

    /// Lattice coordinates `U⁻¹u` of an ambient point.
    pub fn to_lattice(&self, u: &[f64]) -> Vec<f64> {
        mat_vec(&self.basis_inverse, u)
    }

    /// Ambient point `U·y` of lattice coordinates.
    pub fn to_ambient(&self, y: &[f64]) -> Vec<f64> {
        mat_vec(self.basis.matrix(), y)
    }

    pub fn report(&self) -> RealizationReport {
        let fmt_f = |m: &[Vec<f64>]| -> Vec<Vec<String>> {
            m.iter()
                .map(|r| r.iter().map(|v| format!("{v}")).collect())
                .collect()
        };
        let fmt_s = |m: &[Vec<Surd>]| -> Vec<Vec<String>> {
            m.iter()
                .map(|r| r.iter().map(|v| v.to_string()).collect())
                .collect()
        };
        let vecs = self.basis.vectors();
        let basis = match vecs.exact() {
            Some(x) => fmt_s(x),
            None => fmt_f(vecs.values()),
        };
        let (positions, vectors, diffusion, lattice_diffusion) = match &self.exact {
            Some(x) => (
                fmt_s(&x.positions),
                fmt_s(&x.edge_vectors),
                fmt_s(&x.diffusion),
                fmt_s(&x.lattice_diffusion),
            ),
            None => (
                fmt_f(&self.positions),
                fmt_f(&self.edge_vectors),
                fmt_f(&self.diffusion),
                fmt_f(&self.lattice_diffusion),
            ),
        };
        RealizationReport {
            dimension: self.dim(),
            vertices: self.graph.num_vertices(),
            source: match self.source {
                PositionSource::Solved { .. } => "solved".into(),
                PositionSource::Override => "override".into(),
            },
            harmonic: self.harmonic,
            exact: self.exact.is_some(),
            basis,
            positions,
            edges: self
                .graph
                .edges()
                .iter()
                .zip(vectors)
                .map(|(e, v)| EdgeRow {
                    tail: e.tail,
                    head: e.head,
                    shift: e.shift.clone(),
                    vector: v,
                })
                .collect(),
            diffusion,
            lattice_diffusion,
            residual_norms: self.residuals.iter().map(|r| norm(r)).collect(),
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeRow {
    pub tail: usize,
    pub head: usize,
    pub shift: Vec<i64>,
    pub vector: Vec<String>,
}

/// Serializable summary; numbers are strings so exact values survive.
#[derive(Debug, Clone, Serialize)]
pub struct RealizationReport {
    pub dimension: usize,
    pub vertices: usize,
    pub source: String,
    pub harmonic: bool,
    pub exact: bool,
    pub basis: Vec<Vec<String>>,
    pub positions: Vec<Vec<String>>,
    pub diffusion: Vec<Vec<String>>,
    pub lattice_diffusion: Vec<Vec<String>>,
    pub residual_norms: Vec<f64>,
    pub edges: Vec<EdgeRow>,
}

impl RealizationReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }
}

/// Harmonic realization with vertex 0 at the origin.
pub fn solve_harmonic(
    graph: &QuotientGraph,
    basis: &Basis,
) -> Result<HarmonicRealization, HarmonicError> {
    solve_harmonic_pinned(graph, basis, 0)
}

pub fn solve_harmonic_pinned(
    graph: &QuotientGraph,
    basis: &Basis,
    pin: usize,
) -> Result<HarmonicRealization, HarmonicError> {
    check_basis(graph, basis)?;
    if pin >= graph.num_vertices() {
        return Err(HarmonicError::PinOutOfRange(pin));
    }
    if let Some(u) = exact_inputs(graph, basis, None) {
        let positions = solve_positions(graph, u, pin)?;
        return HarmonicRealization::assemble_exact(
            graph,
            basis,
            u,
            positions,
            PositionSource::Solved { pinned: pin },
        );
    }
    let positions = solve_positions(graph, basis.matrix(), pin)?;
    HarmonicRealization::assemble_float(
        graph,
        basis,
        positions,
        PositionSource::Solved { pinned: pin },
    )
}

/// `Σ_{e∈E_x} v(e)` for arbitrary positions, exact when the inputs allow it.
pub fn harmonicity_residual(
    positions: &RealMatrix,
    graph: &QuotientGraph,
    basis: &Basis,
) -> Result<RealMatrix, HarmonicError> {
    check_basis(graph, basis)?;
    if let Some(p) = positions.exact() {
        if let Some(u) = exact_inputs(graph, basis, Some(p)) {
            let v: Vec<Vec<Surd>> = (0..graph.num_edges())
                .map(|e| edge_vector(graph, u, p, e))
                .collect();
            return Ok(RealMatrix::from_exact(residuals_of(graph, &v)));
        }
    }
    let p = positions.values();
    let v: Vec<Vec<f64>> = (0..graph.num_edges())
        .map(|e| edge_vector(graph, basis.matrix(), p, e))
        .collect();
    Ok(RealMatrix::from_f64(residuals_of(graph, &v)))
}

/// `Φ_N` in lattice coordinates: vertex `(σ, x)` sits at
/// `(U⁻¹p(x) + σ)/N mod 1`.
#[derive(Debug, Clone)]
pub struct ScalingMap {
    n: usize,
    dim: usize,
    coords: Vec<f64>,
}

impl ScalingMap {
    pub fn new(realization: &HarmonicRealization, graph: &ScaledGraph) -> Self {
        let d = realization.dim();
        assert_eq!(d, graph.dim(), "realization and scaled graph dimensions differ");
        let base: Vec<Vec<f64>> = realization
            .positions()
            .iter()
            .map(|p| realization.to_lattice(p))
            .collect();
        let n = graph.n();
        let inv_n = 1.0 / n as f64;
        let mut coords = Vec::with_capacity(graph.num_vertices() * d);
        for cell in 0..graph.num_cells() {
            let sigma = graph.cell_coords(cell);
            for y0 in &base {
                for i in 0..d {
                    coords.push(wrap_unit((y0[i] + sigma[i] as f64) * inv_n));
                }
            }
        }
        ScalingMap { n, dim: d, coords }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// `y ∈ [0,1)^d` for vertex `v`.
    pub fn lattice_coords(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }
}

/// `x mod 1` in `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplacianRow {
    pub n: usize,
    pub max_deviation: f64,
}

/// Averaged combinatorial Laplacian against `2∇𝔻∇J`.
///
/// For each cell, `(1/|V₀|) Σ_{x∈V₀} Σ_{e∈E_x} N²(J(te) − J(oe))` is compared
/// with `2 tr(D̃ ∇²_y J)` evaluated at the centroid of the cell's vertex images.
pub fn laplacian_convergence_check(
    realization: &HarmonicRealization,
    test_function: &FourierField,
    n_list: &[usize],
) -> Result<Vec<LaplacianRow>, HarmonicError> {
    let nv = realization.graph().num_vertices();
    let dt = realization.lattice_diffusion();
    let d = realization.dim();
    let mut centroid = vec![0.0; d];
    for p in realization.positions() {
        for (c, y) in centroid.iter_mut().zip(realization.to_lattice(p)) {
            *c += y / nv as f64;
        }
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let graph = ScaledGraph::new(realization.graph(), n)?;
        let map = ScalingMap::new(realization, &graph);
        let values: Vec<f64> = (0..graph.num_vertices())
            .map(|v| test_function.value(map.lattice_coords(v)))
            .collect();
        let n2 = (n * n) as f64;
        let mut worst: f64 = 0.0;
        for cell in 0..graph.num_cells() {
            let mut acc = 0.0;
            for x in 0..nv {
                let v = graph.vertex(cell, x);
                for e in graph.out_edges(v) {
                    acc += values[graph.edge_head(e)] - values[v];
                }
            }
            let discrete = n2 * acc / nv as f64;
            let sigma = graph.cell_coords(cell);
            let centre: Vec<f64> = (0..d)
                .map(|i| (centroid[i] + sigma[i] as f64) / n as f64)
                .collect();
            let hess = test_function.hessian(&centre);
            let mut continuum = 0.0;
            for i in 0..d {
                for j in 0..d {
                    continuum += 2.0 * dt[i][j] * hess[i][j];
                }
            }
            worst = worst.max((discrete - continuum).abs());
        }
        rows.push(LaplacianRow {
            n,
            max_deviation: worst,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn realization(name: &str) -> HarmonicRealization {
        let spec = catalog::builtin(name).unwrap();
        solve_harmonic(&spec.graph, &spec.basis).unwrap()
    }

    fn exact_diffusion(name: &str) -> Vec<Vec<String>> {
        realization(name)
            .exact()
            .expect("exact path")
            .diffusion
            .iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect())
            .collect()
    }

    #[test]
    fn square_diffusion_is_half_identity() {
        let r = realization("square");
        assert_eq!(exact_diffusion("square"), [["1/2", "0"], ["0", "1/2"]]);
        assert_eq!(r.positions(), &[vec![0.0, 0.0]]);
        let mut vs: Vec<Vec<f64>> = r.edge_vectors().to_vec();
        vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(
            vs,
            vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![0.0, 1.0], vec![1.0, 0.0]]
        );
    }

    #[test]
    fn exact_published_matrices() {
        assert_eq!(exact_diffusion("line"), [["1/2"]]);
        assert_eq!(exact_diffusion("square-skew"), [["5/8", "1/4"], ["1/4", "1/2"]]);
        assert_eq!(exact_diffusion("hexagonal"), [["3/8", "0"], ["0", "3/8"]]);
        assert_eq!(exact_diffusion("kagome"), [["3/8", "0"], ["0", "3/8"]]);
    }

    #[test]
    fn line2_solution_and_printed_positions() {
        let spec = catalog::builtin("line2").unwrap();
        let r = solve_harmonic(&spec.graph, &spec.basis).unwrap();
        let p = &r.exact().unwrap().positions;
        assert_eq!(p[0][0], Surd::zero());
        assert_eq!(p[1][0], Surd::from_ratio(1, 2));
        assert_eq!(exact_diffusion("line2"), [["1/8"]]);

        let printed = RealMatrix::from_exact(
            catalog::LINE2_PRINTED_POSITIONS
                .iter()
                .map(|r| vec![Surd::from_ratio(r[0] as i128, 1)])
                .collect(),
        );
        let o = HarmonicRealization::from_positions(&spec.graph, &spec.basis, &printed).unwrap();
        assert!(!o.is_harmonic());
        assert_eq!(o.source(), PositionSource::Override);
        assert_eq!(o.exact().unwrap().diffusion[0][0], Surd::from_ratio(5, 4));
        assert_eq!(o.exact().unwrap().residuals[0][0], Surd::from_ratio(-3, 1));
    }

    #[test]
    fn square_double_nonharmonic_residual() {
        let spec = catalog::builtin("square-double").unwrap();
        let res = harmonicity_residual(
            &catalog::square_double_nonharmonic_positions(),
            &spec.graph,
            &spec.basis,
        )
        .unwrap();
        let ex = res.exact().unwrap();
        assert_eq!(ex[0], vec![Surd::from_ratio(2, 1), Surd::zero()]);
        let solved = solve_harmonic(&spec.graph, &spec.basis).unwrap();
        assert_eq!(solved.positions()[1], vec![0.0, 0.5]);
    }

    #[test]
    fn hexagonal_position_and_cross_lattice_equality() {
        let hex = realization("hexagonal");
        let p = hex.positions()[1].clone();
        assert!(p[0].abs() < 1e-15 && (p[1] + 1.0).abs() < 1e-15, "{p:?}");
        let kag = realization("kagome");
        assert_eq!(hex.diffusion_matrix(), kag.diffusion_matrix());
        assert_eq!(hex.lattice_diffusion(), kag.lattice_diffusion());
        let dt = hex.lattice_diffusion();
        assert!((dt[0][0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((dt[0][1] + 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn skew_lattice_tensor_matches_square() {
        let skew = realization("square-skew");
        let sq = realization("square");
        assert_eq!(skew.lattice_diffusion(), sq.lattice_diffusion());
    }

    #[test]
    fn float_path_agrees_with_exact() {
        for name in catalog::builtin_names() {
            let spec = catalog::builtin(name).unwrap();
            let exact = solve_harmonic(&spec.graph, &spec.basis).unwrap();
            let float_basis = Basis::from_vectors(RealMatrix::from_f64(
                spec.basis.vectors().values().to_vec(),
            ));
            let float = solve_harmonic(&spec.graph, &float_basis).unwrap();
            assert!(float.exact().is_none());
            assert!(float.is_harmonic(), "{name}");
            for (a, b) in exact.diffusion_matrix().iter().flatten().zip(float.diffusion_matrix().iter().flatten()) {
                assert!((a - b).abs() < 1e-12, "{name}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn gauge_shift_is_a_constant_vector() {
        let spec = catalog::builtin("kagome").unwrap();
        let a = solve_harmonic_pinned(&spec.graph, &spec.basis, 0).unwrap();
        let b = solve_harmonic_pinned(&spec.graph, &spec.basis, 2).unwrap();
        let offset: Vec<f64> = (0..2).map(|i| b.positions()[0][i] - a.positions()[0][i]).collect();
        for x in 0..3 {
            for i in 0..2 {
                let diff = b.positions()[x][i] - a.positions()[x][i];
                assert!((diff - offset[i]).abs() < 1e-12);
            }
        }
        assert_eq!(a.diffusion_matrix(), b.diffusion_matrix());
        assert_eq!(
            solve_harmonic_pinned(&spec.graph, &spec.basis, 3).unwrap_err(),
            HarmonicError::PinOutOfRange(3)
        );
    }

    #[test]
    fn dirichlet_energy_is_stationary() {
        for name in ["line2", "square-double", "hexagonal", "kagome"] {
            let spec = catalog::builtin(name).unwrap();
            let r = solve_harmonic(&spec.graph, &spec.basis).unwrap();
            let u = spec.basis.matrix();
            let energy = |p: &[Vec<f64>]| -> f64 {
                (0..spec.graph.num_edges())
                    .map(|e| edge_vector(&spec.graph, u, p, e).iter().map(|x| x * x).sum::<f64>())
                    .sum::<f64>()
                    / 2.0
            };
            let h = 1e-6;
            for x in 0..spec.graph.num_vertices() {
                for i in 0..spec.graph.dim() {
                    let mut plus = r.positions().to_vec();
                    let mut minus = r.positions().to_vec();
                    plus[x][i] += h;
                    minus[x][i] -= h;
                    let g = (energy(&plus) - energy(&minus)) / (2.0 * h);
                    assert!(g.abs() < 1e-6, "{name} vertex {x} axis {i}: {g}");
                }
            }
        }
    }

    #[test]
    fn edge_vectors_are_antisymmetric_and_lift_independent() {
        for name in catalog::builtin_names() {
            let r = realization(name);
            let v = r.edge_vectors();
            for e in 0..v.len() {
                let rev = r.graph().reverse(e);
                for i in 0..r.dim() {
                    assert_eq!(v[e][i], -v[rev][i]);
                }
            }
            let n = 7;
            let g = ScaledGraph::new(r.graph(), n).unwrap();
            let map = ScalingMap::new(&r, &g);
            for e in 0..g.num_edges() {
                let yt = map.lattice_coords(g.edge_tail(e));
                let yh = map.lattice_coords(g.edge_head(e));
                let w: Vec<f64> = (0..r.dim())
                    .map(|i| {
                        let diff = yh[i] - yt[i];
                        (diff - diff.round()) * n as f64
                    })
                    .collect();
                let want = &r.lattice_edge_vectors()[g.edge_base(e)];
                for i in 0..r.dim() {
                    assert!((w[i] - want[i]).abs() < 1e-9, "{name} edge {e}");
                }
            }
        }
    }

    #[test]
    fn diffusion_identity_and_definiteness() {
        for name in catalog::builtin_names() {
            let r = realization(name);
            let d = r.dim();
            let nv = r.graph().num_vertices() as f64;
            for i in 0..d {
                for j in 0..d {
                    let s: f64 = r.edge_vectors().iter().map(|v| v[i] * v[j]).sum();
                    assert!((s - 4.0 * nv * r.diffusion_matrix()[i][j]).abs() < 1e-12);
                    assert_eq!(r.diffusion_matrix()[i][j], r.diffusion_matrix()[j][i]);
                }
            }
            let m = r.diffusion_matrix();
            let det = if d == 1 { m[0][0] } else { m[0][0] * m[1][1] - m[0][1] * m[1][0] };
            assert!(m[0][0] > 0.0 && det > 0.0, "{name}");
        }
    }

    #[test]
    fn scaling_map_is_equivariant_and_in_unit_cell() {
        let r = realization("hexagonal");
        let g = ScaledGraph::new(r.graph(), 6).unwrap();
        let map = ScalingMap::new(&r, &g);
        let tau = [2i64, -1];
        for v in 0..g.num_vertices() {
            let y = map.lattice_coords(v);
            assert!(y.iter().all(|&c| (0.0..1.0).contains(&c)));
            let moved = map.lattice_coords(g.translate_vertex(v, &tau));
            for i in 0..2 {
                let diff = moved[i] - y[i] - tau[i] as f64 / 6.0;
                assert!((diff - diff.round()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let r = realization("kagome");
        let rows = laplacian_convergence_check(&r, &FourierField::constant(2, 3.0), &[4, 8]).unwrap();
        assert!(rows.iter().all(|row| row.max_deviation < 1e-9));
    }

    #[test]
    fn laplacian_converges_on_square_at_second_order() {
        let r = realization("square");
        let j = FourierField::cosine(vec![1, 0], 1.0);
        let rows = laplacian_convergence_check(&r, &j, &[8, 16, 32]).unwrap();
        for w in rows.windows(2) {
            let ratio = w[1].max_deviation / w[0].max_deviation;
            assert!((ratio - 0.25).abs() < 0.02, "{ratio}");
        }
    }

    #[test]
    fn laplacian_converges_on_hexagonal() {
        let r = realization("hexagonal");
        let j = FourierField::new(
            2,
            vec![
                crate::fourier::FourierMode { k: vec![1, 1], cos: 0.0, sin: 0.5 },
                crate::fourier::FourierMode { k: vec![1, -1], cos: 0.0, sin: 0.5 },
            ],
        );
        let rows = laplacian_convergence_check(&r, &j, &[16, 64]).unwrap();
        assert!(rows[0].max_deviation >= 4.0 * rows[1].max_deviation, "{rows:?}");
    }

    #[test]
    fn report_keeps_exact_values() {
        let rep = realization("hexagonal").report();
        assert!(rep.exact && rep.harmonic);
        assert_eq!(rep.diffusion, [["3/8", "0"], ["0", "3/8"]]);
        let text = rep.to_toml();
        assert!(text.contains("3/8"));
    }
}
