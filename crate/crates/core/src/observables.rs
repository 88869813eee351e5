//! Empirical density pairings, local averages, and the replacement
//! diagnostic.
//!
//! Every local function bundle here is a product of occupations over a finite
//! window of sites, described relative to the cell of the base point as
//! `(shift, base vertex)` pairs.

use serde::Serialize;

use crate::error::{LatticeError, ObservableError};
use crate::fourier::FourierField;
use crate::harmonic::ScalingMap;
use crate::lattice::{ball_offsets, QuotientGraph, ScaledGraph};
use crate::pde::DensityGrid;
use crate::sep::{Configuration, Trajectory};

/// Largest window enumerated by [`canonical_polynomial`].
pub const WINDOW_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BundleKind {
    /// `f_x = η_x`.
    Occupation,
    /// `f_x = η_{oe}η_{te}` for the translate of base edge `edge` at `x`,
    /// and 0 at base vertices other than its tail.
    EdgeProduct { edge: usize },
    /// `f_x = Π_{e∈E_x} η_{te}`.
    NeighborhoodProduct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Site {
    pub shift: Vec<i64>,
    pub vertex: usize,
}

/// A Γ-periodic local function bundle: one window per base vertex, `None`
/// where the bundle vanishes identically.
#[derive(Debug, Clone)]
pub struct LocalFunctionBundle {
    kind: BundleKind,
    windows: Vec<Option<Vec<Site>>>,
}

impl LocalFunctionBundle {
    pub fn new(kind: BundleKind, base: &QuotientGraph) -> Self {
        let d = base.dim();
        let here = |x| Site {
            shift: vec![0; d],
            vertex: x,
        };
        let windows = (0..base.num_vertices())
            .map(|x| match &kind {
                BundleKind::Occupation => Some(vec![here(x)]),
                BundleKind::EdgeProduct { edge } => {
                    let e = base.edge(*edge);
                    (e.tail == x).then(|| {
                        vec![
                            here(x),
                            Site {
                                shift: e.shift.clone(),
                                vertex: e.head,
                            },
                        ]
                    })
                }
                BundleKind::NeighborhoodProduct => {
                    let mut sites: Vec<Site> = Vec::new();
                    for &e in base.out_edges(x) {
                        let edge = base.edge(e);
                        let s = Site {
                            shift: edge.shift.clone(),
                            vertex: edge.head,
                        };
                        if !sites.contains(&s) {
                            sites.push(s);
                        }
                    }
                    Some(sites)
                }
            })
            .collect();
        LocalFunctionBundle { kind, windows }
    }

    pub fn occupation(base: &QuotientGraph) -> Self {
        Self::new(BundleKind::Occupation, base)
    }

    pub fn kind(&self) -> &BundleKind {
        &self.kind
    }

    pub fn window(&self, x: usize) -> Option<&[Site]> {
        self.windows[x].as_deref()
    }

    /// `f_v(η)` at a vertex of `X_N`.
    pub fn eval(&self, graph: &ScaledGraph, eta: &Configuration, v: usize) -> f64 {
        let cell = graph.cell_of(v);
        match &self.windows[graph.base_vertex_of(v)] {
            None => 0.0,
            Some(sites) => {
                let all = sites.iter().all(|s| {
                    eta.get(graph.vertex(graph.translate_cell(cell, &s.shift), s.vertex))
                });
                f64::from(u8::from(all))
            }
        }
    }
}

/// `⟨f_x⟩(ρ) = Σ_k c_k ρ^k (1−ρ)^{w−k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalPolynomial {
    pub width: usize,
    pub coefficients: Vec<f64>,
}

impl CanonicalPolynomial {
    pub fn eval(&self, rho: f64) -> f64 {
        let w = self.width as i32;
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| c * rho.powi(k as i32) * (1.0 - rho).powi(w - k as i32))
            .sum()
    }
}

/// Expectation polynomial of `f_x` under product Bernoulli measures, by
/// enumerating all `2^w` window states.
pub fn canonical_polynomial(
    f: &LocalFunctionBundle,
    x: usize,
) -> Result<CanonicalPolynomial, ObservableError> {
    let Some(sites) = f.window(x) else {
        return Ok(CanonicalPolynomial {
            width: 0,
            coefficients: vec![0.0],
        });
    };
    let w = sites.len();
    if w > WINDOW_LIMIT {
        return Err(ObservableError::WindowTooLarge {
            found: w,
            limit: WINDOW_LIMIT,
        });
    }
    let mut coefficients = vec![0.0; w + 1];
    for state in 0u32..(1 << w) {
        // product bundles: 1 only when every site is occupied
        let value = f64::from(u8::from(state == (1 << w) - 1));
        coefficients[state.count_ones() as usize] += value;
    }
    Ok(CanonicalPolynomial {
        width: w,
        coefficients,
    })
}

pub fn canonical_expectation(
    f: &LocalFunctionBundle,
    x: usize,
    rho: f64,
) -> Result<f64, ObservableError> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(ObservableError::Density(rho));
    }
    Ok(canonical_polynomial(f, x)?.eval(rho))
}

/// `⟨J, ξ_N⟩ = (1/|V_N|) Σ_x η_x J(Φ_N(x))`.
pub fn pair(j: &FourierField, eta: &Configuration, map: &ScalingMap) -> f64 {
    eta.occupied()
        .map(|v| j.value(map.lattice_coords(v)))
        .sum::<f64>()
        / eta.len() as f64
}

/// `J(Φ_N(v))` tabulated once for repeated pairings.
#[derive(Debug, Clone)]
pub struct PairingTable {
    values: Vec<f64>,
}

impl PairingTable {
    pub fn new(j: &FourierField, map: &ScalingMap) -> Self {
        PairingTable {
            values: (0..map.num_vertices())
                .map(|v| j.value(map.lattice_coords(v)))
                .collect(),
        }
    }

    pub fn pair(&self, eta: &Configuration) -> f64 {
        eta.occupied().map(|v| self.values[v]).sum::<f64>() / eta.len() as f64
    }

    /// `(1/|V_N|) Σ_x J(Φ_N(x))`: the pairing of the all-occupied state.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// The empirical density of one configuration.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalMeasure<'a> {
    pub eta: &'a Configuration,
    pub map: &'a ScalingMap,
}

impl EmpiricalMeasure<'_> {
    pub fn pair(&self, j: &FourierField) -> f64 {
        pair(j, self.eta, self.map)
    }

    pub fn total_mass(&self) -> f64 {
        self.eta.particle_count() as f64 / self.eta.len() as f64
    }
}

fn check_radius(graph: &ScaledGraph, radius: f64) -> Result<(), LatticeError> {
    let limit = graph.n() as f64 / 2.0;
    if radius < limit {
        Ok(())
    } else {
        Err(LatticeError::RadiusTooLarge { radius, limit })
    }
}

/// `f̄`: mean of `f_z` over every vertex `z` of the cells within word distance
/// `radius` of the cell of `v`.
pub fn block_average(
    f: &LocalFunctionBundle,
    eta: &Configuration,
    graph: &ScaledGraph,
    v: usize,
    radius: f64,
) -> Result<f64, ObservableError> {
    check_radius(graph, radius)?;
    let cell = graph.cell_of(v);
    let nv = graph.base().num_vertices();
    let offsets = ball_offsets(graph.dim(), radius);
    let mut acc = 0.0;
    for off in &offsets {
        let c = graph.translate_cell(cell, off);
        for x in 0..nv {
            acc += f.eval(graph, eta, graph.vertex(c, x));
        }
    }
    Ok(acc / (offsets.len() * nv) as f64)
}

/// `f̃`: mean of `f_{σv}` over `|σ| ≤ radius`.
pub fn orbit_average(
    f: &LocalFunctionBundle,
    eta: &Configuration,
    graph: &ScaledGraph,
    v: usize,
    radius: f64,
) -> Result<f64, ObservableError> {
    check_radius(graph, radius)?;
    let offsets = ball_offsets(graph.dim(), radius);
    let acc: f64 = offsets
        .iter()
        .map(|off| f.eval(graph, eta, graph.translate_vertex(v, off)))
        .sum();
    Ok(acc / offsets.len() as f64)
}

/// Sums of per-cell `values` over the word ball of `radius` around every
/// cell. Row prefix sums make this `O(|Γ_N|·R)` for `d ≤ 2`.
pub fn cell_ball_sums(graph: &ScaledGraph, values: &[f64], radius: f64) -> Vec<f64> {
    let n = graph.n();
    let r = radius.floor() as i64;
    match graph.dim() {
        1 => {
            let prefix = periodic_prefix(values);
            (0..n).map(|i| window_sum(&prefix, n, i as i64, r)).collect()
        }
        2 => {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|j| periodic_prefix(&values[j * n..(j + 1) * n]))
                .collect();
            let mut out = vec![0.0; n * n];
            for j in 0..n as i64 {
                for i in 0..n as i64 {
                    let mut acc = 0.0;
                    for b in -r..=r {
                        let row = &rows[(j + b).rem_euclid(n as i64) as usize];
                        acc += window_sum(row, n, i, r - b.abs());
                    }
                    out[(i + j * n as i64) as usize] = acc;
                }
            }
            out
        }
        _ => {
            let offsets = ball_offsets(graph.dim(), radius);
            (0..graph.num_cells())
                .map(|c| {
                    offsets
                        .iter()
                        .map(|o| values[graph.translate_cell(c, o)])
                        .sum()
                })
                .collect()
        }
    }
}

/// Prefix sums over three periods so any window of width `< n` is a difference.
fn periodic_prefix(row: &[f64]) -> Vec<f64> {
    let n = row.len();
    let mut p = Vec::with_capacity(3 * n + 1);
    p.push(0.0);
    for k in 0..3 * n {
        let last = *p.last().expect("non-empty");
        p.push(last + row[k % n]);
    }
    p
}

fn window_sum(prefix: &[f64], n: usize, centre: i64, half: i64) -> f64 {
    let lo = centre - half + n as i64;
    let hi = centre + half + n as i64 + 1;
    prefix[hi as usize] - prefix[lo as usize]
}

/// Normalised `(1/|Γ_N|) Σ_σ |f̃_{σx,K}(η) − ⟨f_x⟩(η̄_{σx₀,εN}(η))|` for one
/// configuration.
pub fn replacement_functional(
    f: &LocalFunctionBundle,
    poly: &CanonicalPolynomial,
    eta: &Configuration,
    graph: &ScaledGraph,
    x: usize,
    epsilon: f64,
    k: f64,
) -> Result<f64, ObservableError> {
    let block_radius = epsilon * graph.n() as f64;
    check_radius(graph, block_radius)?;
    check_radius(graph, k)?;
    let d = graph.dim();
    let nv = graph.base().num_vertices();
    let cells = graph.num_cells();
    let fx: Vec<f64> = (0..cells)
        .map(|c| f.eval(graph, eta, graph.vertex(c, x)))
        .collect();
    let occupancy: Vec<f64> = (0..cells)
        .map(|c| (0..nv).filter(|&y| eta.get(graph.vertex(c, y))).count() as f64)
        .collect();
    let orbit = cell_ball_sums(graph, &fx, k);
    let block = cell_ball_sums(graph, &occupancy, block_radius);
    let orbit_size = ball_offsets(d, k).len() as f64;
    let block_size = (ball_offsets(d, block_radius).len() * nv) as f64;
    let total: f64 = (0..cells)
        .map(|c| (orbit[c] / orbit_size - poly.eval(block[c] / block_size)).abs())
        .sum();
    Ok(total / cells as f64)
}

/// Trapezoidal time integral over `[times[0], times.last()]` of
/// [`replacement_functional`] along recorded snapshots.
pub fn replacement_diagnostic(
    f: &LocalFunctionBundle,
    trajectory: &Trajectory,
    graph: &ScaledGraph,
    x: usize,
    epsilon: f64,
    k: f64,
) -> Result<f64, ObservableError> {
    let poly = canonical_polynomial(f, x)?;
    let values = trajectory
        .snapshots
        .iter()
        .map(|eta| replacement_functional(f, &poly, eta, graph, x, epsilon, k))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(trapezoid(&trajectory.times[..values.len()], &values))
}

pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// `ℓ¹` distance on the unit torus.
pub fn torus_l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(1.0);
            d.min(1.0 - d)
        })
        .sum()
}

/// `⟨ξ_N, χ⟩` for `χ = 1_B/μ(B)`, `B` the `ℓ¹` ball of radius `ε` around
/// `Φ_N(z)` in lattice coordinates and `μ(B) = (2ε)^d/d!`.
pub fn characteristic_pairing(
    eta: &Configuration,
    map: &ScalingMap,
    z: usize,
    epsilon: f64,
) -> f64 {
    let d = map.dim();
    let factorial: f64 = (1..=d).map(|k| k as f64).product();
    let measure = (2.0 * epsilon).powi(d as i32) / factorial;
    let centre = map.lattice_coords(z);
    let inside = eta
        .occupied()
        .filter(|&v| torus_l1(map.lattice_coords(v), centre) <= epsilon + 1e-12)
        .count();
    inside as f64 / (eta.len() as f64 * measure)
}

/// `J(Φ_N(v))`-pairings of every snapshot: `[time][J]`.
pub fn trajectory_pairings(tables: &[PairingTable], trajectory: &Trajectory) -> Vec<Vec<f64>> {
    trajectory
        .snapshots
        .iter()
        .map(|eta| tables.iter().map(|t| t.pair(eta)).collect())
        .collect()
}

/// Simulation side of a comparison: pairings per replica, snapshot, and `J`.
#[derive(Debug, Clone)]
pub struct SimulationPairings {
    pub drift_digest: String,
    pub profile_digest: String,
    pub times: Vec<f64>,
    /// `[replica][time][J]`.
    pub values: Vec<Vec<Vec<f64>>>,
}

/// PDE side of a comparison.
#[derive(Debug, Clone)]
pub struct PdeSolution {
    pub drift_digest: String,
    pub profile_digest: String,
    pub grids: Vec<DensityGrid>,
}

impl PdeSolution {
    pub fn at(&self, t: f64) -> Result<&DensityGrid, ObservableError> {
        self.grids
            .iter()
            .find(|g| (g.time - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or(ObservableError::MissingTime(t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub t: f64,
    pub j: usize,
    /// Per-replica absolute errors.
    pub errors: Vec<f64>,
    pub pde: f64,
}

impl ErrorRow {
    pub fn mean(&self) -> f64 {
        self.errors.iter().sum::<f64>() / self.errors.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    /// `max_J mean_r |⟨J,ξ_N^r(t)⟩ − ∫Jρ(t)|` at time `t`.
    pub fn max_mean_error(&self, t: f64) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.t == t)
            .map(ErrorRow::mean)
            .fold(f64::NAN, f64::max)
    }

    pub fn times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = Vec::new();
        for r in &self.rows {
            if ts.last() != Some(&r.t) {
                ts.push(r.t);
            }
        }
        ts
    }
}

/// `|⟨J, ξ_N(t)⟩ − ∫J ρ(t) dy|` for each replica, snapshot time, and `J`.
pub fn hydrodynamic_error(
    simulation: &SimulationPairings,
    pde: &PdeSolution,
    j_set: &[FourierField],
) -> Result<ErrorTable, ObservableError> {
    if simulation.drift_digest != pde.drift_digest {
        return Err(ObservableError::Mismatch {
            what: "drift",
            left: simulation.drift_digest.clone(),
            right: pde.drift_digest.clone(),
        });
    }
    if simulation.profile_digest != pde.profile_digest {
        return Err(ObservableError::Mismatch {
            what: "initial profile",
            left: simulation.profile_digest.clone(),
            right: pde.profile_digest.clone(),
        });
    }
    let mut rows = Vec::new();
    for (ti, &t) in simulation.times.iter().enumerate() {
        let grid = pde.at(t)?;
        for (ji, j) in j_set.iter().enumerate() {
            let target = grid.integrate(j);
            rows.push(ErrorRow {
                t,
                j: ji,
                errors: simulation
                    .values
                    .iter()
                    .map(|rep| (rep[ti][ji] - target).abs())
                    .collect(),
                pde: target,
            });
        }
    }
    Ok(ErrorTable { rows })
}

/// Mean and standard error of a sample.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::harmonic::solve_harmonic;
    use crate::sep::{replica_rng, sample_initial};
    use proptest::prelude::*;
    use rand::Rng;

    struct Setup {
        graph: ScaledGraph,
        map: ScalingMap,
    }

    fn setup(name: &str, n: usize) -> Setup {
        let spec = catalog::builtin(name).unwrap();
        let real = solve_harmonic(&spec.graph, &spec.basis).unwrap();
        let graph = ScaledGraph::new(&spec.graph, n).unwrap();
        let map = ScalingMap::new(&real, &graph);
        Setup { graph, map }
    }

    fn checkerboard(s: &Setup) -> Configuration {
        let bits: Vec<bool> = (0..s.graph.num_vertices())
            .map(|v| s.graph.cell_coords(s.graph.cell_of(v)).iter().sum::<usize>() % 2 == 0)
            .collect();
        Configuration::from_bools(&bits)
    }

    #[test]
    fn pairing_basics() {
        let s = setup("square", 8);
        let one = FourierField::constant(2, 1.0);
        let cos = FourierField::cosine(vec![1, 0], 1.0);
        let empty = Configuration::empty(64);
        assert_eq!(pair(&cos, &empty, &s.map), 0.0);
        let full = Configuration::full(64);
        assert!(pair(&cos, &full, &s.map).abs() < 1e-15);
        let cb = checkerboard(&s);
        assert_eq!(pair(&one, &cb, &s.map), 0.5);
        let m = EmpiricalMeasure { eta: &cb, map: &s.map };
        assert_eq!(m.total_mass(), 0.5);
        assert_eq!(PairingTable::new(&cos, &s.map).pair(&cb), pair(&cos, &cb, &s.map));
    }

    #[test]
    fn checkerboard_block_average() {
        let s = setup("square", 8);
        let cb = checkerboard(&s);
        let f = LocalFunctionBundle::occupation(s.graph.base());
        let even = block_average(&f, &cb, &s.graph, 0, 1.0).unwrap();
        let odd = block_average(&f, &cb, &s.graph, 1, 1.0).unwrap();
        assert_eq!(even, 0.2);
        assert_eq!(odd, 0.8);
        assert_eq!(block_average(&f, &cb, &s.graph, 0, 0.0).unwrap(), 1.0);
        assert!(block_average(&f, &cb, &s.graph, 0, 4.0).is_err());
    }

    #[test]
    fn alternating_edge_products_vanish() {
        let s = setup("line", 10);
        let alt: Vec<bool> = (0..10).map(|v| v % 2 == 0).collect();
        let eta = Configuration::from_bools(&alt);
        let f = LocalFunctionBundle::new(BundleKind::EdgeProduct { edge: 0 }, s.graph.base());
        for v in 0..10 {
            assert_eq!(orbit_average(&f, &eta, &s.graph, v, 2.0).unwrap(), 0.0);
        }
        let occ = LocalFunctionBundle::occupation(s.graph.base());
        assert_eq!(orbit_average(&occ, &eta, &s.graph, 3, 0.0).unwrap(), 0.0);
        assert_eq!(orbit_average(&occ, &eta, &s.graph, 4, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn canonical_expectations() {
        let sq = catalog::builtin("square").unwrap().graph;
        let hex = catalog::builtin("hexagonal").unwrap().graph;
        let occ = LocalFunctionBundle::occupation(&sq);
        let edge = LocalFunctionBundle::new(BundleKind::EdgeProduct { edge: 2 }, &hex);
        let nbhd = LocalFunctionBundle::new(BundleKind::NeighborhoodProduct, &sq);
        for rho in [0.0, 0.2, 0.5, 0.8, 1.0] {
            assert!((canonical_expectation(&occ, 0, rho).unwrap() - rho).abs() < 1e-15);
            let tail = hex.edge(2).tail;
            assert!((canonical_expectation(&edge, tail, rho).unwrap() - rho * rho).abs() < 1e-15);
            assert_eq!(canonical_expectation(&edge, 1 - tail, rho).unwrap(), 0.0);
            assert!((canonical_expectation(&nbhd, 0, rho).unwrap() - rho.powi(4)).abs() < 1e-15);
        }
        assert!(canonical_expectation(&occ, 0, 1.5).is_err());
    }

    #[test]
    fn canonical_matches_monte_carlo() {
        let s = setup("kagome", 6);
        let base = s.graph.base().clone();
        for kind in [BundleKind::Occupation, BundleKind::EdgeProduct { edge: 4 }, BundleKind::NeighborhoodProduct] {
            let f = LocalFunctionBundle::new(kind.clone(), &base);
            let x = base.edge(4).tail;
            for rho in [0.2, 0.5, 0.8] {
                let exact = canonical_expectation(&f, x, rho).unwrap();
                let mut samples = Vec::new();
                for r in 0..400 {
                    let mut rng = replica_rng(13, r);
                    let eta = sample_initial(&FourierField::constant(2, rho), &s.map, &mut rng);
                    let v = s.graph.vertex(rng.random_range(0..s.graph.num_cells()), x);
                    samples.push(f.eval(&s.graph, &eta, v));
                }
                let (mean, se) = mean_and_se(&samples);
                assert!((mean - exact).abs() <= 4.0 * se.max(1e-3), "{kind:?} {rho}: {mean} vs {exact}");
            }
        }
    }

    #[test]
    fn window_limit() {
        let spec = catalog::parse_lattice(
            &format!(
                "dimension = 1\nvertices = 1\nedges = [{}]\nbasis = [[1]]\n",
                (1..=21).map(|k| format!("[0, 0, [{k}]]")).collect::<Vec<_>>().join(", ")
            ),
            "wide",
        )
        .unwrap();
        let f = LocalFunctionBundle::new(BundleKind::NeighborhoodProduct, &spec.graph);
        assert!(matches!(
            canonical_polynomial(&f, 0),
            Err(ObservableError::WindowTooLarge { found: 42, limit: 20 })
        ));
    }

    #[test]
    fn block_and_orbit_coincide_for_one_vertex_quotients() {
        for name in ["square", "line"] {
            let s = setup(name, 12);
            let mut rng = replica_rng(2, 0);
            let eta = sample_initial(&FourierField::constant(s.graph.dim(), 0.4), &s.map, &mut rng);
            let f = LocalFunctionBundle::occupation(s.graph.base());
            for v in [0, 5, 11] {
                for r in [0.0, 1.0, 2.5, 5.0] {
                    assert_eq!(
                        block_average(&f, &eta, &s.graph, v, r).unwrap(),
                        orbit_average(&f, &eta, &s.graph, v, r).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn ball_sums_match_direct_enumeration() {
        for (name, n) in [("line", 13), ("square", 9), ("hexagonal", 8)] {
            let s = setup(name, n);
            let mut rng = replica_rng(4, 0);
            let values: Vec<f64> = (0..s.graph.num_cells()).map(|_| rng.random::<f64>()).collect();
            for r in [0.0, 1.0, 2.7, 3.0] {
                let fast = cell_ball_sums(&s.graph, &values, r);
                for c in 0..s.graph.num_cells() {
                    let slow: f64 = crate::lattice::cell_ball(&s.graph, c, r)
                        .unwrap()
                        .iter()
                        .map(|&b| values[b])
                        .sum();
                    assert!((fast[c] - slow).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn replacement_vanishes_on_full_configuration() {
        let s = setup("square", 16);
        let f = LocalFunctionBundle::occupation(s.graph.base());
        let full = Configuration::full(256);
        let traj = Trajectory {
            times: vec![0.0, 0.5, 1.0],
            snapshots: vec![full.clone(), full.clone(), full],
            candidates: 0,
            accepted: 0,
            edge_jumps: None,
            complete: true,
        };
        assert_eq!(replacement_diagnostic(&f, &traj, &s.graph, 0, 0.2, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn replacement_functional_matches_direct_definition() {
        let s = setup("kagome", 10);
        let mut rng = replica_rng(8, 0);
        let eta = sample_initial(&FourierField::constant(2, 0.5), &s.map, &mut rng);
        let f = LocalFunctionBundle::new(BundleKind::EdgeProduct { edge: 2 }, s.graph.base());
        let occ = LocalFunctionBundle::occupation(s.graph.base());
        let x = s.graph.base().edge(2).tail;
        let poly = canonical_polynomial(&f, x).unwrap();
        let fast = replacement_functional(&f, &poly, &eta, &s.graph, x, 0.25, 2.0).unwrap();
        let slow: f64 = (0..s.graph.num_cells())
            .map(|c| {
                let v = s.graph.vertex(c, x);
                let orbit = orbit_average(&f, &eta, &s.graph, v, 2.0).unwrap();
                let block = block_average(&occ, &eta, &s.graph, v, 2.5).unwrap();
                (orbit - poly.eval(block)).abs()
            })
            .sum::<f64>()
            / s.graph.num_cells() as f64;
        assert!((fast - slow).abs() < 1e-12);
    }

    #[test]
    fn characteristic_pairing_tracks_block_average() {
        for eps in [0.1, 0.25] {
            let measure = 2.0 * eps * eps;
            for n in [32, 64, 128] {
                let s = setup("square", n);
                let f = LocalFunctionBundle::occupation(s.graph.base());
                let mut rng = replica_rng(n as u64, 1);
                let eta = sample_initial(&FourierField::constant(2, 0.5), &s.map, &mut rng);
                let z = s.graph.vertex(s.graph.num_cells() / 3, 0);
                let a = characteristic_pairing(&eta, &s.map, z, eps);
                let b = block_average(&f, &eta, &s.graph, z, eps * n as f64).unwrap();
                // one vertex per cell: the torus ball and the word ball hold the same sites
                let cells = ball_offsets(2, eps * n as f64).len() as f64;
                let inside_a = a * measure * (n * n) as f64;
                let inside_b = b * cells;
                assert!((inside_a - inside_b).abs() < 1e-9, "{eps} {n}");
                assert!(n as f64 * (a - b).abs() * measure < 1.0, "{eps} {n}");
            }
        }
    }

    #[test]
    fn hydrodynamic_error_checks_digests() {
        let sim = SimulationPairings {
            drift_digest: "a".into(),
            profile_digest: "p".into(),
            times: vec![0.0],
            values: vec![vec![vec![0.5]]],
        };
        let grid = DensityGrid::from_field(&FourierField::constant(1, 0.25), 8);
        let pde = PdeSolution { drift_digest: "b".into(), profile_digest: "p".into(), grids: vec![grid.clone()] };
        let one = [FourierField::constant(1, 1.0)];
        assert!(matches!(
            hydrodynamic_error(&sim, &pde, &one),
            Err(ObservableError::Mismatch { what: "drift", .. })
        ));
        let pde = PdeSolution { drift_digest: "a".into(), ..pde };
        let table = hydrodynamic_error(&sim, &pde, &one).unwrap();
        assert_eq!(table.rows[0].errors, vec![0.25]);
        assert_eq!(table.max_mean_error(0.0), 0.25);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn pairing_is_linear_and_monotone(seed in 0u64..500, v in 0usize..100, a in -2.0f64..2.0) {
            let s = setup("square", 10);
            let mut rng = replica_rng(seed, 0);
            let eta = sample_initial(&FourierField::constant(2, 0.5), &s.map, &mut rng);
            let j1 = FourierField::cosine(vec![1, 2], 1.0);
            let j2 = FourierField::sine(vec![0, 1], 0.7);
            let sum = FourierField::cosine(vec![1, 2], a).plus(j2.clone());
            let lhs = pair(&sum, &eta, &s.map);
            let rhs = a * pair(&j1, &eta, &s.map) + pair(&j2, &eta, &s.map);
            prop_assert!((lhs - rhs).abs() < 1e-12);
            let mut more = eta.clone();
            more.set(v, true);
            let jump = pair(&j1, &more, &s.map) - pair(&j1, &eta, &s.map);
            let want = if eta.get(v) { 0.0 } else { j1.value(s.map.lattice_coords(v)) / 100.0 };
            prop_assert!((jump - want).abs() < 1e-12);
        }

        #[test]
        fn orbit_average_is_equivariant(seed in 0u64..500, v in 0usize..192, t0 in -5i64..5, t1 in -5i64..5) {
            let s = setup("kagome", 8);
            let mut rng = replica_rng(seed, 3);
            let eta = sample_initial(&FourierField::constant(2, 0.5), &s.map, &mut rng);
            let f = LocalFunctionBundle::new(BundleKind::NeighborhoodProduct, s.graph.base());
            let tau = [t0, t1];
            let moved = eta.translated(&s.graph, &tau);
            let a = orbit_average(&f, &eta, &s.graph, v, 2.0).unwrap();
            let b = orbit_average(&f, &moved, &s.graph, s.graph.translate_vertex(v, &tau), 2.0).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
