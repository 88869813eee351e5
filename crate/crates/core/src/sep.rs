//! Weakly asymmetric simple exclusion on `X_N`.
//!
//! The process is generated by `N²L_N^H`, where every oriented edge `e`
//! carries rate `(N²/2)·η_{oe}(1 − η_{te})·exp[H(t,Φ_N(te)) − H(t,Φ_N(oe))]`.
//! Trajectories are sampled exactly by thinning a single aggregate Poisson
//! clock whose per-edge rate dominates every true rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::SimError;
use crate::fourier::{DriftSpec, FourierField};
use crate::harmonic::{HarmonicRealization, ScalingMap};
use crate::lattice::{ScaledGraph, UnorientedEdge};

/// Occupancy bitset over the vertices of a scaled graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    words: Vec<u64>,
    len: usize,
    count: usize,
}

impl Configuration {
    pub fn empty(len: usize) -> Self {
        Configuration {
            words: vec![0; len.div_ceil(64)],
            len,
            count: 0,
        }
    }

    pub fn full(len: usize) -> Self {
        let mut c = Self::empty(len);
        for v in 0..len {
            c.set(v, true);
        }
        c
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut c = Self::empty(bits.len());
        for (v, &b) in bits.iter().enumerate() {
            c.set(v, b);
        }
        c
    }

    /// Bit `v` of `state` is `η_v`; for enumerating small state spaces.
    pub fn from_index(len: usize, state: u64) -> Self {
        assert!(len <= 64);
        let mut c = Self::empty(len);
        for v in 0..len {
            c.set(v, state >> v & 1 == 1);
        }
        c
    }

    pub fn index(&self) -> u64 {
        assert!(self.len <= 64);
        self.words.first().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, v: usize) -> bool {
        self.words[v >> 6] >> (v & 63) & 1 == 1
    }

    pub fn set(&mut self, v: usize, occupied: bool) {
        let was = self.get(v);
        if was != occupied {
            self.words[v >> 6] ^= 1 << (v & 63);
            if occupied {
                self.count += 1;
            } else {
                self.count -= 1;
            }
        }
    }

    pub fn particle_count(&self) -> usize {
        self.count
    }

    /// Recount from the bits; equal to [`particle_count`](Self::particle_count).
    pub fn popcount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `η^{(x,y)}`: swap the occupations of two sites.
    pub fn exchange_sites(&mut self, x: usize, y: usize) {
        let (a, b) = (self.get(x), self.get(y));
        if a != b {
            self.words[x >> 6] ^= 1 << (x & 63);
            self.words[y >> 6] ^= 1 << (y & 63);
        }
    }

    /// `η^e` for an oriented edge of `graph`.
    pub fn exchange(&mut self, graph: &ScaledGraph, e: usize) {
        self.exchange_sites(graph.edge_tail(e), graph.edge_head(e));
    }

    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&v| self.get(v))
    }

    /// `σ̲·η`, the configuration with `(σ̲·η)_{σ̲v} = η_v`.
    pub fn translated(&self, graph: &ScaledGraph, offset: &[i64]) -> Self {
        let mut out = Self::empty(self.len);
        for v in self.occupied() {
            out.set(graph.translate_vertex(v, offset), true);
        }
        out
    }
}

/// Per-replica generator: stream `replica` of a ChaCha8 generator seeded with
/// `master_seed`.
pub fn replica_rng(master_seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replica);
    rng
}

/// Independent Bernoulli occupations with means `ρ₀(Φ_N(v))` clipped to `[0,1]`.
pub fn sample_initial<R: Rng + ?Sized>(
    profile: &FourierField,
    map: &ScalingMap,
    rng: &mut R,
) -> Configuration {
    let n = map.num_vertices();
    let mut c = Configuration::empty(n);
    for v in 0..n {
        let rho = profile.value(map.lattice_coords(v)).clamp(0.0, 1.0);
        if rng.random::<f64>() < rho {
            c.set(v, true);
        }
    }
    c
}

/// `c^H(e, η, t) = η_{oe}(1 − η_{te})·exp[H(t,Φ_N(te)) − H(t,Φ_N(oe))]`.
pub fn jump_rate(
    graph: &ScaledGraph,
    e: usize,
    eta: &Configuration,
    t: f64,
    drift: &DriftSpec,
    map: &ScalingMap,
) -> f64 {
    let (o, h) = (graph.edge_tail(e), graph.edge_head(e));
    if !eta.get(o) || eta.get(h) {
        return 0.0;
    }
    (drift.value(t, map.lattice_coords(h)) - drift.value(t, map.lattice_coords(o))).exp()
}

/// Generator matrix of `N²L_N^H` at time `t` over all `2^{|V_N|}` states.
///
/// Row `a`, column `b` is the jump rate from state `a` to `b`; diagonals make
/// rows sum to zero. States are indexed as in [`Configuration::from_index`].
pub fn generator_matrix(
    graph: &ScaledGraph,
    map: &ScalingMap,
    drift: &DriftSpec,
    t: f64,
) -> Vec<Vec<f64>> {
    let nv = graph.num_vertices();
    assert!(nv <= 16, "state space too large to enumerate");
    let states = 1usize << nv;
    let scale = (graph.n() * graph.n()) as f64 / 2.0;
    let mut q = vec![vec![0.0; states]; states];
    for (a, row) in q.iter_mut().enumerate() {
        let eta = Configuration::from_index(nv, a as u64);
        for e in 0..graph.num_edges() {
            let r = jump_rate(graph, e, &eta, t, drift, map);
            if r > 0.0 {
                let mut next = eta.clone();
                next.exchange(graph, e);
                let b = next.index() as usize;
                row[b] += scale * r;
                row[a] -= scale * r;
            }
        }
    }
    q
}

/// What to keep from a run.
#[derive(Debug, Clone)]
pub struct TrajectoryRecorder {
    pub times: Vec<f64>,
    /// Abort after this many candidate events.
    pub event_budget: u64,
    /// Count accepted jumps per oriented edge of `X_N`.
    pub count_jumps: bool,
}

impl TrajectoryRecorder {
    pub fn new(times: Vec<f64>) -> Self {
        TrajectoryRecorder {
            times,
            event_budget: u64::MAX,
            count_jumps: false,
        }
    }

    /// `count + 1` equally spaced times over `[0, horizon]`.
    pub fn uniform(horizon: f64, count: usize) -> Self {
        Self::new(
            (0..=count)
                .map(|i| horizon * i as f64 / count as f64)
                .collect(),
        )
    }
}

/// Snapshots of one run; `snapshots[i]` is the state at `times[i]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Configuration>,
    pub candidates: u64,
    pub accepted: u64,
    /// Per oriented edge of `X_N`, when requested.
    pub edge_jumps: Option<Vec<u64>>,
    /// False when the run stopped early.
    pub complete: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> Option<&Configuration> {
        self.snapshots.last()
    }
}

/// A prepared simulation: drift sampled on the vertices and the thinning
/// bound fixed for `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    graph: &'a ScaledGraph,
    drift: DriftSpec,
    horizon: f64,
    potential: Vec<f64>,
    edges: Vec<UnorientedEdge>,
    oscillation: f64,
    edge_bound: f64,
}

impl<'a> Simulator<'a> {
    pub fn new(
        realization: &HarmonicRealization,
        graph: &'a ScaledGraph,
        map: &ScalingMap,
        drift: &DriftSpec,
        horizon: f64,
    ) -> Result<Self, SimError> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(SimError::Horizon(horizon));
        }
        if !realization.is_harmonic() {
            return Err(SimError::NonHarmonic {
                residual: realization.max_residual(),
            });
        }
        if drift.dim() != graph.dim() {
            return Err(SimError::Dimension {
                drift: drift.dim(),
                lattice: graph.dim(),
            });
        }
        let potential: Vec<f64> = (0..graph.num_vertices())
            .map(|v| drift.field.value(map.lattice_coords(v)))
            .collect();
        let grad = drift.field.gradient_bound();
        let spread = realization
            .lattice_edge_vectors()
            .iter()
            .map(|w| w.iter().zip(&grad).map(|(a, g)| a.abs() * g).sum::<f64>())
            .fold(0.0, f64::max);
        let oscillation = drift.max_amplitude(horizon) * spread / graph.n() as f64;
        let n2 = (graph.n() * graph.n()) as f64;
        Ok(Simulator {
            graph,
            drift: drift.clone(),
            horizon,
            potential,
            edges: graph.unoriented_edges(),
            oscillation,
            edge_bound: n2 / 2.0 * oscillation.exp(),
        })
    }

    /// Upper bound on `|H(t,Φ_N(te)) − H(t,Φ_N(oe))|` over edges and `[0,T]`.
    pub fn oscillation_bound(&self) -> f64 {
        self.oscillation
    }

    /// `λ̄ = (N²/2)·exp(osc)`.
    pub fn edge_rate_bound(&self) -> f64 {
        self.edge_bound
    }

    pub fn graph(&self) -> &ScaledGraph {
        self.graph
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        initial: Configuration,
        recorder: &TrajectoryRecorder,
        rng: &mut R,
    ) -> Result<Trajectory, SimError> {
        let times = &recorder.times;
        let ordered = times.windows(2).all(|w| w[0] < w[1]);
        let inside = times.iter().all(|&t| (0.0..=self.horizon).contains(&t));
        if !ordered || !inside {
            return Err(SimError::SnapshotTimes {
                horizon: self.horizon,
            });
        }
        assert_eq!(initial.len(), self.graph.num_vertices());
        let mut eta = initial;
        let start_count = eta.particle_count();
        let total_rate = self.edge_bound * self.edges.len() as f64;
        let mut traj = Trajectory {
            times: times.clone(),
            snapshots: Vec::with_capacity(times.len()),
            candidates: 0,
            accepted: 0,
            edge_jumps: recorder
                .count_jumps
                .then(|| vec![0; self.graph.num_edges()]),
            complete: false,
        };
        let mut t = 0.0;
        loop {
            let dt: f64 = rng.sample::<f64, _>(Exp1) / total_rate;
            let next = t + dt;
            while traj.snapshots.len() < times.len() && times[traj.snapshots.len()] < next {
                debug_assert_eq!(eta.popcount(), start_count);
                traj.snapshots.push(eta.clone());
            }
            if next > self.horizon {
                break;
            }
            t = next;
            if traj.candidates == recorder.event_budget {
                return Err(SimError::EventBudget {
                    budget: recorder.event_budget,
                    time: t,
                    partial: Box::new(traj),
                });
            }
            traj.candidates += 1;
            let edge = self.edges[rng.random_range(0..self.edges.len())];
            let (a, b) = (edge.tail as usize, edge.head as usize);
            let (oa, ob) = (eta.get(a), eta.get(b));
            if oa == ob {
                continue;
            }
            let (from, to, oriented) = if oa {
                (a, b, edge.oriented as usize)
            } else {
                (b, a, self.graph.edge_reverse(edge.oriented as usize))
            };
            let exponent = self.drift.amplitude(t) * (self.potential[to] - self.potential[from]);
            if exponent > self.oscillation + 1e-12 {
                return Err(SimError::RateBound {
                    exponent,
                    bound: self.oscillation,
                });
            }
            if exponent >= self.oscillation || rng.random::<f64>() < (exponent - self.oscillation).exp() {
                eta.exchange_sites(from, to);
                traj.accepted += 1;
                if let Some(j) = traj.edge_jumps.as_mut() {
                    j[oriented] += 1;
                }
            }
        }
        assert_eq!(eta.popcount(), start_count, "particle number changed");
        traj.complete = true;
        Ok(traj)
    }
}

/// One trajectory from `initial` under `drift` on `[0, horizon]`.
pub fn simulate<R: Rng + ?Sized>(
    initial: Configuration,
    realization: &HarmonicRealization,
    graph: &ScaledGraph,
    map: &ScalingMap,
    drift: &DriftSpec,
    horizon: f64,
    recorder: &TrajectoryRecorder,
    rng: &mut R,
) -> Result<Trajectory, SimError> {
    Simulator::new(realization, graph, map, drift, horizon)?.run(initial, recorder, rng)
}
