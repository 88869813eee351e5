//! The limit equation on the unit torus in lattice coordinates:
//!
//! ```text
//! ∂ρ/∂t = ∇·(D̃∇ρ) − 2∇·(ρ(1−ρ) D̃∇H)
//! ```
//!
//! with `D̃ = U⁻¹𝔻U⁻ᵀ`. The drift may equivalently be written as the edge sum
//! `(1/2|V₀|) Σ_{e∈E₀} (w·∇)(ρ(1−ρ)(w·∇)H)` over lattice edge vectors `w`.
//!
//! Cell-centred grid `y_i = (i + ½)/M`, explicit Euler in time, fluxes on
//! faces so total mass telescopes.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::PdeError;
use crate::fourier::{DriftSpec, FourierField};
use crate::harmonic::HarmonicRealization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftForm {
    /// `2∇·(g D̃∇H)`.
    Divergence,
    /// `(1/2|V₀|) Σ_e (w·∇)(g (w·∇)H)`.
    EdgeSum,
}

/// Density on an `M^d` cell-centred grid, first axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub m: usize,
    pub dim: usize,
    pub time: f64,
    pub values: Vec<f64>,
}

impl DensityGrid {
    /// Samples `field` at cell centres, clipped to `[0,1]`.
    pub fn from_field(field: &FourierField, m: usize) -> Self {
        let dim = field.dim();
        let mut grid = DensityGrid {
            m,
            dim,
            time: 0.0,
            values: vec![0.0; m.pow(dim as u32)],
        };
        for c in 0..grid.values.len() {
            grid.values[c] = field.value(&grid.centre(c)).clamp(0.0, 1.0);
        }
        grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn centre(&self, c: usize) -> Vec<f64> {
        let mut rest = c;
        (0..self.dim)
            .map(|_| {
                let i = rest % self.m;
                rest /= self.m;
                (i as f64 + 0.5) / self.m as f64
            })
            .collect()
    }

    /// `∫ρ dy` by the midpoint rule.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// `∫J ρ dy` by the midpoint rule.
    pub fn integrate(&self, j: &FourierField) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(c, &r)| r * j.value(&self.centre(c)))
            .sum::<f64>()
            / self.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &DensityGrid) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Block average onto the grid with half the resolution.
    pub fn restrict(&self) -> DensityGrid {
        assert!(self.m % 2 == 0);
        let mc = self.m / 2;
        let mut values = vec![0.0; mc.pow(self.dim as u32)];
        let weight = 1.0 / (1 << self.dim) as f64;
        for (c, &v) in self.values.iter().enumerate() {
            let mut rest = c;
            let mut coarse = 0;
            let mut stride = 1;
            for _ in 0..self.dim {
                coarse += (rest % self.m) / 2 * stride;
                rest /= self.m;
                stride *= mc;
            }
            values[coarse] += weight * v;
        }
        DensityGrid {
            m: mc,
            dim: self.dim,
            time: self.time,
            values,
        }
    }

    /// Discrete `∫|∇_y ρ|² dy` from forward differences.
    pub fn gradient_energy(&self) -> f64 {
        let m = self.m;
        let mut acc = 0.0;
        for c in 0..self.len() {
            let mut stride = 1;
            for _ in 0..self.dim {
                let i = c / stride % m;
                let next = if i + 1 == m { c + stride - m * stride } else { c + stride };
                let g = (self.values[next] - self.values[c]) * m as f64;
                acc += g * g;
                stride *= m;
            }
        }
        acc / self.len() as f64
    }
}

fn max_eigenvalue(t: &[Vec<f64>]) -> f64 {
    match t.len() {
        1 => t[0][0],
        2 => {
            let tr = t[0][0] + t[1][1];
            let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
            tr / 2.0 + (tr * tr / 4.0 - det).max(0.0).sqrt()
        }
        _ => unreachable!(),
    }
}

/// Explicit conservative solver bound to one realization, drift, and grid.
#[derive(Debug, Clone)]
pub struct PdeSolver {
    dim: usize,
    m: usize,
    h: f64,
    tensor: Vec<Vec<f64>>,
    drift: DriftSpec,
    form: DriftForm,
    /// `(drift velocity per unit amplitude)` on faces, indexed `[axis][cell]`;
    /// the face of axis `a` at cell `c` lies between `c` and `c + e_a`.
    face_velocity: Vec<Vec<f64>>,
}

impl PdeSolver {
    pub fn new(
        realization: &HarmonicRealization,
        drift: &DriftSpec,
        m: usize,
    ) -> Result<Self, PdeError> {
        Self::with_form(realization, drift, m, DriftForm::Divergence)
    }

    pub fn with_form(
        realization: &HarmonicRealization,
        drift: &DriftSpec,
        m: usize,
        form: DriftForm,
    ) -> Result<Self, PdeError> {
        let dim = realization.dim();
        if !(1..=2).contains(&dim) {
            return Err(PdeError::Dimension(dim));
        }
        if m < 3 {
            return Err(PdeError::GridTooSmall(m));
        }
        let tensor = realization.lattice_diffusion().to_vec();
        let edges = realization.lattice_edge_vectors();
        let nv = realization.graph().num_vertices() as f64;
        let h = 1.0 / m as f64;
        let cells = m.pow(dim as u32);
        let mut face_velocity = vec![vec![0.0; cells]; dim];
        for c in 0..cells {
            let mut rest = c;
            let centre: Vec<f64> = (0..dim)
                .map(|_| {
                    let i = rest % m;
                    rest /= m;
                    (i as f64 + 0.5) * h
                })
                .collect();
            for (a, fv) in face_velocity.iter_mut().enumerate() {
                let mut y = centre.clone();
                y[a] += 0.5 * h;
                let g = drift.field.gradient(&y);
                fv[c] = match form {
                    DriftForm::Divergence => {
                        2.0 * (0..dim).map(|b| tensor[a][b] * g[b]).sum::<f64>()
                    }
                    DriftForm::EdgeSum => {
                        edges
                            .iter()
                            .map(|w| {
                                w[a] * w.iter().zip(&g).map(|(x, y)| x * y).sum::<f64>()
                            })
                            .sum::<f64>()
                            / (2.0 * nv)
                    }
                };
            }
        }
        Ok(PdeSolver {
            dim,
            m,
            h,
            tensor,
            drift: drift.clone(),
            form,
            face_velocity,
        })
    }

    pub fn form(&self) -> DriftForm {
        self.form
    }

    pub fn grid_size(&self) -> usize {
        self.m
    }

    /// `h²/(4·d·λ_max(D̃))`.
    pub fn diffusion_bound(&self) -> f64 {
        self.h * self.h / (4.0 * self.dim as f64 * max_eigenvalue(&self.tensor))
    }

    /// `h/(2·max|∂flux/∂ρ|)` for drift amplitude `amplitude`.
    pub fn drift_bound(&self, amplitude: f64) -> f64 {
        let vmax = self
            .face_velocity
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
            * amplitude.abs();
        if vmax == 0.0 {
            f64::INFINITY
        } else {
            self.h / (2.0 * vmax)
        }
    }

    /// Largest admissible step for a run over `[0, horizon]`.
    pub fn stable_step(&self, horizon: f64) -> f64 {
        self.diffusion_bound()
            .min(self.drift_bound(self.drift.max_amplitude(horizon)))
    }

    pub fn initial(&self, rho0: &FourierField) -> DensityGrid {
        DensityGrid::from_field(rho0, self.m)
    }

    /// One explicit step of length `dt` from `grid.time`.
    pub fn step(&self, grid: &DensityGrid, dt: f64) -> Result<DensityGrid, PdeError> {
        let bound = self
            .diffusion_bound()
            .min(self.drift_bound(self.drift.amplitude(grid.time)));
        if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
            return Err(PdeError::Stability { dt, bound });
        }
        let mut out = grid.clone();
        self.advance(grid, &mut out, dt);
        out.time = grid.time + dt;
        Ok(out)
    }

    fn advance(&self, grid: &DensityGrid, out: &mut DensityGrid, dt: f64) {
        let rho = &grid.values;
        let m = self.m;
        let h = self.h;
        let amp = self.drift.amplitude(grid.time);
        let g: Vec<f64> = rho.iter().map(|r| r * (1.0 - r)).collect();
        let lambda = dt / h;
        match self.dim {
            1 => {
                let d = self.tensor[0][0];
                let flux: Vec<f64> = (0..m)
                    .map(|i| {
                        let ip = (i + 1) % m;
                        -d * (rho[ip] - rho[i]) / h
                            + amp * self.face_velocity[0][i] * 0.5 * (g[i] + g[ip])
                    })
                    .collect();
                for i in 0..m {
                    let im = (i + m - 1) % m;
                    out.values[i] = rho[i] - lambda * (flux[i] - flux[im]);
                }
            }
            2 => {
                let t = &self.tensor;
                let idx = |i: usize, j: usize| (i % m) + m * (j % m);
                let mut fx = vec![0.0; m * m];
                let mut fy = vec![0.0; m * m];
                for j in 0..m {
                    let (jp, jm) = (j + 1, j + m - 1);
                    for i in 0..m {
                        let (ip, im) = (i + 1, i + m - 1);
                        let c = idx(i, j);
                        let cx = idx(ip, j);
                        let cy = idx(i, jp);
                        let dxx = (rho[cx] - rho[c]) / h;
                        let dxy = (rho[cy] + rho[idx(ip, jp)] - rho[idx(i, jm)] - rho[idx(ip, jm)])
                            / (4.0 * h);
                        fx[c] = -(t[0][0] * dxx + t[0][1] * dxy)
                            + amp * self.face_velocity[0][c] * 0.5 * (g[c] + g[cx]);
                        let dyy = (rho[cy] - rho[c]) / h;
                        let dyx = (rho[cx] + rho[idx(ip, jp)] - rho[idx(im, j)] - rho[idx(im, jp)])
                            / (4.0 * h);
                        fy[c] = -(t[1][1] * dyy + t[1][0] * dyx)
                            + amp * self.face_velocity[1][c] * 0.5 * (g[c] + g[cy]);
                    }
                }
                for j in 0..m {
                    for i in 0..m {
                        let c = idx(i, j);
                        let div = fx[c] - fx[idx(i + m - 1, j)] + fy[c] - fy[idx(i, j + m - 1)];
                        out.values[c] = rho[c] - lambda * div;
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    /// Snapshots at each of `times` (non-negative, increasing), starting from
    /// `ρ₀` at `t = 0`. Steps are shortened to land on every requested time.
    pub fn solve(
        &self,
        rho0: &FourierField,
        times: &[f64],
    ) -> Result<Vec<DensityGrid>, PdeError> {
        if times.iter().any(|&t| t < 0.0) || times.windows(2).any(|w| w[0] > w[1]) {
            return Err(PdeError::Times);
        }
        let horizon = times.last().copied().unwrap_or(0.0);
        let dt_max = 0.9 * self.stable_step(horizon);
        let mut grid = self.initial(rho0);
        let mut scratch = grid.clone();
        let mut out = Vec::with_capacity(times.len());
        for &target in times {
            let span = target - grid.time;
            if span > 0.0 {
                let steps = (span / dt_max).ceil().max(1.0) as usize;
                let dt = span / steps as f64;
                let start = grid.time;
                for k in 0..steps {
                    self.advance(&grid, &mut scratch, dt);
                    std::mem::swap(&mut grid, &mut scratch);
                    grid.time = start + (k + 1) as f64 * dt;
                }
                grid.time = target;
            }
            out.push(grid.clone());
        }
        Ok(out)
    }
}

/// Drift term of the equation (the part subtracted from the diffusion)
/// evaluated analytically for a smooth density `rho`.
pub fn drift_term(
    form: DriftForm,
    realization: &HarmonicRealization,
    rho: &FourierField,
    drift: &DriftSpec,
    t: f64,
    y: &[f64],
) -> f64 {
    let d = realization.dim();
    let r = rho.value(y);
    let g = r * (1.0 - r);
    let grad_g: Vec<f64> = rho.gradient(y).iter().map(|x| (1.0 - 2.0 * r) * x).collect();
    let a = drift.amplitude(t);
    let grad_h: Vec<f64> = drift.field.gradient(y).iter().map(|x| a * x).collect();
    let hess_h: Vec<Vec<f64>> = drift
        .field
        .hessian(y)
        .into_iter()
        .map(|row| row.into_iter().map(|x| a * x).collect())
        .collect();
    match form {
        DriftForm::Divergence => {
            let t = realization.lattice_diffusion();
            let mut acc = 0.0;
            for i in 0..d {
                for j in 0..d {
                    acc += t[i][j] * (grad_g[i] * grad_h[j] + g * hess_h[i][j]);
                }
            }
            2.0 * acc
        }
        DriftForm::EdgeSum => {
            let nv = realization.graph().num_vertices() as f64;
            let dot = |w: &[f64], v: &[f64]| w.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            realization
                .lattice_edge_vectors()
                .iter()
                .map(|w| {
                    let second: f64 = (0..d)
                        .map(|i| (0..d).map(|j| w[i] * hess_h[i][j] * w[j]).sum::<f64>())
                        .sum();
                    dot(w, &grad_g) * dot(w, &grad_h) + g * second
                })
                .sum::<f64>()
                / (2.0 * nv)
        }
    }
}

/// Right-hand side `∇·(D̃∇ρ) − drift` of the equation at a point.
pub fn continuum_rhs(
    realization: &HarmonicRealization,
    rho: &FourierField,
    drift: &DriftSpec,
    t: f64,
    y: &[f64],
) -> f64 {
    let tensor = realization.lattice_diffusion();
    let hess = rho.hessian(y);
    let mut diffusion = 0.0;
    for (i, row) in tensor.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            diffusion += v * hess[i][j];
        }
    }
    diffusion - drift_term(DriftForm::Divergence, realization, rho, drift, t, y)
}

/// CSV with `#` header lines for `M`, `U`, and `𝔻`, then `t, y…, rho` rows.
pub fn write_grid_csv<W: Write>(
    w: &mut W,
    realization: &HarmonicRealization,
    grids: &[DensityGrid],
) -> io::Result<()> {
    let fmt = |m: &[Vec<f64>]| {
        m.iter()
            .map(|r| r.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join("; ")
    };
    if let Some(g) = grids.first() {
        writeln!(w, "# M={}", g.m)?;
    }
    writeln!(w, "# U={}", fmt(realization.basis().matrix()))?;
    writeln!(w, "# D={}", fmt(realization.diffusion_matrix()))?;
    let d = realization.dim();
    let axes: Vec<String> = (1..=d).map(|i| format!("y{i}")).collect();
    writeln!(w, "t,{},rho", axes.join(","))?;
    for g in grids {
        for (c, v) in g.values.iter().enumerate() {
            let y: Vec<String> = g.centre(c).iter().map(|x| format!("{x}")).collect();
            writeln!(w, "{},{},{}", g.time, y.join(","), v)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::fourier::FourierMode;
    use crate::harmonic::solve_harmonic;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn realization(name: &str) -> HarmonicRealization {
        let spec = catalog::builtin(name).unwrap();
        solve_harmonic(&spec.graph, &spec.basis).unwrap()
    }

    fn profile(dim: usize) -> FourierField {
        let mut k = vec![0; dim];
        k[0] = 1;
        FourierField::constant(dim, 0.5).plus(FourierField::sine(k, 0.3))
    }

    #[test]
    fn constant_density_without_drift_is_fixed() {
        let r = realization("hexagonal");
        let s = PdeSolver::new(&r, &DriftSpec::zero(2), 16).unwrap();
        let out = s.solve(&FourierField::constant(2, 0.3), &[0.05]).unwrap();
        assert!(out[0].values.iter().all(|&v| v == 0.3));
    }

    #[test]
    fn heat_kernel_on_square() {
        let r = realization("square");
        let s = PdeSolver::new(&r, &DriftSpec::zero(2), 64).unwrap();
        let t = 0.05;
        let out = s.solve(&profile(2), &[t]).unwrap();
        let decay = (-0.5 * 4.0 * PI * PI * t).exp();
        let err = (0..out[0].len())
            .map(|c| {
                let y = out[0].centre(c);
                (out[0].values[c] - (0.5 + 0.3 * decay * (2.0 * PI * y[0]).sin())).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 2e-4, "{err}");
    }

    #[test]
    fn step_rejects_unstable_dt() {
        let r = realization("square");
        let s = PdeSolver::new(&r, &DriftSpec::zero(2), 32).unwrap();
        let g = s.initial(&profile(2));
        let bound = s.diffusion_bound();
        assert!(s.step(&g, bound).is_ok());
        match s.step(&g, 2.0 * bound) {
            Err(PdeError::Stability { bound: b, .. }) => assert_eq!(b, bound),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let r = realization("square");
        assert_eq!(
            PdeSolver::new(&r, &DriftSpec::zero(2), 2).unwrap_err(),
            PdeError::GridTooSmall(2)
        );
        let s = PdeSolver::new(&r, &DriftSpec::zero(2), 8).unwrap();
        assert_eq!(s.solve(&profile(2), &[0.2, 0.1]).unwrap_err(), PdeError::Times);
    }

    #[test]
    fn mass_and_range_under_drift() {
        let r = realization("square-skew");
        let drift = DriftSpec::stationary(FourierField::new(
            2,
            vec![
                FourierMode { k: vec![1, 1], cos: 0.2, sin: 0.0 },
                FourierMode { k: vec![1, -1], cos: 0.2, sin: 0.0 },
            ],
        ));
        let s = PdeSolver::new(&r, &drift, 32).unwrap();
        let times: Vec<f64> = (0..=10).map(|i| 0.01 * i as f64).collect();
        let out = s.solve(&profile(2), &times).unwrap();
        let m0 = out[0].mass();
        for g in &out {
            assert!((g.mass() - m0).abs() < 1e-12);
            assert!(g.min() >= -1e-8 && g.max() <= 1.0 + 1e-8);
        }
    }

    #[test]
    fn kov_equation_in_one_dimension() {
        let r = realization("line");
        let drift = DriftSpec::stationary(FourierField::cosine(vec![1], 0.5));
        let rho = profile(1);
        for y in [0.1, 0.37, 0.8] {
            let p = rho.value(&[y]);
            let p1 = rho.gradient(&[y])[0];
            let p2 = rho.hessian(&[y])[0][0];
            let h1 = drift.field.gradient(&[y])[0];
            let h2 = drift.field.hessian(&[y])[0][0];
            // ½ρ'' − (ρ(1−ρ)H')'
            let want = 0.5 * p2 - ((1.0 - 2.0 * p) * p1 * h1 + p * (1.0 - p) * h2);
            assert!((continuum_rhs(&r, &rho, &drift, 0.0, &[y]) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn drift_forms_agree_on_random_fields() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for name in ["line", "square-skew", "hexagonal", "kagome"] {
            let r = realization(name);
            let d = r.dim();
            for _ in 0..10 {
                let mut mode = || FourierMode {
                    k: (0..d).map(|_| rng.random_range(-2..=2)).collect(),
                    cos: rng.random_range(-0.2..0.2),
                    sin: rng.random_range(-0.2..0.2),
                };
                let rho = FourierField::constant(d, 0.5).plus(FourierField::new(d, vec![mode(), mode()]));
                let h = FourierField::new(d, vec![mode(), mode(), mode()]);
                let drift = DriftSpec { field: h, envelope: (1.0, 0.3) };
                let y: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                let a = drift_term(DriftForm::Divergence, &r, &rho, &drift, 0.2, &y);
                let b = drift_term(DriftForm::EdgeSum, &r, &rho, &drift, 0.2, &y);
                assert!((a - b).abs() < 1e-10, "{name}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn discrete_forms_agree() {
        let r = realization("kagome");
        let drift = DriftSpec::stationary(FourierField::cosine(vec![1, 2], 0.3));
        let a = PdeSolver::with_form(&r, &drift, 24, DriftForm::Divergence).unwrap();
        let b = PdeSolver::with_form(&r, &drift, 24, DriftForm::EdgeSum).unwrap();
        let ga = a.solve(&profile(2), &[0.02]).unwrap();
        let gb = b.solve(&profile(2), &[0.02]).unwrap();
        assert!(ga[0].max_abs_diff(&gb[0]) < 1e-12);
    }

    #[test]
    fn hexagonal_and_kagome_share_solution() {
        let drift = DriftSpec::stationary(FourierField::cosine(vec![1, 0], 0.4));
        let solve = |name| {
            PdeSolver::new(&realization(name), &drift, 32)
                .unwrap()
                .solve(&profile(2), &[0.05])
                .unwrap()
        };
        assert_eq!(solve("hexagonal")[0].values, solve("kagome")[0].values);
    }

    #[test]
    fn self_convergence_is_second_order() {
        let r = realization("line");
        let drift = DriftSpec::stationary(FourierField::cosine(vec![1], 0.5));
        let at = |m| PdeSolver::new(&r, &drift, m).unwrap().solve(&profile(1), &[0.05]).unwrap().pop().unwrap();
        let (g1, g2, g3) = (at(32), at(64), at(128));
        let d1 = g1.max_abs_diff(&g2.restrict());
        let d2 = g2.max_abs_diff(&g3.restrict());
        let ratio = d1 / d2;
        assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
    }

    #[test]
    fn relaxes_to_mean_with_decaying_energy() {
        let r = realization("hexagonal");
        let s = PdeSolver::new(&r, &DriftSpec::zero(2), 24).unwrap();
        let times: Vec<f64> = (0..=8).map(|i| 0.05 * i as f64).collect();
        let out = s.solve(&profile(2), &times).unwrap();
        let mean = out[0].mass();
        let dev = |g: &DensityGrid| g.values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        for w in out.windows(2) {
            assert!(dev(&w[1]) <= dev(&w[0]));
            assert!(w[1].gradient_energy() <= w[0].gradient_energy());
        }
        assert!(dev(out.last().unwrap()) < 0.05);
    }

    #[test]
    fn csv_has_header_lines() {
        let r = realization("line");
        let s = PdeSolver::new(&r, &DriftSpec::zero(1), 4).unwrap();
        let out = s.solve(&profile(1), &[0.0]).unwrap();
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &r, &out).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# M=4");
        assert_eq!(lines[2], "# D=0.5");
        assert_eq!(lines[3], "t,y1,rho");
        assert_eq!(lines.len(), 8);
    }
}
