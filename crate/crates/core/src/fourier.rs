//! Truncated Fourier series on the unit torus in lattice coordinates.
//!
//! Drift fields, initial profiles, and test functions are all finite
//! trigonometric sums, so their derivatives are exact and every module
//! evaluates them identically.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

const TAU: f64 = 2.0 * PI;

/// `cos·cos(2πk·y) + sin·sin(2πk·y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub k: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

impl FourierMode {
    fn phase(&self, y: &[f64]) -> f64 {
        TAU * self.k.iter().zip(y).map(|(&k, &y)| k as f64 * y).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierField {
    dim: usize,
    modes: Vec<FourierMode>,
}

impl FourierField {
    /// # Panics
    /// If a mode's wave vector does not have `dim` components.
    pub fn new(dim: usize, modes: Vec<FourierMode>) -> Self {
        for m in &modes {
            assert_eq!(m.k.len(), dim, "wave vector {:?} is not {dim}-dimensional", m.k);
        }
        FourierField { dim, modes }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self::new(
            dim,
            vec![FourierMode {
                k: vec![0; dim],
                cos: value,
                sin: 0.0,
            }],
        )
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, Vec::new())
    }

    pub fn cosine(k: Vec<i64>, amplitude: f64) -> Self {
        let dim = k.len();
        Self::new(
            dim,
            vec![FourierMode {
                k,
                cos: amplitude,
                sin: 0.0,
            }],
        )
    }

    pub fn sine(k: Vec<i64>, amplitude: f64) -> Self {
        let dim = k.len();
        Self::new(
            dim,
            vec![FourierMode {
                k,
                cos: 0.0,
                sin: amplitude,
            }],
        )
    }

    /// Sum of two fields on the same torus.
    pub fn plus(mut self, other: FourierField) -> Self {
        assert_eq!(self.dim, other.dim);
        self.modes.extend(other.modes);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `y ↦ f(y − s)`, re-expressed in the same modes.
    pub fn translated(&self, s: &[f64]) -> Self {
        let modes = self
            .modes
            .iter()
            .map(|m| {
                let (sp, cp) = m.phase(s).sin_cos();
                FourierMode {
                    k: m.k.clone(),
                    cos: m.cos * cp - m.sin * sp,
                    sin: m.cos * sp + m.sin * cp,
                }
            })
            .collect();
        FourierField {
            dim: self.dim,
            modes,
        }
    }

    pub fn modes(&self) -> &[FourierMode] {
        &self.modes
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let (s, c) = m.phase(y).sin_cos();
                m.cos * c + m.sin * s
            })
            .sum()
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for m in &self.modes {
            let (s, c) = m.phase(y).sin_cos();
            let amp = TAU * (m.sin * c - m.cos * s);
            for (gi, &k) in g.iter_mut().zip(&m.k) {
                *gi += amp * k as f64;
            }
        }
        g
    }

    pub fn hessian(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let mut h = vec![vec![0.0; self.dim]; self.dim];
        for m in &self.modes {
            let (s, c) = m.phase(y).sin_cos();
            let amp = -TAU * TAU * (m.cos * c + m.sin * s);
            for (i, &ki) in m.k.iter().enumerate() {
                for (j, &kj) in m.k.iter().enumerate() {
                    h[i][j] += amp * (ki * kj) as f64;
                }
            }
        }
        h
    }

    /// Per-axis upper bound on `sup |∂ᵢf|`.
    pub fn gradient_bound(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.dim];
        for m in &self.modes {
            let amp = TAU * m.cos.hypot(m.sin);
            for (bi, &k) in b.iter_mut().zip(&m.k) {
                *bi += amp * k.unsigned_abs() as f64;
            }
        }
        b
    }

    /// `∫_{[0,1)^d} f dy`: the sum of the constant-mode cosine coefficients.
    pub fn mean(&self) -> f64 {
        self.modes
            .iter()
            .filter(|m| m.k.iter().all(|&k| k == 0))
            .map(|m| m.cos)
            .sum()
    }

    /// Content digest over the exact bit patterns of all coefficients.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        self.feed(&mut h);
        hex::encode(h.finalize())
    }

    fn feed(&self, h: &mut Sha256) {
        h.update((self.dim as u64).to_le_bytes());
        h.update((self.modes.len() as u64).to_le_bytes());
        for m in &self.modes {
            for k in &m.k {
                h.update(k.to_le_bytes());
            }
            h.update(m.cos.to_bits().to_le_bytes());
            h.update(m.sin.to_bits().to_le_bytes());
        }
    }
}

/// Drift potential `H(t, y) = (c₀ + c₁t)·H₀(y)`.
///
/// There is no affine term, so a constant external field `∇H ≡ E` cannot be
/// expressed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub field: FourierField,
    pub envelope: (f64, f64),
}

impl DriftSpec {
    pub fn stationary(field: FourierField) -> Self {
        DriftSpec {
            field,
            envelope: (1.0, 0.0),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::stationary(FourierField::zero(dim))
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn amplitude(&self, t: f64) -> f64 {
        self.envelope.0 + self.envelope.1 * t
    }

    /// `max_{t ∈ [0,T]} |c₀ + c₁t|`.
    pub fn max_amplitude(&self, horizon: f64) -> f64 {
        self.amplitude(0.0).abs().max(self.amplitude(horizon).abs())
    }

    pub fn value(&self, t: f64, y: &[f64]) -> f64 {
        self.amplitude(t) * self.field.value(y)
    }

    pub fn time_derivative(&self, y: &[f64]) -> f64 {
        self.envelope.1 * self.field.value(y)
    }

    pub fn gradient(&self, t: f64, y: &[f64]) -> Vec<f64> {
        let a = self.amplitude(t);
        self.field.gradient(y).into_iter().map(|g| a * g).collect()
    }

    pub fn is_time_independent(&self) -> bool {
        self.envelope.1 == 0.0
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        self.field.feed(&mut h);
        h.update(self.envelope.0.to_bits().to_le_bytes());
        h.update(self.envelope.1.to_bits().to_le_bytes());
        hex::encode(h.finalize())
    }
}
