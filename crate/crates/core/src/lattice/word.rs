//! Word metric on `ℤ^d` and `Γ_N = (ℤ/Nℤ)^d` for the generators `±σᵢ`.

use crate::error::LatticeError;
use crate::lattice::{QuotientGraph, ScaledGraph};

/// `|σ|` for the standard generators: the ℓ¹ norm.
pub fn word_length(sigma: &[i64]) -> u64 {
    sigma.iter().map(|s| s.unsigned_abs()).sum()
}

/// `|σ̲|` on `Γ_N`: the shortest lift, coordinatewise `min(k, N − k)`.
pub fn cyclic_word_length(sigma: &[i64], n: usize) -> u64 {
    let n = n as i64;
    sigma
        .iter()
        .map(|&s| {
            let k = s.rem_euclid(n);
            k.min(n - k) as u64
        })
        .sum()
}

/// All `σ ∈ ℤ^d` with `|σ| ≤ radius`, in lexicographic order.
pub fn ball_offsets(dim: usize, radius: f64) -> Vec<Vec<i64>> {
    let r = radius.floor().max(-1.0) as i64;
    let mut out = Vec::new();
    if r < 0 {
        return out;
    }
    let mut current = vec![0i64; dim];
    fn fill(pos: usize, budget: i64, current: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if pos == current.len() {
            out.push(current.clone());
            return;
        }
        for v in -budget..=budget {
            current[pos] = v;
            fill(pos + 1, budget - v.abs(), current, out);
        }
        current[pos] = 0;
    }
    fill(0, r, &mut current, &mut out);
    out
}

/// Cells within word distance `radius` of `center` in `Γ_N`.
pub fn cell_ball(
    graph: &ScaledGraph,
    center: usize,
    radius: f64,
) -> Result<Vec<usize>, LatticeError> {
    let limit = graph.n() as f64 / 2.0;
    if !(radius < limit) {
        return Err(LatticeError::RadiusTooLarge { radius, limit });
    }
    Ok(ball_offsets(graph.dim(), radius)
        .iter()
        .map(|off| graph.translate_cell(center, off))
        .collect())
}

/// One row of the ball-count comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BallCountRow {
    pub n: usize,
    /// `vol(B¹(ε)) / vol(𝕋^d)` in lattice coordinates.
    pub volume_ratio: f64,
    /// `|∪_{|σ|≤εN} σD| / |V_N|`.
    pub count_ratio: f64,
    pub difference: f64,
    /// `N · difference`; bounded in `N`.
    pub scaled: f64,
}

/// Compares the normalised volume of an ℓ¹ ball in the torus with the share of
/// `X_N` covered by the word ball of radius `εN` in cells.
///
/// Both sides are measured in lattice coordinates, where the torus has unit
/// volume and the ℓ¹ ball of radius `ε` has volume `(2ε)^d / d!`.
pub fn verify_ball_count_lemma(
    base: &QuotientGraph,
    epsilon: f64,
    n_list: &[usize],
) -> Vec<BallCountRow> {
    let d = base.dim();
    let factorial: f64 = (1..=d).map(|k| k as f64).product();
    let volume_ratio = (2.0 * epsilon).powi(d as i32) / factorial;
    n_list
        .iter()
        .map(|&n| {
            let cells = ball_offsets(d, epsilon * n as f64).len();
            let total = n.pow(d as u32) * base.num_vertices();
            let count_ratio = (cells * base.num_vertices()) as f64 / total as f64;
            let difference = (volume_ratio - count_ratio).abs();
            BallCountRow {
                n,
                volume_ratio,
                count_ratio,
                difference,
                scaled: difference * n as f64,
            }
        })
        .collect()
}
