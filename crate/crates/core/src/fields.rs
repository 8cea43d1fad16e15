//! Direct evaluation of the grid log-density, the discrete score field and
//! the particle velocity field.
//!
//! The Gaussian sums over the tensor grid are factorised axis by axis:
//! `ψ_ε(c_l − v) = C Π_s exp(−(c_{l,s} − v_s)²/2ε)`, so each particle or
//! target needs only `d·n` exponentials. Cells whose density falls below
//! [`LOG_FALLBACK_THRESHOLD`] are recomputed with a log-sum-exp over the
//! per-particle exponents.

use rayon::prelude::*;

use crate::ensemble::ParticleEnsemble;
use crate::grid::QuadratureGrid;
use crate::kernel::{norm2, sub, CollisionKernelSpec, Mollifier, Vec3};

/// Densities below this are recomputed in log space.
pub const LOG_FALLBACK_THRESHOLD: f64 = 1e-280;

/// Offset below `ln(w_min)` at which the log-density is clamped.
pub const LOG_CLAMP_OFFSET: f64 = 745.0;

/// Lower bound applied to every log-density value of `ens`.
pub fn log_density_floor(ens: &ParticleEnsemble) -> f64 {
    ens.min_weight().ln() - LOG_CLAMP_OFFSET
}

/// `F̄_ε^N` evaluated at a list of points.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreField(Vec<Vec3>);

impl ScoreField {
    pub fn new(values: Vec<Vec3>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[Vec3] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<Vec3> {
        self.0
    }
}

/// Per-axis Gaussian factors `exp(−(a_m − p_s)²/2ε)`, laid out as
/// `table[s][m * count + k]` for points `k`.
fn axis_factor_table(points: &[Vec3], axis: &[f64], dim: usize, eps: f64) -> Vec<Vec<f64>> {
    let count = points.len();
    let inv = 0.5 / eps;
    (0..dim)
        .map(|s| {
            let mut t = vec![0.0; axis.len() * count];
            t.par_chunks_mut(count).zip(axis.par_iter()).for_each(|(row, &a)| {
                for (slot, p) in row.iter_mut().zip(points) {
                    let d = a - p[s];
                    *slot = (-inv * d * d).exp();
                }
            });
            t
        })
        .collect()
}

fn log_sum_exp_density(ens: &ParticleEnsemble, m: &Mollifier, c: &Vec3) -> f64 {
    let inv = 0.5 / m.eps();
    let mut best = f64::NEG_INFINITY;
    let mut acc = 0.0;
    for (v, w) in ens.velocities().iter().zip(ens.weights()) {
        let x = w.ln() - inv * norm2(&sub(c, v));
        if x > best {
            acc = acc * (best - x).exp() + 1.0;
            best = x;
        } else {
            acc += (x - best).exp();
        }
    }
    m.normalization().ln() + best + acc.ln()
}

/// `log(Σ_k w_k ψ_ε(c_l − v_k))` for every grid cell `l`.
pub fn grid_log_density(ens: &ParticleEnsemble, grid: &QuadratureGrid, m: &Mollifier) -> Vec<f64> {
    let dim = grid.dim();
    let n = grid.cells_per_dim();
    let count = ens.len();
    let table = axis_factor_table(ens.velocities(), grid.axis(), dim, m.eps());
    let weights = ens.weights();
    let norm = m.normalization();

    let mut out = vec![0.0; grid.num_cells()];
    out.par_chunks_mut(n).enumerate().for_each(|(row, chunk)| {
        // `row` indexes every axis but the last.
        let (i0, i1) = if dim == 2 { (row, 0) } else { (row / n, row % n) };
        let f0 = &table[0][i0 * count..(i0 + 1) * count];
        let prefix: Vec<f64> = if dim == 2 {
            f0.iter().zip(weights).map(|(a, w)| a * w).collect()
        } else {
            let f1 = &table[1][i1 * count..(i1 + 1) * count];
            f0.iter()
                .zip(f1)
                .zip(weights)
                .map(|((a, b), w)| a * b * w)
                .collect()
        };
        let last = &table[dim - 1];
        for (il, slot) in chunk.iter_mut().enumerate() {
            let fl = &last[il * count..(il + 1) * count];
            let g: f64 = prefix.iter().zip(fl).map(|(p, f)| p * f).sum::<f64>() * norm;
            *slot = g;
        }
    });

    logs_with_fallback(ens, grid, m, &mut out);
    out
}

/// Replaces grid densities by their logarithms, recomputing underflowed
/// cells in log space and clamping at [`log_density_floor`].
pub(crate) fn logs_with_fallback(ens: &ParticleEnsemble, grid: &QuadratureGrid, m: &Mollifier, values: &mut [f64]) {
    let floor = log_density_floor(ens);
    values.par_iter_mut().enumerate().for_each(|(l, slot)| {
        if *slot >= LOG_FALLBACK_THRESHOLD {
            *slot = slot.ln();
        } else {
            let c = grid.center(l);
            *slot = log_sum_exp_density(ens, m, &c).max(floor);
        }
    });
}

/// `F̄(x) = Σ_l h^d ∇ψ_ε(x − c_l) log_density[l]` at each target.
pub fn score_from_log_density(
    grid: &QuadratureGrid,
    m: &Mollifier,
    log_density: &[f64],
    targets: &[Vec3],
) -> ScoreField {
    let dim = grid.dim();
    let n = grid.cells_per_dim();
    let axis = grid.axis();
    let inv = 0.5 / m.eps();
    let scale = -grid.cell_volume() * m.normalization() / m.eps();

    let values = targets
        .par_iter()
        .map(|x| {
            // e_s[m] = exp(-(x_s - a_m)^2 / 2eps), d_s[m] = (x_s - a_m) e_s[m]
            let mut e = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
            let mut d = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
            for s in 0..dim {
                for (mi, &a) in axis.iter().enumerate() {
                    let dx = x[s] - a;
                    let f = (-inv * dx * dx).exp();
                    e[s][mi] = f;
                    d[s][mi] = dx * f;
                }
            }
            let last = dim - 1;
            let mut f = [0.0; 3];
            if dim == 2 {
                for i0 in 0..n {
                    let row = &log_density[i0 * n..(i0 + 1) * n];
                    let mut se = 0.0;
                    let mut sd = 0.0;
                    for i1 in 0..n {
                        se += e[last][i1] * row[i1];
                        sd += d[last][i1] * row[i1];
                    }
                    f[0] += d[0][i0] * se;
                    f[1] += e[0][i0] * sd;
                }
            } else {
                for i0 in 0..n {
                    let mut aee = 0.0;
                    let mut ade = 0.0;
                    let mut aed = 0.0;
                    for i1 in 0..n {
                        let base = (i0 * n + i1) * n;
                        let row = &log_density[base..base + n];
                        let mut se = 0.0;
                        let mut sd = 0.0;
                        for i2 in 0..n {
                            se += e[2][i2] * row[i2];
                            sd += d[2][i2] * row[i2];
                        }
                        aee += e[1][i1] * se;
                        ade += d[1][i1] * se;
                        aed += e[1][i1] * sd;
                    }
                    f[0] += d[0][i0] * aee;
                    f[1] += e[0][i0] * ade;
                    f[2] += e[0][i0] * aed;
                }
            }
            [scale * f[0], scale * f[1], scale * f[2]]
        })
        .collect();
    ScoreField(values)
}

/// The discrete score `F̄_ε^N` at `targets`.
pub fn score_field(
    ens: &ParticleEnsemble,
    grid: &QuadratureGrid,
    m: &Mollifier,
    targets: &[Vec3],
) -> ScoreField {
    let log_density = grid_log_density(ens, grid, m);
    score_from_log_density(grid, m, &log_density, targets)
}

/// `U_i = −Σ_j w_j A(v_i − v_j)[F_i − F_j]` by the exact double loop.
pub fn velocity_field_direct(
    ens: &ParticleEnsemble,
    scores: &ScoreField,
    spec: &CollisionKernelSpec,
) -> Vec<Vec3> {
    let v = ens.velocities();
    let w = ens.weights();
    let f = scores.values();
    assert_eq!(f.len(), v.len(), "scores must be evaluated at the particles");
    (0..v.len())
        .into_par_iter()
        .map(|i| {
            let mut u = [0.0; 3];
            for j in 0..v.len() {
                let z = sub(&v[i], &v[j]);
                let df = sub(&f[i], &f[j]);
                let a = spec.apply(&z, &df);
                u[0] -= w[j] * a[0];
                u[1] -= w[j] * a[1];
                u[2] -= w[j] * a[2];
            }
            u
        })
        .collect()
}
