//! Grid-aligned Gaussian sums with cutoff pruning.
//!
//! At `ε ~ h²` a Gaussian cluster only admits a Taylor expansion when its
//! radius is a small fraction of `√ε`, well below one grid cell, so a tree
//! contributes to these sums through pruning alone. On the regular grid the
//! pruned region of every particle is an index window, and the surviving
//! pairs factorise over the axes.

use rayon::prelude::*;

use crate::grid::QuadratureGrid;
use crate::kernel::{Mollifier, Vec3};

use super::sum::GAUSSIAN_PRUNE_EXPONENT;

/// Index window per axis and the factors along the last two axes.
type Prepared = ([(usize, usize); 3], [Vec<f64>; 2]);

fn cutoff(m: &Mollifier) -> f64 {
    (2.0 * m.eps() * GAUSSIAN_PRUNE_EXPONENT).sqrt()
}

/// Index range `lo..hi` of grid nodes within `r` of `x` along one axis.
fn window(axis: &[f64], h: f64, x: f64, r: f64) -> (usize, usize) {
    let n = axis.len();
    let first = ((x - r - axis[0]) / h).ceil().max(0.0);
    let last = ((x + r - axis[0]) / h).floor().min((n - 1) as f64);
    if last < first {
        (0, 0)
    } else {
        (first as usize, last as usize + 1)
    }
}

/// `Σ_k w_k ψ_ε(c_l − v_k)` at every grid cell, scattering each particle
/// over its window. Slabs of the first axis are filled independently, each
/// in particle order.
pub fn windowed_grid_density(velocities: &[Vec3], weights: &[f64], grid: &QuadratureGrid, m: &Mollifier) -> Vec<f64> {
    let dim = grid.dim();
    let n = grid.cells_per_dim();
    let axis = grid.axis();
    let h = grid.spacing();
    let inv = 0.5 / m.eps();
    let rcut = cutoff(m);
    let factors = |x: f64, lo: usize, hi: usize| -> Vec<f64> {
        axis[lo..hi]
            .iter()
            .map(|a| {
                let d = a - x;
                (-inv * d * d).exp()
            })
            .collect()
    };
    // per particle: window and factors along every axis but the first
    let prepared: Vec<Prepared> = velocities
        .par_iter()
        .map(|v| {
            let mut win = [(0, 0); 3];
            for (s, slot) in win.iter_mut().enumerate().take(dim) {
                *slot = window(axis, h, v[s], rcut);
            }
            let f1 = factors(v[1], win[1].0, win[1].1);
            let f2 = if dim == 3 { factors(v[2], win[2].0, win[2].1) } else { Vec::new() };
            (win, [f1, f2])
        })
        .collect();
    let slab = n.pow(dim as u32 - 1);
    let norm = m.normalization();
    let mut out = vec![0.0; grid.num_cells()];
    out.par_chunks_mut(slab).enumerate().for_each(|(i0, chunk)| {
        let a0 = axis[i0];
        for ((v, w), (win, f)) in velocities.iter().zip(weights).zip(&prepared) {
            let (lo0, hi0) = win[0];
            if i0 < lo0 || i0 >= hi0 {
                continue;
            }
            let d = a0 - v[0];
            let c0 = w * norm * (-inv * d * d).exp();
            let (lo1, hi1) = win[1];
            if dim == 2 {
                for (slot, f1) in chunk[lo1..hi1].iter_mut().zip(&f[0]) {
                    *slot += c0 * f1;
                }
            } else {
                let (lo2, hi2) = win[2];
                for (i1, f1) in (lo1..hi1).zip(&f[0]) {
                    let c1 = c0 * f1;
                    let row = &mut chunk[i1 * n + lo2..i1 * n + hi2];
                    for (slot, f2) in row.iter_mut().zip(&f[1]) {
                        *slot += c1 * f2;
                    }
                }
            }
        }
    });
    out
}

/// `F̄(x) = Σ_l h^d ∇ψ_ε(x − c_l) log_density[l]`, restricted per target to
/// the cells whose box window lies within the pruning cutoff.
pub fn windowed_score(grid: &QuadratureGrid, m: &Mollifier, log_density: &[f64], targets: &[Vec3]) -> Vec<Vec3> {
    let dim = grid.dim();
    let n = grid.cells_per_dim();
    let axis = grid.axis();
    let h = grid.spacing();
    let inv = 0.5 / m.eps();
    let scale = -grid.cell_volume() * m.normalization() / m.eps();
    let rcut = cutoff(m);

    targets
        .par_iter()
        .map(|x| {
            let mut lo = [0usize; 3];
            let mut hi = [0usize; 3];
            let mut e = [Vec::new(), Vec::new(), Vec::new()];
            let mut d = [Vec::new(), Vec::new(), Vec::new()];
            for s in 0..dim {
                (lo[s], hi[s]) = window(axis, h, x[s], rcut);
                if lo[s] == hi[s] {
                    return [0.0; 3];
                }
                for &a in &axis[lo[s]..hi[s]] {
                    let dx = x[s] - a;
                    let f = (-inv * dx * dx).exp();
                    e[s].push(f);
                    d[s].push(dx * f);
                }
            }
            let mut f = [0.0; 3];
            if dim == 2 {
                for (k0, i0) in (lo[0]..hi[0]).enumerate() {
                    let row = &log_density[i0 * n + lo[1]..i0 * n + hi[1]];
                    let mut se = 0.0;
                    let mut sd = 0.0;
                    for ((q, a), b) in row.iter().zip(&e[1]).zip(&d[1]) {
                        se += a * q;
                        sd += b * q;
                    }
                    f[0] += d[0][k0] * se;
                    f[1] += e[0][k0] * sd;
                }
            } else {
                for (k0, i0) in (lo[0]..hi[0]).enumerate() {
                    let mut aee = 0.0;
                    let mut ade = 0.0;
                    let mut aed = 0.0;
                    for (k1, i1) in (lo[1]..hi[1]).enumerate() {
                        let base = (i0 * n + i1) * n;
                        let row = &log_density[base + lo[2]..base + hi[2]];
                        let mut se = 0.0;
                        let mut sd = 0.0;
                        for ((q, a), b) in row.iter().zip(&e[2]).zip(&d[2]) {
                            se += a * q;
                            sd += b * q;
                        }
                        aee += e[1][k1] * se;
                        ade += d[1][k1] * se;
                        aed += e[1][k1] * sd;
                    }
                    f[0] += d[0][k0] * aee;
                    f[1] += e[0][k0] * ade;
                    f[2] += e[0][k0] * aed;
                }
            }
            [scale * f[0], scale * f[1], scale * f[2]]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::score_from_log_density;
    use crate::kernel::{norm2, sub};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize, spread: f64) -> (Vec<Vec3>, Vec<f64>) {
        let v = (0..n)
            .map(|_| {
                let mut p = [0.0; 3];
                for c in p.iter_mut().take(dim) {
                    *c = rng.gen_range(-spread..spread);
                }
                p
            })
            .collect();
        let w = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        (v, w)
    }

    #[test]
    fn density_matches_the_full_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [2, 3] {
            let grid = QuadratureGrid::new(dim, 3.0, 14).unwrap();
            let m = Mollifier::from_rule(grid.spacing(), 0.64, 1.98, dim).unwrap();
            // some particles outside the grid
            let (v, w) = cloud(&mut rng, 300, dim, 3.5);
            let g = windowed_grid_density(&v, &w, &grid, &m);
            let peak = w.iter().cloned().fold(0.0, f64::max) * m.normalization();
            for (l, gl) in g.iter().enumerate() {
                let c = grid.center(l);
                let full: f64 = v.iter().zip(&w).map(|(vk, wk)| wk * m.eval(&sub(&c, vk))).sum();
                assert!((gl - full).abs() <= 1e-14 * full.max(peak), "cell {l}: {gl} vs {full}");
            }
        }
    }

    #[test]
    fn score_matches_the_full_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for dim in [2, 3] {
            let grid = QuadratureGrid::new(dim, 3.0, 12).unwrap();
            let m = Mollifier::from_rule(grid.spacing(), 0.64, 1.98, dim).unwrap();
            let ld: Vec<f64> = (0..grid.num_cells()).map(|_| rng.gen_range(-30.0..1.0)).collect();
            let (targets, _) = cloud(&mut rng, 200, dim, 3.5);
            let fast = windowed_score(&grid, &m, &ld, &targets);
            let full = score_from_log_density(&grid, &m, &ld, &targets);
            let scale = full.values().iter().map(norm2).fold(0.0, f64::max).sqrt();
            for (a, b) in fast.iter().zip(full.values()) {
                assert!(norm2(&sub(a, b)).sqrt() <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn far_targets_get_nothing() {
        let grid = QuadratureGrid::new(2, 1.0, 8).unwrap();
        let m = Mollifier::new(1e-3, 2).unwrap();
        let f = windowed_score(&grid, &m, &vec![1.0; 64], &[[5.0, 0.0, 0.0]]);
        assert_eq!(f[0], [0.0; 3]);
        let g = windowed_grid_density(&[[5.0, 0.0, 0.0]], &[1.0], &grid, &m);
        assert!(g.iter().all(|&x| x == 0.0));
    }
}
