//! Structure-preservation observables, blob reconstruction, discrete error
//! norms and convergence-order fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::exact::Maxwellian;
use crate::fields::{grid_log_density, ScoreField};
use crate::grid::QuadratureGrid;
use crate::kernel::{dot, norm2, sub, CollisionKernelSpec, Mollifier, Vec3};

/// One row of the per-step diagnostics trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub momentum: Vec<f64>,
    pub energy: f64,
    pub entropy: f64,
    pub relative_entropy: f64,
    pub dissipation: f64,
    pub min_pair_distance: f64,
    pub escaped_count: usize,
}

/// Discrete mass `Σw`, momentum `Σw v` and energy `Σw|v|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mass: f64,
    pub momentum: Vec3,
    pub energy: f64,
}

impl Moments {
    /// Maxwellian with the same density, mean velocity and temperature.
    pub fn maxwellian(&self, dim: usize) -> Maxwellian {
        let u = [
            self.momentum[0] / self.mass,
            self.momentum[1] / self.mass,
            self.momentum[2] / self.mass,
        ];
        let temperature = (self.energy / self.mass - norm2(&u)) / dim as f64;
        Maxwellian {
            dim,
            density: self.mass,
            mean: u,
            temperature,
        }
    }
}

pub fn moments(ens: &ParticleEnsemble) -> Moments {
    let mut mass = 0.0;
    let mut momentum = [0.0; 3];
    let mut energy = 0.0;
    for (v, w) in ens.velocities().iter().zip(ens.weights()) {
        mass += w;
        for s in 0..3 {
            momentum[s] += w * v[s];
        }
        energy += w * norm2(v);
    }
    Moments {
        mass,
        momentum,
        energy,
    }
}

/// `Σ_l h^d g_l log g_l` from precomputed `log g_l`. Underflowed cells
/// contribute zero.
pub fn entropy_from_log_density(grid: &QuadratureGrid, log_density: &[f64]) -> f64 {
    let vol = grid.cell_volume();
    log_density
        .iter()
        .map(|&lg| {
            let g = lg.exp();
            if g > 0.0 {
                g * lg
            } else {
                0.0
            }
        })
        .sum::<f64>()
        * vol
}

/// The fully discrete regularized entropy `Ē_ε^N`.
pub fn discrete_entropy(ens: &ParticleEnsemble, grid: &QuadratureGrid, m: &Mollifier) -> f64 {
    entropy_from_log_density(grid, &grid_log_density(ens, grid, m))
}

/// `Σ_l h^d g_l (log g_l − log M(c_l))` from precomputed `log g_l`.
pub fn relative_entropy_from_log_density(
    grid: &QuadratureGrid,
    log_density: &[f64],
    reference: &Maxwellian,
) -> f64 {
    let vol = grid.cell_volume();
    log_density
        .iter()
        .enumerate()
        .map(|(l, &lg)| {
            let g = lg.exp();
            if g > 0.0 {
                g * (lg - reference.log_eval(&grid.center(l)))
            } else {
                0.0
            }
        })
        .sum::<f64>()
        * vol
}

/// Relative entropy of the blob density against the standard Maxwellian
/// `M_{1,0,1}`.
pub fn relative_entropy(ens: &ParticleEnsemble, grid: &QuadratureGrid, m: &Mollifier) -> f64 {
    relative_entropy_from_log_density(
        grid,
        &grid_log_density(ens, grid, m),
        &Maxwellian::standard(grid.dim()),
    )
}

/// `D̄ = ½ Σ_{i,j} w_i w_j ΔF_{ij} · A(v_i − v_j) ΔF_{ij}` as a double loop.
pub fn dissipation(ens: &ParticleEnsemble, scores: &ScoreField, spec: &CollisionKernelSpec) -> f64 {
    let v = ens.velocities();
    let w = ens.weights();
    let f = scores.values();
    let rows: Vec<f64> = (0..v.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..v.len() {
                let df = sub(&f[i], &f[j]);
                acc += w[j] * dot(&df, &spec.apply(&sub(&v[i], &v[j]), &df));
            }
            w[i] * acc
        })
        .collect();
    0.5 * rows.iter().sum::<f64>()
}

/// `−Σ_i w_i F_i · U_i`, which equals [`dissipation`] whenever `U` is the
/// exact velocity field of the same scores.
pub fn dissipation_from_velocity(ens: &ParticleEnsemble, scores: &ScoreField, velocity: &[Vec3]) -> f64 {
    -ens
        .weights()
        .iter()
        .zip(scores.values())
        .zip(velocity)
        .map(|((w, f), u)| w * dot(f, u))
        .sum::<f64>()
}

/// Blob reconstruction `Σ_i w_i ψ_ε(p − v_i)` at arbitrary points.
pub fn blob_eval(ens: &ParticleEnsemble, m: &Mollifier, points: &[Vec3]) -> Vec<f64> {
    points
        .par_iter()
        .map(|p| {
            ens.velocities()
                .iter()
                .zip(ens.weights())
                .map(|(v, w)| w * m.eval(&sub(p, v)))
                .sum()
        })
        .collect()
}

/// Blob reconstruction at every grid center (factorised evaluation).
pub fn blob_on_grid(ens: &ParticleEnsemble, grid: &QuadratureGrid, m: &Mollifier) -> Vec<f64> {
    grid_log_density(ens, grid, m).into_iter().map(f64::exp).collect()
}

/// Discrete `L¹`, `L²`, `L^∞` norms of a difference, absolute and relative
/// to the reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub rel_l1: f64,
    pub rel_l2: f64,
    pub rel_linf: f64,
}

fn lp_norms(values: impl Iterator<Item = f64>, vol: f64) -> (f64, f64, f64) {
    let (mut l1, mut l2, mut linf) = (0.0, 0.0, 0.0f64);
    for x in values {
        let a = x.abs();
        l1 += a;
        l2 += a * a;
        linf = linf.max(a);
    }
    (vol * l1, (vol * l2).sqrt(), linf)
}

/// Norms `‖g‖_p^p = Σ h^d |g(c_l)|^p` of `values − reference`, both aligned
/// to the cells of `grid`.
pub fn error_norms(values: &[f64], reference: &[f64], grid: &QuadratureGrid) -> Result<ErrorNorms> {
    error_norms_with_volume(values, reference, grid.cell_volume())
}

/// As [`error_norms`] with an explicit cell volume, for sample sets that are
/// not a full grid (e.g. axis slices).
pub fn error_norms_with_volume(values: &[f64], reference: &[f64], volume: f64) -> Result<ErrorNorms> {
    if values.len() != reference.len() {
        return Err(Error::InvalidInput(format!(
            "{} values against {} reference values",
            values.len(),
            reference.len()
        )));
    }
    let (l1, l2, linf) = lp_norms(values.iter().zip(reference).map(|(a, b)| a - b), volume);
    let (r1, r2, rinf) = lp_norms(reference.iter().copied(), volume);
    if r1 == 0.0 || r2 == 0.0 || rinf == 0.0 {
        return Err(Error::UndefinedRelative);
    }
    Ok(ErrorNorms {
        l1,
        l2,
        linf,
        rel_l1: l1 / r1,
        rel_l2: l2 / r2,
        rel_linf: linf / rinf,
    })
}

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn fit_convergence_order(h: &[f64], errors: &[f64]) -> Result<f64> {
    if h.len() != errors.len() || h.len() < 3 {
        return Err(Error::FitDomain(format!(
            "got {} spacings and {} errors",
            h.len(),
            errors.len()
        )));
    }
    if h.iter().chain(errors).any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::FitDomain("inputs must be positive and finite".into()));
    }
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::FitDomain("all spacings are equal".into()));
    }
    Ok(sxy / sxx)
}
