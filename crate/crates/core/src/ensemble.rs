//! Weighted particle ensembles `f^N = Σ w_i δ(v − v_i)`.

use crate::error::{Error, Result};
use crate::grid::QuadratureGrid;
use crate::kernel::{norm2, sub, Vec3};

/// Cells whose weight is below this fraction of the largest weight are not
/// turned into particles.
pub const WEIGHT_FLOOR_RATIO: f64 = 1e-15;

/// Particle velocities with fixed positive weights. Weights never change
/// after construction; only the velocities move.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    dim: usize,
    velocities: Vec<Vec3>,
    weights: Vec<f64>,
}

impl ParticleEnsemble {
    pub fn new(dim: usize, velocities: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if velocities.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        if velocities.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} velocities but {} weights",
                velocities.len(),
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "weight {i} is not positive and finite: {}",
                weights[i]
            )));
        }
        for (i, v) in velocities.iter().enumerate() {
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidInput(format!("velocity {i} is not finite")));
            }
            if dim == 2 && v[2] != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "velocity {i} has a nonzero third component in 2D"
                )));
            }
        }
        Ok(Self {
            dim,
            velocities,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn velocities(&self) -> &[Vec3] {
        &self.velocities
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Same weights, new velocities.
    pub fn with_velocities(&self, velocities: Vec<Vec3>) -> Result<Self> {
        Self::new(self.dim, velocities, self.weights.clone())
    }

    /// `v_i ← v_i + dt · u_i` for every particle.
    pub(crate) fn advance(&mut self, rates: &[Vec3], dt: f64) {
        for (v, u) in self.velocities.iter_mut().zip(rates) {
            v[0] += dt * u[0];
            v[1] += dt * u[1];
            v[2] += dt * u[2];
        }
    }
}

/// One particle per grid cell at its center with weight `f₀(v_c) h^d`.
pub fn init_from_density<F>(density: F, grid: &QuadratureGrid) -> Result<ParticleEnsemble>
where
    F: Fn(&Vec3) -> f64,
{
    let vol = grid.cell_volume();
    let mut cells = Vec::with_capacity(grid.num_cells());
    let mut wmax: f64 = 0.0;
    for l in 0..grid.num_cells() {
        let c = grid.center(l);
        let f = density(&c);
        if !(f >= 0.0 && f.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "initial density is {f} at {c:?}; expected a nonnegative finite value"
            )));
        }
        let w = f * vol;
        wmax = wmax.max(w);
        cells.push((c, w));
    }
    if wmax <= 0.0 {
        return Err(Error::EmptyEnsemble);
    }
    let floor = WEIGHT_FLOOR_RATIO * wmax;
    let (velocities, weights): (Vec<_>, Vec<_>) =
        cells.into_iter().filter(|&(_, w)| w > floor).unzip();
    ParticleEnsemble::new(grid.dim(), velocities, weights)
}

/// Smallest distance between two distinct particles, by a sweep over the
/// first coordinate.
pub fn min_pair_distance(ens: &ParticleEnsemble) -> Result<f64> {
    let v = ens.velocities();
    if v.len() < 2 {
        return Err(Error::UndefinedDistance);
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a][0].total_cmp(&v[b][0]));
    let mut best2 = f64::INFINITY;
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            let dx = v[j][0] - v[i][0];
            if dx * dx >= best2 {
                break;
            }
            best2 = best2.min(norm2(&sub(&v[i], &v[j])));
        }
    }
    Ok(best2.sqrt())
}
