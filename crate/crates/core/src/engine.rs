//! Summation engines for the three kernel sums of one time step.

use crate::ensemble::ParticleEnsemble;
use crate::error::Result;
use crate::fields::{grid_log_density, logs_with_fallback, score_from_log_density, velocity_field_direct, ScoreField};
use crate::grid::QuadratureGrid;
use crate::kernel::{CollisionKernelSpec, Mollifier, Vec3};
use crate::treecode::{treecode_velocity_field, windowed_grid_density, windowed_score, TreecodeParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    /// Exact double sums (Gaussian sums factorised over the grid axes).
    Direct,
    /// Particle–cluster treecode; `θ = 0` reproduces [`Engine::Direct`].
    Treecode(TreecodeParams),
}

/// Everything one step needs: `log g` on the grid, the scores and the
/// velocities at the particles.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldEvaluation {
    pub log_density: Vec<f64>,
    pub scores: ScoreField,
    pub velocity: Vec<Vec3>,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Direct => "direct",
            Engine::Treecode(_) => "treecode",
        }
    }

    fn tree_params(&self) -> Option<&TreecodeParams> {
        match self {
            Engine::Treecode(p) if p.theta > 0.0 => Some(p),
            _ => None,
        }
    }

    /// `log g_l` at every grid cell.
    pub fn log_density(&self, ens: &ParticleEnsemble, grid: &QuadratureGrid, m: &Mollifier) -> Result<Vec<f64>> {
        if self.tree_params().is_none() {
            return Ok(grid_log_density(ens, grid, m));
        }
        let mut g = windowed_grid_density(ens.velocities(), ens.weights(), grid, m);
        logs_with_fallback(ens, grid, m, &mut g);
        Ok(g)
    }

    /// The discrete score at `targets` from precomputed `log g`.
    pub fn scores(
        &self,
        grid: &QuadratureGrid,
        m: &Mollifier,
        log_density: &[f64],
        targets: &[Vec3],
    ) -> Result<ScoreField> {
        if self.tree_params().is_none() {
            return Ok(score_from_log_density(grid, m, log_density, targets));
        }
        Ok(ScoreField::new(windowed_score(grid, m, log_density, targets)))
    }

    pub fn velocity(
        &self,
        ens: &ParticleEnsemble,
        scores: &ScoreField,
        spec: &CollisionKernelSpec,
    ) -> Result<Vec<Vec3>> {
        match self {
            Engine::Direct => Ok(velocity_field_direct(ens, scores, spec)),
            Engine::Treecode(p) => treecode_velocity_field(ens, scores, spec, p),
        }
    }

    /// All three sums for the current ensemble.
    pub fn evaluate(
        &self,
        ens: &ParticleEnsemble,
        grid: &QuadratureGrid,
        m: &Mollifier,
        spec: &CollisionKernelSpec,
    ) -> Result<FieldEvaluation> {
        let log_density = self.log_density(ens, grid, m)?;
        let scores = self.scores(grid, m, &log_density, ens.velocities())?;
        let velocity = self.velocity(ens, &scores, spec)?;
        Ok(FieldEvaluation {
            log_density,
            scores,
            velocity,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::init_from_density;
    use crate::exact::BkwParams;
    use crate::kernel::{norm2, sub};

    fn bkw3d(n: usize) -> (ParticleEnsemble, QuadratureGrid, Mollifier, CollisionKernelSpec) {
        let grid = QuadratureGrid::new(3, 4.0, n).unwrap();
        let prof = BkwParams::default_3d().at(5.5).unwrap();
        let ens = init_from_density(|v| prof.eval(v), &grid).unwrap();
        let m = Mollifier::from_rule(grid.spacing(), 0.64, 1.98, 3).unwrap();
        (ens, grid, m, CollisionKernelSpec::maxwell(1.0 / 24.0, 3).unwrap())
    }

    #[test]
    fn treecode_at_theta_zero_is_bitwise_direct() {
        let (ens, grid, m, spec) = bkw3d(8);
        let p = TreecodeParams {
            theta: 0.0,
            ..TreecodeParams::default()
        };
        let a = Engine::Direct.evaluate(&ens, &grid, &m, &spec).unwrap();
        let b = Engine::Treecode(p).evaluate(&ens, &grid, &m, &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn treecode_engine_tracks_direct() {
        let (ens, grid, m, spec) = bkw3d(12);
        let a = Engine::Direct.evaluate(&ens, &grid, &m, &spec).unwrap();
        let b = Engine::Treecode(TreecodeParams::default()).evaluate(&ens, &grid, &m, &spec).unwrap();
        let rel = |x: &[Vec3], y: &[Vec3]| {
            let num: f64 = x.iter().zip(y).map(|(p, q)| norm2(&sub(p, q))).sum();
            let den: f64 = y.iter().map(norm2).sum();
            (num / den).sqrt()
        };
        assert!(rel(b.scores.values(), a.scores.values()) < 1e-8);
        assert!(rel(&b.velocity, &a.velocity) < 1e-8);
        let worst = a
            .log_density
            .iter()
            .zip(&b.log_density)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
    }
}
