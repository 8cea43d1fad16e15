//! Score and velocity fields of a particle ensemble by direct summation,
//! and the exact conservation identities they satisfy.

use landau::diagnostics::{dissipation, dissipation_from_velocity};
use landau::ensemble::init_from_density;
use landau::exact::bimaxwellian_init;
use landau::fields::{score_field, velocity_field_direct};
use landau::grid::QuadratureGrid;
use landau::kernel::{CollisionKernelSpec, Mollifier};

pub struct Summary {
    pub particles: usize,
    pub momentum_rate: [f64; 2],
    pub energy_rate: f64,
    pub dissipation: f64,
    pub dissipation_from_velocity: f64,
}

pub fn run_example() -> landau::Result<Summary> {
    let grid = QuadratureGrid::new(2, 10.0, 30)?;
    let ens = init_from_density(bimaxwellian_init, &grid)?;
    let m = Mollifier::from_rule(grid.spacing(), 0.64, 1.98, 2)?;
    let spec = CollisionKernelSpec::coulomb(1.0 / 16.0, 2)?;
    let scores = score_field(&ens, &grid, &m, ens.velocities());
    let u = velocity_field_direct(&ens, &scores, &spec);
    let mut momentum_rate = [0.0; 2];
    let mut energy_rate = 0.0;
    for ((ui, vi), wi) in u.iter().zip(ens.velocities()).zip(ens.weights()) {
        momentum_rate[0] += wi * ui[0];
        momentum_rate[1] += wi * ui[1];
        energy_rate += wi * (ui[0] * vi[0] + ui[1] * vi[1]);
    }
    Ok(Summary {
        particles: ens.len(),
        momentum_rate,
        energy_rate,
        dissipation: dissipation(&ens, &scores, &spec),
        dissipation_from_velocity: dissipation_from_velocity(&ens, &scores, &u),
    })
}

#[allow(dead_code)]
fn main() -> landau::Result<()> {
    let s = run_example()?;
    println!("{} particles", s.particles);
    println!("sum w U      = [{:.2e}, {:.2e}]", s.momentum_rate[0], s.momentum_rate[1]);
    println!("sum w v.U    = {:.2e}", s.energy_rate);
    println!("dissipation  = {:.10e} (double sum)", s.dissipation);
    println!("             = {:.10e} (-sum w F.U)", s.dissipation_from_velocity);
    Ok(())
}
