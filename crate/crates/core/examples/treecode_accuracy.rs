//! Treecode against direct summation: error of the velocity field as the
//! Taylor order grows, for the Coulomb kernel in 3D.

use landau::ensemble::init_from_density;
use landau::exact::rosenbluth_init;
use landau::fields::{score_field, velocity_field_direct};
use landau::grid::QuadratureGrid;
use landau::kernel::{norm2, sub, CollisionKernelSpec, Mollifier};
use landau::treecode::{treecode_velocity_field, TreecodeParams};

pub fn run_example() -> landau::Result<Vec<(usize, f64)>> {
    let grid = QuadratureGrid::new(3, 1.0, 24)?;
    let ens = init_from_density(rosenbluth_init, &grid)?;
    let m = Mollifier::from_rule(grid.spacing(), 0.64, 1.98, 3)?;
    let spec = CollisionKernelSpec::coulomb(1.0 / (4.0 * std::f64::consts::PI), 3)?;
    let scores = score_field(&ens, &grid, &m, ens.velocities());
    let direct = velocity_field_direct(&ens, &scores, &spec);
    let den: f64 = direct.iter().map(norm2).sum();
    let mut rows = Vec::new();
    for order in [0, 2, 4, 6] {
        let params = TreecodeParams {
            theta: 0.5,
            order,
            leaf_capacity: 8,
            restore_momentum: false,
        };
        let tree = treecode_velocity_field(&ens, &scores, &spec, &params)?;
        let num: f64 = tree.iter().zip(&direct).map(|(a, b)| norm2(&sub(a, b))).sum();
        rows.push((order, (num / den).sqrt()));
    }
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> landau::Result<()> {
    println!("order  relative L2 error");
    for (p, e) in run_example()? {
        println!("{p:>5}  {e:.3e}");
    }
    Ok(())
}
