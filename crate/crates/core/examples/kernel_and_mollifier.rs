//! The two kernel families: the collision matrix `A(z)` and the Gaussian
//! mollifier `ψ_ε`.

use landau::kernel::{kernel_matrix, CollisionKernelSpec, Mollifier};

pub fn run_example() -> landau::Result<Vec<String>> {
    let mut lines = Vec::new();
    let z = [0.6, -0.3, 0.8];
    for spec in [CollisionKernelSpec::maxwell(1.0 / 24.0, 3)?, CollisionKernelSpec::coulomb(1.0 / (4.0 * std::f64::consts::PI), 3)?] {
        let a = kernel_matrix(&z, &spec)?;
        let az = a.mul_vec(&z);
        lines.push(format!(
            "gamma = {:>4}: A(z) diagonal = [{:.5}, {:.5}, {:.5}], |A z| = {:.1e}",
            spec.gamma,
            a.get(0, 0),
            a.get(1, 1),
            a.get(2, 2),
            (az[0] * az[0] + az[1] * az[1] + az[2] * az[2]).sqrt()
        ));
    }

    let h = 0.2;
    let m = Mollifier::from_rule(h, 0.64, 1.98, 3)?;
    lines.push(format!("eps = 0.64 h^1.98 = {:.5} for h = {h}", m.eps()));
    for r in [0.0, 0.1, 0.2, 0.4] {
        let p = [r, 0.0, 0.0];
        lines.push(format!("psi({r:.1}) = {:.6e}, d/dx psi = {:.6e}", m.eval(&p), m.grad(&p)[0]));
    }
    Ok(lines)
}

#[allow(dead_code)]
fn main() -> landau::Result<()> {
    for line in run_example()? {
        println!("{line}");
    }
    Ok(())
}
