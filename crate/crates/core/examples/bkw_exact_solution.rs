//! The BKW solution for Maxwell molecules: profile over time and its
//! conserved moments by midpoint quadrature.

use landau::diagnostics::moments;
use landau::ensemble::init_from_density;
use landau::exact::BkwParams;
use landau::grid::QuadratureGrid;

/// `(dim, t, K, mass, energy)`.
type Row = (usize, f64, f64, f64, f64);

pub fn run_example() -> landau::Result<Vec<Row>> {
    let mut rows = Vec::new();
    for (params, times) in [
        (BkwParams::default_2d(), [0.0, 1.0, 5.0]),
        (BkwParams::default_3d(), [5.5, 6.0, 8.0]),
    ] {
        let grid = QuadratureGrid::new(params.dim, 8.0, if params.dim == 2 { 160 } else { 60 })?;
        for t in times {
            let prof = params.at(t)?;
            let ens = init_from_density(|v| prof.eval(v), &grid)?;
            let mo = moments(&ens);
            rows.push((params.dim, t, prof.k, mo.mass, mo.energy));
        }
    }
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> landau::Result<()> {
    println!("dim      t        K     mass   energy");
    for (d, t, k, mass, energy) in run_example()? {
        println!("{d:>3} {t:>6.2} {k:>8.5} {mass:>8.6} {energy:>8.5}");
    }
    Ok(())
}
