//! Resolution sweep on the 2D BKW problem over a short horizon, with fitted
//! orders of the relative errors.

use landau::config::SimulationConfig;
use landau::experiments::{convergence, ConvergenceReport};

pub fn run_example() -> landau::Result<ConvergenceReport> {
    let mut cfg = SimulationConfig::preset("bkw2d")?;
    cfg.time.t_end = 0.1;
    convergence(&cfg, &[16, 20, 24], |_, _| {})
}

#[allow(dead_code)]
fn main() -> landau::Result<()> {
    let report = run_example()?;
    for row in &report.rows {
        let e = row.norms.expect("exact reference");
        println!("n = {:>3}  h = {:.4}  L1 {:.3e}  L2 {:.3e}  Linf {:.3e}", row.n, row.h, e.rel_l1, e.rel_l2, e.rel_linf);
    }
    if let Some(s) = report.slopes {
        println!("orders: L1 {:.2}  L2 {:.2}  Linf {:.2}", s.l1, s.l2, s.linf);
    }
    Ok(())
}
