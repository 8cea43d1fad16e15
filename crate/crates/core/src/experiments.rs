//! Experiment drivers behind the CLI: a full run with outputs, resolution
//! sweeps, the treecode benchmark and the invariant suite.

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{emit_config, InitialKind, SimulationConfig};
use crate::diagnostics::{blob_eval, blob_on_grid, error_norms, fit_convergence_order, moments, DiagnosticsRecord, ErrorNorms};
use crate::engine::Engine;
use crate::ensemble::{init_from_density, ParticleEnsemble};
use crate::error::{Error, Result};
use crate::exact::BkwParams;
use crate::fields::{grid_log_density, velocity_field_direct};
use crate::grid::QuadratureGrid;
use crate::kernel::{kernel_matrix, norm2, sub, CollisionKernelSpec, Mollifier, Vec3};
use crate::output::{blob_slices, write_diagnostics, write_snapshot, RunManifest};
use crate::simulation::{initialize, run, run_from, RunOutput};
use crate::treecode::coeffs::kernel_components;
use crate::treecode::multiindex::monomials;
use crate::treecode::{taylor_coeffs_a, MultiIndexSet, TreecodeParams};

/// Runs `cfg`, writing `diagnostics.csv`, `config.toml`, snapshots at the
/// configured stride (and of the final state) and `manifest.toml` into `out`.
pub fn run_to_dir(cfg: &SimulationConfig, out: &Path) -> Result<(RunOutput, RunManifest)> {
    let started = Instant::now();
    let (setup, state) = initialize(cfg)?;
    let steps = cfg.num_steps();
    let stride = cfg.output.snapshot_stride;
    let mut manifest = RunManifest::new(cfg);
    let rel = |p: &Path| p.strip_prefix(out).unwrap_or(p).display().to_string();
    let mut files = Vec::new();
    let output = run_from(&setup, state, steps, |s, _| {
        if stride > 0 && (s.step % stride == 0 || s.step == steps) {
            let f = write_snapshot(out, s.step, &s.ensemble, &setup.grid, &setup.mollifier)?;
            files.extend([rel(&f.particles), rel(&f.blob), rel(&f.slices)]);
        }
        Ok(())
    })?;
    let diag = out.join("diagnostics.csv");
    write_diagnostics(&diag, &output.records)?;
    let config_path = out.join("config.toml");
    std::fs::write(&config_path, emit_config(cfg)).map_err(|e| Error::io(&config_path, e))?;
    manifest.files.push(rel(&diag));
    manifest.files.push(rel(&config_path));
    manifest.files.extend(files);
    if !cfg.output.deterministic {
        manifest.started_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs_f64() - started.elapsed().as_secs_f64());
        manifest.wall_seconds = Some(started.elapsed().as_secs_f64());
    }
    manifest.write(&out.join("manifest.toml"))?;
    Ok((output, manifest))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reference {
    /// The BKW solution at `t_end` on each run's own grid.
    Exact,
    /// The finest run, compared on the coarsest grid.
    Finest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    /// `None` for the run serving as the reference.
    pub norms: Option<ErrorNorms>,
    /// `L¹` distance of the axis slices from the reference.
    pub slice_l1: Option<f64>,
    pub records: Vec<DiagnosticsRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slopes {
    pub linf: f64,
    pub l1: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub reference: Reference,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares orders of the relative errors; needs three error rows.
    pub slopes: Option<Slopes>,
}

/// Orders of relative `L^∞`, `L¹`, `L²` errors against `h`.
pub fn fit_slopes(h: &[f64], norms: &[ErrorNorms]) -> Result<Slopes> {
    let pick = |f: fn(&ErrorNorms) -> f64| norms.iter().map(f).collect::<Vec<_>>();
    Ok(Slopes {
        linf: fit_convergence_order(h, &pick(|e| e.rel_linf))?,
        l1: fit_convergence_order(h, &pick(|e| e.rel_l1))?,
        l2: fit_convergence_order(h, &pick(|e| e.rel_l2))?,
    })
}

fn slice_l1(a: &[(usize, f64, f64)], b: &[(usize, f64, f64)], h: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.2 - y.2).abs()).sum::<f64>() * h
}

/// Runs `base` at every `n` and measures errors at `t_end`. BKW runs compare
/// with the exact solution; other initial data with the finest run.
pub fn convergence<F>(base: &SimulationConfig, n_list: &[usize], mut progress: F) -> Result<ConvergenceReport>
where
    F: FnMut(usize, &RunOutput),
{
    if n_list.len() < 3 {
        return Err(Error::Config(format!("need at least 3 resolutions, got {}", n_list.len())));
    }
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let coarse = QuadratureGrid::new(base.domain.dim, base.domain.half_width, ns[0])?;
    let coarse_centers = coarse.centers();
    let mut outs = Vec::new();
    for &n in &ns {
        let mut cfg = *base;
        cfg.domain.cells_per_dim = n;
        let out = run(&cfg).map_err(|e| Error::Resolution { n, source: Box::new(e) })?;
        progress(n, &out);
        outs.push((cfg, out));
    }
    let mut rows = Vec::new();
    if base.initial.kind == InitialKind::Bkw {
        let bkw = base.bkw_params()?.at(base.time.t_end)?;
        let exact_slices = |grid: &QuadratureGrid| -> Vec<(usize, f64, f64)> {
            crate::output::slice_points(grid)
                .iter()
                .map(|(s, p)| (*s, p[*s], bkw.eval(p)))
                .collect()
        };
        let ref_slices = exact_slices(&coarse);
        for (cfg, out) in outs {
            let grid = cfg.grid()?;
            let m = cfg.mollifier()?;
            let ens = &out.final_state.ensemble;
            let exact: Vec<f64> = grid.centers().iter().map(|c| bkw.eval(c)).collect();
            let norms = error_norms(&blob_on_grid(ens, &grid, &m), &exact, &grid)?;
            let sl = slice_l1(&blob_slices(ens, &coarse, &m), &ref_slices, coarse.spacing());
            rows.push(ConvergenceRow {
                n: cfg.domain.cells_per_dim,
                h: grid.spacing(),
                norms: Some(norms),
                slice_l1: Some(sl),
                records: out.records,
            });
        }
        let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let norms: Vec<ErrorNorms> = rows.iter().filter_map(|r| r.norms).collect();
        return Ok(ConvergenceReport {
            reference: Reference::Exact,
            slopes: Some(fit_slopes(&h, &norms)?),
            rows,
        });
    }
    let (fcfg, fout) = outs.last().expect("at least three runs");
    let fm = fcfg.mollifier()?;
    let reference = blob_eval(&fout.final_state.ensemble, &fm, &coarse_centers);
    let ref_slices = blob_slices(&fout.final_state.ensemble, &coarse, &fm);
    let last = outs.len() - 1;
    for (i, (cfg, out)) in outs.into_iter().enumerate() {
        let m = cfg.mollifier()?;
        let ens = &out.final_state.ensemble;
        let (norms, sl) = if i == last {
            (None, None)
        } else {
            let values = blob_eval(ens, &m, &coarse_centers);
            (
                Some(error_norms(&values, &reference, &coarse)?),
                Some(slice_l1(&blob_slices(ens, &coarse, &m), &ref_slices, coarse.spacing())),
            )
        };
        rows.push(ConvergenceRow {
            n: cfg.domain.cells_per_dim,
            h: cfg.grid()?.spacing(),
            norms,
            slice_l1: sl,
            records: out.records,
        });
    }
    let with: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.norms.is_some()).collect();
    let slopes = if with.len() >= 3 {
        let h: Vec<f64> = with.iter().map(|r| r.h).collect();
        let norms: Vec<ErrorNorms> = with.iter().filter_map(|r| r.norms).collect();
        Some(fit_slopes(&h, &norms)?)
    } else {
        None
    };
    Ok(ConvergenceReport {
        reference: Reference::Finest,
        rows,
        slopes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub particles: usize,
    /// Fastest of the repetitions, seconds per step (all three sums).
    pub direct_seconds: f64,
    pub treecode_seconds: f64,
    /// Relative `L²` deviation of treecode velocities from direct ones.
    pub velocity_error: f64,
}

/// Times one step of both engines on the 3D BKW ensemble at `t = 5.5` for
/// each `n`.
pub fn treecode_bench(n_list: &[usize], params: &TreecodeParams, reps: usize) -> Result<Vec<BenchRow>> {
    params.validate()?;
    let base = SimulationConfig::preset("bkw3d")?;
    let tree = Engine::Treecode(*params);
    n_list
        .iter()
        .map(|&n| {
            let mut cfg = base;
            cfg.domain.cells_per_dim = n;
            let grid = cfg.grid()?;
            let m = cfg.mollifier()?;
            let spec = cfg.kernel_spec()?;
            let ens = cfg.initial_ensemble()?;
            let time = |engine: &Engine| -> Result<(f64, Vec<Vec3>)> {
                let mut best = f64::INFINITY;
                let mut vel = Vec::new();
                for _ in 0..reps.max(1) {
                    let t0 = Instant::now();
                    let f = engine.evaluate(&ens, &grid, &m, &spec)?;
                    best = best.min(t0.elapsed().as_secs_f64());
                    vel = f.velocity;
                }
                Ok((best, vel))
            };
            let (td, vd) = time(&Engine::Direct)?;
            let (tt, vt) = time(&tree)?;
            let num: f64 = vt.iter().zip(&vd).map(|(a, b)| norm2(&sub(a, b))).sum();
            let den: f64 = vd.iter().map(norm2).sum();
            Ok(BenchRow {
                n,
                particles: ens.len(),
                direct_seconds: td,
                treecode_seconds: tt,
                velocity_error: (num / den).sqrt(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, bound: f64) -> Check {
    Check {
        name,
        passed: value <= bound,
        detail: format!("{value:.3e} (bound {bound:.0e})"),
    }
}

fn random_ensemble(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> ParticleEnsemble {
    let v = (0..n)
        .map(|_| {
            let mut p = [0.0; 3];
            for c in p.iter_mut().take(dim) {
                *c = rng.gen_range(-2.0..2.0);
            }
            p
        })
        .collect();
    let w = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    ParticleEnsemble::new(dim, v, w).expect("valid random ensemble")
}

/// Quick structural checks of the solver on small random instances.
pub fn validate_suite() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checks = Vec::new();
    let specs = [
        CollisionKernelSpec::maxwell(1.0, 2)?,
        CollisionKernelSpec::coulomb(1.0, 2)?,
        CollisionKernelSpec::maxwell(1.0, 3)?,
        CollisionKernelSpec::coulomb(1.0, 3)?,
    ];

    // kernel matrix: symmetric, positive semidefinite, z in the null space
    let (mut asym, mut neg, mut null) = (0.0f64, 0.0f64, 0.0f64);
    for spec in &specs {
        for _ in 0..50 {
            let mut z = [0.0; 3];
            let mut x = [0.0; 3];
            for s in 0..spec.dim {
                z[s] = rng.gen_range(-2.0..2.0);
                x[s] = rng.gen_range(-1.0..1.0);
            }
            let k = kernel_matrix(&z, spec)?;
            let scale = k.norm().max(f64::MIN_POSITIVE);
            for r in 0..spec.dim {
                for s in 0..spec.dim {
                    asym = asym.max((k.get(r, s) - k.get(s, r)).abs() / scale);
                }
            }
            let kx = k.mul_vec(&x);
            neg = neg.max(-(x[0] * kx[0] + x[1] * kx[1] + x[2] * kx[2]) / scale);
            null = null.max(norm2(&k.mul_vec(&z)).sqrt() / (scale * norm2(&z).sqrt()));
        }
    }
    checks.push(check("kernel matrix symmetric", asym, 1e-15));
    checks.push(check("kernel matrix positive semidefinite", neg, 1e-14));
    checks.push(check("kernel null space contains z", null, 1e-12));

    // exact momentum and energy rates of the direct velocity field
    let (mut mom, mut en) = (0.0f64, 0.0f64);
    for spec in &specs {
        let ens = random_ensemble(&mut rng, 120, spec.dim);
        let grid = QuadratureGrid::new(spec.dim, 3.0, 12)?;
        let m = Mollifier::from_rule(grid.spacing(), 0.64, 1.98, spec.dim)?;
        let scores = Engine::Direct.scores(&grid, &m, &grid_log_density(&ens, &grid, &m), ens.velocities())?;
        let u = velocity_field_direct(&ens, &scores, spec);
        let w = ens.weights();
        let mut p = [0.0; 3];
        let (mut e, mut pscale, mut escale) = (0.0, 0.0, 0.0);
        for ((ui, vi), wi) in u.iter().zip(ens.velocities()).zip(w) {
            for s in 0..3 {
                p[s] += wi * ui[s];
            }
            let ev = wi * (ui[0] * vi[0] + ui[1] * vi[1] + ui[2] * vi[2]);
            e += ev;
            escale += ev.abs();
            pscale += wi * norm2(ui).sqrt();
        }
        mom = mom.max(norm2(&p).sqrt() / pscale);
        en = en.max(e.abs() / escale);
    }
    checks.push(check("momentum rate vanishes", mom, 1e-11));
    checks.push(check("energy rate vanishes", en, 1e-11));

    // doubling all weights shifts log g by log 2
    {
        let ens = random_ensemble(&mut rng, 80, 2);
        let twice = ParticleEnsemble::new(2, ens.velocities().to_vec(), ens.weights().iter().map(|w| 2.0 * w).collect())?;
        let grid = QuadratureGrid::new(2, 3.0, 16)?;
        let m = Mollifier::new(0.1, 2)?;
        let a = grid_log_density(&ens, &grid, &m);
        let b = grid_log_density(&twice, &grid, &m);
        let worst = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (y - x - std::f64::consts::LN_2).abs() / (1.0 + x.abs()))
            .fold(0.0, f64::max);
        checks.push(check("log density shifts by log 2 under doubled weights", worst, 1e-13));
    }

    // Taylor expansions of A reproduce the kernel near the center
    {
        let mut worst = 0.0f64;
        for spec in &specs {
            let set = MultiIndexSet::new(spec.dim, 6);
            let mut mono = vec![0.0; set.len()];
            for _ in 0..10 {
                let mut x = [0.0; 3];
                let mut yc = [0.0; 3];
                let mut d = [0.0; 3];
                for s in 0..spec.dim {
                    x[s] = rng.gen_range(-1.0..1.0);
                    yc[s] = x[s] + rng.gen_range(1.0..2.0);
                    d[s] = rng.gen_range(-0.05..0.05);
                }
                let coef = taylor_coeffs_a(&x, &yc, spec, 6)?;
                monomials(&set, &d, &mut mono);
                let y = [yc[0] + d[0], yc[1] + d[1], yc[2] + d[2]];
                let k = kernel_matrix(&sub(&x, &y), spec)?;
                for (c, &(r, s)) in kernel_components(spec.dim).iter().enumerate() {
                    let approx: f64 = coef[c].iter().zip(&mono).map(|(a, m)| a * m).sum();
                    worst = worst.max((approx - k.get(r, s)).abs() / k.norm());
                }
            }
        }
        checks.push(check("Taylor expansion of A converges", worst, 1e-8));
    }

    // θ = 0 treecode is the direct engine
    {
        let mut cfg = SimulationConfig::preset("bkw3d")?;
        cfg.domain.cells_per_dim = 8;
        let (grid, m, spec) = (cfg.grid()?, cfg.mollifier()?, cfg.kernel_spec()?);
        let ens = cfg.initial_ensemble()?;
        let a = Engine::Direct.evaluate(&ens, &grid, &m, &spec)?;
        let zero = TreecodeParams {
            theta: 0.0,
            ..TreecodeParams::default()
        };
        let b = Engine::Treecode(zero).evaluate(&ens, &grid, &m, &spec)?;
        checks.push(Check {
            name: "treecode at theta = 0 is bitwise direct",
            passed: a == b,
            detail: String::new(),
        });
    }

    // BKW moments by quadrature
    {
        let mut worst = 0.0f64;
        for (p, t) in [(BkwParams::default_2d(), 1.0), (BkwParams::default_3d(), 5.5)] {
            let grid = QuadratureGrid::new(p.dim, 10.0, if p.dim == 2 { 400 } else { 120 })?;
            let prof = p.at(t)?;
            let ens = init_from_density(|v| prof.eval(v), &grid)?;
            let mo = moments(&ens);
            worst = worst
                .max((mo.mass - 1.0).abs())
                .max(norm2(&mo.momentum).sqrt())
                .max((mo.energy - p.dim as f64).abs() / p.dim as f64);
        }
        checks.push(check("BKW mass, momentum and energy", worst, 1e-6));
    }

    // a short BKW run conserves mass and momentum and dissipates entropy
    {
        let mut cfg = SimulationConfig::preset("bkw2d")?;
        cfg.domain.cells_per_dim = 16;
        cfg.time.t_end = 0.2;
        let out = run(&cfg)?;
        let r0 = &out.records[0];
        let drift = out
            .records
            .iter()
            .map(|r| {
                let dm = (r.mass - r0.mass).abs() / r0.mass;
                let dp = r.momentum.iter().zip(&r0.momentum).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                dm.max(dp / r0.energy.sqrt())
            })
            .fold(0.0, f64::max);
        checks.push(check("mass and momentum conserved over a run", drift, 1e-12));
        let rise = out
            .records
            .windows(2)
            .map(|w| w[1].entropy - w[0].entropy)
            .fold(f64::MIN, f64::max);
        checks.push(check("entropy non-increasing over a run", rise.max(0.0), 1e-12));
    }
    Ok(checks)
}
