use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use landau::config::{parse_config, EngineKind, SimulationConfig};
use landau::experiments::{convergence, run_to_dir, treecode_bench, validate_suite};
use landau::output::table;
use landau::treecode::TreecodeParams;

#[derive(Parser)]
#[command(name = "landau", version, about = "Deterministic particle solver for the homogeneous Landau equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Direct,
    Treecode,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        engine: Option<EngineArg>,
        /// Omit wall-clock data so reruns produce identical output.
        #[arg(long)]
        deterministic: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Error norms and fitted orders over a resolution sweep.
    Convergence {
        #[arg(long)]
        preset: String,
        #[arg(long, value_delimiter = ',', default_value = "40,60,80")]
        n: Vec<usize>,
        /// Override the preset's final time.
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Per-step timing of both engines on the 3D BKW ensemble.
    TreecodeBench {
        #[arg(long, value_delimiter = ',', default_value = "16,20,25")]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 0.9)]
        theta: f64,
        #[arg(long, default_value_t = 6)]
        order: usize,
        #[arg(long, default_value_t = 32)]
        leaf: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
    },
    /// Run the invariant suite.
    Validate,
}

fn sci(x: f64) -> String {
    format!("{x:.4e}")
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            engine,
            deterministic,
            out,
        } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = parse_config(&text).with_context(|| format!("parsing {}", config.display()))?;
            if let Some(e) = engine {
                cfg.engine.kind = match e {
                    EngineArg::Direct => EngineKind::Direct,
                    EngineArg::Treecode => EngineKind::Treecode,
                };
            }
            cfg.output.deterministic |= deterministic;
            cfg.validate()?;
            let (output, manifest) = run_to_dir(&cfg, &out)?;
            let last = output.records.last().expect("at least the initial record");
            println!(
                "{} steps with the {} engine; t = {}, entropy = {:.6e}, escaped = {}",
                last.step, manifest.engine, last.time, last.entropy, last.escaped_count
            );
            println!("wrote {} files to {}", manifest.files.len() + 1, out.display());
        }
        Command::Convergence { preset, n, t_end } => {
            let mut cfg = SimulationConfig::preset(&preset)?;
            if let Some(t) = t_end {
                cfg.time.t_end = t;
            }
            let report = convergence(&cfg, &n, |n, out| {
                eprintln!("n = {n}: {} steps done", out.records.len() - 1);
            })?;
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| match r.norms {
                    Some(e) => vec![r.n.to_string(), sci(r.h), sci(e.rel_linf), sci(e.rel_l1), sci(e.rel_l2)],
                    None => vec![r.n.to_string(), sci(r.h), "ref".into(), "ref".into(), "ref".into()],
                })
                .collect();
            print!("{}", table(&["n", "h", "rel_linf", "rel_l1", "rel_l2"], &rows));
            match report.slopes {
                Some(s) => println!("orders: linf {:.3}  l1 {:.3}  l2 {:.3}", s.linf, s.l1, s.l2),
                None => println!("orders: need three non-reference resolutions"),
            }
        }
        Command::TreecodeBench {
            n_list,
            theta,
            order,
            leaf,
            reps,
        } => {
            if !(theta > 0.0 && theta < 1.0) {
                bail!("theta must lie in (0, 1), got {theta}");
            }
            let params = TreecodeParams {
                theta,
                order,
                leaf_capacity: leaf,
                restore_momentum: false,
            };
            let rows = treecode_bench(&n_list, &params, reps)?;
            let mut out = Vec::new();
            for (i, r) in rows.iter().enumerate() {
                let ratio = |f: fn(&landau::experiments::BenchRow) -> f64| {
                    if i == 0 {
                        "-".to_string()
                    } else {
                        format!("{:.2}", f(r) / f(&rows[i - 1]))
                    }
                };
                out.push(vec![
                    r.n.to_string(),
                    r.particles.to_string(),
                    format!("{:.4}", r.direct_seconds),
                    ratio(|r| r.direct_seconds),
                    format!("{:.4}", r.treecode_seconds),
                    ratio(|r| r.treecode_seconds),
                    sci(r.velocity_error),
                ]);
            }
            print!(
                "{}",
                table(&["n", "N", "direct_s", "ratio", "treecode_s", "ratio", "vel_err"], &out)
            );
        }
        Command::Validate => {
            let checks = validate_suite()?;
            let mut failed = 0;
            for c in &checks {
                println!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                bail!("{failed} of {} checks failed", checks.len());
            }
        }
    }
    Ok(())
}
