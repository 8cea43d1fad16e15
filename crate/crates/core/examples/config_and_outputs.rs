//! A configuration file layered over a preset, run to an output directory
//! with snapshots, then read back.

use std::path::Path;

use landau::config::parse_config;
use landau::experiments::run_to_dir;
use landau::output::{read_diagnostics, read_manifest, RunManifest};

const CONFIG: &str = r#"
preset = "bimaxwellian"

[domain]
cells_per_dim = 20

[time]
t_end = 0.5

[output]
snapshot_stride = 2
deterministic = true
"#;

pub fn run_example(out: &Path) -> landau::Result<RunManifest> {
    let cfg = parse_config(CONFIG)?;
    let (output, manifest) = run_to_dir(&cfg, out)?;
    assert_eq!(read_diagnostics(&out.join("diagnostics.csv"))?, output.records);
    assert_eq!(read_manifest(&out.join("manifest.toml"))?, manifest);
    Ok(manifest)
}

#[allow(dead_code)]
fn main() -> landau::Result<()> {
    let out = Path::new("out/bimaxwellian-example");
    let manifest = run_example(out)?;
    for f in &manifest.files {
        println!("{}", out.join(f).display());
    }
    Ok(())
}
