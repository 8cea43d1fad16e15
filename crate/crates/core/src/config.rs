//! Run configuration: a TOML document of `[section]` tables, optionally
//! layered over a named preset.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::engine::Engine;
use crate::ensemble::{init_from_density, ParticleEnsemble};
use crate::error::{Error, Result};
use crate::exact::{BiMaxwellian, BkwParams, Maxwellian, RosenbluthShell};
use crate::grid::QuadratureGrid;
use crate::kernel::{CollisionKernelSpec, Mollifier};
use crate::treecode::TreecodeParams;

pub const PRESETS: [&str; 5] = ["bkw2d", "bkw3d", "maxwellian2d", "bimaxwellian", "rosenbluth"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub dim: usize,
    /// `L` in `[−L, L]^d`.
    pub half_width: f64,
    pub cells_per_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub gamma: f64,
    pub prefactor: f64,
}

/// `ε = c h^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsRule {
    pub c: f64,
    pub q: f64,
}

impl Default for EpsRule {
    fn default() -> Self {
        Self { c: 0.64, q: 1.98 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    Bkw,
    Maxwellian,
    Bimaxwellian,
    Rosenbluth,
}

/// Initial density selector. Parameters of the other kinds are carried
/// along so that every key is always present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: InitialKind,
    /// BKW integration constant `C`.
    pub bkw_c: f64,
    pub sigma: f64,
    pub s: f64,
    pub u1: [f64; 2],
    pub u2: [f64; 2],
}

impl InitialConfig {
    fn new(kind: InitialKind, bkw_c: f64) -> Self {
        let shell = RosenbluthShell::default();
        let bumps = BiMaxwellian::default();
        Self {
            kind,
            bkw_c,
            sigma: shell.sigma,
            s: shell.s,
            u1: bumps.u1,
            u2: bumps.u2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Direct,
    Treecode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub kind: EngineKind,
    pub theta: f64,
    pub order: usize,
    pub leaf_capacity: usize,
    pub restore_momentum: bool,
}

impl EngineConfig {
    fn new(kind: EngineKind) -> Self {
        let p = TreecodeParams::default();
        Self {
            kind,
            theta: p.theta,
            order: p.order,
            leaf_capacity: p.leaf_capacity,
            restore_momentum: p.restore_momentum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Snapshot every this many steps; `0` disables snapshots.
    pub snapshot_stride: usize,
    pub deterministic: bool,
    /// Abort instead of reporting when particles leave the domain.
    pub fail_on_escape: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub domain: DomainConfig,
    pub time: TimeConfig,
    pub kernel: KernelConfig,
    pub eps_rule: EpsRule,
    pub initial: InitialConfig,
    pub engine: EngineConfig,
    pub output: OutputConfig,
}

/// A velocity density, boxed so presets can pick one at run time.
pub type Density = Box<dyn Fn(&crate::kernel::Vec3) -> f64>;

impl SimulationConfig {
    /// The named example setup.
    pub fn preset(name: &str) -> Result<Self> {
        let cfg = |dim, half_width, cells_per_dim, dt, t_start, t_end, gamma, prefactor, initial, engine| Self {
            domain: DomainConfig {
                dim,
                half_width,
                cells_per_dim,
            },
            time: TimeConfig { dt, t_start, t_end },
            kernel: KernelConfig { gamma, prefactor },
            eps_rule: EpsRule::default(),
            initial,
            engine: EngineConfig::new(engine),
            output: OutputConfig::default(),
        };
        use EngineKind::{Direct, Treecode};
        use InitialKind::*;
        Ok(match name {
            "bkw2d" => cfg(2, 4.0, 40, 0.01, 0.0, 5.0, 0.0, 1.0 / 16.0, InitialConfig::new(Bkw, 0.5), Direct),
            "bkw3d" => cfg(3, 4.0, 20, 0.01, 5.5, 6.0, 0.0, 1.0 / 24.0, InitialConfig::new(Bkw, 1.0), Treecode),
            "maxwellian2d" => cfg(2, 4.0, 40, 0.01, 0.0, 5.0, 0.0, 1.0 / 16.0, InitialConfig::new(Maxwellian, 0.5), Direct),
            "bimaxwellian" => cfg(2, 10.0, 60, 0.1, 0.0, 20.0, -3.0, 1.0 / 16.0, InitialConfig::new(Bimaxwellian, 0.5), Direct),
            "rosenbluth" => cfg(3, 1.0, 20, 0.2, 0.0, 20.0, -3.0, 1.0 / (4.0 * PI), InitialConfig::new(Rosenbluth, 0.5), Treecode),
            _ => {
                return Err(Error::Config(format!(
                    "unknown preset {name:?}; expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let d = &self.domain;
        if d.dim != 2 && d.dim != 3 {
            return bad(format!("domain.dim must be 2 or 3, got {}", d.dim));
        }
        if !(d.half_width > 0.0 && d.half_width.is_finite()) {
            return bad(format!("domain.half_width must be positive, got {}", d.half_width));
        }
        if d.cells_per_dim == 0 {
            return bad("domain.cells_per_dim must be at least 1".into());
        }
        let t = &self.time;
        if !(t.dt > 0.0 && t.dt.is_finite()) {
            return bad(format!("time.dt must be positive, got {}", t.dt));
        }
        if !(t.t_start.is_finite() && t.t_end.is_finite() && t.t_end >= t.t_start) {
            return bad(format!(
                "time.t_end must not precede time.t_start, got [{}, {}]",
                t.t_start, t.t_end
            ));
        }
        let span = t.t_end - t.t_start;
        let steps = (span / t.dt).round();
        if (steps * t.dt - span).abs() > 1e-9 * span.max(1.0) {
            return bad(format!("time.dt = {} does not divide the time span {span}", t.dt));
        }
        if !(self.eps_rule.c > 0.0 && self.eps_rule.q > 0.0) {
            return bad("eps_rule.c and eps_rule.q must be positive".into());
        }
        self.kernel_spec().map_err(|e| Error::Config(format!("kernel: {e}")))?;
        let e = &self.engine;
        if e.kind == EngineKind::Treecode && !(e.theta > 0.0 && e.theta < 1.0) {
            return bad(format!("engine.theta must lie in (0, 1) for the treecode, got {}", e.theta));
        }
        self.treecode_params().validate().map_err(|e| Error::Config(format!("engine: {e}")))?;
        let init = &self.initial;
        match init.kind {
            InitialKind::Bkw => {
                let p = self.bkw_params()?;
                for time in [t.t_start, t.t_end] {
                    p.at(time).map_err(|e| Error::Config(format!("initial: {e}")))?;
                }
                if self.kernel.gamma != 0.0 {
                    return bad("the BKW solution needs kernel.gamma = 0".into());
                }
            }
            InitialKind::Bimaxwellian if d.dim != 2 => {
                return bad("the bimaxwellian initial data is two-dimensional".into());
            }
            InitialKind::Rosenbluth if !(init.sigma > 0.0 && init.s > 0.0) => {
                return bad("initial.sigma and initial.s must be positive".into());
            }
            _ => {}
        }
        Ok(())
    }

    pub fn num_steps(&self) -> usize {
        ((self.time.t_end - self.time.t_start) / self.time.dt).round() as usize
    }

    pub fn grid(&self) -> Result<QuadratureGrid> {
        QuadratureGrid::new(self.domain.dim, self.domain.half_width, self.domain.cells_per_dim)
    }

    pub fn mollifier(&self) -> Result<Mollifier> {
        let h = 2.0 * self.domain.half_width / self.domain.cells_per_dim as f64;
        Mollifier::from_rule(h, self.eps_rule.c, self.eps_rule.q, self.domain.dim)
    }

    pub fn kernel_spec(&self) -> Result<CollisionKernelSpec> {
        CollisionKernelSpec::new(self.kernel.gamma, self.kernel.prefactor, self.domain.dim)
    }

    pub fn treecode_params(&self) -> TreecodeParams {
        TreecodeParams {
            theta: self.engine.theta,
            order: self.engine.order,
            leaf_capacity: self.engine.leaf_capacity,
            restore_momentum: self.engine.restore_momentum,
        }
    }

    pub fn engine(&self) -> Engine {
        match self.engine.kind {
            EngineKind::Direct => Engine::Direct,
            EngineKind::Treecode => Engine::Treecode(self.treecode_params()),
        }
    }

    /// BKW parameters tied to the kernel prefactor.
    pub fn bkw_params(&self) -> Result<BkwParams> {
        BkwParams::new(self.domain.dim, self.kernel.prefactor, self.initial.bkw_c)
    }

    /// The initial density `f(t_start, ·)`.
    pub fn initial_density(&self) -> Result<Density> {
        let init = self.initial;
        Ok(match init.kind {
            InitialKind::Bkw => {
                let prof = self.bkw_params()?.at(self.time.t_start)?;
                Box::new(move |v| prof.eval(v))
            }
            InitialKind::Maxwellian => {
                let m = Maxwellian::standard(self.domain.dim);
                Box::new(move |v| m.eval(v))
            }
            InitialKind::Bimaxwellian => {
                let b = BiMaxwellian {
                    u1: init.u1,
                    u2: init.u2,
                };
                Box::new(move |v| b.eval(v))
            }
            InitialKind::Rosenbluth => {
                let r = RosenbluthShell {
                    sigma: init.sigma,
                    s: init.s,
                };
                Box::new(move |v| r.eval(v))
            }
        })
    }

    pub fn initial_ensemble(&self) -> Result<ParticleEnsemble> {
        let grid = self.grid()?;
        init_from_density(self.initial_density()?, &grid)
    }
}

fn known_keys(template: &Table, prefix: &str, user: &Table, unknown: &mut Vec<String>) {
    for (key, value) in user {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match (template.get(key), value) {
            (None, _) => unknown.push(path),
            (Some(Value::Table(t)), Value::Table(u)) => known_keys(t, &path, u, unknown),
            _ => {}
        }
    }
}

fn merge(base: &mut Table, over: Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Parses and validates a configuration. A top-level `preset = "<name>"`
/// supplies defaults for every key; without it every key must be given.
pub fn parse_config(text: &str) -> Result<SimulationConfig> {
    let mut user: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    if user.is_empty() {
        return Err(Error::Config("configuration is empty; name a preset or give every key".into()));
    }
    let preset = match user.remove("preset") {
        None => None,
        Some(Value::String(name)) => Some(SimulationConfig::preset(&name)?),
        Some(other) => return Err(Error::Config(format!("preset must be a string, got {other}"))),
    };
    let template = Table::try_from(preset.unwrap_or(SimulationConfig::preset("bkw2d")?))
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut unknown = Vec::new();
    known_keys(&template, "", &user, &mut unknown);
    if !unknown.is_empty() {
        return Err(Error::UnknownKeys(unknown));
    }
    let merged = match preset {
        Some(_) => {
            let mut base = template;
            merge(&mut base, user);
            base
        }
        None => user,
    };
    let cfg: SimulationConfig = merged
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Every key spelled out, so that `parse_config(emit_config(c)) == c`.
pub fn emit_config(cfg: &SimulationConfig) -> String {
    toml::to_string(cfg).expect("configuration serializes")
}
