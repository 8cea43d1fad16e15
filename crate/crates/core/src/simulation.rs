//! Forward Euler time stepping, domain monitoring and the diagnostics
//! trajectory.

use crate::config::{InitialKind, SimulationConfig};
use crate::diagnostics::{
    dissipation_from_velocity, entropy_from_log_density, moments, relative_entropy_from_log_density,
    DiagnosticsRecord,
};
use crate::engine::{Engine, FieldEvaluation};
use crate::ensemble::{min_pair_distance, ParticleEnsemble};
use crate::error::{Error, Result};
use crate::exact::Maxwellian;
use crate::grid::QuadratureGrid;
use crate::kernel::{CollisionKernelSpec, Mollifier};

/// Everything fixed for the duration of a run.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: QuadratureGrid,
    pub mollifier: Mollifier,
    pub spec: CollisionKernelSpec,
    pub engine: Engine,
    pub dt: f64,
    pub t_start: f64,
    pub fail_on_escape: bool,
    /// Reference of the relative entropy.
    pub reference: Maxwellian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub time: f64,
    pub step: usize,
    pub ensemble: ParticleEnsemble,
    /// Fields evaluated at this state, once computed.
    pub fields: Option<FieldEvaluation>,
}

impl SimulationState {
    pub fn new(ensemble: ParticleEnsemble, t_start: f64) -> Self {
        Self {
            time: t_start,
            step: 0,
            ensemble,
            fields: None,
        }
    }

    /// Evaluates the fields at this state unless already done.
    pub fn evaluate(&mut self, setup: &Setup) -> Result<&FieldEvaluation> {
        if self.fields.is_none() {
            let f = setup
                .engine
                .evaluate(&self.ensemble, &setup.grid, &setup.mollifier, &setup.spec)?;
            self.fields = Some(f);
        }
        Ok(self.fields.as_ref().expect("just evaluated"))
    }
}

/// Builds the run setup and the initial state. BKW runs measure relative
/// entropy against `M_{1,0,1}`, everything else against the Maxwellian of
/// the initial moments.
pub fn initialize(cfg: &SimulationConfig) -> Result<(Setup, SimulationState)> {
    cfg.validate()?;
    let ensemble = cfg.initial_ensemble()?;
    let reference = match cfg.initial.kind {
        InitialKind::Bkw | InitialKind::Maxwellian => Maxwellian::standard(cfg.domain.dim),
        _ => moments(&ensemble).maxwellian(cfg.domain.dim),
    };
    let setup = Setup {
        grid: cfg.grid()?,
        mollifier: cfg.mollifier()?,
        spec: cfg.kernel_spec()?,
        engine: cfg.engine(),
        dt: cfg.time.dt,
        t_start: cfg.time.t_start,
        fail_on_escape: cfg.output.fail_on_escape,
        reference,
    };
    Ok((setup, SimulationState::new(ensemble, cfg.time.t_start)))
}

/// `v_i ← v_i + Δt U_i`, with `U` taken from the state's fields.
pub fn euler_step(state: &SimulationState, setup: &Setup) -> Result<SimulationState> {
    let mut current = state.clone();
    let u = &current.evaluate(setup)?.velocity;
    let blow_up = |i| Error::BlowUp {
        particle: i,
        step: state.step,
    };
    if let Some(i) = u.iter().position(|x| !x.iter().all(|c| c.is_finite())) {
        return Err(blow_up(i));
    }
    let mut ensemble = state.ensemble.clone();
    ensemble.advance(u, setup.dt);
    if let Some(i) = ensemble
        .velocities()
        .iter()
        .position(|x| !x.iter().all(|c| c.is_finite()))
    {
        return Err(blow_up(i));
    }
    let step = state.step + 1;
    Ok(SimulationState {
        time: setup.t_start + step as f64 * setup.dt,
        step,
        ensemble,
        fields: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Containment {
    pub count: usize,
    /// Largest `max_s |v_s| − L` over escaped particles, `0` if none.
    pub max_overshoot: f64,
}

/// Counts particles outside `[−L, L]^d`.
pub fn check_domain(ens: &ParticleEnsemble, half_width: f64) -> Containment {
    let mut count = 0;
    let mut max_overshoot: f64 = 0.0;
    for v in ens.velocities() {
        let over = v[..ens.dim()].iter().map(|c| c.abs() - half_width).fold(f64::MIN, f64::max);
        if over > 0.0 {
            count += 1;
            max_overshoot = max_overshoot.max(over);
        }
    }
    Containment { count, max_overshoot }
}

/// Diagnostics of a state whose fields have been evaluated.
pub fn record(state: &mut SimulationState, setup: &Setup) -> Result<DiagnosticsRecord> {
    state.evaluate(setup)?;
    let ens = &state.ensemble;
    let fields = state.fields.as_ref().expect("evaluated above");
    let mom = moments(ens);
    let dim = ens.dim();
    let escape = check_domain(ens, setup.grid.half_width());
    if setup.fail_on_escape && escape.count > 0 {
        return Err(Error::DomainEscape {
            step: state.step,
            count: escape.count,
            overshoot: escape.max_overshoot,
        });
    }
    Ok(DiagnosticsRecord {
        step: state.step,
        time: state.time,
        mass: mom.mass,
        momentum: mom.momentum[..dim].to_vec(),
        energy: mom.energy,
        entropy: entropy_from_log_density(&setup.grid, &fields.log_density),
        relative_entropy: relative_entropy_from_log_density(&setup.grid, &fields.log_density, &setup.reference),
        dissipation: dissipation_from_velocity(ens, &fields.scores, &fields.velocity),
        min_pair_distance: min_pair_distance(ens).unwrap_or(f64::NAN),
        escaped_count: escape.count,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// One record per state, the initial one included.
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: SimulationState,
}

/// Advances `steps` times, calling `observe` on every state (initial and
/// final included) after its diagnostics are taken.
pub fn run_from<F>(setup: &Setup, mut state: SimulationState, steps: usize, mut observe: F) -> Result<RunOutput>
where
    F: FnMut(&SimulationState, &DiagnosticsRecord) -> Result<()>,
{
    let mut records = Vec::with_capacity(steps + 1);
    let rec = record(&mut state, setup)?;
    observe(&state, &rec)?;
    records.push(rec);
    for _ in 0..steps {
        state = euler_step(&state, setup)?;
        let rec = record(&mut state, setup)?;
        observe(&state, &rec)?;
        records.push(rec);
    }
    Ok(RunOutput {
        records,
        final_state: state,
    })
}

pub fn run(cfg: &SimulationConfig) -> Result<RunOutput> {
    let (setup, state) = initialize(cfg)?;
    run_from(&setup, state, cfg.num_steps(), |_, _| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Vec3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small(name: &str, n: usize, t_end: f64) -> SimulationConfig {
        let mut c = SimulationConfig::preset(name).unwrap();
        c.domain.cells_per_dim = n;
        c.time.t_end = c.time.t_start + t_end;
        c
    }

    fn random_state(seed: u64, n: usize, dim: usize) -> SimulationState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<Vec3> = (0..n)
            .map(|_| {
                let mut p = [0.0; 3];
                for c in p.iter_mut().take(dim) {
                    *c = rng.gen_range(-2.0..2.0);
                }
                p
            })
            .collect();
        let w = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        SimulationState::new(ParticleEnsemble::new(dim, v, w).unwrap(), 0.0)
    }

    #[test]
    fn single_particle_does_not_move() {
        let (setup, _) = initialize(&small("bkw2d", 8, 0.0)).unwrap();
        let ens = ParticleEnsemble::new(2, vec![[0.3, -0.1, 0.0]], vec![1.0]).unwrap();
        let s = SimulationState::new(ens.clone(), 0.0);
        let next = euler_step(&s, &setup).unwrap();
        assert_eq!(next.ensemble, ens);
        assert_eq!(next.step, 1);
    }

    #[test]
    fn step_conserves_mass_and_momentum() {
        let (setup, _) = initialize(&small("bkw2d", 16, 0.0)).unwrap();
        let s = random_state(3, 200, 2);
        let next = euler_step(&s, &setup).unwrap();
        let (a, b) = (moments(&s.ensemble), moments(&next.ensemble));
        assert_eq!(a.mass, b.mass);
        let scale: f64 = s.ensemble.weights().iter().zip(s.ensemble.velocities()).map(|(w, v)| w * v[0].abs().max(v[1].abs())).sum();
        for k in 0..2 {
            assert!((a.momentum[k] - b.momentum[k]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn one_step_energy_change_is_quadratic_in_dt() {
        let (mut setup, _) = initialize(&small("bkw2d", 16, 0.0)).unwrap();
        let s = random_state(5, 150, 2);
        let change = |setup: &Setup| {
            let next = euler_step(&s, setup).unwrap();
            moments(&next.ensemble).energy - moments(&s.ensemble).energy
        };
        setup.dt = 0.01;
        let full = change(&setup);
        setup.dt = 0.005;
        let half = change(&setup);
        assert!(full > 0.0);
        assert!((full / half - 4.0).abs() < 1e-3, "{}", full / half);
    }

    #[test]
    fn domain_report() {
        let ens = ParticleEnsemble::new(2, vec![[0.0; 3], [4.1, 0.0, 0.0]], vec![1.0, 1.0]).unwrap();
        let c = check_domain(&ens, 4.0);
        assert_eq!(c.count, 1);
        assert!((c.max_overshoot - 0.1).abs() < 1e-12);
        assert_eq!(check_domain(&ens, 5.0), Containment { count: 0, max_overshoot: 0.0 });
    }

    #[test]
    fn escape_can_be_fatal() {
        let (mut setup, _) = initialize(&small("bkw2d", 8, 0.0)).unwrap();
        setup.fail_on_escape = true;
        let ens = ParticleEnsemble::new(2, vec![[0.0; 3], [4.5, 0.0, 0.0]], vec![1.0, 1.0]).unwrap();
        let mut s = SimulationState::new(ens, 0.0);
        assert!(matches!(record(&mut s, &setup), Err(Error::DomainEscape { count: 1, .. })));
    }

    #[test]
    fn blow_up_names_the_particle() {
        let (setup, _) = initialize(&small("bkw2d", 8, 0.0)).unwrap();
        let mut s = random_state(1, 5, 2);
        let mut fields = setup.engine.evaluate(&s.ensemble, &setup.grid, &setup.mollifier, &setup.spec).unwrap();
        fields.velocity[3][1] = f64::NAN;
        s.fields = Some(fields);
        s.step = 17;
        match euler_step(&s, &setup) {
            Err(Error::BlowUp { particle, step }) => assert_eq!((particle, step), (3, 17)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_time_span_gives_the_initial_record() {
        let out = run(&small("bkw2d", 10, 0.0)).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].step, 0);
        assert_eq!(out.final_state.step, 0);
    }

    #[test]
    fn short_run_is_deterministic_and_dissipative() {
        let cfg = small("bkw2d", 12, 0.05);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.records.len(), 6);
        assert!((a.final_state.time - 0.05).abs() < 1e-15);
        for r in &a.records {
            assert!(r.dissipation >= 0.0);
            assert_eq!(r.escaped_count, 0);
        }
        assert!(a.records[5].entropy < a.records[0].entropy);
    }
}
