//! Property tests for the structural invariants of the solver.

use landau::config::{emit_config, parse_config, EngineKind, SimulationConfig, PRESETS};
use landau::diagnostics::{fit_convergence_order, moments, DiagnosticsRecord};
use landau::engine::Engine;
use landau::ensemble::ParticleEnsemble;
use landau::fields::{grid_log_density, score_field, velocity_field_direct};
use landau::grid::QuadratureGrid;
use landau::kernel::{kernel_matrix, norm2, CollisionKernelSpec, Mollifier, Vec3};
use landau::output::{diagnostics_csv, parse_diagnostics};
use landau::simulation::{check_domain, euler_step, initialize, SimulationState};
use landau::treecode::TreecodeParams;
use proptest::prelude::*;

fn vec_in(dim: usize, r: f64) -> impl Strategy<Value = Vec3> {
    prop::collection::vec(-r..r, dim).prop_map(|v| {
        let mut p = [0.0; 3];
        p[..v.len()].copy_from_slice(&v);
        p
    })
}

fn ensemble(dim: usize, max: usize) -> impl Strategy<Value = ParticleEnsemble> {
    prop::collection::vec((vec_in(dim, 2.5), 0.05..1.0f64), 2..max).prop_map(move |pts| {
        let (v, w): (Vec<_>, Vec<_>) = pts.into_iter().unzip();
        ParticleEnsemble::new(dim, v, w).unwrap()
    })
}

fn spec(dim: usize) -> impl Strategy<Value = CollisionKernelSpec> {
    (prop_oneof![Just(0.0), Just(-3.0)], 0.01..1.0f64).prop_map(move |(g, b)| CollisionKernelSpec::new(g, b, dim).unwrap())
}

fn dims() -> impl Strategy<Value = usize> {
    prop_oneof![Just(2usize), Just(3usize)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_matrix_is_symmetric_psd_with_z_in_its_null_space(
        (z, x, spec) in dims().prop_flat_map(|d| (vec_in(d, 3.0), vec_in(d, 1.0), spec(d)))
    ) {
        prop_assume!(norm2(&z) > 1e-6);
        let k = kernel_matrix(&z, &spec).unwrap();
        let scale = k.norm();
        for r in 0..3 {
            for s in 0..3 {
                prop_assert!((k.get(r, s) - k.get(s, r)).abs() <= 1e-15 * scale);
            }
        }
        let kx = k.mul_vec(&x);
        prop_assert!(x[0] * kx[0] + x[1] * kx[1] + x[2] * kx[2] >= -1e-14 * scale * norm2(&x));
        prop_assert!(norm2(&k.mul_vec(&z)).sqrt() <= 1e-12 * scale * norm2(&z).sqrt());
    }

    #[test]
    fn mollifier_is_positive_decreasing_and_odd_in_gradient(
        (z, t, eps, dim) in dims().prop_flat_map(|d| (vec_in(d, 2.0), 1.0..3.0f64, 0.01..1.0f64, Just(d)))
    ) {
        let m = Mollifier::new(eps, dim).unwrap();
        let far = [z[0] * t, z[1] * t, z[2] * t];
        prop_assert!(m.eval(&z) > 0.0 || norm2(&z) / (2.0 * eps) > 700.0);
        prop_assert!(m.eval(&far) <= m.eval(&z));
        let g = m.grad(&z);
        let neg = m.grad(&[-z[0], -z[1], -z[2]]);
        for s in 0..3 {
            prop_assert_eq!(g[s], -neg[s]);
        }
    }

    #[test]
    fn direct_velocity_conserves_momentum_and_energy(
        (ens, spec) in dims().prop_flat_map(|d| (ensemble(d, 60), spec(d)))
    ) {
        let dim = ens.dim();
        let grid = QuadratureGrid::new(dim, 3.0, if dim == 2 { 16 } else { 8 }).unwrap();
        let m = Mollifier::from_rule(grid.spacing(), 0.64, 1.98, dim).unwrap();
        let scores = score_field(&ens, &grid, &m, ens.velocities());
        let u = velocity_field_direct(&ens, &scores, &spec);
        let mut p = [0.0; 3];
        let (mut e, mut pscale, mut escale) = (0.0, 0.0, 0.0);
        for ((ui, vi), wi) in u.iter().zip(ens.velocities()).zip(ens.weights()) {
            for s in 0..3 {
                p[s] += wi * ui[s];
            }
            let ev = wi * (ui[0] * vi[0] + ui[1] * vi[1] + ui[2] * vi[2]);
            e += ev;
            escale += ev.abs();
            pscale += wi * norm2(ui).sqrt();
        }
        prop_assert!(norm2(&p).sqrt() <= 1e-11 * pscale.max(1e-300));
        prop_assert!(e.abs() <= 1e-11 * escale.max(1e-300));
    }

    #[test]
    fn log_density_ignores_labels_and_shifts_by_log_two(ens in ensemble(2, 40), seed in 0u64..1000) {
        let grid = QuadratureGrid::new(2, 3.0, 12).unwrap();
        let m = Mollifier::new(0.08, 2).unwrap();
        let a = grid_log_density(&ens, &grid, &m);
        let n = ens.len();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + seed as usize) % n).collect();
        prop_assume!({ let mut s = perm.clone(); s.sort(); s.dedup(); s.len() == n });
        let shuffled = ParticleEnsemble::new(
            2,
            perm.iter().map(|&i| ens.velocities()[i]).collect(),
            perm.iter().map(|&i| ens.weights()[i]).collect(),
        ).unwrap();
        let b = grid_log_density(&shuffled, &grid, &m);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
        let doubled = ParticleEnsemble::new(2, ens.velocities().to_vec(), ens.weights().iter().map(|w| 2.0 * w).collect()).unwrap();
        let c = grid_log_density(&doubled, &grid, &m);
        for (x, y) in a.iter().zip(&c) {
            prop_assert!((y - x - std::f64::consts::LN_2).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn score_is_permutation_invariant(ens in ensemble(3, 30)) {
        let grid = QuadratureGrid::new(3, 3.0, 8).unwrap();
        let m = Mollifier::from_rule(grid.spacing(), 0.64, 1.98, 3).unwrap();
        let n = ens.len();
        let rev = ParticleEnsemble::new(
            3,
            ens.velocities().iter().rev().copied().collect(),
            ens.weights().iter().rev().copied().collect(),
        ).unwrap();
        let a = score_field(&ens, &grid, &m, ens.velocities());
        let b = score_field(&rev, &grid, &m, ens.velocities());
        let scale = a.values().iter().map(norm2).fold(0.0, f64::max).sqrt();
        for i in 0..n {
            for s in 0..3 {
                prop_assert!((a.values()[i][s] - b.values()[i][s]).abs() <= 1e-12 * scale.max(1e-300));
            }
        }
    }

    #[test]
    fn treecode_at_theta_zero_is_the_direct_engine(ens in ensemble(3, 50), spec in spec(3)) {
        let grid = QuadratureGrid::new(3, 3.0, 6).unwrap();
        let m = Mollifier::from_rule(grid.spacing(), 0.64, 1.98, 3).unwrap();
        let zero = Engine::Treecode(TreecodeParams { theta: 0.0, ..TreecodeParams::default() });
        prop_assert_eq!(
            Engine::Direct.evaluate(&ens, &grid, &m, &spec).unwrap(),
            zero.evaluate(&ens, &grid, &m, &spec).unwrap()
        );
    }

    #[test]
    fn euler_step_keeps_mass_and_momentum(ens in ensemble(2, 50), gamma in prop_oneof![Just(0.0), Just(-3.0)]) {
        let mut cfg = SimulationConfig::preset("bkw2d").unwrap();
        cfg.domain.cells_per_dim = 12;
        cfg.time.t_end = 0.0;
        cfg.kernel.gamma = gamma;
        cfg.initial.kind = landau::config::InitialKind::Maxwellian;
        let (setup, _) = initialize(&cfg).unwrap();
        let s = SimulationState::new(ens, 0.0);
        let next = euler_step(&s, &setup).unwrap();
        let (a, b) = (moments(&s.ensemble), moments(&next.ensemble));
        prop_assert_eq!(a.mass, b.mass);
        let scale: f64 = s.ensemble.weights().iter().zip(s.ensemble.velocities()).map(|(w, v)| w * norm2(v).sqrt()).sum();
        for k in 0..2 {
            prop_assert!((a.momentum[k] - b.momentum[k]).abs() <= 1e-12 * scale);
        }
        prop_assert_eq!(next.ensemble.weights(), s.ensemble.weights());
    }

    #[test]
    fn domain_check_counts_without_touching(ens in ensemble(3, 40), l in 0.5..3.0f64) {
        let before = ens.clone();
        let c = check_domain(&ens, l);
        let expect = ens.velocities().iter().filter(|v| v.iter().any(|x| x.abs() > l)).count();
        prop_assert_eq!(c.count, expect);
        prop_assert_eq!(c.max_overshoot > 0.0, expect > 0);
        prop_assert_eq!(ens, before);
    }

    #[test]
    fn config_round_trips(
        preset in prop::sample::select(PRESETS.to_vec()),
        n in 4usize..90,
        stride in 0usize..20,
        theta in 0.05..0.95f64,
        order in 0usize..10,
        treecode in any::<bool>(),
        c in 0.1..2.0f64,
    ) {
        let mut cfg = SimulationConfig::preset(preset).unwrap();
        cfg.domain.cells_per_dim = n;
        cfg.output.snapshot_stride = stride;
        cfg.engine.theta = theta;
        cfg.engine.order = order;
        cfg.engine.kind = if treecode { EngineKind::Treecode } else { EngineKind::Direct };
        cfg.eps_rule.c = c;
        prop_assert_eq!(parse_config(&emit_config(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn diagnostics_csv_round_trips(
        rows in prop::collection::vec((any::<f64>(), any::<f64>(), prop::collection::vec(any::<f64>(), 3), 0usize..100), 1..10)
    ) {
        let records: Vec<DiagnosticsRecord> = rows
            .iter()
            .enumerate()
            .map(|(i, (a, b, mom, esc))| DiagnosticsRecord {
                step: i,
                time: *a,
                mass: *b,
                momentum: mom.clone(),
                energy: a * 0.5,
                entropy: -b,
                relative_entropy: *a,
                dissipation: *b,
                min_pair_distance: mom[0],
                escaped_count: *esc,
            })
            .collect();
        let back = parse_diagnostics(&diagnostics_csv(&records).unwrap()).unwrap();
        let bits = |r: &DiagnosticsRecord| {
            let mut v = vec![r.time, r.mass, r.energy, r.entropy, r.relative_entropy, r.dissipation, r.min_pair_distance];
            v.extend(&r.momentum);
            v.into_iter().map(f64::to_bits).collect::<Vec<_>>()
        };
        for (a, b) in records.iter().zip(&back) {
            // NaN payloads are not preserved by text, only NaN-ness
            let canon = |x: u64| if f64::from_bits(x).is_nan() { 0 } else { x };
            prop_assert_eq!(bits(a).into_iter().map(canon).collect::<Vec<_>>(), bits(b).into_iter().map(canon).collect::<Vec<_>>());
            prop_assert_eq!(a.escaped_count, b.escaped_count);
        }
    }

    #[test]
    fn power_laws_fit_their_exponent(k in 0.5..4.0f64, c in 1e-3..1e3f64) {
        let h = [0.4, 0.2, 0.1, 0.05];
        let e: Vec<f64> = h.iter().map(|h: &f64| c * h.powf(k)).collect();
        prop_assert!((fit_convergence_order(&h, &e).unwrap() - k).abs() < 1e-10);
    }
}
