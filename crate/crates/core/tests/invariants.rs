use proptest::prelude::*;

use softgym_core::actuation::{denormalize, ActionKind, ActionSpaceSpec};
use softgym_core::metrics::{normalize, PerformanceBounds};
use softgym_core::pbd::{
    brute_force_neighbors, neighbor_search, solve_step, Constraint, DistanceKind, Group, Scene,
    SimConfig,
};
use softgym_core::render::Frame;
use softgym_core::tasks::assignment::{assignment_cost, hungarian};
use softgym_core::variation::{gen_pour_water, gen_transport_water, Draws, Params, Rng};
use softgym_core::{EnvConfig, EnvHandle, ParticleScale, TaskKind, VariationSource, Vec3};

fn point() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn action_kind() -> impl Strategy<Value = ActionKind> {
    prop_oneof![
        Just(ActionKind::Cup1D),
        Just(ActionKind::Cup3D),
        (1usize..=2).prop_map(ActionKind::Pickers),
    ]
}

proptest! {
    #[test]
    fn grid_search_matches_brute_force(
        pts in prop::collection::vec(point(), 0..200),
        radius in 0.05..0.6f64,
    ) {
        let scaled: Vec<Vec3> = pts.iter().map(|p| *p * 0.5).collect();
        prop_assert_eq!(
            neighbor_search(&scaled, radius).to_vecs(),
            brute_force_neighbors(&scaled, radius)
        );
    }

    #[test]
    fn denormalized_actions_stay_in_range(
        kind in action_kind(),
        raw in prop::collection::vec(-3.0..3.0f64, 8),
    ) {
        let spec = ActionSpaceSpec::new(kind);
        let a = &raw[..spec.dim()];
        let out = denormalize(&spec, "task", a).unwrap();
        for (k, v) in out.iter().enumerate() {
            prop_assert!(spec.low[k] <= *v && *v <= spec.high[k]);
        }
        let clamped: Vec<f64> = a.iter().map(|x| x.clamp(-1.0, 1.0)).collect();
        prop_assert_eq!(denormalize(&spec, "task", &clamped).unwrap(), out);
    }

    #[test]
    fn denormalize_is_monotone(kind in action_kind(), a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let spec = ActionSpaceSpec::new(kind);
        let (lo, hi) = (a.min(b), a.max(b));
        let x = denormalize(&spec, "task", &vec![lo; spec.dim()]).unwrap();
        let y = denormalize(&spec, "task", &vec![hi; spec.dim()]).unwrap();
        prop_assert!(x.iter().zip(&y).all(|(p, q)| p <= q));
    }

    #[test]
    fn normalization_maps_bounds_to_unit_interval(l in -100.0..100.0f64, gap in 1e-3..100.0f64) {
        let b = PerformanceBounds::new(l, l + gap).unwrap();
        prop_assert_eq!(normalize(b.lower, &b), 0.0);
        prop_assert_eq!(normalize(b.upper, &b), 1.0);
    }

    #[test]
    fn hungarian_is_optimal(n in 1usize..=6, seed in any::<u64>()) {
        let mut rng = Rng::new(seed, 0);
        let cost: Vec<f64> = (0..n * n).map(|_| rng.uniform(0.0, 10.0)).collect();
        let assign = hungarian(&cost, n);
        let mut seen = assign.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        let best = assignment_cost(&cost, n, &assign);
        // Any single swap cannot improve an optimal assignment.
        for i in 0..n {
            for j in i + 1..n {
                let mut other = assign.clone();
                other.swap(i, j);
                prop_assert!(best <= assignment_cost(&cost, n, &other));
            }
        }
    }

    #[test]
    fn rng_draws_stay_in_range(seed in any::<u64>(), lo in -5i64..5, span in 0i64..10) {
        let mut rng = Rng::new(seed, 1);
        for _ in 0..50 {
            let k = rng.randint(lo, lo + span);
            prop_assert!(lo <= k && k <= lo + span);
            let u = rng.uniform(-1.0, 2.0);
            prop_assert!((-1.0..2.0).contains(&u));
        }
    }

    #[test]
    fn water_cups_enclose_their_water(seed in any::<u64>(), desk in any::<bool>()) {
        let scale = if desk { ParticleScale::Desk } else { ParticleScale::Paper };
        let p = gen_pour_water(&mut Rng::new(seed, 0), scale);
        let r = softgym_core::pbd::WATER_PARTICLE_RADIUS;
        prop_assert!(p.control.width > p.block.w_w as f64 * r);
        prop_assert!(p.control.length > p.block.l_w as f64 * r);
        prop_assert!(p.target.width < p.control.width);
        prop_assert!(p.target.height >= p.control.height);
        let t = gen_transport_water(&mut Rng::new(seed, 0), scale);
        prop_assert!((0.2..0.6).contains(&t.target_offset));
        prop_assert!(t.cup.height > 0.0);
    }

    #[test]
    fn stiff_pair_projects_to_rest_length(a in point(), b in point(), rest in 0.01..1.0f64) {
        prop_assume!((a - b).length() > 1e-3);
        let cfg = SimConfig {
            gravity: Vec3::ZERO,
            solver_iterations: 1,
            ..SimConfig::default()
        };
        let mut scene = Scene::new();
        scene.particles.push(a, 1.0, Group::Rope);
        scene.particles.push(b, 1.0, Group::Rope);
        scene
            .constraints
            .push(Constraint::distance(0, 1, rest, 1.0, DistanceKind::Stretch));
        solve_step(&mut scene, &cfg).unwrap();
        let p = &scene.particles.positions;
        prop_assert!(((p[0] - p[1]).length() - rest).abs() < 1e-9);
        // Equal masses: the midpoint does not move.
        prop_assert!(((p[0] + p[1]) - (a + b)).length() < 1e-12);
    }

    #[test]
    fn params_text_round_trips(
        ints in prop::collection::btree_map("[a-z_]{1,8}", any::<i64>(), 0..5),
        reals in prop::collection::btree_map("[A-Z]{1,8}", -1e9..1e9f64, 0..5),
    ) {
        let mut p = Params::new();
        for (k, v) in &ints {
            p.set_int(k, *v);
        }
        for (k, v) in &reals {
            p.set_real(k, *v);
        }
        prop_assert_eq!(Params::from_text(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn ppm_round_trips(size in 1usize..12, seed in any::<u64>()) {
        let mut rng = Rng::new(seed, 0);
        let frame = Frame {
            size,
            pixels: (0..3 * size * size).map(|_| rng.randint(0, 255) as u8).collect(),
        };
        prop_assert_eq!(Frame::from_ppm(&frame.to_ppm()).unwrap(), frame);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn snapshot_restore_replays_exactly(
        actions in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 8), 1..4),
    ) {
        let mut config = EnvConfig::new(TaskKind::StraightenRope);
        config.scale = ParticleScale::Desk;
        let mut env = EnvHandle::new(config, VariationSource::Generate { seed: 2 }).unwrap();
        env.reset(3).unwrap();
        let snap = env.snapshot_bytes().unwrap();
        let first: Vec<_> = actions.iter().map(|a| env.advance(a).unwrap()).collect();
        env.restore_bytes(&snap).unwrap();
        let second: Vec<_> = actions.iter().map(|a| env.advance(a).unwrap()).collect();
        prop_assert_eq!(first, second);
    }
}
