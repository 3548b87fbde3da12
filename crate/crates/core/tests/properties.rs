use proptest::prelude::*;

use oss_core::generate::GenParams;
use oss_core::model::{Instance, InstanceKind, NodeId};
use oss_core::oracle;
use oss_core::plan::ObservationPlan;
use oss_core::profile::{lerp, precision_join, CondPerf, GridSpec, ProfileTable};

fn any_instance() -> impl Strategy<Value = Instance> {
    (any::<bool>(), 1usize..12, 1usize..4, any::<u64>(), 1u32..3).prop_map(|(boolean, n, c, seed, max_obs)| {
        let kind = if boolean {
            InstanceKind::Boolean
        } else {
            InstanceKind::Gaussian
        };
        let mut p = GenParams::new(kind, n, c, seed);
        p.max_obs_per_node = max_obs;
        p.boolean.zeta_max = 0.05;
        p.generate().unwrap()
    })
}

proptest! {
    #[test]
    fn instance_json_round_trips(inst in any_instance()) {
        let text = inst.to_json();
        let back = Instance::parse(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn lerp_stays_between(x in 0.0..1.0f64, y in 0.0..1.0f64, c in 0.0..=1.0f64) {
        let v = lerp(x, y, c);
        prop_assert!(v >= x.min(y) - 1e-15 && v <= x.max(y) + 1e-15);
    }

    #[test]
    fn precision_join_properties(x in 0.0..1e6f64, y in 0.0..1e6f64, dx in 0.0..10.0f64) {
        let j = precision_join(x, y);
        prop_assert_eq!(j, precision_join(y, x));
        prop_assert!(j <= x.min(y) * (1.0 + 1e-12));
        prop_assert!(precision_join(x + dx, y) >= j * (1.0 - 1e-12));
    }

    #[test]
    fn discretize_is_idempotent_on_representatives(eps in 0.01..0.9f64) {
        let g = GridSpec::new(eps).unwrap();
        for k in 0..g.d() {
            prop_assert_eq!(g.discretize(g.representative(k)).unwrap(), k);
        }
        let lg = GridSpec::log(eps, 0.5, 40.0).unwrap();
        for k in 0..lg.cell_count() {
            prop_assert_eq!(lg.discretize(lg.representative(k)).unwrap(), k);
        }
    }

    #[test]
    fn snapping_error_is_half_a_step(eps in 0.01..0.9f64, v in 0.0..=1.0f64) {
        let g = GridSpec::new(eps).unwrap();
        prop_assert!((g.snap(v) - v).abs() <= eps / 2.0 + 1e-12);
    }

    #[test]
    fn log_snapping_error_is_half_a_step_in_log_space(eps in 0.01..0.9f64, t in 0.0..=1.0f64) {
        let (a, b) = (0.5f64, 40.0f64);
        let lg = GridSpec::log(eps, a, b).unwrap();
        let v = a * (b / a).powf(t);
        let back = (lg.snap(v) / a).ln() / (b / a).ln();
        prop_assert!((back - t).abs() <= eps / 2.0 + 1e-9);
    }

    #[test]
    fn purge_ignores_insertion_order(
        items in prop::collection::vec((0u32..4, 0u32..3, 0u64..6, prop::collection::vec(1u32..5, 0..3)), 1..40),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let grids = [GridSpec::new(0.25).unwrap(), GridSpec::new(0.34).unwrap()];
        let mut cps: Vec<CondPerf<2>> = items
            .into_iter()
            .map(|(p, q, time, nodes)| CondPerf {
                plan: ObservationPlan::from_counts(nodes.into_iter().map(|n| (NodeId(n), 1))),
                time,
                cell: [p, q],
                raw: [grids[0].representative(p), grids[1].representative(q)],
            })
            .collect();
        let build = |cps: &[CondPerf<2>]| {
            let mut t = ProfileTable::new(grids, 4);
            for cp in cps {
                t.insert_purged(cp.clone());
            }
            t
        };
        let first = build(&cps);
        cps.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(build(&cps), first.clone());
        prop_assert!(first.iter().all(|cp| cp.time <= 4));
        prop_assert!(first.len() as u128 <= first.capacity());
    }

    #[test]
    fn extra_observation_never_lowers_precision(seed in any::<u64>(), n in 2usize..9) {
        let mut p = GenParams::gaussian(n, 2, seed);
        p.max_obs_per_node = 2;
        let inst = p.generate().unwrap();
        let measurable: Vec<NodeId> = inst.nodes().iter().filter(|n| n.is_measurable).map(|n| n.id).collect();
        prop_assume!(!measurable.is_empty());
        let base = ObservationPlan::from_counts(measurable.iter().step_by(2).map(|&id| (id, 1)));
        let before = oracle::goss_posterior_precisions(&inst, &base).unwrap();
        let mut more = base.clone();
        more.set(measurable[0], base.count(measurable[0]) + 1);
        let after = oracle::goss_posterior_precisions(&inst, &more).unwrap();
        for (a, b) in after.iter().zip(&before) {
            prop_assert!(*a >= b * (1.0 - 1e-12));
        }
    }

    #[test]
    fn boolean_outcome_mass_is_one(inst in any_instance(), picks in prop::collection::vec(any::<bool>(), 12)) {
        prop_assume!(inst.kind() == InstanceKind::Boolean);
        let plan = ObservationPlan::from_counts(
            inst.nodes().iter().zip(&picks).filter(|(n, &p)| p && n.is_measurable).map(|(n, _)| (n.id, 1)),
        );
        let summary = oracle::boss_outcomes(&inst, &plan).unwrap();
        prop_assert!((summary.total_probability - 1.0).abs() < 1e-9);
        let reward = oracle::boss_eval_exact(&inst, &plan).unwrap().exact_reward;
        prop_assert!((0.0..=1.0).contains(&reward));
    }
}
