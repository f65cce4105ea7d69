use mapt::io::{decode_model, encode_model, parse_data};
use mapt::{
    backward, build_tree, locate, DensityEstimate, Domain, HyperParams, NodeId, PriorSettings,
};
use proptest::prelude::*;

fn unit_points(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, 0..max)
}

fn hp(depth: u32, states: usize, beta: f64) -> HyperParams {
    HyperParams::from_settings(
        Domain::unit(),
        depth,
        Default::default(),
        &PriorSettings {
            states,
            beta,
            quad_points: 4,
            ..PriorSettings::default()
        },
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_add_up(data in unit_points(80), depth in 1u32..10) {
        let tree = build_tree(&data, Domain::unit(), depth).unwrap();
        prop_assert_eq!(tree.count(NodeId::ROOT), data.len() as u64);
        for (id, n) in tree.nonempty_nodes() {
            if id.level() < depth {
                let (l, r) = tree.split(id);
                prop_assert_eq!(l + r, n);
            }
        }
        let leaves: u64 = tree
            .nonempty_nodes()
            .filter(|(id, _)| id.level() == depth)
            .map(|(_, n)| n)
            .sum();
        prop_assert_eq!(leaves, data.len() as u64);
    }

    #[test]
    fn located_cells_nest(x in 0.0..=1.0f64, lo in -5.0..5.0f64, w in 0.1..10.0f64, depth in 1u32..30) {
        let d = Domain::new(lo, lo + w).unwrap();
        let y = lo + x * w;
        let leaf = locate(y, depth, &d).unwrap();
        for level in 0..=depth {
            let node = locate(y, level, &d).unwrap();
            prop_assert_eq!(node, leaf.ancestor(level));
            let (a, b) = mapt::node_interval(node, &d);
            prop_assert!(a <= y && y <= b);
        }
    }

    #[test]
    fn marginal_ignores_data_order(mut data in unit_points(40), seed in any::<u64>(), states in 1usize..4) {
        let h = hp(6, states, 0.5);
        let a = mapt::log_marginal(&build_tree(&data, Domain::unit(), 6).unwrap(), &h).unwrap();
        let n = data.len();
        if n > 1 {
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                data.swap(i, (s >> 33) as usize % (i + 1));
            }
        }
        let b = mapt::log_marginal(&build_tree(&data, Domain::unit(), 6).unwrap(), &h).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn reflection_symmetry(data in prop::collection::vec(0.001..0.999f64, 0..30), x in 0.01..0.99f64) {
        let h = hp(5, 3, 0.3);
        let mirrored: Vec<f64> = data.iter().map(|v| 1.0 - v).collect();
        let a = DensityEstimate::fit(build_tree(&data, Domain::unit(), 5).unwrap(), h.clone()).unwrap();
        let b = DensityEstimate::fit(build_tree(&mirrored, Domain::unit(), 5).unwrap(), h).unwrap();
        // a point on a cell edge goes right, so its mirror image would not
        prop_assume!((x * 32.0).fract().abs() > 1e-9);
        prop_assume!(data.iter().all(|v| (v * 32.0).fract().abs() > 1e-9));
        prop_assert!((a.log_marginal() - b.log_marginal()).abs() < 1e-10 * a.log_marginal().abs().max(1.0));
        let pa = a.ppd(x).unwrap();
        let pb = b.ppd(1.0 - x).unwrap();
        prop_assert!((pa - pb).abs() < 1e-10 * pa);
    }

    #[test]
    fn posterior_rows_are_distributions(data in unit_points(30), states in 2usize..5, beta in 0.0..2.0f64) {
        let h = hp(5, states, beta);
        let tree = build_tree(&data, Domain::unit(), 5).unwrap();
        let est = DensityEstimate::fit(tree.clone(), h.clone()).unwrap();
        let post = backward(&tree, &h, est.forward_table()).unwrap();
        prop_assert!((post.init().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (id, n) in tree.nonempty_nodes() {
            for i in 0..states {
                let row = post.row(id, i);
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for (j, &p) in row.iter().enumerate() {
                    if j < i {
                        prop_assert_eq!(p, 0.0);
                    }
                }
            }
            if n <= 1 {
                prop_assert!(!post.is_updated(id));
            }
        }
    }

    #[test]
    fn leaf_sum_is_one(data in unit_points(60), states in 1usize..4) {
        let est = DensityEstimate::fit(build_tree(&data, Domain::unit(), 7).unwrap(), hp(7, states, 1.0)).unwrap();
        let total: f64 = est.leaf_densities().unwrap().iter().sum::<f64>() / 128.0;
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn model_round_trip(data in unit_points(40), states in 1usize..4, x in 0.0..=1.0f64) {
        let est = DensityEstimate::fit(build_tree(&data, Domain::unit(), 6).unwrap(), hp(6, states, 0.2)).unwrap();
        let back = decode_model(&encode_model(&est, None)).unwrap().estimate;
        prop_assert_eq!(back.ppd(x).unwrap(), est.ppd(x).unwrap());
    }

    #[test]
    fn data_text_round_trip(data in prop::collection::vec(-1e6..1e6f64, 0..50)) {
        let text: String = data.iter().map(|x| format!("{}\n", mapt::io::format_f64(*x))).collect();
        prop_assert_eq!(parse_data(&text).unwrap(), data);
    }
}
