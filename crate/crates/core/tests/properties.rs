use crossbar_core::oracle::dense_solve_with_limit;
use crossbar_core::partition::{plan, simulate_partitioned};
use crossbar_core::{
    assemble, build_rhs, factor, generate_random, resolve_ordering, simulate, solve_batch, CrossbarConfig, Error,
    Execution, InputBatch, NodeOrdering, RandomSpec,
};
use proptest::prelude::*;

fn config_strategy() -> impl Strategy<Value = (CrossbarConfig, InputBatch)> {
    (
        1usize..=10,
        1usize..=10,
        1usize..=4,
        any::<u64>(),
        -3.0f64..2.0,
        0usize..3,
    )
        .prop_map(|(m, n, batch, seed, log_r, ordering)| {
            let (config, inputs) = generate_random(m, n, batch, &RandomSpec::with_seed(seed)).unwrap();
            let ordering = [NodeOrdering::Auto, NodeOrdering::RowMajor, NodeOrdering::ColMajor][ordering];
            (
                config.with_wire_resistance(10f64.powf(log_r)).with_ordering(ordering),
                inputs,
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn voltages_obey_maximum_principle((config, inputs) in config_strategy()) {
        let sim = simulate(&config, &inputs, 1, Execution::default()).unwrap();
        for (r, v) in sim.results.iter().zip(inputs.samples()) {
            let v_max = v.iter().cloned().fold(0.0, f64::max);
            prop_assert!(r.node_voltages.iter().all(|x| *x >= 0.0 && *x <= v_max));
            // I_in = (V_i - V_WL) g_wl cancels catastrophically as the wires
            // approach short circuits; the balance holds to 1e-9 above ~10 mOhm.
            if 1.0 / config.g_wl >= 1e-2 {
                prop_assert!(r.conservation_error() <= 1e-9, "{:e}", r.conservation_error());
                prop_assert!(r.power_balance_error() <= 1e-9, "{:e}", r.power_balance_error());
            }
        }
    }

    #[test]
    fn batch_solves_are_bitwise_single_solves((config, inputs) in config_strategy()) {
        let system = assemble(&config, &resolve_ordering(&config)).unwrap();
        let lu = factor(&system).unwrap();
        let rhs = build_rhs(&system, &inputs).unwrap();
        let (par, _) = solve_batch(&lu, &rhs, Execution::Parallel).unwrap();
        let (seq, _) = solve_batch(&lu, &rhs, Execution::Sequential).unwrap();
        prop_assert_eq!(&par, &seq);
        for (x, r) in par.iter().zip(&rhs) {
            prop_assert_eq!(x, &lu.solve(r).unwrap());
        }
    }

    #[test]
    fn banded_matches_dense((config, inputs) in config_strategy()) {
        let system = assemble(&config, &resolve_ordering(&config)).unwrap();
        let lu = factor(&system).unwrap();
        for rhs in build_rhs(&system, &inputs).unwrap() {
            let a = lu.solve(&rhs).unwrap();
            let b = dense_solve_with_limit(&system, &rhs, usize::MAX).unwrap();
            let scale = b.iter().fold(f64::MIN_POSITIVE, |m, x| m.max(x.abs()));
            let diff = a.iter().zip(&b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
            prop_assert!(diff <= 1e-10 * scale, "{diff:e} vs {scale:e}");
        }
    }

    #[test]
    fn solutions_are_linear_in_inputs((config, inputs) in config_strategy(), a in 0.0f64..4.0) {
        let scaled: Vec<f64> = inputs.sample(0).iter().map(|v| a * v).collect();
        let both = InputBatch::from_rows(&[inputs.sample(0).to_vec(), scaled]).unwrap();
        let sim = simulate(&config, &both, 1, Execution::default()).unwrap();
        let (x, y) = (&sim.results[0].node_voltages, &sim.results[1].node_voltages);
        let scale = x.iter().fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
        for (p, q) in x.iter().zip(y) {
            prop_assert!((a * p - q).abs() <= 1e-12 * a.max(1.0) * scale);
        }
    }
}

#[test]
fn no_pivot_breakdown_up_to_64() {
    let sizes = [1, 2, 5, 16, 33, 64];
    for (k, &m) in sizes.iter().enumerate() {
        for &n in &sizes {
            for r in [5.0, 1e-9] {
                let spec = RandomSpec {
                    g_min: 1e-9,
                    g_max: 1e-2,
                    ..RandomSpec::with_seed((k * 100 + n) as u64)
                };
                let (config, _) = generate_random(m, n, 1, &spec).unwrap();
                let config = config.with_wire_resistance(r);
                let system = assemble(&config, &resolve_ordering(&config)).unwrap();
                let lu = factor(&system).unwrap_or_else(|e| panic!("{m}x{n} at {r} ohm: {e}"));
                assert!(lu.pivot_min() > 0.0);
            }
        }
    }
}

#[test]
fn failing_tile_is_named() {
    let (config, inputs) = generate_random(4, 4, 1, &RandomSpec::with_seed(1)).unwrap();
    let mut tiling = plan(&config, 2, 2).unwrap();
    tiling.tiles[2].config.g_bl = -1.0;
    match simulate_partitioned(&config, &inputs, &tiling, 1, Execution::default()) {
        Err(Error::Tile { tile: 2, .. }) => {}
        other => panic!("expected failure of tile 2, got {:?}", other.map(|r| r.outputs)),
    }
}
