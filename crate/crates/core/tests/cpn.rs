mod common;

use evac_core::cpn::{CpnConfig, CpnEngine};
use evac_core::planner::quickest_route;
use evac_core::synth::{random_graph, RandomGraphParams};
use evac_core::TimeStep;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dijkstra and CPN exit steps, max residual and solve count for one seed.
fn parity_case(seed: u64) -> (u64, u64, f64, u64) {
    let g = random_graph(&RandomGraphParams::small(20), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ledger = common::random_ledger(&g, 10.0, 30, 10, &mut rng);
    let sources = common::non_exits(&g);
    let start = sources[rng.gen_range(0..sources.len())];
    let reference = quickest_route(&g, &ledger, start, TimeStep(0)).unwrap();
    let mut engine = CpnEngine::new(
        &g,
        CpnConfig {
            seed,
            ..CpnConfig::default()
        },
    );
    let plan = engine
        .cpn_quickest_route(&g, &ledger, start, TimeStep(0), 500)
        .unwrap();
    let path: Vec<_> = plan.nodes().collect();
    let mut seen = path.clone();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len(), path.len(), "seed {seed}: loop in {path:?}");
    (
        reference.exit_step.0,
        plan.exit_step.0,
        engine.max_residual(),
        engine.solve_count(),
    )
}

#[test]
fn parity_with_dijkstra_on_random_graphs() {
    let mut within = 0;
    for seed in 0..100 {
        let (dij, cpn, residual, solves) = parity_case(seed);
        assert!(cpn >= dij, "seed {seed}: cpn {cpn} beat the optimum {dij}");
        assert!(solves > 0);
        assert!(residual < 1e-8, "seed {seed}: residual {residual}");
        if cpn as f64 <= dij as f64 * 1.1 {
            within += 1;
        }
    }
    assert!(within >= 90, "only {within}/100 within 10%");
}

#[test]
fn packets_are_loop_free_and_weights_stay_non_negative() {
    for seed in 0..30 {
        let g = random_graph(&RandomGraphParams::small(15), seed).unwrap();
        let ledger = evac_core::ReservationLedger::new(&g, 10.0).unwrap();
        let mut engine = CpnEngine::new(
            &g,
            CpnConfig {
                seed,
                epsilon: 0.3,
                ..CpnConfig::default()
            },
        );
        for v in common::non_exits(&g) {
            for _ in 0..20 {
                if let Some(ack) = engine.launch_smart_packet(&g, &ledger, v, TimeStep(0)) {
                    let mut nodes = ack.path.clone();
                    nodes.sort_unstable();
                    nodes.dedup();
                    assert_eq!(nodes.len(), ack.path.len());
                    assert!(g.is_exit(*ack.path.last().unwrap()));
                    assert!(ack.metric() > 0.0);
                    let back: Vec<_> = ack.reverse_path().collect();
                    assert!(back.iter().rev().eq(ack.path.iter()));
                    engine.process_ack(&g, &ack);
                }
            }
        }
        for v in 0..g.node_count() {
            let rnn = engine.rnn(v);
            for i in 0..rnn.neurons() {
                for j in 0..rnn.neurons() {
                    assert!(rnn.excitatory(i, j) >= 0.0 && rnn.inhibitory(i, j) >= 0.0);
                }
            }
            for r in engine.routes(v) {
                assert!(r.metric > 0.0 && g.is_exit(*r.path.last().unwrap()));
            }
        }
        assert!(engine.max_residual() < 1e-8);
    }
}
