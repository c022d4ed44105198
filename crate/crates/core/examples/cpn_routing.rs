//! Route discovery with smart packets and random neural networks, compared
//! with the exact search.
//!
//! cargo run --example cpn_routing

use evac_core::cpn::{CpnConfig, CpnEngine};
use evac_core::planner::quickest_route;
use evac_core::synth::{random_graph, RandomGraphParams};
use evac_core::{ReservationLedger, TimeStep};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = random_graph(&RandomGraphParams::small(20), 7)?;
    let ledger = ReservationLedger::new(&g, 10.0)?;
    let start = 0;

    let exact = quickest_route(&g, &ledger, start, TimeStep(0))?;
    let mut engine = CpnEngine::new(
        &g,
        CpnConfig {
            seed: 7,
            ..CpnConfig::default()
        },
    );
    for budget in [5, 50, 500] {
        let found = engine.cpn_quickest_route(&g, &ledger, start, TimeStep(0), budget)?;
        println!(
            "after {budget:>3} more packets: exit at {:6.1} s (exact {:6.1} s)",
            found.exit_time(),
            exact.exit_time()
        );
    }
    let rnn = engine.rnn(start);
    println!(
        "neuron potentials at the start node: {:?}",
        rnn.potentials()
    );
    println!(
        "{} packets, {} fixed-point solves, max residual {:.1e}",
        engine.packets_sent(),
        engine.solve_count(),
        engine.max_residual()
    );
    for r in engine.routes(start).iter().take(3) {
        println!("  route {:?} metric {:.1} s", r.path, r.metric);
    }
    Ok(())
}
