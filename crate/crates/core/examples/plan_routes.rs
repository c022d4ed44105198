//! Plan capacity-constrained routes for a crowd on the first floor and check
//! them against the ledger.
//!
//! cargo run --example plan_routes

use evac_core::experiment::{draw_starts, makespan_bound, StartDistribution};
use evac_core::planner::replay_ledger;
use evac_core::sim::MobilityModel;
use evac_core::synth::{synthesize, BuildingParams};
use evac_core::{plan_all, SearchBackend};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = synthesize(&BuildingParams::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let evacuees = draw_starts(&g, &StartDistribution::AllFirstFloor, 1, 100, &mut rng)?;
    let delta = 9.0;

    let planning = plan_all(&g, &evacuees, delta, &SearchBackend::Dijkstra)?;
    assert_eq!(replay_ledger(&g, &planning.plans, delta)?, planning.ledger);

    let stairs = g.staircases();
    for (name, landings) in &stairs {
        let n = planning
            .plans
            .iter()
            .filter(|p| p.nodes().any(|v| landings.contains(&v)))
            .count();
        println!("{name}: {n} evacuees");
    }
    let makespan = planning
        .plans
        .iter()
        .map(|p| p.exit_time())
        .fold(0.0, f64::max);
    let starts: Vec<_> = evacuees.iter().map(|e| e.start).collect();
    println!(
        "planned makespan {makespan:.1} s, {} reservations",
        planning.ledger.total_reserved()
    );
    println!(
        "lower bound on the walked makespan: {:.1} s",
        makespan_bound(&g, &starts, MobilityModel::default().max_speed())?
    );

    let first = &planning.plans[0];
    for h in &first.hops {
        println!(
            "  {:>10} step {:>3} at {:6.1} s",
            g.node(h.node).id,
            h.step,
            h.time_s
        );
    }
    Ok(())
}
