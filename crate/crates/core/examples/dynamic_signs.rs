//! Compile dynamic exit-sign schedules from a plan and print the busiest
//! junction.
//!
//! cargo run --example dynamic_signs

use evac_core::experiment::{draw_starts, StartDistribution};
use evac_core::signs::{compile_schedules_mounted, Facing, SignMounting};
use evac_core::sim::forecast_plans;
use evac_core::synth::{synthesize, BuildingParams};
use evac_core::{plan_all, SearchBackend};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = synthesize(&BuildingParams::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let evacuees = draw_starts(&g, &StartDistribution::AllFirstFloor, 1, 100, &mut rng)?;
    let delta = 18.0;
    let plans = plan_all(&g, &evacuees, delta, &SearchBackend::Dijkstra)?.plans;
    // signs follow when people will really get there, not the raw reservations
    let timed = forecast_plans(&g, &evacuees, &plans, delta)?;
    let schedule = compile_schedules_mounted(&timed, delta, SignMounting::PerApproach, &mut rng)?;

    let busiest = schedule
        .iter()
        .filter(|(_, facing, _, _)| *facing == Facing::All)
        .max_by_key(|(_, _, _, blocks)| blocks.len())
        .expect("schedule is not empty");
    let (node, _, step, blocks) = busiest;
    println!("node {} in step {step}:", g.node(node).id);
    for b in blocks {
        println!(
            "  point to {:>10} for {:5.2} s ({} planned)",
            g.node(b.direction).id,
            b.duration_s,
            b.planned_count
        );
    }
    for t in [0.0, delta / 3.0, 2.0 * delta / 3.0] {
        let at = step.start(delta) + t;
        let r = schedule.direction_at(node, at)?;
        println!("  at {at:6.1} s the sign reads {}", g.node(r.direction).id);
    }
    println!("{} short blocks merged", schedule.merges().len());
    Ok(())
}
