//! One simulated evacuation under each guidance policy.
//!
//! cargo run --example simulate

use evac_core::experiment::{draw_starts, StartDistribution};
use evac_core::signs::{compile_schedules_mounted, SignMounting};
use evac_core::sim::{forecast_plans, run, Policy, SimConfig};
use evac_core::synth::{synthesize, BuildingParams};
use evac_core::{plan_all, SearchBackend};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = synthesize(&BuildingParams::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let evacuees = draw_starts(&g, &StartDistribution::AllFirstFloor, 1, 100, &mut rng)?;
    let delta = 9.0;
    let plans = plan_all(&g, &evacuees, delta, &SearchBackend::Dijkstra)?.plans;
    let timed = forecast_plans(&g, &evacuees, &plans, delta)?;
    let signs = compile_schedules_mounted(&timed, delta, SignMounting::PerApproach, &mut rng)?;

    let cfg = SimConfig::new(delta, 5);
    for policy in [
        Policy::AssignedRoute(&plans),
        Policy::ShortestPath,
        Policy::FollowSigns(&signs),
    ] {
        let r = run(&g, &evacuees, policy, &cfg)?;
        println!(
            "{:>14}: makespan {:6.1} s, first floor clear at {:5.1} s, stairs {:?}, {} sign events",
            policy.name(),
            r.makespan,
            r.floor_clearance_time(&g, 1).unwrap_or(f64::NAN),
            r.staircase_usage,
            r.violations.len()
        );
    }
    Ok(())
}
