//! Synthesize the test building, save it, load it back and look around.
//!
//! cargo run --example build_graph

use evac_core::synth::{synthesize, BuildingParams};
use evac_core::BuildingGraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = synthesize(&BuildingParams::default())?;
    println!("{} nodes, {} edges", g.node_count(), g.edge_count());
    for (name, landings) in g.staircases() {
        let floors: Vec<i32> = landings.iter().map(|&v| g.node(v).floor).collect();
        println!("staircase {name}: landings on floors {floors:?}");
    }

    let back = BuildingGraph::from_json(&g.to_json())?;
    assert_eq!(back, g);

    let room = g.lookup("f1-r00")?;
    let route = g.free_flow_shortest_path(room)?;
    let ids: Vec<&str> = route.nodes.iter().map(|&v| g.node(v).id.as_str()).collect();
    println!(
        "free-flow route from f1-r00 ({:.1} s): {}",
        route.cost,
        ids.join(" > ")
    );

    // a broken document is rejected with the offending id
    let bad = r#"{"nodes":[{"id":"A","label":"room","floor":0,"x":0,"y":0,"z":0,
        "service_capacity":1,"is_exit":true}],"edges":[{"from":"A","to":"Z","length":3}]}"#;
    println!(
        "invalid document: {}",
        BuildingGraph::from_json(bad).unwrap_err()
    );
    Ok(())
}
