//! Synthetic buildings.
//!
//! [`synthesize_test_building`] lays out a multi-floor office block: every
//! floor is a two-row corridor lattice with rooms hanging off it, staircases
//! chain the floors together and the exits sit on the ground floor next to the
//! staircase landings. Staircase 0 ("central") is placed mid-floor and the
//! others towards the east end, so free-flow routing overloads the central
//! staircase when evacuees start on the upper floors.
//!
//! Default calibration (capacities are persons per 9 s step):
//!
//! | element       | capacity | service interval | geometry                 |
//! |---------------|----------|------------------|--------------------------|
//! | room door     | 6        | 1.5 s            | 3-7 m to the corridor    |
//! | corridor node | 9        | 1.0 s            | 5 m spacing, rows 4 m apart |
//! | stair landing | 2        | 4.5 s            | 14 m flight per floor    |
//! | exit          | 18       | 0.5 s            | 3 m from the corridor    |

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{BuildingGraph, EdgeSpec, GraphError, Node, NodeIx, STAIR_LABEL_PREFIX};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildingParams {
    pub floors: u32,
    pub rooms_per_floor: u32,
    pub staircases: u32,
    pub exits: u32,
    pub seed: u64,
    /// Parallel corridor rows per floor (1 or 2), joined at every column.
    pub corridor_rows: u32,
    /// Corridor columns per row.
    pub columns: u32,
    pub column_spacing_m: f64,
    pub row_gap_m: f64,
    pub floor_height_m: f64,
    /// Walking length of one flight of stairs, landings included.
    pub flight_length_m: f64,
    pub capacity_step_s: f64,
    pub room_capacity: u32,
    pub corridor_capacity: u32,
    pub stair_capacity: u32,
    pub exit_capacity: u32,
}

impl Default for BuildingParams {
    fn default() -> Self {
        Self {
            floors: 3,
            rooms_per_floor: 56,
            staircases: 2,
            exits: 2,
            seed: 1,
            corridor_rows: 2,
            columns: 12,
            column_spacing_m: 5.0,
            row_gap_m: 4.0,
            floor_height_m: 4.0,
            flight_length_m: 14.0,
            capacity_step_s: 9.0,
            room_capacity: 6,
            corridor_capacity: 9,
            stair_capacity: 2,
            exit_capacity: 18,
        }
    }
}

/// Name of staircase `k` out of `count`.
pub fn staircase_name(k: u32, count: u32) -> String {
    match (k, count) {
        (0, _) => "central".into(),
        (1, 2) => "east".into(),
        _ => format!("s{k}"),
    }
}

/// The default building with the given counts.
pub fn synthesize_test_building(
    floors: u32,
    rooms_per_floor: u32,
    staircases: u32,
    exits: u32,
    seed: u64,
) -> Result<BuildingGraph, GraphError> {
    synthesize(&BuildingParams {
        floors,
        rooms_per_floor,
        staircases,
        exits,
        seed,
        ..BuildingParams::default()
    })
}

pub fn synthesize(p: &BuildingParams) -> Result<BuildingGraph, GraphError> {
    let bad = |msg: &str| Err(GraphError::InvalidParameter(msg.into()));
    if p.floors == 0 {
        return bad("floors must be at least 1");
    }
    if p.staircases == 0 {
        return bad("staircases must be at least 1");
    }
    if p.exits == 0 {
        return bad("exits must be at least 1");
    }
    if !(1..=2).contains(&p.corridor_rows) {
        return bad("corridor_rows must be 1 or 2");
    }
    if p.columns < 2 {
        return bad("columns must be at least 2");
    }
    let m = p.columns;
    let first_col = m / 2 - 1;
    if p.staircases > m - first_col {
        return bad("more staircases than free corridor columns");
    }
    if p.exits > p.corridor_rows * m {
        return bad("more exits than ground-floor corridor nodes");
    }
    let caps = [
        p.room_capacity,
        p.corridor_capacity,
        p.stair_capacity,
        p.exit_capacity,
    ];
    if caps.contains(&0) {
        return bad("capacities must be positive");
    }
    for v in [
        p.column_spacing_m,
        p.row_gap_m,
        p.flight_length_m,
        p.capacity_step_s,
    ] {
        if !(v > 0.0) {
            return bad("lengths and capacity step must be positive");
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut nodes: Vec<Node> = Vec::new();
    let mut edges: Vec<EdgeSpec> = Vec::new();
    let stair_cols: Vec<u32> = (0..p.staircases)
        .map(|k| {
            if p.staircases == 1 {
                first_col
            } else {
                let span = (m - 1 - first_col) as f64;
                first_col + (k as f64 * span / (p.staircases - 1) as f64).round() as u32
            }
        })
        .collect();
    let rows = p.corridor_rows;
    let row_y = |row: u32| 6.0 + row as f64 * p.row_gap_m;
    let col_x = |col: u32| 2.5 + col as f64 * p.column_spacing_m;

    let push = |nodes: &mut Vec<Node>, node: Node| {
        nodes.push(node);
        nodes.len() - 1
    };
    let both = |edges: &mut Vec<EdgeSpec>, a: NodeIx, b: NodeIx, len: f64| {
        edges.push(EdgeSpec::new(a, b, len));
        edges.push(EdgeSpec::new(b, a, len));
    };

    // corridor[f][row][col], landing[f][k]
    let mut corridor = vec![vec![vec![0; m as usize]; rows as usize]; p.floors as usize];
    let mut landing = vec![vec![0; p.staircases as usize]; p.floors as usize];
    for f in 0..p.floors {
        let z = f as f64 * p.floor_height_m;
        for row in 0..rows {
            for col in 0..m {
                corridor[f as usize][row as usize][col as usize] = push(
                    &mut nodes,
                    Node {
                        id: format!("f{f}-c{row}-{col:02}"),
                        label: "corridor".into(),
                        floor: f as i32,
                        x: col_x(col),
                        y: row_y(row),
                        z,
                        service_capacity: p.corridor_capacity,
                        is_exit: false,
                    },
                );
            }
        }
        let c = &corridor[f as usize];
        for row in c {
            for col in 1..m as usize {
                both(&mut edges, row[col - 1], row[col], p.column_spacing_m);
            }
        }
        if rows == 2 {
            for (&a, &b) in c[0].iter().zip(&c[1]) {
                both(&mut edges, a, b, p.row_gap_m);
            }
        }
        for i in 0..p.rooms_per_floor {
            // rooms alternate sides; the far side opens onto the last row
            let side = i % 2;
            let row = side.min(rows - 1);
            let col = (i / 2) % m;
            let dist = 3.0 + rng.gen_range(0.0..4.0);
            let jitter = rng.gen_range(-1.5..1.5);
            let y = if side == 0 {
                row_y(0) - dist
            } else {
                row_y(rows - 1) + dist
            };
            let r = push(
                &mut nodes,
                Node {
                    id: format!("f{f}-r{i:02}"),
                    label: "room".into(),
                    floor: f as i32,
                    x: col_x(col) + jitter,
                    y,
                    z,
                    service_capacity: p.room_capacity,
                    is_exit: false,
                },
            );
            let len = (dist * dist + jitter * jitter).sqrt();
            edges.push(EdgeSpec::new(r, c[row as usize][col as usize], len));
        }
        for k in 0..p.staircases {
            let col = stair_cols[k as usize];
            let l = push(
                &mut nodes,
                Node {
                    id: format!("f{f}-s{k}"),
                    label: format!("{STAIR_LABEL_PREFIX}{}", staircase_name(k, p.staircases)),
                    floor: f as i32,
                    x: col_x(col),
                    y: row_y(0) - 3.0,
                    z,
                    service_capacity: p.stair_capacity,
                    is_exit: false,
                },
            );
            both(&mut edges, l, c[0][col as usize], 3.0);
            landing[f as usize][k as usize] = l;
            if f > 0 {
                edges.push(EdgeSpec::new(
                    l,
                    landing[f as usize - 1][k as usize],
                    p.flight_length_m,
                ));
            }
        }
    }

    // exits next to the staircase feet first, then along the ground corridor
    let mut spots: Vec<(u32, u32)> = Vec::new();
    for row in (0..rows).rev() {
        for &col in &stair_cols {
            spots.push((row, col));
        }
    }
    for row in (0..rows).rev() {
        for col in 0..m {
            spots.push((row, col));
        }
    }
    let mut taken: Vec<(u32, u32)> = Vec::new();
    for spot in spots {
        if taken.len() == p.exits as usize {
            break;
        }
        if !taken.contains(&spot) {
            taken.push(spot);
        }
    }
    for (k, &(row, col)) in taken.iter().enumerate() {
        let x = push(
            &mut nodes,
            Node {
                id: format!("x{k}"),
                label: "exit".into(),
                floor: 0,
                x: col_x(col),
                y: row_y(rows - 1) + 3.0
                    - if row + 1 < rows {
                        p.row_gap_m + 6.0
                    } else {
                        0.0
                    },
                z: 0.0,
                service_capacity: p.exit_capacity,
                is_exit: true,
            },
        );
        edges.push(EdgeSpec::new(
            corridor[0][row as usize][col as usize],
            x,
            3.0,
        ));
    }
    BuildingGraph::new(nodes, edges, p.capacity_step_s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomGraphParams {
    pub nodes: usize,
    pub exits: usize,
    /// Directed edges added on top of the spanning in-tree.
    pub extra_edges: usize,
    pub max_capacity: u32,
    pub min_length_m: f64,
    pub max_length_m: f64,
    pub capacity_step_s: f64,
}

impl RandomGraphParams {
    pub fn small(nodes: usize) -> Self {
        Self {
            nodes,
            exits: 1 + nodes / 8,
            extra_edges: nodes,
            max_capacity: 3,
            min_length_m: 2.0,
            max_length_m: 30.0,
            capacity_step_s: 10.0,
        }
    }
}

/// Random directed graph in which every node reaches an exit: a random
/// in-tree towards the exits plus `extra_edges` random shortcuts.
pub fn random_graph(p: &RandomGraphParams, seed: u64) -> Result<BuildingGraph, GraphError> {
    if p.exits == 0 || p.exits >= p.nodes {
        return Err(GraphError::InvalidParameter(
            "need at least one exit and one non-exit node".into(),
        ));
    }
    if p.max_capacity == 0 || !(p.min_length_m > 0.0) || p.max_length_m < p.min_length_m {
        return Err(GraphError::InvalidParameter(
            "bad capacity or length range".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<Node> = (0..p.nodes)
        .map(|i| {
            let exit = i >= p.nodes - p.exits;
            Node {
                id: format!("n{i}"),
                label: if exit {
                    "exit".into()
                } else {
                    "corridor".into()
                },
                floor: 0,
                x: rng.gen_range(0.0..100.0),
                y: rng.gen_range(0.0..100.0),
                z: 0.0,
                service_capacity: rng.gen_range(1..=p.max_capacity),
                is_exit: exit,
            }
        })
        .collect();
    let length = |rng: &mut ChaCha8Rng| {
        if p.max_length_m > p.min_length_m {
            rng.gen_range(p.min_length_m..p.max_length_m)
        } else {
            p.min_length_m
        }
    };
    let mut connected: Vec<NodeIx> = ((p.nodes - p.exits)..p.nodes).collect();
    let mut pending: Vec<NodeIx> = (0..p.nodes - p.exits).collect();
    let mut edges = Vec::new();
    let mut has = std::collections::BTreeSet::new();
    while !pending.is_empty() {
        let v = pending.swap_remove(rng.gen_range(0..pending.len()));
        let to = connected[rng.gen_range(0..connected.len())];
        edges.push(EdgeSpec::new(v, to, length(&mut rng)));
        has.insert((v, to));
        connected.push(v);
    }
    let sources = p.nodes - p.exits;
    let mut attempts = 0;
    let mut added = 0;
    while added < p.extra_edges && attempts < 20 * p.extra_edges + 20 {
        attempts += 1;
        let from = rng.gen_range(0..sources);
        let to = rng.gen_range(0..p.nodes);
        if from == to || !has.insert((from, to)) {
            continue;
        }
        edges.push(EdgeSpec::new(from, to, length(&mut rng)));
        added += 1;
    }
    BuildingGraph::new(nodes, edges, p.capacity_step_s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_building_size() {
        let g = synthesize_test_building(3, 56, 2, 2, 1).unwrap();
        assert!((225..=275).contains(&g.node_count()), "{}", g.node_count());
        assert!((360..=440).contains(&g.edge_count()), "{}", g.edge_count());
        assert_eq!(g.exits().len(), 2);
        let stairs = g.staircases();
        assert_eq!(stairs.keys().collect::<Vec<_>>(), vec!["central", "east"]);
        assert!(stairs.values().all(|s| s.len() == 3));
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = synthesize_test_building(3, 56, 2, 2, 7).unwrap();
        let b = synthesize_test_building(3, 56, 2, 2, 7).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let c = synthesize_test_building(3, 56, 2, 2, 8).unwrap();
        assert_ne!(a.to_json(), c.to_json());
    }

    #[test]
    fn degenerate_parameters() {
        let g = synthesize_test_building(1, 0, 1, 1, 1).unwrap();
        assert_eq!(g.exits().len(), 1);
        assert!(g.nodes().iter().all(|n| n.label != "room"));
        assert!(synthesize_test_building(0, 10, 1, 1, 1).is_err());
        assert!(synthesize_test_building(1, 10, 0, 1, 1).is_err());
        assert!(synthesize_test_building(1, 10, 1, 0, 1).is_err());
    }

    #[test]
    fn free_flow_overloads_central_staircase() {
        let g = synthesize_test_building(3, 56, 2, 2, 1).unwrap();
        let stairs = g.staircases();
        let mut central = 0;
        let mut east = 0;
        for v in 0..g.node_count() {
            let n = g.node(v);
            if n.floor == 1 && n.label == "room" {
                let r = g.free_flow_shortest_path(v).unwrap();
                if r.nodes.iter().any(|u| stairs["central"].contains(u)) {
                    central += 1;
                } else {
                    east += 1;
                }
            }
        }
        assert!(central > 2 * east, "central {central} east {east}");
    }

    #[test]
    fn random_graphs_are_valid() {
        for seed in 0..50 {
            let g = random_graph(&RandomGraphParams::small(8), seed).unwrap();
            assert_eq!(g.node_count(), 8);
        }
    }
}
