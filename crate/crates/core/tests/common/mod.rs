//! Brute-force oracles shared by the integration tests. Nothing here calls
//! the search code under test.
#![allow(dead_code)]

use evac_core::{BuildingGraph, NodeIx, ReservationLedger, TimeStep};
use rand::Rng;

/// Every simple path from `src` that stops at the first exit it reaches.
pub fn simple_exit_paths(g: &BuildingGraph, src: NodeIx) -> Vec<Vec<NodeIx>> {
    fn walk(g: &BuildingGraph, path: &mut Vec<NodeIx>, out: &mut Vec<Vec<NodeIx>>) {
        let v = *path.last().unwrap();
        if g.is_exit(v) {
            out.push(path.clone());
            return;
        }
        for e in g.edges().iter().filter(|e| e.from == v) {
            if !path.contains(&e.to) {
                path.push(e.to);
                walk(g, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(g, &mut vec![src], &mut out);
    out
}

pub fn free_flow_cost(g: &BuildingGraph, path: &[NodeIx]) -> f64 {
    path.windows(2)
        .map(|w| {
            g.edges()
                .iter()
                .filter(|e| e.from == w[0] && e.to == w[1])
                .map(|e| e.free_transit_time)
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Admission by linear scan over the ledger's residual capacity.
pub fn scan_admission(ledger: &ReservationLedger, v: NodeIx, t: f64) -> f64 {
    let delta = ledger.delta();
    let first = (t / delta + 1e-9).floor() as u64;
    let mut s = first;
    while ledger.residual(v, TimeStep(s)).unwrap() == 0 {
        s += 1;
    }
    if s == first {
        t
    } else {
        s as f64 * delta
    }
}

/// Exit time of `path` departing at `depart`, holding before full cells.
pub fn timed_exit(
    g: &BuildingGraph,
    ledger: &ReservationLedger,
    path: &[NodeIx],
    depart: TimeStep,
) -> f64 {
    let delta = ledger.delta();
    let mut t = scan_admission(ledger, path[0], depart.0 as f64 * delta);
    for w in path.windows(2) {
        let e = g
            .edges()
            .iter()
            .find(|e| e.from == w[0] && e.to == w[1])
            .unwrap();
        t = scan_admission(ledger, w[1], t + e.free_transit_time);
    }
    t
}

/// Optimal exit step over all simple paths.
pub fn exhaustive_exit_step(
    g: &BuildingGraph,
    ledger: &ReservationLedger,
    src: NodeIx,
    depart: TimeStep,
) -> u64 {
    simple_exit_paths(g, src)
        .iter()
        .map(|p| timed_exit(g, ledger, p, depart))
        .map(|t| TimeStep::of(t, ledger.delta()).0)
        .min()
        .unwrap()
}

/// Fills random cells, never beyond capacity.
pub fn random_ledger<R: Rng>(
    g: &BuildingGraph,
    delta: f64,
    fills: usize,
    horizon: u64,
    rng: &mut R,
) -> ReservationLedger {
    let mut ledger = ReservationLedger::new(g, delta).unwrap();
    for _ in 0..fills {
        let v = rng.gen_range(0..g.node_count());
        let s = TimeStep(rng.gen_range(0..horizon));
        if ledger.residual(v, s).unwrap() > 0 {
            ledger.reserve(v, s).unwrap();
        }
    }
    ledger
}

pub fn non_exits(g: &BuildingGraph) -> Vec<NodeIx> {
    (0..g.node_count()).filter(|&v| !g.is_exit(v)).collect()
}
