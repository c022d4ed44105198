//! Capacity-constrained route planning.
//!
//! Routes are assigned one evacuee at a time: the evacuee who can reach an
//! exit the earliest given the current congestion forecast gets its route,
//! and one unit of capacity is reserved at every node of that route at the
//! step covering the expected arrival. Later searches see those reservations
//! as holding delays.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cpn::{CpnConfig, CpnEngine, CpnError};
use crate::graph::{BuildingGraph, GraphError, NodeIx};
use crate::ledger::{LedgerError, ReservationLedger, TimeStep};
use crate::search;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("no exit reachable from node `{0}`")]
    Unreachable(String),
    #[error("evacuee {0} starts on an exit")]
    StartsOnExit(u32),
    #[error("no evacuees to plan")]
    NoEvacuees,
    #[error("route for evacuee {0} is not a connected path ending at an exit")]
    BadRoute(u32),
    #[error("invalid lower-bound input: {0}")]
    InvalidBound(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Cpn(#[from] CpnError),
    #[error("malformed plan document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvacueeSpec {
    pub id: u32,
    pub start: NodeIx,
    #[serde(default)]
    pub available_from: TimeStep,
}

impl EvacueeSpec {
    pub fn new(id: u32, start: NodeIx) -> Self {
        Self {
            id,
            start,
            available_from: TimeStep(0),
        }
    }
}

/// One node of a route with its scheduled admission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    pub node: NodeIx,
    pub step: TimeStep,
    pub time_s: f64,
}

/// A source route: the whole path is fixed at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutePlan {
    pub evacuee: u32,
    pub hops: Vec<Hop>,
    pub exit: NodeIx,
    pub exit_step: TimeStep,
}

impl RoutePlan {
    pub(crate) fn from_timed(
        evacuee: u32,
        nodes: Vec<NodeIx>,
        times: Vec<f64>,
        delta: f64,
    ) -> Self {
        let hops: Vec<Hop> = nodes
            .into_iter()
            .zip(times)
            .map(|(node, time_s)| Hop {
                node,
                step: TimeStep::of(time_s, delta),
                time_s,
            })
            .collect();
        let last = *hops.last().expect("route has at least one hop");
        Self {
            evacuee,
            exit: last.node,
            exit_step: last.step,
            hops,
        }
    }

    pub fn with_evacuee(mut self, id: u32) -> Self {
        self.evacuee = id;
        self
    }

    pub fn start(&self) -> NodeIx {
        self.hops[0].node
    }

    pub fn exit_time(&self) -> f64 {
        self.hops.last().expect("route has at least one hop").time_s
    }

    pub fn nodes(&self) -> impl DoubleEndedIterator<Item = NodeIx> + ExactSizeIterator + '_ {
        self.hops.iter().map(|h| h.node)
    }

    /// Checks the structural invariants against `g`.
    pub fn is_consistent(&self, g: &BuildingGraph) -> bool {
        !self.hops.is_empty()
            && self.hops.windows(2).all(|w| {
                g.edge_between(w[0].node, w[1].node).is_some()
                    && w[0].step <= w[1].step
                    && w[0].time_s <= w[1].time_s
            })
            && g.is_exit(self.exit)
            && self.hops.last().map(|h| h.node) == Some(self.exit)
    }
}

/// Strategy used to find the congestion-aware quickest route.
pub trait RouteSearch {
    fn quickest_route(
        &mut self,
        g: &BuildingGraph,
        ledger: &ReservationLedger,
        start: NodeIx,
        depart: TimeStep,
    ) -> Result<RoutePlan, PlanError>;
}

/// Time-dependent Dijkstra over the reservation forecast.
#[derive(Debug, Clone, Copy, Default)]
pub struct CongestionDijkstra;

impl RouteSearch for CongestionDijkstra {
    fn quickest_route(
        &mut self,
        g: &BuildingGraph,
        ledger: &ReservationLedger,
        start: NodeIx,
        depart: TimeStep,
    ) -> Result<RoutePlan, PlanError> {
        quickest_route(g, ledger, start, depart)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SearchBackend {
    #[default]
    Dijkstra,
    Cpn(CpnConfig),
}

impl SearchBackend {
    pub fn name(&self) -> &'static str {
        match self {
            SearchBackend::Dijkstra => "dijkstra",
            SearchBackend::Cpn(_) => "cpn",
        }
    }
}

/// Earliest-exit route from `start` leaving at the beginning of `depart`.
///
/// Walking an edge takes its free transit time; reaching a node whose step is
/// fully reserved holds the evacuee until the first step with spare capacity.
/// The ledger is not modified.
pub fn quickest_route(
    g: &BuildingGraph,
    ledger: &ReservationLedger,
    start: NodeIx,
    depart: TimeStep,
) -> Result<RoutePlan, PlanError> {
    if start >= g.node_count() {
        return Err(GraphError::UnknownNode(format!("#{start}")).into());
    }
    let t0 = ledger.admission_time(start, depart.start(ledger.delta()))?;
    let found = search::earliest_arrival(g, start, t0, |_, e, t| {
        ledger
            .admission_time(e.to, t + e.free_transit_time)
            .expect("ledger sized for graph")
    });
    let (nodes, times) = found.ok_or_else(|| PlanError::Unreachable(g.node(start).id.clone()))?;
    Ok(RoutePlan::from_timed(0, nodes, times, ledger.delta()))
}

/// Times a fixed node sequence under the forecast, holds included.
pub fn time_path(
    g: &BuildingGraph,
    ledger: &ReservationLedger,
    path: &[NodeIx],
    depart: TimeStep,
) -> Result<RoutePlan, PlanError> {
    let (&first, rest) = path.split_first().ok_or(PlanError::BadRoute(0))?;
    let mut t = ledger.admission_time(first, depart.start(ledger.delta()))?;
    let mut times = vec![t];
    let mut prev = first;
    for &v in rest {
        let e = g.edge_between(prev, v).ok_or(PlanError::BadRoute(0))?;
        t = ledger.admission_time(v, t + e.free_transit_time)?;
        times.push(t);
        prev = v;
    }
    if !g.is_exit(prev) {
        return Err(PlanError::BadRoute(0));
    }
    Ok(RoutePlan::from_timed(
        0,
        path.to_vec(),
        times,
        ledger.delta(),
    ))
}

/// Result of a full planning session.
#[derive(Debug, Clone)]
pub struct Planning {
    /// Plans in assignment order.
    pub plans: Vec<RoutePlan>,
    pub ledger: ReservationLedger,
}

impl Planning {
    pub fn plan_for(&self, evacuee: u32) -> Option<&RoutePlan> {
        self.plans.iter().find(|p| p.evacuee == evacuee)
    }
}

/// Assigns a route to every evacuee, earliest exit first.
pub fn plan_all(
    g: &BuildingGraph,
    evacuees: &[EvacueeSpec],
    delta: f64,
    backend: &SearchBackend,
) -> Result<Planning, PlanError> {
    match backend {
        SearchBackend::Dijkstra => plan_with(g, evacuees, delta, &mut CongestionDijkstra),
        SearchBackend::Cpn(cfg) => {
            let mut engine = CpnEngine::new(g, cfg.clone());
            plan_with(g, evacuees, delta, &mut engine)
        }
    }
}

/// [`plan_all`] with a caller-provided search strategy.
pub fn plan_with<S: RouteSearch>(
    g: &BuildingGraph,
    evacuees: &[EvacueeSpec],
    delta: f64,
    search: &mut S,
) -> Result<Planning, PlanError> {
    if evacuees.is_empty() {
        return Err(PlanError::NoEvacuees);
    }
    let mut ledger = ReservationLedger::new(g, delta)?;
    // evacuees sharing start and departure share a route; queue them by id
    let mut groups: BTreeMap<(NodeIx, TimeStep), VecDeque<u32>> = BTreeMap::new();
    for ev in evacuees {
        if ev.start >= g.node_count() {
            return Err(GraphError::UnknownNode(format!("#{}", ev.start)).into());
        }
        if g.is_exit(ev.start) {
            return Err(PlanError::StartsOnExit(ev.id));
        }
        groups
            .entry((ev.start, ev.available_from))
            .or_default()
            .push_back(ev.id);
    }
    for q in groups.values_mut() {
        q.make_contiguous().sort_unstable();
    }

    let mut memo: BTreeMap<(NodeIx, TimeStep), RoutePlan> = BTreeMap::new();
    let mut plans = Vec::with_capacity(evacuees.len());
    while !groups.is_empty() {
        let mut best: Option<((NodeIx, TimeStep), f64, u32)> = None;
        for (&key, queue) in &groups {
            if let Entry::Vacant(slot) = memo.entry(key) {
                slot.insert(search.quickest_route(g, &ledger, key.0, key.1)?);
            }
            let t = memo[&key].exit_time();
            let id = queue[0];
            let better = match best {
                None => true,
                Some((_, bt, bid)) => t < bt || (t == bt && id < bid),
            };
            if better {
                best = Some((key, t, id));
            }
        }
        let (key, _, id) = best.expect("groups is non-empty");
        let plan = memo[&key].clone().with_evacuee(id);
        for hop in &plan.hops {
            ledger.reserve(hop.node, hop.step)?;
        }
        // a cached route stays optimal unless one of its cells just filled up
        let filled: Vec<(NodeIx, TimeStep)> = plan
            .hops
            .iter()
            .filter(|h| ledger.is_full(h.node, h.step))
            .map(|h| (h.node, h.step))
            .collect();
        if !filled.is_empty() {
            memo.retain(|_, p| !p.hops.iter().any(|h| filled.contains(&(h.node, h.step))));
        }
        let queue = groups.get_mut(&key).expect("key came from groups");
        queue.pop_front();
        if queue.is_empty() {
            groups.remove(&key);
            memo.remove(&key);
        }
        plans.push(plan);
    }
    Ok(Planning { plans, ledger })
}

/// Rebuilds the reservation ledger implied by a set of plans.
pub fn replay_ledger(
    g: &BuildingGraph,
    plans: &[RoutePlan],
    delta: f64,
) -> Result<ReservationLedger, PlanError> {
    let mut ledger = ReservationLedger::new(g, delta)?;
    for p in plans {
        for h in &p.hops {
            ledger.reserve(h.node, h.step)?;
        }
    }
    Ok(ledger)
}

/// Lower bound on the time to push `n` units through a path: the lead time of
/// one unit plus `n - 1` bottleneck intervals.
pub fn chen_hung_bound(lead_time_s: f64, t_max_s: f64, n: u64) -> Result<f64, PlanError> {
    if n == 0 {
        return Err(PlanError::InvalidBound("n must be at least 1".into()));
    }
    if !(t_max_s > 0.0) || !(lead_time_s >= 0.0) {
        return Err(PlanError::InvalidBound(format!(
            "lead {lead_time_s} s, t_max {t_max_s} s"
        )));
    }
    Ok(lead_time_s + (n - 1) as f64 * t_max_s)
}

/// Bound for `n` evacuees split evenly over `k` identical parallel paths.
pub fn parallel_bound(lead_time_s: f64, t_max_s: f64, n: u64, k: u64) -> Result<f64, PlanError> {
    if k == 0 {
        return Err(PlanError::InvalidBound("no parallel paths".into()));
    }
    chen_hung_bound(lead_time_s, t_max_s, n.div_ceil(k))
}

#[derive(Debug, Serialize, Deserialize)]
struct HopDoc {
    node: String,
    step: u64,
    time_s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanDoc {
    evacuee: u32,
    exit: String,
    exit_step: u64,
    hops: Vec<HopDoc>,
}

/// Plan dump: a JSON array of route plans with node ids.
pub fn write_plans_json<W: Write>(
    g: &BuildingGraph,
    plans: &[RoutePlan],
    sink: W,
) -> Result<(), PlanError> {
    let docs: Vec<PlanDoc> = plans
        .iter()
        .map(|p| PlanDoc {
            evacuee: p.evacuee,
            exit: g.node(p.exit).id.clone(),
            exit_step: p.exit_step.0,
            hops: p
                .hops
                .iter()
                .map(|h| HopDoc {
                    node: g.node(h.node).id.clone(),
                    step: h.step.0,
                    time_s: h.time_s,
                })
                .collect(),
        })
        .collect();
    serde_json::to_writer_pretty(sink, &docs)?;
    Ok(())
}

pub fn read_plans_json(g: &BuildingGraph, text: &str) -> Result<Vec<RoutePlan>, PlanError> {
    let docs: Vec<PlanDoc> = serde_json::from_str(text)?;
    docs.into_iter()
        .map(|d| {
            let hops = d
                .hops
                .iter()
                .map(|h| {
                    Ok(Hop {
                        node: g.lookup(&h.node)?,
                        step: TimeStep(h.step),
                        time_s: h.time_s,
                    })
                })
                .collect::<Result<Vec<_>, GraphError>>()?;
            let plan = RoutePlan {
                evacuee: d.evacuee,
                exit: g.lookup(&d.exit)?,
                exit_step: TimeStep(d.exit_step),
                hops,
            };
            if plan.is_consistent(g) {
                Ok(plan)
            } else {
                Err(PlanError::BadRoute(d.evacuee))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeSpec, Node};

    fn node(id: &str, cap: u32, exit: bool) -> Node {
        Node {
            id: id.into(),
            label: String::new(),
            floor: 0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
            service_capacity: cap,
            is_exit: exit,
        }
    }

    fn timed(from: NodeIx, to: NodeIx, t: f64) -> EdgeSpec {
        EdgeSpec {
            from,
            to,
            length: t * 1.4,
            free_transit_time: Some(t),
        }
    }

    /// S -> {A, B} -> X, all edges 5 s, mid nodes admit one person per 10 s step.
    fn two_paths() -> BuildingGraph {
        BuildingGraph::new(
            vec![
                node("S", 100, false),
                node("A", 1, false),
                node("B", 1, false),
                node("X", 100, true),
            ],
            vec![
                timed(0, 1, 5.0),
                timed(1, 3, 5.0),
                timed(0, 2, 5.0),
                timed(2, 3, 5.0),
            ],
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn empty_ledger_matches_free_flow() {
        let g = two_paths();
        let l = ReservationLedger::new(&g, 10.0).unwrap();
        let p = quickest_route(&g, &l, 0, TimeStep(0)).unwrap();
        let ff = g.free_flow_shortest_path(0).unwrap();
        assert_eq!(p.nodes().collect::<Vec<_>>(), ff.nodes);
        assert_eq!(p.exit_time(), ff.cost);
        assert_eq!(p.exit_step, TimeStep::of(ff.cost, 10.0));
        assert!(p.is_consistent(&g));
    }

    #[test]
    fn congested_mid_node_diverts() {
        let g = two_paths();
        let mut l = ReservationLedger::new(&g, 10.0).unwrap();
        for s in 0..10 {
            l.reserve(1, TimeStep(s)).unwrap();
        }
        let p = quickest_route(&g, &l, 0, TimeStep(0)).unwrap();
        assert_eq!(p.nodes().collect::<Vec<_>>(), vec![0, 2, 3]);
        assert_eq!(l.total_reserved(), 10, "search must not reserve");
    }

    #[test]
    fn hold_delays_arrival_to_open_step() {
        let g = two_paths();
        let mut l = ReservationLedger::new(&g, 10.0).unwrap();
        l.reserve(1, TimeStep(0)).unwrap();
        l.reserve(2, TimeStep(0)).unwrap();
        let p = quickest_route(&g, &l, 0, TimeStep(0)).unwrap();
        // held until step 1 opens at t = 10 s, then 5 s to the exit
        assert_eq!(p.hops[1].time_s, 10.0);
        assert_eq!(p.exit_time(), 15.0);
        assert_eq!(p.exit_step, TimeStep(1));
    }

    #[test]
    fn single_evacuee_plan_is_quickest_route() {
        let g = two_paths();
        let l = ReservationLedger::new(&g, 10.0).unwrap();
        let direct = quickest_route(&g, &l, 0, TimeStep(0)).unwrap();
        let planning = plan_all(
            &g,
            &[EvacueeSpec::new(7, 0)],
            10.0,
            &SearchBackend::Dijkstra,
        )
        .unwrap();
        assert_eq!(planning.plans, vec![direct.with_evacuee(7)]);
    }

    #[test]
    fn four_evacuees_split_two_and_two() {
        let g = two_paths();
        let evs: Vec<_> = (0..4).map(|i| EvacueeSpec::new(i, 0)).collect();
        let planning = plan_all(&g, &evs, 10.0, &SearchBackend::Dijkstra).unwrap();
        let via_a = planning
            .plans
            .iter()
            .filter(|p| p.hops[1].node == 1)
            .count();
        assert_eq!(via_a, 2);
        let makespan = planning
            .plans
            .iter()
            .map(|p| p.exit_time())
            .fold(0.0, f64::max);
        assert_eq!(makespan, 15.0);
        // ledger replay reproduces the planning ledger
        assert_eq!(
            replay_ledger(&g, &planning.plans, 10.0).unwrap(),
            planning.ledger
        );
        // assignment order is earliest exit first
        assert!(planning
            .plans
            .windows(2)
            .all(|w| w[0].exit_time() <= w[1].exit_time()));
    }

    #[test]
    fn rejects_exit_start_and_empty_input() {
        let g = two_paths();
        assert!(matches!(
            plan_all(
                &g,
                &[EvacueeSpec::new(1, 3)],
                10.0,
                &SearchBackend::Dijkstra
            ),
            Err(PlanError::StartsOnExit(1))
        ));
        assert!(matches!(
            plan_all(&g, &[], 10.0, &SearchBackend::Dijkstra),
            Err(PlanError::NoEvacuees)
        ));
    }

    #[test]
    fn bound_arithmetic() {
        assert_eq!(chen_hung_bound(30.0, 2.0, 1).unwrap(), 30.0);
        assert_eq!(chen_hung_bound(30.0, 2.0, 11).unwrap(), 50.0);
        assert!(chen_hung_bound(30.0, 2.0, 0).is_err());
        assert!(chen_hung_bound(30.0, 0.0, 3).is_err());
        assert_eq!(parallel_bound(30.0, 2.0, 11, 2).unwrap(), 40.0);
    }

    #[test]
    fn plan_json_round_trip() {
        let g = two_paths();
        let evs: Vec<_> = (0..3).map(|i| EvacueeSpec::new(i, 0)).collect();
        let planning = plan_all(&g, &evs, 10.0, &SearchBackend::Dijkstra).unwrap();
        let mut buf = Vec::new();
        write_plans_json(&g, &planning.plans, &mut buf).unwrap();
        let back = read_plans_json(&g, std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, planning.plans);
    }
}
