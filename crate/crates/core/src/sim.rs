//! Discrete-event egress simulator.
//!
//! Evacuees walk edges at a personal constant speed and queue at node
//! entrances. A node admits one person per service interval and never more
//! than its per-step capacity within one time-step; waiting evacuees are
//! admitted first come, first served. Events at equal times are processed in
//! evacuee id order.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{BuildingGraph, NodeIx};
use crate::ledger::TimeStep;
use crate::planner::{EvacueeSpec, RoutePlan};
use crate::signs::{Facing, SignError, SignMounting, SignSchedule};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("time-step duration must be positive, got {0}")]
    BadDelta(f64),
    #[error("invalid mobility model: mean {mean} m/s, half-width {half_width} m/s")]
    BadMobility { mean: f64, half_width: f64 },
    #[error("evacuee {0} starts at an unknown node")]
    UnknownStart(u32),
    #[error("no route plan for evacuee {0}")]
    MissingPlan(u32),
    #[error("route plan for evacuee {0} does not start at its start node")]
    PlanMismatch(u32),
}

/// Walking speeds uniform on `[mean - half_width, mean + half_width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityModel {
    pub mean: f64,
    pub half_width: f64,
}

impl Default for MobilityModel {
    fn default() -> Self {
        Self {
            mean: 1.4,
            half_width: 0.1,
        }
    }
}

impl MobilityModel {
    pub fn new(mean: f64, half_width: f64) -> Result<Self, SimError> {
        let m = Self { mean, half_width };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.mean.is_finite()
            && self.half_width.is_finite()
            && self.half_width >= 0.0
            && self.mean - self.half_width > 0.0
        {
            Ok(())
        } else {
            Err(SimError::BadMobility {
                mean: self.mean,
                half_width: self.half_width,
            })
        }
    }

    pub fn max_speed(&self) -> f64 {
        self.mean + self.half_width
    }
}

pub fn mobility_sample<R: Rng>(model: &MobilityModel, rng: &mut R) -> f64 {
    if model.half_width == 0.0 {
        model.mean
    } else {
        rng.gen_range(model.mean - model.half_width..=model.mean + model.half_width)
    }
}

/// How evacuees pick their next hop.
#[derive(Debug, Clone, Copy)]
pub enum Policy<'a> {
    /// Follow a precomputed source route per evacuee.
    AssignedRoute(&'a [RoutePlan]),
    /// Free-flow shortest path, never re-routed.
    ShortestPath,
    /// Read the dynamic sign at every node on admission.
    FollowSigns(&'a SignSchedule),
}

impl Policy<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::AssignedRoute(_) => "assigned",
            Policy::ShortestPath => "shortest",
            Policy::FollowSigns(_) => "signs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub delta: f64,
    pub mobility: MobilityModel,
    pub seed: u64,
    /// Keep the full arrive/queue/admit/exit event log.
    pub record_events: bool,
}

impl SimConfig {
    pub fn new(delta: f64, seed: u64) -> Self {
        Self {
            delta,
            mobility: MobilityModel::default(),
            seed,
            record_events: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Arrive,
    Queue,
    Admit,
    Exit,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Arrive => "arrive",
            EventKind::Queue => "queue",
            EventKind::Admit => "admit",
            EventKind::Exit => "exit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryEvent {
    pub time_s: f64,
    pub evacuee: u32,
    pub node: NodeIx,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// The sign had nothing for this step; a neighbouring step was shown.
    OffSchedule,
    /// The sign at this node was never scheduled.
    Unscheduled,
    /// The sign pointed back to a node already visited.
    Loop,
    /// No sign faced the side the evacuee came from; the shared sign was read.
    UnplannedApproach,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub time_s: f64,
    pub evacuee: u32,
    pub node: NodeIx,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvacueeOutcome {
    pub id: u32,
    pub start: NodeIx,
    pub speed: f64,
    /// Admission time at every node visited, start node first.
    pub path: Vec<(NodeIx, f64)>,
    pub exit_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub delta: f64,
    /// In the order the evacuees were given.
    pub outcomes: Vec<EvacueeOutcome>,
    pub makespan: f64,
    /// Every admission `(time, evacuee, node)` in event order.
    pub admissions: Vec<(f64, u32, NodeIx)>,
    /// Evacuees per staircase, by the last staircase each one used.
    pub staircase_usage: BTreeMap<String, usize>,
    pub violations: Vec<Violation>,
    pub stuck: Vec<u32>,
    pub events: Vec<TrajectoryEvent>,
}

impl SimResult {
    pub fn exit_times(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        self.outcomes.iter().map(|o| o.exit_time)
    }

    /// Time by which every evacuee who started on `floor` has been admitted to
    /// a node on a lower floor. `None` if nobody started there.
    pub fn floor_clearance_time(&self, g: &BuildingGraph, floor: i32) -> Option<f64> {
        self.outcomes
            .iter()
            .filter(|o| g.node(o.start).floor == floor)
            .map(|o| {
                o.path
                    .iter()
                    .find(|(v, _)| g.node(*v).floor < floor)
                    .map_or(f64::INFINITY, |&(_, t)| t)
            })
            .reduce(f64::max)
    }

    /// Admissions per `(node, step)`.
    pub fn admission_counts(&self) -> BTreeMap<(NodeIx, TimeStep), u32> {
        let mut counts = BTreeMap::new();
        for &(t, _, v) in &self.admissions {
            *counts.entry((v, TimeStep::of(t, self.delta))).or_insert(0) += 1;
        }
        counts
    }

    /// Trajectory log: `time_s,evacuee_id,node_id,event`.
    pub fn write_trajectory_csv<W: Write>(&self, g: &BuildingGraph, sink: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["time_s", "evacuee_id", "node_id", "event"])?;
        for e in &self.events {
            w.write_record([
                format!("{:.3}", e.time_s),
                e.evacuee.to_string(),
                g.node(e.node).id.clone(),
                e.kind.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Per-evacuee summary: `evacuee_id,start,speed,exit_time_s,hops`.
    pub fn write_outcomes_csv<W: Write>(&self, g: &BuildingGraph, sink: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["evacuee_id", "start", "speed", "exit_time_s", "hops"])?;
        for o in &self.outcomes {
            w.write_record([
                o.id.to_string(),
                g.node(o.start).id.clone(),
                format!("{:.4}", o.speed),
                o.exit_time
                    .map_or_else(|| "stuck".into(), |t| format!("{t:.3}")),
                o.path.len().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Staircase an evacuee descended by: the last staircase node on its path.
pub fn staircase_of(
    stairs: &BTreeMap<String, Vec<NodeIx>>,
    path: impl DoubleEndedIterator<Item = NodeIx>,
) -> Option<&str> {
    for v in path.rev() {
        if let Some((name, _)) = stairs.iter().find(|(_, nodes)| nodes.contains(&v)) {
            return Some(name);
        }
    }
    None
}

struct NodeServer {
    interval: f64,
    step_capacity: u32,
    last: Option<f64>,
    counts: BTreeMap<TimeStep, u32>,
}

impl NodeServer {
    fn admit(&mut self, arrival: f64, delta: f64) -> f64 {
        let mut t = match self.last {
            Some(l) => arrival.max(l + self.interval),
            None => arrival,
        };
        loop {
            let s = TimeStep::of(t, delta);
            let c = self.counts.entry(s).or_insert(0);
            if *c < self.step_capacity {
                *c += 1;
                self.last = Some(t);
                return t;
            }
            t = TimeStep(s.0 + 1).start(delta);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    time: f64,
    evacuee: usize,
    node: NodeIx,
    admit: bool,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.evacuee.cmp(&other.evacuee))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

enum Steering {
    Fixed {
        nodes: Vec<NodeIx>,
        pos: usize,
    },
    Signs {
        visited: Vec<bool>,
        prev: Option<NodeIx>,
    },
}

struct FreeFlowCache<'g> {
    g: &'g BuildingGraph,
    routes: Vec<Option<Vec<NodeIx>>>,
}

impl<'g> FreeFlowCache<'g> {
    fn new(g: &'g BuildingGraph) -> Self {
        Self {
            g,
            routes: vec![None; g.node_count()],
        }
    }

    fn route(&mut self, v: NodeIx) -> &[NodeIx] {
        let g = self.g;
        self.routes[v].get_or_insert_with(|| {
            g.free_flow_shortest_path(v)
                .map(|r| r.nodes)
                .unwrap_or_else(|_| vec![v])
        })
    }
}

/// Runs one evacuation to completion.
pub fn run(
    g: &BuildingGraph,
    evacuees: &[EvacueeSpec],
    policy: Policy<'_>,
    cfg: &SimConfig,
) -> Result<SimResult, SimError> {
    let delta = cfg.delta;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(SimError::BadDelta(delta));
    }
    cfg.mobility.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut free_flow = FreeFlowCache::new(g);

    let plan_index: BTreeMap<u32, &RoutePlan> = match policy {
        Policy::AssignedRoute(plans) => plans.iter().map(|p| (p.evacuee, p)).collect(),
        _ => BTreeMap::new(),
    };
    let mut outcomes = Vec::with_capacity(evacuees.len());
    let mut steering = Vec::with_capacity(evacuees.len());
    for ev in evacuees {
        if ev.start >= g.node_count() {
            return Err(SimError::UnknownStart(ev.id));
        }
        let steer = match policy {
            Policy::AssignedRoute(_) => {
                let plan = plan_index.get(&ev.id).ok_or(SimError::MissingPlan(ev.id))?;
                if plan.start() != ev.start {
                    return Err(SimError::PlanMismatch(ev.id));
                }
                Steering::Fixed {
                    nodes: plan.nodes().collect(),
                    pos: 0,
                }
            }
            Policy::ShortestPath => Steering::Fixed {
                nodes: free_flow.route(ev.start).to_vec(),
                pos: 0,
            },
            Policy::FollowSigns(_) => Steering::Signs {
                visited: vec![false; g.node_count()],
                prev: None,
            },
        };
        steering.push(steer);
        outcomes.push(EvacueeOutcome {
            id: ev.id,
            start: ev.start,
            speed: mobility_sample(&cfg.mobility, &mut rng),
            path: Vec::new(),
            exit_time: None,
        });
    }

    let mut servers: Vec<NodeServer> = (0..g.node_count())
        .map(|v| NodeServer {
            interval: g.service_interval(v),
            step_capacity: g.step_capacity(v, delta),
            last: None,
            counts: BTreeMap::new(),
        })
        .collect();

    // evacuees are ordered by id for tie-breaking
    let mut order: Vec<usize> = (0..evacuees.len()).collect();
    order.sort_by_key(|&i| (evacuees[i].id, i));
    let mut rank = vec![0; evacuees.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }

    let mut heap = BinaryHeap::new();
    for (i, ev) in evacuees.iter().enumerate() {
        heap.push(Reverse(Event {
            time: ev.available_from.start(delta),
            evacuee: rank[i],
            node: ev.start,
            admit: false,
        }));
    }

    let mut admissions = Vec::new();
    let mut violations = Vec::new();
    let mut stuck = Vec::new();
    let mut events = Vec::new();
    let log = |events: &mut Vec<TrajectoryEvent>, time_s, evacuee, node, kind| {
        if cfg.record_events {
            events.push(TrajectoryEvent {
                time_s,
                evacuee,
                node,
                kind,
            });
        }
    };

    while let Some(Reverse(ev)) = heap.pop() {
        let i = order[ev.evacuee];
        let id = evacuees[i].id;
        let v = ev.node;
        if !ev.admit {
            log(&mut events, ev.time, id, v, EventKind::Arrive);
            let at = servers[v].admit(ev.time, delta);
            if at > ev.time {
                log(&mut events, ev.time, id, v, EventKind::Queue);
            }
            heap.push(Reverse(Event {
                time: at,
                admit: true,
                ..ev
            }));
            continue;
        }

        let t = ev.time;
        log(&mut events, t, id, v, EventKind::Admit);
        admissions.push((t, id, v));
        outcomes[i].path.push((v, t));
        if g.is_exit(v) {
            log(&mut events, t, id, v, EventKind::Exit);
            outcomes[i].exit_time = Some(t);
            continue;
        }

        let next = match &mut steering[i] {
            Steering::Fixed { nodes, pos } => {
                *pos += 1;
                nodes.get(*pos).copied()
            }
            Steering::Signs { visited, prev } => {
                visited[v] = true;
                let facing = prev.map_or(Facing::Start, Facing::From);
                *prev = Some(v);
                let schedule = match policy {
                    Policy::FollowSigns(s) => s,
                    _ => unreachable!("sign steering only under FollowSigns"),
                };
                let mut violation = |kind| {
                    violations.push(Violation {
                        time_s: t,
                        evacuee: id,
                        node: v,
                        kind,
                    })
                };
                let shown = match schedule.direction_seen(v, facing, t) {
                    Ok(reading) => {
                        if reading.fallback_from.is_some() {
                            violation(ViolationKind::OffSchedule);
                        }
                        if schedule.mounting() == SignMounting::PerApproach
                            && reading.facing != facing
                        {
                            violation(ViolationKind::UnplannedApproach);
                        }
                        Some(reading.direction)
                    }
                    Err(SignError::NoSchedule(_)) => {
                        violation(ViolationKind::Unscheduled);
                        free_flow.route(v).get(1).copied()
                    }
                    Err(SignError::BadDelta(_)) => None,
                };
                let open = |d: NodeIx| !visited[d] && g.edge_between(v, d).is_some();
                // the most used unvisited direction of the same sign step
                let alternative = || {
                    schedule.blocks_seen(v, facing, t).ok().and_then(|blocks| {
                        blocks
                            .iter()
                            .filter(|b| open(b.direction))
                            .max_by(|a, b| {
                                a.planned_count
                                    .cmp(&b.planned_count)
                                    .then(b.direction.cmp(&a.direction))
                            })
                            .map(|b| b.direction)
                    })
                };
                match shown {
                    Some(d) if open(d) => Some(d),
                    Some(_) if alternative().is_some() => {
                        violation(ViolationKind::Loop);
                        alternative()
                    }
                    _ => {
                        // give up on the signs: walk the free-flow route from here
                        violation(ViolationKind::Loop);
                        let nodes = free_flow.route(v).to_vec();
                        let next = nodes.get(1).copied();
                        steering[i] = Steering::Fixed { nodes, pos: 1 };
                        next
                    }
                }
            }
        };
        match next.and_then(|u| g.edge_between(v, u)) {
            Some(e) => heap.push(Reverse(Event {
                time: t + e.length / outcomes[i].speed,
                evacuee: ev.evacuee,
                node: e.to,
                admit: false,
            })),
            None => stuck.push(id),
        }
    }

    let makespan = outcomes
        .iter()
        .filter_map(|o| o.exit_time)
        .fold(0.0, f64::max);
    let stairs = g.staircases();
    let mut staircase_usage: BTreeMap<String, usize> =
        stairs.keys().map(|k| (k.clone(), 0)).collect();
    for o in &outcomes {
        if let Some(name) = staircase_of(&stairs, o.path.iter().map(|p| p.0)) {
            *staircase_usage.get_mut(name).expect("known staircase") += 1;
        }
    }
    stuck.sort_unstable();
    Ok(SimResult {
        delta,
        outcomes,
        makespan,
        admissions,
        staircase_usage,
        violations,
        stuck,
        events,
    })
}

/// Re-times assigned routes under the simulator's own queueing at nominal
/// walking speed. The routes are kept; only hop times change, so the result
/// is what a fixed-speed crowd following the plans would actually do.
pub fn forecast_plans(
    g: &BuildingGraph,
    evacuees: &[EvacueeSpec],
    plans: &[RoutePlan],
    delta: f64,
) -> Result<Vec<RoutePlan>, SimError> {
    let cfg = SimConfig {
        delta,
        mobility: MobilityModel::new(crate::graph::NOMINAL_SPEED, 0.0)?,
        seed: 0,
        record_events: false,
    };
    let result = run(g, evacuees, Policy::AssignedRoute(plans), &cfg)?;
    let mut out = Vec::with_capacity(plans.len());
    for o in result.outcomes {
        let (nodes, times) = o.path.into_iter().unzip();
        out.push(RoutePlan::from_timed(o.id, nodes, times, delta));
    }
    Ok(out)
}
