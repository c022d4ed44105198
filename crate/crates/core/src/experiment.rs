//! Scenario sweeps: seeded replications over headcount, time-step and policy,
//! summarized as box statistics with the matching lower bound.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{BuildingGraph, GraphError, NodeIx};
use crate::planner::{parallel_bound, plan_all, EvacueeSpec, PlanError, RoutePlan, SearchBackend};
use crate::signs::{compile_schedules_mounted, SignError, SignMounting};
use crate::sim::{self, staircase_of, MobilityModel, Policy, SimConfig, SimError, SimResult};
use crate::synth::{synthesize, BuildingParams};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Sign(#[from] SignError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("split error needs exactly two staircases, found {0}")]
    StaircaseCount(usize),
    #[error("no evacuee used a staircase")]
    NoStaircaseTraffic,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    AssignedRoute,
    ShortestPath,
    FollowSigns,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [
        PolicyKind::AssignedRoute,
        PolicyKind::ShortestPath,
        PolicyKind::FollowSigns,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::AssignedRoute => "assigned",
            PolicyKind::ShortestPath => "shortest",
            PolicyKind::FollowSigns => "signs",
        }
    }

    fn needs_plan(self) -> bool {
        self != PolicyKind::ShortestPath
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "assigned" | "assigned_route" => Ok(PolicyKind::AssignedRoute),
            "shortest" | "shortest_path" => Ok(PolicyKind::ShortestPath),
            "signs" | "follow_signs" => Ok(PolicyKind::FollowSigns),
            _ => Err(format!("unknown policy '{s}' (assigned, shortest, signs)")),
        }
    }
}

/// Which arrival times the sign schedules are compiled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignTiming {
    /// The planner's reservation times.
    Planned,
    /// The planned routes re-timed under first-come, first-served queueing
    /// at nominal speed (see [`sim::forecast_plans`]).
    #[default]
    Forecast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSource {
    Synthetic(BuildingParams),
    File { path: PathBuf },
}

impl GraphSource {
    pub fn load(&self) -> Result<BuildingGraph, ExperimentError> {
        Ok(match self {
            GraphSource::Synthetic(p) => synthesize(p)?,
            GraphSource::File { path } => BuildingGraph::load(std::fs::File::open(path)?)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StartDistribution {
    /// Uniformly random rooms on `Scenario::first_floor`.
    AllFirstFloor,
    /// Evacuee `i` starts at `nodes[i % len]`.
    Explicit { nodes: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub graph: GraphSource,
    pub headcounts: Vec<usize>,
    pub start: StartDistribution,
    pub first_floor: i32,
    pub policies: Vec<PolicyKind>,
    pub deltas: Vec<f64>,
    pub replications: u32,
    pub base_seed: u64,
    pub backend: SearchBackend,
    pub mobility: MobilityModel,
    pub sign_mounting: SignMounting,
    pub sign_timing: SignTiming,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            graph: GraphSource::Synthetic(BuildingParams::default()),
            headcounts: vec![25, 50, 100],
            start: StartDistribution::AllFirstFloor,
            first_floor: 1,
            policies: PolicyKind::ALL.to_vec(),
            deltas: vec![9.0, 18.0, 36.0, 72.0, 144.0],
            replications: 25,
            base_seed: 1,
            backend: SearchBackend::Dijkstra,
            mobility: MobilityModel::default(),
            sign_mounting: SignMounting::PerApproach,
            sign_timing: SignTiming::Forecast,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::InvalidScenario(m.into()));
        if self.replications == 0 {
            return bad("replications must be at least 1");
        }
        if self.deltas.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return bad("every time-step duration must be positive");
        }
        if self.headcounts.contains(&0) {
            return bad("headcounts must be positive");
        }
        if let StartDistribution::Explicit { nodes } = &self.start {
            if nodes.is_empty() {
                return bad("explicit start list is empty");
            }
        }
        self.mobility.validate()?;
        Ok(())
    }

    /// Seed of replication `rep`; shared by every headcount, step and policy.
    pub fn replication_seed(&self, rep: u32) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(u64::from(rep) + 1);
        rng.next_u64()
    }
}

/// Draws start nodes for `n` evacuees.
pub fn draw_starts<R: Rng>(
    g: &BuildingGraph,
    start: &StartDistribution,
    first_floor: i32,
    n: usize,
    rng: &mut R,
) -> Result<Vec<EvacueeSpec>, ExperimentError> {
    let nodes: Vec<NodeIx> = match start {
        StartDistribution::AllFirstFloor => {
            let on_floor = |want_room: bool| -> Vec<NodeIx> {
                (0..g.node_count())
                    .filter(|&v| {
                        let node = g.node(v);
                        node.floor == first_floor
                            && !node.is_exit
                            && (!want_room || node.label == "room")
                    })
                    .collect()
            };
            let mut rooms = on_floor(true);
            if rooms.is_empty() {
                rooms = on_floor(false);
            }
            if rooms.is_empty() {
                return Err(ExperimentError::InvalidScenario(format!(
                    "no start nodes on floor {first_floor}"
                )));
            }
            (0..n)
                .map(|_| *rooms.choose(rng).expect("non-empty"))
                .collect()
        }
        StartDistribution::Explicit { nodes } => {
            let ixs = nodes
                .iter()
                .map(|id| g.lookup(id))
                .collect::<Result<Vec<_>, _>>()?;
            (0..n).map(|i| ixs[i % ixs.len()]).collect()
        }
    };
    Ok(nodes
        .into_iter()
        .enumerate()
        .map(|(i, v)| EvacueeSpec::new(i as u32, v))
        .collect())
}

/// Lower bound on the makespan of `starts` under `max_speed`.
///
/// Every evacuee must pass one of the cut nodes, each admitting at most one
/// person per service interval: the ground-floor staircase landings when
/// everyone starts upstairs, otherwise the exits.
pub fn makespan_bound(
    g: &BuildingGraph,
    starts: &[NodeIx],
    max_speed: f64,
) -> Result<f64, ExperimentError> {
    if starts.is_empty() {
        return Err(ExperimentError::InvalidScenario("no evacuees".into()));
    }
    let lowest = g.nodes().iter().map(|n| n.floor).min().unwrap_or(0);
    let upstairs = starts.iter().all(|&v| g.node(v).floor > lowest);
    let landings: Vec<NodeIx> = g
        .staircases()
        .values()
        .flatten()
        .copied()
        .filter(|&v| g.node(v).floor == lowest)
        .collect();
    let cut: Vec<NodeIx> = if upstairs && !landings.is_empty() {
        landings
    } else {
        g.exits().to_vec()
    };
    let t_max = cut
        .iter()
        .map(|&v| g.service_interval(v))
        .fold(f64::INFINITY, f64::min);
    let mut lead = f64::INFINITY;
    for &s in starts {
        let d = g
            .distance_to_exit(s)
            .ok_or_else(|| GraphError::Unreachable(g.node(s).id.clone()))?;
        lead = lead.min(d / max_speed);
    }
    Ok(parallel_bound(
        lead,
        t_max,
        starts.len() as u64,
        cut.len() as u64,
    )?)
}

/// Five-number summary, quartiles by inclusive linear interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl BoxStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() || values.iter().any(|v| v.is_nan()) {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    let pos = p * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitError {
    /// Share of planned routes using the first staircase, in [0, 1].
    pub planned_ratio: f64,
    /// Share of simulated evacuees that used it.
    pub realized_ratio: f64,
    /// `realized - planned`, in percentage points.
    pub error_pp: f64,
}

impl SplitError {
    pub fn from_counts(
        planned: (usize, usize),
        realized: (usize, usize),
    ) -> Result<Self, ExperimentError> {
        let ratio = |(a, b): (usize, usize)| {
            if a + b == 0 {
                Err(ExperimentError::NoStaircaseTraffic)
            } else {
                Ok(a as f64 / (a + b) as f64)
            }
        };
        let planned_ratio = ratio(planned)?;
        let realized_ratio = ratio(realized)?;
        Ok(Self {
            planned_ratio,
            realized_ratio,
            error_pp: 100.0 * (realized_ratio - planned_ratio),
        })
    }
}

/// Difference between the simulated and planned use of the first of the two
/// staircases (in name order).
pub fn staircase_split_error(
    g: &BuildingGraph,
    plans: &[RoutePlan],
    result: &SimResult,
) -> Result<SplitError, ExperimentError> {
    let stairs = g.staircases();
    if stairs.len() != 2 {
        return Err(ExperimentError::StaircaseCount(stairs.len()));
    }
    let names: Vec<&str> = stairs.keys().map(String::as_str).collect();
    let mut planned = (0, 0);
    for p in plans {
        match staircase_of(&stairs, p.nodes()) {
            Some(s) if s == names[0] => planned.0 += 1,
            Some(_) => planned.1 += 1,
            None => {}
        }
    }
    let used = |name: &str| result.staircase_usage.get(name).copied().unwrap_or(0);
    SplitError::from_counts(planned, (used(names[0]), used(names[1])))
}

/// Outcome of one simulated replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub headcount: usize,
    pub delta_s: f64,
    pub policy: PolicyKind,
    pub replication: u32,
    pub seed: u64,
    pub makespan_s: f64,
    pub bound_s: f64,
    pub clearance_s: Option<f64>,
    pub split_error_pp: Option<f64>,
    pub violations: usize,
    pub stuck: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub headcount: usize,
    pub delta_s: f64,
    pub policy: PolicyKind,
    pub backend: String,
    pub replications: u32,
    pub base_seed: u64,
    pub makespan: BoxStats,
    pub bound_median_s: f64,
    pub clearance_median_s: Option<f64>,
    pub split_error: Option<BoxStats>,
    pub violations: usize,
    /// Replications whose makespan fell below their bound.
    pub bound_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub version: String,
    pub scenario: Scenario,
    pub seeds: Vec<u64>,
    pub cells: Vec<CellSummary>,
    pub replications: Vec<ReplicationRecord>,
}

impl ResultTable {
    pub fn empty(scenario: Scenario) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario,
            seeds: Vec::new(),
            cells: Vec::new(),
            replications: Vec::new(),
        }
    }

    pub fn cell(&self, headcount: usize, delta_s: f64, policy: PolicyKind) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.headcount == headcount && c.delta_s == delta_s && c.policy == policy)
    }

    pub fn records(
        &self,
        headcount: usize,
        delta_s: f64,
        policy: PolicyKind,
    ) -> impl Iterator<Item = &ReplicationRecord> + '_ {
        self.replications
            .iter()
            .filter(move |r| r.headcount == headcount && r.delta_s == delta_s && r.policy == policy)
    }
}

/// Runs every policy of one replication at one headcount and step.
pub fn run_replication(
    g: &BuildingGraph,
    scenario: &Scenario,
    headcount: usize,
    delta: f64,
    rep: u32,
) -> Result<Vec<ReplicationRecord>, ExperimentError> {
    let seed = scenario.replication_seed(rep);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let evacuees = draw_starts(
        g,
        &scenario.start,
        scenario.first_floor,
        headcount,
        &mut rng,
    )?;
    let sim_seed = rng.next_u64();
    let sign_seed = rng.next_u64();
    let starts: Vec<NodeIx> = evacuees.iter().map(|e| e.start).collect();
    let bound = makespan_bound(g, &starts, scenario.mobility.max_speed())?;

    let plans = if scenario.policies.iter().any(|p| p.needs_plan()) {
        let backend = match &scenario.backend {
            SearchBackend::Cpn(cfg) => SearchBackend::Cpn(crate::cpn::CpnConfig {
                seed: seed ^ cfg.seed,
                ..cfg.clone()
            }),
            b => b.clone(),
        };
        Some(plan_all(g, &evacuees, delta, &backend)?.plans)
    } else {
        None
    };
    let schedule = match &plans {
        Some(p) if scenario.policies.contains(&PolicyKind::FollowSigns) => {
            let forecast;
            let p = match scenario.sign_timing {
                SignTiming::Planned => p,
                SignTiming::Forecast => {
                    forecast = sim::forecast_plans(g, &evacuees, p, delta)?;
                    &forecast
                }
            };
            Some(compile_schedules_mounted(
                p,
                delta,
                scenario.sign_mounting,
                &mut ChaCha8Rng::seed_from_u64(sign_seed),
            )?)
        }
        _ => None,
    };

    let cfg = SimConfig {
        delta,
        mobility: scenario.mobility,
        seed: sim_seed,
        record_events: false,
    };
    let mut out = Vec::new();
    for &kind in &scenario.policies {
        let policy = match kind {
            PolicyKind::AssignedRoute => Policy::AssignedRoute(plans.as_deref().expect("planned")),
            PolicyKind::ShortestPath => Policy::ShortestPath,
            PolicyKind::FollowSigns => Policy::FollowSigns(schedule.as_ref().expect("compiled")),
        };
        let result = sim::run(g, &evacuees, policy, &cfg)?;
        let split = match (&plans, g.staircases().len()) {
            (Some(p), 2) if kind.needs_plan() => match staircase_split_error(g, p, &result) {
                Ok(s) => Some(s.error_pp),
                Err(ExperimentError::NoStaircaseTraffic) => None,
                Err(e) => return Err(e),
            },
            _ => None,
        };
        out.push(ReplicationRecord {
            headcount,
            delta_s: delta,
            policy: kind,
            replication: rep,
            seed,
            makespan_s: result.makespan,
            bound_s: bound,
            clearance_s: result.floor_clearance_time(g, scenario.first_floor),
            split_error_pp: split,
            violations: result.violations.len(),
            stuck: result.stuck.len(),
        });
    }
    Ok(out)
}

fn record_order(a: &ReplicationRecord, b: &ReplicationRecord) -> Ordering {
    a.headcount
        .cmp(&b.headcount)
        .then(a.delta_s.total_cmp(&b.delta_s))
        .then(a.policy.cmp(&b.policy))
        .then(a.replication.cmp(&b.replication))
}

fn median(values: &[f64]) -> Option<f64> {
    BoxStats::from_values(values).map(|b| b.median)
}

/// Runs the full sweep. Replications execute in parallel; output order does
/// not depend on scheduling.
pub fn run_experiment(scenario: &Scenario) -> Result<ResultTable, ExperimentError> {
    scenario.validate()?;
    let g = scenario.graph.load()?;
    let jobs: Vec<(usize, f64, u32)> = scenario
        .headcounts
        .iter()
        .flat_map(|&n| {
            scenario
                .deltas
                .iter()
                .flat_map(move |&d| (0..scenario.replications).map(move |r| (n, d, r)))
        })
        .collect();
    let mut records: Vec<ReplicationRecord> = jobs
        .par_iter()
        .map(|&(n, d, r)| run_replication(&g, scenario, n, d, r))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    records.sort_by(record_order);

    let mut groups: BTreeMap<(usize, u64, PolicyKind), Vec<&ReplicationRecord>> = BTreeMap::new();
    for r in &records {
        groups
            .entry((r.headcount, r.delta_s.to_bits(), r.policy))
            .or_default()
            .push(r);
    }
    let mut cells: Vec<CellSummary> = groups
        .into_values()
        .map(|rs| {
            let first = rs[0];
            let makespans: Vec<f64> = rs.iter().map(|r| r.makespan_s).collect();
            let bounds: Vec<f64> = rs.iter().map(|r| r.bound_s).collect();
            let clearances: Vec<f64> = rs.iter().filter_map(|r| r.clearance_s).collect();
            let splits: Vec<f64> = rs.iter().filter_map(|r| r.split_error_pp).collect();
            CellSummary {
                headcount: first.headcount,
                delta_s: first.delta_s,
                policy: first.policy,
                backend: scenario.backend.name().to_string(),
                replications: rs.len() as u32,
                base_seed: scenario.base_seed,
                makespan: BoxStats::from_values(&makespans).expect("at least one replication"),
                bound_median_s: median(&bounds).expect("at least one replication"),
                clearance_median_s: median(&clearances),
                split_error: BoxStats::from_values(&splits),
                violations: rs.iter().map(|r| r.violations).sum(),
                bound_violations: rs.iter().filter(|r| r.makespan_s < r.bound_s).count(),
            }
        })
        .collect();
    cells.sort_by(|a, b| {
        a.headcount
            .cmp(&b.headcount)
            .then(a.delta_s.total_cmp(&b.delta_s))
            .then(a.policy.cmp(&b.policy))
    });

    Ok(ResultTable {
        seeds: (0..scenario.replications)
            .map(|r| scenario.replication_seed(r))
            .collect(),
        cells,
        replications: records,
        ..ResultTable::empty(scenario.clone())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(format!("unknown format '{s}' (csv, json)")),
        }
    }
}

pub const CSV_COLUMNS: [&str; 17] = [
    "headcount",
    "delta_s",
    "policy",
    "backend",
    "replications",
    "base_seed",
    "min_s",
    "q1_s",
    "median_s",
    "q3_s",
    "max_s",
    "bound_median_s",
    "clearance_median_s",
    "split_err_median_pp",
    "split_err_iqr_pp",
    "violations",
    "bound_violations",
];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.3}"))
}

/// Writes the cell table as CSV or the whole result (scenario echo, seeds,
/// per-replication records) as JSON.
pub fn report<W: Write>(
    table: &ResultTable,
    format: ReportFormat,
    mut sink: W,
) -> Result<(), ExperimentError> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut sink, table)?;
            sink.write_all(b"\n")?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(CSV_COLUMNS)?;
            for c in &table.cells {
                let m = &c.makespan;
                w.write_record([
                    c.headcount.to_string(),
                    c.delta_s.to_string(),
                    c.policy.to_string(),
                    c.backend.clone(),
                    c.replications.to_string(),
                    c.base_seed.to_string(),
                    format!("{:.3}", m.min),
                    format!("{:.3}", m.q1),
                    format!("{:.3}", m.median),
                    format!("{:.3}", m.q3),
                    format!("{:.3}", m.max),
                    format!("{:.3}", c.bound_median_s),
                    opt(c.clearance_median_s),
                    opt(c.split_error.map(|s| s.median)),
                    opt(c.split_error.map(|s| s.iqr())),
                    c.violations.to_string(),
                    c.bound_violations.to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Parses a JSON report back into a table.
pub fn read_report_json(text: &str) -> Result<ResultTable, ExperimentError> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_box() {
        let b = BoxStats::from_values(&[42.0]).unwrap();
        assert_eq!(
            (b.min, b.q1, b.median, b.q3, b.max),
            (42.0, 42.0, 42.0, 42.0, 42.0)
        );
        assert!(BoxStats::from_values(&[]).is_none());
    }

    #[test]
    fn inclusive_quartiles() {
        let b = BoxStats::from_values(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (1.75, 2.5, 3.25));
        let b = BoxStats::from_values(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (2.0, 3.0, 4.0));
    }

    #[test]
    fn split_error_arithmetic() {
        let e = SplitError::from_counts((50, 50), (50, 50)).unwrap();
        assert_eq!(e.error_pp, 0.0);
        let e = SplitError::from_counts((50, 50), (60, 40)).unwrap();
        assert!((e.error_pp - 10.0).abs() < 1e-12);
        assert!(matches!(
            SplitError::from_counts((0, 0), (1, 0)),
            Err(ExperimentError::NoStaircaseTraffic)
        ));
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut out = Vec::new();
        report(
            &ResultTable::empty(Scenario::default()),
            ReportFormat::Csv,
            &mut out,
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            CSV_COLUMNS.join(",") + "\n"
        );
    }

    #[test]
    fn policy_names_parse() {
        for p in PolicyKind::ALL {
            assert_eq!(p.as_str().parse::<PolicyKind>().unwrap(), p);
        }
        assert!("teleport".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn scenario_validation() {
        let mut s = Scenario::default();
        assert!(s.validate().is_ok());
        s.replications = 0;
        assert!(s.validate().is_err());
        let s = Scenario {
            deltas: vec![0.0],
            ..Scenario::default()
        };
        assert!(s.validate().is_err());
    }
}
