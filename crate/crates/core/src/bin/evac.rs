use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use evac_core::cpn::CpnConfig;
use evac_core::experiment::{
    draw_starts, makespan_bound, read_report_json, report, run_experiment, GraphSource, PolicyKind,
    ReportFormat, Scenario, SignTiming, StartDistribution,
};
use evac_core::planner::{plan_all, read_plans_json, write_plans_json, EvacueeSpec, SearchBackend};
use evac_core::signs::{compile_schedules_mounted, SignMounting};
use evac_core::sim::{self, MobilityModel, Policy, SimConfig};
use evac_core::synth::{synthesize, BuildingParams};
use evac_core::BuildingGraph;

type Res<T> = Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(
    name = "evac",
    version,
    about = "Capacity-constrained evacuation planning and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a test building, or validate an existing graph file.
    Gen(GenArgs),
    /// Plan routes for a set of evacuees; writes plans.json and ledger.csv.
    Plan(PlanArgs),
    /// Compile sign schedules from a plan dump.
    Signs(SignsArgs),
    /// Run one simulation.
    Sim(SimArgs),
    /// Run a full experiment sweep.
    Exp(ExpArgs),
    /// Re-emit a saved JSON result as CSV or JSON.
    Report(ReportArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Building graph JSON; the default synthetic building when omitted.
    #[arg(long)]
    graph: Option<PathBuf>,
}

impl GraphArgs {
    fn load(&self) -> Res<BuildingGraph> {
        Ok(match &self.graph {
            Some(p) => BuildingGraph::load(File::open(p)?)?,
            None => synthesize(&BuildingParams::default())?,
        })
    }
}

#[derive(Args)]
struct CrowdArgs {
    #[arg(long, default_value_t = 25)]
    headcount: usize,
    /// Floor the evacuees start on (uniformly random rooms).
    #[arg(long, default_value_t = 1)]
    first_floor: i32,
    /// Explicit start node ids, cycled over the headcount.
    #[arg(long, value_delimiter = ',')]
    starts: Vec<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl CrowdArgs {
    fn evacuees(&self, g: &BuildingGraph) -> Res<Vec<EvacueeSpec>> {
        let start = if self.starts.is_empty() {
            StartDistribution::AllFirstFloor
        } else {
            StartDistribution::Explicit {
                nodes: self.starts.clone(),
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok(draw_starts(
            g,
            &start,
            self.first_floor,
            self.headcount,
            &mut rng,
        )?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Dijkstra,
    Cpn,
}

impl Backend {
    fn resolve(self, seed: u64) -> SearchBackend {
        match self {
            Backend::Dijkstra => SearchBackend::Dijkstra,
            Backend::Cpn => SearchBackend::Cpn(CpnConfig {
                seed,
                ..CpnConfig::default()
            }),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Assigned,
    Shortest,
    Signs,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Assigned => PolicyKind::AssignedRoute,
            PolicyArg::Shortest => PolicyKind::ShortestPath,
            PolicyArg::Signs => PolicyKind::FollowSigns,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mounting {
    PerNode,
    PerApproach,
}

impl From<Mounting> for SignMounting {
    fn from(m: Mounting) -> Self {
        match m {
            Mounting::PerNode => SignMounting::PerNode,
            Mounting::PerApproach => SignMounting::PerApproach,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Timing {
    Planned,
    Forecast,
}

impl From<Timing> for SignTiming {
    fn from(t: Timing) -> Self {
        match t {
            Timing::Planned => SignTiming::Planned,
            Timing::Forecast => SignTiming::Forecast,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    /// Validate this graph instead of synthesizing one.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    floors: u32,
    #[arg(long, default_value_t = 56)]
    rooms: u32,
    #[arg(long, default_value_t = 2)]
    staircases: u32,
    #[arg(long, default_value_t = 2)]
    exits: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output JSON file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    crowd: CrowdArgs,
    #[arg(long, default_value_t = 9.0)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = Backend::Dijkstra)]
    backend: Backend,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SignsArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Plan dump written by `plan`.
    #[arg(long)]
    plans: PathBuf,
    #[arg(long, default_value_t = 9.0)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mounting::PerApproach)]
    mounting: Mounting,
    #[arg(long, value_enum, default_value_t = Timing::Forecast)]
    timing: Timing,
    /// Output CSV file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    crowd: CrowdArgs,
    #[arg(long, default_value_t = 9.0)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = PolicyArg::Assigned)]
    policy: PolicyArg,
    #[arg(long, value_enum, default_value_t = Backend::Dijkstra)]
    backend: Backend,
    #[arg(long, value_enum, default_value_t = Mounting::PerApproach)]
    mounting: Mounting,
    #[arg(long, value_enum, default_value_t = Timing::Forecast)]
    timing: Timing,
    /// Per-evacuee CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the event-level trajectory CSV here.
    #[arg(long)]
    trajectory: Option<PathBuf>,
}

#[derive(Args)]
struct ExpArgs {
    /// Scenario JSON; the default sweep when omitted. Flags below override it.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    headcount: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',')]
    policy: Vec<PolicyArg>,
    #[arg(long, value_enum)]
    backend: Option<Backend>,
    #[arg(long)]
    reps: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON result written by `exp --format json`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn sink(out: Option<&Path>) -> Res<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn gen(a: GenArgs) -> Res<()> {
    let g = match &a.graph {
        Some(p) => BuildingGraph::load(File::open(p)?)?,
        None => synthesize(&BuildingParams {
            floors: a.floors,
            rooms_per_floor: a.rooms,
            staircases: a.staircases,
            exits: a.exits,
            seed: a.seed,
            ..BuildingParams::default()
        })?,
    };
    eprintln!(
        "{} nodes, {} edges, {} exits, staircases: {}",
        g.node_count(),
        g.edge_count(),
        g.exits().len(),
        g.staircases()
            .keys()
            .cloned()
            .collect::<Vec<_>>()
            .join(", ")
    );
    if a.graph.is_none() || a.out.is_some() {
        let mut w = sink(a.out.as_deref())?;
        g.save(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn plan(a: PlanArgs) -> Res<()> {
    let g = a.graph.load()?;
    let evacuees = a.crowd.evacuees(&g)?;
    let planning = plan_all(&g, &evacuees, a.delta, &a.backend.resolve(a.crowd.seed))?;
    fs::create_dir_all(&a.out)?;
    let mut w = BufWriter::new(File::create(a.out.join("plans.json"))?);
    write_plans_json(&g, &planning.plans, &mut w)?;
    w.flush()?;
    planning
        .ledger
        .write_csv(&g, File::create(a.out.join("ledger.csv"))?)?;
    let makespan = planning
        .plans
        .iter()
        .map(|p| p.exit_time())
        .fold(0.0, f64::max);
    let starts: Vec<_> = evacuees.iter().map(|e| e.start).collect();
    let bound = makespan_bound(&g, &starts, MobilityModel::default().max_speed())?;
    eprintln!(
        "{} routes, planned makespan {makespan:.1} s, simulated-makespan lower bound {bound:.1} s",
        planning.plans.len()
    );
    Ok(())
}

fn signs(a: SignsArgs) -> Res<()> {
    let g = a.graph.load()?;
    let mut plans = read_plans_json(&g, &fs::read_to_string(&a.plans)?)?;
    if let Timing::Forecast = a.timing {
        let evacuees: Vec<_> = plans
            .iter()
            .map(|p| EvacueeSpec::new(p.evacuee, p.start()))
            .collect();
        plans = sim::forecast_plans(&g, &evacuees, &plans, a.delta)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let schedule = compile_schedules_mounted(&plans, a.delta, a.mounting.into(), &mut rng)?;
    let mut w = sink(a.out.as_deref())?;
    schedule.write_csv(&g, &mut w)?;
    w.flush()?;
    eprintln!("{} short blocks merged", schedule.merges().len());
    Ok(())
}

fn simulate(a: SimArgs) -> Res<()> {
    let g = a.graph.load()?;
    let evacuees = a.crowd.evacuees(&g)?;
    let kind = PolicyKind::from(a.policy);
    let plans = match kind {
        PolicyKind::ShortestPath => Vec::new(),
        _ => plan_all(&g, &evacuees, a.delta, &a.backend.resolve(a.crowd.seed))?.plans,
    };
    let schedule = match kind {
        PolicyKind::FollowSigns => {
            let timed = match a.timing {
                Timing::Planned => plans.clone(),
                Timing::Forecast => sim::forecast_plans(&g, &evacuees, &plans, a.delta)?,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(a.crowd.seed);
            Some(compile_schedules_mounted(
                &timed,
                a.delta,
                a.mounting.into(),
                &mut rng,
            )?)
        }
        _ => None,
    };
    let policy = match kind {
        PolicyKind::AssignedRoute => Policy::AssignedRoute(&plans),
        PolicyKind::ShortestPath => Policy::ShortestPath,
        PolicyKind::FollowSigns => Policy::FollowSigns(schedule.as_ref().expect("compiled")),
    };
    let cfg = SimConfig {
        record_events: a.trajectory.is_some(),
        ..SimConfig::new(a.delta, a.crowd.seed)
    };
    let result = sim::run(&g, &evacuees, policy, &cfg)?;
    let mut w = sink(a.out.as_deref())?;
    result.write_outcomes_csv(&g, &mut w)?;
    w.flush()?;
    if let Some(path) = &a.trajectory {
        result.write_trajectory_csv(&g, BufWriter::new(File::create(path)?))?;
    }
    eprintln!(
        "makespan {:.1} s, {} stuck, {} sign violations, staircases {:?}",
        result.makespan,
        result.stuck.len(),
        result.violations.len(),
        result.staircase_usage
    );
    Ok(())
}

fn experiment(a: ExpArgs) -> Res<()> {
    let mut s: Scenario = match &a.scenario {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
        None => Scenario::default(),
    };
    if let Some(p) = a.graph {
        s.graph = GraphSource::File { path: p };
    }
    if !a.headcount.is_empty() {
        s.headcounts = a.headcount;
    }
    if !a.delta.is_empty() {
        s.deltas = a.delta;
    }
    if !a.policy.is_empty() {
        s.policies = a.policy.into_iter().map(PolicyKind::from).collect();
    }
    if let Some(r) = a.reps {
        s.replications = r;
    }
    if let Some(seed) = a.seed {
        s.base_seed = seed;
    }
    if let Some(b) = a.backend {
        s.backend = b.resolve(0);
    }
    let table = run_experiment(&s)?;
    let mut w = sink(a.out.as_deref())?;
    report(&table, a.format.into(), &mut w)?;
    w.flush()?;
    Ok(())
}

fn reemit(a: ReportArgs) -> Res<()> {
    let table = read_report_json(&fs::read_to_string(&a.input)?)?;
    let mut w = sink(a.out.as_deref())?;
    report(&table, a.format.into(), &mut w)?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Plan(a) => plan(a),
        Command::Signs(a) => signs(a),
        Command::Sim(a) => simulate(a),
        Command::Exp(a) => experiment(a),
        Command::Report(a) => reemit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
