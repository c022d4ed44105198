//! Cognitive-packet route discovery.
//!
//! Every node runs a small random neural network with one neuron per outgoing
//! edge. Smart packets walk from a source towards the exits; at each hop the
//! node sends the packet along the neuron with the highest excitation
//! probability, except for a small share of random exploratory moves. When a
//! packet reaches an exit an acknowledgement travels back along the
//! loop-free path, rewarding or punishing the neurons that were used and
//! filling each node's table of source routes. Packets are timed against the
//! reservation ledger, so the route metric is the congestion-aware travel
//! time used by the Dijkstra planner.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{BuildingGraph, NodeIx};
use crate::ledger::{ReservationLedger, TimeStep};
use crate::planner::{time_path, PlanError, RoutePlan, RouteSearch};

/// Largest excitation probability a neuron may report.
pub const Q_MAX: f64 = 1.0 - 1e-6;

const SOLVE_TOLERANCE: f64 = 1e-12;
const SOLVE_MAX_ITER: usize = 20_000;
const SOLVE_DAMPING: f64 = 0.7;

#[derive(Debug, Error, PartialEq)]
pub enum CpnError {
    #[error("node has no outgoing edge")]
    DeadEnd,
    #[error("no route to an exit discovered from node `{0}`")]
    NoRoute(String),
    #[error("packet budget must be at least 1")]
    ZeroBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CpnConfig {
    /// Probability of a uniformly random next hop.
    pub epsilon: f64,
    /// Exponential smoothing of the reward threshold.
    pub smoothing: f64,
    /// Hop budget per packet, as a multiple of the node count.
    pub hop_budget_factor: usize,
    /// Packets launched per route query.
    pub packets_per_query: usize,
    /// External excitatory arrival rate per neuron.
    pub excitation_rate: f64,
    /// External inhibitory arrival rate per neuron.
    pub inhibition_rate: f64,
    pub initial_weight: f64,
    /// Routes kept per node.
    pub route_table_size: usize,
    pub seed: u64,
}

impl Default for CpnConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            smoothing: 0.8,
            hop_budget_factor: 4,
            packets_per_query: 100,
            excitation_rate: 1.0,
            inhibition_rate: 0.1,
            initial_weight: 1.0,
            route_table_size: 8,
            seed: 0,
        }
    }
}

/// Random neural network of one node: neuron `i` stands for outgoing edge `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRnn {
    w_plus: Vec<Vec<f64>>,
    w_minus: Vec<Vec<f64>>,
    // total firing rate of each neuron, kept fixed by renormalisation
    rates: Vec<f64>,
    q: Vec<f64>,
    excitation: f64,
    inhibition: f64,
    threshold: Option<f64>,
}

impl NodeRnn {
    pub fn new(neurons: usize, cfg: &CpnConfig) -> Self {
        let w = |i: usize, j: usize| if i == j { 0.0 } else { cfg.initial_weight };
        let w_plus: Vec<Vec<f64>> = (0..neurons)
            .map(|i| (0..neurons).map(|j| w(i, j)).collect())
            .collect();
        let w_minus = w_plus.clone();
        let rates = (0..neurons)
            .map(|i| w_plus[i].iter().sum::<f64>() + w_minus[i].iter().sum::<f64>())
            .collect();
        let mut rnn = Self {
            w_plus,
            w_minus,
            rates,
            q: vec![0.5; neurons],
            excitation: cfg.excitation_rate,
            inhibition: cfg.inhibition_rate,
            threshold: None,
        };
        rnn.solve();
        rnn
    }

    /// A network that reports the given excitation probabilities and counts
    /// as trained. Weights are left at zero.
    pub fn with_potentials(q: Vec<f64>) -> Self {
        let k = q.len();
        Self {
            w_plus: vec![vec![0.0; k]; k],
            w_minus: vec![vec![0.0; k]; k],
            rates: vec![0.0; k],
            q,
            excitation: 0.0,
            inhibition: 0.0,
            threshold: Some(0.0),
        }
    }

    pub fn neurons(&self) -> usize {
        self.q.len()
    }

    pub fn potentials(&self) -> &[f64] {
        &self.q
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    /// Whether any acknowledgement has reached this node yet.
    pub fn is_trained(&self) -> bool {
        self.threshold.is_some()
    }

    pub fn excitatory(&self, from: usize, to: usize) -> f64 {
        self.w_plus[from][to]
    }

    pub fn inhibitory(&self, from: usize, to: usize) -> f64 {
        self.w_minus[from][to]
    }

    pub fn firing_rate(&self, i: usize) -> f64 {
        self.w_plus[i].iter().sum::<f64>() + self.w_minus[i].iter().sum::<f64>()
    }

    fn balance(&self, q: &[f64], i: usize) -> f64 {
        let k = q.len();
        let mut plus = self.excitation;
        let mut minus = self.inhibition;
        for j in 0..k {
            plus += q[j] * self.w_plus[j][i];
            minus += q[j] * self.w_minus[j][i];
        }
        let den = self.rates[i] + minus;
        if den <= 0.0 {
            return Q_MAX;
        }
        (plus / den).clamp(0.0, Q_MAX)
    }

    /// Largest violation of the clamped balance equations by the current `q`.
    pub fn residual(&self) -> f64 {
        (0..self.q.len())
            .map(|i| (self.balance(&self.q, i) - self.q[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Damped fixed-point iteration on the balance equations, warm-started
    /// from the current potentials. Returns the final residual.
    pub fn solve(&mut self) -> f64 {
        let k = self.q.len();
        let mut next = vec![0.0; k];
        for _ in 0..SOLVE_MAX_ITER {
            let mut change: f64 = 0.0;
            for (i, slot) in next.iter_mut().enumerate() {
                let target = self.balance(&self.q, i);
                *slot = self.q[i] + SOLVE_DAMPING * (target - self.q[i]);
                change = change.max((target - self.q[i]).abs());
            }
            std::mem::swap(&mut self.q, &mut next);
            if change < SOLVE_TOLERANCE {
                break;
            }
        }
        self.residual()
    }

    /// Neuron with the largest potential; ties go to the smallest index.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &v) in self.q.iter().enumerate() {
            if best.is_none_or(|b| v > self.q[b]) {
                best = Some(i);
            }
        }
        best
    }

    /// Reward or punish `chosen` with reward `reward`, renormalise rates,
    /// refresh the threshold and re-solve. Returns the solve residual.
    pub fn reinforce(&mut self, chosen: usize, reward: f64, smoothing: f64) -> f64 {
        let k = self.q.len();
        let threshold = *self.threshold.get_or_insert(reward);
        if k > 1 {
            let share = if k > 2 {
                reward / (k - 2) as f64
            } else {
                reward
            };
            let rewarded = reward >= threshold;
            for i in 0..k {
                for l in 0..k {
                    if l == i {
                        continue;
                    }
                    if l == chosen {
                        if rewarded {
                            self.w_plus[i][l] += reward;
                        } else {
                            self.w_minus[i][l] += reward;
                        }
                    } else if rewarded {
                        self.w_minus[i][l] += share;
                    } else {
                        self.w_plus[i][l] += share;
                    }
                }
            }
            for i in 0..k {
                let total = self.firing_rate(i);
                if total > 0.0 {
                    let scale = self.rates[i] / total;
                    for l in 0..k {
                        self.w_plus[i][l] *= scale;
                        self.w_minus[i][l] *= scale;
                    }
                }
            }
        }
        self.threshold = Some(smoothing * threshold + (1.0 - smoothing) * reward);
        self.solve()
    }
}

/// Picks an outgoing edge (local index) at a node. Untrained nodes and
/// exploratory moves (probability `epsilon`) choose uniformly at random;
/// otherwise the most excited neuron wins.
pub fn decide_next_hop<R: Rng>(
    rnn: &NodeRnn,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize, CpnError> {
    let k = rnn.neurons();
    if k == 0 {
        return Err(CpnError::DeadEnd);
    }
    if k == 1 {
        return Ok(0);
    }
    let explore = !rnn.is_trained() || rng.gen::<f64>() < epsilon;
    if explore {
        Ok(rng.gen_range(0..k))
    } else {
        Ok(rnn.argmax().expect("k > 0"))
    }
}

/// Probe state while a smart packet walks: the loop-free path so far with the
/// forecast admission time at each node.
#[derive(Debug, Clone, PartialEq)]
pub struct SmartPacket {
    pub path: Vec<NodeIx>,
    pub times: Vec<f64>,
    pub hop_budget: usize,
}

/// Acknowledgement of a discovered route, travelling back to the source.
#[derive(Debug, Clone, PartialEq)]
pub struct AckPacket {
    /// Route in forward order, source first, exit last, loop-free.
    pub path: Vec<NodeIx>,
    /// Forecast admission time at each node of `path`.
    pub times: Vec<f64>,
}

impl AckPacket {
    /// Source-to-exit travel time.
    pub fn metric(&self) -> f64 {
        self.times.last().expect("ack path is non-empty") - self.times[0]
    }

    /// Nodes in the order the acknowledgement visits them.
    pub fn reverse_path(&self) -> impl Iterator<Item = NodeIx> + '_ {
        self.path.iter().rev().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteEntry {
    pub path: Vec<NodeIx>,
    pub metric: f64,
    /// Packet counter value when the entry was last refreshed.
    pub freshness: u64,
}

/// One CPN session: RNN state and route tables persist across queries.
#[derive(Debug, Clone)]
pub struct CpnEngine {
    cfg: CpnConfig,
    rnns: Vec<NodeRnn>,
    tables: Vec<Vec<RouteEntry>>,
    rng: ChaCha8Rng,
    packets: u64,
    max_residual: f64,
    solves: u64,
}

impl CpnEngine {
    pub fn new(g: &BuildingGraph, cfg: CpnConfig) -> Self {
        let rnns = (0..g.node_count())
            .map(|v| NodeRnn::new(g.out_degree(v), &cfg))
            .collect::<Vec<_>>();
        let max_residual = rnns.iter().map(NodeRnn::residual).fold(0.0, f64::max);
        Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            tables: vec![Vec::new(); rnns.len()],
            solves: rnns.len() as u64,
            rnns,
            packets: 0,
            max_residual,
        }
    }

    pub fn config(&self) -> &CpnConfig {
        &self.cfg
    }

    pub fn rnn(&self, v: NodeIx) -> &NodeRnn {
        &self.rnns[v]
    }

    pub fn routes(&self, v: NodeIx) -> &[RouteEntry] {
        &self.tables[v]
    }

    /// Largest balance-equation residual seen after any solve.
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    pub fn solve_count(&self) -> u64 {
        self.solves
    }

    pub fn packets_sent(&self) -> u64 {
        self.packets
    }

    fn hop_budget(&self, g: &BuildingGraph) -> usize {
        self.cfg.hop_budget_factor.max(1) * g.node_count()
    }

    /// Walks one smart packet from `source`. Revisiting a node prunes the loop
    /// on the spot. Returns the acknowledgement for a reached exit, or `None`
    /// when the hop budget runs out.
    pub fn launch_smart_packet(
        &mut self,
        g: &BuildingGraph,
        ledger: &ReservationLedger,
        source: NodeIx,
        depart: TimeStep,
    ) -> Option<AckPacket> {
        let budget = self.hop_budget(g);
        self.launch_with_budget(g, ledger, source, depart, budget)
    }

    pub fn launch_with_budget(
        &mut self,
        g: &BuildingGraph,
        ledger: &ReservationLedger,
        source: NodeIx,
        depart: TimeStep,
        hop_budget: usize,
    ) -> Option<AckPacket> {
        self.packets += 1;
        let t0 = ledger
            .admission_time(source, depart.start(ledger.delta()))
            .ok()?;
        let mut pkt = SmartPacket {
            path: vec![source],
            times: vec![t0],
            hop_budget,
        };
        loop {
            let v = *pkt.path.last().expect("packet path is non-empty");
            if g.is_exit(v) {
                return Some(AckPacket {
                    path: pkt.path,
                    times: pkt.times,
                });
            }
            if pkt.hop_budget == 0 {
                return None;
            }
            pkt.hop_budget -= 1;
            let local = decide_next_hop(&self.rnns[v], self.cfg.epsilon, &mut self.rng).ok()?;
            let edge = g.out_edges(v).nth(local).expect("local index in range");
            if let Some(pos) = pkt.path.iter().position(|&u| u == edge.to) {
                pkt.path.truncate(pos + 1);
                pkt.times.truncate(pos + 1);
                continue;
            }
            let t = pkt.times.last().expect("times follow path");
            let arrival = ledger
                .admission_time(edge.to, t + edge.free_transit_time)
                .ok()?;
            pkt.path.push(edge.to);
            pkt.times.push(arrival);
        }
    }

    /// Trains the RNNs on the acknowledged route and records the route (and
    /// each of its suffixes) in the tables of the nodes it passes.
    pub fn process_ack(&mut self, g: &BuildingGraph, ack: &AckPacket) {
        let exit_time = *ack.times.last().expect("ack path is non-empty");
        let n = ack.path.len();
        for i in (0..n.saturating_sub(1)).rev() {
            let v = ack.path[i];
            let next = ack.path[i + 1];
            let metric = exit_time - ack.times[i];
            if !(metric > 0.0) {
                continue;
            }
            let local = g
                .out_edges(v)
                .position(|e| e.to == next)
                .expect("ack path follows graph edges");
            let residual = self.rnns[v].reinforce(local, 1.0 / metric, self.cfg.smoothing);
            self.solves += 1;
            self.max_residual = self.max_residual.max(residual);
            self.record_route(v, ack.path[i..].to_vec(), metric);
        }
    }

    fn record_route(&mut self, v: NodeIx, path: Vec<NodeIx>, metric: f64) {
        let fresh = self.packets;
        let table = &mut self.tables[v];
        match table.iter_mut().find(|r| r.path == path) {
            Some(entry) => {
                entry.metric = metric;
                entry.freshness = fresh;
            }
            None => table.push(RouteEntry {
                path,
                metric,
                freshness: fresh,
            }),
        }
        table.sort_by(|a, b| {
            a.metric
                .total_cmp(&b.metric)
                .then_with(|| b.freshness.cmp(&a.freshness))
                .then_with(|| a.path.cmp(&b.path))
        });
        table.truncate(self.cfg.route_table_size.max(1));
    }

    /// Sends `budget` packets from `start`, then returns the best route in the
    /// start node's table re-timed against the current forecast.
    pub fn cpn_quickest_route(
        &mut self,
        g: &BuildingGraph,
        ledger: &ReservationLedger,
        start: NodeIx,
        depart: TimeStep,
        budget: usize,
    ) -> Result<RoutePlan, PlanError> {
        if budget == 0 {
            return Err(CpnError::ZeroBudget.into());
        }
        if g.is_exit(start) {
            return Err(PlanError::StartsOnExit(0));
        }
        for _ in 0..budget {
            if let Some(ack) = self.launch_smart_packet(g, ledger, start, depart) {
                self.process_ack(g, &ack);
            }
        }
        let mut best: Option<RoutePlan> = None;
        for entry in &self.tables[start] {
            let plan = time_path(g, ledger, &entry.path, depart)?;
            let better = match &best {
                None => true,
                Some(b) => {
                    plan.exit_time() < b.exit_time()
                        || (plan.exit_time() == b.exit_time() && plan.nodes().lt(b.nodes()))
                }
            };
            if better {
                best = Some(plan);
            }
        }
        best.ok_or_else(|| CpnError::NoRoute(g.node(start).id.clone()).into())
    }

    /// Per-node potentials and route tables as JSON.
    pub fn write_diagnostics<W: Write>(
        &self,
        g: &BuildingGraph,
        sink: W,
    ) -> serde_json::Result<()> {
        #[derive(Serialize)]
        struct RouteDoc<'a> {
            path: Vec<&'a str>,
            metric: f64,
            freshness: u64,
        }
        #[derive(Serialize)]
        struct NodeDoc<'a> {
            node: &'a str,
            next_hops: Vec<&'a str>,
            q: &'a [f64],
            threshold: Option<f64>,
            routes: Vec<RouteDoc<'a>>,
        }
        let docs: Vec<NodeDoc> = (0..g.node_count())
            .map(|v| NodeDoc {
                node: &g.node(v).id,
                next_hops: g.successors(v).map(|u| g.node(u).id.as_str()).collect(),
                q: self.rnns[v].potentials(),
                threshold: self.rnns[v].threshold(),
                routes: self.tables[v]
                    .iter()
                    .map(|r| RouteDoc {
                        path: r.path.iter().map(|&u| g.node(u).id.as_str()).collect(),
                        metric: r.metric,
                        freshness: r.freshness,
                    })
                    .collect(),
            })
            .collect();
        serde_json::to_writer_pretty(sink, &docs)
    }
}

impl RouteSearch for CpnEngine {
    fn quickest_route(
        &mut self,
        g: &BuildingGraph,
        ledger: &ReservationLedger,
        start: NodeIx,
        depart: TimeStep,
    ) -> Result<RoutePlan, PlanError> {
        let budget = self.cfg.packets_per_query.max(1);
        self.cpn_quickest_route(g, ledger, start, depart, budget)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeSpec, Node};
    use crate::planner::quickest_route;

    fn node(id: &str, exit: bool) -> Node {
        Node {
            id: id.into(),
            label: String::new(),
            floor: 0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
            service_capacity: 10,
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

    #[test]
    fn single_edge_ignores_epsilon() {
        let rnn = NodeRnn::new(1, &CpnConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(decide_next_hop(&rnn, 1.0, &mut rng), Ok(0));
        }
        assert!(decide_next_hop(&NodeRnn::new(0, &CpnConfig::default()), 0.0, &mut rng).is_err());
    }

    #[test]
    fn greedy_choice_without_exploration() {
        let rnn = NodeRnn::with_potentials(vec![0.9, 0.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..1000).all(|_| decide_next_hop(&rnn, 0.0, &mut rng) == Ok(0)));
    }

    #[test]
    fn exploration_share_is_half_epsilon() {
        let rnn = NodeRnn::with_potentials(vec![0.9, 0.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let second = (0..n)
            .filter(|_| decide_next_hop(&rnn, 0.2, &mut rng) == Ok(1))
            .count();
        let freq = second as f64 / n as f64;
        assert!((freq - 0.10).abs() <= 0.02, "freq {freq}");
    }

    #[test]
    fn uniform_when_epsilon_is_one() {
        let rnn = NodeRnn::with_potentials(vec![0.9, 0.5, 0.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            counts[decide_next_hop(&rnn, 1.0, &mut rng).unwrap()] += 1;
        }
        for c in counts {
            assert!(
                (c as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.015,
                "{counts:?}"
            );
        }
    }

    #[test]
    fn fixed_point_residual_is_tiny() {
        for k in 0..6 {
            let rnn = NodeRnn::new(k, &CpnConfig::default());
            assert!(rnn.residual() < 1e-8, "k={k} residual {}", rnn.residual());
            assert!(rnn.potentials().iter().all(|&q| (0.0..1.0).contains(&q)));
        }
    }

    #[test]
    fn first_ack_makes_used_edge_the_favourite() {
        for k in 2..5 {
            for chosen in 0..k {
                let mut rnn = NodeRnn::new(k, &CpnConfig::default());
                let residual = rnn.reinforce(chosen, 1.0 / 30.0, 0.8);
                assert!(residual < 1e-8);
                assert_eq!(rnn.argmax(), Some(chosen));
                assert_eq!(rnn.threshold(), Some(1.0 / 30.0));
            }
        }
    }

    #[test]
    fn reinforcement_preserves_rates_and_signs() {
        let cfg = CpnConfig::default();
        let mut rnn = NodeRnn::new(4, &cfg);
        let rates: Vec<f64> = (0..4).map(|i| rnn.firing_rate(i)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let chosen = rng.gen_range(0..4);
            let reward = 1.0 / rng.gen_range(5.0..200.0);
            assert!(rnn.reinforce(chosen, reward, cfg.smoothing) < 1e-8);
            for i in 0..4 {
                assert!((rnn.firing_rate(i) - rates[i]).abs() < 1e-9);
                for j in 0..4 {
                    assert!(rnn.excitatory(i, j) >= 0.0 && rnn.inhibitory(i, j) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn alternating_acks_settle_on_faster_edge() {
        let mut rnn = NodeRnn::new(2, &CpnConfig::default());
        for _ in 0..50 {
            rnn.reinforce(0, 1.0 / 10.0, 0.8);
            rnn.reinforce(1, 1.0 / 100.0, 0.8);
        }
        assert_eq!(rnn.argmax(), Some(0));
        // independent check: plug the potentials into the balance equations
        let q = rnn.potentials();
        for i in 0..2 {
            let j = 1 - i;
            let lhs = (q[j] * rnn.excitatory(j, i) + 1.0)
                / (rnn.firing_rate(i) + q[j] * rnn.inhibitory(j, i) + 0.1);
            assert!((lhs.min(Q_MAX) - q[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn single_neuron_ack_keeps_argmax() {
        let mut rnn = NodeRnn::new(1, &CpnConfig::default());
        rnn.reinforce(0, 0.1, 0.8);
        assert_eq!(rnn.argmax(), Some(0));
    }

    #[test]
    fn line_graph_found_on_first_packet() {
        let g = BuildingGraph::new(
            vec![node("A", false), node("B", false), node("X", true)],
            vec![timed(0, 1, 5.0), timed(1, 2, 5.0)],
            1.0,
        )
        .unwrap();
        let l = ReservationLedger::new(&g, 5.0).unwrap();
        let mut eng = CpnEngine::new(&g, CpnConfig::default());
        let ack = eng.launch_smart_packet(&g, &l, 0, TimeStep(0)).unwrap();
        assert_eq!(ack.path, vec![0, 1, 2]);
        assert_eq!(ack.metric(), 10.0);
        assert_eq!(ack.reverse_path().collect::<Vec<_>>(), vec![2, 1, 0]);
        let plan = eng.cpn_quickest_route(&g, &l, 0, TimeStep(0), 1).unwrap();
        assert_eq!(plan, quickest_route(&g, &l, 0, TimeStep(0)).unwrap());
    }

    #[test]
    fn exhausted_budget_yields_nothing() {
        let g = BuildingGraph::new(
            vec![
                node("A", false),
                node("B", false),
                node("C", false),
                node("X", true),
            ],
            vec![timed(0, 1, 1.0), timed(1, 2, 1.0), timed(2, 3, 1.0)],
            1.0,
        )
        .unwrap();
        let l = ReservationLedger::new(&g, 5.0).unwrap();
        let mut eng = CpnEngine::new(&g, CpnConfig::default());
        assert!(eng.launch_with_budget(&g, &l, 0, TimeStep(0), 2).is_none());
        assert!(eng.launch_with_budget(&g, &l, 0, TimeStep(0), 3).is_some());
        assert!(eng.cpn_quickest_route(&g, &l, 0, TimeStep(0), 0).is_err());
    }

    #[test]
    fn trained_packets_prefer_short_route() {
        // S -> A -> X takes 20 s, S -> B -> X takes 60 s
        let g = BuildingGraph::new(
            vec![
                node("S", false),
                node("A", false),
                node("B", false),
                node("X", true),
            ],
            vec![
                timed(0, 2, 30.0),
                timed(2, 3, 30.0),
                timed(0, 1, 10.0),
                timed(1, 3, 10.0),
            ],
            1.0,
        )
        .unwrap();
        let l = ReservationLedger::new(&g, 5.0).unwrap();
        let oracle = quickest_route(&g, &l, 0, TimeStep(0)).unwrap();
        assert_eq!(oracle.nodes().collect::<Vec<_>>(), vec![0, 1, 3]);

        let cfg = CpnConfig::default();
        let mut eng = CpnEngine::new(&g, cfg.clone());
        for _ in 0..200 {
            if let Some(ack) = eng.launch_smart_packet(&g, &l, 0, TimeStep(0)) {
                eng.process_ack(&g, &ack);
            }
        }
        let packets = 200;
        let mut short = 0;
        for _ in 0..packets {
            let ack = eng.launch_smart_packet(&g, &l, 0, TimeStep(0)).unwrap();
            eng.process_ack(&g, &ack);
            if ack.path == vec![0, 1, 3] {
                short += 1;
            }
        }
        // at least 80% of the packets that were not exploring
        let greedy = packets as f64 * (1.0 - cfg.epsilon);
        assert!(short as f64 >= 0.8 * greedy, "{short}/{greedy}");
        assert!(eng.max_residual() < 1e-8);
        let plan = eng.cpn_quickest_route(&g, &l, 0, TimeStep(0), 10).unwrap();
        assert_eq!(plan.exit_time(), oracle.exit_time());
    }
}
