//! Dynamic exit-sign scheduling.
//!
//! Individual source routes are lowered into what each sign shows: for every
//! node and time-step the planned next hops are grouped by direction and each
//! group is displayed for a share of the step equal to its share of the
//! evacuees planned through that node in that step. Under a steady arrival
//! rate this hands out exactly the planned number of each direction without
//! sensing who is in front of the sign.
//!
//! A node can carry one sign for everybody, or one sign per approach, each
//! sized from the evacuees planned to arrive from that side. The second form
//! matters at junctions crossed by opposing flows: people walking away from a
//! direction cannot take it, so a shared sign under-serves it.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{BuildingGraph, NodeIx};
use crate::ledger::TimeStep;
use crate::planner::RoutePlan;

/// Shortest display a physical sign can hold.
pub const MIN_BLOCK_S: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum SignError {
    #[error("time-step duration must be positive, got {0}")]
    BadDelta(f64),
    #[error("no sign schedule at node {0}")]
    NoSchedule(NodeIx),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignMounting {
    /// One sign per node, read by everyone.
    #[default]
    PerNode,
    /// One sign per incoming edge, plus one for evacuees starting at the node.
    PerApproach,
}

/// Which evacuees a sign faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Facing {
    All,
    /// Evacuees whose route starts at the node.
    Start,
    /// Evacuees arriving over the edge from this node.
    From(NodeIx),
}

impl Facing {
    pub fn of_route(route: &[NodeIx], pos: usize) -> Self {
        match pos {
            0 => Facing::Start,
            _ => Facing::From(route[pos - 1]),
        }
    }

    fn label(self, g: &BuildingGraph) -> String {
        match self {
            Facing::All => "all".into(),
            Facing::Start => "start".into(),
            Facing::From(u) => g.node(u).id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionBlock {
    /// Next-hop node the sign points at.
    pub direction: NodeIx,
    pub duration_s: f64,
    pub planned_count: u32,
}

/// A direction whose share of the step was too short to display.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeEvent {
    pub node: NodeIx,
    pub facing: Facing,
    pub step: TimeStep,
    pub dropped: NodeIx,
    pub into: NodeIx,
    pub count: u32,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignReading {
    pub direction: NodeIx,
    /// Set when the node had nothing scheduled for the queried step and the
    /// nearest scheduled step was used instead.
    pub fallback_from: Option<TimeStep>,
    /// The sign actually read; `All` when no sign faces the requested side.
    pub facing: Facing,
}

type Steps = BTreeMap<TimeStep, Vec<DirectionBlock>>;

#[derive(Debug, Clone, PartialEq)]
pub struct SignSchedule {
    delta: f64,
    mounting: SignMounting,
    entries: BTreeMap<(NodeIx, Facing), Steps>,
    merges: Vec<MergeEvent>,
}

/// Groups the planned next hops per `(node, step)` and orders the groups at
/// random. `rng` only decides the order of blocks.
pub fn compile_schedules<R: Rng>(
    plans: &[RoutePlan],
    delta: f64,
    rng: &mut R,
) -> Result<SignSchedule, SignError> {
    compile_schedules_mounted(plans, delta, SignMounting::PerNode, rng)
}

/// [`compile_schedules`] with a choice of sign mounting. Per-approach
/// schedules also carry the per-node sign, used for unplanned approaches.
pub fn compile_schedules_mounted<R: Rng>(
    plans: &[RoutePlan],
    delta: f64,
    mounting: SignMounting,
    rng: &mut R,
) -> Result<SignSchedule, SignError> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(SignError::BadDelta(delta));
    }
    let mut tally: BTreeMap<(NodeIx, Facing, TimeStep), BTreeMap<NodeIx, u32>> = BTreeMap::new();
    for plan in plans {
        let route: Vec<NodeIx> = plan.nodes().collect();
        for (pos, pair) in plan.hops.windows(2).enumerate() {
            let (v, s, next) = (pair[0].node, pair[0].step, pair[1].node);
            *tally
                .entry((v, Facing::All, s))
                .or_default()
                .entry(next)
                .or_default() += 1;
            if mounting == SignMounting::PerApproach {
                *tally
                    .entry((v, Facing::of_route(&route, pos), s))
                    .or_default()
                    .entry(next)
                    .or_default() += 1;
            }
        }
    }
    let mut entries: BTreeMap<(NodeIx, Facing), Steps> = BTreeMap::new();
    let mut merges = Vec::new();
    for ((node, facing, step), counts) in tally {
        let total: u32 = counts.values().sum();
        let share = |c: u32| f64::from(c) / f64::from(total) * delta;
        let mut groups: Vec<(NodeIx, u32)> = counts.into_iter().collect();
        while groups.len() > 1 {
            // smallest share first; ties drop the larger node index
            let (small, _) = groups
                .iter()
                .enumerate()
                .min_by(|a, b| a.1 .1.cmp(&b.1 .1).then(b.1 .0.cmp(&a.1 .0)))
                .expect("non-empty");
            if share(groups[small].1) >= MIN_BLOCK_S {
                break;
            }
            let (dropped, count) = groups.remove(small);
            let big = groups
                .iter()
                .enumerate()
                .max_by(|a, b| a.1 .1.cmp(&b.1 .1).then(b.1 .0.cmp(&a.1 .0)))
                .map(|(i, _)| i)
                .expect("non-empty");
            groups[big].1 += count;
            merges.push(MergeEvent {
                node,
                facing,
                step,
                dropped,
                into: groups[big].0,
                count,
                duration_s: share(count),
            });
        }
        let mut blocks: Vec<DirectionBlock> = groups
            .into_iter()
            .map(|(direction, c)| DirectionBlock {
                direction,
                duration_s: share(c),
                planned_count: c,
            })
            .collect();
        blocks.shuffle(rng);
        entries
            .entry((node, facing))
            .or_default()
            .insert(step, blocks);
    }
    Ok(SignSchedule {
        delta,
        mounting,
        entries,
        merges,
    })
}

impl SignSchedule {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mounting(&self) -> SignMounting {
        self.mounting
    }

    /// Blocks of the node's shared sign.
    pub fn blocks(&self, node: NodeIx, step: TimeStep) -> Option<&[DirectionBlock]> {
        self.blocks_facing(node, Facing::All, step)
    }

    pub fn blocks_facing(
        &self,
        node: NodeIx,
        facing: Facing,
        step: TimeStep,
    ) -> Option<&[DirectionBlock]> {
        self.entries
            .get(&(node, facing))?
            .get(&step)
            .map(Vec::as_slice)
    }

    pub fn has_node(&self, node: NodeIx) -> bool {
        self.entries.contains_key(&(node, Facing::All))
    }

    /// Every scheduled `(node, facing, step, blocks)` in order.
    pub fn iter(&self) -> impl Iterator<Item = (NodeIx, Facing, TimeStep, &[DirectionBlock])> + '_ {
        self.entries
            .iter()
            .flat_map(|(&(v, f), steps)| steps.iter().map(move |(&s, b)| (v, f, s, b.as_slice())))
    }

    pub fn merges(&self) -> &[MergeEvent] {
        &self.merges
    }

    /// Direction shown at `node` at `time` seconds by the node's shared sign.
    /// A step without schedule falls back to the first block of the nearest
    /// scheduled step (the earlier one on ties).
    pub fn direction_at(&self, node: NodeIx, time: f64) -> Result<SignReading, SignError> {
        self.direction_seen(node, Facing::All, time)
    }

    /// Direction seen by an evacuee approaching as `facing`. Without a sign
    /// for that side the shared sign is read.
    pub fn direction_seen(
        &self,
        node: NodeIx,
        facing: Facing,
        time: f64,
    ) -> Result<SignReading, SignError> {
        let (facing, step, blocks, exact) = self.resolve(node, facing, time)?;
        if !exact {
            return Ok(SignReading {
                direction: blocks[0].direction,
                fallback_from: Some(step),
                facing,
            });
        }
        let offset = (time - step.start(self.delta)).max(0.0);
        let mut end = 0.0;
        let shown = blocks
            .iter()
            .find(|b| {
                end += b.duration_s;
                offset < end
            })
            .unwrap_or_else(|| blocks.last().expect("scheduled steps have blocks"));
        Ok(SignReading {
            direction: shown.direction,
            fallback_from: None,
            facing,
        })
    }

    /// Blocks of the step [`direction_seen`](Self::direction_seen) reads from.
    pub fn blocks_seen(
        &self,
        node: NodeIx,
        facing: Facing,
        time: f64,
    ) -> Result<&[DirectionBlock], SignError> {
        self.resolve(node, facing, time).map(|(_, _, b, _)| b)
    }

    fn resolve(
        &self,
        node: NodeIx,
        facing: Facing,
        time: f64,
    ) -> Result<(Facing, TimeStep, &[DirectionBlock], bool), SignError> {
        let (facing, steps) = match self.entries.get(&(node, facing)) {
            Some(s) => (facing, s),
            None => (
                Facing::All,
                self.entries
                    .get(&(node, Facing::All))
                    .ok_or(SignError::NoSchedule(node))?,
            ),
        };
        let step = TimeStep::of(time, self.delta);
        if let Some(blocks) = steps.get(&step) {
            return Ok((facing, step, blocks, true));
        }
        let before = steps.range(..step).next_back();
        let after = steps.range(step..).next();
        let (used, blocks) = match (before, after) {
            (Some(b), Some(a)) => {
                if step.0 - b.0 .0 <= a.0 .0 - step.0 {
                    b
                } else {
                    a
                }
            }
            (Some(b), None) => b,
            (None, Some(a)) => a,
            (None, None) => return Err(SignError::NoSchedule(node)),
        };
        Ok((facing, *used, blocks, false))
    }

    /// How often the node's shared sign switches direction within the step.
    pub fn direction_change_count(&self, node: NodeIx, step: TimeStep) -> usize {
        self.blocks(node, step)
            .map_or(0, |b| b.len().saturating_sub(1))
    }

    /// CSV dump:
    /// `node_id,step,block_index,direction,duration_s,planned_count,facing`.
    pub fn write_csv<W: Write>(&self, g: &BuildingGraph, sink: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record([
            "node_id",
            "step",
            "block_index",
            "direction",
            "duration_s",
            "planned_count",
            "facing",
        ])?;
        for (v, f, s, blocks) in self.iter() {
            for (i, b) in blocks.iter().enumerate() {
                w.write_record([
                    g.node(v).id.clone(),
                    s.to_string(),
                    i.to_string(),
                    g.node(b.direction).id.clone(),
                    format!("{:.6}", b.duration_s),
                    b.planned_count.to_string(),
                    f.label(g),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::Hop;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const V: NodeIx = 0;
    const LEFT: NodeIx = 1;
    const RIGHT: NodeIx = 2;
    const AHEAD: NodeIx = 3;

    fn through(next: NodeIx, step: u64, delta: f64, id: u32) -> RoutePlan {
        let t = step as f64 * delta;
        RoutePlan {
            evacuee: id,
            hops: vec![
                Hop {
                    node: V,
                    step: TimeStep(step),
                    time_s: t,
                },
                Hop {
                    node: next,
                    step: TimeStep(step),
                    time_s: t + 1.0,
                },
            ],
            exit: next,
            exit_step: TimeStep(step),
        }
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(42)
    }

    #[test]
    fn six_left_six_right() {
        let delta = 40.0;
        let plans: Vec<_> = (0..12)
            .map(|i| through(if i < 6 { LEFT } else { RIGHT }, 3, delta, i))
            .collect();
        let s = compile_schedules(&plans, delta, &mut rng()).unwrap();
        let blocks = s.blocks(V, TimeStep(3)).unwrap();
        assert_eq!(blocks.len(), 2);
        assert!(blocks
            .iter()
            .all(|b| b.duration_s == delta / 2.0 && b.planned_count == 6));
        assert_eq!(s.direction_change_count(V, TimeStep(3)), 1);
    }

    #[test]
    fn single_direction_fills_step() {
        let plans: Vec<_> = (0..5).map(|i| through(LEFT, 0, 9.0, i)).collect();
        let s = compile_schedules(&plans, 9.0, &mut rng()).unwrap();
        assert_eq!(
            s.blocks(V, TimeStep(0)).unwrap(),
            &[DirectionBlock {
                direction: LEFT,
                duration_s: 9.0,
                planned_count: 5
            }]
        );
        assert_eq!(s.direction_change_count(V, TimeStep(0)), 0);
        assert_eq!(s.direction_change_count(V, TimeStep(1)), 0);
    }

    #[test]
    fn proportional_durations() {
        let plans = vec![
            through(LEFT, 0, 40.0, 0),
            through(RIGHT, 0, 40.0, 1),
            through(AHEAD, 0, 40.0, 2),
            through(AHEAD, 0, 40.0, 3),
        ];
        let s = compile_schedules(&plans, 40.0, &mut rng()).unwrap();
        let mut got: Vec<(NodeIx, f64)> = s
            .blocks(V, TimeStep(0))
            .unwrap()
            .iter()
            .map(|b| (b.direction, b.duration_s))
            .collect();
        got.sort_by_key(|g| g.0);
        assert_eq!(got, vec![(LEFT, 10.0), (RIGHT, 10.0), (AHEAD, 20.0)]);
        let total: f64 = s
            .blocks(V, TimeStep(0))
            .unwrap()
            .iter()
            .map(|b| b.duration_s)
            .sum();
        assert_eq!(total, 40.0);
    }

    #[test]
    fn short_blocks_merge_into_largest() {
        // 1 of 12 over a 9 s step is 0.75 s
        let mut plans: Vec<_> = (0..11).map(|i| through(LEFT, 0, 9.0, i)).collect();
        plans.push(through(RIGHT, 0, 9.0, 11));
        let s = compile_schedules(&plans, 9.0, &mut rng()).unwrap();
        let blocks = s.blocks(V, TimeStep(0)).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].planned_count, 12);
        assert_eq!(blocks[0].duration_s, 9.0);
        assert_eq!(s.merges().len(), 1);
        assert_eq!(s.merges()[0].dropped, RIGHT);
        assert_eq!(s.merges()[0].into, LEFT);
    }

    #[test]
    fn reading_by_offset_and_fallback() {
        let delta = 40.0;
        let plans = vec![through(LEFT, 2, delta, 0), through(RIGHT, 2, delta, 1)];
        let s = compile_schedules(&plans, delta, &mut rng()).unwrap();
        let blocks = s.blocks(V, TimeStep(2)).unwrap();
        let (first, second) = (blocks[0].direction, blocks[1].direction);
        assert_eq!(s.direction_at(V, 80.0 + 5.0).unwrap().direction, first);
        assert_eq!(s.direction_at(V, 80.0 + 25.0).unwrap().direction, second);
        let early = s.direction_at(V, 10.0).unwrap();
        assert_eq!(early.direction, first);
        assert_eq!(early.fallback_from, Some(TimeStep(2)));
        assert_eq!(
            s.direction_at(V, 500.0).unwrap().fallback_from,
            Some(TimeStep(2))
        );
        assert_eq!(s.direction_at(9, 0.0), Err(SignError::NoSchedule(9)));
    }

    #[test]
    fn uniform_arrivals_realise_planned_split() {
        let delta = 36.0;
        let counts = [(LEFT, 3u32), (RIGHT, 5), (AHEAD, 4)];
        let mut plans = Vec::new();
        for &(d, c) in &counts {
            for _ in 0..c {
                plans.push(through(d, 1, delta, plans.len() as u32));
            }
        }
        let s = compile_schedules(&plans, delta, &mut rng()).unwrap();
        let n = plans.len();
        let mut realised = BTreeMap::new();
        for k in 0..n {
            // k-th of n evenly spaced arrivals, at the middle of its slot
            let t = delta + (k as f64 + 0.5) * delta / n as f64;
            *realised
                .entry(s.direction_at(V, t).unwrap().direction)
                .or_insert(0u32) += 1;
        }
        for (d, c) in counts {
            assert_eq!(realised[&d], c);
        }
    }

    #[test]
    fn grouping_minimises_direction_changes() {
        // every arrangement of the same per-direction counts changes at least
        // (directions - 1) times
        fn permutations(items: &mut Vec<NodeIx>, k: usize, best: &mut usize) {
            if k == items.len() {
                let changes = items.windows(2).filter(|w| w[0] != w[1]).count();
                *best = (*best).min(changes);
                return;
            }
            for i in k..items.len() {
                items.swap(k, i);
                permutations(items, k + 1, best);
                items.swap(k, i);
            }
        }
        for dirs in 1..=4usize {
            let mut plans = Vec::new();
            let mut seq = Vec::new();
            for d in 0..dirs {
                for _ in 0..2 {
                    plans.push(through(10 + d, 0, 64.0, plans.len() as u32));
                    seq.push(10 + d);
                }
            }
            let s = compile_schedules(&plans, 64.0, &mut rng()).unwrap();
            let mut best = usize::MAX;
            permutations(&mut seq, 0, &mut best);
            assert_eq!(s.direction_change_count(V, TimeStep(0)), best);
        }
    }

    #[test]
    fn block_order_depends_on_seed_only() {
        let plans: Vec<_> = (0..8)
            .map(|i| through(10 + (i % 4) as NodeIx, 0, 64.0, i))
            .collect();
        let a = compile_schedules(&plans, 64.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = compile_schedules(&plans, 64.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        let orders: std::collections::BTreeSet<Vec<NodeIx>> = (0..20)
            .map(|seed| {
                compile_schedules(&plans, 64.0, &mut ChaCha8Rng::seed_from_u64(seed))
                    .unwrap()
                    .blocks(V, TimeStep(0))
                    .unwrap()
                    .iter()
                    .map(|b| b.direction)
                    .collect()
            })
            .collect();
        assert!(orders.len() > 1);
        assert!(compile_schedules(&plans, 0.0, &mut rng()).is_err());
    }
}
