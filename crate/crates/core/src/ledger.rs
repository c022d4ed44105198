//! Future capacity reservation.
//!
//! The ledger counts how many evacuees are expected to be admitted at each
//! `(node, time-step)` cell. It is the congestion forecast consulted by the
//! planners: a full cell means the evacuee is held at the previous node until
//! a later step with spare capacity.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{BuildingGraph, NodeIx};

/// Index of a time-step of `delta` seconds.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct TimeStep(pub u64);

impl TimeStep {
    /// Step covering `time` seconds. Times a hair below a boundary because of
    /// rounding land on the boundary's step.
    pub fn of(time: f64, delta: f64) -> Self {
        Self(((time / delta) + 1e-9).floor().max(0.0) as u64)
    }

    pub fn start(self, delta: f64) -> f64 {
        self.0 as f64 * delta
    }
}

impl fmt::Display for TimeStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LedgerError {
    #[error("unknown node index {0}")]
    UnknownNode(NodeIx),
    #[error("node {node} is fully reserved at step {step}")]
    CapacityExceeded { node: NodeIx, step: TimeStep },
    #[error("time-step duration must be positive, got {0}")]
    BadDelta(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservationLedger {
    delta: f64,
    capacities: Vec<u32>,
    counts: BTreeMap<(NodeIx, TimeStep), u32>,
}

impl ReservationLedger {
    /// Empty ledger whose per-step capacities come from `g` at step `delta`.
    pub fn new(g: &BuildingGraph, delta: f64) -> Result<Self, LedgerError> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(LedgerError::BadDelta(delta));
        }
        let capacities = (0..g.node_count())
            .map(|v| g.step_capacity(v, delta))
            .collect();
        Ok(Self::with_capacities(delta, capacities))
    }

    pub fn with_capacities(delta: f64, capacities: Vec<u32>) -> Self {
        Self {
            delta,
            capacities,
            counts: BTreeMap::new(),
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn capacity(&self, node: NodeIx) -> Result<u32, LedgerError> {
        self.capacities
            .get(node)
            .copied()
            .ok_or(LedgerError::UnknownNode(node))
    }

    pub fn arrivals_in(&self, node: NodeIx, step: TimeStep) -> Result<u32, LedgerError> {
        self.capacity(node)?;
        Ok(self.counts.get(&(node, step)).copied().unwrap_or(0))
    }

    pub fn residual(&self, node: NodeIx, step: TimeStep) -> Result<u32, LedgerError> {
        Ok(self.capacity(node)? - self.arrivals_in(node, step)?)
    }

    pub fn reserve(&mut self, node: NodeIx, step: TimeStep) -> Result<(), LedgerError> {
        let cap = self.capacity(node)?;
        let cell = self.counts.entry((node, step)).or_insert(0);
        if *cell >= cap {
            return Err(LedgerError::CapacityExceeded { node, step });
        }
        *cell += 1;
        debug_assert!(*cell <= cap);
        Ok(())
    }

    /// Smallest step `>= step` in which `node` still has spare capacity.
    pub fn earliest_available(
        &self,
        node: NodeIx,
        step: TimeStep,
    ) -> Result<TimeStep, LedgerError> {
        let cap = self.capacity(node)?;
        let mut t = step;
        for (&(_, s), &c) in self.counts.range((node, step)..=(node, TimeStep(u64::MAX))) {
            if s != t {
                break;
            }
            if c < cap {
                break;
            }
            t = TimeStep(t.0 + 1);
        }
        Ok(t)
    }

    /// Time at which an evacuee reaching `node` at `time` is admitted: the
    /// arrival itself if its step has room, otherwise the start of the first
    /// step with room.
    pub fn admission_time(&self, node: NodeIx, time: f64) -> Result<f64, LedgerError> {
        let step = TimeStep::of(time, self.delta);
        let open = self.earliest_available(node, step)?;
        Ok(if open == step {
            time
        } else {
            open.start(self.delta)
        })
    }

    pub fn is_full(&self, node: NodeIx, step: TimeStep) -> bool {
        matches!(self.residual(node, step), Ok(0))
    }

    /// Non-zero cells in `(node, step)` order.
    pub fn cells(&self) -> impl Iterator<Item = (NodeIx, TimeStep, u32)> + '_ {
        self.counts.iter().map(|(&(v, s), &c)| (v, s, c))
    }

    pub fn total_reserved(&self) -> u64 {
        self.counts.values().map(|&c| u64::from(c)).sum()
    }

    /// CSV dump: `node_id,step,reserved,capacity`.
    pub fn write_csv<W: Write>(&self, g: &BuildingGraph, sink: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["node_id", "step", "reserved", "capacity"])?;
        for (v, s, c) in self.cells() {
            w.write_record([
                g.node(v).id.clone(),
                s.to_string(),
                c.to_string(),
                self.capacities[v].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ledger(caps: &[u32]) -> ReservationLedger {
        ReservationLedger::with_capacities(10.0, caps.to_vec())
    }

    #[test]
    fn reserve_counts_and_overflow() {
        let mut l = ledger(&[3]);
        l.reserve(0, TimeStep(5)).unwrap();
        assert_eq!(l.arrivals_in(0, TimeStep(5)), Ok(1));
        l.reserve(0, TimeStep(5)).unwrap();
        l.reserve(0, TimeStep(5)).unwrap();
        assert_eq!(
            l.reserve(0, TimeStep(5)),
            Err(LedgerError::CapacityExceeded {
                node: 0,
                step: TimeStep(5)
            })
        );
        assert_eq!(l.arrivals_in(0, TimeStep(5)), Ok(3));
    }

    #[test]
    fn twelve_reservations_in_one_cell() {
        let mut l = ledger(&[12]);
        for _ in 0..12 {
            l.reserve(0, TimeStep(2)).unwrap();
        }
        assert_eq!(l.arrivals_in(0, TimeStep(2)), Ok(12));
        assert_eq!(l.residual(0, TimeStep(2)), Ok(0));
    }

    #[test]
    fn earliest_available_skips_full_steps() {
        let mut l = ledger(&[1]);
        assert_eq!(l.earliest_available(0, TimeStep(4)), Ok(TimeStep(4)));
        l.reserve(0, TimeStep(4)).unwrap();
        l.reserve(0, TimeStep(5)).unwrap();
        assert_eq!(l.earliest_available(0, TimeStep(4)), Ok(TimeStep(6)));
        assert_eq!(l.earliest_available(0, TimeStep(3)), Ok(TimeStep(3)));
        assert!((l.admission_time(0, 41.0).unwrap() - 60.0).abs() < 1e-12);
        assert_eq!(l.admission_time(0, 33.0).unwrap(), 33.0);
    }

    #[test]
    fn residual_and_unknown_node() {
        let mut l = ledger(&[4]);
        assert_eq!(l.residual(0, TimeStep(0)), Ok(4));
        for k in 1..=3 {
            l.reserve(0, TimeStep(1)).unwrap();
            assert_eq!(l.residual(0, TimeStep(1)), Ok(4 - k));
        }
        assert_eq!(l.residual(1, TimeStep(0)), Err(LedgerError::UnknownNode(1)));
        assert_eq!(
            l.arrivals_in(7, TimeStep(0)),
            Err(LedgerError::UnknownNode(7))
        );
    }

    #[test]
    fn time_step_of_boundaries() {
        assert_eq!(TimeStep::of(0.0, 9.0), TimeStep(0));
        assert_eq!(TimeStep::of(8.999, 9.0), TimeStep(0));
        assert_eq!(TimeStep::of(9.0, 9.0), TimeStep(1));
        assert_eq!(TimeStep::of(3.0 * 0.1, 0.1), TimeStep(3));
    }

    proptest! {
        #[test]
        fn earliest_available_matches_linear_scan(
            caps in proptest::collection::vec(1u32..4, 1..4),
            ops in proptest::collection::vec((0usize..4, 0u64..12), 0..60),
            query in 0u64..14,
        ) {
            let mut l = ledger(&caps);
            let mut reserved = 0u64;
            for (v, s) in ops {
                let v = v % caps.len();
                if l.reserve(v, TimeStep(s)).is_ok() {
                    reserved += 1;
                }
            }
            prop_assert_eq!(l.total_reserved(), reserved);
            for v in 0..caps.len() {
                let snapshot = l.clone();
                let got = l.earliest_available(v, TimeStep(query)).unwrap();
                prop_assert_eq!(&snapshot, &l);
                let mut t = query;
                while l.arrivals_in(v, TimeStep(t)).unwrap() >= caps[v] {
                    t += 1;
                }
                prop_assert_eq!(got, TimeStep(t));
                // monotone in the query step
                let later = l.earliest_available(v, TimeStep(query + 1)).unwrap();
                prop_assert!(later >= got);
                for s in 0..14 {
                    prop_assert!(l.arrivals_in(v, TimeStep(s)).unwrap() <= caps[v]);
                }
            }
        }

        #[test]
        fn reserve_touches_exactly_one_cell(
            ops in proptest::collection::vec((0usize..3, 0u64..6), 1..30),
        ) {
            let mut l = ledger(&[5, 5, 5]);
            for (v, s) in ops {
                let before = l.clone();
                if l.reserve(v, TimeStep(s)).is_ok() {
                    prop_assert_eq!(
                        l.residual(v, TimeStep(s)).unwrap() + 1,
                        before.residual(v, TimeStep(s)).unwrap()
                    );
                    for u in 0..3 {
                        for t in 0..6 {
                            if (u, t) != (v, s) {
                                prop_assert_eq!(
                                    l.arrivals_in(u, TimeStep(t)),
                                    before.arrivals_in(u, TimeStep(t))
                                );
                            }
                        }
                    }
                }
            }
        }
    }
}
