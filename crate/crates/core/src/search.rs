//! Label-setting earliest-arrival search shared by the free-flow and the
//! congestion-aware route finders.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::graph::{BuildingGraph, Edge, NodeIx};

struct Label {
    time: f64,
    hops: Vec<(NodeIx, f64)>,
}

impl Label {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then_with(|| {
            self.hops
                .iter()
                .map(|h| h.0)
                .cmp(other.hops.iter().map(|h| h.0))
        })
    }
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_key(other) == Ordering::Equal
    }
}

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.cmp_key(self)
    }
}

/// Earliest arrival at any exit starting from `src` at time `start_time`.
///
/// `advance(tail, edge, t)` maps the time at the tail of `edge` to the time the
/// head node is reached. It must be non-decreasing in `t` and satisfy
/// `advance(.., t) > t`; under those conditions the first exit settled is
/// optimal. Equal times are broken by the lexicographically smallest node
/// sequence. Returns the node sequence and the time at every hop.
pub(crate) fn earliest_arrival<F>(
    g: &BuildingGraph,
    src: NodeIx,
    start_time: f64,
    mut advance: F,
) -> Option<(Vec<NodeIx>, Vec<f64>)>
where
    F: FnMut(NodeIx, &Edge, f64) -> f64,
{
    let mut settled = vec![false; g.node_count()];
    let mut best: Vec<Option<f64>> = vec![None; g.node_count()];
    let mut heap = BinaryHeap::new();
    best[src] = Some(start_time);
    heap.push(Label {
        time: start_time,
        hops: vec![(src, start_time)],
    });
    while let Some(label) = heap.pop() {
        let (v, t) = *label.hops.last().expect("labels are non-empty");
        if settled[v] {
            continue;
        }
        settled[v] = true;
        if g.is_exit(v) {
            return Some(label.hops.into_iter().unzip());
        }
        for e in g.out_edges(v) {
            if settled[e.to] {
                continue;
            }
            let arrival = advance(v, e, t);
            // equal times stay in the heap so the path order can decide
            if best[e.to].is_some_and(|b| arrival > b) {
                continue;
            }
            best[e.to] = Some(arrival);
            let mut hops = label.hops.clone();
            hops.push((e.to, arrival));
            heap.push(Label {
                time: arrival,
                hops,
            });
        }
    }
    None
}
