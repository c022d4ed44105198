//! Capacity-constrained evacuation planning and simulation.
//!
//! A building is a directed graph of capacitated nodes. Routes are planned one
//! evacuee at a time against a ledger of future node reservations, compiled
//! into time-varying exit-sign schedules, and checked in a discrete-event
//! egress simulator.

pub mod cpn;
pub mod experiment;
pub mod graph;
pub mod ledger;
pub mod planner;
mod search;
pub mod signs;
pub mod sim;
pub mod synth;

pub use graph::{BuildingGraph, Edge, EdgeSpec, GraphError, Node, NodeIx, Route};
pub use ledger::{ReservationLedger, TimeStep};
pub use planner::{plan_all, EvacueeSpec, PlanError, RoutePlan, SearchBackend};
pub use signs::{compile_schedules, SignSchedule};
pub use sim::{MobilityModel, Policy, SimConfig, SimResult};
