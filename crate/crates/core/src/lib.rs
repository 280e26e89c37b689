//! Generalized routing with mutual-information accumulation in cooperative
//! relay networks.
//!
//! The routing problem is split in two: pick a transmission order (which
//! relays decode, and in what sequence) with [`ordersearch`], then compute
//! the delay-optimal time allocation for that order by linear programming
//! in [`allocation`]. [`baseline`] provides conventional store-and-forward
//! shortest-path routing for comparison, [`distsim`] simulates distributed
//! policies that only react to realized decodes, and [`harness`] runs
//! seeded Monte-Carlo experiments.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases below fix `f64`, which is what the experiment harness and CLI use.

pub mod allocation;
pub mod baseline;
pub mod distsim;
pub mod harness;
pub mod lpsolve;
pub mod netmodel;
pub mod ordersearch;
pub mod rng;
pub mod scalar;

pub use allocation::{AllocError, Method, Semantics, TransmissionOrder};
pub use distsim::{EventKind, Policy};
pub use lpsolve::{LpError, LpStatus};
pub use scalar::Scalar;

pub type Node = netmodel::Node<f64>;
pub type ChannelParams = netmodel::ChannelParams<f64>;
pub type RateMatrix = netmodel::RateMatrix<f64>;
pub type Network = netmodel::Network<f64>;
pub type LpProblem = lpsolve::LpProblem<f64>;
pub type LpSolution = lpsolve::LpSolution<f64>;
pub type Allocation = allocation::Allocation<f64>;
pub type RouteSolution = allocation::RouteSolution<f64>;
pub type SearchConfig = ordersearch::SearchConfig<f64>;
pub type Path = baseline::Path<f64>;
pub type RouteComparison = baseline::RouteComparison<f64>;
pub type CompareConfig = baseline::CompareConfig<f64>;
pub type SimOptions = distsim::SimOptions<f64>;
pub type DistributedOutcome = distsim::DistributedOutcome<f64>;
pub type TraceEvent = distsim::TraceEvent<f64>;

/// Single-precision variants.
pub mod f32 {
    pub type Network = crate::netmodel::Network<f32>;
    pub type RateMatrix = crate::netmodel::RateMatrix<f32>;
    pub type LpProblem = crate::lpsolve::LpProblem<f32>;
    pub type LpSolution = crate::lpsolve::LpSolution<f32>;
    pub type Allocation = crate::allocation::Allocation<f32>;
    pub type RouteSolution = crate::allocation::RouteSolution<f32>;
    pub type SearchConfig = crate::ordersearch::SearchConfig<f32>;
}
