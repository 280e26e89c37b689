//! Conventional store-and-forward routing and the route comparison.
//!
//! Each hop carries the whole message, so hop `i -> j` costs `B / C(i->j)`
//! seconds and `P_i B / C(i->j)` joules, and nodes off the path contribute
//! nothing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{Semantics, TransmissionOrder};
use crate::distsim::{self, Policy, SimError, SimOptions};
use crate::netmodel::Network;
use crate::ordersearch::{self, SearchConfig, SearchError};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum RouteError<T: Scalar> {
    #[error("no route from {from} to {to} over positive-rate links")]
    NoRoute { from: usize, to: usize },
    #[error("message size must be positive and finite")]
    InvalidBits,
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("{policy}: {error}")]
    Distributed { policy: Policy, error: SimError<T> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Path<T: Scalar> {
    pub nodes: Vec<usize>,
    /// Seconds spent on each hop, in path order.
    pub per_hop_delay: Vec<T>,
    pub total_delay: T,
    pub total_energy: T,
}

impl<T: Scalar> Path<T> {
    pub fn to_order(&self) -> TransmissionOrder {
        TransmissionOrder::from_vec_unchecked(self.nodes.clone())
    }
}

/// Dijkstra on link weights `B / C(i->j)`. Among equal-cost routes the
/// predecessor with the smaller id wins.
pub fn shortest_path<T: Scalar>(net: &Network<T>, bits: T) -> Result<Path<T>, RouteError<T>> {
    if !(bits.is_finite() && bits > T::zero()) {
        return Err(RouteError::InvalidBits);
    }
    let n = net.len();
    let rates = net.rates();
    let (source, destination) = (net.source(), net.destination());
    let mut dist = vec![T::infinity(); n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut settled = vec![false; n];
    dist[source] = T::zero();
    loop {
        let mut u = None;
        for v in 0..n {
            if !settled[v] && dist[v].is_finite() && u.is_none_or(|w: usize| dist[v] < dist[w]) {
                u = Some(v);
            }
        }
        let Some(u) = u else { break };
        settled[u] = true;
        if u == destination {
            break;
        }
        for v in 0..n {
            let c = rates.get(u, v);
            if settled[v] || c <= T::zero() {
                continue;
            }
            let cand = dist[u] + bits / c;
            let better = cand < dist[v] || (cand == dist[v] && pred[v].is_none_or(|p| u < p));
            if better {
                dist[v] = cand;
                pred[v] = Some(u);
            }
        }
    }
    if !dist[destination].is_finite() {
        return Err(RouteError::NoRoute {
            from: source,
            to: destination,
        });
    }
    let mut nodes = vec![destination];
    while let Some(p) = pred[*nodes.last().unwrap()] {
        nodes.push(p);
    }
    nodes.reverse();
    Ok(path_costs(net, bits, nodes))
}

/// Store-and-forward delay and energy of an explicit hop sequence.
pub fn path_costs<T: Scalar>(net: &Network<T>, bits: T, nodes: Vec<usize>) -> Path<T> {
    let rates = net.rates();
    let per_hop_delay: Vec<T> = nodes.windows(2).map(|h| bits / rates.get(h[0], h[1])).collect();
    let total_energy = nodes
        .windows(2)
        .zip(&per_hop_delay)
        .map(|(h, &t)| net.power(h[0]) * t)
        .sum();
    Path {
        total_delay: per_hop_delay.iter().copied().sum(),
        per_hop_delay,
        total_energy,
        nodes,
    }
}

/// Allocation semantics whose LP optimum lower-bounds `policy`.
pub fn reference_semantics(policy: Policy) -> Semantics {
    match policy {
        Policy::LatestDecoder | Policy::RoundRobin => Semantics::Orthogonal,
        Policy::BroadcastAll => Semantics::BroadcastAll,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct CompareConfig<T: Scalar> {
    pub search: SearchConfig<T>,
    pub policies: Vec<Policy>,
    pub sim: SimOptions<T>,
}

impl<T: Scalar> Default for CompareConfig<T> {
    fn default() -> Self {
        Self {
            search: SearchConfig::default(),
            policies: Policy::ALL.to_vec(),
            sim: SimOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PolicyResult<T: Scalar> {
    pub policy: Policy,
    pub delay: T,
    pub energy: T,
    pub decode_order: TransmissionOrder,
    /// Centralized optimum under [`reference_semantics`] of the policy.
    pub reference_delay: T,
    /// `delay / reference_delay`.
    pub ratio: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RouteComparison<T: Scalar> {
    pub sp_path: Vec<usize>,
    pub sp_delay: T,
    pub sp_energy: T,
    pub coop_order: TransmissionOrder,
    pub coop_delay: T,
    pub coop_energy: T,
    /// `sp_delay / coop_delay`.
    pub sp_over_coop: T,
    pub distributed: Vec<PolicyResult<T>>,
}

impl<T: Scalar> RouteComparison<T> {
    pub fn policy(&self, policy: Policy) -> Option<&PolicyResult<T>> {
        self.distributed.iter().find(|r| r.policy == policy)
    }
}

/// Shortest path, centralized search and every configured distributed
/// policy on one network.
pub fn compare_routes<T: Scalar>(
    net: &Network<T>,
    bits: T,
    cfg: &CompareConfig<T>,
) -> Result<RouteComparison<T>, RouteError<T>> {
    let sp = shortest_path(net, bits)?;
    let coop = ordersearch::best_order(net, bits, &cfg.search)?;
    let mut other: Option<(Semantics, T)> = None;
    let mut distributed = Vec::with_capacity(cfg.policies.len());
    for &policy in &cfg.policies {
        let out = distsim::simulate_distributed_with(net, bits, policy, &cfg.sim)
            .map_err(|error| RouteError::Distributed { policy, error })?;
        let sem = reference_semantics(policy);
        let reference_delay = if sem == cfg.search.semantics {
            coop.allocation.delay
        } else {
            match other {
                Some((s, d)) if s == sem => d,
                _ => {
                    let search = SearchConfig {
                        semantics: sem,
                        ..cfg.search
                    };
                    let d = ordersearch::best_order(net, bits, &search)?.allocation.delay;
                    other = Some((sem, d));
                    d
                }
            }
        };
        distributed.push(PolicyResult {
            policy,
            delay: out.delay,
            energy: out.energy,
            decode_order: out.decode_order,
            reference_delay,
            ratio: out.delay / reference_delay,
        });
    }
    Ok(RouteComparison {
        sp_over_coop: sp.total_delay / coop.allocation.delay,
        sp_path: sp.nodes,
        sp_delay: sp.total_delay,
        sp_energy: sp.total_energy,
        coop_order: coop.order,
        coop_delay: coop.allocation.delay,
        coop_energy: coop.allocation.energy,
        distributed,
    })
}
