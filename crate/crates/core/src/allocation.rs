//! Resource allocation for a fixed transmission order.
//!
//! An order `v0 -> v1 -> ... -> vK` fixes the sequence in which nodes decode.
//! Phase `k` ends when `v_k` has accumulated `B` bits of mutual information;
//! during it any already-decoded node `v_m` (`m < k`) may transmit. Every
//! node in the order accumulates from every transmission it hears, across
//! phases, without loss.
//!
//! Two resource models are supported:
//!
//! * [`Semantics::Orthogonal`]: one transmitter at a time. Variables
//!   `x[k][m]` are the seconds `v_m` transmits in phase `k`; the delay is the
//!   sum of all of them.
//! * [`Semantics::BroadcastAll`]: all decoded nodes transmit together and a
//!   receiver's rate is the sum of its incoming link rates. Variables are the
//!   phase lengths.
//!
//! Both lead to a small LP with one accumulation constraint per node after
//! the source.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lpsolve::{self, LpError, LpProblem, LpStatus};
use crate::netmodel::{Network, RateMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum AllocError {
    #[error("invalid transmission order: {0}")]
    InvalidOrder(String),
    #[error("infeasible order: node {node} hears no predecessor at positive rate")]
    InfeasibleOrder { node: usize },
    #[error("message size must be positive and finite")]
    InvalidBits,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("internal fault: {0}")]
    Internal(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semantics {
    #[default]
    Orthogonal,
    BroadcastAll,
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Semantics::Orthogonal => "orthogonal",
            Semantics::BroadcastAll => "broadcast_all",
        })
    }
}

/// Source, relays in decoding order, destination.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransmissionOrder(Vec<usize>);

impl TransmissionOrder {
    pub fn new<T: Scalar>(nodes: Vec<usize>, net: &Network<T>) -> Result<Self, AllocError> {
        if nodes.len() < 2 {
            return Err(AllocError::InvalidOrder("needs at least source and destination".into()));
        }
        if nodes[0] != net.source() {
            return Err(AllocError::InvalidOrder(format!(
                "starts at {} instead of source {}",
                nodes[0],
                net.source()
            )));
        }
        if *nodes.last().unwrap() != net.destination() {
            return Err(AllocError::InvalidOrder(format!(
                "ends at {} instead of destination {}",
                nodes.last().unwrap(),
                net.destination()
            )));
        }
        let mut seen = vec![false; net.len()];
        for &v in &nodes {
            if v >= net.len() {
                return Err(AllocError::InvalidOrder(format!("unknown node {v}")));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(AllocError::InvalidOrder(format!("node {v} repeated")));
            }
        }
        Ok(Self(nodes))
    }

    /// Source straight to destination.
    pub fn direct<T: Scalar>(net: &Network<T>) -> Self {
        Self(vec![net.source(), net.destination()])
    }

    pub(crate) fn from_vec_unchecked(nodes: Vec<usize>) -> Self {
        Self(nodes)
    }

    pub fn nodes(&self) -> &[usize] {
        &self.0
    }

    /// Number of phases, i.e. nodes after the source.
    pub fn phases(&self) -> usize {
        self.0.len() - 1
    }

    pub fn relays(&self) -> &[usize] {
        &self.0[1..self.0.len() - 1]
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl fmt::Display for TransmissionOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("-"))
    }
}

/// Index of `x[k][m]` (phase `k >= 1`, transmitter `m < k`) in the
/// Orthogonal variable vector.
#[inline]
pub fn orthogonal_index(k: usize, m: usize) -> usize {
    debug_assert!(m < k);
    k * (k - 1) / 2 + m
}

pub fn num_variables(phases: usize, semantics: Semantics) -> usize {
    match semantics {
        Semantics::Orthogonal => phases * (phases + 1) / 2,
        Semantics::BroadcastAll => phases,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Allocation<T: Scalar> {
    pub semantics: Semantics,
    /// Orthogonal: `x[k][m]` laid out by [`orthogonal_index`].
    /// BroadcastAll: phase lengths, phase 1 first.
    pub durations: Vec<T>,
    /// Seconds until the destination decodes.
    pub delay: T,
    /// Joules spent by all transmitters.
    pub energy: T,
}

impl<T: Scalar> Allocation<T> {
    /// Seconds `v_m` spends transmitting during phase `k`.
    pub fn transmit_time(&self, k: usize, m: usize) -> T {
        match self.semantics {
            Semantics::Orthogonal => self.durations[orthogonal_index(k, m)],
            Semantics::BroadcastAll => self.durations[k - 1],
        }
    }

    /// Length of phase `k`.
    pub fn phase_length(&self, k: usize) -> T {
        match self.semantics {
            Semantics::Orthogonal => (0..k).map(|m| self.durations[orthogonal_index(k, m)]).sum(),
            Semantics::BroadcastAll => self.durations[k - 1],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exhaustive,
    Greedy,
    LocalSearch,
    Distributed,
    ShortestPath,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exhaustive => "exhaustive",
            Method::Greedy => "greedy",
            Method::LocalSearch => "local-search",
            Method::Distributed => "distributed",
            Method::ShortestPath => "shortest-path",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RouteSolution<T: Scalar> {
    pub order: TransmissionOrder,
    pub allocation: Allocation<T>,
    pub method: Method,
}

fn check_reachable<T: Scalar>(order: &TransmissionOrder, rates: &RateMatrix<T>) -> Result<(), AllocError> {
    let v = order.nodes();
    for k in 1..v.len() {
        if (0..k).all(|m| rates.get(v[m], v[k]) <= T::zero()) {
            return Err(AllocError::InfeasibleOrder { node: v[k] });
        }
    }
    Ok(())
}

/// Delay-minimizing LP for `order`: minimize total time subject to every
/// node after the source accumulating at least `bits` by the end of its
/// phase.
pub fn build_delay_lp<T: Scalar>(
    order: &TransmissionOrder,
    rates: &RateMatrix<T>,
    bits: T,
    semantics: Semantics,
) -> Result<LpProblem<T>, AllocError> {
    if !(bits.is_finite() && bits > T::zero()) {
        return Err(AllocError::InvalidBits);
    }
    check_reachable(order, rates)?;
    let v = order.nodes();
    let phases = order.phases();
    let nvars = num_variables(phases, semantics);
    let mut rows = Vec::with_capacity(phases);
    for k in 1..=phases {
        let mut row = vec![T::zero(); nvars];
        for j in 1..=k {
            match semantics {
                Semantics::Orthogonal => {
                    for m in 0..j {
                        row[orthogonal_index(j, m)] = rates.get(v[m], v[k]);
                    }
                }
                Semantics::BroadcastAll => {
                    row[j - 1] = (0..j).map(|m| rates.get(v[m], v[k])).sum();
                }
            }
        }
        rows.push(row);
    }
    Ok(LpProblem::new(vec![T::one(); nvars], rows, vec![bits; phases])?)
}

/// Energy per unit of each LP variable.
fn energy_weights<T: Scalar>(order: &TransmissionOrder, net: &Network<T>, semantics: Semantics) -> Vec<T> {
    let v = order.nodes();
    let phases = order.phases();
    match semantics {
        Semantics::Orthogonal => {
            let mut w = vec![T::zero(); num_variables(phases, semantics)];
            for k in 1..=phases {
                for m in 0..k {
                    w[orthogonal_index(k, m)] = net.power(v[m]);
                }
            }
            w
        }
        Semantics::BroadcastAll => (1..=phases)
            .map(|k| (0..k).map(|m| net.power(v[m])).sum())
            .collect(),
    }
}

/// Joules spent by `alloc` on `order`.
pub fn energy_of<T: Scalar>(alloc: &Allocation<T>, net: &Network<T>, order: &TransmissionOrder) -> T {
    energy_weights(order, net, alloc.semantics)
        .into_iter()
        .zip(&alloc.durations)
        .map(|(w, &x)| w * x)
        .sum()
}

fn make_allocation<T: Scalar>(
    durations: Vec<T>,
    semantics: Semantics,
    net: &Network<T>,
    order: &TransmissionOrder,
) -> Allocation<T> {
    let mut alloc = Allocation {
        semantics,
        delay: durations.iter().copied().sum(),
        durations,
        energy: T::zero(),
    };
    alloc.energy = energy_of(&alloc, net, order);
    alloc
}

fn solve_optimal<T: Scalar>(p: &LpProblem<T>, tol: T) -> Result<lpsolve::LpSolution<T>, AllocError> {
    let sol = lpsolve::solve(p, tol)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        // every row has a positive coefficient and all costs are positive
        other => Err(AllocError::Internal(format!("allocation LP reported {other:?}"))),
    }
}

/// Minimum delay for `order`, without building an [`Allocation`].
pub fn optimal_delay<T: Scalar>(
    order: &TransmissionOrder,
    rates: &RateMatrix<T>,
    bits: T,
    semantics: Semantics,
    tol: T,
) -> Result<T, AllocError> {
    let lp = build_delay_lp(order, rates, bits, semantics)?;
    Ok(solve_optimal(&lp, tol)?.objective)
}

/// Relative slack on the delay when picking the least-energy allocation
/// among delay-optimal ones.
const TIE_SLACK: f64 = 1e-9;

/// Delay-optimal allocation for `order`. Among allocations within
/// `1e-9` relative of the minimum delay, the one with least energy is
/// returned.
pub fn optimal_allocation<T: Scalar>(
    order: &TransmissionOrder,
    net: &Network<T>,
    bits: T,
    semantics: Semantics,
    tol: T,
) -> Result<Allocation<T>, AllocError> {
    let mut lp = build_delay_lp(order, net.rates(), bits, semantics)?;
    let best = solve_optimal(&lp, tol)?;
    let weights = energy_weights(order, net, semantics);
    // Equal weights make the energy objective a multiple of the delay
    // objective; the tie-break would return the same point.
    if weights.iter().all(|&w| w == weights[0]) {
        return Ok(make_allocation(best.x, semantics, net, order));
    }
    let cap = best.objective * (T::one() + T::lit(TIE_SLACK));
    lp.push_constraint(vec![-T::one(); lp.num_vars()], -cap)?;
    let tie_broken = solve_optimal(&lp.with_objective(weights)?, tol)?;
    Ok(make_allocation(tie_broken.x, semantics, net, order))
}

/// Same constraints as the delay LP, minimizing energy instead.
pub fn min_energy_allocation<T: Scalar>(
    order: &TransmissionOrder,
    net: &Network<T>,
    bits: T,
    semantics: Semantics,
    tol: T,
) -> Result<Allocation<T>, AllocError> {
    let lp = build_delay_lp(order, net.rates(), bits, semantics)?;
    let lp = lp.with_objective(energy_weights(order, net, semantics))?;
    let sol = solve_optimal(&lp, tol)?;
    Ok(make_allocation(sol.x, semantics, net, order))
}

/// Orthogonal allocation that, phase by phase, lets only the predecessor
/// with the strongest link to the next decoder transmit, exactly long
/// enough to close that node's remaining deficit. Always feasible, so it
/// upper-bounds the LP optimum.
pub fn greedy_forward_allocation<T: Scalar>(
    order: &TransmissionOrder,
    net: &Network<T>,
    bits: T,
) -> Result<Allocation<T>, AllocError> {
    if !(bits.is_finite() && bits > T::zero()) {
        return Err(AllocError::InvalidBits);
    }
    let rates = net.rates();
    check_reachable(order, rates)?;
    let v = order.nodes();
    let phases = order.phases();
    let mut x = vec![T::zero(); num_variables(phases, Semantics::Orthogonal)];
    for k in 1..=phases {
        let heard: T = (1..k)
            .flat_map(|j| (0..j).map(move |m| (j, m)))
            .map(|(j, m)| x[orthogonal_index(j, m)] * rates.get(v[m], v[k]))
            .sum();
        let deficit = bits - heard;
        if deficit <= T::zero() {
            continue;
        }
        let mut best = 0;
        for m in 1..k {
            if rates.get(v[m], v[k]) > rates.get(v[best], v[k]) {
                best = m;
            }
        }
        x[orthogonal_index(k, best)] = deficit / rates.get(v[best], v[k]);
    }
    Ok(make_allocation(x, Semantics::Orthogonal, net, order))
}
