//! Search over transmission orders.
//!
//! An order is an ordered subset of relays between source and destination,
//! so choosing it selects relays and sequences them at once. Small networks
//! are enumerated exhaustively; larger ones use greedy insertion polished
//! by local search.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{self, AllocError, Method, RouteSolution, Semantics, TransmissionOrder};
use crate::baseline;
use crate::netmodel::Network;
use crate::scalar::{rel_eq, Scalar};

/// Hard cap on exhaustive enumeration (8 nodes = 1957 orders).
pub const EXHAUSTIVE_LIMIT: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("exhaustive search limited to {limit} nodes, network has {nodes}")]
    TooLarge { nodes: usize, limit: usize },
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error("no transmission order reaches the destination")]
    NoFeasibleOrder,
    #[error(transparent)]
    Alloc(#[from] AllocError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct SearchConfig<T: Scalar> {
    pub max_exhaustive_nodes: usize,
    pub max_iterations: usize,
    pub tol: T,
    pub semantics: Semantics,
}

impl<T: Scalar> Default for SearchConfig<T> {
    fn default() -> Self {
        Self {
            max_exhaustive_nodes: 7,
            max_iterations: 1000,
            tol: T::default_tol(),
            semantics: Semantics::Orthogonal,
        }
    }
}

impl<T: Scalar> SearchConfig<T> {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.max_exhaustive_nodes > EXHAUSTIVE_LIMIT {
            return Err(SearchError::Config(format!(
                "max_exhaustive_nodes must be <= {EXHAUSTIVE_LIMIT}"
            )));
        }
        if self.max_iterations < 1 {
            return Err(SearchError::Config("max_iterations must be >= 1".into()));
        }
        let t = self.tol.as_f64();
        if !(t > 0.0 && t <= 1e-3) {
            return Err(SearchError::Config(format!("tol must lie in (0, 1e-3], got {t}")));
        }
        Ok(())
    }

    fn improves(&self, candidate: T, current: T) -> bool {
        if current.is_infinite() {
            return candidate.is_finite();
        }
        current - candidate > self.tol * (T::one() + current)
    }
}

/// Memoized order -> optimal delay; infeasible orders map to +inf.
struct Evaluator<'a, T: Scalar> {
    net: &'a Network<T>,
    bits: T,
    cfg: &'a SearchConfig<T>,
    cache: HashMap<Vec<usize>, T>,
}

impl<'a, T: Scalar> Evaluator<'a, T> {
    fn new(net: &'a Network<T>, bits: T, cfg: &'a SearchConfig<T>) -> Self {
        Self {
            net,
            bits,
            cfg,
            cache: HashMap::new(),
        }
    }

    fn delay(&mut self, order: &[usize]) -> Result<T, SearchError> {
        if let Some(&d) = self.cache.get(order) {
            return Ok(d);
        }
        let o = TransmissionOrder::from_vec_unchecked(order.to_vec());
        let d = match allocation::optimal_delay(&o, self.net.rates(), self.bits, self.cfg.semantics, self.cfg.tol) {
            Ok(d) => d,
            Err(AllocError::InfeasibleOrder { .. }) => T::infinity(),
            Err(e) => return Err(e.into()),
        };
        self.cache.insert(order.to_vec(), d);
        Ok(d)
    }
}

fn finish<T: Scalar>(
    net: &Network<T>,
    bits: T,
    cfg: &SearchConfig<T>,
    order: Vec<usize>,
    method: Method,
) -> Result<RouteSolution<T>, SearchError> {
    let order = TransmissionOrder::from_vec_unchecked(order);
    let allocation = allocation::optimal_allocation(&order, net, bits, cfg.semantics, cfg.tol)?;
    Ok(RouteSolution {
        order,
        allocation,
        method,
    })
}

fn check_bits<T: Scalar>(bits: T) -> Result<(), SearchError> {
    if bits.is_finite() && bits > T::zero() {
        Ok(())
    } else {
        Err(AllocError::InvalidBits.into())
    }
}

/// Calls `visit` with every order `source, (ordered relay subset), destination`.
fn for_each_order(
    relays: &[usize],
    source: usize,
    destination: usize,
    visit: &mut dyn FnMut(&[usize]) -> Result<(), SearchError>,
) -> Result<(), SearchError> {
    fn rec(
        relays: &[usize],
        used: &mut [bool],
        prefix: &mut Vec<usize>,
        destination: usize,
        visit: &mut dyn FnMut(&[usize]) -> Result<(), SearchError>,
    ) -> Result<(), SearchError> {
        prefix.push(destination);
        visit(prefix)?;
        prefix.pop();
        for i in 0..relays.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(relays[i]);
                rec(relays, used, prefix, destination, visit)?;
                prefix.pop();
                used[i] = false;
            }
        }
        Ok(())
    }
    let mut used = vec![false; relays.len()];
    let mut prefix = vec![source];
    rec(relays, &mut used, &mut prefix, destination, visit)
}

fn relay_candidates<T: Scalar>(net: &Network<T>) -> Vec<usize> {
    (0..net.len())
        .filter(|&v| v != net.source() && v != net.destination())
        .collect()
}

/// Global minimum-delay order by enumeration. Delays within `tol`
/// (relative) of the minimum tie; ties go to lower energy, then to the
/// lexicographically smaller order.
pub fn exhaustive_best_order<T: Scalar>(
    net: &Network<T>,
    bits: T,
    cfg: &SearchConfig<T>,
) -> Result<RouteSolution<T>, SearchError> {
    cfg.validate()?;
    check_bits(bits)?;
    if net.len() > cfg.max_exhaustive_nodes {
        return Err(SearchError::TooLarge {
            nodes: net.len(),
            limit: cfg.max_exhaustive_nodes,
        });
    }
    let mut eval = Evaluator::new(net, bits, cfg);
    let mut scored: Vec<(T, Vec<usize>)> = Vec::new();
    for_each_order(&relay_candidates(net), net.source(), net.destination(), &mut |o| {
        let d = eval.delay(o)?;
        if d.is_finite() {
            scored.push((d, o.to_vec()));
        }
        Ok(())
    })?;
    let best = scored
        .iter()
        .map(|(d, _)| *d)
        .fold(T::infinity(), T::min);
    if best.is_infinite() {
        return Err(SearchError::NoFeasibleOrder);
    }
    let mut tied: Vec<Vec<usize>> = scored
        .into_iter()
        .filter(|(d, _)| *d <= best || rel_eq(*d, best, cfg.tol))
        .map(|(_, o)| o)
        .collect();
    tied.sort();
    let mut winner: Option<RouteSolution<T>> = None;
    for order in tied {
        let cand = finish(net, bits, cfg, order, Method::Exhaustive)?;
        let better = match &winner {
            None => true,
            Some(w) => {
                let (e, we) = (cand.allocation.energy, w.allocation.energy);
                e < we && !rel_eq(e, we, cfg.tol)
            }
        };
        if better {
            winner = Some(cand);
        }
    }
    Ok(winner.expect("at least one tied order"))
}

/// Grows the order from `source -> destination` by the single
/// (node, position) insertion that lowers the delay most, until no
/// insertion improves by more than `tol * (1 + delay)`. Equal gains go to
/// the smaller node id, then the earlier position.
pub fn greedy_insertion_search<T: Scalar>(
    net: &Network<T>,
    bits: T,
    cfg: &SearchConfig<T>,
) -> Result<RouteSolution<T>, SearchError> {
    cfg.validate()?;
    check_bits(bits)?;
    let mut eval = Evaluator::new(net, bits, cfg);
    let order = greedy_insertion_order(&mut eval, vec![net.source(), net.destination()])?;
    if eval.delay(&order)?.is_infinite() {
        return Err(SearchError::NoFeasibleOrder);
    }
    finish(net, bits, cfg, order, Method::Greedy)
}

fn greedy_insertion_order<T: Scalar>(
    eval: &mut Evaluator<'_, T>,
    mut order: Vec<usize>,
) -> Result<Vec<usize>, SearchError> {
    let n = eval.net.len();
    let mut current = eval.delay(&order)?;
    for _ in 0..eval.cfg.max_iterations {
        let mut in_order = vec![false; n];
        order.iter().for_each(|&v| in_order[v] = true);
        let mut best: Option<(T, Vec<usize>)> = None;
        for v in (0..n).filter(|&v| !in_order[v]) {
            for pos in 1..order.len() {
                let mut cand = order.clone();
                cand.insert(pos, v);
                let d = eval.delay(&cand)?;
                if best.as_ref().map_or(d.is_finite(), |(bd, _)| d < *bd) {
                    best = Some((d, cand));
                }
            }
        }
        match best {
            Some((d, cand)) if eval.cfg.improves(d, current) => {
                order = cand;
                current = d;
            }
            _ => break,
        }
    }
    Ok(order)
}

/// Neighbours of `order`, in a fixed enumeration order: relay swaps,
/// relay removals, relay moves, then insertions of unused nodes.
fn neighbourhood(order: &[usize], n: usize) -> Vec<Vec<usize>> {
    let last = order.len() - 1;
    let mut out = Vec::new();
    for i in 1..last {
        for j in i + 1..last {
            let mut c = order.to_vec();
            c.swap(i, j);
            out.push(c);
        }
    }
    for i in 1..last {
        let mut c = order.to_vec();
        c.remove(i);
        out.push(c);
    }
    for i in 1..last {
        for p in (1..last).filter(|&p| p != i) {
            let mut c = order.to_vec();
            let v = c.remove(i);
            c.insert(p, v);
            out.push(c);
        }
    }
    let mut in_order = vec![false; n];
    order.iter().for_each(|&v| in_order[v] = true);
    for v in (0..n).filter(|&v| !in_order[v]) {
        for pos in 1..=last {
            let mut c = order.to_vec();
            c.insert(pos, v);
            out.push(c);
        }
    }
    out
}

fn local_search_order<T: Scalar>(
    eval: &mut Evaluator<'_, T>,
    mut order: Vec<usize>,
) -> Result<Vec<usize>, SearchError> {
    let n = eval.net.len();
    let mut current = eval.delay(&order)?;
    for _ in 0..eval.cfg.max_iterations {
        let mut best: Option<(T, Vec<usize>)> = None;
        for cand in neighbourhood(&order, n) {
            let d = eval.delay(&cand)?;
            if best.as_ref().map_or(d.is_finite(), |(bd, _)| d < *bd) {
                best = Some((d, cand));
            }
        }
        match best {
            Some((d, cand)) if eval.cfg.improves(d, current) => {
                order = cand;
                current = d;
            }
            _ => break,
        }
    }
    Ok(order)
}

/// Best-improvement hill climbing from `init` over relay swaps, removals,
/// moves and insertions. Never returns a worse order than `init`.
pub fn local_search_swaps<T: Scalar>(
    net: &Network<T>,
    bits: T,
    init: &RouteSolution<T>,
    cfg: &SearchConfig<T>,
) -> Result<RouteSolution<T>, SearchError> {
    cfg.validate()?;
    check_bits(bits)?;
    let mut eval = Evaluator::new(net, bits, cfg);
    let start = init.order.nodes().to_vec();
    let order = local_search_order(&mut eval, start.clone())?;
    if order == start {
        return Ok(init.clone());
    }
    finish(net, bits, cfg, order, Method::LocalSearch)
}

/// Centralized order search: exhaustive when the network is small enough,
/// otherwise greedy insertion and the shortest path each polished by local
/// search, keeping the better.
pub fn best_order<T: Scalar>(
    net: &Network<T>,
    bits: T,
    cfg: &SearchConfig<T>,
) -> Result<RouteSolution<T>, SearchError> {
    if net.len() <= cfg.max_exhaustive_nodes {
        return exhaustive_best_order(net, bits, cfg);
    }
    cfg.validate()?;
    check_bits(bits)?;
    let mut eval = Evaluator::new(net, bits, cfg);
    let greedy = greedy_insertion_order(&mut eval, vec![net.source(), net.destination()])?;
    let mut starts = vec![greedy];
    if let Ok(path) = baseline::shortest_path(net, bits) {
        starts.push(path.nodes);
    }
    let mut best: Option<(T, Vec<usize>)> = None;
    for start in starts {
        let polished = local_search_order(&mut eval, start)?;
        let d = eval.delay(&polished)?;
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, polished));
        }
    }
    match best {
        Some((d, order)) if d.is_finite() => finish(net, bits, cfg, order, Method::LocalSearch),
        _ => Err(SearchError::NoFeasibleOrder),
    }
}
