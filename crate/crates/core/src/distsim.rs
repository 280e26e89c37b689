//! Event-driven simulation of distributed decode-and-forward policies.
//!
//! Nodes never consult the global rate matrix to make decisions: a node
//! starts transmitting only after it has decoded, and decodes are announced
//! by an instantaneous, collision-free beacon. The simulator itself uses the
//! rates to integrate mutual information exactly between events.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::TransmissionOrder;
use crate::netmodel::Network;
use crate::scalar::Scalar;

/// Which decoded node(s) transmit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// The most recent decoder takes over; everybody else falls silent.
    LatestDecoder,
    /// Decoded nodes take turns, one quantum each, in decode order.
    RoundRobin,
    /// Every decoded node transmits; receivers add the rates.
    BroadcastAll,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::LatestDecoder, Policy::RoundRobin, Policy::BroadcastAll];
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::LatestDecoder => "latest_decoder",
            Policy::RoundRobin => "round_robin",
            Policy::BroadcastAll => "broadcast_all",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct SimOptions<T: Scalar> {
    /// RoundRobin time slice, seconds.
    pub quantum: T,
    /// Abort after this many events.
    pub max_events: usize,
}

impl<T: Scalar> Default for SimOptions<T> {
    fn default() -> Self {
        Self {
            quantum: T::lit(1e-3),
            max_events: 10_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Decoded,
    TxStart,
    TxStop,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Decoded => "decoded",
            EventKind::TxStart => "tx_start",
            EventKind::TxStop => "tx_stop",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TraceEvent<T: Scalar> {
    pub time: T,
    pub node: usize,
    pub event: EventKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DistributedOutcome<T: Scalar> {
    pub policy: Policy,
    /// Nodes in decode order, source first, destination last.
    pub decode_order: TransmissionOrder,
    /// Decode instant of each entry in `decode_order` (source at 0).
    pub decode_times: Vec<T>,
    pub delay: T,
    pub energy: T,
    pub trace: Vec<TraceEvent<T>>,
}

#[derive(Debug, Error)]
pub enum SimError<T: Scalar> {
    #[error("simulation stalled at t = {time} s with the destination undecoded")]
    Stalled { time: T, trace: Vec<TraceEvent<T>> },
    #[error("simulation exceeded {0} events")]
    EventLimit(usize),
    #[error("invalid simulation input: {0}")]
    Invalid(String),
}

/// Runs `policy` with default [`SimOptions`].
pub fn simulate_distributed<T: Scalar>(
    net: &Network<T>,
    bits: T,
    policy: Policy,
) -> Result<DistributedOutcome<T>, SimError<T>> {
    simulate_distributed_with(net, bits, policy, &SimOptions::default())
}

struct Sim<'a, T: Scalar> {
    net: &'a Network<T>,
    policy: Policy,
    time: T,
    acc: Vec<T>,
    decoded: Vec<bool>,
    order: Vec<usize>,
    times: Vec<T>,
    active: Vec<usize>,
    trace: Vec<TraceEvent<T>>,
    energy: T,
    /// RoundRobin: index into `order` of the current transmitter.
    turn: usize,
    quantum_end: T,
}

impl<'a, T: Scalar> Sim<'a, T> {
    fn push(&mut self, node: usize, event: EventKind) {
        self.trace.push(TraceEvent {
            time: self.time,
            node,
            event,
        });
    }

    /// Decoded nodes that may transmit (all but the destination).
    fn transmitters(&self) -> impl Iterator<Item = usize> + '_ {
        let d = self.net.destination();
        self.order.iter().copied().filter(move |&v| v != d)
    }

    fn set_active(&mut self, next: Vec<usize>) {
        let stopping: Vec<usize> = self.active.iter().copied().filter(|v| !next.contains(v)).collect();
        let starting: Vec<usize> = next.iter().copied().filter(|v| !self.active.contains(v)).collect();
        for v in stopping {
            self.push(v, EventKind::TxStop);
        }
        for v in starting {
            self.push(v, EventKind::TxStart);
        }
        self.active = next;
    }

    fn policy_active(&self) -> Vec<usize> {
        match self.policy {
            Policy::LatestDecoder => self.transmitters().last().into_iter().collect(),
            Policy::BroadcastAll => self.transmitters().collect(),
            Policy::RoundRobin => vec![self.order[self.turn]],
        }
    }

    fn rate_into(&self, i: usize) -> T {
        let rates = self.net.rates();
        self.active.iter().map(|&a| rates.get(a, i)).sum()
    }

    /// Whether any decoded node could still deliver information.
    fn can_progress(&self) -> bool {
        let rates = self.net.rates();
        self.transmitters()
            .any(|a| (0..self.net.len()).any(|i| !self.decoded[i] && rates.get(a, i) > T::zero()))
    }
}

pub fn simulate_distributed_with<T: Scalar>(
    net: &Network<T>,
    bits: T,
    policy: Policy,
    opts: &SimOptions<T>,
) -> Result<DistributedOutcome<T>, SimError<T>> {
    if !(bits.is_finite() && bits > T::zero()) {
        return Err(SimError::Invalid("message size must be positive".into()));
    }
    if policy == Policy::RoundRobin && !(opts.quantum.is_finite() && opts.quantum > T::zero()) {
        return Err(SimError::Invalid("quantum must be positive".into()));
    }
    let n = net.len();
    let (source, dest) = (net.source(), net.destination());
    let mut sim = Sim {
        net,
        policy,
        time: T::zero(),
        acc: vec![T::zero(); n],
        decoded: vec![false; n],
        order: vec![source],
        times: vec![T::zero()],
        active: Vec::new(),
        trace: Vec::new(),
        energy: T::zero(),
        turn: 0,
        quantum_end: opts.quantum,
    };
    sim.decoded[source] = true;
    sim.acc[source] = bits;
    sim.push(source, EventKind::Decoded);
    sim.set_active(vec![source]);

    // Residuals below this fraction of B count as decoded.
    let snap = T::lit(1e-12);
    for _ in 0..opts.max_events {
        let rates: Vec<T> = (0..n)
            .map(|i| if sim.decoded[i] { T::zero() } else { sim.rate_into(i) })
            .collect();
        let mut dt_decode = T::infinity();
        for i in 0..n {
            if rates[i] > T::zero() {
                dt_decode = dt_decode.min((bits - sim.acc[i]) / rates[i]);
            }
        }
        let dt_quantum = match policy {
            Policy::RoundRobin => (sim.quantum_end - sim.time).max(T::zero()),
            _ => T::infinity(),
        };
        if dt_decode.is_infinite() && (policy != Policy::RoundRobin || !sim.can_progress()) {
            let time = sim.time;
            return Err(SimError::Stalled { time, trace: sim.trace });
        }
        let dt = dt_decode.min(dt_quantum);
        let power: T = sim.active.iter().map(|&a| net.power(a)).sum();
        sim.energy = sim.energy + power * dt;
        // the quantum boundary is kept exact so slices do not drift
        sim.time = if dt_quantum <= dt_decode { sim.quantum_end } else { sim.time + dt };
        for i in 0..n {
            if rates[i] > T::zero() {
                sim.acc[i] = sim.acc[i] + rates[i] * dt;
            }
        }

        let mut fresh: Vec<usize> = (0..n)
            .filter(|&i| {
                !sim.decoded[i]
                    && rates[i] > T::zero()
                    && ((bits - sim.acc[i]) / rates[i] <= T::zero() || bits - sim.acc[i] <= snap * bits)
            })
            .collect();
        if dt_decode <= dt_quantum && fresh.is_empty() {
            // rounding left the argmin node a hair short
            let i = (0..n)
                .filter(|&i| rates[i] > T::zero())
                .min_by(|&a, &b| {
                    let ra = (bits - sim.acc[a]) / rates[a];
                    let rb = (bits - sim.acc[b]) / rates[b];
                    ra.partial_cmp(&rb).expect("finite residual times")
                })
                .expect("a receiving node exists");
            fresh.push(i);
        }
        // destination last among simultaneous decodes
        fresh.sort_by_key(|&i| (i == dest, i));
        let done = fresh.contains(&dest);
        if done {
            sim.set_active(Vec::new());
        }
        for &i in &fresh {
            sim.decoded[i] = true;
            sim.acc[i] = bits;
            sim.order.push(i);
            sim.times.push(sim.time);
            sim.push(i, EventKind::Decoded);
        }
        if done {
            let delay = sim.time;
            return Ok(DistributedOutcome {
                policy,
                decode_order: TransmissionOrder::from_vec_unchecked(sim.order),
                decode_times: sim.times,
                delay,
                energy: sim.energy,
                trace: sim.trace,
            });
        }
        if policy == Policy::RoundRobin && dt_quantum <= dt_decode {
            let cycle = sim.order.len() - usize::from(sim.decoded[dest]);
            sim.turn = (sim.turn + 1) % cycle;
            sim.quantum_end = sim.time + opts.quantum;
        }
        let next = sim.policy_active();
        sim.set_active(next);
    }
    Err(SimError::EventLimit(opts.max_events))
}

/// Emergent transmission order of a successful run.
pub fn decode_order_of<T: Scalar>(outcome: &DistributedOutcome<T>) -> TransmissionOrder {
    outcome.decode_order.clone()
}

/// Writes the trace as CSV rows `time_s,node_id,event`.
pub fn write_trace_csv<T: Scalar, W: Write>(trace: &[TraceEvent<T>], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time_s", "node_id", "event"])?;
    for e in trace {
        w.write_record([e.time.to_string(), e.node.to_string(), e.event.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
