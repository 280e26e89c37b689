//! Network geometry, channel model and the pairwise rate matrix.
//!
//! Links follow a power-law path loss `g = max(d, d_min)^-alpha` and the
//! Shannon rate `W log2(1 + P g / (N0 W))`. Networks are immutable once
//! built; the rate matrix is computed at construction and shared by every
//! downstream routine.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::UniformStream;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> NetError {
    NetError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Node<T: Scalar> {
    pub id: usize,
    pub x: T,
    pub y: T,
    /// Transmit power in watts.
    pub power: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ChannelParams<T: Scalar> {
    /// Path-loss exponent.
    pub alpha: T,
    /// Noise power spectral density N0, W/Hz.
    pub noise_psd: T,
    /// Bandwidth W, Hz.
    pub bandwidth: T,
    /// Distances below this are clamped, meters.
    pub d_min: T,
}

impl<T: Scalar> Default for ChannelParams<T> {
    fn default() -> Self {
        Self {
            alpha: T::lit(3.0),
            noise_psd: T::lit(1e-17),
            bandwidth: T::lit(1e6),
            d_min: T::lit(0.01),
        }
    }
}

impl<T: Scalar> ChannelParams<T> {
    pub fn validate(&self) -> Result<(), NetError> {
        let ok = |v: T| v.is_finite();
        if !ok(self.alpha) || self.alpha < T::zero() {
            return Err(invalid("params.alpha", "must be finite and >= 0"));
        }
        if !ok(self.noise_psd) || self.noise_psd <= T::zero() {
            return Err(invalid("params.noise_psd", "must be finite and > 0"));
        }
        if !ok(self.bandwidth) || self.bandwidth <= T::zero() {
            return Err(invalid("params.bandwidth", "must be finite and > 0"));
        }
        if !ok(self.d_min) || self.d_min <= T::zero() {
            return Err(invalid("params.d_min", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// Dense square matrix of link rates in bits/s, row = transmitter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", try_from = "Vec<Vec<T>>", into = "Vec<Vec<T>>")]
pub struct RateMatrix<T: Scalar> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> RateMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    /// Builds from rows, checking the structural invariants: square,
    /// finite, nonnegative, zero diagonal.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, NetError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(invalid(
                    format!("rates[{i}]"),
                    format!("expected {n} entries, found {}", row.len()),
                ));
            }
            for (j, v) in row.into_iter().enumerate() {
                if !v.is_finite() || v < T::zero() {
                    return Err(invalid(format!("rates[{i}][{j}]"), "must be finite and >= 0"));
                }
                if i == j && v != T::zero() {
                    return Err(invalid(format!("rates[{i}][{i}]"), "diagonal must be zero"));
                }
                data.push(v);
            }
        }
        Ok(Self { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> T {
        self.data[from * self.n + to]
    }

    fn set(&mut self, from: usize, to: usize, v: T) {
        self.data[from * self.n + to] = v;
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&v| v * factor).collect(),
        }
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.n.max(1)).map(<[T]>::to_vec).collect()
    }
}

impl<T: Scalar> TryFrom<Vec<Vec<T>>> for RateMatrix<T> {
    type Error = NetError;
    fn try_from(rows: Vec<Vec<T>>) -> Result<Self, NetError> {
        Self::from_rows(rows)
    }
}

impl<T: Scalar> From<RateMatrix<T>> for Vec<Vec<T>> {
    fn from(m: RateMatrix<T>) -> Self {
        m.rows()
    }
}

/// Serialized form; validated into [`Network`] on deserialization.
#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct NetworkRepr<T: Scalar> {
    params: ChannelParams<T>,
    nodes: Vec<Node<T>>,
    source: usize,
    destination: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rates: Option<Vec<Vec<T>>>,
}

/// A relay network: nodes indexed `0..n` by id, a source and a destination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", try_from = "NetworkRepr<T>", into = "NetworkRepr<T>")]
pub struct Network<T: Scalar> {
    nodes: Vec<Node<T>>,
    params: ChannelParams<T>,
    source: usize,
    destination: usize,
    overridden: bool,
    rates: RateMatrix<T>,
}

impl<T: Scalar> TryFrom<NetworkRepr<T>> for Network<T> {
    type Error = NetError;
    fn try_from(r: NetworkRepr<T>) -> Result<Self, NetError> {
        let rates = r.rates.map(RateMatrix::from_rows).transpose()?;
        Network::build(r.nodes, r.params, r.source, r.destination, rates)
    }
}

impl<T: Scalar> From<Network<T>> for NetworkRepr<T> {
    fn from(net: Network<T>) -> Self {
        let rates = net.overridden.then(|| net.rates.rows());
        NetworkRepr {
            params: net.params,
            nodes: net.nodes,
            source: net.source,
            destination: net.destination,
            rates,
        }
    }
}

impl<T: Scalar> Network<T> {
    /// Geometry-derived network.
    pub fn new(
        nodes: Vec<Node<T>>,
        params: ChannelParams<T>,
        source: usize,
        destination: usize,
    ) -> Result<Self, NetError> {
        Self::build(nodes, params, source, destination, None)
    }

    /// Network whose link rates are given explicitly instead of derived
    /// from geometry. Positions are kept for reference only.
    pub fn with_rates(
        nodes: Vec<Node<T>>,
        params: ChannelParams<T>,
        source: usize,
        destination: usize,
        rates: RateMatrix<T>,
    ) -> Result<Self, NetError> {
        Self::build(nodes, params, source, destination, Some(rates))
    }

    /// Abstract network defined only by its rate matrix: nodes sit at the
    /// origin with power `power`.
    pub fn from_rate_matrix(
        rates: RateMatrix<T>,
        power: T,
        source: usize,
        destination: usize,
    ) -> Result<Self, NetError> {
        let nodes = (0..rates.len())
            .map(|id| Node {
                id,
                x: T::zero(),
                y: T::zero(),
                power,
            })
            .collect();
        Self::with_rates(nodes, ChannelParams::default(), source, destination, rates)
    }

    fn build(
        mut nodes: Vec<Node<T>>,
        params: ChannelParams<T>,
        source: usize,
        destination: usize,
        rates: Option<RateMatrix<T>>,
    ) -> Result<Self, NetError> {
        params.validate()?;
        let n = nodes.len();
        if n < 2 {
            return Err(invalid("nodes", "a network needs at least 2 nodes"));
        }
        let mut seen = vec![false; n];
        for (i, node) in nodes.iter().enumerate() {
            if node.id >= n {
                return Err(invalid(
                    format!("nodes[{i}].id"),
                    format!("ids must be 0..{n}, found {}", node.id),
                ));
            }
            if std::mem::replace(&mut seen[node.id], true) {
                return Err(invalid(format!("nodes[{i}].id"), format!("duplicate id {}", node.id)));
            }
            if !node.x.is_finite() || !node.y.is_finite() {
                return Err(invalid(format!("nodes[{i}]"), "position must be finite"));
            }
            if !node.power.is_finite() || node.power <= T::zero() {
                return Err(invalid(format!("nodes[{i}].power"), "must be finite and > 0"));
            }
        }
        nodes.sort_by_key(|node| node.id);
        if source >= n {
            return Err(invalid("source", format!("no node with id {source}")));
        }
        if destination >= n {
            return Err(invalid("destination", format!("no node with id {destination}")));
        }
        if source == destination {
            return Err(invalid("destination", "must differ from source"));
        }
        let overridden = rates.is_some();
        let rates = match rates {
            Some(m) if m.len() != n => {
                return Err(invalid(
                    "rates",
                    format!("expected {n}x{n} matrix, found {0}x{0}", m.len()),
                ))
            }
            Some(m) => m,
            None => derive_rates(&nodes, &params)?,
        };
        Ok(Self {
            nodes,
            params,
            source,
            destination,
            overridden,
            rates,
        })
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn params(&self) -> &ChannelParams<T> {
        &self.params
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn destination(&self) -> usize {
        self.destination
    }

    pub fn power(&self, id: usize) -> T {
        self.nodes[id].power
    }

    /// The common power when every node transmits at the same power.
    pub fn equal_power(&self) -> Option<T> {
        let p = self.nodes[0].power;
        self.nodes.iter().all(|n| n.power == p).then_some(p)
    }

    pub fn has_rate_override(&self) -> bool {
        self.overridden
    }

    /// Link rates in bits/s (override or geometry-derived).
    pub fn rates(&self) -> &RateMatrix<T> {
        &self.rates
    }

    /// Same network with every link rate multiplied by `factor` (stored as
    /// an override).
    pub fn scale_rates(&self, factor: T) -> Self {
        Self {
            overridden: true,
            rates: self.rates.scaled(factor),
            ..self.clone()
        }
    }

    pub fn distance(&self, a: usize, b: usize) -> T {
        let (p, q) = (&self.nodes[a], &self.nodes[b]);
        (p.x - q.x).hypot(p.y - q.y)
    }
}

fn derive_rates<T: Scalar>(nodes: &[Node<T>], params: &ChannelParams<T>) -> Result<RateMatrix<T>, NetError> {
    let n = nodes.len();
    let mut m = RateMatrix::zeros(n);
    for (i, a) in nodes.iter().enumerate() {
        for (j, b) in nodes.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = (a.x - b.x).hypot(a.y - b.y);
            // distances from finite positions are never negative
            let g = path_gain(d, params.alpha, params.d_min).expect("nonnegative distance");
            let rate = link_rate(a.power, g, params);
            if !rate.is_finite() {
                return Err(invalid("params", format!("link rate {i}->{j} is not finite")));
            }
            m.set(i, j, rate);
        }
    }
    Ok(m)
}

/// `max(distance, d_min)^-alpha`.
pub fn path_gain<T: Scalar>(distance: T, alpha: T, d_min: T) -> Result<T, NetError> {
    if distance.is_nan() || distance < T::zero() {
        return Err(NetError::Domain(format!("negative distance {distance}")));
    }
    Ok(distance.max(d_min).powf(-alpha))
}

/// Shannon rate `W log2(1 + P g / (N0 W))` in bits/s.
pub fn link_rate<T: Scalar>(power: T, gain: T, params: &ChannelParams<T>) -> T {
    let w = params.bandwidth;
    let snr = power * gain / (params.noise_psd * w);
    w * snr.ln_1p() / T::LN_2()
}

/// Pairwise rate matrix of `net` (the override verbatim when present).
pub fn rate_matrix<T: Scalar>(net: &Network<T>) -> RateMatrix<T> {
    net.rates().clone()
}

/// `n` nodes i.i.d. uniform on `[0, side]^2`, all at `power`; node 0 is the
/// source and node `n - 1` the destination. Coordinates are drawn x then y,
/// node by node, from [`UniformStream`].
pub fn generate_random_network<T: Scalar>(
    n: usize,
    side: T,
    seed: u64,
    params: ChannelParams<T>,
    power: T,
) -> Result<Network<T>, NetError> {
    if n < 2 {
        return Err(NetError::Config(format!("need at least 2 nodes, got {n}")));
    }
    if !side.is_finite() || side <= T::zero() {
        return Err(NetError::Config(format!("side must be > 0, got {side}")));
    }
    let mut stream = UniformStream::new(seed);
    let nodes = (0..n)
        .map(|id| {
            let x = side * T::lit(stream.next_unit());
            let y = side * T::lit(stream.next_unit());
            Node { id, x, y, power }
        })
        .collect();
    Network::new(nodes, params, 0, n - 1)
}

pub fn load_network<T: Scalar>(path: impl AsRef<Path>) -> Result<Network<T>, NetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| NetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| NetError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn save_network<T: Scalar>(net: &Network<T>, path: impl AsRef<Path>) -> Result<(), NetError> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(net).expect("network serializes");
    fs::write(path, text + "\n").map_err(|source| NetError::Io {
        path: path.display().to_string(),
        source,
    })
}
