//! Monte-Carlo experiment driver and reporting.
//!
//! Each trial draws a random network from a seed mixed out of the
//! experiment seed and the trial index (see [`crate::rng::trial_seed`]),
//! so results do not depend on how trials are scheduled across threads.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::Semantics;
use crate::baseline::{self, CompareConfig, RouteComparison, RouteError};
use crate::distsim::{Policy, SimError, SimOptions};
use crate::netmodel::{self, ChannelParams, NetError};
use crate::ordersearch::{SearchConfig, SearchError};
use crate::rng::trial_seed;

/// Column set of the per-trial CSV, in order.
pub const CSV_COLUMNS: [&str; 12] = [
    "trial",
    "seed",
    "n_nodes",
    "sp_delay_s",
    "coop_delay_s",
    "dist_latest_delay_s",
    "dist_rr_delay_s",
    "dist_bcast_delay_s",
    "sp_energy_j",
    "coop_energy_j",
    "sp_over_coop",
    "flagged",
];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("{flagged} of {trials} trials flagged (more than half)")]
    TooManyFlagged { flagged: usize, trials: usize },
    #[error("trial {trial}: {message}")]
    Trial { trial: usize, message: String },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub trials: usize,
    pub n_nodes: usize,
    /// Side of the square deployment area, meters.
    pub side: f64,
    pub alpha: f64,
    pub noise_psd: f64,
    pub bandwidth: f64,
    pub d_min: f64,
    /// Common transmit power of every node, watts.
    pub power: f64,
    /// Message size, bits.
    #[serde(alias = "B")]
    pub bits: f64,
    pub seed: u64,
    pub semantics: Semantics,
    pub policies: Vec<Policy>,
    pub search: SearchConfig<f64>,
    /// RoundRobin slice, seconds.
    pub quantum: f64,
    pub parallelism: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            n_nodes: 30,
            side: 100.0,
            alpha: 3.0,
            noise_psd: 1e-17,
            bandwidth: 1e6,
            d_min: 0.01,
            power: 0.1,
            bits: 1e6,
            seed: 1,
            semantics: Semantics::Orthogonal,
            policies: Policy::ALL.to_vec(),
            search: SearchConfig::default(),
            quantum: 1e-3,
            parallelism: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn channel(&self) -> ChannelParams<f64> {
        ChannelParams {
            alpha: self.alpha,
            noise_psd: self.noise_psd,
            bandwidth: self.bandwidth,
            d_min: self.d_min,
        }
    }

    fn compare_config(&self) -> CompareConfig<f64> {
        CompareConfig {
            search: SearchConfig {
                semantics: self.semantics,
                ..self.search
            },
            policies: self.policies.clone(),
            sim: SimOptions {
                quantum: self.quantum,
                ..SimOptions::default()
            },
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.trials < 1 {
            return bad("trials must be >= 1");
        }
        if self.n_nodes < 2 {
            return bad("n_nodes must be >= 2");
        }
        if self.parallelism < 1 {
            return bad("parallelism must be >= 1");
        }
        let positive = [
            ("side", self.side),
            ("noise_psd", self.noise_psd),
            ("bandwidth", self.bandwidth),
            ("d_min", self.d_min),
            ("power", self.power),
            ("bits", self.bits),
            ("quantum", self.quantum),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be positive"));
            }
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad("alpha must be >= 0");
        }
        self.compare_config()
            .search
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyCell {
    pub policy: Policy,
    pub delay_s: f64,
    pub energy_j: f64,
    /// Centralized optimum under the allocation model matching the policy.
    pub reference_delay_s: f64,
    pub over_coop: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub n_nodes: usize,
    pub flagged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flag_reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<RouteComparison<f64>>,
}

impl TrialRow {
    pub fn policy(&self, policy: Policy) -> Option<PolicyCell> {
        let c = self.comparison.as_ref()?;
        c.policy(policy).map(|r| PolicyCell {
            policy,
            delay_s: r.delay,
            energy_j: r.energy,
            reference_delay_s: r.reference_delay,
            over_coop: r.ratio,
        })
    }
}

/// Mean, median, sample standard deviation and range of one metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let stddev = if count > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if count % 2 == 1 {
            sorted[count / 2]
        } else {
            0.5 * (sorted[count / 2 - 1] + sorted[count / 2])
        };
        Some(Self {
            count,
            mean,
            median,
            stddev,
            min: sorted[0],
            max: sorted[count - 1],
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyAggregate {
    pub policy: Policy,
    pub delay_s: Stats,
    pub over_coop: Stats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub flagged: usize,
    pub sp_delay_s: Option<Stats>,
    pub coop_delay_s: Option<Stats>,
    pub sp_over_coop: Option<Stats>,
    pub sp_energy_over_coop: Option<Stats>,
    pub distributed: Vec<PolicyAggregate>,
}

impl Aggregates {
    pub fn from_rows(rows: &[TrialRow], policies: &[Policy]) -> Self {
        let ok: Vec<&RouteComparison<f64>> = rows.iter().filter_map(|r| r.comparison.as_ref()).collect();
        let collect = |f: &dyn Fn(&RouteComparison<f64>) -> f64| ok.iter().map(|c| f(c)).collect::<Vec<_>>();
        let distributed = policies
            .iter()
            .filter_map(|&p| {
                let cells: Vec<PolicyCell> = rows.iter().filter_map(|r| r.policy(p)).collect();
                let delays: Vec<f64> = cells.iter().map(|c| c.delay_s).collect();
                let ratios: Vec<f64> = cells.iter().map(|c| c.over_coop).collect();
                Some(PolicyAggregate {
                    policy: p,
                    delay_s: Stats::of(&delays)?,
                    over_coop: Stats::of(&ratios)?,
                })
            })
            .collect();
        Self {
            flagged: rows.iter().filter(|r| r.flagged).count(),
            sp_delay_s: Stats::of(&collect(&|c| c.sp_delay)),
            coop_delay_s: Stats::of(&collect(&|c| c.coop_delay)),
            sp_over_coop: Stats::of(&collect(&|c| c.sp_over_coop)),
            sp_energy_over_coop: Stats::of(&collect(&|c| c.sp_energy / c.coop_energy)),
            distributed,
        }
    }

    /// Policy with the lowest mean delay ratio to its centralized reference.
    pub fn best_policy(&self) -> Option<&PolicyAggregate> {
        self.distributed
            .iter()
            .min_by(|a, b| a.over_coop.mean.total_cmp(&b.over_coop.mean))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<TrialRow>,
    pub aggregates: Aggregates,
}

fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<TrialRow, HarnessError> {
    let seed = trial_seed(cfg.seed, trial as u64);
    let net = netmodel::generate_random_network(cfg.n_nodes, cfg.side, seed, cfg.channel(), cfg.power)?;
    let mut row = TrialRow {
        trial,
        seed,
        n_nodes: cfg.n_nodes,
        flagged: false,
        flag_reason: None,
        comparison: None,
    };
    match baseline::compare_routes(&net, cfg.bits, &cfg.compare_config()) {
        Ok(c) => row.comparison = Some(c),
        Err(
            e @ (RouteError::NoRoute { .. }
            | RouteError::Search(SearchError::NoFeasibleOrder)
            | RouteError::Distributed {
                error: SimError::Stalled { .. },
                ..
            }),
        ) => {
            row.flagged = true;
            row.flag_reason = Some(e.to_string());
        }
        Err(e) => {
            return Err(HarnessError::Trial {
                trial,
                message: e.to_string(),
            })
        }
    }
    Ok(row)
}

/// Runs every trial (up to `cfg.parallelism` at once) and aggregates in
/// trial order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let rows: Vec<TrialRow> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, t))
            .collect::<Result<_, _>>()
    })?;
    let flagged = rows.iter().filter(|r| r.flagged).count();
    if 2 * flagged > cfg.trials {
        return Err(HarnessError::TooManyFlagged {
            flagged,
            trials: cfg.trials,
        });
    }
    let aggregates = Aggregates::from_rows(&rows, &cfg.policies);
    Ok(ExperimentReport {
        config: cfg.clone(),
        rows,
        aggregates,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-trial CSV in the [`CSV_COLUMNS`] layout. Values absent for a row
/// (flagged trials, policies not run) are empty.
pub fn csv_string(report: &ExperimentReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for row in &report.rows {
        let c = row.comparison.as_ref();
        let dist = |p| cell(row.policy(p).map(|x| x.delay_s));
        let record = [
            row.trial.to_string(),
            row.seed.to_string(),
            row.n_nodes.to_string(),
            cell(c.map(|c| c.sp_delay)),
            cell(c.map(|c| c.coop_delay)),
            dist(Policy::LatestDecoder),
            dist(Policy::RoundRobin),
            dist(Policy::BroadcastAll),
            cell(c.map(|c| c.sp_energy)),
            cell(c.map(|c| c.coop_energy)),
            cell(c.map(|c| c.sp_over_coop)),
            row.flagged.to_string(),
        ];
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 csv")
}

pub fn emit_csv(report: &ExperimentReport, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let path = path.as_ref();
    fs::write(path, csv_string(report)).map_err(|e| io_err(path, e))
}

/// Summary JSON: configuration and aggregates.
pub fn emit_summary(report: &ExperimentReport) -> String {
    #[derive(Serialize)]
    struct Summary<'a> {
        config: &'a ExperimentConfig,
        trials: usize,
        aggregates: &'a Aggregates,
    }
    let s = Summary {
        config: &report.config,
        trials: report.rows.len(),
        aggregates: &report.aggregates,
    };
    serde_json::to_string_pretty(&s).expect("summary serializes") + "\n"
}

/// Writes `results.csv`, `summary.json` and `rows.json` into `dir`.
pub fn write_outputs(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<(), HarnessError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    emit_csv(report, dir.join("results.csv"))?;
    let summary = dir.join("summary.json");
    fs::write(&summary, emit_summary(report)).map_err(|e| io_err(&summary, e))?;
    let rows = dir.join("rows.json");
    let text = serde_json::to_string_pretty(&report.rows).expect("rows serialize") + "\n";
    fs::write(&rows, text).map_err(|e| io_err(&rows, e))
}
