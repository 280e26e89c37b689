use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use coop_routing::distsim::{self, write_trace_csv};
use coop_routing::harness::{self, ExperimentConfig};
use coop_routing::netmodel::{self, load_network, save_network};
use coop_routing::ordersearch::{self, EXHAUSTIVE_LIMIT};
use coop_routing::{baseline, ChannelParams, Network, SearchConfig, SimOptions};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_EXPERIMENT: u8 = 3;

#[derive(Parser)]
#[command(name = "coop-route", version, about = "Cooperative routing with mutual-information accumulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SemanticsArg {
    Orthogonal,
    BroadcastAll,
}

impl From<SemanticsArg> for coop_routing::Semantics {
    fn from(s: SemanticsArg) -> Self {
        match s {
            SemanticsArg::Orthogonal => Self::Orthogonal,
            SemanticsArg::BroadcastAll => Self::BroadcastAll,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Exhaustive for small networks, heuristics otherwise.
    Auto,
    Exhaustive,
    Greedy,
    LocalSearch,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    LatestDecoder,
    RoundRobin,
    BroadcastAll,
}

impl From<PolicyArg> for coop_routing::Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::LatestDecoder => Self::LatestDecoder,
            PolicyArg::RoundRobin => Self::RoundRobin,
            PolicyArg::BroadcastAll => Self::BroadcastAll,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random network and write it as JSON.
    Gen {
        #[arg(long, default_value_t = 30)]
        nodes: usize,
        #[arg(long, default_value_t = 100.0)]
        side: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        power: f64,
        #[arg(long, default_value_t = 3.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-17)]
        noise_psd: f64,
        #[arg(long, default_value_t = 1e6)]
        bandwidth: f64,
        #[arg(long, default_value_t = 0.01)]
        d_min: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Find a transmission order and its optimal allocation.
    Solve {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, default_value_t = 1e6)]
        bits: f64,
        #[arg(long, value_enum, default_value_t = SemanticsArg::Orthogonal)]
        semantics: SemanticsArg,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Store-and-forward shortest path.
    Baseline {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, default_value_t = 1e6)]
        bits: f64,
    },
    /// Simulate a distributed policy.
    Distributed {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, default_value_t = 1e6)]
        bits: f64,
        #[arg(long, value_enum, default_value_t = PolicyArg::LatestDecoder)]
        policy: PolicyArg,
        /// RoundRobin slice in seconds.
        #[arg(long, default_value_t = 1e-3)]
        quantum: f64,
        /// Write the event trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a Monte-Carlo experiment.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's parallelism.
        #[arg(long)]
        parallelism: Option<usize>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn data(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_DATA,
        message: e.to_string(),
    }
}

fn print_json(value: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

fn load(path: &PathBuf) -> Result<Network, Failure> {
    load_network(path).map_err(data)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen {
            nodes,
            side,
            seed,
            power,
            alpha,
            noise_psd,
            bandwidth,
            d_min,
            out,
        } => {
            let params = ChannelParams {
                alpha,
                noise_psd,
                bandwidth,
                d_min,
            };
            let net = netmodel::generate_random_network(nodes, side, seed, params, power).map_err(|e| Failure {
                code: EXIT_USAGE,
                message: e.to_string(),
            })?;
            save_network(&net, &out).map_err(data)?;
        }
        Command::Solve {
            net,
            bits,
            semantics,
            method,
            tol,
        } => {
            let net = load(&net)?;
            let cfg = SearchConfig {
                semantics: semantics.into(),
                tol,
                max_exhaustive_nodes: EXHAUSTIVE_LIMIT.min(SearchConfig::default().max_exhaustive_nodes),
                ..SearchConfig::default()
            };
            let sol = match method {
                MethodArg::Auto => ordersearch::best_order(&net, bits, &cfg),
                MethodArg::Exhaustive => ordersearch::exhaustive_best_order(
                    &net,
                    bits,
                    &SearchConfig {
                        max_exhaustive_nodes: EXHAUSTIVE_LIMIT,
                        ..cfg
                    },
                ),
                MethodArg::Greedy => ordersearch::greedy_insertion_search(&net, bits, &cfg),
                MethodArg::LocalSearch => ordersearch::greedy_insertion_search(&net, bits, &cfg)
                    .and_then(|init| ordersearch::local_search_swaps(&net, bits, &init, &cfg)),
            }
            .map_err(data)?;
            print_json(&sol);
        }
        Command::Baseline { net, bits } => {
            let net = load(&net)?;
            print_json(&baseline::shortest_path(&net, bits).map_err(data)?);
        }
        Command::Distributed {
            net,
            bits,
            policy,
            quantum,
            trace,
        } => {
            let net = load(&net)?;
            let opts = SimOptions {
                quantum,
                ..SimOptions::default()
            };
            let out = distsim::simulate_distributed_with(&net, bits, policy.into(), &opts).map_err(data)?;
            if let Some(path) = trace {
                let file = File::create(&path).map_err(|e| data(format!("{}: {e}", path.display())))?;
                write_trace_csv(&out.trace, file).map_err(|e| data(format!("{}: {e}", path.display())))?;
            }
            #[derive(Serialize)]
            struct Brief<'a> {
                policy: String,
                delay: f64,
                energy: f64,
                decode_order: &'a coop_routing::TransmissionOrder,
                decode_times: &'a [f64],
            }
            print_json(&Brief {
                policy: out.policy.to_string(),
                delay: out.delay,
                energy: out.energy,
                decode_order: &out.decode_order,
                decode_times: &out.decode_times,
            });
        }
        Command::Experiment {
            config,
            out,
            parallelism,
        } => {
            let mut cfg = ExperimentConfig::load(&config).map_err(|e| Failure {
                code: EXIT_USAGE,
                message: e.to_string(),
            })?;
            if let Some(p) = parallelism {
                cfg.parallelism = p;
            }
            let fail = |e: harness::HarnessError| Failure {
                code: EXIT_EXPERIMENT,
                message: e.to_string(),
            };
            let report = harness::run_experiment(&cfg).map_err(fail)?;
            harness::write_outputs(&report, &out).map_err(fail)?;
            print!("{}", harness::emit_summary(&report));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
