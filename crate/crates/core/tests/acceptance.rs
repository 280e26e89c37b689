//! Acceptance suite. Each test prints one `PASS`/`FAIL` line to stderr
//! (uncaptured, so it shows up in a plain `cargo test` run) and then
//! asserts the criterion.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use coop_routing::allocation::{min_energy_allocation, optimal_allocation, optimal_delay};
use coop_routing::baseline::{compare_routes, RouteComparison};
use coop_routing::harness::{csv_string, run_experiment, write_outputs, ExperimentConfig, ExperimentReport};
use coop_routing::lpsolve::{check_feasible, solve, LpProblem, LpStatus};
use coop_routing::netmodel::{generate_random_network, ChannelParams, Network, RateMatrix};
use coop_routing::ordersearch::{exhaustive_best_order, greedy_insertion_search, local_search_swaps};
use coop_routing::rng::{trial_seed, UniformStream};
use coop_routing::{CompareConfig, Policy, SearchConfig, Semantics, TransmissionOrder};

const TOL: f64 = 1e-9;

fn verdict(n: u32, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "{tag} criterion {n}: {detail}");
    assert!(ok, "criterion {n}: {detail}");
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn default_net(n: usize, seed: u64) -> Network<f64> {
    generate_random_network(n, 100.0, seed, ChannelParams::default(), 0.1).unwrap()
}

/// Every ordered relay subset of `net`, as full orders.
fn all_orders(net: &Network<f64>) -> Vec<TransmissionOrder> {
    fn grow(pool: &[usize], used: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, s: usize, d: usize) {
        out.push([vec![s], used.clone(), vec![d]].concat());
        for &v in pool {
            if !used.contains(&v) {
                used.push(v);
                grow(pool, used, out, s, d);
                used.pop();
            }
        }
    }
    let relays: Vec<usize> = (0..net.len())
        .filter(|&v| v != net.source() && v != net.destination())
        .collect();
    let mut raw = Vec::new();
    grow(&relays, &mut Vec::new(), &mut raw, net.source(), net.destination());
    raw.into_iter()
        .map(|o| TransmissionOrder::new(o, net).unwrap())
        .collect()
}

#[test]
fn criterion_1_lp_correctness() {
    let start = Instant::now();
    let mut failures = Vec::new();

    // single relay: C(s,r) = 2, C(s,d) = 1, C(r,d) = 2, B = 2
    let rates = RateMatrix::from_rows(vec![
        vec![0.0, 2.0, 1.0],
        vec![2.0, 0.0, 2.0],
        vec![1.0, 2.0, 0.0],
    ])
    .unwrap();
    let net = Network::from_rate_matrix(rates, 1.0, 0, 2).unwrap();
    let order = TransmissionOrder::new(vec![0, 1, 2], &net).unwrap();
    let orth = optimal_allocation(&order, &net, 2.0, Semantics::Orthogonal, TOL).unwrap().delay;
    let bcast = optimal_allocation(&order, &net, 2.0, Semantics::BroadcastAll, TOL).unwrap().delay;
    if !rel_close(orth, 1.5, 1e-9) {
        failures.push(format!("relay orthogonal {orth}"));
    }
    if !rel_close(bcast, 4.0 / 3.0, 1e-9) {
        failures.push(format!("relay broadcast {bcast}"));
    }
    let two = LpProblem::new(vec![1.0, 1.0], vec![vec![2.0, 1.0], vec![1.0, 2.0]], vec![2.0, 2.0]).unwrap();
    let s = solve(&two, TOL).unwrap();
    if !rel_close(s.objective, 4.0 / 3.0, 1e-9) {
        failures.push(format!("2-var objective {}", s.objective));
    }

    let mut rng = UniformStream::new(20240601);
    let mut infeasible = 0;
    let mut bad_points = 0;
    for _ in 0..1000 {
        let n = 1 + (rng.next_unit() * 10.0) as usize;
        let m = 1 + (rng.next_unit() * 10.0) as usize;
        let x0: Vec<f64> = (0..n).map(|_| 10.0 * rng.next_unit()).collect();
        let a: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| 4.0 * rng.next_unit() - 1.0).collect())
            .collect();
        let b: Vec<f64> = a.iter().map(|r| r.iter().zip(&x0).map(|(p, q)| p * q).sum()).collect();
        let c: Vec<f64> = (0..n).map(|_| 0.01 + 4.0 * rng.next_unit()).collect();
        let p = LpProblem::new(c, a, b).unwrap();
        let sol = solve(&p, TOL).unwrap();
        match sol.status {
            LpStatus::Infeasible => infeasible += 1,
            _ if !check_feasible(&p, &sol.x, 1e-7).unwrap() => bad_points += 1,
            _ => {}
        }
    }
    if infeasible > 0 || bad_points > 0 {
        failures.push(format!("{infeasible} infeasible, {bad_points} infeasible points"));
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(10) {
        failures.push(format!("took {elapsed:?}"));
    }
    verdict(
        1,
        failures.is_empty(),
        &format!(
            "relay orth {orth:.12}, bcast {bcast:.12}, 2-var {:.12}, 1000 random LPs feasible, {elapsed:.2?} {}",
            s.objective,
            failures.join("; ")
        ),
    );
}

#[test]
fn criterion_2_heuristic_vs_exhaustive() {
    let start = Instant::now();
    let cfg = SearchConfig::default();
    let (mut within, mut below, mut total) = (0, 0, 0);
    let mut worst: f64 = 1.0;
    for i in 0..50u64 {
        let n = 4 + (i % 3) as usize;
        let net = default_net(n, trial_seed(2002, i));
        let ex = exhaustive_best_order(&net, 1e6, &cfg).unwrap().allocation.delay;
        let gr = greedy_insertion_search(&net, 1e6, &cfg).unwrap();
        let h = local_search_swaps(&net, 1e6, &gr, &cfg).unwrap().allocation.delay;
        total += 1;
        if h <= 1.05 * ex {
            within += 1;
        }
        if h < ex - cfg.tol * (1.0 + ex) {
            below += 1;
        }
        worst = worst.max(h / ex);
    }
    let elapsed = start.elapsed();
    let ok = within * 10 >= total * 9 && below == 0 && elapsed < Duration::from_secs(60);
    verdict(
        2,
        ok,
        &format!("{within}/{total} within 5%, {below} below optimum, worst ratio {worst:.6}, {elapsed:.2?}"),
    );
}

struct DominanceData {
    nets: Vec<Network<f64>>,
    comparisons: Vec<RouteComparison<f64>>,
    elapsed: Duration,
}

fn dominance_data() -> &'static DominanceData {
    static DATA: OnceLock<DominanceData> = OnceLock::new();
    DATA.get_or_init(|| {
        let start = Instant::now();
        let cfg = CompareConfig::default();
        let mut nets = Vec::new();
        let mut comparisons = Vec::new();
        for (k, n) in [5usize, 10, 20, 30].into_iter().enumerate() {
            for i in 0..50u64 {
                let net = default_net(n, trial_seed(3003 + k as u64, i));
                comparisons.push(compare_routes(&net, 1e6, &cfg).unwrap());
                nets.push(net);
            }
        }
        DominanceData {
            nets,
            comparisons,
            elapsed: start.elapsed(),
        }
    })
}

#[test]
fn criterion_3_dominance() {
    let data = dominance_data();
    let mut coop_violations = 0;
    let mut dist_violations = 0;
    let mut min_dist_gap = f64::INFINITY;
    for c in &data.comparisons {
        if c.coop_delay > c.sp_delay + TOL * (1.0 + c.sp_delay) {
            coop_violations += 1;
        }
        for r in &c.distributed {
            let gap = r.delay - r.reference_delay;
            min_dist_gap = min_dist_gap.min(gap / r.reference_delay);
            if gap < -TOL * (1.0 + r.reference_delay) {
                dist_violations += 1;
            }
        }
    }
    let ok = coop_violations == 0 && dist_violations == 0 && data.elapsed < Duration::from_secs(60);
    verdict(
        3,
        ok,
        &format!(
            "{} networks: {coop_violations} coop > sp, {dist_violations} dist < coop (min relative gap {min_dist_gap:.3e}), {:.2?}",
            data.comparisons.len(),
            data.elapsed
        ),
    );
}

#[test]
fn criterion_4_energy_equivalence() {
    let data = dominance_data();
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut bcast_gap_max: f64 = 0.0;
    let mut bcast_gap_sum = 0.0;
    let mut bcast_count = 0;
    for (net, c) in data.nets.iter().zip(&data.comparisons) {
        let p = net.equal_power().expect("equal powers");
        let mut orders = vec![c.coop_order.clone(), TransmissionOrder::new(c.sp_path.clone(), net).unwrap()];
        orders.extend(c.distributed.iter().map(|r| r.decode_order.clone()));
        for order in &orders {
            let t = optimal_delay(order, net.rates(), 1e6, Semantics::Orthogonal, TOL).unwrap();
            let e = min_energy_allocation(order, net, 1e6, Semantics::Orthogonal, TOL).unwrap().energy;
            worst = worst.max((e - p * t).abs() / (p * t));
            checked += 1;
        }
        let fast = optimal_allocation(&c.coop_order, net, 1e6, Semantics::BroadcastAll, TOL).unwrap();
        let frugal = min_energy_allocation(&c.coop_order, net, 1e6, Semantics::BroadcastAll, TOL).unwrap();
        let gap = (fast.energy - frugal.energy) / frugal.energy;
        bcast_gap_max = bcast_gap_max.max(gap);
        bcast_gap_sum += gap;
        bcast_count += 1;
    }
    let _ = writeln!(
        std::io::stderr(),
        "info criterion 4: BroadcastAll energy of delay-optimal over min-energy allocation: mean gap {:.4}, max gap {:.4} over {bcast_count} orders",
        bcast_gap_sum / bcast_count as f64,
        bcast_gap_max
    );
    verdict(
        4,
        worst <= 1e-6,
        &format!("{checked} orthogonal orders, max |E - P T| / P T = {worst:.3e}"),
    );
}

fn headline_report() -> &'static (ExperimentReport, Duration) {
    static REPORT: OnceLock<(ExperimentReport, Duration)> = OnceLock::new();
    REPORT.get_or_init(|| {
        let cfg = ExperimentConfig {
            trials: 100,
            n_nodes: 30,
            ..ExperimentConfig::default()
        };
        let start = Instant::now();
        let report = run_experiment(&cfg).unwrap();
        let elapsed = start.elapsed();
        let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-headline");
        write_outputs(&report, &dir).unwrap();
        (report, elapsed)
    })
}

#[test]
fn criterion_5_headline_ratio() {
    let (report, elapsed) = headline_report();
    let stats = report.aggregates.sp_over_coop.clone().expect("unflagged trials");
    let mut ratios: Vec<f64> = report
        .rows
        .iter()
        .filter_map(|r| r.comparison.as_ref().map(|c| c.sp_over_coop))
        .collect();
    ratios.sort_by(f64::total_cmp);
    let q = |p: f64| ratios[((ratios.len() - 1) as f64 * p).round() as usize];
    let mut err = std::io::stderr();
    let _ = writeln!(
        err,
        "info criterion 5: sp/coop distribution over {} trials: min {:.4} p10 {:.4} p25 {:.4} median {:.4} p75 {:.4} p90 {:.4} max {:.4} (std {:.4})",
        ratios.len(),
        q(0.0),
        q(0.1),
        q(0.25),
        q(0.5),
        q(0.75),
        q(0.9),
        q(1.0),
        stats.stddev
    );
    let edges = [1.0, 1.02, 1.05, 1.1, 1.2, 1.3, 1.5, 2.0, f64::INFINITY];
    for w in edges.windows(2) {
        let count = ratios.iter().filter(|&&r| r >= w[0] && r < w[1]).count();
        let _ = writeln!(err, "info criterion 5:   [{:.2}, {:.2}) {count:3} {}", w[0], w[1], "#".repeat(count));
    }
    let _ = writeln!(
        err,
        "info criterion 5: per-trial outputs in {}",
        std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-headline").display()
    );
    let ok = stats.mean >= 1.3 && *elapsed < Duration::from_secs(300);
    verdict(
        5,
        ok,
        &format!(
            "mean sp/coop = {:.4} (required >= 1.3) over {} trials, {} flagged, {elapsed:.2?}",
            stats.mean, stats.count, report.aggregates.flagged
        ),
    );
}

#[test]
fn criterion_6_distributed_quality() {
    let (report, _) = headline_report();
    let agg = &report.aggregates;
    let sp_mean = agg.sp_delay_s.as_ref().unwrap().mean;
    for p in &agg.distributed {
        let _ = writeln!(
            std::io::stderr(),
            "info criterion 6: {} mean delay {:.6} s, mean dist/coop {:.4}",
            p.policy,
            p.delay_s.mean,
            p.over_coop.mean
        );
    }
    let best = agg.best_policy().expect("policies ran");
    let ok = best.over_coop.mean <= 1.5 && best.delay_s.mean <= sp_mean;
    verdict(
        6,
        ok,
        &format!(
            "best policy {} mean dist/coop {:.4} (<= 1.5), mean dist delay {:.6} s vs sp {:.6} s",
            best.policy, best.over_coop.mean, best.delay_s.mean, sp_mean
        ),
    );
}

#[test]
fn criterion_7_scaling() {
    let mut failures = Vec::new();
    let mut checked = 0;
    for i in 0..30u64 {
        let n = 4 + (i % 3) as usize;
        let net = default_net(n, trial_seed(7007, i));
        let orders = all_orders(&net);
        for sem in [Semantics::Orthogonal, Semantics::BroadcastAll] {
            let cfg = SearchConfig {
                semantics: sem,
                ..SearchConfig::default()
            };
            let base = exhaustive_best_order(&net, 1e6, &cfg).unwrap();
            // the LP optimum, without the least-energy tie-break slack
            let base_opt = optimal_delay(&base.order, net.rates(), 1e6, sem, TOL).unwrap();
            let base_delays: Vec<f64> = orders
                .iter()
                .map(|o| optimal_delay(o, net.rates(), 1e6, sem, TOL).unwrap())
                .collect();
            for lambda in [0.5, 2.0, 10.0] {
                let scaled = net.scale_rates(lambda);
                let best = exhaustive_best_order(&scaled, 1e6, &cfg).unwrap();
                if best.order != base.order {
                    failures.push(format!("net {i} {sem} x{lambda}: argmin {} -> {}", base.order, best.order));
                }
                let opt = optimal_delay(&best.order, scaled.rates(), 1e6, sem, TOL).unwrap();
                if !rel_close(opt, base_opt / lambda, 1e-9) {
                    failures.push(format!("net {i} {sem} x{lambda}: optimum {opt}"));
                }
                for (o, &d) in orders.iter().zip(&base_delays) {
                    let t = optimal_delay(o, scaled.rates(), 1e6, sem, TOL).unwrap();
                    checked += 1;
                    if !rel_close(t, d / lambda, 1e-9) {
                        failures.push(format!("net {i} {sem} x{lambda} order {o}: {t} vs {}", d / lambda));
                    }
                }
                let t = optimal_delay(&base.order, net.rates(), 1e6 * lambda, sem, TOL).unwrap();
                checked += 1;
                if !rel_close(t, base_opt * lambda, 1e-9) {
                    failures.push(format!("net {i} {sem} B x{lambda}: {t}"));
                }
            }
        }
    }
    verdict(
        7,
        failures.is_empty(),
        &format!(
            "{checked} scaled delays, {} violations{}",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    );
}

#[test]
fn criterion_8_reproducibility() {
    let configs = [
        ExperimentConfig {
            trials: 10,
            n_nodes: 12,
            seed: 8,
            ..ExperimentConfig::default()
        },
        ExperimentConfig {
            trials: 6,
            n_nodes: 30,
            seed: 88,
            semantics: Semantics::BroadcastAll,
            policies: vec![Policy::RoundRobin, Policy::BroadcastAll],
            ..ExperimentConfig::default()
        },
        ExperimentConfig {
            trials: 8,
            n_nodes: 6,
            seed: 888,
            noise_psd: 1e-13,
            ..ExperimentConfig::default()
        },
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut mismatches = Vec::new();
    let mut runs = 0;
    for (ci, cfg) in configs.iter().enumerate() {
        let mut reference: Option<Vec<u8>> = None;
        for (ri, p) in [1usize, 1, 2, 4, 8].into_iter().enumerate() {
            let cfg = ExperimentConfig {
                parallelism: p,
                ..cfg.clone()
            };
            let report = run_experiment(&cfg).unwrap();
            let dir = tmp.path().join(format!("c{ci}r{ri}"));
            write_outputs(&report, &dir).unwrap();
            let bytes = std::fs::read(dir.join("results.csv")).unwrap();
            assert_eq!(bytes, csv_string(&report).into_bytes());
            runs += 1;
            match &reference {
                None => reference = Some(bytes),
                Some(r) if *r != bytes => mismatches.push(format!("config {ci} parallelism {p}")),
                Some(_) => {}
            }
        }
    }
    verdict(
        8,
        mismatches.is_empty(),
        &format!("{runs} runs over {} configs, {} CSV mismatches {}", configs.len(), mismatches.len(), mismatches.join(", ")),
    );
}
