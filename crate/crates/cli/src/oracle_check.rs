use anyhow::anyhow;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topoforge::bipartition::{
    bipartition_cluster, cluster_cost, is_circular_bimodal, partition_cost, polar_fold,
    sweep_minimize,
};
use topoforge::error::Result;
use topoforge::experiments::derive_seeds;
use topoforge::fibsearch::{minimize_periodic_bimodal, pad_to_fibonacci};
use topoforge::instance::{generate_instance, BoundingBox, CostModel, SolverConfig, Thresholds};
use topoforge::oracle::{
    best_frontier, enumerate_line_partitions, full_scan_min, grid_weber, site_bounds,
    MAX_EXHAUSTIVE_USERS,
};
use topoforge::tree::solve_topology;
use topoforge::weber::{sites_from_users, solve_weber};

use crate::output::Failure;

/// `Ok(None)` is a pass, `Ok(Some(msg))` a mismatch.
type Outcome = Result<Option<String>>;

struct Suite {
    name: &'static str,
    case: fn(u64, usize) -> Outcome,
}

const SUITES: [Suite; 5] = [
    Suite { name: "fibsearch-vs-scan", case: fib_case },
    Suite { name: "sweep-vs-enumeration", case: sweep_case },
    Suite { name: "weber-vs-grid", case: weber_case },
    Suite { name: "bipartition-vs-exhaustive", case: exhaustive_case },
    Suite { name: "dp-vs-frontiers", case: dp_case },
];

/// Circular-bimodal vector of length `m`: strictly rising from a random
/// minimum to a peak, then strictly falling back.
fn bimodal_vector(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let start = rng.random_range(0..m);
    let rise = rng.random_range(0..m);
    let mut v = vec![0.0; m];
    let mut level = 0.0;
    for i in 1..=rise {
        level += rng.random_range(0.1..2.0);
        v[(start + i) % m] = level;
    }
    let mut level = 0.0;
    for i in (rise + 1..m).rev() {
        level += rng.random_range(0.1..2.0);
        v[(start + i) % m] = level;
    }
    v
}

fn users(seed: u64, n: usize) -> Result<Vec<topoforge::instance::User>> {
    Ok(generate_instance(n, seed, BoundingBox::square(100.0), (1.0, 10.0))?
        .users()
        .to_vec())
}

fn fib_case(seed: u64, _max_n: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=233);
    let v = bimodal_vector(&mut rng, m);
    if !is_circular_bimodal(&v) {
        return Ok(Some(format!("generator produced a non-bimodal vector (M = {m})")));
    }
    let (_, best) = full_scan_min(&v)?;
    let r = minimize_periodic_bimodal(|i| v[i], m, seed)?;
    let (n_pad, _) = pad_to_fibonacci(m)?;
    Ok(if r.min_value != best {
        Some(format!("M = {m}: search {} vs scan {best}", r.min_value))
    } else if r.evaluations > n_pad + 1 {
        Some(format!("M = {m}: {} evaluations", r.evaluations))
    } else {
        None
    })
}

fn sweep_case(seed: u64, max_n: usize) -> Outcome {
    let (m, cfg) = (CostModel::default(), SolverConfig::default());
    let us = users(seed, 2 + seed as usize % (max_n - 1))?;
    let (c, _) = cluster_cost(&us, &m, cfg.epsilon)?;
    let folded = polar_fold(&us, c);
    let sweep = sweep_minimize(&us, &folded, &m, &cfg)?;
    let mut best = f64::INFINITY;
    for p in enumerate_line_partitions(&folded) {
        best = best.min(partition_cost(&us, &p.in_s1, &m, cfg.epsilon)?);
    }
    Ok((sweep.h != best).then(|| format!("n = {}: sweep {} vs lines {best}", us.len(), sweep.h)))
}

fn weber_case(seed: u64, max_n: usize) -> Outcome {
    let us = users(seed, 1 + seed as usize % max_n)?;
    let sites = sites_from_users(&us, &CostModel::default());
    let r = solve_weber(&sites, 1e-7)?;
    let grid = grid_weber(&sites, site_bounds(&sites, 1.0), 200, 3)?;
    let slack = 1e-9 * grid.value.max(1.0);
    Ok((r.objective > grid.value + slack)
        .then(|| format!("n = {}: solver {} vs grid {}", us.len(), r.objective, grid.value)))
}

fn exhaustive_case(seed: u64, max_n: usize) -> Outcome {
    let (m, cfg) = (CostModel::default(), SolverConfig::default());
    let us = users(seed, 2 + seed as usize % (max_n - 1))?;
    let split = bipartition_cluster(&us, &m, &cfg)?;
    let brute = topoforge::oracle::exhaustive_bipartition(&us, &m, cfg.epsilon)?;
    Ok((brute.best_value > split.h)
        .then(|| format!("n = {}: exhaustive {} above heuristic {}", us.len(), brute.best_value, split.h)))
}

fn dp_case(seed: u64, max_n: usize) -> Outcome {
    let inst = generate_instance(max_n, seed, BoundingBox::square(100.0), (1.0, 10.0))?;
    let th = Thresholds {
        max_depth: 4,
        ..Thresholds::default()
    };
    let sol = solve_topology(&inst, &CostModel::default(), &SolverConfig::default(), &th)?;
    let brute = best_frontier(&sol.tree)?;
    Ok((sol.total_cost != brute.best_value)
        .then(|| format!("DP {} vs enumeration {}", sol.total_cost, brute.best_value)))
}

pub fn run(max_n: usize, cases: usize, seed: u64) -> Result<(), Failure> {
    if !(2..=MAX_EXHAUSTIVE_USERS).contains(&max_n) {
        return Err(Failure::input(anyhow!("--max-n must be in 2..={MAX_EXHAUSTIVE_USERS}")));
    }
    if cases == 0 {
        return Err(Failure::input(anyhow!("--cases must be at least 1")));
    }
    println!("{:<28} {:>6} {:>9}  status", "suite", "cases", "failures");
    let mut failed = 0;
    for (i, suite) in SUITES.iter().enumerate() {
        let seeds = derive_seeds(seed.wrapping_add(i as u64), cases);
        let mut failures = 0;
        for s in seeds {
            let msg = match (suite.case)(s, max_n) {
                Ok(None) => continue,
                Ok(Some(m)) => m,
                Err(e) => format!("error: {e}"),
            };
            failures += 1;
            log::warn!("{} seed {s}: {msg}", suite.name);
        }
        let status = if failures == 0 { "PASS" } else { "FAIL" };
        println!("{:<28} {:>6} {:>9}  {status}", suite.name, cases, failures);
        failed += failures;
    }
    if failed > 0 {
        return Err(Failure::internal(anyhow!("{failed} oracle case(s) failed")));
    }
    Ok(())
}
