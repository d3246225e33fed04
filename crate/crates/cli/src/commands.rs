use std::path::{Path, PathBuf};

use anyhow::anyhow;
use topoforge::bipartition::{cluster_cost, polar_fold, sweep_minimize};
use topoforge::experiments::{run_bimodality_study, run_scaling_study, InstanceFamily};
use topoforge::instance::{instance_to_string, load_instance, Config, SolverConfig, SweepStrategy};
use topoforge::tree::solve_topology;

use crate::output::{write_atomic, Failure};

fn wants_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn solve(instance: &Path, output: &Path, cfg: &Config) -> Result<(), Failure> {
    let inst = load_instance(instance).map_err(Failure::from_core)?;
    log::info!("{} users, total weight {}", inst.n(), inst.total_weight());
    let sol = solve_topology(&inst, &cfg.cost, &cfg.solver, &cfg.thresholds)
        .map_err(Failure::from_core)?;
    let json = sol.to_json().map_err(Failure::internal)?;
    write_atomic(output, json.as_bytes())?;
    println!("frontier size: {}", sol.frontier.len());
    println!("total cost: {}", sol.total_cost);
    Ok(())
}

/// Always scans every candidate so the CSV holds the whole profile.
pub fn sweep(instance: &Path, output: &Path, cfg: &Config) -> Result<(), Failure> {
    let inst = load_instance(instance).map_err(Failure::from_core)?;
    let users = inst.users();
    if users.len() < 2 {
        return Err(Failure::input(anyhow!("sweep needs at least 2 users, got {}", users.len())));
    }
    let full = SolverConfig {
        sweep_strategy: SweepStrategy::FullScan,
        ..cfg.solver
    };
    let (center, _) = cluster_cost(users, &cfg.cost, full.epsilon).map_err(Failure::from_core)?;
    let folded = polar_fold(users, center);
    let out = sweep_minimize(users, &folded, &cfg.cost, &full).map_err(Failure::from_core)?;
    let p = &out.profile;
    let mut csv = String::from("angle,h\n");
    for (a, h) in p.angles.iter().zip(&p.h_values) {
        csv.push_str(&format!("{a},{h}\n"));
    }
    write_atomic(output, csv.as_bytes())?;
    let range = p.range_ratio.map_or("undefined".to_string(), |r| r.to_string());
    println!(
        "r = {}, h(r) = {}, R = {range}, bimodal = {}, candidates = {}",
        out.r, out.h, p.bimodal, p.candidates
    );
    Ok(())
}

pub fn gen(n: usize, seed: u64, family: InstanceFamily, output: &Path) -> Result<(), Failure> {
    let inst = family.generate(n, seed).map_err(Failure::from_core)?;
    let text = instance_to_string(&inst, wants_csv(output)).map_err(Failure::internal)?;
    write_atomic(output, text.as_bytes())?;
    println!("wrote {} users to {}", inst.n(), output.display());
    Ok(())
}

pub struct BenchPlan {
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub trials: usize,
    pub trial_n: usize,
    pub family: InstanceFamily,
    pub scaling_out: PathBuf,
    pub bimodality_out: PathBuf,
    pub summary_out: Option<PathBuf>,
}

pub fn bench(plan: &BenchPlan, cfg: &Config) -> Result<(), Failure> {
    let seed = cfg.solver.rng_seed;
    let scaling = run_scaling_study(
        &plan.sizes,
        plan.repeats,
        plan.family,
        &cfg.cost,
        &cfg.solver,
        &cfg.thresholds,
        seed,
    )
    .map_err(Failure::from_core)?;
    let bimodal = run_bimodality_study(plan.trials, plan.trial_n, plan.family, &cfg.cost, &cfg.solver, seed)
        .map_err(Failure::from_core)?;

    write_atomic(&plan.scaling_out, scaling.to_json().map_err(Failure::internal)?.as_bytes())?;
    write_atomic(&plan.bimodality_out, bimodal.rows_csv().map_err(Failure::internal)?.as_bytes())?;
    if let Some(p) = &plan.summary_out {
        write_atomic(p, bimodal.summary_json().map_err(Failure::internal)?.as_bytes())?;
    }

    println!("{:>8} {:>12}", "n", "median s");
    for r in &scaling.rows {
        println!("{:>8} {:>12.6}", r.n, r.median_seconds);
    }
    match scaling.fitted_exponent {
        Some(e) => println!("fitted exponent: {e:.3}"),
        None => println!("fitted exponent: n/a (one size)"),
    }
    let frac = bimodal
        .fraction_bimodal_given_range
        .map_or("n/a".to_string(), |f| format!("{f:.3}"));
    println!(
        "bimodality: {} trials, {} with R >= {}, fraction bimodal {frac}",
        bimodal.trials, bimodal.above_cutoff, bimodal.range_cutoff
    );
    Ok(())
}
