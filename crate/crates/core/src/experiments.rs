//! Measurement harness: how often the split-cost profile is circular-bimodal,
//! and how solve time grows with the number of users.

use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bipartition::{cluster_cost, polar_fold, sweep_minimize};
use crate::error::{Error, Result};
use crate::instance::{
    generate_instance, generate_two_blobs, BoundingBox, CostModel, Instance, SolverConfig,
    SweepStrategy, Thresholds,
};
use crate::tree::solve_topology;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum InstanceFamily {
    /// Uniform positions in a 100 x 100 box, weights uniform in [1, 10).
    UniformBox,
    /// Two Gaussian clouds 60 apart with spread 8, weights uniform in [1, 10).
    TwoBlobs,
}

impl InstanceFamily {
    pub fn generate(self, n: usize, seed: u64) -> Result<Instance> {
        match self {
            InstanceFamily::UniformBox => {
                generate_instance(n, seed, BoundingBox::square(100.0), (1.0, 10.0))
            }
            InstanceFamily::TwoBlobs => generate_two_blobs(n, seed, 60.0, 8.0, (1.0, 10.0)),
        }
    }
}

impl std::str::FromStr for InstanceFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "uniform" | "uniformbox" => Ok(InstanceFamily::UniformBox),
            "twoblobs" | "blobs" => Ok(InstanceFamily::TwoBlobs),
            _ => Err(Error::InvalidArgument(format!("unknown instance family `{s}`"))),
        }
    }
}

/// `count` seeds drawn from a generator seeded with `master`.
pub fn derive_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..count).map(|_| rng.next_u64()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BimodalityRow {
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub candidates: usize,
    pub range_ratio: f64,
    pub bimodal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BimodalityReport {
    pub trials: usize,
    pub n_per_trial: usize,
    pub family: InstanceFamily,
    pub range_cutoff: f64,
    /// Trials whose range reaches the cutoff.
    pub above_cutoff: usize,
    /// Share of those trials whose profile is circular-bimodal; `None` when
    /// no trial reaches the cutoff.
    pub fraction_bimodal_given_range: Option<f64>,
    pub mean_range: f64,
    #[serde(skip)]
    pub rows: Vec<BimodalityRow>,
}

impl BimodalityReport {
    pub fn from_rows(
        rows: Vec<BimodalityRow>,
        n_per_trial: usize,
        family: InstanceFamily,
        range_cutoff: f64,
    ) -> Self {
        let above: Vec<&BimodalityRow> =
            rows.iter().filter(|r| r.range_ratio >= range_cutoff).collect();
        let fraction = (!above.is_empty())
            .then(|| above.iter().filter(|r| r.bimodal).count() as f64 / above.len() as f64);
        let mean_range = rows.iter().map(|r| r.range_ratio).sum::<f64>() / rows.len().max(1) as f64;
        BimodalityReport {
            trials: rows.len(),
            n_per_trial,
            family,
            range_cutoff,
            above_cutoff: above.len(),
            fraction_bimodal_given_range: fraction,
            mean_range,
            rows,
        }
    }

    pub fn rows_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)
                .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Sweeps the root split of `trials` random instances and classifies each
/// full profile by range ratio and circular bimodality.
pub fn run_bimodality_study(
    trials: usize,
    n: usize,
    family: InstanceFamily,
    model: &CostModel,
    config: &SolverConfig,
    seed: u64,
) -> Result<BimodalityReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("trials need at least 2 users".into()));
    }
    let full = SolverConfig {
        sweep_strategy: SweepStrategy::FullScan,
        ..*config
    };
    let seeds = derive_seeds(seed, trials);
    let rows: Vec<BimodalityRow> = seeds
        .par_iter()
        .enumerate()
        .map(|(trial, &s)| {
            let inst = family.generate(n, s)?;
            let users = inst.users();
            let (center, _) = cluster_cost(users, model, full.epsilon)?;
            let folded = polar_fold(users, center);
            let sweep = sweep_minimize(users, &folded, model, &full)?;
            let p = sweep.profile;
            Ok(BimodalityRow {
                trial,
                seed: s,
                n,
                candidates: p.candidates,
                range_ratio: p.range_ratio.ok_or_else(|| {
                    Error::InvalidArgument(format!("trial {trial}: profile minimum is not positive"))
                })?,
                bimodal: p.bimodal,
            })
        })
        .collect::<Result<_>>()?;
    Ok(BimodalityReport::from_rows(rows, n, family, config.bimodal_range_cutoff))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub seed: u64,
    /// Median wall time in seconds.
    pub median_seconds: f64,
    pub frontier_size: usize,
    pub tree_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub strategy: SweepStrategy,
    pub family: InstanceFamily,
    pub wall_times: Vec<f64>,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of log time against log n; `None` for one size.
    pub fitted_exponent: Option<f64>,
}

impl ScalingReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Slope of the least-squares line through `(ln x, ln y)`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort_unstable();
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2
    }
}

/// Times the full solve per size: one discarded warm-up run, then the median
/// of `repeats` runs on the same instance.
pub fn run_scaling_study(
    sizes: &[usize],
    repeats: usize,
    family: InstanceFamily,
    model: &CostModel,
    config: &SolverConfig,
    thresholds: &Thresholds,
    seed: u64,
) -> Result<ScalingReport> {
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("no sizes given".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) || sizes[0] == 0 {
        return Err(Error::InvalidArgument(format!("sizes must be positive and increasing: {sizes:?}")));
    }
    if repeats < 3 {
        return Err(Error::InvalidArgument("repeats must be at least 3".into()));
    }
    let seeds = derive_seeds(seed, sizes.len());
    let mut rows = Vec::with_capacity(sizes.len());
    for (&n, &s) in sizes.iter().zip(&seeds) {
        let inst = family.generate(n, s)?;
        let warm = solve_topology(&inst, model, config, thresholds)?;
        let mut times = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let t0 = Instant::now();
            let sol = solve_topology(&inst, model, config, thresholds)?;
            times.push(t0.elapsed());
            debug_assert_eq!(sol.total_cost, warm.total_cost);
        }
        let med = median(times).as_secs_f64().max(1e-9);
        log::info!("n = {n}: median {med:.4} s");
        rows.push(ScalingRow {
            n,
            seed: s,
            median_seconds: med,
            frontier_size: warm.frontier.len(),
            tree_nodes: warm.tree.len(),
        });
    }
    let wall_times: Vec<f64> = rows.iter().map(|r| r.median_seconds).collect();
    let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    Ok(ScalingReport {
        sizes: sizes.to_vec(),
        repeats,
        strategy: config.sweep_strategy,
        family,
        fitted_exponent: log_log_slope(&xs, &wall_times),
        wall_times,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs = [10.0, 20.0, 40.0, 80.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.7)).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() - 1.7).abs() < 1e-12);
        assert_eq!(log_log_slope(&[5.0], &[1.0]), None);
    }

    #[test]
    fn seeds_are_reproducible() {
        assert_eq!(derive_seeds(9, 5), derive_seeds(9, 5));
        assert_ne!(derive_seeds(9, 5), derive_seeds(10, 5));
        assert_eq!(derive_seeds(9, 3)[..], derive_seeds(9, 5)[..3]);
    }

    #[test]
    fn rejects_bad_arguments() {
        let (m, c) = (CostModel::default(), SolverConfig::default());
        assert!(run_bimodality_study(0, 10, InstanceFamily::UniformBox, &m, &c, 1).is_err());
        assert!(run_bimodality_study(3, 1, InstanceFamily::UniformBox, &m, &c, 1).is_err());
        let th = Thresholds::default();
        assert!(run_scaling_study(&[], 3, InstanceFamily::UniformBox, &m, &c, &th, 1).is_err());
        assert!(run_scaling_study(&[20, 10], 3, InstanceFamily::UniformBox, &m, &c, &th, 1).is_err());
        assert!(run_scaling_study(&[10], 2, InstanceFamily::UniformBox, &m, &c, &th, 1).is_err());
    }

    #[test]
    fn single_size_report() {
        let r = run_scaling_study(
            &[30],
            3,
            InstanceFamily::UniformBox,
            &CostModel::default(),
            &SolverConfig::default(),
            &Thresholds::default(),
            4,
        )
        .unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.fitted_exponent, None);
        assert!(r.wall_times[0] > 0.0);
    }
}
