mod common;

use std::collections::BTreeSet;

use topoforge::fixtures;
use topoforge::instance::{generate_two_blobs, CostModel, SolverConfig, Thresholds};
use topoforge::oracle::best_frontier;
use topoforge::tree::{
    grow_tree, load_cost_tree, monotonicity_violations, optimal_frontier, run_dp, solve_topology,
    PartitionTree, Solution,
};

fn check_frontier(sol: &Solution, n_users: usize) {
    let tree = &sol.tree;
    // Antichain: no frontier node is an ancestor of another.
    for &a in &sol.frontier {
        for &b in &sol.frontier {
            if a != b {
                let mut k = b;
                while k > 1 {
                    k /= 2;
                    assert_ne!(k, a, "{a} is an ancestor of {b}");
                }
            }
        }
    }
    let mut members: Vec<u64> = sol.clusters.iter().flat_map(|c| c.members.clone()).collect();
    members.sort_unstable();
    assert_eq!(members, (1..=n_users as u64).collect::<Vec<_>>());
    let sum: f64 = sol.frontier.iter().map(|k| tree.get(*k).unwrap().final_label.unwrap()).sum();
    assert!((sum - sol.total_cost).abs() <= 1e-9 * sol.total_cost);
    for n in tree.nodes.values() {
        assert!(n.final_label.unwrap() <= n.label);
        if n.leaf {
            assert_eq!(n.final_label, Some(n.label));
            assert_eq!(n.flag, Some(true));
        }
        if let Some((l, r)) = tree.children(n.k) {
            let union: BTreeSet<u64> = l.members.iter().chain(&r.members).copied().collect();
            assert_eq!(union.len(), l.members.len() + r.members.len());
            assert_eq!(union.into_iter().collect::<Vec<_>>(), n.members);
        }
    }
}

#[test]
fn grown_trees_satisfy_invariants() {
    let m = CostModel::default();
    let cfg = SolverConfig::default();
    for seed in 0..20 {
        let n = 5 + seed as usize * 3;
        let inst = common::uniform(n, 500 + seed);
        let sol = solve_topology(&inst, &m, &cfg, &Thresholds::default()).unwrap();
        assert!(monotonicity_violations(&sol.tree, 1e-9).is_empty(), "seed {seed}");
        assert!(sol.total_cost <= sol.tree.root().unwrap().d);
        check_frontier(&sol, n);
    }
}

#[test]
fn two_blob_tree_with_depth_cap() {
    let inst = generate_two_blobs(16, 3, 80.0, 4.0, (1.0, 5.0)).unwrap();
    let th = Thresholds {
        max_depth: 4,
        ..Thresholds::default()
    };
    let tree = grow_tree(&inst, &CostModel::default(), &SolverConfig::default(), &th).unwrap();
    assert!(tree.height() <= 4);
    assert!(monotonicity_violations(&tree, 1e-9).is_empty());
}

#[test]
fn dp_matches_frontier_enumeration() {
    let m = CostModel::default();
    let cfg = SolverConfig::default();
    let th = Thresholds {
        max_depth: 4,
        ..Thresholds::default()
    };
    for seed in 0..50 {
        let inst = common::uniform(10, 900 + seed);
        let sol = solve_topology(&inst, &m, &cfg, &th).unwrap();
        let brute = best_frontier(&sol.tree).unwrap();
        assert_eq!(sol.total_cost, brute.best_value, "seed {seed}");
        assert!(sol.total_cost <= sol.tree.root().unwrap().d);
    }
}

#[test]
fn concave_stations_keep_blobs_whole() {
    // A large fixed station cost makes every split inside a blob a loss.
    let m = CostModel {
        es_fixed: 200.0,
        ..CostModel::default()
    };
    for seed in 0..5 {
        let inst = generate_two_blobs(20, seed, 400.0, 2.0, (1.0, 3.0)).unwrap();
        let sol = solve_topology(&inst, &m, &SolverConfig::default(), &Thresholds::default()).unwrap();
        assert_eq!(sol.frontier, vec![2, 3], "seed {seed}");
        let mut sides: Vec<Vec<u64>> = sol.clusters.iter().map(|c| c.members.clone()).collect();
        sides.sort();
        assert_eq!(sides, vec![(1..=10).collect::<Vec<_>>(), (11..=20).collect::<Vec<_>>()]);
        let brute = best_frontier(&sol.tree).unwrap();
        assert_eq!(brute.best_witness, vec![2, 3]);
    }
}

fn dp(tree: &mut PartitionTree) -> (f64, Vec<u64>) {
    let f = run_dp(tree).unwrap();
    (tree.root().unwrap().final_label.unwrap(), f)
}

#[test]
fn seven_node_scenarios() {
    let mut a = fixtures::table3_a().unwrap();
    assert_eq!(a.get(1).unwrap().d, 46.0);
    assert_eq!(dp(&mut a), (41.0, vec![2, 6, 7]));

    let mut b = fixtures::table3_b().unwrap();
    assert_eq!(b.get(1).unwrap().d, 43.0);
    assert_eq!(dp(&mut b), (40.0, vec![4, 5, 6, 7]));

    let mixed = fixtures::TABLE3_B_JSON.replace(r#"{"k": 5, "t": 3"#, r#"{"k": 5, "t": 5"#);
    let mut c = load_cost_tree(&mixed).unwrap();
    assert_eq!(c.get(5).unwrap().d, 12.0);
    assert_eq!(dp(&mut c), (41.0, vec![2, 6, 7]));
}

#[test]
fn twenty_node_example() {
    let mut t = fixtures::table4().unwrap();
    let (f1, frontier) = dp(&mut t);
    assert_eq!(f1, fixtures::TABLE4_TOTAL);
    assert_eq!(frontier, fixtures::TABLE4_FRONTIER);
    let flagged: Vec<u64> = t.nodes.values().filter(|n| n.flag == Some(true)).map(|n| n.k).collect();
    assert_eq!(flagged, fixtures::TABLE4_FLAGGED);
    assert_eq!(optimal_frontier(&t).unwrap(), frontier);
    assert_eq!(best_frontier(&t).unwrap().best_value, 248.0);
}
