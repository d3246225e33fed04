use std::f64::consts::TAU;

use topoforge::bipartition::{polar_fold, split_at_angle};
use topoforge::fixtures::{self, TABLE1_CENTER, TABLE1_FOLDED, TABLE1_SIDES, TABLE1_SPLIT_X};
use topoforge::tree::{run_dp, PartitionTree};

use crate::output::Failure;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), Failure> {
    if ok {
        Ok(())
    } else {
        Err(Failure::regression(msg()))
    }
}

fn d(tree: &PartitionTree, k: u64) -> Result<f64, Failure> {
    tree.get(k)
        .map(|n| n.d)
        .ok_or_else(|| Failure::regression(format!("node {k} missing")))
}

fn join(ks: &[u64]) -> String {
    ks.iter().map(u64::to_string).collect::<Vec<_>>().join(" ")
}

fn solve(tree: &mut PartitionTree) -> Result<(f64, Vec<u64>), Failure> {
    let frontier = run_dp(tree).map_err(Failure::internal)?;
    let f1 = tree
        .root()
        .and_then(|r| r.final_label)
        .ok_or_else(|| Failure::regression("root has no final label"))?;
    Ok((f1, frontier))
}

fn addends(tree: &PartitionTree, frontier: &[u64]) -> String {
    frontier
        .iter()
        .filter_map(|k| tree.get(*k).and_then(|n| n.final_label))
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join(" + ")
}

pub fn table1() -> Result<(), Failure> {
    let inst = fixtures::table1_instance().map_err(Failure::internal)?;
    let folded = polar_fold(inst.users(), TABLE1_CENTER);
    let (s1, _) = split_at_angle(TABLE1_SPLIT_X, &folded);
    println!("{:>4} {:>6} {:>6} {:>3} {:>5}", "user", "phi", "x", "c", "side");
    for (i, u) in inst.users().iter().enumerate() {
        let p = folded
            .iter()
            .find(|p| p.id == u.id)
            .ok_or_else(|| Failure::regression(format!("user {} not folded", u.id)))?;
        let phi = (u.y - TABLE1_CENTER.y).atan2(u.x - TABLE1_CENTER.x).rem_euclid(TAU);
        let side = if s1.contains(&u.id) { 1 } else { 2 };
        println!("{:>4} {:>6.2} {:>6.4} {:>+3} {:>5}", u.id, phi, p.x, p.c, format!("S{side}"));
        let (x, c) = TABLE1_FOLDED[i];
        check((p.x - x).abs() <= 5e-3 && p.c == c, || {
            format!("user {}: folded to ({:.4}, {}), expected ({x}, {c})", u.id, p.x, p.c)
        })?;
        check(side == TABLE1_SIDES[i], || {
            format!("user {} on S{side}, expected S{}", u.id, TABLE1_SIDES[i])
        })?;
    }
    println!("split at x = {TABLE1_SPLIT_X}: S1 = {{{}}}", join(&s1));
    Ok(())
}

pub fn table3a() -> Result<(), Failure> {
    let mut tree = fixtures::table3_a().map_err(Failure::internal)?;
    let (d1, below) = (d(&tree, 1)?, d(&tree, 2)? + d(&tree, 3)?);
    check(d1 == 46.0 && below == 45.0, || format!("d1 = {d1}, d2 + d3 = {below}"))?;
    println!("{d1} > {below}: split pays");
    let (f1, frontier) = solve(&mut tree)?;
    check(f1 == 41.0 && frontier == [2, 6, 7], || format!("F1 = {f1}, frontier {frontier:?}"))?;
    println!("F1 = {f1} = {}; optimal nodes: {}", addends(&tree, &frontier), join(&frontier));
    Ok(())
}

pub fn table3b() -> Result<(), Failure> {
    let mut tree = fixtures::table3_b().map_err(Failure::internal)?;
    let (d1, below) = (d(&tree, 1)?, d(&tree, 2)? + d(&tree, 3)?);
    check(d1 == 43.0 && below == 45.0, || format!("d1 = {d1}, d2 + d3 = {below}"))?;
    println!("{d1} < {below}: split does not pay one level down");
    let (f1, frontier) = solve(&mut tree)?;
    check(f1 == 40.0 && frontier == [4, 5, 6, 7], || format!("F1 = {f1}, frontier {frontier:?}"))?;
    println!("F1 = {f1} = {}; optimal nodes: {}", addends(&tree, &frontier), join(&frontier));

    let n5 = tree
        .nodes
        .get_mut(&5)
        .ok_or_else(|| Failure::regression("node 5 missing"))?;
    n5.t = 5.0;
    n5.d = n5.t + n5.q;
    n5.label = n5.d;
    let d5 = n5.d;
    let (f1, frontier) = solve(&mut tree)?;
    check(f1 == 41.0 && frontier == [2, 6, 7], || format!("F1 = {f1}, frontier {frontier:?}"))?;
    println!(
        "with d5 = {d5}: F1 = {f1} = {}; optimal nodes: {}",
        addends(&tree, &frontier),
        join(&frontier)
    );
    Ok(())
}

pub fn table4() -> Result<(), Failure> {
    let mut tree = fixtures::table4().map_err(Failure::internal)?;
    let (f1, frontier) = solve(&mut tree)?;
    for (k, f) in fixtures::TABLE4_FINAL {
        let got = tree.get(k).and_then(|n| n.final_label);
        check(got == Some(f), || format!("F{k} = {got:?}, expected {f}"))?;
    }
    let flagged: Vec<u64> = tree
        .nodes
        .values()
        .filter(|n| n.flag == Some(true))
        .map(|n| n.k)
        .collect();
    check(flagged == fixtures::TABLE4_FLAGGED, || format!("flagged nodes {flagged:?}"))?;
    check(f1 == fixtures::TABLE4_TOTAL && frontier == fixtures::TABLE4_FRONTIER, || {
        format!("F1 = {f1}, frontier {frontier:?}")
    })?;
    println!("F1 = {f1}; optimal nodes: {}", join(&frontier));
    Ok(())
}
