//! Splitting one cluster in two with a line rotated about its center of
//! gravity.
//!
//! Every user gets a folded angle `x` in `[0, pi)` and a side sign `c`; a line
//! at angle `x` puts user `i` in `S1` when `(x - x_i) * c_i >= 0`. The split
//! cost `h(x)` is piecewise constant in `x`, so it is evaluated at one
//! representative angle per distinct partition.

use std::collections::HashSet;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fibsearch::minimize_periodic_bimodal;
use crate::instance::{CostModel, SolverConfig, SweepStrategy, User};
use crate::weber::{sites_from_users, solve_weber, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarUser {
    pub id: u64,
    /// Position of the user in the cluster slice it was folded from.
    pub index: usize,
    pub d: f64,
    pub phi: f64,
    pub x: f64,
    pub c: i8,
}

/// Folds a polar angle in `[0, 2pi)` onto `[0, pi)` with a side sign.
pub fn fold_angle(phi: f64) -> (f64, i8) {
    if (PI..2.0 * PI).contains(&phi) {
        (phi - PI, -1)
    } else {
        (phi, 1)
    }
}

/// Polar coordinates of every user about `center`, sorted by folded angle
/// (ties by id). A user sitting on the center gets `x = 0, c = +1` and so is
/// always in `S1`.
pub fn polar_fold(users: &[User], center: Point) -> Vec<PolarUser> {
    let mut out: Vec<PolarUser> = users
        .iter()
        .enumerate()
        .map(|(index, u)| {
            let (dx, dy) = (u.x - center.x, u.y - center.y);
            let d = dx.hypot(dy);
            let mut phi = if d == 0.0 { 0.0 } else { dy.atan2(dx) };
            if phi < 0.0 {
                phi += 2.0 * PI;
            }
            if phi >= 2.0 * PI {
                phi = 0.0;
            }
            let (x, c) = if d == 0.0 { (0.0, 1) } else { fold_angle(phi) };
            PolarUser {
                id: u.id,
                index,
                d,
                phi,
                x,
                c,
            }
        })
        .collect();
    out.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.id.cmp(&b.id)));
    out
}

/// Membership mask over the cluster slice: `true` for `S1`.
pub fn split_mask(x: f64, folded: &[PolarUser]) -> Vec<bool> {
    let mut mask = vec![false; folded.len()];
    for p in folded {
        mask[p.index] = (x - p.x) * f64::from(p.c) >= 0.0;
    }
    mask
}

/// `(S1, S2)` ids at angle `x`, each sorted ascending.
pub fn split_at_angle(x: f64, folded: &[PolarUser]) -> (Vec<u64>, Vec<u64>) {
    let (mut s1, mut s2) = (Vec::new(), Vec::new());
    for p in folded {
        if (x - p.x) * f64::from(p.c) >= 0.0 {
            s1.push(p.id);
        } else {
            s2.push(p.id);
        }
    }
    s1.sort_unstable();
    s2.sort_unstable();
    (s1, s2)
}

/// One side of a split with its solved station.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Side {
    /// Ids, ascending.
    pub members: Vec<u64>,
    /// `None` for an empty side.
    pub center: Option<Point>,
    pub weight: f64,
    /// Link cost at the center.
    pub g: f64,
    /// Station cost of the side's total weight.
    pub q: f64,
}

impl Side {
    pub fn cost(&self) -> f64 {
        self.q + self.g
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Solves the station of a user set. Users are processed in id order so the
/// result depends only on the set.
pub fn evaluate_side(members: &[&User], model: &CostModel, epsilon: f64) -> Result<Side> {
    if members.is_empty() {
        return Ok(Side {
            members: Vec::new(),
            center: None,
            weight: 0.0,
            g: 0.0,
            q: model.es_cost(0.0),
        });
    }
    let mut sorted: Vec<User> = members.iter().map(|u| **u).collect();
    sorted.sort_by_key(|u| u.id);
    let weight: f64 = sorted.iter().map(|u| u.w).sum();
    let r = solve_weber(&sites_from_users(&sorted, model), epsilon)?;
    if !r.converged {
        log::warn!("Weber iteration hit its cap on a {}-user set", sorted.len());
    }
    Ok(Side {
        members: sorted.iter().map(|u| u.id).collect(),
        center: Some(r.center),
        weight,
        g: r.objective,
        q: model.es_cost(weight),
    })
}

/// Center and link cost of a nonempty cluster.
pub fn cluster_cost(users: &[User], model: &CostModel, epsilon: f64) -> Result<(Point, f64)> {
    let refs: Vec<&User> = users.iter().collect();
    let side = evaluate_side(&refs, model, epsilon)?;
    match side.center {
        Some(c) => Ok((c, side.g)),
        None => Err(Error::Empty("cluster")),
    }
}

/// Both sides of the partition given by `in_s1` (aligned with `users`).
pub fn partition_sides(
    users: &[User],
    in_s1: &[bool],
    model: &CostModel,
    epsilon: f64,
) -> Result<(Side, Side)> {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (u, &s1) in users.iter().zip(in_s1) {
        if s1 {
            a.push(u);
        } else {
            b.push(u);
        }
    }
    Ok((evaluate_side(&a, model, epsilon)?, evaluate_side(&b, model, epsilon)?))
}

/// Combined two-station cost `h` of a partition.
pub fn partition_cost(users: &[User], in_s1: &[bool], model: &CostModel, epsilon: f64) -> Result<f64> {
    let (s1, s2) = partition_sides(users, in_s1, model, epsilon)?;
    Ok(s1.cost() + s2.cost())
}

/// `h(x)`: the two-station cost of the split at angle `x`.
pub fn split_cost(
    x: f64,
    users: &[User],
    folded: &[PolarUser],
    model: &CostModel,
    epsilon: f64,
) -> Result<f64> {
    partition_cost(users, &split_mask(x, folded), model, epsilon)
}

/// Canonical form of an unordered partition: membership relative to the
/// side holding the first user.
pub fn canonical_partition(in_s1: &[bool]) -> Vec<bool> {
    match in_s1.first() {
        Some(&true) | None => in_s1.to_vec(),
        Some(&false) => in_s1.iter().map(|b| !b).collect(),
    }
}

/// One angle per distinct unordered partition, ascending, with its mask.
///
/// The partition only changes at `x = 0` and at the folded user angles, so
/// each breakpoint and the midpoint of each gap after it are tried, and
/// repeats (including side swaps) are dropped.
pub fn candidate_angles(folded: &[PolarUser]) -> Vec<(f64, Vec<bool>)> {
    let mut breaks: Vec<f64> = vec![0.0];
    breaks.extend(folded.iter().filter(|p| p.d > 0.0).map(|p| p.x));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut probes = Vec::with_capacity(2 * breaks.len());
    for (j, &b) in breaks.iter().enumerate() {
        let next = breaks.get(j + 1).copied().unwrap_or(PI);
        probes.push(b);
        probes.push(0.5 * (b + next));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for x in probes {
        let mask = split_mask(x, folded);
        if seen.insert(canonical_partition(&mask)) {
            out.push((x, mask));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepPath {
    FullScan,
    Fibonacci,
}

/// The evaluated part of `h(x)` over the candidate angles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepProfile {
    /// Evaluated candidate angles, ascending.
    pub angles: Vec<f64>,
    pub h_values: Vec<f64>,
    /// Number of candidate angles (distinct partitions).
    pub candidates: usize,
    /// `None` when the smallest value is not positive.
    pub range_ratio: Option<f64>,
    pub bimodal: bool,
    pub evaluations: usize,
    pub path: SweepPath,
}

impl SweepProfile {
    /// Whether every candidate was evaluated.
    pub fn is_complete(&self) -> bool {
        self.angles.len() == self.candidates
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub r: f64,
    pub h: f64,
    pub s1: Side,
    pub s2: Side,
    pub profile: SweepProfile,
}

/// Minimizes `h` over the candidate angles of a folded cluster.
pub fn sweep_minimize(
    users: &[User],
    folded: &[PolarUser],
    model: &CostModel,
    config: &SolverConfig,
) -> Result<SweepOutcome> {
    if users.len() < 2 {
        return Err(Error::InvalidArgument("sweep needs at least 2 users".into()));
    }
    let cands = candidate_angles(folded);
    let m = cands.len();
    let eval = |i: usize| -> Result<(f64, Side, Side)> {
        let (s1, s2) = partition_sides(users, &cands[i].1, model, config.epsilon)?;
        Ok((s1.cost() + s2.cost(), s1, s2))
    };

    let mut results: Vec<Option<(f64, Side, Side)>> = vec![None; m];
    let mut path = SweepPath::FullScan;
    let mut evaluations = 0;

    let coarse: Vec<usize> = {
        let mut v: Vec<usize> = (0..8).map(|i| i * m / 8).collect();
        v.dedup();
        v
    };
    let use_fib = config.sweep_strategy == SweepStrategy::FibonacciIfBimodal
        && users.len() >= config.bimodal_n_cutoff
        && {
            let probe: Vec<(f64, Side, Side)> =
                coarse.par_iter().map(|&i| eval(i)).collect::<Result<_>>()?;
            evaluations += probe.len();
            let hs: Vec<f64> = probe.iter().map(|p| p.0).collect();
            for (&i, p) in coarse.iter().zip(probe) {
                results[i] = Some(p);
            }
            range_ratio(&hs).is_ok_and(|r| r >= config.bimodal_range_cutoff)
        };

    if use_fib {
        path = SweepPath::Fibonacci;
        let mut failure = None;
        let search = minimize_periodic_bimodal(
            |i| {
                if let Some(r) = &results[i] {
                    return r.0;
                }
                match eval(i) {
                    Ok(r) => {
                        evaluations += 1;
                        let h = r.0;
                        results[i] = Some(r);
                        h
                    }
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                }
            },
            m,
            config.rng_seed,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        search?;
    } else {
        let missing: Vec<usize> = (0..m).filter(|&i| results[i].is_none()).collect();
        let filled: Vec<(f64, Side, Side)> =
            missing.par_iter().map(|&i| eval(i)).collect::<Result<_>>()?;
        evaluations += filled.len();
        for (i, r) in missing.into_iter().zip(filled) {
            results[i] = Some(r);
        }
    }

    let mut angles = Vec::new();
    let mut h_values = Vec::new();
    let mut best: Option<usize> = None;
    for (i, r) in results.iter().enumerate() {
        if let Some((h, _, _)) = r {
            angles.push(cands[i].0);
            h_values.push(*h);
            if best.is_none_or(|b| *h < results[b].as_ref().map_or(f64::INFINITY, |r| r.0)) {
                best = Some(i);
            }
        }
    }
    let best = best.expect("at least one candidate evaluated");
    let (h, s1, s2) = results[best].take().expect("best candidate evaluated");
    let profile = SweepProfile {
        range_ratio: range_ratio(&h_values).ok(),
        bimodal: h_values.len() < 2 || is_circular_bimodal(&h_values),
        angles,
        h_values,
        candidates: m,
        evaluations,
        path,
    };
    Ok(SweepOutcome {
        r: cands[best].0,
        h,
        s1,
        s2,
        profile,
    })
}

/// A two-way split of one cluster.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitResult {
    pub s1: Side,
    pub s2: Side,
    pub h: f64,
    /// Minimizing sweep angle.
    pub r: f64,
    /// `h` at the sweep minimum, before refinement.
    pub sweep_h: f64,
    pub sweep_evaluations: usize,
    pub refined: bool,
    pub refine_passes: usize,
}

impl SplitResult {
    /// True when every user ended up on one side, meaning "do not split".
    pub fn is_one_sided(&self) -> bool {
        self.s1.is_empty() || self.s2.is_empty()
    }
}

/// Reassigns users to the cheaper of the two centers and re-solves both
/// centers, until nothing moves or `max_passes` passes ran. A pass that
/// would raise `h` or empty a side is rejected and ends refinement.
pub fn refine(
    users: &[User],
    split: SplitResult,
    model: &CostModel,
    epsilon: f64,
    max_passes: usize,
) -> Result<SplitResult> {
    if split.is_one_sided() {
        return Err(Error::InvalidArgument("cannot refine a one-sided split".into()));
    }
    let mut cur = split;
    cur.refined = true;
    cur.refine_passes = 0;
    for _ in 0..max_passes {
        let (c1, c2) = match (cur.s1.center, cur.s2.center) {
            (Some(a), Some(b)) => (a, b),
            _ => break,
        };
        cur.refine_passes += 1;
        let in_s1: HashSet<u64> = cur.s1.members.iter().copied().collect();
        let mut moved = false;
        let mask: Vec<bool> = users
            .iter()
            .map(|u| {
                let p = u.position();
                let (f1, f2) = (model.link_cost(u.w, p, c1), model.link_cost(u.w, p, c2));
                let was = in_s1.contains(&u.id);
                let now = if was { f2 >= f1 } else { f1 < f2 };
                moved |= now != was;
                now
            })
            .collect();
        if !moved || mask.iter().all(|&b| b) || mask.iter().all(|&b| !b) {
            break;
        }
        let (s1, s2) = partition_sides(users, &mask, model, epsilon)?;
        let h = s1.cost() + s2.cost();
        if h > cur.h {
            log::debug!("refinement pass rejected: h {} -> {}", cur.h, h);
            break;
        }
        cur.s1 = s1;
        cur.s2 = s2;
        cur.h = h;
    }
    Ok(cur)
}

/// Full split of a cluster: center of gravity, fold, sweep, refine. A
/// one-sided result is returned unrefined.
pub fn bipartition_cluster(
    users: &[User],
    model: &CostModel,
    config: &SolverConfig,
) -> Result<SplitResult> {
    if users.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "cannot split a cluster of {} user(s)",
            users.len()
        )));
    }
    let (center, _) = cluster_cost(users, model, config.epsilon)?;
    let folded = polar_fold(users, center);
    let sweep = sweep_minimize(users, &folded, model, config)?;
    let split = SplitResult {
        s1: sweep.s1,
        s2: sweep.s2,
        h: sweep.h,
        r: sweep.r,
        sweep_h: sweep.h,
        sweep_evaluations: sweep.profile.evaluations,
        refined: false,
        refine_passes: 0,
    };
    if split.is_one_sided() {
        return Ok(split);
    }
    refine(users, split, model, config.epsilon, config.refine_max_passes)
}

/// `(max - min) / min`.
pub fn range_ratio(values: &[f64]) -> Result<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        return Err(Error::Empty("value list"));
    }
    if min.is_nan() || min <= 0.0 {
        return Err(Error::InvalidArgument(format!("range ratio needs a positive minimum, got {min}")));
    }
    Ok((max - min) / min)
}

/// Whether the cyclic sequence has a single valley once runs of equal
/// values are merged. A constant sequence counts as bimodal.
pub fn is_circular_bimodal(values: &[f64]) -> bool {
    let mut runs: Vec<f64> = Vec::with_capacity(values.len());
    for &v in values {
        if runs.last() != Some(&v) {
            runs.push(v);
        }
    }
    while runs.len() > 1 && runs.first() == runs.last() {
        runs.pop();
    }
    let k = runs.len();
    if k <= 1 {
        return true;
    }
    let minima = (0..k)
        .filter(|&i| {
            let (prev, next) = (runs[(i + k - 1) % k], runs[(i + 1) % k]);
            runs[i] < prev && runs[i] < next
        })
        .count();
    minima == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn users(raw: &[(f64, f64, f64)]) -> Vec<User> {
        raw.iter()
            .enumerate()
            .map(|(i, &(x, y, w))| User::new(i as u64 + 1, x, y, w))
            .collect()
    }

    #[test]
    fn fold_examples() {
        let (x, c) = fold_angle(3.65);
        assert!((x - 0.5084).abs() < 5e-4);
        assert_eq!(c, -1);
        assert_eq!(fold_angle(0.67), (0.67, 1));
        assert_eq!(fold_angle(PI), (0.0, -1));
    }

    #[test]
    fn center_user_joins_s1() {
        let us = users(&[(0.0, 0.0, 1.0), (1.0, 0.0, 1.0), (0.0, -1.0, 1.0)]);
        let f = polar_fold(&us, Point::new(0.0, 0.0));
        assert_eq!((f[0].id, f[0].x, f[0].c), (1, 0.0, 1));
        for x in [0.0, 0.3, 1.7, 3.1] {
            assert!(split_at_angle(x, &f).0.contains(&1));
        }
    }

    #[test]
    fn split_forced_by_sign() {
        let us = users(&[(1.0, 1.0, 1.0), (-1.0, 2.0, 1.0), (0.5, 3.0, 1.0)]);
        let f = polar_fold(&us, Point::new(0.0, 0.0));
        assert!(f.iter().all(|p| p.c == 1 && p.x > 0.0));
        let (s1, s2) = split_at_angle(0.0, &f);
        assert!(s1.is_empty());
        assert_eq!(s2, vec![1, 2, 3]);
    }

    #[test]
    fn midpoints_catch_every_partition() {
        // Folded angles 0.5 (c=-1), 1.0 (c=+1), 2.0 (c=-1): {3} | {1, 2}
        // only shows up strictly between 1.0 and 2.0.
        let at = |phi: f64| (phi.cos(), phi.sin(), 1.0);
        let us = users(&[at(0.5 + PI), at(1.0), at(2.0 + PI)]);
        let f = polar_fold(&us, Point::new(0.0, 0.0));
        let parts: Vec<Vec<bool>> =
            candidate_angles(&f).into_iter().map(|(_, m)| canonical_partition(&m)).collect();
        assert!(parts.contains(&vec![true, true, false]));
        assert!(parts.len() <= 3);
    }

    #[test]
    fn cluster_cost_examples() {
        let m = CostModel::default();
        let (c, g) = cluster_cost(&users(&[(2.0, 5.0, 3.0)]), &m, 1e-7).unwrap();
        assert_eq!((c, g), (Point::new(2.0, 5.0), 0.0));
        let (_, g) = cluster_cost(&users(&[(0.0, 0.0, 1.0), (6.0, 0.0, 1.0)]), &m, 1e-7).unwrap();
        assert!((g - 6.0).abs() < 1e-12);
        assert!(cluster_cost(&[], &m, 1e-7).is_err());
    }

    #[test]
    fn far_pair_splits_into_singletons() {
        let m = CostModel::default();
        let us = users(&[(0.0, 0.0, 1.0), (40.0, 0.0, 1.0)]);
        let r = bipartition_cluster(&us, &m, &SolverConfig::default()).unwrap();
        assert!(!r.is_one_sided());
        assert_eq!((r.s1.g, r.s2.g), (0.0, 0.0));
        let single = m.es_cost(2.0) + 40.0;
        assert!(r.h < single);
        assert!((r.h - 2.0 * m.es_cost(1.0)).abs() < 1e-12);
    }

    #[test]
    fn close_pair_stays_together() {
        let m = CostModel::default();
        let us = users(&[(0.0, 0.0, 1.0), (0.1, 0.0, 1.0)]);
        let r = bipartition_cluster(&us, &m, &SolverConfig::default()).unwrap();
        assert!(r.is_one_sided());
        assert!(!r.refined);
    }

    #[test]
    fn square_axis_splits_tie() {
        let m = CostModel::default();
        let us = users(&[(0.0, 0.0, 1.0), (2.0, 0.0, 1.0), (2.0, 2.0, 1.0), (0.0, 2.0, 1.0)]);
        let f = polar_fold(&us, Point::new(1.0, 1.0));
        // Lines at 0+ and pi/2+ separate the square along its two axes.
        let a = split_cost(0.1, &us, &f, &m, 1e-9).unwrap();
        let b = split_cost(PI / 2.0 + 0.1, &us, &f, &m, 1e-9).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn refine_fixed_point_is_one_pass() {
        let m = CostModel::default();
        let us = users(&[(0.0, 0.0, 1.0), (1.0, 0.0, 1.0), (20.0, 0.0, 1.0), (21.0, 0.0, 1.0)]);
        let mask = [true, true, false, false];
        let (s1, s2) = partition_sides(&us, &mask, &m, 1e-9).unwrap();
        let h = s1.cost() + s2.cost();
        let split = SplitResult {
            s1: s1.clone(),
            s2: s2.clone(),
            h,
            r: 0.0,
            sweep_h: h,
            sweep_evaluations: 0,
            refined: false,
            refine_passes: 0,
        };
        let r = refine(&us, split, &m, 1e-9, 50).unwrap();
        assert!(r.refined);
        assert_eq!(r.refine_passes, 1);
        assert_eq!((r.s1, r.s2, r.h), (s1, s2, h));
    }

    #[test]
    fn refine_moves_misplaced_user() {
        let m = CostModel::default();
        let us = users(&[
            (0.0, 0.0, 1.0),
            (1.0, 0.0, 1.0),
            (0.0, 1.0, 1.0),
            (20.0, 0.0, 1.0),
            (1.0, 1.0, 1.0),
        ]);
        // User 5 sits in the left group but is put with user 4.
        let mask = [true, true, true, false, false];
        let (s1, s2) = partition_sides(&us, &mask, &m, 1e-9).unwrap();
        let h = s1.cost() + s2.cost();
        let split = SplitResult {
            s1,
            s2,
            h,
            r: 0.0,
            sweep_h: h,
            sweep_evaluations: 0,
            refined: false,
            refine_passes: 0,
        };
        let r = refine(&us, split, &m, 1e-9, 50).unwrap();
        assert_eq!(r.s1.members, vec![1, 2, 3, 5]);
        assert_eq!(r.s2.members, vec![4]);
        assert!(r.h < h);
    }

    #[test]
    fn range_ratio_examples() {
        assert_eq!(range_ratio(&[10.0, 10.0, 10.0]).unwrap(), 0.0);
        assert!((range_ratio(&[10.0, 12.0]).unwrap() - 0.2).abs() < 1e-15);
        assert!(range_ratio(&[0.0, 1.0]).is_err());
        assert!(range_ratio(&[]).is_err());
    }

    #[test]
    fn bimodality_examples() {
        assert!(is_circular_bimodal(&[3.0, 2.0, 1.0, 2.0, 3.0, 4.0]));
        assert!(!is_circular_bimodal(&[1.0, 3.0, 1.0, 3.0]));
        assert!(is_circular_bimodal(&[5.0, 5.0, 5.0, 5.0]));
        // A valley split across the wrap point.
        assert!(is_circular_bimodal(&[1.0, 2.0, 3.0, 2.0, 1.0, 1.0]));
        assert!(is_circular_bimodal(&[2.0, 1.0]));
        assert!(!is_circular_bimodal(&[1.0, 2.0, 2.0, 1.5, 3.0]));
    }
}
