//! Brute-force baselines used to check the fast paths.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::bipartition::{canonical_partition, PolarUser};
use crate::error::{Error, Result};
use crate::instance::{BoundingBox, CostModel, User};
use crate::tree::PartitionTree;
use crate::weber::{sites_from_users, solve_weber, weber_objective, Point, Site};

pub const MAX_EXHAUSTIVE_USERS: usize = 16;
pub const MAX_GRID_RESOLUTION: usize = 2048;
pub const MAX_GRID_REFINEMENTS: usize = 8;
pub const MAX_FRONTIERS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport<W> {
    pub best_value: f64,
    pub best_witness: W,
    pub enumerated: usize,
}

/// Station plus link cost of one side, users taken in id order.
fn side_cost(mut members: Vec<User>, model: &CostModel, epsilon: f64) -> Result<f64> {
    if members.is_empty() {
        return Ok(model.es_cost(0.0));
    }
    members.sort_by_key(|u| u.id);
    let weight: f64 = members.iter().map(|u| u.w).sum();
    let g = solve_weber(&sites_from_users(&members, model), epsilon)?.objective;
    Ok(model.es_cost(weight) + g)
}

/// Every unordered split into two nonempty groups, `2^(n-1) - 1` of them.
/// The witness is `(side holding the first user, other side)`, ids sorted.
pub fn exhaustive_bipartition(
    users: &[User],
    model: &CostModel,
    epsilon: f64,
) -> Result<OracleReport<(Vec<u64>, Vec<u64>)>> {
    let n = users.len();
    if !(2..=MAX_EXHAUSTIVE_USERS).contains(&n) {
        return Err(Error::OracleLimit(format!(
            "exhaustive bipartition needs 2..={MAX_EXHAUSTIVE_USERS} users, got {n}"
        )));
    }
    let count = (1usize << (n - 1)) - 1;
    let split = |mask: usize| {
        let (mut a, mut b) = (vec![users[0]], Vec::new());
        for (i, u) in users.iter().enumerate().skip(1) {
            if mask >> (i - 1) & 1 == 1 {
                b.push(*u);
            } else {
                a.push(*u);
            }
        }
        (a, b)
    };
    let values: Vec<f64> = (1..=count)
        .into_par_iter()
        .map(|mask| {
            let (a, b) = split(mask);
            Ok(side_cost(a, model, epsilon)? + side_cost(b, model, epsilon)?)
        })
        .collect::<Result<_>>()?;
    let (best, best_value) = full_scan_min(&values)?;
    let (a, b) = split(best + 1);
    let ids = |v: Vec<User>| {
        let mut ids: Vec<u64> = v.iter().map(|u| u.id).collect();
        ids.sort_unstable();
        ids
    };
    Ok(OracleReport {
        best_value,
        best_witness: (ids(a), ids(b)),
        enumerated: values.len(),
    })
}

/// Index of the cheapest center for each user; ties go to the lower index.
pub fn nearest_center_assignment(
    users: &[User],
    centers: &[Point],
    model: &CostModel,
) -> Result<Vec<usize>> {
    if centers.is_empty() {
        return Err(Error::Empty("center list"));
    }
    Ok(users
        .iter()
        .map(|u| {
            let mut best = (0, f64::INFINITY);
            for (j, c) in centers.iter().enumerate() {
                let f = model.link_cost(u.w, u.position(), *c);
                if f < best.1 {
                    best = (j, f);
                }
            }
            best.0
        })
        .collect())
}

/// First index holding the smallest value.
pub fn full_scan_min(values: &[f64]) -> Result<(usize, f64)> {
    let mut it = values.iter().copied().enumerate();
    let first = it.next().ok_or(Error::Empty("value list"))?;
    Ok(it.fold(first, |best, (i, v)| if v < best.1 { (i, v) } else { best }))
}

/// A partition found by turning a line about the center.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinePartition {
    /// Aligned with the cluster slice the users were folded from.
    pub in_s1: Vec<bool>,
    pub s1: Vec<u64>,
    pub s2: Vec<u64>,
}

#[derive(Clone, Copy)]
enum Turn {
    Exact,
    Ccw,
    Cw,
}

/// All distinct unordered partitions cut by a directed line through the
/// center with direction angle in `[0, pi)`. Works from the users' plane
/// vectors: a user is in `S1` when it lies right of the line or on it, and a
/// center user is always in `S1`. Lines are tried through every user
/// direction, exactly and turned infinitesimally either way, plus the ends
/// of the angle range.
pub fn enumerate_line_partitions(folded: &[PolarUser]) -> Vec<LinePartition> {
    const ON_LINE: f64 = 1e-12;
    let vecs: Vec<(f64, f64)> = folded
        .iter()
        .map(|p| (p.d * p.phi.cos(), p.d * p.phi.sin()))
        .collect();
    let east = (1.0, 0.0);
    let mut lines: Vec<((f64, f64), Turn)> =
        vec![(east, Turn::Exact), (east, Turn::Ccw), ((-1.0, 0.0), Turn::Cw)];
    for (p, &(vx, vy)) in folded.iter().zip(&vecs) {
        if p.d == 0.0 {
            continue;
        }
        let (mut ex, mut ey) = (vx / p.d, vy / p.d);
        if ey < 0.0 || (ey == 0.0 && ex < 0.0) {
            (ex, ey) = (-ex, -ey);
        }
        if ey.abs() <= ON_LINE {
            (ex, ey) = east;
        }
        lines.push(((ex, ey), Turn::Exact));
        lines.push(((ex, ey), Turn::Ccw));
        if (ex, ey) != east {
            lines.push(((ex, ey), Turn::Cw));
        }
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for ((ex, ey), turn) in lines {
        let mut in_s1 = vec![false; folded.len()];
        for (p, &(vx, vy)) in folded.iter().zip(&vecs) {
            let cross = ex * vy - ey * vx;
            let dot = ex * vx + ey * vy;
            in_s1[p.index] = if p.d == 0.0 {
                true
            } else if cross.abs() > ON_LINE * p.d {
                cross < 0.0
            } else {
                match turn {
                    Turn::Exact => true,
                    Turn::Ccw => dot > 0.0,
                    Turn::Cw => dot < 0.0,
                }
            };
        }
        if seen.insert(canonical_partition(&in_s1)) {
            let (mut s1, mut s2) = (Vec::new(), Vec::new());
            for p in folded {
                if in_s1[p.index] {
                    s1.push(p.id);
                } else {
                    s2.push(p.id);
                }
            }
            s1.sort_unstable();
            s2.sort_unstable();
            out.push(LinePartition { in_s1, s1, s2 });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridReport {
    pub point: Point,
    pub value: f64,
    /// Best value after the initial grid and after each refinement.
    pub history: Vec<f64>,
}

/// Grid search for the Weber point: evaluate a `(resolution + 1)^2` grid
/// over `bounds`, then `refinements` times re-center a grid four cells
/// wide on the best point so far.
pub fn grid_weber(
    sites: &[Site],
    bounds: BoundingBox,
    resolution: usize,
    refinements: usize,
) -> Result<GridReport> {
    if sites.is_empty() {
        return Err(Error::Empty("user set"));
    }
    if bounds.is_empty() {
        return Err(Error::InvalidArgument(format!("degenerate bounds {bounds:?}")));
    }
    if !(1..=MAX_GRID_RESOLUTION).contains(&resolution) || refinements > MAX_GRID_REFINEMENTS {
        return Err(Error::OracleLimit(format!(
            "grid {resolution} x {refinements} refinements exceeds {MAX_GRID_RESOLUTION} x {MAX_GRID_REFINEMENTS}"
        )));
    }
    let scan = |b: BoundingBox| -> (Point, f64) {
        let hx = (b.max_x - b.min_x) / resolution as f64;
        let hy = (b.max_y - b.min_y) / resolution as f64;
        let rows: Vec<(Point, f64)> = (0..=resolution)
            .into_par_iter()
            .map(|i| {
                let y = b.min_y + i as f64 * hy;
                let mut best = (Point::new(b.min_x, y), f64::INFINITY);
                for j in 0..=resolution {
                    let p = Point::new(b.min_x + j as f64 * hx, y);
                    let v = weber_objective(sites, p);
                    if v < best.1 {
                        best = (p, v);
                    }
                }
                best
            })
            .collect();
        rows.into_iter()
            .fold((Point::default(), f64::INFINITY), |a, r| if r.1 < a.1 { r } else { a })
    };
    let mut b = bounds;
    let (mut point, mut value) = scan(b);
    let mut history = vec![value];
    for _ in 0..refinements {
        let hx = 2.0 * (b.max_x - b.min_x) / resolution as f64;
        let hy = 2.0 * (b.max_y - b.min_y) / resolution as f64;
        b = BoundingBox::new(point.x - hx, point.y - hy, point.x + hx, point.y + hy);
        let (p, v) = scan(b);
        if v < value {
            (point, value) = (p, v);
        }
        history.push(value);
    }
    Ok(GridReport {
        point,
        value,
        history,
    })
}

/// Bounding box of the sites, padded by `pad` on every side.
pub fn site_bounds(sites: &[Site], pad: f64) -> BoundingBox {
    let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
    for s in sites {
        lo = (lo.0.min(s.pos.x), lo.1.min(s.pos.y));
        hi = (hi.0.max(s.pos.x), hi.1.max(s.pos.y));
    }
    BoundingBox::new(lo.0 - pad, lo.1 - pad, hi.0 + pad, hi.1 + pad)
}

/// Every frontier (antichain cutting each root-to-leaf path once) of the
/// subtree at `k`, with its summed labels. Sums follow the tree shape, so
/// the minimum is comparable exactly with the dynamic program.
pub fn enumerate_frontiers(tree: &PartitionTree, k: u64) -> Result<Vec<(f64, Vec<u64>)>> {
    let node = tree
        .get(k)
        .ok_or_else(|| Error::InvalidTree(format!("node {k} missing")))?;
    let mut out = vec![(node.label, vec![k])];
    if node.leaf {
        return Ok(out);
    }
    let left = enumerate_frontiers(tree, 2 * k)?;
    let right = enumerate_frontiers(tree, 2 * k + 1)?;
    if left.len().saturating_mul(right.len()) > MAX_FRONTIERS {
        return Err(Error::OracleLimit(format!(
            "subtree {k} has more than {MAX_FRONTIERS} frontiers"
        )));
    }
    for (a, fa) in &left {
        for (b, fb) in &right {
            let mut nodes = fa.clone();
            nodes.extend(fb);
            out.push((a + b, nodes));
        }
    }
    Ok(out)
}

/// Cheapest frontier of the whole tree.
pub fn best_frontier(tree: &PartitionTree) -> Result<OracleReport<Vec<u64>>> {
    let all = enumerate_frontiers(tree, 1)?;
    let values: Vec<f64> = all.iter().map(|f| f.0).collect();
    let (i, best_value) = full_scan_min(&values)?;
    let mut witness = all[i].1.clone();
    witness.sort_unstable();
    Ok(OracleReport {
        best_value,
        best_witness: witness,
        enumerated: all.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartition::polar_fold;

    fn users(raw: &[(f64, f64, f64)]) -> Vec<User> {
        raw.iter()
            .enumerate()
            .map(|(i, &(x, y, w))| User::new(i as u64 + 1, x, y, w))
            .collect()
    }

    #[test]
    fn exhaustive_counts() {
        let m = CostModel::default();
        let two = users(&[(0.0, 0.0, 1.0), (5.0, 0.0, 1.0)]);
        assert_eq!(exhaustive_bipartition(&two, &m, 1e-7).unwrap().enumerated, 1);
        let five = users(&[(0.0, 0.0, 1.0), (5.0, 0.0, 1.0), (1.0, 2.0, 2.0), (7.0, 1.0, 1.0), (3.0, 3.0, 1.0)]);
        assert_eq!(exhaustive_bipartition(&five, &m, 1e-7).unwrap().enumerated, 15);
        assert!(exhaustive_bipartition(&two[..1], &m, 1e-7).is_err());
    }

    #[test]
    fn assignment_ties_go_low() {
        let m = CostModel::default();
        let us = users(&[(1.0, 0.0, 1.0), (5.0, 0.0, 1.0)]);
        let one = nearest_center_assignment(&us, &[Point::new(9.0, 9.0)], &m).unwrap();
        assert_eq!(one, vec![0, 0]);
        let two =
            nearest_center_assignment(&us, &[Point::new(0.0, 0.0), Point::new(2.0, 0.0)], &m).unwrap();
        assert_eq!(two, vec![0, 1]);
        assert!(nearest_center_assignment(&us, &[], &m).is_err());
    }

    #[test]
    fn full_scan_examples() {
        assert_eq!(full_scan_min(&[3.0, 1.0, 2.0]).unwrap(), (1, 1.0));
        assert_eq!(full_scan_min(&[1.0, 1.0]).unwrap(), (0, 1.0));
        assert!(full_scan_min(&[]).is_err());
    }

    #[test]
    fn line_partitions_of_two_users() {
        let us = users(&[(1.0, 2.0, 1.0), (-3.0, 1.0, 1.0)]);
        let parts = enumerate_line_partitions(&polar_fold(&us, Point::new(0.0, 0.0)));
        assert!(parts.len() <= 2);
        assert!(parts.iter().all(|p| p.s1.len() + p.s2.len() == 2));
    }

    #[test]
    fn grid_single_user_and_square() {
        let one = [Site::new(1, 0.3, 0.7, 2.0)];
        let r = grid_weber(&one, BoundingBox::new(0.0, 0.0, 1.0, 1.0), 100, 0).unwrap();
        assert!(r.point.distance(Point::new(0.3, 0.7)) < 1e-9);
        let sq = [
            Site::new(1, 0.0, 0.0, 1.0),
            Site::new(2, 1.0, 0.0, 1.0),
            Site::new(3, 1.0, 1.0, 1.0),
            Site::new(4, 0.0, 1.0, 1.0),
        ];
        let r = grid_weber(&sq, BoundingBox::new(-0.5, -0.5, 1.5, 1.5), 64, 2).unwrap();
        assert!(r.point.distance(Point::new(0.5, 0.5)) <= 2.0 / 64.0);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(grid_weber(&sq, BoundingBox::new(0.0, 0.0, 0.0, 1.0), 8, 0).is_err());
        assert!(grid_weber(&sq, BoundingBox::new(0.0, 0.0, 1.0, 1.0), 4096, 0).is_err());
    }
}
