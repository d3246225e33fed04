//! Weber point ("center of gravity") of a weighted user set: the location
//! minimizing the weighted sum of Euclidean distances.
//!
//! The solver runs the Weiszfeld fixed-point iteration from the weighted
//! centroid. Near a user location the map degenerates (its limit at the user
//! is the user itself), so a stationary point that lands on a user is
//! resolved by removing that user, re-solving without it, adding it back and
//! resuming the iteration from the reduced optimum. Landing on the same user
//! a second time means that user is the optimum, which is confirmed by
//! comparing the objective there with nearby offset points.
//!
//! Weiszfeld creeps toward an optimum that sits on a user, so every few
//! dozen steps the nearest user is tested directly: it is optimal when the
//! pull of the other users is weaker than its own weight.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{CostModel, User};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn offset(self, dx: f64, dy: f64) -> Point {
        Point::new(self.x + dx, self.y + dy)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// A user as seen by the location solver: position and effective weight
/// (the user's traffic raised to the link exponent).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub id: u64,
    pub pos: Point,
    pub weight: f64,
}

impl Site {
    pub fn new(id: u64, x: f64, y: f64, weight: f64) -> Self {
        Site {
            id,
            pos: Point::new(x, y),
            weight,
        }
    }

    pub fn from_user(user: &User, model: &CostModel) -> Self {
        Site {
            id: user.id,
            pos: user.position(),
            weight: model.link_weight(user.w),
        }
    }
}

pub fn sites_from_users(users: &[User], model: &CostModel) -> Vec<Site> {
    users.iter().map(|u| Site::from_user(u, model)).collect()
}

pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeberOptions {
    pub epsilon: f64,
    /// Total Weiszfeld steps across all phases.
    pub max_iterations: usize,
    pub record_trace: bool,
}

impl WeberOptions {
    pub fn new(epsilon: f64) -> Self {
        WeberOptions {
            epsilon,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            record_trace: false,
        }
    }
}

/// One Weiszfeld step. `phase` counts restarts of the iteration; the
/// objective is over the users active in that phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub phase: usize,
    pub active: usize,
    pub point: Point,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeberResult {
    pub center: Point,
    /// Weighted distance sum over the full input set.
    pub objective: f64,
    pub iterations: usize,
    /// User whose location is the optimum, when the optimum sits on a user.
    pub removed_user: Option<u64>,
    pub converged: bool,
    pub trace: Vec<TraceStep>,
}

/// Weighted arithmetic mean of the user positions.
pub fn centroid_seed(sites: &[Site]) -> Result<Point> {
    if sites.is_empty() {
        return Err(Error::Empty("user set"));
    }
    Ok(masked_centroid(sites, &vec![true; sites.len()]))
}

fn masked_centroid(sites: &[Site], active: &[bool]) -> Point {
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for (s, _) in sites.iter().zip(active).filter(|(_, a)| **a) {
        sx += s.weight * s.pos.x;
        sy += s.weight * s.pos.y;
        sw += s.weight;
    }
    Point::new(sx / sw, sy / sw)
}

pub fn weber_objective(sites: &[Site], p: Point) -> f64 {
    sites.iter().map(|s| s.weight * s.pos.distance(p)).sum()
}

fn masked_objective(sites: &[Site], active: &[bool], p: Point) -> f64 {
    sites
        .iter()
        .zip(active)
        .filter(|(_, a)| **a)
        .map(|(s, _)| s.weight * s.pos.distance(p))
        .sum()
}

/// The Weiszfeld map. Undefined at a user location.
pub fn weiszfeld_map(sites: &[Site], p: Point) -> Result<Point> {
    match step(sites, &vec![true; sites.len()], p) {
        Step::Moved(q) => Ok(q),
        Step::Hit(i) => Err(Error::Coincident(sites[i].id)),
    }
}

/// Partial derivatives of the objective. Undefined at a user location.
pub fn weber_gradient(sites: &[Site], p: Point) -> Result<[f64; 2]> {
    let mut g = [0.0, 0.0];
    for s in sites {
        let r = s.pos.distance(p);
        if r == 0.0 {
            return Err(Error::Coincident(s.id));
        }
        g[0] += s.weight * (p.x - s.pos.x) / r;
        g[1] += s.weight * (p.y - s.pos.y) / r;
    }
    Ok(g)
}

enum Step {
    Moved(Point),
    Hit(usize),
}

fn step(sites: &[Site], active: &[bool], p: Point) -> Step {
    let (mut nx, mut ny, mut den) = (0.0, 0.0, 0.0);
    for (i, s) in sites.iter().enumerate() {
        if !active[i] {
            continue;
        }
        let r = s.pos.distance(p);
        let k = s.weight / r;
        if !k.is_finite() {
            return Step::Hit(i);
        }
        nx += k * s.pos.x;
        ny += k * s.pos.y;
        den += k;
    }
    Step::Moved(Point::new(nx / den, ny / den))
}

struct Iterate {
    point: Point,
    converged: bool,
}

struct Run<'a> {
    sites: &'a [Site],
    epsilon: f64,
    budget: usize,
    iterations: usize,
    phase: usize,
    trace: Option<Vec<TraceStep>>,
}

impl Run<'_> {
    /// Weiszfeld steps from `start` until successive iterates are within
    /// epsilon, an iterate lands exactly on a user, or the budget runs out.
    fn iterate(&mut self, active: &[bool], start: Point) -> Iterate {
        let count = active.iter().filter(|a| **a).count();
        let phase = self.phase;
        self.phase += 1;
        let mut p = start;
        if let Some(t) = self.trace.as_mut() {
            t.push(TraceStep {
                phase,
                active: count,
                point: p,
                objective: masked_objective(self.sites, active, p),
            });
        }
        loop {
            if self.budget == 0 {
                return Iterate {
                    point: p,
                    converged: false,
                };
            }
            let next = match step(self.sites, active, p) {
                Step::Moved(q) => q,
                Step::Hit(i) => {
                    return Iterate {
                        point: self.sites[i].pos,
                        converged: true,
                    }
                }
            };
            self.budget -= 1;
            self.iterations += 1;
            if let Some(t) = self.trace.as_mut() {
                t.push(TraceStep {
                    phase,
                    active: count,
                    point: next,
                    objective: masked_objective(self.sites, active, next),
                });
            }
            let moved = p.distance(next);
            p = next;
            if self.iterations.is_multiple_of(VERTEX_PROBE_EVERY) {
                if let Some(k) = optimal_vertex_near(self.sites, active, p) {
                    return Iterate {
                        point: self.sites[k].pos,
                        converged: true,
                    };
                }
            }
            if moved <= self.epsilon {
                return Iterate {
                    point: p,
                    converged: true,
                };
            }
        }
    }

    /// Nearest active user to a stationary point, if the point counts as
    /// landing on it: within epsilon, or strictly better at the user itself. The
    /// second test catches the slow sublinear approach to a user optimum,
    /// where steps drop below epsilon while still a few epsilon away.
    fn nearest_within(&self, active: &[bool], p: Point) -> Option<usize> {
        let (k, d) = self
            .sites
            .iter()
            .enumerate()
            .filter(|(i, _)| active[*i])
            .map(|(i, s)| (i, s.pos.distance(p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        if d <= self.epsilon
            || masked_objective(self.sites, active, self.sites[k].pos)
                < masked_objective(self.sites, active, p)
        {
            Some(k)
        } else {
            None
        }
    }

    /// Compares the objective at user `k` against offsets of length epsilon
    /// along both axes and along the steepest descent direction of the
    /// remaining users' pull.
    fn vertex_check(&self, active: &[bool], k: usize) -> VertexCheck {
        let pk = self.sites[k].pos;
        let eps = self.epsilon;
        let Pull { gx, gy, w_here, den } = pull_at(self.sites, active, pk);
        let pull = gx.hypot(gy);
        let mut dirs = vec![(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)];
        if pull > 0.0 {
            dirs.push((-gx / pull, -gy / pull));
        }
        let here = masked_objective(self.sites, active, pk);
        let mut best: Option<(f64, (f64, f64))> = None;
        for &(dx, dy) in &dirs {
            let v = masked_objective(self.sites, active, pk.offset(eps * dx, eps * dy));
            if v < here && best.is_none_or(|(bv, _)| v < bv) {
                best = Some((v, (dx, dy)));
            }
        }
        match best {
            None => VertexCheck::Optimal,
            Some((_, (dx, dy))) => {
                let (ux, uy, len) = if pull > 0.0 {
                    (-gx / pull, -gy / pull, ((pull - w_here) / den).max(10.0 * eps))
                } else {
                    (dx, dy, 10.0 * eps)
                };
                VertexCheck::Escape(pk.offset(len * ux, len * uy))
            }
        }
    }
}

struct Pull {
    gx: f64,
    gy: f64,
    /// Weight sitting exactly at the point.
    w_here: f64,
    den: f64,
}

/// Gradient of the other users' distance sum at `p`, plus the weight on `p`.
fn pull_at(sites: &[Site], active: &[bool], p: Point) -> Pull {
    let mut out = Pull { gx: 0.0, gy: 0.0, w_here: 0.0, den: 0.0 };
    for (i, s) in sites.iter().enumerate() {
        if !active[i] {
            continue;
        }
        let r = s.pos.distance(p);
        if r == 0.0 {
            out.w_here += s.weight;
            continue;
        }
        out.gx += s.weight * (p.x - s.pos.x) / r;
        out.gy += s.weight * (p.y - s.pos.y) / r;
        out.den += s.weight / r;
    }
    out
}

/// Nearest active user to `p` if it is strictly optimal: the pull of the
/// others is weaker than its own weight.
fn optimal_vertex_near(sites: &[Site], active: &[bool], p: Point) -> Option<usize> {
    let (k, _) = sites
        .iter()
        .enumerate()
        .filter(|(i, _)| active[*i])
        .map(|(i, s)| (i, s.pos.distance(p)))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let pull = pull_at(sites, active, sites[k].pos);
    (pull.gx.hypot(pull.gy) < pull.w_here).then_some(k)
}

/// Steps between checks for an optimal user under the iterate.
const VERTEX_PROBE_EVERY: usize = 64;

enum VertexCheck {
    Optimal,
    Escape(Point),
}

pub fn solve_weber(sites: &[Site], epsilon: f64) -> Result<WeberResult> {
    solve_weber_with(sites, &WeberOptions::new(epsilon))
}

pub fn solve_weber_with(sites: &[Site], opts: &WeberOptions) -> Result<WeberResult> {
    if sites.is_empty() {
        return Err(Error::Empty("user set"));
    }
    if opts.epsilon.is_nan() || opts.epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!("epsilon {} must be positive", opts.epsilon)));
    }
    let n = sites.len();
    let mut run = Run {
        sites,
        epsilon: opts.epsilon,
        budget: opts.max_iterations,
        iterations: 0,
        phase: 0,
        trace: opts.record_trace.then(Vec::new),
    };
    let finish = |run: Run, center: Point, on_user: Option<usize>, converged: bool| WeberResult {
        center,
        objective: weber_objective(sites, center),
        iterations: run.iterations,
        removed_user: on_user.map(|k| sites[k].id),
        converged,
        trace: run.trace.unwrap_or_default(),
    };

    let mut active = vec![true; n];
    // Some(k) while user k is taken out of the set (flag = -1).
    let mut removed: Option<usize> = None;
    let mut resolved = vec![false; n];
    let mut best: Option<(f64, Point, Option<usize>)> = None;
    let mut consider = |p: Point, on: Option<usize>| {
        let v = weber_objective(sites, p);
        if best.is_none_or(|(bv, _, _)| v < bv) {
            best = Some((v, p, on));
        }
    };
    let mut start = masked_centroid(sites, &active);

    for _ in 0..(2 * n + 8) {
        let it = run.iterate(&active, start);
        let sp = it.point;
        if !it.converged {
            let all = vec![true; n];
            let candidate = match removed {
                Some(k) => sites[k].pos,
                None => sp,
            };
            // Out of budget, but a provably optimal user settles it.
            if let Some(k) = optimal_vertex_near(sites, &all, candidate) {
                if sites[k].pos.distance(candidate) <= run.epsilon || removed == Some(k) {
                    return Ok(finish(run, sites[k].pos, Some(k), true));
                }
            }
            consider(candidate, None);
            let (_, p, on) = best.expect("candidate recorded");
            return Ok(finish(run, p, on, false));
        }
        let near = run.nearest_within(&active, sp);
        match removed {
            None => {
                let Some(k) = near else {
                    return Ok(finish(run, sp, None, true));
                };
                consider(sites[k].pos, Some(k));
                let count = active.iter().filter(|a| **a).count();
                if resolved[k] || count == 1 {
                    match run.vertex_check(&active, k) {
                        VertexCheck::Optimal => return Ok(finish(run, sites[k].pos, Some(k), true)),
                        VertexCheck::Escape(p) => {
                            start = p;
                            continue;
                        }
                    }
                }
                removed = Some(k);
                active[k] = false;
                start = masked_centroid(sites, &active);
            }
            Some(k) => {
                active[k] = true;
                removed = None;
                resolved[k] = true;
                // The reduced optimum came back to the removed user.
                if sp.distance(sites[k].pos) <= run.epsilon {
                    return Ok(finish(run, sites[k].pos, Some(k), true));
                }
                if near.is_some() {
                    if let VertexCheck::Optimal = run.vertex_check(&active, k) {
                        return Ok(finish(run, sites[k].pos, Some(k), true));
                    }
                }
                consider(sp, None);
                start = sp;
            }
        }
    }
    let (_, p, on) = best.expect("candidate recorded");
    Ok(finish(run, p, on, false))
}
