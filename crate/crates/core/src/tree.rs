//! Binary tree of recursive splits and the dynamic program that picks the
//! cheapest set of indivisible subnetworks.
//!
//! Nodes use heap indices: the root is 1 and node `k` has children `2k` and
//! `2k + 1`. Each node carries its hardware cost `d = t + q` as label `L`.
//! Bottom-up, `F_k = min(L_k, F_2k + F_2k+1)`; a node is flagged when
//! `L_k = F_k`, and the optimal frontier is the set of flagged nodes with
//! no flagged ancestor.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize, Serializer};

use crate::bipartition::{bipartition_cluster, evaluate_side, Side};
use crate::error::{Error, Result};
use crate::instance::{CostModel, Instance, SolverConfig, Thresholds, User};
use crate::weber::Point;

pub const SOLUTION_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeNode {
    pub k: u64,
    pub depth: u32,
    /// Member ids, ascending. Empty for trees loaded from a cost table.
    pub members: Vec<u64>,
    pub center: Option<Point>,
    pub weight: f64,
    pub t: f64,
    pub q: f64,
    pub d: f64,
    pub label: f64,
    pub final_label: Option<f64>,
    pub flag: Option<bool>,
    pub leaf: bool,
}

impl TreeNode {
    fn new(k: u64, t: f64, q: f64, d: f64, leaf: bool) -> Self {
        TreeNode {
            k,
            depth: depth_of(k),
            members: Vec::new(),
            center: None,
            weight: 0.0,
            t,
            q,
            d,
            label: d,
            final_label: None,
            flag: None,
            leaf,
        }
    }

    fn from_side(k: u64, side: Side, leaf: bool) -> Self {
        let d = side.g + side.q;
        TreeNode {
            members: side.members,
            center: side.center,
            weight: side.weight,
            ..TreeNode::new(k, side.g, side.q, d, leaf)
        }
    }
}

fn depth_of(k: u64) -> u32 {
    63 - k.leading_zeros()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PartitionTree {
    pub nodes: BTreeMap<u64, TreeNode>,
}

impl Serialize for PartitionTree {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Nodes<'a> {
            nodes: Vec<&'a TreeNode>,
        }
        Nodes {
            nodes: self.nodes.values().collect(),
        }
        .serialize(s)
    }
}

impl PartitionTree {
    pub fn root(&self) -> Option<&TreeNode> {
        self.nodes.get(&1)
    }

    pub fn get(&self, k: u64) -> Option<&TreeNode> {
        self.nodes.get(&k)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn children(&self, k: u64) -> Option<(&TreeNode, &TreeNode)> {
        Some((self.nodes.get(&(2 * k))?, self.nodes.get(&(2 * k + 1))?))
    }

    /// Largest node depth, root at 0.
    pub fn height(&self) -> u32 {
        self.nodes.keys().map(|&k| depth_of(k)).max().unwrap_or(0)
    }

    /// Checks heap shape: a root, parents present and internal, internal
    /// nodes with both children, leaves without children.
    pub fn validate(&self) -> Result<()> {
        if !self.nodes.contains_key(&1) {
            return Err(Error::InvalidTree("root node 1 missing".into()));
        }
        for (&k, node) in &self.nodes {
            if k > 1 {
                match self.nodes.get(&(k / 2)) {
                    None => return Err(Error::InvalidTree(format!("node {k} has no parent {}", k / 2))),
                    Some(p) if p.leaf => {
                        return Err(Error::InvalidTree(format!("node {k} sits under leaf {}", k / 2)))
                    }
                    _ => {}
                }
            }
            let both = k
                .checked_mul(2)
                .is_some_and(|c| self.nodes.contains_key(&c) && self.nodes.contains_key(&(c + 1)));
            if !node.leaf && !both {
                return Err(Error::InvalidTree(format!("internal node {k} lacks a child")));
            }
        }
        Ok(())
    }
}

/// Grows the split tree of an instance. A node becomes a leaf when it holds
/// one user, sits at `max_depth`, fails a threshold, or its best split puts
/// everyone on one side.
pub fn grow_tree(
    instance: &Instance,
    model: &CostModel,
    config: &SolverConfig,
    thresholds: &Thresholds,
) -> Result<PartitionTree> {
    let all: Vec<&User> = instance.users().iter().collect();
    let root = evaluate_side(&all, model, config.epsilon)?;
    let mut nodes = Vec::new();
    grow(1, root, instance.users().to_vec(), model, config, thresholds, &mut nodes)?;
    let tree = PartitionTree {
        nodes: nodes.into_iter().map(|n| (n.k, n)).collect(),
    };
    tree.validate()?;
    Ok(tree)
}

fn grow(
    k: u64,
    side: Side,
    users: Vec<User>,
    model: &CostModel,
    config: &SolverConfig,
    thresholds: &Thresholds,
    out: &mut Vec<TreeNode>,
) -> Result<()> {
    let depth = depth_of(k) as usize;
    let stop = users.len() < 2
        || depth >= thresholds.max_depth
        || thresholds.blocks(users.len(), side.weight);
    let split = if stop {
        None
    } else {
        Some(bipartition_cluster(&users, model, config)?).filter(|s| !s.is_one_sided())
    };
    let Some(split) = split else {
        out.push(TreeNode::from_side(k, side, true));
        return Ok(());
    };
    out.push(TreeNode::from_side(k, side, false));
    let (left, right): (Vec<User>, Vec<User>) = {
        let ids: std::collections::HashSet<u64> = split.s1.members.iter().copied().collect();
        users.into_iter().partition(|u| ids.contains(&u.id))
    };
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let (ra, rb) = rayon::join(
        || grow(2 * k, split.s1, left, model, config, thresholds, &mut a),
        || grow(2 * k + 1, split.s2, right, model, config, thresholds, &mut b),
    );
    ra?;
    rb?;
    out.append(&mut a);
    out.append(&mut b);
    Ok(())
}

/// Sets `F` on every node, children before parents.
pub fn bottom_up_labels(tree: &mut PartitionTree) -> Result<()> {
    let keys: Vec<u64> = tree.nodes.keys().rev().copied().collect();
    for k in keys {
        let node = &tree.nodes[&k];
        let f = if node.leaf {
            node.label
        } else {
            let child = |c: u64| {
                tree.nodes
                    .get(&c)
                    .and_then(|n| n.final_label)
                    .ok_or_else(|| Error::InvalidTree(format!("node {k}: child {c} has no final label")))
            };
            let split = child(2 * k)? + child(2 * k + 1)?;
            if node.label <= split {
                node.label
            } else {
                split
            }
        };
        tree.nodes.get_mut(&k).expect("key from map").final_label = Some(f);
    }
    Ok(())
}

/// Flags every node whose label equals its final label.
pub fn mark_flags(tree: &mut PartitionTree) -> Result<()> {
    for node in tree.nodes.values_mut() {
        let f = node
            .final_label
            .ok_or_else(|| Error::InvalidTree(format!("node {} has no final label", node.k)))?;
        node.flag = Some(node.label == f);
    }
    Ok(())
}

/// Flagged nodes with no flagged ancestor, ascending.
pub fn optimal_frontier(tree: &PartitionTree) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    let mut stack = vec![1u64];
    while let Some(k) = stack.pop() {
        let node = tree
            .nodes
            .get(&k)
            .ok_or_else(|| Error::InvalidTree(format!("node {k} missing")))?;
        match node.flag {
            Some(true) => out.push(k),
            Some(false) if !node.leaf => {
                stack.push(2 * k + 1);
                stack.push(2 * k);
            }
            Some(false) => return Err(Error::InvalidTree(format!("leaf {k} is not flagged"))),
            None => return Err(Error::InvalidTree(format!("node {k} has no flag"))),
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Runs both DP stages in place and returns the optimal frontier.
pub fn run_dp(tree: &mut PartitionTree) -> Result<Vec<u64>> {
    bottom_up_labels(tree)?;
    mark_flags(tree)?;
    optimal_frontier(tree)
}

/// Internal nodes breaking `q_k >= q_child` or `t_k >= t_2k + t_2k+1`,
/// allowing a relative slack of `rel_tol`.
pub fn monotonicity_violations(tree: &PartitionTree, rel_tol: f64) -> Vec<String> {
    let mut bad = Vec::new();
    let le = |a: f64, b: f64| a <= b + rel_tol * a.abs().max(b.abs()).max(1.0);
    for (&k, node) in &tree.nodes {
        let Some((l, r)) = tree.children(k) else { continue };
        if !le(l.q, node.q) || !le(r.q, node.q) {
            bad.push(format!("node {k}: q {} below child q {} / {}", node.q, l.q, r.q));
        }
        if !le(l.t + r.t, node.t) {
            bad.push(format!("node {k}: t {} below children sum {}", node.t, l.t + r.t));
        }
    }
    bad
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub k: u64,
    pub members: Vec<u64>,
    pub center: Option<Point>,
    pub weight: f64,
    pub t: f64,
    pub q: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub version: u32,
    pub total_cost: f64,
    pub frontier: Vec<u64>,
    pub clusters: Vec<Cluster>,
    pub tree: PartitionTree,
}

impl Solution {
    pub fn from_tree(mut tree: PartitionTree) -> Result<Self> {
        let frontier = run_dp(&mut tree)?;
        let total_cost = tree
            .root()
            .and_then(|r| r.final_label)
            .ok_or_else(|| Error::InvalidTree("root has no final label".into()))?;
        let clusters = frontier
            .iter()
            .map(|k| {
                let n = &tree.nodes[k];
                Cluster {
                    k: n.k,
                    members: n.members.clone(),
                    center: n.center,
                    weight: n.weight,
                    t: n.t,
                    q: n.q,
                    d: n.d,
                }
            })
            .collect();
        Ok(Solution {
            version: SOLUTION_VERSION,
            total_cost,
            frontier,
            clusters,
            tree,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Grow, label, flag and extract the frontier.
pub fn solve_topology(
    instance: &Instance,
    model: &CostModel,
    config: &SolverConfig,
    thresholds: &Thresholds,
) -> Result<Solution> {
    model.validate()?;
    config.validate()?;
    thresholds.validate()?;
    Solution::from_tree(grow_tree(instance, model, config, thresholds)?)
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostRow {
    k: u64,
    t: f64,
    q: f64,
    #[serde(default)]
    leaf: bool,
    /// Printed hardware cost when it is not `t + q`.
    #[serde(default)]
    d: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostTable {
    nodes: Vec<CostRow>,
}

/// Builds a geometry-free tree from `{"nodes": [{"k", "t", "q", "leaf"}]}`.
/// A row may carry `d` to override `t + q`.
pub fn load_cost_tree(json: &str) -> Result<PartitionTree> {
    let table: CostTable = serde_json::from_str(json)?;
    let mut nodes = BTreeMap::new();
    for row in table.nodes {
        if row.k == 0 {
            return Err(Error::InvalidTree("node index 0".into()));
        }
        if ![row.t, row.q].iter().chain(row.d.as_ref()).all(|v| v.is_finite()) {
            return Err(Error::InvalidTree(format!("node {}: non-finite cost", row.k)));
        }
        let d = row.d.unwrap_or(row.t + row.q);
        if nodes.insert(row.k, TreeNode::new(row.k, row.t, row.q, d, row.leaf)).is_some() {
            return Err(Error::InvalidTree(format!("node {} listed twice", row.k)));
        }
    }
    let tree = PartitionTree { nodes };
    tree.validate()?;
    Ok(tree)
}
