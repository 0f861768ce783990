//! Constraint-tree searches: plain CBS and the index-bounded variant.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;
use std::time::{Duration, Instant};

use log::{debug, trace};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lowlevel::{
    astar, default_length_bound, sr_relaxed_astar, LowLevel, LowLevelQuery, PlanOutcome,
    SearchLimits,
};
use crate::plan::{
    count_collisions, first_collision, sum_of_costs, Conflict, Constraint, Path, Plan,
};
use crate::segmentation::{
    boundary_witnesses, greedy_decompose, index_with_collision_breaks, Decomposition, SegWitness,
};
use crate::world::{DistanceField, Instance};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("index bound must be at least 1")]
    ZeroBound,
    #[error("unknown segmentation branching mode {0:?}")]
    UnknownSegBranch(String),
    #[error("unknown fallback {0:?} (expected none, astar or relaxed)")]
    UnknownSrFallback(String),
}

/// Stopping rule for a whole solve call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub timeout: Option<Duration>,
    /// Maximum number of constraint-tree nodes expanded. Deterministic
    /// replacement for the wall clock.
    pub max_nodes: Option<u64>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn timeout(d: Duration) -> Self {
        Self {
            timeout: Some(d),
            max_nodes: None,
        }
    }

    pub fn nodes(n: u64) -> Self {
        Self {
            timeout: None,
            max_nodes: Some(n),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes_expanded: u64,
    pub nodes_generated: u64,
    pub low_level_calls: u64,
    #[serde(with = "secs")]
    pub wall_time: Duration,
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub plan: Plan,
    pub decomposition: Decomposition,
    /// Constraints of the tree node the plan came from, oldest first.
    pub constraints: Vec<Constraint>,
    pub stats: SearchStats,
}

impl Solution {
    pub fn index(&self) -> usize {
        self.decomposition.index()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Solved(Solution),
    /// The tree was exhausted with a complete low-level planner.
    Unsolvable(SearchStats),
    /// The tree was exhausted with an incomplete low-level planner.
    NotFound(SearchStats),
    Timeout(SearchStats),
}

impl Outcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            Outcome::Solved(s) => Some(s),
            _ => None,
        }
    }

    pub fn into_solution(self) -> Option<Solution> {
        match self {
            Outcome::Solved(s) => Some(s),
            _ => None,
        }
    }

    pub fn stats(&self) -> &SearchStats {
        match self {
            Outcome::Solved(s) => &s.stats,
            Outcome::Unsolvable(s) | Outcome::NotFound(s) | Outcome::Timeout(s) => s,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Solved(_) => "solved",
            Outcome::Unsolvable(_) => "unsolvable",
            Outcome::NotFound(_) => "not found",
            Outcome::Timeout(_) => "timeout",
        }
    }
}

/// Which segmentation boundaries of an over-bound plan are branched on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegBranch {
    #[default]
    AllBoundaries,
    FirstBoundary,
}

impl FromStr for SegBranch {
    type Err = SolveError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all-boundaries" => Ok(SegBranch::AllBoundaries),
            "first-boundary" => Ok(SegBranch::FirstBoundary),
            _ => Err(SolveError::UnknownSegBranch(s.to_string())),
        }
    }
}

impl fmt::Display for SegBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SegBranch::AllBoundaries => "all-boundaries",
            SegBranch::FirstBoundary => "first-boundary",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XgCbsOptions {
    pub low: LowLevel,
    /// Index bound `r`; `None` is unbounded.
    pub bound: Option<usize>,
    pub budget: Budget,
    pub seg_branch: SegBranch,
    /// Path length bound `B`; derived from the index bound when `None`.
    pub length_bound: Option<usize>,
    /// What the segment-respecting planner does when it finds nothing.
    pub sr_fallback: SrFallback,
}

impl XgCbsOptions {
    pub fn new(low: LowLevel, bound: Option<usize>) -> Self {
        Self {
            low,
            bound,
            budget: Budget::unlimited(),
            seg_branch: SegBranch::AllBoundaries,
            length_bound: None,
            sr_fallback: SrFallback::Relaxed,
        }
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }
}

/// Replanning used when the segment-respecting planner finds no path.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SrFallback {
    /// Give up on the node (the root fails the whole search).
    None,
    /// Plain shortest path ignoring the other agents.
    AStar,
    /// Fewest entries into the other agents' segments, then shortest.
    #[default]
    Relaxed,
}

impl FromStr for SrFallback {
    type Err = SolveError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(SrFallback::None),
            "astar" => Ok(SrFallback::AStar),
            "relaxed" => Ok(SrFallback::Relaxed),
            _ => Err(SolveError::UnknownSrFallback(s.to_string())),
        }
    }
}

/// Result of inspecting a plan at a constraint-tree node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConflictCheck {
    Valid,
    Collision(Conflict),
    Segmentation(Vec<SegWitness>),
}

/// Collisions first, then segmentation boundaries when the index exceeds `r`.
pub fn conflict_check(plan: &Plan, r: Option<usize>) -> ConflictCheck {
    if let Some(c) = first_collision(plan.paths()) {
        return ConflictCheck::Collision(c);
    }
    let d = greedy_decompose(plan.paths()).expect("collision-free plan");
    match r {
        Some(r) if d.index() > r => ConflictCheck::Segmentation(
            boundary_witnesses(plan.paths(), &d).expect("greedy breakpoints have witnesses"),
        ),
        _ => ConflictCheck::Valid,
    }
}

/// Conflict-based search minimizing sum of costs. The returned plan's
/// decomposition is computed afterwards.
pub fn solve_cbs(inst: &Instance, budget: Budget) -> Outcome {
    let b = default_length_bound(inst.world(), None, inst.agent_count());
    Tree::new(
        inst,
        Mode::Cbs,
        LowLevel::AStar,
        budget,
        b,
        SrFallback::None,
    )
    .run()
}

/// Same as [`solve_cbs`] with an explicit path length bound.
pub fn solve_cbs_with_length_bound(
    inst: &Instance,
    budget: Budget,
    length_bound: usize,
) -> Outcome {
    Tree::new(
        inst,
        Mode::Cbs,
        LowLevel::AStar,
        budget,
        length_bound,
        SrFallback::None,
    )
    .run()
}

/// Constraint-tree search for a plan of index at most `opts.bound`.
pub fn solve_xg_cbs(inst: &Instance, opts: &XgCbsOptions) -> Outcome {
    if opts.bound == Some(0) {
        return Outcome::Unsolvable(SearchStats::default());
    }
    let b = opts
        .length_bound
        .unwrap_or_else(|| default_length_bound(inst.world(), opts.bound, inst.agent_count()));
    let mode = Mode::Xg {
        bound: opts.bound,
        seg_branch: opts.seg_branch,
    };
    Tree::new(inst, mode, opts.low, opts.budget, b, opts.sr_fallback).run()
}

#[derive(Debug, Clone, Copy)]
enum Mode {
    Cbs,
    Xg {
        bound: Option<usize>,
        seg_branch: SegBranch,
    },
}

/// Constraints of a node as a chain back to the root.
struct ConstraintChain {
    constraint: Constraint,
    parent: Option<Rc<ConstraintChain>>,
}

fn chain_iter(mut cur: &Option<Rc<ConstraintChain>>) -> impl Iterator<Item = &Constraint> {
    std::iter::from_fn(move || {
        let node = cur.as_ref()?;
        cur = &node.parent;
        Some(&node.constraint)
    })
}

struct CtNode {
    constraints: Option<Rc<ConstraintChain>>,
    paths: Vec<Rc<Path>>,
}

type CostKey = (usize, usize, usize, u64);

struct Tree<'a> {
    inst: &'a Instance,
    mode: Mode,
    low: LowLevel,
    budget: Budget,
    length_bound: usize,
    sr_fallback: SrFallback,
    heuristics: Vec<DistanceField>,
    started: Instant,
    deadline: Option<Instant>,
    stats: SearchStats,
    nodes: Vec<Option<CtNode>>,
    open: BinaryHeap<Reverse<(CostKey, usize)>>,
    seq: u64,
}

enum Replan {
    Found(Path),
    None,
    Interrupted,
}

impl<'a> Tree<'a> {
    fn new(
        inst: &'a Instance,
        mode: Mode,
        low: LowLevel,
        budget: Budget,
        length_bound: usize,
        sr_fallback: SrFallback,
    ) -> Self {
        let started = Instant::now();
        let heuristics = inst
            .tasks()
            .iter()
            .map(|t| {
                inst.world()
                    .goal_distance_field(t.goal)
                    .expect("instance goals are validated")
            })
            .collect();
        Self {
            inst,
            mode,
            low,
            budget,
            length_bound,
            sr_fallback,
            heuristics,
            started,
            deadline: budget.timeout.map(|d| started + d),
            stats: SearchStats::default(),
            nodes: Vec::new(),
            open: BinaryHeap::new(),
            seq: 0,
        }
    }

    fn finish_stats(&mut self) -> SearchStats {
        self.stats.wall_time = self.started.elapsed();
        self.stats
    }

    fn exhausted(&mut self) -> Outcome {
        let s = self.finish_stats();
        let complete = match self.mode {
            Mode::Cbs => true,
            Mode::Xg { .. } => self.low.is_complete(),
        };
        if complete {
            Outcome::Unsolvable(s)
        } else {
            Outcome::NotFound(s)
        }
    }

    fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn plan_agent(&mut self, agent: usize, constraints: &[Constraint], others: &[Path]) -> Replan {
        let task = self.inst.tasks()[agent];
        let q = LowLevelQuery {
            world: self.inst.world(),
            task,
            heuristic: &self.heuristics[agent],
            constraints,
            others,
            length_bound: self.length_bound,
            index_budget: None,
            limits: SearchLimits {
                deadline: self.deadline,
                max_expansions: None,
            },
        };
        self.stats.low_level_calls += 1;
        let mut out = self.low.plan(&q);
        if out == PlanOutcome::NotFound && self.low == LowLevel::Sr {
            match self.sr_fallback {
                SrFallback::None => {}
                SrFallback::AStar => {
                    self.stats.low_level_calls += 1;
                    out = astar(&q);
                }
                SrFallback::Relaxed => {
                    self.stats.low_level_calls += 1;
                    out = sr_relaxed_astar(&q);
                }
            }
        }
        match out {
            PlanOutcome::Found(p) => Replan::Found(p),
            PlanOutcome::NotFound => Replan::None,
            PlanOutcome::Interrupted => Replan::Interrupted,
        }
    }

    /// Primary and secondary cost, then the number of colliding pairs.
    fn cost(&self, paths: &[Rc<Path>]) -> (usize, usize, usize) {
        let collisions = count_collisions(paths);
        match self.mode {
            Mode::Cbs => (sum_of_costs(paths), 0, collisions),
            Mode::Xg { .. } => (
                index_with_collision_breaks(paths),
                sum_of_costs(paths),
                collisions,
            ),
        }
    }

    fn push(&mut self, node: CtNode) {
        let (a, b, c) = self.cost(&node.paths);
        self.seq += 1;
        self.stats.nodes_generated += 1;
        self.nodes.push(Some(node));
        self.open
            .push(Reverse(((a, b, c, self.seq), self.nodes.len() - 1)));
    }

    fn run(mut self) -> Outcome {
        // Root: agents planned in id order, each seeing the ones before it.
        let mut root: Vec<Path> = Vec::with_capacity(self.inst.agent_count());
        for agent in 0..self.inst.agent_count() {
            let others = match self.mode {
                Mode::Cbs => Vec::new(),
                Mode::Xg { .. } => root.clone(),
            };
            match self.plan_agent(agent, &[], &others) {
                Replan::Found(p) => root.push(p),
                Replan::None => {
                    debug!("root planning failed for agent {agent}");
                    return self.exhausted();
                }
                Replan::Interrupted => return Outcome::Timeout(self.finish_stats()),
            }
        }
        self.push(CtNode {
            constraints: None,
            paths: root.into_iter().map(Rc::new).collect(),
        });

        while let Some(Reverse((key, id))) = self.open.pop() {
            if self.timed_out() {
                return Outcome::Timeout(self.finish_stats());
            }
            if self
                .budget
                .max_nodes
                .is_some_and(|m| self.stats.nodes_expanded >= m)
            {
                return Outcome::Timeout(self.finish_stats());
            }
            self.stats.nodes_expanded += 1;
            let node = self.nodes[id].take().expect("node popped once");
            trace!("expand node {id} key {key:?}");

            let bound = match self.mode {
                Mode::Cbs => None,
                Mode::Xg { bound, .. } => bound,
            };
            let branches: Vec<[Constraint; 2]> = match first_collision(&node.paths) {
                Some(c) => vec![c.split()],
                None => {
                    let d = greedy_decompose(&node.paths).expect("collision-free");
                    if bound.is_none_or(|r| d.index() <= r) {
                        let paths = node.paths.iter().map(|p| Path::clone(p)).collect();
                        let plan = Plan::new(paths).expect("paths in id order");
                        debug!(
                            "solved: index {} cost {} after {} expansions",
                            d.index(),
                            plan.sum_of_costs(),
                            self.stats.nodes_expanded
                        );
                        let mut constraints: Vec<Constraint> =
                            chain_iter(&node.constraints).copied().collect();
                        constraints.reverse();
                        return Outcome::Solved(Solution {
                            plan,
                            decomposition: d,
                            constraints,
                            stats: self.finish_stats(),
                        });
                    }
                    let witnesses = boundary_witnesses(&node.paths, &d).expect("greedy boundaries");
                    let take = match self.mode {
                        Mode::Xg {
                            seg_branch: SegBranch::FirstBoundary,
                            ..
                        } => 1,
                        _ => witnesses.len(),
                    };
                    witnesses
                        .iter()
                        .take(take)
                        .map(|w| {
                            [
                                Constraint::vertex(w.agent_i, w.cell, w.time_i),
                                Constraint::vertex(w.agent_j, w.cell, w.time_j),
                            ]
                        })
                        .collect()
                }
            };

            for pair in branches {
                for c in pair {
                    if chain_iter(&node.constraints).any(|x| *x == c) {
                        continue;
                    }
                    let agent = c.agent_id;
                    let mut constraints: Vec<Constraint> = chain_iter(&node.constraints)
                        .filter(|x| x.agent_id == agent)
                        .copied()
                        .collect();
                    constraints.push(c);
                    let pos = node
                        .paths
                        .iter()
                        .position(|p| p.agent_id == agent)
                        .expect("constrained agent has a path");
                    let others: Vec<Path> = match self.mode {
                        Mode::Cbs => Vec::new(),
                        Mode::Xg { .. } => node
                            .paths
                            .iter()
                            .filter(|p| p.agent_id != agent)
                            .map(|p| Path::clone(p))
                            .collect(),
                    };
                    match self.plan_agent(agent, &constraints, &others) {
                        Replan::Found(p) => {
                            let mut paths = node.paths.clone();
                            paths[pos] = Rc::new(p);
                            let chain = Some(Rc::new(ConstraintChain {
                                constraint: c,
                                parent: node.constraints.clone(),
                            }));
                            self.push(CtNode {
                                constraints: chain,
                                paths,
                            });
                        }
                        Replan::None => {}
                        Replan::Interrupted => return Outcome::Timeout(self.finish_stats()),
                    }
                }
            }
        }
        self.exhausted()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::parse_fixture;

    #[test]
    fn disjoint_agents_solved_at_root() {
        let inst = parse_fixture("a..A\n....\nb..B\n").unwrap();
        let out = solve_cbs(&inst, Budget::unlimited());
        let s = out.solution().unwrap();
        assert_eq!(s.stats.nodes_expanded, 1);
        assert_eq!(s.plan.sum_of_costs(), 6);
    }

    #[test]
    fn zero_bound_is_unsolvable() {
        let inst = parse_fixture("a.A\n").unwrap();
        let out = solve_xg_cbs(&inst, &XgCbsOptions::new(LowLevel::AStar, Some(0)));
        assert!(matches!(out, Outcome::Unsolvable(_)));
    }

    #[test]
    fn seg_branch_parsing() {
        assert_eq!(
            "first-boundary".parse::<SegBranch>().unwrap(),
            SegBranch::FirstBoundary
        );
        assert!("some".parse::<SegBranch>().is_err());
    }
}
