//! Single-agent planners used under the constraint tree.
//!
//! * [`astar`]: space-time A* honoring constraints, shortest path.
//! * [`xg_astar`]: explanation-guided search minimizing the index of the
//!   other agents' paths combined with the new path.
//! * [`wxg_astar`]: the same search space ordered by a weighted mix of index
//!   and path length.
//! * [`sr_astar`]: A* that treats each segment of the other agents' plan as
//!   a timed obstacle, so the new path never adds a breakpoint.

mod astar;
mod cellset;
mod others;
mod sr;
mod xg;

pub use astar::astar;
pub use sr::{build_timed_obstacles, sr_astar, sr_relaxed_astar, TimedObstacleSet};
pub use xg::{combined_index_prefix, wxg_astar, xg_astar};

pub(crate) use others::OthersIndex;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::{Constraint, ConstraintKind, Path};
use crate::world::{AgentTask, Cell, DistanceField, GridWorld};

#[derive(Debug, Error, PartialEq)]
pub enum LowLevelError {
    #[error("weight must lie strictly between 0 and 1, got {0}")]
    InvalidWeight(f64),
    #[error("unknown low-level planner {0:?} (expected astar, xg, wxg or sr)")]
    UnknownPlanner(String),
}

/// Result of one low-level call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanOutcome {
    Found(Path),
    /// No admissible path within the length bound.
    NotFound,
    /// Deadline or expansion limit hit first.
    Interrupted,
}

impl PlanOutcome {
    pub fn path(self) -> Option<Path> {
        match self {
            PlanOutcome::Found(p) => Some(p),
            _ => None,
        }
    }
}

/// Shared stopping rule for searches.
#[derive(Debug, Clone, Copy, Default)]
pub struct SearchLimits {
    pub deadline: Option<Instant>,
    pub max_expansions: Option<u64>,
}

impl SearchLimits {
    pub fn none() -> Self {
        Self::default()
    }
}

#[derive(Debug)]
pub(crate) struct Counter {
    limits: SearchLimits,
    pub(crate) expanded: u64,
}

impl Counter {
    pub(crate) fn new(limits: SearchLimits) -> Self {
        Self {
            limits,
            expanded: 0,
        }
    }

    /// Counts one expansion; true when the search must stop.
    #[inline]
    pub(crate) fn tick(&mut self) -> bool {
        self.expanded += 1;
        if let Some(m) = self.limits.max_expansions {
            if self.expanded > m {
                return true;
            }
        }
        if self.expanded.is_multiple_of(256) {
            if let Some(d) = self.limits.deadline {
                return Instant::now() >= d;
            }
        }
        false
    }
}

/// Everything a low-level planner is asked.
#[derive(Debug, Clone, Copy)]
pub struct LowLevelQuery<'a> {
    pub world: &'a GridWorld,
    pub task: AgentTask,
    /// Distances to `task.goal`.
    pub heuristic: &'a DistanceField,
    /// Constraints; entries for other agents are ignored.
    pub constraints: &'a [Constraint],
    /// Paths of the other agents, in id order. Possibly partial.
    pub others: &'a [Path],
    /// Maximum number of vertices of the returned path.
    pub length_bound: usize,
    /// Index of `others` for explanation-guided search; computed when `None`.
    pub index_budget: Option<usize>,
    pub limits: SearchLimits,
}

/// Knobs for the explanation-guided planners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct XgOptions {
    /// Skip moves that revisit a cell within the current segment, except
    /// waiting on the segment's first cell. Applied only to segments that
    /// start after the agent's last constraint.
    pub eliminate_cycles: bool,
    /// Once a popped node's index exceeds the index of the other agents,
    /// finish that node with plain shortest-path search.
    pub fallback_after_budget: bool,
    /// Recompute every expanded node's index from scratch and panic on a
    /// mismatch. Slow; meant for tests.
    pub check_consistency: bool,
}

impl Default for XgOptions {
    fn default() -> Self {
        Self {
            eliminate_cycles: true,
            fallback_after_budget: true,
            check_consistency: false,
        }
    }
}

/// Weight of the index term in the weighted planner, in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Weight(f64);

impl Weight {
    pub fn new(w: f64) -> Result<Self, LowLevelError> {
        if w > 0.0 && w < 1.0 {
            Ok(Self(w))
        } else {
            Err(LowLevelError::InvalidWeight(w))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Weight {
    type Error = LowLevelError;
    fn try_from(w: f64) -> Result<Self, Self::Error> {
        Self::new(w)
    }
}

impl From<Weight> for f64 {
    fn from(w: Weight) -> f64 {
        w.0
    }
}

/// Planner selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LowLevel {
    AStar,
    Xg(XgOptions),
    Wxg(Weight, XgOptions),
    Sr,
}

impl LowLevel {
    /// Whether a failed constraint-tree search proves unsolvability.
    pub fn is_complete(&self) -> bool {
        !matches!(self, LowLevel::Sr)
    }

    pub fn name(&self) -> &'static str {
        match self {
            LowLevel::AStar => "astar",
            LowLevel::Xg(_) => "xg",
            LowLevel::Wxg(..) => "wxg",
            LowLevel::Sr => "sr",
        }
    }

    pub fn plan(&self, q: &LowLevelQuery<'_>) -> PlanOutcome {
        match *self {
            LowLevel::AStar => astar(q),
            LowLevel::Xg(opts) => xg_astar(q, opts),
            LowLevel::Wxg(w, opts) => wxg_astar(q, w, opts),
            LowLevel::Sr => sr_astar(q),
        }
    }
}

impl fmt::Display for LowLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LowLevel::Wxg(w, _) => write!(f, "wxg({})", w.get()),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for LowLevel {
    type Err = LowLevelError;

    /// `astar`, `xg`, `sr`, `wxg` (weight 0.5) or `wxg:<w>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "astar" | "a*" => Ok(LowLevel::AStar),
            "xg" => Ok(LowLevel::Xg(XgOptions::default())),
            "sr" => Ok(LowLevel::Sr),
            "wxg" => Ok(LowLevel::Wxg(Weight(0.5), XgOptions::default())),
            _ => {
                if let Some(w) = s.strip_prefix("wxg:") {
                    let w: f64 = w
                        .parse()
                        .map_err(|_| LowLevelError::UnknownPlanner(s.to_string()))?;
                    Ok(LowLevel::Wxg(Weight::new(w)?, XgOptions::default()))
                } else {
                    Err(LowLevelError::UnknownPlanner(s.to_string()))
                }
            }
        }
    }
}

/// Per-agent constraint lookup.
#[derive(Debug, Default)]
pub(crate) struct ConstraintTable {
    vertex: HashSet<(Cell, usize)>,
    edge: HashSet<(Cell, Cell, usize)>,
    max_time: Option<usize>,
}

impl ConstraintTable {
    pub(crate) fn new(agent_id: usize, constraints: &[Constraint]) -> Self {
        let mut table = Self::default();
        for c in constraints.iter().filter(|c| c.agent_id == agent_id) {
            match c.kind {
                ConstraintKind::Vertex { cell, time } => {
                    table.vertex.insert((cell, time));
                }
                ConstraintKind::Edge { from, to, time } => {
                    table.edge.insert((from, to, time));
                }
            }
            table.max_time = Some(table.max_time.map_or(c.time(), |m| m.max(c.time())));
        }
        table
    }

    #[inline]
    pub(crate) fn allows(&self, from: Cell, to: Cell, t_to: usize) -> bool {
        if self.max_time.is_none_or(|m| t_to > m) {
            return true;
        }
        !self.vertex.contains(&(to, t_to)) && !self.edge.contains(&(from, to, t_to))
    }

    #[inline]
    pub(crate) fn allows_at(&self, cell: Cell, t: usize) -> bool {
        self.max_time.is_none_or(|m| t > m) || !self.vertex.contains(&(cell, t))
    }

    pub(crate) fn max_time(&self) -> Option<usize> {
        self.max_time
    }
}

/// Default length bound: `(r + 1) · |V|`, or `(n + 1) · |V|` for an
/// unbounded index.
pub fn default_length_bound(world: &GridWorld, index_bound: Option<usize>, agents: usize) -> usize {
    let v = world.passable_count().max(1);
    let factor = index_bound.unwrap_or(agents).saturating_add(1);
    factor.saturating_mul(v)
}
