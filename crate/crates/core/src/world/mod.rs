//! Grid worlds, agent tasks and problem instances.
//!
//! Coordinates are `(x, y)` with `x` the column and `y` the row, the same
//! column order used by MovingAI scenario files.

mod fixture;
mod movingai;

pub use fixture::{parse_fixture, render_fixture};
pub use movingai::{parse_map, parse_scenario, write_map};

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A grid cell, `x` = column, `y` = row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(u32, u32)", into = "(u32, u32)")]
pub struct Cell {
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl From<(u32, u32)> for Cell {
    fn from((x, y): (u32, u32)) -> Self {
        Self { x, y }
    }
}

impl From<Cell> for (u32, u32) {
    fn from(c: Cell) -> Self {
        (c.x, c.y)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WorldError {
    #[error("malformed map header: {0}")]
    MalformedHeader(String),
    #[error("map body does not match declared dimensions: {0}")]
    DimensionMismatch(String),
    #[error("unknown map character {ch:?} at {cell}")]
    UnknownCell { ch: char, cell: Cell },
    #[error("grid dimensions must be positive")]
    EmptyGrid,
    #[error("cell {0} is outside the grid")]
    OutOfBounds(Cell),
    #[error("cell {0} is blocked")]
    Blocked(Cell),
    #[error("malformed scenario row {line}: {reason}")]
    MalformedScenario { line: usize, reason: String },
    #[error("requested {requested} agents but the scenario has only {available} rows")]
    NotEnoughAgents { requested: usize, available: usize },
    #[error("agent {agent}: {reason}")]
    InvalidTask { agent: usize, reason: String },
    #[error("malformed fixture: {0}")]
    MalformedFixture(String),
}

/// 4-connected grid graph; passable cells are vertices, grid adjacency plus
/// optional self-loops are edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridWorld {
    width: u32,
    height: u32,
    passable: Vec<bool>,
    allow_wait: bool,
}

/// Sentinel distance for cells that cannot reach the goal.
pub const UNREACHABLE: u32 = u32::MAX;

impl GridWorld {
    /// Builds a world from its blocked cells. Waiting is enabled.
    pub fn new(
        width: u32,
        height: u32,
        blocked: impl IntoIterator<Item = Cell>,
    ) -> Result<Self, WorldError> {
        if width == 0 || height == 0 {
            return Err(WorldError::EmptyGrid);
        }
        let mut passable = vec![true; width as usize * height as usize];
        for c in blocked {
            if c.x >= width || c.y >= height {
                return Err(WorldError::OutOfBounds(c));
            }
            passable[(c.y * width + c.x) as usize] = false;
        }
        Ok(Self {
            width,
            height,
            passable,
            allow_wait: true,
        })
    }

    /// Obstacle-free `width`×`height` grid.
    pub fn open(width: u32, height: u32) -> Result<Self, WorldError> {
        Self::new(width, height, std::iter::empty())
    }

    pub fn with_wait(mut self, allow_wait: bool) -> Self {
        self.allow_wait = allow_wait;
        self
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn allow_wait(&self) -> bool {
        self.allow_wait
    }

    /// Total number of grid cells, passable or not.
    pub fn cell_count(&self) -> usize {
        self.passable.len()
    }

    pub fn passable_count(&self) -> usize {
        self.passable.iter().filter(|p| **p).count()
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    pub fn is_passable(&self, c: Cell) -> bool {
        self.in_bounds(c) && self.passable[self.index_of(c)]
    }

    /// Dense row-major index of an in-bounds cell.
    #[inline]
    pub fn index_of(&self, c: Cell) -> usize {
        (c.y * self.width + c.x) as usize
    }

    #[inline]
    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index as u32 % self.width, index as u32 / self.width)
    }

    /// Blocked cells in row-major order.
    pub fn blocked(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.passable.len())
            .filter(|&i| !self.passable[i])
            .map(|i| self.cell_at(i))
    }

    /// Passable cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.passable.len())
            .filter(|&i| self.passable[i])
            .map(|i| self.cell_at(i))
    }

    /// Successors of `v` in the fixed order wait, N, E, S, W
    /// (N is `y - 1`, E is `x + 1`).
    pub fn neighbors(&self, v: Cell) -> Result<Vec<Cell>, WorldError> {
        if !self.in_bounds(v) {
            return Err(WorldError::OutOfBounds(v));
        }
        if !self.is_passable(v) {
            return Err(WorldError::Blocked(v));
        }
        let mut out = Vec::with_capacity(5);
        self.for_each_successor(v, |c| out.push(c));
        Ok(out)
    }

    /// Unchecked variant of [`GridWorld::neighbors`] for hot loops; `v` must be passable.
    #[inline]
    pub(crate) fn for_each_successor(&self, v: Cell, mut f: impl FnMut(Cell)) {
        if self.allow_wait {
            f(v);
        }
        if v.y > 0 {
            let c = Cell::new(v.x, v.y - 1);
            if self.passable[self.index_of(c)] {
                f(c);
            }
        }
        if v.x + 1 < self.width {
            let c = Cell::new(v.x + 1, v.y);
            if self.passable[self.index_of(c)] {
                f(c);
            }
        }
        if v.y + 1 < self.height {
            let c = Cell::new(v.x, v.y + 1);
            if self.passable[self.index_of(c)] {
                f(c);
            }
        }
        if v.x > 0 {
            let c = Cell::new(v.x - 1, v.y);
            if self.passable[self.index_of(c)] {
                f(c);
            }
        }
    }

    /// True when `a -> b` is a legal single step (move or wait).
    pub fn is_step(&self, a: Cell, b: Cell) -> bool {
        if !self.is_passable(a) || !self.is_passable(b) {
            return false;
        }
        match a.manhattan(b) {
            0 => self.allow_wait,
            1 => true,
            _ => false,
        }
    }

    /// Breadth-first distance (moves only) from every passable cell to `goal`.
    pub fn goal_distance_field(&self, goal: Cell) -> Result<DistanceField, WorldError> {
        if !self.in_bounds(goal) {
            return Err(WorldError::OutOfBounds(goal));
        }
        if !self.is_passable(goal) {
            return Err(WorldError::Blocked(goal));
        }
        let mut dist = vec![UNREACHABLE; self.passable.len()];
        let mut queue = VecDeque::new();
        dist[self.index_of(goal)] = 0;
        queue.push_back(goal);
        while let Some(v) = queue.pop_front() {
            let d = dist[self.index_of(v)];
            self.for_each_successor(v, |c| {
                let ci = self.index_of(c);
                if dist[ci] == UNREACHABLE {
                    dist[ci] = d + 1;
                    queue.push_back(c);
                }
            });
        }
        Ok(DistanceField {
            width: self.width,
            dist,
        })
    }

    /// Cells reachable from `from`, in BFS order.
    pub fn component_of(&self, from: Cell) -> Vec<Cell> {
        if !self.is_passable(from) {
            return Vec::new();
        }
        let mut seen = vec![false; self.passable.len()];
        let mut out = vec![from];
        seen[self.index_of(from)] = true;
        let mut head = 0;
        while head < out.len() {
            let v = out[head];
            head += 1;
            self.for_each_successor(v, |c| {
                let ci = self.index_of(c);
                if !seen[ci] {
                    seen[ci] = true;
                    out.push(c);
                }
            });
        }
        out
    }
}

/// Exact shortest-path distances to one goal cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceField {
    width: u32,
    dist: Vec<u32>,
}

impl DistanceField {
    /// Distance from `c`, or [`UNREACHABLE`].
    #[inline]
    pub fn get(&self, c: Cell) -> u32 {
        self.dist
            .get((c.y * self.width + c.x) as usize)
            .copied()
            .unwrap_or(UNREACHABLE)
    }
}

/// One agent's start and goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentTask {
    pub agent_id: usize,
    pub start: Cell,
    pub goal: Cell,
}

/// A grid world plus an ordered list of agent tasks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    world: GridWorld,
    tasks: Vec<AgentTask>,
}

impl Instance {
    /// Validates ids (`0..n` in order), passability, and pairwise distinct
    /// starts and goals.
    pub fn new(world: GridWorld, tasks: Vec<AgentTask>) -> Result<Self, WorldError> {
        for (i, t) in tasks.iter().enumerate() {
            if t.agent_id != i {
                return Err(WorldError::InvalidTask {
                    agent: t.agent_id,
                    reason: format!("expected agent id {i}"),
                });
            }
            for (what, c) in [("start", t.start), ("goal", t.goal)] {
                if !world.in_bounds(c) {
                    return Err(WorldError::InvalidTask {
                        agent: i,
                        reason: format!("{what} {c} is outside the grid"),
                    });
                }
                if !world.is_passable(c) {
                    return Err(WorldError::InvalidTask {
                        agent: i,
                        reason: format!("{what} {c} is blocked"),
                    });
                }
            }
            for other in &tasks[..i] {
                if other.start == t.start {
                    return Err(WorldError::InvalidTask {
                        agent: i,
                        reason: format!("start {} shared with agent {}", t.start, other.agent_id),
                    });
                }
                if other.goal == t.goal {
                    return Err(WorldError::InvalidTask {
                        agent: i,
                        reason: format!("goal {} shared with agent {}", t.goal, other.agent_id),
                    });
                }
            }
        }
        Ok(Self { world, tasks })
    }

    /// Convenience constructor from `(start, goal)` pairs.
    pub fn from_pairs(
        world: GridWorld,
        pairs: impl IntoIterator<Item = (Cell, Cell)>,
    ) -> Result<Self, WorldError> {
        let tasks = pairs
            .into_iter()
            .enumerate()
            .map(|(agent_id, (start, goal))| AgentTask {
                agent_id,
                start,
                goal,
            })
            .collect();
        Self::new(world, tasks)
    }

    pub fn world(&self) -> &GridWorld {
        &self.world
    }

    pub fn tasks(&self) -> &[AgentTask] {
        &self.tasks
    }

    pub fn agent_count(&self) -> usize {
        self.tasks.len()
    }

    /// Same world, only the first `n` tasks.
    pub fn truncated(&self, n: usize) -> Instance {
        Instance {
            world: self.world.clone(),
            tasks: self.tasks[..n.min(self.tasks.len())].to_vec(),
        }
    }
}
