//! Paths, plans, constraints and collision checking.
//!
//! Timesteps are 0-based: `path.vertices[t]` is the agent's cell at time `t`.
//! An agent whose path has ended has disappeared; it collides with nothing
//! and blocks nothing afterwards.

use std::borrow::Borrow;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::segmentation::SegWitness;
use crate::world::{Cell, Instance};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    pub agent_id: usize,
    pub vertices: Vec<Cell>,
}

impl Path {
    pub fn new(agent_id: usize, vertices: Vec<Cell>) -> Self {
        Self { agent_id, vertices }
    }

    /// Cell at time `t`, `None` once the agent has disappeared.
    #[inline]
    pub fn at(&self, t: usize) -> Option<Cell> {
        self.vertices.get(t).copied()
    }

    /// Number of vertices.
    #[inline]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Moves and waits taken.
    pub fn cost(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn start(&self) -> Cell {
        self.vertices[0]
    }

    pub fn end(&self) -> Cell {
        *self.vertices.last().expect("non-empty path")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("agent ids must be strictly increasing (got {0} after {1})")]
    UnorderedAgents(usize, usize),
    #[error("agent {0} has an empty path")]
    EmptyPath(usize),
    #[error("plan dump line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("plan json: {0}")]
    Json(String),
}

/// One path per agent, stored in agent-id order.
///
/// A plan may describe only some agents (the paths of "the other agents"
/// handed to a low-level planner), but ids are always strictly increasing.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Plan {
    paths: Vec<Path>,
}

impl Plan {
    pub fn new(paths: Vec<Path>) -> Result<Self, PlanError> {
        for w in paths.windows(2) {
            if w[1].agent_id <= w[0].agent_id {
                return Err(PlanError::UnorderedAgents(w[1].agent_id, w[0].agent_id));
            }
        }
        if let Some(p) = paths.iter().find(|p| p.vertices.is_empty()) {
            return Err(PlanError::EmptyPath(p.agent_id));
        }
        Ok(Self { paths })
    }

    /// Builds a plan from bare vertex lists, numbering agents `0..n`.
    pub fn from_vertices(vertex_lists: Vec<Vec<Cell>>) -> Result<Self, PlanError> {
        Self::new(
            vertex_lists
                .into_iter()
                .enumerate()
                .map(|(i, v)| Path::new(i, v))
                .collect(),
        )
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn into_paths(self) -> Vec<Path> {
        self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn path_of(&self, agent_id: usize) -> Option<&Path> {
        self.paths
            .binary_search_by_key(&agent_id, |p| p.agent_id)
            .ok()
            .map(|i| &self.paths[i])
    }

    /// All paths except the one of `agent_id`.
    pub fn without(&self, agent_id: usize) -> Plan {
        Plan {
            paths: self
                .paths
                .iter()
                .filter(|p| p.agent_id != agent_id)
                .cloned()
                .collect(),
        }
    }

    /// Number of timesteps covered: the longest path's vertex count.
    pub fn horizon(&self) -> usize {
        horizon(&self.paths)
    }

    /// Last timestep at which any agent is present.
    pub fn makespan(&self) -> usize {
        self.horizon().saturating_sub(1)
    }

    pub fn sum_of_costs(&self) -> usize {
        sum_of_costs(&self.paths)
    }

    /// Every path prefixed to at most `len` vertices.
    pub fn truncated(&self, len: usize) -> Plan {
        Plan {
            paths: self
                .paths
                .iter()
                .filter(|_| len > 0)
                .map(|p| Path::new(p.agent_id, p.vertices[..len.min(p.len())].to_vec()))
                .collect(),
        }
    }

    /// Line format: `agent <id>: (x0,y0) (x1,y1) ...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.paths {
            out.push_str(&format!("agent {}:", p.agent_id));
            for c in &p.vertices {
                out.push_str(&format!(" {c}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, PlanError> {
        let mut paths = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: &str| PlanError::Parse {
                line: i + 1,
                reason: reason.to_string(),
            };
            let rest = line
                .strip_prefix("agent")
                .ok_or_else(|| err("expected `agent <id>:`"))?;
            let (id, cells) = rest.split_once(':').ok_or_else(|| err("missing `:`"))?;
            let agent_id: usize = id.trim().parse().map_err(|_| err("bad agent id"))?;
            let mut vertices = Vec::new();
            for tok in cells.split_whitespace() {
                let inner = tok
                    .strip_prefix('(')
                    .and_then(|t| t.strip_suffix(')'))
                    .ok_or_else(|| err("cells must look like (x,y)"))?;
                let (x, y) = inner
                    .split_once(',')
                    .ok_or_else(|| err("cells must look like (x,y)"))?;
                let x = x.trim().parse().map_err(|_| err("bad x coordinate"))?;
                let y = y.trim().parse().map_err(|_| err("bad y coordinate"))?;
                vertices.push(Cell::new(x, y));
            }
            if vertices.is_empty() {
                return Err(PlanError::EmptyPath(agent_id));
            }
            paths.push(Path::new(agent_id, vertices));
        }
        Plan::new(paths)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PlanDump::from(self)).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PlanError> {
        let dump: PlanDump =
            serde_json::from_str(text).map_err(|e| PlanError::Json(e.to_string()))?;
        Plan::new(
            dump.agents
                .into_iter()
                .map(|a| Path::new(a.id, a.path))
                .collect(),
        )
    }

    /// Accepts either dump format; JSON is detected by a leading `{`.
    pub fn parse_dump(text: &str) -> Result<Self, PlanError> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::from_text(text)
        }
    }

    /// True when every path runs from its task's start to its goal through
    /// legal steps.
    pub fn is_complete_for(&self, inst: &Instance) -> bool {
        self.paths.len() == inst.agent_count()
            && self.paths.iter().zip(inst.tasks()).all(|(p, t)| {
                p.agent_id == t.agent_id
                    && p.start() == t.start
                    && p.end() == t.goal
                    && p.vertices
                        .windows(2)
                        .all(|w| inst.world().is_step(w[0], w[1]))
            })
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Machine-readable plan dump: `{"agents": [{"id": 0, "path": [[x, y], ...]}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanDump {
    pub agents: Vec<AgentPathDump>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentPathDump {
    pub id: usize,
    pub path: Vec<Cell>,
}

impl From<&Plan> for PlanDump {
    fn from(plan: &Plan) -> Self {
        Self {
            agents: plan
                .paths
                .iter()
                .map(|p| AgentPathDump {
                    id: p.agent_id,
                    path: p.vertices.clone(),
                })
                .collect(),
        }
    }
}

fn path_by_id<P: Borrow<Path>>(paths: &[P], agent_id: usize) -> &Path {
    let i = paths
        .binary_search_by_key(&agent_id, |p| p.borrow().agent_id)
        .expect("agent present");
    paths[i].borrow()
}

pub(crate) fn horizon<P: Borrow<Path>>(paths: &[P]) -> usize {
    paths.iter().map(|p| p.borrow().len()).max().unwrap_or(0)
}

/// Total moves and waits, `Σ (len − 1)`.
pub fn sum_of_costs<P: Borrow<Path>>(paths: &[P]) -> usize {
    paths.iter().map(|p| p.borrow().cost()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintKind {
    /// The agent may not occupy `cell` at `time`.
    Vertex { cell: Cell, time: usize },
    /// The agent may not move `from -> to` arriving at `time`.
    Edge { from: Cell, to: Cell, time: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Constraint {
    pub agent_id: usize,
    #[serde(flatten)]
    pub kind: ConstraintKind,
}

impl Constraint {
    pub fn vertex(agent_id: usize, cell: Cell, time: usize) -> Self {
        Self {
            agent_id,
            kind: ConstraintKind::Vertex { cell, time },
        }
    }

    pub fn edge(agent_id: usize, from: Cell, to: Cell, time: usize) -> Self {
        Self {
            agent_id,
            kind: ConstraintKind::Edge { from, to, time },
        }
    }

    pub fn time(&self) -> usize {
        match self.kind {
            ConstraintKind::Vertex { time, .. } | ConstraintKind::Edge { time, .. } => time,
        }
    }

    /// True when `path` breaks this constraint.
    pub fn violated_by(&self, path: &Path) -> bool {
        match self.kind {
            ConstraintKind::Vertex { cell, time } => path.at(time) == Some(cell),
            ConstraintKind::Edge { from, to, time } => {
                time >= 1 && path.at(time - 1) == Some(from) && path.at(time) == Some(to)
            }
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ConstraintKind::Vertex { cell, time } => {
                write!(f, "agent {} not at {cell} at t={time}", self.agent_id)
            }
            ConstraintKind::Edge { from, to, time } => write!(
                f,
                "agent {} not {from}->{to} arriving t={time}",
                self.agent_id
            ),
        }
    }
}

/// True iff `path` breaks none of the constraints addressed to its agent.
pub fn path_satisfies<'a>(
    path: &Path,
    constraints: impl IntoIterator<Item = &'a Constraint>,
) -> bool {
    constraints
        .into_iter()
        .filter(|c| c.agent_id == path.agent_id)
        .all(|c| !c.violated_by(path))
}

/// A reason a plan is not yet acceptable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Conflict {
    /// Agents `i < j` occupy `cell` at `time`.
    Vertex {
        i: usize,
        j: usize,
        cell: Cell,
        time: usize,
    },
    /// Agent `i` moves `from -> to` and agent `j` moves `to -> from`,
    /// both arriving at `time`.
    Edge {
        i: usize,
        j: usize,
        from: Cell,
        to: Cell,
        time: usize,
    },
    Segmentation(SegWitness),
}

impl Conflict {
    pub fn time(&self) -> usize {
        match self {
            Conflict::Vertex { time, .. } | Conflict::Edge { time, .. } => *time,
            Conflict::Segmentation(w) => w.time_i,
        }
    }

    /// The two constraints a conflict splits on, one per involved agent.
    pub fn split(&self) -> [Constraint; 2] {
        match *self {
            Conflict::Vertex { i, j, cell, time } => [
                Constraint::vertex(i, cell, time),
                Constraint::vertex(j, cell, time),
            ],
            Conflict::Edge {
                i,
                j,
                from,
                to,
                time,
            } => [
                Constraint::edge(i, from, to, time),
                Constraint::edge(j, to, from, time),
            ],
            Conflict::Segmentation(w) => [
                Constraint::vertex(w.agent_i, w.cell, w.time_i),
                Constraint::vertex(w.agent_j, w.cell, w.time_j),
            ],
        }
    }
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conflict::Vertex { i, j, cell, time } => {
                write!(f, "vertex collision: agents {i},{j} at {cell} t={time}")
            }
            Conflict::Edge {
                i,
                j,
                from,
                to,
                time,
            } => write!(
                f,
                "edge collision: agents {i},{j} swap {from}<->{to} arriving t={time}"
            ),
            Conflict::Segmentation(w) => write!(f, "{w}"),
        }
    }
}

/// Earliest vertex or edge collision.
///
/// Ties at equal time prefer vertex collisions over edge collisions, then the
/// lowest `(i, j)` agent pair.
pub fn first_collision<P: Borrow<Path>>(paths: &[P]) -> Option<Conflict> {
    let horizon = horizon(paths);
    let mut at: HashMap<Cell, usize> = HashMap::new();
    let mut prev: HashMap<Cell, usize> = HashMap::new();
    for t in 0..horizon {
        at.clear();
        let mut best: Option<(usize, usize, Cell)> = None;
        for p in paths {
            let p = p.borrow();
            let Some(c) = p.at(t) else { continue };
            match at.get(&c) {
                Some(&owner) => {
                    let pair = (owner.min(p.agent_id), owner.max(p.agent_id), c);
                    if best.is_none_or(|b| (pair.0, pair.1) < (b.0, b.1)) {
                        best = Some(pair);
                    }
                }
                None => {
                    at.insert(c, p.agent_id);
                }
            }
        }
        if let Some((i, j, cell)) = best {
            return Some(Conflict::Vertex {
                i,
                j,
                cell,
                time: t,
            });
        }
        if t > 0 {
            let mut best: Option<(usize, usize, Cell, Cell)> = None;
            for p in paths {
                let p = p.borrow();
                let (Some(u), Some(v)) = (p.at(t - 1), p.at(t)) else {
                    continue;
                };
                if u == v {
                    continue;
                }
                let Some(&other) = prev.get(&v) else { continue };
                if other == p.agent_id || path_by_id(paths, other).at(t) != Some(u) {
                    continue;
                }
                let cand = if p.agent_id < other {
                    (p.agent_id, other, u, v)
                } else {
                    (other, p.agent_id, v, u)
                };
                if best.is_none_or(|b| (cand.0, cand.1) < (b.0, b.1)) {
                    best = Some(cand);
                }
            }
            if let Some((i, j, from, to)) = best {
                return Some(Conflict::Edge {
                    i,
                    j,
                    from,
                    to,
                    time: t,
                });
            }
        }
        std::mem::swap(&mut prev, &mut at);
    }
    None
}

/// Number of colliding agent pairs summed over timesteps, counting vertex
/// and swap collisions separately.
pub fn count_collisions<P: Borrow<Path>>(paths: &[P]) -> usize {
    let horizon = horizon(paths);
    let mut at: HashMap<Cell, usize> = HashMap::new();
    let mut moves: HashMap<(Cell, Cell), usize> = HashMap::new();
    let mut total = 0;
    for t in 0..horizon {
        at.clear();
        moves.clear();
        for p in paths {
            let p = p.borrow();
            let Some(c) = p.at(t) else { continue };
            let n = at.entry(c).or_insert(0);
            total += *n;
            *n += 1;
            if let Some(u) = t.checked_sub(1).and_then(|s| p.at(s)) {
                if u != c {
                    total += moves.get(&(c, u)).copied().unwrap_or(0);
                    *moves.entry((u, c)).or_insert(0) += 1;
                }
            }
        }
    }
    total
}

pub fn is_collision_free<P: Borrow<Path>>(paths: &[P]) -> bool {
    first_collision(paths).is_none()
}
