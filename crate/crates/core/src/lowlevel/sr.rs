//! Segment-respecting A*.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use super::astar::{space_time_astar, Search, SpaceTime};
use super::{ConstraintTable, Counter, LowLevelQuery, OthersIndex, PlanOutcome};
use crate::plan::Path;
use crate::segmentation::{decompose_with_collision_breaks, Decomposition};
use crate::world::{Cell, UNREACHABLE};

/// Cells occupied by the other agents, per segment of their plan.
#[derive(Debug, Clone)]
pub struct TimedObstacleSet {
    decomposition: Decomposition,
    windows: Vec<HashSet<Cell>>,
    horizon: usize,
    tail_closed: bool,
}

impl TimedObstacleSet {
    pub fn decomposition(&self) -> &Decomposition {
        &self.decomposition
    }

    /// True when `cell` is used by another agent anywhere in the segment
    /// containing `t`. The last segment stays in force after the others'
    /// plan ends, since a path outliving it extends that segment. If that
    /// segment starts on a collision it cannot be extended, and every cell
    /// is blocked from the horizon on.
    pub fn blocks(&self, cell: Cell, t: usize) -> bool {
        match self.decomposition.window_of(t) {
            Some(k) => self.windows[k].contains(&cell),
            None if self.tail_closed => true,
            None => self.windows[self.windows.len() - 1].contains(&cell),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

/// Segments `others` greedily and records each segment's cells.
pub fn build_timed_obstacles(others: &[Path]) -> TimedObstacleSet {
    let decomposition = decompose_with_collision_breaks(others);
    let horizon = others.iter().map(Path::len).max().unwrap_or(0);
    let windows = decomposition
        .windows()
        .map(|(a, b)| {
            others
                .iter()
                .flat_map(|p| p.vertices.iter().take(b).skip(a).copied())
                .collect()
        })
        .collect();
    let tail_closed = horizon > 0 && {
        let last = horizon - 1;
        let mut seen = HashSet::new();
        decomposition.breakpoints().iter().rev().nth(1) == Some(&last)
            && !others
                .iter()
                .filter_map(|p| p.at(last))
                .all(|c| seen.insert(c))
    };
    TimedObstacleSet {
        decomposition,
        windows,
        horizon,
        tail_closed,
    }
}

/// Shortest path that never enters a cell used by another agent in the
/// same segment and never swaps with one. Adding it keeps the others'
/// breakpoints valid. `NotFound` does not mean the agent has no path.
pub fn sr_astar(q: &LowLevelQuery<'_>) -> PlanOutcome {
    let others_paths: Vec<Path> = q
        .others
        .iter()
        .filter(|p| p.agent_id != q.task.agent_id)
        .cloned()
        .collect();
    let obstacles = build_timed_obstacles(&others_paths);
    let others = OthersIndex::new(&others_paths);
    let table = ConstraintTable::new(q.task.agent_id, q.constraints);
    let s = SpaceTime {
        world: q.world,
        heuristic: q.heuristic,
        goal: q.task.goal,
        table: &table,
        length_bound: q.length_bound,
        time_cap: table
            .max_time()
            .map_or(0, |m| m + 1)
            .max(obstacles.horizon() + 1),
    };
    let mut counter = Counter::new(q.limits);
    match space_time_astar(
        &s,
        q.task.start,
        0,
        |c, t| obstacles.blocks(c, t),
        |a, b, t| others.swaps(a, b, t),
        &mut counter,
    ) {
        Search::Found(v) => PlanOutcome::Found(Path::new(q.task.agent_id, v)),
        Search::Exhausted => PlanOutcome::NotFound,
        Search::Interrupted => PlanOutcome::Interrupted,
    }
}

/// Relaxed variant of [`sr_astar`]: entering a timed obstacle or swapping
/// with another agent is allowed but counted. Returns the path with the
/// fewest such violations, then the fewest steps. Used when the strict
/// search finds nothing.
pub fn sr_relaxed_astar(q: &LowLevelQuery<'_>) -> PlanOutcome {
    let others_paths: Vec<Path> = q
        .others
        .iter()
        .filter(|p| p.agent_id != q.task.agent_id)
        .cloned()
        .collect();
    let obstacles = build_timed_obstacles(&others_paths);
    let others = OthersIndex::new(&others_paths);
    let table = ConstraintTable::new(q.task.agent_id, q.constraints);
    let world = q.world;
    let (start, goal) = (q.task.start, q.task.goal);
    let h0 = q.heuristic.get(start);
    if h0 == UNREACHABLE || !table.allows_at(start, 0) || h0 as usize + 1 > q.length_bound {
        return PlanOutcome::NotFound;
    }
    let cap = table
        .max_time()
        .map_or(0, |m| m + 1)
        .max(obstacles.horizon() + 1);
    let key = |c: Cell, t: usize| world.index_of(c) * (cap + 1) + t.min(cap);
    let mut closed = vec![false; world.cell_count() * (cap + 1)];
    let mut counter = Counter::new(q.limits);

    let v0 = usize::from(obstacles.blocks(start, 0));
    // (cell, t, parent)
    let mut nodes: Vec<(Cell, usize, u32)> = vec![(start, 0, u32::MAX)];
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    open.push(Reverse((v0, h0 as usize, Reverse(0usize), seq, 0u32)));
    while let Some(Reverse((viol, _, Reverse(t), _, id))) = open.pop() {
        let v = nodes[id as usize].0;
        let k = key(v, t);
        if closed[k] {
            continue;
        }
        closed[k] = true;
        if v == goal {
            let mut out = Vec::with_capacity(t + 1);
            let mut cur = id;
            while cur != u32::MAX {
                out.push(nodes[cur as usize].0);
                cur = nodes[cur as usize].2;
            }
            out.reverse();
            return PlanOutcome::Found(Path::new(q.task.agent_id, out));
        }
        if counter.tick() {
            return PlanOutcome::Interrupted;
        }
        let t1 = t + 1;
        world.for_each_successor(v, |w| {
            let h = q.heuristic.get(w);
            if h == UNREACHABLE
                || t1 + h as usize + 1 > q.length_bound
                || closed[key(w, t1)]
                || !table.allows(v, w, t1)
            {
                return;
            }
            let extra = usize::from(obstacles.blocks(w, t1)) + usize::from(others.swaps(v, w, t1));
            seq += 1;
            nodes.push((w, t1, id));
            open.push(Reverse((
                viol + extra,
                t1 + h as usize,
                Reverse(t1),
                seq,
                (nodes.len() - 1) as u32,
            )));
        });
    }
    PlanOutcome::NotFound
}
