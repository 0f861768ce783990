//! Space-time A*.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{ConstraintTable, Counter, LowLevelQuery, PlanOutcome};
use crate::plan::Path;
use crate::world::{Cell, DistanceField, GridWorld, UNREACHABLE};

pub(crate) enum Search {
    Found(Vec<Cell>),
    Exhausted,
    Interrupted,
}

pub(crate) struct SpaceTime<'a> {
    pub world: &'a GridWorld,
    pub heuristic: &'a DistanceField,
    pub goal: Cell,
    pub table: &'a ConstraintTable,
    /// Maximum number of vertices of a full path starting at time 0.
    pub length_bound: usize,
    /// From this time on nothing time dependent remains; later states
    /// collapse onto it.
    pub time_cap: usize,
}

/// Shortest constrained path from `(from, t0)` to the goal. `blocked`
/// rejects a cell at a time, `forbidden` rejects a move arriving at a time.
/// Returns the vertices from `t0` onward.
pub(crate) fn space_time_astar(
    s: &SpaceTime<'_>,
    from: Cell,
    t0: usize,
    blocked: impl Fn(Cell, usize) -> bool,
    forbidden: impl Fn(Cell, Cell, usize) -> bool,
    counter: &mut Counter,
) -> Search {
    let h0 = s.heuristic.get(from);
    if h0 == UNREACHABLE
        || !s.table.allows_at(from, t0)
        || blocked(from, t0)
        || t0 + h0 as usize + 1 > s.length_bound
    {
        return Search::Exhausted;
    }
    let cap = s.time_cap.max(t0);
    let cells = s.world.cell_count();
    let key = |c: Cell, t: usize| s.world.index_of(c) * (cap + 1) + t.min(cap);
    let mut closed = vec![false; cells * (cap + 1)];

    // (cell, t, parent)
    let mut nodes: Vec<(Cell, usize, u32)> = vec![(from, t0, u32::MAX)];
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    open.push(Reverse((t0 + h0 as usize, Reverse(t0), seq, 0u32)));

    while let Some(Reverse((_, _, _, id))) = open.pop() {
        let (v, t, _) = nodes[id as usize];
        let k = key(v, t);
        if closed[k] {
            continue;
        }
        closed[k] = true;
        if v == s.goal {
            let mut out = Vec::with_capacity(t - t0 + 1);
            let mut cur = id;
            while cur != u32::MAX {
                out.push(nodes[cur as usize].0);
                cur = nodes[cur as usize].2;
            }
            out.reverse();
            return Search::Found(out);
        }
        if counter.tick() {
            return Search::Interrupted;
        }
        let t1 = t + 1;
        s.world.for_each_successor(v, |w| {
            let h = s.heuristic.get(w);
            if h == UNREACHABLE || t1 + h as usize + 1 > s.length_bound {
                return;
            }
            if closed[key(w, t1)]
                || !s.table.allows(v, w, t1)
                || blocked(w, t1)
                || forbidden(v, w, t1)
            {
                return;
            }
            seq += 1;
            nodes.push((w, t1, id));
            open.push(Reverse((
                t1 + h as usize,
                Reverse(t1),
                seq,
                (nodes.len() - 1) as u32,
            )));
        });
    }
    Search::Exhausted
}

/// Shortest path for `q.task` that satisfies its constraints. Other agents
/// are ignored.
pub fn astar(q: &LowLevelQuery<'_>) -> PlanOutcome {
    let table = ConstraintTable::new(q.task.agent_id, q.constraints);
    let s = SpaceTime {
        world: q.world,
        heuristic: q.heuristic,
        goal: q.task.goal,
        time_cap: table.max_time().map_or(0, |m| m + 1),
        table: &table,
        length_bound: q.length_bound,
    };
    let mut counter = Counter::new(q.limits);
    match space_time_astar(
        &s,
        q.task.start,
        0,
        |_, _| false,
        |_, _, _| false,
        &mut counter,
    ) {
        Search::Found(v) => PlanOutcome::Found(Path::new(q.task.agent_id, v)),
        Search::Exhausted => PlanOutcome::NotFound,
        Search::Interrupted => PlanOutcome::Interrupted,
    }
}
