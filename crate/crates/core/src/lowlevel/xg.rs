//! Explanation-guided space-time search.
//!
//! A state is the agent's cell and time, together with the start of its
//! current segment and the set of cells it has used since then. The index
//! of a state is the number of segments opened so far by the greedy
//! segmentation of the combined plan (the new prefix plus the other
//! agents), which the search extends one timestep at a time.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::rc::Rc;

use super::astar::{space_time_astar, Search, SpaceTime};
use super::cellset::CellSet;
use super::{ConstraintTable, Counter, LowLevelQuery, OthersIndex, PlanOutcome, Weight, XgOptions};
use crate::plan::Path;
use crate::segmentation::index_with_collision_breaks;
use crate::world::{Cell, UNREACHABLE};

/// Index of the other agents' paths cut to the length of `prefix`, together
/// with `prefix` itself.
pub fn combined_index_prefix(prefix: &Path, others: &[Path]) -> usize {
    let len = prefix.len();
    let mut all: Vec<Path> = others
        .iter()
        .filter(|p| p.agent_id != prefix.agent_id)
        .map(|p| Path::new(p.agent_id, p.vertices.iter().take(len).copied().collect()))
        .filter(|p| !p.is_empty())
        .collect();
    let pos = all.partition_point(|p| p.agent_id < prefix.agent_id);
    all.insert(pos, prefix.clone());
    index_with_collision_breaks(&all)
}

/// Minimizes the index of the combined plan; ties go to shorter remaining
/// distance, then earlier time.
pub fn xg_astar(q: &LowLevelQuery<'_>, opts: XgOptions) -> PlanOutcome {
    search(q, opts, None)
}

/// Orders states by `w · index + (1 - w) · (t + h)`.
pub fn wxg_astar(q: &LowLevelQuery<'_>, w: Weight, opts: XgOptions) -> PlanOutcome {
    search(q, opts, Some(w.get()))
}

struct Node {
    cell: Cell,
    t: usize,
    seg: usize,
    set: Rc<CellSet>,
    index: usize,
    parent: u32,
    terminal: bool,
}

type Key = (usize, usize, usize, Rc<CellSet>);

// (primary, index, h, t, non-terminal, seq, node)
type Prio = (u64, usize, u32, usize, bool, u64, u32);

fn search(q: &LowLevelQuery<'_>, opts: XgOptions, weight: Option<f64>) -> PlanOutcome {
    let world = q.world;
    let start = q.task.start;
    let goal = q.task.goal;
    let table = ConstraintTable::new(q.task.agent_id, q.constraints);
    let others_paths: Vec<Path> = q
        .others
        .iter()
        .filter(|p| p.agent_id != q.task.agent_id)
        .cloned()
        .collect();
    let others = OthersIndex::new(&others_paths);
    let budget = q.index_budget.unwrap_or_else(|| others.index());
    let ncells = world.cell_count();
    let idx = |c: Cell| world.index_of(c);
    let h = |c: Cell| q.heuristic.get(c);
    let mut counter = Counter::new(q.limits);

    let h0 = h(start);
    if h0 == UNREACHABLE || !table.allows_at(start, 0) || h0 as usize + 1 > q.length_bound {
        return PlanOutcome::NotFound;
    }

    let prio = |index: usize, hv: u32, t: usize, terminal: bool, seq: u64, id: u32| -> Prio {
        let primary = match weight {
            None => index as u64,
            Some(w) => (w * index as f64 + (1.0 - w) * (t + hv as usize) as f64).to_bits(),
        };
        (primary, index, hv, t, !terminal, seq, id)
    };

    // Index after the agent stops at `t` with segment `(seg, set)`.
    let completion = |t: usize, seg: usize, set: &CellSet, index: usize, cell: Cell| -> usize {
        let mut poisoned = seg == t && others.occupied(cell, t);
        for t2 in t + 1..others.horizon() {
            let fail = poisoned
                || !others.window_reaches(seg, t2)
                || others.cells_at(t2).iter().any(|&u| set.contains(idx(u)));
            if fail {
                return index + 1 + others.cuts_from(t2);
            }
            poisoned = false;
        }
        index
    };

    let mut nodes: Vec<Node> = Vec::new();
    let mut best: HashMap<Key, (usize, bool)> = HashMap::new();
    let mut open: BinaryHeap<Reverse<Prio>> = BinaryHeap::new();
    let mut seq = 0u64;

    let root_set = Rc::new(CellSet::singleton(ncells, idx(start)));
    nodes.push(Node {
        cell: start,
        t: 0,
        seg: 0,
        set: root_set.clone(),
        index: 1,
        parent: u32::MAX,
        terminal: false,
    });
    best.insert((idx(start), 0, 0, root_set.clone()), (1, false));
    open.push(Reverse(prio(1, h0, 0, false, seq, 0)));
    if start == goal {
        let fi = completion(0, 0, &root_set, 1, start);
        nodes.push(Node {
            cell: start,
            t: 0,
            seg: 0,
            set: root_set,
            index: fi,
            parent: u32::MAX,
            terminal: true,
        });
        seq += 1;
        open.push(Reverse(prio(fi, 0, 0, true, seq, 1)));
    }

    let reconstruct = |nodes: &[Node], id: u32| -> Vec<Cell> {
        let mut out = Vec::with_capacity(nodes[id as usize].t + 1);
        let mut cur = id;
        while cur != u32::MAX {
            out.push(nodes[cur as usize].cell);
            cur = nodes[cur as usize].parent;
        }
        out.reverse();
        out
    };

    while let Some(Reverse(p)) = open.pop() {
        let id = p.6;
        let node = &nodes[id as usize];
        if node.terminal {
            return PlanOutcome::Found(Path::new(q.task.agent_id, reconstruct(&nodes, id)));
        }
        let (v, t, seg, index) = (node.cell, node.t, node.seg, node.index);
        let set = node.set.clone();
        match best.get_mut(&(idx(v), t, seg, set.clone())) {
            Some(e) if e.0 == index && !e.1 => e.1 = true,
            _ => continue,
        }
        if counter.tick() {
            return PlanOutcome::Interrupted;
        }
        if opts.check_consistency {
            let prefix = Path::new(q.task.agent_id, reconstruct(&nodes, id));
            let expected = combined_index_prefix(&prefix, &others_paths);
            assert_eq!(
                index, expected,
                "index drift on prefix {:?}",
                prefix.vertices
            );
        }

        if opts.fallback_after_budget && index > budget {
            let s = SpaceTime {
                world,
                heuristic: q.heuristic,
                goal,
                table: &table,
                length_bound: q.length_bound,
                time_cap: table.max_time().map_or(0, |m| m + 1),
            };
            match space_time_astar(&s, v, t, |_, _| false, |_, _, _| false, &mut counter) {
                Search::Found(suffix) => {
                    let mut full = reconstruct(&nodes, id);
                    full.extend_from_slice(&suffix[1..]);
                    return PlanOutcome::Found(Path::new(q.task.agent_id, full));
                }
                Search::Interrupted => return PlanOutcome::Interrupted,
                Search::Exhausted => continue,
            }
        }

        let t1 = t + 1;
        let poisoned = seg == t && others.occupied(v, t);
        let window_ok = others.window_reaches(seg, t1);
        let others_hit_set = others.cells_at(t1).iter().any(|&u| set.contains(idx(u)));
        let prune_cycles = opts.eliminate_cycles && table.max_time().is_none_or(|m| m < seg);
        let single = prune_cycles && set.len() == 1;

        let mut children: Vec<(Cell, u32)> = Vec::with_capacity(5);
        world.for_each_successor(v, |w| {
            let hw = h(w);
            if hw != UNREACHABLE && t1 + (hw as usize) < q.length_bound && table.allows(v, w, t1) {
                children.push((w, hw));
            }
        });
        for (w, hw) in children {
            let cut = poisoned || !window_ok || others_hit_set || others.visited_in(w, seg, t1);
            let (cseg, cset, cindex) = if cut {
                (t1, Rc::new(CellSet::singleton(ncells, idx(w))), index + 1)
            } else {
                let wi = idx(w);
                if prune_cycles && set.contains(wi) && !(single && w == v) {
                    continue;
                }
                let s = if set.contains(wi) {
                    set.clone()
                } else {
                    Rc::new(set.with(wi))
                };
                (seg, s, index)
            };
            let key = (idx(w), t1, cseg, cset.clone());
            match best.entry(key) {
                Entry::Occupied(mut e) => {
                    if e.get().0 <= cindex {
                        continue;
                    }
                    e.insert((cindex, false));
                }
                Entry::Vacant(e) => {
                    e.insert((cindex, false));
                }
            }
            seq += 1;
            nodes.push(Node {
                cell: w,
                t: t1,
                seg: cseg,
                set: cset.clone(),
                index: cindex,
                parent: id,
                terminal: false,
            });
            open.push(Reverse(prio(
                cindex,
                hw,
                t1,
                false,
                seq,
                (nodes.len() - 1) as u32,
            )));
            if w == goal {
                let fi = completion(t1, cseg, &cset, cindex, w);
                seq += 1;
                nodes.push(Node {
                    cell: w,
                    t: t1,
                    seg: cseg,
                    set: cset,
                    index: fi,
                    parent: id,
                    terminal: true,
                });
                open.push(Reverse(prio(
                    fi,
                    0,
                    t1,
                    true,
                    seq,
                    (nodes.len() - 1) as u32,
                )));
            }
        }
    }
    PlanOutcome::NotFound
}
