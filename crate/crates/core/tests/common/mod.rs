//! Independent reference implementations used as test oracles. None of
//! these call into the solver code except for plain data types.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xmapf::plan::{Constraint, ConstraintKind, Path};
use xmapf::world::{AgentTask, Cell, GridWorld, Instance};

/// True when every agent's cells in `[a, b)` are disjoint from every other
/// agent's cells in the same window. Agents that ended earlier contribute
/// the part of their path inside the window.
pub fn window_ok(paths: &[Path], a: usize, b: usize) -> bool {
    if b - a == 1 {
        return true;
    }
    let sets: Vec<HashSet<Cell>> = paths
        .iter()
        .map(|p| p.vertices.iter().skip(a).take(b - a).copied().collect())
        .collect();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if !sets[i].is_disjoint(&sets[j]) {
                return false;
            }
        }
    }
    true
}

/// Minimum number of windows over all breakpoint choices, by dynamic
/// programming over prefixes.
pub fn dp_min_index(paths: &[Path]) -> usize {
    let end = paths
        .iter()
        .map(|p| p.vertices.len())
        .max()
        .unwrap_or(0)
        .max(1);
    let mut best = vec![usize::MAX; end + 1];
    best[0] = 0;
    for b in 1..=end {
        for a in 0..b {
            if best[a] != usize::MAX && window_ok(paths, a, b) {
                best[b] = best[b].min(best[a] + 1);
            }
        }
    }
    best[end]
}

/// Breakpoint lists achieving [`dp_min_index`] are not unique; this
/// returns whether `breakpoints` is a valid decomposition of `paths`.
pub fn breakpoints_valid(paths: &[Path], breakpoints: &[usize]) -> bool {
    let end = paths
        .iter()
        .map(|p| p.vertices.len())
        .max()
        .unwrap_or(0)
        .max(1);
    breakpoints.first() == Some(&0)
        && breakpoints.last() == Some(&end)
        && breakpoints
            .windows(2)
            .all(|w| w[0] < w[1] && window_ok(paths, w[0], w[1]))
}

/// Pairwise brute-force collision check: vertex or swap.
pub fn brute_collides(paths: &[Path]) -> bool {
    for (i, p) in paths.iter().enumerate() {
        for q in &paths[i + 1..] {
            let n = p.vertices.len().min(q.vertices.len());
            for t in 0..n {
                if p.vertices[t] == q.vertices[t] {
                    return true;
                }
                if t + 1 < n
                    && p.vertices[t] == q.vertices[t + 1]
                    && p.vertices[t + 1] == q.vertices[t]
                {
                    return true;
                }
            }
        }
    }
    false
}

pub fn satisfies(path: &Path, constraints: &[Constraint]) -> bool {
    constraints
        .iter()
        .filter(|c| c.agent_id == path.agent_id)
        .all(|c| match c.kind {
            ConstraintKind::Vertex { cell, time } => path.vertices.get(time) != Some(&cell),
            ConstraintKind::Edge { from, to, time } => {
                !(time >= 1
                    && path.vertices.get(time - 1) == Some(&from)
                    && path.vertices.get(time) == Some(&to))
            }
        })
}

fn steps(world: &GridWorld, v: Cell) -> Vec<Cell> {
    let mut out = Vec::new();
    if world.allow_wait() {
        out.push(v);
    }
    let (x, y) = (v.x as i64, v.y as i64);
    for (dx, dy) in [(0, -1), (1, 0), (0, 1), (-1, 0)] {
        let (nx, ny) = (x + dx, y + dy);
        if nx >= 0 && ny >= 0 && nx < world.width() as i64 && ny < world.height() as i64 {
            let c = Cell::new(nx as u32, ny as u32);
            if world.is_passable(c) {
                out.push(c);
            }
        }
    }
    out
}

/// Every path from `task.start` ending on `task.goal` with at most
/// `max_len` vertices that satisfies `constraints`.
pub fn all_paths(
    world: &GridWorld,
    task: AgentTask,
    constraints: &[Constraint],
    max_len: usize,
) -> Vec<Path> {
    let mut out = Vec::new();
    let mut cur = vec![task.start];
    fn rec(
        world: &GridWorld,
        task: AgentTask,
        constraints: &[Constraint],
        max_len: usize,
        cur: &mut Vec<Cell>,
        out: &mut Vec<Path>,
    ) {
        let p = Path::new(task.agent_id, cur.clone());
        if !satisfies(&p, constraints) {
            return;
        }
        if *cur.last().unwrap() == task.goal {
            out.push(p);
        }
        if cur.len() == max_len {
            return;
        }
        for n in steps(world, *cur.last().unwrap()) {
            cur.push(n);
            rec(world, task, constraints, max_len, cur, out);
            cur.pop();
        }
    }
    rec(world, task, constraints, max_len, &mut cur, &mut out);
    out
}

/// Shortest constrained path length (vertices) by exhaustive enumeration.
pub fn brute_shortest(
    world: &GridWorld,
    task: AgentTask,
    constraints: &[Constraint],
    max_len: usize,
) -> Option<usize> {
    all_paths(world, task, constraints, max_len)
        .iter()
        .map(|p| p.vertices.len())
        .min()
}

/// Minimum over all candidate paths of the combined index with `others`.
pub fn brute_min_combined(
    world: &GridWorld,
    task: AgentTask,
    constraints: &[Constraint],
    others: &[Path],
    max_len: usize,
) -> Option<usize> {
    all_paths(world, task, constraints, max_len)
        .into_iter()
        .map(|p| {
            let mut all: Vec<Path> = others.to_vec();
            all.push(p);
            all.sort_by_key(|p| p.agent_id);
            dp_min_index(&all)
        })
        .min()
}

const GONE: u8 = u8::MAX;

#[derive(Clone, PartialEq, Eq, Hash)]
struct JointState {
    /// Cell index per agent, `GONE` once stopped.
    pos: Vec<u8>,
    /// Cells used since the last breakpoint, as bitmasks.
    sets: Vec<u64>,
}

/// Smallest index of any collision-free plan for `inst`, found by a 0-1
/// breadth-first search over joint positions together with each agent's
/// cells since the last breakpoint. Agents may stop only on their goal.
/// `None` when no plan exists. Grids up to 64 cells.
pub fn joint_optimal_index(inst: &Instance) -> Option<usize> {
    joint_optimal_index_within(inst, usize::MAX).expect("unbounded search")
}

/// [`joint_optimal_index`] giving up with `Err(())` once more than
/// `max_states` joint states have been recorded.
#[allow(clippy::result_unit_err)]
pub fn joint_optimal_index_within(inst: &Instance, max_states: usize) -> Result<Option<usize>, ()> {
    let world = inst.world();
    assert!(world.cell_count() <= 64, "oracle supports at most 64 cells");
    let tasks = inst.tasks();
    let n = tasks.len();
    if n == 0 {
        return Ok(Some(1));
    }
    let id = |c: Cell| (c.y * world.width() + c.x) as u8;
    let succ: Vec<Vec<u8>> = (0..world.cell_count())
        .map(|i| {
            let c = Cell::new(i as u32 % world.width(), i as u32 / world.width());
            if world.is_passable(c) {
                steps(world, c).into_iter().map(id).collect()
            } else {
                Vec::new()
            }
        })
        .collect();
    let goals: Vec<u8> = tasks.iter().map(|t| id(t.goal)).collect();
    let start = JointState {
        pos: tasks.iter().map(|t| id(t.start)).collect(),
        sets: tasks.iter().map(|t| 1u64 << id(t.start)).collect(),
    };
    let mut dist: HashMap<JointState, usize> = HashMap::new();
    let mut dq = VecDeque::new();
    dist.insert(start.clone(), 1);
    dq.push_back((start, 1usize));
    let mut next = vec![0u8; n];
    while let Some((s, d)) = dq.pop_front() {
        if dist.get(&s).is_some_and(|&b| b < d) {
            continue;
        }
        let options: Vec<Vec<u8>> = (0..n)
            .map(|i| {
                let v = s.pos[i];
                if v == GONE {
                    return vec![GONE];
                }
                let mut o = succ[v as usize].clone();
                if v == goals[i] {
                    o.push(GONE);
                }
                o
            })
            .collect();
        let mut choice = vec![0usize; n];
        'combos: loop {
            for i in 0..n {
                next[i] = options[i][choice[i]];
            }
            let valid = next.iter().any(|&c| c != GONE)
                && (0..n).all(|i| {
                    (i + 1..n).all(|j| {
                        next[i] == GONE
                            || next[j] == GONE
                            || (next[i] != next[j] && !(s.pos[i] == next[j] && s.pos[j] == next[i]))
                    })
                });
            if next.iter().all(|&c| c == GONE) {
                return Ok(Some(d));
            }
            if valid {
                let mut sets = s.sets.clone();
                for i in 0..n {
                    if next[i] != GONE {
                        sets[i] |= 1 << next[i];
                    }
                }
                let clash = (0..n).any(|i| (i + 1..n).any(|j| sets[i] & sets[j] != 0));
                let nd = if clash {
                    for i in 0..n {
                        sets[i] = if next[i] == GONE { 0 } else { 1 << next[i] };
                    }
                    d + 1
                } else {
                    d
                };
                let ns = JointState {
                    pos: next.clone(),
                    sets,
                };
                if dist.get(&ns).is_none_or(|&b| nd < b) {
                    if dist.len() >= max_states {
                        return Err(());
                    }
                    dist.insert(ns.clone(), nd);
                    if nd == d {
                        dq.push_front((ns, nd));
                    } else {
                        dq.push_back((ns, nd));
                    }
                }
            }
            for k in 0..n {
                choice[k] += 1;
                if choice[k] < options[k].len() {
                    continue 'combos;
                }
                choice[k] = 0;
            }
            break;
        }
    }
    Ok(None)
}

/// Whether any collision-free plan exists, by plain joint-state search.
pub fn joint_solvable(inst: &Instance) -> bool {
    joint_optimal_index(inst).is_some()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random instance with distinct starts and distinct goals.
pub fn random_instance(world: &GridWorld, n: usize, rng: &mut ChaCha8Rng) -> Instance {
    let cells: Vec<Cell> = world.cells().collect();
    let starts: Vec<Cell> = cells.choose_multiple(rng, n).copied().collect();
    let goals: Vec<Cell> = cells.choose_multiple(rng, n).copied().collect();
    Instance::from_pairs(world.clone(), starts.into_iter().zip(goals)).unwrap()
}

/// Random walk of `len` vertices from `start`.
pub fn random_walk(
    world: &GridWorld,
    agent_id: usize,
    start: Cell,
    len: usize,
    rng: &mut ChaCha8Rng,
) -> Path {
    let mut v = vec![start];
    while v.len() < len {
        let s = steps(world, *v.last().unwrap());
        v.push(s[rng.gen_range(0..s.len())]);
    }
    Path::new(agent_id, v)
}
