//! Vertex-disjoint decompositions of plans.
//!
//! A decomposition is a list of breakpoints `0 = t_0 < t_1 < ... < t_r`
//! splitting time into half-open windows `[t_{k-1}, t_k)`. Within a window the
//! sets of cells visited by different agents must be pairwise disjoint; an
//! agent contributes only the timesteps at which it still exists. The last
//! breakpoint is the plan horizon (longest path length), so `r` windows cover
//! timesteps `0..=makespan`. The number of windows `r` is the index.

use std::borrow::Borrow;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::{first_collision, horizon, Conflict, Path};
use crate::world::Cell;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegmentationError {
    #[error("plan collides ({0}); use index_with_collision_breaks")]
    Colliding(Conflict),
    #[error("decomposition has index 1, there are no boundaries")]
    NoBoundaries,
    #[error("decomposition does not match the plan: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Decomposition {
    breakpoints: Vec<usize>,
}

impl Decomposition {
    /// Validates `0 = b_0 < b_1 < ...` with at least two entries.
    pub fn from_breakpoints(breakpoints: Vec<usize>) -> Result<Self, SegmentationError> {
        if breakpoints.len() < 2 || breakpoints[0] != 0 {
            return Err(SegmentationError::Mismatch(
                "breakpoints must start at 0 and contain at least two entries".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SegmentationError::Mismatch(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self { breakpoints })
    }

    pub fn breakpoints(&self) -> &[usize] {
        &self.breakpoints
    }

    pub fn index(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Half-open `[start, end)` time windows.
    pub fn windows(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.breakpoints.windows(2).map(|w| (w[0], w[1]))
    }

    /// Window containing time `t`, if any.
    pub fn window_of(&self, t: usize) -> Option<usize> {
        if t >= *self.breakpoints.last().unwrap() {
            return None;
        }
        Some(self.breakpoints.partition_point(|&b| b <= t) - 1)
    }

    /// Checks that the decomposition covers exactly the plan's timesteps.
    pub fn check_covers<P: Borrow<Path>>(&self, paths: &[P]) -> Result<(), SegmentationError> {
        let end = plan_end(paths);
        if *self.breakpoints.last().unwrap() != end {
            return Err(SegmentationError::Mismatch(format!(
                "last breakpoint {} but plan ends at {end}",
                self.breakpoints.last().unwrap()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.breakpoints.iter().map(|b| b.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Why segment `boundary` could not be extended to time `time_i`: agent
/// `agent_i` is at `cell` at `time_i`, which agent `agent_j` also visits at
/// `time_j` inside the window `[t_{k-1}, t_k]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegWitness {
    /// Index `k` of the breakpoint `t_k`, 1-based.
    pub boundary: usize,
    pub agent_i: usize,
    pub agent_j: usize,
    pub cell: Cell,
    pub time_i: usize,
    pub time_j: usize,
}

impl fmt::Display for SegWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "boundary {}: agent {} at {} t={} / agent {} at {} t={}",
            self.boundary,
            self.agent_i,
            self.cell,
            self.time_i,
            self.agent_j,
            self.cell,
            self.time_j
        )
    }
}

/// End of the last window: the plan horizon, or 1 for an empty plan.
pub(crate) fn plan_end<P: Borrow<Path>>(paths: &[P]) -> usize {
    horizon(paths).max(1)
}

/// Greedy segmentation that tolerates collisions.
///
/// A window always admits its first timestep. It is extended while the
/// per-agent cell sets stay pairwise disjoint; a window whose first
/// timestep already holds a vertex collision cannot be extended at all.
fn greedy_breakpoints<P: Borrow<Path>>(paths: &[P]) -> Vec<usize> {
    let end = plan_end(paths);
    let mut breakpoints = vec![0];
    let mut owners: HashMap<Cell, usize> = HashMap::new();
    let mut poisoned = false;
    let mut start = 0;

    for t in 0..end {
        if t > start {
            let mut fail = poisoned;
            if !fail {
                for p in paths {
                    let p = p.borrow();
                    let Some(c) = p.at(t) else { continue };
                    match owners.get(&c) {
                        Some(&o) if o != p.agent_id => {
                            fail = true;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            owners.insert(c, p.agent_id);
                        }
                    }
                }
            }
            if !fail {
                continue;
            }
            breakpoints.push(t);
            start = t;
            owners.clear();
            poisoned = false;
        }
        for p in paths {
            let p = p.borrow();
            let Some(c) = p.at(t) else { continue };
            if let Some(&o) = owners.get(&c) {
                if o != p.agent_id {
                    poisoned = true;
                }
            } else {
                owners.insert(c, p.agent_id);
            }
        }
    }
    breakpoints.push(end);
    breakpoints
}

/// Minimal-index decomposition of a collision-free plan.
pub fn greedy_decompose<P: Borrow<Path>>(paths: &[P]) -> Result<Decomposition, SegmentationError> {
    if let Some(c) = first_collision(paths) {
        return Err(SegmentationError::Colliding(c));
    }
    Ok(Decomposition {
        breakpoints: greedy_breakpoints(paths),
    })
}

/// Greedy index where collisions end segments. Equals
/// `greedy_decompose(paths).index()` on collision-free plans.
pub fn index_with_collision_breaks<P: Borrow<Path>>(paths: &[P]) -> usize {
    greedy_breakpoints(paths).len() - 1
}

/// Breakpoints of the collision-tolerant greedy segmentation.
pub fn decompose_with_collision_breaks<P: Borrow<Path>>(paths: &[P]) -> Decomposition {
    Decomposition {
        breakpoints: greedy_breakpoints(paths),
    }
}

/// One witness per internal breakpoint of `d`.
///
/// For breakpoint `t_k` the witness is the lexicographically smallest agent
/// pair `(i, j)` with `π_i[t_k] ∈ π_j[t_{k-1} ..= t_k]`, and `time_j` is the
/// earliest such visit of `j`.
pub fn boundary_witnesses<P: Borrow<Path>>(
    paths: &[P],
    d: &Decomposition,
) -> Result<Vec<SegWitness>, SegmentationError> {
    if d.index() < 2 {
        return Err(SegmentationError::NoBoundaries);
    }
    d.check_covers(paths)?;
    let mut out = Vec::with_capacity(d.index() - 1);
    for k in 1..d.index() {
        let (lo, tk) = (d.breakpoints[k - 1], d.breakpoints[k]);
        let w = witness_at(paths, k, lo, tk).ok_or_else(|| {
            SegmentationError::Mismatch(format!(
                "window [{lo}, {tk}] is vertex-disjoint, breakpoint {tk} is not forced"
            ))
        })?;
        out.push(w);
    }
    Ok(out)
}

fn witness_at<P: Borrow<Path>>(paths: &[P], k: usize, lo: usize, tk: usize) -> Option<SegWitness> {
    for pi in paths {
        let pi = pi.borrow();
        let Some(cell) = pi.at(tk) else { continue };
        for pj in paths {
            let pj = pj.borrow();
            if pj.agent_id == pi.agent_id {
                continue;
            }
            let hi = tk.min(pj.len().saturating_sub(1));
            if lo > hi {
                continue;
            }
            if let Some(tj) = (lo..=hi).find(|&t| pj.vertices[t] == cell) {
                return Some(SegWitness {
                    boundary: k,
                    agent_i: pi.agent_id,
                    agent_j: pj.agent_id,
                    cell,
                    time_i: tk,
                    time_j: tj,
                });
            }
        }
    }
    None
}

/// Re-checks that every window of `d` is pairwise vertex-disjoint.
/// Single-timestep windows are accepted even when they hold a collision.
pub fn windows_disjoint<P: Borrow<Path>>(paths: &[P], d: &Decomposition) -> bool {
    d.windows().all(|(a, b)| {
        if b - a == 1 {
            return true;
        }
        window_disjoint(paths, a, b)
    })
}

/// True when the agents' cell sets over `[a, b)` are pairwise disjoint.
pub fn window_disjoint<P: Borrow<Path>>(paths: &[P], a: usize, b: usize) -> bool {
    let mut owners: HashMap<Cell, usize> = HashMap::new();
    for p in paths {
        let p = p.borrow();
        for t in a..b.min(p.len()) {
            match owners.insert(p.vertices[t], p.agent_id) {
                Some(o) if o != p.agent_id => return false,
                _ => {}
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::Plan;

    fn c(x: u32, y: u32) -> Cell {
        Cell::new(x, y)
    }

    #[test]
    fn disjoint_paths_form_one_segment() {
        let p = Plan::from_vertices(vec![
            vec![c(0, 0), c(1, 0), c(2, 0)],
            vec![c(0, 2), c(1, 2), c(2, 2), c(3, 2)],
        ])
        .unwrap();
        let d = greedy_decompose(p.paths()).unwrap();
        assert_eq!(d.breakpoints(), &[0, 4]);
        assert_eq!(d.index(), 1);
    }

    #[test]
    fn single_agent_is_always_one_segment() {
        let p = Plan::from_vertices(vec![vec![c(0, 0), c(1, 0), c(0, 0), c(1, 0)]]).unwrap();
        assert_eq!(greedy_decompose(p.paths()).unwrap().index(), 1);
        assert_eq!(index_with_collision_breaks(p.paths()), 1);
    }

    #[test]
    fn empty_plan_has_index_one() {
        assert_eq!(
            greedy_decompose::<Path>(&[]).unwrap().breakpoints(),
            &[0, 1]
        );
    }

    #[test]
    fn colliding_plan_rejected() {
        let p = Plan::from_vertices(vec![vec![c(0, 0), c(1, 0)], vec![c(2, 0), c(1, 0)]]).unwrap();
        assert!(matches!(
            greedy_decompose(p.paths()),
            Err(SegmentationError::Colliding(_))
        ));
    }

    #[test]
    fn crossing_at_later_time_cuts() {
        // agent 1 visits (1,1) at t=1, agent 0 passes it at t=3
        let p = Plan::from_vertices(vec![
            vec![c(0, 0), c(0, 1), c(0, 1), c(1, 1), c(2, 1)],
            vec![c(1, 0), c(1, 1), c(1, 2), c(1, 3)],
        ])
        .unwrap();
        let d = greedy_decompose(p.paths()).unwrap();
        assert_eq!(d.breakpoints(), &[0, 3, 5]);
        let w = boundary_witnesses(p.paths(), &d).unwrap();
        assert_eq!(
            w,
            vec![SegWitness {
                boundary: 1,
                agent_i: 0,
                agent_j: 1,
                cell: c(1, 1),
                time_i: 3,
                time_j: 1
            }]
        );
    }

    #[test]
    fn witnesses_need_a_boundary() {
        let p = Plan::from_vertices(vec![vec![c(0, 0)]]).unwrap();
        let d = greedy_decompose(p.paths()).unwrap();
        assert_eq!(
            boundary_witnesses(p.paths(), &d),
            Err(SegmentationError::NoBoundaries)
        );
    }

    #[test]
    fn static_collision_cuts_every_step() {
        let p = Plan::from_vertices(vec![vec![c(0, 0); 4], vec![c(0, 0); 4]]).unwrap();
        assert_eq!(index_with_collision_breaks(p.paths()), 4);
    }

    #[test]
    fn window_lookup() {
        let d = Decomposition::from_breakpoints(vec![0, 3, 5]).unwrap();
        assert_eq!(d.window_of(0), Some(0));
        assert_eq!(d.window_of(2), Some(0));
        assert_eq!(d.window_of(3), Some(1));
        assert_eq!(d.window_of(5), None);
        assert!(Decomposition::from_breakpoints(vec![0, 3, 3]).is_err());
    }
}
