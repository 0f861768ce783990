//! Precomputed view of the other agents' paths.

use std::collections::HashMap;

use crate::plan::Path;
use crate::world::Cell;

#[derive(Debug)]
pub(crate) struct OthersIndex<'a> {
    paths: &'a [Path],
    horizon: usize,
    at_time: Vec<Vec<Cell>>,
    visits: HashMap<Cell, Vec<usize>>,
    occupancy: HashMap<(Cell, usize), usize>,
    /// `max_end[c]`: last timestep a window opened at `c` can reach using
    /// the other agents alone. `usize::MAX` when it never fails.
    max_end: Vec<usize>,
    /// Number of cuts the other agents force from `c` onward.
    cuts_from: Vec<usize>,
}

impl<'a> OthersIndex<'a> {
    pub(crate) fn new(paths: &'a [Path]) -> Self {
        let horizon = paths.iter().map(Path::len).max().unwrap_or(0);
        let mut at_time = vec![Vec::new(); horizon];
        let mut visits: HashMap<Cell, Vec<usize>> = HashMap::new();
        let mut occupancy = HashMap::new();
        for p in paths {
            for (t, &c) in p.vertices.iter().enumerate() {
                at_time[t].push(c);
                let v = visits.entry(c).or_default();
                if v.last() != Some(&t) {
                    v.push(t);
                }
                occupancy.entry((c, t)).or_insert(p.agent_id);
            }
        }
        for v in visits.values_mut() {
            v.sort_unstable();
            v.dedup();
        }

        let mut max_end = vec![usize::MAX; horizon];
        let mut owners: HashMap<Cell, usize> = HashMap::new();
        for (c, slot) in max_end.iter_mut().enumerate() {
            owners.clear();
            let mut poisoned = false;
            for p in paths {
                if let Some(v) = p.at(c) {
                    if let Some(&o) = owners.get(&v) {
                        if o != p.agent_id {
                            poisoned = true;
                        }
                    } else {
                        owners.insert(v, p.agent_id);
                    }
                }
            }
            if poisoned {
                *slot = c;
                continue;
            }
            'outer: for t in c + 1..horizon {
                for p in paths {
                    let Some(v) = p.at(t) else { continue };
                    match owners.get(&v) {
                        Some(&o) if o != p.agent_id => {
                            *slot = t - 1;
                            break 'outer;
                        }
                        Some(_) => {}
                        None => {
                            owners.insert(v, p.agent_id);
                        }
                    }
                }
            }
        }

        let mut cuts_from = vec![0; horizon + 1];
        for c in (0..horizon).rev() {
            let e = max_end[c];
            cuts_from[c] = if e == usize::MAX || e + 1 >= horizon {
                0
            } else {
                1 + cuts_from[e + 1]
            };
        }

        Self {
            paths,
            horizon,
            at_time,
            visits,
            occupancy,
            max_end,
            cuts_from,
        }
    }

    pub(crate) fn horizon(&self) -> usize {
        self.horizon
    }

    /// Index of the other agents on their own (at least 1).
    pub(crate) fn index(&self) -> usize {
        1 + self.cuts_from.first().copied().unwrap_or(0)
    }

    #[inline]
    pub(crate) fn cells_at(&self, t: usize) -> &[Cell] {
        self.at_time.get(t).map_or(&[], Vec::as_slice)
    }

    #[inline]
    pub(crate) fn occupied(&self, cell: Cell, t: usize) -> bool {
        self.occupancy.contains_key(&(cell, t))
    }

    /// True when some other agent stands on `cell` at a time in `[a, b]`.
    #[inline]
    pub(crate) fn visited_in(&self, cell: Cell, a: usize, b: usize) -> bool {
        match self.visits.get(&cell) {
            None => false,
            Some(ts) => {
                let i = ts.partition_point(|&t| t < a);
                i < ts.len() && ts[i] <= b
            }
        }
    }

    /// True when moving `from -> to` arriving at `t` swaps with another agent.
    #[inline]
    pub(crate) fn swaps(&self, from: Cell, to: Cell, t: usize) -> bool {
        if from == to || t == 0 {
            return false;
        }
        match self.occupancy.get(&(to, t - 1)) {
            Some(&k) => {
                self.paths
                    .iter()
                    .find(|p| p.agent_id == k)
                    .and_then(|p| p.at(t))
                    == Some(from)
            }
            None => false,
        }
    }

    /// Whether a window opened at `c` survives to `t` for the others alone.
    #[inline]
    pub(crate) fn window_reaches(&self, c: usize, t: usize) -> bool {
        c >= self.horizon || t <= self.max_end[c]
    }

    /// Cuts the others force in a fresh window opened at `t`.
    #[inline]
    pub(crate) fn cuts_from(&self, t: usize) -> usize {
        self.cuts_from.get(t).copied().unwrap_or(0)
    }
}
