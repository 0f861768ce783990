//! Inline ASCII instances for tests and examples.
//!
//! One text row per grid row. `.` is free, `@` is blocked, a lowercase
//! letter marks the start of an agent and the matching uppercase letter its
//! goal (`a`/`A` is agent 0, `b`/`B` agent 1, ...). Whitespace inside a row
//! is ignored, so rows may be written spaced out. A cell can hold only one
//! symbol, so an agent whose start equals another agent's goal must be built
//! through [`Instance::from_pairs`] instead.

use std::collections::BTreeMap;

use super::{Cell, GridWorld, Instance, WorldError};

pub fn parse_fixture(text: &str) -> Result<Instance, WorldError> {
    let rows: Vec<Vec<char>> = text
        .lines()
        .map(|l| l.chars().filter(|c| !c.is_whitespace()).collect::<Vec<_>>())
        .filter(|r| !r.is_empty())
        .collect();
    if rows.is_empty() {
        return Err(WorldError::MalformedFixture("no rows".into()));
    }
    let width = rows[0].len();
    let mut blocked = Vec::new();
    let mut starts = BTreeMap::new();
    let mut goals = BTreeMap::new();
    for (y, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(WorldError::MalformedFixture(format!(
                "row {y} has {} cells, expected {width}",
                row.len()
            )));
        }
        for (x, &ch) in row.iter().enumerate() {
            let cell = Cell::new(x as u32, y as u32);
            match ch {
                '.' => {}
                '@' => blocked.push(cell),
                'a'..='z' => {
                    if starts.insert(ch as u8 - b'a', cell).is_some() {
                        return Err(WorldError::MalformedFixture(format!(
                            "duplicate start {ch}"
                        )));
                    }
                }
                'A'..='Z' => {
                    if goals.insert(ch as u8 - b'A', cell).is_some() {
                        return Err(WorldError::MalformedFixture(format!("duplicate goal {ch}")));
                    }
                }
                _ => return Err(WorldError::UnknownCell { ch, cell }),
            }
        }
    }
    let world = GridWorld::new(width as u32, rows.len() as u32, blocked)?;
    let mut pairs = Vec::new();
    for (k, (&id, &start)) in starts.iter().enumerate() {
        if id as usize != k {
            return Err(WorldError::MalformedFixture(format!(
                "agent letters must be consecutive from 'a'; missing {}",
                (b'a' + k as u8) as char
            )));
        }
        let goal = goals.get(&id).copied().ok_or_else(|| {
            WorldError::MalformedFixture(format!("no goal for agent {}", (b'a' + id) as char))
        })?;
        pairs.push((start, goal));
    }
    if goals.len() != starts.len() {
        return Err(WorldError::MalformedFixture("goal without start".into()));
    }
    Instance::from_pairs(world, pairs)
}

/// Inverse of [`parse_fixture`] where every start and goal has its own cell.
pub fn render_fixture(inst: &Instance) -> String {
    let w = inst.world();
    let mut grid: Vec<Vec<char>> = (0..w.height())
        .map(|y| {
            (0..w.width())
                .map(|x| {
                    if w.is_passable(Cell::new(x, y)) {
                        '.'
                    } else {
                        '@'
                    }
                })
                .collect()
        })
        .collect();
    for t in inst.tasks() {
        grid[t.start.y as usize][t.start.x as usize] = (b'a' + t.agent_id as u8) as char;
        grid[t.goal.y as usize][t.goal.x as usize] = (b'A' + t.agent_id as u8) as char;
    }
    grid.into_iter()
        .map(|r| r.into_iter().collect::<String>() + "\n")
        .collect()
}
