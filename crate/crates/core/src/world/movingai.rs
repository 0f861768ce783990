//! MovingAI `.map` / `.scen` readers.

use super::{AgentTask, Cell, GridWorld, Instance, WorldError};

/// Parses a MovingAI grid map.
///
/// ```text
/// type octile
/// height H
/// width W
/// map
/// <H rows of W characters>
/// ```
///
/// `.`, `G` and `S` are passable; `@`, `T`, `O` and `W` are blocked.
pub fn parse_map(text: &str) -> Result<GridWorld, WorldError> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    let mut height = None;
    let mut width = None;
    let mut saw_map = false;

    for line in lines.by_ref() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == "map" {
            saw_map = true;
            break;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or_default();
        let value = parts.next();
        match key {
            "type" => {}
            "height" | "width" => {
                let v: u32 = value
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| WorldError::MalformedHeader(line.to_string()))?;
                if key == "height" {
                    height = Some(v);
                } else {
                    width = Some(v);
                }
            }
            _ => return Err(WorldError::MalformedHeader(line.to_string())),
        }
    }

    if !saw_map {
        return Err(WorldError::MalformedHeader("missing `map` line".into()));
    }
    let height = height.ok_or_else(|| WorldError::MalformedHeader("missing height".into()))?;
    let width = width.ok_or_else(|| WorldError::MalformedHeader("missing width".into()))?;
    if height == 0 || width == 0 {
        return Err(WorldError::EmptyGrid);
    }

    let mut blocked = Vec::new();
    let mut rows = 0u32;
    for line in lines {
        if rows == height {
            if line.trim().is_empty() {
                continue;
            }
            return Err(WorldError::DimensionMismatch(format!(
                "more than {height} rows"
            )));
        }
        let chars: Vec<char> = line.chars().collect();
        if chars.len() != width as usize {
            return Err(WorldError::DimensionMismatch(format!(
                "row {rows} has {} cells, expected {width}",
                chars.len()
            )));
        }
        for (x, ch) in chars.into_iter().enumerate() {
            let cell = Cell::new(x as u32, rows);
            match ch {
                '.' | 'G' | 'S' => {}
                '@' | 'T' | 'O' | 'W' => blocked.push(cell),
                _ => return Err(WorldError::UnknownCell { ch, cell }),
            }
        }
        rows += 1;
    }
    if rows != height {
        return Err(WorldError::DimensionMismatch(format!(
            "found {rows} rows, expected {height}"
        )));
    }
    GridWorld::new(width, height, blocked)
}

/// Serializes a world back into the MovingAI map format.
pub fn write_map(world: &GridWorld) -> String {
    let mut out = format!(
        "type octile\nheight {}\nwidth {}\nmap\n",
        world.height(),
        world.width()
    );
    for y in 0..world.height() {
        for x in 0..world.width() {
            out.push(if world.is_passable(Cell::new(x, y)) {
                '.'
            } else {
                '@'
            });
        }
        out.push('\n');
    }
    out
}

/// Reads the first `n` rows of a MovingAI scenario as agent tasks.
///
/// Columns: bucket, map, map-width, map-height, start-x, start-y, goal-x,
/// goal-y, optimal-length. Only the coordinates are used; the other columns
/// must be present and the numeric ones must parse.
pub fn parse_scenario(text: &str, world: &GridWorld, n: usize) -> Result<Instance, WorldError> {
    let mut rows = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if lineno == 0 && line.trim_start().starts_with("version") {
            continue;
        }
        rows.push((lineno + 1, line));
    }
    if n > rows.len() {
        return Err(WorldError::NotEnoughAgents {
            requested: n,
            available: rows.len(),
        });
    }

    let mut tasks = Vec::with_capacity(n);
    for (agent_id, (line, row)) in rows.into_iter().take(n).enumerate() {
        let cols: Vec<&str> = if row.contains('\t') {
            row.split('\t').map(str::trim).collect()
        } else {
            row.split_whitespace().collect()
        };
        if cols.len() < 9 {
            return Err(WorldError::MalformedScenario {
                line,
                reason: format!("expected 9 columns, found {}", cols.len()),
            });
        }
        let num = |i: usize| -> Result<u32, WorldError> {
            cols[i].parse().map_err(|_| WorldError::MalformedScenario {
                line,
                reason: format!("column {} is not an integer: {:?}", i + 1, cols[i]),
            })
        };
        num(0)?;
        num(2)?;
        num(3)?;
        cols[8]
            .parse::<f64>()
            .map_err(|_| WorldError::MalformedScenario {
                line,
                reason: format!("optimal length is not a number: {:?}", cols[8]),
            })?;
        let start = Cell::new(num(4)?, num(5)?);
        let goal = Cell::new(num(6)?, num(7)?);
        tasks.push(AgentTask {
            agent_id,
            start,
            goal,
        });
    }
    Instance::new(world.clone(), tasks)
}
