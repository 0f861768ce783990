//! Runs every single-agent planner on one query: agent 1 must get from
//! (0,2) to (2,2) while agent 0 walks down column 1.

use xmapf::lowlevel::{combined_index_prefix, LowLevel, LowLevelQuery, SearchLimits};
use xmapf::plan::Path;
use xmapf::world::{AgentTask, Cell, GridWorld};

fn main() {
    let c = Cell::new;
    let world = GridWorld::open(5, 5).expect("grid");
    let others = vec![Path::new(0, vec![c(1, 1), c(1, 2), c(1, 3)])];
    let task = AgentTask {
        agent_id: 1,
        start: c(0, 2),
        goal: c(2, 2),
    };
    let heuristic = world.goal_distance_field(task.goal).expect("goal on grid");
    let q = LowLevelQuery {
        world: &world,
        task,
        heuristic: &heuristic,
        constraints: &[],
        others: &others,
        length_bound: 30,
        index_budget: None,
        limits: SearchLimits::none(),
    };
    for name in ["astar", "xg", "wxg:0.9", "wxg:0.1", "sr"] {
        let low: LowLevel = name.parse().expect("known planner");
        match low.plan(&q).path() {
            Some(p) => println!(
                "{low:>9}: length {:2}, combined index {}",
                p.len(),
                combined_index_prefix(&p, &others)
            ),
            None => println!("{low:>9}: no path"),
        }
    }
}
