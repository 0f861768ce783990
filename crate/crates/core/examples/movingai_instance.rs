//! Loads a MovingAI map and scenario and solves it with the
//! segment-respecting planner at index bound 2.

use xmapf::world::{parse_map, parse_scenario};
use xmapf::{solve_xg_cbs, LowLevel, XgCbsOptions};

fn main() {
    let world = parse_map(include_str!("../fixtures/junction.map")).expect("map parses");
    let inst = parse_scenario(include_str!("../fixtures/junction.scen"), &world, 4)
        .expect("scenario parses");
    let out = solve_xg_cbs(&inst, &XgCbsOptions::new(LowLevel::Sr, Some(2)));
    match out.solution() {
        Some(s) => {
            println!(
                "index {} ({}), cost {}",
                s.index(),
                s.decomposition,
                s.plan.sum_of_costs()
            );
            print!("{}", s.plan.to_text());
        }
        None => println!("{}", out.label()),
    }
}
