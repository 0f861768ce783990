//! Solves the four-agent road crossing with plain CBS and with XG-CBS at
//! index bound 1, and prints both plans.

use xmapf::world::parse_fixture;
use xmapf::{solve_cbs, solve_xg_cbs, Budget, LowLevel, XgCbsOptions, XgOptions};

fn main() {
    let inst =
        parse_fixture(include_str!("../fixtures/road_crossing.txt")).expect("fixture parses");

    let cbs = solve_cbs(&inst, Budget::unlimited());
    let s = cbs.solution().expect("cbs solves the crossing");
    println!("CBS: index {}, cost {}", s.index(), s.plan.sum_of_costs());
    print!("{}", s.plan.to_text());

    let opts = XgCbsOptions::new(LowLevel::Xg(XgOptions::default()), Some(1));
    let xg = solve_xg_cbs(&inst, &opts);
    let s = xg
        .solution()
        .expect("xg-cbs solves the crossing at index 1");
    println!(
        "\nXG-CBS (r=1): index {}, cost {}, {:.3} s",
        s.index(),
        s.plan.sum_of_costs(),
        s.stats.wall_time.as_secs_f64()
    );
    print!("{}", s.plan.to_text());
}
