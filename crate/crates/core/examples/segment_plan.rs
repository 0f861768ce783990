//! Minimal segmentation of a fixed three-agent plan, with the witness that
//! forces each breakpoint.

use xmapf::plan::Plan;
use xmapf::segmentation::{boundary_witnesses, greedy_decompose};
use xmapf::world::Cell;

fn main() {
    let c = Cell::new;
    let plan = Plan::from_vertices(vec![
        vec![
            c(0, 0),
            c(1, 0),
            c(2, 0),
            c(3, 0),
            c(4, 0),
            c(4, 1),
            c(4, 2),
            c(4, 3),
        ],
        vec![c(1, 2), c(1, 1), c(1, 0), c(0, 0)],
        vec![
            c(3, 3),
            c(3, 3),
            c(3, 2),
            c(3, 1),
            c(3, 0),
            c(2, 0),
            c(1, 0),
        ],
    ])
    .expect("valid plan");

    let d = greedy_decompose(plan.paths()).expect("collision-free");
    println!("index {}: {d}", d.index());
    for (k, (a, b)) in d.windows().enumerate() {
        println!("  segment {}: t={a}..={}", k + 1, b - 1);
    }
    for w in boundary_witnesses(plan.paths(), &d).expect("index above 1") {
        println!("  {w}");
    }
}
