//! Writes one SVG per segment of the road-crossing CBS plan.
//!
//! Usage: `cargo run --example render_explanation [OUT_DIR]`

use xmapf::render::{render_explanation, write_documents, RenderSpec};
use xmapf::world::parse_fixture;
use xmapf::{solve_cbs, Budget};

fn main() {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "explanation".into());
    let inst =
        parse_fixture(include_str!("../fixtures/road_crossing.txt")).expect("fixture parses");
    let s = solve_cbs(&inst, Budget::unlimited())
        .into_solution()
        .expect("solvable");
    let docs = render_explanation(
        &s.plan,
        &s.decomposition,
        inst.world(),
        &RenderSpec::default(),
    )
    .expect("plan matches its decomposition");
    write_documents(out.as_ref(), &docs).expect("output directory writable");
    for d in &docs {
        println!("{out}/{}", d.file_name);
    }
}
