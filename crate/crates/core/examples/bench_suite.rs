//! Runs the smoke suite with a small expansion budget and prints the
//! summary table as CSV.

use std::path::Path;

use xmapf::bench::{aggregate, run_suite, write_summary_csv, ExperimentConfig, TimeLimit};

fn main() {
    let suite = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/suites/smoke.toml");
    let cfg = ExperimentConfig::load(&suite).expect("suite loads");
    let records = run_suite(&cfg, 1, TimeLimit::Expansions(500)).expect("suite runs");
    for r in &records {
        println!(
            "{:<22} {:<16} {:?}: {:?} index {:?}",
            r.instance, r.algorithm, r.phase, r.outcome, r.index
        );
    }
    println!();
    write_summary_csv(&aggregate(&records), std::io::stdout().lock()).expect("stdout");
}
