use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use xmapf::bench::{self, ExperimentConfig, TimeLimit};
use xmapf::render::{self, RenderSpec};
use xmapf::segmentation::{boundary_witnesses, decompose_with_collision_breaks};
use xmapf::world::{parse_fixture, parse_map, parse_scenario};
use xmapf::{
    greedy_decompose, solve_cbs, solve_xg_cbs, Budget, Instance, LowLevel, Outcome, Plan,
    SegBranch, SrFallback, Weight, XgCbsOptions, XgOptions,
};

const EXIT_UNSOLVABLE: u8 = 2;
const EXIT_NOT_FOUND: u8 = 3;
const EXIT_INPUT: u8 = 4;

/// Explainable multi-agent path finding on grids.
///
/// Set XMAPF_LOG (e.g. `XMAPF_LOG=info`) for log output.
#[derive(Debug, Parser)]
#[command(name = "xmapf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one instance.
    Solve(SolveArgs),
    /// Print the minimal segmentation of a plan dump.
    Segment(SegmentArgs),
    /// Draw one SVG per segment of a plan dump.
    Render(RenderArgs),
    /// Run an experiment suite and write per-run records as CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Cbs,
    XgCbs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Low {
    Astar,
    Xg,
    Wxg,
    Sr,
}

#[derive(Debug, clap::Args)]
struct SolveArgs {
    /// MovingAI map file.
    #[arg(long, required_unless_present = "fixture")]
    map: Option<PathBuf>,
    /// MovingAI scenario file; the first --agents rows are used.
    #[arg(long, required_unless_present = "fixture")]
    scen: Option<PathBuf>,
    /// ASCII instance instead of --map/--scen.
    #[arg(long, conflicts_with_all = ["map", "scen"])]
    fixture: Option<PathBuf>,
    /// Number of agents to read from the scenario (default: all rows).
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long, value_enum, default_value = "xg-cbs")]
    algo: Algo,
    #[arg(long = "low-level", value_enum, default_value = "xg")]
    low_level: Low,
    /// Index weight for --low-level wxg, in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    weight: f64,
    /// Maximum number of segments; unbounded when omitted.
    #[arg(long)]
    bound: Option<usize>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Limit on constraint-tree expansions.
    #[arg(long)]
    max_nodes: Option<u64>,
    /// Write the plan here (JSON when the name ends in .json, text otherwise).
    #[arg(long)]
    plan_out: Option<PathBuf>,
    /// Write segment SVGs into this directory.
    #[arg(long)]
    render_out: Option<PathBuf>,
    /// Write run statistics as JSON.
    #[arg(long)]
    stats_json: Option<PathBuf>,
    /// Which segment boundaries to branch on.
    #[arg(long, default_value = "all-boundaries")]
    seg_branch: SegBranch,
    /// Disable cycle pruning in xg/wxg.
    #[arg(long)]
    no_cycle_pruning: bool,
    /// Disable the shortest-path fallback in xg/wxg.
    #[arg(long)]
    no_fallback: bool,
    /// Maximum path length (vertices) for the low-level search.
    #[arg(long = "bound-b")]
    bound_b: Option<usize>,
    /// What sr does when no segmentation-respecting path exists.
    #[arg(long, default_value = "relaxed")]
    sr_fallback: SrFallback,
}

#[derive(Debug, clap::Args)]
struct SegmentArgs {
    /// Plan dump (text or JSON).
    plan: PathBuf,
}

#[derive(Debug, clap::Args)]
struct RenderArgs {
    /// Plan dump (text or JSON).
    plan: PathBuf,
    /// MovingAI map the plan runs on.
    #[arg(long)]
    map: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Cell size in pixels.
    #[arg(long, default_value_t = 32)]
    cell_size: u32,
}

#[derive(Debug, clap::Args)]
struct BenchArgs {
    /// Suite description (TOML).
    #[arg(long)]
    suite: PathBuf,
    /// Per-run records.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Aggregated table; printed to stdout when omitted.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Limit each run to this many constraint-tree expansions instead of
    /// the suite's wall-clock timeout.
    #[arg(long)]
    test_budget: Option<u64>,
    /// Overrides the suite's seed.
    #[arg(long)]
    seed: Option<u64>,
}

type CliResult = Result<u8, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("XMAPF_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Segment(a) => segment(a),
        Command::Render(a) => render_cmd(a),
        Command::Bench(a) => bench_cmd(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn read(path: &FsPath) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_instance(a: &SolveArgs) -> Result<Instance, Box<dyn std::error::Error>> {
    let inst = if let Some(f) = &a.fixture {
        parse_fixture(&read(f)?)?
    } else {
        let (map, scen) = (a.map.as_ref().unwrap(), a.scen.as_ref().unwrap());
        let world = parse_map(&read(map)?)?;
        let scen_text = read(scen)?;
        let rows = scen_text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with("version"))
            .count();
        parse_scenario(&scen_text, &world, a.agents.unwrap_or(rows))?
    };
    Ok(match a.agents {
        Some(n) if n < inst.agent_count() => inst.truncated(n),
        Some(n) if n > inst.agent_count() => {
            return Err(format!("instance has {} agents, {n} requested", inst.agent_count()).into())
        }
        _ => inst,
    })
}

fn low_level(a: &SolveArgs) -> Result<LowLevel, Box<dyn std::error::Error>> {
    let xg = XgOptions {
        eliminate_cycles: !a.no_cycle_pruning,
        fallback_after_budget: !a.no_fallback,
        check_consistency: false,
    };
    Ok(match a.low_level {
        Low::Astar => LowLevel::AStar,
        Low::Xg => LowLevel::Xg(xg),
        Low::Wxg => LowLevel::Wxg(Weight::new(a.weight)?, xg),
        Low::Sr => LowLevel::Sr,
    })
}

#[derive(Serialize)]
struct SolveReport<'a> {
    algorithm: String,
    bound: Option<usize>,
    outcome: &'a str,
    index: Option<usize>,
    breakpoints: Option<&'a [usize]>,
    sum_of_costs: Option<usize>,
    makespan: Option<usize>,
    stats: &'a xmapf::SearchStats,
}

fn solve(a: SolveArgs) -> CliResult {
    if a.bound == Some(0) {
        return Err("--bound must be at least 1".into());
    }
    let inst = load_instance(&a)?;
    let budget = Budget {
        timeout: a.timeout.map(Duration::from_secs_f64),
        max_nodes: a.max_nodes,
    };
    let (name, outcome) = match a.algo {
        Algo::Cbs => {
            let out = match a.bound_b {
                Some(b) => xmapf::highlevel::solve_cbs_with_length_bound(&inst, budget, b),
                None => solve_cbs(&inst, budget),
            };
            ("cbs".to_string(), out)
        }
        Algo::XgCbs => {
            let low = low_level(&a)?;
            let mut opts = XgCbsOptions::new(low, a.bound).with_budget(budget);
            opts.seg_branch = a.seg_branch;
            opts.length_bound = a.bound_b;
            opts.sr_fallback = a.sr_fallback;
            (format!("xg-cbs+{low}"), solve_xg_cbs(&inst, &opts))
        }
    };

    let stats = outcome.stats();
    match outcome.solution() {
        Some(s) => println!(
            "{name}: solved, index {}, sum of costs {}, makespan {}, {:.3} s, {} nodes",
            s.index(),
            s.plan.sum_of_costs(),
            s.plan.makespan(),
            stats.wall_time.as_secs_f64(),
            stats.nodes_expanded
        ),
        None => println!(
            "{name}: {}, {:.3} s, {} nodes",
            outcome.label(),
            stats.wall_time.as_secs_f64(),
            stats.nodes_expanded
        ),
    }

    if let Some(path) = &a.stats_json {
        let s = outcome.solution();
        let report = SolveReport {
            algorithm: name.clone(),
            bound: a.bound,
            outcome: outcome.label(),
            index: s.map(|s| s.index()),
            breakpoints: s.map(|s| s.decomposition.breakpoints()),
            sum_of_costs: s.map(|s| s.plan.sum_of_costs()),
            makespan: s.map(|s| s.plan.makespan()),
            stats,
        };
        fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    if let Some(s) = outcome.solution() {
        if let Some(path) = &a.plan_out {
            let text = if path.extension().is_some_and(|e| e == "json") {
                s.plan.to_json()
            } else {
                s.plan.to_text()
            };
            fs::write(path, text)?;
        }
        if let Some(dir) = &a.render_out {
            let docs = render::render_explanation(
                &s.plan,
                &s.decomposition,
                inst.world(),
                &RenderSpec::default(),
            )?;
            render::write_documents(dir, &docs)?;
        }
    }

    Ok(match outcome {
        Outcome::Solved(_) => 0,
        Outcome::Unsolvable(_) => EXIT_UNSOLVABLE,
        Outcome::NotFound(_) | Outcome::Timeout(_) => EXIT_NOT_FOUND,
    })
}

fn segment(a: SegmentArgs) -> CliResult {
    let plan = Plan::parse_dump(&read(&a.plan)?)?;
    let (d, note) = match greedy_decompose(plan.paths()) {
        Ok(d) => (d, ""),
        Err(_) => (
            decompose_with_collision_breaks(plan.paths()),
            " (plan collides; collisions cut segments)",
        ),
    };
    println!("index: {}{note}", d.index());
    println!(
        "breakpoints: {}",
        d.breakpoints()
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    );
    for (k, (s, e)) in d.windows().enumerate() {
        println!("segment {}: t={}..={}", k + 1, s, e - 1);
    }
    if note.is_empty() && d.index() > 1 {
        for w in boundary_witnesses(plan.paths(), &d)? {
            println!("{w}");
        }
    }
    Ok(0)
}

fn render_cmd(a: RenderArgs) -> CliResult {
    let plan = Plan::parse_dump(&read(&a.plan)?)?;
    let world = parse_map(&read(&a.map)?)?;
    let d = greedy_decompose(plan.paths())?;
    let spec = RenderSpec {
        cell_size: a.cell_size,
        ..RenderSpec::default()
    };
    let docs = render::render_explanation(&plan, &d, &world, &spec)?;
    render::write_documents(&a.out, &docs)?;
    println!("wrote {} files to {}", docs.len(), a.out.display());
    Ok(0)
}

fn bench_cmd(a: BenchArgs) -> CliResult {
    let mut cfg = ExperimentConfig::load(&a.suite)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let limit = match a.test_budget {
        Some(n) => TimeLimit::Expansions(n),
        None => TimeLimit::WallClock(cfg.timeout()),
    };
    let records = bench::run_suite(&cfg, a.jobs, limit)?;
    let out = fs::File::create(&a.out).map_err(|e| format!("{}: {e}", a.out.display()))?;
    bench::write_records_csv(&records, out)?;
    let summary = bench::aggregate(&records);
    match &a.summary {
        Some(p) => bench::write_summary_csv(&summary, fs::File::create(p)?)?,
        None => bench::write_summary_csv(&summary, std::io::stdout().lock())?,
    }
    Ok(0)
}
