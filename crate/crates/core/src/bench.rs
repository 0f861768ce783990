//! Experiment protocol: a CBS baseline, then repeated bound lowering.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};
use std::time::Duration;

use log::info;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::highlevel::{solve_cbs, solve_xg_cbs, Budget, Outcome, XgCbsOptions};
use crate::lowlevel::{LowLevel, LowLevelError, Weight, XgOptions};
use crate::world::{parse_map, parse_scenario, Cell, GridWorld, Instance, WorldError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid suite file: {0}")]
    Config(#[from] toml::de::Error),
    #[error("invalid suite: {0}")]
    Invalid(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    LowLevel(#[from] LowLevelError),
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
}

/// How long a single solver call may run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeLimit {
    WallClock(Duration),
    /// Constraint-tree expansions; machine independent.
    Expansions(u64),
}

impl TimeLimit {
    fn budget(self) -> Budget {
        match self {
            TimeLimit::WallClock(d) => Budget::timeout(d),
            TimeLimit::Expansions(n) => Budget::nodes(n),
        }
    }
}

/// Instances of a suite: either files or seeded random grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSpec {
    Files {
        map: PathBuf,
        scen: PathBuf,
        agents: usize,
    },
    Generated {
        width: u32,
        height: u32,
        #[serde(default)]
        obstacle_ratio: f64,
        agents: usize,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    #[serde(default = "default_algo")]
    pub algo: String,
    #[serde(default = "default_low")]
    pub low_level: String,
    pub weight: Option<f64>,
}

fn default_algo() -> String {
    "xg-cbs".into()
}

fn default_low() -> String {
    "xg".into()
}

impl AlgorithmSpec {
    pub fn low_level(&self) -> Result<LowLevel, BenchError> {
        let low: LowLevel = self.low_level.parse()?;
        Ok(match (low, self.weight) {
            (LowLevel::Wxg(_, opts), Some(w)) => LowLevel::Wxg(Weight::new(w)?, opts),
            (other, _) => other,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instances: Vec<InstanceSpec>,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default = "default_timeout")]
    pub per_run_timeout_secs: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_timeout() -> f64 {
    300.0
}

impl ExperimentConfig {
    /// Parses a TOML suite. Relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: Option<&FsPath>) -> Result<Self, BenchError> {
        let mut cfg: ExperimentConfig = toml::from_str(text)?;
        if cfg.per_run_timeout_secs.is_nan() || cfg.per_run_timeout_secs <= 0.0 {
            return Err(BenchError::Invalid(
                "per_run_timeout_secs must be positive".into(),
            ));
        }
        for a in &cfg.algorithms {
            if a.algo != "xg-cbs" && a.algo != "cbs" {
                return Err(BenchError::Invalid(format!("unknown algo {:?}", a.algo)));
            }
            a.low_level()?;
        }
        if let Some(base) = base {
            for spec in &mut cfg.instances {
                if let InstanceSpec::Files { map, scen, .. } = spec {
                    if map.is_relative() {
                        *map = base.join(&*map);
                    }
                    if scen.is_relative() {
                        *scen = base.join(&*scen);
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &FsPath) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path.parent())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.per_run_timeout_secs)
    }

    /// Materializes every instance with a stable id.
    pub fn build_instances(&self) -> Result<Vec<(String, Instance)>, BenchError> {
        let mut out = Vec::new();
        for (k, spec) in self.instances.iter().enumerate() {
            match spec {
                InstanceSpec::Files { map, scen, agents } => {
                    let read = |p: &PathBuf| {
                        std::fs::read_to_string(p).map_err(|source| BenchError::Io {
                            path: p.clone(),
                            source,
                        })
                    };
                    let world = parse_map(&read(map)?)?;
                    let inst = parse_scenario(&read(scen)?, &world, *agents)?;
                    let name = map
                        .file_stem()
                        .map_or("map".into(), |s| s.to_string_lossy().to_string());
                    out.push((format!("{k:03}-{name}-n{agents}"), inst));
                }
                InstanceSpec::Generated {
                    width,
                    height,
                    obstacle_ratio,
                    agents,
                    count,
                } => {
                    for j in 0..*count {
                        let seed = self.seed ^ ((k as u64) << 32) ^ j as u64;
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let world = random_grid(*width, *height, *obstacle_ratio, &mut rng)?;
                        let inst = random_instance(&world, *agents, &mut rng)?;
                        out.push((format!("{k:03}-{width}x{height}-n{agents}-{j:03}"), inst));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Grid with each cell blocked independently with probability `ratio`.
pub fn random_grid(
    width: u32,
    height: u32,
    ratio: f64,
    rng: &mut impl Rng,
) -> Result<GridWorld, WorldError> {
    let mut blocked = Vec::new();
    for y in 0..height {
        for x in 0..width {
            if ratio > 0.0 && rng.gen_bool(ratio.min(1.0)) {
                blocked.push(Cell::new(x, y));
            }
        }
    }
    GridWorld::new(width, height, blocked)
}

/// Distinct starts and distinct goals drawn uniformly from the largest
/// connected component.
pub fn random_instance(
    world: &GridWorld,
    agents: usize,
    rng: &mut impl Rng,
) -> Result<Instance, WorldError> {
    let mut seen = vec![false; world.cell_count()];
    let mut largest: Vec<Cell> = Vec::new();
    for c in world.cells() {
        if seen[world.index_of(c)] {
            continue;
        }
        let comp = world.component_of(c);
        for &d in &comp {
            seen[world.index_of(d)] = true;
        }
        if comp.len() > largest.len() {
            largest = comp;
        }
    }
    largest.sort();
    if largest.len() < agents {
        return Err(WorldError::NotEnoughAgents {
            requested: agents,
            available: largest.len(),
        });
    }
    let starts: Vec<Cell> = largest.choose_multiple(rng, agents).copied().collect();
    let goals: Vec<Cell> = largest.choose_multiple(rng, agents).copied().collect();
    Instance::from_pairs(world.clone(), starts.into_iter().zip(goals))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Baseline,
    First,
    Best,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    Solved,
    Timeout,
    Unsolvable,
    /// Tree exhausted with an incomplete low-level planner.
    NotFound,
}

/// One row of the results table. Column order is the field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub width: u32,
    pub height: u32,
    pub agents: usize,
    pub algorithm: String,
    pub phase: Phase,
    /// Index bound of the run; empty for unbounded runs.
    pub bound: Option<usize>,
    pub outcome: RunOutcome,
    pub index: Option<usize>,
    pub sum_of_costs: Option<usize>,
    pub avg_cost: Option<f64>,
    pub makespan: Option<usize>,
    /// Empty when the run did not finish with a solution.
    pub wall_time_secs: Option<f64>,
    pub nodes_expanded: u64,
}

impl RunRecord {
    fn from_outcome(
        instance: &str,
        inst: &Instance,
        algorithm: &str,
        phase: Phase,
        bound: Option<usize>,
        out: &Outcome,
    ) -> Self {
        let stats = out.stats();
        let sol = out.solution();
        let n = inst.agent_count().max(1);
        RunRecord {
            instance: instance.to_string(),
            width: inst.world().width(),
            height: inst.world().height(),
            agents: inst.agent_count(),
            algorithm: algorithm.to_string(),
            phase,
            bound,
            outcome: match out {
                Outcome::Solved(_) => RunOutcome::Solved,
                Outcome::Timeout(_) => RunOutcome::Timeout,
                Outcome::Unsolvable(_) => RunOutcome::Unsolvable,
                Outcome::NotFound(_) => RunOutcome::NotFound,
            },
            index: sol.map(|s| s.index()),
            sum_of_costs: sol.map(|s| s.plan.sum_of_costs()),
            avg_cost: sol.map(|s| s.plan.sum_of_costs() as f64 / n as f64),
            makespan: sol.map(|s| s.plan.makespan()),
            wall_time_secs: sol.map(|s| s.stats.wall_time.as_secs_f64()),
            nodes_expanded: stats.nodes_expanded,
        }
    }

    pub fn solved(&self) -> bool {
        self.outcome == RunOutcome::Solved
    }

    fn with_phase(&self, phase: Phase) -> Self {
        RunRecord {
            phase,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub baseline: RunRecord,
    pub first: RunRecord,
    /// Last successful bounded run; equals `first` when nothing succeeded.
    pub best: RunRecord,
    /// Every bounded run in order, including the final failed one.
    pub attempts: Vec<RunRecord>,
}

pub fn algorithm_id(low: &LowLevel) -> String {
    format!("xg-cbs+{low}")
}

/// CBS, then the bounded search at the CBS index (or unbounded when CBS
/// fails), then lower the bound to one below each success until a run
/// fails. A success at index 1 ends the loop with a recorded, not
/// executed, unsolvable attempt at bound 0.
pub fn run_protocol(
    inst: &Instance,
    instance_id: &str,
    low: LowLevel,
    limit: TimeLimit,
) -> ProtocolResult {
    let baseline_out = solve_cbs(inst, limit.budget());
    let baseline = RunRecord::from_outcome(
        instance_id,
        inst,
        "cbs",
        Phase::Baseline,
        None,
        &baseline_out,
    );
    protocol_after_baseline(inst, instance_id, low, limit, baseline)
}

fn protocol_after_baseline(
    inst: &Instance,
    instance_id: &str,
    low: LowLevel,
    limit: TimeLimit,
    baseline: RunRecord,
) -> ProtocolResult {
    let algo = algorithm_id(&low);
    let run = |bound: Option<usize>| {
        let opts = XgCbsOptions::new(low, bound).with_budget(limit.budget());
        let out = solve_xg_cbs(inst, &opts);
        RunRecord::from_outcome(instance_id, inst, &algo, Phase::First, bound, &out)
    };

    let mut attempts = Vec::new();
    let mut bound = baseline.index;
    loop {
        let rec = if bound == Some(0) {
            let out = Outcome::Unsolvable(Default::default());
            RunRecord::from_outcome(instance_id, inst, &algo, Phase::First, bound, &out)
        } else {
            run(bound)
        };
        info!(
            "{instance_id} {algo} bound {:?}: {:?} index {:?}",
            bound, rec.outcome, rec.index
        );
        let next = rec.index;
        let ok = rec.solved();
        attempts.push(rec);
        if !ok {
            break;
        }
        bound = next.map(|i| i - 1);
    }

    let first = attempts[0].with_phase(Phase::First);
    let best = attempts
        .iter()
        .rev()
        .find(|r| r.solved())
        .unwrap_or(&attempts[0])
        .with_phase(Phase::Best);
    ProtocolResult {
        baseline,
        first,
        best,
        attempts,
    }
}

/// Runs every (instance, algorithm) pair on `jobs` worker threads and
/// returns baseline, first and best rows sorted by instance, algorithm
/// and phase. The baseline is shared by all algorithms of an instance.
pub fn run_suite(
    cfg: &ExperimentConfig,
    jobs: usize,
    limit: TimeLimit,
) -> Result<Vec<RunRecord>, BenchError> {
    let instances = cfg.build_instances()?;
    let lows: Vec<(String, Option<LowLevel>)> = cfg
        .algorithms
        .iter()
        .map(|a| {
            Ok((
                a.algo.clone(),
                if a.algo == "cbs" {
                    None
                } else {
                    Some(a.low_level()?)
                },
            ))
        })
        .collect::<Result<_, BenchError>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| BenchError::Invalid(e.to_string()))?;
    let mut records: Vec<RunRecord> = pool.install(|| {
        instances
            .par_iter()
            .flat_map_iter(|(id, inst)| {
                let out = solve_cbs(inst, limit.budget());
                let baseline =
                    RunRecord::from_outcome(id, inst, "cbs", Phase::Baseline, None, &out);
                let mut rows = vec![baseline.clone()];
                for (_, low) in &lows {
                    if let Some(low) = low {
                        let r = protocol_after_baseline(inst, id, *low, limit, baseline.clone());
                        rows.push(r.first);
                        rows.push(r.best);
                    }
                }
                rows
            })
            .collect()
    });
    records.sort_by(|a, b| {
        (&a.instance, &a.algorithm, a.phase).cmp(&(&b.instance, &b.algorithm, b.phase))
    });
    records.dedup_by(|a, b| {
        a.instance == b.instance && a.algorithm == b.algorithm && a.phase == b.phase
    });
    Ok(records)
}

pub fn write_records_csv(records: &[RunRecord], out: impl Write) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_records_csv(input: impl std::io::Read) -> Result<Vec<RunRecord>, BenchError> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize()
        .map(|row| row.map_err(BenchError::from))
        .collect()
}

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub grid: String,
    pub agents: usize,
    pub algorithm: String,
    pub phase: Phase,
    pub runs: usize,
    pub solved: usize,
    pub success_rate: f64,
    pub mean_index: Option<f64>,
    pub mean_avg_cost: Option<f64>,
    pub mean_time_secs: Option<f64>,
}

/// Success rate plus means over solved runs, per grid size, agent count,
/// algorithm and phase.
pub fn aggregate(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, usize, String, Phase), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((
                format!("{}x{}", r.width, r.height),
                r.agents,
                r.algorithm.clone(),
                r.phase,
            ))
            .or_default()
            .push(r);
    }
    let mean = |xs: Vec<f64>| {
        if xs.is_empty() {
            None
        } else {
            Some(xs.iter().sum::<f64>() / xs.len() as f64)
        }
    };
    groups
        .into_iter()
        .map(|((grid, agents, algorithm, phase), rs)| {
            let solved: Vec<&&RunRecord> = rs.iter().filter(|r| r.solved()).collect();
            SummaryRow {
                grid,
                agents,
                algorithm,
                phase,
                runs: rs.len(),
                solved: solved.len(),
                success_rate: solved.len() as f64 / rs.len() as f64,
                mean_index: mean(
                    solved
                        .iter()
                        .filter_map(|r| r.index)
                        .map(|i| i as f64)
                        .collect(),
                ),
                mean_avg_cost: mean(solved.iter().filter_map(|r| r.avg_cost).collect()),
                mean_time_secs: mean(solved.iter().filter_map(|r| r.wall_time_secs).collect()),
            }
        })
        .collect()
}

pub fn write_summary_csv(rows: &[SummaryRow], out: impl Write) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Default XG options for suites.
pub fn default_xg() -> LowLevel {
    LowLevel::Xg(XgOptions::default())
}
