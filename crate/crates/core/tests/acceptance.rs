//! End-to-end acceptance checks. Each criterion prints one
//! `criterion N: PASS` / `criterion N: FAIL (...)` line.

mod common;

use std::thread;
use std::time::{Duration, Instant};

use common::*;
use rand::Rng;
use xmapf::bench::{self, run_protocol, RunOutcome, TimeLimit};
use xmapf::lowlevel::{
    combined_index_prefix, default_length_bound, sr_astar, xg_astar, LowLevelQuery, PlanOutcome,
    SearchLimits,
};
use xmapf::plan::{first_collision, path_satisfies, Constraint, Path};
use xmapf::render::{check_svg_structure, render_explanation, RenderSpec};
use xmapf::segmentation::{greedy_decompose, index_with_collision_breaks};
use xmapf::world::{parse_fixture, AgentTask, Cell, DistanceField, GridWorld, Instance};
use xmapf::{
    solve_cbs, solve_xg_cbs, Budget, LowLevel, Outcome, Solution, XgCbsOptions, XgOptions,
};

/// A solution together with what it was asked to satisfy.
struct Emitted {
    source: &'static str,
    inst: Instance,
    bound: Option<usize>,
    solution: Solution,
}

type Verdict = Result<(), String>;

fn xg() -> LowLevel {
    LowLevel::Xg(XgOptions::default())
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Verdict {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_plan(world: &GridWorld, r: &mut rand_chacha::ChaCha8Rng) -> Vec<Path> {
    loop {
        let n = r.gen_range(1..=4);
        let cells: Vec<Cell> = world.cells().collect();
        let paths: Vec<Path> = (0..n)
            .map(|i| {
                let start = cells[r.gen_range(0..cells.len())];
                let len = r.gen_range(1..=10);
                random_walk(world, i, start, len, r)
            })
            .collect();
        if !brute_collides(&paths) {
            return paths;
        }
    }
}

fn criterion_1() -> (Verdict, Vec<Vec<Path>>) {
    let world = GridWorld::open(5, 5).unwrap();
    let mut r = rng(1);
    let mut plans = Vec::new();
    let mut mismatches = 0;
    for _ in 0..500 {
        let paths = random_plan(&world, &mut r);
        let d = greedy_decompose(&paths).expect("collision-free");
        if d.index() != dp_min_index(&paths) {
            mismatches += 1;
        }
        plans.push(paths);
    }
    (
        check(mismatches == 0, || {
            format!("{mismatches} mismatches of 500")
        }),
        plans,
    )
}

fn all_two_agent_instances(world: &GridWorld) -> Vec<Instance> {
    let cells: Vec<Cell> = world.cells().collect();
    let mut out = Vec::new();
    for &s0 in &cells {
        for &s1 in &cells {
            for &g0 in &cells {
                for &g1 in &cells {
                    if s0 != s1 && g0 != g1 {
                        out.push(
                            Instance::from_pairs(world.clone(), [(s0, g0), (s1, g1)]).unwrap(),
                        );
                    }
                }
            }
        }
    }
    out
}

fn criterion_2_suite() -> Vec<Instance> {
    let mut suite = all_two_agent_instances(&GridWorld::open(3, 3).unwrap());
    let four = GridWorld::open(4, 4).unwrap();
    let mut r = rng(2);
    suite.extend((0..200).map(|_| random_instance(&four, 2, &mut r)));
    suite
}

/// Node budget for runs the oracle says cannot succeed; exhausting the
/// constraint tree below the optimum is not tractable.
const BELOW_OPT_NODES: u64 = 100;

fn criterion_2(suite: &[Instance]) -> (Verdict, Vec<Emitted>) {
    let mut emitted = Vec::new();
    let mut errors = Vec::new();
    for inst in suite {
        let opt = joint_optimal_index(inst);
        for r in 1..=3usize {
            let expect = opt.is_some_and(|o| o <= r);
            let budget = if expect {
                Budget::timeout(Duration::from_secs(10))
            } else {
                Budget::nodes(BELOW_OPT_NODES)
            };
            let out = solve_xg_cbs(inst, &XgCbsOptions::new(xg(), Some(r)).with_budget(budget));
            match out {
                Outcome::Solved(s) => {
                    if !expect {
                        errors.push(format!("{:?} r={r}: solved, oracle {opt:?}", inst.tasks()));
                    } else if s.index() > r {
                        errors.push(format!("{:?} r={r}: index {}", inst.tasks(), s.index()));
                    }
                    emitted.push(Emitted {
                        source: "criterion 2",
                        inst: inst.clone(),
                        bound: Some(r),
                        solution: s,
                    });
                }
                other if expect => {
                    errors.push(format!(
                        "{:?} r={r}: {}, oracle {opt:?}",
                        inst.tasks(),
                        other.label()
                    ));
                }
                _ => {}
            }
        }
    }
    let verdict = check(errors.is_empty(), || {
        format!("{} disagreements, first: {}", errors.len(), errors[0])
    });
    (verdict, emitted)
}

fn road_crossing() -> Instance {
    parse_fixture(include_str!("../fixtures/road_crossing.txt")).unwrap()
}

fn criterion_3() -> (Verdict, Vec<Emitted>) {
    let inst = road_crossing();
    let t = Instant::now();
    let xg_out = solve_xg_cbs(&inst, &XgCbsOptions::new(xg(), Some(1)));
    let elapsed = t.elapsed();
    let cbs_out = solve_cbs(&inst, Budget::timeout(Duration::from_secs(60)));
    let mut emitted = Vec::new();
    let mut errors = Vec::new();
    match xg_out {
        Outcome::Solved(s) => {
            if s.index() != 1 {
                errors.push(format!("xg-cbs index {}", s.index()));
            }
            if elapsed > Duration::from_secs(5) {
                errors.push(format!("xg-cbs took {elapsed:?}"));
            }
            emitted.push(Emitted {
                source: "criterion 3 xg-cbs",
                inst: inst.clone(),
                bound: Some(1),
                solution: s,
            });
        }
        other => errors.push(format!("xg-cbs: {}", other.label())),
    }
    match cbs_out {
        Outcome::Solved(s) => {
            if s.index() < 2 {
                errors.push(format!("cbs index {}", s.index()));
            }
            emitted.push(Emitted {
                source: "criterion 3 cbs",
                inst,
                bound: None,
                solution: s,
            });
        }
        other => errors.push(format!("cbs: {}", other.label())),
    }
    (check(errors.is_empty(), || errors.join("; ")), emitted)
}

const C4_RUN_LIMIT: Duration = Duration::from_secs(30);

fn criterion_4() -> (Verdict, Vec<Emitted>) {
    let mut emitted = Vec::new();
    let (mut cbs_idx, mut sr_idx) = (Vec::new(), Vec::new());
    let mut slow = Vec::new();
    for seed in 0..10u64 {
        let mut r = rng(400 + seed);
        let world = bench::random_grid(33, 33, 0.1, &mut r).unwrap();
        let inst = bench::random_instance(&world, 30, &mut r).unwrap();

        let t = Instant::now();
        let cbs = solve_cbs(&inst, Budget::timeout(C4_RUN_LIMIT));
        if t.elapsed() > Duration::from_secs(300) {
            slow.push(seed);
        }
        if let Outcome::Solved(s) = cbs {
            cbs_idx.push(s.index());
            emitted.push(Emitted {
                source: "criterion 4 cbs",
                inst: inst.clone(),
                bound: None,
                solution: s,
            });
        }

        let sr = |bound| {
            let t = Instant::now();
            let out = solve_xg_cbs(
                &inst,
                &XgCbsOptions::new(LowLevel::Sr, bound).with_budget(Budget::timeout(C4_RUN_LIMIT)),
            );
            (out, t.elapsed())
        };
        let (first, took) = sr(None);
        if took > Duration::from_secs(300) {
            slow.push(seed);
        }
        let Outcome::Solved(first) = first else {
            continue;
        };
        let mut best = first.index();
        if best > 1 {
            let (lowered, took) = sr(Some(best - 1));
            if took > Duration::from_secs(300) {
                slow.push(seed);
            }
            if let Outcome::Solved(s) = lowered {
                best = s.index();
                emitted.push(Emitted {
                    source: "criterion 4 sr lowered",
                    inst: inst.clone(),
                    bound: Some(first.index() - 1),
                    solution: s,
                });
            }
        }
        sr_idx.push(best);
        emitted.push(Emitted {
            source: "criterion 4 sr",
            inst,
            bound: None,
            solution: first,
        });
    }
    let mean = |v: &[usize]| v.iter().sum::<usize>() as f64 / v.len().max(1) as f64;
    let (mc, ms) = (mean(&cbs_idx), mean(&sr_idx));
    eprintln!(
        "criterion 4: cbs solved {} mean index {mc:.2}; sr solved {} mean index {ms:.2}",
        cbs_idx.len(),
        sr_idx.len()
    );
    let ok = !sr_idx.is_empty()
        && ms <= 0.5 * mc
        && sr_idx.len() + 1 >= cbs_idx.len()
        && slow.is_empty();
    let verdict = check(ok, || {
        format!(
            "cbs {}/10 mean {mc:.2}, sr {}/10 mean {ms:.2}, over-time seeds {slow:?}",
            cbs_idx.len(),
            sr_idx.len()
        )
    });
    (verdict, emitted)
}

fn criterion_5(plans: &[Vec<Path>], emitted: &[Emitted]) -> Verdict {
    let mut errors = Vec::new();
    for paths in plans {
        let d = greedy_decompose(paths).unwrap();
        if !breakpoints_valid(paths, d.breakpoints()) {
            errors.push("criterion 1 plan: segment not disjoint".to_string());
        }
    }
    for e in emitted {
        let s = &e.solution;
        let paths = s.plan.paths();
        let what = |m: &str| format!("{}: {m}", e.source);
        if !s.plan.is_complete_for(&e.inst) {
            errors.push(what("plan does not solve the instance"));
        }
        if first_collision(paths).is_some() || brute_collides(paths) {
            errors.push(what("collision"));
        }
        if !paths.iter().all(|p| path_satisfies(p, &s.constraints)) {
            errors.push(what("constraint violated"));
        }
        if e.bound.is_some_and(|r| s.index() > r) {
            errors.push(what("index above bound"));
        }
        if s.index() != greedy_decompose(paths).map(|d| d.index()).unwrap_or(0) {
            errors.push(what("reported index is not the greedy index"));
        }
        if !breakpoints_valid(paths, s.decomposition.breakpoints()) {
            errors.push(what("segment not disjoint"));
        }
    }
    check(errors.is_empty(), || {
        format!("{} violations, first: {}", errors.len(), errors[0])
    })
}

fn criterion_6() -> Verdict {
    let mut r = rng(6);
    let mut found = 0;
    let mut violations = 0;
    let mut attempts = 0;
    while found < 200 && attempts < 5000 {
        attempts += 1;
        let world = bench::random_grid(9, 9, 0.15, &mut r).unwrap();
        let inst = random_instance(&world, 2, &mut r);
        let len = r.gen_range(2..=20);
        let other = random_walk(&world, 0, inst.tasks()[0].start, len, &mut r);
        let task = inst.tasks()[1];
        if other.vertices.contains(&task.start) {
            continue;
        }
        let heuristic = world.goal_distance_field(task.goal).unwrap();
        let others = vec![other];
        let q = LowLevelQuery {
            world: &world,
            task,
            heuristic: &heuristic,
            constraints: &[],
            others: &others,
            length_bound: default_length_bound(&world, None, 2),
            index_budget: None,
            limits: SearchLimits::none(),
        };
        if let PlanOutcome::Found(p) = sr_astar(&q) {
            found += 1;
            let mut all = others.clone();
            all.push(p);
            if index_with_collision_breaks(&all) != index_with_collision_breaks(&others) {
                violations += 1;
            }
        }
    }
    check(found == 200 && violations == 0, || {
        format!("{violations} violations over {found} queries")
    })
}

fn criterion_7() -> Verdict {
    let inst = parse_fixture(include_str!("../fixtures/bench_protocol.txt")).unwrap();
    let opt = joint_optimal_index(&inst);
    let p = run_protocol(&inst, "bench_protocol", xg(), TimeLimit::Expansions(2000));
    let below = p.attempts.iter().find(|a| a.bound == Some(1));
    let ok = opt == Some(2)
        && p.baseline.index == Some(3)
        && p.first.bound == Some(3)
        && p.best.index == Some(2)
        && below.is_some_and(|a| matches!(a.outcome, RunOutcome::Unsolvable | RunOutcome::Timeout));
    check(ok, || {
        format!(
            "oracle {opt:?}, baseline {:?}, first bound {:?}, best {:?}, attempts {:?}",
            p.baseline.index,
            p.first.bound,
            p.best.index,
            p.attempts
                .iter()
                .map(|a| (a.bound, a.outcome))
                .collect::<Vec<_>>()
        )
    })
}

fn criterion_8(suite: &[Instance]) -> Verdict {
    let with = XgOptions::default();
    let without = XgOptions {
        eliminate_cycles: false,
        ..with
    };
    let mut mismatches = Vec::new();
    let mut queries = 0;
    for inst in suite {
        let world = inst.world();
        let [t0, t1] = [inst.tasks()[0], inst.tasks()[1]];
        let h0 = world.goal_distance_field(t0.goal).unwrap();
        let h1 = world.goal_distance_field(t1.goal).unwrap();
        let base = |task, heuristic, others, constraints| {
            query(world, task, heuristic, others, constraints)
        };
        let q0 = base(t0, &h0, &[], &[]);
        let Some(p0) = xg_astar(&q0, with).path() else {
            continue;
        };
        let others = vec![p0.clone()];
        let mut cases = vec![vec![]];
        let root = vec![p0, xg_astar(&base(t1, &h1, &[], &[]), with).path().unwrap()];
        if let Some(c) = first_collision(&root) {
            cases.push(
                c.split()
                    .iter()
                    .copied()
                    .filter(|c| c.agent_id == 1)
                    .collect(),
            );
        }
        for constraints in &cases {
            let q = base(t1, &h1, &others, constraints);
            queries += 1;
            let a = xg_astar(&q, with)
                .path()
                .map(|p| combined_index_prefix(&p, &others));
            let b = xg_astar(&q, without)
                .path()
                .map(|p| combined_index_prefix(&p, &others));
            if a != b {
                mismatches.push(format!(
                    "{:?} {constraints:?}: {a:?} vs {b:?}",
                    inst.tasks()
                ));
            }
        }
    }
    check(mismatches.is_empty(), || {
        format!(
            "{} mismatches of {queries}, first: {}",
            mismatches.len(),
            mismatches[0]
        )
    })
}

fn query<'a>(
    world: &'a GridWorld,
    task: AgentTask,
    heuristic: &'a DistanceField,
    others: &'a [Path],
    constraints: &'a [Constraint],
) -> LowLevelQuery<'a> {
    LowLevelQuery {
        world,
        task,
        heuristic,
        constraints,
        others,
        length_bound: default_length_bound(world, None, 2),
        index_budget: None,
        limits: SearchLimits::none(),
    }
}

fn criterion_9(emitted: &[Emitted]) -> Verdict {
    let mut errors = Vec::new();
    for e in emitted
        .iter()
        .filter(|e| e.source.starts_with("criterion 3"))
    {
        let s = &e.solution;
        match render_explanation(
            &s.plan,
            &s.decomposition,
            e.inst.world(),
            &RenderSpec::default(),
        ) {
            Ok(docs) => {
                if docs.len() != s.index() + 1 {
                    errors.push(format!(
                        "{}: {} documents for index {}",
                        e.source,
                        docs.len(),
                        s.index()
                    ));
                }
                for d in &docs {
                    if let Err(m) = check_svg_structure(&d.contents) {
                        errors.push(format!("{} {}: {m}", e.source, d.file_name));
                    }
                }
            }
            Err(err) => errors.push(format!("{}: {err}", e.source)),
        }
    }
    if emitted.iter().all(|e| !e.source.starts_with("criterion 3")) {
        errors.push("no solutions from criterion 3".into());
    }
    check(errors.is_empty(), || errors.join("; "))
}

fn join<T>(h: thread::ScopedJoinHandle<'_, T>) -> Result<T, String> {
    h.join().map_err(|e| {
        e.downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())
    })
}

fn main() {
    let suite = criterion_2_suite();
    let mut verdicts: Vec<(usize, Verdict)> = Vec::new();
    let mut plans = Vec::new();
    let mut emitted = Vec::new();

    thread::scope(|s| {
        let h1 = s.spawn(criterion_1);
        let h2 = s.spawn(|| criterion_2(&suite));
        let h3 = s.spawn(criterion_3);
        let h4 = s.spawn(criterion_4);
        let h6 = s.spawn(criterion_6);
        let h7 = s.spawn(criterion_7);
        let h8 = s.spawn(|| criterion_8(&suite));

        match join(h1) {
            Ok((v, p)) => {
                verdicts.push((1, v));
                plans = p;
            }
            Err(m) => verdicts.push((1, Err(format!("panicked: {m}")))),
        }
        for (n, h) in [(2, h2), (3, h3), (4, h4)] {
            match join(h) {
                Ok((v, e)) => {
                    verdicts.push((n, v));
                    emitted.extend(e);
                }
                Err(m) => verdicts.push((n, Err(format!("panicked: {m}")))),
            }
        }
        for (n, h) in [(6, h6), (7, h7), (8, h8)] {
            verdicts.push((n, join(h).unwrap_or_else(|m| Err(format!("panicked: {m}")))));
        }
    });
    verdicts.push((5, criterion_5(&plans, &emitted)));
    verdicts.push((9, criterion_9(&emitted)));
    verdicts.sort_by_key(|(n, _)| *n);

    for (n, v) in &verdicts {
        match v {
            Ok(()) => println!("criterion {n}: PASS"),
            Err(m) => println!("criterion {n}: FAIL ({m})"),
        }
    }
    let failed: Vec<usize> = verdicts
        .iter()
        .filter(|(_, v)| v.is_err())
        .map(|(n, _)| *n)
        .collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
