mod common;

use std::time::Duration;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use xmapf::highlevel::{conflict_check, ConflictCheck, SegBranch, SrFallback};
use xmapf::lowlevel::{Weight, XgOptions};
use xmapf::plan::{first_collision, path_satisfies, Conflict, Constraint, Plan};
use xmapf::world::{parse_fixture, Cell, GridWorld, Instance};
use xmapf::{solve_cbs, solve_xg_cbs, Budget, LowLevel, Outcome, Solution, XgCbsOptions};

fn c(x: u32, y: u32) -> Cell {
    Cell::new(x, y)
}

fn xg() -> LowLevel {
    LowLevel::Xg(XgOptions::default())
}

fn assert_valid(inst: &Instance, s: &Solution, bound: Option<usize>) {
    let paths = s.plan.paths();
    assert!(
        s.plan.is_complete_for(inst),
        "plan does not solve the instance"
    );
    assert!(first_collision(paths).is_none());
    assert!(!brute_collides(paths));
    assert!(paths.iter().all(|p| path_satisfies(p, &s.constraints)));
    assert!(breakpoints_valid(paths, s.decomposition.breakpoints()));
    assert_eq!(s.index(), dp_min_index(paths));
    if let Some(r) = bound {
        assert!(s.index() <= r, "index {} above bound {r}", s.index());
    }
}

/// Plus-shaped grid: both agents' shortest paths meet in the middle at t=2.
fn plus() -> Instance {
    parse_fixture(
        "@ @ b @ @
         @ @ . @ @
         a . . . A
         @ @ . @ @
         @ @ B @ @",
    )
    .unwrap()
}

#[test]
fn plus_root_conflict_splits_on_center() {
    let inst = plus();
    let Outcome::Solved(s) = solve_cbs(&inst, Budget::unlimited()) else {
        panic!()
    };
    assert_valid(&inst, &s, None);
    assert_eq!(s.plan.sum_of_costs(), 9);
    assert_eq!(s.stats.nodes_expanded, 2);
    assert_eq!(s.constraints.len(), 1);
    assert_eq!(s.constraints[0].time(), 2);

    let straight = Plan::from_vertices(vec![
        vec![c(0, 2), c(1, 2), c(2, 2), c(3, 2), c(4, 2)],
        vec![c(2, 0), c(2, 1), c(2, 2), c(2, 3), c(2, 4)],
    ])
    .unwrap();
    let ConflictCheck::Collision(conflict) = conflict_check(&straight, None) else {
        panic!()
    };
    assert_eq!(
        conflict,
        Conflict::Vertex {
            i: 0,
            j: 1,
            cell: c(2, 2),
            time: 2
        }
    );
    assert_eq!(
        conflict.split(),
        [
            Constraint::vertex(0, c(2, 2), 2),
            Constraint::vertex(1, c(2, 2), 2)
        ]
    );
}

#[test]
fn conflict_check_reports_segments_over_bound() {
    let plan = Plan::from_vertices(vec![
        vec![c(1, 0), c(1, 1), c(1, 2), c(1, 3)],
        vec![c(3, 1), c(3, 1), c(2, 1), c(1, 1)],
    ])
    .unwrap();
    assert_eq!(conflict_check(&plan, Some(2)), ConflictCheck::Valid);
    assert_eq!(conflict_check(&plan, None), ConflictCheck::Valid);
    let ConflictCheck::Segmentation(ws) = conflict_check(&plan, Some(1)) else {
        panic!()
    };
    assert_eq!(ws.len(), 1);
    assert_eq!(ws[0].cell, c(1, 1));
}

#[test]
fn odd_corridor_swap_is_unsolvable() {
    let world = GridWorld::new(3, 1, []).unwrap();
    let inst = Instance::from_pairs(world, [(c(0, 0), c(2, 0)), (c(2, 0), c(0, 0))]).unwrap();
    assert!(!joint_solvable(&inst));
    let mut opts = XgCbsOptions::new(xg(), Some(2));
    opts.length_bound = Some(5);
    let out = solve_xg_cbs(&inst, &opts);
    assert!(matches!(out, Outcome::Unsolvable(_)), "{}", out.label());
    let out = xmapf::highlevel::solve_cbs_with_length_bound(&inst, Budget::unlimited(), 5);
    assert!(matches!(out, Outcome::Unsolvable(_)), "{}", out.label());
}

#[test]
fn zero_bound_is_rejected() {
    let out = solve_xg_cbs(&plus(), &XgCbsOptions::new(xg(), Some(0)));
    assert!(matches!(out, Outcome::Unsolvable(_)));
}

#[test]
fn road_crossing_index_one() {
    let inst = parse_fixture(include_str!("../fixtures/road_crossing.txt")).unwrap();
    let Outcome::Solved(s) = solve_xg_cbs(&inst, &XgCbsOptions::new(xg(), Some(1))) else {
        panic!()
    };
    assert_valid(&inst, &s, Some(1));
    let Outcome::Solved(cbs) = solve_cbs(&inst, Budget::unlimited()) else {
        panic!()
    };
    assert_valid(&inst, &cbs, None);
    assert!(cbs.index() >= 2);
    assert!(cbs.plan.sum_of_costs() <= s.plan.sum_of_costs());
}

#[test]
fn first_boundary_branching_also_solves() {
    let inst = parse_fixture(include_str!("../fixtures/road_crossing.txt")).unwrap();
    let mut opts = XgCbsOptions::new(xg(), Some(1));
    opts.seg_branch = SegBranch::FirstBoundary;
    let Outcome::Solved(s) = solve_xg_cbs(&inst, &opts) else {
        panic!()
    };
    assert_valid(&inst, &s, Some(1));
}

#[test]
fn every_planner_solves_the_bench_fixture() {
    let inst = parse_fixture(include_str!("../fixtures/bench_protocol.txt")).unwrap();
    let lows = [
        LowLevel::AStar,
        xg(),
        LowLevel::Wxg(Weight::new(0.5).unwrap(), XgOptions::default()),
        LowLevel::Sr,
    ];
    for low in lows {
        let opts = XgCbsOptions::new(low, Some(2)).with_budget(Budget::nodes(5000));
        match solve_xg_cbs(&inst, &opts) {
            Outcome::Solved(s) => assert_valid(&inst, &s, Some(2)),
            other => assert!(!low.is_complete(), "{low}: {}", other.label()),
        }
    }
}

#[test]
fn node_budget_stops_search() {
    let inst = parse_fixture(include_str!("../fixtures/bench_protocol.txt")).unwrap();
    let out = solve_xg_cbs(
        &inst,
        &XgCbsOptions::new(xg(), Some(1)).with_budget(Budget::nodes(20)),
    );
    assert!(matches!(out, Outcome::Timeout(_) | Outcome::Unsolvable(_)));
    assert!(out.stats().nodes_expanded <= 20);
}

#[test]
fn wall_clock_budget_stops_search() {
    let mut r = rng(3);
    let world = xmapf::bench::random_grid(33, 33, 0.1, &mut r).unwrap();
    let inst = xmapf::bench::random_instance(&world, 30, &mut r).unwrap();
    let opts =
        XgCbsOptions::new(xg(), Some(1)).with_budget(Budget::timeout(Duration::from_millis(200)));
    let out = solve_xg_cbs(&inst, &opts);
    assert!(out.stats().wall_time < Duration::from_secs(5));
    if let Outcome::Solved(s) = out {
        assert_valid(&inst, &s, Some(1));
    }
}

#[test]
fn sr_without_fallback_can_fail_where_relaxed_succeeds() {
    // Agent b must cross agent a's corridor; no segment-respecting path exists.
    let inst = parse_fixture(
        "@ b @
         a . A
         @ B @",
    )
    .unwrap();
    let mut opts = XgCbsOptions::new(LowLevel::Sr, None);
    opts.sr_fallback = SrFallback::None;
    assert!(matches!(solve_xg_cbs(&inst, &opts), Outcome::NotFound(_)));
    opts.sr_fallback = SrFallback::Relaxed;
    let Outcome::Solved(s) = solve_xg_cbs(&inst, &opts) else {
        panic!()
    };
    assert_valid(&inst, &s, None);
}

fn random_case(seed: u64, max_agents: usize) -> Instance {
    let mut r = rng(seed);
    let (w, h) = if r.gen_bool(0.5) { (3, 3) } else { (4, 4) };
    let blocked: Vec<Cell> = (0..w * h)
        .filter(|_| r.gen_bool(0.1))
        .map(|i| c(i % w, i / w))
        .collect();
    let world = GridWorld::new(w, h, blocked).unwrap_or_else(|_| GridWorld::open(w, h).unwrap());
    let n = r.gen_range(2..=max_agents).min(world.passable_count());
    random_instance(&world, n, &mut r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solutions_are_valid(seed in any::<u64>(), r in 1usize..=3, which in 0usize..4) {
        let inst = random_case(seed, 3);
        let low = [LowLevel::AStar, xg(), LowLevel::Wxg(Weight::new(0.3).unwrap(), XgOptions::default()), LowLevel::Sr][which];
        let opts = XgCbsOptions::new(low, Some(r)).with_budget(Budget::nodes(300));
        if let Outcome::Solved(s) = solve_xg_cbs(&inst, &opts) {
            assert_valid(&inst, &s, Some(r));
        }
    }

    #[test]
    fn cbs_solves_solvable_instances(seed in any::<u64>()) {
        let inst = random_case(seed, 2);
        let solvable = joint_solvable(&inst);
        match solve_cbs(&inst, Budget::nodes(2000)) {
            Outcome::Solved(s) => {
                prop_assert!(solvable);
                assert_valid(&inst, &s, None);
            }
            Outcome::Unsolvable(_) => prop_assert!(!solvable),
            _ => {}
        }
    }
}
