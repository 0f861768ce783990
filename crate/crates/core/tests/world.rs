use xmapf::world::{
    parse_fixture, parse_map, parse_scenario, render_fixture, write_map, Cell, WorldError,
};

const MAP: &str = include_str!("../fixtures/junction.map");
const SCEN: &str = include_str!("../fixtures/junction.scen");

#[test]
fn junction_files_load() {
    let world = parse_map(MAP).unwrap();
    assert_eq!((world.width(), world.height()), (6, 4));
    assert!(!world.is_passable(Cell::new(1, 0)));
    assert!(world.is_passable(Cell::new(5, 0)));
    let inst = parse_scenario(SCEN, &world, 4).unwrap();
    assert_eq!(inst.agent_count(), 4);
    assert_eq!(inst.tasks()[1].start, Cell::new(2, 3));
    assert_eq!(inst.tasks()[1].goal, Cell::new(0, 1));
    assert_eq!(parse_scenario(SCEN, &world, 2).unwrap().agent_count(), 2);
}

#[test]
fn map_round_trips() {
    let world = parse_map(MAP).unwrap();
    assert_eq!(parse_map(&write_map(&world)).unwrap(), world);
}

#[test]
fn too_many_agents_requested() {
    let world = parse_map(MAP).unwrap();
    assert!(matches!(
        parse_scenario(SCEN, &world, 5),
        Err(WorldError::NotEnoughAgents {
            requested: 5,
            available: 4
        })
    ));
}

#[test]
fn scenario_on_blocked_cell_is_rejected() {
    let world = parse_map(MAP).unwrap();
    let scen = "version 1\n0\tjunction.map\t6\t4\t1\t0\t3\t0\t3\n";
    assert!(parse_scenario(scen, &world, 1).is_err());
}

#[test]
fn fixtures_round_trip() {
    for text in [
        include_str!("../fixtures/road_crossing.txt"),
        include_str!("../fixtures/bench_protocol.txt"),
    ] {
        let inst = parse_fixture(text).unwrap();
        assert_eq!(parse_fixture(&render_fixture(&inst)).unwrap(), inst);
    }
}

#[test]
fn distance_field_respects_walls() {
    let world = parse_map(MAP).unwrap();
    let d = world.goal_distance_field(Cell::new(0, 0)).unwrap();
    assert_eq!(d.get(Cell::new(0, 1)), 1);
    assert_eq!(d.get(Cell::new(2, 0)), 4);
    // The right-hand column is cut off by the wall.
    assert_eq!(d.get(Cell::new(5, 0)), u32::MAX);
}
