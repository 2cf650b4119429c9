use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::shapes::lattice_mesh;

fn graph(cols: usize, rows: usize) -> PebbleGraph {
    PebbleGraph::extract(&lattice_mesh(cols, rows, 1.1, 0.5))
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n).filter(|m| m.count_ones() as usize == k).map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect()).collect()
}

#[test]
fn identity_needs_no_moves() {
    let g = graph(2, 2);
    let starts = vec![0, 4, 7];
    let inst = MppInstance::new(g, starts.clone(), starts).unwrap();
    let s = solve_sequential(&inst).unwrap();
    assert_eq!(s, Schedule::default());
}

#[test]
fn instance_validation() {
    let g = graph(1, 1);
    assert!(matches!(MppInstance::new(g.clone(), vec![0, 1], vec![1, 2]), Err(PlanError::InvalidInstance(_))));
    let all: Vec<usize> = (0..6).collect();
    assert!(matches!(MppInstance::new(g.clone(), all.clone(), all), Err(PlanError::Infeasible(_))));
    let one = g.subgraph(&[0]);
    assert!(matches!(MppInstance::new(one, vec![0], vec![0]), Err(PlanError::Infeasible(_))));
}

#[test]
fn same_loop_swap_routes_swaps_and_unwinds() {
    let g = graph(1, 1);
    assert_eq!(g.num_cells(), 2);
    // cell 0 full, one vacancy in cell 1
    let starts = vec![0, 1, 2, 3, 5];
    let mut goals = starts.clone();
    goals.swap(0, 1);
    let inst = MppInstance::new(g.clone(), starts.clone(), goals).unwrap();
    let s = solve_sequential(&inst).unwrap();
    check_solution(&inst, &s).unwrap();
    let moves: Vec<Move> = s.moves().copied().collect();
    // route and unwind are mirror images around the local swap
    let first = moves[0];
    let last = *moves.last().unwrap();
    assert_eq!(first.inverse(), last);
    assert!(matches!(first, Move::Vacant { .. }));
    assert_eq!(s.makespan, moves.len());
}

#[test]
fn swap_primitive_leaves_other_robots_in_place() {
    let g = graph(3, 2);
    let n = g.num_nodes();
    let starts: Vec<usize> = (0..n).filter(|&v| v != 17).collect();
    let topo = Topology::new(&g);
    for (u, v) in [(0, 1), (2, 3 * 1 + 1)] {
        if !topo.adjacent(u, v) {
            continue;
        }
        let mut state = Occupancy::new(n, &starts);
        let (ru, rv) = (state.robot_at(u), state.robot_at(v));
        let moves = swap_primitive(&g, &mut state, u, v).unwrap();
        assert!(!moves.is_empty());
        assert_eq!(state.robot_at(u), rv);
        assert_eq!(state.robot_at(v), ru);
        for w in (0..n).filter(|&w| w != u && w != v) {
            assert_eq!(state.robot_at(w), Occupancy::new(n, &starts).robot_at(w), "vertex {w}");
        }
    }
    // an inter-cell pair
    let e = &g.inter_edges[0];
    let mut state = Occupancy::new(n, &starts);
    let (ru, rv) = (state.robot_at(e.a), state.robot_at(e.b));
    swap_primitive(&g, &mut state, e.a, e.b).unwrap();
    assert_eq!((state.robot_at(e.a), state.robot_at(e.b)), (rv, ru));
    let mut state = Occupancy::new(n, &starts);
    assert_eq!(swap_primitive(&g, &mut state, 4, 4).unwrap(), vec![]);
}

#[test]
fn route_length_is_bfs_distance() {
    let g = graph(2, 1);
    let n = g.num_nodes();
    let topo = Topology::new(&g);
    for from in 0..n {
        for to in 0..n {
            let starts: Vec<usize> = (0..n).filter(|&v| v != from).collect();
            let mut state = Occupancy::new(n, &starts);
            let moves = route_vacancy(&g, &mut state, from, to).unwrap();
            let dist = topo.path(from, to, None).unwrap().len() - 1;
            assert_eq!(moves.len(), dist);
            assert!(state.is_vacant(to));
            for m in &moves {
                assert!(matches!(m, Move::Vacant { .. }));
            }
        }
    }
}

#[test]
fn route_keeps_other_vacancies() {
    let g = graph(3, 1);
    let n = g.num_nodes();
    let topo = Topology::new(&g);
    let path = topo.path(0, n - 1, None).unwrap();
    assert!(path.len() > 3);
    let mid = path[path.len() / 2];
    let starts: Vec<usize> = (0..n).filter(|&v| v != 0 && v != mid).collect();
    let mut state = Occupancy::new(n, &starts);
    route_vacancy(&g, &mut state, 0, n - 1).unwrap();
    assert!(state.is_vacant(mid) && state.is_vacant(n - 1) && !state.is_vacant(0));
}

#[test]
fn exhaustive_two_cell_permutations() {
    let g = graph(1, 1);
    let mut count = 0;
    for k in 1..=5 {
        for starts in subsets(6, k) {
            for goals in permutations(&starts) {
                let inst = MppInstance::new(g.clone(), starts.clone(), goals).unwrap();
                let s = solve_sequential(&inst).unwrap();
                check_solution(&inst, &s).unwrap();
                count += 1;
            }
        }
    }
    assert_eq!(count, 6 + 30 + 120 + 360 + 720);
}

#[test]
fn random_instances_on_twenty_cells_replay() {
    let g = graph(5, 2);
    assert_eq!(g.num_cells(), 20);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let n = g.num_nodes() - 1;
        let inst = MppInstance::random(g.clone(), n, &mut rng).unwrap();
        let s = solve_sequential(&inst).unwrap();
        check_solution(&inst, &s).unwrap();
    }
}

#[test]
fn replay_rejects_bad_schedules() {
    let g = graph(1, 1);
    let starts = vec![0, 1];
    let bad = Schedule::sequential(vec![Move::Vacant { robot: 0, from: 0, to: 1 }]);
    assert!(matches!(replay(&g, &starts, &bad), Err(ReplayError::Occupied { .. })));
    let wrong = Schedule::sequential(vec![Move::Vacant { robot: 1, from: 0, to: 2 }]);
    assert!(matches!(replay(&g, &starts, &wrong), Err(ReplayError::WrongRobot { .. })));
    let overlap = Schedule::from_rounds(vec![vec![
        Move::Cyclic { cell: 0, direction: Direction::Forward },
        Move::Vacant { robot: 0, from: 0, to: 2 },
    ]]);
    assert!(matches!(replay(&g, &starts, &overlap), Err(ReplayError::Overlap { .. })));
}

#[test]
fn schedule_json_shape() {
    let s = Schedule::from_rounds(vec![vec![
        Move::Cyclic { cell: 2, direction: Direction::Backward },
        Move::Vacant { robot: 4, from: 1, to: 3 },
    ]]);
    let json = serde_json::to_string(&s).unwrap();
    assert_eq!(
        json,
        r#"{"rounds":[[{"kind":"cyclic","cell":2,"direction":"backward"},{"kind":"vacant","robot":4,"from":1,"to":3}]],"makespan":1}"#
    );
    assert_eq!(serde_json::to_string(&Schedule::default()).unwrap(), r#"{"rounds":[],"makespan":0}"#);
}
