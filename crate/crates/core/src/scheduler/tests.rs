use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::planner::{check_solution, solve_sequential};
use crate::shapes::lattice_mesh;

fn graph(cols: usize, rows: usize) -> PebbleGraph {
    PebbleGraph::extract(&lattice_mesh(cols, rows, 1.1, 0.5))
}

#[test]
fn zip_and_compact() {
    let a = Move::Cyclic { cell: 0, direction: crate::planner::Direction::Forward };
    let b = Move::Cyclic { cell: 1, direction: crate::planner::Direction::Forward };
    assert_eq!(zip(vec![vec![a]], vec![vec![b], vec![b]]), vec![vec![a, b], vec![b]]);
    // independent cells share a round, a repeat on cell 0 waits
    assert_eq!(compact(&[a, b, a], 6), vec![vec![a, b], vec![a]]);
}

#[test]
fn clustering_rejects_bad_input() {
    let g = graph(2, 2);
    assert_eq!(cluster_loops(&g, 1).unwrap_err(), ScheduleError::InvalidK(1));
    assert_eq!(cluster_loops(&g.subgraph(&[0]), 2).unwrap_err(), ScheduleError::TooFewLoops);
}

#[test]
fn clustering_covers_cells_and_respects_k() {
    for (cols, rows, k) in [(2, 1, 2), (4, 1, 4), (4, 3, 2), (5, 4, 3), (6, 4, 5)] {
        let g = graph(cols, rows);
        let t = cluster_loops(&g, k).unwrap();
        let n = g.num_cells();
        let mut seen = vec![0; n];
        for l in 0..t.leaves.len() {
            for &c in t.leaf_cells(l) {
                seen[c] += 1;
                assert_eq!(t.leaf_of_cell[c], l);
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
        // every leaf is cut from a parent whose two children both hold k
        // loops, so leaves hold at least k loops unless the root is a leaf
        if t.leaves.len() > 1 {
            assert!(t.leaves.iter().all(|&l| t.nodes[l].cells.len() >= k));
        }
        assert!(t.leaves.len() <= n / k);
        assert_eq!(t.leaves_under(t.root), (0..t.leaves.len()).collect::<Vec<_>>());
    }
}

#[test]
fn two_loops_with_k_two_form_one_leaf() {
    let g = graph(1, 1);
    let t = cluster_loops(&g, 2).unwrap();
    assert_eq!(t.leaves, vec![t.root]);
}

#[test]
fn identity_instance_needs_no_rounds() {
    let g = graph(3, 2);
    // cell 0 is full, so vacancies would have to be spread for real work
    let starts: Vec<usize> = (0..g.num_nodes()).filter(|&v| v < 3 || v % 2 == 0).collect();
    let inst = MppInstance::new(g, starts.clone(), starts).unwrap();
    let out = solve_parallel(&inst, 2).unwrap();
    assert_eq!(out.schedule, Schedule::default());
}

#[test]
fn too_many_robots_are_rejected() {
    let g = graph(4, 2);
    let t = cluster_loops(&g, 2).unwrap();
    let n = g.num_nodes() - t.leaves.len() + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let inst = MppInstance::random(g, n, &mut rng).unwrap();
    assert!(matches!(solve_parallel(&inst, 2), Err(ScheduleError::TooFewVacancies { .. })));
}

#[test]
fn random_instances_replay() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (cols, rows, k) in [(2, 2, 2), (4, 2, 2), (5, 3, 3), (6, 4, 2)] {
        let g = graph(cols, rows);
        let leaves = cluster_loops(&g, k).unwrap().leaves.len();
        for n in [1, g.num_nodes() / 2, g.num_nodes() - leaves] {
            let inst = MppInstance::random(g.clone(), n, &mut rng).unwrap();
            let out = solve_parallel(&inst, k).unwrap();
            check_solution(&inst, &out.schedule).unwrap();
        }
    }
}

#[test]
fn parallel_beats_sequential_on_a_large_lattice() {
    let g = graph(12, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let leaves = cluster_loops(&g, 2).unwrap().leaves.len();
    let inst = MppInstance::random(g.clone(), g.num_nodes() - leaves, &mut rng).unwrap();
    let par = solve_parallel(&inst, 2).unwrap();
    check_solution(&inst, &par.schedule).unwrap();
    let seq = solve_sequential(&inst).unwrap();
    assert!(par.schedule.makespan < seq.makespan, "{} vs {}", par.schedule.makespan, seq.makespan);
}
