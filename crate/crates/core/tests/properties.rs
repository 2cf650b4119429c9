use pebblemesh::geometry::{check_condition2, corner_points, find_alpha4, flip_residual, Vec2};
use pebblemesh::pebble_graph::PebbleGraph;
use pebblemesh::planner::{check_solution, solve_sequential, MppInstance};
use pebblemesh::scheduler::solve_parallel;
use pebblemesh::shapes::lattice_mesh;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn triangle() -> impl Strategy<Value = [Vec2; 3]> {
    prop::array::uniform6(0.0..30.0f64).prop_filter_map("degenerate", |c| {
        let mut v = [Vec2::new(c[0], c[1]), Vec2::new(c[2], c[3]), Vec2::new(c[4], c[5])];
        if flip_residual(&v) < 0.0 {
            v.swap(1, 2);
        }
        (flip_residual(&v) > 1.0).then_some(v)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn certificate_agrees_with_closed_form(v in triangle()) {
        if let Ok(c) = corner_points(&v, 1.0) {
            prop_assert_eq!(check_condition2(&c, 1.0), find_alpha4(&c, 1.0).is_some());
        }
    }

    #[test]
    fn schedules_reach_their_goals(cols in 1usize..5, rows in 1usize..4, fill in 0.0..1.0f64, seed in any::<u64>()) {
        let g = PebbleGraph::extract(&lattice_mesh(cols, rows, 1.1, 1.0));
        let x = g.num_nodes();
        let n = 1 + ((x - x.div_ceil(6) - 1) as f64 * fill) as usize;
        let inst = MppInstance::random(g, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(check_solution(&inst, &solve_sequential(&inst).unwrap()).is_ok());
        prop_assert!(check_solution(&inst, &solve_parallel(&inst, 2).unwrap().schedule).is_ok());
    }
}
