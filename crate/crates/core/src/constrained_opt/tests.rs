use super::*;
use crate::geometry::{check_condition2, flip_residual, optimal_edge_length, triangle_area};
use crate::pebble_graph::PebbleGraph;

/// Outer equilateral triangle of side `side` with an inner copy scaled by
/// `k` about the centroid; the three trapezoids are split into thin cells.
fn nested(side: f64, k: f64, r: f64) -> TriMesh {
    let h = side * 3f64.sqrt() / 2.0;
    let outer = [Vec2::new(0., 0.), Vec2::new(side, 0.), Vec2::new(side / 2., h)];
    let c = (outer[0] + outer[1] + outer[2]) / 3.0;
    let inner = outer.map(|p| c + (p - c) * k);
    let pos = [outer[0], outer[1], outer[2], inner[0], inner[1], inner[2]];
    let mut tags = vec![];
    for i in 0..3 {
        tags.push(VertexTag::Corner { ring: 0, index: i });
    }
    tags.extend([VertexTag::Interior; 3]);
    let tris = [[3, 4, 5], [0, 1, 4], [0, 4, 3], [1, 2, 5], [1, 5, 4], [2, 0, 3], [2, 3, 5]];
    TriMesh::from_triangles(&pos, &tags, &tris, vec![outer.to_vec()], r).unwrap()
}

fn valid_area(mesh: &TriMesh) -> f64 {
    PebbleGraph::extract(mesh).cells.iter().map(|c| c.area).sum()
}

#[test]
fn oversized_cell_shrinks_and_stays_valid() {
    let r = 0.5;
    let mesh = nested(4.0 * optimal_edge_length(r), 0.8, r);
    let g = PebbleGraph::extract(&mesh);
    assert_eq!(g.num_cells(), 1, "only the inner cell should be valid");
    let before = valid_area(&mesh);
    let imp = solve_local(&mesh, 0, &IpmConfig::default()).expect("improves");
    let mut after_mesh = mesh.clone();
    imp.apply(&mut after_mesh);
    after_mesh.audit().unwrap();
    let tri = after_mesh.face_positions(0);
    // post-hoc check with the closed-form condition
    let c = crate::geometry::corner_points(&tri, r).unwrap();
    assert!(check_condition2(&c, r));
    let after = triangle_area(&tri);
    assert!(after < before - 1e-9, "{after} !< {before}");
    assert!((imp.objective_after - after).abs() < 1e-9 * before);
    assert!(after_mesh.face_ids().all(|f| flip_residual(&after_mesh.face_positions(f)) > 0.0));
}

#[test]
fn global_solve_shrinks_valid_area() {
    let r = 0.5;
    let mesh = nested(4.0 * optimal_edge_length(r), 0.8, r);
    let imp = solve_global(&mesh, &IpmConfig::default()).expect("improves");
    let mut m = mesh.clone();
    imp.apply(&mut m);
    m.audit().unwrap();
    assert!(valid_area(&m) < valid_area(&mesh));
    // every originally valid cell is still valid
    assert!(crate::geometry::cell_is_valid(&m.face_positions(0), r));
    assert!(imp.log.iterations.len() > 1);
    assert!(imp.log.to_csv().starts_with("iter,objective,kkt_residual,mu\n"));
}

#[test]
fn minimal_cells_are_stationary() {
    // a cell at the minimal side is not strictly certified, so nothing moves
    let r = 1.0;
    let s = optimal_edge_length(r);
    let mesh = nested(s / 0.8 * 1.0, 0.8, r);
    match solve_local(&mesh, 0, &IpmConfig::default()) {
        Ok(imp) => panic!("unexpected improvement {imp:?}"),
        Err(NoImprovement::NoVariables) | Err(NoImprovement::Stalled(_)) => {}
        Err(e) => panic!("unexpected {e:?}"),
    }
}

#[test]
fn all_valid_region_has_nothing_to_gain() {
    // when every cell in scope is valid the objective is the constant
    // region area, so no strict decrease is possible
    let r = 0.2;
    let mesh = nested(12.0 * optimal_edge_length(r), 0.45, r);
    assert_eq!(PebbleGraph::extract(&mesh).num_cells(), 7);
    assert!(matches!(solve_global(&mesh, &IpmConfig::default()), Err(NoImprovement::Stalled(_))));
}

#[test]
fn flipped_start_is_rejected() {
    let r = 0.5;
    let mut mesh = nested(4.0 * optimal_edge_length(r), 0.8, r);
    // push an inner vertex across the opposite inner edge
    let p = mesh.position(5);
    mesh.set_position_unchecked(5, Vec2::new(p.x, -p.y));
    assert_eq!(solve_local(&mesh, 0, &IpmConfig::default()), Err(NoImprovement::InfeasibleStart));
}
