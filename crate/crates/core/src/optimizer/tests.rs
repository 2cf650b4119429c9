use super::*;
use crate::shapes;
use crate::workspace::initial_triangulation;

#[test]
fn gate_examples() {
    let w = 10.0;
    assert_eq!(accept_gate((9, 6), (9, 9), OpKind::Collapse, false, w), Gate::Count);
    assert_eq!(accept_gate((9, 9), (9, 9), OpKind::Flip, true, w), Gate::Guide);
    assert_eq!(accept_gate((9, 9), (6, 6), OpKind::Flip, true, w), Gate::Reject);
    assert_eq!(accept_gate((9, 9), (9, 9), OpKind::Collapse, true, w), Gate::Reject);
    assert_eq!(accept_gate((9, 9), (9, 9), OpKind::Smooth, false, w), Gate::Reject);
    // robots in the largest component outweigh stray cells
    assert_eq!(accept_gate((12, 6), (9, 9), OpKind::Split, false, w), Gate::Count);
}

#[test]
fn trace_is_monotone_and_mesh_stays_sound() {
    let r = 1.0;
    let ws = shapes::square(r);
    let mesh = initial_triangulation(&ws, optimal_edge_length(r)).unwrap();
    let cfg = OptimizerConfig { max_sweeps: 3, ..Default::default() };
    let mut seen = 0;
    let out = optimize_with(mesh, &cfg, |_, _, m| {
        seen += 1;
        m.audit().unwrap();
    });
    assert_eq!(seen, out.stats.sweeps.len());
    let mut last = count_score(out.stats.initial.robots, out.stats.initial.robots_largest_component, cfg.w);
    for t in &out.stats.trace {
        assert!(t.score >= last);
        last = t.score;
    }
    out.mesh.audit().unwrap();
    assert!(out.stats.final_metrics.robots >= out.stats.initial.robots);
    for c in &out.graph.cells {
        assert!(crate::geometry::cell_is_valid(&c.triangle, r));
    }
}
