use std::fs;

use super::*;

const SQUARE: &str = r#"<svg xmlns="http://www.w3.org/2000/svg"><path d="M 0 0 L 40 0 L 40 40 L 0 40 Z"/></svg>"#;

fn embed_args(input: &Path, out: &Path) -> EmbedArgs {
    EmbedArgs {
        input: input.to_path_buf(),
        radius: Some(1.0),
        config: None,
        passes: None,
        out_dir: out.to_path_buf(),
        snapshot_every: None,
    }
}

fn solve_args(graph: &Path, out: &Path) -> SolveArgs {
    SolveArgs {
        graph: graph.to_path_buf(),
        config: None,
        k: None,
        seed: Some(1),
        robots: None,
        instance: None,
        identity: false,
        sequential: false,
        parallel: false,
        out_dir: out.to_path_buf(),
    }
}

fn square_embedding(dir: &Path) -> PathBuf {
    let input = dir.join("square.svg");
    fs::write(&input, SQUARE).unwrap();
    cmd_embed(&embed_args(&input, &dir.join("embed"))).unwrap();
    dir.join("embed/graph.json")
}

#[test]
fn embed_square_covers_and_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("square.svg");
    fs::write(&input, SQUARE).unwrap();
    let mut args = embed_args(&input, &dir.path().join("a"));
    args.snapshot_every = Some(1);
    let stats = cmd_embed(&args).unwrap();
    assert!(stats.coverage >= 0.95, "{}", stats.coverage);
    assert!(dir.path().join("a/snapshots").read_dir().unwrap().count() >= 1);
    cmd_embed(&embed_args(&input, &dir.path().join("b"))).unwrap();
    for f in ["mesh.svg", "mesh.txt", "graph.json", "stats.json"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn bad_inputs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.svg");
    fs::write(&bad, r#"<svg><path d="M 0 0 L 10 0 L 10 10"/></svg>"#).unwrap();
    let out = dir.path().join("out");
    let code = run(["pebblemesh", "embed", bad.to_str().unwrap(), "--radius", "0.1", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(run(["pebblemesh", "embed"]), 2);
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let args = EmbedArgs { config: Some(cfg), ..embed_args(&bad, &out) };
    assert_eq!(cmd_embed(&args).unwrap_err().exit_code(), 2);
}

#[test]
fn config_file_sets_constants() {
    let text = "radius = 0.5\nK = 4\nseed = 9\n[optimizer]\nw = 12.0\npasses = 1\n[optimizer.amips]\nexponent = 2.0\n";
    let cfg: Config = toml::from_str(text).unwrap();
    assert_eq!((cfg.radius, cfg.k, cfg.seed), (Some(0.5), 4, 9));
    assert_eq!((cfg.optimizer.w, cfg.optimizer.passes, cfg.optimizer.split_factor), (12.0, 1, 1.3));
    assert_eq!((cfg.optimizer.amips.exponent, cfg.optimizer.amips.area_weight), (2.0, 0.5));
}

#[test]
fn solve_modes_identity_and_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let graph = square_embedding(dir.path());
    let out = dir.path().join("solve");

    let mut args = solve_args(&graph, &out);
    args.k = Some(4);
    args.sequential = true;
    args.parallel = true;
    let s = cmd_solve(&args).unwrap();
    let (seq, par) = (s.sequential.unwrap(), s.parallel.unwrap());
    assert!(par.makespan <= seq.makespan);
    assert_eq!(s.robots, default_robots(s.vertices, 4));
    let rep: VerifyReport = read_json(&out.join("report_parallel.json")).unwrap();
    assert!(rep.pass);
    let sched = crate::workspace::load_schedule(&out.join("schedule_parallel.json")).unwrap();
    assert_eq!(sched.makespan, par.makespan);

    // the written instance solves to the same schedule
    let mut again = solve_args(&graph, &dir.path().join("again"));
    again.k = Some(4);
    again.instance = Some(out.join("instance.json"));
    cmd_solve(&again).unwrap();
    assert_eq!(
        fs::read(out.join("schedule_parallel.json")).unwrap(),
        fs::read(dir.path().join("again/schedule_parallel.json")).unwrap()
    );

    let mut id = solve_args(&graph, &dir.path().join("id"));
    id.identity = true;
    id.sequential = true;
    id.parallel = true;
    let s = cmd_solve(&id).unwrap();
    assert_eq!((s.sequential.unwrap().makespan, s.parallel.unwrap().makespan), (0, 0));

    let mut full = solve_args(&graph, &dir.path().join("full"));
    full.robots = Some(s.vertices);
    assert_eq!(cmd_solve(&full).unwrap_err().exit_code(), 3);
}

#[test]
fn bench_rows_and_reference() {
    let dir = tempfile::tempdir().unwrap();
    let args = BenchArgs {
        shapes: vec!["square".into()],
        workspaces: vec![],
        radii: vec![0.8, 1.0, 1.25],
        ks: vec![2],
        instances: Some(0),
        seed: None,
        passes: None,
        config: None,
        jobs: Some(3),
        out_dir: dir.path().to_path_buf(),
    };
    let rows = cmd_bench(&args).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.error.is_empty()));
    let robots: Vec<usize> = rows.iter().map(|r| r.robots.unwrap()).collect();
    assert!(robots.windows(2).all(|w| w[0] >= w[1]), "{robots:?}");
    // 3 |W| / A* for the 40 x 40 square, A* the equilateral area of side (2 sqrt 3 + 4) r
    for row in &rows {
        let side = (2.0 * 3f64.sqrt() + 4.0) * row.radius;
        let expected = 3.0 * 1600.0 / (3f64.sqrt() / 4.0 * side * side);
        assert!((row.reference_robots.unwrap() - expected).abs() < 1e-9 * expected);
    }
    let csv = fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    let empty = BenchArgs { shapes: vec![], radii: vec![], ..args };
    assert!(cmd_bench(&empty).unwrap().is_empty());
    let csv = fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("workspace,radius,k,"));
}
