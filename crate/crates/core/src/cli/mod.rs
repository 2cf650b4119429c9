//! Command-line pipeline: embed a workspace, solve instances on the result,
//! and benchmark both stages.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{optimal_cell_area, optimal_edge_length};
use crate::optimizer::{optimize_with, OptimizeStats, OptimizerConfig};
use crate::pebble_graph::{NodeId, PebbleGraph};
use crate::planner::{check_solution, solve_sequential, MppInstance, PlanError, ReplayError, Schedule};
use crate::scheduler::{solve_parallel, ScheduleError};
use crate::shapes;
use crate::trimesh::TriMesh;
use crate::verifier::{verify_schedule, VerifyError, VerifyReport};
use crate::workspace::{
    export_schedule, export_svg, initial_triangulation, load_text_mesh, load_workspace, read_json, render_svg,
    write_json, write_text, Embedding, Workspace, WorkspaceError,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("internal audit failure: {0}")]
    Audit(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Audit(_) => 4,
        }
    }
}

impl From<WorkspaceError> for CliError {
    fn from(e: WorkspaceError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::Infeasible(_) => CliError::Infeasible(e.to_string()),
            PlanError::InvalidInstance(_) => CliError::Input(e.to_string()),
            _ => CliError::Audit(e.to_string()),
        }
    }
}

impl From<ScheduleError> for CliError {
    fn from(e: ScheduleError) -> Self {
        match e {
            ScheduleError::Plan(p) => p.into(),
            ScheduleError::InvalidK(_) => CliError::Input(e.to_string()),
            ScheduleError::TooFewLoops | ScheduleError::Disconnected | ScheduleError::TooFewVacancies { .. } => {
                CliError::Infeasible(e.to_string())
            }
            _ => CliError::Audit(e.to_string()),
        }
    }
}

impl From<ReplayError> for CliError {
    fn from(e: ReplayError) -> Self {
        CliError::Audit(e.to_string())
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        CliError::Audit(e.to_string())
    }
}

/// Settings shared by all commands; flags override file values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub radius: Option<f64>,
    /// Initial target edge length as a multiple of the optimal edge.
    pub initial_edge_factor: f64,
    /// Minimum loops per leaf of the cluster tree.
    #[serde(alias = "K")]
    pub k: usize,
    pub seed: u64,
    /// Random instances per benchmark row.
    pub bench_instances: usize,
    pub optimizer: OptimizerConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            radius: None,
            initial_edge_factor: 1.1,
            k: 2,
            seed: 0,
            bench_instances: 3,
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Parser)]
#[command(name = "pebblemesh", version, about = "Pebble-graph embedding and multi-robot planning on triangle meshes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Triangulate and optimize a workspace, then write the graph and stats.
    Embed(EmbedArgs),
    /// Plan a permutation on an embedded graph and verify the schedule.
    Solve(SolveArgs),
    /// Sweep workspaces, radii and K, writing one CSV row per combination.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Workspace SVG, or a text mesh (`V F` header) used as the initial mesh.
    pub input: PathBuf,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub passes: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Write an SVG snapshot every this many sweeps.
    #[arg(long)]
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// `graph.json` written by `embed`.
    pub graph: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Seed of the random instance.
    #[arg(long, alias = "random")]
    pub seed: Option<u64>,
    /// Number of robots of the random instance; defaults to one vacancy per
    /// 3K vertices.
    #[arg(long)]
    pub robots: Option<usize>,
    /// Instance file with `starts` and `goals` on the largest component.
    #[arg(long, conflicts_with = "identity")]
    pub instance: Option<PathBuf>,
    /// Use the identity permutation.
    #[arg(long)]
    pub identity: bool,
    #[arg(long)]
    pub sequential: bool,
    #[arg(long)]
    pub parallel: bool,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Built-in workspace (`square`, `l_shape`, `annulus`, `quad`, `star`),
    /// drawn at unit scale.
    #[arg(long = "shape")]
    pub shapes: Vec<String>,
    /// Workspace SVG or text mesh.
    #[arg(long = "workspace")]
    pub workspaces: Vec<PathBuf>,
    #[arg(long = "radius")]
    pub radii: Vec<f64>,
    #[arg(long = "K")]
    pub ks: Vec<usize>,
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub passes: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

/// Statistics written by `embed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedStats {
    pub input: String,
    pub radius: f64,
    pub initial_edge: f64,
    pub workspace_area: f64,
    pub cells: usize,
    pub robots: usize,
    pub robots_largest_component: usize,
    pub density: f64,
    pub coverage: f64,
    /// Robots on an ideal packing of minimal regular cells: `3 |W| / A*`.
    pub reference_robots: f64,
    pub optimizer: OptimizeStats,
}

fn file_label(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn is_svg(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("svg"))
}

/// Loads a workspace and its initial mesh.
pub fn load_input(path: &Path, r: f64, factor: f64) -> Result<(Workspace, TriMesh), CliError> {
    if is_svg(path) {
        let ws = load_workspace(path, r)?;
        let mesh = initial_triangulation(&ws, factor * optimal_edge_length(r))?;
        Ok((ws, mesh))
    } else {
        Ok(load_text_mesh(path, r)?)
    }
}

fn reference_robots(area: f64, r: f64) -> f64 {
    3.0 * area / optimal_cell_area(r)
}

/// Runs the embedding pipeline and writes its outputs to `out_dir`.
pub fn cmd_embed(args: &EmbedArgs) -> Result<EmbedStats, CliError> {
    let mut cfg = Config::load(args.config.as_deref())?;
    if let Some(p) = args.passes {
        cfg.optimizer.passes = p;
    }
    let r = args.radius.or(cfg.radius).ok_or_else(|| CliError::Input("no robot radius given".into()))?;
    if !(r > 0.0) {
        return Err(CliError::Input(format!("robot radius must be positive, got {r}")));
    }
    let start = Instant::now();
    let (ws, mesh) = load_input(&args.input, r, cfg.initial_edge_factor)?;
    let initial_edge = cfg.initial_edge_factor * optimal_edge_length(r);
    let mut snapshot_error = None;
    let every = args.snapshot_every.filter(|&n| n > 0);
    let out = optimize_with(mesh, &cfg.optimizer, |pass, sweep, m| {
        if every.is_some_and(|n| sweep % n == 0) {
            let g = PebbleGraph::extract(m);
            let path = args.out_dir.join("snapshots").join(format!("pass{pass}_sweep{sweep:03}.svg"));
            if let Err(e) = write_text(&path, &render_svg(m, Some(&g))) {
                snapshot_error.get_or_insert(e);
            }
        }
    });
    if let Some(e) = snapshot_error {
        return Err(e.into());
    }
    out.mesh.audit().map_err(|e| CliError::Audit(format!("optimized mesh fails its audit: {e}")))?;
    let m = out.stats.final_metrics;
    let stats = EmbedStats {
        input: file_label(&args.input),
        radius: r,
        initial_edge,
        workspace_area: ws.area(),
        cells: out.graph.num_cells(),
        robots: m.robots,
        robots_largest_component: m.robots_largest_component,
        density: m.density,
        coverage: m.coverage,
        reference_robots: reference_robots(ws.area(), r),
        optimizer: out.stats,
    };
    let dir = &args.out_dir;
    export_svg(&out.mesh, Some(&out.graph), &dir.join("mesh.svg"))?;
    write_text(&dir.join("mesh.txt"), &out.mesh.to_text())?;
    write_json(&Embedding { workspace: ws, graph: out.graph }, &dir.join("graph.json"))?;
    write_json(&stats, &dir.join("stats.json"))?;
    write_json(&serde_json::json!({ "seconds": start.elapsed().as_secs_f64() }), &dir.join("timing.json"))?;
    log::info!(
        "embedded {}: {} robots, coverage {:.3}, density {:.3}",
        stats.input,
        stats.robots,
        stats.coverage,
        stats.density
    );
    Ok(stats)
}

/// Robot start and goal vertices on the largest component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub starts: Vec<NodeId>,
    pub goals: Vec<NodeId>,
}

/// Default robot count: one vacancy per `3k` vertices.
pub fn default_robots(num_nodes: usize, k: usize) -> usize {
    num_nodes - num_nodes.div_ceil(3 * k.max(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub makespan: usize,
    pub moves: usize,
    pub min_clearance: Option<f64>,
    pub min_boundary_clearance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub vertices: usize,
    pub robots: usize,
    pub k: usize,
    pub sequential: Option<RunSummary>,
    pub parallel: Option<RunSummary>,
}

fn checked(inst: &MppInstance, s: &Schedule, ws: &Workspace) -> Result<VerifyReport, CliError> {
    check_solution(inst, s)?;
    let rep = verify_schedule(&inst.graph, &inst.starts, s, ws)?;
    if !rep.pass {
        return Err(CliError::Audit(format!("schedule fails verification: {:?}", rep.violations.first())));
    }
    Ok(rep)
}

/// Plans, verifies and writes schedules for one instance.
pub fn cmd_solve(args: &SolveArgs) -> Result<SolveSummary, CliError> {
    let cfg = Config::load(args.config.as_deref())?;
    let k = args.k.unwrap_or(cfg.k);
    let emb: Embedding = read_json(&args.graph)?;
    let graph = emb.graph.largest_component();
    let x = graph.num_nodes();
    let inst = if let Some(path) = &args.instance {
        let f: InstanceFile = read_json(path)?;
        MppInstance::new(graph, f.starts, f.goals)?
    } else {
        let n = args.robots.unwrap_or_else(|| default_robots(x, k));
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed.unwrap_or(cfg.seed));
        let mut inst = MppInstance::random(graph, n, &mut rng)?;
        if args.identity {
            inst.goals = inst.starts.clone();
        }
        inst
    };
    let (run_seq, run_par) = match (args.sequential, args.parallel) {
        (false, false) => (false, true),
        flags => flags,
    };
    let dir = &args.out_dir;
    write_json(&InstanceFile { starts: inst.starts.clone(), goals: inst.goals.clone() }, &dir.join("instance.json"))?;
    let mut summary = SolveSummary { vertices: x, robots: inst.num_robots(), k, sequential: None, parallel: None };
    for (on, name) in [(run_seq, "sequential"), (run_par, "parallel")] {
        if !on {
            continue;
        }
        let s = if name == "sequential" { solve_sequential(&inst)? } else { solve_parallel(&inst, k)?.schedule };
        let rep = checked(&inst, &s, &emb.workspace)?;
        export_schedule(&s, &dir.join(format!("schedule_{name}.json")))?;
        write_json(&rep, &dir.join(format!("report_{name}.json")))?;
        println!("{name} makespan: {}", s.makespan);
        let run = RunSummary {
            makespan: s.makespan,
            moves: s.num_moves(),
            min_clearance: rep.min_clearance,
            min_boundary_clearance: rep.min_boundary_clearance,
        };
        if name == "sequential" {
            summary.sequential = Some(run);
        } else {
            summary.parallel = Some(run);
        }
    }
    write_json(&summary, &dir.join("summary.json"))?;
    Ok(summary)
}

/// One benchmark row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub workspace: String,
    pub radius: f64,
    pub k: usize,
    pub robots: Option<usize>,
    pub robots_largest_component: Option<usize>,
    pub density: Option<f64>,
    pub coverage: Option<f64>,
    pub reference_robots: Option<f64>,
    pub makespan_seq: Option<f64>,
    pub makespan_par: Option<f64>,
    pub wall_time_s: f64,
    pub error: String,
}

enum Source {
    Shape(String),
    File(PathBuf),
}

impl Source {
    fn label(&self) -> String {
        match self {
            Source::Shape(s) => s.clone(),
            Source::File(p) => file_label(p),
        }
    }

    fn load(&self, r: f64, factor: f64) -> Result<(Workspace, TriMesh), CliError> {
        match self {
            Source::Shape(s) => {
                let mut ws = shapes::synthetic(s, 1.0).ok_or_else(|| CliError::Input(format!("unknown shape '{s}'")))?;
                ws.robot_radius = r;
                let mesh = initial_triangulation(&ws, factor * optimal_edge_length(r))?;
                Ok((ws, mesh))
            }
            Source::File(p) => load_input(p, r, factor),
        }
    }
}

fn bench_rows(src: &Source, r: f64, ks: &[usize], cfg: &Config) -> Vec<BenchRow> {
    let start = Instant::now();
    let blank = |k: usize, error: String| BenchRow {
        workspace: src.label(),
        radius: r,
        k,
        robots: None,
        robots_largest_component: None,
        density: None,
        coverage: None,
        reference_robots: None,
        makespan_seq: None,
        makespan_par: None,
        wall_time_s: 0.0,
        error,
    };
    let (ws, mesh) = match src.load(r, cfg.initial_edge_factor) {
        Ok(x) => x,
        Err(e) => return ks.iter().map(|&k| blank(k, e.to_string())).collect(),
    };
    let out = optimize_with(mesh, &cfg.optimizer, |_, _, _| {});
    let embed_time = start.elapsed().as_secs_f64();
    let m = out.stats.final_metrics;
    let graph = out.graph.largest_component();
    ks.iter()
        .map(|&k| {
            let t = Instant::now();
            let mut row = blank(k, String::new());
            row.robots = Some(m.robots);
            row.robots_largest_component = Some(m.robots_largest_component);
            row.density = Some(m.density);
            row.coverage = Some(m.coverage);
            row.reference_robots = Some(reference_robots(ws.area(), r));
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut run = || -> Result<(f64, f64), CliError> {
                let n = default_robots(graph.num_nodes(), k);
                let (mut seq, mut par) = (0.0, 0.0);
                for _ in 0..cfg.bench_instances {
                    let inst = MppInstance::random(graph.clone(), n, &mut rng)?;
                    let s = solve_sequential(&inst)?;
                    check_solution(&inst, &s)?;
                    let p = solve_parallel(&inst, k)?.schedule;
                    check_solution(&inst, &p)?;
                    seq += s.makespan as f64;
                    par += p.makespan as f64;
                }
                let n = cfg.bench_instances.max(1) as f64;
                Ok((seq / n, par / n))
            };
            if cfg.bench_instances > 0 {
                match run() {
                    Ok((s, p)) => {
                        row.makespan_seq = Some(s);
                        row.makespan_par = Some(p);
                    }
                    Err(e) => row.error = e.to_string(),
                }
            }
            row.wall_time_s = embed_time + t.elapsed().as_secs_f64();
            row
        })
        .collect()
}

/// Runs the benchmark sweep on a worker pool and writes `bench.csv`.
pub fn cmd_bench(args: &BenchArgs) -> Result<Vec<BenchRow>, CliError> {
    let mut cfg = Config::load(args.config.as_deref())?;
    if let Some(p) = args.passes {
        cfg.optimizer.passes = p;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.instances {
        cfg.bench_instances = n;
    }
    let radii = if args.radii.is_empty() { cfg.radius.into_iter().collect() } else { args.radii.clone() };
    let ks = if args.ks.is_empty() { vec![cfg.k] } else { args.ks.clone() };
    if let Some(&r) = radii.iter().find(|&&r| !(r > 0.0)) {
        return Err(CliError::Input(format!("robot radius must be positive, got {r}")));
    }
    let sources: Vec<Source> = args
        .shapes
        .iter()
        .map(|s| Source::Shape(s.clone()))
        .chain(args.workspaces.iter().map(|p| Source::File(p.clone())))
        .collect();
    let jobs: Vec<(usize, f64)> = (0..sources.len()).flat_map(|i| radii.iter().map(move |&r| (i, r))).collect();
    let results: Mutex<Vec<Option<Vec<BenchRow>>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let workers = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers.min(jobs.len()) {
            scope.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(i, r)) = jobs.get(j) else { break };
                let rows = bench_rows(&sources[i], r, &ks, &cfg);
                results.lock().unwrap()[j] = Some(rows);
            });
        }
    });
    let rows: Vec<BenchRow> = results.into_inner().unwrap().into_iter().flatten().flatten().collect();
    let path = args.out_dir.join("bench.csv");
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record([
        "workspace",
        "radius",
        "k",
        "robots",
        "robots_largest_component",
        "density",
        "coverage",
        "reference_robots",
        "makespan_seq",
        "makespan_par",
        "wall_time_s",
        "error",
    ])
    .map_err(|e| CliError::Audit(e.to_string()))?;
    for row in &rows {
        w.serialize(row).map_err(|e| CliError::Audit(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Audit(e.to_string()))?;
    write_text(&path, &String::from_utf8(bytes).expect("csv output is UTF-8"))?;
    Ok(rows)
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Embed(a) => cmd_embed(a).map(|_| ()),
        Command::Solve(a) => cmd_solve(a).map(|_| ()),
        Command::Bench(a) => cmd_bench(a).map(|rows| println!("{} rows", rows.len())),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests;
