//! `rpr` command-line front end.
//!
//! Exit codes: 0 success, 1 planning failure, 2 input error.

use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};

use rpr_core::beamlet::{build_beamlet_graph, build_dyadic_decomposition};
use rpr_core::curvature::{erpr_plan, CurvatureConfig, CurvatureError, ErprError};
use rpr_core::env::{EnvironmentFile, GridEnvironment};
use rpr_core::geom::{Path, Point};
use rpr_core::harness::{render_svg, run_benchmark, BenchConfig, ObstacleShape, PathStyle, Planner};
use rpr_core::rpr::{cfs_line_plan, rpr_plan, PlanResult, PlanStatus, RprConfig, RprError};

#[derive(Parser)]
#[command(name = "rpr", version, about = "Roadmap-initialized convex path reshaping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one path in an environment file.
    Plan(PlanArgs),
    /// Run planners over random environments and report success rates.
    Bench(BenchArgs),
    /// Draw an environment and paths as SVG.
    Render(RenderArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PlannerKind {
    Cfs,
    Rpr,
    Erpr,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Rectangle,
    Circle,
}

#[derive(clap::Args)]
struct PlanArgs {
    #[arg(long)]
    env: PathBuf,
    #[arg(long, value_enum, default_value = "rpr")]
    planner: PlannerKind,
    /// Segment size in steps; 0 reshapes the whole path at once.
    #[arg(long, default_value_t = 60)]
    m: usize,
    #[arg(long = "theta-max", default_value_t = 30.0)]
    theta_max: f64,
    /// Path as a JSON array of `[x, y]` pairs.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Path as CSV `index,x,y`.
    #[arg(long = "path-csv")]
    path_csv: Option<PathBuf>,
    /// Full JSON report with timings and counters.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Start point `x,y`; defaults to the workspace origin.
    #[arg(long, value_parser = parse_point)]
    start: Option<Point>,
    /// Goal point `x,y`; defaults to the bottom-right corner.
    #[arg(long, value_parser = parse_point)]
    goal: Option<Point>,
    /// Directory for per-solve objective traces.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// Beamlet graph JSON (erpr only).
    #[arg(long = "dump-beamlets")]
    dump_beamlets: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Comma-separated obstacle counts, one group each.
    #[arg(long, default_value = "5,10,15,20,30")]
    groups: String,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated planners: cfs-line, rpr-all, rpr-m, erpr-m.
    #[arg(long, default_value = "cfs-line,rpr-all,rpr-m")]
    planners: String,
    #[arg(long = "out-csv")]
    out_csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rectangle")]
    shape: Shape,
    #[arg(long, default_value_t = 60)]
    m: usize,
    #[arg(long = "theta-max", default_value_t = 30.0)]
    theta_max: f64,
    /// Fill the wall-clock columns of the CSV.
    #[arg(long)]
    timings: bool,
}

#[derive(clap::Args)]
struct RenderArgs {
    #[arg(long)]
    env: PathBuf,
    /// JSON paths: arrays of `[x, y]` or reports with a `waypoints` field.
    #[arg(long, num_args = 1..)]
    paths: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Input(anyhow::Error),
    Planning(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

fn parse_point(s: &str) -> Result<Point, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => {
            let x: f64 = x.parse().map_err(|e| format!("bad x: {e}"))?;
            let y: f64 = y.parse().map_err(|e| format!("bad y: {e}"))?;
            Ok(Point::new(x, y))
        }
        _ => Err(format!("expected `x,y`, got `{s}`")),
    }
}

fn load_env(path: &FsPath) -> Result<(EnvironmentFile, GridEnvironment), Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file = EnvironmentFile::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let grid = file.build().with_context(|| format!("rasterizing {}", path.display()))?;
    Ok((file, grid))
}

fn write(path: &FsPath, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn classify_rpr(e: RprError) -> Failure {
    match e {
        RprError::EndpointBlocked { .. } | RprError::InvalidSegmentSize(_) => Failure::Input(e.into()),
        other => Failure::Planning(other.into()),
    }
}

fn classify_erpr(e: ErprError) -> Failure {
    match e {
        ErprError::Rpr(inner) => classify_rpr(inner),
        ErprError::Curvature(CurvatureError::InvalidThetaMax(_)) => Failure::Input(e.into()),
        other => Failure::Planning(other.into()),
    }
}

fn plan(args: PlanArgs) -> Result<(), Failure> {
    let (file, grid) = load_env(&args.env)?;
    let start = args.start.unwrap_or(Point::new(0.0, 0.0));
    let goal = args.goal.unwrap_or(Point::new(file.workspace.width, 0.0));
    let mut cfg = RprConfig::default();
    cfg = if args.m == 0 { cfg.all() } else { RprConfig { m: args.m, ..cfg } };
    let theta = args.theta_max.to_radians();

    let result: PlanResult = match args.planner {
        PlannerKind::Cfs => cfs_line_plan(&grid, start, goal, &cfg).map_err(classify_rpr)?,
        PlannerKind::Rpr => rpr_plan(&grid, start, goal, &cfg).map_err(classify_rpr)?,
        PlannerKind::Erpr => erpr_plan(&grid, start, goal, &cfg, &CurvatureConfig::new(theta)).map_err(classify_erpr)?,
    };

    if let Some(out) = &args.dump_beamlets {
        let squares = build_dyadic_decomposition(&grid);
        let graph = build_beamlet_graph(&grid, &squares, theta).map_err(|e| Failure::Input(e.into()))?;
        write(out, &serde_json::to_string(&graph.to_json())?)?;
    }
    if let Some(out) = &args.out {
        write(out, &serde_json::to_string(&result.path)?)?;
    }
    if let Some(out) = &args.path_csv {
        write(out, &result.path.to_csv())?;
    }
    if let Some(out) = &args.report {
        write(out, &serde_json::to_string_pretty(&result.report())?)?;
    }
    if let Some(dir) = &args.diagnostics {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (k, trace) in result.traces.iter().enumerate() {
            write(&dir.join(format!("trace_{k}.csv")), &trace.trace_csv())?;
        }
    }
    if let Some(out) = &args.svg {
        let paths = [
            (result.initial_path.clone(), PathStyle::dashed("#1f77b4")),
            (result.path.clone(), PathStyle::solid("#d62728")),
        ];
        render_svg(&file, &paths, out)?;
    }

    let m = &result.metrics;
    println!(
        "status={:?} waypoints={} initial_waypoints={} iterations={} alternations={} init_time_s={:.4} reshape_time_s={:.4} max_angle_deg={:.3}",
        result.status,
        m.waypoints,
        m.initial_waypoints,
        m.iterations,
        m.alternations,
        m.init_time_s,
        m.reshape_time_s,
        result.path.max_turn_angle().to_degrees()
    );
    match result.status {
        PlanStatus::Success => Ok(()),
        PlanStatus::InitialPathFallback => Err(Failure::Planning(anyhow!("reshaping failed; initial path returned"))),
    }
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let qs: Vec<usize> = args
        .groups
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .context("parsing --groups")?;
    let planners: Vec<Planner> = args
        .planners
        .split(',')
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    if args.m < 3 {
        return Err(Failure::Input(anyhow!("--m must be at least 3")));
    }
    if !(args.theta_max > 0.0 && args.theta_max < 90.0) {
        return Err(Failure::Input(anyhow!("--theta-max must be in (0, 90) degrees")));
    }
    let mut cfg = BenchConfig::new(qs.iter().map(|&q| (q, args.trials)).collect(), planners, args.seed);
    cfg.shape = match args.shape {
        Shape::Rectangle => ObstacleShape::Rectangle,
        Shape::Circle => ObstacleShape::Circle,
    };
    cfg.rpr.m = args.m;
    cfg.curvature = CurvatureConfig::new(args.theta_max.to_radians());
    let res = run_benchmark(&cfg);
    if let Some(out) = &args.out_csv {
        write(out, &res.to_csv(args.timings))?;
    }
    print!("{}", res.summary_table());
    Ok(())
}

fn read_path(path: &FsPath) -> Result<Path, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let waypoints = match value {
        serde_json::Value::Object(mut obj) => obj
            .remove("waypoints")
            .ok_or_else(|| anyhow!("{}: no `waypoints` field", path.display()))?,
        other => other,
    };
    Ok(serde_json::from_value(waypoints).with_context(|| format!("reading waypoints of {}", path.display()))?)
}

fn render(args: RenderArgs) -> Result<(), Failure> {
    let (file, _) = load_env(&args.env)?;
    let paths = args
        .paths
        .iter()
        .enumerate()
        .map(|(i, p)| read_path(p).map(|path| (path, PathStyle::palette(i))))
        .collect::<Result<Vec<_>, _>>()?;
    render_svg(&file, &paths, &args.out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Plan(a) => plan(a),
        Command::Bench(a) => bench(a),
        Command::Render(a) => render(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Planning(e)) => {
            eprintln!("planning failed: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
