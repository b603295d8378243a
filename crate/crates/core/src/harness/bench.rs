//! Batch planner comparison over random environments.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::cfs::ObjectiveModel;
use crate::curvature::{erpr_plan, CurvatureConfig};
use crate::env::{GridEnvironment, Obstacle};
use crate::geom::{ConvexPolygon, Path};
use crate::roadmap;
use crate::rpr::{cfs_from_line, rpr_from_initial, PlanResult, PlanStatus, RprConfig};

use super::audit::{audit_path, AuditReport};
use super::generate::{generate_connected_environment, EnvSpec, ObstacleShape};

pub const CSV_HEADER: &str = "group,trial,planner,q,seed,status,total_time_s,init_time_s,waypoints,J_final,max_angle_deg";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Planner {
    /// CFS from the straight start-goal segment.
    CfsLine,
    RprAll,
    RprM,
    ErprM,
}

impl Planner {
    pub const ALL: [Planner; 4] = [Planner::CfsLine, Planner::RprAll, Planner::RprM, Planner::ErprM];

    /// Display name, with the segment size substituted for `m`.
    pub fn label(self, m: usize) -> String {
        match self {
            Planner::CfsLine => "CFS-line".into(),
            Planner::RprAll => "RPR-ALL".into(),
            Planner::RprM => format!("RPR-{m}"),
            Planner::ErprM => format!("ERPR-{m}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown planner `{0}` (expected cfs-line, rpr-all, rpr-m or erpr-m)")]
pub struct UnknownPlanner(pub String);

impl FromStr for Planner {
    type Err = UnknownPlanner;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cfs-line" | "cfs" => Ok(Planner::CfsLine),
            "rpr-all" => Ok(Planner::RprAll),
            "rpr-m" | "rpr" => Ok(Planner::RprM),
            "erpr-m" | "erpr" => Ok(Planner::ErprM),
            other => Err(UnknownPlanner(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Success,
    /// The planner gave up and returned its initial path.
    Fallback,
    /// CFS stopped without a feasible path.
    CfsFailed,
    /// The planner reported success but the audit rejected the path.
    AuditFailed,
    /// The planner returned an error.
    PlannerError,
    /// No environment could be generated for this trial.
    EnvError,
}

impl TrialStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialStatus::Success => "success",
            TrialStatus::Fallback => "fallback",
            TrialStatus::CfsFailed => "cfs_failed",
            TrialStatus::AuditFailed => "audit_failed",
            TrialStatus::PlannerError => "planner_error",
            TrialStatus::EnvError => "env_error",
        }
    }
}

impl fmt::Display for TrialStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    /// `(q, trials)` per group.
    pub groups: Vec<(usize, usize)>,
    pub planners: Vec<Planner>,
    pub base_seed: u64,
    pub shape: ObstacleShape,
    /// Segment size and CFS settings shared by every planner.
    pub rpr: RprConfig,
    pub curvature: CurvatureConfig,
}

impl BenchConfig {
    pub fn new(groups: Vec<(usize, usize)>, planners: Vec<Planner>, base_seed: u64) -> Self {
        BenchConfig {
            groups,
            planners,
            base_seed,
            shape: ObstacleShape::Rectangle,
            rpr: RprConfig::default(),
            curvature: CurvatureConfig::new(30f64.to_radians()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    /// 1-based group index.
    pub group: usize,
    pub trial: usize,
    pub planner: Planner,
    pub q: usize,
    pub seed: u64,
    pub status: TrialStatus,
    pub init_time_s: f64,
    pub reshape_time_s: f64,
    pub initial_waypoints: usize,
    pub waypoints: usize,
    pub j_final: Option<f64>,
    pub max_angle_deg: Option<f64>,
    pub audit: Option<AuditReport>,
    /// Objective trace of every CFS solve in the run.
    #[serde(skip)]
    pub objective_traces: Vec<Vec<f64>>,
}

impl TrialRecord {
    pub fn total_time_s(&self) -> f64 {
        self.init_time_s + self.reshape_time_s
    }

    pub fn succeeded(&self) -> bool {
        self.status == TrialStatus::Success
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupSummary {
    pub group: usize,
    pub q: usize,
    pub planner: Planner,
    pub solved: usize,
    pub total: usize,
    /// Averages over solved trials; `None` when nothing was solved.
    pub avg_total_time_s: Option<f64>,
    pub avg_init_time_s: Option<f64>,
    pub avg_waypoints: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkResult {
    pub m: usize,
    pub groups: Vec<GroupSummary>,
    pub trials: Vec<TrialRecord>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Environment seed of `trial` in the 1-based `group`, independent of
/// execution order.
pub fn trial_seed(base_seed: u64, group: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ group as u64) ^ trial as u64)
}

struct Trial<'a> {
    obstacles: &'a [Obstacle],
    env: &'a GridEnvironment,
    hulls: &'a [ConvexPolygon],
}

struct Outcome {
    status: TrialStatus,
    path: Option<Path>,
    init_time_s: f64,
    reshape_time_s: f64,
    initial_waypoints: usize,
    traces: Vec<Vec<f64>>,
    theta_max: Option<f64>,
}

impl Outcome {
    fn error() -> Self {
        Outcome {
            status: TrialStatus::PlannerError,
            path: None,
            init_time_s: 0.0,
            reshape_time_s: 0.0,
            initial_waypoints: 0,
            traces: Vec::new(),
            theta_max: None,
        }
    }

    fn from_plan(r: PlanResult, theta_max: Option<f64>) -> Self {
        Outcome {
            status: match r.status {
                PlanStatus::Success => TrialStatus::Success,
                PlanStatus::InitialPathFallback => TrialStatus::Fallback,
            },
            init_time_s: r.metrics.init_time_s,
            reshape_time_s: r.metrics.reshape_time_s,
            initial_waypoints: r.metrics.initial_waypoints,
            traces: r.traces.into_iter().map(|t| t.objective_trace).collect(),
            path: Some(r.path),
            theta_max,
        }
    }
}

fn run_trial(group: usize, q: usize, trial: usize, cfg: &BenchConfig) -> Vec<TrialRecord> {
    let seed = trial_seed(cfg.base_seed, group, trial);
    let spec = EnvSpec::new(seed, q, cfg.shape);
    let record = |planner, o: Outcome, model_lambda: f64| {
        let mut rec = TrialRecord {
            group,
            trial,
            planner,
            q,
            seed,
            status: o.status,
            init_time_s: o.init_time_s,
            reshape_time_s: o.reshape_time_s,
            initial_waypoints: o.initial_waypoints,
            waypoints: 0,
            j_final: None,
            max_angle_deg: None,
            audit: None,
            objective_traces: o.traces,
        };
        if let Some(path) = o.path {
            rec.waypoints = path.len();
            rec.j_final = ObjectiveModel::new(path.len().max(2) - 1, model_lambda)
                .and_then(|m| m.evaluate(&path))
                .ok();
            rec.max_angle_deg = Some(path.max_turn_angle().to_degrees());
        }
        rec
    };
    let env_failed = |planner| TrialRecord {
        group,
        trial,
        planner,
        q,
        seed,
        status: TrialStatus::EnvError,
        init_time_s: 0.0,
        reshape_time_s: 0.0,
        initial_waypoints: 0,
        waypoints: 0,
        j_final: None,
        max_angle_deg: None,
        audit: None,
        objective_traces: Vec::new(),
    };
    let Some((obstacles, env)) = generate_connected_environment(&spec)
        .ok()
        .and_then(|(obs, _)| spec.build(&obs).ok().map(|env| (obs, env)))
    else {
        return cfg.planners.iter().map(|&p| env_failed(p)).collect();
    };
    let hulls = env.dilated_obstacle_hulls();
    let t = Trial {
        obstacles: &obstacles,
        env: &env,
        hulls: &hulls,
    };

    let t0 = Instant::now();
    let initial = roadmap::initial_path(&roadmap::build_roadmap(&env), spec.start, spec.goal);
    let roadmap_time_s = t0.elapsed().as_secs_f64();

    let rpr_with = |rc: &RprConfig| match &initial {
        Ok(init) => rpr_from_initial(t.env, t.hulls, init.clone(), roadmap_time_s, rc)
            .map(|r| Outcome::from_plan(r, None))
            .unwrap_or_else(|_| Outcome::error()),
        Err(_) => Outcome::error(),
    };

    cfg.planners
        .iter()
        .map(|&planner| {
            let o = match planner {
                Planner::CfsLine => match &initial {
                    Ok(init) => cfs_from_line(t.env, t.hulls, spec.start, spec.goal, init.len(), &cfg.rpr)
                        .map(|r| {
                            let mut o = Outcome::from_plan(r, None);
                            if o.status == TrialStatus::Fallback {
                                o.status = TrialStatus::CfsFailed;
                                o.path = None;
                            }
                            o
                        })
                        .unwrap_or_else(|_| Outcome::error()),
                    Err(_) => Outcome::error(),
                },
                Planner::RprAll => rpr_with(&cfg.rpr.all()),
                Planner::RprM => rpr_with(&cfg.rpr),
                Planner::ErprM => erpr_plan(t.env, spec.start, spec.goal, &cfg.rpr, &cfg.curvature)
                    .map(|r| Outcome::from_plan(r, Some(cfg.curvature.theta_max)))
                    .unwrap_or_else(|_| Outcome::error()),
            };
            let theta = o.theta_max;
            let path = o.path.clone();
            let mut rec = record(planner, o, cfg.rpr.lambda);
            if let Some(path) = path {
                let audit = audit_path(&path, t.obstacles, spec.start, spec.goal, spec.d_min, theta);
                if rec.status == TrialStatus::Success && !audit.passed() {
                    rec.status = TrialStatus::AuditFailed;
                }
                rec.audit = Some(audit);
            }
            rec
        })
        .collect()
}

/// Run every planner on every trial. Trials run in parallel; records come
/// back in (group, trial, planner) order.
pub fn run_benchmark(cfg: &BenchConfig) -> BenchmarkResult {
    let jobs: Vec<(usize, usize, usize)> = cfg
        .groups
        .iter()
        .enumerate()
        .flat_map(|(g, &(q, trials))| (0..trials).map(move |k| (g + 1, q, k)))
        .collect();
    let trials: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(g, q, k)| run_trial(g, q, k, cfg))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let groups = summarize(cfg, &trials);
    BenchmarkResult {
        m: cfg.rpr.m,
        groups,
        trials,
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn summarize(cfg: &BenchConfig, trials: &[TrialRecord]) -> Vec<GroupSummary> {
    let mut out = Vec::new();
    for (g, &(q, _)) in cfg.groups.iter().enumerate() {
        for &planner in &cfg.planners {
            let rows: Vec<&TrialRecord> = trials
                .iter()
                .filter(|r| r.group == g + 1 && r.planner == planner)
                .collect();
            let solved: Vec<&&TrialRecord> = rows.iter().filter(|r| r.succeeded()).collect();
            out.push(GroupSummary {
                group: g + 1,
                q,
                planner,
                solved: solved.len(),
                total: rows.len(),
                avg_total_time_s: mean(solved.iter().map(|r| r.total_time_s())),
                avg_init_time_s: mean(solved.iter().map(|r| r.init_time_s)),
                avg_waypoints: mean(solved.iter().map(|r| r.waypoints as f64)),
            });
        }
    }
    out
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl BenchmarkResult {
    /// Per-trial CSV. Wall times are left blank unless `timings` is set so
    /// that output is reproducible byte for byte.
    pub fn to_csv(&self, timings: bool) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.trials {
            let (total, init) = if timings {
                (format!("{:.6}", r.total_time_s()), format!("{:.6}", r.init_time_s))
            } else {
                (String::new(), String::new())
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.group,
                r.trial,
                r.planner.label(self.m),
                r.q,
                r.seed,
                r.status,
                total,
                init,
                r.waypoints,
                opt(r.j_final),
                opt(r.max_angle_deg),
            )
            .expect("writing to a String");
        }
        out
    }

    /// Fixed-width table of solved counts, times and waypoint counts.
    pub fn summary_table(&self) -> String {
        let mut out = format!(
            "{:<6} {:>4} {:<10} {:>14} {:>24} {:>10}\n",
            "group", "q", "planner", "solved", "avg time s (init s)", "waypoints"
        );
        for g in &self.groups {
            let pct = if g.total == 0 { 0.0 } else { 100.0 * g.solved as f64 / g.total as f64 };
            let time = match (g.avg_total_time_s, g.avg_init_time_s) {
                (Some(t), Some(i)) => format!("{t:.4} ({i:.4})"),
                _ => "-".into(),
            };
            let wp = g.avg_waypoints.map(|w| format!("{w:.1}")).unwrap_or_else(|| "-".into());
            writeln!(
                out,
                "{:<6} {:>4} {:<10} {:>14} {:>24} {:>10}",
                g.group,
                g.q,
                g.planner.label(self.m),
                format!("{}/{} ({:.1}%)", g.solved, g.total, pct),
                time,
                wp
            )
            .expect("writing to a String");
        }
        out
    }
}
