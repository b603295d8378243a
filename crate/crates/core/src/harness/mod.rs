//! Benchmark harness: random environments, batch runs, reports and SVG.

pub mod audit;
pub mod bench;
pub mod generate;
pub mod svg;

use thiserror::Error;

use crate::env::EnvError;

pub use audit::{audit_path, AuditReport};
pub use bench::{run_benchmark, BenchConfig, BenchmarkResult, GroupSummary, Planner, TrialRecord, TrialStatus};
pub use generate::{generate_connected_environment, generate_environment, EnvSpec, ObstacleShape};
pub use svg::{render_svg, svg_document, PathStyle};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("could not place obstacle {index} without overlap")]
    PlacementFailed { index: usize },
    #[error("no connected environment drawn for seed {seed}")]
    Disconnected { seed: u64 },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
