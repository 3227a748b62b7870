//! Scene-graph-conditioned mapless navigation at desk scale.
//!
//! The crate bundles everything needed to train and evaluate a
//! goal-conditioned navigation policy in a 2D differential-drive
//! simulator:
//!
//! * [`scene`] — geometry primitives, scene descriptions, collision and
//!   admissibility predicates.
//! * [`graph`] — scene-graph data model, deterministic pseudo-embeddings
//!   and the similarity-weighted pooling encoder.
//! * [`planner`] — admissibility grid, Dijkstra path tables, path
//!   simplification and the Pure Pursuit tracker used as the
//!   demonstration expert.
//! * [`env`] — the kinematic simulator: episode lifecycle, observations,
//!   reward and termination logic.
//! * [`curriculum`] — the difficulty ladder over initial distance and
//!   heading offset.
//! * [`sac`] — replay buffer and a compact soft actor-critic with
//!   hand-derived gradients checked against finite differences.
//! * [`harness`] — training orchestrator, evaluation sweeps, scene
//!   generators and metrics/plot emission.

pub mod curriculum;
pub mod env;
pub mod graph;
pub mod harness;
pub mod planner;
pub mod rng;
pub mod sac;
pub mod scene;
pub mod stats;

pub use env::{EnvConfig, NavEnv, Observation, StepResult, SubtaskStatus};
pub use graph::{GraphConfig, GraphEncoding, ObjectNode, SceneGraph};
pub use planner::{GridMap, PathTable, PlannerConfig, PurePursuitConfig};
pub use scene::{Pose, RobotFootprint, Scene, Twist, VelocityLimits};
