//! Differential-drive kinematic simulator: episode lifecycle, curriculum
//! -parameterized initialization, observation assembly, the sparse
//! reward, and success/termination logic.
//!
//! The policy observation is mapless: normalized body velocity, the goal
//! text embedding, a forward fan of ray distances standing in for the
//! camera, and the scene-graph slot supplied by the harness. The robot
//! never observes its own pose.

use crate::scene::{
    admissible, collides, wrap_angle, Pose, RobotFootprint, Scene, Twist, VelocityLimits,
};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("robot initialization exhausted {attempts} attempts (R = {r}, phi = {phi}); scene/difficulty pair over-constrained")]
    InitExhausted { attempts: usize, r: f64, phi: f64 },
    #[error("dimension mismatch: expected {expected} for {what}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

/// Who drives an episode: the learned policy or the demonstration
/// control module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    Policy,
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnvConfig {
    /// Integration step, seconds.
    pub dt: f64,
    /// Episode step limit.
    pub max_steps: usize,
    pub limits: VelocityLimits,
    pub footprint: RobotFootprint,
    /// Success thresholds: planar distance and absolute heading error.
    pub dist_threshold: f64,
    pub angle_threshold: f64,
    /// Ray fan: count, range and field of view.
    pub rays: usize,
    pub ray_max: f64,
    pub fov: f64,
    /// Text-embedding dimension the observation layout expects.
    pub d_emb: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            dt: 0.1,
            max_steps: 300,
            limits: VelocityLimits::default(),
            footprint: RobotFootprint::default(),
            dist_threshold: 1.1,
            angle_threshold: 13.0_f64.to_radians(),
            rays: 24,
            ray_max: 10.0,
            fov: 120.0_f64.to_radians(),
            d_emb: 32,
        }
    }
}

impl EnvConfig {
    /// Flat observation length: twist (2) + goal (D) + rays (K) +
    /// graph slot (D + 6).
    pub fn observation_dim(&self) -> usize {
        2 + self.d_emb + self.rays + self.d_emb + 6
    }

    /// Maps a normalized action in [-1, 1]^2 onto the admissible set.
    pub fn action_to_twist(&self, action: [f64; 2]) -> Twist {
        Twist::new(
            action[0].clamp(-1.0, 1.0) * self.limits.v_max,
            action[1].clamp(-1.0, 1.0) * self.limits.w_max,
        )
    }

    pub fn twist_to_action(&self, twist: &Twist) -> [f64; 2] {
        [twist.v / self.limits.v_max, twist.w / self.limits.w_max]
    }
}

/// Success subtasks: distance error and heading error under threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubtaskStatus {
    pub dist_ok: bool,
    pub angle_ok: bool,
}

impl SubtaskStatus {
    pub fn both(&self) -> bool {
        self.dist_ok && self.angle_ok
    }

    pub fn count(&self) -> usize {
        usize::from(self.dist_ok) + usize::from(self.angle_ok)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvState {
    pub pose: Pose,
    pub twist: Twist,
    pub step_count: usize,
    pub episode_mode: Mode,
}

/// Mapless policy observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Body velocity normalized by the velocity limits.
    pub twist: [f64; 2],
    pub goal_embedding: Vec<f64>,
    /// Ray distances normalized to [0, 1] by `ray_max`.
    pub visual_proxy: Vec<f64>,
    pub graph_encoding: Vec<f64>,
}

impl Observation {
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(
            2 + self.goal_embedding.len() + self.visual_proxy.len() + self.graph_encoding.len(),
        );
        v.extend_from_slice(&self.twist);
        v.extend_from_slice(&self.goal_embedding);
        v.extend_from_slice(&self.visual_proxy);
        v.extend_from_slice(&self.graph_encoding);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub success: bool,
    pub collision: bool,
    pub status: SubtaskStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub info: StepInfo,
}

/// Unicycle integration with midpoint heading.
pub fn step_kinematics(pose: &Pose, twist: &Twist, dt: f64) -> Pose {
    assert!(dt > 0.0);
    let theta_mid = pose.theta + twist.w * dt / 2.0;
    Pose::new(
        pose.x + twist.v * theta_mid.cos() * dt,
        pose.y + twist.v * theta_mid.sin() * dt,
        pose.theta + twist.w * dt,
    )
}

/// Heading error to the active target: |wrapped(bearing - theta)|.
pub fn angle_error(pose: &Pose, target: [f64; 2]) -> f64 {
    wrap_angle(pose.bearing_to(target) - pose.theta).abs()
}

/// Distance and heading subtask flags against the configured thresholds.
pub fn subtask_status(pose: &Pose, scene: &Scene, cfg: &EnvConfig) -> SubtaskStatus {
    let target = scene.active().ground();
    SubtaskStatus {
        dist_ok: pose.distance_to(target) <= cfg.dist_threshold,
        angle_ok: angle_error(pose, target) <= cfg.angle_threshold,
    }
}

/// The sparse four-case reward. Terminal failures dominate; otherwise
/// the step reward depends on how many subtasks currently hold.
pub fn reward(status: SubtaskStatus, collided: bool, timed_out: bool) -> f64 {
    if collided || timed_out {
        -5.0
    } else if status.both() {
        2.0
    } else if status.count() == 1 {
        -0.1
    } else {
        -0.2
    }
}

/// Places the robot on the circle of radius `r` around the active
/// target: position angle alpha is uniform, heading is the bearing to
/// the target offset by +/-phi (sign equiprobable). Inadmissible draws
/// are rejected and resampled, up to `INIT_ATTEMPTS` times.
pub const INIT_ATTEMPTS: usize = 1000;

pub fn init_robot<R: Rng>(
    r: f64,
    phi: f64,
    scene: &Scene,
    footprint: &RobotFootprint,
    rng: &mut R,
) -> Result<Pose, EnvError> {
    let target = scene.active().ground();
    for _ in 0..INIT_ATTEMPTS {
        let alpha = rng.random_range(0.0..std::f64::consts::TAU);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let x = target[0] + r * alpha.cos();
        let y = target[1] + r * alpha.sin();
        let bearing = (target[1] - y).atan2(target[0] - x);
        let pose = Pose::new(x, y, bearing + sign * phi);
        if admissible(&pose, footprint, scene) {
            return Ok(pose);
        }
    }
    Err(EnvError::InitExhausted {
        attempts: INIT_ATTEMPTS,
        r,
        phi,
    })
}

/// Casts the forward ray fan against scene obstacles (room bounds are
/// not part of the proxy). Returns distances in meters, in [0, ray_max].
pub fn cast_rays(pose: &Pose, scene: &Scene, cfg: &EnvConfig) -> Vec<f64> {
    let k = cfg.rays;
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let frac = if k == 1 {
            0.5
        } else {
            i as f64 / (k - 1) as f64
        };
        let angle = pose.theta - cfg.fov / 2.0 + frac * cfg.fov;
        let dir = [angle.cos(), angle.sin()];
        let mut nearest = cfg.ray_max;
        for o in &scene.obstacles {
            if let Some(t) = ray_obstacle_hit(pose.position(), dir, o) {
                if t < nearest {
                    nearest = t;
                }
            }
        }
        out.push(nearest.clamp(0.0, cfg.ray_max));
    }
    out
}

fn ray_obstacle_hit(p: [f64; 2], d: [f64; 2], o: &crate::scene::Obstacle) -> Option<f64> {
    match &o.shape {
        crate::scene::ObstacleShape::Box { half_extents } => {
            // Slab method.
            let mut t_near = f64::NEG_INFINITY;
            let mut t_far = f64::INFINITY;
            for axis in 0..2 {
                let lo = o.center[axis] - half_extents[axis];
                let hi = o.center[axis] + half_extents[axis];
                if d[axis].abs() < 1e-12 {
                    if p[axis] < lo || p[axis] > hi {
                        return None;
                    }
                } else {
                    let t1 = (lo - p[axis]) / d[axis];
                    let t2 = (hi - p[axis]) / d[axis];
                    let (t1, t2) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
                    t_near = t_near.max(t1);
                    t_far = t_far.min(t2);
                    if t_near > t_far {
                        return None;
                    }
                }
            }
            if t_far < 0.0 {
                None
            } else {
                Some(t_near.max(0.0))
            }
        }
        crate::scene::ObstacleShape::Circle { radius } => {
            let ox = p[0] - o.center[0];
            let oy = p[1] - o.center[1];
            let b = d[0] * ox + d[1] * oy;
            let c = ox * ox + oy * oy - radius * radius;
            let disc = b * b - c;
            if disc < 0.0 {
                return None;
            }
            let sqrt_disc = disc.sqrt();
            let t1 = -b - sqrt_disc;
            let t2 = -b + sqrt_disc;
            if t1 >= 0.0 {
                Some(t1)
            } else if t2 >= 0.0 {
                Some(0.0) // origin inside the circle
            } else {
                None
            }
        }
    }
}

/// Assembles the observation: normalized twist, goal embedding, ray fan
/// normalized to [0, 1], and the graph slot verbatim.
pub fn observe(
    state: &EnvState,
    scene: &Scene,
    graph_encoding: &[f64],
    goal_embedding: &[f64],
    cfg: &EnvConfig,
) -> Result<Observation, EnvError> {
    if goal_embedding.len() != cfg.d_emb {
        return Err(EnvError::DimensionMismatch {
            what: "goal embedding",
            expected: cfg.d_emb,
            got: goal_embedding.len(),
        });
    }
    if graph_encoding.len() != cfg.d_emb + 6 {
        return Err(EnvError::DimensionMismatch {
            what: "graph encoding",
            expected: cfg.d_emb + 6,
            got: graph_encoding.len(),
        });
    }
    let rays = cast_rays(&state.pose, scene, cfg);
    Ok(Observation {
        twist: [
            state.twist.v / cfg.limits.v_max,
            state.twist.w / cfg.limits.w_max,
        ],
        goal_embedding: goal_embedding.to_vec(),
        visual_proxy: rays.into_iter().map(|r| r / cfg.ray_max).collect(),
        graph_encoding: graph_encoding.to_vec(),
    })
}

/// A live episode: scene, config, and the mutable state plus the
/// per-episode conditioning vectors supplied at reset.
#[derive(Debug, Clone)]
pub struct NavEnv {
    pub scene: Scene,
    pub cfg: EnvConfig,
    state: EnvState,
    goal_embedding: Vec<f64>,
    graph_slot: Vec<f64>,
    live: bool,
}

impl NavEnv {
    pub fn new(scene: Scene, cfg: EnvConfig) -> Self {
        let state = EnvState {
            pose: Pose::new(0.0, 0.0, 0.0),
            twist: Twist::ZERO,
            step_count: 0,
            episode_mode: Mode::Policy,
        };
        NavEnv {
            scene,
            cfg,
            state,
            goal_embedding: vec![0.0; 0],
            graph_slot: vec![0.0; 0],
            live: false,
        }
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn is_live(&self) -> bool {
        self.live
    }

    /// Starts an episode at difficulty (r, phi). The goal embedding and
    /// graph slot condition every observation of the episode.
    pub fn reset<R: Rng>(
        &mut self,
        r: f64,
        phi: f64,
        mode: Mode,
        goal_embedding: Vec<f64>,
        graph_slot: Vec<f64>,
        rng: &mut R,
    ) -> Result<Observation, EnvError> {
        let pose = init_robot(r, phi, &self.scene, &self.cfg.footprint, rng)?;
        self.state = EnvState {
            pose,
            twist: Twist::ZERO,
            step_count: 0,
            episode_mode: mode,
        };
        self.goal_embedding = goal_embedding;
        self.graph_slot = graph_slot;
        let obs = self.observe()?;
        self.live = true;
        Ok(obs)
    }

    pub fn observe(&self) -> Result<Observation, EnvError> {
        observe(
            &self.state,
            &self.scene,
            &self.graph_slot,
            &self.goal_embedding,
            &self.cfg,
        )
    }

    /// Steps with a normalized action in [-1, 1]^2.
    pub fn step(&mut self, action: [f64; 2]) -> StepResult {
        self.step_twist(self.cfg.action_to_twist(action))
    }

    /// Steps with an explicit velocity command (clamped into the
    /// admissible set).
    pub fn step_twist(&mut self, action: Twist) -> StepResult {
        assert!(self.live, "step called on a finished or unreset episode");
        let cfg = self.cfg;
        let twist = action.clamped(&cfg.limits);
        let pose = step_kinematics(&self.state.pose, &twist, cfg.dt);
        self.state.pose = pose;
        self.state.twist = twist;
        self.state.step_count += 1;

        let collided = collides(&pose, &cfg.footprint, &self.scene);
        let status = subtask_status(&pose, &self.scene, &cfg);
        let success = !collided && status.both();
        let timed_out = !collided && !success && self.state.step_count >= cfg.max_steps;
        let reward = reward(status, collided, timed_out);
        let terminated = collided || success;
        let truncated = timed_out;
        if terminated || truncated {
            self.live = false;
        }
        StepResult {
            observation: self.observe().expect("dimensions fixed at reset"),
            reward,
            terminated,
            truncated,
            info: StepInfo {
                success,
                collision: collided,
                status,
            },
        }
    }
}
