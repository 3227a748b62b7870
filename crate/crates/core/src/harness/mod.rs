//! Training orchestrator: episode loop with mode selection, curriculum
//! wiring and replay injection, plus evaluation sweeps and metrics
//! emission.

pub mod plots;
pub mod scenes;

use crate::curriculum::{CurriculumConfig, CurriculumState};
use crate::env::{EnvConfig, EnvError, Mode, NavEnv};
use crate::graph::{
    encode_graph, graph_noise, ground_truth_graph, pseudo_embed, GraphConfig, GraphError,
    SceneGraph,
};
use crate::planner::{
    build_grid, cache_key, dijkstra_all, load_cache, lookahead_point, nearest_grid_point,
    pure_pursuit_step, save_cache, GridMap, PathTable, PlannerConfig, PlannerError,
    PurePursuitConfig,
};
use crate::rng::{substream, substream_indexed};
use crate::sac::{
    save_checkpoint, SacAgent, SacConfig, SacError, Transition,
};
use crate::scene::{wrap_angle, Pose, Scene, SceneError, Twist, VelocityLimits};
use rand::Rng;
use scenes::{gen_scene, SceneFamily};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::rc::Rc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error("{context}: {source}")]
    Env {
        context: String,
        source: EnvError,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{context}: {source}")]
    Sac {
        context: String,
        source: SacError,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("evaluation bucket has zero episodes")]
    EmptyBucket,
}

impl HarnessError {
    /// Process exit code contract: 2 config, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Scene(_) | HarnessError::EmptyBucket => 2,
            HarnessError::Sac {
                source: SacError::NaNDetected { .. },
                ..
            } => 3,
            _ => 1,
        }
    }
}

/// Which graph information enters the observation's graph slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    /// Zeros in the graph slot (layout unchanged).
    NoGraph,
    /// The target node's own feature vector.
    TargetOnly,
    /// Similarity-pooled encoding of the (optionally noised) graph.
    ScenePooled,
    /// Similarity-pooled encoding of the clean ground-truth graph.
    GtGraph,
}

impl std::str::FromStr for Ablation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "no_graph" | "nograph" => Ok(Ablation::NoGraph),
            "target_only" | "target" => Ok(Ablation::TargetOnly),
            "scene_pooled" | "scene" => Ok(Ablation::ScenePooled),
            "gt_graph" | "gt" => Ok(Ablation::GtGraph),
            other => Err(format!("unknown ablation {other:?}")),
        }
    }
}

/// Where episode scenes come from.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum SceneSource {
    /// Re-generated every episode with a per-episode seed, so the active
    /// slot (and chair configuration) varies while the room stays fixed.
    Generated { family: SceneFamily },
    /// A fixed scene loaded from a file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunConfig {
    pub scene: SceneSource,
    /// Goal command; defaults to the active candidate's label.
    pub goal_text: Option<String>,
    pub ablation: Ablation,
    /// Fraction of episodes driven by the demonstration controller.
    pub control_fraction: f64,
    pub total_steps: usize,
    pub master_seed: u64,
    pub env: EnvConfig,
    pub graph: GraphConfig,
    pub planner: PlannerConfig,
    pub curriculum: CurriculumConfig,
    pub sac: SacConfig,
    /// Scale applied to the 6 geometry components of the graph slot at
    /// the network input (positions are meters; everything else is unit
    /// scale).
    pub geometry_input_scale: f64,
    /// Env steps between periodic checkpoints; 0 disables periodic
    /// saves (the final checkpoint is always written).
    pub checkpoint_every: usize,
    /// Log every n-th update to the loss CSV.
    pub loss_log_every: usize,
    /// Dump per-step episode traces (step, pose, action, reward, flags).
    pub dump_traces: bool,
}

impl RunConfig {
    pub fn new(scene: SceneSource, ablation: Ablation) -> Self {
        let mut env = EnvConfig::default();
        env.d_emb = 32;
        let graph = GraphConfig {
            d_emb: 32,
            ..GraphConfig::default()
        };
        RunConfig {
            scene,
            goal_text: None,
            ablation,
            control_fraction: 0.3,
            total_steps: 50_000,
            master_seed: 0,
            env,
            graph,
            planner: PlannerConfig::default(),
            curriculum: CurriculumConfig::default(),
            sac: SacConfig::default(),
            geometry_input_scale: 0.1,
            checkpoint_every: 0,
            loss_log_every: 50,
            dump_traces: false,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(0.0..1.0).contains(&self.control_fraction) {
            return Err(HarnessError::Config(format!(
                "control_fraction must be in [0, 1), got {}",
                self.control_fraction
            )));
        }
        if self.env.d_emb != self.graph.d_emb {
            return Err(HarnessError::Config(format!(
                "env.d_emb ({}) != graph.d_emb ({})",
                self.env.d_emb, self.graph.d_emb
            )));
        }
        if self.planner.lookahead < self.planner.resolution {
            return Err(HarnessError::Config(
                "lookahead must be >= grid resolution".into(),
            ));
        }
        Ok(())
    }

    pub fn from_toml_file(path: &Path) -> Result<RunConfig, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Bernoulli mode draw: `Control` with probability `fraction`.
pub fn choose_mode<R: Rng>(rng: &mut R, fraction: f64) -> Mode {
    assert!((0.0..1.0).contains(&fraction));
    if rng.random::<f64>() < fraction {
        Mode::Control
    } else {
        Mode::Policy
    }
}

/// Per-feature input scaling for the learner: geometry components of the
/// graph slot are meters and get compressed; everything else is already
/// unit scale.
pub fn observation_input_scale(env: &EnvConfig, geometry_scale: f64) -> Vec<f64> {
    let mut scale = vec![1.0; env.observation_dim()];
    let graph_slot_start = 2 + env.d_emb + env.rays;
    for s in scale.iter_mut().skip(graph_slot_start).take(6) {
        *s = geometry_scale;
    }
    scale
}

/// Builds the observation graph slot for the configured ablation.
fn build_graph_slot<R: Rng>(
    cfg: &RunConfig,
    graph: &SceneGraph,
    goal_embedding: &[f64],
    noise_rng: &mut R,
) -> Result<Vec<f64>, HarnessError> {
    let d = cfg.graph.d_emb;
    let slot = match cfg.ablation {
        Ablation::NoGraph => vec![0.0; d + 6],
        Ablation::TargetOnly => {
            let target = graph
                .nodes
                .iter()
                .find(|n| n.is_target)
                .expect("ground-truth graphs always carry the target node");
            target.feature()
        }
        Ablation::ScenePooled => {
            let noisy = if cfg.graph.noise_sigma_pos > 0.0 || cfg.graph.noise_p_drop > 0.0 {
                graph_noise(
                    graph,
                    noise_rng,
                    cfg.graph.noise_sigma_pos,
                    cfg.graph.noise_p_drop,
                )
            } else {
                graph.clone()
            };
            encode_graph(&noisy, goal_embedding, cfg.graph.tau)?.0
        }
        Ablation::GtGraph => encode_graph(graph, goal_embedding, cfg.graph.tau)?.0,
    };
    Ok(slot)
}

/// Cached planner artifacts per scene geometry.
struct PlannerStore {
    cfg: PlannerConfig,
    footprint: crate::scene::RobotFootprint,
    entries: BTreeMap<[u8; 32], Rc<(GridMap, PathTable)>>,
    /// Optional on-disk cache directory.
    disk_dir: Option<PathBuf>,
}

impl PlannerStore {
    fn new(cfg: PlannerConfig, footprint: crate::scene::RobotFootprint) -> Self {
        PlannerStore {
            cfg,
            footprint,
            entries: BTreeMap::new(),
            disk_dir: None,
        }
    }

    fn with_disk(mut self, dir: Option<PathBuf>) -> Self {
        self.disk_dir = dir;
        self
    }

    fn get(&mut self, scene: &Scene) -> Result<Rc<(GridMap, PathTable)>, HarnessError> {
        let key = cache_key(scene, &self.footprint, &self.cfg);
        if let Some(hit) = self.entries.get(&key) {
            return Ok(hit.clone());
        }
        let disk_path = self.disk_dir.as_ref().map(|d| {
            let hex: String = key.iter().map(|b| format!("{b:02x}")).collect();
            d.join(format!("paths-{hex}.bin"))
        });
        if let Some(p) = &disk_path {
            if let Some((grid, table)) = load_cache(p, &key)? {
                let entry = Rc::new((grid, table));
                self.entries.insert(key, entry.clone());
                return Ok(entry);
            }
        }
        let grid = build_grid(scene, &self.footprint, self.cfg.resolution)?;
        let targets: Vec<[f64; 2]> = scene
            .target_candidates
            .iter()
            .map(|t| t.ground())
            .collect();
        let table = dijkstra_all(&grid, &targets, self.cfg.connection_radius)?;
        if let Some(p) = &disk_path {
            if let Some(parent) = p.parent() {
                std::fs::create_dir_all(parent)?;
            }
            save_cache(p, &key, &grid, &table)?;
        }
        let entry = Rc::new((grid, table));
        self.entries.insert(key, entry.clone());
        Ok(entry)
    }
}

/// Demonstration controller: aligns with the path, tracks it with Pure
/// Pursuit, and turns in place toward the target once the distance
/// subtask is safely met, so the success check fires en route instead of
/// the robot threading the final waypoints along furniture edges.
pub struct ExpertDriver {
    path: Vec<[f64; 2]>,
    target: [f64; 2],
    pp: PurePursuitConfig,
    /// Distance at which tracking hands over to the final turn.
    stop_distance: f64,
    phase: ExpertPhase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ExpertPhase {
    AlignToPath,
    Track,
    AlignToTarget,
}

impl ExpertDriver {
    /// `None` when the path table has no route from the robot's grid
    /// point to the target.
    pub fn new(
        grid: &GridMap,
        table: &PathTable,
        target_index: usize,
        target: [f64; 2],
        start: &Pose,
        pp: PurePursuitConfig,
        stop_distance: f64,
    ) -> Option<Self> {
        let cell = nearest_grid_point(start, grid);
        let path = table.path(cell, target_index, grid)?.to_vec();
        Some(ExpertDriver {
            path,
            target,
            pp,
            stop_distance,
            phase: ExpertPhase::AlignToPath,
        })
    }

    pub fn action(&mut self, pose: &Pose, limits: &VelocityLimits) -> Twist {
        let turn_toward = |err: f64| -> Twist {
            Twist::new(0.0, (2.0 * err).clamp(-limits.w_max, limits.w_max))
        };
        if self.phase != ExpertPhase::AlignToTarget
            && pose.distance_to(self.target) <= self.stop_distance
        {
            self.phase = ExpertPhase::AlignToTarget;
        }
        match self.phase {
            ExpertPhase::AlignToPath => {
                let aim = lookahead_point(pose, &self.path, self.pp.lookahead);
                let err = wrap_angle(pose.bearing_to(aim) - pose.theta);
                if err.abs() > 0.3 {
                    turn_toward(err)
                } else {
                    self.phase = ExpertPhase::Track;
                    self.action(pose, limits)
                }
            }
            ExpertPhase::Track => {
                let twist = pure_pursuit_step(pose, &self.path, &self.pp, limits);
                if twist == Twist::ZERO {
                    self.phase = ExpertPhase::AlignToTarget;
                    self.action(pose, limits)
                } else {
                    twist
                }
            }
            ExpertPhase::AlignToTarget => {
                let err = wrap_angle(pose.bearing_to(self.target) - pose.theta);
                if err.abs() < 0.02 {
                    Twist::ZERO
                } else {
                    turn_toward(err)
                }
            }
        }
    }
}

// ---------------------------------------------------------------------
// Metrics.

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub episode: usize,
    pub mode: Mode,
    pub level_index: usize,
    pub r: f64,
    pub phi: f64,
    pub steps: usize,
    pub episode_return: f64,
    pub success: bool,
    pub collision: bool,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossRow {
    pub update: usize,
    pub critic: f64,
    pub actor: f64,
    pub alpha_loss: f64,
    pub alpha: f64,
    pub mean_q: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Metrics {
    pub episodes: Vec<EpisodeRow>,
    pub losses: Vec<LossRow>,
    /// (episode index, level_index, r, phi) at each level change.
    pub difficulty: Vec<(usize, usize, f64, f64)>,
}

impl Metrics {
    pub fn episodes_csv(&self) -> String {
        let mut s =
            String::from("episode,mode,level_index,r,phi,steps,return,success,collision,truncated\n");
        for e in &self.episodes {
            let mode = match e.mode {
                Mode::Policy => "policy",
                Mode::Control => "control",
            };
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                e.episode,
                mode,
                e.level_index,
                e.r,
                e.phi,
                e.steps,
                e.episode_return,
                u8::from(e.success),
                u8::from(e.collision),
                u8::from(e.truncated)
            ));
        }
        s
    }

    pub fn losses_csv(&self) -> String {
        let mut s = String::from("update,critic,actor,alpha_loss,alpha,mean_q\n");
        for l in &self.losses {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                l.update, l.critic, l.actor, l.alpha_loss, l.alpha, l.mean_q
            ));
        }
        s
    }

    pub fn difficulty_csv(&self) -> String {
        let mut s = String::from("episode,level_index,r,phi\n");
        for (e, li, r, phi) in &self.difficulty {
            s.push_str(&format!("{e},{li},{r},{phi}\n"));
        }
        s
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub agent: SacAgent,
    pub metrics: Metrics,
    pub episodes: usize,
    pub env_steps: usize,
    pub final_level: crate::curriculum::DifficultyLevel,
    pub checkpoint_path: Option<PathBuf>,
}

fn episode_scene(cfg: &RunConfig, fixed: &Option<Scene>, episode: usize) -> Scene {
    match (&cfg.scene, fixed) {
        (SceneSource::Generated { family }, _) => {
            let mut rng = substream_indexed(cfg.master_seed, "scene", episode as u64);
            gen_scene(*family, rng.random::<u64>())
        }
        (SceneSource::File { .. }, Some(scene)) => scene.clone(),
        (SceneSource::File { .. }, None) => unreachable!("file scene preloaded"),
    }
}

fn goal_text_for(cfg: &RunConfig, scene: &Scene) -> String {
    cfg.goal_text
        .clone()
        .unwrap_or_else(|| scene.active().label.clone())
}

#[derive(Debug, Default, Clone, Copy)]
pub struct EpisodeStats {
    pub steps: usize,
    pub episode_return: f64,
    pub success: bool,
    pub collision: bool,
    pub truncated: bool,
}

/// Full training loop. Writes metrics CSVs and the final checkpoint to
/// `out_dir` when provided; otherwise everything stays in memory.
pub fn run_training(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<TrainOutcome, HarnessError> {
    cfg.validate()?;
    let fixed_scene = match &cfg.scene {
        SceneSource::File { path } => {
            let scene = Scene::load(path)?;
            Some(scene)
        }
        SceneSource::Generated { .. } => None,
    };
    let obs_dim = cfg.env.observation_dim();
    let input_scale = observation_input_scale(&cfg.env, cfg.geometry_input_scale);
    let mut agent = SacAgent::new(
        obs_dim,
        2,
        cfg.sac,
        Some(input_scale),
        substream(cfg.master_seed, "sac"),
    );
    let mut buffer = crate::sac::ReplayBuffer::new(cfg.sac.buffer_capacity, obs_dim, 2);
    let mut curriculum = CurriculumState::new(cfg.curriculum);
    let mut store = PlannerStore::new(cfg.planner, cfg.env.footprint)
        .with_disk(out_dir.map(|d| d.join("cache")));
    let mut mode_rng = substream(cfg.master_seed, "mode");
    let mut metrics = Metrics::default();
    let mut env_steps = 0usize;
    let mut updates = 0usize;
    let mut episode = 0usize;
    let mut traces: Vec<(usize, Vec<String>)> = Vec::new();

    while env_steps < cfg.total_steps {
        let scene = episode_scene(cfg, &fixed_scene, episode);
        let goal_text = goal_text_for(cfg, &scene);
        let goal_embedding =
            pseudo_embed(scene.canonical_label(&goal_text), cfg.graph.d_emb)?;
        let graph = ground_truth_graph(&scene, cfg.graph.d_emb);
        let mut noise_rng = substream_indexed(cfg.master_seed, "graph-noise", episode as u64);
        let graph_slot = build_graph_slot(cfg, &graph, &goal_embedding, &mut noise_rng)?;
        let level = curriculum.current();
        let mode = choose_mode(&mut mode_rng, cfg.control_fraction);

        let planner_artifacts = if mode == Mode::Control {
            Some(store.get(&scene)?)
        } else {
            None
        };
        let mut env = NavEnv::new(scene.clone(), cfg.env);
        let mut init_rng = substream_indexed(cfg.master_seed, "init", episode as u64);

        // The expert needs the start pose, which only exists after
        // reset; pre-sample it with a cloned RNG so reset reproduces it.
        let mut expert = None;
        if let Some(artifacts) = &planner_artifacts {
            let mut probe_rng = init_rng.clone();
            let pose = crate::env::init_robot(
                level.r,
                level.phi,
                &scene,
                &cfg.env.footprint,
                &mut probe_rng,
            )
            .map_err(|source| HarnessError::Env {
                context: format!("episode {episode} init"),
                source,
            })?;
            let (grid, table) = &**artifacts;
            expert = ExpertDriver::new(
                grid,
                table,
                scene.active_target,
                scene.active().ground(),
                &pose,
                PurePursuitConfig::from(&cfg.planner),
                0.85 * cfg.env.dist_threshold,
            );
        }

        let mut trace_lines = cfg.dump_traces.then(|| {
            vec!["step,x,y,theta,action_v,action_w,reward,terminated,truncated".to_string()]
        });

        let limits = cfg.env.limits;
        let mut pending: Vec<Transition> = Vec::with_capacity(64);
        let stats = run_episode_loop(
            &mut env,
            level.r,
            level.phi,
            mode,
            goal_embedding,
            graph_slot,
            &mut init_rng,
            &mut agent,
            expert.as_mut(),
            &limits,
            &mut pending,
            trace_lines.as_mut(),
        )?;

        for t in pending.drain(..) {
            buffer
                .push(t)
                .map_err(|e| HarnessError::Config(format!("buffer push: {e}")))?;
        }
        // Gradient updates follow the env-step budget.
        let steps_after = env_steps + stats.steps;
        while env_steps < steps_after {
            env_steps += 1;
            if env_steps >= cfg.sac.warmup
                && env_steps % cfg.sac.update_every == 0
                && buffer.len() >= cfg.sac.batch_size
            {
                let batch = buffer.sample(agent.rng_mut(), cfg.sac.batch_size);
                let losses = agent.update(&batch).map_err(|source| HarnessError::Sac {
                    context: format!("update at env step {env_steps}"),
                    source,
                })?;
                updates += 1;
                if updates % cfg.loss_log_every == 0 {
                    metrics.losses.push(LossRow {
                        update: updates,
                        critic: losses.critic,
                        actor: losses.actor,
                        alpha_loss: losses.alpha_loss,
                        alpha: losses.alpha,
                        mean_q: losses.mean_q,
                    });
                }
            }
        }

        metrics.episodes.push(EpisodeRow {
            episode,
            mode,
            level_index: level.level_index,
            r: level.r,
            phi: level.phi,
            steps: stats.steps,
            episode_return: stats.episode_return,
            success: stats.success,
            collision: stats.collision,
            truncated: stats.truncated,
        });
        if let Some(lines) = trace_lines {
            traces.push((episode, lines));
        }
        curriculum.record_outcome(stats.success, mode);
        curriculum.maybe_advance();
        episode += 1;

        if cfg.checkpoint_every > 0 && env_steps % cfg.checkpoint_every < stats.steps {
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(format!("checkpoint-{env_steps}.bin"));
                save_checkpoint(&agent, &path).map_err(|source| HarnessError::Sac {
                    context: "periodic checkpoint".into(),
                    source,
                })?;
            }
        }
    }

    metrics.difficulty = curriculum
        .history()
        .iter()
        .map(|(e, l)| (*e, l.level_index, l.r, l.phi))
        .collect();

    let mut checkpoint_path = None;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("episodes.csv"), metrics.episodes_csv())?;
        std::fs::write(dir.join("losses.csv"), metrics.losses_csv())?;
        std::fs::write(dir.join("difficulty.csv"), metrics.difficulty_csv())?;
        for (ep, lines) in &traces {
            std::fs::write(dir.join(format!("trace-{ep:05}.csv")), lines.join("\n"))?;
        }
        let path = dir.join("checkpoint.bin");
        save_checkpoint(&agent, &path).map_err(|source| HarnessError::Sac {
            context: "final checkpoint".into(),
            source,
        })?;
        checkpoint_path = Some(path);
    }

    Ok(TrainOutcome {
        final_level: curriculum.current(),
        episodes: episode,
        env_steps,
        metrics,
        agent,
        checkpoint_path,
    })
}

/// Episode loop used by training: drives either the agent (stochastic)
/// or the expert, records transitions into `pending`.
#[allow(clippy::too_many_arguments)]
fn run_episode_loop<R: Rng>(
    env: &mut NavEnv,
    r: f64,
    phi: f64,
    mode: Mode,
    goal_embedding: Vec<f64>,
    graph_slot: Vec<f64>,
    init_rng: &mut R,
    agent: &mut SacAgent,
    mut expert: Option<&mut ExpertDriver>,
    limits: &VelocityLimits,
    pending: &mut Vec<Transition>,
    mut trace: Option<&mut Vec<String>>,
) -> Result<EpisodeStats, HarnessError> {
    let obs0 = env
        .reset(r, phi, mode, goal_embedding, graph_slot, init_rng)
        .map_err(|source| HarnessError::Env {
            context: format!("episode init at R = {r}, phi = {phi}"),
            source,
        })?;
    let mut obs = obs0.flatten();
    let mut stats = EpisodeStats::default();
    loop {
        let action: [f64; 2] = match mode {
            Mode::Policy => {
                let a = agent.act(&obs, false);
                [a[0], a[1]]
            }
            Mode::Control => match expert.as_deref_mut() {
                Some(driver) => {
                    let twist = driver.action(&env.state().pose, limits);
                    env.cfg.twist_to_action(&twist)
                }
                None => [0.0, 0.0],
            },
        };
        let result = env.step(action);
        stats.steps += 1;
        stats.episode_return += result.reward;
        if let Some(lines) = trace.as_deref_mut() {
            let pose = env.state().pose;
            lines.push(format!(
                "{},{},{},{},{},{},{},{},{}",
                stats.steps,
                pose.x,
                pose.y,
                pose.theta,
                action[0],
                action[1],
                result.reward,
                u8::from(result.terminated),
                u8::from(result.truncated)
            ));
        }
        let next_obs = result.observation.flatten();
        pending.push(Transition {
            observation: obs,
            action: action.to_vec(),
            reward: result.reward,
            next_observation: next_obs.clone(),
            done: result.terminated,
        });
        obs = next_obs;
        if result.terminated || result.truncated {
            stats.success = result.info.success;
            stats.collision = result.info.collision;
            stats.truncated = result.truncated;
            return Ok(stats);
        }
    }
}

// ---------------------------------------------------------------------
// Evaluation sweeps.

/// Action source for evaluation episodes.
pub enum EvalPolicy<'a> {
    /// Deterministic (tanh-mean) actions from a trained agent.
    Learned(&'a SacAgent),
    /// The Dijkstra + Pure Pursuit demonstration controller.
    Expert,
    /// Uniform random actions (baseline).
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalBucket {
    pub distance: f64,
    pub episodes: usize,
    pub successes: usize,
    pub total_steps: usize,
}

impl EvalBucket {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.episodes as f64
    }

    pub fn mean_steps(&self) -> f64 {
        self.total_steps as f64 / self.episodes as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub buckets: Vec<EvalBucket>,
}

impl EvalReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("distance,episodes,successes,success_rate,mean_steps\n");
        for b in &self.buckets {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                b.distance,
                b.episodes,
                b.successes,
                b.success_rate(),
                b.mean_steps()
            ));
        }
        s
    }
}

/// Evaluation sweep over initial-distance buckets. Heading offsets are
/// sampled uniformly in [0, pi]; episodes are policy-mode and
/// deterministic given `eval_seed`.
pub fn run_eval_sweep(
    cfg: &RunConfig,
    policy: EvalPolicy<'_>,
    distances: &[f64],
    episodes_per_bucket: usize,
    eval_seed: u64,
) -> Result<EvalReport, HarnessError> {
    cfg.validate()?;
    if episodes_per_bucket == 0 {
        return Err(HarnessError::EmptyBucket);
    }
    let fixed_scene = match &cfg.scene {
        SceneSource::File { path } => Some(Scene::load(path)?),
        SceneSource::Generated { .. } => None,
    };
    let mut store = PlannerStore::new(cfg.planner, cfg.env.footprint);
    // A cloned learned agent so stochastic state stays untouched; the
    // deterministic path never consumes RNG anyway.
    let mut learned = match &policy {
        EvalPolicy::Learned(agent) => Some((*agent).clone()),
        _ => None,
    };
    let mut buckets = Vec::with_capacity(distances.len());
    for (b_idx, &distance) in distances.iter().enumerate() {
        let mut successes = 0usize;
        let mut total_steps = 0usize;
        for e in 0..episodes_per_bucket {
            let tag = (b_idx * episodes_per_bucket + e) as u64;
            let mut ep_rng = substream_indexed(eval_seed, "eval-episode", tag);
            let scene = match &fixed_scene {
                Some(s) => s.clone(),
                None => {
                    let SceneSource::Generated { family } = &cfg.scene else {
                        unreachable!()
                    };
                    gen_scene(*family, ep_rng.random::<u64>())
                }
            };
            let phi = ep_rng.random_range(0.0..=std::f64::consts::PI);
            let goal_text = goal_text_for(cfg, &scene);
            let goal_embedding =
                pseudo_embed(scene.canonical_label(&goal_text), cfg.graph.d_emb)?;
            let graph = ground_truth_graph(&scene, cfg.graph.d_emb);
            let graph_slot = build_graph_slot(cfg, &graph, &goal_embedding, &mut ep_rng)?;

            let mut env = NavEnv::new(scene.clone(), cfg.env);
            let obs0 = env
                .reset(
                    distance,
                    phi,
                    Mode::Policy,
                    goal_embedding,
                    graph_slot,
                    &mut ep_rng,
                )
                .map_err(|source| HarnessError::Env {
                    context: format!("eval episode at R = {distance}"),
                    source,
                })?;
            let mut expert = match &policy {
                EvalPolicy::Expert => {
                    let artifacts = store.get(&scene)?;
                    let (grid, table) = &*artifacts;
                    ExpertDriver::new(
                        grid,
                        table,
                        scene.active_target,
                        scene.active().ground(),
                        &env.state().pose,
                        PurePursuitConfig::from(&cfg.planner),
                        0.85 * cfg.env.dist_threshold,
                    )
                }
                _ => None,
            };
            let mut obs = obs0.flatten();
            loop {
                let action: [f64; 2] = match &policy {
                    EvalPolicy::Learned(_) => {
                        let a = learned.as_mut().unwrap().act(&obs, true);
                        [a[0], a[1]]
                    }
                    EvalPolicy::Expert => match expert.as_mut() {
                        Some(driver) => {
                            let twist = driver.action(&env.state().pose, &cfg.env.limits);
                            cfg.env.twist_to_action(&twist)
                        }
                        None => [0.0, 0.0],
                    },
                    EvalPolicy::Random => [
                        ep_rng.random_range(-1.0..1.0),
                        ep_rng.random_range(-1.0..1.0),
                    ],
                };
                let result = env.step(action);
                total_steps += 1;
                obs = result.observation.flatten();
                if result.terminated || result.truncated {
                    if result.info.success {
                        successes += 1;
                    }
                    break;
                }
            }
        }
        buckets.push(EvalBucket {
            distance,
            episodes: episodes_per_bucket,
            successes,
            total_steps,
        });
    }
    Ok(EvalReport { buckets })
}
