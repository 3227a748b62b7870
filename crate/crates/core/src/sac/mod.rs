//! Compact soft actor-critic: squashed-Gaussian actor, twin critics with
//! Polyak-averaged targets, and learned entropy temperature.
//!
//! All gradients are derived by hand on top of the [`mlp`] primitives;
//! [`gradient_check`] compares them against central finite differences,
//! which is the correctness oracle for this module. Activations are tanh
//! and the log-std head is squashed smoothly into its bounds, so both
//! losses are differentiable everywhere the checker probes.

pub mod buffer;
pub mod mlp;

pub use buffer::{BufferError, ReplayBuffer, Transition};

use mlp::{Adam, LayerGrads, Mlp, ScalarAdam};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

const SQUASH_EPS: f64 = 1e-6;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

#[derive(Debug, Error)]
pub enum SacError {
    #[error("non-finite value in {context}: {diagnostic}")]
    NaNDetected {
        context: &'static str,
        diagnostic: String,
    },
    #[error("update requires a nonempty batch")]
    EmptyBatch,
    #[error("checkpoint io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format error: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SacConfig {
    /// Width of both hidden layers.
    pub hidden: usize,
    pub lr: f64,
    pub gamma: f64,
    /// Target-network retention: target = polyak * target + (1 - polyak) * online.
    pub polyak: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Defaults to -act_dim when unset.
    pub target_entropy: Option<f64>,
    pub log_std_min: f64,
    pub log_std_max: f64,
    pub init_alpha: f64,
    /// Env steps collected before updates start.
    pub warmup: usize,
    /// One gradient update per this many env steps.
    pub update_every: usize,
}

impl Default for SacConfig {
    fn default() -> Self {
        SacConfig {
            hidden: 64,
            lr: 3e-4,
            gamma: 0.99,
            polyak: 0.995,
            batch_size: 128,
            buffer_capacity: 100_000,
            target_entropy: None,
            log_std_min: -5.0,
            log_std_max: 2.0,
            init_alpha: 1.0,
            warmup: 1000,
            update_every: 1,
        }
    }
}

/// Actor, twin critics, their targets, and the log-temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub obs_dim: usize,
    pub act_dim: usize,
    /// Fixed per-feature input scaling applied to observations before
    /// the networks (part of the architecture, not learned).
    pub input_scale: Array1<f64>,
    pub actor: Mlp,
    pub q1: Mlp,
    pub q2: Mlp,
    pub q1_target: Mlp,
    pub q2_target: Mlp,
    pub log_alpha: f64,
}

impl PolicyParams {
    pub fn init<R: Rng>(
        obs_dim: usize,
        act_dim: usize,
        cfg: &SacConfig,
        input_scale: Option<Vec<f64>>,
        rng: &mut R,
    ) -> Self {
        let h = cfg.hidden;
        let actor = Mlp::init(&[obs_dim, h, h, 2 * act_dim], rng);
        let q1 = Mlp::init(&[obs_dim + act_dim, h, h, 1], rng);
        let q2 = Mlp::init(&[obs_dim + act_dim, h, h, 1], rng);
        let scale = input_scale.unwrap_or_else(|| vec![1.0; obs_dim]);
        assert_eq!(scale.len(), obs_dim);
        PolicyParams {
            obs_dim,
            act_dim,
            input_scale: Array1::from(scale),
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            actor,
            q1,
            q2,
            log_alpha: cfg.init_alpha.ln(),
        }
    }

    /// All-zero networks (tests and reference points).
    pub fn zeroed(obs_dim: usize, act_dim: usize, cfg: &SacConfig) -> Self {
        let h = cfg.hidden;
        let actor = Mlp::zeros(&[obs_dim, h, h, 2 * act_dim]);
        let q = Mlp::zeros(&[obs_dim + act_dim, h, h, 1]);
        PolicyParams {
            obs_dim,
            act_dim,
            input_scale: Array1::from(vec![1.0; obs_dim]),
            actor,
            q1: q.clone(),
            q2: q.clone(),
            q1_target: q.clone(),
            q2_target: q,
            log_alpha: cfg.init_alpha.ln(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    fn scale_rows(&self, obs: &Array2<f64>) -> Array2<f64> {
        obs * &self.input_scale
    }

    pub fn has_non_finite(&self) -> bool {
        self.actor.has_non_finite()
            || self.q1.has_non_finite()
            || self.q2.has_non_finite()
            || self.q1_target.has_non_finite()
            || self.q2_target.has_non_finite()
            || !self.log_alpha.is_finite()
    }
}

/// Mean and soft-clamped log-std split out of the actor head.
struct PolicyHead {
    mean: Array2<f64>,
    log_std: Array2<f64>,
    /// Pre-squash head output, needed for the backward pass.
    s_raw: Array2<f64>,
}

fn split_head(out: &Array2<f64>, act_dim: usize, cfg: &SacConfig) -> PolicyHead {
    let mean = out.slice(ndarray::s![.., ..act_dim]).to_owned();
    let s_raw = out.slice(ndarray::s![.., act_dim..]).to_owned();
    let half_span = 0.5 * (cfg.log_std_max - cfg.log_std_min);
    let log_std = s_raw.mapv(|s| cfg.log_std_min + half_span * (s.tanh() + 1.0));
    PolicyHead {
        mean,
        log_std,
        s_raw,
    }
}

/// Reparameterized squashed-Gaussian sample for a fixed noise draw.
struct SampledAction {
    a: Array2<f64>,
    std: Array2<f64>,
    /// Per-sample log-probability of `a` under the policy.
    log_prob: Array1<f64>,
}

fn sample_with_noise(head: &PolicyHead, eps: &Array2<f64>) -> SampledAction {
    let std = head.log_std.mapv(f64::exp);
    let u = &head.mean + &(&std * eps);
    let a = u.mapv(f64::tanh);
    let batch = a.nrows();
    let mut log_prob = Array1::zeros(batch);
    for b in 0..batch {
        let mut lp = 0.0;
        for d in 0..a.ncols() {
            let e = eps[(b, d)];
            lp += -0.5 * e * e - head.log_std[(b, d)] - LN_SQRT_2PI;
            let t = a[(b, d)];
            lp -= (1.0 - t * t + SQUASH_EPS).ln();
        }
        log_prob[b] = lp;
    }
    SampledAction { a, std, log_prob }
}

/// Policy action for one observation: `tanh(mean)` when deterministic,
/// a reparameterized sample otherwise. Components lie in (-1, 1).
pub fn act<R: Rng>(
    params: &PolicyParams,
    cfg: &SacConfig,
    observation: &[f64],
    deterministic: bool,
    rng: &mut R,
) -> Vec<f64> {
    assert_eq!(observation.len(), params.obs_dim);
    let x = Array2::from_shape_vec((1, params.obs_dim), observation.to_vec()).unwrap();
    let x = params.scale_rows(&x);
    let out = params.actor.infer(&x);
    let head = split_head(&out, params.act_dim, cfg);
    if deterministic {
        head.mean.row(0).mapv(f64::tanh).to_vec()
    } else {
        let eps = Array2::from_shape_fn((1, params.act_dim), |_| rng.sample(StandardNormal));
        let sampled = sample_with_noise(&head, &eps);
        sampled.a.row(0).to_vec()
    }
}

struct BatchArrays {
    obs: Array2<f64>,
    act: Array2<f64>,
    rew: Array1<f64>,
    next_obs: Array2<f64>,
    not_done: Array1<f64>,
}

/// Column concatenation with a guaranteed standard-layout result
/// (ndarray's `concatenate` can hand back F-order arrays, which would
/// leak fortran strides into every downstream matmul).
fn concat_cols(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (rows, ca) = a.dim();
    let cb = b.ncols();
    let mut out = Array2::zeros((rows, ca + cb));
    out.slice_mut(ndarray::s![.., ..ca]).assign(a);
    out.slice_mut(ndarray::s![.., ca..]).assign(b);
    out
}

fn batch_to_arrays(batch: &[&Transition], obs_dim: usize, act_dim: usize) -> BatchArrays {
    let b = batch.len();
    let mut obs = Array2::zeros((b, obs_dim));
    let mut act = Array2::zeros((b, act_dim));
    let mut rew = Array1::zeros(b);
    let mut next_obs = Array2::zeros((b, obs_dim));
    let mut not_done = Array1::zeros(b);
    for (i, t) in batch.iter().enumerate() {
        obs.row_mut(i).assign(&Array1::from(t.observation.clone()));
        act.row_mut(i).assign(&Array1::from(t.action.clone()));
        rew[i] = t.reward;
        next_obs
            .row_mut(i)
            .assign(&Array1::from(t.next_observation.clone()));
        not_done[i] = if t.done { 0.0 } else { 1.0 };
    }
    BatchArrays {
        obs,
        act,
        rew,
        next_obs,
        not_done,
    }
}

/// Fresh Gaussian noise for one update: next-state action sample (TD
/// target) and current-state reparameterized sample (actor loss).
pub struct UpdateNoise {
    eps_next: Array2<f64>,
    eps_cur: Array2<f64>,
}

fn draw_noise<R: Rng>(rng: &mut R, batch: usize, act_dim: usize) -> UpdateNoise {
    UpdateNoise {
        eps_next: Array2::from_shape_fn((batch, act_dim), |_| rng.sample(StandardNormal)),
        eps_cur: Array2::from_shape_fn((batch, act_dim), |_| rng.sample(StandardNormal)),
    }
}

/// TD targets y = r + gamma * (1 - done) * (min target Q - alpha * log pi).
fn compute_targets(
    params: &PolicyParams,
    cfg: &SacConfig,
    arrays: &BatchArrays,
    noise: &UpdateNoise,
) -> Array1<f64> {
    let x_next = params.scale_rows(&arrays.next_obs);
    let head = split_head(&params.actor.infer(&x_next), params.act_dim, cfg);
    let sampled = sample_with_noise(&head, &noise.eps_next);
    let q_in = concat_cols(&x_next, &sampled.a);
    let q1t = params.q1_target.infer(&q_in);
    let q2t = params.q2_target.infer(&q_in);
    let alpha = params.alpha();
    let mut y = Array1::zeros(arrays.rew.len());
    for b in 0..y.len() {
        let q_min = q1t[(b, 0)].min(q2t[(b, 0)]);
        y[b] = arrays.rew[b]
            + cfg.gamma * arrays.not_done[b] * (q_min - alpha * sampled.log_prob[b]);
    }
    y
}

/// Critic loss value only (shared by the finite-difference closures).
fn critic_loss_value(
    params: &PolicyParams,
    cfg: &SacConfig,
    arrays: &BatchArrays,
    noise: &UpdateNoise,
) -> f64 {
    let y = compute_targets(params, cfg, arrays, noise);
    let x = params.scale_rows(&arrays.obs);
    let q_in = concat_cols(&x, &arrays.act);
    let q1 = params.q1.infer(&q_in);
    let q2 = params.q2.infer(&q_in);
    let b = y.len() as f64;
    let mut loss = 0.0;
    for i in 0..y.len() {
        loss += (q1[(i, 0)] - y[i]).powi(2) + (q2[(i, 0)] - y[i]).powi(2);
    }
    loss / b
}

/// Critic loss and gradients for both critics; also returns the mean
/// online Q for diagnostics.
fn critic_loss_and_grads(
    params: &PolicyParams,
    cfg: &SacConfig,
    arrays: &BatchArrays,
    noise: &UpdateNoise,
) -> (f64, LayerGrads, LayerGrads, f64) {
    let y = compute_targets(params, cfg, arrays, noise);
    let x = params.scale_rows(&arrays.obs);
    let q_in = concat_cols(&x, &arrays.act);
    let (q1, c1) = params.q1.forward(&q_in);
    let (q2, c2) = params.q2.forward(&q_in);
    let b = y.len() as f64;
    let mut loss = 0.0;
    let mut g1 = Array2::zeros(q1.raw_dim());
    let mut g2 = Array2::zeros(q2.raw_dim());
    let mut q_sum = 0.0;
    for i in 0..y.len() {
        let d1 = q1[(i, 0)] - y[i];
        let d2 = q2[(i, 0)] - y[i];
        loss += d1 * d1 + d2 * d2;
        g1[(i, 0)] = 2.0 * d1 / b;
        g2[(i, 0)] = 2.0 * d2 / b;
        q_sum += q1[(i, 0)] + q2[(i, 0)];
    }
    let (grads1, _) = params.q1.backward(&c1, &g1);
    let (grads2, _) = params.q2.backward(&c2, &g2);
    (loss / b, grads1, grads2, q_sum / (2.0 * b))
}

/// Actor loss value only.
fn actor_loss_value(
    params: &PolicyParams,
    cfg: &SacConfig,
    arrays: &BatchArrays,
    noise: &UpdateNoise,
) -> f64 {
    let x = params.scale_rows(&arrays.obs);
    let head = split_head(&params.actor.infer(&x), params.act_dim, cfg);
    let sampled = sample_with_noise(&head, &noise.eps_cur);
    let q_in = concat_cols(&x, &sampled.a);
    let q1 = params.q1.infer(&q_in);
    let q2 = params.q2.infer(&q_in);
    let alpha = params.alpha();
    let b = arrays.rew.len();
    (0..b)
        .map(|i| alpha * sampled.log_prob[i] - q1[(i, 0)].min(q2[(i, 0)]))
        .sum::<f64>()
        / b as f64
}

/// Actor loss, its gradients, and the (detached) per-sample log-probs
/// that the temperature update reuses.
fn actor_loss_and_grads(
    params: &PolicyParams,
    cfg: &SacConfig,
    arrays: &BatchArrays,
    noise: &UpdateNoise,
) -> (f64, LayerGrads, Array1<f64>) {
    let batch = arrays.rew.len();
    let act_dim = params.act_dim;
    let alpha = params.alpha();
    let x = params.scale_rows(&arrays.obs);
    let (out, actor_cache) = params.actor.forward(&x);
    let head = split_head(&out, act_dim, cfg);
    let sampled = sample_with_noise(&head, &noise.eps_cur);

    let q_in = concat_cols(&x, &sampled.a);
    let (q1, c1) = params.q1.forward(&q_in);
    let (q2, c2) = params.q2.forward(&q_in);

    let b = batch as f64;
    let mut loss = 0.0;
    let mut gq1 = Array2::zeros(q1.raw_dim());
    let mut gq2 = Array2::zeros(q2.raw_dim());
    for i in 0..batch {
        let (v1, v2) = (q1[(i, 0)], q2[(i, 0)]);
        loss += alpha * sampled.log_prob[i] - v1.min(v2);
        // d loss / d q_selected = -1/B; ties resolve to q1.
        if v1 <= v2 {
            gq1[(i, 0)] = -1.0 / b;
        } else {
            gq2[(i, 0)] = -1.0 / b;
        }
    }
    loss /= b;

    let (_, gin1) = params.q1.backward(&c1, &gq1);
    let (_, gin2) = params.q2.backward(&c2, &gq2);
    // Gradient w.r.t. the sampled action: action columns of the critic
    // input gradients (observation columns are constants here).
    let d_a = gin1.slice(ndarray::s![.., params.obs_dim..]).to_owned()
        + gin2.slice(ndarray::s![.., params.obs_dim..]);

    // Chain through a = tanh(u), u = mean + std * eps, and the log-prob.
    let half_span = 0.5 * (cfg.log_std_max - cfg.log_std_min);
    let mut g_head = Array2::zeros((batch, 2 * act_dim));
    let lp_coeff = alpha / b;
    for i in 0..batch {
        for d in 0..act_dim {
            let t = sampled.a[(i, d)];
            let one_minus_t2 = 1.0 - t * t;
            let dlp_du = 2.0 * t * one_minus_t2 / (one_minus_t2 + SQUASH_EPS);
            let g_u = d_a[(i, d)] * one_minus_t2 + lp_coeff * dlp_du;
            let g_mean = g_u;
            let g_log_std =
                g_u * sampled.std[(i, d)] * noise.eps_cur[(i, d)] - lp_coeff;
            let s = head.s_raw[(i, d)].tanh();
            let g_s_raw = g_log_std * half_span * (1.0 - s * s);
            g_head[(i, d)] = g_mean;
            g_head[(i, act_dim + d)] = g_s_raw;
        }
    }
    let (actor_grads, _) = params.actor.backward(&actor_cache, &g_head);
    (loss, actor_grads, sampled.log_prob)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SacLosses {
    pub critic: f64,
    pub actor: f64,
    pub alpha_loss: f64,
    pub alpha: f64,
    pub mean_q: f64,
}

/// The learner: parameters, optimizer state, and its own noise stream.
#[derive(Debug, Clone)]
pub struct SacAgent {
    pub cfg: SacConfig,
    pub params: PolicyParams,
    opt_actor: Adam,
    opt_q1: Adam,
    opt_q2: Adam,
    opt_alpha: ScalarAdam,
    rng: ChaCha8Rng,
}

impl SacAgent {
    pub fn new(
        obs_dim: usize,
        act_dim: usize,
        cfg: SacConfig,
        input_scale: Option<Vec<f64>>,
        seed_rng: ChaCha8Rng,
    ) -> Self {
        let mut rng = seed_rng;
        let params = PolicyParams::init(obs_dim, act_dim, &cfg, input_scale, &mut rng);
        SacAgent {
            opt_actor: Adam::new(&params.actor, cfg.lr),
            opt_q1: Adam::new(&params.q1, cfg.lr),
            opt_q2: Adam::new(&params.q2, cfg.lr),
            opt_alpha: ScalarAdam::new(cfg.lr),
            cfg,
            params,
            rng,
        }
    }

    pub fn target_entropy(&self) -> f64 {
        self.cfg
            .target_entropy
            .unwrap_or(-(self.params.act_dim as f64))
    }

    pub fn act(&mut self, observation: &[f64], deterministic: bool) -> Vec<f64> {
        act(
            &self.params,
            &self.cfg,
            observation,
            deterministic,
            &mut self.rng,
        )
    }

    /// One SAC update on a sampled batch: critic step, actor step,
    /// temperature step, Polyak target update.
    pub fn update(&mut self, batch: &[&Transition]) -> Result<SacLosses, SacError> {
        if batch.is_empty() {
            return Err(SacError::EmptyBatch);
        }
        let arrays = batch_to_arrays(batch, self.params.obs_dim, self.params.act_dim);
        let noise = draw_noise(&mut self.rng, batch.len(), self.params.act_dim);

        let (critic_loss, g1, g2, mean_q) =
            critic_loss_and_grads(&self.params, &self.cfg, &arrays, &noise);
        self.opt_q1.step(&mut self.params.q1, &g1);
        self.opt_q2.step(&mut self.params.q2, &g2);

        let (actor_loss, ga, log_prob) =
            actor_loss_and_grads(&self.params, &self.cfg, &arrays, &noise);
        self.opt_actor.step(&mut self.params.actor, &ga);

        let target_entropy = self.target_entropy();
        let excess =
            log_prob.iter().map(|lp| lp + target_entropy).sum::<f64>() / log_prob.len() as f64;
        let alpha_loss = -self.params.log_alpha * excess;
        self.opt_alpha.step(&mut self.params.log_alpha, -excess);

        self.params
            .q1_target
            .polyak_from(&self.params.q1, self.cfg.polyak);
        self.params
            .q2_target
            .polyak_from(&self.params.q2, self.cfg.polyak);

        let losses = SacLosses {
            critic: critic_loss,
            actor: actor_loss,
            alpha_loss,
            alpha: self.params.alpha(),
            mean_q,
        };
        if !(losses.critic.is_finite()
            && losses.actor.is_finite()
            && losses.alpha_loss.is_finite()
            && losses.alpha.is_finite())
        {
            let diagnostic = format!(
                "losses = {losses:?}, params non-finite: {}",
                self.params.has_non_finite()
            );
            return Err(SacError::NaNDetected {
                context: "sac update",
                diagnostic,
            });
        }
        Ok(losses)
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

// ---------------------------------------------------------------------
// Finite-difference gradient verification.

/// Relative error between an analytic and a numeric derivative.
fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central finite difference step size.
pub const FD_STEP: f64 = 1e-5;

enum Net {
    Actor,
    Q1,
    Q2,
}

fn perturbed(params: &PolicyParams, net: &Net, idx: usize, delta: f64) -> PolicyParams {
    let mut p = params.clone();
    let target = match net {
        Net::Actor => &mut p.actor,
        Net::Q1 => &mut p.q1,
        Net::Q2 => &mut p.q2,
    };
    target.set_param(idx, target.get_param(idx) + delta);
    p
}

/// Compares analytic gradients of the critic and actor losses against
/// central finite differences on `coords_per_loss` randomly chosen
/// weights each; returns the maximum relative error observed.
pub fn gradient_check<R: Rng>(
    params: &PolicyParams,
    cfg: &SacConfig,
    batch: &[&Transition],
    coords_per_loss: usize,
    rng: &mut R,
) -> f64 {
    assert!(!batch.is_empty());
    let arrays = batch_to_arrays(batch, params.obs_dim, params.act_dim);
    let noise = draw_noise(rng, batch.len(), params.act_dim);
    let mut worst: f64 = 0.0;

    // Critic loss over both critics' parameters.
    let (_, g1, g2, _) = critic_loss_and_grads(params, cfg, &arrays, &noise);
    let n1 = params.q1.param_count();
    let n2 = params.q2.param_count();
    for _ in 0..coords_per_loss {
        let flat = rng.random_range(0..n1 + n2);
        let (net, idx, grads) = if flat < n1 {
            (Net::Q1, flat, &g1)
        } else {
            (Net::Q2, flat - n1, &g2)
        };
        let analytic = Mlp::get_grad(grads, idx);
        let plus = critic_loss_value(&perturbed(params, &net, idx, FD_STEP), cfg, &arrays, &noise);
        let minus =
            critic_loss_value(&perturbed(params, &net, idx, -FD_STEP), cfg, &arrays, &noise);
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        worst = worst.max(rel_err(analytic, numeric));
    }

    // Actor loss over the actor's parameters.
    let (_, ga, _) = actor_loss_and_grads(params, cfg, &arrays, &noise);
    let na = params.actor.param_count();
    for _ in 0..coords_per_loss {
        let idx = rng.random_range(0..na);
        let analytic = Mlp::get_grad(&ga, idx);
        let plus =
            actor_loss_value(&perturbed(params, &Net::Actor, idx, FD_STEP), cfg, &arrays, &noise);
        let minus = actor_loss_value(
            &perturbed(params, &Net::Actor, idx, -FD_STEP),
            cfg,
            &arrays,
            &noise,
        );
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        worst = worst.max(rel_err(analytic, numeric));
    }
    worst
}

// ---------------------------------------------------------------------
// Versioned binary checkpoint: params + optimizer state + RNG state.

const CHECKPOINT_MAGIC: &[u8; 4] = b"GNCK";
const CHECKPOINT_VERSION: u32 = 1;

fn write_mlp<W: Write>(w: &mut W, mlp: &Mlp) -> std::io::Result<()> {
    w.write_all(&(mlp.layers.len() as u64).to_le_bytes())?;
    for l in &mlp.layers {
        w.write_all(&(l.w.nrows() as u64).to_le_bytes())?;
        w.write_all(&(l.w.ncols() as u64).to_le_bytes())?;
        for x in l.w.iter() {
            w.write_all(&x.to_le_bytes())?;
        }
        for x in l.b.iter() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_mlp<R: Read>(r: &mut R) -> Result<Mlp, SacError> {
    let n = read_u64(r)? as usize;
    let mut layers = Vec::with_capacity(n);
    for _ in 0..n {
        let rows = read_u64(r)? as usize;
        let cols = read_u64(r)? as usize;
        let mut w = Array2::zeros((rows, cols));
        for x in w.iter_mut() {
            *x = read_f64(r)?;
        }
        let mut b = Array1::zeros(cols);
        for x in b.iter_mut() {
            *x = read_f64(r)?;
        }
        layers.push(mlp::Linear { w, b });
    }
    Ok(Mlp { layers })
}

fn write_adam<W: Write>(w: &mut W, adam: &Adam) -> std::io::Result<()> {
    w.write_all(&adam.t.to_le_bytes())?;
    let (m, v) = adam.tensors();
    write_mlp(w, &Mlp { layers: m.to_vec() })?;
    write_mlp(w, &Mlp { layers: v.to_vec() })
}

fn read_adam<R: Read>(r: &mut R, lr: f64) -> Result<Adam, SacError> {
    let t = read_u64(r)?;
    let m = read_mlp(r)?;
    let v = read_mlp(r)?;
    Ok(Adam::from_tensors(lr, t, m.layers, v.layers))
}

pub fn save_checkpoint(agent: &SacAgent, path: &Path) -> Result<(), SacError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    let cfg_text =
        toml::to_string(&agent.cfg).map_err(|e| SacError::Format(e.to_string()))?;
    w.write_all(&(cfg_text.len() as u64).to_le_bytes())?;
    w.write_all(cfg_text.as_bytes())?;
    let p = &agent.params;
    w.write_all(&(p.obs_dim as u64).to_le_bytes())?;
    w.write_all(&(p.act_dim as u64).to_le_bytes())?;
    for x in p.input_scale.iter() {
        w.write_all(&x.to_le_bytes())?;
    }
    w.write_all(&p.log_alpha.to_le_bytes())?;
    for mlp in [&p.actor, &p.q1, &p.q2, &p.q1_target, &p.q2_target] {
        write_mlp(&mut w, mlp)?;
    }
    for adam in [&agent.opt_actor, &agent.opt_q1, &agent.opt_q2] {
        write_adam(&mut w, adam)?;
    }
    w.write_all(&agent.opt_alpha.t.to_le_bytes())?;
    w.write_all(&agent.opt_alpha.m.to_le_bytes())?;
    w.write_all(&agent.opt_alpha.v.to_le_bytes())?;
    w.write_all(&agent.rng.get_seed())?;
    w.write_all(&agent.rng.get_stream().to_le_bytes())?;
    w.write_all(&agent.rng.get_word_pos().to_le_bytes())?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<SacAgent, SacError> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(SacError::Format("bad magic".into()));
    }
    let mut ver = [0u8; 4];
    r.read_exact(&mut ver)?;
    if u32::from_le_bytes(ver) != CHECKPOINT_VERSION {
        return Err(SacError::Format(format!(
            "unsupported checkpoint version {}",
            u32::from_le_bytes(ver)
        )));
    }
    let cfg_len = read_u64(&mut r)? as usize;
    let mut cfg_bytes = vec![0u8; cfg_len];
    r.read_exact(&mut cfg_bytes)?;
    let cfg: SacConfig = toml::from_str(
        std::str::from_utf8(&cfg_bytes).map_err(|e| SacError::Format(e.to_string()))?,
    )
    .map_err(|e| SacError::Format(e.to_string()))?;
    let obs_dim = read_u64(&mut r)? as usize;
    let act_dim = read_u64(&mut r)? as usize;
    let mut input_scale = Array1::zeros(obs_dim);
    for x in input_scale.iter_mut() {
        *x = read_f64(&mut r)?;
    }
    let log_alpha = read_f64(&mut r)?;
    let actor = read_mlp(&mut r)?;
    let q1 = read_mlp(&mut r)?;
    let q2 = read_mlp(&mut r)?;
    let q1_target = read_mlp(&mut r)?;
    let q2_target = read_mlp(&mut r)?;
    let opt_actor = read_adam(&mut r, cfg.lr)?;
    let opt_q1 = read_adam(&mut r, cfg.lr)?;
    let opt_q2 = read_adam(&mut r, cfg.lr)?;
    let alpha_t = read_u64(&mut r)?;
    let alpha_m = read_f64(&mut r)?;
    let alpha_v = read_f64(&mut r)?;
    let mut seed = [0u8; 32];
    r.read_exact(&mut seed)?;
    let stream = read_u64(&mut r)?;
    let mut wp = [0u8; 16];
    r.read_exact(&mut wp)?;
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from_le_bytes(wp));
    Ok(SacAgent {
        params: PolicyParams {
            obs_dim,
            act_dim,
            input_scale,
            actor,
            q1,
            q2,
            q1_target,
            q2_target,
            log_alpha,
        },
        opt_actor,
        opt_q1,
        opt_q2,
        opt_alpha: ScalarAdam {
            lr: cfg.lr,
            t: alpha_t,
            m: alpha_m,
            v: alpha_v,
        },
        cfg,
        rng,
    })
}
