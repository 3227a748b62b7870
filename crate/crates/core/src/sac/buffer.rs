//! Fixed-capacity FIFO replay buffer with uniform sampling.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BufferError {
    #[error("dimension mismatch: expected {expected} for {what}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

/// One environment step. `done` marks true terminal states (success or
/// collision); timeouts are stored with `done = false` so the critic
/// still bootstraps through them.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    /// Normalized action in [-1, 1]^act_dim.
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_observation: Vec<f64>,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    act_dim: usize,
    data: Vec<Transition>,
    /// Ring write head once full.
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize, act_dim: usize) -> Self {
        assert!(capacity > 0);
        ReplayBuffer {
            capacity,
            obs_dim,
            act_dim,
            data: Vec::with_capacity(capacity.min(1 << 20)),
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Appends a transition, evicting the oldest once at capacity.
    pub fn push(&mut self, t: Transition) -> Result<(), BufferError> {
        let check = |what, expected, got| {
            if expected != got {
                Err(BufferError::DimensionMismatch {
                    what,
                    expected,
                    got,
                })
            } else {
                Ok(())
            }
        };
        check("observation", self.obs_dim, t.observation.len())?;
        check("next_observation", self.obs_dim, t.next_observation.len())?;
        check("action", self.act_dim, t.action.len())?;
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.next] = t;
            self.next = (self.next + 1) % self.capacity;
        }
        Ok(())
    }

    /// Uniform sampling with replacement.
    pub fn sample<'a, R: Rng>(&'a self, rng: &mut R, n: usize) -> Vec<&'a Transition> {
        assert!(!self.is_empty(), "cannot sample from an empty buffer");
        (0..n)
            .map(|_| &self.data[rng.random_range(0..self.data.len())])
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.data.iter()
    }
}
