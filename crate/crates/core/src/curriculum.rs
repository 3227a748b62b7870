//! Difficulty ladder over the initial distance `R` and heading offset
//! `phi`, driven by the recent success rate of policy episodes.
//!
//! Training starts close to the target with no heading offset. When the
//! success rate over the last `window` policy episodes (demonstration
//! episodes are excluded) exceeds the threshold, phi grows by one step;
//! once phi is maxed, it resets to zero and R grows instead. The window
//! is cleared on every advancement so a new level starts with fresh
//! statistics.

use crate::env::Mode;
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CurriculumConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub delta_r: f64,
    pub phi_max: f64,
    pub delta_phi: f64,
    /// Success window length (policy episodes).
    pub window: usize,
    /// Advancement requires success rate strictly above this.
    pub threshold: f64,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        CurriculumConfig {
            r_min: 0.5,
            r_max: 3.0,
            delta_r: 0.5,
            phi_max: std::f64::consts::PI,
            delta_phi: std::f64::consts::PI / 8.0,
            window: 30,
            threshold: 0.85,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifficultyLevel {
    pub level_index: usize,
    pub r: f64,
    pub phi: f64,
}

/// First rung of the ladder.
pub fn start_level(cfg: &CurriculumConfig) -> DifficultyLevel {
    DifficultyLevel {
        level_index: 0,
        r: cfg.r_min,
        phi: 0.0,
    }
}

#[derive(Debug, Clone)]
pub struct CurriculumState {
    cfg: CurriculumConfig,
    current: DifficultyLevel,
    window: VecDeque<bool>,
    /// (episode index, level) pairs recording every level change, for
    /// the difficulty-vs-episode curve.
    history: Vec<(usize, DifficultyLevel)>,
    episodes_seen: usize,
}

impl CurriculumState {
    pub fn new(cfg: CurriculumConfig) -> Self {
        let current = start_level(&cfg);
        CurriculumState {
            cfg,
            current,
            window: VecDeque::with_capacity(cfg.window),
            history: vec![(0, current)],
            episodes_seen: 0,
        }
    }

    pub fn config(&self) -> &CurriculumConfig {
        &self.cfg
    }

    pub fn current(&self) -> DifficultyLevel {
        self.current
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn window_successes(&self) -> usize {
        self.window.iter().filter(|s| **s).count()
    }

    pub fn history(&self) -> &[(usize, DifficultyLevel)] {
        &self.history
    }

    pub fn episodes_seen(&self) -> usize {
        self.episodes_seen
    }

    /// Records one episode outcome. Control (demonstration) episodes are
    /// counted toward the episode index but never enter the window.
    pub fn record_outcome(&mut self, success: bool, mode: Mode) {
        self.episodes_seen += 1;
        if mode != Mode::Policy {
            return;
        }
        if self.window.len() == self.cfg.window {
            self.window.pop_front();
        }
        self.window.push_back(success);
    }

    /// Applies the advancement rule; returns whether the level changed.
    /// At most one transition per call, and only on a full window whose
    /// success rate strictly exceeds the threshold.
    pub fn maybe_advance(&mut self) -> bool {
        if self.window.len() < self.cfg.window {
            return false;
        }
        let rate = self.window_successes() as f64 / self.window.len() as f64;
        if rate <= self.cfg.threshold {
            return false;
        }
        let at_phi_max = self.current.phi >= self.cfg.phi_max - 1e-12;
        let at_r_max = self.current.r >= self.cfg.r_max - 1e-12;
        if at_phi_max && at_r_max {
            // Terminal level: nothing left to escalate.
            return false;
        }
        if !at_phi_max {
            self.current.phi = (self.current.phi + self.cfg.delta_phi).min(self.cfg.phi_max);
        } else {
            self.current.phi = 0.0;
            self.current.r = (self.current.r + self.cfg.delta_r).min(self.cfg.r_max);
        }
        self.current.level_index += 1;
        self.window.clear();
        self.history.push((self.episodes_seen, self.current));
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn state() -> CurriculumState {
        CurriculumState::new(CurriculumConfig::default())
    }

    #[test]
    fn start_level_uses_configured_minimum() {
        let cfg = CurriculumConfig::default();
        let level = start_level(&cfg);
        assert_eq!(level.r, 0.5);
        assert_eq!(level.phi, 0.0);

        let zero = CurriculumConfig {
            r_min: 0.0,
            ..cfg
        };
        assert_eq!(start_level(&zero).r, 0.0);
    }

    #[test]
    fn control_episodes_never_enter_window() {
        let mut s = state();
        for _ in 0..30 {
            s.record_outcome(true, Mode::Control);
        }
        assert_eq!(s.window_len(), 0);
        assert!(!s.maybe_advance());
    }

    #[test]
    fn window_capped_at_thirty() {
        let mut s = state();
        for _ in 0..31 {
            s.record_outcome(true, Mode::Policy);
        }
        assert_eq!(s.window_len(), 30);
        assert_eq!(s.window_successes(), 30);
    }

    #[test]
    fn interleaved_modes_match_filter_then_tail_oracle() {
        let mut s = state();
        let mut oracle: Vec<bool> = Vec::new();
        // Deterministic but irregular interleaving of modes and outcomes.
        for i in 0..200usize {
            let mode = if i % 3 == 0 { Mode::Control } else { Mode::Policy };
            let success = (i * 7) % 5 != 0;
            s.record_outcome(success, mode);
            if mode == Mode::Policy {
                oracle.push(success);
            }
        }
        let tail: Vec<bool> = oracle.iter().rev().take(30).rev().cloned().collect();
        let window: Vec<bool> = s.window.iter().cloned().collect();
        assert_eq!(window, tail);
    }

    #[test]
    fn twenty_six_of_thirty_advances_phi() {
        let mut s = state();
        for i in 0..30 {
            s.record_outcome(i < 26, Mode::Policy);
        }
        // 26/30 = 0.8667 > 0.85.
        assert!(s.maybe_advance());
        let level = s.current();
        assert_eq!(level.phi, PI / 8.0);
        assert_eq!(level.r, 0.5);
        assert_eq!(level.level_index, 1);
        assert_eq!(s.window_len(), 0, "window cleared on advancement");
    }

    #[test]
    fn twenty_five_of_thirty_does_not_advance() {
        let mut s = state();
        for i in 0..30 {
            s.record_outcome(i < 25, Mode::Policy);
        }
        // 25/30 = 0.8333 <= 0.85.
        assert!(!s.maybe_advance());
        assert_eq!(s.current().level_index, 0);
    }

    #[test]
    fn phi_max_resets_phi_and_raises_r() {
        let mut s = state();
        s.current.phi = s.cfg.phi_max;
        for _ in 0..30 {
            s.record_outcome(true, Mode::Policy);
        }
        // 27/30 and above triggers; here 30/30.
        assert!(s.maybe_advance());
        assert_eq!(s.current().phi, 0.0);
        assert_eq!(s.current().r, 1.0);
    }

    #[test]
    fn incomplete_window_never_advances() {
        let mut s = state();
        for _ in 0..29 {
            s.record_outcome(true, Mode::Policy);
        }
        assert!(!s.maybe_advance());
    }

    #[test]
    fn at_most_one_transition_per_call_and_monotone_escalation() {
        let mut s = state();
        let mut last = s.current();
        for _ in 0..2000 {
            s.record_outcome(true, Mode::Policy);
            let advanced = s.maybe_advance();
            let cur = s.current();
            if advanced {
                assert_eq!(cur.level_index, last.level_index + 1);
                let grew_phi = cur.r == last.r && cur.phi > last.phi;
                let grew_r = cur.r > last.r && cur.phi == 0.0;
                assert!(grew_phi || grew_r, "{last:?} -> {cur:?}");
            } else {
                assert_eq!(cur.level_index, last.level_index);
            }
            last = cur;
        }
        // Ladder saturates at (r_max, phi_max) and stays there.
        assert_eq!(last.r, s.cfg.r_max);
        assert_eq!(last.phi, s.cfg.phi_max);
        for _ in 0..40 {
            s.record_outcome(true, Mode::Policy);
        }
        assert!(!s.maybe_advance(), "terminal level does not cycle");
    }

    #[test]
    fn window_clear_blocks_immediate_readvance() {
        let mut s = state();
        for _ in 0..30 {
            s.record_outcome(true, Mode::Policy);
        }
        assert!(s.maybe_advance());
        for _ in 0..29 {
            s.record_outcome(true, Mode::Policy);
            assert!(!s.maybe_advance());
        }
        s.record_outcome(true, Mode::Policy);
        assert!(s.maybe_advance());
    }

    #[test]
    fn history_records_every_transition() {
        let mut s = state();
        for _ in 0..95 {
            s.record_outcome(true, Mode::Policy);
            s.maybe_advance();
        }
        let h = s.history();
        assert_eq!(h[0].1.level_index, 0);
        assert_eq!(h.len(), s.current().level_index + 1);
        for pair in h.windows(2) {
            assert!(pair[0].0 <= pair[1].0);
            assert_eq!(pair[0].1.level_index + 1, pair[1].1.level_index);
        }
    }
}
